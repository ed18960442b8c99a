"""
말뭉치 테스트: 골든 케이스 전부, 목록의 프로그램 컴파일, 출력 비교 규칙
"""

import pytest

from corpus import (
    CATALOG, GoldenCase, corpus_contents, corpus_search_path, load_golden_cases, output_matches,
    parse_golden, run_golden_case,
)
from reader import NestedDefinition, RuleStatement, SubParty, SubRelation, parse_source
from shell import compile_program

CASES = load_golden_cases()


@pytest.mark.parametrize("case", [
    pytest.param(c, marks=pytest.mark.slow) if c.step_limit is not None else c for c in CASES
], ids=lambda c: c.name)
def test_golden_case(case):
    result = run_golden_case(case)
    assert result.passed, result.explain()


def test_golden_file_covers_the_error_paths():
    codes = {case.exit_code for case in CASES}
    assert codes == {0, 1, 2}


@pytest.mark.parametrize("entry", [e for e in CATALOG if e.name != "coin.ale"], ids=lambda e: f"{e.kind}/{e.name}")
def test_catalog_programs_compile_cleanly(entry):
    result = compile_program([entry.path], corpus_search_path())
    assert result.ok, "\n".join(result.diagnostics)


def test_ambiguous_coin_is_rejected():
    [coin] = [e for e in CATALOG if e.name == "coin.ale"]
    result = compile_program([coin.path], corpus_search_path())
    assert result.program is not None and not result.ok


def test_corpus_contents_filters_by_kind():
    rtm = corpus_contents("rtm")
    assert {e.name for e in rtm} == {"tape.ale", "rtm.ale", "rtm6.ale"}
    assert len(corpus_contents()) == len(CATALOG)
    assert [e.name for e in CATALOG if not e.evaluable] == ["rtm6.ale", "fraction.ale", "concurrent.ale"]


def _sub_costs(statements):
    stack, costs = list(statements), set()
    while stack:
        stmt = stack.pop()
        if not isinstance(stmt, RuleStatement):
            continue
        for decl in stmt.declarations:
            if isinstance(decl, (SubRelation, SubParty)):
                costs.add(decl.cost)
            elif isinstance(decl, NestedDefinition):
                stack.append(decl.statement)
    return costs


@pytest.mark.parametrize("entry", CATALOG, ids=lambda e: e.name)
def test_cost_note_matches_the_file(entry):
    with open(entry.path, encoding="utf-8") as f:
        costs = _sub_costs(parse_source(f.read(), entry.path))
    assert ("비용 2" in entry.description) == (2 in costs)


# ---------------------------------------------------------------------------
# 골든 형식
# ---------------------------------------------------------------------------

def test_parse_golden():
    cases = parse_golden(
        "# 주석\n"
        "[one]\n"
        "files = a.ale b.ale\n"
        "query = | X\n"
        "query = :v\n"
        "exit = 2\n"
        "expect:\n"
        "  X\n"
        "  ...\n"
        "\n"
        "[two]\n"
        "limit = 5000\n"
        "expect:\n"
    )
    assert cases == [
        GoldenCase("one", ["a.ale", "b.ale"], ["| X", ":v"], ["X", "..."], 2),
        GoldenCase("two", step_limit=5000),
    ]


@pytest.mark.parametrize("text", ["files = a.ale\n", "[x]\nbogus = 1\n", "[x]\nno equals sign\n"])
def test_parse_golden_rejects_bad_lines(text):
    with pytest.raises(ValueError):
        parse_golden(text)


@pytest.mark.parametrize("expected, actual, ok", [
    (["a", "b"], ["a", "b"], True),
    (["a"], ["a", "b"], False),
    (["a", "..."], ["a"], True),
    (["a", "..."], ["a", "b", "c"], True),
    (["...", "c"], ["a", "b", "c"], True),
    (["x = ..."], ["x = 12"], True),
    (["x = ...!"], ["x = 12"], False),
    (["(a)"], ["(a)"], True),
    ([], [], True),
])
def test_output_matches(expected, actual, ok):
    assert output_matches(expected, actual) is ok
