"""
리더 테스트: 토큰, 문장 파싱, 오프사이드 규칙, REPL 한 줄, 표면 렌더링 왕복
"""

import glob
import os

import pytest
from hypothesis import given, settings, strategies as st

from reader import (
    ATOM_CHAR, ATOM_ESCAPED, AddStatement, DataStatement, Evaluate, HaltingStatement, ImportStatement,
    LayoutError, LexError, Load, NestedDefinition, ParseError, Quit, Relation, RelationQuery,
    RuleStatement, SubParty, SubRelation, SurfaceAtom, SurfaceBlank, SurfaceComposite, SurfaceList,
    SurfaceNatural, SurfaceString, SurfaceVar, parse_repl_line, parse_source, render_surface,
    render_surface_term, tokenize,
)

ROOT = os.path.dirname(os.path.abspath(__file__))
SOURCES = sorted(glob.glob(os.path.join(ROOT, "stdlib", "*.ale")) + glob.glob(os.path.join(ROOT, "corpus", "*.ale")))


def kinds(text):
    return [t.kind for t in tokenize(text)]


def test_reserved_characters_split_words():
    assert kinds("(a)[b]{c}:;`") == [
        "lparen", "word", "rparen", "lbrack", "word", "rbrack",
        "lbrace", "word", "rbrace", "colon", "semi", "backtick", "eof",
    ]


def test_dots_are_counted():
    tokens = tokenize("x `F` y..")
    assert tokens[-2].kind == "dots"
    assert tokens[-2].value == 2


def test_comments_are_skipped():
    assert kinds("a -- 주석\nb {- 바깥 {- 안쪽 -} -} c") == ["word", "word", "word", "eof"]


def test_dash_run_followed_by_symbol_is_an_operator():
    assert [t.text for t in tokenize("a --> b")][:3] == ["a", "-->", "b"]


def test_string_char_and_hash_tokens():
    tokens = tokenize('"a\\nb" \'x #"odd name" #sym')
    assert [t.kind for t in tokens[:4]] == ["string", "char", "hashstr", "word"]
    assert tokens[0].value == "a\nb"
    assert tokens[1].value == "x"
    assert tokens[2].value == "odd name"


def test_unterminated_string_is_a_lex_error():
    with pytest.raises(LexError):
        tokenize('x = "abc')


def test_unterminated_block_comment_is_a_lex_error():
    with pytest.raises(LexError):
        tokenize("{- 끝이 없음")


@pytest.mark.parametrize("source", ['x = "\\1114112";', "x = '\\99999999999999999999999;"])
def test_escape_beyond_unicode_is_a_lex_error(source):
    with pytest.raises(LexError, match="outside the Unicode range") as info:
        parse_source(source)
    assert info.value.span.line == 1


def test_largest_code_point_escape():
    [stmt] = parse_source('x = "\\1114111";')
    assert stmt.head.rhs == (SurfaceString(chr(0x10FFFF)),)


def test_unsupported_escape_in_a_character_atom():
    with pytest.raises(LexError, match="unsupported escape"):
        parse_source("x = '\\q;")


def test_word_classification():
    [stmt] = parse_source("f x _ 12 ~Go #Q 'c \"ab\" = y;")
    lhs = stmt.head.lhs
    assert isinstance(lhs[0], SurfaceVar)
    assert isinstance(lhs[2], SurfaceBlank)
    assert lhs[3] == SurfaceNatural(12)
    assert lhs[4] == SurfaceAtom("plain", "Go", 1)
    assert lhs[5].kind == "hash-symbol"
    assert lhs[6].kind == ATOM_CHAR
    assert lhs[7] == SurfaceString("ab")


def test_statement_forms():
    statements = parse_source(
        'import "prelude.ale";\n'
        "data Cons x xs;\n"
        "! + _ _ ();\n"
        "+ Z b () = () Z b +;\n"
        "a `+ (S b)` (S c): a `+ b` c.\n"
    )
    assert isinstance(statements[0], ImportStatement)
    assert statements[0].path == "prelude.ale"
    assert isinstance(statements[1], DataStatement)
    assert isinstance(statements[2], HaltingStatement)
    rule = statements[3]
    assert isinstance(rule, RuleStatement) and rule.head.style == "eq"
    infix = statements[4]
    assert infix.head.style == "backtick"
    assert len(infix.declarations) == 1
    assert isinstance(infix.declarations[0], SubRelation)


def test_single_bare_symbol_is_an_infix_relation():
    [stmt] = parse_source("p - p';")
    assert stmt.head.style == "bare"
    assert stmt.head.infix == (SurfaceAtom("plain", "-"),)


def test_two_bare_symbols_are_rejected():
    with pytest.raises(ParseError, match="ambiguous bare infix"):
        parse_source("a + b - c;")


def test_missing_relation_reports_expected_tokens():
    with pytest.raises(ParseError) as info:
        parse_source("x y;")
    assert "'='" in info.value.expected
    assert info.value.span.line == 1


def test_cost_and_halting_sub_rules():
    [stmt] = parse_source(
        "xs `Reverse` ys:\n"
        "    ! ~Go xs [] = ~Go [] ys.\n"
        "    ~Go [x . xs] ys = ~Go xs [x . ys];\n"
        "    ys `Other` zs...\n"
    )
    halting, nested, costly = stmt.declarations
    assert halting.halting
    assert isinstance(nested, NestedDefinition)
    assert costly.cost == 3


def test_declarations_must_be_indented():
    with pytest.raises(LayoutError):
        parse_source("x `F` y:\nz `G` w.\n")


def test_declaration_cannot_fall_back_to_head_column():
    with pytest.raises(LayoutError, match="column 1"):
        parse_source("x `F` y:\n    a `G`\nb.\n")


def test_statement_cannot_continue_on_an_indented_line():
    with pytest.raises(LayoutError, match="column 5"):
        parse_source("data Foo\n    x;\n")


def test_line_breaks_inside_brackets_are_free():
    [stmt] = parse_source("x `F` (A\n  B\nC) [1\n2];\n")
    assert len(stmt.head.rhs) == 2


def test_dedent_must_match_an_open_block():
    with pytest.raises(LayoutError, match="column 5"):
        parse_source("x `F` y:\n        a `G` b.\n    c `H` d.\n")


def test_party_declaration_inside_a_rule_only():
    [stmt] = parse_source("{Free: x} = {Free: y}:\n    Free: Alice x.\n")
    [party] = stmt.declarations
    assert isinstance(party, SubParty)
    assert party.party.body == (SurfaceAtom("plain", "Alice"), SurfaceVar("x"))
    with pytest.raises(ParseError, match="outside a rule"):
        parse_source("Free: Alice x.\n")


def _nested_source(depth, column):
    lines = [" " * (4 * k) + f"x `F{k}` y:" for k in range(depth)]
    lines.append(" " * (4 * depth) + "c `K` e.")
    lines.append(" " * (4 * column) + "a `G` b.")
    return "\n".join(lines) + "\n"


def _owner(statements, name):
    """이름이 name 인 중위 하위 규칙을 가진 규칙 머리의 중위 이름"""
    stack = list(statements)
    while stack:
        stmt = stack.pop()
        if not isinstance(stmt, RuleStatement):
            continue
        for decl in stmt.declarations:
            if isinstance(decl, SubRelation) and decl.relation.infix[0].name == name:
                return stmt.head.infix[0].name
            if isinstance(decl, NestedDefinition):
                stack.append(decl.statement)
    return None


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 5), st.data())
def test_sub_declaration_attaches_to_the_enclosing_head(depth, data):
    column = data.draw(st.integers(0, depth))
    source = _nested_source(depth, column)
    if column == 0:
        with pytest.raises(LayoutError):
            parse_source(source)
        return
    statements = parse_source(source)
    assert len(statements) == 1
    assert _owner(statements, "K") == f"F{depth - 1}"
    # 열을 한 칸 물릴 때마다 한 단계 바깥 머리로 옮겨 간다
    assert _owner(statements, "G") == f"F{column - 1}"


_sub_names = st.sampled_from(["G", "H", "Add", "+"])
_subs = st.builds(
    lambda name, cost, halting: SubRelation(
        Relation((SurfaceVar("a"),), (SurfaceVar("b"),), (SurfaceAtom("plain", name),), "backtick"), halting, cost),
    _sub_names, st.integers(1, 3), st.booleans())


def _rule(decls):
    head = Relation((SurfaceVar("x"),), (SurfaceVar("y"),), (SurfaceAtom("plain", "F"),), "backtick")
    return RuleStatement(head, tuple(decls))


_rules = st.recursive(
    st.lists(_subs, min_size=1, max_size=3).map(_rule),
    lambda inner: st.lists(st.one_of(_subs, inner.map(NestedDefinition)), min_size=1, max_size=3).map(_rule),
    max_leaves=8,
)


@settings(max_examples=80, deadline=None)
@given(st.lists(_rules, min_size=1, max_size=3))
def test_nested_rules_round_trip_through_indentation(statements):
    assert parse_source(render_surface(statements)) == statements


def test_list_tail_and_party_bag():
    [lst] = parse_source("[x . xs] `F` y;")[0].head.lhs
    assert isinstance(lst, SurfaceList) and lst.tail == SurfaceVar("xs")
    [bag] = parse_source("{Free: Alice [x . xs]} = {Free: Alice xs; Free: Courier x};")
    assert len(bag.head.lhs) == 1 and len(bag.head.rhs) == 2


def test_pragma_marks_the_next_statement_only():
    first, second = parse_source("-- @ambiguous\n`Coin` Tails;\n`Coin` Heads;\n")
    assert first.pragma
    assert not second.pragma


# ---------------------------------------------------------------------------
# REPL
# ---------------------------------------------------------------------------

def test_repl_evaluate_with_blank_glyphs():
    for line in ("| (+ 3) 4 _", "| (+ 3) 4 –"):
        command = parse_repl_line(line)
        assert isinstance(command, Evaluate)
        assert isinstance(command.terms[0], SurfaceComposite)
        assert isinstance(command.terms[2], SurfaceBlank)


def test_repl_relation_queries():
    forward = parse_repl_line("> 4 `+ 3` y")
    assert isinstance(forward, RelationQuery)
    assert forward.direction == "forward"
    assert forward.lhs == (SurfaceNatural(4),)
    assert forward.rhs == (SurfaceVar("y"),)
    backward = parse_repl_line("< x `+ 3` 7")
    assert backward.direction == "backward"


def test_repl_directives():
    assert parse_repl_line(":q") == Quit()
    assert parse_repl_line(":l a.ale b.ale") == Load(("a.ale", "b.ale"))
    assert parse_repl_line("   ") is None
    assert parse_repl_line("-- 주석만") is None
    assert isinstance(parse_repl_line("data Foo;"), AddStatement)


@pytest.mark.parametrize("line", [":x", ":q now", ":l", "| a = b", "> 4 3 y", "| "])
def test_repl_rejects_malformed_lines(line):
    with pytest.raises(ParseError):
        parse_repl_line(line)


# ---------------------------------------------------------------------------
# 표면 렌더링
# ---------------------------------------------------------------------------

@pytest.mark.parametrize("path", SOURCES, ids=os.path.basename)
def test_render_surface_reparses_to_the_same_tree(path):
    with open(path, encoding="utf-8") as f:
        statements = parse_source(f.read(), path)
    assert parse_source(render_surface(statements)) == statements


_names = st.sampled_from(["A", "Foo", "Z", "+", "□"])
_leaves = st.one_of(
    _names.map(lambda n: SurfaceAtom("plain", n)),
    st.sampled_from(["x", "ys", "n'"]).map(SurfaceVar),
    st.integers(0, 12).map(SurfaceNatural),
    st.text(alphabet="ab c\n\"", max_size=4).map(SurfaceString),
    st.sampled_from(["a", " ", "'"]).map(lambda c: SurfaceAtom(ATOM_CHAR, c)),
    st.sampled_from(["odd name", "x\"y"]).map(lambda n: SurfaceAtom(ATOM_ESCAPED, n)),
)
_terms = st.recursive(
    _leaves,
    lambda inner: st.one_of(
        st.lists(inner, max_size=3).map(lambda xs: SurfaceComposite(tuple(xs))),
        st.lists(inner, max_size=3).map(lambda xs: SurfaceList(tuple(xs))),
        st.tuples(st.lists(inner, min_size=1, max_size=2), inner).map(
            lambda p: SurfaceList(tuple(p[0]), p[1])),
    ),
    max_leaves=10,
)


@settings(max_examples=150, deadline=None)
@given(st.lists(_terms, max_size=3), st.lists(_terms, max_size=3))
def test_random_relations_round_trip(lhs, rhs):
    rel = Relation(tuple(lhs), tuple(rhs))
    statements = [RuleStatement(rel)]
    assert parse_source(render_surface(statements)) == statements


def test_render_surface_term_escapes():
    assert render_surface_term(SurfaceString('a"b')) == '"a\\"b"'
    assert render_surface_term(SurfaceAtom(ATOM_CHAR, " ")) == "'\\32"
    assert render_surface_term(SurfaceList((SurfaceVar("x"),), SurfaceVar("xs"))) == "[x . xs]"
