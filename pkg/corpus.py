"""
📚 alethe 말뭉치
- stdlib/, corpus/ 아래 .ale 프로그램 목록 (corpus_contents)
- corpus/golden.txt 골든 케이스 읽기·실행 (load_golden_cases, run_golden_case)
"""

import io
import os
import re
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

from kernel import RenderOptions
from shell import STDLIB_DIR, Session, default_search_path, run_batch

CORPUS_ROOT = os.path.join(os.path.dirname(os.path.abspath(__file__)), "corpus")
GOLDEN_FILE = os.path.join(CORPUS_ROOT, "golden.txt")

SKIP_LINES = "..."


@dataclass(frozen=True)
class CorpusEntry:
    name: str
    path: str
    kind: str
    description: str
    evaluable: bool = True


def _stdlib(name: str, description: str) -> CorpusEntry:
    return CorpusEntry(name, os.path.join(STDLIB_DIR, name), "stdlib", description)


def _example(name: str, kind: str, description: str, evaluable: bool = True) -> CorpusEntry:
    return CorpusEntry(name, os.path.join(CORPUS_ROOT, name), kind, description, evaluable)


CATALOG: Tuple[CorpusEntry, ...] = (
    _stdlib("prelude.ale", "Z/S, Nil/Cons, True/False, 쌍, Tree 데이터 선언"),
    _stdlib("arith.ale", "덧셈(+), 제곱(□), 양수 곱(×), 팩토리얼 Fact"),
    _stdlib("compare.ale", "Not 과 비교 연산 < ≤ > ≥"),
    _stdlib("list.ale", "Map(두 인자 관례), Length, Sum, Reverse, Concat, ConcatMap, Bennett"),
    _stdlib("sort.ale", "순열 쓰레기를 남기는 삽입 정렬"),
    _stdlib("tree.ale", "TreeSize, Polish 표기 변환(쓰레기 상쇄 판, 비용 2 주석)"),
    _stdlib("std.ale", "표준 라이브러리 전체"),
    _example("add.ale", "arithmetic", "단독 덧셈 정의"),
    _example("square.ale", "arithmetic", "제곱 연쇄"),
    _example("sort.ale", "sorting", "삽입 위치를 쓰레기로 남기는 삽입 정렬"),
    _example("tape.ale", "rtm", "테이프와 Pop/Left/Right"),
    _example("rtm.ale", "rtm", "4상태 단항 증가 기계"),
    _example("rtm6.ale", "rtm", "6테이프 기계의 규칙 하나 (검사 전용)", evaluable=False),
    _example("murec.ale", "mu-recursion", "μ-재귀 함수 평가기와 add/mul/fac"),
    _example("polish.ale", "trees", "직접 전단사 Polish 변환"),
    _example("fraction.ale", "planner", "분수 덧셈 규칙 (계획기 고정 예제)", evaluable=False),
    _example("coin.ale", "checker", "모호한 Coin 프로그램"),
    _example("coin_allowed.ale", "checker", "@ambiguous 로 허용한 Coin"),
    _example("concurrent.ale", "concurrency", "여러 당사자 규칙 (검사 전용)", evaluable=False),
)


def corpus_contents(kind: Optional[str] = None) -> List[CorpusEntry]:
    return [e for e in CATALOG if kind is None or e.kind == kind]


def corpus_search_path() -> List[str]:
    return default_search_path([CORPUS_ROOT])


# ---------------------------------------------------------------------------
# 골든 케이스
# ---------------------------------------------------------------------------

@dataclass
class GoldenCase:
    name: str
    files: List[str] = field(default_factory=list)
    queries: List[str] = field(default_factory=list)
    expected: List[str] = field(default_factory=list)
    exit_code: int = 0
    step_limit: Optional[int] = None


@dataclass
class GoldenResult:
    case: GoldenCase
    output: List[str]
    exit_code: int

    @property
    def passed(self) -> bool:
        return self.exit_code == self.case.exit_code and output_matches(self.case.expected, self.output)

    def explain(self) -> str:
        expected = "\n".join(self.case.expected)
        actual = "\n".join(self.output)
        return (f"[{self.case.name}] exit {self.exit_code} (expected {self.case.exit_code})\n"
                f"--- expected\n{expected}\n--- actual\n{actual}")


def parse_golden(text: str) -> List[GoldenCase]:
    cases: List[GoldenCase] = []
    current: Optional[GoldenCase] = None
    in_expect = False
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.rstrip("\n")
        if in_expect:
            if line.startswith("  "):
                current.expected.append(line[2:])
                continue
            in_expect = False
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if stripped.startswith("[") and stripped.endswith("]"):
            current = GoldenCase(stripped[1:-1])
            cases.append(current)
            continue
        if current is None:
            raise ValueError(f"golden.txt:{lineno}: 케이스 밖의 줄: {stripped}")
        if stripped == "expect:":
            in_expect = True
            continue
        key, sep, value = stripped.partition("=")
        if not sep:
            raise ValueError(f"golden.txt:{lineno}: 'key = value' 형식이 아님: {stripped}")
        key, value = key.strip(), value.strip()
        if key == "files":
            current.files.extend(value.split())
        elif key == "query":
            current.queries.append(value)
        elif key == "exit":
            current.exit_code = int(value)
        elif key == "limit":
            current.step_limit = int(value)
        else:
            raise ValueError(f"golden.txt:{lineno}: 알 수 없는 키 '{key}'")
    return cases


def load_golden_cases(path: str = GOLDEN_FILE) -> List[GoldenCase]:
    with open(path, "r", encoding="utf-8") as f:
        return parse_golden(f.read())


def _line_pattern(expected: str) -> "re.Pattern":
    parts = [re.escape(p) for p in expected.split(SKIP_LINES)]
    return re.compile(".*".join(parts) + r"\Z", re.DOTALL)


def output_matches(expected: Sequence[str], actual: Sequence[str]) -> bool:
    """'...' 한 줄은 0줄 이상을, 줄 안의 '...'은 아무 문자열을 건너뛴다"""
    if not expected:
        return not actual
    head, rest = expected[0], expected[1:]
    if head == SKIP_LINES:
        return any(output_matches(rest, actual[i:]) for i in range(len(actual) + 1))
    if not actual or not _line_pattern(head).match(actual[0]):
        return False
    return output_matches(rest, actual[1:])


def golden_file_path(name: str) -> str:
    """corpus/ 먼저, 없으면 stdlib/"""
    local = os.path.join(CORPUS_ROOT, name)
    return local if os.path.isfile(local) else os.path.join(STDLIB_DIR, name)


def run_golden_case(case: GoldenCase, step_limit: Optional[int] = None) -> GoldenResult:
    out = io.StringIO()
    limit = step_limit if step_limit is not None else case.step_limit
    session = Session(corpus_search_path(), limit, RenderOptions(), out=out)
    code = run_batch([golden_file_path(f) for f in case.files], case.queries, session)
    return GoldenResult(case, out.getvalue().splitlines(), code)


def run_all(cases: Optional[Sequence[GoldenCase]] = None) -> List[GoldenResult]:
    results = []
    for case in cases if cases is not None else load_golden_cases():
        result = run_golden_case(case)
        print(f"{'✅' if result.passed else '❌'} {case.name}")
        results.append(result)
    return results


if __name__ == "__main__":
    failed = [r for r in run_all() if not r.passed]
    for r in failed:
        print(r.explain())
    print(f"🔍 실패 {len(failed)}건")
    raise SystemExit(1 if failed else 0)
