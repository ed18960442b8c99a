"""
🐚 alethe 셸 (CLI + REPL)
- 파일 로딩 → 인덱스 → 모호성 검사 → 계획까지 한 번에 (compile_program)
- REPL 명령: :q :l :r :v :p :g :h, `| 항`, `> 관계`, `< 관계`, 그 밖의 줄은 정의 추가
- 배치 실행: alethe FILES -e QUERY, 종료 코드 0 성공 / 1 진단 오류 / 2 멈춤·상한
"""

import argparse
import concurrent.futures
import os
import sys
import threading
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, TextIO

from dotenv import load_dotenv

from checker import check_program
from engine import DEFAULT_STEP_LIMIT, HALTED, Engine, EvalOutcome
from kernel import (
    FORWARD, FreshVars, Program, RenderOptions, Term, ground_sequence, is_named, load_program,
    load_source, pattern_variables, reintern, render_term, render_value, surface_to_pattern,
)
from matcher import build_index
from planner import plan_program, render_plan
from reader import (
    AddStatement, AletheError, Evaluate, Help, ListVariables, Load, PrintProgram, Quit,
    RelationQuery, Reload, ShowGarbage, parse_repl_line,
)

load_dotenv()

STDLIB_DIR = os.path.join(os.path.dirname(os.path.abspath(__file__)), "stdlib")

EXIT_OK = 0
EXIT_DIAGNOSTIC = 1
EXIT_STALLED = 2

HELP_TEXT = """\
:q            종료
:l FILE...    파일 로딩 (현재 세션을 대체)
:r            마지막으로 로딩한 파일 다시 읽기
:v            저장된 변수 보기
:p            규칙과 실행 계획 보기
:g            마지막 쓰레기 값 펼쳐 보기
:h            도움말
| TERM...     항 평가
> LHS `F` RHS 정방향 관계 질의 (RHS 변수에 결과 저장)
< LHS `F` RHS 역방향 관계 질의 (LHS 변수에 결과 저장)
그 밖의 줄    정의/문장 추가"""


def env_flag(name: str) -> bool:
    return os.getenv(name, "").lower() in ("1", "true", "yes", "on")


def default_search_path(extra: Sequence[str] = ()) -> List[str]:
    dirs = list(extra)
    dirs += [d for d in os.getenv("ALETHE_PATH", "").split(os.pathsep) if d]
    dirs.append(STDLIB_DIR)
    return dirs


@dataclass
class CompileResult:
    program: Optional[Program]
    diagnostics: List[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return self.program is not None and not self.diagnostics


def format_error(error: AletheError) -> str:
    return f"❌ {error}"


def prepare(program: Program) -> List[str]:
    """인덱스·모호성·계획. 진단 메시지 목록을 돌려준다"""
    build_index(program)
    diagnostics = check_program(program).render()
    diagnostics += [format_error(e) for e in plan_program(program)]
    return diagnostics


def compile_program(paths: Sequence[str], search_path: Sequence[str] = (),
                    source: Optional[str] = None, name: str = "<input>",
                    base: Optional[Program] = None) -> CompileResult:
    """파일(또는 소스 문자열)을 읽어 평가 가능한 Program으로"""
    try:
        if source is not None:
            program = load_source(source, name, base, search_path)
        else:
            program = load_program(paths, search_path)
    except AletheError as e:
        return CompileResult(None, [format_error(e)])
    return CompileResult(program, prepare(program))


class Session:
    """REPL/배치/HTTP가 함께 쓰는 세션 상태"""

    def __init__(self, search_path: Optional[Sequence[str]] = None, step_limit: Optional[int] = None,
                 options: Optional[RenderOptions] = None, out: Optional[TextIO] = None,
                 trace: bool = False, verbose: bool = False):
        self.search_path = list(search_path) if search_path is not None else default_search_path()
        self.step_limit = step_limit if step_limit is not None else DEFAULT_STEP_LIMIT
        self.options = options or RenderOptions(color=env_flag("ALETHE_COLOR"))
        self.out = out or sys.stdout
        self.trace = trace
        self.verbose = verbose or env_flag("ALETHE_VERBOSE")
        self.program = Program()
        prepare(self.program)
        self.files: List[str] = []
        self.variables: Dict[str, Term] = {}
        self.garbage: Optional[Term] = None
        self.status = EXIT_OK
        self._cancel = threading.Event()
        self._executor = concurrent.futures.ThreadPoolExecutor(max_workers=1)

    def emit(self, text: str = "") -> None:
        print(text, file=self.out)

    def fail(self, code: int) -> None:
        self.status = max(self.status, code)

    def render(self, term: Term) -> str:
        return render_term(term, self.options)

    # -- 로딩 -------------------------------------------------------------
    def load(self, files: Sequence[str]) -> bool:
        result = compile_program(files, self.search_path)
        if not result.ok:
            for line in result.diagnostics:
                self.emit(line)
            self.fail(EXIT_DIAGNOSTIC)
            return False
        self.program = result.program
        self.files = list(files)
        self._adopt_values()
        if self.verbose:
            self.emit(f"✅ {len(self.program.files)}개 파일, 규칙 {len(self.program.rules)}개, "
                      f"정지 패턴 {len(self.program.haltings)}개 로딩")
            for warning in self.program.warnings:
                self.emit(f"⚠️ {warning}")
        return True

    def _adopt_values(self) -> None:
        """새 프로그램의 원자표로 변수와 쓰레기 값을 옮긴다. 사라진 스코프 원자를 쥔 값은 버린다"""
        atoms = self.program.atoms
        kept: Dict[str, Term] = {}
        for name, value in self.variables.items():
            moved = reintern(value, atoms)
            if moved is None:
                self.emit(f"⚠️ 변수 {name}: 다시 읽은 프로그램에 없는 원자라 버림")
                continue
            kept[name] = moved
        self.variables = kept
        if self.garbage is not None:
            self.garbage = reintern(self.garbage, atoms)

    def add_source(self, source: str) -> bool:
        result = compile_program((), self.search_path, source, "<repl>", self.program)
        if not result.ok:
            for line in result.diagnostics:
                self.emit(line)
            self.fail(EXIT_DIAGNOSTIC)
            return False
        self.program = result.program
        return True

    # -- 평가 -------------------------------------------------------------
    def _engine(self) -> Engine:
        return Engine(self.program, self.step_limit, self._cancel, self.trace)

    def _in_worker(self, fn):
        """Ctrl-C가 들어오면 취소 플래그를 세우고 결과를 기다린다"""
        self._cancel.clear()
        future = self._executor.submit(fn)
        while True:
            try:
                return future.result(timeout=0.1)
            except concurrent.futures.TimeoutError:
                continue
            except KeyboardInterrupt:
                self._cancel.set()

    def _report(self, outcome: EvalOutcome) -> None:
        if self.trace:
            for i, term in enumerate(outcome.trace):
                self.emit(f"🔍 [{i}] {self.render(term)}")
        if outcome.status != HALTED:
            self.emit(outcome.describe())
            self.fail(EXIT_STALLED)

    def evaluate(self, command: Evaluate) -> Optional[EvalOutcome]:
        term = ground_sequence(command.terms, self.program.atoms, self.variables)
        outcome = self._in_worker(lambda: self._engine().evaluate(term))
        self._report(outcome)
        if outcome.halted:
            self.emit(self.render(outcome.term))
        return outcome

    def relation(self, command: RelationQuery) -> Optional[EvalOutcome]:
        atoms = self.program.atoms
        infix_items = [ground_sequence((t,), atoms, self.variables)[0] for t in command.infix]
        infix = infix_items[0] if len(infix_items) == 1 else tuple(infix_items)
        fresh = FreshVars("_q")
        if command.direction == FORWARD:
            lhs = ground_sequence(command.lhs, atoms, self.variables)
            rhs = tuple(surface_to_pattern(t, atoms, (), fresh) for t in command.rhs)
            wanted = rhs
        else:
            rhs = ground_sequence(command.rhs, atoms, self.variables)
            lhs = tuple(surface_to_pattern(t, atoms, (), fresh) for t in command.lhs)
            wanted = lhs
        result = self._in_worker(
            lambda: self._engine().evaluate_relation(lhs, infix, rhs, command.direction))
        self._report(result.outcome)
        if not result.outcome.halted:
            return result.outcome
        if result.bindings is None:
            self.emit(f"⚠️ result does not match: {self.render(result.outcome.term)}")
            self.fail(EXIT_STALLED)
            return result.outcome
        for name in pattern_variables(wanted):
            if name.startswith("_"):
                continue
            value = result.bindings[name]
            self.variables[name] = value
            if isinstance(value, tuple) and value and is_named(value[0], "Garbage"):
                self.garbage = value
            self.emit(f"{name} = {render_value(value, self.options)}")
        return result.outcome

    # -- 명령 처리 --------------------------------------------------------
    def execute(self, command) -> Optional[int]:
        """:q면 종료 코드, 아니면 None"""
        try:
            return self._execute(command)
        except AletheError as e:
            self.emit(format_error(e))
            self.fail(EXIT_DIAGNOSTIC)
            return None

    def _execute(self, command) -> Optional[int]:
        if isinstance(command, Quit):
            return EXIT_OK
        if isinstance(command, Load):
            self.load(command.files)
        elif isinstance(command, Reload):
            if self.files:
                self.load(self.files)
            else:
                self.emit("⚠️ 다시 읽을 파일이 없습니다")
        elif isinstance(command, ListVariables):
            for name, value in self.variables.items():
                self.emit(f"{name} = {render_value(value, self.options)}")
        elif isinstance(command, PrintProgram):
            for rule in self.program.rules:
                for line in render_plan(rule):
                    self.emit(line)
            self.emit(f"-- 정지 패턴 {len(self.program.haltings)}개")
        elif isinstance(command, ShowGarbage):
            if self.garbage is None:
                self.emit("⚠️ 쓰레기 값이 없습니다")
            else:
                self.emit(render_value(self.garbage, RenderOptions(hide_garbage=False, color=self.options.color)))
        elif isinstance(command, Help):
            self.emit(HELP_TEXT)
        elif isinstance(command, Evaluate):
            self.evaluate(command)
        elif isinstance(command, RelationQuery):
            self.relation(command)
        elif isinstance(command, AddStatement):
            self.add_source(command.source)
        return None

    def run_line(self, line: str) -> Optional[int]:
        try:
            command = parse_repl_line(line)
        except AletheError as e:
            self.emit(format_error(e))
            self.fail(EXIT_DIAGNOSTIC)
            return None
        if command is None:
            return None
        return self.execute(command)

    def close(self) -> None:
        self._executor.shutdown(wait=False)


def run_repl(session: Session, stream: TextIO = sys.stdin) -> int:
    """입력 스트림이 끝나거나 :q가 나올 때까지"""
    interactive = stream.isatty()
    try:
        while True:
            if interactive:
                session.out.write("alethe> ")
                session.out.flush()
            try:
                line = stream.readline()
            except KeyboardInterrupt:
                session.emit("")
                continue
            if not line:
                return EXIT_OK
            code = session.run_line(line)
            if code is not None:
                return code
    except OSError as e:
        print(f"❌ 입출력 오류: {e}", file=sys.stderr)
        return EXIT_DIAGNOSTIC
    finally:
        session.close()


def run_batch(files: Sequence[str], queries: Sequence[str], session: Session) -> int:
    """파일을 읽고 질의를 차례로 실행. 가장 나쁜 상태를 종료 코드로"""
    try:
        if files and not session.load(files):
            return EXIT_DIAGNOSTIC
        for query in queries:
            session.run_line(query)
        return session.status
    finally:
        session.close()


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="alethe", description="alethe 가역 프로그래밍 언어 인터프리터")
    parser.add_argument("files", nargs="*", help="로딩할 .ale 파일")
    parser.add_argument("-e", "--eval", dest="queries", action="append", default=[],
                        help="REPL 한 줄을 실행하고 종료 (여러 번 가능)")
    parser.add_argument("--path", action="append", default=[], help="import 검색 경로 추가")
    parser.add_argument("--limit", type=int, default=None, help="평가 단계 상한")
    parser.add_argument("--color", action="store_true", help="ANSI 색 출력")
    parser.add_argument("--trace", action="store_true", help="최상위 단계마다 항 출력")
    parser.add_argument("--verbose", action="store_true", help="로딩 정보 출력")
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    options = RenderOptions(color=args.color or env_flag("ALETHE_COLOR"))
    session = Session(default_search_path(args.path), args.limit, options,
                      trace=args.trace, verbose=args.verbose)
    if args.queries:
        return run_batch(args.files, args.queries, session)
    if args.files and not session.load(args.files):
        session.close()
        return EXIT_DIAGNOSTIC
    if sys.stdin.isatty():
        print("🚀 alethe REPL (:h 도움말, :q 종료)")
    return run_repl(session)


if __name__ == "__main__":
    sys.exit(main())
