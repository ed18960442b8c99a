"""
셸 테스트: REPL 명령, 세션 변수, 배치 종료 코드
"""

import io
import os

import pytest

from kernel import RenderOptions
from shell import EXIT_DIAGNOSTIC, EXIT_OK, EXIT_STALLED, Session, default_search_path, main, run_repl

ROOT = os.path.dirname(os.path.abspath(__file__))
CORPUS = os.path.join(ROOT, "corpus")


@pytest.fixture
def session():
    s = Session(default_search_path([CORPUS]), options=RenderOptions(), out=io.StringIO())
    yield s
    s.close()


def run(session, *lines):
    """줄들을 차례로 실행하고 그동안 나온 출력 줄을 돌려준다"""
    start = len(session.out.getvalue())
    for line in lines:
        session.run_line(line)
    return session.out.getvalue()[start:].splitlines()


def test_relation_query_stores_variables(session):
    assert run(session, ":l std.ale", "> 4 `+ 3` y") == ["y = 7"]
    assert run(session, ":v") == ["y = 7"]
    assert run(session, "| + y 1 ()") == ["() 7 8 +"]
    assert run(session, "< x `+ 3` y") == ["x = 4"]
    assert session.status == EXIT_OK


def test_blank_glyph_in_evaluation(session):
    run(session, ":l std.ale")
    assert run(session, "| (+ 3) 4 –") == ["() 7 (+ 3)"]


def test_failed_load_keeps_the_previous_program(session):
    run(session, ":l add.ale")
    output = run(session, ":l coin.ale")
    assert output[0] == "❌ 모호성 #1: 다음 패턴들이 서로 호환됩니다"
    assert session.status == EXIT_DIAGNOSTIC
    assert run(session, "| + 1 1 ()") == ["() 1 2 +"]


def test_garbage_is_hidden_until_asked_for(session):
    run(session, ":l murec.ale")
    assert run(session, "> [2 3] `Add` y g") == ["y = 5", "g = {~GARBAGE~}"]
    [expanded] = run(session, ":g")
    assert expanded.startswith("(Garbage ")


def test_garbage_command_without_garbage(session):
    assert run(session, ":g") == ["⚠️ 쓰레기 값이 없습니다"]


def test_reload_is_idempotent(session):
    first = run(session, ":l add.ale", "| + 4 3 ()")
    second = run(session, ":r", "| + 4 3 ()")
    assert first == second == ["() 4 7 +"]


def test_variables_survive_loading_another_program(session):
    assert run(session, ":l std.ale", "> 4 `+ 3` y") == ["y = 7"]
    assert run(session, ":l add.ale") == []
    assert run(session, "| + y 0 ()") == ["() 7 7 +"]
    assert run(session, ":v") == ["y = 7"]


def test_reload_keeps_variables_and_garbage(session):
    run(session, ":l murec.ale", "> [2 3] `Add` y g")
    assert run(session, ":r", ":v") == ["y = 5", "g = {~GARBAGE~}"]
    assert run(session, "> [y 1] `Add` z h") == ["z = 6", "h = {~GARBAGE~}"]
    [expanded] = run(session, ":g")
    assert expanded.startswith("(Garbage ")


def test_print_program_lists_plans(session):
    output = run(session, ":l add.ale", ":p")
    assert "+ (S a) b () = () (S a) (S b') +" in output
    assert any(line.startswith("  > ") for line in output)
    assert output[-1].startswith("-- 정지 패턴")


def test_statements_extend_the_session_program(session):
    assert run(session, "data Foo;", "| Foo") == ["Foo"]
    assert session.status == EXIT_OK


def test_stall_sets_the_stalled_status(session):
    output = run(session, ":l add.ale", "| () 5 2 +")
    assert output[0].startswith("⚠️ stalled after 2 steps")
    assert session.status == EXIT_STALLED


def test_unknown_directive_is_a_diagnostic(session):
    [line] = run(session, ":x")
    assert line.startswith("❌")
    assert session.status == EXIT_DIAGNOSTIC


def test_help_lists_commands(session):
    output = run(session, ":h")
    assert any(line.startswith(":q") for line in output)


def test_repl_reads_until_quit():
    out = io.StringIO()
    s = Session(default_search_path([CORPUS]), options=RenderOptions(), out=out)
    code = run_repl(s, io.StringIO("data Foo;\n| Foo\n:q\n| Foo\n"))
    assert code == EXIT_OK
    assert out.getvalue().splitlines() == ["Foo"]


def test_repl_ends_at_end_of_input():
    s = Session(default_search_path([CORPUS]), options=RenderOptions(), out=io.StringIO())
    assert run_repl(s, io.StringIO("")) == EXIT_OK


# ---------------------------------------------------------------------------
# 배치 실행
# ---------------------------------------------------------------------------

@pytest.fixture
def plain_env(monkeypatch):
    monkeypatch.delenv("ALETHE_COLOR", raising=False)
    monkeypatch.delenv("ALETHE_VERBOSE", raising=False)


@pytest.mark.usefixtures("plain_env")
@pytest.mark.parametrize("file, query, code, first_line", [
    ("add.ale", "| + 4 3 ()", EXIT_OK, "() 4 7 +"),
    ("add.ale", "| () 5 2 +", EXIT_STALLED, "⚠️ stalled after 2 steps"),
    ("add.ale", "| + 4 3 7", EXIT_DIAGNOSTIC, "❌"),
    ("coin.ale", "| Coin ()", EXIT_DIAGNOSTIC, "❌ 모호성 #1"),
])
def test_batch_exit_codes(capsys, file, query, code, first_line):
    assert main([os.path.join(CORPUS, file), "-e", query]) == code
    assert capsys.readouterr().out.splitlines()[0].startswith(first_line)


@pytest.mark.usefixtures("plain_env")
def test_batch_runs_queries_in_order(capsys):
    code = main(["--path", CORPUS, "std.ale", "-e", "> `Fact 5` m", "-e", "| + m 1 ()"])
    assert code == EXIT_OK
    assert capsys.readouterr().out.splitlines() == ["m = 120", "() 120 121 +"]


@pytest.mark.usefixtures("plain_env")
def test_batch_step_limit(capsys):
    code = main(["--limit", "3", os.path.join(CORPUS, "square.ale"), "-e", "| □ 5 ()"])
    assert code == EXIT_STALLED
    assert "step limit reached" in capsys.readouterr().out
