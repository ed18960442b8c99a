"""
⚙️ alethe 평가 엔진
- 후보 규칙 선택: 직전 규칙의 역방향은 제외, 정지 패턴을 만나면 멈춤
- 하위 규칙 계획을 따라 하위 계산을 돌리고 결과를 대상 패턴에 맞춘다
- 깊은 재귀도 파이썬 스택을 쓰지 않도록 프레임 스택으로 돈다
- 단계 상한, 취소(threading.Event), 추적(trace) 지원
- data 선언이 만든 Dup 하위 계산은 값 복사로 바로 끝낸다 (세는 단계 수는 같다)
"""

import os
import threading
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

from dotenv import load_dotenv

from checker import compatible
from kernel import (
    BACKWARD, CONTEXT_VAR, FORWARD, UNIT, Atom, Pattern, Program, RuleDefinition, Term, Var,
    pattern_variables, render_term, term_equal,
)
from matcher import Bindings, MatchCandidate, build_index, lookup, substitute, unify
from planner import PlanningError
from reader import AletheError

load_dotenv()

DEFAULT_STEP_LIMIT = int(os.getenv("ALETHE_STEP_LIMIT", "1000000"))

HALTED = "halted"
STALLED = "stalled"
LIMIT = "limit"
CANCELLED = "cancelled"

# 취소 플래그는 이 간격마다 확인
_CANCEL_CHECK_EVERY = 256


class DeterminismError(AletheError):
    pass


class ConcurrentRuleError(AletheError):
    pass


class PreconditionError(AletheError):
    pass


def _opposite(direction: str) -> str:
    return BACKWARD if direction == FORWARD else FORWARD


@dataclass
class EvalOutcome:
    status: str
    term: Term
    steps: int
    reason: str = ""
    chain: Tuple[str, ...] = ()
    trace: List[Term] = field(default_factory=list)

    @property
    def halted(self) -> bool:
        return self.status == HALTED

    def describe(self) -> str:
        if self.status == HALTED:
            return render_term(self.term)
        if self.status == STALLED:
            lines = [f"⚠️ stalled after {self.steps} steps: {self.reason}: {render_term(self.term)}"]
        elif self.status == LIMIT:
            lines = [f"⚠️ step limit reached after {self.steps} steps at: {render_term(self.term)}"]
        else:
            lines = [f"⚠️ evaluation cancelled after {self.steps} steps"]
        lines.extend(f"   in: {label}" for label in reversed(self.chain))
        return "\n".join(lines)


@dataclass
class RelationResult:
    outcome: EvalOutcome
    bindings: Optional[Bindings]

    @property
    def ok(self) -> bool:
        return self.bindings is not None


class _Frame:
    __slots__ = ("term", "last", "rule", "direction", "plan", "step", "bindings", "target")

    def __init__(self, term: Term):
        self.term = term
        self.last: Optional[Tuple[int, str]] = None
        self.rule: Optional[RuleDefinition] = None
        self.direction = FORWARD
        self.plan = None
        self.step = 0
        self.bindings: Dict[str, Term] = {}
        self.target: Tuple = ()


def _is_unit(term) -> bool:
    return isinstance(term, tuple) and not term


def _head_key(value):
    if isinstance(value, Atom):
        return value
    if isinstance(value, tuple) and value and isinstance(value[0], Atom):
        return (len(value), value[0])
    return None


class _Copier:
    """data 선언이 만든 Dup 규칙을 값 복사로 바로 계산한다. 단계 수는 규칙을 하나씩 적용한 것과 같다

    다른 규칙이 Dup 항과 겹칠 수 있는 프로그램이면 꺼진다
    """

    def __init__(self, program: Program):
        self.dup = program.atoms.lookup("Dup")
        self.rules: Dict[object, List[Tuple[Pattern, List[str]]]] = {}
        self._cost: Dict[int, Tuple[Term, int]] = {}
        self.enabled = self.dup is not None
        if not self.enabled:
            return
        start = ((self.dup, Var("_v")), UNIT)
        end = (UNIT, Var("_c"), (self.dup, Var("_v")))
        for rule in program.rules:
            if rule.duplicator and not rule.concurrent:
                value = rule.side(FORWARD)[0][1]
                self.rules.setdefault(_head_key(value), []).append((value, pattern_variables(value)))
                continue
            for side in (FORWARD, BACKWARD):
                for party in rule.parties(side):
                    if compatible(party.body, start) or compatible(party.body, end):
                        self.enabled = False

    def _children(self, node: Term) -> Optional[List[Term]]:
        """node에 맞는 Dup 규칙이 정확히 하나면 그 규칙이 복사할 필드들"""
        key = _head_key(node)
        candidates = list(self.rules.get(key, ()))
        if key is not None:
            candidates.extend(self.rules.get(None, ()))
        found = None
        for value, names in candidates:
            bindings = unify(value, node)
            if bindings is None:
                continue
            if found is not None:
                return None
            found = [bindings[name] for name in names]
        return found

    def cost(self, term: Term) -> Optional[int]:
        """term을 Dup 규칙으로 복사할 때 드는 규칙 적용 횟수. 복사할 수 없으면 None"""
        memo = self._cost
        stack: list = [(term, None)]
        while stack:
            node, children = stack.pop()
            if id(node) in memo:
                continue
            if children is None:
                children = self._children(node)
                if children is None:
                    return None
                stack.append((node, children))
                stack.extend((child, None) for child in children)
            else:
                memo[id(node)] = (node, 1 + sum(memo[id(child)][1] for child in children))
        return memo[id(term)][1]

    def run(self, term: Term, budget: int) -> Optional[Tuple[Term, int]]:
        """`(Dup x) ()` → `() x (Dup x)`, 거꾸로는 두 값이 같을 때만"""
        if not self.enabled or not isinstance(term, tuple):
            return None
        if len(term) == 2 and _is_unit(term[1]):
            head, result = term[0], None
            value = head[1] if isinstance(head, tuple) and len(head) == 2 and head[0] == self.dup else None
            if value is not None:
                result = (UNIT, value, head)
        elif len(term) == 3 and _is_unit(term[0]):
            head, result = term[2], None
            value = head[1] if isinstance(head, tuple) and len(head) == 2 and head[0] == self.dup else None
            if value is not None and term_equal(value, term[1]):
                result = (head, UNIT)
        else:
            return None
        if result is None:
            return None
        steps = self.cost(value)
        if steps is None or steps > budget:
            return None
        return result, steps


class Engine:
    """프로그램 하나에 대한 평가기. 인덱스와 계획은 미리 준비돼 있어야 빠르다"""

    def __init__(self, program: Program, step_limit: Optional[int] = None,
                 cancel: Optional[threading.Event] = None, trace: bool = False, fast_dup: bool = True):
        self.program = program
        self.step_limit = step_limit if step_limit is not None else DEFAULT_STEP_LIMIT
        self.cancel = cancel
        self.trace = trace
        if program.index is None:
            build_index(program)
        self._vars: Dict[Tuple[int, int, str], List[str]] = {}
        self._copier = _Copier(program)
        self._copier.enabled = self._copier.enabled and fast_dup

    # -- 후보 선택 --------------------------------------------------------
    def candidates(self, term: Term, last: Optional[Tuple[int, str]] = None) -> List[MatchCandidate]:
        cands = lookup(self.program, term)
        if last is None:
            return cands
        rule_id, direction = last
        return [c for c in cands
                if not (c.computational and c.definition.id == rule_id and c.side != direction)]

    def _select(self, frame: _Frame, top: bool):
        """('halt' | 'apply' | 'stall', candidate, 이유)"""
        cands = self.candidates(frame.term, frame.last)
        halting = any(not c.computational for c in cands)
        comp = [c for c in cands if c.computational]
        if frame.last is None:
            if not halting:
                if top:
                    raise PreconditionError(f"input is not in a halting state: {render_term(frame.term)}")
                return "stall", None, "sub-term is not in a halting state"
            if not comp:
                return "halt", None, ""
        elif halting:
            return "halt", None, ""
        if len(comp) == 1:
            return "apply", comp[0], ""
        if not comp:
            return "stall", None, "no rule matches"
        labels = ", ".join(f"{c.definition.label} ({c.side})" for c in comp)
        raise DeterminismError(f"{len(comp)} rules match {render_term(frame.term)}: {labels}")

    def _source_vars(self, rule: RuleDefinition, index: int, direction: str) -> List[str]:
        key = (rule.id, index, direction)
        names = self._vars.get(key)
        if names is None:
            names = self._vars[key] = pattern_variables(rule.subrules[index].side(direction))
        return names

    def _start(self, frame: _Frame, cand: MatchCandidate) -> None:
        rule = cand.definition
        if rule.concurrent:
            raise ConcurrentRuleError(f"rule {rule.label} has concurrent parties and cannot be evaluated", rule.span)
        plan = rule.plans.get(cand.side)
        if plan is None:
            raise PlanningError(f"rule {rule.label} has no {cand.side} plan", rule.span)
        frame.rule = rule
        frame.direction = cand.side
        frame.plan = plan
        frame.step = 0
        frame.bindings = dict(cand.bindings)
        frame.bindings.pop(CONTEXT_VAR, None)

    # -- 실행 -------------------------------------------------------------
    def _run(self, root: _Frame, single: bool = False) -> EvalOutcome:
        stack = [root]
        steps = 0
        trace: List[Term] = [root.term] if self.trace else []
        ticks = 0

        def chain() -> Tuple[str, ...]:
            return tuple(f.rule.label for f in stack if f.rule is not None)

        while True:
            ticks += 1
            if self.cancel is not None and ticks % _CANCEL_CHECK_EVERY == 0 and self.cancel.is_set():
                return EvalOutcome(CANCELLED, stack[0].term, steps, "cancelled", chain(), trace)
            frame = stack[-1]

            if frame.rule is None:
                action, cand, reason = self._select(frame, top=len(stack) == 1)
                if action == "halt":
                    if len(stack) == 1:
                        return EvalOutcome(HALTED, frame.term, steps, "", (), trace)
                    stack.pop()
                    parent = stack[-1]
                    bindings = unify(parent.target, frame.term, parent.bindings)
                    if bindings is None:
                        sub = parent.rule.subrules[parent.plan.steps[parent.step].index]
                        return EvalOutcome(STALLED, frame.term, steps,
                                           f"result does not fit sub-rule '{sub.label}'", chain(), trace)
                    parent.bindings = bindings
                    parent.step += 1
                    continue
                if action == "stall":
                    return EvalOutcome(STALLED, frame.term, steps, reason, chain(), trace)
                if steps >= self.step_limit:
                    return EvalOutcome(LIMIT, frame.term, steps, "step limit", chain(), trace)
                steps += 1
                self._start(frame, cand)
                continue

            rule = frame.rule
            if frame.step < len(frame.plan.steps):
                step = frame.plan.steps[frame.step]
                sub = rule.subrules[step.index]
                source = sub.side(step.direction)
                child = _Frame(substitute(source, frame.bindings))
                for name in self._source_vars(rule, step.index, step.direction):
                    frame.bindings.pop(name, None)
                frame.target = sub.side(_opposite(step.direction))
                copied = self._copier.run(child.term, self.step_limit - steps)
                if copied is None:
                    stack.append(child)
                    continue
                result, used = copied
                steps += used
                bindings = unify(frame.target, result, frame.bindings)
                if bindings is None:
                    return EvalOutcome(STALLED, result, steps,
                                       f"result does not fit sub-rule '{sub.label}'", chain(), trace)
                frame.bindings = bindings
                frame.step += 1
                continue

            frame.term = substitute(rule.side(_opposite(frame.direction)), frame.bindings)
            frame.last = (rule.id, frame.direction)
            frame.rule = None
            frame.plan = None
            frame.bindings = {}
            if len(stack) == 1:
                if self.trace:
                    trace.append(frame.term)
                if single:
                    return EvalOutcome(HALTED, frame.term, steps, "", (), trace)

    def evaluate(self, term: Term) -> EvalOutcome:
        """정지 상태의 항을 다시 정지 상태가 될 때까지 평가"""
        return self._run(_Frame(term))

    def apply_rule(self, term: Term, candidate: MatchCandidate) -> EvalOutcome:
        """후보 규칙 하나만 적용 (하위 계산은 끝까지 돈다)"""
        frame = _Frame(term)
        self._start(frame, candidate)
        return self._run(frame, single=True)

    def evaluate_relation(self, lhs: Sequence[Pattern], infix: Term, rhs: Sequence[Pattern],
                          direction: str = FORWARD) -> RelationResult:
        """forward면 `f lhs ()`를 만들어 평가하고 `() rhs f`에 맞춘다. backward는 반대"""
        left = (infix,) + tuple(lhs) + (UNIT,)
        right = (UNIT,) + tuple(rhs) + (infix,)
        start, pattern = (left, right) if direction == FORWARD else (right, left)
        outcome = self.evaluate(start)
        if not outcome.halted:
            return RelationResult(outcome, None)
        return RelationResult(outcome, unify(pattern, outcome.term))


def evaluate(term: Term, program: Program, step_limit: Optional[int] = None,
             trace: bool = False, cancel: Optional[threading.Event] = None) -> EvalOutcome:
    return Engine(program, step_limit, cancel, trace).evaluate(term)
