"""
🧭 alethe 실행 계획기
- 지식 상태(알고 있는 변수 집합) 위에서 하위 규칙을 정/역방향으로 적용하는 최단 경로 탐색
- 하위 규칙은 방향마다 한 번만, 같은 지식 상태는 다시 방문하지 않는다
- 비용이 같으면 단계 수 → 첫 하위 규칙 번호 → 뒤에서부터 읽은 단계열 순으로 고른다
- 계획은 규칙마다 양방향으로 미리 계산해 둔다
"""

import heapq
import os
from dataclasses import dataclass, field
from typing import Dict, FrozenSet, List, Optional, Set, Tuple

from dotenv import load_dotenv

from kernel import BACKWARD, FORWARD, Program, RuleDefinition, SubRule, pattern_variables
from reader import AletheError

load_dotenv()

# 탐색 폭주 방지용 상한 (노드 확장 수)
PLAN_SEARCH_LIMIT = int(os.getenv("ALETHE_PLAN_LIMIT", "200000"))

_DIR_ORDER = {FORWARD: 0, BACKWARD: 1}


class PlanningError(AletheError):
    pass


@dataclass(frozen=True)
class PlanStep:
    index: int        # 0부터 시작하는 하위 규칙 번호
    direction: str

    @property
    def order(self) -> Tuple[int, int]:
        return (self.index, _DIR_ORDER[self.direction])

    def render(self) -> str:
        arrow = "→" if self.direction == FORWARD else "←"
        return f"{arrow}{self.index + 1}"


@dataclass(frozen=True)
class Plan:
    steps: Tuple[PlanStep, ...]
    cost: int
    source: FrozenSet[str]
    goal: FrozenSet[str]
    unused: Tuple[int, ...] = ()

    def render(self) -> str:
        return " ".join(step.render() for step in self.steps) if self.steps else "(no sub-rules)"


@dataclass(frozen=True)
class Transition:
    source: FrozenSet[str]
    target: FrozenSet[str]
    step: PlanStep
    cost: int


def side_variables(patterns) -> FrozenSet[str]:
    return frozenset(pattern_variables(tuple(patterns)))


def _sub_sides(sub: SubRule) -> Tuple[FrozenSet[str], FrozenSet[str]]:
    return side_variables(sub.lhs), side_variables(sub.rhs)


def _rule_sides(rule: RuleDefinition, direction: str) -> Tuple[FrozenSet[str], FrozenSet[str]]:
    lhs = frozenset().union(*(side_variables(p.body) for p in rule.lhs))
    rhs = frozenset().union(*(side_variables(p.body) for p in rule.rhs))
    return (lhs, rhs) if direction == FORWARD else (rhs, lhs)


def successors(state: FrozenSet[str], subrules: Tuple[SubRule, ...]):
    """state에서 한 번에 갈 수 있는 (단계, 다음 상태, 비용)"""
    for index, sub in enumerate(subrules):
        lhs, rhs = _sub_sides(sub)
        for direction, needed, produced in ((FORWARD, lhs, rhs), (BACKWARD, rhs, lhs)):
            if needed <= state:
                yield PlanStep(index, direction), (state - needed) | produced, sub.cost


@dataclass(order=True)
class _Label:
    cost: int
    steps: int
    first: Tuple[int, int]
    reversed_path: Tuple[Tuple[int, int], ...]
    path: Tuple[PlanStep, ...] = field(compare=False)


def plan_rule(rule: RuleDefinition, direction: str = FORWARD) -> Plan:
    """규칙 한 방향의 실행 계획. 목표 상태와 정확히 같아야 한다"""
    if rule.concurrent:
        raise PlanningError(f"concurrent rule {rule.label} cannot be planned", rule.span)
    source, goal = _rule_sides(rule, direction)
    start = (source, frozenset(), frozenset([source]))
    best: Dict[Tuple, _Label] = {start: _Label(0, 0, (-1, -1), (), ())}
    heap = [(best[start], 0, start)]
    counter = 1
    expanded = 0
    seen_vars: Set[str] = set(source)
    stuck_with: Optional[FrozenSet[str]] = None
    while heap:
        label, _, node = heapq.heappop(heap)
        if best.get(node) is not label:
            continue
        state, used, visited = node
        if state == goal:
            used_indices = {s.index for s in label.path}
            unused = tuple(i for i in range(len(rule.subrules)) if i not in used_indices)
            return Plan(label.path, label.cost, source, goal, unused)
        stuck_with = state - goal if stuck_with is None else stuck_with & (state - goal)
        expanded += 1
        if expanded > PLAN_SEARCH_LIMIT:
            raise PlanningError(f"plan search for {rule.label} exceeded {PLAN_SEARCH_LIMIT} states", rule.span)
        for step, nxt, cost in successors(state, rule.subrules):
            if (step.index, step.direction) in used or nxt in visited:
                continue
            seen_vars.update(nxt)
            path = label.path + (step,)
            cand = _Label(label.cost + cost, label.steps + 1,
                          path[0].order, tuple(s.order for s in reversed(path)), path)
            key = (nxt, used | {(step.index, step.direction)}, visited | {nxt})
            old = best.get(key)
            if old is None or cand < old:
                best[key] = cand
                heapq.heappush(heap, (cand, counter, key))
                counter += 1

    missing = sorted(goal - seen_vars)
    arrow = "forward" if direction == FORWARD else "backward"
    if missing:
        detail = f"variables never computed: {', '.join(missing)}"
    else:
        leftover = sorted(stuck_with or ())
        detail = f"variables never consumed: {', '.join(leftover)}" if leftover else "no route to the output"
    raise PlanningError(f"no {arrow} plan for {rule.label}: {detail}", rule.span)


def plan_program(program: Program) -> List[PlanningError]:
    """모든 비동시성 규칙에 양방향 계획을 붙이고, 실패한 것들을 모아 돌려준다"""
    errors: List[PlanningError] = []
    for rule in program.rules:
        if rule.concurrent:
            continue
        for direction in (FORWARD, BACKWARD):
            try:
                rule.plans[direction] = plan_rule(rule, direction)
            except PlanningError as e:
                errors.append(e)
    return errors


def transition_graph(rule: RuleDefinition, direction: str = FORWARD) -> Tuple[Set[FrozenSet[str]], List[Transition]]:
    """사용 횟수 제한 없이 도달 가능한 지식 상태 그래프"""
    source, _ = _rule_sides(rule, direction)
    nodes = {source}
    edges: List[Transition] = []
    queue = [source]
    while queue:
        state = queue.pop(0)
        for step, nxt, cost in successors(state, rule.subrules):
            edges.append(Transition(state, nxt, step, cost))
            if nxt not in nodes:
                nodes.add(nxt)
                queue.append(nxt)
    return nodes, edges


def render_plan(rule: RuleDefinition) -> List[str]:
    lines = [f"{rule.label}"]
    for direction in (FORWARD, BACKWARD):
        plan = rule.plans.get(direction)
        arrow = "  >" if direction == FORWARD else "  <"
        if plan is None:
            lines.append(f"{arrow} (none)")
            continue
        note = f"  cost {plan.cost}"
        if plan.unused:
            note += f", unused: {', '.join(str(i + 1) for i in plan.unused)}"
        lines.append(f"{arrow} {plan.render()}{note}")
    return lines
