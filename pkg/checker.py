"""
⚖️ alethe 모호성 검사기
- 규칙 양쪽 패턴(흰 노드)과 정지 패턴(검은 노드)으로 호환성 그래프 구성
- 흰 노드가 둘 이상인 삼각형이 있으면 모호 (networkx 클릭 열거)
- `-- @ambiguous` 프라그마가 붙은 정의가 낀 삼각형은 보고하지 않는다
"""

from dataclasses import dataclass, field
from typing import Dict, List, Tuple

import networkx as nx

from kernel import (
    BACKWARD, FORWARD, HALTING, Atom, Definition, HaltingDefinition, Pattern, Program, Var,
    canonical, render_term,
)

WHITE = "white"
BLACK = "black"


def compatible(p: Pattern, q: Pattern) -> bool:
    """공통 인스턴스가 있을 수 있는지 (변수는 무엇과도 호환)"""
    stack = [(p, q)]
    while stack:
        a, b = stack.pop()
        if isinstance(a, Var) or isinstance(b, Var):
            continue
        if isinstance(a, Atom) or isinstance(b, Atom):
            if a != b:
                return False
            continue
        if len(a) != len(b):
            return False
        stack.extend(zip(a, b))
    return True


@dataclass
class AmbiguityNode:
    pattern: Tuple[Pattern, ...]
    color: str
    origins: List[Tuple[Definition, str]] = field(default_factory=list)

    @property
    def suppressed(self) -> bool:
        return any(defn.ambiguous for defn, _ in self.origins)

    def describe(self) -> str:
        defn, side = self.origins[0]
        where = f" ({defn.span})" if defn.span else ""
        kind = "halting" if side == HALTING else ("lhs" if side == FORWARD else "rhs")
        return f"{render_term(self.pattern)}  [{kind} of {defn.label}{where}]"


@dataclass
class AmbiguityReport:
    nodes: List[AmbiguityNode]
    edges: int
    triangles: List[Tuple[AmbiguityNode, AmbiguityNode, AmbiguityNode]]

    @property
    def ok(self) -> bool:
        return not self.triangles

    def render(self) -> List[str]:
        lines = []
        for i, triangle in enumerate(self.triangles, 1):
            lines.append(f"❌ 모호성 #{i}: 다음 패턴들이 서로 호환됩니다")
            for node in triangle:
                lines.append(f"   - {node.describe()}")
        return lines


def _first_key(pattern: Tuple) -> object:
    if not pattern or isinstance(pattern[0], Var):
        return "*"
    head = pattern[0]
    return ("a", head.id) if isinstance(head, Atom) else ("c", len(head))


def build_graph(program: Program) -> Tuple[List[AmbiguityNode], nx.Graph]:
    nodes: List[AmbiguityNode] = []
    blacks: Dict[Tuple, AmbiguityNode] = {}
    for defn in program.definitions:
        if isinstance(defn, HaltingDefinition):
            key = canonical(defn.pattern, wildcard=True)
            node = blacks.get(key)
            if node is None:
                node = blacks[key] = AmbiguityNode(defn.pattern, BLACK)
                nodes.append(node)
            node.origins.append((defn, HALTING))
            continue
        for side in (FORWARD, BACKWARD):
            for party in defn.parties(side):
                nodes.append(AmbiguityNode(party.body, WHITE, [(defn, side)]))

    graph = nx.Graph()
    graph.add_nodes_from((i, {"color": node.color}) for i, node in enumerate(nodes))
    # 길이와 첫 원소가 다르면 호환될 수 없으므로 묶어서 비교
    buckets: Dict[Tuple, List[int]] = {}
    for i, node in enumerate(nodes):
        buckets.setdefault((len(node.pattern), _first_key(node.pattern)), []).append(i)
    for (length, first), members in buckets.items():
        wild = [] if first == "*" else buckets.get((length, "*"), [])
        for a_pos, a in enumerate(members):
            for b in members[a_pos + 1:] + wild:
                if compatible(nodes[a].pattern, nodes[b].pattern):
                    graph.add_edge(a, b)
    return nodes, graph


def find_triangles(graph: nx.Graph) -> List[Tuple[int, int, int]]:
    """흰 노드가 둘 이상인 삼각형 전부. 노드 속성 color"""
    found = []
    # 크기 순으로 나오므로 4-클릭이 보이면 끝
    for clique in nx.enumerate_all_cliques(graph):
        if len(clique) > 3:
            break
        if len(clique) == 3 and sum(graph.nodes[n]["color"] == WHITE for n in clique) >= 2:
            found.append(tuple(sorted(clique)))
    return sorted(found)


def check_program(program: Program) -> AmbiguityReport:
    nodes, graph = build_graph(program)
    triangles = []
    for a, b, c in find_triangles(graph):
        triple = (nodes[a], nodes[b], nodes[c])
        if any(n.suppressed for n in triple):
            continue
        triangles.append(triple)
    return AmbiguityReport(nodes, graph.number_of_edges(), triangles)
