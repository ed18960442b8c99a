"""
🔍 alethe 매처
- 패턴 단일화(unify): 비선형 변수는 구조적 동등성으로 확인
- 치환(substitute)
- 패턴 트라이 인덱스: 항 크기가 아니라 패턴 크기만큼만 내려간다
"""

from dataclasses import dataclass
from typing import Dict, List, Optional, Tuple

from kernel import (
    BACKWARD, FORWARD, HALTING, Atom, Definition, HaltingDefinition, InstantiationError,
    Party, Pattern, Program, Term, Var, term_equal,
)

Bindings = Dict[str, Term]

_SIDE_ORDER = {FORWARD: 0, BACKWARD: 1, HALTING: 2}


def unify(pattern: Pattern, term: Term, bindings: Optional[Bindings] = None) -> Optional[Bindings]:
    """pattern이 term과 맞으면 확장된 바인딩, 아니면 None. 입력 바인딩은 바꾸지 않는다"""
    result = dict(bindings) if bindings else {}
    stack = [(pattern, term)]
    while stack:
        p, t = stack.pop()
        if isinstance(p, Var):
            if p.name not in result:
                result[p.name] = t
            elif not term_equal(result[p.name], t):
                return None
        elif isinstance(p, tuple):
            if not isinstance(t, tuple) or len(p) != len(t):
                return None
            stack.extend(zip(p, t))
        elif p != t:
            return None
    return result


def unify_party(party: Party, body: Term, context: Optional[Term] = None,
                bindings: Optional[Bindings] = None) -> Optional[Bindings]:
    result = unify(party.body, body, bindings)
    if result is None or context is None:
        return result
    if party.opaque:
        result[party.context.name] = context
        return result
    return unify(party.context, context, result)


def substitute(pattern: Pattern, bindings: Bindings) -> Term:
    if isinstance(pattern, Var):
        if pattern.name not in bindings:
            raise InstantiationError(f"variable {pattern.name} has no value")
        return bindings[pattern.name]
    if isinstance(pattern, tuple):
        return tuple(substitute(p, bindings) for p in pattern)
    return pattern


# ---------------------------------------------------------------------------
# 패턴 트라이
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class IndexLeaf:
    definition_id: int
    side: str
    party: int = 0


@dataclass
class MatchCandidate:
    definition: Definition
    side: str
    bindings: Bindings
    party: int = 0

    @property
    def computational(self) -> bool:
        return self.side != HALTING


class _Node:
    __slots__ = ("children", "wild", "leaves")

    def __init__(self):
        self.children: Dict[Tuple, "_Node"] = {}
        self.wild: Optional["_Node"] = None
        self.leaves: List[IndexLeaf] = []


class PatternTrie:
    """패턴을 전위 순회로 펼쳐 저장. 변수 자리는 와일드카드 가지"""

    def __init__(self):
        self.root = _Node()
        self._size = 0

    def insert(self, pattern: Pattern, leaf: IndexLeaf) -> None:
        node = self.root
        stack = [pattern]
        while stack:
            p = stack.pop()
            if isinstance(p, Var):
                if node.wild is None:
                    node.wild = _Node()
                node = node.wild
                continue
            key = ("a", p.id) if isinstance(p, Atom) else ("c", len(p))
            node = node.children.setdefault(key, _Node())
            if isinstance(p, tuple):
                stack.extend(reversed(p))
        node.leaves.append(leaf)
        self._size += 1

    def lookup(self, term: Term) -> List[IndexLeaf]:
        """term과 구조가 맞을 수 있는 잎들 (비선형 변수 확인은 unify 몫)"""
        found: List[IndexLeaf] = []
        # 남은 하위 항들은 (head, tail) 연결 리스트로 공유
        pending = [(self.root, (term, None))]
        while pending:
            node, remaining = pending.pop()
            if remaining is None:
                found.extend(node.leaves)
                continue
            t, rest = remaining
            if node.wild is not None:
                pending.append((node.wild, rest))
            if isinstance(t, Atom):
                child = node.children.get(("a", t.id))
                if child is not None:
                    pending.append((child, rest))
            else:
                child = node.children.get(("c", len(t)))
                if child is not None:
                    nxt = rest
                    for sub in reversed(t):
                        nxt = (sub, nxt)
                    pending.append((child, nxt))
        return found

    def __len__(self) -> int:
        return self._size


def _leaf_pattern(defn: Definition, leaf: IndexLeaf) -> Pattern:
    if isinstance(defn, HaltingDefinition):
        return defn.pattern
    return defn.parties(leaf.side)[leaf.party].body


def build_index(program: Program) -> PatternTrie:
    """규칙 양쪽 파티 본문과 정지 패턴을 모두 넣는다"""
    trie = PatternTrie()
    for defn in program.definitions:
        if isinstance(defn, HaltingDefinition):
            trie.insert(defn.pattern, IndexLeaf(defn.id, HALTING))
            continue
        for side in (FORWARD, BACKWARD):
            for i, party in enumerate(defn.parties(side)):
                trie.insert(party.body, IndexLeaf(defn.id, side, i))
    program.index = trie
    return trie


def _sorted(candidates: List[MatchCandidate]) -> List[MatchCandidate]:
    return sorted(candidates, key=lambda c: (c.definition.id, _SIDE_ORDER[c.side], c.party))


def lookup(program: Program, term: Term) -> List[MatchCandidate]:
    """term과 단일화되는 모든 (정의, 방향) 후보"""
    trie = program.index if program.index is not None else build_index(program)
    candidates = []
    for leaf in trie.lookup(term):
        defn = program.definitions[leaf.definition_id]
        bindings = unify(_leaf_pattern(defn, leaf), term)
        if bindings is not None:
            candidates.append(MatchCandidate(defn, leaf.side, bindings, leaf.party))
    return _sorted(candidates)


def lookup_linear(program: Program, term: Term) -> List[MatchCandidate]:
    """인덱스 없이 전수 검사 (인덱스 검증용)"""
    candidates = []
    for defn in program.definitions:
        if isinstance(defn, HaltingDefinition):
            leaves = [IndexLeaf(defn.id, HALTING)]
        else:
            leaves = [IndexLeaf(defn.id, side, i) for side in (FORWARD, BACKWARD)
                      for i in range(len(defn.parties(side)))]
        for leaf in leaves:
            bindings = unify(_leaf_pattern(defn, leaf), term)
            if bindings is not None:
                candidates.append(MatchCandidate(defn, leaf.side, bindings, leaf.party))
    return _sorted(candidates)
