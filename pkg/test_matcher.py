"""
매처 테스트: 단일화, 치환, 트라이 인덱스 = 전수 검사 (무작위 패턴, 표준 라이브러리 패턴 인스턴스)
"""

import os

import pytest
from hypothesis import given, settings, strategies as st

from kernel import (
    BACKWARD, FORWARD, HALTING, AtomTable, HaltingDefinition, InstantiationError, Program, Var,
    load_program, make_list, numeral, pattern_variables,
)
from matcher import PatternTrie, IndexLeaf, build_index, lookup, lookup_linear, substitute, unify

ROOT = os.path.dirname(os.path.abspath(__file__))
STDLIB = os.path.join(ROOT, "stdlib")


@pytest.fixture
def atoms():
    return AtomTable()


def test_unify_binds_variables(atoms):
    a, b = atoms.intern("A"), atoms.intern("B")
    assert unify((Var("x"), b), (a, b)) == {"x": a}
    assert unify((Var("x"), b), (a, a)) is None
    assert unify((Var("x"),), (a, b)) is None


def test_repeated_variable_needs_equal_subterms(atoms):
    a, b = atoms.intern("A"), atoms.intern("B")
    assert unify((Var("x"), Var("x")), ((a, b), (a, b))) == {"x": (a, b)}
    assert unify((Var("x"), Var("x")), (a, b)) is None


def test_unify_extends_without_mutating(atoms):
    a = atoms.intern("A")
    start = {"y": a}
    result = unify((Var("x"),), (a,), start)
    assert result == {"y": a, "x": a}
    assert start == {"y": a}
    assert unify((Var("y"),), ((),), start) is None


def test_unify_handles_deep_terms(atoms):
    deep = numeral(50000, atoms)
    assert unify((Var("n"),), (deep,))["n"] is deep


def test_substitute(atoms):
    a = atoms.intern("A")
    assert substitute((Var("x"), (Var("x"), a)), {"x": ()}) == ((), ((), a))
    with pytest.raises(InstantiationError):
        substitute((Var("missing"),), {})


def test_trie_lookup_filters_by_structure(atoms):
    a, b = atoms.intern("A"), atoms.intern("B")
    trie = PatternTrie()
    trie.insert((a, Var("x")), IndexLeaf(0, HALTING))
    trie.insert((b, Var("x")), IndexLeaf(1, HALTING))
    trie.insert((Var("x"), Var("y"), Var("z")), IndexLeaf(2, HALTING))
    assert [leaf.definition_id for leaf in trie.lookup((a, (a, b)))] == [0]
    assert [leaf.definition_id for leaf in trie.lookup((a, b, ()))] == [2]
    assert len(trie) == 3


# ---------------------------------------------------------------------------
# 무작위 프로그램에서 인덱스와 전수 검사 비교
# ---------------------------------------------------------------------------

_table = AtomTable()
_atoms = [_table.intern(n) for n in ("A", "B", "C")]


def _tree(leaf):
    return st.recursive(leaf, lambda inner: st.lists(inner, max_size=3).map(tuple), max_leaves=6)


_ground = _tree(st.sampled_from(_atoms))
_pattern = _tree(st.one_of(st.sampled_from(_atoms), st.sampled_from(["x", "y"]).map(Var)))


def _key(candidates):
    return [(c.definition.id, c.side, c.party, c.bindings) for c in candidates]


@settings(max_examples=100, deadline=None)
@given(st.lists(st.lists(_pattern, max_size=3).map(tuple), min_size=1, max_size=12),
       st.lists(st.lists(_ground, max_size=3).map(tuple), min_size=1, max_size=8))
def test_trie_lookup_equals_linear_scan(patterns, terms):
    program = Program(atoms=_table)
    for pattern in patterns:
        program.add(HaltingDefinition(-1, pattern))
    build_index(program)
    for term in terms:
        assert _key(lookup(program, term)) == _key(lookup_linear(program, term))


def test_stdlib_lookup_matches_linear_scan():
    program = load_program([os.path.join(STDLIB, "std.ale")], [STDLIB])
    build_index(program)
    atoms = program.atoms
    plus = atoms.lookup("+")
    queries = [
        (plus, numeral(4, atoms), numeral(3, atoms), ()),
        ((), numeral(4, atoms), numeral(7, atoms), plus),
        (atoms.lookup("True"),),
        ((atoms.lookup("Length"), atoms.lookup("Nil")), ()),
    ]
    for term in queries:
        found = lookup(program, term)
        assert _key(found) == _key(lookup_linear(program, term))
        assert found


_std = {}


def _stdlib_program():
    if "program" not in _std:
        program = load_program([os.path.join(STDLIB, "std.ale")], [STDLIB])
        build_index(program)
        patterns = []
        for defn in program.definitions:
            if isinstance(defn, HaltingDefinition):
                patterns.append(defn.pattern)
            else:
                patterns.extend(p.body for side in (FORWARD, BACKWARD) for p in defn.parties(side))
        _std["program"], _std["patterns"] = program, patterns
    return _std["program"], _std["patterns"]


def _filler(atoms):
    small = st.integers(0, 4).map(lambda n: numeral(n, atoms))
    return st.one_of(
        small,
        st.lists(small, max_size=3).map(lambda xs: make_list(xs, atoms)),
        st.sampled_from(["True", "False", "Nil", "A", "+", "Length"]).map(atoms.intern),
        st.just(()),
    )


@settings(max_examples=300, deadline=None)
@given(st.data())
def test_stdlib_lookup_matches_linear_scan_on_instances(data):
    """표준 라이브러리 패턴의 인스턴스(와 아무 값)에서 인덱스 = 전수 검사"""
    program, patterns = _stdlib_program()
    filler = _filler(program.atoms)
    pattern = data.draw(st.sampled_from(patterns))
    bindings = {name: data.draw(filler) for name in pattern_variables(pattern)}
    instance = substitute(pattern, bindings)
    found = lookup(program, instance)
    assert _key(found) == _key(lookup_linear(program, instance))
    assert found
    noise = data.draw(st.lists(filler, min_size=1, max_size=4).map(tuple))
    assert _key(lookup(program, noise)) == _key(lookup_linear(program, noise))


def test_forward_candidate_for_addition():
    program = load_program([os.path.join(STDLIB, "arith.ale")], [STDLIB])
    atoms = program.atoms
    term = (atoms.lookup("+"), numeral(2, atoms), numeral(3, atoms), ())
    sides = {(c.definition.label, c.side) for c in lookup(program, term)}
    assert ("+ (S a) b () = () (S a) (S b') +", FORWARD) in sides
    assert any(side == HALTING for _, side in sides)


def test_trie_visits_only_the_matching_branch():
    """패턴이 많아져도 후보 잎 수는 맞는 패턴 수만큼"""
    table = AtomTable()
    x = Var("x")
    small, large = Program(atoms=table), Program(atoms=table)
    for i in range(2000):
        pattern = (table.intern(f"K{i}"), x)
        if i < 100:
            small.add(HaltingDefinition(-1, pattern))
        large.add(HaltingDefinition(-1, pattern))
    key_term = (table.intern("K42"), table.intern("A"))
    for program in (small, large):
        trie = build_index(program)
        assert len(trie.lookup(key_term)) == 1
        assert len(lookup(program, key_term)) == 1
    assert len(large.index) == 2000
