"""
🧱 alethe 커널
- 항(Term)/패턴(Pattern), 원자 테이블, 정의(규칙/정지 패턴)
- 표면 구문 → 커널 정의 변환 (중위 관례, 정지 패턴 자동 생성, data 선언, ~ 스코프)
- import 따라가며 프로그램 로딩, 구조적으로 같은 정의는 하나로 합침
- 항 렌더링 (자연수/리스트/문자열 설탕, 쓰레기 값 숨김)
"""

import os
import sys
from dataclasses import dataclass, field
from typing import Dict, Iterable, Iterator, List, Optional, Sequence, Tuple, Union

from reader import (
    ATOM_CHAR, ATOM_PLAIN, RESERVED,
    AletheError, DataStatement, HaltingStatement, ImportStatement, NestedDefinition,
    PartyBagHead, Relation, RuleStatement, Span, SubParty, SubRelation,
    SurfaceAtom, SurfaceBlank, SurfaceComposite, SurfaceList, SurfaceNatural,
    SurfaceStatement, SurfaceString, SurfaceTerm, SurfaceVar,
    parse_source, render_relation, render_surface_term,
)

FORWARD = "forward"
BACKWARD = "backward"
HALTING = "halting"

CONTEXT_VAR = "@ctx"
GARBAGE_TEXT = "{~GARBAGE~}"


class ScopeError(AletheError):
    pass


class ImportLoadError(AletheError):
    pass


class InstantiationError(AletheError):
    """치환 시 바인딩이 없는 변수"""


# ---------------------------------------------------------------------------
# 항과 패턴
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class Atom:
    """id로만 비교하는 원자. 이름과 스코프 경로는 표시용"""
    id: int
    name: str
    scope: Tuple = ()
    kind: str = ATOM_PLAIN

    def __eq__(self, other) -> bool:
        return isinstance(other, Atom) and other.id == self.id

    def __hash__(self) -> int:
        return hash(("atom", self.id))

    def __repr__(self) -> str:
        return f"Atom({self.name}#{self.id})"


@dataclass(frozen=True)
class Var:
    name: str


Term = Union[Atom, tuple]
Pattern = Union[Atom, Var, tuple]
UNIT: tuple = ()


class AtomTable:
    """이름(+스코프) → 원자. 전역 원자는 이름 하나당 하나, 문자 원자는 별도 이름공간"""

    def __init__(self):
        self._next_id = 0
        self._atoms: Dict[Tuple, Atom] = {}

    def _make(self, key: Tuple, name: str, scope: Tuple, kind: str) -> Atom:
        atom = self._atoms.get(key)
        if atom is None:
            atom = Atom(self._next_id, name, scope, kind)
            self._next_id += 1
            self._atoms[key] = atom
        return atom

    def intern(self, name: str, kind: str = ATOM_PLAIN) -> Atom:
        if kind == ATOM_CHAR:
            return self._make(("char", name), name, (), ATOM_CHAR)
        return self._make(("global", name), name, (), ATOM_PLAIN)

    def scoped(self, scope: Tuple, name: str) -> Atom:
        return self._make(("scoped", scope, name), name, scope, ATOM_PLAIN)

    def lookup(self, name: str) -> Optional[Atom]:
        return self._atoms.get(("global", name))

    def adopt(self, atom: Atom) -> Optional[Atom]:
        """다른 표의 원자를 이 표의 같은 이름 원자로. 없는 스코프 원자는 None"""
        if atom.kind == ATOM_CHAR:
            return self.intern(atom.name, ATOM_CHAR)
        if atom.scope:
            return self._atoms.get(("scoped", atom.scope, atom.name))
        return self.intern(atom.name)

    def __len__(self) -> int:
        return len(self._atoms)


def is_named(term, name: str) -> bool:
    return isinstance(term, Atom) and term.name == name and not term.scope and term.kind == ATOM_PLAIN


def term_equal(a: Pattern, b: Pattern) -> bool:
    """깊은 항도 재귀 없이 비교"""
    stack = [(a, b)]
    while stack:
        x, y = stack.pop()
        if x is y:
            continue
        if isinstance(x, tuple):
            if not isinstance(y, tuple) or len(x) != len(y):
                return False
            stack.extend(zip(x, y))
        elif x != y:
            return False
    return True


def iter_subterms(term: Pattern) -> Iterator[Pattern]:
    stack = [term]
    while stack:
        t = stack.pop()
        yield t
        if isinstance(t, tuple):
            stack.extend(reversed(t))


def reintern(term: Term, atoms: AtomTable) -> Optional[Term]:
    """항의 원자를 모두 새 원자표로 옮긴다. 옮길 수 없는 원자가 있으면 None"""
    # (항, 자식 결과 모으는 중인 리스트) 후위 순회
    results: List[list] = [[]]
    stack: List[Tuple[Pattern, bool]] = [(term, False)]
    while stack:
        t, done = stack.pop()
        if done:
            children = results.pop()
            results[-1].append(tuple(children))
        elif isinstance(t, tuple):
            results.append([])
            stack.append((t, True))
            stack.extend((child, False) for child in reversed(t))
        elif isinstance(t, Atom):
            mapped = atoms.adopt(t)
            if mapped is None:
                return None
            results[-1].append(mapped)
        else:
            results[-1].append(t)
    return results[0][0]


def pattern_variables(pattern: Pattern) -> List[str]:
    """등장 순서대로 중복 없이"""
    seen: Dict[str, None] = {}
    for t in iter_subterms(pattern):
        if isinstance(t, Var):
            seen.setdefault(t.name, None)
    return list(seen)


def numeral(n: int, atoms: AtomTable) -> Term:
    zero, succ = atoms.intern("Z"), atoms.intern("S")
    term: Term = zero
    for _ in range(n):
        term = (succ, term)
    return term


def numeral_value(term: Pattern) -> Optional[int]:
    count = 0
    while isinstance(term, tuple) and len(term) == 2 and is_named(term[0], "S"):
        count += 1
        term = term[1]
    return count if is_named(term, "Z") else None


def make_list(items: Sequence[Pattern], atoms: AtomTable, tail: Optional[Pattern] = None) -> Pattern:
    cons = atoms.intern("Cons")
    result = atoms.intern("Nil") if tail is None else tail
    for item in reversed(items):
        result = (cons, item, result)
    return result


def list_spine(term: Pattern) -> Tuple[List[Pattern], Pattern]:
    items = []
    while isinstance(term, tuple) and len(term) == 3 and is_named(term[0], "Cons"):
        items.append(term[1])
        term = term[2]
    return items, term


def list_items(term: Pattern) -> Optional[List[Pattern]]:
    items, tail = list_spine(term)
    return items if is_named(tail, "Nil") else None


def canonical(pattern: Pattern, names: Optional[Dict[str, int]] = None, wildcard: bool = False):
    """변수 이름을 등장 순서 번호로 바꾼 비교용 키 (wildcard면 모든 변수를 같게)"""
    names = {} if names is None else names
    out: List = []
    for t in iter_subterms(pattern):
        if isinstance(t, Var):
            out.append("*" if wildcard else ("v", names.setdefault(t.name, len(names))))
        elif isinstance(t, Atom):
            out.append(("a", t.kind, t.name, t.scope))
        else:
            out.append(("c", len(t)))
    return tuple(out)


# ---------------------------------------------------------------------------
# 정의
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Party:
    context: Pattern
    body: Tuple[Pattern, ...]
    opaque: bool = True


@dataclass(frozen=True)
class SubRule:
    lhs: Tuple[Pattern, ...]
    rhs: Tuple[Pattern, ...]
    cost: int = 1
    label: str = ""

    def side(self, direction: str) -> Tuple[Pattern, ...]:
        return self.lhs if direction == FORWARD else self.rhs


@dataclass
class HaltingDefinition:
    id: int
    pattern: Tuple[Pattern, ...]
    label: str = ""
    span: Optional[Span] = None
    ambiguous: bool = False


@dataclass
class RuleDefinition:
    id: int
    lhs: Tuple[Party, ...]
    rhs: Tuple[Party, ...]
    subrules: Tuple[SubRule, ...] = ()
    label: str = ""
    span: Optional[Span] = None
    concurrent: bool = False
    ambiguous: bool = False
    duplicator: bool = False   # data 선언이 만든 Dup 규칙
    plans: Dict[str, object] = field(default_factory=dict)

    def side(self, direction: str) -> Tuple[Pattern, ...]:
        """비동시성 규칙의 한쪽 본문 (forward면 lhs)"""
        parties = self.lhs if direction == FORWARD else self.rhs
        return parties[0].body

    def parties(self, side: str) -> Tuple[Party, ...]:
        return self.lhs if side == FORWARD else self.rhs


Definition = Union[RuleDefinition, HaltingDefinition]


def definition_key(defn: Definition) -> Tuple:
    names: Dict[str, int] = {}
    if isinstance(defn, HaltingDefinition):
        return ("halt", canonical(defn.pattern, names))
    parts: List = ["rule"]
    for side in (defn.lhs, defn.rhs):
        for party in side:
            parts.append(canonical(party.context, names) if not party.opaque else "ctx")
            parts.append(canonical(party.body, names))
        parts.append("|")
    for sub in defn.subrules:
        parts.append((canonical(sub.lhs, names), canonical(sub.rhs, names), sub.cost))
    return tuple(parts)


@dataclass
class Program:
    definitions: List[Definition] = field(default_factory=list)
    atoms: AtomTable = field(default_factory=AtomTable)
    files: List[str] = field(default_factory=list)
    warnings: List[str] = field(default_factory=list)
    index: object = None
    _keys: Dict[Tuple, int] = field(default_factory=dict, repr=False)

    @property
    def rules(self) -> List[RuleDefinition]:
        return [d for d in self.definitions if isinstance(d, RuleDefinition)]

    @property
    def haltings(self) -> List[HaltingDefinition]:
        return [d for d in self.definitions if isinstance(d, HaltingDefinition)]

    def definition(self, def_id: int) -> Definition:
        return self.definitions[def_id]

    def add(self, defn: Definition) -> Optional[Definition]:
        """구조적으로 같은 정의가 이미 있으면 건너뛴다"""
        key = definition_key(defn)
        if key in self._keys:
            if isinstance(defn, RuleDefinition):
                kept = self.definitions[self._keys[key]]
                self.warnings.append(f"duplicate definition {defn.label} ({defn.span}) merged with {kept.span}")
            return None
        defn.id = len(self.definitions)
        self._keys[key] = defn.id
        self.definitions.append(defn)
        return defn

    def copy(self) -> "Program":
        return Program(list(self.definitions), self.atoms, list(self.files), list(self.warnings),
                       None, dict(self._keys))


# ---------------------------------------------------------------------------
# 표면 구문 → 커널
# ---------------------------------------------------------------------------

class FreshVars:
    def __init__(self, prefix: str = "_"):
        self.prefix = prefix
        self.count = 0

    def __call__(self) -> Var:
        self.count += 1
        return Var(f"{self.prefix}{self.count}")


def surface_to_pattern(term: SurfaceTerm, atoms: AtomTable, scopes: Tuple = (),
                       fresh: Optional[FreshVars] = None,
                       env: Optional[Dict[str, Term]] = None) -> Pattern:
    """표면 항 → 패턴. fresh가 없으면 `_`는 unit, env가 있으면 변수를 그 값으로 치환"""
    if isinstance(term, SurfaceAtom):
        if term.kind == ATOM_CHAR:
            return atoms.intern(term.name, ATOM_CHAR)
        if term.tildes == 0:
            return atoms.intern(term.name)
        if term.tildes > len(scopes):
            raise ScopeError(
                f"'{render_surface_term(term)}' reaches {term.tildes} rule scopes out, only {len(scopes)} enclose it",
                term.span)
        return atoms.scoped(scopes[-term.tildes], term.name)
    if isinstance(term, SurfaceVar):
        if env is not None:
            if term.name not in env:
                raise InstantiationError(f"unbound variable {term.name}", term.span)
            return env[term.name]
        return Var(term.name)
    if isinstance(term, SurfaceBlank):
        return fresh() if fresh is not None else UNIT
    if isinstance(term, SurfaceNatural):
        return numeral(term.value, atoms)
    if isinstance(term, SurfaceString):
        return make_list([atoms.intern(ch, ATOM_CHAR) for ch in term.text], atoms)
    if isinstance(term, SurfaceList):
        items = [surface_to_pattern(t, atoms, scopes, fresh, env) for t in term.items]
        tail = surface_to_pattern(term.tail, atoms, scopes, fresh, env) if term.tail is not None else None
        return make_list(items, atoms, tail)
    if isinstance(term, SurfaceComposite):
        return tuple(surface_to_pattern(t, atoms, scopes, fresh, env) for t in term.items)
    raise TypeError(f"not a surface term: {term!r}")


def ground_sequence(terms: Iterable[SurfaceTerm], atoms: AtomTable, env: Dict[str, Term]) -> Term:
    """REPL 입력용: 빈칸은 unit, 변수는 세션 값으로"""
    return tuple(surface_to_pattern(t, atoms, (), None, env) for t in terms)


def relation_sides(rel: Relation, convert) -> Tuple[Tuple, Tuple, Optional[Pattern]]:
    """중위 관례: x* `f` y* → (f x* (), () y* f)"""
    lhs = tuple(convert(t) for t in rel.lhs)
    rhs = tuple(convert(t) for t in rel.rhs)
    if rel.infix is None:
        return lhs, rhs, None
    f = convert(rel.infix[0]) if len(rel.infix) == 1 else tuple(convert(t) for t in rel.infix)
    return (f,) + lhs + (UNIT,), (UNIT,) + rhs + (f,), f


class Desugarer:
    """한 파일의 표면 문장을 커널 정의로 바꿔 Program에 넣는다"""

    def __init__(self, program: Program, file_key: str):
        self.program = program
        self.atoms = program.atoms
        self.file_key = file_key
        self._scope_counter = 0
        self.imports: List[Tuple[str, Optional[Span]]] = []

    def _new_scope(self, parent: Tuple) -> Tuple:
        self._scope_counter += 1
        base = parent[-1] if parent else (self.file_key,)
        return base + (self._scope_counter,)

    def _emit_halting(self, pattern: Tuple, label: str, span, ambiguous: bool) -> None:
        self.program.add(HaltingDefinition(-1, pattern, label, span, ambiguous))

    def _infix_haltings(self, lhs: Tuple, rhs: Tuple, f: Pattern, fresh: FreshVars) -> List[Tuple]:
        left = (f,) + tuple(fresh() for _ in lhs[1:-1]) + (UNIT,)
        right = (UNIT,) + tuple(fresh() for _ in rhs[1:-1]) + (f,)
        patterns = [left, right]
        if isinstance(f, tuple):
            patterns.append(f)
        return patterns

    def statement(self, stmt: SurfaceStatement, scopes: Tuple = ()) -> None:
        if isinstance(stmt, ImportStatement):
            self.imports.append((stmt.path, stmt.span))
        elif isinstance(stmt, HaltingStatement):
            self._halting(stmt, scopes)
        elif isinstance(stmt, DataStatement):
            self._data(stmt, scopes)
        elif isinstance(stmt, RuleStatement):
            self._rule(stmt, scopes)
        else:
            raise TypeError(f"not a statement: {stmt!r}")

    def _halting(self, stmt: HaltingStatement, scopes: Tuple) -> None:
        fresh = FreshVars()
        convert = lambda t: surface_to_pattern(t, self.atoms, scopes, fresh)  # noqa: E731
        if stmt.relation is None:
            pattern = tuple(convert(t) for t in stmt.patterns)
            label = "! " + " ".join(render_surface_term(t) for t in stmt.patterns)
            self._emit_halting(pattern, label, stmt.span, stmt.pragma)
            return
        label = "! " + render_relation(stmt.relation)
        lhs, rhs, f = relation_sides(stmt.relation, convert)
        patterns = [lhs, rhs] + ([f] if isinstance(f, tuple) else [])
        for pattern in patterns:
            self._emit_halting(pattern, label, stmt.span, stmt.pragma)

    def _data(self, stmt: DataStatement, scopes: Tuple) -> None:
        fresh = FreshVars()
        pattern = tuple(surface_to_pattern(t, self.atoms, scopes, fresh) for t in stmt.patterns)
        label = "data " + " ".join(render_surface_term(t) for t in stmt.patterns)
        self._emit_halting(pattern, label, stmt.span, stmt.pragma)

        value = pattern[0] if len(pattern) == 1 else pattern
        names = pattern_variables(value)
        taken = set(names)
        primed = {}
        for name in names:
            new = name + "'"
            while new in taken:
                new += "'"
            taken.add(new)
            primed[name] = new
        copy = _rename(value, primed)
        dup = self.atoms.intern("Dup")
        f = (dup, value)
        lhs, rhs = (f, UNIT), (UNIT, copy, f)
        subrules = tuple(
            SubRule(((dup, Var(n)), UNIT), (UNIT, Var(primed[n]), (dup, Var(n))), 1, f"`Dup {n}` {primed[n]}")
            for n in names)
        ctx = Var(CONTEXT_VAR)
        rule = RuleDefinition(-1, (Party(ctx, lhs),), (Party(ctx, rhs),), subrules,
                              f"`Dup {' '.join(render_surface_term(t) for t in stmt.patterns)}`", stmt.span,
                              ambiguous=stmt.pragma, duplicator=True)
        self.program.add(rule)
        for halting in self._infix_haltings(lhs, rhs, f, FreshVars()):
            self._emit_halting(halting, label, stmt.span, stmt.pragma)

    def _rule(self, stmt: RuleStatement, scopes: Tuple) -> None:
        fresh = FreshVars()
        head_convert = lambda t: surface_to_pattern(t, self.atoms, scopes, fresh)  # noqa: E731
        own = self._new_scope(scopes)
        inner = scopes + (own,)
        body_convert = lambda t: surface_to_pattern(t, self.atoms, inner, fresh)  # noqa: E731
        ctx = Var(CONTEXT_VAR)
        concurrent = False
        haltings: List[Tuple] = []

        if isinstance(stmt.head, PartyBagHead):
            lhs_parties = tuple(self._party(p, head_convert) for p in stmt.head.lhs)
            rhs_parties = tuple(self._party(p, head_convert) for p in stmt.head.rhs)
            label = "{...} = {...}"
            simple = (len(lhs_parties) == len(rhs_parties) == 1
                      and isinstance(stmt.head.lhs[0].context, SurfaceVar)
                      and isinstance(stmt.head.rhs[0].context, SurfaceVar)
                      and stmt.head.lhs[0].context.name == stmt.head.rhs[0].context.name)
            if simple:
                lhs_parties = (Party(ctx, lhs_parties[0].body),)
                rhs_parties = (Party(ctx, rhs_parties[0].body),)
            else:
                concurrent = True
        else:
            label = render_relation(stmt.head)
            lhs, rhs, f = relation_sides(stmt.head, head_convert)
            lhs_parties, rhs_parties = (Party(ctx, lhs),), (Party(ctx, rhs),)
            if f is not None:
                haltings.extend(self._infix_haltings(lhs, rhs, f, FreshVars("_h")))

        subrules: List[SubRule] = []
        pending_parties: Dict[str, List[Tuple[Tuple, int]]] = {}
        nested = []
        for decl in stmt.declarations:
            if isinstance(decl, SubRelation):
                sub_lhs, sub_rhs, sub_f = relation_sides(decl.relation, body_convert)
                subrules.append(SubRule(sub_lhs, sub_rhs, decl.cost, render_relation(decl.relation)))
                if decl.halting:
                    patterns = [sub_lhs, sub_rhs] + ([sub_f] if isinstance(sub_f, tuple) else [])
                    for pattern in patterns:
                        self._emit_halting(pattern, "! " + render_relation(decl.relation), decl.span, stmt.pragma)
            elif isinstance(decl, SubParty):
                context = decl.party.context
                body = tuple(body_convert(t) for t in decl.party.body)
                if isinstance(context, SurfaceVar):
                    pending_parties.setdefault(context.name, []).append((body, decl.cost))
                else:
                    concurrent = True
            elif isinstance(decl, NestedDefinition):
                nested.append(decl.statement)

        for name, parties in pending_parties.items():
            if len(parties) != 2:
                concurrent = True
                continue
            (first, cost_a), (second, cost_b) = parties
            subrules.append(SubRule(first, second, max(cost_a, cost_b), f"{name}: ..."))

        rule = RuleDefinition(-1, lhs_parties, rhs_parties, tuple(subrules), label, stmt.span,
                              concurrent, stmt.pragma)
        self.program.add(rule)
        for halting in haltings:
            self._emit_halting(halting, label, stmt.span, stmt.pragma)
        for child in nested:
            self.statement(child, inner)

    def _party(self, party, convert) -> Party:
        context = convert(party.context)
        body = tuple(convert(t) for t in party.body)
        return Party(context, body, opaque=isinstance(context, Var))


def _rename(pattern: Pattern, mapping: Dict[str, str]) -> Pattern:
    if isinstance(pattern, Var):
        return Var(mapping.get(pattern.name, pattern.name))
    if isinstance(pattern, tuple):
        return tuple(_rename(p, mapping) for p in pattern)
    return pattern


# ---------------------------------------------------------------------------
# 로딩
# ---------------------------------------------------------------------------

def resolve_path(path: str, base_dir: Optional[str], search_path: Sequence[str], span: Optional[Span] = None) -> str:
    """importing 파일 디렉터리 → 검색 경로 순서로 찾는다"""
    tried = []
    bases = ([base_dir] if base_dir is not None else []) + list(search_path)
    if os.path.isabs(path):
        bases = [""]
    for base in bases:
        candidate = os.path.join(base, path) if base else path
        tried.append(candidate)
        if os.path.isfile(candidate):
            return os.path.abspath(candidate)
    raise ImportLoadError(f"cannot find '{path}' (tried: {', '.join(tried)})", span)


def _load_file(program: Program, path: str, search_path: Sequence[str], visited: set) -> None:
    if path in visited:
        return
    visited.add(path)
    try:
        with open(path, "r", encoding="utf-8") as f:
            source = f.read()
    except OSError as e:
        raise ImportLoadError(f"cannot read '{path}': {e}")
    if os.getenv("ALETHE_VERBOSE"):
        print(f"📦 로딩: {path}", file=sys.stderr)
    program.files.append(path)
    statements = parse_source(source, path)
    desugarer = Desugarer(program, path)
    base_dir = os.path.dirname(path)
    for stmt in statements:
        if isinstance(stmt, ImportStatement):
            target = resolve_path(stmt.path, base_dir, search_path, stmt.span)
            _load_file(program, target, search_path, visited)
        else:
            desugarer.statement(stmt)


def load_program(entry_paths: Sequence[str], search_path: Sequence[str] = ()) -> Program:
    """진입 파일들과 import 폐포를 읽어 하나의 Program으로"""
    program = Program()
    visited: set = set()
    for entry in entry_paths:
        target = resolve_path(entry, os.getcwd(), search_path)
        _load_file(program, target, search_path, visited)
    return program


def load_source(source: str, name: str = "<input>", program: Optional[Program] = None,
                search_path: Sequence[str] = ()) -> Program:
    """문자열 소스를 (기존 프로그램에 덧붙여) 로딩. 원래 프로그램은 건드리지 않는다"""
    result = program.copy() if program is not None else Program()
    statements = parse_source(source, name)
    desugarer = Desugarer(result, f"{name}#{len(result.files)}")
    visited = set(result.files)
    result.files.append(name)
    for stmt in statements:
        if isinstance(stmt, ImportStatement):
            target = resolve_path(stmt.path, os.getcwd(), search_path, stmt.span)
            _load_file(result, target, search_path, visited)
        else:
            desugarer.statement(stmt)
    return result


# ---------------------------------------------------------------------------
# 렌더링
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class RenderOptions:
    sugar_numerals: bool = True
    sugar_lists: bool = True
    sugar_strings: bool = True
    hide_garbage: bool = True
    color: bool = False


RAW = RenderOptions(False, False, False, False, False)

_CYAN, _DIM, _RESET = "\x1b[36m", "\x1b[2m", "\x1b[0m"


def atom_text(atom: Atom) -> str:
    name = atom.name
    if atom.kind == ATOM_CHAR:
        if name.isspace() and name not in "\n\t":
            return f"'\\{ord(name)}"
        return "'" + name.replace("\\", "\\\\").replace("\n", "\\n").replace("\t", "\\t")
    if atom.scope:
        return "~" + name
    needs_escape = (
        not name or name == "_" or name.isdigit() or name[0] in "~#'\"-{"
        or any(ch.isspace() or ch in RESERVED for ch in name)
        or name[0].islower()
    )
    if needs_escape:
        return '#"' + name.replace("\\", "\\\\").replace('"', '\\"').replace("\n", "\\n") + '"'
    return name


def _render_leaf(term: Pattern, opts: RenderOptions, nested: bool) -> Optional[str]:
    """한 번에 글자로 바뀌는 항. 자식을 펼쳐야 하는 리스트/복합 항은 None"""
    if isinstance(term, Var):
        return "_" if term.name.startswith("_") else term.name
    if isinstance(term, Atom):
        # 최상위 열의 Z는 Z로, 항 안쪽에서는 0으로 쓴다
        if opts.sugar_numerals and nested and is_named(term, "Z"):
            return _paint("0", _CYAN, opts)
        if opts.sugar_lists and is_named(term, "Nil"):
            return "[]"
        return atom_text(term)
    if opts.hide_garbage and term and is_named(term[0], "Garbage"):
        return _paint(GARBAGE_TEXT, _DIM, opts)
    if opts.sugar_numerals:
        value = numeral_value(term)
        if value is not None:
            return _paint(str(value), _CYAN, opts)
    if opts.sugar_lists and opts.sugar_strings and len(term) == 3 and is_named(term[0], "Cons"):
        items, tail = list_spine(term)
        if is_named(tail, "Nil") and all(isinstance(i, Atom) and i.kind == ATOM_CHAR for i in items):
            text = "".join(i.name for i in items)
            return '"' + text.replace("\\", "\\\\").replace('"', '\\"').replace("\n", "\\n").replace("\t", "\\t") + '"'
    return None


def _render(term: Pattern, opts: RenderOptions, nested: bool = False) -> str:
    # 스택 원소: 그대로 붙일 문자열 또는 (항, 안쪽 여부)
    out: List[str] = []
    stack: list = [(term, nested)]
    while stack:
        top = stack.pop()
        if isinstance(top, str):
            out.append(top)
            continue
        t, inner = top
        leaf = _render_leaf(t, opts, inner)
        if leaf is not None:
            out.append(leaf)
            continue
        if opts.sugar_lists and len(t) == 3 and is_named(t[0], "Cons"):
            items, tail = list_spine(t)
            seq: list = ["["]
            for i, item in enumerate(items):
                seq.extend((" ", (item, True)) if i else ((item, True),))
            if not is_named(tail, "Nil"):
                seq.extend((" . ", (tail, True)))
            seq.append("]")
        else:
            seq = ["("]
            for i, child in enumerate(t):
                seq.extend((" ", (child, True)) if i else ((child, True),))
            seq.append(")")
        stack.extend(reversed(seq))
    return "".join(out)


def _paint(text: str, code: str, opts: RenderOptions) -> str:
    return f"{code}{text}{_RESET}" if opts.color else text


def render_term(term: Pattern, options: RenderOptions = RenderOptions()) -> str:
    """최상위 열(sequence)은 괄호 없이 공백으로 잇는다"""
    if isinstance(term, tuple) and term:
        return " ".join(_render(t, options) for t in term)
    return _render(term, options)


def render_value(term: Pattern, options: RenderOptions = RenderOptions()) -> str:
    """변수 값처럼 항 하나를 그대로 (겉 괄호 유지, Z는 0)"""
    return _render(term, options, True)
