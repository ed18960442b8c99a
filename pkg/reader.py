"""
📖 alethe 소스 리더
- lark LALR 문법 + Indenter 후처리로 오프사이드 규칙 처리
- 토큰: 예약 문자 ( ) [ ] { } : ; . ` " 와 공백으로 분리, 주석은 줄바꿈 토큰에 흡수
- 파서: 문장/선언/관계/파티 구문 → 표면 구문 트리 (Transformer)
- REPL 한 줄 파서 (:q :l :r :v :p :g, | > <)
- 표면 구문 렌더러 (왕복 파싱 검증용)
"""

import re
import sys
import threading
import unicodedata
from dataclasses import dataclass, field, replace
from typing import List, Optional, Tuple, Union

from lark import Lark, Transformer, v_args
from lark.exceptions import UnexpectedCharacters, UnexpectedEOF, UnexpectedInput, UnexpectedToken, VisitError
from lark.indenter import DedentError, Indenter

RESERVED = set('()[]{}:;.`"')

ATOM_PLAIN = "plain"
ATOM_ESCAPED = "escaped-string"
ATOM_HASH = "hash-symbol"
ATOM_CHAR = "character"

ESCAPES = {"n": "\n", "t": "\t", "\\": "\\", '"': '"', "'": "'"}


@dataclass(frozen=True)
class Span:
    """소스 위치 (1부터 시작하는 줄/열, end_col은 배타적)"""
    file: str
    line: int
    col: int
    end_col: int

    def __str__(self) -> str:
        return f"{self.file}:{self.line}:{self.col}"


class AletheError(Exception):
    """alethe 툴체인 공통 예외"""

    def __init__(self, message: str, span: Optional[Span] = None):
        self.message = message
        self.span = span
        super().__init__(f"{span}: {message}" if span else message)


class LexError(AletheError):
    pass


class ParseError(AletheError):
    def __init__(self, message: str, span: Optional[Span] = None, expected: Tuple[str, ...] = ()):
        self.expected = tuple(expected)
        if expected:
            message = f"{message} (expected: {', '.join(expected)})"
        super().__init__(message, span)


class LayoutError(ParseError):
    """오프사이드 규칙 위반"""



# ---------------------------------------------------------------------------
# 문법
# ---------------------------------------------------------------------------

GRAMMAR = r"""
start: (_item | _NL)*
repl_segment: segment _NL?

_item: import_stmt | data_stmt | halting_stmt | rule_stmt | block_rule
_decl: import_stmt | data_stmt | halting_stmt | rule_stmt | sub_rule | halting_sub

import_stmt: IMPORT STRING _SEMI
data_stmt: DATA terms _SEMI
halting_stmt: BANG segment _SEMI
rule_stmt: _head _SEMI
block_rule: _head _COLON _decl* _line_end
_line_end: _NL block? | block_rule
block: _INDENT (_decl | block_rule | _NL)+ _DEDENT

sub_rule: segment DOTS
halting_sub: BANG segment DOTS

_head: segment | bag_head
bag_head: party_bag EQUAL party_bag
party_bag: LBRACE party (_SEMI party)* _RBRACE
party: term _COLON terms

segment: terms                                  -> plain_segment
       | terms EQUAL terms                      -> eq_segment
       | terms BACKTICK terms BACKTICK terms    -> infix_segment

terms: term*
term: WORD                                      -> word
    | STRING                                    -> string
    | HASHSTR                                   -> hash_string
    | CHAR                                      -> char
    | LPAR terms _RPAR                          -> composite
    | LSQB terms _RSQB                          -> list_term
    | LSQB terms DOTS term _RSQB                -> list_tail

WORD: /[^\s()\[\]{}:;.`"'][^\s()\[\]{}:;.`"]*/
STRING: /"(\\.|[^"\\\n])*"/
HASHSTR.2: /#"(\\.|[^"\\\n])*"/
CHAR.2: /'(\\\d+|\\.|[^\s\\])/
DOTS: /\.+/
EQUAL: "="
BANG: "!"
DATA: "data"
IMPORT: "import"
BACKTICK: "`"
LPAR: "("
_RPAR: ")"
LSQB: "["
_RSQB: "]"
LBRACE: "{"
_RBRACE: "}"
_COLON: ":"
_SEMI: ";"

// '-' 연속 뒤에 기호 문자가 오면 주석이 아니라 연산자 원자 (-->)
COMMENT: /--+(?![^\s\w()\[\]{}:;.`"])[^\n]*/
_NL.2: (/\r?\n[\t ]*/ | COMMENT)+

%ignore /[\t \f]+/
%declare _INDENT _DEDENT
"""


class AletheIndenter(Indenter):
    """줄바꿈 뒤 들여쓰기로 _INDENT/_DEDENT 생성. 괄호 안 줄바꿈은 무시"""
    NL_type = "_NL"
    OPEN_PAREN_types = ["LPAR", "LSQB", "LBRACE"]
    CLOSE_PAREN_types = ["_RPAR", "_RSQB", "_RBRACE"]
    INDENT_type = "_INDENT"
    DEDENT_type = "_DEDENT"
    tab_len = 8


_PRAGMA = re.compile(r"--+[ \t]*@ambiguous")


class _ScanState:
    """렉서 콜백이 모으는 값: 프라그마 주석 줄 번호, 마지막 줄바꿈 토큰"""

    def __init__(self):
        self.reset()

    def reset(self) -> None:
        self.pragma_lines: List[int] = []
        self.last_newline = None

    def newline(self, token):
        self.last_newline = token
        for m in _PRAGMA.finditer(token):
            self.pragma_lines.append(token.line + token.count("\n", 0, m.start()))
        return token


_scan = _ScanState()

_LARK = Lark(
    GRAMMAR,
    parser="lalr",
    lexer="contextual",
    postlex=AletheIndenter(),
    start=["start", "repl_segment"],
    lexer_callbacks={"_NL": _scan.newline},
)

# Indenter와 _scan이 파싱마다 상태를 가지므로 한 번에 하나씩
_PARSE_LOCK = threading.Lock()


def _token_span(tok, filename: str) -> Span:
    line = getattr(tok, "line", None) or 1
    col = getattr(tok, "column", None) or 1
    end = getattr(tok, "end_column", None) or col + 1
    if getattr(tok, "end_line", line) != line:
        end = col + 1
    return Span(filename, line, col, max(end, col + 1))


# ---------------------------------------------------------------------------
# 토큰 (진단/테스트용 평면 목록)
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Token:
    kind: str          # lparen rparen lbrack rbrack lbrace rbrace colon semi dots backtick string hashstr char word eof
    text: str
    span: Span
    value: Union[str, int, None] = None

    @property
    def line(self) -> int:
        return self.span.line

    @property
    def col(self) -> int:
        return self.span.col


_KINDS = {
    "LPAR": "lparen", "_RPAR": "rparen", "LSQB": "lbrack", "_RSQB": "rbrack",
    "LBRACE": "lbrace", "_RBRACE": "rbrace", "_COLON": "colon", "_SEMI": "semi",
    "DOTS": "dots", "BACKTICK": "backtick", "STRING": "string", "HASHSTR": "hashstr",
    "CHAR": "char", "WORD": "word", "EQUAL": "word", "BANG": "word", "DATA": "word", "IMPORT": "word",
}

# 오류 메시지에 쓰는 터미널 표시 이름
_TERMINAL_TEXT = {
    "LPAR": "'('", "_RPAR": "')'", "LSQB": "'['", "_RSQB": "']'", "LBRACE": "'{'",
    "_RBRACE": "'}'", "_COLON": "':'", "_SEMI": "';'", "DOTS": "'.'", "BACKTICK": "'`'",
    "EQUAL": "'='", "BANG": "'!'", "DATA": "'data'", "IMPORT": "'import'",
    "WORD": "term", "STRING": "term", "HASHSTR": "term", "CHAR": "term",
    "_NL": "line break", "_INDENT": "indented block", "_DEDENT": "end of block", "$END": "end of input",
}

_LAYOUT_TOKENS = ("_NL", "_INDENT", "_DEDENT")

_ESCAPE = re.compile(r"\\(\d+|.)")

# 문자열/문자 원자/줄 주석을 건너뛰며 {- -} 위치를 찾는다
_OUTSIDE_BLOCK = re.compile(
    r"""#?"(?:\\.|[^"\\\n])*"|(?<![^\s()\[\]{}:;.`"])'\\?.|--+(?![^\s\w()\[\]{}:;.`"])[^\n]*|\{-|-\}""")
_INSIDE_BLOCK = re.compile(r"\{-|-\}")


def _unescape(body: str, span: Optional[Span]) -> str:
    def decode(m: "re.Match") -> str:
        code = m.group(1)
        if code.isdigit():
            if len(code) > 7 or int(code) > sys.maxunicode:
                raise LexError(f"escape '\\{code}' is outside the Unicode range", span)
            return chr(int(code))
        if code in ESCAPES:
            return ESCAPES[code]
        raise LexError(f"unsupported escape '\\{code}'", span)

    return _ESCAPE.sub(decode, body)


def _position(source: str, offset: int) -> Tuple[int, int]:
    line = source.count("\n", 0, offset) + 1
    col = offset - (source.rfind("\n", 0, offset) + 1) + 1
    return line, col


def _blank_block_comments(source: str, filename: str) -> str:
    """중첩 가능한 {- -} 주석을 공백으로 지운다 (줄바꿈은 남겨 위치 보존)"""
    cuts = []
    pos = depth = start = 0
    while True:
        m = (_INSIDE_BLOCK if depth else _OUTSIDE_BLOCK).search(source, pos)
        if m is None:
            break
        pos = m.end()
        if m.group() == "{-":
            if depth == 0:
                start = m.start()
            depth += 1
        elif m.group() == "-}" and depth:
            depth -= 1
            if depth == 0:
                cuts.append((start, pos))
    if depth:
        line, col = _position(source, start)
        raise LexError("unterminated block comment", Span(filename, line, col, col + 2))
    if not cuts:
        return source
    out, last = [], 0
    for begin, end in cuts:
        out.append(source[last:begin])
        out.append(re.sub(r"[^\n]", " ", source[begin:end]))
        last = end
    out.append(source[last:])
    return "".join(out)


def _token_value(tok, span: Span):
    if tok.type == "DOTS":
        return len(tok)
    if tok.type == "STRING":
        return _unescape(tok[1:-1], span)
    if tok.type == "HASHSTR":
        return _unescape(tok[2:-1], span)
    if tok.type == "CHAR":
        body = tok[1:]
        return _unescape(body, span) if body.startswith("\\") else body
    return str(tok)


def _lex_error(e: UnexpectedCharacters, filename: str) -> LexError:
    span = Span(filename, e.line, e.column, e.column + 1)
    if e.char == '"':
        return LexError("unterminated string", span)
    if e.char == "'":
        return LexError("character atom needs a character", span)
    return LexError(f"unexpected character {e.char!r}", span)


def tokenize(source: str, filename: str = "<input>") -> List[Token]:
    """소스 텍스트를 토큰 목록으로 (줄바꿈/들여쓰기 토큰은 빼고, 마지막은 eof)"""
    text = _blank_block_comments(source, filename)
    tokens: List[Token] = []
    with _PARSE_LOCK:
        _scan.reset()
        try:
            for tok in _LARK.lex(text + "\n"):
                kind = _KINDS.get(tok.type)
                if kind is None:
                    continue
                span = _token_span(tok, filename)
                tokens.append(Token(kind, str(tok), span, _token_value(tok, span)))
        except UnexpectedCharacters as e:
            raise _lex_error(e, filename) from None
    line, col = _position(text, len(text))
    tokens.append(Token("eof", "", Span(filename, line, col, col + 1)))
    return tokens

# ---------------------------------------------------------------------------
# 표면 구문 트리
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SurfaceAtom:
    kind: str
    name: str
    tildes: int = 0
    span: Optional[Span] = field(default=None, compare=False)


@dataclass(frozen=True)
class SurfaceVar:
    name: str
    span: Optional[Span] = field(default=None, compare=False)


@dataclass(frozen=True)
class SurfaceComposite:
    items: Tuple["SurfaceTerm", ...]
    span: Optional[Span] = field(default=None, compare=False)


@dataclass(frozen=True)
class SurfaceNatural:
    value: int
    span: Optional[Span] = field(default=None, compare=False)


@dataclass(frozen=True)
class SurfaceString:
    text: str
    span: Optional[Span] = field(default=None, compare=False)


@dataclass(frozen=True)
class SurfaceList:
    items: Tuple["SurfaceTerm", ...]
    tail: Optional["SurfaceTerm"] = None
    span: Optional[Span] = field(default=None, compare=False)


@dataclass(frozen=True)
class SurfaceBlank:
    span: Optional[Span] = field(default=None, compare=False)


SurfaceTerm = Union[SurfaceAtom, SurfaceVar, SurfaceComposite, SurfaceNatural,
                    SurfaceString, SurfaceList, SurfaceBlank]


@dataclass(frozen=True)
class Relation:
    """`lhs = rhs`, `lhs \\`f\\` rhs`, 또는 기호 하나를 중위로 쓴 `lhs + rhs`"""
    lhs: Tuple[SurfaceTerm, ...]
    rhs: Tuple[SurfaceTerm, ...]
    infix: Optional[Tuple[SurfaceTerm, ...]] = None
    style: str = "eq"  # eq | backtick | bare
    span: Optional[Span] = field(default=None, compare=False)


@dataclass(frozen=True)
class SurfaceParty:
    context: SurfaceTerm
    body: Tuple[SurfaceTerm, ...]
    span: Optional[Span] = field(default=None, compare=False)


@dataclass(frozen=True)
class PartyBagHead:
    lhs: Tuple[SurfaceParty, ...]
    rhs: Tuple[SurfaceParty, ...]
    span: Optional[Span] = field(default=None, compare=False)


RuleHead = Union[Relation, PartyBagHead]


@dataclass(frozen=True)
class SubRelation:
    relation: Relation
    halting: bool = False
    cost: int = 1
    span: Optional[Span] = field(default=None, compare=False)


@dataclass(frozen=True)
class SubParty:
    party: SurfaceParty
    cost: int = 1
    span: Optional[Span] = field(default=None, compare=False)


@dataclass(frozen=True)
class NestedDefinition:
    statement: "SurfaceStatement"
    span: Optional[Span] = field(default=None, compare=False)


SurfaceDeclaration = Union[SubRelation, SubParty, NestedDefinition]


@dataclass(frozen=True)
class RuleStatement:
    head: RuleHead
    declarations: Tuple[SurfaceDeclaration, ...] = ()
    pragma: bool = False
    span: Optional[Span] = field(default=None, compare=False)


@dataclass(frozen=True)
class HaltingStatement:
    patterns: Tuple[SurfaceTerm, ...] = ()
    relation: Optional[Relation] = None
    pragma: bool = False
    span: Optional[Span] = field(default=None, compare=False)


@dataclass(frozen=True)
class DataStatement:
    patterns: Tuple[SurfaceTerm, ...]
    pragma: bool = False
    span: Optional[Span] = field(default=None, compare=False)


@dataclass(frozen=True)
class ImportStatement:
    path: str
    span: Optional[Span] = field(default=None, compare=False)


SurfaceStatement = Union[RuleStatement, HaltingStatement, DataStatement, ImportStatement]


def is_bare_symbol(term: SurfaceTerm) -> bool:
    """백틱 없이 중위 관계로 읽힐 수 있는 원자인지"""
    if not isinstance(term, SurfaceAtom) or term.kind != ATOM_PLAIN or term.tildes:
        return False
    if not term.name or term.name == "_":
        return False
    return unicodedata.category(term.name[0])[0] not in ("L", "N")


def classify_word(word: str, span: Optional[Span] = None) -> SurfaceTerm:
    if word == "_":
        return SurfaceBlank(span)
    if word.isdigit() and word.isascii():
        return SurfaceNatural(int(word), span)
    if word.startswith("~"):
        stripped = word.lstrip("~")
        return SurfaceAtom(ATOM_PLAIN, stripped, len(word) - len(stripped), span)
    if word.startswith("#") and len(word) > 1:
        return SurfaceAtom(ATOM_HASH, word[1:], 0, span)
    if unicodedata.category(word[0]) == "Ll":
        return SurfaceVar(word, span)
    return SurfaceAtom(ATOM_PLAIN, word, 0, span)



# ---------------------------------------------------------------------------
# 파서 (lark 트리 → 표면 구문)
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class _Segment:
    """관계 후보 구간. style: plain | eq | backtick"""
    lhs: Tuple[SurfaceTerm, ...]
    style: str = "plain"
    infix: Tuple[SurfaceTerm, ...] = ()
    rhs: Tuple[SurfaceTerm, ...] = ()
    span: Optional[Span] = None


@dataclass(frozen=True)
class _PendingSub:
    """`segment .` 선언. 파티 선언인지 하위 규칙인지는 바깥 규칙에서 정한다"""
    segment: _Segment
    cost: int


@dataclass(frozen=True)
class _Block:
    items: tuple


def _as_relation(seg: _Segment, require: bool, allow_bare: bool = True) -> Optional[Relation]:
    if seg.style == "eq":
        return Relation(seg.lhs, seg.rhs, None, "eq", seg.span)
    if seg.style == "backtick":
        return Relation(seg.lhs, seg.rhs, seg.infix, "backtick", seg.span)
    terms = seg.lhs
    if allow_bare:
        candidates = [i for i, term in enumerate(terms) if is_bare_symbol(term)]
        if len(candidates) > 1:
            names = ", ".join(terms[i].name for i in candidates)
            raise ParseError(f"ambiguous bare infix symbol ({names}); use backticks or '#'", seg.span)
        if len(candidates) == 1:
            i = candidates[0]
            return Relation(terms[:i], terms[i + 1:], (terms[i],), "bare", seg.span)
    if require:
        raise ParseError("expected a relation", seg.span, ("'='", "'`'", "infix symbol"))
    return None


def _is_party_context(head) -> bool:
    return (isinstance(head, _Segment) and head.style == "plain" and len(head.lhs) == 1
            and not is_bare_symbol(head.lhs[0]))


def _declaration(item) -> SurfaceDeclaration:
    if isinstance(item, _PendingSub):
        relation = _as_relation(item.segment, require=True)
        return SubRelation(relation, False, item.cost, item.segment.span)
    if isinstance(item, (SubRelation, SubParty)):
        return item
    return NestedDefinition(item, item.span)


class SurfaceBuilder(Transformer):
    """lark 파스 트리를 SurfaceStatement 로 바꾼다"""

    def __init__(self, filename: str = "<input>", blanks: Tuple[str, ...] = ("_",)):
        super().__init__()
        self.filename = filename
        self.blanks = blanks

    def _span(self, tok) -> Span:
        return _token_span(tok, self.filename)

    # -- 항 ---------------------------------------------------------------
    @v_args(inline=True)
    def word(self, tok):
        span = self._span(tok)
        if str(tok) in self.blanks:
            return SurfaceBlank(span)
        return classify_word(str(tok), span)

    @v_args(inline=True)
    def string(self, tok):
        span = self._span(tok)
        return SurfaceString(_token_value(tok, span), span)

    @v_args(inline=True)
    def hash_string(self, tok):
        span = self._span(tok)
        return SurfaceAtom(ATOM_ESCAPED, _token_value(tok, span), 0, span)

    @v_args(inline=True)
    def char(self, tok):
        span = self._span(tok)
        return SurfaceAtom(ATOM_CHAR, _token_value(tok, span), 0, span)

    @v_args(inline=True)
    def composite(self, open_, items):
        return SurfaceComposite(items, self._span(open_))

    @v_args(inline=True)
    def list_term(self, open_, items):
        return SurfaceList(items, None, self._span(open_))

    @v_args(inline=True)
    def list_tail(self, open_, items, dots, tail):
        if len(dots) != 1 or not items:
            raise ParseError("malformed list tail", self._span(dots), ("term", "']'"))
        return SurfaceList(items, tail, self._span(open_))

    def terms(self, children):
        return tuple(children)

    # -- 관계 -------------------------------------------------------------
    @v_args(inline=True)
    def plain_segment(self, terms):
        return _Segment(terms, span=terms[0].span if terms else None)

    @v_args(inline=True)
    def eq_segment(self, lhs, eq, rhs):
        return _Segment(lhs, "eq", (), rhs, lhs[0].span if lhs else self._span(eq))

    @v_args(inline=True)
    def infix_segment(self, lhs, open_, infix, close, rhs):
        if not infix:
            raise ParseError("empty infix term", self._span(close), ("term",))
        return _Segment(lhs, "backtick", infix, rhs, lhs[0].span if lhs else self._span(open_))

    @v_args(inline=True)
    def repl_segment(self, segment):
        return segment

    # -- 파티 -------------------------------------------------------------
    @v_args(inline=True)
    def party(self, context, body):
        return SurfaceParty(context, body, context.span)

    def party_bag(self, children):
        return tuple(children[1:])

    @v_args(inline=True)
    def bag_head(self, lhs, eq, rhs):
        return PartyBagHead(lhs, rhs, lhs[0].span)

    # -- 문장 -------------------------------------------------------------
    def _head(self, head) -> RuleHead:
        if isinstance(head, PartyBagHead):
            return head
        return _as_relation(head, require=True)

    @v_args(inline=True)
    def import_stmt(self, keyword, path):
        span = self._span(keyword)
        return ImportStatement(_token_value(path, span), span)

    @v_args(inline=True)
    def data_stmt(self, keyword, terms):
        span = self._span(keyword)
        if not terms:
            raise ParseError("empty data declaration", span, ("pattern",))
        return DataStatement(terms, False, span)

    @v_args(inline=True)
    def halting_stmt(self, bang, seg):
        span = self._span(bang)
        relation = _as_relation(seg, require=False, allow_bare=False)
        if relation is not None:
            return HaltingStatement((), relation, False, span)
        if not seg.lhs:
            raise ParseError("empty halting pattern", span, ("pattern",))
        return HaltingStatement(seg.lhs, None, False, span)

    @v_args(inline=True)
    def rule_stmt(self, head):
        return RuleStatement(self._head(head), (), False, head.span)

    @v_args(inline=True)
    def sub_rule(self, seg, dots):
        return _PendingSub(seg, len(dots))

    @v_args(inline=True)
    def halting_sub(self, bang, seg, dots):
        span = self._span(bang)
        relation = _as_relation(seg, require=False, allow_bare=False)
        if relation is None:
            raise ParseError("halting sub-rule needs a relation", span, ("'='", "'`'"))
        return SubRelation(relation, True, len(dots), span)

    def block(self, children):
        return _Block(tuple(children))

    def block_rule(self, children):
        head, items = children[0], []
        for child in children[1:]:
            items.extend(child.items if isinstance(child, _Block) else (child,))
        if not items:
            col = head.span.col if head.span else 1
            raise LayoutError(
                f"rule head ending with ':' needs declarations on the same line or indented past column {col}",
                head.span)
        if _is_party_context(head) and len(items) == 1 \
                and isinstance(items[0], _PendingSub) and items[0].segment.style == "plain":
            # 파티 선언 `ctx: body .`
            sub = items[0]
            party = SurfaceParty(head.lhs[0], sub.segment.lhs, head.span)
            return SubParty(party, sub.cost, head.span)
        return RuleStatement(self._head(head), tuple(_declaration(i) for i in items), False, head.span)

    def start(self, children):
        for stmt in children:
            if isinstance(stmt, SubParty):
                raise ParseError("party declaration outside a rule", stmt.span, ("'='", "'`'"))
        return list(children)


def _describe(tok) -> str:
    if tok.type in ("WORD", "EQUAL", "BANG", "DATA", "IMPORT"):
        return f"'{tok}'"
    return _TERMINAL_TEXT.get(tok.type, repr(str(tok)))


def _expected(names) -> Tuple[str, ...]:
    return tuple(sorted({_TERMINAL_TEXT.get(name, name) for name in names}))


def _layout_error(tok, filename: str, expected: Tuple[str, ...]) -> LayoutError:
    line = getattr(tok, "end_line", None) or getattr(tok, "line", None) or 1
    col = len(str(tok).rsplit("\n", 1)[-1].expandtabs(AletheIndenter.tab_len)) + 1
    span = Span(filename, line, col, col + 1)
    if tok.type == "_INDENT":
        return LayoutError(f"unexpected indentation to column {col}", span, expected)
    if tok.type == "_DEDENT":
        return LayoutError(f"block closes at column {col} inside an unfinished statement", span, expected)
    return LayoutError(f"line ends inside a statement; the next line starts at column {col}", span, expected)


def _parse_tree(text: str, start: str, filename: str):
    """lark 파싱 + 예외 변환. 반환: (트리, 프라그마 줄 목록)"""
    with _PARSE_LOCK:
        _scan.reset()
        try:
            tree = _LARK.parse(text, start=start)
        except UnexpectedCharacters as e:
            raise _lex_error(e, filename) from None
        except UnexpectedToken as e:
            tok = e.token
            expected = _expected(e.expected)
            if tok.type in _LAYOUT_TOKENS:
                raise _layout_error(tok, filename, expected) from None
            span = _token_span(tok, filename)
            if tok.type == "DOTS" and ("_SEMI" in e.expected or "_COLON" in e.expected):
                raise LayoutError(
                    f"declaration at column {span.col} must be indented past its rule head", span) from None
            raise ParseError(f"unexpected {_describe(tok)}", span, expected) from None
        except UnexpectedEOF as e:
            raise ParseError("unexpected end of input", None, _expected(e.expected)) from None
        except UnexpectedInput as e:
            raise ParseError(str(e).splitlines()[0], None) from None
        except DedentError:
            tok = _scan.last_newline
            line = getattr(tok, "end_line", None) or 1
            col = len(str(tok or "").rsplit("\n", 1)[-1].expandtabs(AletheIndenter.tab_len)) + 1
            raise LayoutError(f"dedent to column {col} does not match any enclosing block",
                              Span(filename, line, col, col + 1)) from None
        return tree, list(_scan.pragma_lines)


def _build(tree, builder: SurfaceBuilder):
    try:
        return builder.transform(tree)
    except VisitError as e:
        if isinstance(e.orig_exc, AletheError):
            raise e.orig_exc from None
        raise


def _attach_pragmas(statements: List[SurfaceStatement], pragma_lines: List[int]) -> List[SurfaceStatement]:
    """`-- @ambiguous` 줄은 그 줄 이후 처음 시작하는 문장(또는 선언)에 붙는다"""
    pending = sorted(pragma_lines)

    def take(span: Optional[Span]) -> bool:
        nonlocal pending
        if span is None or not pending:
            return False
        hit = [ln for ln in pending if ln <= span.line]
        pending = pending[len(hit):]
        return bool(hit)

    def visit(stmt):
        pragma = take(stmt.span)
        if isinstance(stmt, RuleStatement):
            return replace(stmt, pragma=pragma, declarations=tuple(visit_decl(d) for d in stmt.declarations))
        if isinstance(stmt, (HaltingStatement, DataStatement)):
            return replace(stmt, pragma=pragma)
        return stmt

    def visit_decl(decl):
        if isinstance(decl, NestedDefinition):
            return replace(decl, statement=visit(decl.statement))
        take(decl.span)
        return decl

    return [visit(stmt) for stmt in statements]


def parse_source(source: str, filename: str = "<input>") -> List[SurfaceStatement]:
    """소스 텍스트 → 표면 문장 목록 (프라그마 포함)"""
    text = _blank_block_comments(source, filename) + "\n"
    tree, pragma_lines = _parse_tree(text, "start", filename)
    return _attach_pragmas(_build(tree, SurfaceBuilder(filename)), pragma_lines)

# ---------------------------------------------------------------------------
# REPL 명령
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Quit:
    pass


@dataclass(frozen=True)
class Load:
    files: Tuple[str, ...]


@dataclass(frozen=True)
class Reload:
    pass


@dataclass(frozen=True)
class ListVariables:
    pass


@dataclass(frozen=True)
class PrintProgram:
    pass


@dataclass(frozen=True)
class ShowGarbage:
    pass


@dataclass(frozen=True)
class Help:
    pass


@dataclass(frozen=True)
class Evaluate:
    terms: Tuple[SurfaceTerm, ...]


@dataclass(frozen=True)
class RelationQuery:
    direction: str  # forward | backward
    lhs: Tuple[SurfaceTerm, ...]
    infix: Tuple[SurfaceTerm, ...]
    rhs: Tuple[SurfaceTerm, ...]


@dataclass(frozen=True)
class AddStatement:
    source: str


ReplCommand = Union[Quit, Load, Reload, ListVariables, PrintProgram, ShowGarbage, Help,
                    Evaluate, RelationQuery, AddStatement]

_DIRECTIVES = {":q": Quit, ":r": Reload, ":v": ListVariables, ":p": PrintProgram,
               ":g": ShowGarbage, ":h": Help}

BLANK_GLYPHS = ("_", "–")




def _repl_segment(text: str) -> _Segment:
    # REPL에서는 en dash도 빈칸(unit)으로 받는다
    tree, _ = _parse_tree(_blank_block_comments(text, "<repl>") + "\n", "repl_segment", "<repl>")
    return _build(tree, SurfaceBuilder("<repl>", BLANK_GLYPHS))


def parse_repl_line(text: str) -> Optional[ReplCommand]:
    """REPL 입력 한 줄 해석. 빈 줄과 주석만 있는 줄은 None"""
    line = text.strip()
    if not line or (line.startswith("--") and not tokenize(line, "<repl>")[:-1]):
        return None
    if line.startswith(":"):
        word, _, rest = line.partition(" ")
        if word == ":l":
            files = tuple(rest.split())
            if not files:
                raise ParseError(":l needs at least one file", None, ("file",))
            return Load(files)
        if word in _DIRECTIVES:
            if rest.strip():
                raise ParseError(f"{word} takes no arguments")
            return _DIRECTIVES[word]()
        raise ParseError(f"unknown directive {word}", None, tuple(sorted(list(_DIRECTIVES) + [":l"])))
    marker, _, rest = line.partition(" ")
    if marker == "|":
        seg = _repl_segment(rest)
        if seg.style != "plain":
            raise ParseError("'|' takes a halting term, not a relation")
        if not seg.lhs:
            raise ParseError("'|' needs a term", None, ("term",))
        return Evaluate(seg.lhs)
    if marker in (">", "<"):
        seg = _repl_segment(rest)
        if seg.style != "backtick":
            raise ParseError(f"'{marker}' takes a relation of the form lhs `f` rhs", None, ("'`'",))
        direction = "forward" if marker == ">" else "backward"
        return RelationQuery(direction, seg.lhs, seg.infix, seg.rhs)
    return AddStatement(line)

# ---------------------------------------------------------------------------
# 표면 구문 렌더링
# ---------------------------------------------------------------------------

def _escape_text(text: str, quote: str) -> str:
    out = []
    for ch in text:
        if ch == "\\":
            out.append("\\\\")
        elif ch == quote:
            out.append("\\" + quote)
        elif ch == "\n":
            out.append("\\n")
        elif ch == "\t":
            out.append("\\t")
        elif not ch.isprintable():
            out.append(f"\\{ord(ch)}")
        else:
            out.append(ch)
    return "".join(out)


def render_surface_term(term: SurfaceTerm) -> str:
    if isinstance(term, SurfaceAtom):
        if term.kind == ATOM_ESCAPED:
            return '#"' + _escape_text(term.name, '"') + '"'
        if term.kind == ATOM_HASH:
            return "#" + term.name
        if term.kind == ATOM_CHAR:
            if term.name.isspace() and term.name not in "\n\t":
                return f"'\\{ord(term.name)}"
            return "'" + _escape_text(term.name, "'")
        return "~" * term.tildes + term.name
    if isinstance(term, SurfaceVar):
        return term.name
    if isinstance(term, SurfaceBlank):
        return "_"
    if isinstance(term, SurfaceNatural):
        return str(term.value)
    if isinstance(term, SurfaceString):
        return '"' + _escape_text(term.text, '"') + '"'
    if isinstance(term, SurfaceComposite):
        return "(" + " ".join(render_surface_term(t) for t in term.items) + ")"
    if isinstance(term, SurfaceList):
        inner = " ".join(render_surface_term(t) for t in term.items)
        if term.tail is not None:
            inner += " . " + render_surface_term(term.tail)
        return "[" + inner + "]"
    raise TypeError(f"not a surface term: {term!r}")


def _terms_text(terms) -> str:
    return " ".join(render_surface_term(t) for t in terms)


def render_relation(rel: Relation) -> str:
    parts = [_terms_text(rel.lhs)] if rel.lhs else []
    if rel.style == "eq":
        parts.append("=")
    elif rel.style == "bare":
        parts.append(_terms_text(rel.infix))
    else:
        parts.append("`" + _terms_text(rel.infix) + "`")
    if rel.rhs:
        parts.append(_terms_text(rel.rhs))
    return " ".join(parts)


def _render_party(party: SurfaceParty) -> str:
    body = _terms_text(party.body)
    return f"{render_surface_term(party.context)}: {body}".rstrip()


def _render_head(head: RuleHead) -> str:
    if isinstance(head, PartyBagHead):
        lhs = "; ".join(_render_party(p) for p in head.lhs)
        rhs = "; ".join(_render_party(p) for p in head.rhs)
        return "{" + lhs + "} = {" + rhs + "}"
    return render_relation(head)


def _render_statement(stmt: SurfaceStatement, indent: int) -> List[str]:
    pad = " " * indent
    lines = []
    if getattr(stmt, "pragma", False):
        lines.append(pad + "-- @ambiguous")
    if isinstance(stmt, ImportStatement):
        lines.append(pad + 'import "' + _escape_text(stmt.path, '"') + '";')
    elif isinstance(stmt, DataStatement):
        lines.append(pad + "data " + _terms_text(stmt.patterns) + ";")
    elif isinstance(stmt, HaltingStatement):
        body = render_relation(stmt.relation) if stmt.relation else _terms_text(stmt.patterns)
        lines.append(pad + "! " + body + ";")
    elif isinstance(stmt, RuleStatement):
        head = _render_head(stmt.head)
        if not stmt.declarations:
            lines.append(pad + head + ";")
        else:
            lines.append(pad + head + ":")
            for decl in stmt.declarations:
                lines.extend(_render_declaration(decl, indent + 4))
    return lines


def _render_declaration(decl: SurfaceDeclaration, indent: int) -> List[str]:
    pad = " " * indent
    if isinstance(decl, SubRelation):
        bang = "! " if decl.halting else ""
        return [pad + bang + render_relation(decl.relation) + "." * decl.cost]
    if isinstance(decl, SubParty):
        return [pad + _render_party(decl.party) + "." * decl.cost]
    return _render_statement(decl.statement, indent)


def render_surface(statements: List[SurfaceStatement]) -> str:
    """표면 트리 → alethe 텍스트. 다시 파싱하면 같은 트리가 나온다."""
    lines: List[str] = []
    for stmt in statements:
        lines.extend(_render_statement(stmt, 0))
    return "\n".join(lines) + ("\n" if lines else "")
