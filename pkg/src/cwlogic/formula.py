"""Formula language for knowing-whether logics.

Formulas are immutable trees.  Disjunction and biconditional are not nodes:
the parser expands them (``a | b`` becomes ``~(~a & ~b)`` and ``a <-> b``
becomes ``(a -> b) & (b -> a)``) and :func:`render` folds those shapes back.
"""

from __future__ import annotations

import random
import re
from collections import deque
from dataclasses import dataclass
from typing import Iterable, Iterator, NamedTuple, Optional, Sequence

__all__ = [
    "Formula", "Atom", "Not", "And", "Implies", "K", "Kw", "E", "C", "Cw",
    "Derived", "Meta", "DERIVED_OPS", "INFINITARY_OPS",
    "Or", "Iff", "conj", "disj", "kw_seq", "kw_power",
    "FormulaSyntaxError", "UnknownAgentError", "UnsupportedNodeError",
    "parse", "render", "modal_depth", "desugar", "Desugared",
    "closure", "is_closed", "Closure", "subformulas", "atoms_of", "agents_of",
    "size", "random_formula",
]

DERIVED_OPS = ("Ew1", "Ew2", "Cw1", "Cw21", "Cw22", "Cw31", "Cw32", "Cw4", "Cw5")
INFINITARY_OPS = frozenset({"Cw31", "Cw32", "Cw5"})

AGENT_RE = re.compile(r"[a-z0-9_]+\Z")


class Formula:
    """Base class of all formula nodes."""

    __slots__ = ()

    def __str__(self) -> str:
        return render(self)


@dataclass(frozen=True, slots=True)
class Atom(Formula):
    name: str


@dataclass(frozen=True, slots=True)
class Not(Formula):
    sub: Formula


@dataclass(frozen=True, slots=True)
class And(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True, slots=True)
class Implies(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True, slots=True)
class K(Formula):
    agent: str
    sub: Formula


@dataclass(frozen=True, slots=True)
class Kw(Formula):
    agent: str
    sub: Formula


@dataclass(frozen=True, slots=True)
class E(Formula):
    sub: Formula


@dataclass(frozen=True, slots=True)
class C(Formula):
    sub: Formula


@dataclass(frozen=True, slots=True)
class Cw(Formula):
    """Primitive commonly-knowing-whether (uniformity along reachability)."""

    sub: Formula


@dataclass(frozen=True, slots=True)
class Derived(Formula):
    """One of the group operators in DERIVED_OPS; quantifies over the ambient agents."""

    op: str
    sub: Formula

    def __post_init__(self):
        if self.op not in DERIVED_OPS:
            raise ValueError(f"unknown derived operator {self.op!r}")


@dataclass(frozen=True, slots=True)
class Meta(Formula):
    """Schema metavariable; only appears in axiom templates."""

    name: str


def Or(a: Formula, b: Formula) -> Formula:
    return Not(And(Not(a), Not(b)))


def Iff(a: Formula, b: Formula) -> Formula:
    return And(Implies(a, b), Implies(b, a))


def conj(items: Iterable[Formula]) -> Formula:
    """Left-nested conjunction, the shape the parser gives to ``a & b & c``."""
    items = list(items)
    if not items:
        raise ValueError("empty conjunction")
    out = items[0]
    for f in items[1:]:
        out = And(out, f)
    return out


def disj(items: Iterable[Formula]) -> Formula:
    items = list(items)
    if not items:
        raise ValueError("empty disjunction")
    out = items[0]
    for f in items[1:]:
        out = Or(out, f)
    return out


def kw_seq(agents: Sequence[str], f: Formula) -> Formula:
    """Kw_{s1} Kw_{s2} ... Kw_{sn} f for the agent sequence s."""
    for a in reversed(agents):
        f = Kw(a, f)
    return f


def kw_power(agent: str, n: int, f: Formula) -> Formula:
    return kw_seq([agent] * n, f)


def _as_or(f: Formula):
    if isinstance(f, Not) and isinstance(f.sub, And):
        a, b = f.sub.left, f.sub.right
        if isinstance(a, Not) and isinstance(b, Not):
            return a.sub, b.sub
    return None


def _as_iff(f: Formula):
    if isinstance(f, And) and isinstance(f.left, Implies) and isinstance(f.right, Implies):
        l, r = f.left, f.right
        if l.left == r.right and l.right == r.left:
            return l.left, l.right
    return None


# ---------------------------------------------------------------------------
# parsing

class FormulaSyntaxError(ValueError):
    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} at byte {offset}")
        self.offset = offset


class UnknownAgentError(ValueError):
    pass


class UnsupportedNodeError(ValueError):
    pass


_TOKEN_RE = re.compile(
    r"\s*(?:(?P<op><->|->|[~&|()\[\]])|(?P<modal>[A-Z][A-Za-z0-9]*)|(?P<ident>[a-z0-9_]+))"
)
_PREFIX = {"E": E, "C": C, "Cw": Cw}


class _Parser:
    def __init__(self, text: str, agents: Optional[Iterable[str]]):
        self.text = text
        self.agents = None if agents is None else set(agents)
        self.tokens = []
        pos = 0
        while True:
            m = _TOKEN_RE.match(text, pos)
            if m is None or m.end() == pos:
                rest = text[pos:]
                if rest.strip() == "":
                    break
                offset = pos + (len(rest) - len(rest.lstrip()))
                raise FormulaSyntaxError(f"unexpected character {text[offset]!r}", self._byte(offset))
            kind = m.lastgroup
            self.tokens.append((kind, m.group(kind), m.start(kind)))
            pos = m.end()
        self.i = 0

    def _byte(self, offset: int) -> int:
        return len(self.text[:offset].encode("utf-8"))

    def peek(self):
        return self.tokens[self.i] if self.i < len(self.tokens) else (None, None, len(self.text))

    def take(self):
        tok = self.peek()
        self.i += 1
        return tok

    def expect(self, value: str):
        kind, val, off = self.take()
        if val != value:
            found = "end of input" if kind is None else repr(val)
            raise FormulaSyntaxError(f"expected {value!r}, found {found}", self._byte(off))

    def parse(self) -> Formula:
        f = self.iff()
        kind, val, off = self.peek()
        if kind is not None:
            raise FormulaSyntaxError(f"unexpected token {val!r}", self._byte(off))
        return f

    def iff(self):
        f = self.imp()
        while self.peek()[1] == "<->":
            self.take()
            f = Iff(f, self.imp())
        return f

    def imp(self):
        f = self.disj()
        if self.peek()[1] == "->":
            self.take()
            return Implies(f, self.imp())
        return f

    def disj(self):
        f = self.conj()
        while self.peek()[1] == "|":
            self.take()
            f = Or(f, self.conj())
        return f

    def conj(self):
        f = self.unary()
        while self.peek()[1] == "&":
            self.take()
            f = And(f, self.unary())
        return f

    def agent(self) -> str:
        self.expect("[")
        kind, val, off = self.take()
        if kind != "ident":
            raise FormulaSyntaxError("expected agent name", self._byte(off))
        if self.agents is not None and val not in self.agents:
            raise UnknownAgentError(f"unknown agent {val!r} at byte {self._byte(off)}")
        self.expect("]")
        return val

    def unary(self):
        kind, val, off = self.take()
        if val == "~":
            return Not(self.unary())
        if val == "(":
            f = self.iff()
            self.expect(")")
            return f
        if kind == "modal":
            if val == "K":
                a = self.agent()
                return K(a, self.unary())
            if val == "Kw":
                a = self.agent()
                return Kw(a, self.unary())
            if val in _PREFIX:
                return _PREFIX[val](self.unary())
            if val in DERIVED_OPS:
                return Derived(val, self.unary())
            raise FormulaSyntaxError(f"unknown operator {val!r}", self._byte(off))
        if kind == "ident":
            if not val[0].isalpha():
                raise FormulaSyntaxError(f"atom must start with a letter: {val!r}", self._byte(off))
            return Atom(val)
        found = "end of input" if kind is None else repr(val)
        raise FormulaSyntaxError(f"expected a formula, found {found}", self._byte(off))


def parse(text: str, agents: Optional[Iterable[str]] = None) -> Formula:
    """Parse ASCII concrete syntax.

    When ``agents`` is given, any ``K[x]``/``Kw[x]`` naming an agent outside it
    raises :class:`UnknownAgentError`.
    """
    return _Parser(text, agents).parse()


# ---------------------------------------------------------------------------
# rendering

_IFF, _IMP, _OR, _AND, _UNARY = 1, 2, 3, 4, 5


def _level(f: Formula) -> int:
    if _as_iff(f) is not None:
        return _IFF
    if isinstance(f, Implies):
        return _IMP
    if _as_or(f) is not None:
        return _OR
    if isinstance(f, And):
        return _AND
    return _UNARY


def _wrap(f: Formula, need: bool) -> str:
    s = _render(f)
    return f"({s})" if need else s


def _prefix(op: str, sub: Formula) -> str:
    if _level(sub) < _UNARY:
        return f"{op}({_render(sub)})"
    return f"{op} {_render(sub)}"


def _render(f: Formula) -> str:
    pair = _as_iff(f)
    if pair is not None:
        a, b = pair
        return f"{_wrap(a, _level(a) < _IFF)} <-> {_wrap(b, _level(b) <= _IFF)}"
    pair = _as_or(f)
    if pair is not None:
        a, b = pair
        return f"{_wrap(a, _level(a) < _OR)} | {_wrap(b, _level(b) <= _OR)}"
    if isinstance(f, Atom):
        return f.name
    if isinstance(f, Meta):
        return f"<{f.name}>"
    if isinstance(f, Not):
        return "~" + _wrap(f.sub, _level(f.sub) < _UNARY)
    if isinstance(f, And):
        return f"{_wrap(f.left, _level(f.left) < _AND)} & {_wrap(f.right, _level(f.right) <= _AND)}"
    if isinstance(f, Implies):
        return f"{_wrap(f.left, _level(f.left) <= _IMP)} -> {_wrap(f.right, _level(f.right) < _IMP)}"
    if isinstance(f, K):
        return _prefix(f"K[{f.agent}]", f.sub)
    if isinstance(f, Kw):
        return _prefix(f"Kw[{f.agent}]", f.sub)
    if isinstance(f, E):
        return _prefix("E", f.sub)
    if isinstance(f, C):
        return _prefix("C", f.sub)
    if isinstance(f, Cw):
        return _prefix("Cw", f.sub)
    if isinstance(f, Derived):
        return _prefix(f.op, f.sub)
    raise TypeError(f"not a formula: {f!r}")


def render(f: Formula) -> str:
    """Inverse of :func:`parse` up to whitespace and redundant parentheses."""
    return _render(f)


# ---------------------------------------------------------------------------
# structural measures

def children(f: Formula) -> tuple:
    if isinstance(f, (And, Implies)):
        return (f.left, f.right)
    if isinstance(f, (Atom, Meta)):
        return ()
    return (f.sub,)


def subformulas(f: Formula) -> Iterator[Formula]:
    """All subformulas including f itself (pre-order, repeats possible)."""
    stack = [f]
    while stack:
        g = stack.pop()
        yield g
        stack.extend(reversed(children(g)))


def atoms_of(f: Formula) -> list[str]:
    return sorted({g.name for g in subformulas(f) if isinstance(g, Atom)})


def agents_of(f: Formula) -> list[str]:
    return sorted({g.agent for g in subformulas(f) if isinstance(g, (K, Kw))})


def size(f: Formula) -> int:
    return sum(1 for _ in subformulas(f))


def modal_depth(f: Formula) -> int:
    """Depth of a common-knowledge-language formula, counting atoms as 1."""
    if isinstance(f, Atom):
        return 1
    if isinstance(f, Not):
        return modal_depth(f.sub)
    if isinstance(f, (And, Implies)):
        return max(modal_depth(f.left), modal_depth(f.right))
    if isinstance(f, (K, E, C)):
        return modal_depth(f.sub) + 1
    raise UnsupportedNodeError(f"modal depth undefined for {type(f).__name__} node")


# ---------------------------------------------------------------------------
# desugaring

class Desugared(NamedTuple):
    formula: Formula
    residual_infinitary: bool


def desugar(f: Formula, agents: Sequence[str]) -> Desugared:
    """Expand the finitely definable group operators.

    Cw31, Cw32 and Cw5 have no finite expansion; they stay in place (with
    their bodies expanded) and ``residual_infinitary`` is set.
    """
    agents = list(agents)
    if not agents:
        raise ValueError("agent set must be nonempty")
    residual = False

    def ew1(g):
        return Or(E(g), E(Not(g)))

    def ew2(g):
        return conj(Kw(a, g) for a in agents)

    def go(g: Formula) -> Formula:
        nonlocal residual
        if isinstance(g, (Atom, Meta)):
            return g
        if isinstance(g, Not):
            return Not(go(g.sub))
        if isinstance(g, And):
            return And(go(g.left), go(g.right))
        if isinstance(g, Implies):
            return Implies(go(g.left), go(g.right))
        if isinstance(g, (K, Kw)):
            return type(g)(g.agent, go(g.sub))
        if isinstance(g, (E, C, Cw)):
            return type(g)(go(g.sub))
        if isinstance(g, Derived):
            b = go(g.sub)
            if g.op == "Ew1":
                return ew1(b)
            if g.op == "Ew2":
                return ew2(b)
            if g.op == "Cw1":
                return Or(C(b), C(Not(b)))
            if g.op == "Cw21":
                return C(ew1(b))
            if g.op == "Cw22":
                return C(ew2(b))
            if g.op == "Cw4":
                return conj(Or(C(Kw(a, b)), C(Not(Kw(a, b)))) for a in agents)
            residual = True
            return Derived(g.op, b)
        raise TypeError(f"not a formula: {g!r}")

    out = go(f)
    return Desugared(out, residual)


# ---------------------------------------------------------------------------
# closure

class Closure(NamedTuple):
    formulas: frozenset
    truncated: bool


_CLOSURE_NODES = (Atom, Not, And, Implies, Kw, Cw)


def _check_closure_language(f: Formula) -> None:
    for g in subformulas(f):
        if not isinstance(g, _CLOSURE_NODES):
            raise UnsupportedNodeError(
                f"closure is defined on the Kw/Cw language; found {type(g).__name__}")


def closure(f: Formula, agents: Sequence[str], cap: int = 10_000) -> Closure:
    """Least set containing f closed under the seven closure clauses.

    The clauses can feed each other forever (clause 7 produces new
    non-conditional Kw bodies for clause 4 to pair up), so generation stops
    once more than ``cap`` formulas exist and the result is flagged truncated.
    Formulas are generated breadth-first, so truncation keeps the shallow part.
    """
    if cap <= 0:
        raise ValueError("cap must be positive")
    _check_closure_language(f)
    agents = list(agents)
    seen: set = set()
    queue: deque = deque()
    kw_bodies: dict = {}      # agent -> non-conditional bodies ψ with Kw_i ψ seen
    neg_kw_bodies: dict = {}  # agent -> non-negation bodies ψ with ¬Kw_i ψ seen
    cw_bodies: list = []

    def add(g):
        if g not in seen:
            seen.add(g)
            queue.append(g)

    add(f)
    while queue:
        if len(seen) > cap:
            return Closure(frozenset(seen), True)
        g = queue.popleft()
        for ch in children(g):
            add(ch)
        if not isinstance(g, Not):
            add(Not(g))
        if isinstance(g, Kw) and not isinstance(g.sub, Implies):
            bodies = kw_bodies.setdefault(g.agent, [])
            bodies.append(g.sub)
            for other in bodies:
                add(Kw(g.agent, Implies(other, g.sub)))
                add(Kw(g.agent, Implies(g.sub, other)))
        if isinstance(g, Cw):
            cw_bodies.append(g.sub)
            for a in agents:
                add(Kw(a, g))
                add(Kw(a, g.sub))
            for a, bodies in neg_kw_bodies.items():
                for b in bodies:
                    add(Kw(a, Not(And(b, Not(g.sub)))))
        if isinstance(g, Not) and isinstance(g.sub, Kw) and not isinstance(g.sub.sub, Not):
            a, b = g.sub.agent, g.sub.sub
            neg_kw_bodies.setdefault(a, []).append(b)
            for c in cw_bodies:
                add(Kw(a, Not(And(b, Not(c)))))
    return Closure(frozenset(seen), False)


def is_closed(formulas: Iterable[Formula], agents: Sequence[str]) -> bool:
    """Check every closure clause directly (quadratic; for verification)."""
    s = set(formulas)
    kws = [g for g in s if isinstance(g, Kw)]
    cws = [g for g in s if isinstance(g, Cw)]
    for g in s:
        if any(ch not in s for ch in children(g)):
            return False
        if not isinstance(g, Not) and Not(g) not in s:
            return False
    for x in kws:
        for y in kws:
            if x.agent == y.agent and not isinstance(x.sub, Implies) and not isinstance(y.sub, Implies):
                if Kw(x.agent, Implies(y.sub, x.sub)) not in s:
                    return False
    for c in cws:
        for a in agents:
            if Kw(a, c) not in s or Kw(a, c.sub) not in s:
                return False
    for g in s:
        if isinstance(g, Not) and isinstance(g.sub, Kw) and not isinstance(g.sub.sub, Not):
            for c in cws:
                if Kw(g.sub.agent, Not(And(g.sub.sub, Not(c.sub)))) not in s:
                    return False
    return True


# ---------------------------------------------------------------------------
# random generation

_GEN_OPS = {
    "not", "and", "implies", "K", "Kw", "E", "C", "Cw",
    *DERIVED_OPS,
}


def random_formula(rng: random.Random, atoms: Sequence[str], agents: Sequence[str],
                   depth: int, ops: Iterable[str] = ("not", "and", "Kw", "Cw")) -> Formula:
    """Random formula with nesting at most ``depth`` over the listed ops.

    ``ops`` names: not, and, implies, K, Kw, E, C, Cw, or a derived tag.
    """
    ops = list(ops)
    unknown = set(ops) - _GEN_OPS
    if unknown:
        raise ValueError(f"unknown generator ops {sorted(unknown)}")
    if depth <= 0 or rng.random() < 0.25:
        return Atom(rng.choice(list(atoms)))
    op = rng.choice(ops)
    sub = lambda: random_formula(rng, atoms, agents, depth - 1, ops)  # noqa: E731
    if op == "not":
        return Not(sub())
    if op == "and":
        return And(sub(), sub())
    if op == "implies":
        return Implies(sub(), sub())
    if op == "K":
        return K(rng.choice(list(agents)), sub())
    if op == "Kw":
        return Kw(rng.choice(list(agents)), sub())
    if op == "E":
        return E(sub())
    if op == "C":
        return C(sub())
    if op == "Cw":
        return Cw(sub())
    return Derived(op, sub())
