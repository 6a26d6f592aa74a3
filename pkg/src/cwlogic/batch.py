"""Vectorised evaluation over many frames at once.

For a fixed world count ``n`` every operator of the language is a function on
the ``2**n`` subsets of worlds.  A :class:`FrameBatch` holds, for ``F`` frames,
an ``(F, 2**n)`` table per operator; evaluating a formula over all frames and
all valuations is then a sequence of gathers.  This is what makes exhaustive
search over every small model practical.

Canonical order of pointed models: world count, then the per-agent relation
codes (agent order, first agent most significant; within an agent the code is
the little-endian edge bitmask with bit ``s*n+t`` for ``s -> t``), then the
valuation index ``v`` (atom ``k`` holds at ``(v >> n*k) & full``), then the
lowest world.
"""

from __future__ import annotations

import functools
import itertools
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from .formula import (Atom, Not, And, Implies, K, Kw, E, C, Cw, Derived, Formula)
from .kripke import FrameClass, KripkeModel

MAX_EXHAUSTIVE_WORLDS = 5
CHUNK_CELLS = 1 << 21


# -- relation enumeration -------------------------------------------------------

def _set_partitions(items):
    if not items:
        yield []
        return
    first, rest = items[0], items[1:]
    for part in _set_partitions(rest):
        yield [[first]] + part
        for k in range(len(part)):
            yield part[:k] + [[first] + part[k]] + part[k + 1:]


def _structured_rows(n: int, cls: FrameClass):
    if cls is FrameClass.S5:
        for part in _set_partitions(list(range(n))):
            row = [0] * n
            for block in part:
                m = sum(1 << w for w in block)
                for w in block:
                    row[w] = m
            yield tuple(row)
        return
    # KD45: a nonempty set of cluster members split into clusters; each
    # remaining world sees exactly one cluster
    for size in range(1, n + 1):
        for members in itertools.combinations(range(n), size):
            others = [w for w in range(n) if w not in members]
            for part in _set_partitions(list(members)):
                masks = [sum(1 << w for w in b) for b in part]
                base = [0] * n
                for m, b in zip(masks, part):
                    for w in b:
                        base[w] = m
                for choice in itertools.product(masks, repeat=len(others)):
                    row = list(base)
                    for w, m in zip(others, choice):
                        row[w] = m
                    yield tuple(row)


@functools.lru_cache(maxsize=None)
def relations(n: int, cls: FrameClass) -> np.ndarray:
    """All single-agent relations of a class on ``n`` worlds, ascending by code.

    Shape ``(count, n)``; entry ``[r, s]`` is the successor mask of ``s``.
    """
    cls = FrameClass.parse(cls)
    if cls in (FrameClass.S5, FrameClass.KD45):
        rows = set(_structured_rows(n, cls))
        code = lambda r: sum(m << (s * n) for s, m in enumerate(r))  # noqa: E731
        ordered = sorted(rows, key=code)
        return np.array(ordered, dtype=np.int64).reshape(-1, n)
    if n > 4:
        raise ValueError(f"too many {cls.value} relations on {n} worlds to enumerate")
    codes = np.arange(1 << (n * n), dtype=np.int64)
    full = (1 << n) - 1
    rows = np.stack([(codes >> (s * n)) & full for s in range(n)], axis=1)
    if cls is FrameClass.T:
        keep = np.ones(len(codes), dtype=bool)
        for s in range(n):
            keep &= ((rows[:, s] >> s) & 1) == 1
        rows = rows[keep]
    return rows


def frame_count(n: int, agents: int, cls) -> int:
    try:
        return len(relations(n, FrameClass.parse(cls))) ** agents
    except ValueError:
        return 1 << 62


def frames_slice(n: int, agents: int, cls, start: int, stop: int) -> np.ndarray:
    """Frames ``start..stop-1`` in canonical order, shape ``(F, agents, n)``."""
    rel = relations(n, FrameClass.parse(cls))
    r = len(rel)
    idx = np.arange(start, stop, dtype=np.int64)
    out = np.empty((len(idx), agents, n), dtype=np.int64)
    for a in range(agents - 1, -1, -1):
        out[:, a, :] = rel[idx % r]
        idx //= r
    return out


# -- operator tables ------------------------------------------------------------

def _gather(table: np.ndarray, arg: np.ndarray) -> np.ndarray:
    if arg.shape[0] != table.shape[0]:
        arg = np.broadcast_to(arg, (table.shape[0], arg.shape[1]))
    return np.take_along_axis(table, arg, axis=1)


class FrameBatch:
    """Operator tables for ``F`` frames sharing world count and agent list."""

    def __init__(self, succ: np.ndarray, agents: Sequence[str]):
        self.succ = succ
        self.agents = list(agents)
        self.F, m, self.n = succ.shape
        if m != len(self.agents):
            raise ValueError("agent count does not match relation array")
        self.full = (1 << self.n) - 1
        self.subsets = np.arange(1 << self.n, dtype=np.int64)
        self._tables: dict = {}
        self.iterations: dict = {}

    def _memo(key):
        def deco(fn):
            @functools.wraps(fn)
            def wrapper(self, *args):
                k = (key,) + args
                if k not in self._tables:
                    self._tables[k] = fn(self, *args)
                return self._tables[k]
            return wrapper
        return deco

    # relations

    def _agent(self, a) -> int:
        return self.agents.index(a)

    @_memo("union")
    def union(self) -> np.ndarray:
        return np.bitwise_or.reduce(self.succ, axis=1)

    @_memo("reach")
    def reach(self) -> np.ndarray:
        u = self.union()
        r = np.empty_like(u)
        for w in range(self.n):
            r[:, w] = 1 << w
        for _ in range(self.n):
            nxt = r.copy()
            for v in range(self.n):
                has = ((r >> v) & 1).astype(bool)
                nxt |= np.where(has, u[:, v][:, None], 0)
            if np.array_equal(nxt, r):
                break
            r = nxt
        return r

    # primitive tables

    def _box(self, rel: np.ndarray) -> np.ndarray:
        out = np.zeros((self.F, len(self.subsets)), dtype=np.int64)
        for w in range(self.n):
            s = rel[:, w][:, None]
            out |= ((s & self.subsets) == s).astype(np.int64) << w
        return out

    def _kw(self, rel: np.ndarray) -> np.ndarray:
        out = np.zeros((self.F, len(self.subsets)), dtype=np.int64)
        for w in range(self.n):
            s = rel[:, w][:, None]
            inter = s & self.subsets
            out |= ((inter == s) | (inter == 0)).astype(np.int64) << w
        return out

    @_memo("K")
    def k(self, a) -> np.ndarray:
        return self._box(self.succ[:, self._agent(a), :])

    @_memo("Kw")
    def kw(self, a) -> np.ndarray:
        return self._kw(self.succ[:, self._agent(a), :])

    @_memo("E")
    def e(self) -> np.ndarray:
        return self._box(self.union())

    @_memo("C")
    def c(self) -> np.ndarray:
        return self._box(self.reach())

    @_memo("Cw")
    def cwprim(self) -> np.ndarray:
        return self._kw(self.reach())

    # derived tables

    @staticmethod
    def compose(outer: np.ndarray, inner: np.ndarray) -> np.ndarray:
        return _gather(outer, inner)

    def _conj(self, tables) -> np.ndarray:
        tables = list(tables)
        out = tables[0].copy()
        for t in tables[1:]:
            out &= t
        return out

    @_memo("Ew1")
    def ew1(self) -> np.ndarray:
        e = self.e()
        return e | e[:, ::-1]          # column full^S is column S reversed

    @_memo("Ew2")
    def ew2(self) -> np.ndarray:
        return self._conj(self.kw(a) for a in self.agents)

    @_memo("Cw1")
    def cw1(self) -> np.ndarray:
        c = self.c()
        return c | c[:, ::-1]

    @_memo("Cw21")
    def cw21(self) -> np.ndarray:
        return self.compose(self.c(), self.ew1())

    @_memo("Cw22")
    def cw22(self) -> np.ndarray:
        return self.compose(self.c(), self.ew2())

    @_memo("Cw4")
    def cw4(self) -> np.ndarray:
        return self._conj(self.compose(self.cw1(), self.kw(a)) for a in self.agents)

    def _orbit_meet(self, ew: np.ndarray) -> np.ndarray:
        cur = ew
        acc = ew.copy()
        for _ in range(len(self.subsets)):
            cur = self.compose(ew, cur)
            acc &= cur
        return acc

    @_memo("Cw31")
    def cw31(self) -> np.ndarray:
        return self._orbit_meet(self.ew1())

    @_memo("Cw32")
    def cw32(self) -> np.ndarray:
        return self._orbit_meet(self.ew2())

    @_memo("Cw5")
    def cw5(self) -> np.ndarray:
        size = len(self.subsets)
        if size > 62:
            raise ValueError("Cw5 tables need at most 5 worlds")
        # reach[f, x] = bitmask (over subsets) of sets reachable from x by >= 1 kw step
        one = np.int64(1)
        reach = np.zeros((self.F, size), dtype=np.int64)
        for a in self.agents:
            reach |= one << self.kw(a)
        while True:
            nxt = reach.copy()
            for y in range(size):
                has = ((reach >> y) & 1).astype(bool)
                nxt |= np.where(has, reach[:, y][:, None], 0)
            if np.array_equal(nxt, reach):
                break
            reach = nxt
        acc = np.full((self.F, size), self.full, dtype=np.int64)
        for y in range(size):
            has = ((reach >> y) & 1).astype(bool)
            acc &= np.where(has, np.int64(y), np.int64(self.full))
        return acc

    def derived(self, op: str) -> np.ndarray:
        return getattr(self, op.lower())()

    del _memo

    # evaluation

    def evaluate(self, f: Formula, atom_ext: dict) -> np.ndarray:
        """Extensions of f for every frame and valuation.

        ``atom_ext`` maps atom names to arrays of shape ``(1, V)`` or ``(F, V)``;
        the result has shape ``(F, V)`` (or ``(1, V)`` for modal-free f).
        """
        memo: dict = {}

        def go(g):
            if g in memo:
                return memo[g]
            if isinstance(g, Atom):
                r = atom_ext.get(g.name)
                if r is None:
                    r = np.zeros((1, 1), dtype=np.int64)
            elif isinstance(g, Not):
                r = self.full ^ go(g.sub)
            elif isinstance(g, And):
                r = go(g.left) & go(g.right)
            elif isinstance(g, Implies):
                r = (self.full ^ go(g.left)) | go(g.right)
            elif isinstance(g, K):
                r = _gather(self.k(g.agent), go(g.sub))
            elif isinstance(g, Kw):
                r = _gather(self.kw(g.agent), go(g.sub))
            elif isinstance(g, E):
                r = _gather(self.e(), go(g.sub))
            elif isinstance(g, C):
                r = _gather(self.c(), go(g.sub))
            elif isinstance(g, Cw):
                r = _gather(self.cwprim(), go(g.sub))
            elif isinstance(g, Derived):
                r = _gather(self.derived(g.op), go(g.sub))
            else:
                raise TypeError(f"cannot evaluate {type(g).__name__} node")
            memo[g] = r
            return r

        return go(f)


def valuation_table(n: int, atoms: Sequence[str], start: int = 0, stop: Optional[int] = None) -> dict:
    """Atom extensions for valuation indices ``start..stop-1`` as ``(1, V)`` arrays."""
    total = 1 << (n * len(atoms))
    stop = total if stop is None else stop
    v = np.arange(start, stop, dtype=np.int64)[None, :]
    full = (1 << n) - 1
    return {p: (v >> (n * k)) & full for k, p in enumerate(atoms)}


def model_at(succ_row: np.ndarray, agents, atoms, n: int, v: int) -> KripkeModel:
    full = (1 << n) - 1
    succ = {a: tuple(int(x) for x in succ_row[k]) for k, a in enumerate(agents)}
    val = {p: (v >> (n * k)) & full for k, p in enumerate(atoms)}
    return KripkeModel([f"w{k}" for k in range(n)], list(agents), succ, val)


@dataclass
class Hit:
    model: KripkeModel
    point: int
    frame_index: int
    valuation: int
    examined: int


def first_hit(predicate: Callable, n: int, agents: Sequence[str], atoms: Sequence[str],
              cls, chunk_cells: int = CHUNK_CELLS) -> tuple:
    """Scan all pointed models on ``n`` worlds in canonical order.

    ``predicate(batch, atom_ext)`` returns an ``(F, V)`` mask of worlds that
    are hits.  Returns ``(Hit or None, models_examined)``.
    """
    cls = FrameClass.parse(cls)
    agents = list(agents)
    atoms = list(atoms)
    total = frame_count(n, len(agents), cls)
    V = 1 << (n * len(atoms))
    step = max(1, chunk_cells // V)
    examined = 0
    for start in range(0, total, step):
        stop = min(total, start + step)
        succ = frames_slice(n, len(agents), cls, start, stop)
        batch = FrameBatch(succ, agents)
        hits = predicate(batch, valuation_table(n, atoms))
        hits = np.broadcast_to(hits, (stop - start, V))
        flat = np.flatnonzero(hits.reshape(-1))
        if len(flat):
            pos = int(flat[0])
            fi, v = divmod(pos, V)
            mask = int(hits[fi, v])
            point = (mask & -mask).bit_length() - 1
            examined += pos + 1
            m = model_at(succ[fi], agents, atoms, n, v)
            return Hit(m, point, start + fi, v, examined), examined
        examined += (stop - start) * V
    return None, examined


def falsify_predicate(f: Formula):
    def pred(batch, atom_ext):
        return batch.full ^ batch.evaluate(f, atom_ext)
    return pred


def satisfy_predicate(f: Formula):
    def pred(batch, atom_ext):
        return batch.evaluate(f, atom_ext)
    return pred


def exhaustive_feasible(n: int, agents: int, atoms: int, cls, limit: int = 1 << 26) -> bool:
    if n > MAX_EXHAUSTIVE_WORLDS:
        return False
    return frame_count(n, agents, cls) * (1 << (n * atoms)) <= limit
