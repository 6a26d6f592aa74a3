"""Model comparison games for the common-knowledge language, and the M_n / N_n
families on which the games cannot see what ``Kw Cw5 p`` sees.

The solver works bottom-up.  ``win[k][x]`` is the set (bitmask over the
right model's worlds) of ``y`` such that duplicator wins the ``k``-round game
from ``(x, y)``.  Spoiler may move on either side, along one agent's relation
(K-move) or along the reflexive-transitive closure of all relations (C-move);
duplicator answers with the same kind of move on the other side and must land
on a world satisfying the same atoms.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from .kripke import KripkeModel, PointedModel, bits

DUPLICATOR = "duplicator"
SPOILER = "spoiler"


@dataclass(frozen=True)
class GamePosition:
    left: PointedModel
    right: PointedModel
    rounds_left: int

    def __post_init__(self):
        if self.rounds_left < 0:
            raise ValueError("rounds_left must be >= 0")


# -- the model families ----------------------------------------------------------

def _tree(prefix: str, root: str, max_len: int) -> list:
    """Labels prefix+root and its binary descendants down to subscript length max_len."""
    out = []
    layer = [root]
    while layer and len(layer[0]) <= max_len:
        out.extend(layer)
        layer = [s + b for s in layer for b in "01"]
    return [prefix + s for s in out]


def _family(n: int, with_z: bool) -> PointedModel:
    if n < 1:
        raise ValueError("n must be >= 1")
    t_nodes = _tree("t", "00", n + 2)
    worlds = ["r", "t0"] + t_nodes
    edges = [("r", "t0"), ("t0", "t00")]
    edges += [(w, w + b) for w in t_nodes for b in "01" if len(w) - 1 < n + 2]
    not_p = {"t" + "0" * (n + 2)}
    if with_z:
        z_nodes = _tree("z", "0", n + 1)
        worlds += z_nodes
        edges.append(("r", "z0"))
        edges += [(w, w + b) for w in z_nodes for b in "01" if len(w) - 1 < n + 1]
        not_p.add("z" + "0" * (n + 1))
    m = KripkeModel.from_edges(worlds, {"i": edges}, {"p": [w for w in worlds if w not in not_p]},
                               agents=["i"])
    return PointedModel(m, m.index("r"))


def build_M(n: int) -> PointedModel:
    """r -> t0 -> t00, full binary tree below t00 to subscript length n+2; ~p only at t0..0."""
    return _family(n, with_z=False)


def build_N(n: int) -> PointedModel:
    """M_n plus r -> z0 with a full binary tree to subscript length n+1; ~p also at z0..0."""
    return _family(n, with_z=True)


# -- solver ----------------------------------------------------------------------

def _atoms_of(m: KripkeModel, atoms: list) -> list:
    return [tuple(m.valuation.get(p, 0) >> w & 1 for p in atoms) for w in range(m.n)]


@dataclass
class GameTables:
    """Solved game between two models for rounds 0..max_rounds."""

    left: KripkeModel
    right: KripkeModel
    move_types: list                   # ("K", agent) pairs and ("C", None)
    win: list = field(default_factory=list)   # win[k][x] -> bitmask over right worlds

    def duplicator_wins(self, x: int, y: int, k: int) -> bool:
        self.extend(k)
        return bool(self.win[k][x] >> y & 1)

    def extend(self, k: int):
        while len(self.win) <= k:
            self.win.append(_next_level(self, self.win[-1]))

    def stable(self) -> bool:
        return len(self.win) >= 2 and self.win[-1] == self.win[-2]

    def moves(self, side: str, mtype, w: int) -> int:
        m = self.left if side == "left" else self.right
        kind, agent = mtype
        if kind == "C":
            return m.reach_succ[w]
        return m.succ[agent][w]


def _next_level(t: GameTables, prev: list) -> list:
    base = t.win[0]
    out = []
    for x in range(t.left.n):
        ok = 0
        for y in bits(base[x]):
            good = True
            for mt in t.move_types:
                lx = t.moves("left", mt, x)
                ry = t.moves("right", mt, y)
                # spoiler moves on the left: every x' needs a matching y'
                for x2 in bits(lx):
                    if prev[x2] & ry == 0:
                        good = False
                        break
                if not good:
                    break
                # spoiler moves on the right: every y' needs a matching x'
                cover = 0
                for x2 in bits(lx):
                    cover |= prev[x2]
                if ry & ~cover:
                    good = False
                    break
            if good:
                ok |= 1 << y
        out.append(ok)
    return out


def solve_tables(left: KripkeModel, right: KripkeModel) -> GameTables:
    agents = sorted(set(left.agents) & set(right.agents))
    if set(left.agents) != set(right.agents):
        raise ValueError("both models must have the same agents")
    atoms = sorted(set(left.valuation) | set(right.valuation))
    la, ra = _atoms_of(left, atoms), _atoms_of(right, atoms)
    level0 = []
    for x in range(left.n):
        mask = 0
        for y in range(right.n):
            if la[x] == ra[y]:
                mask |= 1 << y
        level0.append(mask)
    moves = [("K", a) for a in agents] + [("C", None)]
    return GameTables(left, right, moves, [level0])


def solve_cl_game(pos: GamePosition, tables: Optional[GameTables] = None) -> str:
    """Winner of the game from ``pos`` under optimal play."""
    if tables is None:
        tables = solve_tables(pos.left.model, pos.right.model)
    won = tables.duplicator_wins(pos.left.point, pos.right.point, pos.rounds_left)
    return DUPLICATOR if won else SPOILER


def least_spoiler_win(left: PointedModel, right: PointedModel, limit: int = 64) -> Optional[int]:
    """Fewest rounds in which spoiler wins, or None if duplicator survives forever."""
    t = solve_tables(left.model, right.model)
    for k in range(limit + 1):
        if not t.duplicator_wins(left.point, right.point, k):
            return k
        if t.stable():
            return None
    return None


def strategy_dump(left: PointedModel, right: PointedModel, rounds: int) -> list:
    """Duplicator's answers at the root position: one entry per spoiler move."""
    t = solve_tables(left.model, right.model)
    t.extend(rounds)
    x, y = left.point, right.point
    lm, rm = left.model, right.model
    out = []
    if rounds == 0:
        return out
    prev = t.win[rounds - 1]
    for mt in t.move_types:
        label = "C" if mt[0] == "C" else f"K[{mt[1]}]"
        for x2 in bits(t.moves("left", mt, x)):
            resp = next((y2 for y2 in bits(t.moves("right", mt, y)) if prev[x2] >> y2 & 1), None)
            out.append({"move": label, "spoiler": ["left", lm.worlds[x2]],
                        "duplicator": None if resp is None else ["right", rm.worlds[resp]]})
        for y2 in bits(t.moves("right", mt, y)):
            resp = next((x2 for x2 in bits(t.moves("left", mt, x)) if prev[x2] >> y2 & 1), None)
            out.append({"move": label, "spoiler": ["right", rm.worlds[y2]],
                        "duplicator": None if resp is None else ["left", lm.worlds[resp]]})
    return out


def check_monotone(t: GameTables) -> bool:
    """Spoiler wins are never lost by adding rounds: win[k+1] is within win[k]."""
    return all(all(b & ~a == 0 for a, b in zip(lo, hi)) for lo, hi in zip(t.win, t.win[1:]))


# -- separation -------------------------------------------------------------------

@dataclass
class SeparationReport:
    n: int
    m_satisfies: bool
    n_satisfies: bool
    winner: str
    bisimilar: bool
    spoiler_needs: Optional[int]

    @property
    def ok(self) -> bool:
        return self.m_satisfies and not self.n_satisfies and self.winner == DUPLICATOR and not self.bisimilar

    def to_json(self) -> dict:
        return {"n": self.n, "M_satisfies": self.m_satisfies, "N_satisfies": self.n_satisfies,
                "winner": self.winner, "bisimilar": self.bisimilar,
                "least_spoiler_win": self.spoiler_needs, "ok": self.ok}


def distinguishing_formula():
    from .formula import parse
    return parse("Kw[i] Cw5 p")


def verify_separation(n: int) -> SeparationReport:
    from .analysis import bisimilar
    from .semantics import satisfies

    M, N = build_M(n), build_N(n)
    f = distinguishing_formula()
    t = solve_tables(M.model, N.model)
    winner = DUPLICATOR if t.duplicator_wins(M.point, N.point, n) else SPOILER
    need = None
    for k in range(n, 4 * n + 8):
        if not t.duplicator_wins(M.point, N.point, k):
            need = k
            break
        if t.stable():
            break
    return SeparationReport(n, satisfies(M, f), satisfies(N, f), winner,
                            bisimilar(M, N), need)
