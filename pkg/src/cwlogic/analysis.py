"""Bisimulation, invariance testing, and parity facts about binary trees.

Bisimulations are computed by pair refinement: start from every cross pair
that agrees on atoms and delete pairs that break the forth or back condition
for some agent until nothing changes.  The surviving set is the largest
bisimulation between the two models.

Binary trees are single-agent models where every internal node has exactly
two successors.  Nodes are labelled ``v`` followed by their path bits, so the
root is ``v`` and its children are ``v0`` and ``v1``.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

from .formula import Atom, Derived, Formula, kw_power, random_formula
from .kripke import KripkeModel, PointedModel, bits, popcount
from .semantics import Evaluator, extension, satisfies

# -- bisimulation ----------------------------------------------------------------


@dataclass
class Bisimulation:
    left: KripkeModel
    right: KripkeModel
    pairs: frozenset          # of (left label, right label)

    def __contains__(self, pair) -> bool:
        return tuple(pair) in self.pairs

    def __len__(self) -> int:
        return len(self.pairs)

    def relates(self, wl, wr) -> bool:
        lw = self.left.worlds[self.left.index(wl)]
        rw = self.right.worlds[self.right.index(wr)]
        return (lw, rw) in self.pairs


def _atom_profile(m: KripkeModel, atoms: Sequence[str], w: int) -> tuple:
    return tuple(m.valuation.get(p, 0) >> w & 1 for p in atoms)


def _shared_agents(mL: KripkeModel, mR: KripkeModel) -> list:
    if set(mL.agents) != set(mR.agents):
        raise ValueError("bisimulation needs both models over the same agents")
    return list(mL.agents)


def max_bisimulation(mL: KripkeModel, mR: KripkeModel) -> Bisimulation:
    """Largest bisimulation between the two models (possibly empty)."""
    agents = _shared_agents(mL, mR)
    atoms = sorted(set(mL.valuation) | set(mR.valuation))
    # rel[x] = bitmask of right worlds currently related to left world x
    rel = []
    for x in range(mL.n):
        px = _atom_profile(mL, atoms, x)
        rel.append(sum(1 << y for y in range(mR.n) if _atom_profile(mR, atoms, y) == px))
    changed = True
    while changed:
        changed = False
        for x in range(mL.n):
            for y in bits(rel[x]):
                if not _locally_ok(mL, mR, agents, rel, x, y):
                    rel[x] &= ~(1 << y)
                    changed = True
    pairs = frozenset((mL.worlds[x], mR.worlds[y]) for x in range(mL.n) for y in bits(rel[x]))
    return Bisimulation(mL, mR, pairs)


def _locally_ok(mL, mR, agents, rel, x, y) -> bool:
    for a in agents:
        lx, ry = mL.succ[a][x], mR.succ[a][y]
        # forth: each successor of x is related to some successor of y
        for x2 in bits(lx):
            if rel[x2] & ry == 0:
                return False
        # back: each successor of y is related to some successor of x
        cover = 0
        for x2 in bits(lx):
            cover |= rel[x2]
        if ry & ~cover:
            return False
    return True


def is_bisimulation(pairs: Iterable, mL: KripkeModel, mR: KripkeModel) -> bool:
    """Re-check atom agreement, forth and back for every pair."""
    agents = _shared_agents(mL, mR)
    atoms = sorted(set(mL.valuation) | set(mR.valuation))
    idx = {(mL.index(a), mR.index(b)) for a, b in pairs}
    for x, y in idx:
        if _atom_profile(mL, atoms, x) != _atom_profile(mR, atoms, y):
            return False
        for a in agents:
            for x2 in bits(mL.succ[a][x]):
                if not any((x2, y2) in idx for y2 in bits(mR.succ[a][y])):
                    return False
            for y2 in bits(mR.succ[a][y]):
                if not any((x2, y2) in idx for x2 in bits(mL.succ[a][x])):
                    return False
    return True


def bisimilar(left: PointedModel, right: PointedModel) -> bool:
    z = max_bisimulation(left.model, right.model)
    return (left.label, right.label) in z.pairs


# -- bisimilar transforms ------------------------------------------------------------


def permuted_copy(pm: PointedModel, rng: random.Random) -> PointedModel:
    """Isomorphic copy with shuffled world order and fresh labels."""
    m = pm.model
    order = list(range(m.n))
    rng.shuffle(order)
    pos = {old: new for new, old in enumerate(order)}

    def remap(mask):
        return sum(1 << pos[w] for w in bits(mask))

    succ = {a: [remap(m.succ[a][old]) for old in order] for a in m.agents}
    val = {p: remap(v) for p, v in m.valuation.items()}
    out = KripkeModel([f"x{k}" for k in range(m.n)], m.agents, succ, val)
    return PointedModel(out, pos[pm.point])


def unravel(pm: PointedModel, depth: int) -> PointedModel:
    """Unravel the first ``depth`` steps from the point into a tree.

    Paths shorter than ``depth`` become fresh tree nodes; a path of exactly
    ``depth`` steps is glued onto a copy of the original world it ends at, so
    the result stays bisimilar to the input even when the input has cycles.
    """
    m = pm.model
    nodes = [((), pm.point)]           # (path of (agent, world) steps, original world)
    layer = [((), pm.point)]
    for _ in range(depth - 1):
        nxt = []
        for path, w in layer:
            for a in m.agents:
                for w2 in bits(m.succ[a][w]):
                    nxt.append((path + ((a, w2),), w2))
        nodes.extend(nxt)
        layer = nxt
    tree_index = {path: k for k, (path, _) in enumerate(nodes)}
    base = len(nodes)
    worlds = [f"u{k}" for k in range(base)] + [f"o{w}" for w in range(m.n)]
    succ = {a: [0] * (base + m.n) for a in m.agents}
    val = {p: 0 for p in m.valuation}
    for k, (path, w) in enumerate(nodes):
        for p, mask in m.valuation.items():
            if mask >> w & 1:
                val[p] |= 1 << k
        for a in m.agents:
            for w2 in bits(m.succ[a][w]):
                child = path + ((a, w2),)
                target = tree_index.get(child, base + w2)
                succ[a][k] |= 1 << target
    for w in range(m.n):
        for p, mask in m.valuation.items():
            if mask >> w & 1:
                val[p] |= 1 << (base + w)
        for a in m.agents:
            succ[a][base + w] = m.succ[a][w] << base
    return PointedModel(KripkeModel(worlds, m.agents, succ, val), 0)


def duplicate_world(pm: PointedModel, rng: random.Random) -> PointedModel:
    """Add a clone of a random world: same atoms, same successors, and every
    edge into the original also enters the clone."""
    m = pm.model
    w = rng.randrange(m.n)
    c = m.n
    succ = {}
    for a in m.agents:
        row = list(m.succ[a]) + [m.succ[a][w]]
        row = [r | (1 << c) if r >> w & 1 else r for r in row]
        succ[a] = row
    val = {p: v | ((v >> w & 1) << c) for p, v in m.valuation.items()}
    out = KripkeModel(list(m.worlds) + [m.worlds[w] + "_dup"], m.agents, succ, val)
    return PointedModel(out, pm.point)


def with_junk(pm: PointedModel, rng: random.Random) -> PointedModel:
    """Disjoint union with an unreachable random component."""
    from .kripke import random_model
    m = pm.model
    extra = random_model(rng.randint(1, 3), list(m.agents), density=0.5,
                         atoms=sorted(m.valuation) or 1, seed=rng.randrange(1 << 30))
    n = m.n
    succ = {a: list(m.succ[a]) + [r << n for r in extra.succ[a]] for a in m.agents}
    val = {p: m.valuation.get(p, 0) | (extra.valuation.get(p, 0) << n)
           for p in set(m.valuation) | set(extra.valuation)}
    out = KripkeModel(list(m.worlds) + [f"j{k}" for k in range(extra.n)], m.agents, succ, val)
    return PointedModel(out, pm.point)


def quotient(pm: PointedModel) -> PointedModel:
    """Contract the model by its own largest auto-bisimulation."""
    m = pm.model
    z = max_bisimulation(m, m)
    cls_of, reps = {}, []
    for w in range(m.n):
        for k, r in enumerate(reps):
            if (m.worlds[w], m.worlds[r]) in z.pairs:
                cls_of[w] = k
                break
        else:
            cls_of[w] = len(reps)
            reps.append(w)
    succ = {a: [sum(1 << cls_of[t] for t in bits(m.succ[a][r])) for r in reps] for a in m.agents}
    val = {p: sum(1 << k for k, r in enumerate(reps) if v >> r & 1) for p, v in m.valuation.items()}
    out = KripkeModel([m.worlds[r] for r in reps], m.agents, succ, val)
    return PointedModel(out, cls_of[pm.point])


TRANSFORMS = {
    "permute": permuted_copy,
    "unravel": lambda pm, rng: unravel(pm, 4),
    "duplicate": duplicate_world,
    "junk": with_junk,
    "quotient": lambda pm, rng: quotient(pm),
}


def bisimilar_pairs(count: int, seed: int = 0, max_worlds: int = 5, agent_counts=(1, 2)) -> list:
    """Seeded (pointed model, certified bisimilar transform) pairs."""
    from .kripke import random_model
    rng = random.Random(seed)
    names = sorted(TRANSFORMS)
    out = []
    while len(out) < count:
        m = random_model(rng.randint(1, max_worlds), rng.choice(agent_counts),
                         density=rng.choice([0.2, 0.4, 0.6]), atoms=2,
                         seed=rng.randrange(1 << 30))
        pm = PointedModel(m, rng.randrange(m.n))
        name = names[len(out) % len(names)]
        other = TRANSFORMS[name](pm, rng)
        if not bisimilar(pm, other):
            raise AssertionError(f"transform {name} did not produce a bisimilar model")
        out.append((pm, other, name))
    return out


# -- invariance ---------------------------------------------------------------------

CW5_OPS = ("not", "and", "implies", "Kw", "Cw5")
C_OPS = ("not", "and", "implies", "K", "C")


def formula_suite(count: int, agents: Sequence[str], seed: int = 0, depth: int = 3,
                  ops: Sequence[str] = CW5_OPS, atoms: Sequence[str] = ("p", "q")) -> list:
    """Distinct seeded random formulas with nesting at most ``depth``."""
    rng = random.Random(seed)
    seen, out = set(), []
    tries = 0
    while len(out) < count and tries < count * 200:
        tries += 1
        f = random_formula(rng, atoms, agents, depth, ops)
        if f not in seen:
            seen.add(f)
            out.append(f)
    return out


@dataclass
class InvarianceReport:
    checked: int = 0
    violations: list = field(default_factory=list)
    uncertified: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def to_json(self) -> dict:
        return {"checked": self.checked, "violations": len(self.violations),
                "uncertified_pairs": len(self.uncertified), "ok": self.ok}


def invariance_suite(pairs: Sequence, formulas: Sequence[Formula], certify: bool = True) -> InvarianceReport:
    """Check that each pair of points agrees on every formula.

    With ``certify`` the pairs must be bisimilar (checked here); without it
    the suite can be run on non-bisimilar pairs that a weak language still
    cannot tell apart.
    """
    rep = InvarianceReport()
    for k, pair in enumerate(pairs):
        left, right = pair[0], pair[1]
        if certify and not bisimilar(left, right):
            raise ValueError(f"pair {k} is not bisimilar")
        if not certify and not bisimilar(left, right):
            rep.uncertified.append(k)
        agents = set(left.model.agents)
        for f in formulas:
            from .formula import agents_of
            if not set(agents_of(f)) <= agents:
                continue
            a, b = satisfies(left, f), satisfies(right, f)
            rep.checked += 1
            if a != b:
                rep.violations.append((k, f, a, b))
    return rep


# -- binary trees ------------------------------------------------------------------


class DepthError(ValueError):
    pass


@dataclass
class BinaryTree:
    model: KripkeModel
    root: int
    layer: dict               # world index -> layer number
    agent: str = "i"

    @property
    def depth(self) -> int:
        return max(self.layer.values())

    def layer_mask(self, k: int, below: Optional[int] = None) -> int:
        """Worlds on layer ``k`` (optionally only those in the subtree of ``below``)."""
        mask = sum(1 << w for w, l in self.layer.items() if l == k)
        if below is not None:
            mask &= self.subtree(below)
        return mask

    def subtree(self, w: int) -> int:
        out, frontier = 1 << w, 1 << w
        succ = self.model.succ[self.agent]
        while frontier:
            nxt = 0
            for v in bits(frontier):
                nxt |= succ[v]
            nxt &= ~out
            out |= nxt
            frontier = nxt
        return out

    def pointed(self) -> PointedModel:
        return PointedModel(self.model, self.root)


def binary_tree(depth: int, valuation=None, agent: str = "i") -> BinaryTree:
    """Full binary tree of the given depth.

    ``valuation`` maps atom names to bitmasks over the nodes in breadth-first
    order (root is bit 0), or is a single int taken as the mask of ``p``.
    """
    if depth < 0:
        raise ValueError("depth must be >= 0")
    labels = ["v"]
    layer = {0: 0}
    frontier = ["v"]
    for d in range(1, depth + 1):
        frontier = [s + b for s in frontier for b in "01"]
        for s in frontier:
            layer[len(labels)] = d
            labels.append(s)
    index = {s: k for k, s in enumerate(labels)}
    row = [0] * len(labels)
    for s, k in index.items():
        if layer[k] < depth:
            row[k] = (1 << index[s + "0"]) | (1 << index[s + "1"])
    if valuation is None:
        valuation = {}
    elif isinstance(valuation, int):
        valuation = {"p": valuation}
    m = KripkeModel(labels, [agent], {agent: row}, valuation)
    return BinaryTree(m, 0, layer, agent)


def tree_from_model(m: KripkeModel, root) -> BinaryTree:
    """Validate that ``m`` is a single-agent binary tree rooted at ``root``."""
    if len(m.agents) != 1:
        raise ValueError("binary trees have a single agent")
    a = m.agents[0]
    r = m.index(root)
    succ = m.succ[a]
    layer = {r: 0}
    frontier = [r]
    seen = 1 << r
    while frontier:
        nxt = []
        for w in frontier:
            kids = succ[w]
            if kids and popcount(kids) != 2:
                raise ValueError(f"node {m.worlds[w]!r} does not have exactly two successors")
            for c in bits(kids):
                if seen >> c & 1:
                    raise ValueError("not a tree: node reached twice")
                seen |= 1 << c
                layer[c] = layer[w] + 1
                nxt.append(c)
        frontier = nxt
    if seen != m.full:
        raise ValueError("not a tree: unreachable nodes")
    depths = {layer[w] for w in range(m.n) if not succ[w]}
    if len(depths) > 1:
        raise ValueError("leaves are on different layers")
    return BinaryTree(m, r, layer, a)


@dataclass
class ParityReport:
    checked: int = 0
    mismatches: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.mismatches

    def merge(self, other: "ParityReport") -> "ParityReport":
        self.checked += other.checked
        self.mismatches.extend(other.mismatches)
        return self

    def to_json(self) -> dict:
        return {"checked": self.checked, "mismatches": len(self.mismatches), "ok": self.ok}


def parity_theorem_check(t: BinaryTree, f: Formula, n: int) -> ParityReport:
    """At every node whose depth-``n`` cone is inside the tree, compare
    ``Kw^n f`` against the parity of f-nodes ``n`` layers below."""
    if n < 1:
        raise ValueError("n must be >= 1")
    if n > t.depth:
        raise DepthError(f"tree of depth {t.depth} has no layer {n} below the root")
    lhs = extension(t.model, kw_power(t.agent, n, f)).mask
    fmask = extension(t.model, f).mask
    rep = ParityReport()
    for w, l in sorted(t.layer.items()):
        if l + n > t.depth:
            continue
        count = popcount(fmask & t.layer_mask(l + n, below=w))
        holds = bool(lhs >> w & 1)
        rep.checked += 1
        if holds != (count % 2 == 0):
            rep.mismatches.append((t.model.worlds[w], n, holds, count))
    return rep


def cw5_layer_parity(t: BinaryTree, f: Formula) -> ParityReport:
    """If the root satisfies Cw5 f, every layer below the root holds an even
    number of f-nodes.  The root layer is skipped: it has a single node."""
    rep = ParityReport()
    ev = Evaluator(t.model)
    holds = bool(ev.ext(Derived("Cw5", f)) >> t.root & 1)
    rep.checked += 1
    if not holds:
        return rep
    fmask = ev.ext(f)
    for k in range(1, t.depth + 1):
        count = popcount(fmask & t.layer_mask(k))
        if count % 2:
            rep.mismatches.append((k, count))
    return rep


def parity_sweep(depth: int, ns: Optional[Iterable[int]] = None, cw5: bool = True) -> ParityReport:
    """All valuations of p on the depth-``depth`` tree."""
    base = binary_tree(depth)
    ns = list(ns) if ns is not None else list(range(1, depth + 1))
    p = Atom("p")
    rep = ParityReport()
    for v in range(1 << base.model.n):
        t = BinaryTree(base.model.with_valuation({"p": v}), base.root, base.layer, base.agent)
        for n in ns:
            rep.merge(parity_theorem_check(t, p, n))
        if cw5:
            rep.merge(cw5_layer_parity(t, p))
    return rep
