"""Exact model checking on finite Kripke models.

Every operator is evaluated as a function on world sets.  The three
infinitary operators are computed by fixpoints over the (finite) subset
lattice:

* Cw31/Cw32 intersect the orbit ``ew(S), ew(ew(S)), ...`` which must cycle;
* Cw5 intersects the least family containing each ``kw_i(S)`` and closed
  under every ``kw_i``.
"""

from __future__ import annotations

import hashlib
import json
import random
from dataclasses import dataclass, field
from typing import Optional, Sequence

from .formula import (Formula, Atom, Not, And, Implies, K, Kw, E, C, Cw, Derived,
                      Meta, atoms_of, agents_of, render, subformulas, INFINITARY_OPS)
from .kripke import (KripkeModel, PointedModel, FrameClass, bits, random_model,
                     model_to_json, default_agents)

__all__ = [
    "Extension", "EvalTrace", "Evaluator", "UnknownAgent", "extension", "evaluate",
    "eval_cw3", "eval_cw5", "satisfies", "valid_on_model", "find_countermodel",
    "ambient_agents",
]


class UnknownAgent(ValueError):
    pass


@dataclass(frozen=True)
class Extension:
    """The set of worlds of ``model`` where a formula holds."""

    model: KripkeModel
    mask: int

    @property
    def members(self) -> list:
        return self.model.labels(self.mask)

    def __contains__(self, world) -> bool:
        return bool(self.mask >> self.model.index(world) & 1)

    def __len__(self) -> int:
        return bin(self.mask).count("1")

    def __iter__(self):
        return iter(self.members)

    def is_all(self) -> bool:
        return self.mask == self.model.full


@dataclass
class EvalTrace:
    formula: str
    model_id: str
    extensions: dict = field(default_factory=dict)
    iterations: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {"formula": self.formula, "model": self.model_id,
                "extensions": self.extensions, "iterations": self.iterations}


def model_id(m: KripkeModel) -> str:
    blob = json.dumps(model_to_json(m), sort_keys=True).encode()
    return hashlib.sha1(blob).hexdigest()[:12]


class Evaluator:
    """Set-valued semantics for one model; caches per-subformula extensions."""

    def __init__(self, model: KripkeModel):
        self.m = model
        self.full = model.full
        self.agents = list(model.agents)
        self.cache: dict = {}
        self.iterations: dict = {}

    # operators on world sets

    def _box(self, rows, s: int) -> int:
        out = 0
        for w, r in enumerate(rows):
            if r & ~s == 0:
                out |= 1 << w
        return out

    def _kw(self, rows, s: int) -> int:
        out = 0
        for w, r in enumerate(rows):
            inter = r & s
            if inter == r or inter == 0:
                out |= 1 << w
        return out

    def _succ(self, a):
        try:
            return self.m.succ[a]
        except KeyError:
            raise UnknownAgent(f"agent {a!r} is not in the model") from None

    def k(self, a, s):
        return self._box(self._succ(a), s)

    def kw(self, a, s):
        return self._kw(self._succ(a), s)

    def e(self, s):
        return self._box(self.m.union_succ, s)

    def c(self, s):
        return self._box(self.m.reach_succ, s)

    def cwprim(self, s):
        return self._kw(self.m.reach_succ, s)

    def ew1(self, s):
        return self.e(s) | self.e(self.full & ~s)

    def ew2(self, s):
        out = self.full
        for a in self.agents:
            out &= self.kw(a, s)
        return out

    def cw1(self, s):
        return self.c(s) | self.c(self.full & ~s)

    def cw4(self, s):
        out = self.full
        for a in self.agents:
            out &= self.cw1(self.kw(a, s))
        return out

    def orbit(self, s: int, variant: str) -> list:
        """Distinct elements of ew(s), ew(ew(s)), ... up to the first repeat."""
        step = self.ew1 if variant == "Ew1" else self.ew2
        seen = []
        index = set()
        cur = step(s)
        while cur not in index:
            index.add(cur)
            seen.append(cur)
            cur = step(cur)
        return seen

    def cw3(self, s: int, variant: str) -> tuple:
        orbit = self.orbit(s, variant)
        out = self.full
        for x in orbit:
            out &= x
        return out, len(orbit)

    def kw_family(self, s: int) -> dict:
        """Least kw-closed family over the seeds kw_i(s); maps set -> first depth."""
        depth = {}
        frontier = []
        for a in self.agents:
            x = self.kw(a, s)
            if x not in depth:
                depth[x] = 1
                frontier.append(x)
        d = 1
        while frontier:
            d += 1
            nxt = []
            for y in frontier:
                for a in self.agents:
                    x = self.kw(a, y)
                    if x not in depth:
                        depth[x] = d
                        nxt.append(x)
            frontier = nxt
        return depth

    def cw5(self, s: int) -> tuple:
        fam = self.kw_family(s)
        out = self.full
        for x in fam:
            out &= x
        return out, max(fam.values())

    # formulas

    def ext(self, f: Formula) -> int:
        got = self.cache.get(f)
        if got is not None:
            return got
        r = self._compute(f)
        self.cache[f] = r
        return r

    def _compute(self, f: Formula) -> int:
        if isinstance(f, Atom):
            return self.m.atom(f.name)
        if isinstance(f, Not):
            return self.full & ~self.ext(f.sub)
        if isinstance(f, And):
            return self.ext(f.left) & self.ext(f.right)
        if isinstance(f, Implies):
            return (self.full & ~self.ext(f.left)) | self.ext(f.right)
        if isinstance(f, K):
            return self.k(f.agent, self.ext(f.sub))
        if isinstance(f, Kw):
            return self.kw(f.agent, self.ext(f.sub))
        if isinstance(f, E):
            return self.e(self.ext(f.sub))
        if isinstance(f, C):
            return self.c(self.ext(f.sub))
        if isinstance(f, Cw):
            return self.cwprim(self.ext(f.sub))
        if isinstance(f, Derived):
            s = self.ext(f.sub)
            op = f.op
            if op == "Ew1":
                return self.ew1(s)
            if op == "Ew2":
                return self.ew2(s)
            if op == "Cw1":
                return self.cw1(s)
            if op == "Cw21":
                return self.c(self.ew1(s))
            if op == "Cw22":
                return self.c(self.ew2(s))
            if op == "Cw4":
                return self.cw4(s)
            if op in ("Cw31", "Cw32"):
                r, n = self.cw3(s, "Ew1" if op == "Cw31" else "Ew2")
            else:
                r, n = self.cw5(s)
            self.iterations[f] = n
            return r
        if isinstance(f, Meta):
            raise TypeError(f"cannot evaluate schema metavariable <{f.name}>")
        raise TypeError(f"not a formula: {f!r}")

    def trace(self, f: Formula) -> EvalTrace:
        self.ext(f)
        t = EvalTrace(render(f), model_id(self.m))
        seen = set()
        for g in subformulas(f):
            if g in seen:
                continue
            seen.add(g)
            key = render(g)
            t.extensions[key] = sorted(self.m.labels(self.ext(g)))
            if isinstance(g, Derived) and g.op in INFINITARY_OPS:
                t.iterations[key] = self.iterations[g]
        return t


def _check_agents(m: KripkeModel, f: Formula):
    missing = [a for a in agents_of(f) if a not in m.agents]
    if missing:
        raise UnknownAgent(f"formula mentions agent(s) {missing} not in the model")


def extension(m: KripkeModel, f: Formula) -> Extension:
    _check_agents(m, f)
    return Extension(m, Evaluator(m).ext(f))


def evaluate(m: KripkeModel, f: Formula) -> tuple:
    """(Extension, EvalTrace) in one pass."""
    _check_agents(m, f)
    ev = Evaluator(m)
    mask = ev.ext(f)
    return Extension(m, mask), ev.trace(f)


def eval_cw3(m: KripkeModel, f: Formula, variant: str = "Ew2", trace: Optional[EvalTrace] = None) -> Extension:
    if variant not in ("Ew1", "Ew2"):
        raise ValueError("variant must be Ew1 or Ew2")
    _check_agents(m, f)
    ev = Evaluator(m)
    mask, n = ev.cw3(ev.ext(f), variant)
    if trace is not None:
        trace.iterations[f"Cw3{variant[-1]} {render(f)}"] = n
    return Extension(m, mask)


def orbit_length(m: KripkeModel, f: Formula, variant: str = "Ew2") -> int:
    ev = Evaluator(m)
    return ev.cw3(ev.ext(f), variant)[1]


def eval_cw5(m: KripkeModel, f: Formula, trace: Optional[EvalTrace] = None) -> Extension:
    _check_agents(m, f)
    ev = Evaluator(m)
    mask, d = ev.cw5(ev.ext(f))
    if trace is not None:
        trace.iterations[f"Cw5 {render(f)}"] = d
    return Extension(m, mask)


def stabilization_depth(m: KripkeModel, f: Formula) -> int:
    ev = Evaluator(m)
    return ev.cw5(ev.ext(f))[1]


def satisfies(pm: PointedModel, f: Formula) -> bool:
    return bool(extension(pm.model, f).mask >> pm.point & 1)


def valid_on_model(m: KripkeModel, f: Formula) -> bool:
    return extension(m, f).is_all()


# -- countermodel search --------------------------------------------------------

def ambient_agents(f: Formula, agents=None) -> list:
    """Agents for a search: explicit list/count, else those of f, else ['a']."""
    if agents is None:
        found = agents_of(f)
        return found if found else ["a"]
    if isinstance(agents, int):
        found = agents_of(f)
        if len(found) > agents:
            raise ValueError(f"formula mentions {len(found)} agents but only {agents} requested")
        extra = [a for a in default_agents(26) if a not in found]
        return sorted(found + extra[:agents - len(found)])
    agents = list(agents)
    missing = [a for a in agents_of(f) if a not in agents]
    if missing:
        raise UnknownAgent(f"formula mentions agent(s) {missing} outside {agents}")
    return agents


def default_cutoff(agent_count: int) -> int:
    return {1: 4, 2: 3}.get(agent_count, 2)


@dataclass
class SearchResult:
    pointed: Optional[PointedModel]
    examined: int
    exhaustive_worlds: int
    phase: Optional[str]


def search(f: Formula, want: str, frame_class="K", max_worlds: int = 4, budget: int = 2000,
           seed: int = 0, agents=None, exhaustive_cutoff: Optional[int] = None) -> SearchResult:
    """Find the first pointed model where ``f`` is false (want='falsify') or true ('satisfy')."""
    from . import batch

    if max_worlds < 1:
        raise ValueError("max_worlds must be >= 1")
    cls = FrameClass.parse(frame_class)
    agents = ambient_agents(f, agents)
    atoms = atoms_of(f) or ["p"]
    cutoff = default_cutoff(len(agents)) if exhaustive_cutoff is None else exhaustive_cutoff
    cutoff = min(cutoff, max_worlds)
    pred = batch.falsify_predicate(f) if want == "falsify" else batch.satisfy_predicate(f)
    examined = 0
    done = 0
    for n in range(1, cutoff + 1):
        if not batch.exhaustive_feasible(n, len(agents), len(atoms), cls):
            break
        hit, count = batch.first_hit(pred, n, agents, atoms, cls)
        examined += count
        if hit is not None:
            return SearchResult(PointedModel(hit.model, hit.point), examined, n, "exhaustive")
        done = n
    rng = random.Random(seed)
    lo = done + 1
    if lo <= max_worlds:
        for _ in range(budget):
            n = rng.randint(lo, max_worlds)
            m = random_model(n, agents, density=rng.choice((0.2, 0.35, 0.5)),
                             atoms=atoms, frame_class=cls, seed=rng.getrandbits(64))
            examined += 1
            mask = Evaluator(m).ext(f)
            hits = (m.full & ~mask) if want == "falsify" else mask
            if hits:
                return SearchResult(PointedModel(m, (hits & -hits).bit_length() - 1), examined, done, "random")
    return SearchResult(None, examined, done, None)


def find_countermodel(f: Formula, frame_class="K", max_worlds: int = 4, budget: int = 2000,
                      seed: int = 0, agents=None, exhaustive_cutoff: Optional[int] = None):
    """First pointed model (canonical order, then seeded random) falsifying f, or None."""
    res = search(f, "falsify", frame_class, max_worlds, budget, seed, agents, exhaustive_cutoff)
    if res.pointed is not None and satisfies(res.pointed, f):
        raise AssertionError("search returned a model that does not falsify the formula")
    return res.pointed


def shrink_countermodel(pm: PointedModel, f: Formula, frame_class="K") -> PointedModel:
    """Greedily delete worlds, then edges, while f stays false at the point.

    Every intermediate model stays in the frame class, so the result is a
    (locally) minimal witness of the same kind.
    """
    from .kripke import check_frame_class

    cls = FrameClass.parse(frame_class)
    if satisfies(pm, f):
        raise ValueError("the pointed model does not falsify the formula")
    m, point = pm.model, pm.point
    changed = True
    while changed:
        changed = False
        for w in reversed(range(m.n)):
            if w == point:
                continue
            keep = [k for k in range(m.n) if k != w]
            cand = m.restrict(keep)
            cpoint = point - (1 if w < point else 0)
            if check_frame_class(cand, cls) and not satisfies(PointedModel(cand, cpoint), f):
                m, point, changed = cand, cpoint, True
                break
    changed = True
    while changed:
        changed = False
        for a in m.agents:
            for s in range(m.n):
                for t in bits(m.succ[a][s]):
                    cand = m.without_edge(a, s, t)
                    if check_frame_class(cand, cls) and not satisfies(PointedModel(cand, point), f):
                        m, changed = cand, True
                        break
                if changed:
                    break
            if changed:
                break
    return PointedModel(m, point)
