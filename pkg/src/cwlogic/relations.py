"""Implication matrices among the commonly-knowing-whether operators.

For a frame class and agent count we decide, for every ordered pair of
operators ``O, O'``, whether ``O p -> O' p`` can be falsified.  Refutations
come with a re-verified witness; the remaining cells are reported as
``valid-up-to-bound`` since bounded search cannot establish validity.
"""

from __future__ import annotations

import itertools
import random
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import batch
from .fixtures import fixtures
from .formula import Atom, Derived, Implies
from .kripke import FrameClass, PointedModel, random_model, model_to_json
from .semantics import Evaluator, satisfies, shrink_countermodel

OPERATORS = ("Cw1", "Cw21", "Cw22", "Cw31", "Cw32", "Cw4", "Cw5")
AGENT_NAMES = ("i", "j")
VALID = "valid-up-to-bound"
REFUTED = "refuted"


def implication(src: str, dst: str):
    p = Atom("p")
    return Implies(Derived(src, p), Derived(dst, p))


@dataclass
class Verdict:
    src: str
    dst: str
    status: str = VALID
    witness: Optional[PointedModel] = None
    source: Optional[str] = None        # fixture name, "exhaustive" or "random"

    def to_json(self, bound: dict) -> dict:
        out = {"src": self.src, "dst": self.dst, "status": self.status, "bound": bound}
        if self.witness is not None:
            out["witness"] = model_to_json(self.witness.model, self.witness.point)
            out["witness_source"] = self.source
        return out


@dataclass
class Matrix:
    frame_class: FrameClass
    agents: int
    cells: dict
    bound: dict = field(default_factory=dict)

    def status(self, src, dst) -> str:
        return self.cells[src, dst].status

    def arrows(self) -> set:
        return {k for k, v in self.cells.items() if v.status == VALID}

    def to_json(self) -> dict:
        return {
            "class": self.frame_class.value,
            "agents": self.agents,
            "cells": [self.cells[s, d].to_json(self.bound) for s in OPERATORS for d in OPERATORS],
        }

    def table(self) -> str:
        return render_table({k: v.status == VALID for k, v in self.cells.items()})


def render_table(arrows: dict) -> str:
    """Grid with rows as sources; '=>' marks an implication, '.' a refutation."""
    width = max(len(o) for o in OPERATORS) + 1
    head = " " * width + "".join(o.rjust(width) for o in OPERATORS)
    lines = [head]
    for s in OPERATORS:
        row = s.ljust(width)
        for d in OPERATORS:
            row += ("=>" if arrows[s, d] else ".").rjust(width)
        lines.append(row)
    return "\n".join(lines)


def _lift(pm: PointedModel, agents: list) -> Optional[PointedModel]:
    """Put a fixture on the requested agent names, copying relations where needed."""
    m = pm.model
    if len(m.agents) > len(agents):
        return None
    if m.agents == ("a",):
        m = m.rename_agents({"a": agents[0]})
    if any(a not in agents for a in m.agents):
        return None
    m = m.with_agents(agents, copy_from=m.agents[0])
    return PointedModel(m, pm.point)


def _op_masks(ev: Evaluator) -> dict:
    p = Atom("p")
    return {o: ev.ext(Derived(o, p)) for o in OPERATORS}


def exhaustive_worlds(cls: FrameClass, agent_count: int, bound: int, limit: int = 1 << 26) -> int:
    n = 0
    while n < bound and batch.exhaustive_feasible(n + 1, agent_count, 1, cls, limit):
        n += 1
    return n


def implication_matrix(frame_class="K", agent_count: int = 1, bound: int = 11,
                       seed: int = 0, budget: int = 60000, use_fixtures: bool = True,
                       exhaustive_limit: int = 1 << 26) -> Matrix:
    """Compute every cell of the implication matrix.

    Order of attack: bundled fixtures that belong to the class, then every
    pointed model up to the exhaustive world count, then ``budget`` seeded
    random models of up to ``bound`` worlds.
    """
    cls = FrameClass.parse(frame_class)
    if agent_count not in (1, 2):
        raise ValueError("agent_count must be 1 or 2")
    if bound < 3:
        raise ValueError("bound must be at least 3 worlds")
    agents = list(AGENT_NAMES[:agent_count])
    cells = {(s, d): Verdict(s, d) for s in OPERATORS for d in OPERATORS}
    open_cells = {k for k in cells if k[0] != k[1]}

    def refute(key, pm, source):
        v = cells[key]
        v.status, v.witness, v.source = REFUTED, pm, source
        open_cells.discard(key)

    if use_fixtures:
        for name, fx in sorted(fixtures().items()):
            if cls not in fx.classes:
                continue
            pm = _lift(fx.pointed, agents)
            if pm is None:
                continue
            masks = _op_masks(Evaluator(pm.model))
            for key in sorted(open_cells):
                s, d = key
                if masks[s] >> pm.point & 1 and not masks[d] >> pm.point & 1:
                    refute(key, pm, name)

    ex_n = exhaustive_worlds(cls, agent_count, bound, exhaustive_limit)
    for n in range(1, ex_n + 1):
        if not open_cells:
            break
        _sweep(n, cls, agents, open_cells, refute)

    rng = random.Random(seed)
    lo = ex_n + 1
    if lo <= bound:
        for _ in range(budget):
            if not open_cells:
                break
            n = rng.randint(lo, bound)
            m = random_model(n, agents, density=rng.choice((0.15, 0.3, 0.45)), atoms=["p"],
                             frame_class=cls, seed=rng.getrandbits(64))
            masks = _op_masks(Evaluator(m))
            for key in sorted(open_cells):
                s, d = key
                bad = masks[s] & ~masks[d]
                if bad:
                    refute(key, PointedModel(m, (bad & -bad).bit_length() - 1), "random")

    for key, v in cells.items():
        if v.source == "random":
            v.witness = shrink_countermodel(v.witness, implication(*key), cls)

    for key, v in cells.items():
        if v.status == REFUTED and satisfies(v.witness, implication(*key)):
            raise AssertionError(f"witness for {key} does not refute the implication")
    bound_info = {"max_worlds": bound, "exhaustive_worlds": ex_n,
                  "random_models": budget, "seed": seed}
    return Matrix(cls, agent_count, cells, bound_info)


def _sweep(n, cls, agents, open_cells, refute):
    """One canonical-order pass over all n-world models, shared by every open cell."""
    total = batch.frame_count(n, len(agents), cls)
    V = 1 << n
    step = max(1, batch.CHUNK_CELLS // V)
    vals = batch.valuation_table(n, ["p"])
    for start in range(0, total, step):
        if not open_cells:
            return
        stop = min(total, start + step)
        succ = batch.frames_slice(n, len(agents), cls, start, stop)
        fb = batch.FrameBatch(succ, agents)
        ext = {o: np.broadcast_to(fb.evaluate(Derived(o, Atom("p")), vals), (stop - start, V))
               for o in OPERATORS}
        for key in sorted(open_cells):
            s, d = key
            hits = ext[s] & ~ext[d]
            flat = np.flatnonzero(hits.reshape(-1))
            if len(flat):
                fi, v = divmod(int(flat[0]), V)
                mask = int(hits[fi, v])
                m = batch.model_at(succ[fi], agents, ["p"], n, v)
                refute(key, PointedModel(m, (mask & -mask).bit_length() - 1), "exhaustive")


# -- expected figures -------------------------------------------------------------

def _closure(edges: set) -> set:
    arrows = set(edges) | {(o, o) for o in OPERATORS}
    changed = True
    while changed:
        changed = False
        for (a, b), (c, d) in itertools.product(list(arrows), repeat=2):
            if b == c and (a, d) not in arrows:
                arrows.add((a, d))
                changed = True
    return arrows


def _both(a, b):
    return {(a, b), (b, a)}


_MULTI = {("Cw1", "Cw21"), ("Cw21", "Cw22"), ("Cw21", "Cw31"), ("Cw22", "Cw32"),
          ("Cw22", "Cw5"), ("Cw22", "Cw4")}

_SINGLE = ({("Cw1", "Cw21"), ("Cw21", "Cw31"), ("Cw21", "Cw4"), ("Cw5", "Cw31")}
           | _both("Cw21", "Cw22") | _both("Cw31", "Cw32") | _both("Cw31", "Cw5"))

_REFLEXIVE = (set().union(*(_both("Cw1", o) for o in ("Cw21", "Cw22", "Cw31", "Cw32", "Cw5")))
              | {("Cw1", "Cw4")})

EXPECTED = {
    (FrameClass.K, 1): _SINGLE,
    (FrameClass.K, 2): _MULTI,
    (FrameClass.KD45, 2): _MULTI,
    (FrameClass.T, 2): _REFLEXIVE,
    (FrameClass.S5, 2): _REFLEXIVE,
}


def expected_matrix(frame_class, agent_count: int) -> dict:
    """(src, dst) -> True when the published diagram has a (transitive) arrow."""
    cls = FrameClass.parse(frame_class)
    try:
        edges = EXPECTED[cls, agent_count]
    except KeyError:
        raise ValueError(f"no reference diagram for class {cls.value} with {agent_count} agent(s)") from None
    arrows = _closure(edges)
    return {(s, d): (s, d) in arrows for s in OPERATORS for d in OPERATORS}


def diff(matrix: Matrix, expected: dict) -> list:
    """Cells where computed status and expected arrow disagree."""
    out = []
    for (s, d), want in sorted(expected.items()):
        got = matrix.status(s, d) == VALID
        if got != want:
            out.append({"src": s, "dst": d, "expected": "arrow" if want else "no-arrow",
                        "computed": matrix.status(s, d)})
    return out
