"""Bounded satisfiability and validity over a frame class.

Small models are enumerated exhaustively in canonical order; past the
exhaustive cutoff a seeded random search runs up to ``max_worlds``.  Answers
are therefore ``sat`` (with a checked witness) or ``unsat-up-to-bound``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

from .formula import Formula, Not
from .kripke import FrameClass, PointedModel, model_to_json
from .semantics import search, satisfies

SAT = "sat"
UNSAT = "unsat-up-to-bound"
VALID = "valid-up-to-bound"
COUNTERMODEL = "countermodel"


@dataclass
class SatResult:
    status: str
    witness: Optional[PointedModel]
    searched_bound: int
    exhaustive_worlds: int
    models_examined: int

    def to_json(self) -> dict:
        out = {"status": self.status, "searched_bound": self.searched_bound,
               "exhaustive_worlds": self.exhaustive_worlds,
               "models_examined": self.models_examined}
        if self.witness is not None:
            out["witness"] = model_to_json(self.witness.model, self.witness.point)
        return out


@dataclass
class ValidityResult:
    status: str
    countermodel: Optional[PointedModel]
    searched_bound: int
    exhaustive_worlds: int
    models_examined: int

    def to_json(self) -> dict:
        out = {"status": self.status, "searched_bound": self.searched_bound,
               "exhaustive_worlds": self.exhaustive_worlds,
               "models_examined": self.models_examined}
        if self.countermodel is not None:
            out["countermodel"] = model_to_json(self.countermodel.model, self.countermodel.point)
        return out


def sat(f: Formula, frame_class="K", max_worlds: int = 4, agents=None, seed: int = 0,
        budget: int = 2000, exhaustive_cutoff: Optional[int] = None) -> SatResult:
    cls = FrameClass.parse(frame_class)
    res = search(f, "satisfy", cls, max_worlds, budget, seed, agents, exhaustive_cutoff)
    if res.pointed is not None:
        if not satisfies(res.pointed, f):
            raise AssertionError("satisfiability witness failed re-verification")
        return SatResult(SAT, res.pointed, max_worlds, res.exhaustive_worlds, res.examined)
    return SatResult(UNSAT, None, max_worlds, res.exhaustive_worlds, res.examined)


def valid(f: Formula, frame_class="K", max_worlds: int = 4, agents=None, seed: int = 0,
          budget: int = 2000, exhaustive_cutoff: Optional[int] = None) -> ValidityResult:
    r = sat(Not(f), frame_class, max_worlds, agents, seed, budget, exhaustive_cutoff)
    if r.status == SAT:
        if satisfies(r.witness, f):
            raise AssertionError("countermodel failed re-verification")
        return ValidityResult(COUNTERMODEL, r.witness, max_worlds, r.exhaustive_worlds, r.models_examined)
    return ValidityResult(VALID, None, max_worlds, r.exhaustive_worlds, r.models_examined)
