import json
import time

import pytest

from cwlogic import decision
from cwlogic.formula import parse
from cwlogic.kripke import check_frame_class

import oracle


def test_kw_iff_unsat_negation():
    t0 = time.perf_counter()
    r = decision.sat(parse("~(Kw[a] p <-> Kw[a] ~p)"), "K", max_worlds=4)
    assert r.status == decision.UNSAT
    assert r.witness is None
    assert r.exhaustive_worlds == 4
    assert time.perf_counter() - t0 < 60


def test_sat_witness_verified():
    f = parse("Kw[a] p & ~Kw[b] p")
    r = decision.sat(f, "S5", max_worlds=4)
    assert r.status == decision.SAT
    assert oracle.holds(r.witness, f)
    assert check_frame_class(r.witness.model, "S5")


def test_unsat_contradiction():
    r = decision.sat(parse("p & ~p"), "K", max_worlds=3)
    assert r.status == decision.UNSAT


@pytest.mark.parametrize("cls,text,expected", [
    ("T", "K[a] p -> p", decision.VALID),
    ("K", "K[a] p -> p", decision.COUNTERMODEL),
    ("S5", "~K[a] p -> K[a] ~K[a] p", decision.VALID),
    ("KD45", "K[a] p -> K[a] K[a] p", decision.VALID),
    ("KD45", "Kw[a] Kw[a] p", decision.VALID),
    ("K", "Kw[a] Kw[a] p", decision.COUNTERMODEL),
    ("S5", "Cw p -> Kw[a] p", decision.VALID),
])
def test_valid_known_cases(cls, text, expected):
    f = parse(text)
    r = decision.valid(f, cls, max_worlds=3)
    assert r.status == expected
    if r.countermodel is not None:
        assert not oracle.holds(r.countermodel, f)
        assert check_frame_class(r.countermodel.model, cls)


def test_results_serialize():
    r = decision.valid(parse("K[a] p -> p"), "K", max_worlds=2)
    doc = r.to_json()
    json.dumps(doc)
    assert doc["status"] == "countermodel" and "countermodel" in doc
    doc = decision.sat(parse("p & ~p"), "K", max_worlds=2).to_json()
    assert doc["status"] == "unsat-up-to-bound" and "witness" not in doc


def test_random_phase_beyond_cutoff():
    # cutoff 1 forces the seeded random phase for sizes 2..4
    f = parse("Cw21 p -> Cw1 p")
    r = decision.valid(f, "K", max_worlds=4, exhaustive_cutoff=1, budget=500, seed=1)
    assert r.status == decision.COUNTERMODEL
    assert r.exhaustive_worlds == 1
    assert not oracle.holds(r.countermodel, f)
