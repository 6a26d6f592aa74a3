"""Acceptance criteria 1-10.

Each criterion has tests named ``test_criterion_NN``; the conftest prints one
PASS/FAIL line per criterion at the end of the run.
"""

import random
import time

import pytest

from cwlogic import analysis, axiomatics, decision, games, relations
from cwlogic.fixtures import fixture
from cwlogic.formula import Atom, Derived, conj, kw_seq, parse
from cwlogic.kripke import PointedModel, check_frame_class, random_model
from cwlogic.semantics import (EvalTrace, eval_cw3, eval_cw5, extension, orbit_length,
                               satisfies, stabilization_depth)

import oracle

P = Atom("p")

# -- 1. fixture truth table -------------------------------------------------------------

CLAIMS = [
    ("cw2-not-cw1", "s", "Cw21 p", True),
    ("cw2-not-cw1", "s", "Cw1 p", False),
    ("cw2-not-cw1", "s", "K[i] p", True),
    ("cw2-not-cw1", "s", "p", False),
    ("cw3-not-cw2", "s", "Cw31 p", True),
    ("cw3-not-cw2", "s", "Cw32 p", True),
    ("cw3-not-cw2", "s", "Cw21 p", False),
    ("cw3-not-cw2", "s", "Cw22 p", False),
    ("cw3-not-cw2", "t", "Kw[i] p", False),
    ("cw4-not-cw3", "s", "Cw4 p", True),
    ("cw4-not-cw3", "s", "Ew2 p", False),
    ("cw4-not-cw3", "s", "Cw31 p", False),
    ("ew1-vs-ew2", "s", "Ew2 p", True),
    ("ew1-vs-ew2", "s", "Ew1 p", False),
    ("cw31-not-cw32", "s", "Cw31 p", True),
    ("cw31-not-cw32", "s", "Cw32 p", False),
    ("cw5-not-cw32", "s", "Cw5 p", True),
    ("cw5-not-cw32", "s", "Cw32 p", False),
    ("cw32-not-cw5", "s", "Cw32 p", True),
    ("cw32-not-cw5", "s", "Cw5 p", False),
    ("see-p", "s", "K[a] p", True),
    ("see-notp", "s", "K[a] p", False),
]


def test_criterion_01_fixture_truth_table():
    t0 = time.perf_counter()
    wrong = []
    for name, world, text, expected in CLAIMS:
        pm = fixture(name)
        pm = PointedModel(pm.model, world)
        f = parse(text)
        got = satisfies(pm, f)
        if got != expected or oracle.holds(pm, f) != expected:
            wrong.append((name, world, text, expected, got))
    elapsed = time.perf_counter() - t0
    assert len(CLAIMS) >= 14
    assert wrong == []
    assert elapsed < 1.0


# -- 2. figure reproduction ---------------------------------------------------------------

FIGURES = [("K", 1), ("K", 2), ("T", 2), ("S5", 2), ("KD45", 2)]


@pytest.fixture(scope="module")
def matrices():
    out, t0 = {}, time.perf_counter()
    for cls, k in FIGURES:
        out[cls, k] = relations.implication_matrix(cls, k)
    return out, time.perf_counter() - t0


@pytest.mark.parametrize("cls,k", FIGURES)
def test_criterion_02_figure(matrices, cls, k):
    mats, _ = matrices
    m = mats[cls, k]
    assert relations.diff(m, relations.expected_matrix(cls, k)) == []
    for (src, dst), v in m.cells.items():
        if v.status == relations.REFUTED:
            assert v.witness.model.n <= 11
            assert check_frame_class(v.witness.model, cls)
            assert not oracle.holds(v.witness, relations.implication(src, dst))


def test_criterion_02_runtime(matrices):
    _, elapsed = matrices
    assert elapsed < 300


# -- 3. soundness -------------------------------------------------------------------------


def test_criterion_03_soundness():
    t0 = time.perf_counter()
    extra = {}
    for n in (2, 3):
        a, b = axiomatics.nary_kw_schemas(n)
        extra[f"nary{n}-1"], extra[f"nary{n}-2"] = a, b
    rep = axiomatics.soundness_sample(axiomatics.SCHEMA_NAMES, n_models=200, seed=0,
                                      sizes=(1, 6), agent_counts=(1, 2), frame_class="S5",
                                      extra=extra)
    assert rep.ok, rep.violations[:3]
    assert set(rep.checked) >= set(axiomatics.SCHEMA_NAMES) | set(extra)
    assert all(v >= 200 for v in rep.checked.values())
    assert time.perf_counter() - t0 < 60


# -- 4. equivalence collapses -------------------------------------------------------------


def _models(count, cls, seed):
    rng = random.Random(seed)
    for _ in range(count):
        yield random_model(rng.randint(1, 5), rng.choice([1, 2]), density=rng.choice([0.2, 0.5, 0.8]),
                           atoms=1, frame_class=cls, seed=rng.randrange(1 << 30))


def test_criterion_04_ew_on_reflexive():
    bad = 0
    for m in _models(500, "T", 1):
        a = extension(m, Derived("Ew1", P)).mask
        b = extension(m, Derived("Ew2", P)).mask
        bad += a != b
    assert bad == 0


def test_criterion_04_cw_on_s5():
    ops = ["Cw1", "Cw21", "Cw22", "Cw31", "Cw32", "Cw5"]
    bad = 0
    for k, m in enumerate(_models(500, "S5", 2)):
        exts = {extension(m, Derived(o, P)).mask for o in ops}
        bad += len(exts) != 1
        if k % 10 == 0:
            bad += len({oracle.extension_labels(m, Derived(o, P)) for o in ops}) != 1
    assert bad == 0


def test_criterion_04_cwprim_on_k():
    from cwlogic.formula import Cw
    bad = 0
    for m in _models(500, "K", 3):
        bad += extension(m, Cw(P)).mask != extension(m, Derived("Cw1", P)).mask
    assert bad == 0


# -- 5. fixpoints against truncated conjunctions ----------------------------------------


def test_criterion_05_fixpoint_oracle():
    rng = random.Random(5)
    bad = 0
    for _ in range(200):
        m = random_model(rng.randint(1, 5), rng.choice([1, 2]), density=rng.choice([0.2, 0.4, 0.6]),
                         atoms=1, frame_class="K", seed=rng.randrange(1 << 30))
        d5 = stabilization_depth(m, P)
        cw5 = conj(kw_seq(s, P) for s in oracle.agent_strings(m.agents, d5))
        if set(eval_cw5(m, P).members) != oracle.extension_labels(m, cw5):
            bad += 1
        longer = conj(kw_seq(s, P) for s in oracle.agent_strings(m.agents, d5 + 1))
        if oracle.extension_labels(m, longer) != oracle.extension_labels(m, cw5):
            bad += 1
        for variant in ("Ew1", "Ew2"):
            d3 = orbit_length(m, P, variant)
            powers, cur = [], P
            for _ in range(d3):
                cur = Derived(variant, cur)
                powers.append(cur)
            if set(eval_cw3(m, P, variant).members) != oracle.extension_labels(m, conj(powers)):
                bad += 1
    assert bad == 0


def test_criterion_05_trace_records_iterations():
    m = fixture("cw5-not-cw32").model
    tr = EvalTrace(Derived("Cw5", P), "", {}, {})
    eval_cw5(m, P, trace=tr)
    assert tr.iterations and all(v >= 1 for v in tr.iterations.values())


# -- 6. expressivity separation -----------------------------------------------------------

_N3_REASON = ("the C-formula <><>Cp (modal depth 4) is false at M_n,r and true at N_n,r for every n, "
              "so spoiler wins in 3 rounds and duplicator cannot win the 3-round game")


@pytest.mark.parametrize("n", [1, 2, pytest.param(3, marks=pytest.mark.xfail(strict=True, reason=_N3_REASON))])
def test_criterion_06_separation(n):
    t0 = time.perf_counter()
    rep = games.verify_separation(n)
    assert rep.m_satisfies is True
    assert rep.n_satisfies is False
    assert rep.bisimilar is False
    assert time.perf_counter() - t0 < 120
    assert rep.winner == games.DUPLICATOR


# -- 7. bisimulation invariance -----------------------------------------------------------


def test_criterion_07_invariance():
    pairs = analysis.bisimilar_pairs(100, seed=7)
    suites = {k: analysis.formula_suite(50, ["a", "b"][:k], seed=70 + k, depth=3) for k in (1, 2)}
    assert all(len(s) == 50 for s in suites.values())
    total = analysis.InvarianceReport()
    for k in (1, 2):
        group = [pr for pr in pairs if len(pr[0].model.agents) == k]
        rep = analysis.invariance_suite(group, suites[k])
        total.checked += rep.checked
        total.violations += rep.violations
    assert total.checked == 100 * 50
    assert total.violations == []


# -- 8. binary-tree parity ----------------------------------------------------------------


def test_criterion_08_parity():
    t0 = time.perf_counter()
    for depth in (2, 3):
        rep = analysis.parity_sweep(depth)
        assert rep.ok, rep.mismatches[:3]
        assert rep.checked > 0
    assert time.perf_counter() - t0 < 120


# -- 9. non-normality ---------------------------------------------------------------------


def test_criterion_09_non_normality():
    f = parse("(Cw5 p & Cw5 q) -> Cw5(p & q)")
    r = decision.valid(f, "K", max_worlds=4)
    assert r.status == decision.COUNTERMODEL
    assert r.countermodel.model.n <= 4
    assert not oracle.holds(r.countermodel, f)


# -- 10. proof checker --------------------------------------------------------------------


def test_criterion_10_samples_accepted():
    rules = set()
    for name in axiomatics.SAMPLE_PROOFS:
        pr = axiomatics.bundled_proof(name)
        v = axiomatics.check_proof(pr)
        assert v.accepted, (name, v.message)
        rules |= {line.rule for line in pr.lines}
    assert set(axiomatics.SCHEMA_NAMES) <= rules
    deriv = {line.rule for line in axiomatics.bundled_proof("derivation.json").lines}
    assert {"MP", "KwNEC", "CwNEC", "KwRE", "CwRE"} <= deriv


def test_criterion_10_mutations_rejected():
    manifest = axiomatics.mutation_manifest()
    assert len(manifest) == 10
    for name, want in manifest.items():
        v = axiomatics.check_proof(axiomatics.bundled_proof(f"mutations/{name}"))
        assert not v.accepted, name
        assert v.failing_line == want["line"], (name, v.message)
        assert want["reason"] in v.message, (name, v.message)
