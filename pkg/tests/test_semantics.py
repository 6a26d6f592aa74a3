import itertools
import random

import pytest

from cwlogic.fixtures import fixture
from cwlogic.formula import DERIVED_OPS, Atom, C, Derived, E, Implies, Kw, parse, random_formula
from cwlogic.kripke import KripkeModel, PointedModel, check_frame_class, random_model
from cwlogic.semantics import (EvalTrace, UnknownAgent, eval_cw3, eval_cw5, evaluate, extension,
                               find_countermodel, orbit_length, satisfies, search,
                               shrink_countermodel, stabilization_depth, valid_on_model)

import oracle

P = Atom("p")
ALL_OPS = ("not", "and", "implies", "K", "Kw", "E", "C", "Cw") + DERIVED_OPS


def test_agrees_with_oracle_on_random_formulas():
    rng = random.Random(11)
    for _ in range(300):
        k = rng.choice([1, 2])
        agents = ["a", "b"][:k]
        m = random_model(rng.randint(1, 5), agents, density=rng.choice([0.2, 0.4, 0.7]),
                         atoms=2, frame_class=rng.choice(["K", "T", "KD45", "S5"]),
                         seed=rng.randrange(1 << 30))
        f = random_formula(rng, ["p", "q"], agents, 4, ALL_OPS)
        assert set(extension(m, f).members) == oracle.extension_labels(m, f), f


def test_contradiction_has_empty_extension():
    m = random_model(4, 2, seed=1)
    assert len(extension(m, parse("p & ~p"))) == 0
    assert extension(m, parse("p | ~p")).is_all


def test_extension_container():
    m = fixture("cw2-not-cw1").model
    ext = extension(m, P)
    assert "t" in ext and "s" not in ext
    assert list(ext) == ["t"] and len(ext) == 1


def test_vacuous_kw():
    m = KripkeModel(["s", "t"], ["a"], {"a": [0, 0]}, {"p": 1})
    for f in ("Kw[a] p", "Kw[a] ~p", "Kw[a] (p & ~p)"):
        assert extension(m, parse(f)).is_all


def test_empty_relations_make_cw3_total():
    m = KripkeModel(["s", "t", "u"], ["a", "b"], {}, {"p": 0b101})
    for variant in ("Ew1", "Ew2"):
        assert eval_cw3(m, P, variant).is_all


def test_single_loop_cw5():
    m = KripkeModel(["w"], ["a"], {"a": [1]}, {"p": 0})
    assert eval_cw5(m, P).members == ["w"]


def test_fixture_fixpoints():
    m = fixture("cw3-not-cw2").model
    for variant in ("Ew1", "Ew2"):
        assert "s" in eval_cw3(m, P, variant)
    m = fixture("cw31-not-cw32").model
    assert "s" in eval_cw3(m, P, "Ew1")
    assert "s" not in eval_cw3(m, P, "Ew2")
    assert "s" in eval_cw5(fixture("cw5-not-cw32").model, P)
    m = fixture("cw32-not-cw5").model
    assert "s" not in eval_cw5(m, P)
    assert "s" in eval_cw3(m, P, "Ew2")


def test_satisfies_examples():
    assert satisfies(fixture("see-p"), parse("K[a] p"))
    assert not satisfies(fixture("see-notp"), parse("K[a] p"))
    assert not satisfies(PointedModel(fixture("cw3-not-cw2").model, "t"), parse("Kw[i] p"))
    assert satisfies(fixture("cw2-not-cw1"), parse("p | ~p"))


def test_unknown_agent():
    with pytest.raises(UnknownAgent):
        extension(fixture("cw2-not-cw1").model, parse("Kw[z] p"))


def test_trace_records_iterations_and_serializes():
    m = fixture("cw5-not-cw32").model
    ext, tr = evaluate(m, parse("Cw5 p & Cw31 p & Kw[i] p"))
    doc = tr.to_json()
    assert doc["iterations"]
    assert all(v >= 1 for v in doc["iterations"].values())
    assert all(isinstance(v, list) for v in doc["extensions"].values())
    assert len(doc["model"]) == 12


def test_recorded_depths():
    m = fixture("cw5-not-cw32").model
    assert stabilization_depth(m, P) >= 1
    assert orbit_length(m, P) >= 1
    tr = EvalTrace("x", "", {}, {})
    eval_cw3(m, P, "Ew1", trace=tr)
    assert list(tr.iterations.values()) == [orbit_length(m, P, "Ew1")]


def test_common_knowledge_properties_on_fixtures():
    from cwlogic.fixtures import fixtures
    q = Atom("q")
    for fx in fixtures().values():
        m = fx.model
        assert valid_on_model(m, Implies(C(P), C(E(P))))
        # monotonicity of C: ext(p & q) is inside ext(p)
        m2 = m.with_valuation({"p": m.atom("p"), "q": m.atom("p") & 1})
        a = extension(m2, C(parse("p & q"))).mask
        b = extension(m2, C(P)).mask
        assert a & ~b == 0
        assert valid_on_model(m2, Implies(C(parse("p & q")), C(q)))


def test_cw21_does_not_imply_cw1_on_fixture():
    assert not valid_on_model(fixture("cw2-not-cw1").model, parse("Cw21 p -> Cw1 p"))
    assert valid_on_model(random_model(3, seed=2), parse("p -> p"))


# -- countermodel search -----------------------------------------------------------------


def test_find_countermodel_minimal_shape():
    f = parse("Cw21 p -> Cw1 p")
    pm = find_countermodel(f, "K")
    assert pm is not None
    assert pm.model.n == 2
    assert not oracle.holds(pm, f)
    assert not satisfies(fixture("cw2-not-cw1"), f)


def test_find_countermodel_none_for_valid():
    assert find_countermodel(parse("p -> p"), "K") is None
    assert find_countermodel(parse("Cw1 p -> Cw21 p"), "K", max_worlds=5, budget=300) is None


def _canonical_first_failure(f, n):
    """Independent enumeration in the documented canonical order (one agent, one atom)."""
    full = (1 << n) - 1
    for code in range(1 << (n * n)):
        edges = [(f"w{s}", f"w{t}") for s in range(n) for t in range(n) if code >> (s * n + t) & 1]
        for v in range(1 << n):
            m = KripkeModel.from_edges([f"w{k}" for k in range(n)], {"a": edges},
                                       {"p": [f"w{k}" for k in range(n) if v >> k & 1]})
            bad = sorted(set(m.worlds) - oracle.extension_labels(m, f), key=lambda w: int(w[1:]))
            if bad:
                return m, bad[0]
    return None


@pytest.mark.parametrize("text", ["Cw21 p -> Cw1 p", "Kw[a] p -> p", "Cw5 p -> Cw32 p", "K[a] p"])
def test_exhaustive_search_follows_canonical_order(text):
    f = parse(text)
    res = search(f, "falsify", "K", max_worlds=3, budget=0)
    expected = None
    for n in range(1, 4):
        expected = _canonical_first_failure(f, n)
        if expected:
            break
    if expected is None:
        assert res.pointed is None
        return
    m, w = expected
    assert res.phase == "exhaustive"
    assert res.pointed.model == m
    assert res.pointed.label == w


def test_search_is_deterministic_under_seed():
    f = parse("Cw5 p -> Cw32 p")
    a = search(f, "falsify", "K", max_worlds=7, budget=300, seed=4, agents=2, exhaustive_cutoff=2)
    b = search(f, "falsify", "K", max_worlds=7, budget=300, seed=4, agents=2, exhaustive_cutoff=2)
    assert (a.pointed is None) == (b.pointed is None)
    if a.pointed is not None:
        assert a.pointed.model == b.pointed.model and a.pointed.point == b.pointed.point


@pytest.mark.parametrize("cls", ["K", "T", "KD45", "S5"])
def test_search_respects_class(cls):
    f = parse("Kw[a] p -> p")
    pm = find_countermodel(f, cls)
    if pm is not None:
        assert check_frame_class(pm.model, cls)
        assert not oracle.holds(pm, f)


def test_shrink_countermodel():
    f = parse("Cw21 p -> Cw1 p")
    base = fixture("cw2-not-cw1").model
    big = KripkeModel(list(base.worlds) + ["x", "y"], ["i"],
                      {"i": list(base.succ["i"]) + [0b1000, 0b0100]}, {"p": base.atom("p") | 0b1100})
    pm = shrink_countermodel(PointedModel(big, "s"), f, "K")
    assert pm.model.n == 2
    assert not satisfies(pm, f)
    with pytest.raises(ValueError):
        shrink_countermodel(fixture("cw2-not-cw1"), parse("p -> p"))


def test_search_agents_argument():
    f = parse("Kw[a] p")
    res = search(f, "falsify", "K", max_worlds=2, agents=2)
    assert set(res.pointed.model.agents) == {"a", "b"}
    with pytest.raises(ValueError):
        search(parse("Kw[a] p & Kw[b] p"), "falsify", "K", agents=1)
    assert list(itertools.islice(oracle.agent_strings(["a"], 2), 3)) == [("a",), ("a", "a")]
