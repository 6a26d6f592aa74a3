import random

import pytest

from cwlogic import analysis, games
from cwlogic.analysis import (DepthError, binary_tree, bisimilar, invariance_suite, is_bisimulation,
                              max_bisimulation, parity_theorem_check, tree_from_model)
from cwlogic.fixtures import fixture
from cwlogic.formula import Atom, Derived, kw_power, parse
from cwlogic.kripke import KripkeModel, PointedModel, random_model

import oracle

p = Atom("p")


def _edges(worlds, agents, relations, valuation):
    return KripkeModel.from_edges(worlds, relations, valuation, agents=agents)


def test_isomorphic_copy_is_bisimilar():
    rng = random.Random(0)
    for seed in range(20):
        pm = PointedModel(random_model(4, ["a", "b"], atoms=2, seed=seed), 0)
        assert bisimilar(pm, analysis.permuted_copy(pm, rng))


def test_non_bisimilar_pairs():
    assert not bisimilar(fixture("see-p"), fixture("see-notp"))
    assert not bisimilar(games.build_M(1), games.build_N(1))


def test_max_bisimulation_is_a_bisimulation():
    rng = random.Random(1)
    for _ in range(30):
        a = random_model(rng.randint(1, 4), ["a"], atoms=1, seed=rng.randrange(1 << 30))
        b = random_model(rng.randint(1, 4), ["a"], atoms=1, seed=rng.randrange(1 << 30))
        z = max_bisimulation(a, b)
        assert is_bisimulation(z.pairs, a, b)
        # adding any missing pair breaks the zig-zag conditions
        for x in a.worlds:
            for y in b.worlds:
                if (x, y) not in z:
                    assert not is_bisimulation(z.pairs | {(x, y)}, a, b)


def test_bisimulation_agent_mismatch():
    a = _edges(["x"], ["a"], {}, {})
    b = _edges(["x"], ["b"], {}, {})
    with pytest.raises(ValueError):
        max_bisimulation(a, b)


def test_two_cycle_bisimilar_to_loop():
    loop = _edges(["x"], ["a"], {"a": [("x", "x")]}, {"p": ["x"]})
    cyc = _edges(["u", "w"], ["a"], {"a": [("u", "w"), ("w", "u")]}, {"p": ["u", "w"]})
    z = max_bisimulation(loop, cyc)
    assert z.relates("x", "u") and z.relates("x", "w")


@pytest.mark.parametrize("name", sorted(analysis.TRANSFORMS))
def test_each_transform_preserves_bisimilarity(name):
    rng = random.Random(5)
    for _ in range(15):
        pm = PointedModel(random_model(rng.randint(1, 4), ["a", "b"], atoms=1,
                                       seed=rng.randrange(1 << 30)), 0)
        out = analysis.TRANSFORMS[name](pm, rng)
        assert bisimilar(pm, out)


def test_unravel_builds_tree_prefix():
    m = _edges(["x"], ["a"], {"a": [("x", "x")]}, {"p": ["x"]})
    out = analysis.unravel(PointedModel(m, 0), 2)
    assert out.model.n > 1
    assert bisimilar(PointedModel(m, 0), out)


def test_bisimilar_pairs_generator():
    pairs = analysis.bisimilar_pairs(10, seed=2)
    assert len(pairs) == 10
    assert all(bisimilar(a, b) for a, b, *_ in pairs)


def test_invariance_suite_on_bisimilar_pairs():
    pairs = analysis.bisimilar_pairs(10, seed=3)
    fs = analysis.formula_suite(20, ["a", "b"], seed=3)
    rep = invariance_suite(pairs, fs)
    assert rep.ok and rep.checked > 0


def test_invariance_suite_refuses_uncertified():
    pair = (fixture("see-p"), fixture("see-notp"))
    with pytest.raises(ValueError):
        invariance_suite([pair], [p])
    rep = invariance_suite([pair], analysis.formula_suite(30, ["a"], seed=0), certify=False)
    assert rep.uncertified == [0]
    # the pair is separated by p at the successor, visible to K but not to Kw
    rep_k = invariance_suite([pair], [parse("K[a] p")], certify=False)
    assert rep_k.checked == 1 and not rep_k.ok


def test_cw5_suite_cannot_separate_see_p_variants():
    pair = (fixture("see-p"), fixture("see-notp"))
    fs = analysis.formula_suite(60, ["a"], seed=4, ops=analysis.CW5_OPS)
    rep = invariance_suite([pair], fs, certify=False)
    assert rep.checked == 60
    assert rep.ok, rep.violations[:3]


def test_formula_suite_deterministic():
    a = analysis.formula_suite(10, ["a"], seed=9)
    b = analysis.formula_suite(10, ["a"], seed=9)
    assert a == b


# -- trees and parity ------------------------------------------------------------------


def test_binary_tree_shape():
    t = binary_tree(3)
    assert t.model.n == 15
    assert t.depth == 3
    assert bin(t.layer_mask(3)).count("1") == 8
    assert list(t.model.worlds[:3]) == ["v", "v0", "v1"]
    assert bin(t.layer_mask(2, below=1)).count("1") == 2


@pytest.mark.parametrize("leaves,expected", [(0b00, True), (0b11, True), (0b01, False), (0b10, False)])
def test_depth_one_parity(leaves, expected):
    t = binary_tree(1, leaves << 1)
    assert oracle.holds(t.pointed(), parse("Kw[i] p")) == expected
    assert parity_theorem_check(t, p, 1).ok


def _layer_count(t, w, n, mask):
    return bin(mask & t.layer_mask(t.layer[w] + n, below=w)).count("1")


def test_depth_two_all_valuations_against_oracle():
    base = binary_tree(2)
    for v in range(1 << 7):
        m = base.model.with_valuation({"p": v})
        for n in (1, 2):
            ext = oracle.extension_labels(m, kw_power("i", n, p))
            for w, l in base.layer.items():
                if l + n > 2:
                    continue
                count = _layer_count(base, w, n, v)
                assert (m.worlds[w] in ext) == (count % 2 == 0), (v, n, w)


def test_single_false_leaf_breaks_cw5():
    t = binary_tree(2, 0b1111111 & ~(1 << 3))
    assert not oracle.holds(t.pointed(), Derived("Cw5", p))
    rep = analysis.cw5_layer_parity(t, p)
    assert rep.ok and rep.checked == 1


def test_parity_sweep_depth_two():
    rep = analysis.parity_sweep(2)
    assert rep.ok and rep.checked > 0


def test_depth_error():
    with pytest.raises(DepthError):
        parity_theorem_check(binary_tree(2), p, 3)
    with pytest.raises(ValueError):
        parity_theorem_check(binary_tree(2), p, 0)


def test_tree_from_model_validation():
    good = binary_tree(2).model
    t = tree_from_model(good, "v")
    assert t.depth == 2 and t.root == 0
    uneven = _edges(["r", "a", "b", "c", "d"], ["i"],
                    {"i": [("r", "a"), ("r", "b"), ("a", "c"), ("a", "d")]}, {})
    with pytest.raises(ValueError):
        tree_from_model(uneven, "r")
    unary = _edges(["r", "a"], ["i"], {"i": [("r", "a")]}, {})
    with pytest.raises(ValueError):
        tree_from_model(unary, "r")
    shared = _edges(["r", "a", "b", "c"], ["i"],
                    {"i": [("r", "a"), ("r", "b"), ("a", "c"), ("b", "c"), ("a", "b")]}, {})
    with pytest.raises(ValueError):
        tree_from_model(shared, "r")
