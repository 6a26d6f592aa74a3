import json

import pytest

from cwlogic.fixtures import FixtureNotFound, fixture, fixtures, names
from cwlogic.kripke import (FrameClass, KripkeModel, ModelError, PointedModel, check_frame_class,
                            load_model, load_pointed, model_from_json, model_to_json, random_model,
                            reach, save_model, union_relation)


def _m(worlds, rels, val=None, agents=None):
    return KripkeModel.from_edges(worlds, rels, val or {}, agents=agents)


def test_union_relation():
    assert union_relation(_m(["s", "t"], {"a": [("s", "t")]})) == {("s", "t")}
    m = _m(["s", "t", "u"], {"a": [("s", "t")], "b": [("s", "u")]})
    assert union_relation(m) == {("s", "t"), ("s", "u")}
    assert union_relation(fixture("ew1-vs-ew2").model) == {("s", "s"), ("s", "t")}


def test_reach():
    assert reach(_m(["s"], {"a": []})) == {("s", "s")}
    chain = _m(["s", "t", "u"], {"a": [("s", "t"), ("t", "u")]})
    assert ("s", "u") in reach(chain)
    assert ("u", "s") not in reach(chain)
    assert reach(fixture("cw3-not-cw2").model) == {(x, y) for x in "st" for y in "st"}


def test_frame_classes():
    ident = _m(["s", "t"], {"a": [("s", "s"), ("t", "t")]})
    assert check_frame_class(ident, "S5")
    assert not check_frame_class(fixture("cw2-not-cw1").model, "T")
    assert check_frame_class(fixture("cw4-not-cw3").model, FrameClass.S5)
    kd45 = _m(["s", "t"], {"a": [("s", "t"), ("t", "t")]})
    assert check_frame_class(kd45, "KD45") and not check_frame_class(kd45, "S5")
    assert FrameClass.parse("kd45") is FrameClass.KD45
    with pytest.raises(ValueError):
        FrameClass.parse("S4")


@pytest.mark.parametrize("cls", list(FrameClass))
def test_random_model_respects_class(cls):
    for seed in range(30):
        m = random_model(4, 2, atoms=2, frame_class=cls, seed=seed)
        assert check_frame_class(m, cls)


def test_random_model_deterministic():
    assert random_model(5, 2, seed=9) == random_model(5, 2, seed=9)
    assert random_model(1, seed=3).n == 1
    m = random_model(4, 1, frame_class="S5", seed=7)
    assert check_frame_class(m, "S5")


def test_model_validation():
    with pytest.raises(ModelError):
        KripkeModel([], ["a"], {}, {})
    with pytest.raises(ModelError):
        KripkeModel(["s", "s"], ["a"], {}, {})
    with pytest.raises(ModelError):
        _m(["s"], {"a": [("s", "x")]})


def test_pointed_model_accepts_label():
    m = fixture("cw2-not-cw1").model
    assert PointedModel(m, "t").point == 1
    with pytest.raises((KeyError, ValueError)):
        PointedModel(m, "zz")


def test_json_round_trip(tmp_path):
    pm = fixture("ew1-vs-ew2")
    path = tmp_path / "m.json"
    save_model(pm.model, path, pm.point)
    m2, point = load_pointed(path)
    assert m2 == pm.model and point == pm.point
    assert load_model(path) == pm.model


def _doc(**over):
    doc = {"agents": ["a"], "worlds": ["s", "t"], "relations": {"a": [["s", "t"]]},
           "valuation": {"p": ["t"]}, "point": "s"}
    doc.update(over)
    return doc


@pytest.mark.parametrize("doc,pointer", [
    (_doc(relations={"a": [["s", "x"]]}), "/relations/a/0/1"),
    (_doc(worlds=[]), "/worlds"),
    (_doc(worlds=["s", "s"]), "/worlds"),
    (_doc(relations={"b": []}), "/relations/b"),
    (_doc(valuation={"p": ["u"]}), "/valuation/p/0"),
    (_doc(point="u"), "/point"),
    (_doc(extra=1), "/extra"),
    (_doc(agents="a"), "/agents"),
    (_doc(relations={"a": [["s"]]}), "/relations/a/0"),
])
def test_json_errors(doc, pointer):
    with pytest.raises(ModelError) as exc:
        model_from_json(doc)
    assert exc.value.pointer == pointer


def test_json_missing_key():
    doc = _doc()
    del doc["valuation"]
    with pytest.raises(ModelError):
        model_from_json(doc)


def test_load_rejects_duplicate_keys_and_bad_bytes(tmp_path):
    path = tmp_path / "dup.json"
    path.write_text('{"agents": ["a"], "agents": ["b"], "worlds": ["s"], "relations": {}, "valuation": {}}')
    with pytest.raises(ModelError):
        load_pointed(path)
    bad = tmp_path / "bad.json"
    bad.write_bytes(b"\xff\xfe{}")
    with pytest.raises(ModelError):
        load_pointed(bad)
    broken = tmp_path / "broken.json"
    broken.write_text("{")
    with pytest.raises(ModelError):
        load_pointed(broken)


def test_root_key_accepted():
    m, point = model_from_json({k: v for k, v in _doc(root="t").items() if k != "point"})
    assert point == 1


def test_fixture_catalog():
    assert set(names()) == set(fixtures())
    assert fixture("cw2-not-cw1").model.n == 2
    assert fixture("cw5-not-cw32").model.n == 11
    with pytest.raises(FixtureNotFound):
        fixture("nope")
    for name in names():
        doc = model_to_json(fixture(name).model, fixture(name).point)
        json.dumps(doc)
        m2, _ = model_from_json(doc)
        assert m2 == fixture(name).model


def test_fixture_shapes():
    m = fixture("cw2-not-cw1").model
    assert m.edges("i") == [("s", "t")]
    assert m.labels(m.atom("p")) == ["t"]
    m = fixture("cw3-not-cw2").model
    assert set(m.edges("i")) == {("s", "t"), ("t", "t"), ("t", "s")}
    m = fixture("cw4-not-cw3").model
    assert len(m.edges("i")) == 4


def test_model_helpers():
    m = fixture("cw31-not-cw32").model
    sub = m.restrict([0, 1])
    assert sub.n == 2
    assert m.without_edge("i", 0, 1).edges("i") != m.edges("i")
    lifted = fixture("cw2-not-cw1").model.with_agents(["i", "j"], copy_from="i")
    assert lifted.edges("j") == lifted.edges("i")
    assert lifted.rename_agents({"j": "k"}).agents == ("i", "k")
