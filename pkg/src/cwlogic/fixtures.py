"""Named countermodels separating the knowing-whether operators.

Each entry is a small pointed model together with the frame classes its
relations belong to.  Agents are named ``i`` and ``j`` (``a`` for the two
see-p models).
"""

from __future__ import annotations

from dataclasses import dataclass

from .kripke import KripkeModel, PointedModel, FrameClass, check_frame_class


@dataclass(frozen=True)
class Fixture:
    name: str
    pointed: PointedModel
    note: str

    @property
    def model(self) -> KripkeModel:
        return self.pointed.model

    @property
    def classes(self) -> frozenset:
        return frozenset(c for c in FrameClass if check_frame_class(self.model, c))


class FixtureNotFound(KeyError):
    pass


def _pm(worlds, relations, p_worlds, agents, point="s"):
    m = KripkeModel.from_edges(worlds, relations, {"p": p_worlds}, agents=agents)
    return PointedModel(m, m.index(point))


def _build():
    out = {}

    def add(name, pm, note):
        out[name] = Fixture(name, pm, note)

    add("cw2-not-cw1",
        _pm(["s", "t"], {"i": [("s", "t")]}, ["t"], ["i"]),
        "s knows p via its only successor, but p is false at s itself")
    add("cw3-not-cw2",
        _pm(["s", "t"], {"i": [("s", "t"), ("t", "t"), ("t", "s")]}, ["s"], ["i"]),
        "s has a single successor, so every Kw iterate holds at s; t does not know whether p")
    add("cw4-not-cw3",
        _pm(["s", "t"], {"i": [(x, y) for x in "st" for y in "st"]}, ["s"], ["i"]),
        "total relation on two worlds that disagree on p")
    add("ew1-vs-ew2",
        _pm(["s", "t"], {"i": [("s", "s")], "j": [("s", "t")]}, ["s"], ["i", "j"]),
        "each agent has one successor, but the two successors disagree on p")
    add("cw31-not-cw32",
        _pm(["s", "t1", "t2", "t3", "t4"],
            {"i": [("s", "t1"), ("s", "t2"), ("t1", "t3"), ("t1", "t4"), ("t2", "t4")],
             "j": [("t2", "t3")]},
            ["s", "t1", "t2", "t3"], ["i", "j"]),
        "the Ew1 orbit of p stays above s while the Ew2 orbit does not")
    add("cw32-not-cw5",
        _pm(["s", "t", "u", "v", "w"],
            {"i": [("s", "t"), ("s", "u"), ("t", "v"), ("u", "w"), ("u", "v")],
             "j": [("t", "v"), ("t", "w"), ("u", "w")]},
            ["s", "t", "u", "v"], ["i", "j"]),
        "Kw_i Kw_j p fails at s although every Ew2 iterate holds")
    add("cw5-not-cw32",
        _pm(["s", "t1", "t2", "u1", "u2", "u3", "u4", "v1", "v2", "v3", "v4"],
            {"i": [("s", "t1"), ("s", "t2"), ("t1", "u1"), ("t1", "u2"), ("t2", "u3"),
                   ("t2", "u4"), ("u1", "v1"), ("u1", "v2"), ("u4", "v3"), ("u4", "v4")],
             "j": [("u2", "v2"), ("u2", "v1"), ("u4", "v3"), ("u4", "v4")]},
            ["s", "t1", "t2", "u1", "u2", "u3", "u4", "v1", "v3"], ["i", "j"]),
        "every agent-sequence Kw iterate holds at s but the Ew2 orbit drops s")
    add("see-p",
        _pm(["s", "t"], {"a": [("s", "t")]}, ["t"], ["a"]),
        "the point sees a single p-world")
    add("see-notp",
        _pm(["s", "t"], {"a": [("s", "t")]}, [], ["a"]),
        "the point sees a single non-p world")
    return out


_CATALOG = _build()


def fixtures() -> dict:
    """Name -> Fixture for every bundled countermodel."""
    return dict(_CATALOG)


def fixture(name: str) -> PointedModel:
    try:
        return _CATALOG[name].pointed
    except KeyError:
        raise FixtureNotFound(f"no fixture named {name!r}; known: {', '.join(sorted(_CATALOG))}") from None


def names() -> list:
    return sorted(_CATALOG)
