"""Finite Kripke models with bitmask world sets.

Worlds carry string labels and dense indices; a set of worlds is an ``int``
whose bit ``k`` stands for world ``k``.  Each agent's relation is stored as a
tuple of successor masks, one per world.
"""

from __future__ import annotations

import enum
import functools
import itertools
import json
import random
from dataclasses import dataclass
from typing import Iterable, Mapping, Optional, Sequence

import numpy as np

__all__ = [
    "FrameClass", "KripkeModel", "PointedModel", "ModelError",
    "union_relation", "reach", "check_frame_class", "random_model",
    "relation_codes", "relation_from_code", "load_model", "save_model",
    "model_from_json", "model_to_json", "bits", "popcount",
]


class FrameClass(enum.Enum):
    K = "K"
    T = "T"
    KD45 = "KD45"
    S5 = "S5"

    @classmethod
    def parse(cls, tag) -> "FrameClass":
        if isinstance(tag, cls):
            return tag
        try:
            return cls(str(tag).upper())
        except ValueError:
            raise ValueError(f"unknown frame class {tag!r}; expected one of K, T, KD45, S5") from None


class ModelError(ValueError):
    """Invalid model data; ``pointer`` is a JSON pointer to the offending value."""

    def __init__(self, message: str, pointer: str = ""):
        super().__init__(f"{pointer or '/'}: {message}")
        self.pointer = pointer


def bits(mask: int):
    """Indices of set bits, ascending."""
    k = 0
    while mask:
        if mask & 1:
            yield k
        mask >>= 1
        k += 1


def popcount(mask: int) -> int:
    return bin(mask).count("1")


class KripkeModel:
    """A finite multi-agent Kripke model.

    Treat instances as immutable; derived relations are cached on first use.
    """

    def __init__(self, worlds: Sequence[str], agents: Sequence[str],
                 succ: Mapping[str, Sequence[int]], valuation: Mapping[str, int]):
        self.worlds = tuple(worlds)
        self.agents = tuple(agents)
        n = len(self.worlds)
        if n == 0:
            raise ModelError("model needs at least one world", "/worlds")
        if len(set(self.worlds)) != n:
            raise ModelError("duplicate world label", "/worlds")
        if not self.agents or len(set(self.agents)) != len(self.agents):
            raise ModelError("agent list must be nonempty and duplicate-free", "/agents")
        self.full = (1 << n) - 1
        self.succ = {}
        for a in self.agents:
            row = tuple(int(x) for x in succ.get(a, (0,) * n))
            if len(row) != n or any(x & ~self.full for x in row):
                raise ModelError(f"relation for agent {a!r} does not fit {n} worlds", f"/relations/{a}")
            self.succ[a] = row
        extra = set(succ) - set(self.agents)
        if extra:
            raise ModelError(f"relation for undeclared agent {sorted(extra)[0]!r}", "/relations")
        self.valuation = {}
        for atom, mask in valuation.items():
            if int(mask) & ~self.full:
                raise ModelError(f"valuation of {atom!r} mentions a missing world", f"/valuation/{atom}")
            self.valuation[atom] = int(mask)
        self._index = {w: k for k, w in enumerate(self.worlds)}

    # -- construction helpers -------------------------------------------------

    @classmethod
    def from_edges(cls, worlds: Sequence[str], relations: Mapping[str, Iterable[tuple]],
                   valuation: Mapping[str, Iterable[str]], agents: Optional[Sequence[str]] = None):
        """Build from labelled edges and labelled valuation sets."""
        worlds = list(worlds)
        index = {w: k for k, w in enumerate(worlds)}
        agents = list(agents) if agents is not None else list(relations)
        succ = {}
        for a in agents:
            row = [0] * len(worlds)
            for s, t in relations.get(a, ()):
                if s not in index or t not in index:
                    raise ModelError(f"edge ({s}, {t}) references an undeclared world", f"/relations/{a}")
                row[index[s]] |= 1 << index[t]
            succ[a] = row
        val = {}
        for atom, ws in valuation.items():
            m = 0
            for w in ws:
                if w not in index:
                    raise ModelError(f"undeclared world {w!r}", f"/valuation/{atom}")
                m |= 1 << index[w]
            val[atom] = m
        return cls(worlds, agents, succ, val)

    def with_valuation(self, valuation: Mapping[str, int]) -> "KripkeModel":
        return KripkeModel(self.worlds, self.agents, self.succ, valuation)

    def with_agents(self, agents: Sequence[str], copy_from: Optional[str] = None) -> "KripkeModel":
        """Re-home the model on a different agent list.

        Agents already present keep their relation; new agents get a copy of
        ``copy_from``'s relation (or the empty relation).
        """
        succ = {}
        for a in agents:
            if a in self.succ:
                succ[a] = self.succ[a]
            elif copy_from is not None:
                succ[a] = self.succ[copy_from]
            else:
                succ[a] = (0,) * self.n
        return KripkeModel(self.worlds, agents, succ, self.valuation)

    def restrict(self, keep: Sequence[int]) -> "KripkeModel":
        """Submodel on the worlds with the given indices (labels preserved)."""
        keep = sorted(set(keep))
        new = {old: k for k, old in enumerate(keep)}

        def remap(mask):
            out = 0
            for old in bits(mask):
                if old in new:
                    out |= 1 << new[old]
            return out

        succ = {a: [remap(row[old]) for old in keep] for a, row in self.succ.items()}
        val = {p: remap(m) for p, m in self.valuation.items()}
        return KripkeModel([self.worlds[k] for k in keep], self.agents, succ, val)

    def without_edge(self, agent: str, s: int, t: int) -> "KripkeModel":
        succ = dict(self.succ)
        row = list(succ[agent])
        row[s] &= ~(1 << t)
        succ[agent] = row
        return KripkeModel(self.worlds, self.agents, succ, self.valuation)

    def rename_agents(self, mapping: Mapping[str, str]) -> "KripkeModel":
        agents = [mapping.get(a, a) for a in self.agents]
        succ = {mapping.get(a, a): r for a, r in self.succ.items()}
        return KripkeModel(self.worlds, agents, succ, self.valuation)

    # -- basic queries ---------------------------------------------------------

    @property
    def n(self) -> int:
        return len(self.worlds)

    def index(self, world) -> int:
        if isinstance(world, int):
            if not 0 <= world < self.n:
                raise KeyError(world)
            return world
        try:
            return self._index[world]
        except KeyError:
            raise KeyError(f"unknown world {world!r}") from None

    def mask_of(self, worlds: Iterable) -> int:
        m = 0
        for w in worlds:
            m |= 1 << self.index(w)
        return m

    def labels(self, mask: int) -> list:
        return [self.worlds[k] for k in bits(mask)]

    def atom(self, name: str) -> int:
        return self.valuation.get(name, 0)

    def edges(self, agent: str) -> list:
        return [(self.worlds[s], self.worlds[t])
                for s, row in enumerate(self.succ[agent]) for t in bits(row)]

    @functools.cached_property
    def union_succ(self) -> tuple:
        out = [0] * self.n
        for row in self.succ.values():
            for k, m in enumerate(row):
                out[k] |= m
        return tuple(out)

    @functools.cached_property
    def reach_succ(self) -> tuple:
        """Reflexive-transitive closure of the union relation, as successor masks."""
        us = self.union_succ
        out = []
        for w in range(self.n):
            seen = 1 << w
            frontier = seen
            while frontier:
                nxt = 0
                for v in bits(frontier):
                    nxt |= us[v]
                frontier = nxt & ~seen
                seen |= nxt
            out.append(seen)
        return tuple(out)

    def __eq__(self, other):
        if not isinstance(other, KripkeModel):
            return NotImplemented
        return (self.worlds == other.worlds and self.agents == other.agents
                and self.succ == other.succ and self._clean_val() == other._clean_val())

    def _clean_val(self):
        return {a: m for a, m in self.valuation.items() if m}

    def __hash__(self):
        return hash((self.worlds, self.agents, tuple(self.succ[a] for a in self.agents),
                     tuple(sorted(self._clean_val().items()))))

    def __repr__(self):
        rel = ", ".join(f"{a}: {self.edges(a)}" for a in self.agents)
        val = ", ".join(f"{p}: {self.labels(m)}" for p, m in sorted(self.valuation.items()))
        return f"KripkeModel(worlds={list(self.worlds)}, relations={{{rel}}}, valuation={{{val}}})"


@dataclass(frozen=True)
class PointedModel:
    model: KripkeModel
    point: int

    def __post_init__(self):
        if not isinstance(self.point, int):
            object.__setattr__(self, "point", self.model.index(self.point))
        elif not 0 <= self.point < self.model.n:
            raise ModelError(f"point {self.point} out of range", "/point")

    @property
    def label(self) -> str:
        return self.model.worlds[self.point]

    def __repr__(self):
        return f"PointedModel({self.model!r}, point={self.label!r})"


def union_relation(m: KripkeModel) -> set:
    return {(m.worlds[s], m.worlds[t]) for s, row in enumerate(m.union_succ) for t in bits(row)}


def reach(m: KripkeModel) -> set:
    return {(m.worlds[s], m.worlds[t]) for s, row in enumerate(m.reach_succ) for t in bits(row)}


# -- frame classes -------------------------------------------------------------

def _reflexive(row) -> bool:
    return all(m >> w & 1 for w, m in enumerate(row))


def _serial(row) -> bool:
    return all(row)


def _transitive(row) -> bool:
    return all(row[v] & ~m == 0 for m in row for v in bits(m))


def _euclidean(row) -> bool:
    return all(m & ~row[v] == 0 for m in row for v in bits(m))


def relation_in_class(row: Sequence[int], cls: FrameClass) -> bool:
    if cls is FrameClass.K:
        return True
    if cls is FrameClass.T:
        return _reflexive(row)
    if cls is FrameClass.KD45:
        return _serial(row) and _transitive(row) and _euclidean(row)
    return _reflexive(row) and _euclidean(row)


def check_frame_class(m: KripkeModel, cls) -> bool:
    cls = FrameClass.parse(cls)
    return all(relation_in_class(m.succ[a], cls) for a in m.agents)


# -- generators ----------------------------------------------------------------

def _random_partition(rng: random.Random, items: list) -> list:
    blocks: list = []
    for x in items:
        k = rng.randrange(len(blocks) + 1)
        if k == len(blocks):
            blocks.append([x])
        else:
            blocks[k].append(x)
    return blocks


def _random_relation(rng: random.Random, n: int, density: float, cls: FrameClass) -> list:
    row = [0] * n
    if cls is FrameClass.S5:
        for block in _random_partition(rng, list(range(n))):
            m = sum(1 << w for w in block)
            for w in block:
                row[w] = m
        return row
    if cls is FrameClass.KD45:
        # choose cluster members, split them into clusters, then let every
        # other world point at exactly one cluster; membership rate and
        # cluster size vary; small clusters with a few outside worlds are
        # where the multi-agent separations live
        rate = rng.choice((0.5, 0.6, 0.8, 0.9, 1.0))
        members = [w for w in range(n) if rng.random() < rate] or [rng.randrange(n)]
        rng.shuffle(members)
        top = rng.choice((2, 3, 3, 4, n))
        blocks = []
        while members:
            size = rng.randint(1, top)
            blocks.append(members[:size])
            members = members[size:]
        clusters = [sum(1 << w for w in b) for b in blocks]
        for c in clusters:
            for w in bits(c):
                row[w] = c
        for w in range(n):
            if not row[w]:
                row[w] = rng.choice(clusters)
        return row
    for s in range(n):
        for t in range(n):
            if rng.random() < density:
                row[s] |= 1 << t
        if cls is FrameClass.T:
            row[s] |= 1 << s
    return row


def random_model(worlds: int, agents=1, density: float = 0.4, atoms=1,
                 frame_class="K", seed=None) -> KripkeModel:
    """Random model, deterministic in ``seed``.

    ``agents``/``atoms`` are counts (names a, b, ... and p, q, ...) or name lists.
    """
    if worlds < 1:
        raise ValueError("worlds must be >= 1")
    cls = FrameClass.parse(frame_class)
    rng = seed if isinstance(seed, random.Random) else random.Random(seed)
    agent_names = default_agents(agents) if isinstance(agents, int) else list(agents)
    atom_names = default_atoms(atoms) if isinstance(atoms, int) else list(atoms)
    succ = {a: _random_relation(rng, worlds, density, cls) for a in agent_names}
    val = {p: rng.getrandbits(worlds) for p in atom_names}
    labels = [f"w{k}" for k in range(worlds)]
    return KripkeModel(labels, agent_names, succ, val)


def default_agents(k: int) -> list:
    return [chr(ord("a") + i) for i in range(k)]


def default_atoms(k: int) -> list:
    base = ["p", "q", "r", "s", "t", "u"]
    return base[:k] if k <= len(base) else [f"p{i}" for i in range(k)]


# -- canonical enumeration of single-agent relations ---------------------------

def relation_from_code(code: int, n: int) -> tuple:
    """Decode a little-endian relation bitmask (bit s*n+t is the edge s->t)."""
    full = (1 << n) - 1
    return tuple((code >> (s * n)) & full for s in range(n))


@functools.lru_cache(maxsize=None)
def relation_codes(n: int, cls: FrameClass) -> np.ndarray:
    """Every relation of class ``cls`` on ``n`` worlds, in ascending code order.

    Returned as an int64 array of shape (count, n) holding successor masks.
    """
    cls = FrameClass.parse(cls)
    if cls is FrameClass.S5:
        rows = set()
        for labels in itertools.product(range(n), repeat=n):
            row = tuple(sum(1 << t for t in range(n) if labels[t] == labels[s]) for s in range(n))
            rows.add(row)
        codes = sorted(sum(m << (s * n) for s, m in enumerate(r)) for r in rows)
        return np.array([relation_from_code(c, n) for c in codes], dtype=np.int64).reshape(-1, n)
    if n * n > 20:
        raise ValueError(f"refusing to enumerate all relations on {n} worlds")
    codes = np.arange(1 << (n * n), dtype=np.int64)
    full = (1 << n) - 1
    rows = np.stack([(codes >> (s * n)) & full for s in range(n)], axis=1)
    keep = np.ones(len(codes), dtype=bool)
    if cls is FrameClass.T:
        for s in range(n):
            keep &= (rows[:, s] >> s) & 1 == 1
    elif cls is FrameClass.KD45:
        for s in range(n):
            keep &= rows[:, s] != 0
            for v in range(n):
                has = (rows[:, s] >> v) & 1 == 1
                # transitive and Euclidean: v in R(s) implies R(v) == R(s)
                keep &= ~has | (rows[:, v] == rows[:, s])
    return rows[keep]


# -- JSON ----------------------------------------------------------------------

def _no_duplicates(pairs):
    seen = {}
    for k, v in pairs:
        if k in seen:
            raise ModelError(f"duplicate key {k!r}")
        seen[k] = v
    return seen


def _esc(token: str) -> str:
    return str(token).replace("~", "~0").replace("/", "~1")


def _expect_str_list(value, pointer: str) -> list:
    if not isinstance(value, list):
        raise ModelError("expected an array", pointer)
    for k, x in enumerate(value):
        if not isinstance(x, str):
            raise ModelError("expected a string", f"{pointer}/{k}")
    return value


def model_from_json(data) -> tuple:
    """Validate a decoded model document; returns (model, point-or-None)."""
    if not isinstance(data, dict):
        raise ModelError("expected an object", "")
    allowed = {"agents", "worlds", "relations", "valuation", "point", "root"}
    for key in data:
        if key not in allowed:
            raise ModelError(f"unexpected key {key!r}", f"/{_esc(key)}")
    for key in ("agents", "worlds", "relations", "valuation"):
        if key not in data:
            raise ModelError(f"missing required key {key!r}", "")
    agents = _expect_str_list(data["agents"], "/agents")
    worlds = _expect_str_list(data["worlds"], "/worlds")
    if not worlds:
        raise ModelError("world list is empty", "/worlds")
    if not agents:
        raise ModelError("agent list is empty", "/agents")
    for label, ptr in ((agents, "/agents"), (worlds, "/worlds")):
        if len(set(label)) != len(label):
            raise ModelError("duplicate entry", ptr)
    index = {w: k for k, w in enumerate(worlds)}
    rels = data["relations"]
    if not isinstance(rels, dict):
        raise ModelError("expected an object", "/relations")
    succ = {a: [0] * len(worlds) for a in agents}
    for a, edges in rels.items():
        base = f"/relations/{_esc(a)}"
        if a not in succ:
            raise ModelError(f"relation for undeclared agent {a!r}", base)
        if not isinstance(edges, list):
            raise ModelError("expected an array of pairs", base)
        for k, e in enumerate(edges):
            if not (isinstance(e, list) and len(e) == 2 and all(isinstance(x, str) for x in e)):
                raise ModelError("expected a [source, target] pair of strings", f"{base}/{k}")
            for j, w in enumerate(e):
                if w not in index:
                    raise ModelError(f"dangling reference to undeclared world {w!r}", f"{base}/{k}/{j}")
            succ[a][index[e[0]]] |= 1 << index[e[1]]
    val_doc = data["valuation"]
    if not isinstance(val_doc, dict):
        raise ModelError("expected an object", "/valuation")
    val = {}
    for atom, ws in val_doc.items():
        base = f"/valuation/{_esc(atom)}"
        _expect_str_list(ws, base)
        m = 0
        for k, w in enumerate(ws):
            if w not in index:
                raise ModelError(f"dangling reference to undeclared world {w!r}", f"{base}/{k}")
            m |= 1 << index[w]
        val[atom] = m
    point = None
    for key in ("point", "root"):
        if key in data:
            if data[key] not in index:
                raise ModelError(f"{key} is not a declared world", f"/{key}")
            point = index[data[key]]
    return KripkeModel(worlds, agents, succ, val), point


def model_to_json(m: KripkeModel, point=None) -> dict:
    doc = {
        "agents": list(m.agents),
        "worlds": list(m.worlds),
        "relations": {a: [list(e) for e in m.edges(a)] for a in m.agents},
        "valuation": {p: m.labels(mask) for p, mask in sorted(m.valuation.items())},
    }
    if point is not None:
        doc["point"] = m.worlds[m.index(point)]
    return doc


def load_model(path) -> KripkeModel:
    """Read a model file.  The optional point is available via :func:`load_pointed`."""
    return load_pointed(path)[0]


def load_pointed(path) -> tuple:
    with open(path, "rb") as fh:
        raw = fh.read()
    try:
        text = raw.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise ModelError(f"file is not UTF-8: {exc}") from None
    try:
        data = json.loads(text, object_pairs_hook=_no_duplicates)
    except json.JSONDecodeError as exc:
        raise ModelError(f"malformed JSON: {exc}") from None
    return model_from_json(data)


def save_model(m: KripkeModel, path, point=None) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(model_to_json(m, point), fh, indent=2)
        fh.write("\n")
