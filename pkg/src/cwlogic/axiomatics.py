"""The PLCKWS5 axiom system: schemas, instance recognition and proof checking.

Schema templates are ordinary formulas in which the atoms ``phi``, ``psi``
and ``chi`` are metavariables and the agent ``i`` is an agent variable.
``Ew`` in a template abbreviates the conjunction of ``Kw_a`` over the proof's
agent set, so templates are compiled per agent set.
"""

from __future__ import annotations

import functools
import json
import random
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

from .formula import (Formula, Atom, Not, And, Implies, K, Kw, E, C, Cw, Derived, Meta,
                      Iff, conj, parse, render, desugar, random_formula, children,
                      FormulaSyntaxError, UnknownAgentError)
from .kripke import random_model
from .semantics import Evaluator

AGENT_VAR = "$i"
METAVARS = ("phi", "psi", "chi")

_TEMPLATES = {
    "Kw-CON": "Kw[i](chi -> phi) & Kw[i](~chi -> phi) -> Kw[i] phi",
    "Kw-DIS": "Kw[i] phi -> Kw[i](phi -> psi) | Kw[i](~phi -> chi)",
    "Kw-T": "Kw[i] phi & Kw[i](phi -> psi) & phi -> Kw[i] psi",
    "wKw-5": "~Kw[i] phi -> Kw[i] ~Kw[i] phi",
    "Kw-IFF": "Kw[i] phi <-> Kw[i] ~phi",
    "Cw-CON": "Cw(chi -> phi) & Cw(~chi -> phi) -> Cw phi",
    "Cw-DIS": "Cw phi -> Cw(phi -> psi) | Cw(~phi -> chi)",
    "Cw-T": "Cw phi & Cw(phi -> psi) & phi -> Cw psi",
    "Cw-Mix": "Cw phi -> Ew2 phi & Ew2 Cw phi",
    "Cw-Ind": "Cw(phi -> Ew2 phi) -> (phi -> Cw phi)",
}

SCHEMA_NAMES = ("TAUT",) + tuple(_TEMPLATES)


class MissingMetavariable(KeyError):
    pass


class NotATautology(ValueError):
    pass


@dataclass(frozen=True)
class AxiomSchema:
    name: str
    text: Optional[str]

    @property
    def metavars(self) -> tuple:
        if self.text is None:
            return ()
        body = self.text
        out = tuple(v for v in METAVARS if _mentions(body, v))
        return out + (("i",) if "[i]" in body or "Ew2" in body else ())


def _mentions(text, name):
    import re
    return re.search(rf"\b{name}\b", text) is not None


SCHEMAS = {name: AxiomSchema(name, _TEMPLATES.get(name)) for name in SCHEMA_NAMES}


def _metaize(f: Formula) -> Formula:
    if isinstance(f, Atom):
        return Meta(f.name) if f.name in METAVARS else f
    if isinstance(f, Not):
        return Not(_metaize(f.sub))
    if isinstance(f, (And, Implies)):
        return type(f)(_metaize(f.left), _metaize(f.right))
    if isinstance(f, (K, Kw)):
        return type(f)(AGENT_VAR if f.agent == "i" else f.agent, _metaize(f.sub))
    if isinstance(f, Derived):
        return Derived(f.op, _metaize(f.sub))
    return type(f)(_metaize(f.sub))


def _ew_expand(f: Formula, agents: tuple) -> Formula:
    """Expand Ew2 in a template to the conjunction of Kw over the agents."""
    return desugar(f, list(agents)).formula


@functools.lru_cache(maxsize=None)
def template(name: str, agents: tuple) -> Formula:
    schema = SCHEMAS[name]
    if schema.text is None:
        raise ValueError("TAUT has no template")
    return _ew_expand(_metaize(parse(schema.text)), agents)


# -- instantiation ----------------------------------------------------------------

def substitute(f: Formula, subst: dict) -> Formula:
    """Replace metavariables (and the agent variable) according to ``subst``."""
    if isinstance(f, Meta):
        if f.name not in subst:
            raise MissingMetavariable(f.name)
        return subst[f.name]
    if isinstance(f, Atom):
        return f
    if isinstance(f, Not):
        return Not(substitute(f.sub, subst))
    if isinstance(f, (And, Implies)):
        return type(f)(substitute(f.left, subst), substitute(f.right, subst))
    if isinstance(f, (K, Kw)):
        agent = f.agent
        if agent == AGENT_VAR:
            if "i" not in subst:
                raise MissingMetavariable("i")
            agent = subst["i"]
        return type(f)(agent, substitute(f.sub, subst))
    if isinstance(f, Derived):
        return Derived(f.op, substitute(f.sub, subst))
    return type(f)(substitute(f.sub, subst))


def substitute_atoms(f: Formula, mapping: dict) -> Formula:
    """Uniform substitution of formulas for atoms."""
    if isinstance(f, Atom):
        return mapping.get(f.name, f)
    if isinstance(f, Meta):
        return f
    if isinstance(f, Not):
        return Not(substitute_atoms(f.sub, mapping))
    if isinstance(f, (And, Implies)):
        return type(f)(substitute_atoms(f.left, mapping), substitute_atoms(f.right, mapping))
    if isinstance(f, (K, Kw)):
        return type(f)(f.agent, substitute_atoms(f.sub, mapping))
    if isinstance(f, Derived):
        return Derived(f.op, substitute_atoms(f.sub, mapping))
    return type(f)(substitute_atoms(f.sub, mapping))


def instantiate(schema, subst: dict, agents: Sequence[str] = ("a",)) -> Formula:
    """Fill a schema's template.  TAUT takes ``{"instance": formula}``."""
    name = schema.name if isinstance(schema, AxiomSchema) else schema
    if name == "TAUT":
        if "instance" not in subst:
            raise MissingMetavariable("instance")
        f = subst["instance"]
        if not is_tautology(f):
            raise NotATautology(render(f))
        return f
    return substitute(template(name, tuple(agents)), subst)


# -- tautology recognition ----------------------------------------------------------

MAX_TAUT_VARS = 22


def _prop_skeleton(f: Formula, table: dict):
    """Replace maximal modal subformulas and atoms by propositional variables."""
    if isinstance(f, Not):
        return ("not", _prop_skeleton(f.sub, table))
    if isinstance(f, And):
        return ("and", _prop_skeleton(f.left, table), _prop_skeleton(f.right, table))
    if isinstance(f, Implies):
        return ("imp", _prop_skeleton(f.left, table), _prop_skeleton(f.right, table))
    return ("var", table.setdefault(f, len(table)))


def is_tautology(f: Formula) -> bool:
    """Propositional validity with every modal subformula treated as an opaque atom."""
    table: dict = {}
    sk = _prop_skeleton(f, table)
    k = len(table)
    if k > MAX_TAUT_VARS:
        raise ValueError(f"tautology check over {k} opaque atoms is too large")
    rows = 1 << k
    full = (1 << rows) - 1
    cols = []
    for v in range(k):
        # column v: bit r is set iff bit v of r is set
        block = ((1 << (1 << v)) - 1) << (1 << v)
        pattern, width = block, 1 << (v + 1)
        while width < rows:
            pattern |= pattern << width
            width *= 2
        cols.append(pattern & full)

    def ev(node):
        tag = node[0]
        if tag == "var":
            return cols[node[1]]
        if tag == "not":
            return full & ~ev(node[1])
        if tag == "and":
            return ev(node[1]) & ev(node[2])
        return (full & ~ev(node[1])) | ev(node[2])

    return ev(sk) == full


# -- matching --------------------------------------------------------------------------

def _unify(t: Formula, f: Formula, subst: dict) -> bool:
    if isinstance(t, Meta):
        bound = subst.get(t.name)
        if bound is None:
            subst[t.name] = f
            return True
        return bound == f
    if type(t) is not type(f):
        return False
    if isinstance(t, Atom):
        return t == f
    if isinstance(t, (K, Kw)):
        if t.agent == AGENT_VAR:
            bound = subst.get("i")
            if bound is None:
                subst["i"] = f.agent
            elif bound != f.agent:
                return False
        elif t.agent != f.agent:
            return False
    if isinstance(t, Derived) and t.op != f.op:
        return False
    return all(_unify(a, b, subst) for a, b in zip(children(t), children(f)))


def match_axiom(f: Formula, agents: Sequence[str] = ("a",)) -> list:
    """All (schema name, substitution) pairs under which f is an axiom instance."""
    out = []
    agents = tuple(agents)
    for name in _TEMPLATES:
        subst: dict = {}
        if _unify(template(name, agents), f, subst):
            # metavariables absent from the template (none at present) stay unbound
            out.append((name, subst))
    try:
        if is_tautology(f):
            out.append(("TAUT", {}))
    except ValueError:
        pass
    return out


# -- proofs ----------------------------------------------------------------------------

RULES = {"MP", "KwNEC", "CwNEC", "KwRE", "CwRE", "axiom", *SCHEMA_NAMES}
_RULE_ALIASES = {"Kw-NEC": "KwNEC", "Cw-NEC": "CwNEC", "Kw-RE": "KwRE", "Cw-RE": "CwRE",
                 "Kw-<->": "Kw-IFF", "Kw-↔": "Kw-IFF"}


@dataclass
class ProofLine:
    formula: object          # Formula, or the raw text when it failed to parse
    rule: str
    refs: list = field(default_factory=list)
    agent: Optional[str] = None


@dataclass
class Proof:
    agents: list
    lines: list


class ProofFormatError(ValueError):
    pass


@dataclass
class LineDiagnostic:
    line: int
    ok: bool
    message: str
    matched: list = field(default_factory=list)


@dataclass
class ProofVerdict:
    accepted: bool
    failing_line: Optional[int]
    diagnostics: list

    @property
    def message(self) -> str:
        if self.accepted:
            return "proof accepted"
        d = self.diagnostics[self.failing_line - 1]
        return f"line {self.failing_line}: {d.message}"

    def to_json(self) -> dict:
        return {"accepted": self.accepted, "failing_line": self.failing_line,
                "lines": [{"line": d.line, "ok": d.ok, "message": d.message} for d in self.diagnostics]}


def proof_from_json(data) -> Proof:
    if not isinstance(data, dict) or "lines" not in data or "agents" not in data:
        raise ProofFormatError("proof must be an object with 'agents' and 'lines'")
    agents = data["agents"]
    if not isinstance(agents, list) or not agents or not all(isinstance(a, str) for a in agents):
        raise ProofFormatError("/agents: expected a nonempty array of strings")
    if not isinstance(data["lines"], list):
        raise ProofFormatError("/lines: expected an array")
    lines = []
    for k, row in enumerate(data["lines"]):
        ptr = f"/lines/{k}"
        if not isinstance(row, dict):
            raise ProofFormatError(f"{ptr}: expected an object")
        if not isinstance(row.get("formula"), str) or not isinstance(row.get("rule"), str):
            raise ProofFormatError(f"{ptr}: 'formula' and 'rule' must be strings")
        refs = row.get("refs", [])
        if not isinstance(refs, list) or not all(isinstance(r, int) and not isinstance(r, bool) for r in refs):
            raise ProofFormatError(f"{ptr}/refs: expected an array of integers")
        agent = row.get("agent")
        if agent is not None and not isinstance(agent, str):
            raise ProofFormatError(f"{ptr}/agent: expected a string")
        text = row["formula"]
        try:
            f = parse(text, agents)
        except (FormulaSyntaxError, UnknownAgentError):
            f = text
        lines.append(ProofLine(f, row["rule"], list(refs), agent))
    return Proof(list(agents), lines)


def load_proof(path) -> Proof:
    with open(path, encoding="utf-8") as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ProofFormatError(f"malformed JSON: {exc}") from None
    return proof_from_json(data)


def _as_iff(f: Formula):
    if isinstance(f, And) and isinstance(f.left, Implies) and isinstance(f.right, Implies):
        if f.left.left == f.right.right and f.left.right == f.right.left:
            return f.left.left, f.left.right
    return None


def _check_line(k: int, line: ProofLine, proof: Proof) -> LineDiagnostic:
    agents = tuple(proof.agents)
    f = line.formula
    if not isinstance(f, Formula):
        try:
            parse(f, agents)
        except (FormulaSyntaxError, UnknownAgentError) as exc:
            return LineDiagnostic(k, False, f"formula does not parse: {exc}")
    rule = _RULE_ALIASES.get(line.rule, line.rule)
    if rule not in RULES:
        return LineDiagnostic(k, False, f"unknown rule {line.rule!r}")
    for r in line.refs:
        if not 1 <= r < k:
            return LineDiagnostic(k, False, f"reference {r} is not an earlier line")
    prem = [proof.lines[r - 1].formula for r in line.refs]
    if any(not isinstance(p, Formula) for p in prem):
        return LineDiagnostic(k, False, "cites a line whose formula does not parse")

    if rule == "axiom" or rule in SCHEMA_NAMES:
        if line.refs:
            return LineDiagnostic(k, False, "axiom lines take no references")
        matches = match_axiom(f, agents)
        names = [m[0] for m in matches]
        if rule == "axiom":
            ok = bool(matches)
        else:
            ok = rule in names
        if not ok:
            want = "any schema" if rule == "axiom" else rule
            return LineDiagnostic(k, False, f"not an instance of {want}", names)
        return LineDiagnostic(k, True, f"instance of {rule if rule != 'axiom' else names[0]}", names)

    if rule == "MP":
        if len(prem) != 2:
            return LineDiagnostic(k, False, "MP needs exactly two references")
        a, b = prem
        if Implies(a, f) == b or Implies(b, f) == a:
            return LineDiagnostic(k, True, "modus ponens")
        if not isinstance(a, Implies) and not isinstance(b, Implies):
            return LineDiagnostic(k, False, "MP cites no implication")
        return LineDiagnostic(k, False, "MP premises do not yield this formula")

    if len(prem) != 1:
        return LineDiagnostic(k, False, f"{rule} needs exactly one reference")
    src = prem[0]
    if rule == "KwNEC":
        if not isinstance(f, Kw) or f.sub != src:
            return LineDiagnostic(k, False, "KwNEC conclusion must be Kw_a of the cited formula")
        if line.agent is not None and f.agent != line.agent:
            return LineDiagnostic(k, False, f"KwNEC agent mismatch: line says {line.agent!r}")
        return LineDiagnostic(k, True, "Kw necessitation")
    if rule == "CwNEC":
        if f != Cw(src):
            return LineDiagnostic(k, False, "CwNEC conclusion must be Cw of the cited formula")
        return LineDiagnostic(k, True, "Cw necessitation")
    pair = _as_iff(src)
    if pair is None:
        return LineDiagnostic(k, False, f"{rule} premise is not a biconditional")
    x, y = pair
    if rule == "CwRE":
        if f != Iff(Cw(x), Cw(y)):
            return LineDiagnostic(k, False, "CwRE conclusion does not match the premise")
        return LineDiagnostic(k, True, "Cw replacement")
    concl = _as_iff(f)
    if (concl is None or not isinstance(concl[0], Kw) or not isinstance(concl[1], Kw)
            or concl[0].agent != concl[1].agent or f != Iff(Kw(concl[0].agent, x), Kw(concl[0].agent, y))):
        return LineDiagnostic(k, False, "KwRE conclusion does not match the premise")
    if line.agent is not None and concl[0].agent != line.agent:
        return LineDiagnostic(k, False, f"KwRE agent mismatch: line says {line.agent!r}")
    return LineDiagnostic(k, True, "Kw replacement")


def check_proof(proof: Proof) -> ProofVerdict:
    """Check every line; the verdict names the first failing line (1-based)."""
    diags = [_check_line(k, line, proof) for k, line in enumerate(proof.lines, start=1)]
    bad = next((d.line for d in diags if not d.ok), None)
    if not proof.lines:
        return ProofVerdict(False, None, [])
    return ProofVerdict(bad is None, bad, diags)


# -- soundness sampling ------------------------------------------------------------------

def nary_kw_schemas(n: int, agent: str = "a") -> tuple:
    """The two n-ary Kw schemas instantiated at atoms q1..qn and r."""
    if n < 2:
        raise ValueError("n must be at least 2")
    qs = [Atom(f"q{k}") for k in range(1, n + 1)]
    r = Atom("r")
    big = conj(qs)

    def build(head, side):
        parts = [Kw(agent, head)] + [Kw(agent, q) for q in qs] + [Kw(agent, Implies(side, q)) for q in qs]
        return Implies(conj(parts), Kw(agent, r))

    return build(Implies(big, Not(r)), r), build(Implies(big, r), Not(r))


_TAUT_SHAPES = [
    "phi -> phi", "phi -> psi -> phi", "~~phi <-> phi", "phi | ~phi",
    "(phi -> psi) -> (psi -> chi) -> phi -> chi", "phi & psi -> psi & phi",
    "~(phi & psi) <-> ~phi | ~psi",
]


def _random_subst(rng: random.Random, agents: Sequence[str], depth: int = 2) -> dict:
    ops = ("not", "and", "implies", "Kw", "Cw")
    out = {v: random_formula(rng, ["p", "q"], agents, depth, ops) for v in METAVARS}
    out["i"] = rng.choice(list(agents))
    return out


@dataclass
class SoundnessReport:
    checked: dict
    violations: list

    @property
    def ok(self) -> bool:
        return not self.violations


def soundness_sample(schemas: Iterable = SCHEMA_NAMES, n_models: int = 200, seed: int = 0,
                     sizes: tuple = (1, 6), agent_counts: tuple = (1, 2),
                     frame_class: str = "S5", extra: Optional[dict] = None) -> SoundnessReport:
    """Validity of random schema instances on random models of a class.

    ``extra`` maps names to fixed formulas (e.g. the n-ary schemas); their
    atoms are uniformly replaced by random formulas per model.
    """
    rng = random.Random(seed)
    checked: dict = {}
    violations: list = []
    items = [(name, None) for name in schemas] + list((extra or {}).items())
    for name, fixed in items:
        count = 0
        for _ in range(n_models):
            k = rng.randint(*agent_counts)
            agents = ["a", "b"][:k] if k <= 2 else [f"a{x}" for x in range(k)]
            m = random_model(rng.randint(*sizes), agents, atoms=["p", "q", "r"],
                             frame_class=frame_class, seed=rng.getrandbits(64))
            subst = _random_subst(rng, agents)
            if fixed is not None:
                from .formula import atoms_of
                mapping = {a: random_formula(rng, ["p", "q", "r"], agents, 1, ("not", "and", "Kw", "Cw"))
                           for a in atoms_of(fixed)}
                f = substitute_atoms(fixed, mapping)
                if "a" not in agents:
                    continue
            elif name == "TAUT":
                shape = _metaize(parse(rng.choice(_TAUT_SHAPES)))
                f = substitute(shape, subst)
            else:
                f = instantiate(name, subst, agents)
            count += 1
            mask = Evaluator(m).ext(f)
            if mask != m.full:
                violations.append({"schema": name, "formula": render(f), "model": m,
                                   "world": m.worlds[(~mask & m.full).bit_length() - 1]})
        checked[name] = count
    return SoundnessReport(checked, violations)


# -- bundled proofs -----------------------------------------------------------------

def proofs_dir():
    """Directory holding the bundled sample and mutated proofs."""
    from importlib import resources
    return resources.files("cwlogic") / "data" / "proofs"


SAMPLE_PROOFS = ("axioms.json", "derivation.json", "necessitation.json", "induction.json")


def bundled_proof(name: str) -> Proof:
    """Load a bundled proof by file name, e.g. ``derivation.json`` or
    ``mutations/forward-reference.json``."""
    path = proofs_dir().joinpath(*name.split("/"))
    if not path.is_file():
        raise FileNotFoundError(f"no bundled proof {name!r}")
    return proof_from_json(json.loads(path.read_text(encoding="utf-8")))


def mutation_manifest() -> dict:
    """Mutated proof file name -> {"line": expected failing line, "reason": message fragment}."""
    path = proofs_dir() / "mutations" / "manifest.json"
    return json.loads(path.read_text(encoding="utf-8"))
