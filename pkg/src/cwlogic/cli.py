"""Command-line front end.

Every subcommand builds a report ``{command, inputs, results, version, seed,
wall_time}``.  With ``--json`` the report is printed as JSON; otherwise a
short human-readable summary is printed.  Exit codes: 0 success, 1 a check
or diff failed, 2 bad input.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time

from . import analysis, axiomatics, decision, games, relations
from .fixtures import FixtureNotFound, fixture, names as fixture_names
from .formula import FormulaSyntaxError, UnknownAgentError, parse, render
from .kripke import ModelError, PointedModel, load_pointed, model_to_json
from .semantics import UnknownAgent, evaluate

EXIT_OK, EXIT_FAIL, EXIT_INPUT = 0, 1, 2


class InputError(Exception):
    pass


def _version() -> str:
    try:
        from importlib.metadata import version
        return version("artifact")
    except Exception:
        return "0.1.0"


def _parse_formula(text: str, agents=None):
    try:
        return parse(text, agents)
    except (FormulaSyntaxError, UnknownAgentError) as exc:
        raise InputError(f"formula: {exc}") from None


def _load_model(ref: str) -> PointedModel:
    """A path to a model JSON file, or the name of a bundled fixture."""
    if os.path.exists(ref):
        try:
            m, point = load_pointed(ref)
        except (ModelError, ValueError, OSError) as exc:
            raise InputError(f"model: {exc}") from None
        return PointedModel(m, point if point is not None else 0)
    try:
        return fixture(ref)
    except FixtureNotFound:
        raise InputError(f"model: no file or fixture named {ref!r}") from None


# -- subcommands --------------------------------------------------------------------
# Each returns (results dict, exit code, text lines).


def cmd_eval(args):
    pm = _load_model(args.model)
    m = pm.model
    f = _parse_formula(args.formula, m.agents)
    try:
        ext, trace = evaluate(m, f)
    except UnknownAgent as exc:
        raise InputError(str(exc)) from None
    if args.world is not None:
        try:
            w = m.index(args.world)
        except (KeyError, ValueError, IndexError):
            raise InputError(f"world {args.world!r} is not in the model") from None
    else:
        w = pm.point
    value = bool(ext.mask >> w & 1)
    res = {"formula": render(f), "world": m.worlds[w], "value": value,
           "extension": ext.members}
    if args.trace:
        res["trace"] = trace.to_json()
    lines = [f"{render(f)} at {m.worlds[w]}: {str(value).lower()}",
             f"extension: {{{', '.join(ext.members)}}}"]
    return res, EXIT_OK, lines


def cmd_matrix(args):
    try:
        expected = relations.expected_matrix(args.frame_class, args.agents)
    except ValueError:
        expected = None
    mat = relations.implication_matrix(args.frame_class, args.agents, bound=args.bound,
                                       seed=args.seed, budget=args.budget)
    res = mat.to_json()
    res["bound"] = mat.bound
    lines = [mat.table()]
    code = EXIT_OK
    if expected is not None:
        d = relations.diff(mat, expected)
        res["diff"] = d
        if d:
            code = EXIT_FAIL
            lines += [f"DIFF {x['src']} -> {x['dst']}: expected {x['expected']}, got {x['computed']}"
                      for x in d]
        else:
            lines.append("matches the expected figure")
    else:
        res["diff"] = None
        lines.append("no expected figure for this class and agent count")
    return res, code, lines


def cmd_sat(args):
    f = _parse_formula(args.formula)
    r = decision.sat(f, args.frame_class, max_worlds=args.bound, agents=args.agents,
                     seed=args.seed, budget=args.budget)
    res = r.to_json()
    res["formula"] = render(f)
    lines = [f"{r.status} (bound {args.bound}, {r.models_examined} models)"]
    if r.witness is not None:
        lines.append(f"witness: {r.witness}")
    return res, EXIT_OK, lines


def cmd_valid(args):
    f = _parse_formula(args.formula)
    r = decision.valid(f, args.frame_class, max_worlds=args.bound, agents=args.agents,
                       seed=args.seed, budget=args.budget)
    res = r.to_json()
    res["formula"] = render(f)
    lines = [f"{r.status} (bound {args.bound}, {r.models_examined} models)"]
    if r.countermodel is not None:
        lines.append(f"countermodel: {r.countermodel}")
    return res, EXIT_OK, lines


def cmd_proof(args):
    try:
        if os.path.exists(args.path):
            pr = axiomatics.load_proof(args.path)
        else:
            pr = axiomatics.bundled_proof(args.path)
    except (axiomatics.ProofFormatError, FileNotFoundError, OSError) as exc:
        raise InputError(f"proof: {exc}") from None
    v = axiomatics.check_proof(pr)
    res = v.to_json()
    return res, EXIT_OK if v.accepted else EXIT_FAIL, [v.message]


def cmd_game(args):
    n = args.n
    rounds = args.rounds if args.rounds is not None else n
    M, N = games.build_M(n), games.build_N(n)
    t = games.solve_tables(M.model, N.model)
    winners = {str(k): (games.DUPLICATOR if t.duplicator_wins(M.point, N.point, k) else games.SPOILER)
               for k in range(rounds + 1)}
    sep = games.verify_separation(n)
    res = {"n": n, "worlds": {"M": M.model.n, "N": N.model.n}, "winners": winners,
           "separation": sep.to_json(), "monotone": games.check_monotone(t)}
    if args.strategy:
        res["strategy"] = games.strategy_dump(M, N, rounds)
    lines = [f"M_{n}: {M.model.n} worlds, N_{n}: {N.model.n} worlds",
             *(f"{k} rounds: {w}" for k, w in winners.items()),
             f"Kw[i] Cw5 p: M={str(sep.m_satisfies).lower()} N={str(sep.n_satisfies).lower()}",
             f"bisimilar: {str(sep.bisimilar).lower()}",
             f"least spoiler win: {sep.spoiler_needs}",
             "separation confirmed" if sep.ok else "separation NOT confirmed"]
    return res, EXIT_OK if sep.ok else EXIT_FAIL, lines


def cmd_parity(args):
    if args.depth < 1 or args.depth > 4:
        raise InputError("depth must be between 1 and 4")
    ns = [args.n] if args.n is not None else list(range(1, args.depth + 1))
    if any(n < 1 or n > args.depth for n in ns):
        raise InputError("n must be between 1 and depth")
    rep = analysis.parity_sweep(args.depth, ns)
    res = {"depth": args.depth, "n": ns, "valuations": 1 << ((1 << (args.depth + 1)) - 1),
           **rep.to_json()}
    return res, EXIT_OK if rep.ok else EXIT_FAIL, [f"{len(rep.mismatches)} mismatches ({rep.checked} checks)"]


def cmd_fixtures(args):
    out = {}
    for name in fixture_names():
        pm = fixture(name)
        out[name] = model_to_json(pm.model, pm.point)
    return {"fixtures": out}, EXIT_OK, list(fixture_names())


# -- argument parsing ------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0, help="seed for every randomized component")
    common.add_argument("--threads", type=int, default=1, help="worker cap (computation is single-threaded)")
    common.add_argument("--json", action="store_true", help="print the report as JSON")

    p = argparse.ArgumentParser(prog="cwlogic", description="Knowing-whether logic toolkit")
    sub = p.add_subparsers(dest="command", required=True)

    e = sub.add_parser("eval", parents=[common], help="evaluate a formula on a model")
    e.add_argument("model", help="model JSON file or bundled fixture name")
    e.add_argument("formula")
    e.add_argument("--world", help="world label (default: the model's point)")
    e.add_argument("--trace", action="store_true", help="include the evaluation trace")
    e.set_defaults(func=cmd_eval)

    def search_flags(sp, bound):
        sp.add_argument("--class", dest="frame_class", default="K", choices=["K", "T", "KD45", "S5"])
        sp.add_argument("--bound", type=int, default=bound)
        sp.add_argument("--budget", type=int, default=None)

    mx = sub.add_parser("matrix", parents=[common], help="compute an implication matrix")
    search_flags(mx, 11)
    mx.add_argument("--agents", type=int, default=1, choices=[1, 2])
    mx.set_defaults(func=cmd_matrix, budget_default=60000)

    for name, func in (("sat", cmd_sat), ("valid", cmd_valid)):
        sp = sub.add_parser(name, parents=[common], help=f"bounded {name} check")
        sp.add_argument("formula")
        search_flags(sp, 4)
        sp.add_argument("--agents", type=int, default=None, help="number of agents (default: those in the formula)")
        sp.set_defaults(func=func, budget_default=2000)

    pr = sub.add_parser("proof", parents=[common], help="check a proof file")
    pr.add_argument("path", help="proof JSON file or bundled proof name such as derivation.json")
    pr.set_defaults(func=cmd_proof)

    g = sub.add_parser("game", parents=[common], help="solve the game on the separating models")
    g.add_argument("--n", type=int, default=1)
    g.add_argument("--rounds", type=int, default=None)
    g.add_argument("--strategy", action="store_true", help="include duplicator's answers at the root")
    g.set_defaults(func=cmd_game)

    pa = sub.add_parser("parity", parents=[common], help="binary-tree parity sweep")
    pa.add_argument("--depth", type=int, default=2)
    pa.add_argument("--n", type=int, default=None)
    pa.set_defaults(func=cmd_parity)

    fx = sub.add_parser("fixtures", parents=[common], help="list bundled fixtures")
    fx.set_defaults(func=cmd_fixtures)
    return p


def _inputs(args) -> dict:
    skip = {"func", "json", "seed", "threads", "command", "budget_default"}
    return {k: v for k, v in sorted(vars(args).items()) if k not in skip}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "budget", None) is None and hasattr(args, "budget_default"):
        args.budget = args.budget_default
    if args.command == "game" and (args.n < 1 or (args.rounds is not None and args.rounds < 0)):
        parser.error("--n must be >= 1 and --rounds >= 0")
    if args.threads < 1:
        parser.error("--threads must be >= 1")
    t0 = time.perf_counter()
    try:
        results, code, lines = args.func(args)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    report = {"command": args.command, "inputs": _inputs(args), "results": results,
              "version": _version(), "seed": args.seed,
              "wall_time": round(time.perf_counter() - t0, 3)}
    if args.json:
        print(json.dumps(report, indent=2, sort_keys=True))
    else:
        print("\n".join(lines))
    return code


if __name__ == "__main__":
    sys.exit(main())
