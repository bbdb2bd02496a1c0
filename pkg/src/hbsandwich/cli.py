"""Command-line front end.

    hbsandwich check PROBLEM.json [--all]
    hbsandwich extend PROBLEM.json [--xi-policy midpoint|low|high] [--order JSON] [--out CERT.json]
    hbsandwich classical sublinear|superlinear (--spec JSON | --norm N) --x0 1,0,0
    hbsandwich demo example-4-1|example-4-2|lemma-4-2|classical [--dump FILE]
    hbsandwich suite [--count 50] [--dims 2,3]

Global flags (accepted before or after the command): --json, --seed N,
--samples N, --oracle, --tolerance X.

Exit codes: 0 success or condition holds, 1 mathematical infeasibility or
condition failure, 2 input error, 3 numeric breakdown.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import demos
from .extension import (
    ExtensionRefused,
    InfeasibleExtension,
    XiPolicy,
    classical_extend_sublinear,
    classical_extend_superlinear,
    extend_full,
)
from .functionals import DimensionError, FunctionalSpec, MembershipError, VectorSampler
from .infconv import (
    CONDITION_TOL,
    Method,
    check_condition_41,
    check_condition_42,
    check_condition_43,
    compute_T,
)
from .lp import LPNumericalError
from .oracle import GridSpec, OracleDimensionError, brute_force_bounds, brute_force_T, generate_instance
from .problem import (
    SUBLINEAR_KINDS,
    SUPERLINEAR_KINDS,
    ProblemError,
    parse_problem,
    parse_spec,
    problem_digest,
)

EXIT_OK, EXIT_INFEASIBLE, EXIT_INPUT, EXIT_NUMERIC = 0, 1, 2, 3

# coarser than the oracle default, enough for the 1e-3 cross-check
SUITE_GRID = GridSpec(points=101)
ORACLE_AGREEMENT = 1e-3


@dataclass
class RunReport:
    command: str
    inputs_digest: str | None = None
    inputs: dict | None = None
    seed: int = 0
    conditions: list = field(default_factory=list)
    certificate: dict | None = None
    oracle: list | None = None
    result: dict = field(default_factory=dict)
    exit_code: int = EXIT_OK
    wall_time: float = 0.0

    def to_dict(self) -> dict:
        out = {
            "command": self.command,
            "inputs_digest": self.inputs_digest,
            "inputs": self.inputs,
            "seed": self.seed,
            "conditions": self.conditions,
            "certificate": self.certificate,
            "oracle": self.oracle,
            "result": self.result,
            "exit_code": self.exit_code,
            "wall_time": self.wall_time,
        }
        return _jsonable(out)


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        if math.isnan(v):
            return "nan"
        return v
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    if hasattr(obj, "value") and isinstance(getattr(obj, "value"), str):
        return obj.value
    return obj


def fmt(v) -> str:
    if isinstance(v, str):
        return v
    if v is None:
        return "-"
    if isinstance(v, (list, tuple, np.ndarray)):
        return "(" + ", ".join(fmt(x) for x in v) + ")"
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v))
    return f"{float(v):.6g}"


def _read_json(path: str):
    p = Path(path)
    if not p.exists():
        raise ProblemError(str(path), "file not found")
    text = p.read_text()
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ProblemError(f"{path}:{exc.lineno}:{exc.colno}", exc.msg) from exc


def load_input(path: str):
    """A problem file, or a previous report whose embedded inputs are reused."""
    data = _read_json(path)
    if isinstance(data, dict) and "command" in data and isinstance(data.get("inputs"), dict):
        data = data["inputs"]
    return parse_problem(data)


def _parse_vector(text: str, what: str) -> list:
    try:
        vals = [float(t) for t in text.replace(" ", "").split(",") if t]
    except ValueError as exc:
        raise ProblemError(what, f"expected comma-separated numbers, got {text!r}") from exc
    if not vals:
        raise ProblemError(what, "empty vector")
    return vals


def _cond_kwargs(args) -> dict:
    kw = {"seed": args.seed, "tol": args.tolerance}
    if args.samples is not None:
        kw["samples"] = args.samples
    return kw


# ---------------------------------------------------------------- check


def run_check(problem, args) -> RunReport:
    rep = RunReport("check", problem.digest(), problem.to_dict(), args.seed)
    kw = _cond_kwargs(args)
    steps = [
        lambda: check_condition_42(problem.S, problem.P, **kw),
        lambda: check_condition_43(problem.f0, problem.S, problem.P, **kw),
        lambda: check_condition_41(problem.f0, problem.S, problem.P, restriction=problem.E1, **kw),
    ]
    reports = []
    for step in steps:
        r = step()
        reports.append(r)
        if not r.holds and not args.all:
            break
    rep.conditions = [r.to_dict() for r in reports]
    r41 = reports[-1] if reports[-1].condition == "4.1" else None
    holds = r41 is not None and r41.holds
    rep.result = {"condition_41": None if r41 is None else r41.holds, "restricted_to_E1": problem.E1 is not None}
    if args.oracle:
        rep.oracle = _oracle_T(problem, r41, args)
    rep.exit_code = EXIT_OK if holds else EXIT_INFEASIBLE
    return rep


def _oracle_T(problem, r41, args) -> list:
    points = [np.asarray(r41.witness["x"])] if r41 is not None and r41.witness.get("x") is not None else []
    points += list(VectorSampler(problem.dim, args.seed).vectors(3))
    out = []
    for x in points:
        try:
            bf = brute_force_T(problem.S, problem.P, x, restriction=problem.E1)
        except OracleDimensionError as exc:
            return [{"skipped": str(exc)}]
        tv = compute_T(problem.S, problem.P, x, restriction=problem.E1, witness=False)
        out.append(_compare("T", x, tv.value, bf.value, tv.method.value, bf.attainment.value))
    return out


def _compare(what, x, primary, oracle, method, attainment=None) -> dict:
    if math.isinf(primary) or math.isinf(oracle):
        diff = 0.0 if primary == oracle else math.inf
    else:
        diff = abs(primary - oracle)
    d = {"quantity": what, "x": list(map(float, x)), "primary": primary, "oracle": oracle,
         "difference": diff, "method": method, "agree": diff <= ORACLE_AGREEMENT}
    if attainment is not None:
        d["oracle_attainment"] = attainment
    return d


def print_check(rep: RunReport):
    print(f"check  inputs {rep.inputs_digest}  seed {rep.seed}")
    for c in rep.conditions:
        mark = "holds" if c["holds"] else "FAILS"
        w = c["witness"] or {}
        extra = ""
        if not c["holds"] and w.get("x") is not None:
            extra = f"  witness x={fmt(w['x'])}"
            if w.get("y") is not None:
                extra += f" y={fmt(w['y'])}"
        print(f"  ({c['condition']}) {mark:5s}  margin {fmt(c['margin'])}  [{c['decision']}]{extra}")
    _print_oracle(rep.oracle)


def _print_oracle(rows):
    if not rows:
        return
    print("  oracle cross-check:")
    for r in rows:
        if "skipped" in r:
            print(f"    skipped: {r['skipped']}")
            continue
        print(f"    {r['quantity']} at {fmt(r['x'])}: primary {fmt(r['primary'])}  oracle {fmt(r['oracle'])}"
              f"  diff {fmt(r['difference'])}  {'ok' if r['agree'] else 'DISAGREE'}")


# ---------------------------------------------------------------- extend


def run_extend(problem, args) -> RunReport:
    rep = RunReport("extend", problem.digest(), problem.to_dict(), args.seed)
    order = problem.order
    if args.order is not None:
        try:
            order = json.loads(args.order)
        except json.JSONDecodeError as exc:
            raise ProblemError("--order", exc.msg) from exc
        order = [list(map(float, v)) for v in order]
    kw = {"seed": args.seed}
    if args.samples is not None:
        kw["condition_samples"] = args.samples
    try:
        cert = extend_full(problem.f0, problem.S, problem.P, order=order, policy=args.xi_policy,
                           target=problem.E1, **kw)
    except ExtensionRefused as exc:
        rep.conditions = [exc.report.to_dict()]
        rep.result = {"extended": False, "reason": str(exc)}
        rep.exit_code = EXIT_INFEASIBLE
        return rep
    except InfeasibleExtension as exc:
        rep.result = {"extended": False, "reason": str(exc), "step": exc.step,
                      "interval": exc.interval.to_dict(), "trace": exc.trace}
        rep.exit_code = EXIT_INFEASIBLE
        return rep
    rep.certificate = cert.to_dict()
    rep.result = {"extended": True, "passed": cert.passed, "target": "E1" if problem.E1 is not None else "R^n"}
    if args.oracle:
        rep.oracle = _oracle_bounds(problem, cert)
    if args.out:
        Path(args.out).write_text(json.dumps(_jsonable(rep.certificate), indent=2) + "\n")
        rep.result["out"] = args.out
    rep.exit_code = EXIT_OK if cert.passed else EXIT_INFEASIBLE
    return rep


def _oracle_bounds(problem, cert) -> list:
    if not cert.trace:
        return []
    first = cert.trace[0]
    try:
        bf = brute_force_bounds(problem.f0, first["x0"], problem.S, problem.P)
    except OracleDimensionError as exc:
        return [{"skipped": str(exc)}]
    return [_compare(k, first["x0"], first[k], getattr(bf, k), "interval_bounds") for k in ("a", "b", "c", "d")]


def print_extend(rep: RunReport):
    print(f"extend  inputs {rep.inputs_digest}  seed {rep.seed}")
    res = rep.result
    if not res.get("extended"):
        print(f"  refused: {res.get('reason')}")
        return
    cert = rep.certificate
    print(f"  target {res['target']}")
    print(f"  {'step':>4}  {'a':>11} {'b':>11} {'c':>11} {'d':>11} {'xi':>11}  x0")
    for i, t in enumerate(cert["trace"]):
        print(f"  {i:>4}  " + " ".join(f"{fmt(t[k]):>11}" for k in ("a", "b", "c", "d", "xi")) + f"  {fmt(t['x0'])}")
    print(f"  L = {fmt(cert['L'])}")
    print(f"  residual {fmt(cert['residual'])}  margin L<=S {fmt(cert['margin_S'])}  margin P<=L {fmt(cert['margin_P'])}"
          f"  {'verified' if cert['passed'] else 'NOT VERIFIED'}")
    if res.get("out"):
        print(f"  certificate written to {res['out']}")
    _print_oracle(rep.oracle)


# ---------------------------------------------------------------- classical


def _classical_spec(args) -> FunctionalSpec:
    allowed = SUBLINEAR_KINDS if args.kind == "sublinear" else SUPERLINEAR_KINDS
    if args.norm is not None:
        if args.norm < 1:
            raise ProblemError("--norm", "dimension must be positive")
        S = FunctionalSpec.euclidean_norm(args.norm)
        return S if args.kind == "sublinear" else FunctionalSpec.linear_minus_norm(np.zeros(args.norm), np.eye(args.norm))
    if args.spec is None:
        raise ProblemError("--spec", "give --spec or --norm")
    text = args.spec
    if Path(text).exists():
        data = _read_json(text)
    else:
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ProblemError("--spec", exc.msg) from exc
    if not isinstance(data, dict):
        raise ProblemError("--spec", "expected a JSON object")
    ref = data.get("generators") or data.get("matrix") or [data.get("linear")]
    try:
        dim = len(ref[0])
    except (TypeError, IndexError):
        raise ProblemError("--spec", "cannot infer the dimension") from None
    return parse_spec(data, "--spec", dim, allowed)


def run_classical(args) -> RunReport:
    spec = _classical_spec(args)
    x0 = _parse_vector(args.x0, "--x0")
    if len(x0) != spec.dim:
        raise ProblemError("--x0", f"has length {len(x0)}, expected {spec.dim}")
    inputs = {"kind": args.kind, "spec": spec.to_dict(), "x0": x0}
    rep = RunReport("classical", problem_digest(inputs), inputs, args.seed)
    fn = classical_extend_sublinear if args.kind == "sublinear" else classical_extend_superlinear
    cert = fn(spec, x0, seed=args.seed)
    rep.certificate = cert.to_dict()
    x = np.asarray(x0)
    # the superlinear case is pinned at -P(-x0), the sublinear mirror's value
    pinned = spec(x) if args.kind == "sublinear" else -spec(-x)
    rep.result = {"L": cert.L.coeffs.tolist(), "passed": cert.passed, "L(x0)": float(cert.L(x0)),
                  "pinned(x0)": float(pinned)}
    rep.exit_code = EXIT_OK
    return rep


def print_classical(rep: RunReport):
    r = rep.result
    sub = rep.inputs["kind"] == "sublinear"
    name = "S(x0)" if sub else "-P(-x0)"
    side = "L <= S" if sub else "P <= L"
    margin = rep.certificate["margin_S"] if sub else rep.certificate["margin_P"]
    print(f"classical {rep.inputs['kind']}  x0 = {fmt(rep.inputs['x0'])}")
    print(f"  L = {fmt(r['L'])}")
    print(f"  L(x0) = {fmt(r['L(x0)'])}   {name} = {fmt(r['pinned(x0)'])}")
    print(f"  sampled margin {side}: {fmt(margin)}  {'verified' if r['passed'] else 'NOT VERIFIED'}")


# ---------------------------------------------------------------- demo


def run_demo_cmd(args) -> RunReport:
    if args.dump:
        if args.name not in demos.PROBLEMS:
            raise ProblemError("--dump", f"demo {args.name!r} has no problem file")
        Path(args.dump).write_text(json.dumps(demos.PROBLEMS[args.name], indent=2) + "\n")
    res = demos.run_demo(args.name, seed=args.seed)
    data = res.to_dict()
    rep = RunReport("demo", problem_digest({"demo": args.name}), {"demo": args.name}, args.seed)
    rep.result = {"demo": args.name, "passed": res.passed, "claims": data["claims"], "data": data["data"]}
    rep.exit_code = EXIT_OK if res.passed else EXIT_INFEASIBLE
    return rep


def print_demo(rep: RunReport):
    r = rep.result
    print(f"demo {r['demo']}")
    for c in r["claims"]:
        mark = "ok " if c["ok"] else "BAD"
        print(f"  [{mark}] {c['claim']}")
        print(f"        claimed:  {c['expected']}")
        print(f"        computed: {_fmt_any(c['computed'])}")
    print(f"  {'all claims reproduced' if r['passed'] else 'some claims NOT reproduced'}")


def _fmt_any(v) -> str:
    if isinstance(v, dict):
        return ", ".join(f"{k}={_fmt_any(x)}" for k, x in v.items())
    if isinstance(v, list) and v and isinstance(v[0], list):
        return "; ".join(fmt(x) for x in v)
    return fmt(v)


# ---------------------------------------------------------------- suite


def suite_instance_seed(seed: int, i: int) -> int:
    return seed * 100_003 + i


def run_suite_instance(i: int, dim: int, seed: int, feasible: bool, oracle: bool) -> dict:
    inst = generate_instance(dim, feasible, seed)
    S, P, f0 = inst.S, inst.P, inst.f0
    lp = check_condition_41(f0, S, P, seed=seed, method=Method.EXACT_LP)
    row = {"index": i, "dim": dim, "seed": seed, "constructed_feasible": feasible, "note": inst.note,
           "condition_41": lp.holds}
    try:
        cert = extend_full(f0, S, P, seed=seed, precheck=False)
        row["extended"] = True
        row["certificate_passed"] = cert.passed
    except InfeasibleExtension as exc:
        row["extended"] = False
        row["certificate_passed"] = None
        row["stuck_at_step"] = exc.step
    ok = row["extended"] == lp.holds == feasible and (not row["extended"] or row["certificate_passed"])
    if oracle and dim <= 3:
        x = VectorSampler(dim, seed).vectors(1)[0]
        tv = compute_T(S, P, x, witness=False)
        bf = brute_force_T(S, P, x, grid=SUITE_GRID)
        cmp = _compare("T", x, tv.value, bf.value, tv.method.value, bf.attainment.value)
        row["oracle"] = {"difference": cmp["difference"], "agree": cmp["agree"]}
        ok = ok and cmp["agree"]
    row["pass"] = bool(ok)
    return row


def run_suite(args) -> RunReport:
    if args.count < 1:
        raise ProblemError("--count", "must be at least 1")
    dims = [int(d) for d in _parse_vector(args.dims, "--dims")]
    if any(d < 1 or d > 6 for d in dims):
        raise ProblemError("--dims", "dimensions must lie in 1..6")
    inputs = {"count": args.count, "dims": dims, "seed": args.seed, "oracle": not args.no_oracle}
    rep = RunReport("suite", problem_digest(inputs), inputs, args.seed)
    rows = []
    for i in range(args.count):
        rows.append(run_suite_instance(i, dims[i % len(dims)], suite_instance_seed(args.seed, i), i % 2 == 0,
                                       not args.no_oracle))
    vector = [r["pass"] for r in rows]
    rep.result = {"passed": sum(vector), "failed": len(vector) - sum(vector), "pass_vector": vector,
                  "instances": rows}
    rep.exit_code = EXIT_OK if all(vector) else EXIT_INFEASIBLE
    return rep


def print_suite(rep: RunReport):
    r = rep.result
    print(f"suite  count {rep.inputs['count']}  dims {rep.inputs['dims']}  seed {rep.seed}")
    for row in r["instances"]:
        if not row["pass"]:
            print(f"  FAIL #{row['index']} dim {row['dim']} seed {row['seed']}: constructed "
                  f"{'feasible' if row['constructed_feasible'] else 'infeasible'}, 4.1 {row['condition_41']}, "
                  f"extended {row['extended']}, certificate {row['certificate_passed']}, oracle {row.get('oracle')}")
    print(f"  {r['passed']}/{r['passed'] + r['failed']} passed")


# ---------------------------------------------------------------- parser


def _add_globals(p: argparse.ArgumentParser, top: bool):
    d = (lambda v: v) if top else (lambda v: argparse.SUPPRESS)
    p.add_argument("--json", action="store_true", default=d(False), help="emit the JSON report")
    p.add_argument("--seed", type=int, default=d(0), help="seed for sampling and generators")
    p.add_argument("--samples", type=int, default=d(None), help="sample count for condition checks")
    p.add_argument("--oracle", action="store_true", default=d(False), help="cross-check against the brute-force oracle")
    p.add_argument("--tolerance", type=float, default=d(CONDITION_TOL), help="condition tolerance")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="hbsandwich", description="Finite-dimensional sandwich extensions P <= L <= S.")
    _add_globals(parser, top=True)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("check", help="check conditions 4.2, 4.3 and 4.1 for a problem file")
    p.add_argument("problem")
    p.add_argument("--all", action="store_true", help="run every condition even after a failure")
    _add_globals(p, top=False)

    p = sub.add_parser("extend", help="construct and verify an extension")
    p.add_argument("problem")
    p.add_argument("--xi-policy", choices=[x.value for x in XiPolicy], default="midpoint")
    p.add_argument("--order", help="JSON list of completion directions")
    p.add_argument("--out", help="write the certificate JSON here")
    _add_globals(p, top=False)

    p = sub.add_parser("classical", help="classical extension dominated by S (or dominating P)")
    p.add_argument("kind", choices=["sublinear", "superlinear"])
    p.add_argument("--spec", help="functional spec as JSON text or a file path")
    p.add_argument("--norm", type=int, help="use the Euclidean norm (or its negative) on R^N")
    p.add_argument("--x0", required=True, help="comma-separated point")
    _add_globals(p, top=False)

    p = sub.add_parser("demo", help="reproduce a worked example")
    p.add_argument("name", choices=list(demos.DEMOS))
    p.add_argument("--dump", help="also write the demo's problem JSON to this path")
    _add_globals(p, top=False)

    p = sub.add_parser("suite", help="random-instance equivalence and oracle suite")
    p.add_argument("--count", type=int, default=50)
    p.add_argument("--dims", default="2,3")
    p.add_argument("--no-oracle", action="store_true", help="skip the brute-force T comparison")
    _add_globals(p, top=False)
    return parser


RUNNERS = {
    "check": (lambda a: run_check(load_input(a.problem), a), print_check),
    "extend": (lambda a: run_extend(load_input(a.problem), a), print_extend),
    "classical": (run_classical, print_classical),
    "demo": (run_demo_cmd, print_demo),
    "suite": (run_suite, print_suite),
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    runner, printer = RUNNERS[args.command]
    t0 = time.perf_counter()
    try:
        rep = runner(args)
    except (ProblemError, DimensionError, MembershipError, OracleDimensionError) as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except LPNumericalError as exc:
        print(f"numeric breakdown: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except ValueError as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    rep.wall_time = time.perf_counter() - t0
    if args.json:
        json.dump(rep.to_dict(), sys.stdout, indent=2)
        sys.stdout.write("\n")
    else:
        printer(rep)
        print(f"  wall time {rep.wall_time:.3g} s")
    return rep.exit_code


if __name__ == "__main__":
    sys.exit(main())
