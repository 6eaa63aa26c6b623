"""``minent`` command-line driver.

Exit codes: 0 success, 1 a checked claim was falsified, 2 usage or input
error, 3 size limit exceeded.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np

import minent
from minent import serialize
from minent.coupling import (
    Coupling,
    CouplingError,
    find_order_preserving_equivalent,
    independent,
    joint_entropy,
    mutual_information,
    nw_corner,
    order_preserving_coupling,
)
from minent.instances import GENERATOR, random_instance
from minent.localopt import descend
from minent.oracle import (
    DEFAULT_N_LIMIT,
    SizeLimitError,
    enumerate_vertices,
    verify_independent_max,
    verify_main_theorem,
)
from minent.probcore import (
    TOL_MASS,
    DistributionError,
    ProbVector,
    entropy,
    meet,
    normalize_base,
    one_bit,
    sort_desc,
)

EXIT_OK, EXIT_FALSIFIED, EXIT_USAGE, EXIT_SIZE = 0, 1, 2, 3


class UsageError(Exception):
    pass


@dataclass
class ProblemInstance:
    p: ProbVector
    q: ProbVector
    base: str = "2"
    seed: Optional[int] = None
    label: Optional[str] = None

    def __post_init__(self):
        if self.p.n != self.q.n:
            raise UsageError(f"p has {self.p.n} entries but q has {self.q.n}")

    def to_dict(self) -> dict:
        return {"p": self.p.tolist(), "q": self.q.tolist(), "base": self.base,
                "seed": self.seed, "label": self.label}


def _vector(values, renormalize: bool, tol: float) -> ProbVector:
    try:
        if renormalize:
            return ProbVector.renormalized(values)
        return ProbVector(np.asarray(values, dtype=float), tol=tol)
    except DistributionError as e:
        raise UsageError(str(e)) from None


def _parse_inline(text: str) -> list:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise UsageError(f"cannot parse vector {text!r}") from None


def parse_instance(
    p: Optional[str] = None,
    q: Optional[str] = None,
    file: Optional[str] = None,
    renormalize: bool = False,
    tol: float = TOL_MASS,
    base="2",
    seed: Optional[int] = None,
) -> ProblemInstance:
    """Build an instance from ``-p/-q`` strings or a JSON / two-row CSV file."""
    label = None
    if file is not None:
        path = Path(file)
        if not path.exists():
            raise UsageError(f"no such file: {file}")
        text = path.read_text()
        if path.suffix.lower() == ".json" or text.lstrip().startswith("{"):
            try:
                data = json.loads(text)
                pv, qv = data["p"], data["q"]
            except (json.JSONDecodeError, KeyError, TypeError) as e:
                raise UsageError(f"{file}: malformed instance ({e})") from None
            seed = data.get("seed", seed)
            label = data.get("label")
        else:
            rows = [ln for ln in text.splitlines() if ln.strip()]
            if len(rows) != 2:
                raise UsageError(f"{file}: expected two CSV rows, got {len(rows)}")
            pv, qv = _parse_inline(rows[0]), _parse_inline(rows[1])
        label = label or path.stem
    else:
        if p is None or q is None:
            raise UsageError("give both -p and -q, or --file")
        pv, qv = _parse_inline(p), _parse_inline(q)
    if len(pv) != len(qv):
        raise UsageError(f"length mismatch: p has {len(pv)} entries, q has {len(qv)}")
    return ProblemInstance(
        _vector(pv, renormalize, tol), _vector(qv, renormalize, tol), normalize_base(base), seed, label
    )


def _H(x: float, base: str) -> dict:
    return {"value": float(x), "base": base}


def _report(command: str, args, outputs: dict, t0: float, instance=None) -> dict:
    return {
        "tool": "minent",
        "version": minent.__version__,
        "command": command,
        "base": normalize_base(args.base),
        "instance": instance.to_dict() if instance is not None else None,
        "outputs": outputs,
        "timing_ms": (time.perf_counter() - t0) * 1000.0,
    }


def _emit(report: dict, args, lines: list) -> None:
    if args.json:
        serialize.write_json(args.json, report)
    if args.json != "-":
        for line in lines:
            print(line)


def _matrix_lines(M, indent: str = "  ") -> list:
    return [indent + " ".join(f"{x:10.6f}" for x in row) for row in np.asarray(M)]


def _instance(args) -> ProblemInstance:
    return parse_instance(args.p, args.q, args.file, args.renormalize, args.tol, args.base, args.seed)


def cmd_entropy(args) -> int:
    t0 = time.perf_counter()
    inst = _instance(args)
    b = inst.base
    ps, qs = sort_desc(inst.p), sort_desc(inst.q)
    hp, hq = float(entropy(inst.p, b)), float(entropy(inst.q, b))
    hm = float(entropy(meet(ps, qs), b))
    out = {"H_p": _H(hp, b), "H_q": _H(hq, b), "H_meet": _H(hm, b), "H_independent": _H(hp + hq, b)}
    unit = "bits" if b == "2" else "nats"
    lines = [f"H(p)        = {hp:.10f} {unit}", f"H(q)        = {hq:.10f} {unit}",
             f"H(p^q)      = {hm:.10f} {unit}", f"H(p)+H(q)   = {hp + hq:.10f} {unit}"]
    _emit(_report("entropy", args, out, t0, inst), args, lines)
    return EXIT_OK


def cmd_bounds(args) -> int:
    t0 = time.perf_counter()
    inst = _instance(args)
    b = inst.base
    ps, qs = sort_desc(inst.p), sort_desc(inst.q)
    lower = float(entropy(meet(ps, qs), b))
    upper = lower + one_bit(b)
    if inst.p.n <= args.oracle_limit:
        rep = verify_main_theorem(ps, qs, b, args.oracle_limit)
        value, label = rep.min_entropy, "min"
        ok = rep.sandwich_ok
    else:
        final, _ = descend(independent(ps, qs), b)
        value, label = float(joint_entropy(final, b)), "upper bound"
        ok = lower - 1e-9 <= value
    out = {"lower": _H(lower, b), "upper": _H(upper, b), "value": _H(value, b),
           "value_kind": "oracle_min" if label == "min" else "descent_upper_bound",
           "sandwich_ok": ok}
    lines = [f"H(p^q)       = {lower:.10f}", f"{label:<12} = {value:.10f}",
             f"H(p^q) + 1b  = {upper:.10f}", f"sandwich     : {'ok' if ok else 'VIOLATED'}"]
    _emit(_report("bounds", args, out, t0, inst), args, lines)
    return EXIT_OK if ok else EXIT_FALSIFIED


def _start_coupling(args, inst: Optional[ProblemInstance]) -> Coupling:
    src = args.start
    if src.startswith("file:"):
        path = src[5:]
        try:
            C = Coupling(serialize.read_matrix_csv(path), tol=args.tol)
        except (OSError, ValueError) as e:
            raise UsageError(f"cannot read start coupling: {e}") from None
        if inst is not None:
            if C.n != inst.p.n or not (
                np.allclose(C.row_marginal, inst.p.values, atol=args.tol)
                and np.allclose(C.col_marginal, inst.q.values, atol=args.tol)
            ):
                raise UsageError("start coupling marginals do not match -p/-q")
        return C
    if inst is None:
        raise UsageError("give -p/-q or --file unless --from file:PATH")
    if src == "independent":
        return independent(inst.p, inst.q)
    if src == "nw":
        return nw_corner(inst.p, inst.q)
    if src in ("op", "order-preserving"):
        ps, qs = sort_desc(inst.p), sort_desc(inst.q)
        M = order_preserving_coupling(ps, qs).matrix
        n = M.shape[0]
        X = np.zeros_like(M)
        for k in range(n):
            for c in range(n):
                X[ps.sort_perm[k], qs.sort_perm[n - 1 - c]] = M[k, c]
        return Coupling(X)
    raise UsageError(f"unknown start {src!r}")


def cmd_minimize(args) -> int:
    t0 = time.perf_counter()
    have_vectors = args.file is not None or (args.p is not None and args.q is not None)
    inst = _instance(args) if have_vectors else None
    b = normalize_base(args.base)
    start = _start_coupling(args, inst)
    final, trace = descend(start, b)
    in_labels = trace.final_in_original_labels()
    h0, h1 = float(joint_entropy(start, b)), float(joint_entropy(final, b))
    out = {
        "start": args.start,
        "initial": start.tolist(),
        "initial_entropy": _H(h0, b),
        "final": final.tolist(),
        "final_entropy": _H(h1, b),
        "final_in_input_labels": in_labels.tolist(),
        "row_perm": list(trace.row_perm),
        "col_perm": list(trace.col_perm),
        "lemma_steps": trace.lemma_steps,
        "steps": len(trace.steps),
        "mutual_information": _H(mutual_information(final, b), b),
    }
    if args.trace:
        serialize.write_json(args.trace, trace)
    if args.csv:
        serialize.write_matrix_csv(args.csv, in_labels.matrix)
    lines = [f"start ({args.start}): H = {h0:.10f}"] + _matrix_lines(start.matrix)
    lines += [f"final (upper triangular, {trace.lemma_steps} 2x2 shifts, {len(trace.steps)} steps): H = {h1:.10f}"]
    lines += _matrix_lines(final.matrix)
    lines += [f"rows <- {list(trace.row_perm)}  cols <- {list(trace.col_perm)}"]
    _emit(_report("minimize", args, out, t0, inst), args, lines)
    return EXIT_OK


def cmd_oracle(args) -> int:
    t0 = time.perf_counter()
    inst = _instance(args)
    b = inst.base
    rep = verify_main_theorem(inst.p, inst.q, b, args.oracle_limit)
    ok_max = verify_independent_max(rep.p, rep.q, args.samples, np.random.default_rng(args.seed or 0), b,
                                    args.oracle_limit)
    out = rep.to_dict()
    out["independent_max_ok"] = ok_max
    if args.vertices_csv:
        serialize.write_blocks_csv(args.vertices_csv, enumerate_vertices(rep.p, rep.q, args.oracle_limit).vertices)
    lines = [f"vertices: {rep.n_vertices}, minimisers: {rep.n_minimizers}",
             f"min H = {rep.min_entropy:.10f}"] + _matrix_lines(rep.min_coupling.matrix)
    lines += [f"H(p^q) = {rep.meet_entropy:.10f}, H(p)+H(q) = {rep.max_entropy_bound:.10f}",
              f"sandwich: {rep.sandwich_ok}, order-preserving minimisers: {rep.order_preserving_ok}, "
              f"independent is max: {ok_max}"]
    _emit(_report("oracle", args, out, t0, inst), args, lines)
    ok = rep.sandwich_ok and rep.order_preserving_ok and ok_max
    return EXIT_OK if ok else EXIT_FALSIFIED


def cmd_verify(args) -> int:
    t0 = time.perf_counter()
    b = normalize_base(args.base)
    if args.n > args.oracle_limit:
        raise SizeLimitError(f"n={args.n} exceeds the oracle limit {args.oracle_limit}")
    rng = np.random.default_rng(args.seed)
    counts = dict(order_preserving=0, sandwich=0, independent_max=0, descent_fixes_min=0,
                  sorted_order_preserving=0, descent_from_independent_optimal=0)
    failures = []
    for k in range(args.count):
        p, q = random_instance(args.n, rng)
        rep = verify_main_theorem(p, q, b, args.oracle_limit)
        ok_max = verify_independent_max(p, q, args.samples, rng, b, args.oracle_limit)
        f_min, _ = descend(rep.min_coupling, b)
        fixes = abs(float(joint_entropy(f_min, b)) - rep.min_entropy) < 1e-10
        f_ind, _ = descend(independent(p, q), b)
        h_ind = float(joint_entropy(f_ind, b))
        counts["order_preserving"] += rep.order_preserving_ok
        counts["sandwich"] += rep.sandwich_ok
        counts["independent_max"] += ok_max
        counts["descent_fixes_min"] += fixes
        counts["sorted_order_preserving"] += rep.sorted_order_preserving_ok
        counts["descent_from_independent_optimal"] += h_ind <= rep.min_entropy + 1e-9
        if not (rep.order_preserving_ok and rep.sandwich_ok and ok_max and fixes
                and h_ind >= rep.min_entropy - 1e-9):
            failures.append({"index": k, "p": p.tolist(), "q": q.tolist()})
    checked = ("order_preserving", "sandwich", "independent_max", "descent_fixes_min")
    out = {"n": args.n, "count": args.count, "seed": args.seed, "generator": GENERATOR,
           "counts": counts, "checked": list(checked), "failures": failures}
    lines = [f"{name:<34} {counts[name]}/{args.count}" for name in counts]
    lines.append("all claims verified" if not failures else f"{len(failures)} instance(s) falsified a claim")
    _emit(_report("verify", args, out, t0), args, lines)
    return EXIT_OK if not failures else EXIT_FALSIFIED


def cmd_gen(args) -> int:
    t0 = time.perf_counter()
    rng = np.random.default_rng(args.seed)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = []
    for k in range(args.count):
        p, q = random_instance(args.n, rng, sort=not args.unsorted)
        path = out_dir / f"instance_{k:04d}.json"
        serialize.write_json(path, {"p": p.tolist(), "q": q.tolist(), "seed": args.seed, "index": k,
                                    "generator": GENERATOR, "label": path.stem})
        paths.append(str(path))
    _emit(_report("gen", args, {"files": paths, "seed": args.seed, "generator": GENERATOR}, t0), args,
          [f"wrote {len(paths)} instance(s) to {out_dir}"])
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--base", default="2", choices=["2", "e"], help="logarithm base (default 2)")
    common.add_argument("--tol", type=float, default=TOL_MASS, help="mass tolerance for inputs")
    common.add_argument("--seed", type=int, default=None)
    common.add_argument("--json", metavar="PATH", help="write a JSON report ('-' for stdout)")

    inst = argparse.ArgumentParser(add_help=False)
    inst.add_argument("-p", help="comma-separated first marginal")
    inst.add_argument("-q", help="comma-separated second marginal")
    inst.add_argument("--file", help='instance file: JSON {"p": [...], "q": [...]} or two CSV rows')
    inst.add_argument("--renormalize", action="store_true", help="rescale inputs to unit mass")

    limit = argparse.ArgumentParser(add_help=False)
    limit.add_argument("--oracle-limit", type=int, default=DEFAULT_N_LIMIT)

    parser = argparse.ArgumentParser(prog="minent", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"minent {minent.__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    s = sub.add_parser("entropy", parents=[common, inst], help="H(p), H(q), H(p^q), H(p)+H(q)")
    s.set_defaults(func=cmd_entropy)
    s = sub.add_parser("bounds", parents=[common, inst, limit], help="meet-entropy sandwich")
    s.set_defaults(func=cmd_bounds)
    s = sub.add_parser("minimize", parents=[common, inst], help="descend to an upper-triangular coupling")
    s.add_argument("--from", dest="start", default="independent",
                   help="independent | nw | op | file:PATH (default independent)")
    s.add_argument("--trace", metavar="PATH", help="write the descent trace as JSON")
    s.add_argument("--csv", metavar="PATH", help="write the final coupling (input labels) as CSV")
    s.set_defaults(func=cmd_minimize)
    s = sub.add_parser("oracle", parents=[common, inst, limit], help="exhaustive vertex oracle")
    s.add_argument("--samples", type=int, default=50, help="random vertex mixtures for the max check")
    s.add_argument("--vertices-csv", metavar="PATH", help="dump all vertices as CSV blocks")
    s.set_defaults(func=cmd_oracle)
    s = sub.add_parser("verify", parents=[common, limit], help="batch-check the claims on random instances")
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--count", type=int, default=100)
    s.add_argument("--samples", type=int, default=20)
    s.set_defaults(func=cmd_verify, seed=0)
    s = sub.add_parser("gen", parents=[common], help="write seeded random instances")
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--count", type=int, default=10)
    s.add_argument("--out", default="instances")
    s.add_argument("--unsorted", action="store_true", help="keep sampled order instead of sorting")
    s.set_defaults(func=cmd_gen, seed=0)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    try:
        return args.func(args)
    except SizeLimitError as e:
        print(f"minent: {e}", file=sys.stderr)
        return EXIT_SIZE
    except (UsageError, DistributionError, CouplingError) as e:
        print(f"minent: {e}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
