"""Command line entry point: gen / solve / oracle / bench / sketch-test."""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from . import harness, sketch
from .core import (
    BudgetExceededError,
    DenseMatrix,
    REAL,
    read_matrix_text,
    write_matrix_text,
)


def _read_matrix(path) -> DenseMatrix:
    with open(path) as fh:
        return read_matrix_text(fh.read())


def _cmd_gen(args):
    if args.kind == "planted":
        spec = harness.PlantedSpec(
            n=args.n,
            d=args.d,
            k=args.k,
            domain=args.domain,
            q=args.q,
            semiring=args.semiring,
            noise_rate=args.noise,
            seed=args.seed,
        )
        A, truth = harness.generate(spec)
        if args.truth:
            with open(args.truth, "w") as fh:
                fh.write(
                    json.dumps(
                        {
                            "u": truth.U.data.tolist(),
                            "v": truth.V.data.tolist(),
                            "flips": truth.flips,
                        },
                        sort_keys=True,
                    )
                )
    else:
        A = harness.uniform_real_instance(args.n, args.d, args.low, args.high, args.seed)
    text = write_matrix_text(A)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return 0


def _collect_params(args):
    params = {}
    for key in (
        "k",
        "p",
        "eps",
        "t",
        "restarts",
        "semiring",
        "budget",
        "grid_step",
        "grid_bound",
        "sketch_rows",
        "bank",
        "buckets",
        "gamma",
        "size_budget",
        "family_budget",
    ):
        val = getattr(args, key, None)
        if val is not None:
            params[key] = val
    return params


def _cmd_solve(args):
    A = _read_matrix(args.matrix)
    if args.alg == "fq-sketch":
        if A.domain.kind != "fq":
            print("fq-sketch needs an F_q matrix", file=sys.stderr)
            return 2
        if args.q is not None and args.q != A.domain.q:
            print(f"--q {args.q} does not match matrix domain fq:{A.domain.q}", file=sys.stderr)
            return 2
    try:
        pair = harness.run_algorithm(args.alg, A, _collect_params(args), args.seed)
    except BudgetExceededError as exc:
        print(f"refused: required enumeration count {exc.required} exceeds budget {exc.budget}", file=sys.stderr)
        return 2
    print(pair.to_json())
    return 0


def _cmd_oracle(args):
    A = _read_matrix(args.matrix)
    try:
        result = harness.run_oracle(args.alg, A, _collect_params(args))
    except BudgetExceededError as exc:
        print(f"refused: required enumeration count {exc.required} exceeds cap {exc.budget}", file=sys.stderr)
        return 2
    print(result.witness.to_json())
    return 0


def _cmd_bench(args):
    try:
        return harness.bench(args.config, args.jsonl, args.csv, workers=args.workers)
    except harness.ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2


def _cmd_sketch_test(args):
    rng = np.random.default_rng(args.seed)
    rows = []
    ok = True
    for p in args.p:
        U = DenseMatrix(rng.standard_normal((args.n, args.k)), REAL)
        frac = sketch.embedding_trial(U, p, args.m, args.trials, args.eps, args.seed)
        passed = frac >= args.min_fraction
        ok = ok and passed
        rows.append((p, frac, passed))
    print(f"{'p':>6} {'in-band':>9} {'verdict':>8}")
    for p, frac, passed in rows:
        print(f"{p:>6.2f} {frac:>9.3f} {'pass' if passed else 'FAIL':>8}")
    return 0 if ok else 1


def main(argv=None):
    parser = argparse.ArgumentParser(prog="lowrank", description="Entrywise low-rank approximation toolkit")
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", help="generate an instance")
    g.add_argument("--kind", choices=["planted", "uniform"], default="planted")
    g.add_argument("--n", type=int, required=True)
    g.add_argument("--d", type=int, required=True)
    g.add_argument("--k", type=int, default=1)
    g.add_argument("--domain", choices=["binary", "fq"], default="binary")
    g.add_argument("--q", type=int)
    g.add_argument("--semiring", default="f2")
    g.add_argument("--noise", type=float, default=0.0)
    g.add_argument("--low", type=int, default=-2)
    g.add_argument("--high", type=int, default=2)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out")
    g.add_argument("--truth")
    g.set_defaults(func=_cmd_gen)

    s = sub.add_parser("solve", help="run a solver on a matrix file")
    s.add_argument("matrix")
    s.add_argument("--alg", required=True, choices=["lp-ptas", "fq-sketch", "binary-simple", "binary-sample"])
    s.add_argument("--q", type=int, help="field size; must match the matrix domain")
    s.add_argument("--k", type=int, default=1)
    s.add_argument("--p", type=float)
    s.add_argument("--eps", type=float)
    s.add_argument("--t", type=int)
    s.add_argument("--restarts", type=int)
    s.add_argument("--semiring")
    s.add_argument("--budget", type=int)
    s.add_argument("--grid-step", dest="grid_step", type=float)
    s.add_argument("--grid-bound", dest="grid_bound", type=float)
    s.add_argument("--sketch-rows", dest="sketch_rows", type=int)
    s.add_argument("--bank", type=int, help="F_q sketch bank size")
    s.add_argument("--buckets", type=int, help="F_q hash bucket count")
    s.add_argument("--gamma", type=float)
    s.add_argument("--size-budget", dest="size_budget", type=int)
    s.add_argument("--family-budget", dest="family_budget", type=int)
    s.add_argument("--seed", type=int, default=0)
    s.set_defaults(func=_cmd_solve)

    o = sub.add_parser("oracle", help="run a brute-force oracle")
    o.add_argument("matrix")
    o.add_argument("--alg", required=True, choices=["binary", "fq", "l1grid"])
    o.add_argument("--k", type=int, default=1)
    o.add_argument("--semiring")
    o.add_argument("--grid-step", dest="grid_step", type=float)
    o.add_argument("--grid-bound", dest="grid_bound", type=float)
    o.set_defaults(func=_cmd_oracle)

    b = sub.add_parser("bench", help="run a bench config")
    b.add_argument("config")
    b.add_argument("--jsonl")
    b.add_argument("--csv")
    b.add_argument("--workers", type=int, default=1)
    b.set_defaults(func=_cmd_bench)

    t = sub.add_parser("sketch-test", help="median-embedding band checks")
    t.add_argument("--p", type=float, nargs="+", default=[1.0])
    t.add_argument("--n", type=int, default=20)
    t.add_argument("--k", type=int, default=2)
    t.add_argument("--m", type=int, default=400)
    t.add_argument("--trials", type=int, default=200)
    t.add_argument("--eps", type=float, default=0.2)
    t.add_argument("--min-fraction", dest="min_fraction", type=float, default=0.9)
    t.add_argument("--seed", type=int, default=0)
    t.set_defaults(func=_cmd_sketch_test)

    args = parser.parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
