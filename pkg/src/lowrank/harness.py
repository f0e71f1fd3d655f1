"""Instance generation, experiment orchestration, and machine-readable
reporting.

Planted instances are noise-flipped exact factorizations with the flip
count recorded, so the planted cost upper-bounds the optimum.  Bench runs
are driven by an INI-style key-value config; reports are JSON lines (one
canonical object per run, volatile timing excluded so reruns are
byte-identical) plus a CSV summary that carries the wall-clock numbers.

Seed derivation: every run uses hash64(config seed, instance id, algorithm
id) via blake2b, so any single run is reproducible outside bench.
"""

from __future__ import annotations

import configparser
import csv
import io
import json
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import binary, gf, l0fq, lpsolve, oracle
from .core import (
    BINARY,
    ContractError,
    DenseMatrix,
    FactorPair,
    ParameterError,
    REAL,
    derive_seed,
    fq_domain,
    generalized_l0_cost,
    generalized_product,
    lp_cost,
    semiring_table,
)


@dataclass(frozen=True)
class PlantedSpec:
    n: int
    d: int
    k: int
    domain: str = "binary"  # "binary" | "fq"
    q: int | None = None
    semiring: str = "f2"  # binary product semantics; f2 and bool stay 0/1-valued
    noise_rate: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.domain not in ("binary", "fq"):
            raise ParameterError("planted instances are binary or F_q")
        if not 0.0 <= self.noise_rate <= 1.0:
            raise ParameterError("noise rate must lie in [0, 1]")
        if self.domain == "binary" and self.semiring not in ("f2", "bool"):
            raise ParameterError("binary planting needs a 0/1-valued semiring (f2 or bool)")


@dataclass(frozen=True)
class PlantedTruth:
    U: DenseMatrix
    V: DenseMatrix
    flips: int

    @property
    def planted_cost(self):
        return self.flips


def generate(spec: PlantedSpec):
    """A = flip_rho(U* V*) with uniform factors; returns (A, ground truth).

    Binary flips complement the entry; F_q flips add a uniform nonzero
    field element, so every flip changes the entry and the recorded flip
    count is exactly the planted cost."""
    rng = np.random.default_rng(spec.seed)
    mask = rng.random((spec.n, spec.d)) < spec.noise_rate
    if spec.domain == "binary":
        U = DenseMatrix(rng.integers(0, 2, (spec.n, spec.k)), BINARY)
        V = DenseMatrix(rng.integers(0, 2, (spec.k, spec.d)), BINARY)
        table = semiring_table(spec.semiring, spec.k)
        B = generalized_product(U, V, table).data.astype(np.uint8)
        A = np.where(mask, 1 - B, B)
        return DenseMatrix(A, BINARY), PlantedTruth(U, V, int(mask.sum()))
    q = spec.q
    F = gf.field(q)
    dom = fq_domain(q)
    U = DenseMatrix(rng.integers(0, q, (spec.n, spec.k)), dom)
    V = DenseMatrix(rng.integers(0, q, (spec.k, spec.d)), dom)
    B = F.matmul(U.data, V.data)
    shift = rng.integers(1, q, (spec.n, spec.d)).astype(np.int16)
    A = np.where(mask, F.vadd(B, shift), B)
    return DenseMatrix(A, dom), PlantedTruth(U, V, int(mask.sum()))


def uniform_real_instance(n, d, low, high, seed) -> DenseMatrix:
    """Uniform random integer matrix (the lp-solver test diet)."""
    rng = np.random.default_rng(seed)
    return DenseMatrix(rng.integers(int(low), int(high) + 1, (n, d)).astype(float), REAL)


@dataclass
class RunReport:
    instance: str
    algorithm: str
    params: dict
    cost: float
    reference: float | None
    ratio: float | None
    seed: int
    wall_time: float

    def json_line(self):
        # wall_time deliberately excluded: report streams must be
        # byte-identical across reruns with the same seeds.
        obj = {
            "instance": self.instance,
            "algorithm": self.algorithm,
            "params": self.params,
            "cost": self.cost,
            "seed": self.seed,
        }
        if self.reference is not None:
            obj["reference"] = self.reference
        if self.ratio is not None:
            obj["ratio"] = self.ratio
        return json.dumps(obj, sort_keys=True)


# --------------------------------------------------------------------------
# algorithm dispatch (shared by bench and the CLI)


def run_algorithm(alg: str, A: DenseMatrix, params: dict, seed: int) -> FactorPair:
    k = int(params.get("k", 1))
    if alg == "binary-simple":
        ip = semiring_table(params.get("semiring", "f2"), k)
        pair = binary.simple_ptas(
            A,
            k,
            ip,
            float(params.get("eps", 0.5)),
            int(params.get("size_budget", 10**6)),
            int(params.get("family_budget", 10**6)),
            t=int(params["t"]) if "t" in params else None,
        )
        cost = generalized_l0_cost(A, pair.U, pair.V, ip)
        return FactorPair(pair.U, pair.V, float(cost))
    if alg == "binary-sample":
        ip = semiring_table(params.get("semiring", "f2"), k)
        pair = binary.sample_ptas(
            A,
            k,
            ip,
            float(params.get("eps", 0.5)),
            int(params.get("t", 16)),
            int(params.get("restarts", 100)),
            seed,
        )
        cost = generalized_l0_cost(A, pair.U, pair.V, ip)
        return FactorPair(pair.U, pair.V, float(cost))
    if alg == "fq-sketch":
        pair = l0fq.fq_rank_k_approx(
            A,
            k,
            eps=float(params.get("eps", 0.25)),
            budget=int(params.get("budget", 1 << 12)),
            K=int(params["bank"]) if "bank" in params else None,
            buckets=int(params["buckets"]) if "buckets" in params else None,
            gamma=float(params["gamma"]) if "gamma" in params else None,
            seed=seed,
        )
        cost = lp_cost(A, _fq_product(pair, A.domain.q), 0, tol=0)
        return FactorPair(pair.U, pair.V, float(cost))
    if alg == "lp-ptas":
        cfg = lpsolve.LpConfig(
            p=float(params.get("p", 1.0)),
            eps=float(params.get("eps", 0.5)),
            m=int(params.get("sketch_rows", 6)),
            grid_step=float(params.get("grid_step", 1.0)),
            grid_bound=float(params.get("grid_bound", 2.0)),
            budget=int(params.get("budget", 1 << 20)),
            seed=seed,
        )
        pair = lpsolve.lp_rank_k_ptas(A, k, cfg)
        prod = DenseMatrix(pair.U.astype_float() @ pair.V.astype_float(), REAL)
        cost = lp_cost(A, prod, cfg.p)
        return FactorPair(pair.U, pair.V, float(cost))
    raise ParameterError(f"unknown algorithm {alg!r}")


def _fq_product(pair: FactorPair, q) -> DenseMatrix:
    F = gf.field(q)
    return DenseMatrix(F.matmul(pair.U.data, pair.V.data), pair.U.domain)


def run_oracle(alg: str, A: DenseMatrix, params: dict) -> oracle.OracleResult:
    k = int(params.get("k", 1))
    if alg == "binary":
        ip = semiring_table(params.get("semiring", "f2"), k)
        return oracle.brute_force_binary(A, k, ip)
    if alg == "fq":
        return oracle.brute_force_fq(A, k)
    if alg == "l1grid":
        step = float(params.get("grid_step", 1.0))
        bound = float(params.get("grid_bound", 2.0))
        count = int(2 * bound / step + 1e-9) + 1
        grid = -bound + step * np.arange(count)
        return oracle.brute_force_l1_grid(A, k, grid)
    raise ParameterError(f"unknown oracle {alg!r}")


# --------------------------------------------------------------------------
# bench


class ConfigError(ValueError):
    pass


def _parse_config(path):
    cp = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    try:
        with open(path) as fh:
            cp.read_file(fh)
    except configparser.Error as exc:
        line = getattr(exc, "lineno", "?")
        raise ConfigError(f"{path}:{line}: {exc.message}") from exc
    return cp


def _section_params(cp, section):
    return {key: cp.get(section, key) for key in cp.options(section)}


def bench(config_path, jsonl_path=None, csv_path=None, workers=1):
    """Run every (instance, algorithm) pair from a config; write JSON-lines
    reports and a CSV summary.  Returns the process exit code: nonzero iff
    a declared threshold fails."""
    cp = _parse_config(config_path)
    base = cp.getint("bench", "seed", fallback=0) if cp.has_section("bench") else 0
    env_seed = os.environ.get("LOWRANK_SEED")
    if env_seed is not None:
        base = int(env_seed)
    jsonl_path = jsonl_path or (
        cp.get("bench", "jsonl", fallback="runs.jsonl") if cp.has_section("bench") else "runs.jsonl"
    )
    csv_path = csv_path or (
        cp.get("bench", "csv", fallback="runs.csv") if cp.has_section("bench") else "runs.csv"
    )

    instances = []  # (id, DenseMatrix, planted cost or None)
    for section in cp.sections():
        if not section.startswith("instance:"):
            continue
        name = section.split(":", 1)[1]
        p = _section_params(cp, section)
        count = int(p.get("count", 1))
        for idx in range(count):
            iid = name if count == 1 else f"{name}[{idx}]"
            seed = derive_seed(base, "instance", iid)
            kind = p.get("kind", "planted")
            if kind == "planted":
                spec = PlantedSpec(
                    n=int(p["n"]),
                    d=int(p["d"]),
                    k=int(p.get("k", 1)),
                    domain=p.get("domain", "binary"),
                    q=int(p["q"]) if "q" in p else None,
                    semiring=p.get("semiring", "f2"),
                    noise_rate=float(p.get("noise", 0.0)),
                    seed=seed,
                )
                A, truth = generate(spec)
                instances.append((iid, A, float(truth.planted_cost)))
            elif kind == "uniform":
                A = uniform_real_instance(
                    int(p["n"]), int(p["d"]), p.get("low", -2), p.get("high", 2), seed
                )
                instances.append((iid, A, None))
            else:
                raise ConfigError(f"unknown instance kind {kind!r}")

    jobs = []
    checks = []
    for section in cp.sections():
        if not section.startswith("algorithm:"):
            continue
        aid = section.split(":", 1)[1]
        p = _section_params(cp, section)
        alg = p.get("alg")
        if alg is None:
            raise ConfigError(f"[{section}] is missing the 'alg' key")
        prefix = p.get("instances", "")
        threshold = float(p["threshold"]) if "threshold" in p else None
        min_rate = float(p["min_pass_rate"]) if "min_pass_rate" in p else None
        if threshold is not None:
            checks.append((aid, threshold, min_rate))
        for iid, A, planted in instances:
            if prefix and not iid.startswith(prefix):
                continue
            jobs.append((iid, aid, alg, p, A, planted))

    def run_one(job):
        iid, aid, alg, p, A, planted = job
        seed = derive_seed(base, iid, aid)
        started = time.perf_counter()
        pair = run_algorithm(alg, A, p, seed)
        elapsed = time.perf_counter() - started
        reference = planted
        refmode = p.get("reference", "planted" if planted is not None else "none")
        if refmode == "oracle":
            reference = float(run_oracle(p.get("oracle", "binary"), A, p).opt_cost)
        elif refmode == "none":
            reference = None
        cost = _recompute_cost(alg, A, pair, p)
        ratio = cost / reference if reference else None
        return RunReport(
            instance=iid,
            algorithm=aid,
            params={k2: v for k2, v in sorted(p.items())},
            cost=cost,
            reference=reference,
            ratio=ratio,
            seed=seed,
            wall_time=elapsed,
        )

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            reports = list(pool.map(run_one, jobs))
    else:
        reports = [run_one(j) for j in jobs]
    reports.sort(key=lambda r: (r.instance, r.algorithm))

    with open(jsonl_path, "w") as fh:
        for rep in reports:
            fh.write(rep.json_line() + "\n")

    failed = _write_summary(csv_path, reports, checks)
    return 1 if failed else 0


def _recompute_cost(alg, A, pair, params):
    """Reported costs are always recomputed from (A, U, V)."""
    if alg.startswith("binary"):
        ip = semiring_table(params.get("semiring", "f2"), pair.k)
        return float(generalized_l0_cost(A, pair.U, pair.V, ip))
    if alg == "fq-sketch":
        return float(lp_cost(A, _fq_product(pair, A.domain.q), 0, tol=0))
    prod = DenseMatrix(pair.U.astype_float() @ pair.V.astype_float(), REAL)
    return float(lp_cost(A, prod, float(params.get("p", 1.0))))


def _write_summary(csv_path, reports, checks):
    by_alg: dict[str, list[RunReport]] = {}
    for rep in reports:
        by_alg.setdefault(rep.algorithm, []).append(rep)
    failed = False
    rows = []
    for aid in sorted(by_alg):
        batch = by_alg[aid]
        ratios = [r.ratio for r in batch if r.ratio is not None]
        zero_hits = sum(1 for r in batch if r.ratio is None and r.reference is not None and r.cost == 0)
        declared = [c for c in checks if c[0] == aid]
        status = "ok"
        pass_rate = ""
        if declared:
            _, threshold, min_rate = declared[0]
            passes = zero_hits + sum(1 for x in ratios if x <= threshold)
            judged = zero_hits + len(ratios)
            rate = passes / judged if judged else 1.0
            pass_rate = f"{rate:.3f}"
            ok = rate >= min_rate if min_rate is not None else passes == judged
            status = "pass" if ok else "FAIL"
            failed = failed or not ok
        rows.append(
            {
                "algorithm": aid,
                "runs": len(batch),
                "mean_ratio": f"{np.mean(ratios):.6f}" if ratios else "",
                "max_ratio": f"{np.max(ratios):.6f}" if ratios else "",
                "pass_rate": pass_rate,
                "status": status,
                "mean_wall_time": f"{np.mean([r.wall_time for r in batch]):.6f}",
            }
        )
    with open(csv_path, "w", newline="") as fh:
        writer = csv.DictWriter(
            fh,
            fieldnames=[
                "algorithm",
                "runs",
                "mean_ratio",
                "max_ratio",
                "pass_rate",
                "status",
                "mean_wall_time",
            ],
        )
        writer.writeheader()
        writer.writerows(rows)
    return failed
