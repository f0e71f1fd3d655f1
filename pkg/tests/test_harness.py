import json
import subprocess
import sys

import numpy as np
import pytest

from lowrank import gf
from lowrank.core import FactorPair, InnerProductTable, generalized_product, read_matrix_text
from lowrank.harness import PlantedSpec, bench, generate, run_algorithm, run_oracle, uniform_real_instance


def test_generate_zero_noise_is_exact_rank():
    spec = PlantedSpec(n=6, d=5, k=2, semiring="f2", noise_rate=0.0, seed=1)
    A, truth = generate(spec)
    prod = generalized_product(truth.U, truth.V, InnerProductTable.f2(2))
    assert np.array_equal(A.data, prod.data.astype(np.uint8))
    assert truth.planted_cost == 0


def test_generate_full_noise_is_complement():
    spec = PlantedSpec(n=4, d=4, k=1, semiring="f2", noise_rate=1.0, seed=2)
    A, truth = generate(spec)
    prod = generalized_product(truth.U, truth.V, InnerProductTable.f2(1))
    assert np.array_equal(A.data, 1 - prod.data.astype(np.uint8))
    assert truth.planted_cost == 16


def test_generate_flip_fraction_concentrates():
    spec = PlantedSpec(n=32, d=32, k=2, semiring="bool", noise_rate=0.1, seed=3)
    _, truth = generate(spec)
    assert abs(truth.flips / (32 * 32) - 0.1) <= 0.05


def test_generate_deterministic():
    spec = PlantedSpec(n=8, d=8, k=1, noise_rate=0.3, seed=7)
    A1, t1 = generate(spec)
    A2, t2 = generate(spec)
    assert np.array_equal(A1.data, A2.data) and t1.flips == t2.flips


def test_generate_fq_flips_always_change():
    spec = PlantedSpec(n=10, d=10, k=1, domain="fq", q=5, noise_rate=0.5, seed=4)
    A, truth = generate(spec)
    F = gf.field(5)
    prod = F.matmul(truth.U.data, truth.V.data)
    assert int((A.data != prod).sum()) == truth.flips


def test_run_algorithm_costs_are_recomputed():
    spec = PlantedSpec(n=6, d=6, k=1, noise_rate=0.2, seed=5)
    A, _ = generate(spec)
    pair = run_algorithm("binary-sample", A, {"k": 1, "t": 4, "restarts": 8}, seed=0)
    from lowrank.core import generalized_l0_cost

    assert pair.cost == generalized_l0_cost(A, pair.U, pair.V, InnerProductTable.f2(1))


BENCH_CONFIG = """
[bench]
seed = 11
jsonl = {jsonl}
csv = {csv}

[instance:tiny]
kind = planted
domain = binary
semiring = f2
n = 5
d = 5
k = 1
noise = 0.15
count = 3

[algorithm:sample]
alg = binary-sample
k = 1
semiring = f2
t = 5
restarts = 20
reference = oracle
oracle = binary
threshold = 1.5
min_pass_rate = 0.6
"""


def _write_config(tmp_path, name="bench.ini"):
    jsonl = tmp_path / "runs.jsonl"
    csvf = tmp_path / "runs.csv"
    cfg = tmp_path / name
    cfg.write_text(BENCH_CONFIG.format(jsonl=jsonl, csv=csvf))
    return cfg, jsonl, csvf


def test_bench_reports_and_determinism(tmp_path):
    cfg, jsonl, csvf = _write_config(tmp_path)
    code = bench(str(cfg))
    assert code == 0
    first = jsonl.read_bytes()
    lines = [json.loads(line) for line in first.decode().splitlines()]
    assert len(lines) == 3
    for obj in lines:
        assert set(obj) >= {"instance", "algorithm", "cost", "seed"}
        if "ratio" in obj:
            assert obj["ratio"] == obj["cost"] / obj["reference"]
        assert "wall_time" not in obj  # timing lives in the CSV only
    assert "algorithm" in csvf.read_text().splitlines()[0]
    # byte-identical rerun
    bench(str(cfg))
    assert jsonl.read_bytes() == first


def test_bench_empty_instance_list(tmp_path):
    cfg = tmp_path / "empty.ini"
    jsonl = tmp_path / "out.jsonl"
    cfg.write_text(f"[bench]\nseed = 1\njsonl = {jsonl}\ncsv = {tmp_path/'out.csv'}\n")
    assert bench(str(cfg)) == 0
    assert jsonl.read_text() == ""


def test_bench_oracle_only_ratio_one(tmp_path):
    jsonl = tmp_path / "o.jsonl"
    cfg = tmp_path / "o.ini"
    cfg.write_text(
        f"""
[bench]
seed = 3
jsonl = {jsonl}
csv = {tmp_path/'o.csv'}

[instance:one]
kind = planted
n = 4
d = 4
k = 1
noise = 0.2

[algorithm:exact]
alg = binary-simple
k = 1
semiring = f2
reference = oracle
oracle = binary
threshold = 1.0
"""
    )
    assert bench(str(cfg)) == 0
    (line,) = jsonl.read_text().splitlines()
    obj = json.loads(line)
    assert obj.get("ratio", 1.0) == 1.0


def test_bench_env_seed_override(tmp_path, monkeypatch):
    cfg, jsonl, _ = _write_config(tmp_path)
    bench(str(cfg))
    base = jsonl.read_bytes()
    monkeypatch.setenv("LOWRANK_SEED", "999")
    bench(str(cfg))
    assert jsonl.read_bytes() != base


# ------------------------------------------------------------------- CLI


def _cli(*args):
    return subprocess.run(
        [sys.executable, "-m", "lowrank.cli", *args], capture_output=True, text=True
    )


def test_cli_gen_solve_oracle_roundtrip(tmp_path):
    mat = tmp_path / "a.mat"
    out = _cli(
        "gen", "--kind", "planted", "--n", "4", "--d", "4", "--k", "1",
        "--noise", "0.2", "--seed", "5", "--out", str(mat),
    )
    assert out.returncode == 0
    A = read_matrix_text(mat.read_text())
    assert A.shape == (4, 4)

    solved = _cli("solve", str(mat), "--alg", "binary-simple", "--k", "1", "--semiring", "f2")
    assert solved.returncode == 0
    pair = FactorPair.from_json(solved.stdout)
    reference = _cli("oracle", str(mat), "--alg", "binary", "--k", "1", "--semiring", "f2")
    oracle_pair = FactorPair.from_json(reference.stdout)
    assert pair.cost == oracle_pair.cost  # simple PTAS is exact at this scale


def test_cli_solve_refusal_exit_code(tmp_path):
    mat = tmp_path / "big.mat"
    _cli("gen", "--n", "8", "--d", "16", "--k", "2", "--noise", "0.1", "--out", str(mat))
    res = _cli(
        "solve", str(mat), "--alg", "binary-simple", "--k", "2", "--semiring", "f2",
        "--family-budget", "10",
    )
    assert res.returncode == 2
    assert "required enumeration count" in res.stderr


def test_cli_sketch_test_table():
    res = _cli("sketch-test", "--p", "1.0", "--m", "200", "--trials", "60", "--eps", "0.25")
    assert res.returncode == 0
    assert "pass" in res.stdout


def test_cli_bench(tmp_path):
    cfg, jsonl, _ = _write_config(tmp_path)
    res = _cli("bench", str(cfg))
    assert res.returncode == 0
    assert jsonl.exists()


def test_bench_malformed_config_reports_line(tmp_path):
    import pytest
    from lowrank.harness import ConfigError

    bad = tmp_path / "bad.ini"
    bad.write_text("[bench\nseed = 1\n")  # unclosed section header
    with pytest.raises(ConfigError) as exc:
        bench(str(bad))
    assert ":1:" in str(exc.value)  # carries the line number


def test_uniform_instance_bounds():
    A = uniform_real_instance(4, 5, -2, 2, seed=0)
    assert A.data.min() >= -2 and A.data.max() <= 2
