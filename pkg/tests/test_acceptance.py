"""End-to-end acceptance checks, one test per criterion.

Each test logs a single PASS/FAIL line (shown in the terminal summary) before
asserting, so a failing run still reports every verdict.
"""
import time

import numpy as np
import pytest

import acceptance_log
import oracles
from spherenewton import cli, geometry
from spherenewton.bench import BenchPlan, execute_plan
from spherenewton.field import AvvfField, avvf_clarke_element, avvf_eval
from spherenewton.instances import (dumps_instance, generate_instance, instances_equal,
                                    loads_instance)
from spherenewton.solver import (DirectionKind, SolverConfig, merit, merit_gradient,
                                 newton_direction, read_trace_jsonl, verify_certificates)

from conftest import make_instance, random_point, random_tangent

N100_INSTANCES = 50


@pytest.fixture(scope="module")
def n100_runs():
    """GNM(M=0,1,5) and NM on 50 instances at n = 100, traces kept, single thread."""
    plan = BenchPlan(dimensions=[100], instances_per_dim=N100_INSTANCES, M_values=[0, 1, 5],
                     include_pure_newton=True, base_seed=0, repeats_per_timing=1)
    t0 = time.perf_counter()
    runs = execute_plan(plan, threads=1, timing=False, keep_traces=True)
    return runs, time.perf_counter() - t0


def test_criterion_1_geometry_suite():
    rng = np.random.default_rng(1)
    t0 = time.perf_counter()
    worst = {"unit": 0.0, "tangent": 0.0, "roundtrip": 0.0, "isometry": 0.0, "expansion": -np.inf}
    for n in (2, 3, 10, 100):
        for _ in range(1000):
            p = random_point(rng, n)
            q = random_point(rng, n)
            v = random_tangent(rng, p, rng.uniform(0.0, 3.0))
            u = random_tangent(rng, p, rng.uniform(0.0, 3.0))
            w = random_tangent(rng, p, rng.uniform(0.1, 5.0))
            e = geometry.exp(p, v)
            lq = geometry.log(p, q)
            worst["unit"] = max(worst["unit"], abs(np.linalg.norm(e) - 1.0))
            worst["tangent"] = max(worst["tangent"], abs(p @ lq), abs(p @ v))
            worst["roundtrip"] = max(worst["roundtrip"],
                                     np.linalg.norm(geometry.log(p, e) - v),
                                     np.linalg.norm(geometry.exp(p, lq) - q))
            t = geometry.parallel_transport(p, q, w)
            worst["isometry"] = max(worst["isometry"], abs(np.linalg.norm(t) - np.linalg.norm(w)),
                                    abs(q @ t))
            gap = geometry.distance(geometry.exp(p, u), e) - np.linalg.norm(u - v)
            worst["expansion"] = max(worst["expansion"], gap)
    elapsed = time.perf_counter() - t0
    ok = (worst["unit"] <= 1e-12 and worst["tangent"] <= 1e-12 and worst["roundtrip"] <= 1e-9
          and worst["isometry"] <= 1e-12 and worst["expansion"] <= 1e-10 and elapsed < 5.0)
    detail = ", ".join(f"{k}={v:.2e}" for k, v in worst.items()) + f", {elapsed:.2f}s"
    assert acceptance_log.record(1, "geometry suite", ok, detail), detail


def test_criterion_2_oracle_equivalence_n2(tiny_instance):
    A, b = tiny_instance.dense_A(), tiny_instance.b
    fld = AvvfField(tiny_instance)
    cfg = SolverConfig()
    worst = 0.0
    # (j + 1/2) * 18 degrees never lands on a coordinate axis
    for j in range(20):
        theta = (j + 0.5) * 2.0 * np.pi / 20
        p = np.array([np.cos(theta), np.sin(theta)])
        X = avvf_eval(tiny_instance, p)
        V = avvf_clarke_element(tiny_instance, p)
        d = newton_direction(fld, p, cfg, allow_fallback=False)
        ref_d = oracles.newton_direction_circle(A, b, p)
        worst = max(worst,
                    np.max(np.abs(X - oracles.avvf_value(A, b, p))),
                    np.max(np.abs(V - oracles.avvf_clarke(A, b, p))),
                    np.max(np.abs(merit_gradient(fld, p) - oracles.merit_gradient(A, b, p))),
                    np.max(np.abs(d.vector - ref_d)) / max(1.0, np.linalg.norm(ref_d)))
    ok = worst <= 1e-12
    assert acceptance_log.record(2, "n=2 oracle equivalence", ok, f"max gap {worst:.2e}"), worst


def test_criterion_3_descent(n100_runs):
    runs, _ = n100_runs
    checked, violations = 0, []
    for r in runs:
        if not r.method.startswith("GNM") or r.trace is None:
            continue
        for rec in r.trace.records:
            if rec.alpha is None:
                continue
            checked += 1
            if not rec.slope < 0.0:
                violations.append((r.instance_seed, rec.k, "slope", rec.slope))
            if rec.kind == DirectionKind.NEWTON.value:
                x2 = rec.res ** 2
                if abs(rec.slope + x2) > 1e-6 * (1.0 + x2):
                    violations.append((r.instance_seed, rec.k, "newton slope", rec.slope, x2))
    ok = checked > 0 and not violations
    detail = f"{checked} steps, {len(violations)} violations"
    assert acceptance_log.record(3, "descent property", ok, detail), violations[:5]


def test_criterion_4_certificate_replay(n100_runs, tmp_path):
    runs, _ = n100_runs
    steps, problems = 0, []
    for i, r in enumerate(runs):
        if r.trace is None:
            continue
        path = tmp_path / f"trace{i}.jsonl"
        r.trace.write_jsonl(path)
        records, terminal = read_trace_jsonl(path)
        steps += sum(rec.alpha is not None for rec in records)
        found = verify_certificates(records, terminal["sigma"], terminal["M"],
                                    nonmonotone=r.method.startswith("GNM"))
        problems += [(r.method, r.instance_seed, msg) for msg in found]
    ok = steps > 0 and not problems
    detail = f"{steps} replayed steps, {len(problems)} violations"
    assert acceptance_log.record(4, "line-search certificate replay", ok, detail), problems[:5]


def test_criterion_5_generator_soundness():
    violations = []
    densities = (0.003, 0.01, 0.05)
    count = 0
    for n, k in ((50, 67), (100, 67), (200, 66)):
        for i in range(k):
            inst = generate_instance(n, densities[i % 3], 10_000 + 1000 * n + i)
            A = inst.dense_A()
            sigma = np.linalg.svd(A, compute_uv=False)[-1]
            res = np.linalg.norm(oracles.avvf_value(A, inst.b, inst.planted_solution))
            back = loads_instance(dumps_instance(inst))
            exact = (instances_equal(inst, back) and np.array_equal(back.dense_A(), A)
                     and np.array_equal(back.b, inst.b)
                     and np.array_equal(back.planted_solution, inst.planted_solution))
            if not (sigma > 3.0 and res <= 1e-10 and exact):
                violations.append((n, i, sigma, res, exact))
            count += 1
    ok = count == 200 and not violations
    detail = f"{count} instances, {len(violations)} violations"
    assert acceptance_log.record(5, "generator soundness", ok, detail), violations[:5]


def test_criterion_6_robustness_trend():
    plan = BenchPlan(dimensions=[100], instances_per_dim=N100_INSTANCES, M_values=[0],
                     include_pure_newton=True, base_seed=0, repeats_per_timing=1)
    t0 = time.perf_counter()
    runs = execute_plan(plan, threads=1, timing=False)
    elapsed = time.perf_counter() - t0
    rate = {}
    for method in ("GNM(M=0)", "NM"):
        cell = [r for r in runs if r.method == method]
        rate[method] = 100.0 * sum(r.solved for r in cell) / len(cell)
    ok = rate["GNM(M=0)"] >= 90.0 and rate["GNM(M=0)"] >= rate["NM"] and elapsed < 120.0
    detail = f"GNM(M=0) {rate['GNM(M=0)']:.0f}%, NM {rate['NM']:.0f}%, {elapsed:.1f}s"
    assert acceptance_log.record(6, "robustness trend at n=100", ok, detail), detail


def test_criterion_7_local_fast_convergence(n100_runs):
    runs, _ = n100_runs
    eligible, good, bad = 0, 0, []
    for r in runs:
        if not (r.method.startswith("GNM") and r.solved) or r.trace is None:
            continue
        recs = r.trace.records
        if len(recs) < 2:
            continue  # solved at the start point: no step to judge
        eligible += 1
        full_step = recs[-2].alpha == 1.0
        prev, last = recs[-2].res, recs[-1].res
        # required even when prev >= 1e-3, stricter than conditioning on a small prev
        fast = last / prev <= 0.1
        if full_step and fast:
            good += 1
        else:
            bad.append((r.method, r.instance_seed, recs[-2].alpha, prev, last))
    share = good / eligible if eligible else 0.0
    ok = eligible > 0 and share >= 0.8
    detail = f"{good}/{eligible} solved runs end with alpha=1 and drop <= 0.1"
    assert acceptance_log.record(7, "local fast convergence", ok, detail), bad[:5]


def test_criterion_8_determinism(tmp_path, capsys):
    common = ["bench", "--dims", "50,100", "--instances", "10", "--M", "0,1,5", "--include-nm",
              "--no-timing", "--seed", "3"]
    outputs = []
    for tag, threads in (("a", 1), ("b", 1), ("c", 8)):
        csv = tmp_path / f"{tag}.csv"
        code = cli.main(common + ["--threads", str(threads), "--out-csv", str(csv),
                                  "--out-jsonl", str(tmp_path / f"{tag}.jsonl")])
        assert code == 0
        outputs.append(csv.read_bytes())
    capsys.readouterr()
    ok = outputs[0] == outputs[1] == outputs[2] and b"avg_time_s" not in outputs[0]
    detail = "repeat and --threads 1 vs 8 CSVs byte-identical" if ok else "CSVs differ"
    assert acceptance_log.record(8, "bench determinism", ok, detail), detail


def test_criterion_9_finite_difference_gradient():
    rng = np.random.default_rng(9)
    h = 1e-6
    passed, total, worst = 0, 100, 0.0
    for i in range(total):
        n = (10, 50, 100)[i % 3]
        inst = generate_instance(n, 0.05, 20_000 + i)
        fld = AvvfField(inst)
        while True:
            p = random_point(rng, n)
            if np.all(np.abs(p) > 1e-3):
                break
        v = random_tangent(rng, p)
        g = float(merit_gradient(fld, p) @ v)
        fd = oracles.central_difference(lambda t: merit(fld, geometry.exp(p, t * v)), h)
        rel = abs(fd - g) / max(abs(g), np.finfo(float).tiny)
        worst = max(worst, rel)
        passed += rel <= 1e-4
    ok = passed >= 99
    detail = f"{passed}/{total} within 1e-4 relative, worst {worst:.2e}"
    assert acceptance_log.record(9, "finite-difference gradient check", ok, detail), detail
