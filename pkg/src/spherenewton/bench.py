"""Batch experiments over random AVVF instances.

For every dimension, instances use seeds ``base_seed + i`` and each instance
is paired with one start point from an independent seed stream; all methods
start from the same point. Statistics are aggregated per (method, dimension).
"""
import csv
import json
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import List, NamedTuple, Optional

from .errors import DegenerateMatrix
from .field import AvvfField
from .instances import generate_instance, random_start, start_seed_for
from .solver import SolverConfig, solve

CSV_HEADER = ["method", "dimension", "solved_percent", "avg_iters_solved", "avg_time_s", "n_runs"]


@dataclass
class BenchPlan:
    dimensions: List[int] = field(default_factory=lambda: [50, 100, 200])
    instances_per_dim: int = 50
    M_values: List[int] = field(default_factory=lambda: [0, 1, 5])
    include_pure_newton: bool = False
    base_seed: int = 0
    repeats_per_timing: int = 3
    density: float = 0.003
    sv_rescale: str = "scale"
    start_at_planted: bool = False
    tol_residual: float = 1e-6
    max_iters: int = 100
    sigma: float = 1e-4
    beta: float = 0.5
    max_backtracks: int = 60

    def __post_init__(self):
        if not self.dimensions or any(int(d) < 2 for d in self.dimensions):
            raise ValueError(f"all dimensions must be >= 2, got {self.dimensions}")
        if self.instances_per_dim < 1:
            raise ValueError("instances_per_dim must be >= 1")
        if not self.M_values and not self.include_pure_newton:
            raise ValueError("plan has no methods: give M values or include pure Newton")
        if any(m < 0 for m in self.M_values):
            raise ValueError("M values must be >= 0")
        if self.repeats_per_timing < 1:
            raise ValueError("repeats_per_timing must be >= 1")
        if not 0.0 < self.density <= 1.0:
            raise ValueError("density must lie in (0, 1]")

    def methods(self):
        """(label, method, M) in report order."""
        out = [(f"GNM(M={m})", "gnm", m) for m in sorted(set(self.M_values))]
        if self.include_pure_newton:
            out.append(("NM", "nm", 0))
        return out

    def solver_config(self, M):
        return SolverConfig(tol_residual=self.tol_residual, max_iters=self.max_iters,
                            sigma=self.sigma, beta=self.beta, M=M,
                            max_backtracks=self.max_backtracks)


@dataclass
class RunResult:
    method: str
    dim: int
    instance_seed: int
    start_seed: int
    status: str
    iters: int
    res_final: float
    time_s: Optional[float]
    trace: object = field(default=None, repr=False)

    @property
    def solved(self):
        return self.status == "Singularity"

    def to_json(self):
        return json.dumps({"method": self.method, "dim": self.dim,
                           "instance_seed": self.instance_seed, "start_seed": self.start_seed,
                           "status": self.status, "iters": self.iters,
                           "res_final": self.res_final, "time_s": self.time_s})


@dataclass
class BenchRow:
    method: str
    dimension: int
    solved_percent: float
    avg_iters: float
    avg_time_s: Optional[float]
    n_runs: int


class BatchResult(NamedTuple):
    rows: List[BenchRow]
    runs: List[RunResult]


def _run_instance(plan, dim, index, timing, keep_traces):
    seed = plan.base_seed + index
    sseed = start_seed_for(seed)
    try:
        inst = generate_instance(dim, plan.density, seed, sv_rescale=plan.sv_rescale)
    except DegenerateMatrix:
        return [RunResult(label, dim, seed, sseed, "DegenerateMatrix", 0, None, None)
                for label, _, _ in plan.methods()]
    fld = AvvfField(inst)
    p0 = inst.planted_solution if plan.start_at_planted else random_start(dim, sseed)
    results = []
    for label, method, M in plan.methods():
        cfg = plan.solver_config(M)
        repeats = plan.repeats_per_timing if timing else 1
        elapsed = []
        for _ in range(repeats):
            t0 = time.perf_counter()
            trace = solve(fld, p0, method, cfg)
            elapsed.append(time.perf_counter() - t0)
        results.append(RunResult(label, dim, seed, sseed, trace.status.value, trace.iterations,
                                 trace.final_residual,
                                 sum(elapsed) / len(elapsed) if timing else None,
                                 trace if keep_traces else None))
    return results


def execute_plan(plan, threads=1, timing=True, keep_traces=False):
    """Run every (dimension, instance, method) cell; results in report order."""
    jobs = [(d, i) for d in sorted(set(int(d) for d in plan.dimensions))
            for i in range(plan.instances_per_dim)]
    if threads <= 1:
        batches = [_run_instance(plan, d, i, timing, keep_traces) for d, i in jobs]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            batches = list(pool.map(lambda job: _run_instance(plan, *job, timing, keep_traces), jobs))
    order = {label: rank for rank, (label, _, _) in enumerate(plan.methods())}
    runs = [r for batch in batches for r in batch]
    runs.sort(key=lambda r: (order[r.method], r.dim, r.instance_seed))
    return runs


def aggregate(runs, method_order=None):
    """Table rows: success rate plus iteration/time means over solved runs."""
    cells = {}
    for r in runs:
        cells.setdefault((r.method, r.dim), []).append(r)
    if method_order is None:
        method_order = list(dict.fromkeys(r.method for r in runs))
    rank = {m: i for i, m in enumerate(method_order)}
    rows = []
    for (method, dim) in sorted(cells, key=lambda key: (rank[key[0]], key[1])):
        cell = cells[(method, dim)]
        solved = [r for r in cell if r.solved]
        times = [r.time_s for r in solved if r.time_s is not None]
        rows.append(BenchRow(
            method=method, dimension=dim,
            solved_percent=100.0 * len(solved) / len(cell),
            avg_iters=sum(r.iters for r in solved) / len(solved) if solved else math.nan,
            avg_time_s=(sum(times) / len(times) if times else math.nan)
            if any(r.time_s is not None for r in cell) else None,
            n_runs=len(cell),
        ))
    return rows


def run_batch(plan, threads=1, timing=True, keep_traces=False):
    runs = execute_plan(plan, threads=threads, timing=timing, keep_traces=keep_traces)
    return BatchResult(aggregate(runs, [label for label, _, _ in plan.methods()]), runs)


def _g6(x):
    return f"{x:.6g}"


def write_report(rows, path, timing=True):
    """CSV report; with ``timing=False`` the avg_time_s column is omitted."""
    if not rows:
        raise ValueError("no rows to report")
    header = CSV_HEADER if timing else [h for h in CSV_HEADER if h != "avg_time_s"]
    try:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(header)
            for r in rows:
                row = [r.method, r.dimension, _g6(r.solved_percent), _g6(r.avg_iters)]
                if timing:
                    row.append(_g6(r.avg_time_s if r.avg_time_s is not None else math.nan))
                row.append(r.n_runs)
                w.writerow(row)
    except OSError as exc:
        raise OSError(f"cannot write report to {path}: {exc}") from exc


def read_report(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def write_runs(runs, path):
    try:
        with open(path, "w") as fh:
            for r in runs:
                fh.write(r.to_json() + "\n")
    except OSError as exc:
        raise OSError(f"cannot write runs to {path}: {exc}") from exc


def read_runs(path):
    out = []
    with open(path) as fh:
        for line in fh:
            if line.strip():
                d = json.loads(line)
                out.append(RunResult(d["method"], d["dim"], d["instance_seed"], d["start_seed"],
                                     d["status"], d["iters"], d["res_final"], d["time_s"]))
    return out
