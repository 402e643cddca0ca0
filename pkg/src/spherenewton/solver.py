"""Newton (NM) and globalized Newton (GNM) iterations for singularities of
nonsmooth vector fields on the sphere.

GNM solves the Newton equation ``X(p) + V v = 0`` on the tangent space,
falls back to ``-grad phi`` when that system is not acceptably solvable, and
accepts steps with a nonmonotone Armijo rule against the largest of the last
``m_k + 1`` merit values, ``m_k = min(m_{k-1} + 1, M)``.
"""
import enum
import json
import math
import time
from dataclasses import asdict, dataclass, field
from typing import List, NamedTuple, Optional

import numpy as np
import scipy.linalg as sla

from . import geometry
from .errors import LineSearchStall, SingularClarkeElement, ZeroDirection

ZERO_DIRECTION_NORM = 1e-15


class DirectionKind(str, enum.Enum):
    NEWTON = "Newton"
    GRADIENT = "GradientFallback"


class Status(str, enum.Enum):
    SINGULARITY = "Singularity"
    STATIONARY_POINT = "StationaryPoint"
    MAX_ITERS = "MaxIters"
    LINE_SEARCH_STALL = "LineSearchStall"
    SINGULAR_CLARKE = "SingularClarkeElement"


@dataclass(frozen=True)
class SolverConfig:
    tol_residual: float = 1e-6
    max_iters: int = 100
    sigma: float = 1e-4
    beta: float = 0.5
    M: int = 0
    max_backtracks: int = 60
    solve_residual_factor: float = 1e-8
    condition_cap: float = 1e14

    def __post_init__(self):
        if not 0.0 < self.sigma < 0.5:
            raise ValueError(f"sigma must lie in (0, 1/2), got {self.sigma}")
        if not 0.0 < self.beta < 1.0:
            raise ValueError(f"beta must lie in (0, 1), got {self.beta}")
        if self.M < 0:
            raise ValueError(f"M must be >= 0, got {self.M}")
        if not self.tol_residual > 0.0:
            raise ValueError(f"tol_residual must be positive, got {self.tol_residual}")
        if self.max_iters < 0 or self.max_backtracks < 0:
            raise ValueError("max_iters and max_backtracks must be >= 0")


@dataclass(frozen=True)
class Direction:
    vector: np.ndarray
    kind: DirectionKind
    slope: float


class LineSearchResult(NamedTuple):
    alpha: float
    backtracks: int
    point: np.ndarray
    merit: float


@dataclass
class StepRecord:
    """State at p_k and, if a step was taken from it, that step."""
    k: int
    res: float
    merit: float
    m_k: int
    kind: Optional[str] = None
    slope: Optional[float] = None
    alpha: Optional[float] = None
    backtracks: Optional[int] = None


@dataclass
class SolveTrace:
    method: str
    config: SolverConfig
    records: List[StepRecord] = field(default_factory=list)
    status: Optional[Status] = None
    final_point: Optional[np.ndarray] = None
    wall_time: float = 0.0

    @property
    def iterations(self):
        return self.records[-1].k if self.records else 0

    @property
    def final_residual(self):
        return self.records[-1].res

    @property
    def solved(self):
        return self.status is Status.SINGULARITY

    def to_jsonl(self):
        lines = []
        for r in self.records:
            lines.append(json.dumps({"k": r.k, "res": r.res, "merit": r.merit, "alpha": r.alpha,
                                     "backtracks": r.backtracks, "kind": r.kind, "m_k": r.m_k,
                                     "slope": r.slope}))
        cfg = self.config
        lines.append(json.dumps({"status": self.status.value, "iters": self.iterations,
                                 "wall_time_s": self.wall_time, "method": self.method,
                                 "M": cfg.M, "sigma": cfg.sigma, "beta": cfg.beta,
                                 "tol_residual": cfg.tol_residual}))
        return "\n".join(lines) + "\n"

    def write_jsonl(self, path):
        with open(path, "w") as fh:
            fh.write(self.to_jsonl())


def read_trace_jsonl(path):
    """Parse a trace file back into (records, terminal_record_dict)."""
    with open(path) as fh:
        rows = [json.loads(line) for line in fh if line.strip()]
    terminal = rows[-1]
    records = [StepRecord(**{k: row[k] for k in ("k", "res", "merit", "m_k", "kind",
                                                   "slope", "alpha", "backtracks")})
               for row in rows[:-1]]
    return records, terminal


# ---------------------------------------------------------------------------
# merit function and directions

def merit(field, p):
    X = field.eval(p)
    return 0.5 * float(X @ X)


def merit_gradient(field, p, X=None, V=None):
    """Riemannian gradient of phi = |X|^2 / 2, i.e. the tangent part of V^T X."""
    if X is None:
        X = field.eval(p)
    if V is None:
        V = field.clarke_element(p)
    return geometry.project_to_tangent(p, V.T @ X)


def _tangent_newton_solve(p, X, V, cfg):
    """Solve X + V v = 0 on T_p; returns v or None when not acceptably solvable."""
    basis = geometry.TangentBasis(p)
    B = basis.compress(V)
    r = basis.coords(X)
    if not (np.all(np.isfinite(B)) and np.all(np.isfinite(r))):
        return None
    lu, piv, info = sla.lapack.dgetrf(B)
    if info != 0:
        return None
    rcond, info = sla.lapack.dgecon(lu, np.abs(B).sum(axis=0).max(), norm="1")
    if info != 0 or not rcond * cfg.condition_cap > 1.0:
        return None
    w, info = sla.lapack.dgetrs(lu, piv, -r)
    if info != 0:
        return None
    v = basis.embed(w)
    if not np.linalg.norm(V @ v + X) <= cfg.solve_residual_factor * np.linalg.norm(X):
        return None
    return v


def newton_direction(field, p, cfg, X=None, V=None, allow_fallback=True):
    """Newton direction on T_p, or the negative merit gradient as a fallback.

    Raises ZeroDirection if the chosen vector vanishes, and
    SingularClarkeElement if the Newton system fails and no fallback is allowed.
    """
    if X is None:
        X = field.eval(p)
    if V is None:
        V = field.clarke_element(p)
    # X is tangent in exact arithmetic; near a singularity its rounding-level
    # normal part can exceed the solve tolerance and must not be chased
    X = geometry.project_to_tangent(p, X)
    g = merit_gradient(field, p, X, V)
    v = _tangent_newton_solve(p, X, V, cfg)
    if v is not None:
        kind = DirectionKind.NEWTON
        slope = float(g @ v)
    elif allow_fallback:
        kind = DirectionKind.GRADIENT
        v = -g
        slope = -float(g @ g)
    else:
        raise SingularClarkeElement("tangent-reduced Clarke element is singular or ill-conditioned")
    if np.linalg.norm(v) < ZERO_DIRECTION_NORM:
        raise ZeroDirection(f"{kind.value} direction vanished")
    return Direction(vector=v, kind=kind, slope=slope)


# ---------------------------------------------------------------------------
# line search

def nonmonotone_index(k, M):
    # m_0 = 0, m_k = min(m_{k-1} + 1, M)
    return min(k, M)


def nonmonotone_reference(merits, k, M):
    """max of phi(p_{k-j}) for 0 <= j <= m_k."""
    m = nonmonotone_index(k, M)
    return max(merits[k - m:k + 1])


def line_search(field, p, direction, reference, cfg):
    """Backtrack alpha = 1, beta, beta^2, ... until
    ``phi(exp_p(alpha v)) <= reference + sigma alpha slope``."""
    if not direction.slope < 0.0:
        raise ValueError(f"line search needs a descent direction, got slope {direction.slope!r}")
    alpha = 1.0
    for backtracks in range(cfg.max_backtracks + 1):
        q = geometry.exp(p, alpha * direction.vector)
        phi = merit(field, q)
        if phi <= reference + cfg.sigma * alpha * direction.slope:
            return LineSearchResult(alpha, backtracks, q, phi)
        alpha *= cfg.beta
    raise LineSearchStall(f"no acceptable step after {cfg.max_backtracks} backtracks "
                          f"(slope {direction.slope:.3e})")


# ---------------------------------------------------------------------------
# drivers

def gnm_solve(field, p0, cfg=None):
    """Globalized Newton method with nonmonotone line search."""
    cfg = cfg or SolverConfig()
    trace = SolveTrace(method=f"GNM(M={cfg.M})", config=cfg)
    start = time.perf_counter()
    p = np.asarray(p0, dtype=float)
    merits = []
    for k in range(cfg.max_iters + 1):
        X = field.eval(p)
        res = float(np.linalg.norm(X))
        phi = 0.5 * res * res
        merits.append(phi)
        rec = StepRecord(k=k, res=res, merit=phi, m_k=nonmonotone_index(k, cfg.M))
        trace.records.append(rec)
        if res < cfg.tol_residual:
            trace.status = Status.SINGULARITY
            break
        if k == cfg.max_iters:
            trace.status = Status.MAX_ITERS
            break
        try:
            d = newton_direction(field, p, cfg, X=X, V=field.clarke_element(p))
        except ZeroDirection:
            trace.status = Status.STATIONARY_POINT
            break
        rec.kind, rec.slope = d.kind.value, d.slope
        try:
            step = line_search(field, p, d, nonmonotone_reference(merits, k, cfg.M), cfg)
        except LineSearchStall:
            trace.status = Status.LINE_SEARCH_STALL
            break
        rec.alpha, rec.backtracks = step.alpha, step.backtracks
        p = step.point
    trace.final_point = p
    trace.wall_time = time.perf_counter() - start
    return trace


def nm_solve(field, p0, cfg=None):
    """Pure Newton iteration p_{k+1} = exp_{p_k}(-V_k^{-1} X(p_k)); no fallback."""
    cfg = cfg or SolverConfig()
    trace = SolveTrace(method="NM", config=cfg)
    start = time.perf_counter()
    p = np.asarray(p0, dtype=float)
    for k in range(cfg.max_iters + 1):
        X = field.eval(p)
        res = float(np.linalg.norm(X))
        rec = StepRecord(k=k, res=res, merit=0.5 * res * res, m_k=0)
        trace.records.append(rec)
        if res < cfg.tol_residual:
            trace.status = Status.SINGULARITY
            break
        if k == cfg.max_iters or not math.isfinite(res):
            trace.status = Status.MAX_ITERS
            break
        try:
            d = newton_direction(field, p, cfg, X=X, V=field.clarke_element(p), allow_fallback=False)
        except SingularClarkeElement:
            trace.status = Status.SINGULAR_CLARKE
            break
        except ZeroDirection:
            trace.status = Status.STATIONARY_POINT
            break
        rec.kind, rec.slope, rec.alpha, rec.backtracks = d.kind.value, d.slope, 1.0, 0
        p = geometry.exp(p, d.vector)
    trace.final_point = p
    trace.wall_time = time.perf_counter() - start
    return trace


def solve(field, p0, method="gnm", cfg=None):
    if method == "gnm":
        return gnm_solve(field, p0, cfg)
    if method == "nm":
        return nm_solve(field, p0, cfg)
    raise ValueError(f"unknown method {method!r}")


# ---------------------------------------------------------------------------
# independent re-check of a finished trace

def verify_certificates(records, sigma, M, nonmonotone=True):
    """Re-check acceptance and index rules from recorded values only.

    Returns a list of human-readable violations (empty when all hold).
    """
    problems = []
    merits = [r.merit for r in records]
    prev_m = None
    for r in records:
        expected_m = 0 if prev_m is None else min(prev_m + 1, M)
        if nonmonotone and r.m_k != expected_m:
            problems.append(f"k={r.k}: m_k={r.m_k}, expected {expected_m}")
        prev_m = r.m_k
        if r.alpha is None:
            continue
        if r.slope is None or not r.slope < 0.0:
            problems.append(f"k={r.k}: non-descent slope {r.slope!r}")
            continue
        if r.k + 1 >= len(records):
            problems.append(f"k={r.k}: step recorded without a successor state")
            continue
        if nonmonotone:
            reference = max(merits[r.k - r.m_k:r.k + 1])
            if not merits[r.k + 1] <= reference + sigma * r.alpha * r.slope:
                problems.append(f"k={r.k}: phi_next={merits[r.k + 1]!r} exceeds "
                                f"{reference + sigma * r.alpha * r.slope!r}")
    return problems
