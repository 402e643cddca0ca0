"""Random AVVF instances: generation, start points, and the JSON file format.

The matrix generator follows the prescribed-singular-value construction of
Matlab's ``sprand(n, n, density, rc)``: start from ``diag(s)`` and apply
random plane rotations, alternately to rows and columns, until the requested
fraction of entries is nonzero. Rotations are orthogonal, so the singular
values stay exactly ``s``. The raw values are uniform on (0, 1) and are
rescaled so the smallest one is 3.3, which gives ``||A^{-1}|| < 1/3`` with
a 10% margin.
"""
import json
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from . import _kernels
from .errors import DegenerateMatrix, InstanceFormatError

FORMAT_VERSION = 1
SIGMA_TARGET = 3.3
SIGMA_BOUND = 3.0
MAX_ATTEMPTS = 20
RAW_SINGULAR_FLOOR = 1e-8
SV_RESCALE_MODES = ("scale", "shift")


@dataclass(frozen=True, eq=False)
class AvvfInstance:
    A: sp.csr_matrix
    b: np.ndarray
    planted_solution: np.ndarray
    seed: int
    density: float
    sigma_min: float
    sv_rescale: str = "scale"
    _dense: dict = field(default_factory=dict, repr=False, compare=False)

    @property
    def n(self):
        return self.b.shape[0]

    @property
    def nnz(self):
        return self.A.nnz

    def dense_A(self):
        if "A" not in self._dense:
            self._dense["A"] = self.A.toarray()
        return self._dense["A"]


def _rescale(raw, mode):
    if mode == "scale":
        return raw * (SIGMA_TARGET / raw.min())
    if mode == "shift":
        return SIGMA_TARGET + raw
    raise ValueError(f"unknown singular value rescale {mode!r}; expected one of {SV_RESCALE_MODES}")


def rotated_diagonal(s, density, rng, chunk=None):
    """Dense matrix with singular values ``s`` and nonzero fraction >= density.

    Random plane rotations are drawn from ``rng`` in chunks and consumed by
    the rotation kernel; the result only depends on the generator state.
    """
    n = s.shape[0]
    R = np.diag(np.asarray(s, dtype=float))
    nnz = int(np.count_nonzero(s))
    target = density * n * n
    chunk = chunk or max(64, 4 * n)
    side = 0
    drawn = 0
    # generous cap; filling a dense matrix needs O(n log n) rotations
    limit = 50 * n * n
    while nnz < target and drawn < limit:
        first = rng.integers(0, n, size=chunk)
        second = rng.integers(0, n - 1, size=chunk)
        second += second >= first
        pairs = np.ascontiguousarray(np.stack([first, second], axis=1), dtype=np.int64)
        angles = rng.uniform(0.0, 2.0 * np.pi, size=chunk)
        used, nnz = _kernels.rotate_until_density(R, nnz, target, pairs, angles, side)
        side = (side + used) % 2
        drawn += chunk
    return R


def generate_instance(n, density, seed, sv_rescale="scale"):
    """Deterministic random AVVF instance with ``sigma_min(A) > 3``."""
    n = int(n)
    if n < 2:
        raise ValueError(f"n must be >= 2, got {n}")
    if not 0.0 < density <= 1.0:
        raise ValueError(f"density must lie in (0, 1], got {density}")
    if sv_rescale not in SV_RESCALE_MODES:
        raise ValueError(f"unknown singular value rescale {sv_rescale!r}")
    rng = np.random.default_rng(seed)
    for _ in range(MAX_ATTEMPTS):
        raw = rng.uniform(0.0, 1.0, size=n)
        if raw.min() < RAW_SINGULAR_FLOOR:
            continue
        R = rotated_diagonal(_rescale(raw, sv_rescale), density, rng)
        sigma_min = float(np.linalg.svd(R, compute_uv=False)[-1])
        if sigma_min > SIGMA_BOUND:
            break
    else:
        raise DegenerateMatrix(f"no acceptable matrix after {MAX_ATTEMPTS} attempts (n={n}, seed={seed})")

    A = sp.csr_matrix(R)
    A.sort_indices()
    p_star = _normalized_cube_point(rng, n)
    b = _planted_rhs(A, p_star)
    return AvvfInstance(A=A, b=b, planted_solution=p_star, seed=int(seed),
                        density=float(density), sigma_min=sigma_min, sv_rescale=sv_rescale)


def _planted_rhs(A, p_star):
    # same kernel as the field evaluation, so F(p_star) is exactly zero
    zero = np.zeros(p_star.shape[0])
    _, F = _kernels.avvf_residual(A.indptr.astype(np.int64), A.indices.astype(np.int64),
                                  A.data.astype(np.float64), zero, p_star)
    return F


def _normalized_cube_point(rng, n):
    while True:
        x = rng.uniform(-100.0, 100.0, size=n)
        norm = np.linalg.norm(x)
        if norm >= 1e-12:
            return x / norm


def random_start(n, seed):
    """Starting point: componentwise uniform on (-100, 100), normalized."""
    if int(n) < 2:
        raise ValueError(f"n must be >= 2, got {n}")
    return _normalized_cube_point(np.random.default_rng(seed), int(n))


def start_seed_for(instance_seed):
    """Seed of the start point paired with an instance, from an independent stream."""
    ss = np.random.SeedSequence([int(instance_seed), 1])
    return int(ss.generate_state(1, np.uint64)[0] >> np.uint64(1))


# ---------------------------------------------------------------------------
# file format

def _triplets(A):
    coo = A.tocoo()
    order = np.lexsort((coo.col, coo.row))
    return coo.row[order], coo.col[order], coo.data[order]


def dumps_instance(inst):
    rows, cols, vals = _triplets(inst.A)
    head = {
        "version": FORMAT_VERSION,
        "n": inst.n,
        "seed": inst.seed,
        "density": inst.density,
        "sigma_min": inst.sigma_min,
        "sv_rescale": inst.sv_rescale,
    }
    lines = ["{"]
    for key, value in head.items():
        lines.append(f"  {json.dumps(key)}: {json.dumps(value)},")
    lines.append('  "A": [')
    trip = [f"    [{int(i)}, {int(j)}, {float(v)!r}]" for i, j, v in zip(rows, cols, vals)]
    lines.append(",\n".join(trip))
    lines.append("  ],")
    lines.append(f'  "b": {json.dumps([float(x) for x in inst.b])},')
    lines.append(f'  "p_star": {json.dumps([float(x) for x in inst.planted_solution])}')
    lines.append("}")
    return "\n".join(lines) + "\n"


def loads_instance(text):
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InstanceFormatError(f"not valid JSON: {exc}") from exc
    if not isinstance(obj, dict):
        raise InstanceFormatError("top-level value must be an object")
    missing = {"version", "n", "seed", "density", "sigma_min", "A", "b", "p_star"} - obj.keys()
    if missing:
        raise InstanceFormatError(f"missing keys: {sorted(missing)}")
    if obj["version"] != FORMAT_VERSION:
        raise InstanceFormatError(f"unsupported version {obj['version']!r}")
    try:
        n = int(obj["n"])
        b = np.asarray(obj["b"], dtype=float)
        p_star = np.asarray(obj["p_star"], dtype=float)
        trip = obj["A"]
        if len(trip) == 0:
            rows = cols = np.zeros(0, dtype=np.int64)
            vals = np.zeros(0)
        else:
            arr = np.asarray(trip, dtype=object)
            if arr.ndim != 2 or arr.shape[1] != 3:
                raise InstanceFormatError("A must be a list of [row, col, value] triplets")
            rows = np.asarray(arr[:, 0], dtype=np.int64)
            cols = np.asarray(arr[:, 1], dtype=np.int64)
            vals = np.asarray(arr[:, 2], dtype=float)
    except (TypeError, ValueError) as exc:
        raise InstanceFormatError(f"malformed numeric payload: {exc}") from exc
    if b.shape != (n,) or p_star.shape != (n,):
        raise InstanceFormatError(f"b and p_star must have length n={n}")
    if rows.size and (rows.min() < 0 or cols.min() < 0 or rows.max() >= n or cols.max() >= n):
        raise InstanceFormatError("triplet index out of range")
    keys = rows * n + cols
    if np.unique(keys).size != keys.size:
        raise InstanceFormatError("duplicate entries in A")
    A = sp.csr_matrix((vals, (rows, cols)), shape=(n, n))
    A.sort_indices()
    return AvvfInstance(A=A, b=b, planted_solution=p_star, seed=int(obj["seed"]),
                        density=float(obj["density"]), sigma_min=float(obj["sigma_min"]),
                        sv_rescale=str(obj.get("sv_rescale", "scale")))


def save_instance(inst, path):
    with open(path, "w") as fh:
        fh.write(dumps_instance(inst))


def load_instance(path):
    with open(path) as fh:
        return loads_instance(fh.read())


def instances_equal(a, b):
    """Bit-exact equality of the numeric payload and metadata."""
    ra, rb = _triplets(a.A), _triplets(b.A)
    return (
        a.n == b.n and a.seed == b.seed and a.density == b.density
        and a.sigma_min == b.sigma_min and a.sv_rescale == b.sv_rescale
        and all(np.array_equal(x, y) for x, y in zip(ra, rb))
        and np.array_equal(a.b, b.b)
        and np.array_equal(a.planted_solution, b.planted_solution)
    )
