"""Dense kernels and the nuclear-norm-ball linear minimization oracle.

Matrices are plain 2-D ``float64`` numpy arrays. The oracle needs only the
leading singular pair, which power iteration delivers in O(D1*D2) work per
sweep; ``full_svd_reference`` exists so tests can check it against LAPACK.
"""
from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path
from typing import NamedTuple

import numpy as np

from .errors import DegenerateInputError, DimensionError, ParameterError

MAGIC = b"AFW1"
_HEADER = struct.Struct("<4sII")
# near-repeated top singular values stall the iteration; small matrices need this floor
MIN_SWEEPS = 1000


def as_matrix(M, name: str = "matrix") -> np.ndarray:
    """Validate ``M`` as a finite 2-D float array and return it as float64."""
    arr = np.asarray(M, dtype=np.float64)
    if arr.ndim != 2:
        raise DimensionError(f"{name} must be 2-D, got shape {arr.shape}")
    if arr.shape[0] < 1 or arr.shape[1] < 1:
        raise DimensionError(f"{name} has an empty dimension: {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ParameterError(f"{name} contains NaN or Inf")
    return arr


def frobenius_inner(A, B) -> float:
    """trace(A^T B), i.e. the entrywise sum of A * B."""
    A = np.asarray(A, dtype=np.float64)
    B = np.asarray(B, dtype=np.float64)
    if A.shape != B.shape:
        raise DimensionError(f"shape mismatch: {A.shape} vs {B.shape}")
    return float(np.vdot(A, B))


class SingularTriple(NamedTuple):
    u: np.ndarray
    sigma: float
    v: np.ndarray
    converged: bool
    iterations: int


def _canonical_sign(u: np.ndarray, v: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    nz = np.flatnonzero(u)
    if nz.size and u[nz[0]] < 0:
        return -u, -v
    return u, v


def power_iteration_1svd(M, tol: float = 1e-9, max_iters: int | None = None,
                         seed: int = 0) -> SingularTriple:
    """Leading singular triple of ``M`` by power iteration on M^T M.

    The start vector comes from ``np.random.default_rng(seed)`` so the
    result is a deterministic function of ``(M, seed)``. Iteration stops
    once successive estimates of the top singular value agree to ``tol``
    relative to the current estimate; if ``max_iters`` sweeps pass first,
    the best triple found is returned with ``converged=False``.

    The sign is fixed so that the first nonzero entry of ``u`` is
    nonnegative. When the top singular value is (nearly) repeated the
    returned pair is whichever leading vector the iteration settles on.
    """
    M = as_matrix(M)
    if tol <= 0:
        raise ParameterError("tol must be positive")
    rows, cols = M.shape
    if max_iters is None:
        max_iters = max(10 * max(rows, cols), MIN_SWEEPS)
    if max_iters < 1:
        raise ParameterError("max_iters must be at least 1")
    if not np.any(M):
        raise DegenerateInputError("power iteration on a zero matrix")

    rng = np.random.default_rng(seed)
    v = rng.standard_normal(cols)
    v /= np.linalg.norm(v)
    Mv = M @ v
    if not np.any(Mv):
        # start vector landed in the null space; any row of M is a safe restart
        v = M[np.argmax(np.abs(M).sum(axis=1))].copy()
        v /= np.linalg.norm(v)
        Mv = M @ v

    prev = -1.0
    converged = False
    it = 0
    for it in range(1, max_iters + 1):
        u = Mv / np.linalg.norm(Mv)
        w = M.T @ u
        sigma = np.linalg.norm(w)
        v = w / sigma
        Mv = M @ v
        if abs(sigma - prev) < tol * sigma:
            converged = True
            break
        prev = sigma

    sigma = float(np.linalg.norm(Mv))
    u = Mv / sigma
    u, v = _canonical_sign(u, v)
    return SingularTriple(u, sigma, v, converged, it)


@dataclass(frozen=True)
class RankOnePair:
    """Unit vectors ``u``, ``v`` and a scale; the oracle's step is ``-scale * u v^T``."""

    u: np.ndarray
    v: np.ndarray
    scale: float
    degenerate: bool = False
    converged: bool = True

    def outer(self) -> np.ndarray:
        return self.scale * np.outer(self.u, self.v)

    def direction(self) -> np.ndarray:
        """The minimizer ``U = -scale * u v^T`` of <grad, U> over the ball."""
        return np.outer(-self.scale * self.u, self.v)

    def folded(self) -> tuple[np.ndarray, np.ndarray]:
        """(-scale * u, v): the vector pair whose outer product is ``direction()``."""
        return -self.scale * self.u, self.v


def lmo_nuclear(grad, theta: float, tol: float = 1e-9, seed: int = 0,
                max_iters: int | None = None) -> RankOnePair:
    """argmin of <grad, U> over ||U||_* <= theta.

    A zero gradient makes every feasible point optimal; an arbitrary unit
    pair is returned with ``degenerate=True`` instead of raising.
    """
    if theta <= 0:
        raise ParameterError("theta must be positive")
    grad = as_matrix(grad, "grad")
    if not np.any(grad):
        u = np.zeros(grad.shape[0])
        v = np.zeros(grad.shape[1])
        u[0] = v[0] = 1.0
        return RankOnePair(u, v, float(theta), degenerate=True)
    trip = power_iteration_1svd(grad, tol=tol, max_iters=max_iters, seed=seed)
    return RankOnePair(trip.u, trip.v, float(theta), converged=trip.converged)


def full_svd_reference(M) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Dense SVD via LAPACK: returns (singular values, U, V) with M = U diag(s) V^T."""
    M = as_matrix(M)
    U, s, Vt = np.linalg.svd(M, full_matrices=False)
    return s, U, Vt.T


def nuclear_norm(M) -> float:
    return float(np.sum(full_svd_reference(M)[0]))


def random_feasible(shape: tuple[int, int], theta: float, rng: np.random.Generator,
                    radius: float | None = None) -> np.ndarray:
    """Gaussian matrix rescaled to nuclear norm ``radius`` (default: uniform in (0, theta])."""
    M = rng.standard_normal(shape)
    if radius is None:
        radius = theta * rng.uniform(0.05, 1.0)
    return M * (radius / nuclear_norm(M))


# -- serialization -------------------------------------------------------------

def write_matrix(path, M) -> None:
    """Write ``M`` as magic ``AFW1``, u32 rows, u32 cols, little-endian f64 row-major."""
    M = as_matrix(M)
    rows, cols = M.shape
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(MAGIC, rows, cols))
        fh.write(np.ascontiguousarray(M, dtype="<f8").tobytes())


def read_matrix(path) -> np.ndarray:
    data = Path(path).read_bytes()
    if len(data) < _HEADER.size:
        raise DimensionError(f"{path}: truncated header")
    magic, rows, cols = _HEADER.unpack_from(data)
    if magic != MAGIC:
        raise DimensionError(f"{path}: bad magic {magic!r}")
    payload = data[_HEADER.size:]
    if len(payload) != 8 * rows * cols:
        raise DimensionError(f"{path}: expected {rows}x{cols} entries, "
                             f"found {len(payload) // 8}")
    return np.frombuffer(payload, dtype="<f8").reshape(rows, cols).astype(np.float64)


def load_csv(path) -> np.ndarray:
    return as_matrix(np.loadtxt(path, delimiter=",", ndmin=2))
