"""Finite-sum objectives over the nuclear-norm ball.

Two problem families are provided:

* matrix sensing, ``F(X) = (1/N) sum_i (<A_i, X> - y_i)^2``;
* a two-layer polynomial network with quadratic activation trained with the
  smooth hinge loss, ``F(X) = (1/N) sum_i s_hinge(y_i, a_i^T X a_i)``.

Both expose the same small surface (``loss``, ``gradient``,
``sample_gradients``, ``n_samples``, ``shape``, ``theta``) which is all the
optimizers touch. Minibatches are index arrays; repeated indices count with
multiplicity and the gradient is averaged over ``len(indices)``.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import DimensionError, ParameterError
from .linalg import (as_matrix, frobenius_inner, nuclear_norm, random_feasible,
                     read_matrix, write_matrix)

TINY = 1e-300


def sample_indices(rng: np.random.Generator, n_samples: int, batch: int) -> np.ndarray:
    """Draw a minibatch of ``batch`` indices with replacement.

    A request for at least ``n_samples`` indices returns the full index set
    without touching ``rng``; that keeps a full-batch run identical to
    deterministic Frank-Wolfe.
    """
    if batch < 1:
        raise ParameterError("batch must be at least 1")
    if batch >= n_samples:
        return np.arange(n_samples)
    return rng.integers(0, n_samples, size=batch)


def _check_indices(indices, n: int) -> np.ndarray:
    idx = np.asarray(indices, dtype=np.int64).ravel()
    if idx.size == 0:
        raise ParameterError("empty index set")
    if idx.min() < 0 or idx.max() >= n:
        raise ParameterError(f"index out of range [0, {n})")
    return idx


def _multiplicities(idx: np.ndarray, n: int):
    """(unique indices, counts), or (None, counts over all n) when most rows are hit."""
    if idx.size * 4 >= n:
        return None, np.bincount(idx, minlength=n).astype(np.float64)
    uniq, counts = np.unique(idx, return_counts=True)
    return uniq, counts.astype(np.float64)


# -- matrix sensing -------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class MatrixSensingProblem:
    sensing: np.ndarray          # (N, D1, D2)
    responses: np.ndarray        # (N,)
    ground_truth: np.ndarray     # (D1, D2), nuclear norm 1
    theta: float = 1.0
    noise_std: float = 0.0
    seed: int | None = None
    kind: str = field(default="sensing", init=False)

    def __post_init__(self):
        if self.sensing.ndim != 3:
            raise DimensionError("sensing matrices must be stacked as (N, D1, D2)")
        if self.responses.shape != (self.sensing.shape[0],):
            raise DimensionError("one response per sensing matrix")
        object.__setattr__(self, "_flat",
                           self.sensing.reshape(self.sensing.shape[0], -1))

    @property
    def n_samples(self) -> int:
        return self.sensing.shape[0]

    @property
    def shape(self) -> tuple[int, int]:
        return self.sensing.shape[1], self.sensing.shape[2]

    def _check_X(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        if X.shape != self.shape:
            raise DimensionError(f"X has shape {X.shape}, problem expects {self.shape}")
        return X

    def residuals(self, X, rows=None) -> np.ndarray:
        X = self._check_X(X)
        A = self._flat if rows is None else self._flat[rows]
        y = self.responses if rows is None else self.responses[rows]
        return A @ X.ravel() - y

    def loss(self, X) -> float:
        r = self.residuals(X)
        return float(r @ r) / self.n_samples

    def gradient(self, X, indices=None) -> np.ndarray:
        """Average of 2 (<A_i, X> - y_i) A_i over ``indices`` (all samples if None)."""
        if indices is None:
            g = (2.0 / self.n_samples) * (self.residuals(X) @ self._flat)
            return g.reshape(self.shape)
        idx = _check_indices(indices, self.n_samples)
        rows, counts = _multiplicities(idx, self.n_samples)
        r = self.residuals(X, rows)
        A = self._flat if rows is None else self._flat[rows]
        g = (2.0 / idx.size) * ((counts * r) @ A)
        return g.reshape(self.shape)

    def sample_gradients(self, X, indices) -> np.ndarray:
        """Per-sample gradients stacked as (len(indices), D1, D2)."""
        idx = _check_indices(indices, self.n_samples)
        r = self.residuals(X, idx)
        return 2.0 * r[:, None, None] * self.sensing[idx]

    def reference_value(self) -> float:
        return self.loss(self.ground_truth)


def generate_matrix_sensing(d1: int, d2: int, rank: int, N: int, noise_std: float = 0.0,
                            seed: int = 0, theta: float = 1.0) -> MatrixSensingProblem:
    """Synthetic sensing instance with a unit-nuclear-norm low-rank ground truth.

    U, V have uniform[0, 1] entries, X* = U V^T / ||U V^T||_*, the A_i are
    standard normal and y_i = <A_i, X*> + noise_std * N(0, 1).
    """
    if min(d1, d2, rank, N) < 1:
        raise ParameterError("dimensions, rank and N must be positive")
    if rank > min(d1, d2):
        raise ParameterError(f"rank {rank} exceeds min({d1}, {d2})")
    if noise_std < 0:
        raise ParameterError("noise_std must be nonnegative")
    rng = np.random.default_rng(seed)
    U = rng.uniform(0.0, 1.0, size=(d1, rank))
    V = rng.uniform(0.0, 1.0, size=(d2, rank))
    M = U @ V.T
    x_star = M / nuclear_norm(M)
    A = rng.standard_normal((N, d1, d2))
    eps = rng.standard_normal(N)
    y = A.reshape(N, -1) @ x_star.ravel()
    if noise_std > 0:
        y = y + noise_std * eps
    return MatrixSensingProblem(A, y, x_star, float(theta), float(noise_std), seed)


def sensing_loss(p: MatrixSensingProblem, X) -> float:
    return p.loss(X)


def sensing_minibatch_gradient(p: MatrixSensingProblem, X, indices) -> np.ndarray:
    return p.gradient(X, indices)


# -- polynomial network ------------------------------------------------------------

def s_hinge(y, t):
    """Smooth hinge as a function of the margin ty, branch by branch.

    0.5 - ty for ty <= 0, (0.5 (1 - ty))^2 for 0 < ty <= 1, 0 beyond.
    The first two branches do not meet at ty = 0 (0.5 vs 0.25); the
    formula is kept exactly as stated rather than patched.
    """
    z = np.asarray(y, dtype=np.float64) * np.asarray(t, dtype=np.float64)
    return np.where(z <= 0, 0.5 - z, np.where(z <= 1, (0.5 * (1 - z)) ** 2, 0.0))


def s_hinge_slope(y, t):
    """d s_hinge / dt: -y, -0.5 y (1 - ty), or 0 on the three branches."""
    y = np.asarray(y, dtype=np.float64)
    z = y * np.asarray(t, dtype=np.float64)
    return np.where(z <= 0, -y, np.where(z <= 1, -0.5 * y * (1 - z), 0.0))


@dataclass(frozen=True, eq=False)
class PnnProblem:
    features: np.ndarray     # (N, d), entries in [0, 1]
    labels: np.ndarray       # (N,), entries +-1
    theta: float = 1.0
    seed: int | None = None
    kind: str = field(default="pnn", init=False)

    def __post_init__(self):
        if self.features.ndim != 2 or self.labels.shape != (self.features.shape[0],):
            raise DimensionError("features must be (N, d) with one label per row")
        if np.any(self.features < 0) or np.any(self.features > 1):
            raise ParameterError("features must lie in [0, 1]")
        if not np.all(np.isin(self.labels, (-1.0, 1.0))):
            raise ParameterError("labels must be +-1")

    @property
    def n_samples(self) -> int:
        return self.features.shape[0]

    @property
    def shape(self) -> tuple[int, int]:
        d = self.features.shape[1]
        return d, d

    def _check_X(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        if X.ndim != 2 or X.shape[0] != X.shape[1]:
            raise DimensionError(f"PNN weights must be square, got {X.shape}")
        if X.shape != self.shape:
            raise DimensionError(f"X has shape {X.shape}, problem expects {self.shape}")
        return X

    def outputs(self, X, rows=None) -> np.ndarray:
        X = self._check_X(X)
        a = self.features if rows is None else self.features[rows]
        return np.einsum("ni,ni->n", a @ X, a)

    def loss(self, X) -> float:
        return float(np.mean(s_hinge(self.labels, self.outputs(X))))

    def gradient(self, X, indices=None) -> np.ndarray:
        if indices is None:
            g = s_hinge_slope(self.labels, self.outputs(X))
            return (self.features * g[:, None]).T @ self.features / self.n_samples
        idx = _check_indices(indices, self.n_samples)
        rows, counts = _multiplicities(idx, self.n_samples)
        a = self.features if rows is None else self.features[rows]
        y = self.labels if rows is None else self.labels[rows]
        g = counts * s_hinge_slope(y, self.outputs(X, rows))
        return (a * g[:, None]).T @ a / idx.size

    def sample_gradients(self, X, indices) -> np.ndarray:
        idx = _check_indices(indices, self.n_samples)
        a = self.features[idx]
        g = s_hinge_slope(self.labels[idx], self.outputs(X, idx))
        return g[:, None, None] * a[:, :, None] * a[:, None, :]

    def reference_value(self) -> float:
        return 0.0


def generate_pnn(N: int, d: int = 28, theta: float = 1.0, seed: int = 0) -> PnnProblem:
    """Pseudo-image data: uniform[0, 1] pixels, balanced labels from a hidden quadratic form."""
    if N < 2 or d < 1:
        raise ParameterError("need N >= 2 and d >= 1")
    rng = np.random.default_rng(seed)
    a = rng.uniform(0.0, 1.0, size=(N, d))
    w = rng.standard_normal((d, 2))
    hidden = w @ np.diag([1.0, -1.0]) @ w.T
    score = np.einsum("ni,ij,nj->n", a, hidden, a)
    labels = np.full(N, -1.0)
    labels[np.argsort(score, kind="stable")[N // 2:]] = 1.0
    return PnnProblem(a, labels, float(theta), seed)


def pnn_loss(p: PnnProblem, X) -> float:
    return p.loss(X)


def pnn_minibatch_gradient(p: PnnProblem, X, indices) -> np.ndarray:
    return p.gradient(X, indices)


# -- constants and probes -------------------------------------------------------------

@dataclass(frozen=True)
class ProblemConstants:
    L: float
    G: float
    D: float

    def __post_init__(self):
        if self.L <= 0 or self.G <= 0 or self.D <= 0:
            raise ParameterError(f"constants must be positive: {self}")


def estimate_constants(problem, sample_count: int = 20, seed: int = 0,
                       refine_steps: int = 5, indices_per_point: int = 32) -> ProblemConstants:
    """Empirical smoothness L, gradient spread G and diameter D = 2 theta.

    L is the largest ratio ||grad F(X) - grad F(Y)||_F / ||X - Y||_F seen over
    random feasible pairs. Each pair is refined a few times by replacing the
    offset with the gradient difference it produced, which walks the offset
    toward the top curvature direction. G is the root-mean-square of
    ||grad f_i(X) - grad F(X)||_F over random feasible X and random i.
    """
    if sample_count < 2:
        raise ParameterError("sample_count must be at least 2")
    theta = problem.theta
    shape = problem.shape
    rng = np.random.default_rng(seed)
    half = 0.5 * theta

    L = 0.0
    for _ in range(sample_count):
        X = random_feasible(shape, theta, rng, radius=half * rng.uniform(0.1, 1.0))
        gX = problem.gradient(X)
        d = rng.standard_normal(shape)
        for _ in range(refine_steps + 1):
            norm_d = nuclear_norm(d)
            if norm_d == 0:
                break
            d = d * (half / norm_d)
            diff = problem.gradient(X + d) - gX
            L = max(L, float(np.linalg.norm(diff) / np.linalg.norm(d)))
            d = diff

    sq = []
    k = min(indices_per_point, problem.n_samples)
    for _ in range(sample_count):
        X = random_feasible(shape, theta, rng)
        full = problem.gradient(X)
        idx = rng.integers(0, problem.n_samples, size=k)
        dev = problem.sample_gradients(X, idx) - full
        sq.extend(np.einsum("nij,nij->n", dev, dev))
    sq = np.asarray(sq)
    G = float(np.sqrt(sq.sum() / (sq.size - 1)))
    return ProblemConstants(L=L, G=G, D=2.0 * theta)


def gradient_variance_probe(problem, X, trials: int = 200, batch: int = 1,
                            seed: int = 0) -> float:
    """Monte-Carlo estimate of E ||minibatch gradient - full gradient||_F^2 at ``X``."""
    if trials < 1:
        raise ParameterError("trials must be at least 1")
    full = problem.gradient(X)
    rng = np.random.default_rng(seed)
    total = 0.0
    for _ in range(trials):
        idx = sample_indices(rng, problem.n_samples, batch)
        diff = problem.gradient(X, idx) - full
        total += float(np.vdot(diff, diff))
    return total / trials


def relative_error(value: float, f_ref: float, f_start: float) -> float:
    return (value - f_ref) / max(f_start - f_ref, TINY)


def project_nuclear_ball(M, theta: float) -> np.ndarray:
    """Euclidean projection onto ||X||_* <= theta (full SVD + l1-ball projection)."""
    U, s, Vt = np.linalg.svd(as_matrix(M), full_matrices=False)
    if s.sum() <= theta:
        return U @ np.diag(s) @ Vt
    # simplex projection of the singular values (Duchi et al. sort-based rule)
    mu = np.sort(s)[::-1]
    cssv = np.cumsum(mu) - theta
    rho = np.nonzero(mu * np.arange(1, mu.size + 1) > cssv)[0][-1]
    shift = cssv[rho] / (rho + 1.0)
    return (U * np.maximum(s - shift, 0.0)) @ Vt


def reference_optimum(problem, iters: int = 2000, X0=None, tol: float = 1e-13):
    """Accurate minimizer over the ball by accelerated projected gradient.

    Used only to pin F_ref for relative-error reporting on problems whose
    optimum is unknown; uses backtracking so no smoothness estimate is needed.
    Returns (X_best, F_best).
    """
    shape = problem.shape
    X = np.zeros(shape) if X0 is None else np.array(X0, dtype=np.float64)
    Y = X.copy()
    t = 1.0
    step = 1.0
    best_X, best_F = X, problem.loss(X)
    for _ in range(iters):
        fY = problem.loss(Y)
        gY = problem.gradient(Y)
        while True:
            Xn = project_nuclear_ball(Y - step * gY, problem.theta)
            diff = Xn - Y
            if problem.loss(Xn) <= fY + frobenius_inner(gY, diff) + \
                    frobenius_inner(diff, diff) / (2 * step) + 1e-15:
                break
            step *= 0.5
        fX = problem.loss(Xn)
        if fX < best_F:
            improvement = best_F - fX
            best_X, best_F = Xn, fX
        else:
            improvement = 0.0
            t = 1.0  # restart momentum
        tn = 0.5 * (1 + np.sqrt(1 + 4 * t * t))
        Y = Xn + ((t - 1) / tn) * (Xn - X)
        X, t = Xn, tn
        if 0 < improvement < tol * max(abs(best_F), 1.0):
            break
    return best_X, best_F


# -- persistence -----------------------------------------------------------------------

def save_problem(problem, directory) -> Path:
    """Write meta.json plus AFW1 matrix files into ``directory``."""
    out = Path(directory)
    out.mkdir(parents=True, exist_ok=True)
    if problem.kind == "sensing":
        N, d1, d2 = problem.sensing.shape
        meta = {"kind": "sensing", "d1": d1, "d2": d2, "N": N,
                "theta": problem.theta, "noise_std": problem.noise_std, "seed": problem.seed}
        write_matrix(out / "sensing.afw", problem.sensing.reshape(N, d1 * d2))
        write_matrix(out / "responses.afw", problem.responses[:, None])
        write_matrix(out / "ground_truth.afw", problem.ground_truth)
    elif problem.kind == "pnn":
        N, d = problem.features.shape
        meta = {"kind": "pnn", "d": d, "N": N, "theta": problem.theta, "seed": problem.seed}
        write_matrix(out / "features.afw", problem.features)
        write_matrix(out / "labels.afw", problem.labels[:, None])
    else:
        raise ParameterError(f"unknown problem kind {problem.kind!r}")
    (out / "meta.json").write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")
    return out


def load_problem(directory):
    src = Path(directory)
    meta = json.loads((src / "meta.json").read_text())
    if meta["kind"] == "sensing":
        A = read_matrix(src / "sensing.afw").reshape(meta["N"], meta["d1"], meta["d2"])
        return MatrixSensingProblem(A, read_matrix(src / "responses.afw")[:, 0],
                                    read_matrix(src / "ground_truth.afw"),
                                    meta["theta"], meta["noise_std"], meta["seed"])
    if meta["kind"] == "pnn":
        return PnnProblem(read_matrix(src / "features.afw"),
                          read_matrix(src / "labels.afw")[:, 0], meta["theta"], meta["seed"])
    raise ParameterError(f"unknown problem kind {meta['kind']!r}")
