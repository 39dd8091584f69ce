"""Partial eigendecomposition and eigen-convergence diagnostics.

Everything here lives in the G_n geometry: the inner product is the
1/n-weighted dot product, the Monte Carlo surrogate for the manifold L2
inner product. Eigenvectors returned by this module are G_n-orthonormal
(Euclidean norm sqrt(n)).

The solver is Lanczos with full reorthogonalization applied to the
spectrally flipped operator sigma_max I - L, where sigma_max is a
Gershgorin-style bound from the degree maxima; largest Ritz pairs of the
flipped operator are the smallest eigenpairs of L. No linear solves are
needed, only matvecs.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
import scipy.linalg

from .graph import LaplacianOperator
from .manifolds import (
    ContinuumEigenpair,
    ManifoldModel,
    PointCloud,
    quadrature_nodes,
    sample_uniform,
)


def gn_inner(x: np.ndarray, y: np.ndarray) -> float:
    """<x, y>_{G_n} = (1/n) sum_i x_i y_i."""
    return float(np.dot(x, y)) / len(x)


def gn_norm(x: np.ndarray) -> float:
    return float(np.linalg.norm(x)) / np.sqrt(len(x))


class ConvergenceFailure(Exception):
    """Eigensolver hit its iteration cap; carries the residuals achieved."""

    def __init__(self, message: str, residuals: np.ndarray):
        super().__init__(message)
        self.residuals = residuals


@dataclass(frozen=True)
class EigenSystem:
    """K smallest eigenpairs of a graph Laplacian, G_n-orthonormal."""

    eigenvalues: np.ndarray  # (K,), nondecreasing
    eigenvectors: np.ndarray  # (n, K), columns with unit G_n norm

    @property
    def count(self) -> int:
        return len(self.eigenvalues)

    @property
    def n(self) -> int:
        return self.eigenvectors.shape[0]

    def with_vectors(self, vectors: np.ndarray) -> "EigenSystem":
        return EigenSystem(self.eigenvalues, vectors)


def _start_vector(n: int, seed: int) -> np.ndarray:
    v = np.random.default_rng(seed).standard_normal(n)
    return v / np.linalg.norm(v)


def _lanczos_flipped(
    op: LaplacianOperator, K: int, tol: float, seed: int, max_iter: int
):
    """Lanczos on B = sigma I - L; returns K largest Ritz pairs of B."""
    n = op.n
    sigma = op.degree_bound()

    def bmatvec(v):
        return sigma * v - op.matvec(v)

    m_cap = min(max_iter, n)
    Q = np.empty((n, m_cap))
    alphas = np.empty(m_cap)
    betas = np.empty(m_cap)
    q = _start_vector(n, seed)
    Q[:, 0] = q
    m = 0
    beta = 0.0
    check_at = max(2 * K, 8)
    while True:
        u = bmatvec(Q[:, m])
        alpha = float(np.dot(Q[:, m], u))
        alphas[m] = alpha
        r = u - alpha * Q[:, m]
        if m > 0:
            r -= betas[m - 1] * Q[:, m - 1]
        # full reorthogonalization, twice for safety
        r -= Q[:, : m + 1] @ (Q[:, : m + 1].T @ r)
        r -= Q[:, : m + 1] @ (Q[:, : m + 1].T @ r)
        beta = float(np.linalg.norm(r))
        m += 1
        exhausted = m >= m_cap or beta < 1e-14 * max(sigma, 1.0)
        if m >= check_at or exhausted:
            theta, S = scipy.linalg.eigh_tridiagonal(alphas[:m], betas[: m - 1])
            if m >= K:
                # largest K of B; cheap residual estimate |beta * s_last|
                idx = np.argsort(theta)[::-1][:K]
                est = np.abs(beta * S[-1, idx])
                lam = sigma - theta[idx]
                scale = max(float(np.max(lam)), 1.0)
                # est is the Euclidean residual of the unit Ritz pair, which
                # equals the G_n residual after rescaling to unit G_n norm
                if np.all(est <= 0.1 * tol * scale) or exhausted:
                    vecs = Q[:, :m] @ S[:, idx]
                    return lam, vecs, exhausted
            if exhausted:
                raise ConvergenceFailure(
                    f"Krylov space exhausted at m={m} before reaching K={K}",
                    np.array([]),
                )
            check_at = min(m + max(K, 4), m_cap)
        if not exhausted:
            betas[m - 1] = beta
            Q[:, m] = r / beta


def smallest_eigenpairs(
    op: LaplacianOperator,
    K: int,
    tol: float = 1e-8,
    seed: int = 0,
    method: str = "auto",
) -> EigenSystem:
    """The K algebraically smallest eigenpairs of the operator.

    method: "lanczos" (default for K << n), "dense" (full symmetric
    eigendecomposition of the materialized matrix), or "auto".
    Raises ConvergenceFailure if residuals do not reach tol within the
    iteration cap (40 K matvecs).
    """
    n = op.n
    if not 1 <= K <= n:
        raise ValueError(f"need 1 <= K <= {n}, got {K}")
    if tol <= 0:
        raise ValueError(f"need tol > 0, got {tol}")
    if method == "auto":
        method = "dense" if (K > n // 3 or n <= 128) else "lanczos"

    if method == "dense":
        lam, vecs = scipy.linalg.eigh(op.dense_matrix())
        lam, vecs = lam[:K], vecs[:, :K]
    elif method == "lanczos":
        lam, vecs, _ = _lanczos_flipped(op, K, tol, seed, max_iter=40 * K)
        order = np.argsort(lam)
        lam, vecs = lam[order], vecs[:, order]
    else:
        raise ValueError(f"unknown method: {method!r}")

    # Euclidean-orthonormal Ritz vectors -> G_n-orthonormal columns
    vecs = vecs * np.sqrt(n)
    vecs /= np.linalg.norm(vecs, axis=0) / np.sqrt(n)
    lam = np.maximum(lam, 0.0)  # clip tiny negative roundoff in the kernel mode

    residuals = np.array(
        [gn_norm(op.matvec(vecs[:, i]) - lam[i] * vecs[:, i]) for i in range(K)]
    )
    scale = max(float(lam[-1]), 1.0)
    if np.any(residuals > tol * scale):
        raise ConvergenceFailure(
            f"residuals {residuals.max():.3e} exceed tol*scale {tol * scale:.3e}",
            residuals,
        )
    return EigenSystem(eigenvalues=lam, eigenvectors=vecs)


def multiplicity_groups(
    eigenvalues: Sequence[float], rel_gap: float = 1e-3
) -> list[list[int]]:
    """Group indices of (near-)repeated eigenvalues.

    Consecutive eigenvalues join a group when their gap is below
    rel_gap * max(1, lambda).
    """
    groups: list[list[int]] = []
    for i, lam in enumerate(eigenvalues):
        if groups and lam - eigenvalues[groups[-1][-1]] < rel_gap * max(1.0, lam):
            groups[-1].append(i)
        else:
            groups.append([i])
    return groups


def project_eigenfunctions(
    pairs: Sequence[ContinuumEigenpair], points: PointCloud | np.ndarray
) -> list[np.ndarray]:
    """P_n phi_i for each continuum eigenfunction: values at the samples."""
    x = points.points if isinstance(points, PointCloud) else points
    return [p.evaluate(x) for p in pairs]


def align_to_continuum(
    discrete: EigenSystem,
    projected: Sequence[np.ndarray],
    groups: Sequence[Sequence[int]],
) -> EigenSystem:
    """Rotate discrete eigenvectors toward the projected continuum basis.

    Within each multiplicity group, solves orthogonal Procrustes on the
    cross-Gram matrix in the G_n inner product; for a simple eigenvalue this
    reduces to a sign flip making <phi^n, P_n phi>_{G_n} >= 0. Eigenvalues
    and the span of each group are unchanged.
    """
    if len(projected) != discrete.count:
        raise ValueError(
            f"projected count {len(projected)} != discrete count {discrete.count}"
        )
    covered = sorted(i for g in groups for i in g)
    if covered != list(range(discrete.count)):
        raise ValueError("multiplicity groups must partition 0..K-1")
    n = discrete.n
    vecs = discrete.eigenvectors.copy()
    for g in groups:
        g = list(g)
        Q = vecs[:, g]
        P = np.column_stack([projected[i] for i in g])
        if P.shape[0] != n:
            raise ValueError("projected vector length mismatch")
        cross = (Q.T @ P) / n
        if len(g) == 1:
            if cross[0, 0] < 0:
                vecs[:, g[0]] = -vecs[:, g[0]]
            continue
        u, _, vt = np.linalg.svd(cross)
        vecs[:, g] = Q @ (u @ vt)
    return discrete.with_vectors(vecs)


def eigen_errors(
    aligned: EigenSystem,
    continuum: Sequence[ContinuumEigenpair],
    points: PointCloud | np.ndarray,
):
    """Per-index (|lambda_i - lambda_i^n|, ||P_n phi_i - phi_i^n||_{G_n})."""
    x = points.points if isinstance(points, PointCloud) else points
    k = min(aligned.count, len(continuum))
    lam_err = np.empty(k)
    vec_err = np.empty(k)
    for i in range(k):
        lam_err[i] = abs(continuum[i].eigenvalue - aligned.eigenvalues[i])
        vec_err[i] = gn_norm(continuum[i].evaluate(x) - aligned.eigenvectors[:, i])
    return lam_err, vec_err


def hoeffding_check(
    f: Callable[[np.ndarray], np.ndarray],
    g: Callable[[np.ndarray], np.ndarray],
    manifold: ManifoldModel,
    n: int,
    trials: int,
    seed: int,
) -> float:
    """Empirical violation rate of the Monte Carlo inner-product bound.

    The deviation |<P_n f, P_n g>_{G_n} - <f, g>_{L2}| is compared against
    sqrt(18 ln n / n) * sup|fg| per trial; sup and the L2 inner product are
    taken on the manifold's dense quadrature grid.
    """
    if trials < 1:
        raise ValueError(f"need trials >= 1, got {trials}")
    grid, w = quadrature_nodes(manifold)
    fg = f(grid) * g(grid)
    exact = float(np.sum(w * fg))
    sup = float(np.max(np.abs(fg)))
    bound = np.sqrt(18.0 * np.log(n) / n) * sup
    violations = 0
    for trial in range(trials):
        cloud = sample_uniform(manifold, n, seed + trial)
        dev = abs(gn_inner(f(cloud.points), g(cloud.points)) - exact)
        if dev > bound:
            violations += 1
    return violations / trials
