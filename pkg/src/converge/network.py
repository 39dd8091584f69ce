"""Manifold neural network forward passes, discrete and continuum.

The discrete pass runs on a graph-Laplacian EigenSystem; the continuum pass
runs on analytic eigenpairs and is exact for bandlimited inputs through the
first nonlinearity. Intermediate features of deeper networks are re-expanded
onto a truncated eigenbasis by manifold quadrature. The two passes are
compared by summing per-feature G_n norms of the difference at the sample
points.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .filters import SpectralFilter
from .manifolds import ContinuumEigenpair, ManifoldModel, PointCloud, quadrature_nodes
from .spectral import EigenSystem, gn_norm

NONLINEARITIES = {
    "abs": np.abs,
    "relu": lambda x: np.maximum(x, 0.0),
    "identity": lambda x: x,
}

DEFAULT_REEXPANSION_MODES = 64


@dataclass(frozen=True)
class NetworkSpec:
    """Layer widths F_0..F_L, a complete filter bank, and a nonlinearity.

    filters[l][p][q] is the filter feeding output feature p of layer l+1
    from input feature q; the bank must contain exactly F_{l+1} x F_l
    filters per layer.
    """

    widths: tuple[int, ...]
    filters: tuple[tuple[tuple[SpectralFilter, ...], ...], ...]
    nonlinearity: str = "abs"

    def __post_init__(self):
        if len(self.widths) < 2:
            raise ValueError("need at least one layer (two width entries)")
        if any(w < 1 for w in self.widths):
            raise ValueError("widths must be positive")
        if self.nonlinearity not in NONLINEARITIES:
            raise ValueError(f"unknown nonlinearity: {self.nonlinearity!r}")
        if len(self.filters) != self.depth:
            raise ValueError(
                f"filter bank has {len(self.filters)} layers, expected {self.depth}"
            )
        for l, bank in enumerate(self.filters):
            if len(bank) != self.widths[l + 1] or any(
                len(row) != self.widths[l] for row in bank
            ):
                raise ValueError(f"incomplete filter bank at layer {l + 1}")

    @property
    def depth(self) -> int:
        return len(self.widths) - 1

    @property
    def sigma(self):
        return NONLINEARITIES[self.nonlinearity]


def single_filter_network(h: SpectralFilter, nonlinearity: str = "abs") -> NetworkSpec:
    """One layer, one input feature, one output feature."""
    return NetworkSpec(widths=(1, 1), filters=(((h,),),), nonlinearity=nonlinearity)


def filter_apply_discrete(
    h: SpectralFilter, eig: EigenSystem, x: np.ndarray
) -> np.ndarray:
    """h(L_n) x truncated to the eigensystem's K modes.

    Returns sum_i h(lambda_i^n) <x, phi_i^n>_{G_n} phi_i^n, using the
    discrete eigenvalues.
    """
    if len(x) != eig.n:
        raise ValueError(f"vector length {len(x)} != point count {eig.n}")
    coeffs = (eig.eigenvectors.T @ x) / eig.n
    return eig.eigenvectors @ (h.evaluate(eig.eigenvalues) * coeffs)


def forward_discrete(
    net: NetworkSpec, eig: EigenSystem, x0: np.ndarray
) -> np.ndarray:
    """Run the discretized network: x_l^p = sigma(sum_q h_l^pq(L_n) x_{l-1}^q).

    x0 has shape (F_0, n); the result has shape (F_L, n).
    """
    x0 = np.atleast_2d(np.asarray(x0, dtype=float))
    if x0.shape[0] != net.widths[0]:
        raise ValueError(f"input has {x0.shape[0]} features, expected {net.widths[0]}")
    sigma = net.sigma
    x = x0
    for bank in net.filters:
        x = np.stack(
            [
                sigma(sum(filter_apply_discrete(h, eig, xq) for h, xq in zip(row, x)))
                for row in bank
            ]
        )
    return x


@dataclass
class ContinuumOutput:
    """Continuum forward pass projected to the sample points, with metadata."""

    values: np.ndarray  # (F_L, n)
    quadrature_residuals: list[float] = field(default_factory=list)
    feature_l2_norms: list[float] = field(default_factory=list)
    feature_sup_norms: list[float] = field(default_factory=list)


def forward_continuum(
    net: NetworkSpec,
    manifold: ManifoldModel,
    eigenpairs: Sequence[ContinuumEigenpair],
    coefficients: np.ndarray,
    points: PointCloud,
    reexpansion_modes: int = DEFAULT_REEXPANSION_MODES,
) -> ContinuumOutput:
    """Exact continuum network evaluated at the sample points (P_n of Eq. output).

    coefficients has shape (F_0, kappa+1): each input feature is bandlimited
    in the provided eigenbasis. Filters act diagonally on coefficients with
    the continuum eigenvalues; the final nonlinearity is applied pointwise at
    the sample points, which is exact. For hidden layers with a nonlinear
    sigma, features are re-expanded onto the first `reexpansion_modes`
    eigenpairs via manifold quadrature and the dropped mass is recorded as a
    quadrature residual.
    """
    coeffs = np.atleast_2d(np.asarray(coefficients, dtype=float))
    if coeffs.shape[0] != net.widths[0]:
        raise ValueError(
            f"input has {coeffs.shape[0]} features, expected {net.widths[0]}"
        )
    if coeffs.shape[1] > len(eigenpairs):
        raise ValueError(
            f"bandwidth {coeffs.shape[1] - 1} exceeds the {len(eigenpairs)} "
            "available eigenpairs"
        )
    sigma = net.sigma
    lam = np.array([p.eigenvalue for p in eigenpairs])
    sample_x = points.points
    out = ContinuumOutput(values=np.empty((net.widths[-1], points.n)))

    grid = grid_w = grid_basis = None  # built lazily, only for re-expansion

    def basis_at(x, count):
        return np.column_stack([eigenpairs[i].evaluate(x) for i in range(count)])

    for l, bank in enumerate(net.filters):
        width_in = coeffs.shape[1]
        filtered = np.stack(
            [
                sum(
                    row[q].evaluate(lam[:width_in]) * coeffs[q]
                    for q in range(len(row))
                )
                for row in bank
            ]
        )
        last = l == net.depth - 1
        if last:
            vals = filtered @ basis_at(sample_x, width_in).T
            out.values = sigma(vals)
            out.feature_l2_norms.extend(
                float(np.linalg.norm(v)) / np.sqrt(points.n) for v in out.values
            )
            out.feature_sup_norms.extend(float(np.max(np.abs(v))) for v in out.values)
        elif net.nonlinearity == "identity":
            coeffs = filtered  # still bandlimited, nothing to re-expand
            vals = filtered @ basis_at(sample_x, width_in).T
            out.feature_l2_norms.extend(float(np.linalg.norm(c)) for c in coeffs)
            out.feature_sup_norms.extend(float(np.max(np.abs(v))) for v in vals)
        else:
            k = min(reexpansion_modes, len(eigenpairs))
            if grid is None:
                grid, grid_w = quadrature_nodes(manifold)
                grid_basis = basis_at(grid, k)
            grid_vals = sigma(filtered @ basis_at(grid, width_in).T)
            coeffs = (grid_vals * grid_w) @ grid_basis
            recon = coeffs @ grid_basis.T
            for gv, rv in zip(grid_vals, recon):
                out.quadrature_residuals.append(
                    float(np.sqrt(np.sum(grid_w * (gv - rv) ** 2)))
                )
                out.feature_l2_norms.append(float(np.sqrt(np.sum(grid_w * gv**2))))
                out.feature_sup_norms.append(float(np.max(np.abs(gv))))
    return out


def mnn_error(discrete_out: np.ndarray, continuum_out) -> float:
    """Sum over output features of ||x_L^q - P_n f_L^q||_{G_n}."""
    cont = continuum_out.values if isinstance(continuum_out, ContinuumOutput) else continuum_out
    disc = np.atleast_2d(np.asarray(discrete_out, dtype=float))
    cont = np.atleast_2d(np.asarray(cont, dtype=float))
    if disc.shape != cont.shape:
        raise ValueError(f"shape mismatch: {disc.shape} vs {cont.shape}")
    return float(sum(gn_norm(d - c) for d, c in zip(disc, cont)))
