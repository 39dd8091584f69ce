"""Spectral filters: frequency responses on [0, inf) with class checkers.

A filter is its frequency response plus declared metadata. The
non-amplifying check (sup |h| <= 1) and the Lipschitz estimate are
grid-based on [0, lambda_max]; only values at realized eigenvalues matter
downstream, so a grid is adequate.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np


@dataclass(frozen=True)
class SpectralFilter:
    """Frequency response lambda -> h(lambda) with declared bounds."""

    name: str
    response: Callable[[np.ndarray], np.ndarray]
    declared_sup: float = 1.0
    declared_lipschitz: float = 1.0

    def __call__(self, lam):
        return self.evaluate(lam)

    def evaluate(self, lam):
        """Evaluate the response; lam may be scalar or array, all >= 0."""
        arr = np.asarray(lam, dtype=float)
        if np.any(arr < 0):
            raise ValueError("filter evaluated at negative frequency")
        out = self.response(arr)
        return float(out) if np.isscalar(lam) or arr.ndim == 0 else np.asarray(out)


def exponential_filter() -> SpectralFilter:
    """h(lambda) = exp(-lambda); non-amplifying, 1-Lipschitz."""
    return SpectralFilter("exponential", lambda lam: np.exp(-lam))


def identity_filter() -> SpectralFilter:
    """h(lambda) = 1; the all-pass filter."""
    return SpectralFilter("identity", lambda lam: np.ones_like(lam), declared_lipschitz=0.0)


def constant_filter(value: float = 1.0) -> SpectralFilter:
    return SpectralFilter(
        f"constant({value})",
        lambda lam, v=value: np.full_like(lam, v),
        declared_sup=abs(value),
        declared_lipschitz=0.0,
    )


def tent_filter(center: float = 3.0) -> SpectralFilter:
    """h(lambda) = max(0, 1 - |lambda - center|)."""
    return SpectralFilter(
        f"tent({center})",
        lambda lam, c=center: np.maximum(0.0, 1.0 - np.abs(lam - c)),
    )


def polynomial_filter(coeffs) -> SpectralFilter:
    """Polynomial in lambda (degree <= 3), clipped to [-1, 1]."""
    coeffs = tuple(float(c) for c in coeffs)
    if len(coeffs) > 4:
        raise ValueError("polynomial filters support degree <= 3")

    def resp(lam, coeffs=coeffs):
        out = np.zeros_like(lam)
        for c in reversed(coeffs):
            out = out * lam + c
        return np.clip(out, -1.0, 1.0)

    return SpectralFilter(f"poly{coeffs}", resp, declared_lipschitz=float("inf"))


def check_nonamplifying(h: SpectralFilter, lam_max: float, grid_size: int = 2048):
    """Grid check of sup |h| <= 1; returns (ok, measured_sup)."""
    if grid_size < 2:
        raise ValueError(f"need grid_size >= 2, got {grid_size}")
    grid = np.linspace(0.0, lam_max, grid_size)
    sup = float(np.max(np.abs(h.evaluate(grid))))
    return sup <= 1.0 + 1e-12, sup


def estimate_lipschitz(h: SpectralFilter, lam_max: float, grid_size: int = 2048) -> float:
    """Max difference quotient over adjacent grid pairs (lower bound on C)."""
    if grid_size < 3:
        raise ValueError(f"need grid_size >= 3, got {grid_size}")
    grid = np.linspace(0.0, lam_max, grid_size)
    vals = h.evaluate(grid)
    return float(np.max(np.abs(np.diff(vals)) / np.diff(grid)))


def filter_from_config(spec: dict) -> SpectralFilter:
    """Build a filter from a config entry: {"family": ..., params...}."""
    spec = dict(spec)
    family = spec.pop("family", None)
    if family == "exponential":
        builder = lambda: exponential_filter()
    elif family == "identity":
        builder = lambda: identity_filter()
    elif family == "constant":
        builder = lambda: constant_filter(spec.pop("value", 1.0))
    elif family == "tent":
        builder = lambda: tent_filter(spec.pop("center", 3.0))
    elif family == "polynomial":
        builder = lambda: polynomial_filter(spec.pop("coefficients"))
    else:
        raise ValueError(f"unknown filter family: {family!r}")
    out = builder()
    if spec:
        raise ValueError(f"unknown filter parameters: {sorted(spec)}")
    return out
