"""Quantified ellipticity checks via singular values of truncated symbols.

Invertibility of the operator-valued symbol on l2(Z) is certified by sweeping
the cosphere bundle on a grid and tracking the smallest singular value of the
window truncation across an increasing window schedule.  The sweeps close the
shift periodically across the window edge: for the bi-infinite shift this is
the truncation whose smallest singular value converges to the true spectral
gap (the zero-boundary section is polluted by winding, e.g. 1 + b*shift with
|b| > 1 looks degenerate even though the l2(Z) operator is invertible).
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .symbols import (
    ShiftOperatorSpec,
    evaluate_symbol,
    orbit_symbol,
    weight_vector,
)

DEFAULT_N_SCHEDULE = (8, 16, 32, 64)
DEFAULT_R_SCHEDULE = (1.0, 2.0, 4.0, 8.0, 16.0)
STABILIZE_REL = 0.1
DECAY_RATIO = 0.7


def min_singular_value(sigma: np.ndarray) -> float:
    """Smallest singular value of a square symbol matrix."""
    sigma = np.asarray(sigma)
    if sigma.shape[0] != sigma.shape[1]:
        raise ValueError("expected a square matrix")
    return float(np.linalg.svd(sigma, compute_uv=False)[-1])


def base_grid(d: int, res: int) -> np.ndarray:
    """Uniform grid on T^d, res points per coordinate, shape (res^d, d)."""
    axes = [np.arange(res) / res for _ in range(d)]
    return np.array(list(itertools.product(*axes)), dtype=float).reshape(-1, d)


def sphere_directions(dim: int, res: int) -> np.ndarray:
    """Points on the unit sphere S^{dim-1}, product-angle grid, >= 4 per angle."""
    res = max(res, 4)
    if dim == 1:
        return np.array([[1.0], [-1.0]])
    if dim == 2:
        ang = 2 * np.pi * np.arange(res) / res
        return np.stack([np.cos(ang), np.sin(ang)], axis=-1)
    # product of one polar midpoint grid per extra dimension and a full circle
    polar = [(np.arange(res // 2) + 0.5) * np.pi / (res // 2) for _ in range(dim - 2)]
    azim = 2 * np.pi * np.arange(res) / res
    pts = []
    for angs in itertools.product(*polar, azim):
        vec = []
        s = 1.0
        for a in angs[:-1]:
            vec.append(s * np.cos(a))
            s *= np.sin(a)
        vec.append(s * np.cos(angs[-1]))
        vec.append(s * np.sin(angs[-1]))
        pts.append(vec)
    return np.array(pts, dtype=float)


@dataclass(frozen=True)
class CosphereGrid:
    """Sample points for symbol sweeps: base points and unit covector directions."""

    xs: np.ndarray          # (P, d) base points on T^d
    directions: np.ndarray  # (Q, dim) unit covectors
    ts: Optional[np.ndarray] = None  # mapping-torus fiber samples in [0, 1)

    @classmethod
    def for_torus(cls, d: int, x_res: int = 16, dir_res: int = 16) -> "CosphereGrid":
        return cls(xs=base_grid(d, x_res), directions=sphere_directions(d, dir_res))

    @classmethod
    def for_orbit(cls, d: int, x_res: int = 8, dir_res: int = 8, t_res: int = 8) -> "CosphereGrid":
        return cls(
            xs=base_grid(d, x_res),
            directions=sphere_directions(d + 1, dir_res),
            ts=np.arange(t_res) / t_res,
        )


@dataclass
class EllipticityReport:
    is_elliptic: bool
    status: str                  # "elliptic" | "not_elliptic" | "inconclusive"
    min_sv: float
    argmin: dict
    trace: list
    max_sv: float = 0.0
    R_found: Optional[float] = None
    profile: list = field(default_factory=list)

    def to_json(self) -> dict:
        return {
            "is_elliptic": bool(self.is_elliptic),
            "status": self.status,
            "min_sv": float(self.min_sv),
            "argmin": self.argmin,
            "trace": [[int(n), float(v)] for n, v in self.trace],
            "R_found": None if self.R_found is None else float(self.R_found),
        }


def _verdict(trace, min_sv, max_sv, tol):
    """Classify a window trace: stabilized, decaying-to-zero, or erratic."""
    vals = [v for _, v in trace]
    scale = max(max_sv, 1e-300)
    if len(vals) >= 2:
        a, b = vals[-2], vals[-1]
        denom = max(b, scale * 1e-12)
        if abs(b - a) / denom < STABILIZE_REL:
            ok = min_sv >= tol * scale
            return ("elliptic" if ok else "not_elliptic"), ok
        decreasing = all(vals[i + 1] <= vals[i] * (1 + 1e-9) for i in range(len(vals) - 1))
        if decreasing and b <= DECAY_RATIO * a:
            # geometric decay toward zero: conclusive degeneracy
            return "not_elliptic", False
    return "inconclusive", False


def check_elliptic(spec: ShiftOperatorSpec, grid: Optional[CosphereGrid] = None,
                   N_schedule: Sequence[int] = DEFAULT_N_SCHEDULE,
                   tol: float = 1e-6) -> EllipticityReport:
    """Sweep sigma(D) over the cosphere grid and certify pointwise invertibility.

    `tol` is relative to the largest singular value seen on the sweep.
    """
    if grid is None:
        grid = CosphereGrid.for_torus(spec.d)
    if list(N_schedule) != sorted(N_schedule):
        raise ValueError("N_schedule must be increasing")
    trace = []
    argmin = {}
    min_last = np.inf
    max_last = 0.0
    for N in N_schedule:
        level_min = np.inf
        level_max = 0.0
        for x in grid.xs:
            for xi in grid.directions:
                svals = np.linalg.svd(
                    evaluate_symbol(spec, x, xi, N, boundary="periodic"),
                    compute_uv=False)
                level_max = max(level_max, float(svals[0]))
                sv = float(svals[-1])
                if sv < level_min:
                    level_min = sv
                    if N == N_schedule[-1]:
                        argmin = {"x": list(map(float, x)), "xi": list(map(float, xi))}
        trace.append((N, level_min))
        min_last, max_last = level_min, level_max
    status, ok = _verdict(trace, min_last, max_last, tol)
    return EllipticityReport(is_elliptic=ok, status=status, min_sv=min_last,
                             argmin=argmin, trace=trace, max_sv=max_last)


def check_elliptic_orbit(spec: ShiftOperatorSpec, grid: Optional[CosphereGrid] = None,
                         R_schedule: Sequence[float] = DEFAULT_R_SCHEDULE,
                         N_schedule: Sequence[int] = DEFAULT_N_SCHEDULE,
                         tol: float = 0.5) -> EllipticityReport:
    """Find the smallest R with the orbit symbol uniformly invertible on |(xi,tau)| = R.

    `tol` is an absolute lower bound on the smallest singular value.  Assumes
    the torus symbol already passed `check_elliptic`.
    """
    if grid is None:
        grid = CosphereGrid.for_orbit(spec.d)
    ts = grid.ts if grid.ts is not None else np.array([0.0])
    profile = []
    last_report = None
    for R in R_schedule:
        trace = []
        argmin = {}
        min_last = np.inf
        max_last = 0.0
        for N in N_schedule:
            level_min = np.inf
            level_max = 0.0
            for x in grid.xs:
                for direction in grid.directions:
                    xi = R * direction[:-1]
                    tau = R * direction[-1]
                    for t in ts:
                        svals = np.linalg.svd(
                            orbit_symbol(spec, x, xi, float(t), float(tau), N,
                                         boundary="periodic"),
                            compute_uv=False)
                        level_max = max(level_max, float(svals[0]))
                        sv = float(svals[-1])
                        if sv < level_min:
                            level_min = sv
                            if N == N_schedule[-1]:
                                argmin = {"x": list(map(float, x)),
                                          "xi": list(map(float, xi)),
                                          "t": float(t), "tau": float(tau)}
            trace.append((N, level_min))
            min_last, max_last = level_min, level_max
        profile.append((R, min_last))
        stabilized = len(trace) >= 2 and abs(trace[-1][1] - trace[-2][1]) <= \
            STABILIZE_REL * max(trace[-1][1], max_last * 1e-12)
        report = EllipticityReport(is_elliptic=False, status="inconclusive",
                                   min_sv=min_last, argmin=argmin, trace=trace,
                                   max_sv=max_last, profile=profile)
        if stabilized and min_last >= tol:
            report.is_elliptic = True
            report.status = "elliptic"
            report.R_found = R
            return report
        last_report = report
    last_report.status = "no_R_found"
    return last_report


def rescale_sigma_s(sigma: np.ndarray, delta: np.ndarray, s: float) -> np.ndarray:
    """delta^{s-1} sigma delta^{-s}, the order-reduced conjugated symbol.

    `delta` is the weight vector on the window; block symbols (twice the
    window size) reuse the weights on each block.
    """
    sigma = np.asarray(sigma, dtype=complex)
    delta = np.asarray(delta, dtype=float)
    if sigma.shape[0] == 2 * delta.size:
        delta = np.concatenate([delta, delta])
    if sigma.shape[0] != delta.size:
        raise ValueError("weight vector does not match symbol size")
    return (delta ** (s - 1.0))[:, None] * sigma * (delta ** (-s))[None, :]


def rescaled_orbit_min_sv(spec: ShiftOperatorSpec, x, xi, t, tau, N, s,
                          boundary: str = "periodic") -> float:
    """min sv of sigma_s for the orbit symbol at one sweep point."""
    xi = np.atleast_1d(np.asarray(xi, dtype=float))
    sigma = orbit_symbol(spec, x, xi, t, tau, N, boundary=boundary)
    delta = weight_vector(float(np.sum(xi ** 2) + tau ** 2), N)
    return min_singular_value(rescale_sigma_s(sigma, delta, s))
