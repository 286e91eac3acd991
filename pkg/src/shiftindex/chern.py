"""Topological index of homogenized orbit symbols by Chern-integral quadrature.

The index of an elliptic operator on the mapping torus T^{d+1} is the integral
over the cosphere bundle (radius R) of the odd Chern character densities
tr[(sigma^{-1} d sigma)^{2j-1}] weighted by C_j = (j-1)!/[(2 pi i)^j (2j-1)!].
With the flat metric the Todd form is 1 in degree zero and vanishes in
positive degrees, so only the top-degree term 2j - 1 = 2d + 1 survives.

The cosphere fiber is parametrized by product angles; the integrand is the
pullback of the (2d+1)-form, assembled from central-difference partials of the
window-truncated symbol and an exterior-algebra wedge over the coordinate
slots.  Quadrature is trapezoidal in the periodic coordinates and midpoint in
the polar angles, with a fixed accumulation order for reproducibility.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .symbols import ShiftOperatorSpec, SymbolDomainError, window_indices


class EllipticityLostError(RuntimeError):
    """A symbol sample failed the invertibility margin."""

    def __init__(self, message, location=None):
        super().__init__(message)
        self.location = location


class TraceTailError(RuntimeError):
    """Fiber trace tail too large: trace-class hypotheses fail numerically."""


class UnsupportedDimensionError(ValueError):
    """The topological index needs base dimension > 1."""


def two_pi_i() -> complex:
    return 2.0 * np.pi * 1j


def chern_constant(j: int) -> complex:
    """C_j = (j-1)! / [(2 pi i)^j (2j-1)!]."""
    return math.factorial(j - 1) / ((two_pi_i() ** j) * math.factorial(2 * j - 1))


def sphere_point(angles: np.ndarray) -> np.ndarray:
    """Unit vector in R^{d+1} from product angles (alpha, beta_1..beta_{d-1}).

    alpha in [0, 2 pi) is the azimuth of the first two components, each beta
    in (0, pi) opens one further axis; the last component is cos(beta_{d-1}).
    """
    angles = np.asarray(angles, dtype=float)
    nang = angles.shape[-1]
    out = np.zeros(angles.shape[:-1] + (nang + 1,), dtype=float)
    s = np.ones(angles.shape[:-1], dtype=float)
    for i in range(nang - 1, 0, -1):
        out[..., i + 1] = s * np.cos(angles[..., i])
        s = s * np.sin(angles[..., i])
    out[..., 0] = s * np.cos(angles[..., 0])
    out[..., 1] = s * np.sin(angles[..., 0])
    return out


@dataclass(frozen=True)
class MappingTorusGrid:
    """Product quadrature grid on the radius-R cosphere bundle of T^{d+1}.

    Coordinates are ordered (x_1..x_d, t, alpha, beta_1..beta_{d-1}); the
    orientation is this product order.  h is the central-difference step for
    symbol derivatives.
    """

    d: int
    R: float
    base_res: int = 8
    t_res: int = 8
    ang_res: int = 12
    N: int = 16
    h: float = 1.0 / 64.0
    chunk: int = 2048

    @property
    def ncoords(self) -> int:
        return 2 * self.d + 1

    def points(self):
        """(xs, ts, angs) arrays of shape (P, d), (P,), (P, d)."""
        axes = [np.arange(self.base_res) / self.base_res for _ in range(self.d)]
        taxis = np.arange(self.t_res) / self.t_res
        alpha = 2 * np.pi * np.arange(self.ang_res) / self.ang_res
        betas = [(np.arange(self.ang_res) + 0.5) * np.pi / self.ang_res
                 for _ in range(self.d - 1)]
        grids = np.meshgrid(*axes, taxis, alpha, *betas, indexing="ij")
        flat = [g.reshape(-1) for g in grids]
        xs = np.stack(flat[:self.d], axis=-1)
        ts = flat[self.d]
        angs = np.stack(flat[self.d + 1:], axis=-1)
        return xs, ts, angs

    @property
    def cell_weight(self) -> float:
        w = (1.0 / self.base_res) ** self.d * (1.0 / self.t_res)
        w *= (2 * np.pi / self.ang_res) * (np.pi / self.ang_res) ** (self.d - 1)
        return w


@dataclass(frozen=True)
class ToddData:
    """Todd form components by degree 2k.  Flat metric: 1 in degree 0, else 0.

    Carried explicitly so curved-metric extensions can slot in without API
    changes; only the flat case is evaluated.
    """

    components: tuple = (1.0,)

    @classmethod
    def flat(cls, d: int) -> "ToddData":
        return cls((1.0,) + (0.0,) * d)

    @property
    def is_flat(self) -> bool:
        return self.components[0] == 1.0 and not any(self.components[1:])


class SpecSymbolField:
    """Batched evaluator of the homogenized orbit symbol of a shift operator."""

    def __init__(self, spec: ShiftOperatorSpec, R: float, N: int):
        self.spec = spec
        self.R = float(R)
        self.N = int(N)
        self.d = spec.d
        self.size = 2 * (2 * N + 1)

    def batch(self, xs: np.ndarray, ts: np.ndarray, angs: np.ndarray) -> np.ndarray:
        direction = sphere_point(angs)
        xis = self.R * direction[:, :-1]
        taus = self.R * direction[:, -1]
        return orbit_symbol_batch(self.spec, xs, xis, ts, taus, self.N)


class CallableSymbolField:
    """Adapter for hand-built symbols: fn(xs, ts, angs) -> (P, S, S)."""

    def __init__(self, fn: Callable, size: int, d: int):
        self.fn = fn
        self.size = size
        self.d = d

    def batch(self, xs, ts, angs):
        return self.fn(xs, ts, angs)


def reflect_field(field, coord: int):
    """Field with one base coordinate reversed (x_coord -> -x_coord).

    Used to verify that the quadrature sign follows the orientation.
    """

    def fn(xs, ts, angs):
        xs = np.array(xs, dtype=float)
        xs[:, coord] = -xs[:, coord]
        return field.batch(xs, ts, angs)

    out = CallableSymbolField(fn, field.size, field.d)
    out.N = getattr(field, "N", 0)
    return out


def orbit_symbol_batch(spec: ShiftOperatorSpec, xs, xis, ts, taus, N: int) -> np.ndarray:
    """Vectorized zero-boundary orbit symbols, shape (P, 2(2N+1), 2(2N+1))."""
    xs = np.asarray(xs, dtype=float)
    xis = np.asarray(xis, dtype=float)
    ts = np.asarray(ts, dtype=float)
    taus = np.asarray(taus, dtype=float)
    P = xs.shape[0]
    W = 2 * N + 1
    ns = window_indices(N)
    xn = np.mod(xs[:, None, :] + ns[None, :, None] * spec.isometry.theta_array, 1.0)
    s1 = np.zeros((P, W, W), dtype=complex)
    rows = np.arange(W)
    for k, coeff in spec.terms:
        vals = coeff.symbol(xn, xis[:, None, :])
        cols = rows + k
        ok = (cols >= 0) & (cols < W)
        s1[:, rows[ok], cols[ok]] += vals[:, ok]
    s2 = 1j * taus[:, None] + ts[:, None] + ns[None, :].astype(float)
    out = np.zeros((P, 2 * W, 2 * W), dtype=complex)
    out[:, :W, :W] = s1
    out[:, rows, W + rows] = s2
    out[:, W + rows, rows] = -np.conj(s2)
    out[:, W:, W:] = np.conj(np.transpose(s1, (0, 2, 1)))
    return out


@dataclass
class FormField:
    """Sampled symbol and its central-difference partials on a grid chunk."""

    sigma: np.ndarray           # (P, S, S)
    partials: list              # ncoords arrays of shape (P, S, S)
    window: int                 # fiber window N (0 when not fiber-structured)
    min_margin: float

    @property
    def ncoords(self) -> int:
        return len(self.partials)


def build_form_field(field, xs, ts, angs, h: float, margin_tol: float = 1e-8) -> FormField:
    """Evaluate sigma and its 2d+1 partials at the given points.

    Raises EllipticityLostError when a sample is numerically singular (the
    topological index is undefined off elliptic symbols).
    """
    sigma = field.batch(xs, ts, angs)
    svals = np.linalg.svd(sigma, compute_uv=False)
    margins = svals[:, -1] / np.maximum(svals[:, 0], 1e-300)
    i_bad = int(np.argmin(margins))
    if margins[i_bad] < margin_tol:
        raise EllipticityLostError(
            f"symbol not invertible at sample {i_bad}",
            location={"x": xs[i_bad].tolist(), "t": float(ts[i_bad]),
                      "ang": angs[i_bad].tolist()})
    partials = []
    d = xs.shape[1]
    for i in range(d):
        e = np.zeros(d)
        e[i] = h
        partials.append((field.batch(xs + e, ts, angs) -
                         field.batch(xs - e, ts, angs)) / (2 * h))
    partials.append((field.batch(xs, ts + h, angs) -
                     field.batch(xs, ts - h, angs)) / (2 * h))
    for i in range(angs.shape[1]):
        e = np.zeros(angs.shape[1])
        e[i] = h
        partials.append((field.batch(xs, ts, angs + e) -
                         field.batch(xs, ts, angs - e)) / (2 * h))
    N = getattr(field, "N", 0)
    return FormField(sigma=sigma, partials=partials, window=N,
                     min_margin=float(np.min(svals[:, -1])))


def _merge_sign(a: tuple, b: tuple) -> int:
    """Sign of sorting the concatenation of two disjoint sorted tuples."""
    inv = sum(1 for x in a for y in b if x > y)
    return -1 if inv % 2 else 1


def wedge(F: dict, G: dict) -> dict:
    """Wedge of matrix-valued forms given as {sorted index tuple: batch matrix}."""
    out: dict = {}
    for sa, A in F.items():
        for sb, B in G.items():
            if set(sa) & set(sb):
                continue
            key = tuple(sorted(sa + sb))
            term = _merge_sign(sa, sb) * np.matmul(A, B)
            if key in out:
                out[key] += term
            else:
                out[key] = term
    return out


def alternating_trace(Ms: Sequence[np.ndarray], subset: Sequence[int],
                      tail_mask: Optional[np.ndarray] = None):
    """Coefficient of the wedge basis element `subset` in tr[(sum M_i e_i)^p].

    p = len(subset); returns (density, tail_density) with the latter the part
    of the fiber trace carried by `tail_mask` rows (None -> 0).
    """
    idx = list(subset)
    p = len(idx)
    forms = {(i,): Ms[i] for i in idx}
    left = dict(forms)
    for _ in range(p - p // 2 - 1):
        left = wedge(left, forms)
    right = dict(forms)
    for _ in range(p // 2 - 1):
        right = wedge(right, forms)
    if p // 2 == 0:
        right = None
    P = Ms[idx[0]].shape[0]
    density = np.zeros(P, dtype=complex)
    tail = np.zeros(P, dtype=complex)
    if right is None:
        M = left[tuple(sorted(idx))]
        diag = np.einsum("pii->pi", M)
        density = diag.sum(axis=1)
        if tail_mask is not None:
            tail = diag[:, tail_mask].sum(axis=1)
        return density, tail
    for sa, A in left.items():
        sb = tuple(sorted(set(idx) - set(sa)))
        B = right.get(sb)
        if B is None:
            continue
        sign = _merge_sign(sa, sb)
        rowwise = np.einsum("pij,pji->pi", A, B)
        density += sign * rowwise.sum(axis=1)
        if tail_mask is not None:
            tail += sign * rowwise[:, tail_mask].sum(axis=1)
    return density, tail


def _tail_mask(size: int, N: int) -> Optional[np.ndarray]:
    if N <= 0 or size != 2 * (2 * N + 1):
        return None
    ns = np.abs(window_indices(N))
    return np.concatenate([ns, ns]) > N // 2


def chern_integrand(form: FormField, j: int):
    """Top-degree density of tr[(sigma^{-1} d sigma)^{2j-1}] per grid point.

    Against the flat Todd form only 2j - 1 = ncoords contributes; lower odd
    degrees return an identically zero density.
    """
    p = 2 * j - 1
    n = form.ncoords
    if p > n:
        raise ValueError(f"degree {p} exceeds the {n}-dimensional cosphere bundle")
    P = form.sigma.shape[0]
    if p != n:
        return np.zeros(P, dtype=complex), 0.0
    Ms = [np.linalg.solve(form.sigma, dp) for dp in form.partials]
    mask = _tail_mask(form.sigma.shape[1], form.window)
    density, tail = alternating_trace(Ms, tuple(range(n)), mask)
    tail_norm = float(np.mean(np.abs(tail))) if mask is not None else 0.0
    return density, tail_norm


def default_j_range(d: int) -> list:
    """All j with d + 1 <= 2j - 1 <= 2d + 1."""
    return [j for j in range(1, d + 2) if d + 1 <= 2 * j - 1 <= 2 * d + 1]


def topological_index(field, grid: MappingTorusGrid,
                      j_range: Optional[Sequence[int]] = None,
                      trace_tail_tol: float = 0.05,
                      margin_tol: float = 1e-8,
                      todd: Optional[ToddData] = None) -> dict:
    """Quadrature of the Chern-integral index over the cosphere bundle.

    `field` is a SpecSymbolField / CallableSymbolField (batched evaluator of a
    degree-zero elliptic symbol).  Returns the report dictionary with per-j
    terms, the real total, its rounding, and the imaginary residual.
    """
    if grid.d < 2:
        raise UnsupportedDimensionError(
            "topological index requires base dimension > 1")
    if todd is None:
        todd = ToddData.flat(grid.d)
    if not todd.is_flat:
        raise NotImplementedError("only the flat Todd form is evaluated")
    if j_range is None:
        j_range = default_j_range(grid.d)
    xs, ts, angs = grid.points()
    P = xs.shape[0]
    totals = {j: 0.0 + 0.0j for j in j_range}
    tail_max = 0.0
    density_scale = 0.0
    for start in range(0, P, grid.chunk):
        sl = slice(start, min(start + grid.chunk, P))
        form = build_form_field(field, xs[sl], ts[sl], angs[sl], grid.h,
                                margin_tol=margin_tol)
        for j in j_range:
            density, tail_norm = chern_integrand(form, j)
            totals[j] += density.sum() * grid.cell_weight
            tail_max = max(tail_max, tail_norm)
            if density.size:
                density_scale = max(density_scale, float(np.max(np.abs(density))))
    if density_scale > 0 and tail_max > trace_tail_tol * density_scale:
        raise TraceTailError(
            f"fiber trace tail {tail_max:.3e} exceeds tolerance against "
            f"density scale {density_scale:.3e}")
    j_terms = []
    total = 0.0 + 0.0j
    for j in j_range:
        val = chern_constant(j) * totals[j]
        j_terms.append({"j": int(j), "value_re": float(val.real),
                        "value_im": float(val.imag)})
        total += val
    return {
        "j_terms": j_terms,
        "total": float(total.real),
        "rounded": int(np.round(total.real)),
        "imag_residual": float(abs(total.imag)),
        "grid": {"d": grid.d, "base_res": grid.base_res, "t_res": grid.t_res,
                 "ang_res": grid.ang_res, "R": grid.R},
        "N": int(grid.N),
        "h": float(grid.h),
        "trace_tail": float(tail_max),
    }


def form_components(field, x, t, ang, subsets, h: float) -> dict:
    """Pointwise coefficients of tr[(sigma^{-1} d sigma)^p] for given subsets."""
    xs = np.asarray(x, dtype=float)[None, :]
    ts = np.asarray([t], dtype=float)
    angs = np.asarray(ang, dtype=float)[None, :]
    form = build_form_field(field, xs, ts, angs, h)
    Ms = [np.linalg.solve(form.sigma, dp) for dp in form.partials]
    out = {}
    for S in subsets:
        density, _ = alternating_trace(Ms, tuple(S))
        out[tuple(S)] = complex(density[0])
    return out


def _offset_point(x, t, ang, coord, delta, d):
    x = np.array(x, dtype=float)
    ang = np.array(ang, dtype=float)
    t = float(t)
    if coord < d:
        x[coord] += delta
    elif coord == d:
        t += delta
    else:
        ang[coord - d - 1] += delta
    return x, t, ang


def closedness_residual(field, points, j: int, h: float) -> float:
    """Max norm of the discrete exterior derivative of tr[(s^{-1}ds)^{2j-1}].

    The form is closed; the discrete residual measures pure discretization
    error and must vanish under h-refinement.
    """
    p = 2 * j - 1
    d = (len(points[0][0]))
    ncoords = 2 * d + 1
    coords = range(ncoords)
    residual = 0.0
    for (x, t, ang) in points:
        for T in itertools.combinations(coords, p + 1):
            val = 0.0 + 0.0j
            for pos, a in enumerate(T):
                S = tuple(i for i in T if i != a)
                xp, tp, ap = _offset_point(x, t, ang, a, +h, d)
                xm, tm, am = _offset_point(x, t, ang, a, -h, d)
                fp = form_components(field, xp, tp, ap, [S], h)[S]
                fm = form_components(field, xm, tm, am, [S], h)[S]
                val += (-1) ** pos * (fp - fm) / (2 * h)
            residual = max(residual, abs(val))
    return residual


def homotopy_invariance_check(field0, field1, grid: MappingTorusGrid,
                              steps: int = 5, j_range=None) -> dict:
    """Topological index along the straight-line symbol path; max deviation.

    Raises EllipticityLostError (with the failing step) when a path point
    loses invertibility.
    """
    values = []
    for i in range(steps):
        lam = i / (steps - 1) if steps > 1 else 0.0
        size = field0.size

        def fn(xs, ts, angs, lam=lam):
            return (1 - lam) * field0.batch(xs, ts, angs) + lam * field1.batch(xs, ts, angs)

        fld = CallableSymbolField(fn, size, grid.d)
        fld.N = getattr(field0, "N", 0)
        try:
            rep = topological_index(fld, grid, j_range=j_range)
        except EllipticityLostError as err:
            raise EllipticityLostError(
                f"ellipticity lost at path step {i}", location=err.location) from err
        values.append(rep["total"])
    dev = max(values) - min(values) if values else 0.0
    return {"values": values, "max_deviation": float(dev)}
