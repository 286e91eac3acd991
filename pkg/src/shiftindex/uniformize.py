"""Isomorphisms between the cylinder, the fibered orbit space, and the line bundle.

Functions on the cylinder T^d x R (decaying in t) are re-read as sections over
the mapping torus with l2(Z) fiber via (I phi)(x, t, n) = phi(x + n theta, t + n),
as sections of the line bundle gamma over the extra circle via the fiberwise
Fourier series K, and directly via the summation map J.  Everything operates
on uniform grids; x-shifts by theta use the FFT phase shift, which is an exact
relabeling when theta is grid-rational and trigonometric interpolation
otherwise.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

DECAY_TOL = 1e-12


class DecayError(ValueError):
    """Sample does not decay at the ends of the t-range."""


class GridError(ValueError):
    """Incompatible grid parameters."""


@dataclass
class CylinderSample:
    """phi sampled on (x in T^d) x (t in [t0, t0 + len)) with uniform grids.

    values has shape (G,)*d + (T,), t grid t0 + j/steps_per_unit; t0 and the
    t-extent are whole integers so that integer t-shifts are index shifts.
    """

    values: np.ndarray
    d: int
    steps_per_unit: int
    t0: int

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=complex)
        if self.values.ndim != self.d + 1:
            raise GridError("values must have one axis per torus coordinate plus t")
        if self.values.shape[-1] % self.steps_per_unit != 0:
            raise GridError("t-extent must cover whole unit intervals")

    @property
    def x_res(self) -> int:
        return self.values.shape[0]

    @property
    def t_units(self) -> int:
        return self.values.shape[-1] // self.steps_per_unit

    @property
    def t_grid(self) -> np.ndarray:
        T = self.values.shape[-1]
        return self.t0 + np.arange(T) / self.steps_per_unit

    @property
    def decay_ok(self) -> bool:
        """True when the samples in the first and last unit interval are tiny."""
        m = self.steps_per_unit
        head = np.max(np.abs(self.values[..., :m]))
        tail = np.max(np.abs(self.values[..., -m:]))
        return bool(max(head, tail) < DECAY_TOL)

    def norm(self) -> float:
        w = (1.0 / self.x_res) ** self.d / self.steps_per_unit
        return float(np.sqrt(np.sum(np.abs(self.values) ** 2) * w))


@dataclass
class FiberedSample:
    """u(x, t, n) with t in [0, 1) and fiber index n in [-N_f, N_f]."""

    values: np.ndarray  # shape (G,)*d + (steps_per_unit, 2*N_f+1)
    d: int
    steps_per_unit: int
    N_f: int

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=complex)
        if self.values.shape[-1] != 2 * self.N_f + 1:
            raise GridError("fiber axis must have 2*N_f+1 entries")

    @property
    def x_res(self) -> int:
        return self.values.shape[0]

    def norm(self) -> float:
        w = (1.0 / self.x_res) ** self.d / self.steps_per_unit
        return float(np.sqrt(np.sum(np.abs(self.values) ** 2) * w))


@dataclass
class GammaSample:
    """v(x, t, phi) with phi on a uniform grid over [0, 2 pi).

    Sections of gamma obey v(x, t+1, phi) = v(x, t, phi) e^{-i phi}; the
    measured violation is stored in quasi_defect when the t-range covers more
    than one unit.
    """

    values: np.ndarray  # shape (G,)*d + (T, M_phi)
    d: int
    steps_per_unit: int
    quasi_defect: float = 0.0

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=complex)

    @property
    def x_res(self) -> int:
        return self.values.shape[0]

    @property
    def M_phi(self) -> int:
        return self.values.shape[-1]

    def norm(self) -> float:
        # phi carries the normalized measure d phi / (2 pi) times 2 pi, i.e.
        # trapezoid weights 2 pi / M, matching Parseval for the 1/sqrt(2 pi)
        # Fourier convention.
        w = (1.0 / self.x_res) ** self.d / self.steps_per_unit * (2 * np.pi / self.M_phi)
        return float(np.sqrt(np.sum(np.abs(self.values) ** 2) * w))


def make_cylinder_sample(f, d: int, x_res: int, t_half_range: int,
                         steps_per_unit: int) -> CylinderSample:
    """Sample f(x, t) on the default grid, t in [-t_half_range, t_half_range)."""
    axes = [np.arange(x_res) / x_res for _ in range(d)]
    t = -t_half_range + np.arange(2 * t_half_range * steps_per_unit) / steps_per_unit
    mesh = np.meshgrid(*axes, t, indexing="ij")
    return CylinderSample(values=f(*mesh), d=d, steps_per_unit=steps_per_unit,
                          t0=-t_half_range)


def x_shift(values: np.ndarray, shift, d: int) -> np.ndarray:
    """Translate periodically in the torus coordinates by `shift` (per-axis).

    FFT phase multiplication: exact relabeling for grid-rational shifts,
    trigonometric interpolation otherwise.
    """
    out = np.asarray(values, dtype=complex)
    shift = np.atleast_1d(np.asarray(shift, dtype=float))
    for axis in range(d):
        G = out.shape[axis]
        freqs = np.fft.fftfreq(G, d=1.0 / G)
        phase = np.exp(2j * np.pi * freqs * shift[axis])
        shape = [1] * out.ndim
        shape[axis] = G
        out = np.fft.ifft(np.fft.fft(out, axis=axis) * phase.reshape(shape), axis=axis)
    return out


def apply_I(phi: CylinderSample, theta, N_f: int, require_decay: bool = True) -> FiberedSample:
    """(I phi)(x, t, n) = phi(x + n theta, t + n) for t in [0, 1), |n| <= N_f."""
    if require_decay and not phi.decay_ok:
        raise DecayError("cylinder sample does not decay at the t-range ends")
    if N_f > -phi.t0 - 1 or N_f + 1 > phi.t_units + phi.t0:
        raise GridError("insufficient t-range for the requested fiber window")
    m = phi.steps_per_unit
    G = phi.x_res
    slabs = []
    for n in range(-N_f, N_f + 1):
        j0 = (n - phi.t0) * m
        slab = phi.values[..., j0:j0 + m]
        slabs.append(x_shift(slab, n * np.asarray(theta, dtype=float), phi.d))
    values = np.stack(slabs, axis=-1)
    return FiberedSample(values=values, d=phi.d, steps_per_unit=m, N_f=N_f)


def apply_I_inv(u: FiberedSample, theta) -> CylinderSample:
    """Inverse relabeling phi(x, t) = u(x - [t] theta, {t}, [t])."""
    m = u.steps_per_unit
    slabs = []
    for i, n in enumerate(range(-u.N_f, u.N_f + 1)):
        slab = u.values[..., i]
        slabs.append(x_shift(slab, -n * np.asarray(theta, dtype=float), u.d))
    values = np.concatenate(slabs, axis=-1)
    return CylinderSample(values=values, d=u.d, steps_per_unit=m, t0=-u.N_f)


def conjugate_shift_check(phi: CylinderSample, theta, N_f: int) -> float:
    """max |(I T~ phi)(x,t,n) - (I phi)(x,t,n+1)| over interior fiber indices.

    T~ phi(x, t) = phi(x + theta, t + 1): under I the cylinder shift becomes
    the fiber sequence shift.
    """
    m = phi.steps_per_unit
    shifted_vals = x_shift(phi.values, np.asarray(theta, dtype=float), phi.d)
    shifted = CylinderSample(values=np.concatenate(
        [shifted_vals[..., m:], np.zeros_like(shifted_vals[..., :m])], axis=-1),
        d=phi.d, steps_per_unit=m, t0=phi.t0)
    lhs = apply_I(shifted, theta, N_f - 1, require_decay=False)
    rhs = apply_I(phi, theta, N_f, require_decay=False)
    return float(np.max(np.abs(lhs.values - rhs.values[..., 2:])))


def apply_K(u: FiberedSample, M_phi: int = 0) -> GammaSample:
    """Fiberwise Fourier series (1/sqrt(2 pi)) sum_n u(x,t,n) e^{i n phi}."""
    W = 2 * u.N_f + 1
    if M_phi <= 0:
        M_phi = W
    if M_phi < W:
        raise GridError("phi grid must resolve the fiber window")
    phis = 2 * np.pi * np.arange(M_phi) / M_phi
    ns = np.arange(-u.N_f, u.N_f + 1)
    kernel = np.exp(1j * np.outer(ns, phis)) / np.sqrt(2 * np.pi)
    values = np.tensordot(u.values, kernel, axes=([-1], [0]))
    return GammaSample(values=values, d=u.d, steps_per_unit=u.steps_per_unit)


def apply_K_inv(v: GammaSample, N_f: int) -> FiberedSample:
    """u(x,t,n) = (1/sqrt(2 pi)) integral of v(x,t,phi) e^{-i n phi} d phi."""
    M = v.M_phi
    phis = 2 * np.pi * np.arange(M) / M
    ns = np.arange(-N_f, N_f + 1)
    kernel = np.exp(-1j * np.outer(phis, ns)) * (2 * np.pi / M) / np.sqrt(2 * np.pi)
    values = np.tensordot(v.values, kernel, axes=([-1], [0]))
    return FiberedSample(values=values, d=v.d, steps_per_unit=v.steps_per_unit, N_f=N_f)


def apply_J(phi: CylinderSample, M_phi: int = 0, t_units_out: int = 1,
            require_decay: bool = True) -> GammaSample:
    """(J phi)(x, t, phi) = (1/sqrt(2 pi)) sum_n phi(x, t + n) e^{i n phi}.

    With t_units_out >= 2 the quasi-periodicity defect of the resulting
    gamma-section is measured and stored on the output.
    """
    if require_decay and not phi.decay_ok:
        raise DecayError("cylinder sample does not decay at the t-range ends")
    m = phi.steps_per_unit
    units = phi.t_units
    if t_units_out > units:
        raise GridError("insufficient t-range")
    if M_phi <= 0:
        M_phi = units
    if M_phi < units:
        raise GridError("phi grid must resolve the unfolded fiber range")
    phis = 2 * np.pi * np.arange(M_phi) / M_phi
    out = np.zeros(phi.values.shape[:-1] + (t_units_out * m, M_phi), dtype=complex)
    for jt in range(t_units_out):
        # t = jt + fractional; contributing n are those with t + n on the grid
        acc = np.zeros(phi.values.shape[:-1] + (m, M_phi), dtype=complex)
        for block in range(units):
            n = phi.t0 + block - jt
            slab = phi.values[..., block * m:(block + 1) * m]
            acc += slab[..., None] * np.exp(1j * n * phis)
        out[..., jt * m:(jt + 1) * m, :] = acc / np.sqrt(2 * np.pi)
    defect = 0.0
    if t_units_out >= 2:
        ref = out[..., :m, :] * np.exp(-1j * phis)
        defect = float(np.max(np.abs(out[..., m:2 * m, :] - ref)))
    return GammaSample(values=out, d=phi.d, steps_per_unit=m, quasi_defect=defect)


def apply_J_inv(v: GammaSample, t_half_range: int) -> CylinderSample:
    """phi(x, t) = (1/sqrt(2 pi)) integral of v(x, {t}, phi) e^{-i [t] phi} d phi."""
    m = v.steps_per_unit
    M = v.M_phi
    phis = 2 * np.pi * np.arange(M) / M
    base = v.values[..., :m, :]
    slabs = []
    for n in range(-t_half_range, t_half_range):
        kernel = np.exp(-1j * n * phis) * (2 * np.pi / M) / np.sqrt(2 * np.pi)
        slabs.append(np.tensordot(base, kernel, axes=([-1], [0])))
    values = np.concatenate(slabs, axis=-1)
    return CylinderSample(values=values, d=v.d, steps_per_unit=m, t0=-t_half_range)


def factorization_check(phi: CylinderSample, theta, N_f: int) -> float:
    """Relative defect between the two routes to a gamma-section.

    Route one is K after I; route two sums phi(x + n theta, t + n) e^{i n phi}
    directly (J with the orbit relabeling applied explicitly).  For
    translations the two coincide up to interpolation error.
    """
    route1 = apply_K(apply_I(phi, theta, N_f))
    m = phi.steps_per_unit
    M_phi = 2 * N_f + 1
    phis = 2 * np.pi * np.arange(M_phi) / M_phi
    acc = np.zeros(phi.values.shape[:-1] + (m, M_phi), dtype=complex)
    for n in range(-N_f, N_f + 1):
        j0 = (n - phi.t0) * m
        slab = x_shift(phi.values[..., j0:j0 + m], n * np.asarray(theta, dtype=float), phi.d)
        acc += slab[..., None] * np.exp(1j * n * phis)
    acc /= np.sqrt(2 * np.pi)
    num = float(np.sqrt(np.sum(np.abs(route1.values - acc) ** 2)))
    den = float(np.sqrt(np.sum(np.abs(phi.values) ** 2)))
    return num / max(den, 1e-300)
