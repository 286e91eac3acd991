"""Operator-valued symbols for differential operators with shifts on flat tori.

An operator D = sum_k D_k T^k on T^d, with T the translation u(x) -> u(x + theta)
and D_k first-order differential operators, has a symbol taking values in
operators on l2(Z): at a cotangent point (x, xi) the fiber index n sees the
coefficient data at x + n*theta, and T becomes the sequence shift.  All
evaluators here return finite window truncations with fiber index n in [-N, N].
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Mapping, Sequence

import numpy as np

TWO_PI = 2.0 * np.pi


class SymbolDomainError(ValueError):
    """Evaluation requested at a point where the symbol is undefined."""


class WindowError(ValueError):
    """Fiber window too small for the requested operation."""


@dataclass(frozen=True)
class TorusIsometry:
    """Translation x -> x + theta on the flat torus T^d (coordinates mod 1).

    The codifferential of a translation is the identity on covectors, so
    powers act on T*M simply by (x, xi) -> (x + n*theta, xi).
    """

    d: int
    theta: tuple

    def __post_init__(self):
        if self.d < 1:
            raise ValueError("torus dimension must be >= 1")
        th = np.asarray(self.theta, dtype=float).reshape(-1)
        if th.size != self.d:
            raise ValueError("theta must have d components")
        object.__setattr__(self, "theta", tuple(np.mod(th, 1.0)))

    @property
    def theta_array(self) -> np.ndarray:
        return np.asarray(self.theta, dtype=float)

    def translate(self, x, n=1):
        """g^n(x) = x + n*theta mod 1.  `n` may be an array; broadcasts."""
        x = np.asarray(x, dtype=float)
        n = np.asarray(n, dtype=float)
        return np.mod(x + n[..., None] * self.theta_array if n.ndim else x + n * self.theta_array, 1.0)

    def codifferential(self, x, xi, n=1):
        """partial g^n on T*M: covectors are untouched by a translation."""
        return self.translate(x, n), np.asarray(xi, dtype=float)


@dataclass(frozen=True)
class FirstOrderCoefficient:
    """Principal-symbol data sum_j c_j(x) * (i xi_j) with trigonometric c_j.

    `entries` is a tuple of (j, m, value): direction j in 1..d, frequency
    m in Z^d (tuple), complex value; c_j(x) = sum_m value * e^{2 pi i m.x}.
    """

    d: int
    entries: tuple

    @classmethod
    def from_dict(cls, d: int, coeffs: Mapping) -> "FirstOrderCoefficient":
        items = []
        for (j, m), v in sorted(coeffs.items(), key=lambda kv: (kv[0][0], kv[0][1])):
            m = tuple(int(mi) for mi in np.atleast_1d(m))
            if not (1 <= j <= d):
                raise ValueError(f"direction index {j} outside 1..{d}")
            if len(m) != d:
                raise ValueError("frequency must have d components")
            items.append((int(j), m, complex(v)))
        return cls(d=d, entries=tuple(items))

    @classmethod
    def constant(cls, values: Sequence[complex]) -> "FirstOrderCoefficient":
        """Constant-coefficient term sum_j values[j-1] * d/dx_j."""
        d = len(values)
        zero = (0,) * d
        return cls.from_dict(d, {(j + 1, zero): v for j, v in enumerate(values) if v != 0})

    @property
    def max_frequency(self) -> int:
        return max((max(abs(mi) for mi in m) for _, m, _ in self.entries), default=0)

    def coefficient(self, j: int, x) -> np.ndarray:
        """c_j evaluated at x; x has shape (..., d)."""
        x = np.asarray(x, dtype=float)
        out = np.zeros(x.shape[:-1], dtype=complex)
        for jj, m, v in self.entries:
            if jj == j:
                out += v * np.exp(TWO_PI * 1j * (x @ np.asarray(m, dtype=float)))
        return out

    def symbol(self, x, xi) -> np.ndarray:
        """sum_j c_j(x) * i xi_j, broadcasting over leading axes of x / xi."""
        x = np.asarray(x, dtype=float)
        xi = np.asarray(xi, dtype=float)
        out = np.zeros(np.broadcast_shapes(x.shape[:-1], xi.shape[:-1]), dtype=complex)
        for j, m, v in self.entries:
            phase = np.exp(TWO_PI * 1j * (x @ np.asarray(m, dtype=float)))
            out = out + v * phase * (1j * xi[..., j - 1])
        return out


@dataclass(frozen=True)
class ShiftOperatorSpec:
    """D = sum_k D_k T^k with a finite set of shift powers k."""

    isometry: TorusIsometry
    terms: tuple  # tuple of (k, FirstOrderCoefficient)

    @classmethod
    def from_terms(cls, isometry: TorusIsometry, terms: Mapping[int, FirstOrderCoefficient]):
        items = tuple(sorted(((int(k), c) for k, c in terms.items()), key=lambda kc: kc[0]))
        for _, c in items:
            if c.d != isometry.d:
                raise ValueError("coefficient dimension mismatch")
        return cls(isometry=isometry, terms=items)

    @property
    def d(self) -> int:
        return self.isometry.d

    @property
    def max_shift(self) -> int:
        return max((abs(k) for k, _ in self.terms), default=0)

    @property
    def max_frequency(self) -> int:
        return max((c.max_frequency for _, c in self.terms), default=0)

    def formal_adjoint(self) -> "ShiftOperatorSpec":
        """Formal adjoint in unweighted L2: conjugated coefficients, inverted shifts.

        (D_k T^k)* = (conj. coefficients pulled back along g^{-k}) T^{-k},
        at the principal-symbol level sigma -> conj(sigma) composed with g^{-k}.
        """
        th = self.isometry.theta_array
        acc: dict = {}
        for k, coeff in self.terms:
            for j, m, v in coeff.entries:
                marr = np.asarray(m, dtype=float)
                # conj(c_j)(x - k theta) has frequency -m with the phase below
                val = -np.conj(v) * np.exp(TWO_PI * 1j * k * (marr @ th))
                key = (-k, j, tuple(-mi for mi in m))
                acc[key] = acc.get(key, 0.0) + val
        terms: dict = {}
        for (k, j, m), v in acc.items():
            terms.setdefault(k, {})[(j, m)] = v
        return ShiftOperatorSpec.from_terms(
            self.isometry,
            {k: FirstOrderCoefficient.from_dict(self.d, cs) for k, cs in terms.items()},
        )


@dataclass(frozen=True)
class OperatorValuedSymbol:
    """Evaluator (x, xi, t, tau) -> window-truncated matrix, with block count."""

    evaluator: Callable
    block_count: int
    window: int

    def __call__(self, x, xi, t=0.0, tau=0.0):
        return self.evaluator(x, xi, t, tau)


def window_indices(N: int) -> np.ndarray:
    return np.arange(-N, N + 1)


def weight_vector(xi2_plus_tau2: float, N: int) -> np.ndarray:
    """delta(n) = (1 + xi^2 + tau^2 + n^2)^{1/2} on the window [-N, N]."""
    if xi2_plus_tau2 < 0:
        raise ValueError("xi2_plus_tau2 must be >= 0")
    n = window_indices(N)
    return np.sqrt(1.0 + xi2_plus_tau2 + n.astype(float) ** 2)


def _assemble_window(spec: ShiftOperatorSpec, x, xi, N: int, boundary: str) -> np.ndarray:
    if N < spec.max_shift:
        raise WindowError(f"window N={N} smaller than max shift {spec.max_shift}")
    if boundary not in ("zero", "periodic"):
        raise ValueError("boundary must be 'zero' or 'periodic'")
    W = 2 * N + 1
    ns = window_indices(N)
    xn = np.mod(np.asarray(x, dtype=float) + ns[:, None] * spec.isometry.theta_array, 1.0)
    M = np.zeros((W, W), dtype=complex)
    rows = np.arange(W)
    for k, coeff in spec.terms:
        vals = coeff.symbol(xn, np.asarray(xi, dtype=float))
        cols = rows + k
        if boundary == "periodic":
            M[rows, np.mod(cols, W)] += vals
        else:
            ok = (cols >= 0) & (cols < W)
            M[rows[ok], cols[ok]] += vals[ok]
    return M


def evaluate_symbol(spec: ShiftOperatorSpec, x, xi, N: int, boundary: str = "zero") -> np.ndarray:
    """Window truncation of sigma(D)(x, xi) acting on l2(Z).

    Entry [n, n+k] is sigma(D_k)(x + n theta, xi); with zero boundary,
    couplings leaving [-N, N] are dropped, with periodic boundary they wrap.
    """
    xi = np.atleast_1d(np.asarray(xi, dtype=float))
    if np.all(xi == 0.0):
        raise SymbolDomainError("symbol undefined at xi = 0")
    return _assemble_window(spec, x, xi, N, boundary)


def a_symbol(t: float, tau: float) -> complex:
    """Symbol i tau + t of the index-one line operator d/dt + t."""
    return 1j * tau + t


def a_symbol_fiber(t: float, tau: float, n) -> np.ndarray:
    """Fiberwise variant i tau + t + n."""
    return 1j * tau + t + np.asarray(n, dtype=float)


def external_product(sigma1: np.ndarray, sigma2: np.ndarray) -> np.ndarray:
    """2x2 block coupling [[s1, s2], [-s2*, s1*]] (adjoints in unweighted l2)."""
    sigma1 = np.atleast_2d(np.asarray(sigma1, dtype=complex))
    sigma2 = np.atleast_2d(np.asarray(sigma2, dtype=complex))
    if sigma1.shape != sigma2.shape:
        raise ValueError("external product factors must have equal shape")
    top = np.hstack([sigma1, sigma2])
    bot = np.hstack([-sigma2.conj().T, sigma1.conj().T])
    return np.vstack([top, bot])


def cylinder_symbol(spec: ShiftOperatorSpec, x, xi, t: float, tau: float, N: int,
                    boundary: str = "zero") -> np.ndarray:
    """Symbol of the lifted operator on the cylinder at (x, xi, t, tau).

    The lifted coefficients contain no t-derivatives, so the matrix agrees
    with the torus symbol; the joint covariable (xi, t, tau) may have xi = 0.
    """
    xi = np.atleast_1d(np.asarray(xi, dtype=float))
    if np.all(xi == 0.0) and t == 0.0 and tau == 0.0:
        raise SymbolDomainError("cylinder symbol undefined at (xi, t, tau) = 0")
    return _assemble_window(spec, x, xi, N, boundary)


def cylinder_product_symbol(spec: ShiftOperatorSpec, x, xi, t: float, tau: float, N: int,
                            boundary: str = "zero") -> np.ndarray:
    """External product of the cylinder symbol with (i tau + t) * Id."""
    s1 = cylinder_symbol(spec, x, xi, t, tau, N, boundary)
    s2 = a_symbol(t, tau) * np.eye(s1.shape[0], dtype=complex)
    return external_product(s1, s2)


def orbit_symbol(spec: ShiftOperatorSpec, x, xi, t: float, tau: float, N: int,
                 boundary: str = "zero") -> np.ndarray:
    """Symbol on the mapping torus: sigma(D)(x, xi) # diag_n(i tau + t + n)."""
    s1 = evaluate_symbol(spec, x, xi, N, boundary)
    s2 = np.diag(a_symbol_fiber(t, tau, window_indices(N)))
    return external_product(s1, s2)


def homogenize(spec: ShiftOperatorSpec, R: float, N: int,
               boundary: str = "zero") -> OperatorValuedSymbol:
    """Degree-zero homogenization: evaluate the orbit symbol on |(xi,tau)| = R.

    The returned evaluator is constant along rays in (xi, tau) and agrees
    with the orbit symbol on the sphere of radius R.
    """
    if R <= 0:
        raise ValueError("R must be positive")

    def _eval(x, xi, t, tau):
        xi = np.atleast_1d(np.asarray(xi, dtype=float))
        r = float(np.sqrt(np.sum(xi ** 2) + tau ** 2))
        if r == 0.0:
            raise SymbolDomainError("homogenized symbol undefined at (xi, tau) = 0")
        return orbit_symbol(spec, x, R * xi / r, t, R * tau / r, N, boundary)

    return OperatorValuedSymbol(evaluator=_eval, block_count=2, window=N)
