"""Spectral assembly of shift operators and numerical Fredholm indices.

Operators on the torus are assembled in the Fourier basis, where translation
shifts are exact diagonal phases; the index-one line operator d/dt + t and its
t-translations live in the Hermite-function basis, where they are a ladder
matrix and a displacement matrix.  Kernel and cokernel dimensions are read off
a dense SVD through gap detection, with a deterministic filter for null
vectors manufactured by the rectangular truncation of ladder operators.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Optional, Sequence, Union

import numpy as np
from scipy.special import eval_genlaguerre, gammaln

from .symbols import ShiftOperatorSpec, TWO_PI

DENSE_SVD_CAP = 4096
DEFAULT_GAP_MIN = 1e3


class DimensionCapError(RuntimeError):
    """Assembly would exceed the dense-SVD dimension cap."""


class TruncationError(ValueError):
    """Truncation level too small for the requested operator."""


@dataclass(frozen=True)
class FourierTruncation:
    """Multi-indices k in Z^d with |k_j| <= K, ordered lexicographically.

    Index of k is sum_j (k_j + K) * (2K+1)^(d-1-j), i.e. the first coordinate
    varies slowest.
    """

    d: int
    K: int

    @property
    def size(self) -> int:
        return (2 * self.K + 1) ** self.d

    @property
    def modes(self) -> np.ndarray:
        rng = np.arange(-self.K, self.K + 1)
        return np.array(list(itertools.product(*[rng] * self.d)), dtype=int)

    def index(self, k: np.ndarray) -> np.ndarray:
        k = np.asarray(k, dtype=int)
        idx = np.zeros(k.shape[:-1], dtype=int)
        for j in range(self.d):
            idx = idx * (2 * self.K + 1) + (k[..., j] + self.K)
        return idx

    @property
    def edge_score(self) -> np.ndarray:
        """Normalized distance to the window edge, |k|_inf / K, in [0, 1]."""
        if self.K == 0:
            return np.zeros(self.size)
        return np.max(np.abs(self.modes), axis=1) / self.K

    @property
    def sobolev_weight(self) -> np.ndarray:
        """(1 + |2 pi k|^2)^{1/2} per mode."""
        return np.sqrt(1.0 + np.sum((TWO_PI * self.modes) ** 2, axis=1))


@dataclass(frozen=True)
class HermiteTruncation:
    """Hermite functions h_0..h_{H-1}, L2-normalized with weight e^{-t^2/2}."""

    H: int

    def __post_init__(self):
        if self.H < 2:
            raise ValueError("need at least two Hermite functions")

    @property
    def size(self) -> int:
        return self.H

    @property
    def edge_score(self) -> np.ndarray:
        return np.arange(self.H) / (self.H - 1)

    @property
    def sobolev_weight(self) -> np.ndarray:
        """Spectral weight (2n + 1)^{1/2} of the oscillator 1 + t^2 - d^2/dt^2...

        truncated to the (2n+1) eigenvalue without the +1, which is folded in
        by callers combining torus and line weights.
        """
        return np.sqrt(2.0 * np.arange(self.H) + 1.0)


@dataclass(frozen=True)
class BasisDescriptor:
    """Bookkeeping for one side of an assembled matrix."""

    name: str
    size: int
    edge_score: np.ndarray  # in [0, 1]; 1 = at the truncation edge


@dataclass
class AssembledOperator:
    matrix: np.ndarray
    domain: BasisDescriptor
    codomain: BasisDescriptor
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if not np.all(np.isfinite(self.matrix)):
            raise ValueError("assembled matrix has non-finite entries")
        if self.matrix.shape != (self.codomain.size, self.domain.size):
            raise ValueError("matrix shape inconsistent with basis descriptors")


def _torus_term_matrix(spec: ShiftOperatorSpec, k: int, ft: FourierTruncation) -> np.ndarray:
    """Matrix of D_k T^k on Fourier modes: derivative multiplier, coefficient
    convolution band, and the diagonal shift phase e^{2 pi i k (m . theta)}."""
    coeff = dict(spec.terms)[k]
    modes = ft.modes
    theta = spec.isometry.theta_array
    phases = np.exp(TWO_PI * 1j * k * (modes @ theta))
    M = np.zeros((ft.size, ft.size), dtype=complex)
    col = np.arange(ft.size)
    for j, m, v in coeff.entries:
        out_modes = modes + np.asarray(m, dtype=int)
        ok = np.all(np.abs(out_modes) <= ft.K, axis=1)
        rows = ft.index(out_modes[ok])
        M[rows, col[ok]] += v * (TWO_PI * 1j * modes[ok, j - 1]) * phases[ok]
    return M


def _apply_sobolev(matrix: np.ndarray, w_row: np.ndarray, w_col: np.ndarray, s: float) -> np.ndarray:
    if s == 0:
        return matrix
    return (w_row ** (s - 1.0))[:, None] * matrix * (w_col ** (-s))[None, :]


def assemble_on_torus(spec: ShiftOperatorSpec, K: int, s: float = 0.0) -> AssembledOperator:
    """Matrix of D = sum_k D_k T^k between Sobolev-weighted Fourier coefficients."""
    if K < spec.max_frequency + 1:
        raise TruncationError(f"K={K} too small for coefficient band {spec.max_frequency}")
    ft = FourierTruncation(spec.d, K)
    M = np.zeros((ft.size, ft.size), dtype=complex)
    for k, _ in spec.terms:
        M += _torus_term_matrix(spec, k, ft)
    w = ft.sobolev_weight
    M = _apply_sobolev(M, w, w, s)
    desc = BasisDescriptor(name=f"fourier[d={spec.d},K={K}]", size=ft.size,
                           edge_score=ft.edge_score)
    return AssembledOperator(matrix=M, domain=desc, codomain=desc,
                             meta={"K": K, "s": s, "kind": "torus"})


def assemble_A(H: int, s: float = 0.0) -> AssembledOperator:
    """Ladder matrix of d/dt + t on h_0..h_{H-1}: entry sqrt(2n) at (n-1, n)."""
    ht = HermiteTruncation(H)
    M = np.zeros((H, H), dtype=complex)
    n = np.arange(1, H)
    M[n - 1, n] = np.sqrt(2.0 * n)
    w = np.sqrt(1.0 + 2.0 * np.arange(H) + 1.0)
    M = _apply_sobolev(M, w, w, s)
    desc = BasisDescriptor(name=f"hermite[H={H}]", size=H, edge_score=ht.edge_score)
    return AssembledOperator(matrix=M, domain=desc, codomain=desc,
                             meta={"H": H, "s": s, "kind": "line"})


def hermite_shift_matrix(eps: float, H: int) -> np.ndarray:
    """<h_m, h_n(. + eps)>: the displacement exp(eps d/dt) in the Hermite basis.

    With ladder operators a, a+ and alpha = -eps/sqrt(2) this is the standard
    displacement matrix exp(alpha a+ - alpha a), written with associated
    Laguerre polynomials.
    """
    alpha = -eps / np.sqrt(2.0)
    m = np.arange(H)[:, None]
    n = np.arange(H)[None, :]
    lo = np.minimum(m, n)
    diff = np.abs(m - n)
    # sqrt(lo! / hi!) via log-gamma for stability
    ratio = np.exp(0.5 * (gammaln(lo + 1) - gammaln(lo + diff + 1)))
    base = np.where(m >= n, alpha, -alpha)
    with np.errstate(divide="ignore", invalid="ignore"):
        powed = np.where(diff == 0, 1.0, np.sign(base) ** diff * np.abs(base) ** diff)
    lag = eval_genlaguerre(lo, diff, alpha ** 2)
    return ratio * powed * np.exp(-alpha ** 2 / 2.0) * lag


def assemble_shift_t(eps: float, H: int) -> AssembledOperator:
    """Translation u(t) -> u(t + eps) in the Hermite basis (unitary up to truncation)."""
    ht = HermiteTruncation(H)
    M = hermite_shift_matrix(float(eps), H).astype(complex)
    desc = BasisDescriptor(name=f"hermite[H={H}]", size=H, edge_score=ht.edge_score)
    return AssembledOperator(matrix=M, domain=desc, codomain=desc,
                             meta={"H": H, "eps": eps, "kind": "shift_t"})


def assemble_cylinder_product(spec: ShiftOperatorSpec, K: int, H: int, eps: float,
                              s: float = 0.0, cap: int = DENSE_SVD_CAP) -> AssembledOperator:
    """Block coupling of the lifted operator with the line operator d/dt + t.

    Tensor ordering: torus Fourier index varies slowest, Hermite index fastest.
    The lifted operator is sum_k (D_k on the torus) (x) (t-translation by k*eps);
    the blocks are arranged so that the kernel at eps = 0 factors as
    ker D (x) ker(d/dt + t), and the index equals ind D.
    """
    if K < spec.max_frequency + 1:
        raise TruncationError(f"K={K} too small for coefficient band {spec.max_frequency}")
    ft = FourierTruncation(spec.d, K)
    ht = HermiteTruncation(H)
    nb = ft.size * H
    if 2 * nb > cap:
        raise DimensionCapError(f"cylinder assembly size {2 * nb} exceeds cap {cap}")
    Dt = np.zeros((nb, nb), dtype=complex)
    for k, _ in spec.terms:
        Dt += np.kron(_torus_term_matrix(spec, k, ft), hermite_shift_matrix(k * eps, H))
    ladder_down = assemble_A(H).matrix
    Aup = np.kron(np.eye(ft.size), ladder_down.conj().T)
    top = np.hstack([Dt, Aup])
    bot = np.hstack([-Aup.conj().T, Dt.conj().T])
    M = np.vstack([top, bot])
    edge = np.maximum(np.repeat(ft.edge_score, H), np.tile(ht.edge_score, ft.size))
    edge = np.concatenate([edge, edge])
    if s != 0:
        w = np.sqrt(np.repeat(ft.sobolev_weight ** 2, H) + 2.0 * np.tile(np.arange(H), ft.size))
        w = np.concatenate([w, w])
        M = _apply_sobolev(M, w, w, s)
    desc = BasisDescriptor(name=f"fourier(x)hermite(x)C2[K={K},H={H}]", size=2 * nb,
                           edge_score=edge)
    return AssembledOperator(matrix=M, domain=desc, codomain=desc,
                             meta={"K": K, "H": H, "eps": eps, "s": s, "kind": "cylinder"})


@dataclass(frozen=True)
class EdgeFilter:
    """Discard null vectors carrying more than `mass_frac` of their l2 mass on
    the top `edge_frac` of basis indices (truncation artifacts)."""

    edge_frac: float = 0.2
    mass_frac: float = 0.5

    def is_artifact(self, vec: np.ndarray, edge_score: np.ndarray) -> bool:
        mask = edge_score >= 1.0 - self.edge_frac
        return float(np.sum(np.abs(vec[mask]) ** 2)) > self.mass_frac


@dataclass
class IndexReport:
    ker_dim: int
    coker_dim: int
    index: int
    gap: float
    converged: bool
    status: str                 # "ok" | "inconclusive"
    convergence: list = field(default_factory=list)
    artifacts_discarded: int = 0
    kernel_vectors: Optional[np.ndarray] = None
    cokernel_vectors: Optional[np.ndarray] = None

    def to_json(self) -> dict:
        return {
            "ker": int(self.ker_dim), "coker": int(self.coker_dim),
            "index": int(self.index), "gap": float(min(self.gap, 1e300)),
            "converged": bool(self.converged), "status": self.status,
            "convergence": self.convergence,
            "artifacts_discarded": int(self.artifacts_discarded),
        }


def _split_null(svals_asc: np.ndarray, gap_min: float):
    """Locate the kernel gap: largest ratio jump in the sorted singular values.

    Returns (null_count, gap_ratio) or (None, ratio) when inconclusive.
    """
    smax = float(svals_asc[-1])
    if smax == 0.0:
        return len(svals_asc), np.inf
    tiny = smax * 1e-300
    upper = len(svals_asc) - 1
    ratios = svals_asc[1:] / np.maximum(svals_asc[:-1], tiny)
    # the gap must separate a small cluster from the bulk
    # null directions are only truncation-accurate, so the cluster extends to
    # the outermost qualifying jump, not just the largest one
    cand = [i for i in range(upper)
            if svals_asc[i] < 0.1 * smax and ratios[i] >= gap_min]
    if cand:
        i_best = max(cand)
        return i_best + 1, float(ratios[i_best])
    if svals_asc[0] >= 1e-6 * smax:
        return 0, np.inf
    return None, float(np.max(ratios)) if upper else 0.0


def _index_once(op: AssembledOperator, gap_min: float, edge_filter: EdgeFilter):
    n = max(op.matrix.shape)
    if n > DENSE_SVD_CAP:
        raise DimensionCapError(f"matrix dimension {n} exceeds dense SVD cap {DENSE_SVD_CAP}")
    U, svals, Vh = np.linalg.svd(op.matrix)
    order = np.argsort(svals)
    svals_asc = svals[order]
    null, gap = _split_null(svals_asc, gap_min)
    if null is None:
        return None, None, gap, 0, None, None
    ker_vecs, coker_vecs, discarded = [], [], 0
    for i in order[:null]:
        v = Vh[i].conj()
        if edge_filter.is_artifact(v, op.domain.edge_score):
            discarded += 1
        else:
            ker_vecs.append(v)
        u = U[:, i]
        if edge_filter.is_artifact(u, op.codomain.edge_score):
            discarded += 1
        else:
            coker_vecs.append(u)
    return (len(ker_vecs), len(coker_vecs), gap, discarded,
            np.array(ker_vecs) if ker_vecs else np.zeros((0, op.domain.size)),
            np.array(coker_vecs) if coker_vecs else np.zeros((0, op.codomain.size)))


def numerical_index(ops: Union[AssembledOperator, Sequence[AssembledOperator]],
                    gap_min: float = DEFAULT_GAP_MIN,
                    edge_filter: EdgeFilter = EdgeFilter()) -> IndexReport:
    """Kernel/cokernel dimensions and index from singular-value gap analysis.

    Accepts a single assembly or a sequence at increasing truncation levels;
    with several levels the verdict additionally requires the triple to be
    stable across the two largest levels.
    """
    if isinstance(ops, AssembledOperator):
        ops = [ops]
    if not ops:
        raise ValueError("need at least one assembled operator")
    convergence = []
    results = []
    for op in ops:
        ker, coker, gap, discarded, kv, cv = _index_once(op, gap_min, edge_filter)
        level = {k: op.meta.get(k) for k in ("K", "H", "eps", "s") if k in op.meta}
        if ker is None:
            convergence.append({"level": level, "status": "no_gap", "gap": float(gap)})
            results.append(None)
        else:
            convergence.append({"level": level, "ker": ker, "coker": coker,
                                "index": ker - coker, "gap": float(min(gap, 1e300))})
            results.append((ker, coker, gap, discarded, kv, cv))
    last = results[-1]
    if last is None:
        return IndexReport(0, 0, 0, convergence[-1]["gap"], False, "inconclusive",
                           convergence)
    ker, coker, gap, discarded, kv, cv = last
    converged = True
    if len(results) >= 2:
        prev = results[-2]
        converged = prev is not None and prev[:2] == (ker, coker)
    status = "ok" if converged else "inconclusive"
    return IndexReport(ker, coker, ker - coker, gap, converged, status,
                       convergence, discarded, kv, cv)


def s_independence_check(spec: ShiftOperatorSpec, K: int,
                         s_list: Sequence[float] = (-1.0, 0.0, 1.0, 2.0),
                         H: Optional[int] = None, eps: float = 1.0,
                         gap_min: float = DEFAULT_GAP_MIN):
    """Verify that (ker, coker, index) does not depend on the Sobolev order.

    With `H` given the check runs on the cylinder block operator at the given
    eps; otherwise on the torus assembly of D itself.
    """
    reports = {}
    for s in s_list:
        if H is None:
            op = assemble_on_torus(spec, K, s=s)
        else:
            op = assemble_cylinder_product(spec, K, H, eps, s=s)
        reports[s] = numerical_index(op, gap_min=gap_min)
    triples = {s: (r.ker_dim, r.coker_dim, r.index) for s, r in reports.items()}
    if any(r.status != "ok" for r in reports.values()):
        return False, reports
    return len(set(triples.values())) == 1, reports
