"""Eigenmodes, pseudoeigenvectors, decay fits and pseudospectra.

Modes are assembled from quasiperiodic solutions ``u^{(j)} = z^j v`` of the
infinite recurrence, where ``z = exp(i alpha L - beta)`` and ``v`` is a null
vector of the symbol. Magnitudes are tracked in log form so that profiles
spanning hundreds of orders of magnitude keep full relative accuracy; the
unit-norm ``entries`` array may underflow in far tails, ``log_abs`` does not.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
import scipy.linalg as sla

from .errors import (
    Confluent,
    DomainError,
    InsufficientData,
    NotAnEigenvalue,
    OnBoundary,
)
from .ktoeplitz import (
    BandedMatrix,
    ComplexQuasimomentum,
    DefectSpec,
    KToeplitzSpec,
    symbol_eval,
    truncate_laurent,
    truncate_toeplitz,
)
from .numerics import (
    TridiagonalProfile,
    eig_dense,
    loglinear_fit,
    sigma_min,
    symmetrize_tridiagonal,
    tridiagonal_eigenvector,
    _linear_fit,
)
from .regions import Region, classify, reduce
from .tolerances import DEFAULT, Tolerances

__all__ = [
    "ModeProfile",
    "PseudospectrumGrid",
    "ConvergenceStudy",
    "symbol_nullvector",
    "build_bulk_mode",
    "build_laurent_defect_mode",
    "residual",
    "decay_fit",
    "gauge_similarity",
    "pseudospectrum",
    "finite_spectrum",
    "eigenvector_profile",
    "residual_convergence",
]


@dataclass(frozen=True)
class ModeProfile:
    """A unit-norm mode with fitted decay rates and its residual.

    ``log_abs`` holds ``log|u_i|`` relative to the largest entry.
    ``info`` carries construction details (e.g. the implied defect).
    """
    entries: np.ndarray
    lam: float
    rate_left: float
    rate_right: float
    residual: float
    log_abs: np.ndarray
    k: int = 1
    defect_site: Optional[int] = None
    flags: tuple = ()
    info: dict = field(default_factory=dict)

    @property
    def N(self) -> int:
        return int(self.entries.size)


def _profile_from_logs(logu: np.ndarray):
    """Complex logs -> (unit-norm entries, log|u| relative to max)."""
    shift = np.max(logu.real[np.isfinite(logu.real)])
    log_abs = logu.real - shift
    with np.errstate(under="ignore"):
        u = np.exp(logu - shift)
    return u / np.linalg.norm(u), log_abs - math.log(np.linalg.norm(u))


# --------------------------------------------------------------------------
# symbol null vectors and quasiperiodic branches
# --------------------------------------------------------------------------

def symbol_nullvector(spec: KToeplitzSpec, q, lam: float, tol: Tolerances = DEFAULT) -> np.ndarray:
    """Unit null vector of ``symbol(q) - lam`` (right singular vector)."""
    f = symbol_eval(spec, q) - lam * np.eye(spec.k)
    if spec.k == 1:
        if abs(f[0, 0]) > tol.symbol_nullvector * max(1.0, abs(lam)):
            raise NotAnEigenvalue(f"lambda = {lam} is not an eigenvalue of the symbol")
        return np.ones(1, dtype=complex)
    _, s, Vh = np.linalg.svd(f)
    scale = max(1.0, np.linalg.norm(f + lam * np.eye(spec.k), 2))
    if s[-1] > tol.symbol_nullvector * scale:
        raise NotAnEigenvalue(f"sigma_min = {s[-1]:.3e}: lambda is not an eigenvalue of the symbol")
    if s[-2] <= tol.symbol_nullvector * scale:
        raise Confluent("two-dimensional null space of the symbol")
    v = Vh[-1].conj()
    return v / np.linalg.norm(v)


@dataclass(frozen=True)
class _Branch:
    alpha: float
    beta: float
    v: np.ndarray
    L: float

    def log_entries(self, n: np.ndarray, k: int) -> np.ndarray:
        """Complex log of the quasiperiodic solution at 1-based sites ``n``."""
        j = np.floor_divide(n - 1, k)
        s = np.mod(n - 1, k)
        with np.errstate(divide="ignore"):
            logv = np.log(self.v.astype(complex))
        return j * (1j * self.alpha * self.L - self.beta) + logv[s]


def _branches(spec: KToeplitzSpec, lam: float, tol: Tolerances = DEFAULT):
    """The two quasimomenta solving the reduced equation at real ``lam``.

    Returns (branch_1, branch_2, classification). Inside the open-limit
    spectrum they are ``(+-alpha, r)``; outside they are ``(alpha*, r -+ b~)``.
    """
    red = reduce(spec)
    cls = classify(spec, lam, tol)
    r = spec.r
    if cls.region == Region.OPEN:
        x = float(np.clip(-red.g(lam) / red.two_A_er, -1.0, 1.0))
        if 1.0 - abs(x) < 1e-12:
            raise Confluent(f"lambda = {lam} is a band edge: the two quasimomenta coincide")
        al = math.acos(x) / spec.L
        q1, q2 = (al, r), (-al, r)
    else:
        if cls.beta_tilde < 1e-8:
            raise Confluent(f"lambda = {lam} is a band edge: the two quasimomenta coincide")
        al = cls.alpha_star / spec.L
        q1, q2 = (al, r - cls.beta_tilde), (al, r + cls.beta_tilde)
    v1 = symbol_nullvector(spec, ComplexQuasimomentum(*q1, spec.L), lam, tol)
    v2 = symbol_nullvector(spec, ComplexQuasimomentum(*q2, spec.L), lam, tol)
    return _Branch(q1[0], q1[1], v1, spec.L), _Branch(q2[0], q2[1], v2, spec.L), cls


def _logsumexp2(la, lb):
    """log(exp(la) + exp(lb)) for complex logs."""
    m = np.maximum(la.real, lb.real)
    m = np.where(np.isfinite(m), m, 0.0)
    with np.errstate(under="ignore"):
        return m + np.log(np.exp(la - m) + np.exp(lb - m))


def _log_norm(log_abs: np.ndarray) -> float:
    m = np.max(log_abs)
    return float(m + 0.5 * math.log(np.sum(np.exp(2 * (log_abs - m)))))


# --------------------------------------------------------------------------
# decay fits and residuals
# --------------------------------------------------------------------------

def decay_fit(u, k: int = 1, center: Optional[int] = None, exclude: Optional[int] = None):
    """Per-cell decay rates on either side of ``center``.

    ``u`` may be a vector, a :class:`TridiagonalProfile` or a
    :class:`ModeProfile` (log magnitudes are used when available). The
    rates are minus the least-squares slopes of ``log|u_i|`` against
    ``i / k``, sampled every k sites in phase with the centre, after
    dropping ``exclude`` (default 2k) sites next to the centre and to each
    boundary. A side with fewer than three samples yields NaN.

    Returns ``(rate_left, rate_right, r2_left, r2_right)``.
    """
    if isinstance(u, (TridiagonalProfile, ModeProfile)):
        logu = np.asarray(u.log_abs, dtype=float)
    else:
        with np.errstate(divide="ignore"):
            logu = np.log(np.abs(np.asarray(u)))
    N = logu.size
    if N < 6 * k:
        raise InsufficientData(f"decay fit needs N >= 6k, got N={N}, k={k}")
    exclude = 2 * k if exclude is None else exclude
    c = int(np.argmax(logu)) if center is None else int(center)
    idx = np.arange(N)
    phase = (idx - c) % k == 0

    def side(mask):
        sel = mask & phase & np.isfinite(logu)
        if np.count_nonzero(sel) < 3:
            return float("nan"), float("nan")
        slope, _, r2 = _linear_fit(idx[sel] / k, logu[sel])
        return -slope, r2

    left = (idx >= exclude) & (idx <= c - exclude)
    right = (idx >= c + exclude) & (idx <= N - 1 - exclude)
    rl, r2l = side(left)
    rr, r2r = side(right)
    return rl, rr, r2l, r2r


def residual(M: BandedMatrix, lam, u) -> float:
    """``||(M - lam) u|| / ||u||`` in the 2-norm."""
    u = np.asarray(u)
    if u.size != M.N:
        raise ValueError("dimension mismatch between matrix and vector")
    return float(np.linalg.norm(M.matvec(u) - lam * u) / np.linalg.norm(u))


# --------------------------------------------------------------------------
# mode construction
# --------------------------------------------------------------------------

def build_bulk_mode(spec: KToeplitzSpec, lam: float, N: int, tol: Tolerances = DEFAULT) -> ModeProfile:
    """Pseudoeigenvector of the finite Toeplitz section ``T_N``.

    The two quasiperiodic solutions at ``lam`` are mixed as
    ``u = y_0 x - x_0 y`` so that the first row holds exactly; only the last
    row is violated. ``lam`` may lie in the open-limit spectrum (both
    branches decay at rate ``r``) or anywhere in the winding region (rates
    ``r -+ b~``). ``info['boundary_residual']`` is the exact residual,
    evaluated from the missing coupling in row N without cancellation.
    """
    if N % spec.k:
        raise ValueError("N must be a multiple of k")
    x, y, cls = _branches(spec, lam, tol)
    flags = ()
    if cls.region == Region.WIND_COMPLEMENT:
        raise DomainError(f"lambda = {lam} lies outside the winding region; use the Laurent construction")
    if cls.region == Region.DET_BOUNDARY:
        flags = ("AlgebraicBoundary",)
    k = spec.k
    n = np.arange(0, N + 2)
    lx, ly = x.log_entries(n, k), y.log_entries(n, k)
    # u_n = y_0 x_n - x_0 y_n  ->  u_0 = 0
    la = ly[0] + lx
    lb = lx[0] + ly + 1j * np.pi
    logu = _logsumexp2(la, lb)
    logu[0] = -np.inf
    body = logu[1 : N + 1]
    entries, log_abs = _profile_from_logs(body)
    M = truncate_toeplitz(spec, N)
    b_last = spec.b[(N - 1) % k]
    lognorm = _log_norm(body.real)
    boundary = math.exp(math.log(abs(b_last)) + logu[N + 1].real - lognorm)
    rl, rr, _, _ = decay_fit(log_abs_profile(log_abs), k)
    return ModeProfile(
        entries, float(lam), rl, rr, residual(M, lam, entries), log_abs, k, None, flags,
        {"region": cls.region.value, "beta_tilde": cls.beta_tilde,
         "predicted_rates": (cls.rate_left, cls.rate_right),
         "boundary_residual": boundary, "kind": "toeplitz"},
    )


def log_abs_profile(log_abs: np.ndarray) -> TridiagonalProfile:
    return TridiagonalProfile(np.asarray(log_abs, dtype=float), np.ones(len(log_abs)))


def build_laurent_defect_mode(spec: KToeplitzSpec, lam: float, N: int,
                              defect_site: Optional[int] = None,
                              defect_kind: str = "multiplicative",
                              tol: Tolerances = DEFAULT) -> ModeProfile:
    """Truncated eigenvector of the defected Laurent operator at ``lam``.

    Left of the defect site ``m = N // 2`` the mode follows the branch with
    imaginary quasimomentum ``r - b~`` (growing towards the defect), right of
    it the branch ``r + b~``. The branches are matched at site m, so every
    row except m holds for the infinite operator; row m fixes the defect
    strength, reported in ``info['defect']`` (a :class:`DefectSpec` of the
    requested kind). The residual is taken against the defected Laurent
    truncation, whose rows 1 and N are the only violated ones.
    """
    m = N // 2 if defect_site is None else int(defect_site)
    if m != N // 2:
        raise ValueError("the Laurent construction places the defect at N // 2")
    x, y, cls = _branches(spec, lam, tol)
    if cls.region == Region.DET_BOUNDARY:
        raise OnBoundary(f"lambda = {lam} lies on the edge of the winding region")
    if cls.region != Region.WIND_COMPLEMENT:
        raise DomainError(f"lambda = {lam} is inside the winding region; no two-sided decaying mode")
    k = spec.k
    n = np.arange(0, N + 2)
    lx, ly = x.log_entries(n, k), y.log_entries(n, k)
    logu = np.where(n <= m, lx - lx[m], ly - ly[m])
    body = logu[1 : N + 1]
    entries, log_abs = _profile_from_logs(body)

    # row m of the undefected operator applied to the exact mode
    i = m - 1
    lam_u = entries[i]
    row = spec.a[i % k] * entries[i]
    row += spec.c[(i - 1) % k] * entries[i - 1] + spec.b[i % k] * entries[i + 1]
    if defect_kind == "additive":
        defect = DefectSpec.additive(m, float(np.real((lam * lam_u - row) / lam_u)))
    else:
        eta = float(np.real(lam * lam_u / row)) - 1.0
        defect = DefectSpec.multiplicative(m, eta)

    M = truncate_laurent(spec, N, defect)
    lognorm = _log_norm(body.real)
    # exact truncation residual: the couplings cut off in rows 1 and N
    t1 = math.log(abs(spec.c[-1])) + logu[0].real - lognorm
    tN = math.log(abs(spec.b[(N - 1) % k])) + logu[N + 1].real - lognorm
    boundary = math.exp(0.5 * np.logaddexp(2 * t1, 2 * tN))
    rl, rr, _, _ = decay_fit(log_abs_profile(log_abs), k, center=i)
    return ModeProfile(
        entries, float(lam), rl, rr, residual(M, lam, entries), log_abs, k, m, (),
        {"region": cls.region.value, "beta_tilde": cls.beta_tilde,
         "predicted_rates": (cls.rate_left, cls.rate_right),
         "boundary_residual": boundary, "defect": defect, "kind": "laurent"},
    )


# --------------------------------------------------------------------------
# similarity, spectra and pseudospectra
# --------------------------------------------------------------------------

def gauge_similarity(spec: KToeplitzSpec, N: int) -> np.ndarray:
    """Diagonal of ``R_N(e^r)``: entries ``exp(-r floor((i-1)/k))``."""
    i = np.arange(N)
    return np.exp(-spec.r * (i // spec.k))


def conjugate(M: BandedMatrix, d) -> BandedMatrix:
    """``D^{-1} M D`` for ``D = diag(d)``."""
    d = np.asarray(d)
    return BandedMatrix(M.diag.copy(), M.sub * d[:-1] / d[1:], M.sup * d[1:] / d[:-1])


def _symmetrizable(M: BandedMatrix) -> bool:
    return (not np.iscomplexobj(M.dtype.type(0))) and bool(np.all(M.sub * M.sup > 0))


def finite_spectrum(M: BandedMatrix, vectors: bool = False, tol: Tolerances = DEFAULT):
    """Eigenvalues (sorted) and optionally unit eigenvectors of a banded matrix.

    Real tridiagonal matrices with positive off-diagonal products are
    similar to symmetric ones; they are solved with the symmetric
    tridiagonal LAPACK driver and the eigenvectors are recovered from the
    original matrix by twisted recurrences (accurate in exponential tails).
    Other matrices go through the dense nonsymmetric solver.
    """
    if M.N > tol.dense_limit:
        raise ValueError(f"N = {M.N} exceeds the dense limit {tol.dense_limit}")
    if _symmetrizable(M):
        off, _ = symmetrize_tridiagonal(M.diag, M.sub, M.sup)
        w = sla.eigh_tridiagonal(np.asarray(M.diag, dtype=float), off, eigvals_only=True)
        if not vectors:
            return w
        V = np.column_stack([eigenvector_profile(M, lam).normalized() for lam in w])
        return w, V
    return eig_dense(M.to_dense(), vectors=vectors, tol=tol)


def eigenvector_profile(M: BandedMatrix, lam) -> TridiagonalProfile:
    """Eigenvector for an accurate eigenvalue, in log-magnitude form."""
    prof, _ = tridiagonal_eigenvector(M.diag, M.sub, M.sup, lam)
    return prof


@dataclass(frozen=True)
class PseudospectrumGrid:
    """Smallest singular values of ``M - z`` on a rectangular grid.

    ``values[j, i]`` belongs to ``z = x[i] + 1j * y[j]``.
    """
    x: np.ndarray
    y: np.ndarray
    values: np.ndarray

    def contains(self, eps: float) -> np.ndarray:
        """Mask of grid nodes inside the eps-pseudospectrum."""
        return self.values <= eps

    def rows(self):
        for j, yy in enumerate(self.y):
            for i, xx in enumerate(self.x):
                yield float(xx), float(yy), float(self.values[j, i])


def pseudospectrum(M, rect: Sequence[float], resolution) -> PseudospectrumGrid:
    """``sigma_min(M - z)`` on a grid over ``rect = (re_lo, re_hi, im_lo, im_hi)``.

    ``resolution`` is an int (same in both directions) or a pair (nx, ny).
    """
    re_lo, re_hi, im_lo, im_hi = map(float, rect)
    if not (re_hi >= re_lo and im_hi >= im_lo):
        raise ValueError("empty rectangle")
    nx, ny = (resolution, resolution) if np.isscalar(resolution) else resolution
    x = np.linspace(re_lo, re_hi, int(nx))
    y = np.linspace(im_lo, im_hi, int(ny))
    A = M.to_dense() if isinstance(M, BandedMatrix) else np.asarray(M)
    A = A.astype(complex)
    eye = np.eye(A.shape[0])
    vals = np.empty((y.size, x.size))
    for j, yy in enumerate(y):
        for i, xx in enumerate(x):
            vals[j, i] = sigma_min(A - (xx + 1j * yy) * eye)
    return PseudospectrumGrid(x, y, vals)


# --------------------------------------------------------------------------
# residual convergence of truncated modes
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class ConvergenceStudy:
    kind: str
    lam: float
    Ns: np.ndarray
    residuals: np.ndarray          # numeric ||(M - lam) u||
    boundary_residuals: np.ndarray  # exact residual from the cut couplings
    x: np.ndarray                   # N/k (Toeplitz) or floor(N/2)/k (Laurent)
    predicted_B: float
    slope: float
    r2: float

    @property
    def predicted_bound(self) -> np.ndarray:
        """``C exp(-B x)`` anchored at the first point."""
        return self.boundary_residuals[0] * np.exp(-self.predicted_B * (self.x - self.x[0]))


def residual_convergence(spec: KToeplitzSpec, lam: float, Ns: Sequence[int],
                         kind: Optional[str] = None, use: str = "numeric",
                         tol: Tolerances = DEFAULT) -> ConvergenceStudy:
    """Residual of truncated modes versus N with the fitted exponential rate.

    ``kind='toeplitz'`` truncates the pseudoeigenvector of ``T_N`` (lam in
    the winding region, predicted ``B = r - b~`` per cell, abscissa N/k);
    ``kind='laurent'`` truncates the defected Laurent eigenvector (lam
    outside it, ``B = b~ - r``, abscissa floor(N/2)/k). ``use`` selects
    which residual enters the fit: the numerically evaluated one or the
    exact boundary one (immune to the floating-point floor).
    """
    cls = classify(spec, lam, tol)
    if kind is None:
        kind = "laurent" if cls.region == Region.WIND_COMPLEMENT else "toeplitz"
    Ns = np.asarray(Ns, dtype=int)
    res, bres = [], []
    for N in Ns:
        if kind == "toeplitz":
            mode = build_bulk_mode(spec, lam, int(N), tol)
        else:
            mode = build_laurent_defect_mode(spec, lam, int(N), tol=tol)
        res.append(mode.residual)
        bres.append(mode.info["boundary_residual"])
    res, bres = np.asarray(res), np.asarray(bres)
    if kind == "toeplitz":
        x = Ns / spec.k
        B = cls.rate_left
    else:
        x = (Ns // 2) / spec.k
        B = cls.beta_tilde - spec.r
    ydata = res if use == "numeric" else bres
    slope, _, r2 = loglinear_fit(x, ydata)
    return ConvergenceStudy(kind, float(lam), Ns, res, bres, x, float(B), slope, r2)
