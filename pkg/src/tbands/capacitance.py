"""Gauge capacitance matrices of non-Hermitian subwavelength resonator chains.

A chain is k-periodic with resonator lengths ``l_i`` and spacings ``s_i``
(``s_i`` separates resonator i from resonator i+1) under an imaginary gauge
potential ``gamma``. Row i of the capacitance matrix couples resonator i to
its neighbours through the exponential profile inside resonator i, so every
entry of row i carries ``l_i``:

    diag   (gamma/s_i) l_i / (1 - e^{-gamma l_i}) - (gamma/s_{i-1}) l_i / (1 - e^{gamma l_i})
    super  -(gamma/s_i) l_i / (1 - e^{-gamma l_i})
    sub    (gamma/s_{i-1}) l_i / (1 - e^{gamma l_i})

Rows sum to zero and ``prod b_i / c_i = exp(gamma * sum l_i)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy.optimize import brentq

from .errors import (
    DomainError,
    InsideBand,
    NoDefectFrequency,
)
from .ktoeplitz import (
    BandedMatrix,
    ComplexQuasimomentum,
    DefectSpec,
    KToeplitzSpec,
    apply_defect,
    make_spec,
    truncate_toeplitz,
)
from .modes import ModeProfile, decay_fit, eigenvector_profile, finite_spectrum, log_abs_profile
from .numerics import (
    TridiagonalProfile,
    log_chebyshev_U,
    periodic_trapezoid,
    sigma_min,
    symmetrize_tridiagonal,
    tridiagonal_green_column,
)
from .regions import band_functions, classify, regions
from .tolerances import DEFAULT, Tolerances

__all__ = [
    "ResonatorChain",
    "OmegaPoint",
    "SubwavelengthBands",
    "EquivalenceReport",
    "finite_capacitance",
    "quasiperiodic_capacitance",
    "generalized_capacitance",
    "to_ktoeplitz",
    "subwavelength_bands",
    "defect_operator",
    "monomer_defect_integral",
    "monomer_defect_frequency",
    "greens_closed",
    "greens_numeric",
    "defect_mode_equivalence",
    "out_of_band_eigenvalues",
]


@dataclass(frozen=True)
class ResonatorChain:
    lengths: tuple
    spacings: tuple
    gamma: float
    delta: float = 1e-3
    wave_speeds: Optional[tuple] = None

    def __post_init__(self):
        ell = np.atleast_1d(np.asarray(self.lengths, dtype=float))
        s = np.atleast_1d(np.asarray(self.spacings, dtype=float))
        if ell.size == 0 or ell.size != s.size:
            raise ValueError("lengths and spacings must be nonempty and of equal length")
        v = np.ones_like(ell) if self.wave_speeds is None else np.atleast_1d(np.asarray(self.wave_speeds, dtype=float))
        if v.size != ell.size:
            raise ValueError("wave_speeds must have one entry per resonator in the cell")
        if np.any(ell <= 0) or np.any(s <= 0) or np.any(v <= 0) or not self.delta > 0:
            raise ValueError("lengths, spacings, wave speeds and delta must be positive")
        if self.gamma == 0 or not np.isfinite(self.gamma):
            raise ValueError("gamma must be a nonzero real number")
        object.__setattr__(self, "lengths", tuple(ell.tolist()))
        object.__setattr__(self, "spacings", tuple(s.tolist()))
        object.__setattr__(self, "wave_speeds", tuple(v.tolist()))
        object.__setattr__(self, "gamma", float(self.gamma))
        object.__setattr__(self, "delta", float(self.delta))

    @property
    def k(self) -> int:
        return len(self.lengths)

    @property
    def L(self) -> float:
        return float(sum(self.lengths) + sum(self.spacings))

    @property
    def r(self) -> float:
        """``gamma / 2 * sum(l_i)``."""
        return 0.5 * self.gamma * sum(self.lengths)


@dataclass(frozen=True)
class OmegaPoint:
    omega: float
    lam: float

    @classmethod
    def from_lambda(cls, lam: float) -> "OmegaPoint":
        if lam < 0:
            raise DomainError("negative lambda has no real frequency")
        return cls(math.sqrt(lam), float(lam))


def _row_terms(gamma, ell, s_here, s_prev):
    """(super, sub) entries of a row whose resonator has length ``ell``."""
    sup = -(gamma / s_here) * ell / (-math.expm1(-gamma * ell))
    sub = (gamma / s_prev) * ell / (-math.expm1(gamma * ell))
    return sup, sub


def _cell_entries(chain: ResonatorChain):
    """Period-k (a, b, c) of the capacitance operator."""
    k, g = chain.k, chain.gamma
    ell, s = chain.lengths, chain.spacings
    a, b, c = np.empty(k), np.empty(k), np.empty(k)
    for i in range(k):
        sup, sub = _row_terms(g, ell[i], s[i], s[i - 1])
        a[i] = -(sup + sub)
        b[i] = sup
        # c_i couples site i+1 back to site i and lives in row i+1
        _, sub_next = _row_terms(g, ell[(i + 1) % k], s[(i + 1) % k], s[i])
        c[i] = sub_next
    return a, b, c


def to_ktoeplitz(chain: ResonatorChain, generalized: bool = False) -> KToeplitzSpec:
    """k-Toeplitz spec of the chain.

    With ``generalized=True`` row i is scaled by ``delta v_i^2 / l_i``
    (generalized capacitance); the scaling leaves ``r`` unchanged.
    """
    a, b, c = _cell_entries(chain)
    if generalized:
        w = chain.delta * np.asarray(chain.wave_speeds) ** 2 / np.asarray(chain.lengths)
        a, b = a * w, b * w
        c = c * np.roll(w, -1)
    return make_spec(a, b, c, chain.L)


def finite_capacitance(chain: ResonatorChain, N: int) -> BandedMatrix:
    """Finite gauge capacitance matrix of N resonators (corners included)."""
    if N < 2:
        raise ValueError("need at least two resonators")
    spec = to_ktoeplitz(chain)
    k = chain.k
    ell = chain.lengths
    s = chain.spacings
    first_sup, _ = _row_terms(chain.gamma, ell[0], s[0], s[-1])
    _, last_sub = _row_terms(chain.gamma, ell[(N - 1) % k], s[(N - 1) % k], s[(N - 2) % k])
    return truncate_toeplitz(spec, N, corner=(-first_sup, -last_sub))


def quasiperiodic_capacitance(chain: ResonatorChain, q) -> np.ndarray:
    """k x k quasiperiodic capacitance matrix at complex quasimomentum ``q``.

    Built directly from the entry formula; the cell-boundary couplings carry
    the Bloch factor ``z = exp(i alpha L - beta)`` (z on the lower-left
    corner, 1/z on the upper-right one).
    """
    if not isinstance(q, ComplexQuasimomentum):
        q = ComplexQuasimomentum(q[0], q[1], chain.L)
    z = np.exp(1j * q.alpha * chain.L - q.beta)
    k, g = chain.k, chain.gamma
    ell, s = chain.lengths, chain.spacings
    C = np.zeros((k, k), dtype=complex)
    for i in range(k):
        sup, sub = _row_terms(g, ell[i], s[i], s[i - 1])
        C[i, i] += -(sup + sub)
        C[i, (i + 1) % k] += sup * (z if i == k - 1 else 1.0)
        C[i, (i - 1) % k] += sub * (1.0 / z if i == 0 else 1.0)
    return C


def generalized_capacitance(chain: ResonatorChain, q) -> np.ndarray:
    """Row-scaled quasiperiodic matrix, row i times ``delta v_i^2 / l_i``."""
    w = chain.delta * np.asarray(chain.wave_speeds) ** 2 / np.asarray(chain.lengths)
    return w[:, None] * quasiperiodic_capacitance(chain, q)


@dataclass(frozen=True)
class SubwavelengthBands:
    alpha: np.ndarray
    lam: np.ndarray       # (n_alpha, k)
    omega: np.ndarray     # (n_alpha, k), NaN where lam < 0
    negative: np.ndarray  # mask of points with lam < 0

    def points(self, i: int, branch: int) -> OmegaPoint:
        return OmegaPoint(float(self.omega[i, branch]), float(self.lam[i, branch]))


def subwavelength_bands(chain: ResonatorChain, alpha_grid, generalized: bool = False) -> SubwavelengthBands:
    """Band functions in lambda and omega = sqrt(lambda)."""
    table = band_functions(to_ktoeplitz(chain, generalized), alpha_grid)
    lam = table.values
    neg = lam < -1e-12 * max(1.0, float(np.max(np.abs(lam))))
    omega = np.where(neg, np.nan, np.sqrt(np.clip(lam, 0.0, None)))
    return SubwavelengthBands(table.alpha, lam, omega, neg)


def defect_operator(chain: ResonatorChain, N: int, eta: float, site: int) -> BandedMatrix:
    """Finite capacitance matrix with row ``site`` scaled by ``1 + eta``."""
    return apply_defect(finite_capacitance(chain, N), DefectSpec.multiplicative(site, eta))


# --------------------------------------------------------------------------
# monomer defect frequency
# --------------------------------------------------------------------------

def _monomer_abc(chain: ResonatorChain):
    if chain.k != 1:
        raise ValueError("closed-form defect frequencies need a monomer chain (k = 1)")
    spec = to_ktoeplitz(chain)
    return float(spec.a[0]), float(spec.b[0]), float(spec.c[0])


def monomer_defect_integral(chain: ResonatorChain, omega: float, method: str = "closed",
                            tol: Tolerances = DEFAULT) -> float:
    """Brillouin-zone average of ``lambda(alpha) / (omega^2 - lambda(alpha))``.

    ``lambda(alpha) = a - 2 sqrt(bc) cos(alpha)`` is the monomer band
    function. Closed form: ``sgn(omega^2 - a) omega^2 / sqrt((a-omega^2)^2 - 4bc) - 1``.
    A defect with strength eta sits at the frequency where this equals 1/eta.
    """
    a, b, c = _monomer_abc(chain)
    w2 = float(omega) ** 2
    disc = (a - w2) ** 2 - 4 * b * c
    if disc <= 0:
        raise InsideBand(f"omega^2 = {w2} lies in the band [{a - 2*math.sqrt(b*c)}, {a + 2*math.sqrt(b*c)}]")
    if method == "closed":
        return math.copysign(1.0, w2 - a) * w2 / math.sqrt(disc) - 1.0
    if method == "quadrature":
        t = 2 * math.sqrt(b * c)

        def integrand(al):
            lam = a - t * np.cos(al)
            return lam / (w2 - lam)

        return float(periodic_trapezoid(integrand, tol=tol))
    raise ValueError(f"unknown method {method!r}")


def _closed_form_lambda(a, bc, eta):
    root = math.sqrt((eta + 1) ** 2 * (a * a * eta * eta + 8 * bc * eta + 4 * bc))
    return (a * (eta + 1) ** 2 + math.copysign(1.0, eta) * root) / (2 * eta + 1)


def _root_lambda(a, bc, eta):
    """Root of the integral condition ``F(lambda) = 1/eta`` in the gap.

    Multiplying through by the square root gives the regular function
    ``H(lambda) = lambda eta / (eta + 1) - sgn(lambda - a) sqrt((a - lambda)^2 - 4bc)``,
    which changes sign exactly once on the relevant gap.
    """
    t = 2 * math.sqrt(bc)
    k = eta / (eta + 1)

    def H(lam):
        disc = max((a - lam) ** 2 - t * t, 0.0)
        return lam * k - math.copysign(1.0, lam - a) * math.sqrt(disc)

    rtol = 4 * np.finfo(float).eps
    if eta > 0:
        lo = a + t
        hi = lo + max(1.0, abs(lo))
        while H(hi) > 0:
            hi = lo + 2 * (hi - lo)
            if hi > 1e300:
                raise NoDefectFrequency("no root of the defect condition above the band")
        return brentq(H, lo, hi, xtol=1e-300, rtol=rtol, maxiter=500)
    hi = a - t
    if hi <= 0 or H(0.0) * H(hi) > 0:
        raise NoDefectFrequency(f"no gap frequency below the band for eta = {eta}")
    return brentq(H, 0.0, hi, xtol=1e-300, rtol=rtol, maxiter=500)


def monomer_defect_frequency(chain: ResonatorChain, eta: float, method: str = "both",
                             rtol: float = 1e-10) -> OmegaPoint:
    """Unique defect frequency of a monomer chain with defect strength eta.

    ``method='closed'`` uses the closed-form expression, ``'root'`` solves
    the integral condition numerically, ``'both'`` (default) computes both
    and raises :class:`NoDefectFrequency` if they disagree. At eta = -1/2,
    where the closed form is singular, the root path is used alone.
    """
    if not eta > -1:
        raise DomainError("eta must exceed -1")
    if eta == 0:
        raise NoDefectFrequency("eta = 0 is no defect; the frequency merges with the band edge")
    a, b, c = _monomer_abc(chain)
    bc = b * c
    closed = None if abs(2 * eta + 1) < 1e-12 else _closed_form_lambda(a, bc, eta)
    if method == "closed":
        if closed is None:
            raise NoDefectFrequency("closed form is singular at eta = -1/2")
        return OmegaPoint.from_lambda(closed)
    root = _root_lambda(a, bc, eta)
    if method == "both" and closed is not None:
        if abs(closed - root) > rtol * max(1.0, abs(root)):
            raise NoDefectFrequency(f"closed form {closed} and root {root} disagree")
    return OmegaPoint.from_lambda(root)


# --------------------------------------------------------------------------
# Green's functions
# --------------------------------------------------------------------------

def _as_spec(model) -> KToeplitzSpec:
    return to_ktoeplitz(model) if isinstance(model, ResonatorChain) else model


def _green_profile(log_abs, phase, spec, lam, j, kind, solve_residual=None):
    finite = np.isfinite(log_abs)
    shift = np.max(log_abs[finite])
    with np.errstate(under="ignore"):
        vals = phase * np.exp(log_abs - shift)
    norm = np.linalg.norm(vals)
    entries = vals / norm
    rel = log_abs - shift - math.log(norm)
    rl, rr, _, _ = decay_fit(log_abs_profile(rel), spec.k, center=j - 1)
    cls = classify(spec, lam)
    # ||(M - lam) G e_j|| / ||G e_j|| = 1 / ||G e_j||
    res = math.exp(-(shift + math.log(norm)))
    info = {"region": cls.region.value, "beta_tilde": cls.beta_tilde,
            "predicted_rates": (cls.rate_left, cls.rate_right), "kind": kind,
            "log_abs_unscaled": log_abs, "phase": phase}
    if solve_residual is not None:
        info["solve_residual"] = solve_residual
    return ModeProfile(entries, float(lam), rl, rr, res, rel, spec.k, int(j), (), info)


def greens_closed(model, omega: float, j: int, N: int) -> ModeProfile:
    """Column j (1-based) of ``(T_N - omega^2)^{-1}`` for a monomer.

    ``T_N`` is the pure Toeplitz section with diagonal a, superdiagonal b and
    subdiagonal c. With ``d = (a - omega^2) / (2 sqrt(bc))`` and ``|d| > 1``

        G_ij = (-1)^{i+j} b^{j-i} U_{i-1}(d) U_{N-j}(d) / (sqrt(bc)^{j-i+1} U_N(d)),  i <= j
        G_ij = (-1)^{i+j} c^{i-j} U_{j-1}(d) U_{N-i}(d) / (sqrt(bc)^{i-j+1} U_N(d)),  i > j

    evaluated entirely in log form, so any N is overflow-free.
    """
    spec = _as_spec(model)
    if spec.k != 1:
        raise ValueError("closed-form Green's function is for k = 1")
    if not 1 <= j <= N:
        raise ValueError("source index outside 1..N")
    a, b, c = spec.a[0], spec.b[0], spec.c[0]
    lam = float(omega) ** 2
    sq = math.sqrt(b * c)
    d = (a - lam) / (2 * sq)
    if abs(d) <= 1:
        raise InsideBand(f"|d| = {abs(d)} <= 1: omega^2 lies in the band; use greens_numeric")
    i = np.arange(1, N + 1)
    upper = i <= j
    lo_idx = np.where(upper, i - 1, j - 1)
    hi_idx = np.where(upper, N - j, N - i)
    s1, l1 = log_chebyshev_U(lo_idx, d)
    s2, l2 = log_chebyshev_U(hi_idx, d)
    sN, lN = log_chebyshev_U(N, d)
    dist = np.abs(i - j)
    coup = np.where(upper, b, c)
    log_abs = dist * np.log(np.abs(coup)) - (dist + 1) * math.log(sq) + l1 + l2 - lN
    sign = ((-1.0) ** (i + j)) * np.sign(coup) ** dist * s1 * s2 * sN
    return _green_profile(log_abs, sign.astype(float), spec, lam, j, "closed")


def _singularity_measure(M: BandedMatrix, lam: float) -> float:
    """Smallest singular value of the gauge-symmetrized ``M - lam``.

    For non-normal chains ``sigma_min(M - lam)`` is exponentially small
    across the whole band (pseudospectral effect) although the matrix is
    far from singular; the symmetrized matrix measures the true distance of
    ``lam`` to the spectrum.
    """
    if not np.iscomplexobj(M.diag) and np.all(M.sub * M.sup > 0):
        off, _ = symmetrize_tridiagonal(M.diag, M.sub, M.sup)
        S = BandedMatrix(np.asarray(M.diag, dtype=float), off, off)
        return sigma_min(S.to_dense() - lam * np.eye(M.N))
    return sigma_min(M.to_dense() - lam * np.eye(M.N))


def greens_numeric(model, omega: float, j: int, N: int, matrix: Optional[BandedMatrix] = None,
                   tol: Tolerances = DEFAULT) -> ModeProfile:
    """Column j (1-based) of the inverse of ``M - omega^2`` for any k.

    ``M`` defaults to the pure Toeplitz section of the model. When
    ``M - omega^2`` is numerically singular (smallest singular value of its
    gauge-symmetrized form below ``tol.pseudoinverse_sigma``) the
    minimum-norm least-squares solution is returned; otherwise the column is assembled
    from the two boundary solutions of the three-term recurrence, which
    keeps exponentially small entries accurate.
    """
    spec = _as_spec(model)
    M = truncate_toeplitz(spec, N) if matrix is None else matrix
    lam = float(omega) ** 2
    dense = M.to_dense() - lam * np.eye(M.N)
    rhs = np.zeros(M.N)
    rhs[j - 1] = 1.0
    if _singularity_measure(M, lam) < tol.pseudoinverse_sigma:
        u = np.linalg.lstsq(dense, rhs, rcond=None)[0]
        with np.errstate(divide="ignore"):
            log_abs = np.log(np.abs(u))
        phase = np.sign(u)
        kind = "pseudoinverse"
    else:
        prof = tridiagonal_green_column(M.diag, M.sub, M.sup, lam, j - 1)
        log_abs, phase = prof.log_abs, prof.phase.real
        u = prof.values()
        kind = "recurrence"
    solve_res = float(np.linalg.norm(dense @ np.nan_to_num(u) - rhs))
    return _green_profile(log_abs, phase, spec, lam, j, kind, solve_res)


# --------------------------------------------------------------------------
# defect modes of finite chains
# --------------------------------------------------------------------------

def out_of_band_eigenvalues(M: BandedMatrix, spec: KToeplitzSpec, slack: float = 1e-6,
                            zero_tol: float = 1e-9) -> np.ndarray:
    """Real eigenvalues of ``M`` outside the open-limit spectrum of ``spec``.

    The zero eigenvalue of capacitance matrices (constant null vector) is
    excluded.
    """
    w = np.asarray(finite_spectrum(M))
    w = w[np.abs(np.imag(w)) < 1e-9].real if np.iscomplexobj(w) else w
    reg = regions(spec)
    scale = max(1.0, float(np.max(np.abs(w))))
    keep = [x for x in w if not reg.in_open(x, slack * scale) and abs(x) > zero_tol * scale]
    return np.asarray(keep)


@dataclass(frozen=True)
class EquivalenceReport:
    status: str                 # 'ok' or 'Empty'
    lam: Optional[float] = None
    omega: Optional[float] = None
    similarity: Optional[float] = None
    eigenvector: Optional[np.ndarray] = None
    green: Optional[np.ndarray] = None


def defect_mode_equivalence(chain: ResonatorChain, eta: float, m: int, N: int) -> EquivalenceReport:
    """Compare the defect eigenvector of ``B C`` with the Green's column.

    The eigenvector for the out-of-band eigenvalue ``lam_N`` of the defected
    finite capacitance matrix is proportional to column m of
    ``(C - lam_N)^{-1}`` (C undefected). Returns the cosine similarity.
    """
    spec = to_ktoeplitz(chain)
    C = finite_capacitance(chain, N)
    BC = apply_defect(C, DefectSpec.multiplicative(m, eta))
    lams = out_of_band_eigenvalues(BC, spec)
    if eta == 0 or lams.size == 0:
        return EquivalenceReport("Empty")
    if lams.size > 1:
        raise NoDefectFrequency(f"expected one out-of-band eigenvalue, found {lams.size}")
    lam = float(lams[0])
    u = eigenvector_profile(BC, lam).normalized()
    g = tridiagonal_green_column(C.diag, C.sub, C.sup, lam, m - 1).normalized()
    sim = float(abs(np.vdot(u, g)))
    return EquivalenceReport("ok", lam, math.sqrt(lam) if lam >= 0 else float("nan"), sim, u, g)
