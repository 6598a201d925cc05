"""Numerical kernels: eigensolvers, real polynomial roots, Chebyshev U,
periodic quadrature, log-linear regression and tridiagonal recurrences.

Dense linear algebra is delegated to LAPACK through scipy; everything that
needs to survive exponentially small or large magnitudes (Chebyshev
polynomials of large order, Green's function columns of non-normal
tridiagonal matrices) is evaluated in log-scaled form.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
import scipy.linalg as sla
from numpy.polynomial import Polynomial

from .errors import (
    DomainError,
    EigFailure,
    InsufficientData,
    NoConvergence,
    NonPositiveData,
    RootFindingFailure,
)
from .tolerances import DEFAULT, Tolerances

EPS = np.finfo(float).eps

__all__ = [
    "Polynomial",
    "eig_dense",
    "sigma_min",
    "trim_polynomial",
    "real_roots",
    "chebyshev_U",
    "log_chebyshev_U",
    "arccosh_pos",
    "periodic_trapezoid",
    "loglinear_fit",
    "symmetrize_tridiagonal",
    "TridiagonalProfile",
    "tridiagonal_green_column",
    "tridiagonal_eigenvector",
]


# --------------------------------------------------------------------------
# dense eigenproblems and singular values
# --------------------------------------------------------------------------

def eig_dense(M, vectors: bool = False, tol: Tolerances = DEFAULT):
    """Eigenvalues (and optionally right eigenvectors) of a dense matrix.

    Backed by LAPACK ``geev`` (Hessenberg reduction + shifted QR). Each pair
    is checked against the backward-error contract
    ``||Mv - lam v|| <= c n eps ||M||``.
    """
    M = np.asarray(M)
    n = M.shape[0]
    if M.ndim != 2 or M.shape[1] != n:
        raise ValueError("eig_dense expects a square matrix")
    if n > tol.dense_limit:
        raise ValueError(f"matrix of size {n} exceeds the dense limit {tol.dense_limit}")
    try:
        w, V = sla.eig(M, right=True)
    except (sla.LinAlgError, ValueError) as exc:
        raise EigFailure(str(exc)) from exc
    if not np.all(np.isfinite(w)):
        raise EigFailure("non-finite eigenvalues")
    norm = np.linalg.norm(M, 2) if n <= 512 else np.linalg.norm(M, "fro")
    res = np.linalg.norm(M @ V - V * w, axis=0)
    if np.any(res > 1e3 * n * EPS * max(norm, 1.0)):
        raise EigFailure("eigenpairs violate the backward-error bound")
    order = np.lexsort((w.imag, w.real))
    if vectors:
        return w[order], V[:, order]
    return w[order]


def sigma_min(M) -> float:
    """Smallest singular value of ``M``."""
    s = sla.svdvals(np.asarray(M))
    return float(s[-1]) if s.size else 0.0


# --------------------------------------------------------------------------
# polynomials
# --------------------------------------------------------------------------

def trim_polynomial(p) -> Polynomial:
    """Drop leading coefficients below ``1e-14 * max|coeff|``."""
    coef = np.asarray(p.coef if isinstance(p, Polynomial) else p, dtype=float)
    scale = np.max(np.abs(coef)) if coef.size else 0.0
    if scale == 0.0:
        return Polynomial([0.0])
    keep = np.nonzero(np.abs(coef) > 1e-14 * scale)[0]
    return Polynomial(coef[: keep[-1] + 1])


def _newton_polish(p: Polynomial, x: float, steps: int = 8) -> float:
    dp = p.deriv()
    for _ in range(steps):
        d = dp(x)
        if d == 0.0:
            break
        step = p(x) / d
        x_new = x - step
        if not np.isfinite(x_new) or abs(p(x_new)) > abs(p(x)):
            break
        x = x_new
        if abs(step) <= 4 * EPS * max(1.0, abs(x)):
            break
    return x


def real_roots(p, tol: float | None = None, multiplicity: bool = False):
    """Sorted real roots of a real polynomial (coefficients ascending).

    Roots come from companion-matrix eigenvalues; those whose imaginary part
    is below ``tol * scale`` are kept, clusters (multiple roots) are merged
    and simple roots are Newton-polished. With ``multiplicity=True`` a second
    array with the multiplicity of each root is returned.
    """
    tol = DEFAULT.real_root_imag if tol is None else tol
    p = trim_polynomial(p)
    if p.degree() < 1:
        raise DomainError("real_roots needs a polynomial of degree >= 1")
    z = np.roots(p.coef[::-1])
    if not np.all(np.isfinite(z)):
        raise RootFindingFailure("companion eigenvalues did not converge")
    coef = p.coef
    scale = max(1.0, float(np.max(np.abs(coef[:-1] / coef[-1]))) ** (1.0 / p.degree()))

    # cluster nearby roots, a multiple root splits into a small star
    merge = DEFAULT.root_merge * scale
    unused = list(np.argsort(z.real))
    clusters = []
    while unused:
        i = unused.pop(0)
        group = [i]
        for j in list(unused):
            if abs(z[j] - z[i]) < merge:
                group.append(j)
                unused.remove(j)
        clusters.append(group)

    roots, mult = [], []
    for group in clusters:
        centre = np.mean(z[group])
        if abs(centre.imag) >= tol * scale:
            continue
        if len(group) == 1:
            if abs(z[group[0]].imag) >= tol * scale:
                continue
            x = _newton_polish(p, float(centre.real))
        else:
            x = float(centre.real)
        roots.append(x)
        mult.append(len(group))
    order = np.argsort(roots)
    roots = np.asarray(roots, dtype=float)[order]
    if multiplicity:
        return roots, np.asarray(mult, dtype=int)[order]
    return roots


# --------------------------------------------------------------------------
# Chebyshev polynomials of the second kind, arccosh
# --------------------------------------------------------------------------

def arccosh_pos(x):
    """Nonnegative root of arccosh for ``x >= 1`` (accurate near 1)."""
    x = np.asarray(x, dtype=float)
    if np.any(x < 1.0):
        raise DomainError("arccosh_pos requires x >= 1")
    out = np.arccosh(x)
    return float(out) if out.ndim == 0 else out


def _chebyshev_U_recursion(n: int, x):
    u_prev, u = np.ones_like(x), 2.0 * x
    if n == 0:
        return u_prev
    for _ in range(n - 1):
        u_prev, u = u, 2.0 * x * u - u_prev
    return u


def _log_sinh(y):
    # log(sinh y) for y > 0 without overflow
    return y + np.log(-np.expm1(-2.0 * y)) - math.log(2.0)


def log_chebyshev_U(n, x):
    """Return ``(sign, log|U_n(x)|)`` for ``|x| > 1``.

    ``n`` and ``x`` broadcast against each other.

    Uses ``U_n(cosh t) = sinh((n+1) t) / sinh(t)`` together with the parity
    ``U_n(-x) = (-1)^n U_n(x)``; no intermediate quantity overflows.
    """
    x = np.asarray(x, dtype=float)
    n = np.asarray(n)
    if np.any(np.abs(x) <= 1.0):
        raise DomainError("log_chebyshev_U requires |x| > 1")
    if np.any(n < 0):
        raise DomainError("order must be nonnegative")
    t = np.arccosh(np.abs(x))
    logabs = _log_sinh((n + 1) * t) - _log_sinh(t)
    sign = np.where(x < 0, (-1.0) ** n, 1.0) * np.ones_like(logabs)
    if logabs.ndim == 0:
        return float(sign), float(logabs)
    return sign, logabs


def chebyshev_U(n: int, x, tol: Tolerances = DEFAULT):
    """Chebyshev polynomial of the second kind ``U_n(x)``.

    The three-term recursion is used for ``|x| <= 1.5`` or small ``n``; the
    hyperbolic form elsewhere. Raises ``OverflowError`` when the value does
    not fit in a double (use :func:`log_chebyshev_U` instead).
    """
    if n < 0:
        raise DomainError("order must be nonnegative")
    x = np.asarray(x, dtype=float)
    use_recursion = np.abs(x) <= tol.chebyshev_recursion_x
    if n <= tol.chebyshev_recursion_n or np.all(use_recursion):
        out = _chebyshev_U_recursion(n, x)
    else:
        out = np.empty_like(x)
        out[...] = _chebyshev_U_recursion(n, np.where(use_recursion, x, 0.0))
        big = ~use_recursion
        if np.any(big):
            sign, logabs = log_chebyshev_U(n, x[big] if x.ndim else x)
            with np.errstate(over="ignore"):
                val = sign * np.exp(logabs)
            if x.ndim:
                out[big] = val
            else:
                out = np.asarray(val)
    if not np.all(np.isfinite(out)):
        raise OverflowError(f"U_{n}(x) overflows; use log_chebyshev_U")
    return float(out) if out.ndim == 0 else out


# --------------------------------------------------------------------------
# quadrature and regression
# --------------------------------------------------------------------------

def periodic_trapezoid(f: Callable, period: float = 2 * np.pi, n: int = 16,
                       tol: Tolerances = DEFAULT) -> complex:
    """Mean value ``(1/period) * integral of f`` over one period.

    Uniform trapezoid rule with point doubling until successive estimates
    agree to ``tol.quadrature_rtol`` (relative, with an absolute floor of
    the same size). ``f`` must accept a numpy array of abscissae.
    """
    prev = None
    while n <= tol.quadrature_max_points:
        x = -period / 2 + period * (np.arange(n) + 1.0) / n
        est = np.mean(f(x))
        if prev is not None and abs(est - prev) <= tol.quadrature_rtol * max(abs(est), 1.0):
            return complex(est) if np.iscomplexobj(est) else float(est)
        prev = est
        n *= 2
    raise NoConvergence("periodic trapezoid did not converge")


def loglinear_fit(x, y):
    """Least-squares fit of ``log y = slope * x + intercept``.

    Returns ``(slope, intercept, r2)``. For constant data ``r2`` is 1.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.size < 3:
        raise InsufficientData("log-linear fit needs at least 3 points")
    if np.any(y <= 0):
        raise NonPositiveData("log-linear fit needs positive ordinates")
    return _linear_fit(x, np.log(y))


def _linear_fit(x, ly):
    slope, intercept = np.polyfit(x, ly, 1)
    resid = ly - (slope * x + intercept)
    ss_tot = float(np.sum((ly - ly.mean()) ** 2))
    ss_res = float(np.sum(resid ** 2))
    r2 = 1.0 if ss_tot <= 1e-30 * max(1.0, float(np.sum(ly ** 2))) else 1.0 - ss_res / ss_tot
    return float(slope), float(intercept), r2


# --------------------------------------------------------------------------
# tridiagonal machinery
# --------------------------------------------------------------------------

def symmetrize_tridiagonal(diag, sub, sup):
    """Diagonal similarity turning a real tridiagonal matrix with
    ``sub[i] * sup[i] > 0`` into a symmetric one.

    Returns ``(off, log_d)`` where ``off`` is the symmetric off-diagonal and
    ``D = diag(exp(log_d))`` satisfies ``D^{-1} M D = tridiag(off, diag, off)``.
    """
    sub = np.asarray(sub, dtype=float)
    sup = np.asarray(sup, dtype=float)
    prod = sub * sup
    if np.any(prod <= 0):
        raise DomainError("tridiagonal matrix is not symmetrizable (sub*sup <= 0)")
    off = np.sign(sup) * np.sqrt(prod)
    # d_{i+1} / d_i = sqrt(sub_i / sup_i)
    log_d = np.concatenate([[0.0], np.cumsum(0.5 * np.log(sub / sup))])
    return off, log_d


@dataclass(frozen=True)
class TridiagonalProfile:
    """A vector stored as log-magnitudes and unit phases.

    Entries of Green's columns and eigenvectors of non-normal tridiagonal
    matrices span hundreds of orders of magnitude; this representation keeps
    every entry's relative accuracy.
    """
    log_abs: np.ndarray
    phase: np.ndarray

    def normalized(self) -> np.ndarray:
        """Entries scaled to unit 2-norm (tiny entries may underflow to 0)."""
        shift = np.max(self.log_abs[np.isfinite(self.log_abs)])
        w = np.exp(self.log_abs - shift)
        u = self.phase * w
        return u / np.linalg.norm(u)

    def values(self) -> np.ndarray:
        """Unscaled entries (may overflow/underflow)."""
        with np.errstate(over="ignore", under="ignore"):
            return self.phase * np.exp(self.log_abs)


_RESCALE_HI = 1e100
_RESCALE_LO = 1e-100


def _sweep(delta, off_prev, off_next, reverse: bool):
    """Three-term recurrence from one end of the matrix.

    Forward (``reverse=False``): ``phi_0 = 1`` and row ``i`` gives
    ``phi_{i+1} = -(delta_i phi_i + off_prev_{i-1} phi_{i-1}) / off_next_i``.
    Backward sweeps are obtained by reversing the inputs. Returns mantissas
    and per-entry log scales.
    """
    n = delta.size
    dtype = np.result_type(delta, off_prev, off_next, float)
    mant = np.zeros(n, dtype=dtype)
    logs = np.zeros(n)
    cur = 0.0
    p_prev, p = 0.0, 1.0
    mant[0] = 1.0
    for i in range(n - 1):
        left = off_prev[i - 1] * p_prev if i > 0 else 0.0
        p_next = -(delta[i] * p + left) / off_next[i]
        mag = abs(p_next)
        if mag > _RESCALE_HI or (0.0 < mag < _RESCALE_LO):
            p /= mag
            p_next /= mag
            cur += math.log(mag)
        p_prev, p = p, p_next
        mant[i + 1] = p
        logs[i + 1] = cur
    return mant, logs


def _two_sided(diag, sub, sup, lam):
    delta = np.asarray(diag) - lam
    sub = np.asarray(sub)
    sup = np.asarray(sup)
    fm, fl = _sweep(delta, sub, sup, reverse=False)
    bm, bl = _sweep(delta[::-1], sup[::-1], sub[::-1], reverse=True)
    return delta, fm, fl, bm[::-1], bl[::-1]


def _twist_gamma(delta, sub, sup, fm, fl, bm, bl):
    """Row-p residual of the vector glued at p, for every p."""
    n = delta.size
    gamma = delta.astype(np.result_type(delta, fm, bm, float)).copy()
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        if n > 1:
            ratio_f = fm[:-1] / fm[1:] * np.exp(fl[:-1] - fl[1:])
            gamma[1:] += sub * ratio_f
            ratio_b = bm[1:] / bm[:-1] * np.exp(bl[1:] - bl[:-1])
            gamma[:-1] += sup * ratio_b
    return gamma


def _glue(fm, fl, bm, bl, p):
    n = fm.size
    log_abs = np.empty(n)
    phase = np.empty(n, dtype=np.result_type(fm, bm))
    with np.errstate(divide="ignore"):
        lf = np.log(np.abs(fm[: p + 1])) + fl[: p + 1]
        lb = np.log(np.abs(bm[p:])) + bl[p:]
    log_abs[: p + 1] = lf - lf[p]
    log_abs[p:] = lb - lb[0]
    sf = _unit(fm[: p + 1])
    sb = _unit(bm[p:])
    phase[: p + 1] = sf / sf[p]
    phase[p:] = sb / sb[0]
    return log_abs, phase


def _unit(z):
    a = np.abs(z)
    return np.where(a > 0, z / np.where(a > 0, a, 1.0), 1.0)


def tridiagonal_green_column(diag, sub, sup, lam, j: int) -> TridiagonalProfile:
    """Column ``j`` (0-based) of ``(M - lam I)^{-1}`` for tridiagonal ``M``.

    ``sub[i] = M[i+1, i]`` and ``sup[i] = M[i, i+1]`` must be nonzero. The
    column is assembled from the top-boundary solution (rows above ``j``)
    and the bottom-boundary solution (rows below ``j``) of the three-term
    recurrence, each swept in its stable direction, and normalised by the
    residual in row ``j``.
    """
    delta, fm, fl, bm, bl = _two_sided(diag, sub, sup, lam)
    gamma = _twist_gamma(delta, np.asarray(sub), np.asarray(sup), fm, fl, bm, bl)
    g = gamma[j]
    if g == 0 or not np.isfinite(g):
        raise np.linalg.LinAlgError("matrix is singular at the source row")
    log_abs, phase = _glue(fm, fl, bm, bl, j)
    return TridiagonalProfile(log_abs - math.log(abs(g)), phase / (g / abs(g)))


def tridiagonal_eigenvector(diag, sub, sup, lam) -> tuple[TridiagonalProfile, int]:
    """Eigenvector of a tridiagonal matrix for an (accurate) eigenvalue.

    Glues the two boundary solutions at the row ``p`` whose residual is
    smallest (twisted factorisation). Returns the profile and ``p``.
    """
    delta, fm, fl, bm, bl = _two_sided(diag, sub, sup, lam)
    gamma = _twist_gamma(delta, np.asarray(sub), np.asarray(sup), fm, fl, bm, bl)
    mag = np.where(np.isfinite(gamma), np.abs(gamma), np.inf)
    p = int(np.argmin(mag))
    log_abs, phase = _glue(fm, fl, bm, bl, p)
    return TridiagonalProfile(log_abs, phase), p
