"""Reduced characteristic data, spectral regions and localisation classes.

For real ``lambda`` the characteristic polynomial of the symbol expands as

    det(f(alpha, beta) - lambda) = A e^{-i(alpha+i beta)} + B e^{i(alpha+i beta)} + g(lambda)

with ``A = (-1)^{k+1} prod c_i``, ``B = (-1)^{k+1} prod b_i`` and a real
polynomial ``g`` of degree k. Everything in this module is derived from
``(A, B, g)``: the open-limit spectrum ``|g| <= 2 sqrt(AB)``, the winding
region ``|g| < |A + B|`` and its edge ``g = +-(A + B)``.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Optional

import numpy as np
from numpy.polynomial import Polynomial

from .errors import OnBoundary
from .ktoeplitz import KToeplitzSpec, symbol_grid
from .numerics import arccosh_pos, real_roots
from .tolerances import DEFAULT, Tolerances

__all__ = [
    "ReducedSymbolData",
    "SpectralRegions",
    "Region",
    "FrequencyClassification",
    "BandTable",
    "GapTable",
    "reduce",
    "coeff_A_B",
    "beta_tilde",
    "alpha_star",
    "regions",
    "band_functions",
    "band_functions_reduced",
    "gap_functions",
    "winding_number",
    "in_winding_ellipse",
    "classify",
    "symmetrized_symbol",
]


@dataclass(frozen=True)
class ReducedSymbolData:
    A: float
    B: float
    r: float
    g: Polynomial

    @property
    def g_coeffs(self) -> np.ndarray:
        """Coefficients of g, ascending degree."""
        return self.g.coef

    @property
    def open_radius(self) -> float:
        """``2 |A| e^r = 2 sqrt(AB)``, half-width of the open-limit band in g."""
        return 2.0 * np.sqrt(self.A * self.B)

    @property
    def wind_radius(self) -> float:
        """``|A + B|``, half-width of the winding region in g."""
        return abs(self.A + self.B)

    @property
    def two_A_er(self) -> float:
        """``2 A e^r`` with the sign of A."""
        return float(np.sign(self.A)) * self.open_radius


def _continuant(a, b, c, lam: Polynomial) -> Polynomial:
    """det of the tridiagonal matrix (diag a, super b, sub c) minus lam."""
    prev, cur = Polynomial([1.0]), Polynomial([1.0])
    for j in range(len(a)):
        nxt = (a[j] - lam) * cur
        if j > 0:
            nxt = nxt - b[j - 1] * c[j - 1] * prev
        prev, cur = cur, nxt
    return cur


def reduce(spec: KToeplitzSpec) -> ReducedSymbolData:
    """Compute ``(A, B, r, g)`` for a spec."""
    k = spec.k
    a, b, c = spec.a, spec.b, spec.c
    lam = Polynomial([0.0, 1.0])
    sign = (-1.0) ** (k + 1)
    A = sign * float(np.prod(c))
    B = sign * float(np.prod(b))
    det0 = _continuant(a, b, c, lam)
    if k == 1:
        g = det0
    else:
        # p is the continuant of the interior sites 2..k-1 (1 for k = 2)
        p = _continuant(a[1:-1], b[1:-1], c[1:-1], lam) if k >= 3 else Polynomial([1.0])
        g = det0 - b[-1] * c[-1] * p
    return ReducedSymbolData(A, B, spec.r, g)


def coeff_A_B(spec: KToeplitzSpec) -> tuple[float, float]:
    """The coefficients ``(A, B)`` of the characteristic expansion."""
    red = reduce(spec)
    return red.A, red.B


def alpha_star(spec: KToeplitzSpec, lam, red: Optional[ReducedSymbolData] = None):
    """0 or pi: the real part of the quasimomentum of a gap frequency."""
    red = red or reduce(spec)
    x = -red.g(np.asarray(lam, dtype=float)) / red.two_A_er
    out = np.where(x >= 0, 0.0, np.pi)
    return float(out) if out.ndim == 0 else out


def beta_tilde(spec: KToeplitzSpec, lam, red: Optional[ReducedSymbolData] = None):
    """Deviation of the imaginary quasimomentum from ``r`` at real ``lam``.

    Zero inside the open-limit spectrum, otherwise the nonnegative
    ``arccosh(|g(lam)| / (2 sqrt(AB)))``.
    """
    red = red or reduce(spec)
    x = np.abs(red.g(np.asarray(lam, dtype=float))) / red.open_radius
    out = np.where(x > 1.0, arccosh_pos(np.maximum(x, 1.0)), 0.0)
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class SpectralRegions:
    """Open-limit spectrum, winding region and its edge on the real axis."""
    open: list
    wind: list
    det: list

    def in_open(self, lam: float, slack: float = 0.0) -> bool:
        return any(lo - slack <= lam <= hi + slack for lo, hi in self.open)

    def in_wind(self, lam: float) -> bool:
        return any(lo < lam < hi for lo, hi in self.wind)

    def to_rows(self):
        rows = [("open", lo, hi) for lo, hi in self.open]
        rows += [("wind", lo, hi) for lo, hi in self.wind]
        rows += [("det", x, x) for x in self.det]
        return rows


def _level_set(red: ReducedSymbolData, level: float, closed: bool):
    """Intervals where ``|g| <= level`` (closed) or ``< level`` (open)."""
    if level <= 0:
        return [], []
    pts = np.concatenate([real_roots(red.g - level), real_roots(red.g + level)])
    pts = np.unique(np.sort(pts))
    intervals = []
    for lo, hi in zip(pts[:-1], pts[1:]):
        if hi - lo <= 0:
            continue
        if abs(red.g(0.5 * (lo + hi))) < level:
            intervals.append([float(lo), float(hi)])
    if closed:
        merged = []
        for iv in intervals:
            if merged and abs(iv[0] - merged[-1][1]) <= 1e-9 * max(1.0, abs(iv[0])):
                merged[-1][1] = iv[1]
            else:
                merged.append(iv)
        intervals = merged
    return [tuple(iv) for iv in intervals], [float(x) for x in pts]


def regions(spec: KToeplitzSpec) -> SpectralRegions:
    """Real-axis spectral regions of the operator.

    For a Hermitian-oriented spec (prod b/c = 1) the winding region is empty.
    """
    red = reduce(spec)
    open_iv, _ = _level_set(red, red.open_radius, closed=True)
    if spec.orientation == "hermitian":
        return SpectralRegions(open_iv, [], [])
    wind_iv, _ = _level_set(red, red.wind_radius, closed=False)
    det = sorted({x for iv in wind_iv for x in iv})
    return SpectralRegions(open_iv, wind_iv, det)


# --------------------------------------------------------------------------
# band and gap functions
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class BandTable:
    alpha: np.ndarray
    values: np.ndarray  # shape (len(alpha), k), ascending per row


@dataclass(frozen=True)
class GapTable:
    alpha_star: float
    beta_tilde: np.ndarray
    roots: list  # one sorted array of real roots per beta_tilde


def symmetrized_symbol(spec: KToeplitzSpec, alpha) -> np.ndarray:
    """Hermitian matrices similar to the symbol at ``beta = r``.

    Obtained with the diagonal similarity ``d_{i+1}/d_i = sqrt(c_i/b_i)``.
    Returns an array of shape ``(len(alpha), k, k)``.
    """
    alpha = np.atleast_1d(np.asarray(alpha, dtype=float)) * spec.L
    k = spec.k
    off = np.sign(spec.b) * np.sqrt(spec.b * spec.c)
    H = np.zeros((alpha.size, k, k), dtype=complex)
    H[:, np.arange(k), np.arange(k)] = spec.a
    e = np.exp(1j * alpha)
    if k == 1:
        H[:, 0, 0] += off[0] * (e + e.conj())
        return H
    idx = np.arange(k - 1)
    H[:, idx, idx + 1] = off[:-1]
    H[:, idx + 1, idx] = off[:-1]
    H[:, k - 1, 0] += off[-1] * e
    H[:, 0, k - 1] += off[-1] * e.conj()
    return H


def band_functions(spec: KToeplitzSpec, alpha_grid) -> BandTable:
    """k band functions: eigenvalues of the symbol at ``beta = r`` per alpha."""
    alpha_grid = np.asarray(alpha_grid, dtype=float)
    vals = np.linalg.eigvalsh(symmetrized_symbol(spec, alpha_grid))
    return BandTable(alpha_grid, vals)


def band_functions_reduced(spec: KToeplitzSpec, alpha_grid) -> BandTable:
    """Same as :func:`band_functions` via roots of ``g + 2Ae^r cos(alpha)``."""
    red = reduce(spec)
    alpha_grid = np.asarray(alpha_grid, dtype=float)
    out = np.full((alpha_grid.size, spec.k), np.nan)
    for i, al in enumerate(alpha_grid):
        rts = real_roots(red.g + red.two_A_er * np.cos(al * spec.L))
        out[i, : rts.size] = rts[: spec.k]
    return BandTable(alpha_grid, out)


def gap_functions(spec: KToeplitzSpec, alpha_star_value: float, beta_tilde_grid) -> GapTable:
    """Real roots of ``g(lam) + 2Ae^r cos(alpha*) cosh(beta~)`` per beta~."""
    if not (np.isclose(alpha_star_value, 0.0) or np.isclose(abs(alpha_star_value), np.pi)):
        raise ValueError("alpha* must be 0 or pi")
    red = reduce(spec)
    grid = np.asarray(beta_tilde_grid, dtype=float)
    if np.any(grid < 0):
        raise ValueError("beta~ grid must be nonnegative")
    cs = np.cos(alpha_star_value)
    roots = [real_roots(red.g + red.two_A_er * cs * np.cosh(bt)) for bt in grid]
    return GapTable(float(alpha_star_value), grid, roots)


# --------------------------------------------------------------------------
# winding and classification
# --------------------------------------------------------------------------

def in_winding_ellipse(spec: KToeplitzSpec, lam: float, red: Optional[ReducedSymbolData] = None) -> bool:
    """Ellipse membership test ``|g(lam)| < |A + B|``."""
    red = red or reduce(spec)
    return bool(abs(red.g(lam)) < red.wind_radius)


def winding_number(spec: KToeplitzSpec, lam: float, tol: Tolerances = DEFAULT) -> int:
    """Winding number of ``theta -> det(f(theta, 0) - lam)`` around 0.

    Computed by accumulating the argument increments on a uniform grid,
    doubling the grid until no increment exceeds pi/2. Canonically oriented
    specs give +1 inside the winding region; adjoint-oriented ones give -1.
    """
    k = spec.k
    red = reduce(spec)
    scale = abs(red.A) + abs(red.B) + abs(red.g(lam))
    if abs(abs(red.g(lam)) - red.wind_radius) <= 1e-10 * scale:
        raise OnBoundary(f"lambda = {lam} lies on the edge of the winding region")
    n = tol.winding_initial_points
    while n <= tol.winding_max_points:
        theta = 2 * np.pi * np.arange(n + 1) / n
        F = symbol_grid(spec, theta / spec.L, 0.0) - lam * np.eye(k)
        dets = np.linalg.det(F) if k > 1 else F[:, 0, 0]
        if np.min(np.abs(dets)) <= 1e-12 * scale:
            raise OnBoundary(f"determinant vanishes on the unit circle at lambda = {lam}")
        steps = np.angle(dets[1:] / dets[:-1])
        if np.max(np.abs(steps)) < np.pi / 2:
            return int(round(np.sum(steps) / (2 * np.pi)))
        n *= 2
    raise OnBoundary("winding refinement cap reached; lambda is too close to the edge")


class Region(str, enum.Enum):
    OPEN = "Open"
    WIND_NOT_OPEN = "WindNotOpen"
    DET_BOUNDARY = "DetBoundary"
    WIND_COMPLEMENT = "WindComplement"


@dataclass(frozen=True)
class FrequencyClassification:
    lam: float
    region: Region
    beta_tilde: float
    rate_left: float
    rate_right: float
    alpha_star: Optional[float]

    @property
    def localisation(self) -> str:
        """'skin' (one-sided decay from an edge), 'bulk', 'boundary' or 'band'."""
        return {
            Region.OPEN: "band",
            Region.WIND_NOT_OPEN: "skin",
            Region.DET_BOUNDARY: "boundary",
            Region.WIND_COMPLEMENT: "bulk",
        }[self.region]


def classify(spec: KToeplitzSpec, lam: float, tol: Tolerances = DEFAULT) -> FrequencyClassification:
    """Region membership and predicted decay exponents ``(r - b~, r + b~)``."""
    red = reduce(spec)
    lam = float(lam)
    r = red.r
    gval = red.g(lam)
    bt = beta_tilde(spec, lam, red)
    if abs(gval) <= red.open_radius:
        region, ast = Region.OPEN, None
    else:
        ast = alpha_star(spec, lam, red)
        if spec.orientation != "hermitian" and abs(abs(r) - bt) < tol.boundary_rate:
            region = Region.DET_BOUNDARY
        elif abs(gval) < red.wind_radius:
            region = Region.WIND_NOT_OPEN
        else:
            region = Region.WIND_COMPLEMENT
    return FrequencyClassification(lam, region, float(bt), r - bt, r + bt, ast)
