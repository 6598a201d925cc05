"""Tridiagonal k-Toeplitz operators: specification, symbol and truncations.

Conventions used throughout the package:

* ``b[i]`` is the superdiagonal entry coupling site ``i`` to site ``i+1``,
  ``c[i]`` the subdiagonal entry coupling site ``i+1`` back to site ``i``.
* The symbol at complex quasimomentum ``alpha + i beta`` is the k x k matrix
  acting on one unit cell of the quasiperiodic extension
  ``u^{(n)} = z^n v``, i.e.
  ``f = A_{-1} z + A_0 + A_1 / z`` with the Bloch factor ``z = exp(i alpha L - beta)``,
  ``b_k`` in the lower-left corner of ``A_{-1}`` and ``c_k`` in the
  upper-right corner of ``A_1``. For ``k = 1`` and ``L = 1`` this is
  ``b e^{i(alpha+i beta)} + a + c e^{-i(alpha+i beta)}``.
* ``alpha`` is a wavenumber (Brillouin zone ``(-pi/L, pi/L]``) while ``beta``
  is measured per unit cell, so ``beta = r`` is the real-spectrum line for
  every ``L`` and all decay rates are per cell of k sites.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .errors import BadDefectSite, BadLength, DegenerateCoupling, EtaOutOfRange

__all__ = [
    "KToeplitzSpec",
    "ComplexQuasimomentum",
    "DefectSpec",
    "BandedMatrix",
    "make_spec",
    "symbol_eval",
    "symbol_grid",
    "truncate_toeplitz",
    "truncate_laurent",
    "apply_defect",
    "adjoint_spec",
]


def _frozen(x) -> np.ndarray:
    arr = np.array(x, dtype=float)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class KToeplitzSpec:
    """Period-k diagonals of a tridiagonal k-Toeplitz operator.

    Use :func:`make_spec` to build a validated instance.
    """
    a: np.ndarray
    b: np.ndarray
    c: np.ndarray
    L: float = 1.0

    @property
    def k(self) -> int:
        return int(self.a.size)

    @property
    def log_ratio(self) -> float:
        """``log prod(b_i / c_i)``."""
        return float(np.sum(np.log(self.b / self.c)))

    @property
    def r(self) -> float:
        """Rate of non-reciprocity ``r = log(prod b_i/c_i) / 2``."""
        return 0.5 * self.log_ratio

    @property
    def orientation(self) -> str:
        """``'canonical'`` (prod b/c > 1), ``'adjoint'`` (< 1) or ``'hermitian'`` (= 1)."""
        lr = self.log_ratio
        if abs(lr) <= 1e-14 * max(1.0, self.k):
            return "hermitian"
        return "canonical" if lr > 0 else "adjoint"

    @property
    def is_adjoint_orientation(self) -> bool:
        return self.orientation == "adjoint"

    def tile(self, values, N: int) -> np.ndarray:
        """Repeat a period-k array to length ``N``."""
        return np.resize(np.asarray(values, dtype=float), N)

    def to_dict(self) -> dict:
        return {"a": self.a.tolist(), "b": self.b.tolist(), "c": self.c.tolist(), "L": self.L}


def make_spec(a: Sequence[float], b: Sequence[float], c: Sequence[float], L: float = 1.0) -> KToeplitzSpec:
    """Validate the period-k diagonals and return a :class:`KToeplitzSpec`."""
    a, b, c = (np.atleast_1d(np.asarray(x, dtype=float)) for x in (a, b, c))
    if a.ndim != 1 or not (a.size == b.size == c.size) or a.size < 1:
        raise BadLength(f"diagonal arrays must share a length >= 1, got {a.size}, {b.size}, {c.size}")
    if not (np.all(np.isfinite(a)) and np.all(np.isfinite(b)) and np.all(np.isfinite(c))):
        raise ValueError("diagonal entries must be finite")
    bad = np.nonzero(b * c <= 0)[0]
    if bad.size:
        raise DegenerateCoupling(f"b_i * c_i must be positive; fails at i = {(bad + 1).tolist()}")
    if not L > 0:
        raise ValueError("lattice length L must be positive")
    return KToeplitzSpec(_frozen(a), _frozen(b), _frozen(c), float(L))


@dataclass(frozen=True)
class ComplexQuasimomentum:
    """Complex quasimomentum ``alpha + i beta``; alpha is reduced to (-pi/L, pi/L]."""
    alpha: float
    beta: float
    L: float = 1.0

    def __post_init__(self):
        half = np.pi / self.L
        reduced = half - np.mod(half - float(self.alpha), 2 * half)
        object.__setattr__(self, "alpha", float(reduced))
        object.__setattr__(self, "beta", float(self.beta))

    @property
    def phase(self) -> complex:
        """Bloch factor per unit cell, ``exp(i alpha L - beta)``."""
        return complex(np.exp(1j * self.alpha * self.L - self.beta))


@dataclass(frozen=True)
class DefectSpec:
    """A single-site defect.

    ``kind='multiplicative'`` scales row ``site`` by ``1 + value`` (value is
    eta > -1); ``kind='additive'`` adds ``value`` to the diagonal entry.
    Sites are 1-based.
    """
    site: int
    kind: str = "multiplicative"
    value: float = 0.0

    def __post_init__(self):
        if self.kind not in ("multiplicative", "additive"):
            raise ValueError(f"unknown defect kind {self.kind!r}")
        if int(self.site) < 1:
            raise BadDefectSite("defect site is 1-based and must be >= 1")
        if self.kind == "multiplicative" and not self.value > -1:
            raise EtaOutOfRange(f"eta must exceed -1, got {self.value}")

    @classmethod
    def multiplicative(cls, site: int, eta: float) -> "DefectSpec":
        return cls(int(site), "multiplicative", float(eta))

    @classmethod
    def additive(cls, site: int, d: float) -> "DefectSpec":
        return cls(int(site), "additive", float(d))


@dataclass(frozen=True)
class BandedMatrix:
    """Tridiagonal N x N matrix stored by diagonals.

    ``sub[i] = M[i+1, i]`` and ``sup[i] = M[i, i+1]`` (0-based).
    """
    diag: np.ndarray
    sub: np.ndarray
    sup: np.ndarray

    def __post_init__(self):
        n = np.asarray(self.diag).size
        if np.asarray(self.sub).size != n - 1 or np.asarray(self.sup).size != n - 1:
            raise BadLength("off-diagonals must have length N - 1")

    @property
    def N(self) -> int:
        return int(self.diag.size)

    @property
    def shape(self):
        return (self.N, self.N)

    @property
    def dtype(self):
        return np.result_type(self.diag, self.sub, self.sup)

    def to_dense(self) -> np.ndarray:
        M = np.diag(self.diag).astype(self.dtype)
        if self.N > 1:
            idx = np.arange(self.N - 1)
            M[idx + 1, idx] = self.sub
            M[idx, idx + 1] = self.sup
        return M

    def matvec(self, u) -> np.ndarray:
        u = np.asarray(u)
        out = self.diag * u
        out[:-1] = out[:-1] + self.sup * u[1:]
        out[1:] = out[1:] + self.sub * u[:-1]
        return out

    def shifted(self, lam) -> "BandedMatrix":
        """``M - lam * I``."""
        return BandedMatrix(self.diag - lam, self.sub.copy(), self.sup.copy())

    def transpose(self) -> "BandedMatrix":
        return BandedMatrix(self.diag.copy(), self.sup.copy(), self.sub.copy())

    def row_sums(self) -> np.ndarray:
        return self.matvec(np.ones(self.N))


def symbol_eval(spec: KToeplitzSpec, q: ComplexQuasimomentum | tuple) -> np.ndarray:
    """Symbol of ``spec`` at quasimomentum ``q`` (a k x k complex matrix)."""
    if not isinstance(q, ComplexQuasimomentum):
        q = ComplexQuasimomentum(q[0], q[1], spec.L)
    k = spec.k
    z = q.phase
    f = np.zeros((k, k), dtype=complex)
    f[np.arange(k), np.arange(k)] = spec.a
    if k == 1:
        f[0, 0] += spec.b[0] * z + spec.c[0] / z
        return f
    idx = np.arange(k - 1)
    f[idx, idx + 1] = spec.b[:-1]
    f[idx + 1, idx] = spec.c[:-1]
    f[k - 1, 0] += spec.b[-1] * z
    f[0, k - 1] += spec.c[-1] / z
    return f


def symbol_grid(spec: KToeplitzSpec, alpha, beta) -> np.ndarray:
    """Symbols at many quasimomenta at once.

    ``alpha`` and ``beta`` broadcast to a common shape ``S``; the result has
    shape ``S + (k, k)``.
    """
    alpha, beta = np.broadcast_arrays(np.asarray(alpha, dtype=float), np.asarray(beta, dtype=float))
    z = np.exp(1j * alpha * spec.L - beta)
    k = spec.k
    f = np.zeros(alpha.shape + (k, k), dtype=complex)
    f[..., np.arange(k), np.arange(k)] = spec.a
    if k == 1:
        f[..., 0, 0] += spec.b[0] * z + spec.c[0] / z
        return f
    idx = np.arange(k - 1)
    f[..., idx, idx + 1] = spec.b[:-1]
    f[..., idx + 1, idx] = spec.c[:-1]
    f[..., k - 1, 0] += spec.b[-1] * z
    f[..., 0, k - 1] += spec.c[-1] / z
    return f


def truncate_toeplitz(spec: KToeplitzSpec, N: int,
                      corner: Optional[tuple] = None) -> BandedMatrix:
    """Finite section ``T_N`` of the k-Toeplitz operator.

    ``corner = (first, last)`` overrides entries (1,1) and (N,N); either
    item may be ``None`` to keep the periodic value.
    """
    if N < 2:
        raise BadLength("truncation size must be at least 2")
    diag = spec.tile(spec.a, N)
    sup = spec.tile(spec.b, N)[: N - 1]
    sub = spec.tile(spec.c, N)[: N - 1]
    if corner is not None:
        first, last = corner
        if first is not None:
            diag[0] = first
        if last is not None:
            diag[-1] = last
    return BandedMatrix(diag, sub, sup)


def truncate_laurent(spec: KToeplitzSpec, N: int,
                     defect: Optional[DefectSpec] = None) -> BandedMatrix:
    """Section of the Laurent operator centred on the defect at ``N // 2``."""
    M = truncate_toeplitz(spec, N)
    if defect is None:
        return M
    if defect.site != N // 2:
        raise BadDefectSite(f"Laurent truncation needs the defect at site {N // 2}, got {defect.site}")
    return apply_defect(M, defect)


def apply_defect(M: BandedMatrix, defect: DefectSpec) -> BandedMatrix:
    """Apply a single-site defect to a banded matrix (returns a new matrix)."""
    m = int(defect.site)
    if not 1 <= m <= M.N:
        raise BadDefectSite(f"defect site {m} outside 1..{M.N}")
    i = m - 1
    diag, sub, sup = (np.array(x, copy=True) for x in (M.diag, M.sub, M.sup))
    if defect.kind == "additive":
        diag = diag.astype(np.result_type(diag, defect.value))
        diag[i] += defect.value
    else:
        if not defect.value > -1:
            raise EtaOutOfRange(f"eta must exceed -1, got {defect.value}")
        s = 1.0 + defect.value
        diag[i] *= s
        if i < M.N - 1:
            sup[i] *= s
        if i > 0:
            sub[i - 1] *= s
    return BandedMatrix(diag, sub, sup)


def adjoint_spec(spec: KToeplitzSpec) -> KToeplitzSpec:
    """Spec of the adjoint operator: super- and subdiagonals exchanged.

    The transpose of a k-Toeplitz matrix is again k-Toeplitz with the same
    cell alignment, so no index reflection is needed. The symbols satisfy
    ``symbol(spec, alpha, beta) == symbol(adjoint, -alpha, -beta).T``.
    """
    return make_spec(spec.a, spec.c, spec.b, spec.L)
