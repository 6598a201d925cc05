"""Acceptance criteria, one test per criterion.

Each check returns ``(ok, detail)``; the pytest wrapper records a PASS/FAIL
line (printed in the terminal summary) and asserts ``ok``. Running this
file as a script prints the same lines without pytest.
"""
from __future__ import annotations

import math
import os
import sys
import time

import numpy as np
import pytest

sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

from conftest import random_spec, record_acceptance  # noqa: E402

from tbands.capacitance import (  # noqa: E402
    ResonatorChain,
    defect_operator,
    finite_capacitance,
    greens_closed,
    greens_numeric,
    monomer_defect_frequency,
    monomer_defect_integral,
    to_ktoeplitz,
)
from tbands.errors import OnBoundary  # noqa: E402
from tbands.hatano_nelson import HNModel, localisation_report  # noqa: E402
from tbands.ktoeplitz import symbol_grid, truncate_toeplitz  # noqa: E402
from tbands.modes import finite_spectrum, residual_convergence  # noqa: E402
from tbands.regions import (  # noqa: E402
    Region,
    beta_tilde,
    classify,
    coeff_A_B,
    gap_functions,
    in_winding_ellipse,
    reduce,
    regions,
    winding_number,
)

M1 = ResonatorChain((0.5,), (0.5,), 1.0)
D1 = ResonatorChain((0.25, 0.25), (1.0, 2.0), 3.0)
SEED = 7


def _random_specs(n=100, seed=SEED):
    rng = np.random.default_rng(seed)
    return [random_spec(rng) for _ in range(n)]


# --------------------------------------------------------------------------


def check_dichotomy():
    t0 = time.perf_counter()
    alpha = np.linspace(-np.pi, np.pi, 201)[1:]
    worst, n_real = 0.0, 0
    for spec in _random_specs():
        offsets = (np.arange(200) - 100) * 0.02
        beta = spec.r + offsets
        Al, Be = np.meshgrid(alpha, beta, indexing="ij")
        F = symbol_grid(spec, Al, Be)
        ev = np.linalg.eigvals(F)
        near = np.abs(ev.imag) < 1e-10
        if not near.any():
            continue
        ia, ib, _ = np.nonzero(near)
        n_real += ia.size
        da = np.minimum.reduce([np.abs(alpha[ia]), np.abs(alpha[ia] - np.pi), np.abs(alpha[ia] + np.pi)])
        db = np.abs(offsets[ib])
        worst = max(worst, float(np.max(np.minimum(da, db))))
    dt = time.perf_counter() - t0
    ok = worst <= 1e-6 and n_real > 0 and dt < 60
    return ok, f"{n_real} near-real eigenvalues, worst off-line distance {worst:.1e}, {dt:.1f} s"


def check_inclusion():
    t0 = time.perf_counter()
    bad = 0
    for spec in _random_specs():
        reg = regions(spec)
        for lo, hi in reg.open:
            if not any(wlo - 1e-10 <= lo and hi <= whi + 1e-10 for wlo, whi in reg.wind):
                bad += 1
    dt = time.perf_counter() - t0
    return bad == 0 and dt < 5, f"{bad} uncontained open intervals on 100 specs, {dt:.2f} s"


def check_monomer_regions():
    spec = to_ktoeplitz(M1)
    a, bc = spec.a[0], spec.b[0] * spec.c[0]
    reg = regions(spec)
    (lo, hi), = reg.open
    end_err = max(abs(lo - (a - 2 * math.sqrt(bc))), abs(hi - (a + 2 * math.sqrt(bc))))
    w = np.asarray(finite_spectrum(truncate_toeplitz(spec, 2000)))
    d_eig = float(np.max(np.maximum(lo - w, 0) + np.maximum(w - hi, 0)))
    grid = np.linspace(lo, hi, 20001)
    idx = np.clip(np.searchsorted(w, grid), 1, w.size - 1)
    d_int = float(np.max(np.minimum(np.abs(grid - w[idx - 1]), np.abs(grid - w[idx]))))
    haus = max(d_eig, d_int)
    ok = end_err <= 1e-10 and haus <= 1e-2
    return ok, f"endpoint error {end_err:.1e}, Hausdorff distance {haus:.2e}"


def check_defect_triple():
    spec = to_ktoeplitz(M1)
    worst = 0.0
    parts = []
    for eta in (1.5, -0.95):
        closed = monomer_defect_frequency(M1, eta, method="closed").lam
        root = monomer_defect_frequency(M1, eta, method="root").lam
        w = np.asarray(finite_spectrum(defect_operator(M1, 200, eta, 100)))
        fin = float(w[np.argmin(np.abs(w - closed))])
        diff = max(abs(closed - root), abs(closed - fin), abs(root - fin))
        worst = max(worst, diff)
        parts.append(f"eta={eta}: lambda={closed:.10f}")
    a, t = spec.a[0], 2 * math.sqrt(spec.b[0] * spec.c[0])
    w2 = np.concatenate([np.linspace(a + t + 0.01, 40.0, 25), np.linspace(0.0, a - t - 0.005, 25)])
    rel = 0.0
    for x in w2:
        om = math.sqrt(x)
        c = monomer_defect_integral(M1, om, "closed")
        q = monomer_defect_integral(M1, om, "quadrature")
        rel = max(rel, abs(q - c) / abs(c))
    ok = worst <= 1e-8 and rel < 1e-8
    return ok, f"{'; '.join(parts)}; pairwise spread {worst:.1e}; quadrature rel. error {rel:.1e} at 50 gap frequencies"


def check_chebyshev():
    spec = to_ktoeplitz(M1)
    a, b, c = spec.a[0], spec.b[0], spec.c[0]
    sq = math.sqrt(b * c)
    N = 30
    T = truncate_toeplitz(spec, N).to_dense()
    worst = 0.0
    for d in np.linspace(-1.06, -5.0, 20):
        lam = a - 2 * sq * d
        for j in (1, 11, 30):
            g = greens_closed(spec, math.sqrt(lam), j, N)
            vals = np.exp(g.info["log_abs_unscaled"]) * g.info["phase"]
            e = np.zeros(N)
            e[j - 1] = 1.0
            ref = np.linalg.solve(T - lam * np.eye(N), e)
            worst = max(worst, float(np.max(np.abs(vals - ref) / np.abs(ref))))
    with np.errstate(over="raise", invalid="raise"):
        big = [greens_closed(spec, math.sqrt(a - 2 * sq * d), 500, 1000) for d in (-1.06, -5.0, -50.0)]
    finite = all(np.all(np.isfinite(g.info["log_abs_unscaled"])) and np.all(np.isfinite(g.entries)) for g in big)
    ok = worst < 1e-8 and finite
    return ok, f"max entrywise rel. error {worst:.1e} (N=30, 20 frequencies); N=1000 log path finite: {finite}"


def _check_rates(prof, cls, tol):
    err = max(abs(prof.rate_left - cls.rate_left) / abs(cls.rate_left),
              abs(prof.rate_right - cls.rate_right) / abs(cls.rate_right))
    return err, err <= tol


def check_decay_sharpness():
    N = 300
    spec = to_ktoeplitz(M1)
    a, t = spec.a[0], 2 * math.sqrt(spec.b[0] * spec.c[0])
    worst_m = 0.0
    for bt in np.linspace(0.5, 2.0, 20):
        lam = a + t * math.cosh(bt)
        prof = greens_closed(spec, math.sqrt(lam), N // 2, N)
        err, _ = _check_rates(prof, classify(spec, lam), 0.02)
        worst_m = max(worst_m, err)

    dspec = to_ktoeplitz(D1)
    reg = regions(dspec)
    (lo0, hi0), (lo1, hi1) = reg.open
    lams = []
    mid = np.linspace(hi0, lo1, 400)[1:-1]
    bts = beta_tilde(dspec, mid)
    mid = mid[bts >= 0.15]
    lams += list(mid[np.linspace(0, mid.size - 1, 10).astype(int)])
    for ast in (0.0, np.pi):
        for rts in gap_functions(dspec, ast, np.linspace(1.0, 2.5, 10)).roots:
            lams += [x for x in rts if x > hi1]
    worst_d = 0.0
    for lam in lams:
        prof = greens_numeric(dspec, math.sqrt(lam), N // 2, N)
        err, _ = _check_rates(prof, classify(dspec, lam), 0.03)
        worst_d = max(worst_d, err)
    ok = worst_m <= 0.02 and worst_d <= 0.03 and len(lams) == 20
    return ok, (f"monomer worst rel. rate error {100 * worst_m:.3f}% (20 gap freqs), "
                f"dimer {100 * worst_d:.3f}% ({len(lams)} gap freqs), N={N}")


def check_residual_slopes():
    t0 = time.perf_counter()
    spec = to_ktoeplitz(M1)
    a, t = spec.a[0], 2 * math.sqrt(spec.b[0] * spec.c[0])
    Ns = [50, 100, 200, 400]
    out, ok = [], True
    for lam, kind in ((a - t * math.cosh(0.2), "toeplitz"), (a + t * math.cosh(0.35), "laurent")):
        st = residual_convergence(spec, lam, Ns, kind=kind, use="numeric")
        rel = abs(-st.slope - st.predicted_B) / st.predicted_B
        ok &= rel <= 0.10
        out.append(f"{kind} slope {st.slope:.5f} vs B {st.predicted_B:.5f} ({100 * rel:.2f}%)")
    dt = time.perf_counter() - t0
    ok &= dt < 120
    return ok, "; ".join(out) + f"; {dt:.1f} s"


def check_winding():
    rng = np.random.default_rng(SEED + 1)
    agree, redraw, inside = 0, 0, 0
    bad_value = 0
    while agree < 1000:
        spec = random_spec(rng)
        reg = regions(spec)
        ends = [x for iv in reg.open + reg.wind for x in iv]
        lo, hi = min(ends) - 1.0, max(ends) + 1.0
        if rng.random() < 0.5 and reg.wind:
            wlo, whi = reg.wind[rng.integers(len(reg.wind))]
            lam = rng.uniform(wlo, whi)
        else:
            lam = rng.uniform(lo, hi)
        try:
            w = winding_number(spec, lam)
        except OnBoundary:
            redraw += 1
            continue
        ell = in_winding_ellipse(spec, lam)
        inside += ell
        if (w != 0) != ell:
            return False, f"disagreement at spec={spec.to_dict()}, lambda={lam}: winding {w}, ellipse {ell}"
        if ell and abs(w) != 1:
            bad_value += 1
        agree += 1
    ok = bad_value == 0
    return ok, f"1000 pairs ({inside} inside), 0 disagreements, {redraw} redraws on the winding edge"


def check_hn():
    gamma, N = 0.5, 400
    ts = 2 * math.sinh(gamma)
    verdicts = {}
    for d in (ts - 0.05, ts + 0.05, -(ts - 0.05), -(ts + 0.05)):
        verdicts[round(d, 6)] = localisation_report(HNModel(0.0, gamma, d), N).verdict
    flips = (verdicts[round(ts - 0.05, 6)] == "skin" and verdicts[round(ts + 0.05, 6)] == "bulk"
             and verdicts[round(-(ts - 0.05), 6)] == "skin" and verdicts[round(-(ts + 0.05), 6)] == "bulk")
    err_away = 0.0
    for d in (0.5, -0.5, ts - 0.05, ts + 0.05, 3.0, -3.0):
        rep = localisation_report(HNModel(0.0, gamma, d), N)
        err_away = max(err_away, abs(rep.lam - rep.lam_infinite))
    b = localisation_report(HNModel(0.0, gamma, ts), N)
    err_b = abs(b.lam - b.lam_infinite)
    ok = flips and err_away <= 1e-6 and err_b <= 1e-3 and abs(b.rate_left) < 0.01
    return ok, (f"verdicts {verdicts}; eigenvalue error {err_away:.1e} away from the edge, "
                f"{err_b:.1e} at the edge; edge rate {b.rate_left:.2e}")


def check_structural():
    rng = np.random.default_rng(SEED + 2)
    worst_row, worst_null, worst_r, worst_det = 0.0, 0.0, 0.0, 0.0
    for _ in range(50):
        k = int(rng.integers(1, 5))
        gamma = float(rng.choice([-1, 1]) * rng.uniform(0.1, 3.0))
        chain = ResonatorChain(tuple(rng.uniform(0.1, 2.0, k)), tuple(rng.uniform(0.1, 2.0, k)), gamma)
        C = finite_capacitance(chain, int(rng.integers(2, 400)))
        worst_row = max(worst_row, float(np.max(np.abs(C.row_sums()))))
        ones = np.ones(C.N)
        worst_null = max(worst_null, float(np.linalg.norm(C.matvec(ones)) / np.linalg.norm(ones)))
        spec = to_ktoeplitz(chain)
        worst_r = max(worst_r, abs(spec.r - 0.5 * gamma * sum(chain.lengths)), abs(chain.r - spec.r))
    for spec in _random_specs(50, SEED + 3):
        A, B = coeff_A_B(spec)
        g = reduce(spec).g
        for _ in range(4):
            lam = rng.uniform(-4, 4)
            al, be = rng.uniform(-np.pi, np.pi), spec.r + rng.uniform(-1, 1)
            z = np.exp(1j * al - be)
            F = symbol_grid(spec, al, be) - lam * np.eye(spec.k)
            lhs = np.linalg.det(F) - A / z - B * z
            scale = max(abs(np.linalg.det(F)), abs(A / z), abs(B * z), abs(g(lam)), 1.0)
            worst_det = max(worst_det, abs(lhs - g(lam)) / scale)
    ok = worst_row <= 1e-12 and worst_null <= 1e-12 and worst_r <= 1e-12 and worst_det <= 1e-9
    return ok, (f"row sums {worst_row:.1e}, null vector {worst_null:.1e}, r {worst_r:.1e}, "
                f"determinant expansion {worst_det:.1e}")


CRITERIA = {
    1: ("Dichotomy property", check_dichotomy),
    2: ("Open spectrum inside winding region", check_inclusion),
    3: ("Monomer regions", check_monomer_regions),
    4: ("Defect frequency triple oracle", check_defect_triple),
    5: ("Chebyshev inversion", check_chebyshev),
    6: ("Decay-rate sharpness", check_decay_sharpness),
    7: ("Pseudoeigenvector residual slopes", check_residual_slopes),
    8: ("Winding dual method", check_winding),
    9: ("Hatano-Nelson transition", check_hn),
    10: ("Structural invariants", check_structural),
}


@pytest.mark.parametrize("number", sorted(CRITERIA))
def test_acceptance(number):
    title, check = CRITERIA[number]
    ok, detail = check()
    record_acceptance(number, title, ok, detail)
    print(f"[{'PASS' if ok else 'FAIL'}] {number:2d}. {title}: {detail}")
    assert ok, detail


if __name__ == "__main__":
    failed = 0
    for n in sorted(CRITERIA):
        title, check = CRITERIA[n]
        ok, detail = check()
        failed += not ok
        print(f"[{'PASS' if ok else 'FAIL'}] {n:2d}. {title}: {detail}", flush=True)
    sys.exit(1 if failed else 0)
