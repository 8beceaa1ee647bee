"""Acceptance suite: one test per criterion at its stated tolerance.

Each test records a PASS/FAIL line that is echoed in the pytest terminal
summary. Monte Carlo criteria share cached window banks, so they run in
file order and the later ones reuse the clutter drawn by the earlier ones.
"""

import inspect
import math
import time

import numpy as np
import pytest

from geocfar import experiments as ex
from geocfar.detector import DetectorConfig
from geocfar.enhance import (construct_q, enhanced_mapping, interlace_bounds,
                             random_orthonormal, random_search_objective)
from geocfar.exceptions import NotPositiveDefinite
from geocfar.linalg import cholesky, eig_hermitian
from geocfar.mean import MeanConfig, mean_matrix, mean_objective
from geocfar.measures import MeasureKind, check_affine_invariance
from geocfar.signal_model import (ar1_process, asymptotic_spectrum_gap,
                                  correlation_lags, dft_power_spectrum,
                                  spectrum_from_lags, toeplitz_covariance)
from geocfar.sim import KClutterParams, Scenario, gen_clutter
from geocfar.spectrum import (AdjustedSpectrumPoint, adjusted_gradient,
                              adjusted_potential, check_equivalence,
                              extremal_spectra, lattice_maximize,
                              whitening_spectrum)

from conftest import complex_normal, random_hpd, record_acceptance

ALL_KINDS = list(MeasureKind)
ANALYSIS_KINDS = [MeasureKind.RD, MeasureKind.KLD, MeasureKind.LDD]
DESK_PF = 1e-2
DESK_N = 10_000
SUBRUN_LIMIT_S = 15 * 60


def random_toeplitz_hpd(rng, m):
    return toeplitz_covariance(complex_normal(rng, m))


def test_c01_equivalence():
    rng = np.random.default_rng(101)
    t0 = time.perf_counter()
    worst = 0.0
    for i in range(1000):
        m = (4, 8, 16)[i % 3]
        C1, C2 = random_toeplitz_hpd(rng, m), random_toeplitz_hpd(rng, m)
        for kind in ALL_KINDS:
            worst = max(worst, check_equivalence(kind, C1, C2))
    dt = time.perf_counter() - t0
    ok = worst < 1e-8 and dt < 30
    record_acceptance("1 equivalence", ok, f"max rel dev {worst:.2e} (< 1e-8), {dt:.1f}s (< 30s)")
    assert ok


def random_conditioned(rng, m, max_cond=1e3):
    U, _ = np.linalg.qr(complex_normal(rng, (m, m)))
    V, _ = np.linalg.qr(complex_normal(rng, (m, m)))
    s = np.geomspace(1.0, rng.uniform(1.0, max_cond * 0.999), m)
    return (U * s) @ V.conj().T


def test_c02_affine_invariance():
    rng = np.random.default_rng(202)
    t0 = time.perf_counter()
    worst, worst_cond = 0.0, 0.0
    for i in range(1000):
        m = (4, 8, 16)[i % 3]
        C1, C2 = random_toeplitz_hpd(rng, m), random_toeplitz_hpd(rng, m)
        W = random_conditioned(rng, m)
        worst_cond = max(worst_cond, np.linalg.cond(W))
        for kind in ALL_KINDS:
            worst = max(worst, check_affine_invariance(kind, C1, C2, W))
    dt = time.perf_counter() - t0
    ok = worst < 1e-6 and dt < 30 and worst_cond < 1e3
    record_acceptance("2 affine invariance", ok,
                      f"max dev {worst:.2e} (< 1e-6), max cond(W) {worst_cond:.0f}, {dt:.1f}s")
    assert ok


def test_c03_wiener_khinchin_and_gap():
    rng = np.random.default_rng(303)
    worst = 0.0
    for _ in range(1000):
        m = int(rng.integers(2, 65))
        x = complex_normal(rng, m) * rng.lognormal(0, 2)
        P = dft_power_spectrum(x)
        S = spectrum_from_lags(correlation_lags(x, normalize=False))
        worst = max(worst, np.max(np.abs(S - P)) / max(1.0, np.max(P)))
    gap32 = asymptotic_spectrum_gap("ar1", 32, trials=200, seed=0, rho=0.9)
    gap256 = asymptotic_spectrum_gap("ar1", 256, trials=200, seed=0, rho=0.9)
    ok = worst < 1e-9 and gap256 < gap32
    record_acceptance("3 wiener-khinchin / gap", ok,
                      f"max dev {worst:.2e} (< 1e-9); mean rel gap m=32 {gap32:.3f}, "
                      f"m=256 {gap256:.3f}")
    assert ok


def adversarial_snapshots(rng, m):
    k = int(rng.integers(m))
    impulse = np.zeros(m, complex)
    impulse[k] = rng.lognormal(0, 3)
    const = np.full(m, complex_normal(rng, ()) + 0.1)
    tone = np.exp(2j * np.pi * rng.uniform(-0.5, 0.5) * np.arange(m))
    dft_tone = np.exp(2j * np.pi * k * np.arange(m) / m)
    tiny = 1e-150 * complex_normal(rng, m)
    huge = 1e150 * complex_normal(rng, m)
    return [impulse, const, tone, dft_tone, tiny, huge]


def test_c04_positive_definiteness():
    rng = np.random.default_rng(404)
    xs = []
    while len(xs) < 10_000:
        m = int(rng.integers(2, 65))
        xs += adversarial_snapshots(rng, m)
        xs.append(complex_normal(rng, m))
        xs.append(gen_clutter(KClutterParams(), m, rng))
        xs.append(ar1_process(m, 0.99, rng))
        xs.append(rng.standard_normal(m).astype(complex))
    xs = xs[:10_000]
    failures = 0
    for x in xs:
        try:
            cholesky(toeplitz_covariance(x))
        except NotPositiveDefinite:
            failures += 1
    ok = failures == 0
    record_acceptance("4 positive definiteness", ok,
                      f"{failures} Cholesky failures over {len(xs)} snapshots")
    assert ok


def test_c05_closed_form_optimality():
    rng = np.random.default_rng(505)
    t0 = time.perf_counter()
    worst_margin, worst_spec = -np.inf, 0.0
    for i in range(100):
        C1, C2 = random_hpd(rng, 10), random_hpd(rng, 10)
        for n in (2, 5):
            for kind in ANALYSIS_KINDS:
                res = enhanced_mapping(kind, C1, C2, n)
                best = random_search_objective(kind, C1, C2, n, draws=10_000,
                                               seed=1000 * i + n)
                worst_margin = max(worst_margin, (best - res.objective) / res.objective)
                got = whitening_spectrum(res.W_star.conj().T @ C1 @ res.W_star,
                                         res.W_star.conj().T @ C2 @ res.W_star)
                worst_spec = max(worst_spec, np.max(np.abs(got - np.sort(res.mu_star)[::-1])
                                                    / np.maximum(1.0, got)))
    dt = time.perf_counter() - t0
    ok = worst_margin <= 1e-6 and worst_spec < 1e-8 and dt < 300
    record_acceptance("5 closed-form optimality", ok,
                      f"max (random best - closed form)/closed form {worst_margin:.2e} (<= 1e-6); "
                      f"W* spectrum dev {worst_spec:.2e} (< 1e-8); {dt:.0f}s (< 300s)")
    assert ok


def test_c06_interlacing_and_attainability():
    rng = np.random.default_rng(606)
    worst_inter, worst_attain = -np.inf, 0.0
    for _ in range(1000):
        m = int(rng.integers(2, 13))
        n = int(rng.integers(1, m + 1))
        C = random_hpd(rng, m)
        lam = np.linalg.eigvalsh(C)[::-1]
        Q = random_orthonormal(m, n, rng)
        mu = np.linalg.eigvalsh(Q.conj().T @ C @ Q)[::-1]
        worst_inter = max(worst_inter, np.max(mu - lam[:n]), np.max(lam[m - n:] - mu))
    for _ in range(1000):
        m = int(rng.integers(2, 13))
        n = int(rng.integers(1, m // 2 + 1))
        C = random_hpd(rng, m)
        lam, V = eig_hermitian(C)
        b = interlace_bounds(lam, n)
        mu = b[:, 0] + rng.uniform(0, 1, n) * (b[:, 1] - b[:, 0])
        Q = construct_q(lam, V, mu)
        got = np.linalg.eigvalsh(Q.conj().T @ C @ Q)
        worst_attain = max(worst_attain, np.max(np.abs(got - np.sort(mu))))
    ok = worst_inter <= 1e-9 and worst_attain <= 1e-8
    record_acceptance("6 interlacing / attainability", ok,
                      f"max bound violation {worst_inter:.2e} (<= 1e-9); "
                      f"max attainability dev {worst_attain:.2e} (<= 1e-8)")
    assert ok


def test_c07_mean_estimators():
    rng = np.random.default_rng(707)
    # KLD closed form: perturbing the estimate never lowers its objective
    kld_ok = True
    for _ in range(20):
        Cs = np.stack([random_hpd(rng, 6) for _ in range(5)])
        C = mean_matrix("kld", Cs).matrix
        f0 = mean_objective("kld", Cs, C)
        for _ in range(10):
            H = complex_normal(rng, (6, 6))
            H = 0.5 * (H + H.conj().T)
            S = np.linalg.cholesky(C)
            Cp = S @ (np.eye(6) + 1e-4 * H / np.linalg.norm(H)) @ S.conj().T
            kld_ok &= bool(f0 <= mean_objective("kld", Cs, 0.5 * (Cp + Cp.conj().T)) + 1e-12 * f0)
    # RD mean of commuting pairs
    rd_worst = 0.0
    for _ in range(50):
        a, b = rng.uniform(0.01, 100, 2)
        Cs = np.stack([a * np.eye(4), b * np.eye(4)]).astype(complex)
        rd_worst = max(rd_worst, np.max(np.abs(mean_matrix("rd", Cs).matrix
                                               - np.sqrt(a * b) * np.eye(4))))
    # LDD convergence, 100 sets of three m = 8 matrices
    Cs = np.stack([np.stack([random_hpd(rng, 8) for _ in range(3)]) for _ in range(100)])
    res = mean_matrix("ldd", Cs, MeanConfig(kind="ldd", tol=1e-8, max_iters=200))
    ok = kld_ok and rd_worst < 1e-6 and bool(np.all(res.converged))
    record_acceptance("7 mean estimators", ok,
                      f"KLD perturbation {'ok' if kld_ok else 'violated'}; RD commuting max err "
                      f"{rd_worst:.2e} (< 1e-6); LDD converged {int(np.sum(res.converged))}/100 "
                      f"in {res.iterations} iterations (<= 200)")
    assert ok


# ---------------------------------------------------------------------------
# Monte Carlo criteria

def desk_manifest(command, kinds, scr_db, **kw):
    sc = Scenario(pf=DESK_PF, scr_grid_db=tuple(scr_db))
    dets = [DetectorConfig(kind=k, pf=DESK_PF) for k in kinds]
    return ex.RunManifest(command=command, scenario=sc, detectors=dets,
                          trials_per_point=DESK_N, **kw)


def test_c08_cfar_calibration():
    t0 = time.perf_counter()
    rows = ex.run_false_alarm_check(desk_manifest("calibrate", ALL_KINDS, [0.0]))
    dt = time.perf_counter() - t0
    tol = 3 * math.sqrt(DESK_PF * (1 - DESK_PF) / DESK_N)
    ok = all(abs(r["pfa"] - DESK_PF) <= tol and r["calibration_trials"] == DESK_N
             and r["trials"] == DESK_N for r in rows)
    detail = ", ".join(f"{r['measure']} {r['pfa']:.4f}" for r in rows)
    record_acceptance("8 CFAR calibration", ok,
                      f"Pfa {detail} (|Pfa - 0.01| <= {tol:.4f}); {dt:.0f}s")
    assert ok


def test_c09a_kld_best():
    t0 = time.perf_counter()
    rows = ex.run_pd_sweep(desk_manifest("pd-sweep", ANALYSIS_KINDS, np.arange(0, 11, 2.0)))
    dt = time.perf_counter() - t0
    pd = {(r["measure"], r["scr_db"]): r["pd"] for r in rows}
    scrs = sorted({s for _, s in pd})
    ok = all(pd["kld", s] >= pd["rd", s] and pd["kld", s] >= pd["ldd", s] for s in scrs)
    ok &= dt < SUBRUN_LIMIT_S
    curves = "; ".join(f"{k}: " + " ".join(f"{pd[k, s]:.3f}" for s in scrs)
                       for k in ("kld", "rd", "ldd"))
    record_acceptance("9a KLD Pd >= RD, LDD", ok, f"Pd at 0..10 dB: {curves}; {dt:.0f}s")
    assert ok


def test_c09b_measure_ordering():
    t0 = time.perf_counter()
    m = desk_manifest("ordering", ANALYSIS_KINDS, np.arange(-20, 21, 5.0))
    m.targets = ex.bandlimited_targets(range(1, 6))
    rows = ex.run_measure_ordering(m, reference="true")
    dt = time.perf_counter() - t0
    scrs = sorted({r["scr_db"] for r in rows})
    best = {}
    for kind in ("rd", "kld", "ldd"):
        best[kind] = []
        for s in scrs:
            sub = [r for r in rows if r["measure"] == kind and r["scr_db"] == s]
            best[kind].append(max(sub, key=lambda r: r["normalized"])["bandwidth"])
    kld_ok = all(b == 1 for b in best["kld"])
    rise_ok = all(np.all(np.diff(best[k]) >= 0) and best[k][-1] > best[k][0]
                  for k in ("rd", "ldd"))
    ok = kld_ok and rise_ok and dt < SUBRUN_LIMIT_S
    record_acceptance("9b measure ordering", ok,
                      "argmax B over SCR " + ", ".join(f"{s:g}" for s in scrs) + " dB: "
                      + "; ".join(f"{k} {best[k]}" for k in best) + f"; {dt:.0f}s")
    assert ok


def test_c09c_enhancement_dimension():
    t0 = time.perf_counter()
    m = desk_manifest("enhance-study", ANALYSIS_KINDS, np.arange(-5, 21, 5.0))
    m.targets = ex.bandlimited_targets([1, 2, 3])
    m.n_grid = [1, 2, 3]
    rows = ex.run_enhancement_study(m)
    dt = time.perf_counter() - t0
    mean_pd = {}
    for r in rows:
        key = (r["measure"], r["bandwidth"], r["n"] if r["enhanced"] else "plain")
        mean_pd.setdefault(key, []).append(r["pd"])
    mean_pd = {k: float(np.mean(v)) for k, v in mean_pd.items()}
    fails, parts = [], []
    for kind in ("rd", "kld", "ldd"):
        for B in (1, 2, 3):
            scores = [mean_pd[kind, B, n] for n in (1, 2, 3)]
            n_best = int(np.argmax(scores)) + 1
            parts.append(f"{kind} B={B} best n={n_best} "
                         f"[{', '.join(f'{v:.3f}' for v in scores)}; plain {mean_pd[kind, B, 'plain']:.3f}]")
            if n_best != B:
                fails.append(f"{kind} B={B}")
        if not mean_pd[kind, 3, 1] < mean_pd[kind, 3, "plain"]:
            fails.append(f"{kind} B=3 n=1 not below plain")
    ok = not fails and dt < SUBRUN_LIMIT_S
    record_acceptance("9c enhancement dimension", ok,
                      "mean Pd over -5..20 dB: " + "; ".join(parts)
                      + (f"; failing: {', '.join(fails)}" if fails else "") + f"; {dt:.0f}s")
    assert ok


def test_c10_analysis_consistency():
    agree = []
    for kind in ANALYSIS_KINDS:
        for scr in (0.1, 1.0, 10.0):
            lv, _ = lattice_maximize(kind, 4, scr, steps=20)
            ev = extremal_spectra(kind, 4, scr).max_value
            agree.append(abs(lv - ev) <= 1e-9 * max(1.0, abs(ev)))
    rng = np.random.default_rng(1010)
    worst = 0.0
    for kind in ANALYSIS_KINDS:
        for _ in range(1000):
            m = int(rng.integers(3, 9))
            scr = float(rng.uniform(0.1, 10))
            lam = (rng.dirichlet(np.ones(m)) * 0.9 + 0.1 / m)[1:] * m * scr
            g = adjusted_gradient(kind, AdjustedSpectrumPoint(lam, scr)).gradient
            for i in range(m - 1):
                h = 1e-6 * (1 + lam[i])
                e = np.zeros(m - 1)
                e[i] = h
                fd = (adjusted_potential(kind, AdjustedSpectrumPoint(lam + e, scr))
                      - adjusted_potential(kind, AdjustedSpectrumPoint(lam - e, scr))) / (2 * h)
                worst = max(worst, abs(g[i] - fd) / max(1.0, abs(fd)))
    ok = all(agree) and worst < 1e-5
    record_acceptance("10 analysis consistency", ok,
                      f"lattice agrees {sum(agree)}/{len(agree)}; max gradient err {worst:.2e} (< 1e-5)")
    assert ok


def test_c11_complexity():
    params = inspect.signature(enhanced_mapping).parameters
    no_iter = not any(p in params for p in ("max_iters", "tol", "iterations", "step"))
    rng = np.random.default_rng(1111)
    ms = [16, 32, 64, 128]
    times = []
    for m in ms:
        C1, C2 = random_hpd(rng, m), random_hpd(rng, m)
        enhanced_mapping("rd", C1, C2, m // 2)
        reps = []
        for _ in range(7):
            t = time.perf_counter()
            for _ in range(10):
                enhanced_mapping("rd", C1, C2, m // 2)
            reps.append((time.perf_counter() - t) / 10)
        times.append(min(reps))
    slope = float(np.polyfit(np.log(ms), np.log(times), 1)[0])
    ok = no_iter and abs(slope - 3.0) <= 0.5
    record_acceptance("11 complexity", ok,
                      f"log-log slope {slope:.2f} (3 +/- 0.5) from times "
                      + ", ".join(f"{t * 1e3:.3f}ms" for t in times)
                      + f"; iteration parameters absent: {no_iter}")
    assert ok
