"""Acceptance suite: every gate criterion at its stated tolerance.

Heavy runs are shared through module-scoped fixtures.  Each criterion prints
one [PASS]/[FAIL] line (run with ``pytest -s`` to see them live).
"""

import warnings

import numpy as np
import pytest

from ncamaps.bath import BathSpec, correlation, tabulate
from ncamaps.cli import cli_entry
from ncamaps.dynmaps import (
    KernelTrajectory,
    ModelSpec,
    born_kernel,
    convergence_study,
    nca_kernel,
    solve_born,
    solve_born_markov,
    solve_nca,
    solve_nca_markov,
)
from ncamaps.observables import (
    TimeSeries,
    classify_dynamics,
    evolve_expectations,
    loglog_slope,
    peak_frequency,
    regression_correlation,
    relaxation_time,
    spectrum_cz,
    spectrum_cz_resolvent,
    steady_state,
    susceptibility_and_transmission,
)
from ncamaps.qops import SIGMA_X, SIGMA_Z, liouvillian, superop_exp

TWO_PI = 2.0 * np.pi
DELTA = 0.1
MODEL = ModelSpec(delta=DELTA)
RHO_DOWN = np.array([[0, 0], [0, 1]], dtype=complex)
UX = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)

SOLVERS = {
    "nca": solve_nca,
    "nca_markov": solve_nca_markov,
    "born": solve_born,
    "born_markov": solve_born_markov,
}


def report(name: str, ok: bool, detail: str) -> None:
    print(f"[{'PASS' if ok else 'FAIL'}] {name}: {detail}", flush=True)
    assert ok, f"{name}: {detail}"


def run(method, alpha, dt_2pi, t_max_2pi, model=MODEL, **kw):
    dt = dt_2pi * TWO_PI
    n = int(round(t_max_2pi / dt_2pi))
    table = tabulate(BathSpec(alpha=alpha), dt, n)
    return SOLVERS[method](model, table, dt, n, **kw)


def sz_series(traj, rho0=RHO_DOWN):
    vals = evolve_expectations(traj, rho0, [SIGMA_Z]).series[0].values
    return TimeSeries(traj.dt, np.real(vals), "sz")


def steady(model, kernels):
    return steady_state(model, kernels, tail_tol=1e-2)


def sx_of(rho):
    return float(np.real(np.trace(SIGMA_X @ rho)))


@pytest.fixture(scope="module")
def nca300():
    """Self-consistent runs on the relaxation window, keyed by coupling."""
    return {a: run("nca", a, 0.1, 300.0) for a in (0.01, 0.1, 0.3, 0.5, 0.7, 0.9)}


@pytest.fixture(scope="module")
def ncam300():
    return {a: run("nca_markov", a, 0.1, 300.0) for a in (0.1, 0.5, 0.9, 1.2)}


@pytest.fixture(scope="module")
def spectra_runs():
    """Long-window runs for steady-state correlation spectra."""
    out = {}
    for method, alpha in (("nca", 0.1), ("nca", 0.5), ("nca", 0.9), ("born", 0.5)):
        traj = run(method, alpha, 0.1, 4000.0)
        assert traj.status == "completed"
        k300 = KernelTrajectory(
            dt=traj.kernels.dt,
            kernels=traj.kernels.kernels[:3001],
            method=method,
            form=traj.kernels.form,
        )
        rho_s = steady(MODEL, k300)
        f = regression_correlation(traj, SIGMA_Z, rho_s)
        out[(method, alpha)] = (traj, rho_s, f)
    return out


# --- C1 ------------------------------------------------------------------


def test_c01_exact_limit_oracle():
    worst = {}
    for name in SOLVERS:
        traj = run(name, 0.0, 0.01, 100.0)  # 10 bare spin periods at Delta = 0.1
        sz = sz_series(traj).values
        worst[name] = float(np.abs(sz + np.cos(DELTA * traj.times)).max())
    ok = all(err < 1e-6 for err in worst.values())
    report(
        "C1 exact-limit oracle (alpha=0, 10 periods, dt=0.01)",
        ok,
        "sup errors " + ", ".join(f"{k}={v:.2e}" for k, v in worst.items()) + " (tol 1e-6)",
    )


# --- C2 ------------------------------------------------------------------


def test_c02_trace_and_hermiticity(nca300, ncam300):
    rows = []
    for alpha in (0.1, 0.5, 0.9):
        for label, traj in (("nca", nca300[alpha]), ("nca_markov", ncam300[alpha])):
            rows.append((label, alpha, traj.trace_defect(), traj.hermiticity_defect()))
    ok = all(tr <= 1e-8 and he <= 1e-8 for _, _, tr, he in rows)
    worst_tr = max(r[2] for r in rows)
    worst_he = max(r[3] for r in rows)
    report(
        "C2 structural invariants (trace/hermiticity of V)",
        ok,
        f"worst trace defect {worst_tr:.2e}, worst hermiticity defect {worst_he:.2e} (tol 1e-8)",
    )


def test_c02_positivity_delocalized_phase(nca300, ncam300):
    rows = []
    for alpha in (0.1, 0.5, 0.9):
        for label, traj in (("nca", nca300[alpha]), ("nca_markov", ncam300[alpha])):
            min_eig = evolve_expectations(traj, RHO_DOWN, []).diagnostics["min_eig"].values
            rows.append((label, alpha, float(min_eig.min())))
    ok = all(me >= -1e-6 for _, _, me in rows)
    detail = ", ".join(f"{m}@{a}={me:+.2e}" for m, a, me in rows) + " (tol -1e-6)"
    if not ok:
        detail += (
            " | the nca map at alpha=0.9 develops a grid-converged transient negative "
            "eigenvalue near t ~ 1.1 x 2pi (cross-checked by an independent fixed-point "
            "solve of the same equations); see notes/decisions.md"
        )
    report("C2 positivity in the delocalized phase", ok, detail)


# --- C3 ------------------------------------------------------------------


def test_c03_kernel_reduction():
    spec = BathSpec(alpha=0.3)
    table = tabulate(spec, dt=0.1 * TWO_PI, n_steps=3000)
    ls = liouvillian(MODEL.hamiltonian)
    rng = np.random.default_rng(2024)
    taus = rng.choice(table.taus, size=100, replace=False)
    worst = 0.0
    for tau in taus:
        lhs = nca_kernel(superop_exp(ls, tau), correlation(spec, tau), SIGMA_Z)
        rhs = born_kernel(tau, MODEL, table)
        worst = max(worst, float(np.abs(lhs - rhs).max()))
    report(
        "C3 kernel reduction on the bare propagator",
        worst < 1e-12,
        f"worst entrywise difference {worst:.2e} over 100 random grid times (tol 1e-12)",
    )


# --- C4 ------------------------------------------------------------------


def test_c04_coherent_incoherent_crossover():
    def label(alpha):
        traj = run("nca", alpha, 0.1, 500.0)
        return classify_dynamics(sz_series(traj)).label

    weak, strong = label(0.1), label(0.5)
    lo, hi = 0.1, 0.5
    for _ in range(6):
        mid = 0.5 * (lo + hi)
        if label(mid) == "coherent":
            lo = mid
        else:
            hi = mid
    cross = 0.5 * (lo + hi)
    ok = weak == "coherent" and strong == "incoherent" and 0.15 <= cross <= 0.3
    report(
        "C4 coherent-incoherent crossover",
        ok,
        f"alpha=0.1 -> {weak}, alpha=0.5 -> {strong}, crossover estimate {cross:.3f} "
        "(window [0.15, 0.3])",
    )


# --- C5 ------------------------------------------------------------------


def test_c05_localization_onset(nca300, ncam300):
    times = [relaxation_time(sz_series(nca300[a]), 0.01) / TWO_PI for a in (0.5, 0.7, 0.9)]
    increasing = times[0] < times[1] < times[2]
    markov = run("nca_markov", 1.2, 0.1, 300.0)
    sz = sz_series(markov).values
    relaxing = markov.status == "completed" and abs(sz[-1]) < 0.2 * abs(sz[0])
    ok = increasing and relaxing
    report(
        "C5 localization onset",
        ok,
        f"nca relaxation times (x 2pi) at alpha 0.5/0.7/0.9 = "
        f"{times[0]:.1f}/{times[1]:.1f}/{times[2]:.1f} strictly increasing; "
        f"nca_markov at alpha=1.2 {markov.status}, |sz| end ratio "
        f"{abs(sz[-1]) / abs(sz[0]):.3f}",
    )


# --- C6 ------------------------------------------------------------------


def test_c06a_born_relaxes_below_physical_floor():
    traj = run("born", 0.1, 0.01, 300.0)
    res = evolve_expectations(traj, RHO_DOWN, [SIGMA_X])
    sx = np.real(res.series[0].values)
    min_eig = res.diagnostics["min_eig"].values
    late = slice(len(sx) // 2, None)
    idx = int(np.argmin(sx[late]))
    sx_late_min = float(sx[late][idx])
    flagged = float(min_eig[late][idx])
    rho_s = steady(MODEL, traj.kernels)
    ok = sx_late_min < -1.0 and flagged < 0 and sx_of(rho_s) < -1.0
    report(
        "C6a born relaxes below <sx> = -1",
        ok,
        f"late-window min <sx> = {sx_late_min:.6f} with min eigenvalue {flagged:.2e}; "
        f"null-space steady <sx> = {sx_of(rho_s):.6f}",
    )


def test_c06b_born_oscillations_persist():
    traj = run("born", 0.5, 0.01, 500.0)
    res = evolve_expectations(traj, RHO_DOWN, [SIGMA_X, SIGMA_Z])
    sx = np.real(res.series[0].values)
    sz = TimeSeries(traj.dt, np.real(res.series[1].values))
    label = classify_dynamics(sz).label
    late_ptp = float(np.ptp(sx[2 * len(sx) // 3 :]))
    ok = label == "coherent" and late_ptp >= 0.05
    report(
        "C6b born misses the crossover at alpha=0.5",
        ok,
        f"<sz> classified {label} (expected coherent), late <sx> peak-to-peak {late_ptp:.3f}",
    )


def test_c06c_born_markov_instability_onset(tmp_path, capsys):
    def diverges(alpha):
        return run("born_markov", alpha, 0.1, 1000.0).status == "diverged"

    lo, hi = 0.1, 0.4
    assert not diverges(lo) and diverges(hi)
    for _ in range(6):
        mid = 0.5 * (lo + hi)
        if diverges(mid):
            hi = mid
        else:
            lo = mid
    onset = 0.5 * (lo + hi)
    cfg = tmp_path / "bm.cfg"
    cfg.write_text(
        "bath.alpha = 0.05, 0.3\nmethod = born_markov\ngrid.t_max = 300\n"
    )
    code = cli_entry(["dynamics", "--config", str(cfg), "--out", str(tmp_path / "o")])
    cli_out = capsys.readouterr().out
    ok = 0.18 <= onset <= 0.28 and code == 2 and "diverged" in cli_out
    report(
        "C6c born_markov structured divergence",
        ok,
        f"instability onset alpha = {onset:.3f} (window 0.23 +/- 0.05); "
        f"sweep over a diverging point exits {code} (expected 2)",
    )


# --- C7 ------------------------------------------------------------------


def test_c07_steady_state_contrast(nca300):
    born_rho = {a: steady(MODEL, run("born", a, 0.1, 300.0).kernels) for a in (0.05, 0.2)}
    bm_rho = {a: steady(MODEL, run("born_markov", a, 0.1, 300.0).kernels) for a in (0.05, 0.2)}
    born_dev = float(np.abs(born_rho[0.05] - born_rho[0.2]).max())
    bm_dev = float(np.abs(bm_rho[0.05] - bm_rho[0.2]).max())

    nca_sx = [sx_of(steady(MODEL, nca300[a].kernels)) for a in (0.01, 0.1, 0.3, 0.5)]
    increasing = all(a < b for a, b in zip(nca_sx, nca_sx[1:]))

    rho = steady(MODEL, nca300[0.3].kernels)
    off_diag = float(np.abs((UX.conj().T @ rho @ UX)[0, 1]))

    ok = born_dev < 1e-6 and bm_dev < 1e-6 and increasing and off_diag < 1e-6
    report(
        "C7 steady-state contrast",
        ok,
        f"born/born_markov coupling dependence {born_dev:.1e}/{bm_dev:.1e} (tol 1e-6); "
        f"nca <sx> over alpha 0.01..0.5 = " + ", ".join(f"{v:+.3f}" for v in nca_sx)
        + f" strictly increasing; off-diagonal in the coupling eigenbasis {off_diag:.1e}",
    )


# --- C8 ------------------------------------------------------------------


def test_c08_spectra(spectra_runs):
    eta = 5e-4
    peak_grid = np.linspace(0.001, 0.15, 597)
    peaks = {}
    for alpha in (0.1, 0.5, 0.9):
        _, _, f = spectra_runs[("nca", alpha)]
        spec = spectrum_cz(f, eta, peak_grid)
        assert np.abs(spec.values.imag).max() <= 1e-8 * np.abs(spec.values.real).max()
        peaks[alpha] = peak_frequency(spec)
    renormalizing = peaks[0.1] > peaks[0.5] > peaks[0.9]

    low_band = np.logspace(-3, -2, 13)
    traj, rho_s, _ = spectra_runs[("nca", 0.1)]
    nca_spec = spectrum_cz_resolvent(MODEL, traj.kernels, rho_s, SIGMA_Z, low_band)
    nca_slope = loglog_slope(nca_spec, 1e-3, 1e-2)
    traj, rho_s, _ = spectra_runs[("born", 0.5)]
    born_spec = spectrum_cz_resolvent(MODEL, traj.kernels, rho_s, SIGMA_Z, low_band)
    born_slope = loglog_slope(born_spec, 1e-3, 1e-2)

    ok = (
        renormalizing
        and abs(nca_slope - 1.0) <= 0.15
        and abs(born_slope - 2.0) <= 0.2
    )
    report(
        "C8 spectra",
        ok,
        f"nca peaks {peaks[0.1]:.4f} > {peaks[0.5]:.4f} > {peaks[0.9]:.4f}; "
        f"low-frequency slopes nca {nca_slope:.3f} (1.0 +/- 0.15), "
        f"born {born_slope:.3f} (2.0 +/- 0.2); Im/Re <= 1e-8",
    )


# --- C9 ------------------------------------------------------------------


def test_c09_transmission_maps():
    omegas = np.linspace(0.005, 0.4, 160)
    epsilons = [-0.3, -0.2, -0.1, 0.0, 0.1, 0.2, 0.3]

    def t2_map(alpha):
        rows = {}
        for eps in epsilons:
            model = ModelSpec(delta=DELTA, epsilon=eps)
            dt = 0.1 * TWO_PI
            n = 5000
            table = tabulate(BathSpec(alpha=alpha), dt, n)
            traj = solve_nca(model, table, dt, n)
            k300 = KernelTrajectory(
                dt=dt, kernels=traj.kernels.kernels[:3001], method="nca"
            )
            rho_s = steady(model, k300)
            f = regression_correlation(traj, SIGMA_Z, rho_s)
            tr = susceptibility_and_transmission(f, 0.0025, omegas)
            rows[eps] = tr.t_squared
        return rows

    weak, strong = t2_map(0.1), t2_map(0.6)
    ridge_ok = True
    worst_rel = 0.0
    for eps in epsilons:
        ridge = omegas[int(np.argmax(np.abs(weak[eps] - 1.0)))]
        target = np.hypot(DELTA, eps)
        rel = abs(ridge - target) / target
        worst_rel = max(worst_rel, rel)
        ridge_ok &= rel <= 0.10
    rel_var = {
        a: np.mean([np.ptp(m[eps]) / np.mean(m[eps]) for eps in epsilons])
        for a, m in (("weak", weak), ("strong", strong))
    }
    contrast = rel_var["weak"] / rel_var["strong"]
    ok = ridge_ok and contrast >= 5.0
    report(
        "C9 transmission maps",
        ok,
        f"ridge tracks the qubit dispersion within {worst_rel:.1%} (tol 10%); "
        f"|T|^2 frequency variation contrast weak/strong = {contrast:.1f} (>= 5)",
    )


# --- C10 -----------------------------------------------------------------


def test_c10_numerical_order():
    dts = [d * TWO_PI for d in (0.2, 0.1, 0.05, 0.025)]
    orders = {}
    for method in SOLVERS:
        study = convergence_study(method, MODEL, BathSpec(alpha=0.1), dts, 20.0 * TWO_PI)
        orders[method] = study.empirical_order
    ok = all(v >= 1.8 for v in orders.values())
    report(
        "C10 numerical order",
        ok,
        "empirical orders " + ", ".join(f"{k}={v:.2f}" for k, v in orders.items()) + " (>= 1.8)",
    )
