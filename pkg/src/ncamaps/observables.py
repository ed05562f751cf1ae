"""Physics outputs built on propagator trajectories.

Expectation values and diagnostics along a run, steady states from the
kernel integral, steady-state two-time correlations via the regression
route (propagating ``X rho_s`` with the same map), and the derived
frequency-domain quantities: the symmetrised spin spectrum ``C_z(w)``,
the retarded susceptibility ``chi(w)`` and the probe transmission
``T(w) = 1 - i N w chi(w)``.

Two evaluators exist for ``C_z(w)``.  The windowed transform

    C_z(w) = int_{-T}^{T} dt  e^{i w t - eta |t|} C_z(t)
           = -2 int_0^T dt  Im F(t)  sin(w t)  e^{-eta t}

is the workhorse (real by construction, resolution set by ``eta``).  For
power-law behaviour at frequencies below any reachable ``eta`` there is a
damping-free route, :func:`spectrum_cz_resolvent`, which solves the
kernel-resolvent linear system ``(-i w - L - S^hat(-i w)) r = vec(X rho_s)``
instead of transforming a finite window; both agree wherever the window is
converged.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .dynmaps import KernelTrajectory, ModelSpec, PropagatorTrajectory
from .qops import density_diagnostics, devectorize, liouvillian, vectorize

__all__ = [
    "TimeSeries",
    "Spectrum",
    "ExpectationResult",
    "TransmissionSpectra",
    "DynamicsClassification",
    "DegenerateSteadyStateError",
    "evolve_expectations",
    "steady_state",
    "regression_correlation",
    "spectrum_cz",
    "spectrum_cz_resolvent",
    "susceptibility_and_transmission",
    "classify_dynamics",
    "relaxation_time",
    "peak_frequency",
    "loglog_slope",
]


@dataclass(frozen=True)
class TimeSeries:
    dt: float
    values: np.ndarray
    label: str = ""

    @property
    def times(self) -> np.ndarray:
        return self.dt * np.arange(len(self.values))


@dataclass(frozen=True)
class Spectrum:
    omegas: np.ndarray
    values: np.ndarray
    eta: float
    label: str = ""


@dataclass(frozen=True)
class ExpectationResult:
    series: list
    diagnostics: dict


class DegenerateSteadyStateError(RuntimeError):
    """Null space of the steady-state matrix has dimension > 1."""


def evolve_expectations(
    traj: PropagatorTrajectory,
    rho0: np.ndarray,
    ops,
    labels=None,
) -> ExpectationResult:
    """tr[O_i rho(t_n)] for each operator, with density diagnostics alongside."""
    diag = density_diagnostics(rho0)
    if abs(diag.trace - 1.0) > 1e-12 or diag.hermiticity_defect > 1e-12:
        raise ValueError("rho0 must be a unit-trace Hermitian density matrix")
    rho_t = np.einsum("nij,j->ni", traj.maps, vectorize(rho0))
    if labels is None:
        labels = [f"op{i}" for i in range(len(ops))]
    series = [
        TimeSeries(traj.dt, rho_t @ vectorize(np.asarray(op).T), label)
        for op, label in zip(ops, labels)
    ]
    n = len(traj.maps)
    trace = np.empty(n)
    min_eig = np.empty(n)
    purity = np.empty(n)
    herm = np.empty(n)
    for k in range(n):
        d = density_diagnostics(devectorize(rho_t[k]))
        trace[k], min_eig[k], purity[k], herm[k] = (
            d.trace,
            d.min_eigenvalue,
            d.purity,
            d.hermiticity_defect,
        )
    diagnostics = {
        "trace": TimeSeries(traj.dt, trace, "trace"),
        "min_eig": TimeSeries(traj.dt, min_eig, "min_eig"),
        "purity": TimeSeries(traj.dt, purity, "purity"),
        "hermiticity_defect": TimeSeries(traj.dt, herm, "hermiticity_defect"),
    }
    return ExpectationResult(series=series, diagnostics=diagnostics)


def steady_state(
    model: ModelSpec,
    kernel_traj: KernelTrajectory,
    *,
    tail_fraction: float = 0.1,
    tail_tol: float = 1e-8,
    separation_min: float = 10.0,
) -> np.ndarray:
    """Null-space steady state of ``L + int_0^T S(tau) dtau``.

    The kernel integral is a composite trapezoid over the tabulated kernels.
    Convergence of the integral is measured by the contribution of the last
    ``tail_fraction`` of the window relative to the whole; with the sharp-cutoff
    Ohmic bath the kernel envelope only decays like 1/tau^2, so the measured
    tail is reported via a warning when it exceeds `tail_tol` instead of
    refusing to answer.  A second-smallest singular value within a factor
    `separation_min` of the smallest is flagged; a genuinely degenerate null
    space raises.
    """
    kernels = kernel_traj.kernels
    n = len(kernels) - 1
    if n < 1:
        raise ValueError("kernel trajectory too short")
    dt = kernel_traj.dt
    weights = np.ones(n + 1)
    weights[0] = weights[-1] = 0.5
    total = dt * np.einsum("n,nij->ij", weights, kernels)
    cut = int((1.0 - tail_fraction) * n)
    wt = np.ones(n + 1 - cut)
    wt[0] = wt[-1] = 0.5
    tail = dt * np.einsum("n,nij->ij", wt, kernels[cut:])
    total_norm = max(float(np.abs(total).max()), 1e-300)
    tail_measure = float(np.abs(tail).max()) / total_norm
    if tail_measure > tail_tol:
        warnings.warn(
            f"kernel integral tail fraction {tail_measure:.2e} exceeds {tail_tol:.0e}; "
            "steady state carries a finite-window error of this order",
            stacklevel=2,
        )
    a = liouvillian(model.hamiltonian) + total
    _, sv, vh = np.linalg.svd(a)
    null_dim = int(np.sum(sv < 1e-10 * sv[0]))
    if null_dim > 1:
        raise DegenerateSteadyStateError(
            f"steady-state matrix has a {null_dim}-dimensional null space"
        )
    if sv[-2] < separation_min * sv[-1]:
        warnings.warn(
            f"steady-state null direction poorly separated "
            f"(singular-value ratio {sv[-2] / max(sv[-1], 1e-300):.1f} < {separation_min})",
            stacklevel=2,
        )
    rho = devectorize(vh[-1].conj())
    rho = 0.5 * (rho + rho.conj().T)
    return rho / np.trace(rho).real


def regression_correlation(
    traj: PropagatorTrajectory, x: np.ndarray, rho_s: np.ndarray
) -> TimeSeries:
    """Steady-state two-time correlation F(t) = tr[X V(t) (X rho_s)].

    Uses time-translation invariance of the stationary state, so the single
    trajectory V(t) stands in for the two-time map.  Negative lags follow
    from ``F(-t) = conj(F(t))`` and are not tabulated.
    """
    x = np.asarray(x, dtype=complex)
    f = np.einsum("i,nij,j->n", vectorize(x.T), traj.maps, vectorize(x @ rho_s))
    return TimeSeries(traj.dt, f, "F")


def _window_weights(n: int) -> np.ndarray:
    w = np.ones(n)
    w[0] = w[-1] = 0.5
    return w


def spectrum_cz(f: TimeSeries, eta: float, omegas) -> Spectrum:
    """Windowed transform of C_z(t) = (F(t) - F(t)^*) / 2.

    Evaluated as ``-2 int_0^T Im F(t) sin(w t) e^{-eta t} dt`` (trapezoid), so
    the result is real by construction.  Warns when the damping window is too
    short, ``exp(-eta T) > 1e-3``.
    """
    if eta <= 0:
        raise ValueError("eta must be > 0")
    omegas = np.asarray(omegas, dtype=float)
    t = f.times
    if np.exp(-eta * t[-1]) > 1e-3:
        warnings.warn(
            f"damping window insufficient: exp(-eta T) = {np.exp(-eta * t[-1]):.2e} > 1e-3",
            stacklevel=2,
        )
    integrand = np.imag(f.values) * np.exp(-eta * t) * _window_weights(len(t)) * f.dt
    vals = np.empty(len(omegas))
    chunk = 256
    for i in range(0, len(omegas), chunk):
        om = omegas[i : i + chunk]
        vals[i : i + chunk] = -2.0 * (np.sin(np.outer(om, t)) @ integrand)
    return Spectrum(omegas=omegas, values=vals.astype(complex), eta=eta, label="cz")


def spectrum_cz_resolvent(
    model: ModelSpec,
    kernel_traj: KernelTrajectory,
    rho_s: np.ndarray,
    x: np.ndarray,
    omegas,
) -> Spectrum:
    """Damping-free C_z(w) from the kernel resolvent.

    The one-sided transform ``G(w) = int_0^inf e^{i w t} F(t) dt`` solves
    ``(-i w - L - S^hat(-i w)) r = vec(X rho_s)``, ``G = vec(X^T) . r``,
    with ``S^hat`` the one-sided kernel transform on the tabulated window;
    then ``C_z(w) = Re G(w) - Re G(-w)``.  Exact eta -> 0+ limit of
    :func:`spectrum_cz`; preferred for small-frequency power laws.
    """
    omegas = np.asarray(omegas, dtype=float)
    x = np.asarray(x, dtype=complex)
    kernels = kernel_traj.kernels
    taus = kernel_traj.taus
    wq = _window_weights(len(taus)) * kernel_traj.dt
    ls = liouvillian(model.hamiltonian)
    d2 = ls.shape[0]
    src = vectorize(x @ rho_s)
    probe = vectorize(x.T)
    eye = np.eye(d2)

    def one_sided(w):
        phases = np.exp(1j * w * taus) * wq
        s_hat = np.einsum("n,nij->ij", phases, kernels)
        m = (-1j * w) * eye - ls - s_hat
        return probe @ np.linalg.solve(m, src)

    vals = np.array([np.real(one_sided(w)) - np.real(one_sided(-w)) for w in omegas])
    return Spectrum(omegas=omegas, values=vals.astype(complex), eta=0.0, label="cz")


@dataclass(frozen=True)
class TransmissionSpectra:
    omegas: np.ndarray
    chi: np.ndarray
    transmission: np.ndarray
    eta: float

    @property
    def t_squared(self) -> np.ndarray:
        return np.abs(self.transmission) ** 2


def susceptibility_and_transmission(
    f: TimeSeries, eta: float, omegas, n_coupling: float = 1.0
) -> TransmissionSpectra:
    """Retarded susceptibility and probe transmission.

    ``chi(t) = -i theta(t) (F(t) - F(t)^*) = 2 theta(t) Im F(t)`` transformed
    with the same damping window as :func:`spectrum_cz`; then
    ``T(w) = 1 - i n_coupling w chi(w)``.
    """
    if eta <= 0:
        raise ValueError("eta must be > 0")
    omegas = np.asarray(omegas, dtype=float)
    t = f.times
    if np.exp(-eta * t[-1]) > 1e-3:
        warnings.warn(
            f"damping window insufficient: exp(-eta T) = {np.exp(-eta * t[-1]):.2e} > 1e-3",
            stacklevel=2,
        )
    integrand = 2.0 * np.imag(f.values) * np.exp(-eta * t) * _window_weights(len(t)) * f.dt
    chi = np.empty(len(omegas), dtype=complex)
    chunk = 256
    for i in range(0, len(omegas), chunk):
        om = omegas[i : i + chunk]
        chi[i : i + chunk] = np.exp(1j * np.outer(om, t)) @ integrand
    tvals = 1.0 - 1j * n_coupling * omegas * chi
    return TransmissionSpectra(omegas=omegas, chi=chi, transmission=tvals, eta=eta)


@dataclass(frozen=True)
class DynamicsClassification:
    label: str
    zero_crossings: int
    decay_time: float
    settled: bool


def relaxation_time(sz: TimeSeries, threshold: float) -> float:
    """First time |<sz>(t)| stays below threshold * |<sz>(0)| for good.

    Returns ``inf`` when the series never settles below the threshold.
    """
    if not 0.0 < threshold < 1.0:
        raise ValueError("threshold must lie in (0, 1)")
    vals = np.abs(np.real(sz.values))
    above = np.nonzero(vals >= threshold * vals[0])[0]
    if len(above) == 0:
        return 0.0
    if above[-1] == len(vals) - 1:
        return float("inf")
    return float(sz.times[above[-1] + 1])


def classify_dynamics(sz: TimeSeries, decay_fraction: float = 0.01) -> DynamicsClassification:
    """Coherent vs incoherent spin relaxation.

    Coherent means the signal crosses zero at least twice before its
    amplitude has decayed below ``decay_fraction`` of the initial magnitude
    (the decay point being where it stays below that level for the remainder
    of the run).  Scale-invariant by construction.  A series whose final
    fifth still carries more than a quarter of the overall amplitude is
    flagged as unsettled.
    """
    vals = np.real(sz.values)
    t_decay = relaxation_time(sz, decay_fraction)
    if np.isfinite(t_decay):
        stop = int(round(t_decay / sz.dt))
    else:
        stop = len(vals)
    signs = np.sign(vals[:stop])
    signs = signs[signs != 0]
    crossings = int(np.sum(signs[1:] != signs[:-1]))
    overall = float(np.abs(vals).max())
    late = float(np.abs(vals[int(0.8 * len(vals)) :]).max()) if len(vals) > 5 else overall
    settled = overall == 0.0 or late <= 0.25 * overall
    if not settled:
        warnings.warn("series has not settled; classification may be premature", stacklevel=2)
    return DynamicsClassification(
        label="coherent" if crossings >= 2 else "incoherent",
        zero_crossings=crossings,
        decay_time=t_decay,
        settled=settled,
    )


def peak_frequency(spec: Spectrum, omega_min: float = 0.0) -> float:
    """Location of the maximum of Re C_z(w), parabolically refined."""
    om = spec.omegas
    vals = np.real(spec.values)
    mask = om > omega_min
    idx = np.argmax(np.where(mask, vals, -np.inf))
    if 0 < idx < len(om) - 1 and np.all(np.diff(om[idx - 1 : idx + 2]) > 0):
        y0, y1, y2 = vals[idx - 1 : idx + 2]
        denom = y0 - 2 * y1 + y2
        if denom < 0:
            shift = 0.5 * (y0 - y2) / denom
            return float(om[idx] + shift * (om[idx + 1] - om[idx]))
    return float(om[idx])


def loglog_slope(spec: Spectrum, omega_lo: float, omega_hi: float) -> float:
    """Log-log slope of |Re C_z| over [omega_lo, omega_hi]."""
    om = spec.omegas
    mask = (om >= omega_lo) & (om <= omega_hi) & (np.abs(spec.values.real) > 0)
    if mask.sum() < 2:
        raise ValueError("need at least two grid points inside the fit band")
    return float(np.polyfit(np.log(om[mask]), np.log(np.abs(spec.values.real[mask])), 1)[0])
