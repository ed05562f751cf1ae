"""Dynamical-map solvers on a uniform time grid.

Four solvers share one representation: the evolution superoperator
``V(t)`` with ``rho(t) = V(t) rho(0)``, advanced from ``V(0) = I``.

* ``solve_nca`` — time-nonlocal Volterra equation

      dV/dt = L V(t) + int_0^t  S(t - t1) V(t1) dt1,

  with the self-consistent memory kernel

      S(tau) = (-X_+ + X_-) V(tau) [Gamma(tau) X_+ - Gamma*(tau) X_-],

  where ``X_+`` / ``X_-`` multiply from the left / right.  The kernel at
  lag tau is built from the trajectory itself, so the equation is solved
  causally: marching to t_{n+1} only ever needs kernels at lags <= t_{n+1}.

* ``solve_born`` — the same Volterra machinery with the kernel frozen at
  second order: ``V(tau)`` inside ``S`` replaced by the bare map
  ``exp(L tau)``.

* ``solve_nca_markov`` — time-local form: the memory convolution is
  contracted into a running generator ``L + M(t)`` with
  ``M(t) = int_0^t S(tau) exp(-L tau) dtau`` and the self-consistent kernel.

* ``solve_born_markov`` — time-local with the second-order kernel; the
  generator is assembled from the running filtered operator
  ``Xf(t) = int_0^t Gamma(tau) e^{-iH tau} X e^{iH tau} dtau``
  (finite upper limit, no asymptotic replacement).

Numerics: composite trapezoidal quadrature for all time integrals, and a
second-order step that treats the coherent part exactly.  The Volterra
solvers use the exponential-trapezoidal update

    V_{n+1} = E [ V_n + (dt/2) I_n ] + (dt/2) I_{n+1},      E = exp(L dt),

with ``I_n`` the memory integral at t_n and a fixed-point corrector for the
implicit dependence of ``I_{n+1}`` on ``V_{n+1}`` (predictor: explicit
step; corrector: re-evaluate the kernel at the new point).  The time-local
solvers use midpoint-exponential stepping
``V_{n+1} = exp[(L + M_{n+1/2}) dt] V_n`` with the midpoint generator from
a predictor half-step.  At alpha = 0 every solver reduces to the exact
unitary conjugation map by construction.

Cost: a Volterra solve is O(N^2) in the step count (the memory integral is
re-stacked as one BLAS matrix product per step); trajectory storage is
O(N D^4) and dominates memory, so long runs can subsample what they return
via ``store_stride`` (the solver itself always keeps full history).  Runs
whose entries exceed ``DIVERGENCE_THRESHOLD`` (or go non-finite) terminate
early with a structured ``diverged`` status rather than raising.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .bath import BathSpec, CorrelationTable, correlation, tabulate
from .qops import (
    SIGMA_X,
    SIGMA_Z,
    hermiticity_defect,
    hermiticity_preservation_defect,
    left_mult,
    liouvillian,
    right_mult,
    trace_defect_map,
)

__all__ = [
    "ModelSpec",
    "PropagatorTrajectory",
    "KernelTrajectory",
    "ConvergenceStudy",
    "SolverConvergenceError",
    "nca_kernel",
    "born_kernel",
    "solve_nca",
    "solve_born",
    "solve_nca_markov",
    "solve_born_markov",
    "get_solver",
    "convergence_study",
    "METHODS",
]

#: a run is declared diverged once any |entry| of V exceeds this
DIVERGENCE_THRESHOLD = 1e6
#: fixed-point corrector: max-norm tolerance on the V update and iteration cap
CORRECTOR_TOL = 1e-10
CORRECTOR_MAX_ITER = 25

METHODS = ("nca", "nca_markov", "born", "born_markov")


class SolverConvergenceError(RuntimeError):
    """Per-step fixed-point corrector failed to reach tolerance."""


@dataclass(frozen=True)
class ModelSpec:
    """System side of the model: Hamiltonian and bath-coupling operator."""

    delta: float
    epsilon: float = 0.0
    hamiltonian: np.ndarray = field(default=None, repr=False)
    coupling_operator: np.ndarray = field(default=None, repr=False)

    def __post_init__(self):
        if self.hamiltonian is None:
            object.__setattr__(
                self, "hamiltonian", 0.5 * self.delta * SIGMA_X + 0.5 * self.epsilon * SIGMA_Z
            )
        if self.coupling_operator is None:
            object.__setattr__(self, "coupling_operator", SIGMA_Z.copy())
        for name in ("hamiltonian", "coupling_operator"):
            m = np.asarray(getattr(self, name), dtype=complex)
            object.__setattr__(self, name, m)
            if hermiticity_defect(m) > 1e-12:
                raise ValueError(f"{name} must be Hermitian")

    @property
    def dim(self) -> int:
        return self.hamiltonian.shape[0]


@dataclass(frozen=True)
class KernelTrajectory:
    """Memory kernels on the solver grid.

    ``form`` records what the entries are: the self-energy ``S(tau)`` for the
    time-nonlocal methods, or the generator integrand ``S(tau) exp(-L tau)``
    for the time-local ones (that is what their steady-state equation needs).
    """

    dt: float
    kernels: np.ndarray
    method: str
    form: str = "self_energy"

    @property
    def taus(self) -> np.ndarray:
        return self.dt * np.arange(len(self.kernels))


@dataclass(frozen=True)
class PropagatorTrajectory:
    """V(t_n) on the uniform grid, plus run metadata.

    ``maps[k]`` is V at time ``times[k]``; with ``store_stride > 1`` the grid
    is subsampled but always includes t = 0 (where V is the identity).
    """

    dt: float
    maps: np.ndarray
    method: str
    status: str = "completed"
    diverged_at: float | None = None
    kernels: KernelTrajectory | None = None
    store_stride: int = 1

    @property
    def times(self) -> np.ndarray:
        # dt is the spacing of the *stored* maps (solver step times store_stride)
        return self.dt * np.arange(len(self.maps))

    @property
    def n_stored(self) -> int:
        return len(self.maps)

    def trace_defect(self) -> float:
        return max(trace_defect_map(v) for v in self.maps)

    def hermiticity_defect(self) -> float:
        return max(hermiticity_preservation_defect(v) for v in self.maps)


def _kernel_factors(x: np.ndarray, gamma_vals: np.ndarray):
    """A = (-X_+ + X_-) and B_n = Gamma_n X_+ - Gamma_n^* X_- for each grid node."""
    xl, xr = left_mult(x), right_mult(x)
    a = -xl + xr
    b = gamma_vals[:, None, None] * xl[None] - np.conj(gamma_vals)[:, None, None] * xr[None]
    return a, b


def nca_kernel(v_tau: np.ndarray, gamma_tau: complex, x: np.ndarray) -> np.ndarray:
    """Self-consistent memory kernel at one lag.

    ``(-X_+ + X_-) V(tau) [Gamma(tau) X_+ - Gamma*(tau) X_-]`` — the dressed
    propagator sandwiched between the two coupling insertions.
    """
    x = np.asarray(x, dtype=complex)
    v_tau = np.asarray(v_tau, dtype=complex)
    d2 = x.shape[0] ** 2
    if v_tau.shape != (d2, d2):
        raise ValueError(f"propagator must be {d2}x{d2} for a {x.shape[0]}-dim system")
    xl, xr = left_mult(x), right_mult(x)
    return (-xl + xr) @ v_tau @ (gamma_tau * xl - np.conj(gamma_tau) * xr)


def _bare_propagators(h: np.ndarray, taus: np.ndarray) -> np.ndarray:
    """exp(L tau) for every tau at once, via the spectral decomposition of H."""
    evals, u = np.linalg.eigh(h)
    phases = np.exp(-1j * np.outer(taus, evals))
    ut = np.einsum("ij,nj,kj->nik", u, phases, u.conj())  # e^{-iH tau}
    d = h.shape[0]
    return np.einsum("nab,ncd->ncadb", ut, ut.conj()).reshape(len(taus), d * d, d * d)


def born_kernel(tau: float, model: ModelSpec, bath_table: CorrelationTable) -> np.ndarray:
    """Second-order kernel: the bare map replaces the dressed one."""
    v0 = _bare_propagators(model.hamiltonian, np.array([tau]))[0]
    gam = correlation(bath_table.spec, tau)
    return nca_kernel(v0, gam, model.coupling_operator)


def _check_grid(bath_table: CorrelationTable, dt: float, n_steps: int) -> None:
    if n_steps < 1:
        raise ValueError("n_steps must be >= 1")
    if abs(bath_table.dt - dt) > 1e-12 * max(dt, 1.0):
        raise ValueError(f"bath table dt {bath_table.dt} does not match solver dt {dt}")
    if bath_table.n_steps < n_steps:
        raise ValueError("bath table shorter than the requested run")


def _finite(v: np.ndarray) -> bool:
    return bool(np.isfinite(v).all()) and float(np.abs(v).max()) <= DIVERGENCE_THRESHOLD


def _solve_volterra(
    model: ModelSpec,
    bath_table: CorrelationTable,
    dt: float,
    n_steps: int,
    self_consistent: bool,
    tol: float,
    max_iter: int,
    store_stride: int,
) -> PropagatorTrajectory:
    _check_grid(bath_table, dt, n_steps)
    d2 = model.dim**2
    method = "nca" if self_consistent else "born"
    ls = liouvillian(model.hamiltonian)
    e_dt = scipy.linalg.expm(ls * dt)
    gam = bath_table.values[: n_steps + 1]
    a_fac, b_fac = _kernel_factors(model.coupling_operator, gam)

    v = np.zeros((n_steps + 1, d2, d2), dtype=complex)
    v[0] = np.eye(d2)
    # reversed buffer: rbuf[n_steps - j] = V_j, so descending-time slices of the
    # history are contiguous views (keeps the per-step convolution a single gemm)
    rbuf = np.zeros_like(v)
    rbuf[n_steps] = v[0]
    kernels = np.zeros_like(v)
    # kernels stacked horizontally, (d2, d2*(n+1)), for the same reason
    k_flat = np.zeros((d2, d2 * (n_steps + 1)), dtype=complex)

    if self_consistent:
        kernels[0] = a_fac @ v[0] @ b_fac[0]
        k_flat[:, :d2] = kernels[0]
    else:
        v0s = _bare_propagators(model.hamiltonian, dt * np.arange(n_steps + 1))
        kernels[:] = np.einsum("ij,njk,nkl->nil", a_fac, v0s, b_fac)
        k_flat[:] = kernels.transpose(1, 0, 2).reshape(d2, -1)

    def result(status, n_done, diverged_at=None):
        form = "self_energy"
        kt = KernelTrajectory(dt=dt, kernels=kernels[: n_done + 1], method=method, form=form)
        return PropagatorTrajectory(
            dt=dt * store_stride,
            maps=np.ascontiguousarray(v[: n_done + 1 : store_stride]),
            method=method,
            status=status,
            diverged_at=diverged_at,
            kernels=kt,
            store_stride=store_stride,
        )

    integral_prev = np.zeros((d2, d2), dtype=complex)  # memory integral at t_0
    for n in range(n_steps):
        # middle of the trapezoid at t_{n+1}: m = 1..n fixed during correction
        if n >= 1:
            mid = dt * (
                k_flat[:, d2 : d2 * (n + 1)]
                @ rbuf[n_steps - n : n_steps].reshape(d2 * n, d2)
            )
        else:
            mid = np.zeros((d2, d2), dtype=complex)
        base = e_dt @ (v[n] + 0.5 * dt * integral_prev)
        v_next = e_dt @ (v[n] + dt * integral_prev)  # predictor
        converged = False
        for _ in range(max_iter):
            k_new = kernels[n + 1] if not self_consistent else a_fac @ v_next @ b_fac[n + 1]
            integral_next = mid + 0.5 * dt * (kernels[0] @ v_next + k_new @ v[0])
            v_new = base + 0.5 * dt * integral_next
            delta = float(np.abs(v_new - v_next).max())
            v_next = v_new
            if delta < tol:
                converged = True
                break
        if not _finite(v_next):
            return result("diverged", n, diverged_at=(n + 1) * dt)
        if not converged:
            raise SolverConvergenceError(
                f"{method} corrector did not reach {tol:g} at step {n + 1}"
            )
        v[n + 1] = v_next
        rbuf[n_steps - (n + 1)] = v_next
        if self_consistent:
            kernels[n + 1] = a_fac @ v_next @ b_fac[n + 1]
            k_flat[:, d2 * (n + 1) : d2 * (n + 2)] = kernels[n + 1]
        integral_prev = mid + 0.5 * dt * (kernels[0] @ v_next + kernels[n + 1] @ v[0])
    return result("completed", n_steps)


def solve_nca(
    model: ModelSpec,
    bath_table: CorrelationTable,
    dt: float,
    n_steps: int,
    *,
    tol: float = CORRECTOR_TOL,
    max_iter: int = CORRECTOR_MAX_ITER,
    store_stride: int = 1,
) -> PropagatorTrajectory:
    """March the self-consistent Volterra equation for V(t)."""
    return _solve_volterra(model, bath_table, dt, n_steps, True, tol, max_iter, store_stride)


def solve_born(
    model: ModelSpec,
    bath_table: CorrelationTable,
    dt: float,
    n_steps: int,
    *,
    tol: float = CORRECTOR_TOL,
    max_iter: int = CORRECTOR_MAX_ITER,
    store_stride: int = 1,
) -> PropagatorTrajectory:
    """Volterra solve with the frozen second-order kernel.

    Solved at the superoperator level so steady states and two-time
    correlations share one code path with the self-consistent methods.
    """
    return _solve_volterra(model, bath_table, dt, n_steps, False, tol, max_iter, store_stride)


def solve_nca_markov(
    model: ModelSpec,
    bath_table: CorrelationTable,
    dt: float,
    n_steps: int,
    *,
    seed_steps: int = 0,
    store_stride: int = 1,
) -> PropagatorTrajectory:
    """Time-local solve with the self-consistent kernel.

    The generator accumulator ``M(t) = int_0^t S(tau) exp(-L tau) dtau`` is
    updated by incremental trapezoid; the kernel at each new lag is built from
    this same trajectory's V.  ``seed_steps > 0`` first marches the full
    time-nonlocal equation for that many steps (accumulating M along the way)
    and only then switches to time-local stepping; by default integration is
    time-local from t = 0.
    """
    _check_grid(bath_table, dt, n_steps)
    if not 0 <= seed_steps <= n_steps:
        raise ValueError("seed_steps must lie in [0, n_steps]")
    d2 = model.dim**2
    ls = liouvillian(model.hamiltonian)
    taus = dt * np.arange(n_steps + 1)
    gam = bath_table.values[: n_steps + 1]
    gam_half = correlation(bath_table.spec, taus[:-1] + 0.5 * dt)
    a_fac, b_fac = _kernel_factors(model.coupling_operator, gam)
    _, b_half = _kernel_factors(model.coupling_operator, gam_half)
    e_minus = _bare_propagators(model.hamiltonian, -taus)
    e_minus_half = _bare_propagators(model.hamiltonian, -(taus[:-1] + 0.5 * dt))

    v = np.zeros((n_steps + 1, d2, d2), dtype=complex)
    v[0] = np.eye(d2)
    kernels = np.zeros_like(v)  # generator integrand S(tau) exp(-L tau)
    s0 = a_fac @ v[0] @ b_fac[0]
    kernels[0] = s0  # exp(-L*0) = I
    m_acc = np.zeros((d2, d2), dtype=complex)
    f_prev = kernels[0]

    if seed_steps:
        seeded = _solve_volterra(
            model, bath_table, dt, seed_steps, True, CORRECTOR_TOL, CORRECTOR_MAX_ITER, 1
        )
        if seeded.status == "diverged":
            return PropagatorTrajectory(
                dt=dt * store_stride,
                maps=seeded.maps[::store_stride],
                method="nca_markov",
                status="diverged",
                diverged_at=seeded.diverged_at,
                kernels=None,
                store_stride=store_stride,
            )
        v[: seed_steps + 1] = seeded.maps
        for k in range(seed_steps + 1):
            kernels[k] = seeded.kernels.kernels[k] @ e_minus[k]
        weights = np.ones(seed_steps + 1)
        weights[0] = weights[-1] = 0.5
        m_acc = dt * np.einsum("n,nij->ij", weights, kernels[: seed_steps + 1])
        f_prev = kernels[seed_steps]

    def result(status, n_done, diverged_at=None):
        kt = KernelTrajectory(
            dt=dt, kernels=kernels[: n_done + 1], method="nca_markov", form="markov_generator"
        )
        return PropagatorTrajectory(
            dt=dt * store_stride,
            maps=np.ascontiguousarray(v[: n_done + 1 : store_stride]),
            method="nca_markov",
            status=status,
            diverged_at=diverged_at,
            kernels=kt,
            store_stride=store_stride,
        )

    for n in range(seed_steps, n_steps):
        v_half = scipy.linalg.expm((ls + m_acc) * (0.5 * dt)) @ v[n]  # predictor
        f_half = (a_fac @ v_half @ b_half[n]) @ e_minus_half[n]
        m_half = m_acc + 0.25 * dt * (f_prev + f_half)
        v_next = scipy.linalg.expm((ls + m_half) * dt) @ v[n]
        if not _finite(v_next):
            return result("diverged", n, diverged_at=(n + 1) * dt)
        v[n + 1] = v_next
        kernels[n + 1] = (a_fac @ v_next @ b_fac[n + 1]) @ e_minus[n + 1]
        m_acc = m_acc + 0.5 * dt * (f_prev + kernels[n + 1])
        f_prev = kernels[n + 1]
    return result("completed", n_steps)


def solve_born_markov(
    model: ModelSpec,
    bath_table: CorrelationTable,
    dt: float,
    n_steps: int,
    *,
    store_stride: int = 1,
) -> PropagatorTrajectory:
    """Time-local solve with the second-order kernel.

    Equivalent to accumulating ``int_0^t S_born(tau) exp(-L tau) dtau``, but
    organised through the filtered coupling operator: with
    ``Xf(t) = int_0^t Gamma(tau) e^{-iH tau} X e^{iH tau} dtau`` the
    dissipative generator acts as

        M rho = -X Xf rho + Xf rho X + X rho Xf^dag - rho Xf^dag X,

    which needs only D x D accumulators.  The upper limit stays at the
    running time t (no t -> infinity replacement).
    """
    _check_grid(bath_table, dt, n_steps)
    d2 = model.dim**2
    x = model.coupling_operator
    ls = liouvillian(model.hamiltonian)
    evals, u = np.linalg.eigh(model.hamiltonian)
    taus = dt * np.arange(n_steps + 1)
    gam = bath_table.values[: n_steps + 1]
    gam_half = correlation(bath_table.spec, taus[:-1] + 0.5 * dt)

    def interaction_picture(tau_arr, gam_arr):
        phases = np.exp(-1j * np.outer(tau_arr, evals))
        ut = np.einsum("ij,nj,kj->nik", u, phases, u.conj())
        return gam_arr[:, None, None] * np.einsum("nab,bc,ndc->nad", ut, x, ut.conj())

    w_grid = interaction_picture(taus, gam)
    w_half = interaction_picture(taus[:-1] + 0.5 * dt, gam_half)

    xl, xr = left_mult(x), right_mult(x)

    def generator(xf):
        xfd = xf.conj().T
        return (
            ls
            - left_mult(x @ xf)
            + left_mult(xf) @ xr
            + xl @ right_mult(xfd)
            - right_mult(xfd @ x)
        )

    v = np.zeros((n_steps + 1, d2, d2), dtype=complex)
    v[0] = np.eye(d2)
    # generator integrand S_born(tau) exp(-L tau); the generator is linear in
    # the filtered operator, so the integrand is just generator(W(tau)) - L
    kernels = np.zeros_like(v)
    kernels[0] = generator(w_grid[0]) - ls
    xf = np.zeros_like(x)

    def result(status, n_done, diverged_at=None):
        kt = KernelTrajectory(
            dt=dt, kernels=kernels[: n_done + 1], method="born_markov", form="markov_generator"
        )
        return PropagatorTrajectory(
            dt=dt * store_stride,
            maps=np.ascontiguousarray(v[: n_done + 1 : store_stride]),
            method="born_markov",
            status=status,
            diverged_at=diverged_at,
            kernels=kt,
            store_stride=store_stride,
        )

    for n in range(n_steps):
        xf_half = xf + 0.25 * dt * (w_grid[n] + w_half[n])
        v_next = scipy.linalg.expm(generator(xf_half) * dt) @ v[n]
        if not _finite(v_next):
            return result("diverged", n, diverged_at=(n + 1) * dt)
        v[n + 1] = v_next
        xf = xf + 0.5 * dt * (w_grid[n] + w_grid[n + 1])
        kernels[n + 1] = generator(w_grid[n + 1]) - ls
    return result("completed", n_steps)


def get_solver(method: str):
    try:
        return {
            "nca": solve_nca,
            "nca_markov": solve_nca_markov,
            "born": solve_born,
            "born_markov": solve_born_markov,
        }[method]
    except KeyError:
        raise ValueError(f"unknown method {method!r}; expected one of {METHODS}") from None


@dataclass(frozen=True)
class ConvergenceStudy:
    """Self-convergence table: sup-norm <sz> differences between refinements."""

    dts: list
    sup_diffs: list
    orders: list

    @property
    def empirical_order(self) -> float:
        return float(np.mean(self.orders)) if self.orders else float("nan")


def convergence_study(
    method: str,
    model: ModelSpec,
    bath_spec: BathSpec,
    dt_list,
    t_max: float,
    rho0: np.ndarray | None = None,
) -> ConvergenceStudy:
    """Refinement study of <sz>(t) under dt halving.

    ``dt_list`` must be descending with integer refinement ratios so the
    coarse grid is a subset of every finer one.
    """
    from .observables import evolve_expectations  # local import, avoids a cycle

    dt_list = list(dt_list)
    if any(dt_list[i] <= dt_list[i + 1] for i in range(len(dt_list) - 1)):
        raise ValueError("dt_list must be strictly descending")
    if rho0 is None:
        rho0 = np.array([[0.0, 0.0], [0.0, 1.0]], dtype=complex)
    solver = get_solver(method)
    coarse = dt_list[0]
    series = []
    for dtx in dt_list:
        ratio = coarse / dtx
        if abs(ratio - round(ratio)) > 1e-9:
            raise ValueError(f"dt {dtx} does not evenly refine the coarsest step {coarse}")
        n = int(round(t_max / dtx))
        table = tabulate(bath_spec, dtx, n)
        traj = solver(model, table, dtx, n)
        if traj.status != "completed":
            raise RuntimeError(f"{method} run at dt={dtx} diverged; refine elsewhere")
        sz = evolve_expectations(traj, rho0, [SIGMA_Z]).series[0].values.real
        series.append(sz[:: int(round(ratio))])
    sup_diffs = [float(np.abs(series[i] - series[i + 1]).max()) for i in range(len(series) - 1)]
    orders = [
        float(np.log(sup_diffs[i] / sup_diffs[i + 1]) / np.log(dt_list[i] / dt_list[i + 1]))
        for i in range(len(sup_diffs) - 1)
    ]
    return ConvergenceStudy(dts=dt_list, sup_diffs=sup_diffs, orders=orders)
