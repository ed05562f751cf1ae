"""Bath spectral density and two-time correlation functions.

The flagship bath is Ohmic with a sharp ultraviolet cutoff,

    J(w) = 2 pi alpha w       for 0 < w < omega_c,  else 0,

and the coupling-operator correlation function is

    Gamma(tau) = (1/4 pi) int dw J(w) [ (n(w)+1) e^{-i w tau} + n(w) e^{+i w tau} ].

At zero temperature the integral has the elementary antiderivative

    Gamma(tau) = (alpha/2) [ e^{-i x} (1 + i x) - 1 ] * omega_c^2 / x^2,   x = omega_c tau,

which this module evaluates directly (with a series expansion across the
removable singularity at tau = 0).  Finite temperature falls back to
adaptive quadrature of the coth-weighted integrand.  Negative lags are
served by stationarity, ``Gamma(-tau) = conj(Gamma(tau))``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad

__all__ = [
    "BathSpec",
    "CorrelationTable",
    "spectral_density",
    "correlation",
    "tabulate",
    "save_table",
    "load_table",
]

#: quadrature is declared converged when the reported absolute error is below
#: this fraction of Gamma(0)
QUAD_RTOL = 1e-9


@dataclass(frozen=True)
class BathSpec:
    """Ohmic sharp-cutoff bath parameters (energies in units of omega_c)."""

    alpha: float
    omega_c: float = 1.0
    temperature: float = 0.0
    kind: str = "ohmic_sharp_cutoff"

    def __post_init__(self):
        if self.kind != "ohmic_sharp_cutoff":
            raise ValueError(f"unsupported bath kind {self.kind!r}")
        if self.alpha < 0:
            raise ValueError("alpha must be >= 0")
        if self.omega_c <= 0:
            raise ValueError("omega_c must be > 0")
        if self.temperature < 0:
            raise ValueError("temperature must be >= 0")


def spectral_density(spec: BathSpec, omega):
    """J(w) = 2 pi alpha w inside (0, omega_c), zero outside."""
    omega = np.asarray(omega, dtype=float)
    inside = (omega > 0) & (omega < spec.omega_c)
    out = np.where(inside, 2.0 * np.pi * spec.alpha * omega, 0.0)
    return float(out) if out.ndim == 0 else out


def _gamma_zero_t(spec: BathSpec, tau: np.ndarray) -> np.ndarray:
    """Closed form at T=0; series for |omega_c tau| < 1e-3."""
    x = spec.omega_c * tau
    pref = 0.5 * spec.alpha * spec.omega_c**2
    out = np.empty(x.shape, dtype=complex)
    # the subtraction in the closed form cancels catastrophically for small x
    small = np.abs(x) < 1e-2
    xl = x[~small]
    out[~small] = pref * (np.exp(-1j * xl) * (1.0 + 1j * xl) - 1.0) / xl**2
    xs = x[small]
    # [(1+ix)e^{-ix} - 1]/x^2 = 1/2 - ix/3 - x^2/8 + ix^3/30 + x^4/144 - ix^5/840 - x^6/5760 ...
    out[small] = pref * (
        0.5
        - 1j * xs / 3.0
        - xs**2 / 8.0
        + 1j * xs**3 / 30.0
        + xs**4 / 144.0
        - 1j * xs**5 / 840.0
        - xs**6 / 5760.0
    )
    return out


def _gamma_finite_t(spec: BathSpec, tau: float) -> complex:
    """Adaptive quadrature of the coth-weighted integrand (T > 0).

    The imaginary part is temperature independent and comes from the closed
    form; only the symmetric (real) part needs the occupation factor.
    """
    t_b = spec.temperature

    def sym(w):
        if w <= 0.0:
            return spec.alpha * t_b  # w->0 limit of J(w) coth(w/2T) / 4 pi
        return (
            spectral_density(spec, w) / np.tanh(w / (2.0 * t_b)) * np.cos(w * tau) / (4.0 * np.pi)
        )

    re, err = quad(sym, 0.0, spec.omega_c, limit=400)
    gamma0_scale = max(spec.alpha * spec.omega_c**2 / 4.0, 1e-300)
    if err > QUAD_RTOL * gamma0_scale:
        raise RuntimeError(
            f"bath correlation quadrature did not converge at tau={tau:g}: "
            f"achieved error estimate {err:.2e}"
        )
    im = float(_gamma_zero_t(spec, np.atleast_1d(abs(tau)))[0].imag)
    return complex(re, im)


def correlation(spec: BathSpec, tau):
    """Gamma(tau); scalar or array argument, negative lags by conjugation."""
    tau = np.asarray(tau, dtype=float)
    scalar = tau.ndim == 0
    t = np.atleast_1d(tau)
    if spec.temperature == 0.0:
        out = _gamma_zero_t(spec, np.abs(t))
    else:
        out = np.array([_gamma_finite_t(spec, abs(ti)) for ti in t])
    out = np.where(t < 0, np.conj(out), out)
    return complex(out[0]) if scalar else out


@dataclass(frozen=True)
class CorrelationTable:
    """Gamma tabulated on the uniform grid tau_n = t_offset + n dt."""

    dt: float
    values: np.ndarray
    spec: BathSpec
    t_offset: float = 0.0

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=complex)
        object.__setattr__(self, "values", vals)
        if self.dt <= 0:
            raise ValueError("dt must be > 0")
        if self.t_offset == 0.0 and len(vals) and self.spec.alpha > 0:
            g0 = vals[0]
            scale = max(abs(g0), 1e-300)
            if self.spec.temperature == 0.0 and (g0.real < -1e-12 or abs(g0.imag) > 1e-14 * scale):
                raise ValueError("Gamma(0) must be real and nonnegative at T=0")
            if np.any(np.abs(vals) > abs(g0) * (1.0 + 1e-12)):
                raise ValueError("|Gamma(tau)| must not exceed Gamma(0)")

    @property
    def n_steps(self) -> int:
        return len(self.values) - 1

    @property
    def taus(self) -> np.ndarray:
        return self.t_offset + self.dt * np.arange(len(self.values))

    def correlation_time(self, fraction: float = 0.01) -> float:
        """Smallest tabulated tau with |Gamma(tau)| < fraction * Gamma(0)."""
        g0 = abs(self.values[0])
        if g0 == 0.0:
            return 0.0
        below = np.nonzero(np.abs(self.values) < fraction * g0)[0]
        return float(self.taus[below[0]]) if len(below) else float("inf")


def tabulate(spec: BathSpec, dt: float, n_steps: int, t_offset: float = 0.0) -> CorrelationTable:
    """Tabulate Gamma on tau_n = t_offset + n dt for n = 0..n_steps."""
    if dt <= 0:
        raise ValueError("dt must be > 0")
    taus = t_offset + dt * np.arange(n_steps + 1)
    return CorrelationTable(dt=dt, values=correlation(spec, taus), spec=spec, t_offset=t_offset)


def save_table(table: CorrelationTable, path) -> None:
    """CSV cache: header block with bath metadata, then tau, re_gamma, im_gamma."""
    with open(path, "w") as fh:
        fh.write(f"# alpha = {table.spec.alpha!r}\n")
        fh.write(f"# omega_c = {table.spec.omega_c!r}\n")
        fh.write(f"# temperature = {table.spec.temperature!r}\n")
        fh.write(f"# dt = {table.dt!r}\n")
        fh.write(f"# t_offset = {table.t_offset!r}\n")
        fh.write("tau,re_gamma,im_gamma\n")
        for tau, g in zip(table.taus, table.values):
            fh.write(f"{tau:.12e},{g.real:.16e},{g.imag:.16e}\n")


def load_table(path) -> CorrelationTable:
    meta = {}
    rows = []
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                key, _, val = line[1:].partition("=")
                meta[key.strip()] = float(val)
            elif not line.startswith("tau"):
                rows.append([float(x) for x in line.split(",")])
    data = np.array(rows)
    spec = BathSpec(
        alpha=meta["alpha"], omega_c=meta["omega_c"], temperature=meta["temperature"]
    )
    return CorrelationTable(
        dt=meta["dt"],
        values=data[:, 1] + 1j * data[:, 2],
        spec=spec,
        t_offset=meta.get("t_offset", 0.0),
    )
