"""Per-state monitoring quantities: energy law, uniform-estimate norms, h(t)."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .dynamics import State
from .energy import EnergyBreakdown, ModelParams, breakdown
from .littlewood_paley import BesovDiagnostics, DyadicCutoffs, besov_diagnostics, linf_norm
from .spectral import DEFAULT_RULE, DealiasRule, SpectralVector, _curl


def _sq(c: np.ndarray) -> float:
    return float(np.sum(np.abs(c) ** 2))


def kinetic_energy(state: State) -> float:
    return 0.5 * _sq(state.u.coeffs)


def total_energy(state: State, params: ModelParams, rule: DealiasRule = DEFAULT_RULE) -> float:
    """H = kinetic energy + elastic energy with penalties."""
    return kinetic_energy(state) + state.phase(params, rule).energy


def dissipation(state: State, params: ModelParams, rule: DealiasRule = DEFAULT_RULE) -> tuple[float, float]:
    """(mu |grad u|^2, gamma |dE/dphi|^2)."""
    k2 = state.grid.wave.k2
    d_u = params.mu * float(np.sum(k2 * np.abs(state.u.coeffs) ** 2))
    d_phi = params.gamma * _sq(state.phase(params, rule).mu)
    return d_u, d_phi


def energy_law_residual(prev: State, next: State, params: ModelParams,
                        rule: DealiasRule = DEFAULT_RULE) -> float:
    """Relative defect of the discrete energy balance over one step.

    The dissipation rate is the average of its values at the two endpoints.
    """
    dt = next.t - prev.t
    if not dt > 0:
        raise ValueError(f"next.t must exceed prev.t, got dt={dt!r}")
    rate = (total_energy(next, params, rule) - total_energy(prev, params, rule)) / dt
    d_mid = 0.5 * (sum(dissipation(prev, params, rule)) + sum(dissipation(next, params, rule)))
    return abs(rate + d_mid) / (1.0 + d_mid)


# ---------------------------------------------------------------------------
# windowed sup


@dataclass
class HWindow:
    """Running sup of |grad Lap u|^2 + eta_hat |Lap mu_c|^2 since ``start``."""

    start: float = 0.0
    value: float = 0.0
    samples: int = 0


def h_bracket(state: State, params: ModelParams, eta_hat: float = 1.0,
              rule: DealiasRule = DEFAULT_RULE) -> float:
    if not eta_hat > 0:
        raise ValueError(f"eta_hat must be positive, got {eta_hat}")
    k2 = state.grid.wave.k2
    grad_lap_u = float(np.sum(k2 ** 3 * np.abs(state.u.coeffs) ** 2))
    lap_mu = float(np.sum(k2 ** 2 * np.abs(state.phase(params, rule).mu) ** 2))
    return grad_lap_u + eta_hat * lap_mu


def h_update(window: HWindow, state: State, params: ModelParams, eta_hat: float = 1.0,
             rule: DealiasRule = DEFAULT_RULE) -> float:
    if state.t < window.start:
        raise ValueError(f"state time {state.t} precedes window start {window.start}")
    window.value = max(window.value, h_bracket(state, params, eta_hat, rule))
    window.samples += 1
    return window.value


# ---------------------------------------------------------------------------
# records


@dataclass(frozen=True)
class DiagnosticsRecord:
    t: float
    kinetic: float
    energy: EnergyBreakdown
    dissipation_u: float
    dissipation_phi: float
    energy_residual: float
    norm_u_l2: float
    norm_phi_h2: float
    norm_grad_lap_phi: float
    norm_grad_phi_linf: float
    h_t: float
    besov: BesovDiagnostics

    @property
    def total(self) -> float:
        return self.kinetic + self.energy.total


def phi_h2_norm(state: State) -> float:
    """|phi|_L2 + |Lap phi|_L2."""
    c = state.phi.coeffs
    return math.sqrt(_sq(c)) + math.sqrt(float(np.sum(state.grid.wave.k2 ** 2 * np.abs(c) ** 2)))


def grad_phi_linf(state: State) -> float:
    w = state.grid.wave
    grad = SpectralVector(state.grid, np.stack([1j * xi * state.phi.coeffs for xi in w.xi_d]))
    return linf_norm(grad)


def collect(state: State, params: ModelParams, cutoffs: DyadicCutoffs, prev: State | None = None,
            window: HWindow | None = None, eta_hat: float = 1.0,
            rule: DealiasRule = DEFAULT_RULE) -> DiagnosticsRecord:
    """Assemble every monitored quantity at ``state``.

    ``energy_residual`` is taken against ``prev`` when given, else NaN.  Without
    a window the h bracket at this state alone is reported.
    """
    if not params.resolved:
        params = params.resolve(state.phi, rule)
    pt = state.phase(params, rule)
    k2 = state.grid.wave.k2
    d_u, d_phi = dissipation(state, params, rule)
    residual = math.nan if prev is None else energy_law_residual(prev, state, params, rule)
    h_t = h_bracket(state, params, eta_hat, rule) if window is None else h_update(
        window, state, params, eta_hat, rule)
    omega = SpectralVector(state.grid, _curl(state.grid.wave, state.u.coeffs))
    return DiagnosticsRecord(
        t=state.t,
        kinetic=kinetic_energy(state),
        energy=breakdown(pt, kinetic_energy(state)),
        dissipation_u=d_u,
        dissipation_phi=d_phi,
        energy_residual=residual,
        norm_u_l2=math.sqrt(_sq(state.u.coeffs)),
        norm_phi_h2=phi_h2_norm(state),
        norm_grad_lap_phi=math.sqrt(float(np.sum(k2 ** 3 * np.abs(state.phi.coeffs) ** 2))),
        norm_grad_phi_linf=grad_phi_linf(state),
        h_t=h_t,
        besov=besov_diagnostics(omega, cutoffs, timestamp=state.t),
    )
