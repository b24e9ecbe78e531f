"""Time integration of the coupled phase-field / Navier-Stokes system.

Pressure is removed by Leray projection.  The stiff linear symbols

    L_u   = -mu |xi|^2             (viscosity)
    L_phi = -gamma k eps |xi|^4    (leading part of -gamma dE/dphi)

are integrated exactly with exponential factors; everything else (transport,
elastic forcing, the remaining chemical-potential terms, sources) is explicit.
"""

from __future__ import annotations

import functools
import logging
from dataclasses import dataclass, field
from typing import Callable, Iterable

import numpy as np

from .energy import ModelParams, PhaseTerms, phase_terms
from .spectral import (
    DEFAULT_RULE,
    DealiasRule,
    GridSpec,
    SpectralScalar,
    SpectralVector,
    _curl,
    _leray,
    product_grid,
    strip_nyquist,
)

log = logging.getLogger(__name__)

INTEGRATORS = ("if_heun", "if_euler")


class BlowUpDetected(RuntimeError):
    """Non-finite coefficients or a vorticity sup above the configured cap."""

    def __init__(self, t: float, reason: str):
        super().__init__(f"blow-up detected at t={t:.17g}: {reason}")
        self.t = t
        self.reason = reason


@dataclass(frozen=True, eq=False)
class State:
    t: float
    u: SpectralVector
    phi: SpectralScalar
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        if self.u.grid != self.phi.grid:
            raise ValueError("u and phi live on different grids")
        self.u.coeffs.flags.writeable = False
        self.phi.coeffs.flags.writeable = False

    @property
    def grid(self) -> GridSpec:
        return self.phi.grid

    def phase(self, params: ModelParams, rule: DealiasRule) -> PhaseTerms:
        """Chemical potential and energy pieces, computed once per state."""
        key = ("phase", params, rule)
        if key not in self._cache:
            self._cache[key] = phase_terms(self.phi, params, rule)
        return self._cache[key]

    @classmethod
    def from_samples(cls, t: float, u_samples, phi_samples, grid: GridSpec | None = None,
                     project: bool = True) -> "State":
        phi = SpectralScalar.from_samples(phi_samples, grid)
        u = SpectralVector.from_samples(u_samples, phi.grid)
        if project:
            c = _leray(u.grid.wave, u.coeffs)
            u = SpectralVector(u.grid, c, divergence_free=True)
        return cls(float(t), u, phi)


@dataclass(frozen=True)
class StepperConfig:
    dt_max: float = 1e-3
    cfl: float = 0.5
    integrator: str = "if_heun"
    dealias: DealiasRule = DEFAULT_RULE
    end_time: float = 0.0
    output_every: int = 1
    omega_cap: float = 1e12
    # test hook: drop every explicit term so only the exponential factors act
    linear_only: bool = False

    def __post_init__(self):
        if not self.dt_max > 0:
            raise ValueError(f"dt_max must be positive, got {self.dt_max}")
        if not 0 < self.cfl <= 1:
            raise ValueError(f"cfl must lie in (0, 1], got {self.cfl}")
        if self.integrator not in INTEGRATORS:
            raise ValueError(f"integrator must be one of {INTEGRATORS}, got {self.integrator!r}")
        if self.end_time < 0:
            raise ValueError(f"end_time must be nonnegative, got {self.end_time}")
        if self.output_every < 1:
            raise ValueError(f"output_every must be >= 1, got {self.output_every}")


@dataclass(frozen=True)
class Forcing:
    """Momentum and phase sources; either fields or callables of time."""

    f_u: object = None
    f_phi: object = None

    def at(self, t: float) -> tuple[np.ndarray | None, np.ndarray | None]:
        fu = self.f_u(t) if callable(self.f_u) else self.f_u
        fp = self.f_phi(t) if callable(self.f_phi) else self.f_phi
        fu_c = None
        if fu is not None:
            fu_c = _leray(fu.grid.wave, fu.coeffs)
        return fu_c, (None if fp is None else fp.coeffs)


# ---------------------------------------------------------------------------
# right-hand side


def linear_symbols(grid: GridSpec, params: ModelParams) -> tuple[np.ndarray, np.ndarray]:
    k2 = grid.wave.k2
    return -params.mu * k2, -params.gamma * params.k * params.eps * k2 * k2


@functools.lru_cache(maxsize=16)
def _factors(grid: GridSpec, mu: float, stiff: float, dt: float):
    k2 = grid.wave.k2
    return np.exp(-mu * k2 * dt), np.exp(-stiff * k2 * k2 * dt)


def _explicit(state: State, params: ModelParams, rule: DealiasRule, forcing: Forcing | None,
              linear_only: bool = False) -> tuple[np.ndarray, np.ndarray]:
    """Explicit part of the tendencies (the full tendency minus L*y)."""
    grid = state.grid
    if linear_only:
        return np.zeros((3,) + grid.shape, complex), np.zeros(grid.shape, complex)
    w = grid.wave
    pt = state.phase(params, rule)
    u = state.u.coeffs
    phi = state.phi.coeffs
    pg = product_grid(grid, rule)
    fields = np.concatenate([
        u,
        _curl(w, u),
        np.stack([1j * xi * phi for xi in w.xi_d]),
        pt.mu[None],
    ])
    phys = pg.to_physical(fields)
    vel, vort, gphi, mu_c = phys[0:3], phys[3:6], phys[6:9], phys[9]
    lamb = np.stack([
        vel[1] * vort[2] - vel[2] * vort[1],
        vel[2] * vort[0] - vel[0] * vort[2],
        vel[0] * vort[1] - vel[1] * vort[0],
    ])
    # u x omega differs from -u.grad u by a gradient, which the projection removes
    products = np.concatenate([lamb + mu_c * gphi, np.sum(vel * gphi, axis=0)[None]])
    spec = pg.to_spectral(products)
    mom, adv = spec[0:3], spec[3]
    stiff = params.gamma * params.k * params.eps
    dphi = -adv - params.gamma * pt.mu + stiff * w.k2 * w.k2 * phi
    if forcing is not None:
        fu, fp = forcing.at(state.t)
        if fu is not None:
            mom = mom + fu
        if fp is not None:
            dphi = dphi + fp
    du = _leray(w, mom)
    du[:, 0, 0, 0] = 0.0
    if not (np.all(np.isfinite(du)) and np.all(np.isfinite(dphi))):
        raise BlowUpDetected(state.t, "non-finite tendency")
    return du, dphi


def rhs(state: State, params: ModelParams, forcing: Forcing | None = None,
        rule: DealiasRule | None = None) -> tuple[SpectralVector, SpectralScalar]:
    """Full tendencies (du/dt, dphi/dt) with pressure eliminated."""
    rule = rule or DEFAULT_RULE
    du, dphi = _explicit(state, params, rule, forcing)
    lu, lphi = linear_symbols(state.grid, params)
    du = du + lu * state.u.coeffs
    du[:, 0, 0, 0] = 0.0
    dphi = dphi + lphi * state.phi.coeffs
    return (SpectralVector(state.grid, du, divergence_free=True),
            SpectralScalar(state.grid, dphi))


# ---------------------------------------------------------------------------
# stepping


def velocity_sup(u: SpectralVector) -> float:
    values = product_grid(u.grid, DealiasRule.padded(1)).to_physical(u.coeffs)
    return float(np.sqrt(np.max(np.sum(values * values, axis=0))))


def cfl_dt(state: State, cfg: StepperConfig) -> float:
    umax = velocity_sup(state.u)
    return min(cfg.dt_max, cfg.cfl * state.grid.dx / max(umax, 1e-12))


def _finish(t: float, u: np.ndarray, phi: np.ndarray, grid: GridSpec, cfg: StepperConfig) -> State:
    u = strip_nyquist(_leray(grid.wave, u), grid)
    phi = strip_nyquist(phi, grid)
    if not (np.all(np.isfinite(u)) and np.all(np.isfinite(phi))):
        raise BlowUpDetected(t, "non-finite state")
    new = State(t, SpectralVector(grid, u, divergence_free=True), SpectralScalar(grid, phi))
    wmax = velocity_sup(SpectralVector(grid, _curl(grid.wave, u)))
    if wmax > cfg.omega_cap:
        raise BlowUpDetected(t, f"|omega|_inf = {wmax:.3e} exceeds cap {cfg.omega_cap:.3e}")
    return new


def step(state: State, params: ModelParams, cfg: StepperConfig, forcing: Forcing | None = None,
         dt: float | None = None) -> State:
    """Advance one step with the integrating-factor Heun or Euler scheme."""
    if dt is None:
        dt = cfl_dt(state, cfg)
    if not dt > 0:
        raise ValueError(f"dt must be positive, got {dt}")
    grid = state.grid
    rule = cfg.dealias
    eu, ephi = _factors(grid, params.mu, params.gamma * params.k * params.eps, dt)
    u0, p0 = state.u.coeffs, state.phi.coeffs
    nu1, np1 = _explicit(state, params, rule, forcing, cfg.linear_only)
    u_pred = eu * (u0 + dt * nu1)
    p_pred = ephi * (p0 + dt * np1)
    t1 = state.t + dt
    if cfg.integrator == "if_euler":
        return _finish(t1, u_pred, p_pred, grid, cfg)
    pred = State(t1, SpectralVector(grid, u_pred), SpectralScalar(grid, p_pred))
    nu2, np2 = _explicit(pred, params, rule, forcing, cfg.linear_only)
    u1 = eu * u0 + 0.5 * dt * (eu * nu1 + nu2)
    p1 = ephi * p0 + 0.5 * dt * (ephi * np1 + np2)
    return _finish(t1, u1, p1, grid, cfg)


# ---------------------------------------------------------------------------
# manufactured solutions


@dataclass(frozen=True)
class AnalyticField:
    """A prescribed time-dependent field and its exact time derivative."""

    value: Callable[[float], object]
    rate: Callable[[float], object]


class _ManufacturedSource:
    def __init__(self, u_star: AnalyticField, phi_star: AnalyticField, params: ModelParams, rule):
        self.u_star = u_star
        self.phi_star = phi_star
        self.params = params
        self.rule = rule
        self._t = None
        self._val = None

    def _eval(self, t):
        if self._t != t:
            state = State(t, self.u_star.value(t), self.phi_star.value(t))
            du, dphi = rhs(state, self.params, None, self.rule)
            fu = self.u_star.rate(t) - du
            fphi = self.phi_star.rate(t) - dphi
            self._t, self._val = t, (fu, fphi)
        return self._val

    def f_u(self, t):
        return self._eval(t)[0]

    def f_phi(self, t):
        return self._eval(t)[1]


def manufactured_forcing(u_star: AnalyticField, phi_star: AnalyticField, params: ModelParams,
                         rule: DealiasRule | None = None) -> Forcing:
    """Sources that make (u_star, phi_star) an exact solution of the forced system.

    ``params`` must have alpha and beta set; ``rule`` must match the stepper.
    """
    src = _ManufacturedSource(u_star, phi_star, params, rule or DEFAULT_RULE)
    return Forcing(f_u=src.f_u, f_phi=src.f_phi)


# ---------------------------------------------------------------------------
# driver


@dataclass
class RunResult:
    state: State
    params: ModelParams
    status: str = "completed"
    steps: int = 0
    blowup_time: float | None = None
    message: str = ""

    @property
    def blew_up(self) -> bool:
        return self.status == "blowup"


Observer = Callable[[State, int], None]
StepObserver = Callable[[State, State], None]


def run(initial: State, params: ModelParams, cfg: StepperConfig, hooks: Iterable[Observer] = (),
        forcing: Forcing | None = None, step_hooks: Iterable[StepObserver] = ()) -> RunResult:
    """Integrate to ``cfg.end_time``.

    ``hooks`` are called with (state, step) on the initial state, every
    ``output_every`` steps and on the final state.  ``step_hooks`` see every
    (previous, next) pair.  A detected blow-up ends the run with status
    "blowup"; the last valid state is observed and returned.
    """
    hooks = list(hooks)
    step_hooks = list(step_hooks)
    if not params.resolved:
        params = params.resolve(initial.phi, cfg.dealias)
    state = initial
    for hook in hooks:
        hook(state, 0)
    observed = 0
    n = 0
    end = cfg.end_time
    tol = 1e-12 * max(1.0, abs(end))
    try:
        while end - state.t > tol:
            dt = min(cfl_dt(state, cfg), end - state.t)
            new = step(state, params, cfg, forcing, dt)
            if end - new.t <= tol:
                new = State(end, new.u, new.phi, new._cache)
            for sh in step_hooks:
                sh(state, new)
            state = new
            n += 1
            if n % cfg.output_every == 0:
                for hook in hooks:
                    hook(state, n)
                observed = n
    except BlowUpDetected as exc:
        log.warning("%s", exc)
        if observed != n:
            for hook in hooks:
                hook(state, n)
        return RunResult(state, params, "blowup", n, exc.t, str(exc))
    if observed != n:
        for hook in hooks:
            hook(state, n)
    return RunResult(state, params, "completed", n)
