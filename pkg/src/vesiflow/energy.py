"""Elastic bending energy of the phase field, its penalties and its variation.

All integrals run over the unit torus, so an integral equals a zero-mode
coefficient (mean) and L2 inner products follow from Parseval with the
mean-normalized coefficients.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .spectral import (
    DEFAULT_RULE,
    DealiasRule,
    GridSpec,
    SpectralScalar,
    product_grid,
    refined_grid,
)


@dataclass(frozen=True)
class ModelParams:
    mu: float = 1.0
    k: float = 1.0
    gamma: float = 1.0
    eps: float = 0.1
    M1: float = 0.0
    M2: float = 0.0
    alpha: float | None = None
    beta: float | None = None

    def __post_init__(self):
        for name in ("mu", "k", "gamma", "eps", "M1", "M2"):
            value = getattr(self, name)
            if not math.isfinite(value):
                raise ValueError(f"{name} must be finite, got {value}")
        if self.mu <= 0:
            raise ValueError(f"mu must be positive, got {self.mu}")
        if self.k <= 0:
            raise ValueError(f"k must be positive, got {self.k}")
        # gamma = 0 is admitted for pure-transport experiments
        if self.gamma < 0:
            raise ValueError(f"gamma must be nonnegative, got {self.gamma}")
        if not 0 < self.eps < 1:
            raise ValueError(f"eps must lie in (0, 1), got {self.eps}")
        if self.M1 < 0 or self.M2 < 0:
            raise ValueError("penalty constants M1, M2 must be nonnegative")
        if self.beta is not None and self.beta < 0:
            raise ValueError(f"beta must be nonnegative, got {self.beta}")

    @property
    def resolved(self) -> bool:
        return self.alpha is not None and self.beta is not None

    def resolve(self, phi0: SpectralScalar, rule: DealiasRule | None = None) -> "ModelParams":
        """Fill alpha = A(phi0) and beta = B(phi0) where not set explicitly."""
        alpha = volume(phi0) if self.alpha is None else self.alpha
        beta = area(phi0, self.eps, rule) if self.beta is None else self.beta
        return replace(self, alpha=alpha, beta=beta)

    def as_tuple(self) -> tuple[float, ...]:
        return (self.mu, self.k, self.gamma, self.eps, self.M1, self.M2,
                _nan_if_none(self.alpha), _nan_if_none(self.beta))


def _nan_if_none(x):
    return math.nan if x is None else float(x)


@dataclass(frozen=True)
class EnergyBreakdown:
    e_eps: float
    a: float
    b: float
    pen_vol: float
    pen_area: float
    total: float
    kinetic: float | None = None


# ---------------------------------------------------------------------------
# shared evaluation


@dataclass(frozen=True, eq=False)
class PhaseTerms:
    """Everything derived from one phase field in a single pass of products."""

    f: np.ndarray
    g: np.ndarray
    mu: np.ndarray
    e_eps: float
    a: float
    b: float
    pen_vol: float
    pen_area: float

    @property
    def energy(self) -> float:
        return self.e_eps + self.pen_vol + self.pen_area


def _rule_for(phi: SpectralScalar, rule: DealiasRule | None) -> DealiasRule:
    return rule or phi.rule or DEFAULT_RULE


def _area_quadrature_grid(grid: GridSpec, rule: DealiasRule):
    # (phi^2 - 1)^2 is quartic: a 2x grid integrates it exactly
    if rule.kind == "padded" and rule.factor >= 2:
        return product_grid(grid, rule)
    return refined_grid(grid, 2)


def _f_and_area(phi: np.ndarray, grid: GridSpec, eps: float, rule: DealiasRule):
    w = grid.wave
    pg = product_grid(grid, rule)
    phi_p = pg.to_physical(phi)
    cubic = pg.to_spectral(phi_p * (phi_p * phi_p - 1.0))
    f = eps * w.k2 * phi + cubic / eps
    qg = _area_quadrature_grid(grid, rule)
    phi_q = phi_p if qg is pg else qg.to_physical(phi)
    grad_sq = float(np.sum(w.k2 * np.abs(phi) ** 2))
    well = float(np.mean((phi_q * phi_q - 1.0) ** 2))
    b = 0.5 * eps * grad_sq + well / (4.0 * eps)
    return f, b, phi_p, pg


def phase_terms(phi: SpectralScalar, params: ModelParams, rule: DealiasRule | None = None) -> PhaseTerms:
    if not params.resolved:
        raise ValueError("alpha/beta are unresolved; call ModelParams.resolve(phi0) first")
    rule = _rule_for(phi, rule)
    grid = phi.grid
    eps = params.eps
    f, b, phi_p, pg = _f_and_area(phi.coeffs, grid, eps, rule)
    f_p = pg.to_physical(f)
    g = grid.wave.k2 * f + pg.to_spectral((3.0 * phi_p * phi_p - 1.0) * f_p) / eps ** 2
    a = float(phi.coeffs[0, 0, 0].real)
    mu = params.k * g + params.M2 * (b - params.beta) * f
    mu[0, 0, 0] += params.M1 * (a - params.alpha)
    e_eps = params.k / (2.0 * eps) * float(np.sum(np.abs(f) ** 2))
    return PhaseTerms(
        f=f, g=g, mu=mu, e_eps=e_eps, a=a, b=b,
        pen_vol=0.5 * params.M1 * (a - params.alpha) ** 2,
        pen_area=0.5 * params.M2 * (b - params.beta) ** 2,
    )


# ---------------------------------------------------------------------------
# public operations


def f_of_phi(phi: SpectralScalar, eps: float, rule: DealiasRule | None = None) -> SpectralScalar:
    """f(phi) = -eps*Lap(phi) + (phi^3 - phi)/eps with a dealiased cubic."""
    _check_eps(eps)
    rule = _rule_for(phi, rule)
    f, _, _, _ = _f_and_area(phi.coeffs, phi.grid, eps, rule)
    return SpectralScalar(phi.grid, f, rule)


def g_of_phi(phi: SpectralScalar, eps: float, rule: DealiasRule | None = None) -> SpectralScalar:
    """g(phi) = -Lap f + (3 phi^2 - 1) f / eps^2, composed from f."""
    _check_eps(eps)
    rule = _rule_for(phi, rule)
    f, _, phi_p, pg = _f_and_area(phi.coeffs, phi.grid, eps, rule)
    g = phi.grid.wave.k2 * f + pg.to_spectral((3.0 * phi_p ** 2 - 1.0) * pg.to_physical(f)) / eps ** 2
    return SpectralScalar(phi.grid, g, rule)


def g_expanded(phi: SpectralScalar, eps: float, rule: DealiasRule | None = None) -> SpectralScalar:
    """The four-term expansion of g with every product evaluated independently.

    eps Lap^2 phi - Lap(phi^3 - phi)/eps - (3 phi^2 - 1) Lap phi / eps
    + (3 phi^2 - 1)(phi^2 - 1) phi / eps^3
    """
    _check_eps(eps)
    rule = _rule_for(phi, rule)
    grid = phi.grid
    k2 = grid.wave.k2
    pg = product_grid(grid, rule)
    p = pg.to_physical(phi.coeffs)
    lap_p = pg.to_physical(-k2 * phi.coeffs)
    w = 3.0 * p * p - 1.0
    cubic = pg.to_spectral(p * p * p - p)
    mixed = pg.to_spectral(w * lap_p)
    quintic = pg.to_spectral(w * (p * p - 1.0) * p)
    g = eps * k2 * k2 * phi.coeffs + k2 * cubic / eps - mixed / eps + quintic / eps ** 3
    return SpectralScalar(grid, g, rule)


def chemical_potential_expanded(phi: SpectralScalar, params: ModelParams,
                                rule: DealiasRule | None = None) -> SpectralScalar:
    """k g + penalties with g from :func:`g_expanded`; a cross-check of the composed form."""
    if not params.resolved:
        raise ValueError("alpha/beta are unresolved; call ModelParams.resolve(phi0) first")
    rule = _rule_for(phi, rule)
    f = f_of_phi(phi, params.eps, rule).coeffs
    b = area(phi, params.eps, rule)
    mu = params.k * g_expanded(phi, params.eps, rule).coeffs + params.M2 * (b - params.beta) * f
    mu[0, 0, 0] += params.M1 * (volume(phi) - params.alpha)
    return SpectralScalar(phi.grid, mu, rule)


def volume(phi: SpectralScalar) -> float:
    return float(phi.coeffs[0, 0, 0].real)


def area(phi: SpectralScalar, eps: float, rule: DealiasRule | None = None) -> float:
    _check_eps(eps)
    rule = _rule_for(phi, rule)
    _, b, _, _ = _f_and_area(phi.coeffs, phi.grid, eps, rule)
    return b


def bending_energy(phi: SpectralScalar, eps: float, k: float, rule: DealiasRule | None = None) -> float:
    _check_eps(eps)
    if k <= 0:
        raise ValueError(f"k must be positive, got {k}")
    f = f_of_phi(phi, eps, rule)
    return k / (2.0 * eps) * float(np.sum(np.abs(f.coeffs) ** 2))


def total_energy(phi: SpectralScalar, params: ModelParams, rule: DealiasRule | None = None) -> EnergyBreakdown:
    pt = phase_terms(phi, params, rule)
    return breakdown(pt)


def breakdown(pt: PhaseTerms, kinetic: float | None = None) -> EnergyBreakdown:
    return EnergyBreakdown(
        e_eps=pt.e_eps, a=pt.a, b=pt.b, pen_vol=pt.pen_vol, pen_area=pt.pen_area,
        total=pt.e_eps + pt.pen_vol + pt.pen_area, kinetic=kinetic,
    )


def chemical_potential(phi: SpectralScalar, params: ModelParams, rule: DealiasRule | None = None) -> SpectralScalar:
    """k g(phi) + M1 (A - alpha) + M2 (B - beta) f(phi).

    The volume penalty is spatially constant and lives in the zero mode.
    """
    pt = phase_terms(phi, params, rule)
    return SpectralScalar(phi.grid, pt.mu, _rule_for(phi, rule))


def inner(a: SpectralScalar, b: SpectralScalar) -> float:
    """L2 inner product over the unit torus."""
    return float(np.real(np.vdot(a.coeffs, b.coeffs)))


def variational_check(phi: SpectralScalar, eta: SpectralScalar, params: ModelParams, h: float,
                      rule: DealiasRule | None = None) -> float:
    """Relative mismatch between a centered difference of E and <dE/dphi, eta>."""
    if h <= 0:
        raise ValueError(f"h must be positive, got {h}")
    plus = phase_terms(phi + eta * h, params, rule).energy
    minus = phase_terms(phi - eta * h, params, rule).energy
    directional = inner(chemical_potential(phi, params, rule), eta)
    return abs((plus - minus) / (2 * h) - directional) / (1.0 + abs(directional))


def _check_eps(eps):
    if not eps > 0:
        raise ValueError(f"eps must be positive, got {eps}")
