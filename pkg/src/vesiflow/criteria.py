"""Blow-up criterion integrands and their running time integrals.

A simulation can only report finite accumulations; these integrals are
monitored and compared with thresholds, never turned into a verdict.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .littlewood_paley import DyadicCutoffs, FieldStack, besov_norm, block_sups, lp_norm
from .spectral import SpectralVector

KINDS = (
    "serrin_u", "serrin_grad", "bkm", "besov0", "log_besov0", "log_besov_m1",
    # rows built from u itself
    "u_b0", "grad_u_l3",
    # the vorticity criteria evaluated on grad u instead of omega
    "log_besov0_grad", "log_besov_m1_grad",
)

_SCALING_TOL = 1e-12


def _nonneg(x: float, name: str) -> float:
    x = float(x)
    if not x >= 0:
        raise ValueError(f"{name} must be a nonnegative norm value, got {x}")
    return x


def integrand_log_besov0(b0: float) -> float:
    """b0 / sqrt(1 + ln(e + b0))."""
    b0 = _nonneg(b0, "b0")
    return b0 / math.sqrt(1.0 + math.log(math.e + b0))


def integrand_log_besov_m1(bm1: float) -> float:
    """bm1^2 / (1 + ln(e + bm1))."""
    bm1 = _nonneg(bm1, "bm1")
    return bm1 * bm1 / (1.0 + math.log(math.e + bm1))


def integrand_bkm(linf_omega: float) -> float:
    return _nonneg(linf_omega, "linf_omega")


def integrand_serrin(norm: float, q: float) -> float:
    if not q >= 1:
        raise ValueError(f"q must be >= 1, got {q}")
    return _nonneg(norm, "norm") ** q


def serrin_exponent_sum(p: float, q: float) -> float:
    return 3.0 / p + 2.0 / q


def check_serrin(kind: str, p: float, q: float) -> None:
    """Raise ValueError unless (p, q) satisfies the scaling identity of ``kind``."""
    target = {"serrin_u": 1.0, "serrin_grad": 2.0}[kind]
    if not (3 < p <= math.inf):
        raise ValueError(f"{kind}: p must satisfy 3 < p <= inf, got {p}")
    if not q >= 1:
        raise ValueError(f"{kind}: q must be >= 1, got {q}")
    total = serrin_exponent_sum(p, q)
    if abs(total - target) > _SCALING_TOL:
        raise ValueError(f"{kind}: 3/p + 2/q = {total:g}, expected {target:g}")


def _fmt_exp(x: float) -> str:
    return "inf" if math.isinf(x) else f"{x:g}"


@dataclass
class CriterionAccumulator:
    kind: str
    p: float | None = None
    q: float | None = None
    threshold: float | None = None
    integral: float = 0.0
    last_t: float | None = None
    last_integrand: float | None = None
    sup_integrand: float = 0.0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown criterion kind {self.kind!r}")
        if self.kind in ("serrin_u", "serrin_grad"):
            if self.p is None or self.q is None:
                raise ValueError(f"{self.kind} needs exponents p and q")
            check_serrin(self.kind, self.p, self.q)

    @property
    def name(self) -> str:
        if self.kind in ("serrin_u", "serrin_grad"):
            return f"{self.kind}_p{_fmt_exp(self.p)}_q{_fmt_exp(self.q)}"
        return self.kind

    @property
    def alarm(self) -> bool:
        return self.threshold is not None and self.integral >= self.threshold


def accumulate(acc: CriterionAccumulator, t: float, integrand: float) -> CriterionAccumulator:
    """Trapezoid update of ``acc`` in place; the first sample only starts the clock."""
    integrand = _nonneg(integrand, "integrand")
    if acc.last_t is not None:
        if not t > acc.last_t:
            raise ValueError(f"time must increase: {t!r} after {acc.last_t!r}")
        acc.integral += (t - acc.last_t) * (integrand + acc.last_integrand) / 2.0
    acc.last_t = t
    acc.last_integrand = integrand
    acc.sup_integrand = max(acc.sup_integrand, integrand)
    return acc


@dataclass(frozen=True)
class CriterionRow:
    name: str
    integral: float
    sup_integrand: float
    alarm: bool


@dataclass
class CriterionReport:
    rows: list[CriterionRow] = field(default_factory=list)

    def __getitem__(self, name: str) -> CriterionRow:
        for row in self.rows:
            if row.name == name:
                return row
        raise KeyError(name)

    def names(self) -> list[str]:
        return [r.name for r in self.rows]

    def as_dict(self) -> dict[str, dict]:
        return {r.name: {"integral": r.integral, "sup_integrand": r.sup_integrand, "alarm": r.alarm}
                for r in self.rows}


def report(accs) -> CriterionReport:
    return CriterionReport([CriterionRow(a.name, a.integral, a.sup_integrand, a.alarm) for a in accs])


# ---------------------------------------------------------------------------
# tracking along a run


def velocity_gradient(u: SpectralVector) -> FieldStack:
    """The nine components d_j u_i as one stack (pointwise Frobenius norms)."""
    w = u.grid.wave
    comps = np.concatenate([1j * xi * u.coeffs for xi in w.xi_d])
    return FieldStack(u.grid, comps)


@dataclass
class FlowNorms:
    """Norm values a criterion integrand may need at one time."""

    omega_linf: float
    omega_b0: float
    omega_bm1: float
    u_b0: float | None = None
    grad_u_l3: float | None = None
    grad_u_b0: float | None = None
    grad_u_bm1: float | None = None
    u_lp: dict = field(default_factory=dict)
    grad_u_lp: dict = field(default_factory=dict)


def integrand_for(acc: CriterionAccumulator, n: FlowNorms) -> float:
    kind = acc.kind
    if kind == "serrin_u":
        return integrand_serrin(n.u_lp[acc.p], acc.q)
    if kind == "serrin_grad":
        return integrand_serrin(n.grad_u_lp[acc.p], acc.q)
    if kind == "bkm":
        return integrand_bkm(n.omega_linf)
    if kind == "besov0":
        return _nonneg(n.omega_b0, "b0")
    if kind == "log_besov0":
        return integrand_log_besov0(n.omega_b0)
    if kind == "log_besov_m1":
        return integrand_log_besov_m1(n.omega_bm1)
    if kind == "u_b0":
        return integrand_log_besov_m1(n.u_b0)
    if kind == "grad_u_l3":
        return integrand_log_besov_m1(n.grad_u_l3)
    if kind == "log_besov0_grad":
        return integrand_log_besov0(n.grad_u_b0)
    if kind == "log_besov_m1_grad":
        return integrand_log_besov_m1(n.grad_u_bm1)
    raise ValueError(kind)


def flow_norms(u: SpectralVector, cutoffs: DyadicCutoffs, accs, omega_besov=None) -> FlowNorms:
    """Evaluate only the norms the accumulators ask for.

    ``omega_besov`` may carry precomputed (linf, b0, bm1) of the vorticity.
    """
    kinds = {a.kind for a in accs}
    if omega_besov is None:
        from .littlewood_paley import linf_norm
        from .spectral import curl
        omega = curl(u)
        sups = block_sups(omega, cutoffs)
        omega_besov = (linf_norm(omega), besov_norm(omega, 0.0, cutoffs, sups),
                       besov_norm(omega, -1.0, cutoffs, sups))
    norms = FlowNorms(*omega_besov)
    grad = None
    if kinds & {"serrin_grad", "grad_u_l3", "log_besov0_grad", "log_besov_m1_grad"}:
        grad = velocity_gradient(u)
    if "u_b0" in kinds:
        norms.u_b0 = besov_norm(u, 0.0, cutoffs)
    if "grad_u_l3" in kinds:
        norms.grad_u_l3 = lp_norm(grad, 3)
    if kinds & {"log_besov0_grad", "log_besov_m1_grad"}:
        sups = block_sups(grad, cutoffs)
        norms.grad_u_b0 = besov_norm(grad, 0.0, cutoffs, sups)
        norms.grad_u_bm1 = besov_norm(grad, -1.0, cutoffs, sups)
    for a in accs:
        if a.kind == "serrin_u" and a.p not in norms.u_lp:
            norms.u_lp[a.p] = lp_norm(u, a.p)
        elif a.kind == "serrin_grad" and a.p not in norms.grad_u_lp:
            norms.grad_u_lp[a.p] = lp_norm(grad, a.p)
    return norms


class CriteriaTracker:
    """Accumulates every configured criterion at observer times."""

    def __init__(self, accs, cutoffs: DyadicCutoffs):
        self.accs = list(accs)
        self.cutoffs = cutoffs
        self.last_norms: FlowNorms | None = None

    @classmethod
    def default(cls, cutoffs: DyadicCutoffs, serrin=(), u_rows: bool = True,
                grad_tracks: bool = False, thresholds: dict | None = None) -> "CriteriaTracker":
        thresholds = thresholds or {}
        kinds = ["bkm", "besov0", "log_besov0", "log_besov_m1"]
        accs = [CriterionAccumulator(k, threshold=thresholds.get(k)) for k in kinds]
        for kind, p, q in serrin:
            accs.append(CriterionAccumulator(kind, p, q))
        if u_rows:
            accs += [CriterionAccumulator("u_b0"), CriterionAccumulator("grad_u_l3")]
        if grad_tracks:
            accs += [CriterionAccumulator("log_besov0_grad"), CriterionAccumulator("log_besov_m1_grad")]
        return cls(accs, cutoffs)

    def update(self, t: float, u: SpectralVector, omega_besov=None) -> FlowNorms:
        norms = flow_norms(u, self.cutoffs, self.accs, omega_besov)
        for acc in self.accs:
            accumulate(acc, t, integrand_for(acc, norms))
        self.last_norms = norms
        return norms

    def get(self, name: str) -> CriterionAccumulator:
        for a in self.accs:
            if a.name == name:
                return a
        raise KeyError(name)

    def report(self) -> CriterionReport:
        return report(self.accs)
