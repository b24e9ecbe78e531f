"""Run configuration, binary checkpoints, CSV time series and the run driver."""

from __future__ import annotations

import csv
import json
import math
import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Literal, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from . import criteria as crit
from .diagnostics import DiagnosticsRecord, HWindow, collect
from .dynamics import RunResult, State, StepperConfig, run
from .energy import ModelParams
from .littlewood_paley import build_cutoffs, random_band_limited
from .spectral import DealiasRule, GridSpec, SpectralScalar, SpectralVector, leray_project


class ConfigError(ValueError):
    """Unreadable or invalid run configuration."""


class CheckpointError(ValueError):
    """A checkpoint file that cannot be trusted."""


# ---------------------------------------------------------------------------
# configuration


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid")


class GridConfig(_Strict):
    n1: int = 32
    n2: int = 32
    n3: int = 32

    @model_validator(mode="after")
    def _check(self):
        GridSpec(self.n1, self.n2, self.n3)
        return self

    def spec(self) -> GridSpec:
        return GridSpec(self.n1, self.n2, self.n3)


class ParamsConfig(_Strict):
    mu: float = 1.0
    k: float = 1.0
    gamma: float = 1.0
    eps: float = 0.1
    M1: float = 0.0
    M2: float = 0.0
    alpha: Optional[float] = None
    beta: Optional[float] = None

    @model_validator(mode="after")
    def _check(self):
        self.model()
        return self

    def model(self) -> ModelParams:
        return ModelParams(**self.model_dump())


class StepperSection(_Strict):
    dt_max: float = 1e-3
    cfl: float = 0.5
    integrator: Literal["if_heun", "if_euler"] = "if_heun"
    end_time: float = 0.0
    output_every: int = 1
    dealias: str = "padded(3)"
    omega_cap: float = 1e12

    @field_validator("dealias")
    @classmethod
    def _rule(cls, v):
        DealiasRule.parse(v)
        return v

    @model_validator(mode="after")
    def _check(self):
        self.stepper()
        return self

    def stepper(self) -> StepperConfig:
        return StepperConfig(
            dt_max=self.dt_max, cfl=self.cfl, integrator=self.integrator,
            dealias=DealiasRule.parse(self.dealias), end_time=self.end_time,
            output_every=self.output_every, omega_cap=self.omega_cap,
        )


BUILTINS = ("equilibrium", "random", "shear", "sphere")


class InitialConfig(_Strict):
    builtin: Optional[Literal["equilibrium", "random", "shear", "sphere"]] = "equilibrium"
    amplitude: float = 1.0
    seed: int = 0
    band: int = 3
    checkpoint: Optional[str] = None

    @model_validator(mode="after")
    def _one_source(self):
        if self.checkpoint is not None:
            self.builtin = None
        return self


class CriterionConfig(_Strict):
    kind: str
    threshold: Optional[float] = None
    p: Optional[float] = None
    q: Optional[float] = None

    @model_validator(mode="after")
    def _check(self):
        if self.kind not in crit.KINDS:
            raise ValueError(f"unknown criterion kind {self.kind!r}")
        self.accumulator()
        return self

    def accumulator(self) -> crit.CriterionAccumulator:
        return crit.CriterionAccumulator(self.kind, self.p, self.q, self.threshold)


class OutputConfig(_Strict):
    timeseries: Optional[str] = None
    checkpoint: Optional[str] = None
    checkpoint_every: int = Field(default=0, ge=0)


DEFAULT_CRITERIA = ("bkm", "log_besov0", "log_besov_m1")


class RunConfig(_Strict):
    grid: GridConfig = Field(default_factory=GridConfig)
    params: ParamsConfig = Field(default_factory=ParamsConfig)
    stepper: StepperSection = Field(default_factory=StepperSection)
    initial: InitialConfig = Field(default_factory=InitialConfig)
    criteria: list[CriterionConfig] = Field(
        default_factory=lambda: [CriterionConfig(kind=k) for k in DEFAULT_CRITERIA])
    outputs: OutputConfig = Field(default_factory=OutputConfig)
    eta_hat: float = Field(default=1.0, gt=0)


def _error_paths(exc: ValidationError) -> str:
    lines = []
    for err in exc.errors():
        path = ".".join(str(p) for p in err["loc"]) or "<root>"
        lines.append(f"{path}: {err['msg']}")
    return "; ".join(lines)


def parse_config(data: dict) -> RunConfig:
    try:
        return RunConfig.model_validate(data)
    except ValidationError as exc:
        raise ConfigError(_error_paths(exc)) from None


def load_config(path) -> RunConfig:
    path = Path(path)
    try:
        data = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON at line {exc.lineno} column {exc.colno}: {exc.msg}") from None
    except OSError as exc:
        raise ConfigError(f"{path}: {exc.strerror}") from None
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: top level must be an object")
    return parse_config(data)


# ---------------------------------------------------------------------------
# initial conditions


def builtin_state(name: str, grid: GridSpec, amplitude: float = 1.0, seed: int = 0,
                  band: int = 3, eps: float = 0.1) -> State:
    """Named initial states.

    equilibrium  u = 0, phi = 1
    random       band-limited random u (projected) and phi of the given sup
    shear        u = (0, A sin(2 pi x1) / 2 pi, 0) so omega = A cos(2 pi x1) e3; phi = 1
    sphere       u = 0, phi a tanh profile of a centred ball of radius 1/4
    """
    if name == "equilibrium":
        return State(0.0, SpectralVector.zeros(grid), SpectralScalar.constant(grid, 1.0))
    if name == "random":
        rng = np.random.default_rng(seed)
        comps = np.stack([random_band_limited(grid, rng, band, amplitude).coeffs for _ in range(3)])
        u = leray_project(SpectralVector(grid, comps))
        phi = random_band_limited(grid, rng, band, amplitude)
        return State(0.0, u, phi)
    x1, x2, x3 = grid.coordinates()
    if name == "shear":
        u2 = np.broadcast_to(amplitude * np.sin(2 * np.pi * x1) / (2 * np.pi), grid.shape)
        zero = np.zeros(grid.shape)
        return State.from_samples(0.0, np.stack([zero, u2, zero]), np.ones(grid.shape), grid)
    if name == "sphere":
        r = np.sqrt((x1 - 0.5) ** 2 + (x2 - 0.5) ** 2 + (x3 - 0.5) ** 2)
        phi = np.tanh((0.25 - r) / (math.sqrt(2.0) * eps))
        return State.from_samples(0.0, np.zeros((3,) + grid.shape), phi, grid)
    raise ValueError(f"unknown builtin initial state {name!r}; choose from {BUILTINS}")


# ---------------------------------------------------------------------------
# checkpoints

MAGIC = b"VESI"
VERSION = 1
_HEADER = struct.Struct("<4sIIIId8d")


@dataclass(frozen=True, eq=False)
class Checkpoint:
    t: float
    params: tuple[float, ...]
    u: np.ndarray    # (3, n1, n2, n3) real samples
    phi: np.ndarray  # (n1, n2, n3) real samples

    @property
    def grid(self) -> GridSpec:
        return GridSpec(*self.phi.shape)

    def model_params(self) -> ModelParams:
        mu, k, gamma, eps, M1, M2, alpha, beta = self.params
        return ModelParams(mu, k, gamma, eps, M1, M2,
                           None if math.isnan(alpha) else alpha,
                           None if math.isnan(beta) else beta)

    def state(self) -> State:
        return State.from_samples(self.t, self.u, self.phi, self.grid)


def write_checkpoint(ckpt: Checkpoint, path) -> None:
    n1, n2, n3 = ckpt.phi.shape
    if ckpt.u.shape != (3, n1, n2, n3):
        raise CheckpointError(f"velocity shape {ckpt.u.shape} does not match phi {ckpt.phi.shape}")
    header = _HEADER.pack(MAGIC, VERSION, n1, n2, n3, float(ckpt.t), *map(float, ckpt.params))
    path = Path(path)
    tmp = path.with_name(path.name + ".tmp")
    with open(tmp, "wb") as fh:
        fh.write(header)
        for arr in (*ckpt.u, ckpt.phi):
            fh.write(np.ascontiguousarray(arr, dtype="<f8").tobytes())
    tmp.replace(path)


def read_checkpoint(path) -> Checkpoint:
    path = Path(path)
    data = path.read_bytes()
    if len(data) < _HEADER.size:
        raise CheckpointError(f"{path}: truncated header ({len(data)} bytes)")
    magic, version, n1, n2, n3, t, *params = _HEADER.unpack_from(data)
    if magic != MAGIC:
        raise CheckpointError(f"{path}: bad magic {magic!r}")
    if version != VERSION:
        raise CheckpointError(f"{path}: unsupported format version {version} (expected {VERSION})")
    count = n1 * n2 * n3
    expected = _HEADER.size + 4 * count * 8
    if len(data) != expected:
        kind = "truncated" if len(data) < expected else "size mismatch"
        raise CheckpointError(f"{path}: {kind}: {len(data)} bytes, header implies {expected}")
    arr = np.frombuffer(data, dtype="<f8", offset=_HEADER.size).astype(np.float64)
    arr = arr.reshape(4, n1, n2, n3)
    return Checkpoint(t, tuple(params), arr[:3].copy(), arr[3].copy())


def save_checkpoint(state: State, params: ModelParams, path) -> Checkpoint:
    ckpt = Checkpoint(state.t, params.as_tuple(), state.u.samples(), state.phi.samples())
    write_checkpoint(ckpt, path)
    return ckpt


def load_checkpoint(path) -> tuple[State, ModelParams]:
    ckpt = read_checkpoint(path)
    return ckpt.state(), ckpt.model_params()


# ---------------------------------------------------------------------------
# time series

BASE_COLUMNS = (
    "t", "kinetic", "e_eps", "a", "b", "pen_vol", "pen_area", "total_energy",
    "dissipation_u", "dissipation_phi", "energy_residual", "norm_u_l2", "norm_phi_h2",
    "norm_grad_lap_phi", "norm_grad_phi_linf", "omega_linf", "omega_b0", "omega_bm1",
    "int_bkm", "int_log_besov0", "int_log_besov_m1",
)


def format_float(x: float) -> str:
    return "%.17g" % x


def _integral(rep: crit.CriterionReport, name: str) -> float:
    try:
        return rep[name].integral
    except KeyError:
        return math.nan


class TimeSeriesWriter:
    """CSV sink with a fixed column order; the header is written with the first row."""

    def __init__(self, path, serrin_names=()):
        self.path = Path(path)
        self.serrin_names = list(serrin_names)
        self.columns = list(BASE_COLUMNS) + [f"int_{n}" for n in self.serrin_names] + ["h_t"]
        self._fh = None
        self._writer = None

    def row(self, rec: DiagnosticsRecord, rep: crit.CriterionReport) -> list[float]:
        e = rec.energy
        values = [
            rec.t, rec.kinetic, e.e_eps, e.a, e.b, e.pen_vol, e.pen_area, rec.kinetic + e.total,
            rec.dissipation_u, rec.dissipation_phi, rec.energy_residual, rec.norm_u_l2,
            rec.norm_phi_h2, rec.norm_grad_lap_phi, rec.norm_grad_phi_linf,
            rec.besov.linf, rec.besov.b0_inf, rec.besov.bm1_inf,
            _integral(rep, "bkm"), _integral(rep, "log_besov0"), _integral(rep, "log_besov_m1"),
        ]
        values += [_integral(rep, n) for n in self.serrin_names]
        values.append(rec.h_t)
        return values

    def emit(self, rec: DiagnosticsRecord, rep: crit.CriterionReport) -> None:
        try:
            if self._fh is None:
                self._fh = open(self.path, "w", newline="")
                self._writer = csv.writer(self._fh, lineterminator="\n")
                self._writer.writerow(self.columns)
            self._writer.writerow([format_float(v) for v in self.row(rec, rep)])
            self._fh.flush()
        except OSError as exc:
            raise OSError(f"{self.path}: {exc.strerror or exc}") from exc

    def close(self) -> None:
        if self._fh is not None:
            self._fh.close()
            self._fh = None

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


def read_timeseries(path) -> tuple[list[str], np.ndarray]:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    return rows[0], np.array([[float(v) for v in r] for r in rows[1:]])


# ---------------------------------------------------------------------------
# driver


@dataclass
class Simulation:
    result: RunResult
    tracker: crit.CriteriaTracker
    records: list[DiagnosticsRecord]

    @property
    def exit_code(self) -> int:
        return 2 if self.result.blew_up else 0


def initial_state(cfg: RunConfig) -> tuple[State, ModelParams]:
    """Initial state and parameters; a checkpoint supplies alpha/beta unless overridden."""
    params = cfg.params.model()
    init = cfg.initial
    if init.checkpoint is not None:
        state, saved = load_checkpoint(init.checkpoint)
        if state.grid != cfg.grid.spec():
            raise ConfigError(f"initial.checkpoint: grid {state.grid.shape} differs from grid "
                              f"{cfg.grid.spec().shape}")
        alpha = params.alpha if params.alpha is not None else saved.alpha
        beta = params.beta if params.beta is not None else saved.beta
        return state, ModelParams(params.mu, params.k, params.gamma, params.eps,
                                  params.M1, params.M2, alpha, beta)
    state = builtin_state(init.builtin, cfg.grid.spec(), init.amplitude, init.seed, init.band,
                          params.eps)
    return state, params


def simulate(cfg: RunConfig, keep_records: bool = False) -> Simulation:
    stepper = cfg.stepper.stepper()
    rule = stepper.dealias
    state, params = initial_state(cfg)
    params = params.resolve(state.phi, rule)
    cutoffs = build_cutoffs(state.grid)
    tracker = crit.CriteriaTracker([c.accumulator() for c in cfg.criteria], cutoffs)
    serrin = [a.name for a in tracker.accs if a.kind in ("serrin_u", "serrin_grad")]
    out = cfg.outputs
    writer = TimeSeriesWriter(out.timeseries, serrin) if out.timeseries else None
    window = HWindow(start=state.t)
    records: list[DiagnosticsRecord] = []
    last_pair: list[State | None] = [None, None]

    def on_step(prev: State, nxt: State) -> None:
        last_pair[0], last_pair[1] = prev, nxt

    def observe(s: State, n: int) -> None:
        prev = last_pair[0] if last_pair[1] is s else None
        rec = collect(s, params, cutoffs, prev=prev, window=window, eta_hat=cfg.eta_hat, rule=rule)
        b = rec.besov
        tracker.update(s.t, s.u, omega_besov=(b.linf, b.b0_inf, b.bm1_inf))
        if writer is not None:
            writer.emit(rec, tracker.report())
        if keep_records:
            records.append(rec)
        if out.checkpoint and ((out.checkpoint_every and n % out.checkpoint_every == 0)
                               or s.t >= stepper.end_time):
            save_checkpoint(s, params, out.checkpoint)

    try:
        result = run(state, params, stepper, hooks=[observe], step_hooks=[on_step])
    finally:
        if writer is not None:
            writer.close()
    if out.checkpoint and result.blew_up:
        save_checkpoint(result.state, params, out.checkpoint)
    return Simulation(result, tracker, records)
