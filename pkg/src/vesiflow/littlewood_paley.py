"""Periodic Littlewood-Paley blocks, homogeneous Besov/Sobolev norms and
empirical ratio checkers for the classical inequalities used by the blow-up
criteria.

The radial cutoffs are sampled at lattice frequencies |xi| = 2*pi*|m|.  The
low-pass profile psi is a smooth step that equals 1 on [0, 3/4] and 0 beyond
4/3, and the annulus profile is phi(r) = psi(r/2) - psi(r), so the blocks
telescope to an exact partition of unity.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .spectral import GridSpec, SpectralScalar, SpectralVector, multiply, refined_grid

INNER = 3.0 / 4.0
OUTER = 4.0 / 3.0


class ConfigurationError(ValueError):
    pass


def _bump_tail(t: np.ndarray) -> np.ndarray:
    out = np.zeros_like(t)
    pos = t > 0
    out[pos] = np.exp(-1.0 / t[pos])
    return out


def smooth_step(t) -> np.ndarray:
    """C-infinity step: 0 for t <= 0, 1 for t >= 1."""
    t = np.asarray(t, dtype=float)
    a = _bump_tail(t)
    b = _bump_tail(1.0 - t)
    return a / (a + b)


def psi_profile(r) -> np.ndarray:
    """Low-pass profile, 1 on [0, 3/4], 0 on [4/3, inf)."""
    r = np.asarray(r, dtype=float)
    return smooth_step((OUTER - r) / (OUTER - INNER))


def phi_profile(r) -> np.ndarray:
    """Annulus profile supported in [3/4, 8/3]."""
    r = np.asarray(r, dtype=float)
    return psi_profile(r / 2.0) - psi_profile(r)


@dataclass(frozen=True)
class DyadicCutoffs:
    grid: GridSpec
    j_min: int
    j_max: int

    @staticmethod
    def phi_profile(r):
        return phi_profile(r)

    @staticmethod
    def psi_profile(r):
        return psi_profile(r)

    @property
    def blocks(self) -> range:
        return range(self.j_min, self.j_max + 1)

    def multiplier(self, j: int) -> np.ndarray:
        if j < self.j_min or j > self.j_max:
            raise IndexError(f"block {j} outside [{self.j_min}, {self.j_max}]")
        return _block_multipliers(self)[j - self.j_min]


_MULT_CACHE: dict[DyadicCutoffs, list[np.ndarray]] = {}


def _block_multipliers(cut: DyadicCutoffs) -> list[np.ndarray]:
    if cut not in _MULT_CACHE:
        kmag = cut.grid.wave.kmag
        mults = []
        for j in cut.blocks:
            m = phi_profile(kmag * 2.0 ** (-j))
            m[0, 0, 0] = 0.0
            mults.append(m)
        _MULT_CACHE[cut] = mults
    return _MULT_CACHE[cut]


def build_cutoffs(grid: GridSpec) -> DyadicCutoffs:
    kmag = grid.wave.kmag
    r_min = 2 * np.pi
    r_max = float(kmag.max())
    # block j is nonzero only for 3/4 < 2^-j r < 8/3
    j_min = math.floor(math.log2(3.0 * r_min / 8.0)) + 1
    j_max = math.ceil(math.log2(4.0 * r_max / 3.0)) - 1
    if j_max < j_min:
        raise ConfigurationError(f"grid {grid.shape} cannot host a dyadic block")
    return DyadicCutoffs(grid, j_min, j_max)


def profile_partition_residual(radii, j_lo: int | None = None, j_hi: int | None = None) -> tuple[float, float]:
    """Residuals of psi(r) + sum_{j>=0} phi(2^-j r) = 1 (r >= 0) and of
    sum_{j in Z} phi(2^-j r) = 1 (r > 0), summing every block that can be
    nonzero on the supplied radii."""
    r = np.asarray(radii, dtype=float)
    pos = r[r > 0]
    if j_hi is None:
        j_hi = math.ceil(math.log2(4.0 * max(float(r.max()), 1.0) / 3.0))
    if j_lo is None:
        j_lo = math.floor(math.log2(3.0 * float(pos.min()) / 8.0)) if pos.size else 0
    inhom = psi_profile(r).copy()
    for j in range(0, j_hi + 1):
        inhom += phi_profile(r * 2.0 ** (-j))
    hom = np.zeros_like(pos)
    for j in range(j_lo, j_hi + 1):
        hom += phi_profile(pos * 2.0 ** (-j))
    return float(np.max(np.abs(inhom - 1.0))), float(np.max(np.abs(hom - 1.0), initial=0.0))


def partition_residual(cutoffs: DyadicCutoffs, radii=None) -> float:
    """max |sum_j phi(2^-j r) - 1| over lattice radii (or supplied radii > 0)."""
    if radii is None:
        r = cutoffs.grid.wave.kmag
        r = r[r > 0]
    else:
        r = np.asarray(radii, dtype=float)
    total = np.zeros_like(r)
    for j in cutoffs.blocks:
        total += phi_profile(r * 2.0 ** (-j))
    return float(np.max(np.abs(total - 1.0)))


def dyadic_block(field: SpectralScalar, j: int, cutoffs: DyadicCutoffs) -> SpectralScalar:
    if field.grid != cutoffs.grid:
        raise ValueError("field and cutoffs live on different grids")
    return SpectralScalar(field.grid, field.coeffs * cutoffs.multiplier(j))


@dataclass(frozen=True, eq=False)
class FieldStack:
    """Any number of components on one grid, e.g. the nine entries of grad u."""

    grid: GridSpec
    coeffs: np.ndarray


def _components(field) -> np.ndarray:
    """Coefficient stack of shape (c, n1, n2, n3) for scalar, vector or stack input."""
    c = field.coeffs
    return c[None] if c.ndim == 3 else c


def _sup(coeffs: np.ndarray, grid: GridSpec) -> float:
    """Sup of the pointwise Euclidean magnitude on the 2x refined grid."""
    if not np.any(coeffs):
        return 0.0
    values = refined_grid(grid, 2).to_physical(coeffs)
    return float(np.sqrt(np.max(np.sum(values * values, axis=0))))


def block_sups(field, cutoffs: DyadicCutoffs) -> dict[int, float]:
    """||Delta_j f||_{L^inf} for every block (vector fields use |.| pointwise)."""
    c = _components(field)
    out = {}
    for j, mult in zip(cutoffs.blocks, _block_multipliers(cutoffs)):
        out[j] = _sup(c * mult, cutoffs.grid)
    return out


def besov_norm(field, s: float, cutoffs: DyadicCutoffs, sups: dict[int, float] | None = None) -> float:
    """Homogeneous B^s_{inf,inf} norm: max_j 2^{js} ||Delta_j f||_inf."""
    if sups is None:
        sups = block_sups(field, cutoffs)
    return max((2.0 ** (j * s) * v for j, v in sups.items()), default=0.0)


def linf_norm(field) -> float:
    return _sup(_components(field), field.grid)


def lp_norm(field, p: float) -> float:
    """L^p norm on the unit torus by 2x refined quadrature (Parseval for p=2)."""
    c = _components(field)
    if p == 2:
        return float(math.sqrt(np.sum(np.abs(c) ** 2)))
    if math.isinf(p):
        return _sup(c, field.grid)
    values = refined_grid(field.grid, 2).to_physical(c)
    mag = np.sqrt(np.sum(values * values, axis=0))
    return float(np.mean(mag ** p) ** (1.0 / p))


def sobolev_norm(field, s: float, homogeneous: bool = True) -> float:
    """Homogeneous (sum_{m != 0} |xi|^{2s} |f(m)|^2)^{1/2}; the inhomogeneous
    variant adds ||f||_{L^2}."""
    c = _components(field)
    kmag = field.grid.wave.kmag
    with np.errstate(divide="ignore"):
        weight = np.where(kmag > 0, kmag ** (2.0 * s), 0.0)
    hom = float(math.sqrt(np.sum(weight * np.abs(c) ** 2)))
    if homogeneous:
        return hom
    return hom + float(math.sqrt(np.sum(np.abs(c) ** 2)))


@dataclass
class BesovDiagnostics:
    b0_inf: float
    bm1_inf: float
    linf: float
    hs: dict[str, float] = field(default_factory=dict)
    timestamp: float = 0.0


def besov_diagnostics(field, cutoffs: DyadicCutoffs, sobolev=((1.0, True), (2.0, False)),
                      timestamp: float = 0.0) -> BesovDiagnostics:
    """Besov/Sobolev summary of a field; ``timestamp`` is the simulation time."""
    sups = block_sups(field, cutoffs)
    hs = {}
    for s, hom in sobolev:
        key = f"{'Hdot' if hom else 'H'}^{s:g}"
        hs[key] = sobolev_norm(field, s, hom)
    return BesovDiagnostics(
        b0_inf=besov_norm(field, 0.0, cutoffs, sups),
        bm1_inf=besov_norm(field, -1.0, cutoffs, sups),
        linf=linf_norm(field),
        hs=hs,
        timestamp=timestamp,
    )


# ---------------------------------------------------------------------------
# empirical inequality ratios


def log_sobolev_ratio(f: SpectralScalar, cutoffs: DyadicCutoffs, s: float = 3.0,
                      sups: dict[int, float] | None = None) -> float:
    """||f||_inf / (1 + ||f||_{B^0} ln^{1/2}(e + ||f||_{H^{s-1}}))."""
    if not s > 2.5:
        raise ValueError(f"s must exceed 5/2, got {s}")
    linf = linf_norm(f)
    if linf == 0:
        return 0.0
    b0 = besov_norm(f, 0.0, cutoffs, sups)
    hs = sobolev_norm(f, s - 1.0, homogeneous=False)
    return linf / (1.0 + b0 * math.sqrt(math.log(math.e + hs)))


def interpolation_ratio(f: SpectralScalar, cutoffs: DyadicCutoffs,
                        sups: dict[int, float] | None = None) -> float:
    """||f||_{L^4} / (||f||_{B^-1}^{1/2} ||f||_{Hdot^1}^{1/2}); 0 when undefined."""
    bm1 = besov_norm(f, -1.0, cutoffs, sups)
    h1 = sobolev_norm(f, 1.0)
    denom = math.sqrt(bm1 * h1)
    if denom == 0:
        return 0.0
    return lp_norm(f, 4) / denom


def _lambda(field: SpectralScalar, s: float) -> SpectralScalar:
    # |xi|^s without the range guard of fractional_multiplier
    kmag = field.grid.wave.kmag
    with np.errstate(divide="ignore"):
        mult = np.where(kmag > 0, kmag ** s, 0.0)
    return SpectralScalar(field.grid, field.coeffs * mult)


def commutator_ratio(f: SpectralScalar, g: SpectralScalar, s: float) -> float:
    """Kato-Ponce commutator ratio with p = 2 and p1 = q1 = p2 = q2 = 4.

    The fractional derivative is the multiplier |xi|^s; products are dealiased.
    """
    if not s > 1:
        raise ValueError(f"s must exceed 1, got {s}")
    lhs_field = _lambda(multiply(f, g), s) - multiply(f, _lambda(g, s))
    lhs = lp_norm(lhs_field, 2)
    grad_f = SpectralVector(f.grid, np.stack([1j * xi * f.coeffs for xi in f.grid.wave.xi_d]))
    rhs = (lp_norm(grad_f, 4) * lp_norm(_lambda(g, s - 1.0), 4)
           + lp_norm(_lambda(f, s), 4) * lp_norm(g, 4))
    if rhs == 0:
        return 0.0
    return lhs / rhs


def embedding_ratio(f, cutoffs: DyadicCutoffs, sups: dict[int, float] | None = None) -> float:
    """||f||_{B^0_{inf,inf}} / ||f||_{L^inf}; bounded by the kernel L1 norm."""
    linf = linf_norm(f)
    if linf == 0:
        return 0.0
    return besov_norm(f, 0.0, cutoffs, sups) / linf


# ---------------------------------------------------------------------------
# corpora


def random_band_limited(grid: GridSpec, rng: np.random.Generator, band: int = 3,
                        amplitude: float = 1.0, mean: float = 0.0) -> SpectralScalar:
    """Real random field with modes |m_i| <= band, decaying spectrum, sup ~ amplitude.

    The coefficients depend only on the rng stream and ``band``, not on the
    grid, so the same draw embeds identically into any grid with n_i > 2*band.
    """
    if any(n <= 2 * band for n in grid.shape):
        raise ValueError(f"band {band} does not fit grid {grid.shape}")
    size = 2 * band + 1
    raw = rng.standard_normal((size, size, size)) + 1j * rng.standard_normal((size, size, size))
    m = np.arange(-band, band + 1)
    m1, m2, m3 = np.meshgrid(m, m, m, indexing="ij")
    raw *= 1.0 / (1.0 + m1 ** 2 + m2 ** 2 + m3 ** 2)
    # Hermitian symmetrization: c(m) = (raw(m) + conj(raw(-m))) / 2
    sym = 0.5 * (raw + np.conj(raw[::-1, ::-1, ::-1]))
    sym[band, band, band] = 0.0
    coeffs = np.zeros(grid.shape, dtype=complex)
    idx = [np.r_[n - band:n, 0:band + 1] for n in grid.shape]
    coeffs[np.ix_(*idx)] = sym
    # normalize with an exact sup over a grid fine enough for the band
    probe = GridSpec.cube(max(8, 4 * band + 4))
    pc = np.zeros(probe.shape, dtype=complex)
    pidx = [np.r_[probe.n1 - band:probe.n1, 0:band + 1]] * 3
    pc[np.ix_(*pidx)] = sym
    peak = np.max(np.abs(np.fft.ifftn(pc).real * probe.size))
    coeffs *= amplitude / peak if peak > 0 else 0.0
    coeffs[0, 0, 0] = mean
    return SpectralScalar(grid, coeffs)


def lemma_corpus(grid: GridSpec, size: int, seed: int, band: int = 3) -> list[SpectralScalar]:
    rng = np.random.default_rng(seed)
    return [random_band_limited(grid, rng, band=band, amplitude=float(rng.uniform(0.5, 2.0)))
            for _ in range(size)]


def sweep_ratios(grid: GridSpec, size: int = 50, seed: int = 7, band: int = 3,
                 s_log: float = 3.0, s_comm: float = 1.5) -> dict[str, float]:
    """Corpus maxima of every empirical ratio on ``grid``.

    Pairs for the commutator ratio are consecutive corpus members.
    """
    cut = build_cutoffs(grid)
    corpus = lemma_corpus(grid, size, seed, band)
    partners = corpus[1:] + corpus[:1]
    sups = [block_sups(f, cut) for f in corpus]
    return {
        "commutator": max(commutator_ratio(f, g, s_comm) for f, g in zip(corpus, partners)),
        "log_sobolev": max(log_sobolev_ratio(f, cut, s_log, b) for f, b in zip(corpus, sups)),
        "interpolation": max(interpolation_ratio(f, cut, b) for f, b in zip(corpus, sups)),
        "embedding": max(embedding_ratio(f, cut, b) for f, b in zip(corpus, sups)),
    }
