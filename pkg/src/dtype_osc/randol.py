"""Randol maximal function M_gamma(s) = sup_{lam > 1} lam^gamma |I(lam, s)| on dyadic grids.

Sampling, decay fits, quasi-annulus cells, the predicted critical-exponent table and the
empirical L^p probe built from per-annulus sums.
"""
from __future__ import annotations

import enum
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy import special

from .cache import SampleCache
from .exceptions import (AccuracyNotReached, AnnulusUnreliable, ConfigError, GammaOutOfRange,
                         InsufficientData, InvalidInvariants)
from .normalform import Regime, classify_regime, reduce_to_normal_form
from .oscint import (DEFAULT_AMPLITUDE, DEFAULT_CONFIG, Amplitude, Engine, OscSample,
                     QuadratureConfig, integrate_coeffs, integrate_coeffs_multi, stable_hash)
from .phase import DPhase, ExceptionalFamily, Mode, find_a3_witness

REPORT_TOLERANCE = 0.35
UNRELIABLE_FRACTION = 0.2


# ------------------------------------------------------------------ exact exponent table

def as_rational(x) -> Fraction:
    """Exact rational from int, Fraction, "p/q" string or float (shortest decimal repr)."""
    if isinstance(x, Fraction):
        return x
    if isinstance(x, float):
        if not math.isfinite(x):
            raise GammaOutOfRange(f"non-finite value {x}")
        return Fraction(repr(x))
    return Fraction(x)


def gamma_range(n, m=math.inf, regime: Optional[Regime] = None) -> Tuple[Fraction, Fraction]:
    """Open lower, closed upper end of the admissible gamma interval."""
    regime = classify_regime(m, n) if regime is None else Regime(regime)
    if regime == Regime.D_INF:
        return Fraction(1, 2), Fraction(m + 3, 2 * (m + 1))
    return Fraction(n + 1, 2 * n), Fraction(1)


def predicted_critical_p(gamma, n, m=math.inf, regime: Optional[Regime] = None) -> Fraction:
    """Critical p with M_gamma in L^{p-0}_loc, as an exact rational."""
    regime = classify_regime(m, n) if regime is None else Regime(regime)
    g = as_rational(gamma)
    lo, hi = gamma_range(n, m, regime)
    if not (lo < g <= hi):
        raise GammaOutOfRange(f"gamma={g} outside ({lo}, {hi}] for {regime.value}")
    if regime == Regime.D_INF:
        return 4 / (2 * g - 1)
    n = int(n)
    if regime == Regime.LA:
        return Fraction(3 * n - 1) / (2 * g * n - n - 1)
    if regime == Regime.EXCEPTIONAL:
        if g <= Fraction(3 * n - 3, 3 * n - 2):
            return Fraction(3 * n - 1) / (2 * g * n - n - 1)
        return 3 / (4 * g - 3)
    m = int(m)
    if g <= Fraction(m + 3, 2 * (m + 1)):
        return Fraction(2 * (2 * n - m - 1)) / (2 * n * g - n - 1)
    return Fraction(3 * m + 1) / ((2 * m + 1) * g - m - 1)


def nla_branches(gamma, n: int, m: int) -> Tuple[Fraction, Fraction]:
    g = as_rational(gamma)
    return (Fraction(2 * (2 * n - m - 1)) / (2 * n * g - n - 1),
            Fraction(3 * m + 1) / ((2 * m + 1) * g - m - 1))


def exceptional_branches(gamma, n: int) -> Tuple[Fraction, Fraction]:
    g = as_rational(gamma)
    return Fraction(3 * n - 1) / (2 * g * n - n - 1), 3 / (4 * g - 3)


def breakpoint_consistency(n, m) -> bool:
    """Both formulas of the regime agree at its breakpoint, with the expected common value.

    LA has a single formula; there the gamma = 1 value 3 + 2/(n-1) is checked instead.
    """
    regime = classify_regime(m, n)
    if regime == Regime.NLA:
        gb = Fraction(m + 3, 2 * (m + 1))
        a, b = nla_branches(gb, n, m)
        return a == b == 2 * (m + 1)
    if regime == Regime.EXCEPTIONAL:
        gb = Fraction(3 * n - 3, 3 * n - 2)
        a, b = exceptional_branches(gb, n)
        return a == b == Fraction(3 * n - 2, n - 2)
    if regime == Regime.LA:
        if n == math.inf:
            return True
        return predicted_critical_p(1, n, m, regime) == 3 + Fraction(2, int(n) - 1)
    return predicted_critical_p(Fraction(m + 3, 2 * (m + 1)), n, m, regime) == 2 * (m + 1)


def scan_exponents(m: int, gamma) -> Tuple[Fraction, Fraction]:
    """(across, along) blow-up exponents near the exceptional curve."""
    g = as_rational(gamma)
    return 4 * g / 3 - 1, (2 * m + 1) * g / (m + 1) - 1


# ------------------------------------------------------------------ geometry

def _gauge_exponents(n) -> Tuple[float, float]:
    if not (math.isfinite(n) and n >= 3):
        raise InvalidInvariants(f"quasi-distance needs finite n >= 3, got {n}")
    return n / (n - 1), 2 * n / (n + 1)


def quasi_distance(s, n) -> np.ndarray | float:
    """rho(s) = |s1|^(n/(n-1)) + |s2|^(2n/(n+1)); vectorized over leading axes."""
    e1, e2 = _gauge_exponents(n)
    s = np.asarray(s, dtype=float)
    r = np.abs(s[..., 0]) ** e1 + np.abs(s[..., 1]) ** e2
    return float(r) if r.ndim == 0 else r


def quasi_dilation(s, t: float, n) -> np.ndarray:
    """delta*_t s = (t^((n-1)/n) s1, t^((n+1)/(2n)) s2), so that rho(delta*_t s) = t rho(s)."""
    s = np.asarray(s, dtype=float)
    return np.stack([t ** ((n - 1) / n) * s[..., 0], t ** ((n + 1) / (2 * n)) * s[..., 1]], -1)


@dataclass(frozen=True)
class LambdaGrid:
    """Dyadic levels lam_j = lambda0 2^j, j < levels, each sampled at
    lam_j (1 + k / substeps), k < substeps (substeps=1 is the plain dyadic grid).

    ``extra`` holds additional points (e.g. the midpoints lam_j sqrt 2) evaluated one by one.
    """

    lambda0: float = 2.0
    levels: int = 12
    substeps: int = 1
    extra: Tuple[float, ...] = ()

    def __post_init__(self):
        if not self.lambda0 >= 2:
            raise ConfigError(f"lambda0 must be >= 2, got {self.lambda0}")
        if self.levels < 1:
            raise ConfigError("empty lambda grid")
        if self.substeps < 1:
            raise ConfigError("substeps must be >= 1")
        if any(not x > 1 for x in self.extra):
            raise ConfigError("all lambda must exceed 1")

    def octaves(self, factor: float = 1.0) -> List[np.ndarray]:
        S = self.substeps
        return [factor * self.lambda0 * 2.0 ** j * (1.0 + np.arange(S) / S) for j in range(self.levels)]

    @property
    def values(self) -> Tuple[float, ...]:
        v = [float(x) for o in self.octaves() for x in o] + [float(x) for x in self.extra]
        return tuple(sorted(v))

    @property
    def lambda_max(self) -> float:
        return max(self.values)

    def with_midpoints(self) -> "LambdaGrid":
        """Add lam_j sqrt(2) for every level (the density check of the dyadic sup)."""
        mids = tuple(self.lambda0 * 2.0 ** j * math.sqrt(2.0) for j in range(self.levels))
        return replace(self, extra=tuple(sorted(set(self.extra) | set(mids))))

    def scaled(self, factor: float) -> "ScaledGrid":
        return ScaledGrid(self, float(factor))


@dataclass(frozen=True)
class ScaledGrid:
    base: LambdaGrid
    factor: float

    def octaves(self) -> List[np.ndarray]:
        return self.base.octaves(self.factor)

    @property
    def extra(self) -> Tuple[float, ...]:
        return tuple(self.factor * x for x in self.base.extra)

    @property
    def values(self) -> Tuple[float, ...]:
        return tuple(sorted(self.factor * x for x in self.base.values))


@dataclass(frozen=True)
class Cell:
    """Quasi-polar cell t in [t0, t1], u in [u0, u1] in one sign quadrant.

    s1 = q1 (t u)^a, s2 = q2 (t (1-u))^b with a = (n-1)/n, b = (n+1)/(2n), so rho = t.
    """

    j: int
    index: int
    quadrant: Tuple[int, int]
    t: Tuple[float, float]
    u: Tuple[float, float]
    center: Tuple[float, float]
    area: float


@dataclass(frozen=True)
class SGrid:
    n_gauge: float
    j_min: int
    j_max: int
    cells_per_annulus: int
    cells: Tuple[Cell, ...]
    centering: Optional[str] = None

    @classmethod
    def quasi_polar(cls, n_gauge, j_min: int, j_max: int, cells_per_annulus: int = 16,
                    radial_bins: int = 1) -> "SGrid":
        _gauge_exponents(n_gauge)
        if j_max < j_min:
            raise ConfigError("j_max < j_min")
        if cells_per_annulus < 4:
            raise ConfigError("need at least one cell per quadrant")
        a = (n_gauge - 1) / n_gauge
        b = (n_gauge + 1) / (2 * n_gauge)
        D = a + b
        nu = math.ceil(cells_per_annulus / (4 * radial_bins))
        beta_ab = special.beta(a, b)
        # equal-area angular bins: the u-marginal is Beta(a, b)
        ucuts = [0.0] + [float(special.betaincinv(a, b, k / nu)) for k in range(1, nu)] + [1.0]
        cells = []
        for j in range(j_min, j_max + 1):
            T0, T1 = 2.0 ** (-j - 1), 2.0 ** (-j)
            tcuts = [(T0 ** D + (T1 ** D - T0 ** D) * k / radial_bins) ** (1 / D) for k in range(radial_bins + 1)]
            idx = 0
            for q in ((1, 1), (-1, 1), (-1, -1), (1, -1)):
                for r in range(radial_bins):
                    t0, t1 = tcuts[r], tcuts[r + 1]
                    tc = (0.5 * (t0 ** D + t1 ** D)) ** (1 / D)
                    for k in range(nu):
                        u0, u1 = ucuts[k], ucuts[k + 1]
                        uc = float(special.betaincinv(a, b, (k + 0.5) / nu))
                        area = a * b * (t1 ** D - t0 ** D) / D * beta_ab * (1.0 / nu)
                        c = (q[0] * (tc * uc) ** a, q[1] * (tc * (1 - uc)) ** b)
                        cells.append(Cell(j, idx, q, (t0, t1), (u0, u1), c, area))
                        idx += 1
        return cls(float(n_gauge), j_min, j_max, cells_per_annulus, tuple(cells))

    def annulus(self, j: int) -> List[Cell]:
        return [c for c in self.cells if c.j == j]

    @property
    def annuli(self) -> List[int]:
        return sorted({c.j for c in self.cells})

    def total_area(self) -> float:
        return float(sum(c.area for c in self.cells))


# ------------------------------------------------------------------ families and sampling

def family_invariants(family) -> Tuple[Regime, float, float]:
    """(regime, n, m) of a phase family."""
    if isinstance(family, ExceptionalFamily):
        return Regime.EXCEPTIONAL, family.n, family.m
    if family.mode == Mode.MODEL:
        return classify_regime(math.inf, family.n), family.n, math.inf
    if family.mode == Mode.NORMAL_FORM:
        return classify_regime(family.m, family.n), family.n, family.m
    nf = reduce_to_normal_form(family.poly)
    return classify_regime(nf.m, nf.n), nf.n, nf.m


def gauge_for(family) -> float:
    """Exponent of the quasi-distance adapted to the family.

    Nonlinearly adapted families are quasi-homogeneous (to leading order) with the weights of
    the model with n' = 2m + 1, so that gauge is used there.
    """
    regime, n, m = family_invariants(family)
    if regime in (Regime.NLA, Regime.D_INF):
        return 2 * m + 1
    return n


def phase_hash(family) -> str:
    return stable_hash(family.canonical())


def sample(family, s, lam: float, cfg: QuadratureConfig = DEFAULT_CONFIG,
           amplitude: Amplitude = DEFAULT_AMPLITUDE, cache: Optional[SampleCache] = None) -> OscSample:
    """One DIRECT2D sample, cached; AccuracyNotReached is turned into a flagged sample."""
    s = (float(s[0]), float(s[1]))
    ph = phase_hash(family)
    ch = cfg.hash(amplitude)
    if cache is not None:
        hit = cache.get(ph, ch, lam, s, Engine.DIRECT2D)
        if hit is not None:
            return hit
    try:
        out = integrate_coeffs(family.coefficients(s), lam, amplitude, cfg, s)
    except AccuracyNotReached as exc:
        return exc.partial
    if cache is not None:
        cache.put(ph, out)
    return out


def grid_samples(family, s, lgrid, cfg: QuadratureConfig = DEFAULT_CONFIG,
                 amplitude: Amplitude = DEFAULT_AMPLITUDE, cache: Optional[SampleCache] = None,
                 write: bool = True) -> List[OscSample]:
    """All samples of a lambda grid at one s; each octave shares a single adaptive mesh."""
    s = (float(s[0]), float(s[1]))
    if isinstance(lgrid, (LambdaGrid, ScaledGrid)):
        octs, extra = lgrid.octaves(), lgrid.extra
    else:
        octs, extra = [], tuple(lgrid)
        if not extra:
            raise ConfigError("empty lambda grid")
    ph, ch = phase_hash(family), cfg.hash(amplitude)
    out: List[OscSample] = []
    for lams in octs:
        hits = [cache.get(ph, ch, lam, s) for lam in lams] if cache is not None else [None]
        if all(h is not None for h in hits):
            out.extend(hits)
            continue
        got = integrate_coeffs_multi(family.coefficients(s), lams, amplitude, cfg, s)
        if cache is not None and write:
            for x in got:
                if not x.flagged:
                    cache.put(ph, x)
        out.extend(got)
    for lam in extra:
        out.append(sample(family, s, lam, cfg, amplitude, cache if write else None))
    return out


@dataclass(frozen=True)
class FieldEntry:
    s: Tuple[float, float]
    value: float
    argmax_lambda: float
    max_err: float
    flagged: bool
    lambdas: Tuple[float, ...] = field(repr=False, default=())
    magnitudes: Tuple[float, ...] = field(repr=False, default=())

    def regamma(self, gamma: float) -> "FieldEntry":
        lam = np.asarray(self.lambdas)
        w = lam ** gamma * np.asarray(self.magnitudes)
        k = int(np.argmax(w)) if len(w) else 0
        return replace(self, value=float(w[k]) if len(w) else 0.0,
                       argmax_lambda=float(lam[k]) if len(w) else math.nan)


def _entry(samples: Sequence[OscSample], gamma: float, s) -> FieldEntry:
    lam = np.array([x.lam for x in samples])
    mag = np.array([abs(x.value) for x in samples])
    w = lam ** gamma * mag
    k = int(np.argmax(w))
    return FieldEntry((float(s[0]), float(s[1])), float(w[k]), float(lam[k]),
                      float(max(x.err_est for x in samples)), any(x.flagged for x in samples),
                      tuple(lam.tolist()), tuple(mag.tolist()))


def _check_gamma_for(family, gamma):
    regime, n, m = family_invariants(family)
    lo, hi = gamma_range(n, m, regime)
    g = as_rational(gamma)
    if not (lo < g <= hi):
        raise GammaOutOfRange(f"gamma={gamma} outside ({lo}, {hi}]")


def randol_value(family, gamma: float, s, lgrid,
                 cfg: QuadratureConfig = DEFAULT_CONFIG, amplitude: Amplitude = DEFAULT_AMPLITUDE,
                 cache: Optional[SampleCache] = None, check_gamma: bool = True) -> FieldEntry:
    """Grid maximum of lam^gamma |I(lam, s)|: a lower approximation of M_gamma(s)."""
    if check_gamma:
        _check_gamma_for(family, gamma)
    lams = lgrid.values if isinstance(lgrid, (LambdaGrid, ScaledGrid)) else tuple(lgrid)
    if not lams:
        raise ConfigError("empty lambda grid")
    if min(lams) <= 1:
        raise ConfigError("all lambda must exceed 1")
    return _entry(grid_samples(family, s, lgrid, cfg, amplitude, cache), gamma, s)


@dataclass(frozen=True)
class DecayFit:
    slope: float
    intercept: float
    residual: float
    lambdas: Tuple[float, ...]
    magnitudes: Tuple[float, ...]


def decay_fit(family, s, lgrid: LambdaGrid | Sequence[float], cfg: QuadratureConfig = DEFAULT_CONFIG,
              amplitude: Amplitude = DEFAULT_AMPLITUDE, cache: Optional[SampleCache] = None) -> DecayFit:
    """Least-squares fit of log|I| against log lam over accepted samples."""
    lams = lgrid.values if isinstance(lgrid, (LambdaGrid, ScaledGrid)) else tuple(lgrid)
    good = [x for x in (sample(family, s, lam, cfg, amplitude, cache) for lam in lams)
            if not x.flagged and abs(x.value) > 0]
    if len(good) < 6:
        raise InsufficientData(f"{len(good)} accepted samples, need 6")
    L = np.log([x.lam for x in good])
    Y = np.log([abs(x.value) for x in good])
    (slope, icpt), res = np.polyfit(L, Y, 1, full=True)[:2]
    rms = math.sqrt(float(res[0]) / len(L)) if len(res) else 0.0
    return DecayFit(float(slope), float(icpt), rms, tuple(np.exp(L).tolist()), tuple(np.exp(Y).tolist()))


# ------------------------------------------------------------------ fields

@dataclass(frozen=True)
class MaximalField:
    gamma: float
    grid: SGrid
    entries: Tuple[FieldEntry, ...]  # aligned with grid.cells
    lgrid: LambdaGrid
    family_canonical: str
    regime: Regime
    n: float
    m: float
    amplitude: Amplitude = DEFAULT_AMPLITUDE
    cfg: QuadratureConfig = DEFAULT_CONFIG

    def __post_init__(self):
        if len(self.entries) != len(self.grid.cells):
            raise ValueError("entries must align with grid cells")

    def with_gamma(self, gamma: float) -> "MaximalField":
        """Re-evaluate the same samples at another gamma (no new quadrature)."""
        lo, hi = gamma_range(self.n, self.m, self.regime)
        if not (lo < as_rational(gamma) <= hi):
            raise GammaOutOfRange(f"gamma={gamma} outside ({lo}, {hi}]")
        return replace(self, gamma=float(gamma), entries=tuple(e.regamma(gamma) for e in self.entries))

    def flagged_count(self) -> int:
        return sum(e.flagged for e in self.entries)

    def annulus_max(self) -> Dict[int, float]:
        out: Dict[int, float] = {}
        for c, e in zip(self.grid.cells, self.entries):
            if not e.flagged:
                out[c.j] = max(out.get(c.j, 0.0), e.value)
        return out


def _cell_samples(args):
    family, s, lgrid, cfg, amplitude = args
    return grid_samples(family, s, lgrid, cfg, amplitude, None)


def maximal_field(family, gamma: float, sgrid: SGrid, lgrid: LambdaGrid,
                  cfg: QuadratureConfig = DEFAULT_CONFIG, amplitude: Amplitude = DEFAULT_AMPLITUDE,
                  cache: Optional[SampleCache] = None, workers: int = 1,
                  progress: Optional[Callable[[int, int], None]] = None) -> MaximalField:
    """randol_value at every cell centre; cells are processed and stored in grid order."""
    _check_gamma_for(family, gamma)
    regime, n, m = family_invariants(family)
    lams = lgrid.values
    ph, ch = phase_hash(family), cfg.hash(amplitude)
    todo = []
    for i, c in enumerate(sgrid.cells):
        if cache is None or any(cache.get(ph, ch, lam, c.center) is None for lam in lams):
            todo.append(i)
    computed: Dict[int, List[OscSample]] = {}
    if workers > 1 and len(todo) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            jobs = [(family, sgrid.cells[i].center, lgrid, cfg, amplitude) for i in todo]
            for k, (i, res) in enumerate(zip(todo, pool.map(_cell_samples, jobs))):
                computed[i] = res
                if progress:
                    progress(k + 1, len(todo))
    else:
        for k, i in enumerate(todo):
            computed[i] = _cell_samples((family, sgrid.cells[i].center, lgrid, cfg, amplitude))
            if progress:
                progress(k + 1, len(todo))
    entries = []
    for i, c in enumerate(sgrid.cells):
        if i in computed:
            samples = computed[i]
            if cache is not None:  # single writer, fixed order
                for x in samples:
                    if not x.flagged:
                        cache.put(ph, x)
        else:
            samples = [cache.get(ph, ch, lam, c.center) for lam in lams]
        entries.append(_entry(samples, gamma, c.center))
    fld = MaximalField(float(gamma), sgrid, tuple(entries), lgrid, family.canonical(), regime, n, m,
                       amplitude, cfg)
    for j in sgrid.annuli:
        flags = [e.flagged for c, e in zip(sgrid.cells, entries) if c.j == j]
        if sum(flags) > UNRELIABLE_FRACTION * len(flags):
            raise AnnulusUnreliable(f"annulus j={j}: {sum(flags)}/{len(flags)} cells flagged")
    return fld


def annulus_growth(fld: MaximalField) -> Tuple[float, float]:
    """Slope and intercept of log2(max_cells M) against j (the growth exponent per dyadic shell)."""
    am = fld.annulus_max()
    js = np.array(sorted(am))
    if len(js) < 2:
        raise InsufficientData("need at least two annuli")
    y = np.log2([am[j] for j in js])
    slope, icpt = np.polyfit(js, y, 1)
    return float(slope), float(icpt)


# ------------------------------------------------------------------ L^p probe

class Verdict(str, enum.Enum):
    CONSISTENT = "CONSISTENT"
    INCONSISTENT = "INCONSISTENT"
    INCONCLUSIVE = "INCONCLUSIVE"


@dataclass(frozen=True)
class ExponentReport:
    regime: Regime
    gamma: float
    p_star_predicted: Fraction
    p_hat_empirical: float
    per_annulus_sums: Tuple[Tuple[int, float, float], ...]  # (j, q, S_j)
    fit_residual: float
    verdict: Verdict
    tolerance: float = REPORT_TOLERANCE
    note: str = ""
    slopes: Tuple[Tuple[float, float], ...] = ()  # (q, a(q))

    def to_dict(self) -> dict:
        return {
            "regime": self.regime.value, "gamma": self.gamma,
            "p_star": f"{self.p_star_predicted.numerator}/{self.p_star_predicted.denominator}"
            if self.p_star_predicted.denominator != 1 else str(self.p_star_predicted.numerator),
            "p_hat": self.p_hat_empirical, "fit_residual": self.fit_residual,
            "verdict": self.verdict.value, "tolerance": self.tolerance, "note": self.note,
            "slopes": [list(x) for x in self.slopes],
        }


def parse_q_grid(spec: str) -> Tuple[float, ...]:
    """"A:B:STEP" -> (A, A+STEP, ..., B)."""
    try:
        a, b, st = (float(x) for x in spec.split(":"))
    except ValueError as exc:
        raise ConfigError(f"q-grid must be A:B:STEP, got {spec!r}") from exc
    if not (st > 0 and b > a):
        raise ConfigError(f"bad q-grid {spec!r}")
    k = int(math.floor((b - a) / st + 1e-9))
    return tuple(a + i * st for i in range(k + 1))


def _annulus_data(fld: MaximalField):
    js = fld.grid.annuli
    vals = {j: [] for j in js}
    areas = {j: [] for j in js}
    for c, e in zip(fld.grid.cells, fld.entries):
        if e.flagged:
            continue
        vals[c.j].append(e.value)
        areas[c.j].append(c.area)
    return js, {j: np.array(vals[j]) for j in js}, {j: np.array(areas[j]) for j in js}


def annulus_sums(fld: MaximalField, q: float) -> Dict[int, float]:
    js, V, A = _annulus_data(fld)
    return {j: float(np.sum(V[j] ** q * A[j])) for j in js}


def _slope(fld_data, q):
    js, V, A = fld_data
    S = np.array([np.sum(V[j] ** q * A[j]) for j in js])
    if np.any(S <= 0):
        return math.nan, math.nan
    y = np.log2(S)
    coef, res = np.polyfit(np.array(js, float), y, 1, full=True)[:2]
    rms = math.sqrt(float(res[0]) / len(js)) if len(res) else 0.0
    return float(coef[0]), rms


def lp_probe(fld: MaximalField, q_grid: Sequence[float] = tuple(np.arange(1.0, 8.01, 0.25)),
             tolerance: float = REPORT_TOLERANCE) -> ExponentReport:
    """Locate the q where the annulus sums stop decaying: a(q) = slope of log2 S_j(q) in j."""
    js = fld.grid.annuli
    if len(js) < 6:
        raise InsufficientData(f"{len(js)} annuli, need 6")
    p_star = predicted_critical_p(fld.gamma, fld.n, fld.m, fld.regime)
    data = _annulus_data(fld)
    q_grid = sorted(float(q) for q in q_grid)
    slopes = [(q, _slope(data, q)[0]) for q in q_grid]
    sums = tuple((j, q, float(np.sum(data[1][j] ** q * data[2][j]))) for q in q_grid for j in js)
    p_hat, resid, note = math.nan, math.nan, ""
    for (q0, a0), (q1, a1) in zip(slopes, slopes[1:]):
        if a0 < 0 <= a1:
            lo, hi = q0, q1
            for _ in range(60):
                mid = 0.5 * (lo + hi)
                if _slope(data, mid)[0] < 0:
                    lo = mid
                else:
                    hi = mid
            p_hat = 0.5 * (lo + hi)
            resid = _slope(data, p_hat)[1]
            break
    if math.isnan(p_hat):
        if all(a < 0 for _, a in slopes):
            note = "no blow-up detected"
        else:
            note = "annulus sums grow on the whole q grid"
        verdict = Verdict.INCONCLUSIVE
    else:
        verdict = Verdict.CONSISTENT if abs(p_hat - float(p_star)) <= tolerance else Verdict.INCONSISTENT
    return ExponentReport(fld.regime, fld.gamma, p_star, p_hat, sums, resid, verdict, tolerance, note,
                          tuple(slopes))


def lambda_density_change(family, gamma: float, points: Sequence, lgrid: LambdaGrid,
                          cfg: QuadratureConfig = DEFAULT_CONFIG, amplitude: Amplitude = DEFAULT_AMPLITUDE,
                          cache: Optional[SampleCache] = None) -> float:
    """Largest relative change of M_gamma-hat when the midpoints lam_j sqrt(2) are added."""
    worst = 0.0
    for s in points:
        a = randol_value(family, gamma, s, lgrid, cfg, amplitude, cache).value
        b = randol_value(family, gamma, s, lgrid.with_midpoints(), cfg, amplitude, cache).value
        worst = max(worst, (b - a) / b if b > 0 else 0.0)
    return worst


# ------------------------------------------------------------------ exceptional curve scan

@dataclass(frozen=True)
class ScanPoint:
    s: Tuple[float, float]
    s2: float
    delta: float  # signed offset sigma1 - sigma1^0
    value: float
    argmax_lambda: float
    flagged: bool


@dataclass(frozen=True)
class ExceptionalScanReport:
    m: int
    gamma: float
    sigma0: float
    witness_point: Tuple[float, float]
    across_exponent: float
    across_by_side: Tuple[float, float]
    along_exponent: float
    across_predicted: Fraction
    along_predicted: Fraction
    points: Tuple[ScanPoint, ...]
    exponent_report: ExponentReport


def exceptional_blowup_scan(m: int, gamma: float = 1.0, curve_halfwidth: float = 0.25, n_offsets: int = 5,
                            s2_levels: Sequence[float] = (1.0, 2.0 ** -3, 2.0 ** -6),
                            mu_grid: LambdaGrid = LambdaGrid(2.0, 11, 16),
                            cfg: QuadratureConfig = DEFAULT_CONFIG, amplitude_radius: float = 0.5,
                            cache: Optional[SampleCache] = None, sign: int = 1) -> ExceptionalScanReport:
    """Sample M_gamma-hat on cells graded toward s1 = sigma1^0 s2^(2m/(m+1)).

    Each s2 level uses the natural scale e = s2^(1/(m+1)): the amplitude is the product bump of
    radius amplitude_radius (in rescaled units) centred on the A3 point, dilated by (e, e^m), and
    the lambda grid is mu_grid scaled by e^-(2m+1).  Offsets across the curve are
    delta_i = curve_halfwidth 2^-i on both sides.
    """
    w = find_a3_witness(m, sign)
    fam = ExceptionalFamily(m, sign)
    sigma0 = w.sigma0[0]
    y0 = w.point
    deltas = [curve_halfwidth * 2.0 ** -i for i in range(n_offsets)]
    pts: List[ScanPoint] = []

    def value(s2, d):
        e = s2 ** (1.0 / (m + 1))
        amp = Amplitude((amplitude_radius * e, amplitude_radius * e ** m), center=(y0[0] * e, y0[1] * e ** m))
        s = ((sigma0 + d) * s2 ** (2 * m / (m + 1)), s2)
        ent = randol_value(fam, gamma, s, mu_grid.scaled(e ** -(2 * m + 1)), cfg, amp, cache, check_gamma=False)
        pts.append(ScanPoint(ent.s, s2, d, ent.value, ent.argmax_lambda, ent.flagged))
        return ent

    base = s2_levels[0]
    side = []
    for sgn in (1, -1):
        xs, ys = [], []
        for d in deltas:
            ent = value(base, sgn * d)
            if not ent.flagged and ent.value > 0:
                xs.append(math.log2(d))
                ys.append(math.log2(ent.value))
        if len(xs) < 3:
            raise InsufficientData("too few accepted offsets across the curve")
        side.append(-float(np.polyfit(xs, ys, 1)[0]))
    xs, ys = [], []
    for s2 in s2_levels:
        ent = value(s2, deltas[0])
        if not ent.flagged:
            xs.append(math.log2(s2))
            ys.append(math.log2(ent.value))
    along = -float(np.polyfit(xs, ys, 1)[0]) if len(xs) >= 2 else math.nan
    across_p, along_p = scan_exponents(m, gamma)
    across = 0.5 * (side[0] + side[1])
    p_star = predicted_critical_p(gamma, 2 * m + 1, m, Regime.EXCEPTIONAL)
    # p-hat implied by the across exponent: the curve neighbourhood has codimension 1
    p_hat = 1.0 / across if across > 0 else math.nan
    verdict = (Verdict.INCONCLUSIVE if math.isnan(p_hat) else
               Verdict.CONSISTENT if abs(p_hat - float(p_star)) <= REPORT_TOLERANCE else Verdict.INCONSISTENT)
    rep = ExponentReport(Regime.EXCEPTIONAL, float(gamma), p_star, p_hat, (), 0.0, verdict, REPORT_TOLERANCE,
                         "p_hat = 1 / across-curve exponent")
    return ExceptionalScanReport(m, float(gamma), sigma0, y0, across, (side[0], side[1]), along,
                                 across_p, along_p, tuple(pts), rep)
