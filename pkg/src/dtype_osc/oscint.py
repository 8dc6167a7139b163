"""Numerical evaluation of I(lam, s) = int exp(i lam Phi(x, s)) a(x) dx."""
from __future__ import annotations

import enum
import hashlib
import math
from dataclasses import asdict, dataclass, field
from typing import Optional, Sequence, Tuple

import numpy as np
from scipy import integrate

from . import _kernels as K
from . import _kernels as K_
from .exceptions import AccuracyNotReached, DomainError
from .kronrod import gauss_kronrod
from .phase import DPhase, PerturbedPhase

BUMP_PROFILE = "chi(u)=1 for u<=1/2; 0 for u>=1; else A/(A+B), t=2u-1, A=exp(-1/(1-t)), B=exp(-1/t)"


def stable_hash(text: str) -> str:
    """64-bit hex digest (BLAKE2b, 8-byte digest) of a canonical string."""
    return hashlib.blake2b(text.encode(), digest_size=8).hexdigest()


class AmplitudeKind(str, enum.Enum):
    SMOOTH_BUMP = "SMOOTH_BUMP"  # radial (elliptic when radii differ)
    PRODUCT_BUMP = "PRODUCT_BUMP"


class Engine(str, enum.Enum):
    DIRECT2D = "DIRECT2D"
    REDUCED1D = "REDUCED1D"


def bump(u):
    """Vectorized profile chi(u), u = |x|/r."""
    u = np.abs(np.asarray(u, dtype=float))
    out = np.zeros_like(u)
    out[u <= 0.5] = 1.0
    mid = (u > 0.5) & (u < 1.0)
    t = (u[mid] - 0.5) * 2.0
    a = np.exp(-1.0 / (1.0 - t))
    b = np.exp(-1.0 / t)
    out[mid] = a / (a + b)
    return out


@dataclass(frozen=True)
class Amplitude:
    """Cutoff amplitude; identically ``scale`` on the half-radius box or ellipse.

    ``radius`` may be a pair (r1, r2) for anisotropic (dilated) amplitudes and ``center``
    shifts the support.  ``shear = (omega, m)`` makes the cutoff act on the adapted coordinates
    (x1, x2 - omega x1^m); it is still smooth, compactly supported and 1 near the origin.
    """

    radius: float | Tuple[float, float] = 0.5
    kind: AmplitudeKind = AmplitudeKind.PRODUCT_BUMP
    center: Tuple[float, float] = (0.0, 0.0)
    scale: float = 1.0
    shear: Optional[Tuple[float, int]] = None

    @property
    def radii(self) -> Tuple[float, float]:
        r = self.radius
        if isinstance(r, (tuple, list)):
            return float(r[0]), float(r[1])
        return float(r), float(r)

    def __post_init__(self):
        r1, r2 = self.radii
        if not (r1 > 0 and r2 > 0):
            raise DomainError("cutoff radius must be positive")
        object.__setattr__(self, "kind", AmplitudeKind(self.kind))
        if self.shear is not None:
            om, m = self.shear
            if int(m) != m or m < 1:
                raise DomainError("shear exponent must be a positive integer")
            object.__setattr__(self, "shear", (float(om), int(m)))

    def __call__(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        r1, r2 = self.radii
        u1 = (x[..., 0] - self.center[0]) / r1
        x2 = x[..., 1]
        if self.shear is not None:
            x2 = x2 - self.shear[0] * x[..., 0] ** self.shear[1]
        u2 = (x2 - self.center[1]) / r2
        if self.kind == AmplitudeKind.PRODUCT_BUMP:
            return self.scale * bump(u1) * bump(u2)
        return self.scale * bump(np.hypot(u1, u2))

    def dilated(self, t1: float, t2: float) -> "Amplitude":
        """a(x1 / t1, x2 / t2)."""
        r1, r2 = self.radii
        c = (self.center[0] * t1, self.center[1] * t2)
        if self.shear is not None:
            om, m = self.shear
            return Amplitude((r1 * t1, r2 * t2), self.kind, c, self.scale, (om * t2 / t1 ** m, m))
        return Amplitude((r1 * t1, r2 * t2), self.kind, c, self.scale)

    def mass(self) -> float:
        r1, r2 = self.radii
        m1 = 2 * integrate.quad(lambda u: float(bump(u)), 0, 1, points=[0.5], epsabs=1e-13, epsrel=1e-13)[0]
        if self.kind == AmplitudeKind.PRODUCT_BUMP:
            return self.scale * m1 * m1 * r1 * r2
        mr = 2 * np.pi * integrate.quad(lambda u: float(bump(u)) * u, 0, 1, points=[0.5],
                                        epsabs=1e-13, epsrel=1e-13)[0]
        return self.scale * mr * r1 * r2

    def canonical(self) -> str:
        r1, r2 = self.radii
        return (f"{self.kind.value}:r=({r1!r},{r2!r}):c=({self.center[0]!r},{self.center[1]!r})"
                f":scale={self.scale!r}" + ("" if self.shear is None else f":shear={self.shear!r}")
                + f":{BUMP_PROFILE}")


def shear_coefficients(C: np.ndarray, omega: float, m: int) -> np.ndarray:
    """Coefficients of Phi(x1, u + omega x1^m) in (x1, u); the change of variables has unit Jacobian."""
    C = np.asarray(C, dtype=float)
    I, J = C.shape
    out = np.zeros((I + m * (J - 1), J))
    for i in range(I):
        for j in range(J):
            if C[i, j] == 0.0:
                continue
            for k in range(j + 1):
                out[i + m * (j - k), k] += C[i, j] * math.comb(j, k) * omega ** (j - k)
    return out


def _adapted(C, amplitude: Amplitude) -> np.ndarray:
    if amplitude.shear is None:
        return np.ascontiguousarray(C, dtype=float)
    return np.ascontiguousarray(shear_coefficients(C, *amplitude.shear))


@dataclass(frozen=True)
class QuadratureConfig:
    """Adaptive quadrature controls.

    panel_order is the Gauss order n of the Gauss-Kronrod (n, 2n+1) panel pair.  omega caps the
    estimated phase excursion per panel before it is evaluated (None -> 2.25 * panel_order).
    """

    abs_tol: float = 1e-10
    rel_tol: float = 1e-8
    max_depth: int = 40
    panel_order: int = 20
    c_osc: float = 4.0
    omega: Optional[float] = None

    def __post_init__(self):
        if not (self.abs_tol > 0 and self.rel_tol > 0):
            raise DomainError("tolerances must be positive")
        if self.max_depth < 10:
            raise DomainError("max_depth must be at least 10")
        if self.panel_order < 2:
            raise DomainError("panel_order must be at least 2")
        if not self.c_osc > 0:
            raise DomainError("c_osc must be positive")

    @property
    def omega_eff(self) -> float:
        return 2.25 * self.panel_order if self.omega is None else float(self.omega)

    def canonical(self) -> str:
        return (f"abs_tol={self.abs_tol!r},rel_tol={self.rel_tol!r},max_depth={self.max_depth},"
                f"panel_order={self.panel_order},c_osc={self.c_osc!r},omega={self.omega_eff!r}")

    def hash(self, amplitude: Optional[Amplitude] = None) -> str:
        text = self.canonical()
        if amplitude is not None:
            text += "|" + amplitude.canonical()
        return stable_hash(text)

    def tightened(self, factor: float = 0.5) -> "QuadratureConfig":
        return QuadratureConfig(self.abs_tol * factor, self.rel_tol * factor, self.max_depth,
                                self.panel_order, self.c_osc, self.omega)


DEFAULT_AMPLITUDE = Amplitude()
DEFAULT_CONFIG = QuadratureConfig()


@dataclass(frozen=True)
class OscSample:
    lam: float
    s: Tuple[float, float]
    value: complex
    err_est: float
    engine: Engine
    cfg_hash: str
    nevals: int = 0
    flagged: bool = False

    def __post_init__(self):
        if not self.err_est >= 0:
            raise ValueError("negative error estimate")


def _check_lambda(lam):
    if not (lam > 0 and math.isfinite(lam)):
        raise DomainError(f"lambda must be positive and finite, got {lam}")


def _finish(value, err, flagged, lam, s, engine, cfg, amplitude, nev) -> OscSample:
    tol = max(cfg.abs_tol, cfg.rel_tol * abs(value))
    sample = OscSample(float(lam), (float(s[0]), float(s[1])), complex(value), float(err),
                       engine, cfg.hash(amplitude), int(nev), bool(flagged and err > 10 * tol))
    if sample.flagged:
        raise AccuracyNotReached(f"max_depth exhausted: err_est {err:.3e} > 10 x tol {tol:.1e}", sample)
    return sample


def integrate_coeffs(C: np.ndarray, lam: float, amplitude: Amplitude = DEFAULT_AMPLITUDE,
                     cfg: QuadratureConfig = DEFAULT_CONFIG, s=(0.0, 0.0)) -> OscSample:
    """DIRECT2D integration for a raw phase coefficient matrix C[i, j] (x1^i x2^j)."""
    _check_lambda(lam)
    C = _adapted(C, amplitude)
    xs, wk, wg = gauss_kronrod(cfg.panel_order)
    r1, r2 = amplitude.radii
    kind = K.KIND_PRODUCT if amplitude.kind == AmplitudeKind.PRODUCT_BUMP else K.KIND_RADIAL
    if amplitude.scale == 0.0:
        return _finish(0.0, 0.0, False, lam, s, Engine.DIRECT2D, cfg, amplitude, 0)
    re, im, err, flagged, nev = K.integrate2d(
        C, float(lam), kind, float(amplitude.center[0]), float(amplitude.center[1]), r1, r2,
        cfg.abs_tol / abs(amplitude.scale), cfg.c_osc, cfg.omega_eff, cfg.max_depth, xs, wk, wg)
    sc = amplitude.scale
    return _finish(sc * complex(re, im), abs(sc) * err, flagged, lam, s, Engine.DIRECT2D, cfg, amplitude, nev)


def integrate_coeffs_multi(C: np.ndarray, lams: Sequence[float], amplitude: Amplitude = DEFAULT_AMPLITUDE,
                           cfg: QuadratureConfig = DEFAULT_CONFIG, s=(0.0, 0.0)) -> Tuple[OscSample, ...]:
    """DIRECT2D for an arithmetic progression of lambdas sharing one adaptive mesh.

    The mesh is built for the largest lambda.  Samples whose error exceeds 10x tolerance after
    max_depth are returned flagged (no exception), so that callers can keep the rest.
    """
    lams = np.asarray(lams, dtype=float)
    if lams.size == 0:
        raise DomainError("empty lambda list")
    for lam in lams:
        _check_lambda(lam)
    K = lams.size
    dlam = (lams[-1] - lams[0]) / (K - 1) if K > 1 else 0.0
    if K > 2 and np.max(np.abs(np.diff(lams) - dlam)) > 1e-12 * lams[-1]:
        raise DomainError("lambdas must be equally spaced")
    ch = cfg.hash(amplitude)
    sv = (float(s[0]), float(s[1]))
    if amplitude.scale == 0.0:
        return tuple(OscSample(float(l), sv, 0j, 0.0, Engine.DIRECT2D, ch, 0) for l in lams)
    C = _adapted(C, amplitude)
    xs, wk, wg = gauss_kronrod(cfg.panel_order)
    r1, r2 = amplitude.radii
    kind = K_.KIND_PRODUCT if amplitude.kind == AmplitudeKind.PRODUCT_BUMP else K_.KIND_RADIAL
    sc = amplitude.scale
    re, im, err, flagged, nev = K_.integrate2d_multi(
        C, float(lams[0]), float(dlam), int(K), kind, float(amplitude.center[0]), float(amplitude.center[1]),
        r1, r2, cfg.abs_tol / abs(sc), cfg.c_osc, cfg.omega_eff, cfg.max_depth, xs, wk, wg)
    out = []
    for k in range(K):
        v = sc * complex(re[k], im[k])
        e = abs(sc) * float(err[k])
        tol = max(cfg.abs_tol, cfg.rel_tol * abs(v))
        out.append(OscSample(float(lams[k]), sv, v, e, Engine.DIRECT2D, ch, int(nev) // K,
                             bool(flagged and e > 10 * tol)))
    return tuple(out)


def integrate_direct(pp: PerturbedPhase, a: Amplitude = DEFAULT_AMPLITUDE, lam: float = 1.0,
                     cfg: QuadratureConfig = DEFAULT_CONFIG) -> OscSample:
    return integrate_coeffs(pp.coeffs, lam, a, cfg, pp.s)


def integrate_reduced_model(n: int, sign: int, s: Sequence[float], lam: float,
                            cfg: QuadratureConfig = DEFAULT_CONFIG,
                            amplitude: Amplitude = DEFAULT_AMPLITUDE, max_doublings: int = 12) -> OscSample:
    """Independent route for x1 x2^2 + sign x1^n - s.x with a product amplitude.

    Inner G(x1) = int chi(x2) exp(i lam (x1 x2^2 - s2 x2)) dx2 by scipy's vector-valued adaptive
    Gauss-Kronrod (all outer nodes at once); outer composite Gauss-Legendre, panel count doubled
    until two successive sums agree.
    """
    _check_lambda(lam)
    if amplitude.kind != AmplitudeKind.PRODUCT_BUMP:
        raise DomainError("reduced engine needs a product amplitude")
    if amplitude.shear is not None:
        raise DomainError("reduced engine does not support sheared amplitudes")
    s1, s2 = float(s[0]), float(s[1])
    r1, r2 = amplitude.radii
    c1, c2 = amplitude.center
    W1, W2 = 2 * r1, 2 * r2
    order = cfg.panel_order
    gx, gw = np.polynomial.legendre.leggauss(order)
    # initial outer panels: oscillation cap and phase-excursion cap
    H = abs(n * (n - 1)) * (abs(c1) + r1) ** max(n - 2, 0) + 2 * (abs(c2) + r2)
    cap = cfg.c_osc / (1 + math.sqrt(lam * (1 + H)))
    fmax = n * (abs(c1) + r1) ** (n - 1) + (abs(c2) + r2) ** 2 + abs(s1)
    cap = min(cap, cfg.omega_eff / max(lam * fmax, 1e-300))
    P = max(1, math.ceil(W1 / cap))
    inner_tol = cfg.abs_tol / W1

    def level(P):
        edges = np.linspace(c1 - r1, c1 + r1, P + 1)
        mid = 0.5 * (edges[1:] + edges[:-1])
        half = 0.5 * (edges[1:] - edges[:-1])
        X = (mid[:, None] + half[:, None] * gx[None, :]).ravel()
        Wt = (half[:, None] * gw[None, :]).ravel()
        ax = bump((X - c1) / r1)
        keep = ax > 0
        X, Wt, ax = X[keep], Wt[keep], ax[keep]

        def f(x2):
            ph = lam * (X * x2 * x2 - s2 * x2)
            a2 = float(bump((x2 - c2) / r2))
            return np.concatenate([a2 * np.cos(ph), a2 * np.sin(ph)])

        gmax = lam * (2 * np.max(np.abs(X)) * (abs(c2) + r2) + abs(s2))
        nbreak = max(1, math.ceil(gmax * W2 / cfg.omega_eff))
        pts = np.linspace(c2 - r2, c2 + r2, nbreak + 1)[1:-1]
        G, gerr = integrate.quad_vec(f, c2 - r2, c2 + r2, epsabs=inner_tol, epsrel=0.0, norm="max",
                                     points=pts if len(pts) else None, limit=200000)
        G = G[: len(X)] + 1j * G[len(X):]
        outer = np.exp(1j * lam * (sign * X**n - s1 * X))
        val = np.sum(Wt * ax * outer * G)
        return val, float(gerr) * np.sum(np.abs(Wt) * ax) * math.sqrt(2)

    prev, prev_err = level(P)
    for _ in range(max_doublings):
        P *= 2
        val, ierr = level(P)
        diff = abs(val - prev)
        if diff <= cfg.abs_tol:
            return _finish(val, diff + ierr, False, lam, s, Engine.REDUCED1D, cfg, amplitude, 0)
        prev = val
    return _finish(val, diff + ierr, True, lam, s, Engine.REDUCED1D, cfg, amplitude, 0)


def integrate_1d(coeffs: Sequence[float], lam: float, center: float = 0.0, radius: float = 0.5,
                 cfg: QuadratureConfig = DEFAULT_CONFIG) -> Tuple[complex, float]:
    """int chi((x - center)/radius) exp(i lam p(x)) dx for a polynomial p (ascending coefficients)."""
    _check_lambda(lam)
    q = np.ascontiguousarray(coeffs, dtype=float)
    xs, wk, wg = gauss_kronrod(cfg.panel_order)
    re, im, err, flagged, _ = K.inner_integral(
        q, float(lam), K.KIND_PRODUCT, 0.0, 0.0, float(center), 1.0, float(radius),
        center - radius, center + radius, cfg.abs_tol / (2 * radius), cfg.c_osc, cfg.omega_eff,
        cfg.max_depth, xs, wk, wg)
    if flagged and err > 10 * cfg.abs_tol:
        raise AccuracyNotReached(f"1D quadrature did not converge (err {err:.2e})", complex(re, im))
    return complex(re, im), float(err)


def van_der_corput_probe(k: int, lam_grid: Sequence[float], radius: float = 0.5, scale: float = 1.0,
                         cfg: QuadratureConfig = DEFAULT_CONFIG) -> float:
    """max over the grid of lam^(1/k) |int chi exp(i lam x^k) dx|."""
    if k < 2:
        raise DomainError("k must be at least 2")
    if scale == 0.0:
        return 0.0
    coeffs = np.zeros(k + 1)
    coeffs[k] = 1.0
    best = 0.0
    for lam in lam_grid:
        v, _ = integrate_1d(coeffs, lam, 0.0, radius, cfg)
        best = max(best, lam ** (1.0 / k) * abs(scale * v))
    return best


# --------------------------------------------------------------- constants

_LANCZOS_G = 7
_LANCZOS = (
    0.99999999999980993, 676.5203681218851, -1259.1392167224028, 771.32342877765313,
    -176.61502916214059, 12.507343278686905, -0.13857109526572012, 9.9843695780195716e-6,
    1.5056327351493116e-7,
)


def gamma_function(z: float) -> float:
    """Gamma(z) on (0, 1] via Lanczos (g=7, 9 terms) at z+1 and Gamma(z) = Gamma(z+1)/z."""
    if not z > 0:
        raise DomainError(f"gamma_function needs z > 0, got {z}")
    if z > 1:
        raise DomainError(f"gamma_function is provided on (0, 1], got {z}")
    x = z  # Lanczos series in the shifted variable evaluates Gamma(x + 1)
    a = _LANCZOS[0]
    for i in range(1, _LANCZOS_G + 2):
        a += _LANCZOS[i] / (x + i)
    t = x + _LANCZOS_G + 0.5
    gamma_zp1 = math.sqrt(2 * math.pi) * t ** (x + 0.5) * math.exp(-t) * a
    return gamma_zp1 / z


def limit_constant_odd(n: int) -> float:
    """|(2/n) Gamma(1/(2n)) cos(pi/4 + pi/(4n))|, as printed for odd n."""
    return abs(2.0 / n * gamma_function(1.0 / (2 * n)) * math.cos(math.pi / 4 + math.pi / (4 * n)))


def limit_constant_general(n: int) -> float:
    """Modulus of (sqrt 2 / n) Gamma(1/(2n)) exp(i pi/(4n)), as printed for general n."""
    return math.sqrt(2.0) / n * gamma_function(1.0 / (2 * n))


def oracle_limit_integral(n: int) -> float:
    """|int |x|^(-1/2) exp(i(pi/4 sgn x + x^n)) dx| by 1D quadrature.

    With v = |x|^n each half line becomes (1/n) int_0^inf v^(1/(2n)-1) exp(+-i v) dv; the
    singular piece on [0, 1] uses an algebraic weight and the tail a Fourier weight.
    """
    a = 1.0 / (2 * n) - 1.0
    cos01 = integrate.quad(np.cos, 0, 1, weight="alg", wvar=(a, 0.0), epsabs=1e-14)[0]
    sin01 = integrate.quad(np.sin, 0, 1, weight="alg", wvar=(a, 0.0), epsabs=1e-14)[0]
    cos_t = integrate.quad(lambda v: v**a, 1, np.inf, weight="cos", wvar=1.0)[0]
    sin_t = integrate.quad(lambda v: v**a, 1, np.inf, weight="sin", wvar=1.0)[0]
    J = complex(cos01 + cos_t, sin01 + sin_t) / n  # int_0^inf x^(-1/2) e^{i x^n} dx
    if n % 2:
        # x < 0 gives conj(J) (x^n negative); phases e^{+i pi/4}, e^{-i pi/4}
        total = np.exp(1j * math.pi / 4) * J + np.exp(-1j * math.pi / 4) * np.conj(J)
    else:
        total = np.exp(1j * math.pi / 4) * J + np.exp(-1j * math.pi / 4) * J
    return float(abs(total))


def limit_value_model(n: int) -> float:
    """Exact limit of lam^((n+1)/(2n)) |I(lam, 0)| for x1 x2^2 + x1^n with amplitude = 1 near 0.

    The inner Fresnel integral int exp(i x1 x2^2) dx2 equals sqrt(pi/|x1|) exp(i pi/4 sgn x1),
    so the limit is sqrt(pi) times the one-dimensional oracle integral.
    """
    return math.sqrt(math.pi) * oracle_limit_integral(n)
