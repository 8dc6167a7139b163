"""Command-line front end.

Exit codes: 0 ok, 1 configuration / schema, 2 reduction, 3 accuracy, 4 inconclusive.
"""
from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
import time
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

from . import __version__
from .cache import SampleCache, default_cache_path, fmt
from .exceptions import (AccuracyNotReached, AnnulusUnreliable, ConfigError, DomainError, EmptySupport,
                         GammaOutOfRange, InsufficientData, InvalidInvariants, InvalidPhase, InvalidScale,
                         NotDType, OscError, ReductionFailed, WitnessNotFound, ZeroForm)
from .newton import height_report, newton_distance, newton_polygon, taylor_support
from .normalform import reduce_to_normal_form
from .oscint import (Amplitude, AmplitudeKind, Engine, QuadratureConfig, integrate_reduced_model,
                     stable_hash)
from .phase import DPhase, Mode
from .polynomial import PolynomialPhase, as_fraction, model_polynomial
from . import randol as R

EXIT_OK, EXIT_CONFIG, EXIT_REDUCTION, EXIT_ACCURACY, EXIT_INCONCLUSIVE = 0, 1, 2, 3, 4

_EXIT_FOR = (
    ((ConfigError, DomainError, GammaOutOfRange, InvalidPhase, InvalidScale, EmptySupport), EXIT_CONFIG),
    ((NotDType, ReductionFailed, InvalidInvariants, ZeroForm, WitnessNotFound), EXIT_REDUCTION),
    ((AccuracyNotReached, AnnulusUnreliable), EXIT_ACCURACY),
    ((InsufficientData,), EXIT_INCONCLUSIVE),
)


def exit_code_for(exc: BaseException) -> int:
    for types, code in _EXIT_FOR:
        if isinstance(exc, types):
            return code
    return EXIT_CONFIG


# ------------------------------------------------------------------ phase files

class SchemaError(ConfigError):
    def __init__(self, path: str, line: int, message: str):
        super().__init__(f"{path}:{line}: {message}")
        self.line = line


@dataclass(frozen=True)
class PhaseSpec:
    kind: str
    family: DPhase
    polynomial: PolynomialPhase
    amplitude: Amplitude
    raw: Dict[str, Any]


def _line_of(text: str, key: str) -> int:
    needle = f'"{key}"'
    for i, line in enumerate(text.splitlines(), 1):
        if needle in line:
            return i
    return 1


def _rational(value, path, text, key) -> Fraction:
    try:
        if isinstance(value, bool):
            raise TypeError
        if isinstance(value, float):
            return Fraction(repr(value))
        return as_fraction(value)
    except (TypeError, ValueError, ZeroDivisionError):
        raise SchemaError(path, _line_of(text, key), f"{key}: expected an exact rational, got {value!r}")


def _invariant(value, path, text, key, low) -> float:
    if value in ("inf", "oo", "infinity"):
        return math.inf
    if isinstance(value, bool) or not isinstance(value, int):
        raise SchemaError(path, _line_of(text, key), f"{key}: expected an integer or \"inf\", got {value!r}")
    if value < low:
        raise SchemaError(path, _line_of(text, key), f"{key}: must be >= {low}, got {value}")
    return value


def _amplitude(doc, path, text) -> Amplitude:
    a = doc.get("amplitude", {})
    if not isinstance(a, dict):
        raise SchemaError(path, _line_of(text, "amplitude"), "amplitude must be an object")
    unknown = set(a) - {"kind", "radius", "shear"}
    if unknown:
        raise SchemaError(path, _line_of(text, sorted(unknown)[0]), f"amplitude: unknown field {sorted(unknown)[0]!r}")
    kind = a.get("kind", "PRODUCT_BUMP")
    if kind not in {k.value for k in AmplitudeKind}:
        raise SchemaError(path, _line_of(text, "kind"), f"amplitude.kind must be PRODUCT_BUMP or SMOOTH_BUMP, got {kind!r}")
    r = a.get("radius", 0.5)
    rs = r if isinstance(r, list) else [r]
    if len(rs) not in (1, 2) or any(isinstance(x, bool) or not isinstance(x, (int, float)) or not x > 0 for x in rs):
        raise SchemaError(path, _line_of(text, "radius"), f"amplitude.radius must be a positive number or pair, got {r!r}")
    radius = float(rs[0]) if len(rs) == 1 else (float(rs[0]), float(rs[1]))
    shear = a.get("shear")
    if shear is not None:
        # [omega, m]: cutoff taken in (x1, x2 - omega x1^m)
        if (not isinstance(shear, list) or len(shear) != 2 or isinstance(shear[0], bool)
                or not isinstance(shear[0], (int, float)) or isinstance(shear[1], bool)
                or not isinstance(shear[1], int) or shear[1] < 1):
            raise SchemaError(path, _line_of(text, "shear"), f"amplitude.shear must be [omega, m] with m >= 1, got {shear!r}")
        shear = (float(shear[0]), int(shear[1]))
    return Amplitude(radius, AmplitudeKind(kind), shear=shear)


_FIELDS = {
    "model": {"kind", "n", "sign", "amplitude"},
    "normal_form": {"kind", "n", "m", "omega0", "beta0", "b1_0", "b2_0", "amplitude"},
    "polynomial": {"kind", "terms", "amplitude"},
}


def load_phase(path: str) -> PhaseSpec:
    """Parse and validate a phase file; every failure is a SchemaError with a line number."""
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise SchemaError(path, 0, f"cannot read phase file: {exc.strerror}")
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SchemaError(path, exc.lineno, f"invalid JSON: {exc.msg}")
    if not isinstance(doc, dict):
        raise SchemaError(path, 1, "phase file must hold a JSON object")
    kind = doc.get("kind")
    if kind not in _FIELDS:
        raise SchemaError(path, _line_of(text, "kind"), f"kind must be one of {sorted(_FIELDS)}, got {kind!r}")
    unknown = set(doc) - _FIELDS[kind]
    if unknown:
        k = sorted(unknown)[0]
        raise SchemaError(path, _line_of(text, k), f"unknown field {k!r} for kind {kind!r}")
    amp = _amplitude(doc, path, text)
    if kind == "model":
        for k in ("n", "sign"):
            if k not in doc:
                raise SchemaError(path, _line_of(text, "kind"), f"model needs field {k!r}")
        n = _invariant(doc["n"], path, text, "n", 3)
        if n == math.inf:
            raise SchemaError(path, _line_of(text, "n"), "model n must be finite")
        if doc["sign"] not in (1, -1) or isinstance(doc["sign"], bool):
            raise SchemaError(path, _line_of(text, "sign"), f"sign must be 1 or -1, got {doc['sign']!r}")
        fam = DPhase.model(int(n), int(doc["sign"]))
        poly = model_polynomial(int(n), int(doc["sign"]))
    elif kind == "normal_form":
        for k in ("n", "m", "omega0", "beta0", "b1_0", "b2_0"):
            if k not in doc:
                raise SchemaError(path, _line_of(text, "kind"), f"normal_form needs field {k!r}")
        n = _invariant(doc["n"], path, text, "n", 3)
        m = _invariant(doc["m"], path, text, "m", 2)
        if n == math.inf and m == math.inf:
            raise SchemaError(path, _line_of(text, "m"), "m and n cannot both be inf")
        vals = {k: _rational(doc[k], path, text, k) for k in ("omega0", "beta0", "b1_0", "b2_0")}
        if vals["b1_0"] == 0:
            raise SchemaError(path, _line_of(text, "b1_0"), "b1_0 must be nonzero")
        if n != math.inf and vals["beta0"] == 0:
            raise SchemaError(path, _line_of(text, "beta0"), "beta0 must be nonzero for finite n")
        if m != math.inf and vals["omega0"] == 0:
            raise SchemaError(path, _line_of(text, "omega0"), "omega0 must be nonzero for finite m")
        x1, x2 = PolynomialPhase.x1(), PolynomialPhase.x2()
        b = vals["b1_0"] * x1 + vals["b2_0"] * x2 ** 2
        u = x2 if m == math.inf else x2 - vals["omega0"] * x1 ** int(m)
        poly = b * u * u
        if n != math.inf:
            poly = poly + vals["beta0"] * x1 ** int(n)
        fam = DPhase.normal_form(n, m, float(vals["omega0"]), float(vals["beta0"]), float(vals["b1_0"]),
                                 float(vals["b2_0"]))
    else:
        terms = doc.get("terms")
        if not isinstance(terms, list) or not terms:
            raise SchemaError(path, _line_of(text, "terms"), "terms must be a non-empty list of [i, j, \"p/q\"]")
        items = []
        for t in terms:
            if (not isinstance(t, list) or len(t) != 3 or any(isinstance(v, bool) or not isinstance(v, int) or v < 0
                                                              for v in t[:2])):
                raise SchemaError(path, _line_of(text, "terms"), f"bad term {t!r}: expected [i, j, \"p/q\"]")
            items.append((t[0], t[1], _rational(t[2], path, text, "terms")))
        poly = PolynomialPhase.from_terms(items)
        if poly.is_zero():
            raise SchemaError(path, _line_of(text, "terms"), "polynomial is identically zero")
        fam = DPhase.polynomial(poly)
    return PhaseSpec(kind, fam, poly, amp, doc)


# ------------------------------------------------------------------ helpers

def _frac(x) -> str:
    if x == math.inf:
        return "inf"
    x = Fraction(x)
    return str(x.numerator) if x.denominator == 1 else f"{x.numerator}/{x.denominator}"


def _cfg(args) -> QuadratureConfig:
    return QuadratureConfig(abs_tol=args.tol) if args.tol is not None else QuadratureConfig()


def _cache(args) -> SampleCache:
    path = args.cache if args.cache else default_cache_path()
    return SampleCache(path)


def _outputs(args, default: str):
    base = Path(args.out) if args.out else Path(default)
    if base.suffix == ".csv":
        base = base.with_suffix("")
    base.parent.mkdir(parents=True, exist_ok=True)
    return (base.with_suffix(".csv"), base.with_name(base.name + ".manifest.json"),
            base.with_name(base.name + ".report.json"))


def _write_csv(path: Path, manifest: Path, header: Sequence[str], rows: List[Sequence]):
    with open(path, "w", newline="") as fh:
        fh.write(f"# manifest: {manifest.name}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([fmt(v) if isinstance(v, float) else v for v in r])


def _write_json(path: Path, obj):
    path.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")


def _manifest(args, spec: Optional[PhaseSpec], csv_path: Path, t0: float, **extra) -> dict:
    m = {
        "tool": "dtype_osc", "version": __version__, "command": args.command,
        "config": {k: v for k, v in sorted(vars(args).items()) if k not in ("func",)},
        "csv": csv_path.name, "timing_seconds": round(time.perf_counter() - t0, 3),
    }
    if spec is not None:
        m["phase"] = spec.raw
        m["phase_hash"] = R.phase_hash(spec.family)
        m["cfg_hash"] = _cfg(args).hash(spec.amplitude)
    m.update(extra)
    return m


def _lgrid(args) -> R.LambdaGrid:
    return R.LambdaGrid(args.lambda0, args.levels, args.substeps)


def _sgrid(args, family) -> R.SGrid:
    return R.SGrid.quasi_polar(R.gauge_for(family), args.jmin, args.jmax, args.cells_per_annulus)


def _field(args, spec: PhaseSpec, cache: SampleCache) -> R.MaximalField:
    return R.maximal_field(spec.family, args.gamma, _sgrid(args, spec.family), _lgrid(args), _cfg(args),
                           spec.amplitude, cache, workers=args.workers)


def _field_rows(fld: R.MaximalField):
    rows = []
    for c, e in zip(fld.grid.cells, fld.entries):
        rows.append([c.j, e.s[0], e.s[1], R.quasi_distance(e.s, fld.grid.n_gauge), e.value, e.argmax_lambda,
                     int(e.flagged)])
    return rows


def _print(obj):
    sys.stdout.write(json.dumps(obj, indent=2, sort_keys=True) + "\n")


# ------------------------------------------------------------------ commands

def cmd_analyze(args) -> int:
    spec = load_phase(args.phase)
    poly = spec.polynomial
    sup = taylor_support(poly)
    poly_n = newton_polygon(sup)
    dist = newton_distance(poly_n)
    nf = reduce_to_normal_form(poly)
    hr = height_report(nf)
    out = {
        "taylor_support": sorted([p.t1, p.t2] for p in sup.points),
        "vertices": [[v.t1, v.t2] for v in poly_n.vertices],
        "edges": [{"start": [e.start.t1, e.start.t2], "end": [e.end.t1, e.end.t2],
                   "weight": [_frac(e.weight[0]), _frac(e.weight[1])]} for e in poly_n.edges],
        "d": _frac(dist.d),
        "principal_face": {"kind": dist.principal_face.kind,
                           "monomials": sorted([i, j, _frac(c)] for (i, j), c in dist.principal_part.terms.items())},
        "m": _frac(nf.m), "n": _frac(nf.n),
        "regime": nf.regime.value if nf.regime is not None else None,
        "omega0": None if nf.omega0 is None else _frac(nf.omega0),
        "beta0": None if nf.beta0 is None else _frac(nf.beta0),
        "b1_0": _frac(nf.b1_0),
        "linear_change": [[_frac(x) for x in row] for row in nf.linear_change],
        "height": {"d_given": _frac(hr.d_given), "h": _frac(hr.h), "h_lin": _frac(hr.h_lin_paper),
                   "adapted_linear": hr.adapted_linear},
    }
    text = json.dumps(out, indent=2, sort_keys=True) + "\n"
    if args.out:
        Path(args.out).write_text(text)
    sys.stdout.write(text)
    return EXIT_OK


def _sample_json(x) -> dict:
    return {"lambda": fmt(x.lam), "s1": fmt(x.s[0]), "s2": fmt(x.s[1]), "re": fmt(x.value.real),
            "im": fmt(x.value.imag), "abs": fmt(abs(x.value)), "err_est": fmt(x.err_est),
            "engine": x.engine.value, "cfg_hash": x.cfg_hash}


def cmd_integrate(args) -> int:
    spec = load_phase(args.phase)
    if not args.lam > 0:
        raise ConfigError(f"--lambda must be positive, got {args.lam}")
    cfg = _cfg(args)
    cache = _cache(args)
    s = (args.s1, args.s2)
    fam = spec.family
    ph = R.phase_hash(fam)
    out: Dict[str, Any] = {"phase_hash": ph}
    code = EXIT_OK
    engines = ["direct", "reduced"] if args.engine == "both" else [args.engine]
    values = {}
    for eng in engines:
        if eng == "direct":
            x = R.sample(fam, s, args.lam, cfg, spec.amplitude, cache)
        else:
            if fam.mode != Mode.MODEL:
                raise ConfigError("the reduced engine needs a model phase")
            hit = cache.get(ph, cfg.hash(spec.amplitude), args.lam, s, Engine.REDUCED1D)
            if hit is None:
                try:
                    x = integrate_reduced_model(int(fam.n), fam.sign, s, args.lam, cfg, spec.amplitude)
                    cache.put(ph, x)
                except AccuracyNotReached as exc:
                    x = exc.partial
            else:
                x = hit
        out[eng] = _sample_json(x)
        values[eng] = x.value
        if x.flagged:
            out[eng]["flagged"] = True
            code = EXIT_ACCURACY
    if len(values) == 2:
        out["difference"] = fmt(abs(values["direct"] - values["reduced"]))
    _print(out)
    return code


def cmd_decay(args) -> int:
    t0 = time.perf_counter()
    spec = load_phase(args.phase)
    cache = _cache(args)
    lg = R.LambdaGrid(args.lambda0, args.levels)
    fit = R.decay_fit(spec.family, (args.s1, args.s2), lg, _cfg(args), spec.amplitude, cache)
    csv_p, man_p, _ = _outputs(args, "decay")
    rows = [[lam, mag, math.exp(fit.intercept) * lam ** fit.slope] for lam, mag in zip(fit.lambdas, fit.magnitudes)]
    _write_csv(csv_p, man_p, ["lambda", "abs_I", "fit"], rows)
    _write_json(man_p, _manifest(args, spec, csv_p, t0, grids={"lambda": list(lg.values)},
                                 fit={"slope": fit.slope, "intercept": fit.intercept, "residual": fit.residual}))
    _print({"slope": fmt(fit.slope), "intercept": fmt(fit.intercept), "residual": fmt(fit.residual)})
    return EXIT_OK


def cmd_randol(args) -> int:
    t0 = time.perf_counter()
    spec = load_phase(args.phase)
    fld = _field(args, spec, _cache(args))
    csv_p, man_p, _ = _outputs(args, "randol")
    _write_csv(csv_p, man_p, ["j", "s1", "s2", "rho", "M_gamma", "argmax_lambda", "flag"], _field_rows(fld))
    _write_json(man_p, _manifest(args, spec, csv_p, t0, grids=_grid_echo(fld),
                                 flagged_cells=fld.flagged_count()))
    _print({"cells": len(fld.entries), "flagged": fld.flagged_count(), "csv": str(csv_p)})
    return EXIT_OK


def _grid_echo(fld: R.MaximalField) -> dict:
    g = fld.grid
    return {"n_gauge": g.n_gauge, "j_min": g.j_min, "j_max": g.j_max, "cells_per_annulus": g.cells_per_annulus,
            "cells": len(g.cells), "lambda0": fld.lgrid.lambda0, "levels": fld.lgrid.levels,
            "substeps": fld.lgrid.substeps}


def _probe_outputs(args, spec, fld, t0) -> int:
    q_grid = R.parse_q_grid(args.q_grid)
    rep = R.lp_probe(fld, q_grid)
    csv_p, man_p, rep_p = _outputs(args, "lp_probe")
    _write_csv(csv_p, man_p, ["j", "q", "S_j"], [list(r) for r in rep.per_annulus_sums])
    report = rep.to_dict()
    report["p_hat"] = fmt(rep.p_hat_empirical) if not math.isnan(rep.p_hat_empirical) else None
    report["fit_residual"] = fmt(rep.fit_residual) if not math.isnan(rep.fit_residual) else None
    report["slopes"] = [[fmt(q), fmt(a)] for q, a in rep.slopes]
    report["label"] = "M_gamma values are grid lower approximations of the supremum"
    _write_json(rep_p, report)
    _write_json(man_p, _manifest(args, spec, csv_p, t0, grids=_grid_echo(fld), flagged_cells=fld.flagged_count(),
                                 report=rep_p.name, verdict=rep.verdict.value))
    _print(report)
    return EXIT_INCONCLUSIVE if rep.verdict == R.Verdict.INCONCLUSIVE else EXIT_OK


def cmd_lp_probe(args) -> int:
    t0 = time.perf_counter()
    spec = load_phase(args.phase)
    fld = _field(args, spec, _cache(args))
    return _probe_outputs(args, spec, fld, t0)


def cmd_report(args) -> int:
    """Rebuild an lp-probe report from a manifest using cached samples only."""
    t0 = time.perf_counter()
    man = json.loads(Path(args.manifest).read_text())
    cfg_echo = man["config"]
    ns = argparse.Namespace(**cfg_echo)
    ns.command = "report"
    ns.manifest = args.manifest
    ns.out = args.out
    ns.q_grid = args.q_grid or cfg_echo.get("q_grid", "1:8:0.25")
    ns.workers = 1
    phase_path = Path(cfg_echo["phase"])
    if not phase_path.is_absolute():
        phase_path = Path(args.manifest).parent / phase_path if not phase_path.exists() else phase_path
    spec = load_phase(str(phase_path))
    cache = SampleCache(ns.cache if ns.cache else default_cache_path(), readonly=True)
    lg, sg = _lgrid(ns), _sgrid(ns, spec.family)
    ph, ch = R.phase_hash(spec.family), _cfg(ns).hash(spec.amplitude)
    entries = []
    for c in sg.cells:
        samples = [cache.get(ph, ch, lam, c.center) for lam in lg.values]
        if any(x is None for x in samples):
            raise ConfigError(f"cache is missing samples for cell j={c.j} s={c.center}")
        entries.append(R._entry(samples, ns.gamma, c.center))
    regime, n, m = R.family_invariants(spec.family)
    fld = R.MaximalField(float(ns.gamma), sg, tuple(entries), lg, spec.family.canonical(), regime, n, m,
                         spec.amplitude, _cfg(ns))
    return _probe_outputs(ns, spec, fld, t0)


def cmd_exceptional(args) -> int:
    t0 = time.perf_counter()
    cache = _cache(args)
    mu = R.LambdaGrid(args.lambda0, args.levels, args.substeps)
    rep = R.exceptional_blowup_scan(args.m, args.gamma, args.halfwidth, args.offsets, mu_grid=mu,
                                    cfg=_cfg(args), cache=cache)
    csv_p, man_p, rep_p = _outputs(args, "exceptional")
    rows = [[p.s[0], p.s[1], p.s2, p.delta, p.value, p.argmax_lambda, int(p.flagged)] for p in rep.points]
    _write_csv(csv_p, man_p, ["s1", "s2", "s2_level", "delta", "M_gamma", "argmax_lambda", "flag"], rows)
    report = {
        "m": rep.m, "gamma": rep.gamma, "sigma0": fmt(rep.sigma0), "witness_point": [fmt(x) for x in rep.witness_point],
        "across_exponent": fmt(rep.across_exponent), "across_by_side": [fmt(x) for x in rep.across_by_side],
        "along_exponent": fmt(rep.along_exponent),
        "across_predicted": _frac(rep.across_predicted), "along_predicted": _frac(rep.along_predicted),
        "p_star": _frac(rep.exponent_report.p_star_predicted), "p_hat": fmt(rep.exponent_report.p_hat_empirical),
        "verdict": rep.exponent_report.verdict.value,
    }
    _write_json(rep_p, report)
    _write_json(man_p, _manifest(args, None, csv_p, t0, report=rep_p.name, verdict=report["verdict"],
                                 flagged_cells=sum(p.flagged for p in rep.points)))
    _print(report)
    return EXIT_INCONCLUSIVE if rep.exponent_report.verdict == R.Verdict.INCONCLUSIVE else EXIT_OK


# ------------------------------------------------------------------ parser

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="dtype-osc", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, phase=True):
        if phase:
            sp.add_argument("--phase", required=True, help="phase JSON file")
        sp.add_argument("--tol", type=float, default=None, help="absolute quadrature tolerance")
        sp.add_argument("--cache", default=None, help="sample cache file (default: $OSC_CACHE_DIR/samples.jsonl)")
        sp.add_argument("--out", default=None, help="output file or prefix")

    def grids(sp, gamma=True):
        if gamma:
            sp.add_argument("--gamma", type=float, default=1.0)
        sp.add_argument("--lambda0", type=float, default=2.0)
        sp.add_argument("--levels", type=int, default=13)
        sp.add_argument("--substeps", type=int, default=16, help="linear samples per dyadic level")

    a = sub.add_parser("analyze", help="Newton polygon, normal form and regime")
    a.add_argument("--phase", required=True)
    a.add_argument("--out", default=None)
    a.set_defaults(func=cmd_analyze)

    i = sub.add_parser("integrate", help="one sample of I(lambda, s)")
    common(i)
    i.add_argument("--lambda", dest="lam", type=float, required=True)
    i.add_argument("--s1", type=float, default=0.0)
    i.add_argument("--s2", type=float, default=0.0)
    i.add_argument("--engine", choices=["direct", "reduced", "both"], default="direct")
    i.set_defaults(func=cmd_integrate)

    d = sub.add_parser("decay", help="fit log|I| against log lambda")
    common(d)
    d.add_argument("--lambda0", type=float, default=64.0)
    d.add_argument("--levels", type=int, default=11)
    d.add_argument("--s1", type=float, default=0.0)
    d.add_argument("--s2", type=float, default=0.0)
    d.set_defaults(func=cmd_decay)

    for name, fn in (("randol", cmd_randol), ("lp-probe", cmd_lp_probe)):
        r = sub.add_parser(name, help="maximal-function field" if name == "randol" else "empirical critical exponent")
        common(r)
        grids(r)
        r.add_argument("--jmin", type=int, default=2)
        r.add_argument("--jmax", type=int, default=8)
        r.add_argument("--cells-per-annulus", type=int, default=16)
        r.add_argument("--workers", type=int, default=1)
        if name == "lp-probe":
            r.add_argument("--q-grid", default="1:8:0.25")
        r.set_defaults(func=fn)

    e = sub.add_parser("exceptional", help="blow-up scan across the exceptional curve")
    common(e, phase=False)
    grids(e)
    e.set_defaults(levels=11)
    e.add_argument("--m", type=int, default=2)
    e.add_argument("--halfwidth", type=float, default=0.25)
    e.add_argument("--offsets", type=int, default=5)
    e.set_defaults(func=cmd_exceptional)

    rp = sub.add_parser("report", help="rebuild an lp-probe report from cache")
    rp.add_argument("--manifest", required=True)
    rp.add_argument("--q-grid", default=None)
    rp.add_argument("--out", default=None)
    rp.set_defaults(func=cmd_report)
    return p


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    try:
        return args.func(args)
    except OscError as exc:
        if isinstance(exc, AccuracyNotReached) and exc.partial is not None:
            sys.stdout.write(json.dumps({"partial": _sample_json(exc.partial)}, sort_keys=True) + "\n")
        sys.stderr.write(f"error: {exc}\n")
        return exit_code_for(exc)


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
