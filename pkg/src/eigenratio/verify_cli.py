"""Experiment runner and command line interface.

``run_suite`` builds every model of a config, computes its spectrum and runs
each check, writing one JSON report per check and a CSV summary.  Checks are
ASSERTED (PASS/FAIL) when the inequality holds with an explicit constant on
flat models, REPORTED when the constant is left unspecified, SKIPPED when a
precondition such as an exact Cheeger constant is unavailable, and ERROR when
a check raised.  The exit code is 0 iff no row is FAIL.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import re
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Optional

import jsonschema
import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from .concentration import cheng_classical_check, cheng_dimension_free_check, obs_diameter_lower
from .errors import ConfigError, DegenerateSpectrum, H1NotExact
from .graph_core import (
    MeasuredGraph,
    coarea_integral,
    l1_norm,
    layer_cake_integral,
    rayleigh_quotient,
    read_graph,
    total_variation,
)
from .improved_cheeger import (
    functional_certificate,
    higher_order_certificate,
    step_error_bound_check,
)
from .isoperimetry import (
    _model_name,
    buser_ledoux_check,
    disjoint_functions_from_partition,
    exact_h1,
    higher_buser_ledoux_check,
    hk_bruteforce,
    hk_ratio_check,
    hk_spectral_heuristic,
    h1_sweep_upper,
    shifted_cheeger_report,
    HK_EXACT_CAP,
)
from .model_spaces import (
    TorusSpec,
    circle_exact_spectrum,
    circle_graph,
    grid_exact_spectrum,
    ratio_witness,
    torus_exact_spectrum,
    torus_graph,
)
from .reports import (
    CONSTANTS,
    ERROR,
    FAIL,
    PASS,
    RATIO_CONSTANT,
    REPORTED,
    SKIPPED,
    InequalityReport,
    asserted,
    reported,
)
from .spectra import canonical_eigenfunction, compute_spectrum, eigenfunction_split

log = logging.getLogger(__name__)

CSV_COLUMNS = ["check", "model", "k", "lhs", "rhs", "slack", "status"]

_NUMBER_OR_PI = {"oneOf": [{"type": "number"}, {"type": "string", "pattern": r"^\s*[0-9.eE+-]*\s*\*?\s*pi\s*$"}]}

CONFIG_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "required": ["models"],
    "properties": {
        "name": {"type": "string"},
        "method": {"enum": ["dense", "iterative", "auto"]},
        "k_max": {"type": "integer", "minimum": 1},
        "kappa": {"type": "array", "items": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1}},
        "workers": {"type": "integer", "minimum": 1},
        "seed": {"type": "integer"},
        "random_functions": {"type": "integer", "minimum": 0},
        "output": {
            "type": "object",
            "additionalProperties": False,
            "properties": {"dir": {"type": "string"}},
        },
        "caps": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "brute_force_vertices": {"type": "integer", "minimum": 1, "maximum": HK_EXACT_CAP},
                "vertex_cap": {"type": "integer", "minimum": 1},
            },
        },
        "tolerances": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "spectrum_rel": {"type": "number", "exclusiveMinimum": 0},
                "coarea_rel": {"type": "number", "exclusiveMinimum": 0},
                "split_abs": {"type": "number", "exclusiveMinimum": 0},
            },
        },
        "models": {
            "type": "array",
            "minItems": 1,
            "items": {
                "type": "object",
                "additionalProperties": False,
                "required": ["kind"],
                "properties": {
                    "kind": {"enum": ["circle", "torus", "graph"]},
                    "a": _NUMBER_OR_PI,
                    "N": {"type": "integer", "minimum": 3},
                    "n": {"type": "integer", "minimum": 1},
                    "counts": {"type": "array", "items": {"type": "integer", "minimum": 3}},
                    "resolution": {"type": "number", "exclusiveMinimum": 0},
                    "path": {"type": "string"},
                },
            },
        },
        "ratio_scan": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "n": {"type": "array", "items": {"type": "integer", "minimum": 2}},
                "a": {"type": "array", "items": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1}},
                "k_max": {"type": "integer", "minimum": 1},
            },
        },
        "optimality": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "n": {"type": "array", "items": {"type": "integer", "minimum": 2}},
                "a": {"type": "array", "items": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1}},
            },
        },
        "weyl": {
            "type": "object",
            "additionalProperties": False,
            "properties": {"K": {"type": "integer", "minimum": 20}},
        },
    },
}


def parse_length(value) -> float:
    """Number, or a string such as ``"2pi"`` / ``"0.5*pi"`` / ``"pi"``."""
    if isinstance(value, (int, float)):
        return float(value)
    try:
        return float(value)
    except ValueError:
        pass
    m = re.fullmatch(r"\s*([0-9.eE+-]*)\s*\*?\s*pi\s*", str(value))
    if not m:
        raise ConfigError(f"cannot parse length {value!r}")
    coef = m.group(1)
    return (float(coef) if coef else 1.0) * math.pi


@dataclass
class ExperimentConfig:
    models: list
    name: str = "experiment"
    method: str = "auto"
    k_max: int = 8
    kappa: list = field(default_factory=lambda: [0.5, 0.1, 0.01])
    workers: int = 1
    seed: int = 0
    random_functions: int = 5
    output_dir: Optional[str] = None
    brute_force_vertices: int = HK_EXACT_CAP
    vertex_cap: int = 200_000
    spectrum_rel: float = 1e-8
    coarea_rel: float = 1e-10
    split_abs: float = 1e-8
    ratio_scan: dict = field(default_factory=dict)
    optimality: dict = field(default_factory=dict)
    weyl_K: int = 200

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        try:
            jsonschema.validate(data, CONFIG_SCHEMA)
        except jsonschema.ValidationError as exc:
            path = "/".join(str(p) for p in exc.absolute_path) or "<root>"
            raise ConfigError(f"config error at {path}: {exc.message}") from None
        caps = data.get("caps", {})
        tol = data.get("tolerances", {})
        return cls(
            models=list(data["models"]),
            name=data.get("name", "experiment"),
            method=data.get("method", "auto"),
            k_max=data.get("k_max", 8),
            kappa=list(data.get("kappa", [0.5, 0.1, 0.01])),
            workers=data.get("workers", 1),
            seed=data.get("seed", 0),
            random_functions=data.get("random_functions", 5),
            output_dir=data.get("output", {}).get("dir"),
            brute_force_vertices=caps.get("brute_force_vertices", HK_EXACT_CAP),
            vertex_cap=caps.get("vertex_cap", 200_000),
            spectrum_rel=tol.get("spectrum_rel", 1e-8),
            coarea_rel=tol.get("coarea_rel", 1e-10),
            split_abs=tol.get("split_abs", 1e-8),
            ratio_scan=dict(data.get("ratio_scan", {})),
            optimality=dict(data.get("optimality", {})),
            weyl_K=data.get("weyl", {}).get("K", 200),
        )


def load_config(source) -> ExperimentConfig:
    """Load a TOML config from a path, or a bundled config by name."""
    path = Path(str(source))
    if path.is_file():
        text = path.read_text()
    else:
        try:
            text = resources.files("eigenratio.configs").joinpath(f"{source}.toml").read_text()
        except (FileNotFoundError, ModuleNotFoundError):
            raise ConfigError(f"no config file or bundled config named {source!r}") from None
    try:
        data = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"malformed config: {exc}") from None
    return ExperimentConfig.from_dict(data)


def build_model(entry: dict, vertex_cap: int = 200_000) -> MeasuredGraph:
    kind = entry["kind"]
    if kind == "circle":
        return circle_graph(parse_length(entry.get("a", 1.0)), int(entry.get("N", 64)))
    if kind == "torus":
        res = entry.get("counts", entry.get("resolution", 32.0))
        spec = TorusSpec(n=int(entry.get("n", 2)), a=parse_length(entry.get("a", 0.5)), resolution=res)
        return torus_graph(spec, cap=vertex_cap)
    if kind == "graph":
        if "path" not in entry:
            raise ConfigError("graph model needs a path")
        return read_graph(entry["path"])
    raise ConfigError(f"unknown model kind {kind!r}")


def parse_model_string(text: str) -> dict:
    """``circle:a=2pi,N=256``, ``torus:n=2,a=0.5,counts=16x64`` or a graph file path."""
    if ":" not in text:
        return {"kind": "graph", "path": text}
    kind, _, rest = text.partition(":")
    entry = {"kind": kind.strip()}
    if entry["kind"] == "graph":
        entry["path"] = rest
        return entry
    for part in filter(None, rest.split(",")):
        key, _, val = part.partition("=")
        key = key.strip()
        if key == "counts":
            entry[key] = [int(v) for v in val.split("x")]
        elif key in ("N", "n"):
            entry[key] = int(val)
        elif key == "resolution":
            entry[key] = float(val)
        elif key == "a":
            entry[key] = parse_length(val)
        else:
            raise ConfigError(f"unknown model parameter {key!r}")
    return entry


def exact_model_spectrum(G: MeasuredGraph, K: int):
    m = G.model
    if m is None:
        return None
    if m.kind == "circle":
        return circle_exact_spectrum(m.a, K)
    if 0 < m.a < 1:
        return torus_exact_spectrum(m.dim, m.a, K)
    return None


def ratio_bound_check(spectrum, k: int, model: str = "") -> InequalityReport:
    """``lambda_k / lambda_1 <= (16e/(e-1))^2 k^2``."""
    vals = spectrum.eigenvalues
    if len(vals) < 2 or not vals[1] > 0:
        raise DegenerateSpectrum("lambda_1 must be positive")
    if k >= len(vals):
        raise ValueError(f"spectrum has no lambda_{k}")
    return asserted(
        "ratio_bound",
        vals[k] / vals[1],
        RATIO_CONSTANT * k * k,
        constants={"(16e/(e-1))^2": RATIO_CONSTANT},
        note="lambda_k / lambda_1 <= (16e/(e-1))^2 k^2",
        model=model,
        k=k,
    )


def optimality_scan(n: int, a_grid) -> list:
    """Rows ``(a, k, ratio, k^2/9)`` for thin tori; ``exact_ratio`` from lattice enumeration."""
    rows = []
    for a in a_grid:
        k, ratio, lower = ratio_witness(n, a)
        spec = torus_exact_spectrum(n, a, k)
        exact = float(spec.eigenvalues[k] / spec.eigenvalues[1])
        rows.append({
            "n": n,
            "a": float(a),
            "k": k,
            "ratio": ratio,
            "lower_bound": lower,
            "exact_ratio": exact,
            "ratio_over_k2": ratio / (k * k),
            "pass": bool(ratio >= lower),
        })
    return rows


def weyl_diagnostic(spectrum, n: int) -> dict:
    """Log-log slope of ``lambda_k`` against ``k`` over the upper half of the spectrum."""
    vals = np.asarray(spectrum.eigenvalues, dtype=float)
    if vals.shape[0] < 20:
        return {"rows": [], "exponent": None, "expected": 2.0 / n,
                "note": "fewer than 20 eigenvalues; no fit"}
    K = vals.shape[0] - 1
    ks = np.arange(max(1, K // 2), K + 1)
    slope, intercept = np.polyfit(np.log(ks), np.log(vals[ks]), 1)
    return {
        "rows": [{"k": int(k), "lambda_k": float(vals[k])} for k in ks],
        "exponent": float(slope),
        "expected": 2.0 / n,
        "note": "diagnostic only",
    }


def _error_row(name, G, k, exc) -> InequalityReport:
    return InequalityReport(name=name, lhs=math.nan, rhs=math.nan, status=ERROR,
                            note=f"{type(exc).__name__}: {exc}", model=_model_name(G), k=k)


def _skipped(name, G, k, why) -> InequalityReport:
    return InequalityReport(name=name, lhs=math.nan, rhs=math.nan, status=SKIPPED,
                            note=why, model=_model_name(G), k=k)


def _guard(rows, name, G, k, fn):
    try:
        out = fn()
    except H1NotExact as exc:
        rows.append(_skipped(name, G, k, f"H1NotExact: {exc}"))
        return None
    except Exception as exc:  # any module error becomes an ERROR row
        log.debug("check %s failed", name, exc_info=True)
        rows.append(_error_row(name, G, k, exc))
        return None
    if isinstance(out, InequalityReport):
        rows.append(out)
    elif isinstance(out, list):
        rows.extend(out)
    return out


def model_checks(entry: dict, cfg: ExperimentConfig) -> list:
    """All per-model checks, in a fixed order."""
    rows: list = []
    G = build_model(entry, cfg.vertex_cap)
    name = _model_name(G)
    n = G.vertex_count
    k_max = min(cfg.k_max, n - 1)
    K = min(n - 1, max(2 * k_max, k_max))
    S = compute_spectrum(G, K, cfg.method)
    ks = range(1, k_max + 1)

    if G.model is not None:
        def closed_form():
            exact = grid_exact_spectrum(G.model, K)
            dev = float(np.max(np.abs(S.eigenvalues - exact)))
            return asserted("grid_closed_form", dev, cfg.spectrum_rel * max(1.0, float(exact[-1])),
                            note="max |lambda_j(graph) - cycle/Kronecker closed form|", model=name, k=K,
                            rel=0.0)
        _guard(rows, "grid_closed_form", G, K, closed_form)

    f = canonical_eigenfunction(G, S, 1)
    f0, f1 = eigenfunction_split(G, f, float(S.eigenvalues[1]))

    def split_check():
        lhs = max(rayleigh_quotient(G, f0), rayleigh_quotient(G, f1))
        return asserted("eigenfunction_split", lhs, float(S.eigenvalues[1]) + cfg.split_abs, rel=0.0,
                        note="max R(f+), R(f-) <= lambda_1", model=name, k=1)
    _guard(rows, "eigenfunction_split", G, 1, split_check)

    for k in ks:
        def cert(k=k):
            c = functional_certificate(G, f0, k, S)
            rep = c.report(model=name)
            step = step_error_bound_check(G, f0, c.approx, c.lambda_k)
            return [rep, step]
        _guard(rows, "improved_cheeger", G, k, cert)

    for k in ks:
        _guard(rows, "ratio_bound", G, k, lambda k=k: ratio_bound_check(S, k, model=name))
    exact = None
    if G.model is not None:
        try:
            exact = exact_model_spectrum(G, k_max)
        except Exception as exc:
            rows.append(_error_row("ratio_bound_exact", G, None, exc))
    if exact is not None:
        for k in ks:
            def ex(k=k):
                r = ratio_bound_check(exact, k, model=name)
                r.name = "ratio_bound_exact"
                return r
            _guard(rows, "ratio_bound_exact", G, k, ex)

    _guard(rows, "buser_ledoux", G, 1, lambda: buser_ledoux_check(G, S))
    for k in ks:
        _guard(rows, "higher_buser_ledoux", G, k, lambda k=k: higher_buser_ledoux_check(G, S, k))

    h1 = None
    try:
        h1, _ = exact_h1(G)
    except H1NotExact:
        pass
    except Exception as exc:
        rows.append(_error_row("h1", G, 1, exc))

    def sweep_row():
        _, upper = h1_sweep_upper(G, S)
        if h1 is None:
            return reported("h1_sweep_upper", upper, math.nan, model=name, k=1,
                            note="two-sided Fiedler sweep; no exact h1 to compare")
        return asserted("h1_sweep_upper", h1, upper, model=name, k=1,
                        note="exact h1 <= sweep upper bound")
    _guard(rows, "h1_sweep_upper", G, 1, sweep_row)

    for k in ks:
        def multiway(k=k):
            out = []
            if n <= cfg.brute_force_vertices:
                part, hk = hk_bruteforce(G, k)
                source = "exact"
            else:
                part, hk = hk_spectral_heuristic(G, k, S)
                source = "spectral heuristic"
            if h1 is not None:
                r = hk_ratio_check(G, k, h1, hk)
                r.extra["hk_source"] = source
                out.append(r)
            else:
                out.append(_skipped("hk_ratio", G, k, "no exact h1"))
            if 2 * k <= S.K:
                out.append(shifted_cheeger_report(G, S, k, hk))
            else:
                out.append(_skipped("shifted_higher_cheeger", G, k, f"lambda_{2 * k} not computed"))
            funcs = disjoint_functions_from_partition(G, part)
            out.append(higher_order_certificate(G, k, k, funcs, S))
            return out
        _guard(rows, "multiway", G, k, multiway)

    if G.has_lengths:
        for kappa in cfg.kappa:
            try:
                est = obs_diameter_lower(G, kappa)
            except Exception as exc:
                rows.append(_error_row("cheng_dimension_free", G, None, exc))
                continue
            for k in ks:
                _guard(rows, "cheng_dimension_free", G, k,
                       lambda k=k, est=est: cheng_dimension_free_check(G, S, k, kappa, estimate=est))
    else:
        rows.append(_skipped("cheng_dimension_free", G, None, "graph has no edge lengths"))
    if G.model is not None:
        for k in ks:
            _guard(rows, "cheng_classical", G, k, lambda k=k: cheng_classical_check(G, S, k))

    rng = np.random.default_rng(cfg.seed)
    tests = [("f_plus", f0)] + [
        (f"random_{i}", rng.random(n) * (rng.random(n) < 0.7)) for i in range(cfg.random_functions)
    ]
    for label, g in tests:
        def coarea(g=g, label=label):
            tv = total_variation(G, g)
            diff = abs(tv - coarea_integral(G, g))
            lc = abs(l1_norm(G, g) - layer_cake_integral(G, g))
            return asserted("coarea_identity", diff, cfg.coarea_rel * tv, rel=0.0, model=name,
                            note=f"|TV - int mu+(M_f(t)) dt| for {label}",
                            extra={"total_variation": tv, "layer_cake_error": lc})
        _guard(rows, "coarea_identity", G, None, coarea)

    if G.model is not None:
        def weyl():
            spec = exact_model_spectrum(G, cfg.weyl_K)
            table = weyl_diagnostic(spec, G.model.dim)
            return reported("weyl_exponent", table["exponent"], table["expected"], model=name,
                            note="fitted log-log slope of exact lambda_k vs 2/n", extra=table)
        _guard(rows, "weyl_exponent", G, None, weyl)
    return rows


def global_checks(cfg: ExperimentConfig) -> list:
    rows = []
    scan = cfg.ratio_scan
    if scan:
        k_max = scan.get("k_max", 50)
        for n in scan.get("n", [2, 3]):
            for a in scan.get("a", []):
                label = f"torus_exact(n={n},a={a:g})"
                try:
                    spec = torus_exact_spectrum(n, a, k_max)
                    reps = [ratio_bound_check(spec, k, model=label) for k in range(1, k_max + 1)]
                    worst = max(reps, key=lambda r: r.lhs / r.rhs)
                    worst.name = "ratio_scan"
                    worst.note = f"worst k over 1..{k_max}; {sum(r.status == FAIL for r in reps)} violations"
                    worst.extra = {"violations": sum(r.status == FAIL for r in reps)}
                    if any(r.status == FAIL for r in reps):
                        worst.status = FAIL
                    rows.append(worst)
                except Exception as exc:
                    rows.append(InequalityReport(name="ratio_scan", lhs=math.nan, rhs=math.nan,
                                                 status=ERROR, note=str(exc), model=label))
    opt = cfg.optimality
    if opt:
        for n in opt.get("n", [2]):
            for row in optimality_scan(n, opt.get("a", [])):
                rep = asserted("optimality", row["lower_bound"], row["ratio"],
                               model=f"torus_exact(n={n},a={row['a']:g})", k=row["k"],
                               note="k^2/9 <= lambda_k/lambda_1 = a^(-2n)", extra=row)
                if abs(row["exact_ratio"] - row["ratio"]) > 1e-9 * row["ratio"]:
                    rep.status = FAIL
                    rep.note += "; lattice enumeration disagrees with a^(-2n)"
                rows.append(rep)
    return rows


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, float):
        return repr(x)
    return str(x)


def summary_csv(rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for r in rows:
        w.writerow([r.name, r.model, _fmt(r.k), _fmt(float(r.lhs)), _fmt(float(r.rhs)),
                    _fmt(float(r.slack)), r.status])
    return buf.getvalue()


def run_suite(cfg: ExperimentConfig, out_dir=None):
    """Run every check; returns ``(exit_code, rows)`` and writes reports if ``out_dir``."""
    out_dir = out_dir or cfg.output_dir
    with ThreadPoolExecutor(max_workers=cfg.workers) as pool:
        futures = [pool.submit(model_checks, entry, cfg) for entry in cfg.models]
        rows = []
        for entry, fut in zip(cfg.models, futures):
            try:
                rows.extend(fut.result())
            except Exception as exc:
                rows.append(InequalityReport(name="model", lhs=math.nan, rhs=math.nan, status=ERROR,
                                             note=f"{type(exc).__name__}: {exc}", model=str(entry)))
    rows.extend(global_checks(cfg))
    if out_dir is not None:
        write_reports(rows, out_dir)
    code = 0 if not any(r.status == FAIL for r in rows) else 1
    return code, rows


def write_reports(rows, out_dir) -> None:
    out = Path(out_dir)
    (out / "reports").mkdir(parents=True, exist_ok=True)
    for i, r in enumerate(rows):
        slug = re.sub(r"[^A-Za-z0-9]+", "_", f"{r.name}_{r.model}_{r.k}").strip("_")
        (out / "reports" / f"{i:04d}_{slug}.json").write_text(
            json.dumps(r.to_dict(), indent=2, sort_keys=True) + "\n")
    (out / "summary.csv").write_text(summary_csv(rows))
    (out / "constants.json").write_text(json.dumps(CONSTANTS, indent=2, sort_keys=True) + "\n")


# ---------------------------------------------------------------- CLI


def _emit(payload, rows, args) -> None:
    if args.format == "csv":
        text = summary_csv(rows) if rows is not None else _table_csv(payload)
    else:
        text = json.dumps(payload, indent=2, sort_keys=True, default=_json_default) + "\n"
    if args.out:
        Path(args.out).parent.mkdir(parents=True, exist_ok=True)
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)


def _json_default(obj):
    if hasattr(obj, "tolist"):
        return obj.tolist()
    if hasattr(obj, "to_dict"):
        return obj.to_dict()
    raise TypeError(type(obj).__name__)


def _table_csv(payload) -> str:
    rows = payload if isinstance(payload, list) else [payload]
    buf = io.StringIO()
    keys = list(rows[0].keys()) if rows else []
    w = csv.DictWriter(buf, fieldnames=keys, lineterminator="\n", extrasaction="ignore")
    w.writeheader()
    for r in rows:
        w.writerow({k: _fmt(v) for k, v in r.items()})
    return buf.getvalue()


def _graph(args) -> MeasuredGraph:
    if not args.model:
        raise ConfigError("--model is required")
    return build_model(parse_model_string(args.model))


def cmd_spectrum(args):
    G = _graph(args)
    K = min(args.k, G.vertex_count - 1)
    S = compute_spectrum(G, K, args.method)
    payload = [{"j": j, "lambda": float(v), "residual": float(r)}
               for j, (v, r) in enumerate(zip(S.eigenvalues, S.residuals))]
    _emit(payload, None, args)
    return 0


def cmd_cheeger(args):
    G = _graph(args)
    S = compute_spectrum(G, min(max(args.k, 1), G.vertex_count - 1), args.method)
    part, upper = h1_sweep_upper(G, S)
    rows = []
    _guard(rows, "buser_ledoux", G, 1, lambda: buser_ledoux_check(G, S))
    _emit({"h1_sweep_upper": upper, "partition": part.to_dict(),
           "reports": [r.to_dict() for r in rows]}, rows if args.format == "csv" else None, args)
    return 1 if any(r.status == FAIL for r in rows) else 0


def cmd_improved(args):
    G = _graph(args)
    S = compute_spectrum(G, min(args.k, G.vertex_count - 1), args.method)
    f0, _ = eigenfunction_split(G, canonical_eigenfunction(G, S, 1), float(S.eigenvalues[1]))
    rows = []
    for k in range(1, S.K + 1):
        c = functional_certificate(G, f0, k, S)
        rows.append(c.report(model=_model_name(G)))
        rows.append(step_error_bound_check(G, f0, c.approx, c.lambda_k))
    _emit([r.to_dict() for r in rows], rows if args.format == "csv" else None, args)
    return 1 if any(r.status == FAIL for r in rows) else 0


def cmd_multiway(args):
    G = _graph(args)
    S = compute_spectrum(G, min(2 * args.k, G.vertex_count - 1), args.method)
    out = []
    for k in range(1, min(args.k, G.vertex_count - 1) + 1):
        if G.vertex_count <= HK_EXACT_CAP:
            part, hk = hk_bruteforce(G, k)
            source = "exact"
        else:
            part, hk = hk_spectral_heuristic(G, k, S)
            source = "spectral heuristic"
        out.append({"k": k, "hk": hk, "source": source, "partition": part.to_dict()})
    _emit(out, None, args)
    return 0


def cmd_obsdiam(args):
    G = _graph(args)
    S = compute_spectrum(G, min(args.k, G.vertex_count - 1), args.method)
    rows = []
    for kappa in args.kappa:
        est = obs_diameter_lower(G, kappa)
        for k in range(1, S.K + 1):
            rows.append(cheng_dimension_free_check(G, S, k, kappa, estimate=est))
    if G.model is not None:
        rows.extend(cheng_classical_check(G, S, k) for k in range(1, S.K + 1))
    _emit([r.to_dict() for r in rows], rows if args.format == "csv" else None, args)
    return 1 if any(r.status == FAIL for r in rows) else 0


def cmd_ratio_scan(args):
    rows = []
    for n in args.n:
        rows.extend(optimality_scan(n, args.a))
    _emit(rows, None, args)
    return 0 if all(r["pass"] for r in rows) else 1


def cmd_verify_all(args):
    cfg = load_config(args.config)
    if args.method:
        cfg.method = args.method
    if args.k:
        cfg.k_max = args.k
    if args.kappa:
        cfg.kappa = list(args.kappa)
    out = args.out or cfg.output_dir or f"reports/{cfg.name}"
    code, rows = run_suite(cfg, out)
    counts = {s: sum(r.status == s for r in rows) for s in (PASS, FAIL, REPORTED, SKIPPED, ERROR)}
    print(f"{cfg.name}: " + ", ".join(f"{v} {k}" for k, v in counts.items()) + f" -> {out}/summary.csv")
    return code


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="eigenratio", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, k_default=8):
        p.add_argument("--model", help="circle:a=2pi,N=256 | torus:n=2,a=0.5,counts=16x64 | graph file")
        p.add_argument("--k", type=int, default=k_default)
        p.add_argument("--kappa", type=float, nargs="+", default=[0.5, 0.1, 0.01])
        p.add_argument("--method", choices=["dense", "iterative", "auto"], default="auto")
        p.add_argument("--out")
        p.add_argument("--format", choices=["json", "csv"], default="json")

    for name, fn in [("spectrum", cmd_spectrum), ("cheeger", cmd_cheeger),
                     ("improved-cheeger", cmd_improved), ("multiway", cmd_multiway),
                     ("obsdiam", cmd_obsdiam)]:
        p = sub.add_parser(name)
        common(p)
        p.set_defaults(func=fn)

    p = sub.add_parser("ratio-scan")
    common(p)
    p.add_argument("--n", type=int, nargs="+", default=[2, 3])
    p.add_argument("--a", type=float, nargs="+", default=[0.5, 0.25, 0.1])
    p.set_defaults(func=cmd_ratio_scan)

    p = sub.add_parser("verify-all")
    p.add_argument("--config", default="circle_smoke", help="TOML path or bundled config name")
    p.add_argument("--model")
    p.add_argument("--k", type=int)
    p.add_argument("--kappa", type=float, nargs="+")
    p.add_argument("--method", choices=["dense", "iterative", "auto"])
    p.add_argument("--out")
    p.add_argument("--format", choices=["json", "csv"], default="csv")
    p.set_defaults(func=cmd_verify_all)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
