"""Command-line interface.

Subcommands: spectral-flow, verify-z, winding-hist, analytic-z, polys, selftest.
Settings come from a JSON file (``--config``) and are overridden by flags.
Every output embeds the tool version, the fully resolved config and the seed;
passing an output file back as ``--config`` reproduces it byte for byte.

Exit codes: 0 pass, 1 verification failure, 2 config error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import sys
from pathlib import Path

import jsonschema
import numpy as np

from . import __version__
from .analytic import PointSets, aiii_z11, aiii_zkk, cii_zkk
from .ensembles import CLASSES, EnsembleSample, make_rng, sample_pair
from .errors import ChiralWindingError, ConfigError, CoincidentPointsError, DomainError
from .field import FORMS, CoefficientField
from .montecarlo import METHODS, mc_partition
from .numerics import pfaffian
from .specfun import lerch_phi, lerch_phi_tail, poly_skew_product, skew_norm, skew_poly_even_coeffs
from .winding import spectral_flow, winding_number, winding_samples

__all__ = ["main", "build_parser", "resolve_config", "CONFIG_SCHEMA", "EXIT_OK", "EXIT_FAIL",
           "EXIT_CONFIG", "EXIT_NUMERIC"]

log = logging.getLogger(__name__)

TOOL = "chiral-winding"
EXIT_OK, EXIT_FAIL, EXIT_CONFIG, EXIT_NUMERIC = 0, 1, 2, 3
COMMANDS = ("spectral-flow", "verify-z", "winding-hist", "analytic-z", "polys", "selftest")

_FOURIER = {"type": "array", "items": {"type": "array", "minItems": 3, "maxItems": 3,
                                       "prefixItems": [{"type": "integer"}, {"type": "number"},
                                                       {"type": "number"}]}}
CONFIG_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "class": {"enum": list(CLASSES)},
        "N": {"type": "integer", "minimum": 1, "maximum": 64},
        "form": {"enum": list(FORMS)},
        "fourier_a": _FOURIER,
        "fourier_b": _FOURIER,
        "time_reversal": {"type": "boolean"},
        "k": {"type": "integer", "minimum": 1, "maximum": 16},
        "q": {"type": "array", "items": {"type": "number"}, "minItems": 1},
        "p": {"type": "array", "items": {"type": "number"}, "minItems": 1},
        "samples": {"type": "integer", "minimum": 1},
        "seed": {"type": "integer", "minimum": 0},
        "method": {"enum": list(METHODS) + [None]},
        "gauge": {"enum": ["results", "derivation"]},
        "grid": {"type": "integer", "minimum": 16},
        "workers": {"type": "integer", "minimum": 1},
        "format": {"enum": ["csv", "json"]},
        "sigma": {"type": "number", "exclusiveMinimum": 0},
    },
}

# Keys each command records in its resolved config.
_FIELD_KEYS = ("class", "N", "form", "fourier_a", "fourier_b", "time_reversal")
_COMMAND_KEYS = {
    "spectral-flow": _FIELD_KEYS + ("seed", "grid", "format"),
    "verify-z": _FIELD_KEYS + ("k", "q", "p", "samples", "seed", "method", "sigma", "workers", "format"),
    "winding-hist": _FIELD_KEYS + ("samples", "seed", "grid", "workers", "format"),
    "analytic-z": _FIELD_KEYS + ("k", "q", "p", "gauge", "format"),
    "polys": ("N", "format"),
    "selftest": ("seed", "format"),
}
_DEFAULTS = {
    "class": "AIII", "N": 2, "form": "trig", "k": 1, "seed": 0, "grid": 100, "method": None,
    "gauge": "results", "workers": 1, "sigma": 3.0,
}
_DEFAULT_SAMPLES = {"verify-z": 100_000, "winding-hist": 1000}
_DEFAULT_FORMAT = {"spectral-flow": "csv", "winding-hist": "csv", "polys": "csv"}


def default_points(k: int) -> tuple[list, list]:
    """q_j = 0.5 + 0.8 j and p_j = 0.9 + 0.8 j for j = 0..k-1."""
    return [0.5 + 0.8 * j for j in range(k)], [0.9 + 0.8 * j for j in range(k)]


# ---------------------------------------------------------------------------
# Config handling
# ---------------------------------------------------------------------------

def _load_config_file(path: str) -> dict:
    """Read a JSON config, or the config embedded in a previous output file."""
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    if text.startswith("#"):
        for line in text.splitlines():
            if line.startswith("# config: "):
                return json.loads(line[len("# config: "):])
        raise ConfigError(f"{path} has no embedded config line")
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
    if isinstance(data, dict) and "config" in data and "version" in data:
        data = data["config"]
    if not isinstance(data, dict):
        raise ConfigError("config must be a JSON object")
    return data


def _parse_floats(text: str) -> list:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError as exc:
        raise ConfigError(f"bad point list {text!r}") from exc


def _validate(cfg: dict) -> None:
    try:
        jsonschema.validate(cfg, CONFIG_SCHEMA)
    except jsonschema.ValidationError as exc:
        where = "/".join(str(x) for x in exc.absolute_path) or "config"
        raise ConfigError(f"{where}: {exc.message}") from exc


def resolve_config(command: str, file_cfg: dict | None = None, overrides: dict | None = None) -> dict:
    """Merge defaults, file config and flag overrides; validate; keep command keys only."""
    if command not in COMMANDS:
        raise ConfigError(f"unknown command {command!r}")
    cfg = dict(file_cfg or {})
    _validate(cfg)
    cfg.update({k: v for k, v in (overrides or {}).items() if v is not None})
    _validate(cfg)
    keys = _COMMAND_KEYS[command]
    out = {}
    for key in keys:
        if key in cfg:
            out[key] = cfg[key]
        elif key in _DEFAULTS:
            out[key] = _DEFAULTS[key]
    out.setdefault("format", _DEFAULT_FORMAT.get(command, "json"))
    if "samples" in keys:
        out.setdefault("samples", _DEFAULT_SAMPLES[command])
    if "q" in keys:
        k = out["k"]
        dq, dp = default_points(k)
        out.setdefault("q", dq)
        out.setdefault("p", dp)
        if len(out["q"]) != len(out["p"]):
            raise ConfigError("q and p must have the same length")
        out["k"] = len(out["q"])
    if "form" in out and out["form"] != "fourier":
        out.pop("fourier_a", None)
        out.pop("fourier_b", None)
    if "time_reversal" in out and not out["time_reversal"]:
        out.pop("time_reversal")
    _validate(out)
    return dict(sorted(out.items()))


def _field(cfg: dict) -> CoefficientField:
    return CoefficientField.from_config({k: cfg[k] for k in _FIELD_KEYS if k in cfg})


# ---------------------------------------------------------------------------
# Output
# ---------------------------------------------------------------------------

def _cplx(z) -> list:
    z = complex(z)
    return [z.real, z.imag]


def _render(command: str, cfg: dict, payload: dict) -> str:
    """Serialize a result. ``payload`` has ``summary`` (dict) and optionally a table."""
    if cfg["format"] == "json":
        doc = {"tool": TOOL, "version": __version__, "command": command, "config": cfg,
               "seed": cfg.get("seed")}
        doc.update(payload["summary"])
        if "table" in payload:
            header, rows = payload["table"]
            doc["columns"] = header
            doc["rows"] = rows
        return json.dumps(doc, indent=2, sort_keys=False) + "\n"
    buf = io.StringIO()
    buf.write(f"# tool: {TOOL} {__version__}\n")
    buf.write(f"# command: {command}\n")
    buf.write(f"# config: {json.dumps(cfg, separators=(',', ':'))}\n")
    buf.write(f"# seed: {json.dumps(cfg.get('seed'))}\n")
    for key, val in payload["summary"].items():
        buf.write(f"# {key}: {json.dumps(val, separators=(',', ':'))}\n")
    writer = csv.writer(buf, lineterminator="\n")
    if "table" in payload:
        header, rows = payload["table"]
        writer.writerow(header)
        for row in rows:
            writer.writerow(["" if x is None else repr(float(x)) if isinstance(x, float) else x for x in row])
    return buf.getvalue()


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------

def cmd_spectral_flow(cfg: dict) -> tuple[dict, int]:
    fld = _field(cfg)
    sample = sample_pair(fld.cls, fld.N, make_rng(cfg["seed"], 0), seed_info=(cfg["seed"], 0))
    flow = spectral_flow(fld, sample, steps=cfg["grid"])
    nh, nk = flow.h_eigs.shape[1], flow.k_eigs.shape[1]
    header = ["p"] + [f"h{j}" for j in range(nh)]
    header += [f"k{j}_{part}" for j in range(nk) for part in ("re", "im")]
    header += ["det_re", "det_im"]
    rows = []
    for i, p in enumerate(flow.p):
        row = [float(p)] + [float(x) for x in flow.h_eigs[i]]
        row += [float(x) for z in flow.k_eigs[i] for x in _cplx(z)]
        row += _cplx(flow.det_k[i])
        rows.append(row)
    return {"summary": {}, "table": (header, rows)}, EXIT_OK


def _analytic_value(fld, cfg) -> complex:
    pts = PointSets(cfg["q"], cfg["p"])
    if fld.cls == "AIII":
        return aiii_zkk(fld, fld.N, pts)
    return cii_zkk(fld, fld.N, pts, gauge=cfg.get("gauge", "results"))


def cmd_analytic_z(cfg: dict) -> tuple[dict, int]:
    fld = _field(cfg)
    return {"summary": {"value": _cplx(_analytic_value(fld, cfg))}}, EXIT_OK


def cmd_verify_z(cfg: dict) -> tuple[dict, int]:
    fld = _field(cfg)
    value = _analytic_value(fld, cfg)
    est = mc_partition(fld, fld.N, cfg["q"], cfg["p"], cfg["samples"], cfg["seed"],
                       cfg["method"], workers=cfg["workers"])
    z = est.zscore(value)
    passed = bool(z <= cfg["sigma"])
    summary = {"analytic": _cplx(value), "estimate": est.to_dict(),
               "zscore": z if math.isfinite(z) else None, "pass": passed}
    return {"summary": summary}, EXIT_OK if passed else EXIT_FAIL


def cmd_winding_hist(cfg: dict) -> tuple[dict, int]:
    fld = _field(cfg)
    hist = winding_samples(fld, fld.N, cfg["samples"], cfg["seed"], grid_points=cfg["grid"],
                           workers=cfg["workers"])
    summary = {"n_samples": hist.n_samples, "rejected": hist.rejected}
    rows = [[w, c] for w, c in hist.counts.items()]
    return {"summary": summary, "table": (["W", "count"], rows)}, EXIT_OK


def cmd_polys(cfg: dict) -> tuple[dict, int]:
    N = cfg["N"]
    header = ["n", "h"] + [f"c{j}" for j in range(N)]
    rows = []
    for n in range(N):
        coeffs = [float(c) for c in skew_poly_even_coeffs(n, N)]
        rows.append([n, float(skew_norm(n, N))] + coeffs + [None] * (N - 1 - n))
    return {"summary": {}, "table": (header, rows)}, EXIT_OK


def _selftest_checks(seed: int) -> list:
    """Fast exact checks; each returns (name, passed, detail)."""
    checks = []
    rng = np.random.default_rng(seed)

    fld = CoefficientField("AIII", "trig", 3)
    err = 0.0
    for q, p in rng.uniform(0, 2 * np.pi, size=(20, 2)):
        target = math.cos(q - p) ** 3
        err = max(err, abs(aiii_z11(fld, 3, q, p) - target) / max(abs(target), 1e-300))
    checks.append(("aiii_z11_identity", err <= 1e-12, err))

    err = 0.0
    for n in range(0, 35, 3):
        for z in (0.0, 0.3, -0.7 + 0.2j, 0.5j, 0.85 * np.exp(1j * 2.0)):
            ref = lerch_phi_tail(n, z)
            err = max(err, abs(lerch_phi(n, z) - ref) / abs(ref))
    checks.append(("lerch_dispatch_vs_tail", err <= 1e-12, err))

    err = 0.0
    for N in range(1, 9):
        for i in range(N):
            qi = skew_poly_even_coeffs(i, N)
            fi = np.zeros(2 * i + 1)
            fi[::2] = qi
            for j in range(N):
                gj = np.zeros(2 * j + 2)
                gj[-1] = 1.0  # odd partner is the monomial z^(2j+1)
                val = poly_skew_product(fi, gj, N)
                target = skew_norm(i, N) if i == j else 0.0
                err = max(err, abs(val - target) / skew_norm(i, N))
    checks.append(("skew_orthogonality", err <= 1e-10, err))

    A = rng.normal(size=(6, 6)) + 1j * rng.normal(size=(6, 6))
    A = A - A.T
    pf = pfaffian(A)
    err = abs(pf * pf - np.linalg.det(A)) / abs(np.linalg.det(A))
    checks.append(("pfaffian_squared_is_det", err <= 1e-10, err))

    fld = CoefficientField("CII", "trig-tr", 2)
    pts = PointSets([0.5, 1.3], [0.9, 1.7])
    a, b = cii_zkk(fld, 2, pts, "results"), cii_zkk(fld, 2, pts, "derivation")
    err = abs(a - b) / abs(a)
    checks.append(("cii_gauge_agreement", err <= 1e-9, err))

    N = 3
    fourier = CoefficientField("AIII", "fourier", N, {1: 1.0})
    sample = EnsembleSample("AIII", np.eye(N, dtype=complex), np.zeros((N, N), complex))
    W = winding_number(fourier, sample).W
    checks.append(("winding_exp_ip", W == N, W))
    return checks


def cmd_selftest(cfg: dict) -> tuple[dict, int]:
    checks = _selftest_checks(cfg["seed"])
    rows = [[name, "pass" if ok else "fail", float(detail)] for name, ok, detail in checks]
    passed = all(ok for _, ok, _ in checks)
    summary = {"pass": passed}
    return {"summary": summary, "table": (["check", "status", "detail"], rows)}, \
        EXIT_OK if passed else EXIT_FAIL


_HANDLERS = {
    "spectral-flow": cmd_spectral_flow,
    "verify-z": cmd_verify_z,
    "winding-hist": cmd_winding_hist,
    "analytic-z": cmd_analytic_z,
    "polys": cmd_polys,
    "selftest": cmd_selftest,
}


# ---------------------------------------------------------------------------
# Entry point
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog=TOOL, description="Chiral random matrix field toolkit.")
    parser.add_argument("--version", action="version", version=f"{TOOL} {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sp = sub.add_parser(name)
        sp.add_argument("--config", help="JSON config file, or a previous output file")
        sp.add_argument("--class", dest="cls", choices=CLASSES)
        sp.add_argument("--n", type=int, help="matrix size N")
        sp.add_argument("--form", choices=FORMS)
        sp.add_argument("--k", type=int, help="number of q/p points (default points)")
        sp.add_argument("--q", help="comma-separated denominator angles")
        sp.add_argument("--p", help="comma-separated numerator angles")
        sp.add_argument("--samples", type=int)
        sp.add_argument("--seed", type=int)
        sp.add_argument("--method", choices=METHODS)
        sp.add_argument("--gauge", choices=("results", "derivation"))
        sp.add_argument("--grid", type=int, help="grid points / steps over one period")
        sp.add_argument("--workers", type=int)
        sp.add_argument("--out", help="output path (default stdout)")
        sp.add_argument("--format", choices=("csv", "json"))
        sp.add_argument("-v", "--verbose", action="store_true")
    return parser


def _overrides(args) -> dict:
    over = {
        "class": args.cls, "N": args.n, "form": args.form, "k": args.k, "samples": args.samples,
        "seed": args.seed, "method": args.method, "gauge": args.gauge, "grid": args.grid,
        "workers": args.workers, "format": args.format,
    }
    if args.q is not None:
        over["q"] = _parse_floats(args.q)
    if args.p is not None:
        over["p"] = _parse_floats(args.p)
    if args.k is not None and args.q is None and args.p is None:
        over["q"], over["p"] = default_points(args.k)
    return over


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        file_cfg = _load_config_file(args.config) if args.config else {}
        cfg = resolve_config(args.command, file_cfg, _overrides(args))
        payload, code = _HANDLERS[args.command](cfg)
        _emit(_render(args.command, cfg, payload), args.out)
        return code
    except (ConfigError, CoincidentPointsError, DomainError, json.JSONDecodeError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (ChiralWindingError, ArithmeticError, np.linalg.LinAlgError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
