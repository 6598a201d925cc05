"""Command-line front end: ``tbands <command> --config <file>``.

The configuration is a YAML document with exactly one model section
(``toeplitz``, ``chain`` or ``hatano_nelson``) plus optional ``defect``,
``grid`` and ``output`` sections; see the README for the schema. Every
command writes ``<command>.csv`` (or ``.json``) into the output directory
together with a JSON sidecar holding the config hash, package version and
tolerances.
"""
from __future__ import annotations

import argparse
import csv
import dataclasses
import hashlib
import json
import math
import os
import sys
from dataclasses import dataclass, field
from typing import Any, Optional

import numpy as np
import yaml

from . import __version__
from .capacitance import (
    ResonatorChain,
    finite_capacitance,
    greens_closed,
    greens_numeric,
    monomer_defect_frequency,
    out_of_band_eigenvalues,
    to_ktoeplitz,
)
from .errors import ConfigError, NoDefectEigenvalue, ParseError, TBandsError, ValidationError
from .hatano_nelson import HNModel, hn_matrix, hn_spec, localisation_report
from .ktoeplitz import DefectSpec, apply_defect, make_spec, truncate_toeplitz
from .modes import decay_fit, eigenvector_profile, finite_spectrum, pseudospectrum, residual_convergence
from .regions import band_functions, classify, gap_functions, regions
from .tolerances import DEFAULT

COMMANDS = ("bands", "regions", "spectrum", "defect", "green", "pseudospec", "convergence", "hn")
MODEL_KEYS = ("toeplitz", "chain", "hatano_nelson")


@dataclass
class ExperimentConfig:
    model_kind: str
    model: dict
    defect: Optional[dict] = None
    grid: dict = field(default_factory=dict)
    output: dict = field(default_factory=dict)
    raw: dict = field(default_factory=dict)

    def spec(self):
        if self.model_kind == "toeplitz":
            m = self.model
            return make_spec(m["a"], m["b"], m["c"], m.get("L", 1.0))
        if self.model_kind == "chain":
            return to_ktoeplitz(self.chain(), bool(self.model.get("generalized", False)))
        return hn_spec(self.hn_model())

    def chain(self) -> ResonatorChain:
        m = self.model
        return ResonatorChain(m["lengths"], m["spacings"], m["gamma"], m.get("delta", 1e-3),
                              m.get("wave_speeds"))

    def hn_model(self, d: Optional[float] = None) -> HNModel:
        m = self.model
        if d is None:
            d = float(self.defect.get("value", 0.0)) if self.defect else 0.0
        site = self.defect.get("site") if self.defect else None
        return HNModel(float(m.get("v", 0.0)), float(m["gamma"]), d, site)

    @property
    def hash(self) -> str:
        blob = json.dumps(self.raw, sort_keys=True, default=str).encode()
        return hashlib.sha256(blob).hexdigest()


# --------------------------------------------------------------------------
# configuration
# --------------------------------------------------------------------------

def _is_number(x) -> bool:
    return isinstance(x, (int, float)) and not isinstance(x, bool) and math.isfinite(x)


def _num_list(section, key, problems, nonempty=True, positive=False):
    val = section.get(key)
    if not isinstance(val, list) or (nonempty and not val):
        problems.append(f"{key}: expected a nonempty list of numbers")
        return
    if not all(_is_number(x) for x in val):
        problems.append(f"{key}: all entries must be finite numbers")
    elif positive and not all(x > 0 for x in val):
        problems.append(f"{key}: all entries must be positive")


def parse_config(path: str) -> ExperimentConfig:
    """Read and validate a YAML experiment configuration."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            raw = yaml.safe_load(fh)
    except OSError as exc:
        raise ParseError(f"cannot read config {path}: {exc}") from exc
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        where = f" at line {mark.line + 1}, column {mark.column + 1}" if mark else ""
        raise ParseError(f"invalid YAML{where}: {getattr(exc, 'problem', exc)}") from exc
    if not isinstance(raw, dict):
        raise ParseError("config root must be a mapping")
    return validate_config(raw)


def validate_config(raw: dict) -> ExperimentConfig:
    problems = []
    known = set(MODEL_KEYS) | {"defect", "grid", "output"}
    for key in raw:
        if key not in known:
            problems.append(f"{key}: unknown top-level section")
    present = [k for k in MODEL_KEYS if k in raw]
    if len(present) != 1:
        problems.append(f"model: exactly one of {', '.join(MODEL_KEYS)} is required, found {len(present)}")
    kind = present[0] if present else ""
    model = raw.get(kind) or {}
    if present and not isinstance(model, dict):
        problems.append(f"{kind}: must be a mapping")
        model = {}

    if kind == "toeplitz":
        for key in ("a", "b", "c"):
            _num_list(model, key, problems)
        lens = {len(model[k]) for k in ("a", "b", "c") if isinstance(model.get(k), list)}
        if len(lens) > 1:
            problems.append("toeplitz: a, b and c must have the same length")
        if "L" in model and not (_is_number(model["L"]) and model["L"] > 0):
            problems.append("toeplitz.L: must be a positive number")
    elif kind == "chain":
        _num_list(model, "lengths", problems, positive=True)
        _num_list(model, "spacings", problems, positive=True)
        if isinstance(model.get("lengths"), list) and isinstance(model.get("spacings"), list) \
                and len(model["lengths"]) != len(model["spacings"]):
            problems.append("chain: lengths and spacings must have the same length")
        if not (_is_number(model.get("gamma")) and model.get("gamma") != 0):
            problems.append("chain.gamma: must be a nonzero number")
        if "delta" in model and not (_is_number(model["delta"]) and model["delta"] > 0):
            problems.append("chain.delta: must be a positive number")
        if "wave_speeds" in model:
            _num_list(model, "wave_speeds", problems, positive=True)
    elif kind == "hatano_nelson":
        if not (_is_number(model.get("gamma")) and model.get("gamma") > 0):
            problems.append("hatano_nelson.gamma: must be a positive number")
        if "v" in model and not _is_number(model["v"]):
            problems.append("hatano_nelson.v: must be a number")

    defect = raw.get("defect")
    if defect is not None:
        if not isinstance(defect, dict):
            problems.append("defect: must be a mapping")
            defect = None
        else:
            defect = dict(defect)
            dk = defect.setdefault("kind", "additive" if kind == "hatano_nelson" else "multiplicative")
            if dk not in ("multiplicative", "additive"):
                problems.append("defect.kind: must be multiplicative or additive")
            for alias in ("eta", "d"):
                if alias in defect and "value" not in defect:
                    defect["value"] = defect.pop(alias)
            if not _is_number(defect.get("value")):
                problems.append("defect.value: a number (eta or d) is required")
            elif dk == "multiplicative" and not defect["value"] > -1:
                problems.append("defect.value: eta must exceed -1")
            if "site" in defect and not (isinstance(defect["site"], int) and defect["site"] >= 1):
                problems.append("defect.site: must be a positive integer")

    grid = dict(raw.get("grid") or {})
    grid.setdefault("alpha_points", 512)
    grid.setdefault("N", [200])
    if isinstance(grid["N"], int):
        grid["N"] = [grid["N"]]
    if not (isinstance(grid["alpha_points"], int) and grid["alpha_points"] >= 1):
        problems.append("grid.alpha_points: must be a positive integer")
    if not (isinstance(grid["N"], list) and grid["N"] and all(isinstance(n, int) and n >= 2 for n in grid["N"])):
        problems.append("grid.N: must be a nonempty list of integers >= 2")
    if "beta_tilde" in grid:
        bt = grid["beta_tilde"]
        if not (isinstance(bt, dict) and _is_number(bt.get("max")) and bt.get("max") >= 0):
            problems.append("grid.beta_tilde: needs a nonnegative max (and optional min, points)")
    for key in ("lambda_window", "d_range"):
        if key in grid:
            w = grid[key]
            if not (isinstance(w, list) and len(w) == 2 and all(_is_number(x) for x in w) and w[0] <= w[1]):
                problems.append(f"grid.{key}: must be [lo, hi] with lo <= hi")
    if "rect" in grid:
        rc = grid["rect"]
        if not (isinstance(rc, list) and len(rc) == 4 and all(_is_number(x) for x in rc)
                and rc[0] <= rc[1] and rc[2] <= rc[3]):
            problems.append("grid.rect: must be [re_lo, re_hi, im_lo, im_hi]")

    output = dict(raw.get("output") or {})
    output.setdefault("directory", "out")
    output.setdefault("format", "csv")
    output.setdefault("precision", 12)
    if output["format"] not in ("csv", "json"):
        problems.append("output.format: must be csv or json")
    if not (isinstance(output["precision"], int) and 1 <= output["precision"] <= 17):
        problems.append("output.precision: must be an integer in 1..17")

    if problems:
        raise ValidationError(problems)
    return ExperimentConfig(kind, dict(model), defect, grid, output, raw)


# --------------------------------------------------------------------------
# helpers
# --------------------------------------------------------------------------

def _matrix(cfg: ExperimentConfig, N: int, with_defect: bool = True):
    if cfg.model_kind == "hatano_nelson":
        model = cfg.hn_model() if with_defect else cfg.hn_model(0.0)
        return hn_matrix(model, N)
    if cfg.model_kind == "chain":
        M = finite_capacitance(cfg.chain(), N)
    else:
        M = truncate_toeplitz(cfg.spec(), N)
    if with_defect and cfg.defect:
        site = cfg.defect.get("site", N // 2)
        M = apply_defect(M, DefectSpec(site, cfg.defect["kind"], float(cfg.defect["value"])))
    return M


def _alpha_grid(cfg: ExperimentConfig, L: float) -> np.ndarray:
    n = cfg.grid["alpha_points"]
    return -np.pi / L + 2 * np.pi / L * (np.arange(n) + 1) / n


def _lambda_list(cfg: ExperimentConfig) -> np.ndarray:
    if "lambdas" in cfg.grid:
        return np.asarray(cfg.grid["lambdas"], dtype=float)
    if "lambda" in cfg.grid:
        return np.asarray([cfg.grid["lambda"]], dtype=float)
    if "lambda_window" in cfg.grid:
        lo, hi = cfg.grid["lambda_window"]
        return np.linspace(lo, hi, int(cfg.grid.get("lambda_points", 21)))
    raise ValidationError(["grid.lambda, grid.lambdas or grid.lambda_window is required for this command"])


def _defect_lambda(cfg: ExperimentConfig) -> Optional[float]:
    """Closed-form defect frequency for a monomer chain, when configured."""
    if cfg.model_kind == "chain" and cfg.defect and cfg.defect["kind"] == "multiplicative" \
            and len(cfg.model["lengths"]) == 1 and not cfg.model.get("generalized", False):
        return monomer_defect_frequency(cfg.chain(), float(cfg.defect["value"])).lam
    return None


# --------------------------------------------------------------------------
# commands: each returns (columns, rows, extra metadata)
# --------------------------------------------------------------------------

def cmd_bands(cfg):
    spec = cfg.spec()
    alpha = _alpha_grid(cfg, spec.L)
    table = band_functions(spec, alpha)
    rows = []
    for branch in range(spec.k):
        for al, lam in zip(alpha, table.values[:, branch]):
            rows.append([al, branch, spec.r, lam, math.sqrt(lam) if lam >= 0 else None])
    bt = cfg.grid.get("beta_tilde")
    if bt:
        grid = np.linspace(float(bt.get("min", 0.0)), float(bt["max"]), int(bt.get("points", 50)))
        for ast in (0.0, np.pi):
            gt = gap_functions(spec, ast, grid)
            for b, roots in zip(gt.beta_tilde, gt.roots):
                for lam in roots:
                    # report the decay branch r + beta~ (the branch r - beta~ shares lambda)
                    rows.append([ast, "gap", spec.r + b, lam, math.sqrt(lam) if lam >= 0 else None])
    return ["alpha", "branch", "beta", "lambda", "omega"], rows, {"r": spec.r, "k": spec.k}


def cmd_regions(cfg):
    spec = cfg.spec()
    reg = regions(spec)
    rows = [list(r) for r in reg.to_rows()]
    return ["kind", "lo", "hi"], rows, {"r": spec.r, "orientation": spec.orientation}


def cmd_spectrum(cfg):
    spec = cfg.spec()
    rows = []
    for N in cfg.grid["N"]:
        w = np.asarray(finite_spectrum(_matrix(cfg, N)))
        for i, lam in enumerate(w):
            lam = complex(lam)
            region = classify(spec, lam.real).region.value if abs(lam.imag) < 1e-9 else "complex"
            rows.append([N, i, lam.real, lam.imag, region])
    return ["N", "index", "re", "im", "region"], rows, {}


def cmd_defect(cfg, out_dir, fmt, prec):
    if not cfg.defect:
        raise ValidationError(["defect: section required for the defect command"])
    spec = cfg.spec()
    closed = _defect_lambda(cfg)
    rows = []
    for N in cfg.grid["N"]:
        M = _matrix(cfg, N)
        site = cfg.defect.get("site", N // 2)
        lams = out_of_band_eigenvalues(M, spec)
        if lams.size == 0:
            raise NoDefectEigenvalue(f"no out-of-band eigenvalue at N = {N}")
        for lam in lams:
            cls = classify(spec, lam)
            prof = eigenvector_profile(M, lam)
            rl, rr, _, _ = decay_fit(prof, spec.k, center=site - 1)
            rows.append([N, lam, math.sqrt(lam) if lam >= 0 else None, cls.region.value, cls.beta_tilde,
                         cls.rate_left, cls.rate_right, rl, rr, closed])
            mode_rows = [[i + 1, la] for i, la in enumerate(prof.log_abs - np.max(prof.log_abs))]
            _write(os.path.join(out_dir, f"defect_mode_N{N}"), ["site", "log_abs"], mode_rows, fmt, prec)
    cols = ["N", "lambda", "omega", "region", "beta_tilde", "predicted_left", "predicted_right",
            "rate_left", "rate_right", "closed_form_lambda"]
    return cols, rows, {}


def cmd_green(cfg):
    spec = cfg.spec()
    N = cfg.grid["N"][0]
    j = int(cfg.grid.get("source", N // 2))
    rows = []
    for lam in _lambda_list(cfg):
        omega = math.sqrt(lam) if lam >= 0 else None
        if omega is None:
            continue
        cls = classify(spec, lam)
        if spec.k == 1 and cls.region.value != "Open":
            g = greens_closed(spec, omega, j, N)
            method = "closed"
        else:
            g = greens_numeric(spec, omega, j, N)
            method = g.info["kind"]
        rows.append([lam, omega, cls.region.value, cls.beta_tilde, cls.rate_left, cls.rate_right,
                     g.rate_left, g.rate_right, method])
    cols = ["lambda", "omega", "region", "beta_tilde", "predicted_left", "predicted_right",
            "rate_left", "rate_right", "method"]
    return cols, rows, {"N": N, "source": j}


def cmd_pseudospec(cfg):
    N = cfg.grid["N"][0]
    M = _matrix(cfg, N)
    rect = cfg.grid.get("rect")
    if rect is None:
        w = np.asarray(finite_spectrum(M)).real
        pad = 0.1 * max(1.0, float(w.max() - w.min()))
        rect = [float(w.min()) - pad, float(w.max()) + pad, -pad, pad]
    grid = pseudospectrum(M, rect, cfg.grid.get("resolution", 40))
    return ["re", "im", "sigma_min"], [list(r) for r in grid.rows()], {"N": N, "rect": list(rect)}


def cmd_convergence(cfg):
    spec = cfg.spec()
    lam = cfg.grid.get("lambda")
    lam = _defect_lambda(cfg) if lam is None else float(lam)
    if lam is None:
        raise ValidationError(["grid.lambda (or a monomer chain with a defect) is required for convergence"])
    Ns = cfg.grid["N"]
    study = residual_convergence(spec, lam, Ns, use="boundary")
    rows = [[int(N), b, p, r] for N, b, p, r in
            zip(study.Ns, study.boundary_residuals, study.predicted_bound, study.residuals)]
    meta = {"lambda": lam, "kind": study.kind, "predicted_B": study.predicted_B,
            "fitted_slope": study.slope, "r2": study.r2}
    return ["N", "residual", "predicted_bound", "residual_numeric"], rows, meta


def cmd_hn(cfg):
    if cfg.model_kind != "hatano_nelson":
        raise ValidationError(["hn: requires a hatano_nelson model section"])
    lo, hi = cfg.grid.get("d_range", [0.0, 3.0])
    ds = np.linspace(lo, hi, int(cfg.grid.get("d_points", 61)))
    N = cfg.grid["N"][0]
    rows = []
    for d in ds:
        try:
            rep = localisation_report(cfg.hn_model(float(d)), N)
            rows.append([d, rep.lam, rep.rate_left, rep.rate_right, rep.verdict])
        except NoDefectEigenvalue:
            rows.append([d, None, None, None, "none"])
    return ["d", "lambda", "rate_left", "rate_right", "verdict"], rows, {"N": N}


# --------------------------------------------------------------------------
# output
# --------------------------------------------------------------------------

def _fmt(x, prec):
    if x is None:
        return ""
    if isinstance(x, (bool, np.bool_)):
        return str(bool(x)).lower()
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        x = float(x)
        if math.isnan(x):
            return "nan"
        return f"{x:.{prec}g}"
    return str(x)


def _jsonable(x, prec):
    if isinstance(x, (float, np.floating)):
        x = float(x)
        return None if not math.isfinite(x) else float(f"{x:.{prec}g}")
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, dict):
        return {k: _jsonable(v, prec) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v, prec) for v in x]
    return x


def _write(stem, columns, rows, fmt, prec, meta=None):
    if fmt == "csv":
        with open(stem + ".csv", "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(columns)
            for row in rows:
                w.writerow([_fmt(x, prec) for x in row])
    else:
        doc = {"columns": columns, "rows": _jsonable(rows, prec)}
        if meta is not None:
            doc["metadata"] = meta
        with open(stem + ".json", "w", encoding="utf-8") as fh:
            json.dump(doc, fh, indent=1, sort_keys=True)
            fh.write("\n")


def run(command: str, cfg: ExperimentConfig, out_dir: Optional[str] = None,
        fmt: Optional[str] = None, seed: int = 0) -> str:
    """Run one command; returns the path of the main output file."""
    if command not in COMMANDS:
        raise ValidationError([f"command: unknown command {command!r}"])
    out_dir = out_dir or cfg.output["directory"]
    fmt = fmt or cfg.output["format"]
    prec = cfg.output["precision"]
    os.makedirs(out_dir, exist_ok=True)
    if command == "defect":
        cols, rows, extra = cmd_defect(cfg, out_dir, fmt, prec)
    else:
        cols, rows, extra = globals()[f"cmd_{command}"](cfg)
    meta = {
        "command": command,
        "config_hash": cfg.hash,
        "version": __version__,
        "seed": int(seed),
        "model": cfg.model_kind,
        "tolerances": dataclasses.asdict(DEFAULT),
        "rows": len(rows),
        **_jsonable(extra, prec),
    }
    stem = os.path.join(out_dir, command)
    _write(stem, cols, rows, fmt, prec, meta if fmt == "json" else None)
    if fmt == "csv":
        with open(stem + ".meta.json", "w", encoding="utf-8") as fh:
            json.dump(_jsonable(meta, prec), fh, indent=1, sort_keys=True)
            fh.write("\n")
    return stem + "." + fmt


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="tbands", description=__doc__.splitlines()[0])
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("--config", required=True, help="YAML experiment configuration")
    p.add_argument("--out", default=None, help="output directory (overrides output.directory)")
    p.add_argument("--seed", type=int, default=0, help="seed for any randomised step (u64)")
    p.add_argument("--format", choices=("csv", "json"), default=None)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if not 0 <= args.seed < 2 ** 64:
            raise ValidationError(["--seed: must be an unsigned 64-bit integer"])
        cfg = parse_config(args.config)
        path = run(args.command, cfg, args.out, args.format, args.seed)
    except (TBandsError, ValueError, ArithmeticError, np.linalg.LinAlgError) as exc:
        err = {"error": type(exc).__name__, "message": str(exc), "command": args.command}
        if isinstance(exc, ValidationError):
            err["problems"] = exc.problems
        json.dump(err, sys.stderr)
        sys.stderr.write("\n")
        return 2 if isinstance(exc, ConfigError) else 1
    print(path)
    return 0


if __name__ == "__main__":
    sys.exit(main())
