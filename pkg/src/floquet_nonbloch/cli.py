"""Command-line front end.

Every subcommand reads an optional YAML run config, applies ``--set`` overrides
and writes data files plus ``manifest.json`` into the output directory::

    task: gbz
    model:
      name: single_band
      preset: reference
      params: {T: 2.0}
    options: {thetaGrid: 720}
    out: runs/gbz

``--set model.params.T=3.4`` addresses nested keys; a bare key that is not a
top-level field (``--set T=3.4``) is taken as a model parameter.
"""

from __future__ import annotations

import argparse
import copy
import json
import os
import sys
import time
from dataclasses import dataclass, field
from importlib import metadata
from pathlib import Path

import numpy as np
import yaml

from .errors import ConfigError, ConvergenceError, FloquetNonBlochError
from .models import MODELS, PRESETS, REQUIRED

TASKS = ("gbz", "agbz", "spectrum", "oracle", "phase-diagram", "dynamics", "critical-period")

# option name -> (default, kind); kinds drive validation
OPTIONS = {
    "thetaGrid": (720, "grid"),
    "lcInit": (1, "posint"),
    "tol": (1e-6, "pos"),
    "imTol": (None, "pos"),
    "ell": (1, "nonneg"),
    "kGrid": (512, "nonneg"),
    "precision": ("auto", "precision"),
    "oracleTol": (1e-7, "pos"),
    "Tbracket": ([0.1, 2.0], "bracket"),
    "scan": (16, "posint"),
    "Ttol": (1e-4, "pos"),
    "nPeriods": (2000, "posint"),
    "initSite": (None, "nonneg"),
    "sweep": (None, "sweep"),
}

TOP_KEYS = ("task", "model", "options", "out", "workers")


@dataclass
class RunConfig:
    task: str
    model: dict
    options: dict = field(default_factory=dict)
    out: str = "out"
    workers: int | None = None

    @classmethod
    def from_dict(cls, d: dict) -> "RunConfig":
        unknown = sorted(set(d) - set(TOP_KEYS))
        if unknown:
            raise ConfigError(f"unknown config key(s): {', '.join(unknown)}")
        model = d.get("model") or {}
        if isinstance(model, str):
            model = {"name": model}
        return cls(
            task=d.get("task", ""),
            model={"name": model.get("name", ""), "preset": model.get("preset"),
                   "params": dict(model.get("params") or {})},
            options=dict(d.get("options") or {}),
            out=str(d.get("out", "out")),
            workers=d.get("workers"),
        )

    def to_dict(self) -> dict:
        return {
            "task": self.task,
            "model": copy.deepcopy(self.model),
            "options": copy.deepcopy(self.options),
            "out": self.out,
            "workers": self.workers,
        }

    def dumps(self) -> str:
        return yaml.safe_dump(self.to_dict(), sort_keys=True)

    @classmethod
    def loads(cls, text: str) -> "RunConfig":
        d = yaml.safe_load(text) or {}
        if not isinstance(d, dict):
            raise ConfigError("a run config must be a mapping")
        return cls.from_dict(d)

    def option(self, name: str):
        return self.options.get(name, OPTIONS[name][0])

    def resolved(self) -> dict:
        """Config with presets and option defaults filled in, as echoed into the manifest."""
        d = self.to_dict()
        params = dict(PRESETS.get(self.model["name"], {})) if self.model.get("preset") == "reference" else {}
        params.update(self.model["params"])
        d["model"]["params"] = params
        d["options"] = {k: self.options.get(k, v[0]) for k, v in OPTIONS.items()}
        d["workers"] = self.workers if self.workers is not None else (os.cpu_count() or 1)
        return d


def _set_path(d: dict, key: str, value) -> None:
    parts = key.split(".")
    if len(parts) == 1 and parts[0] not in TOP_KEYS:
        parts = (["options"] if parts[0] in OPTIONS else ["model", "params"]) + parts
    cur = d
    for p in parts[:-1]:
        nxt = cur.get(p)
        if not isinstance(nxt, dict):
            nxt = cur[p] = {}
        cur = nxt
    cur[parts[-1]] = value


def apply_overrides(d: dict, pairs) -> dict:
    d = copy.deepcopy(d)
    for item in pairs or ():
        key, sep, raw = item.partition("=")
        if not sep or not key:
            raise ConfigError(f"--set expects key=value, got {item!r}")
        _set_path(d, key.strip(), yaml.safe_load(raw))
    return d


def _is_int(x) -> bool:
    return isinstance(x, (int, np.integer)) and not isinstance(x, bool)


def _is_num(x) -> bool:
    return isinstance(x, (int, float, np.integer, np.floating)) and not isinstance(x, bool)


def validate(cfg: RunConfig, requireTask: bool = True) -> list[str]:
    """Static problems with a config; an empty list means it can run."""
    problems: list[str] = []
    if (cfg.task or requireTask) and cfg.task not in TASKS:
        problems.append(f"task must be one of {', '.join(TASKS)}; got {cfg.task!r}")
    name = cfg.model.get("name")
    if name not in MODELS:
        problems.append(f"model.name must be one of {', '.join(MODELS)}; got {name!r}")
    else:
        preset = cfg.model.get("preset")
        if preset not in (None, "reference"):
            problems.append(f"model.preset must be 'reference' or absent; got {preset!r}")
        params = dict(PRESETS[name]) if preset == "reference" else {}
        params.update(cfg.model.get("params") or {})
        swept = set()
        if cfg.task == "phase-diagram" and isinstance(cfg.options.get("sweep"), dict):
            swept = set(cfg.options["sweep"])
        # the critical period is a bulk property: chain length and period are scanned, not given
        unused = {"T", "L", "V"} if cfg.task == "critical-period" else set()
        for key in REQUIRED[name]:
            if key not in params and key not in swept and key not in unused:
                problems.append(f"missing model parameter {key!r}")
        for key, v in params.items():
            if not _is_num(v):
                problems.append(f"model parameter {key!r} must be a number; got {v!r}")
        if "L" in params and _is_num(params["L"]) and (params["L"] < 1 or float(params["L"]) != int(params["L"])):
            problems.append(f"L must be a positive integer; got {params['L']!r}")
        if "T" in params and _is_num(params["T"]) and not params["T"] > 0:
            problems.append(f"T must be positive; got {params['T']!r}")
    for key, v in cfg.options.items():
        if key not in OPTIONS:
            problems.append(f"unknown option {key!r}")
            continue
        kind = OPTIONS[key][1]
        if v is None and OPTIONS[key][0] is None:
            continue
        if kind == "grid" and not (_is_int(v) and v >= 8):
            problems.append(f"{key} must be an integer >= 8; got {v!r}")
        elif kind == "posint" and not (_is_int(v) and v >= 1):
            problems.append(f"{key} must be a positive integer; got {v!r}")
        elif kind == "nonneg" and not (_is_int(v) and v >= 0):
            problems.append(f"{key} must be a non-negative integer; got {v!r}")
        elif kind == "pos" and not (_is_num(v) and v > 0):
            problems.append(f"{key} must be positive; got {v!r}")
        elif kind == "precision" and not (v in ("auto", "double") or (_is_int(v) and v >= 53)):
            problems.append(f"precision must be 'auto', 'double' or a bit count >= 53; got {v!r}")
        elif kind == "bracket" and not (
            isinstance(v, (list, tuple)) and len(v) == 2 and all(_is_num(x) for x in v) and 0 < v[0] < v[1]
        ):
            problems.append(f"Tbracket must be [T_lo, T_hi] with 0 < T_lo < T_hi; got {v!r}")
        elif kind == "sweep":
            problems.extend(_sweep_problems(v))
    if cfg.task == "phase-diagram" and "sweep" not in cfg.options:
        problems.append("phase-diagram needs options.sweep with two parameter lists")
    if cfg.workers is not None and not (_is_int(cfg.workers) and cfg.workers >= 1):
        problems.append(f"workers must be a positive integer; got {cfg.workers!r}")
    return problems


def _sweep_problems(v) -> list[str]:
    if not isinstance(v, dict) or len(v) != 2:
        return ["sweep must map exactly two parameter names to value lists"]
    out = []
    for k, vals in v.items():
        if not isinstance(vals, list) or len(vals) < 2 or not all(_is_num(x) for x in vals):
            out.append(f"sweep axis {k!r} needs a list of at least two numbers")
    return out


# --- tasks -----------------------------------------------------------------


def _protocol(cfg: RunConfig):
    from .models import build_model

    m = cfg.model
    return build_model(m["name"], m["params"], m.get("preset"))


def _write_json(path: Path, obj) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True, default=_json_default)
        fh.write("\n")


def _json_default(x):
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (np.floating,)):
        return float(x)
    if isinstance(x, (complex, np.complexfloating)):
        return [float(np.real(x)), float(np.imag(x))]
    if isinstance(x, np.ndarray):
        return x.tolist()
    raise TypeError(f"not JSON serialisable: {type(x).__name__}")


def _gbz(cfg: RunConfig, out: Path) -> dict:
    from .gbz import floquet_gbz

    p = _protocol(cfg)
    try:
        g = floquet_gbz(p.bulk_hamiltonian(), p.T, cfg.option("lcInit"), cfg.option("thetaGrid"), cfg.option("tol"))
    except ConvergenceError as exc:
        if exc.partial is not None:
            exc.partial.points.sorted().to_csv(out / "gbz_points.csv")
            _write_json(out / "summary.json", exc.partial.summary(cfg.option("imTol")))
        raise
    g.points.sorted().to_csv(out / "gbz_points.csv")
    g.spectrum.to_csv(out / "spectrum.csv", "", p.name)
    summary = g.summary(cfg.option("imTol"))
    _write_json(out / "summary.json", summary)
    return summary


def _spectrum(cfg: RunConfig, out: Path) -> dict:
    from .lattice import pbc_spectrum

    summary = _gbz(cfg, out)
    k = cfg.option("kGrid")
    if k:
        p = _protocol(cfg)
        pbc_spectrum(p.bulk_hamiltonian(), k).to_csv(out / "pbc_spectrum.csv", "", p.name)
    return summary


def _agbz(cfg: RunConfig, out: Path) -> dict:
    from .gbz import _as_charpoly
    from .resultant import agbz_points

    p = _protocol(cfg)
    ell = cfg.option("ell")
    c = agbz_points(_as_charpoly(p.bulk_hamiltonian()), ell, p.T, cfg.option("thetaGrid"))
    c.sorted().to_csv(out / "agbz_points.csv")
    summary = {"T": p.T, "ell": ell, "n_points": len(c)}
    _write_json(out / "summary.json", summary)
    return summary


def _oracle(cfg: RunConfig, out: Path) -> dict:
    from .lattice import oracle_spectrum
    from .observables import eta_fraction

    p = _protocol(cfg)
    res = oracle_spectrum(p, cfg.option("precision"), cfg.option("oracleTol"))
    res.spectrum.to_csv(out / "spectrum.csv", p.L, p.name)
    summary = {
        "T": p.T, "L": p.L, "model": p.name, "params": dict(p.params),
        "eta": eta_fraction(res.spectrum, cfg.option("imTol")),
        "max_im_E": float(np.max(np.abs(res.spectrum.imag))),
        "bits": res.bits, "scale": res.scale,
    }
    _write_json(out / "summary.json", summary)
    return summary


def _phase_diagram(cfg: RunConfig, out: Path) -> dict:
    from .observables import phase_diagram

    sweep = list(cfg.options["sweep"].items())
    params = dict(PRESETS[cfg.model["name"]]) if cfg.model.get("preset") == "reference" else {}
    params.update(cfg.model["params"])
    fixed = {k: v for k, v in params.items() if k not in dict(sweep)}
    workers = cfg.workers if cfg.workers is not None else os.cpu_count()
    pd = phase_diagram(cfg.model["name"], sweep, fixed, cfg.option("imTol"), workers, cfg.option("precision"))
    pd.to_csv(out / "phase_diagram.csv")
    pd.to_json(out / "phase_diagram.json")
    return {"cells": int(pd.values.size), "failed": len(pd.failures)}


def _dynamics(cfg: RunConfig, out: Path) -> dict:
    from .observables import lyapunov

    p = _protocol(cfg)
    prec = cfg.options.get("precision", "double")
    tr = lyapunov(p, cfg.option("initSite"), cfg.option("nPeriods"), prec)
    tr.to_csv(out / "lyapunov.csv")
    summary = {"T": p.T, "L": p.L, "lambda": tr.estimate, "lambda_final": float(tr.lambdaEst[-1]),
               "estimator": "growth rate over the second half of the trace"}
    _write_json(out / "summary.json", summary)
    return summary


def _critical_period(cfg: RunConfig, out: Path) -> dict:
    from .gbz import critical_period

    from .models import bulk_hamiltonian

    m = cfg.model
    params = dict(PRESETS[m["name"]]) if m.get("preset") == "reference" else {}
    params.update(m["params"])
    res = critical_period(bulk_hamiltonian(m["name"], params), tuple(cfg.option("Tbracket")),
                          cfg.option("thetaGrid"), cfg.option("scan"), cfg.option("Ttol"))
    with open(out / "gap_function.csv", "w", encoding="utf-8") as fh:
        fh.write("T,d,crossed\n")
        for T, d, c in res.gapFunction:
            fh.write(f"{T!r},{d!r},{int(c)}\n")
    summary = {
        "Tc": res.Tc, "bracket": list(res.bracket),
        "touchE": [float(np.real(res.touchE)), float(np.imag(res.touchE))],
        "touchBeta": [float(np.real(res.touchBeta)), float(np.imag(res.touchBeta))],
        "touchCurvature": None if np.isnan(res.touchCurvature) else float(res.touchCurvature),
    }
    _write_json(out / "summary.json", summary)
    return summary


RUNNERS = {
    "gbz": _gbz,
    "agbz": _agbz,
    "spectrum": _spectrum,
    "oracle": _oracle,
    "phase-diagram": _phase_diagram,
    "dynamics": _dynamics,
    "critical-period": _critical_period,
}


def _version() -> str:
    try:
        return metadata.version("artifact")
    except metadata.PackageNotFoundError:
        return "0+unknown"


def run(cfg: RunConfig) -> int:
    """Execute a validated config; returns the process exit status."""
    problems = validate(cfg)
    out = Path(cfg.out)
    if problems:
        _report(out, 2, "ConfigError", "; ".join(problems), problems)
        return 2
    out.mkdir(parents=True, exist_ok=True)
    t0 = time.perf_counter()
    manifest = {"tool": "artifact", "version": _version(), "config": cfg.resolved()}
    try:
        manifest["result"] = RUNNERS[cfg.task](cfg, out)
        status = 0
    except ConfigError as exc:
        _report(out, 2, type(exc).__name__, str(exc))
        return 2
    except (FloquetNonBlochError, ArithmeticError, ValueError, np.linalg.LinAlgError) as exc:
        manifest["error"] = {"type": type(exc).__name__, "message": str(exc)}
        status = 1
    manifest["wall_time_s"] = round(time.perf_counter() - t0, 3)
    _write_json(out / "manifest.json", manifest)
    if status:
        _report(out, status, manifest["error"]["type"], manifest["error"]["message"])
    return status


def _report(out: Path, status: int, kind: str, message: str, problems=None) -> None:
    err = {"status": status, "error": kind, "message": message}
    if problems:
        err["problems"] = problems
    try:
        out.mkdir(parents=True, exist_ok=True)
        _write_json(out / "error.json", err)
    except OSError:
        pass
    print(json.dumps(err, sort_keys=True), file=sys.stderr)


def _parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="floquet-nonbloch", description="Floquet non-Bloch band theory toolkit")
    sub = ap.add_subparsers(dest="command", required=True)
    for name in TASKS + ("validate",):
        sp = sub.add_parser(name)
        sp.add_argument("--config", type=Path)
        sp.add_argument("--out")
        sp.add_argument("--workers", type=int)
        sp.add_argument("--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE")
    return ap


def load_config(args) -> RunConfig:
    d: dict = {}
    if args.config is not None:
        try:
            d = yaml.safe_load(args.config.read_text(encoding="utf-8")) or {}
        except (OSError, yaml.YAMLError) as exc:
            raise ConfigError(f"cannot read config {args.config}: {exc}") from exc
        if not isinstance(d, dict):
            raise ConfigError("a run config must be a mapping")
    d = apply_overrides(d, args.overrides)
    if args.command != "validate":
        d["task"] = args.command
    if args.out is not None:
        d["out"] = args.out
    if args.workers is not None:
        d["workers"] = args.workers
    return RunConfig.from_dict(d)


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    try:
        cfg = load_config(args)
    except ConfigError as exc:
        print(json.dumps({"status": 2, "error": "ConfigError", "message": str(exc)}), file=sys.stderr)
        return 2
    if args.command == "validate":
        problems = validate(cfg, requireTask=False)
        # a report, not a failure: the problem list is the result
        print(json.dumps({"problems": problems}, indent=2))
        return 0
    return run(cfg)


if __name__ == "__main__":
    sys.exit(main())
