"""Command-line front end: ``ptscatter <command> --w0 .. --v0 .. --cells ..``.

CSV outputs (spectrum, wavefield, potential) keep their frozen header on the
first line; their run metadata goes to a ``<out>.meta.json`` sidecar, or to
stderr when writing to stdout.  JSON outputs embed it under ``metadata``.

Exit codes: 0 success, 1 numeric failure, 2 invalid configuration.
"""
from __future__ import annotations

import argparse
import io
import json
import math
import os
import sys
from collections import Counter
from dataclasses import asdict, dataclass
from datetime import datetime, timezone

import numpy as np

from . import __version__
from .model import SIGN_CONVENTION, PotentialSpec, RegimeTag, potential_value, regime_classify
from .oracle import IntegrationError
from .scattering import (
    invisibility_check,
    spectrum_sweep,
    unitarity_residual,
    wavefield,
)
from .singularity import CANDIDATE_THRESHOLD, ss_refine, ss_scan
from .specfun import SeriesNonConvergence

COMMANDS = ("spectrum", "wavefield", "ss-scan", "invisibility", "unitarity", "potential")
CSV_COMMANDS = ("spectrum", "wavefield", "potential")

SPECTRUM_HEADER = "E,k,T2,RL2,RR2,residual,flag"
WAVEFIELD_HEADER = "x,re_psi,im_psi,abs2"
POTENTIAL_HEADER = "x,re_v,im_v"

DEFAULTS = {
    "w0": None,
    "v0": None,
    "cells": None,
    "emin": 4.05,
    "emax": 40.0,
    "steps": 200,
    "energy": None,
    "side": "left",
    "v0min": 0.6,
    "v0max": 3.0,
    "grid": 200,
    "out": None,
    "format": None,
}

UNITARITY_TOL = 1e-8


class ConfigError(ValueError):
    """Invalid configuration; the message names the offending field."""


@dataclass(frozen=True)
class RunConfig:
    command: str
    w0: float
    v0: float
    cells: int
    emin: float
    emax: float
    steps: int
    energy: float
    side: str
    v0min: float
    v0max: float
    grid: int
    out: str | None
    format: str

    @property
    def spec(self) -> PotentialSpec:
        return PotentialSpec(self.w0, self.v0, self.cells)

    def energies(self) -> np.ndarray:
        return np.linspace(self.emin, self.emax, self.steps)


@dataclass
class RunMetadata:
    version: str
    sign_convention: str
    provenance_counts: dict
    fallback_flags: dict
    timestamp: str | None

    @classmethod
    def collect(cls, results=()) -> "RunMetadata":
        prov = Counter(r.basis_provenance.value for r in results)
        fallback = Counter()
        for r in results:
            if r.fallback_reason:
                fallback[r.fallback_reason] += 1
            if r.normalization == "max_coefficient":
                fallback["max_coefficient_normalization"] += 1
        return cls(__version__, SIGN_CONVENTION, dict(sorted(prov.items())),
                   dict(sorted(fallback.items())), _timestamp())


def _timestamp() -> str | None:
    # reruns must be byte-identical, so the wall clock is never read;
    # SOURCE_DATE_EPOCH pins a timestamp when one is wanted
    epoch = os.environ.get("SOURCE_DATE_EPOCH")
    if not epoch:
        return None
    return datetime.fromtimestamp(int(epoch), tz=timezone.utc).isoformat()


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="ptscatter",
        description="Scattering off a finite PT-symmetric optical lattice.",
        formatter_class=argparse.ArgumentDefaultsHelpFormatter,
    )
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("--config", help="JSON file of option values; flags take precedence")
    p.add_argument("--w0", type=float, help="lattice depth W0 (required)")
    p.add_argument("--v0", type=float, help="gain/loss strength V0 (required)")
    p.add_argument("--cells", type=int, help="number of unit cells n, L = n*pi (required)")
    p.add_argument("--emin", type=float, help="lowest energy, must exceed w0")
    p.add_argument("--emax", type=float, help="highest energy")
    p.add_argument("--steps", type=int, help="energy samples (x samples for wavefield/potential)")
    p.add_argument("--energy", type=float, help="wavefield energy (defaults to emin)")
    p.add_argument("--side", choices=("left", "right"), help="incidence side")
    p.add_argument("--v0min", type=float, help="ss-scan lower v0, above 0.5")
    p.add_argument("--v0max", type=float, help="ss-scan upper v0")
    p.add_argument("--grid", type=int, help="ss-scan grid points per axis")
    p.add_argument("--out", help="output path (stdout when omitted)")
    p.add_argument("--format", choices=("csv", "json"),
                   help="csv for spectrum/wavefield/potential, json otherwise")
    p.set_defaults(**DEFAULTS)
    return p


def _load_config_file(path: str) -> dict:
    try:
        with open(path) as fh:
            data = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"config: cannot read {path}: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError("config: file must hold a JSON object")
    unknown = sorted(set(data) - set(DEFAULTS))
    if unknown:
        raise ConfigError(f"{unknown[0]}: unknown configuration field")
    return data


def parse_config(argv) -> RunConfig:
    parser = build_parser()
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config")
    known, _ = pre.parse_known_args(argv)
    if known.config:
        parser.set_defaults(**_load_config_file(known.config))
    ns = parser.parse_args(argv)
    return validate(ns)


def validate(ns) -> RunConfig:
    for name in ("w0", "v0", "cells"):
        if getattr(ns, name) is None:
            raise ConfigError(f"{name}: required")
    fmt = ns.format or ("csv" if ns.command in CSV_COMMANDS else "json")
    if fmt == "csv" and ns.command not in CSV_COMMANDS:
        raise ConfigError(f"format: {ns.command} writes json only")
    checks = [
        ("w0", ns.w0 > 0 and math.isfinite(ns.w0), "must be positive"),
        ("v0", ns.v0 >= 0 and math.isfinite(ns.v0), "must be non-negative"),
        ("cells", ns.cells >= 1, "must be a positive integer"),
        ("steps", ns.steps >= 2, "must be at least 2"),
        ("side", ns.side in ("left", "right"), "must be left or right"),
    ]
    if ns.command in ("spectrum", "ss-scan", "invisibility", "unitarity"):
        checks += [
            ("emin", ns.emin > ns.w0, f"must exceed w0 = {ns.w0}"),
            ("emax", ns.emax > ns.emin, "must exceed emin"),
        ]
    if ns.command == "ss-scan":
        checks += [
            ("v0min", ns.v0min > 0.5, "must exceed 0.5"),
            ("v0max", ns.v0max > ns.v0min, "must exceed v0min"),
            ("grid", ns.grid >= 3, "must be at least 3"),
        ]
    energy = ns.energy if ns.energy is not None else ns.emin
    if ns.command == "wavefield":
        checks.append(("energy", energy > ns.w0, f"must exceed w0 = {ns.w0}"))
    for name, ok, why in checks:
        if not ok:
            raise ConfigError(f"{name}: {why} (got {getattr(ns, name, energy)})")
    return RunConfig(ns.command, float(ns.w0), float(ns.v0), int(ns.cells), float(ns.emin),
                     float(ns.emax), int(ns.steps), float(energy), ns.side, float(ns.v0min),
                     float(ns.v0max), int(ns.grid), ns.out, fmt)


def _num(x):
    x = float(x)
    return x if math.isfinite(x) else None


def _csv(header: str, rows) -> str:
    buf = io.StringIO()
    buf.write(header + "\n")
    for row in rows:
        buf.write(",".join(v if isinstance(v, str) else repr(float(v)) for v in row) + "\n")
    return buf.getvalue()


def _json(obj) -> str:
    return json.dumps(obj, indent=2, allow_nan=False) + "\n"


def _table_json(header: str, rows) -> list:
    keys = header.split(",")
    return [{k: (v if isinstance(v, str) else _num(v)) for k, v in zip(keys, row)} for row in rows]


def _tabular(cfg: RunConfig, header: str, rows, meta: RunMetadata):
    """(main text, sidecar metadata text or None)."""
    if cfg.format == "csv":
        return _csv(header, rows), _json(asdict(meta))
    doc = {"command": cfg.command, "w0": cfg.w0, "v0": cfg.v0, "cells": cfg.cells,
           "rows": _table_json(header, rows), "metadata": asdict(meta)}
    return _json(doc), None


def cmd_spectrum(cfg: RunConfig):
    results = spectrum_sweep(cfg.spec, cfg.energies())
    rows = [(r.E, r.k, r.T2, r.RL2, r.RR2, r.unitarity_residual, r.flag) for r in results]
    return _tabular(cfg, SPECTRUM_HEADER, rows, RunMetadata.collect(results))


def _x_grid(cfg: RunConfig) -> np.ndarray:
    L = cfg.spec.length
    return np.linspace(-np.pi, L + np.pi, cfg.steps)


def cmd_wavefield(cfg: RunConfig):
    from .scattering import build_basis, scatter

    x = _x_grid(cfg)
    psi = wavefield(cfg.spec, cfg.energy, cfg.side, x)
    meta = RunMetadata.collect([scatter(cfg.spec, cfg.energy, basis=build_basis(cfg.spec, cfg.energy))])
    rows = [(xi, p.real, p.imag, abs(p) ** 2) for xi, p in zip(x, psi)]
    return _tabular(cfg, WAVEFIELD_HEADER, rows, meta)


def cmd_potential(cfg: RunConfig):
    x = _x_grid(cfg)
    v = potential_value(cfg.spec, x)
    rows = [(xi, vi.real, vi.imag) for xi, vi in zip(x, v)]
    return _tabular(cfg, POTENTIAL_HEADER, rows, RunMetadata.collect())


def cmd_ss_scan(cfg: RunConfig):
    found = ss_scan(cfg.w0, cfg.cells, (cfg.v0min, cfg.v0max), (cfg.emin, cfg.emax), cfg.grid,
                    threshold=CANDIDATE_THRESHOLD)
    candidates = []
    for c in found:
        r = ss_refine(c)
        best = r if r.refined else c
        # neighbouring candidates can refine onto the same zero
        if r.refined and any(d["refined"] and abs(d["v0"] - r.v0) < 1e-7 and abs(d["e"] - r.e) < 1e-7
                             for d in candidates):
            continue
        candidates.append({"v0": best.v0, "e": best.e, "absD": best.det_magnitude,
                           "refined": bool(r.refined)})
    doc = {
        "w0": cfg.w0,
        "cells": cfg.cells,
        "window": {"v0min": cfg.v0min, "v0max": cfg.v0max, "emin": cfg.emin,
                   "emax": cfg.emax, "grid": cfg.grid},
        "candidates": candidates,
        "metadata": asdict(RunMetadata.collect()),
    }
    return _json(doc), None


def cmd_invisibility(cfg: RunConfig):
    report = invisibility_check(cfg.spec, cfg.energies())
    if report.refused:
        field_name = "v0" if "v0" in report.refused else "cells"
        raise ConfigError(f"{field_name}: invisibility check refused, {report.refused}")
    doc = {
        "w0": cfg.w0, "v0": cfg.v0, "cells": cfg.cells,
        "passed": report.passed,
        "energies": report.energies,
        "T2": [_num(t) for t in report.T2],
        "RL2": [_num(t) for t in report.RL2],
        "RR2": [_num(t) for t in report.RR2],
        "violations": [{**v, "value": _num(v["value"])} for v in report.violations],
        "finite_left_count": report.finite_left_count,
        "metadata": asdict(RunMetadata.collect()),
    }
    return _json(doc), None


def cmd_unitarity(cfg: RunConfig):
    results = spectrum_sweep(cfg.spec, cfg.energies())
    checked = [r for r in results if r.flag == "ok"]
    scaled = [unitarity_residual(r.T, r.R_L, r.R_R) / (1 + r.T2) for r in checked]
    worst = max(scaled) if scaled else float("nan")
    doc = {
        "w0": cfg.w0, "v0": cfg.v0, "cells": cfg.cells,
        "passed": bool(scaled) and worst < UNITARITY_TOL,
        "tolerance": UNITARITY_TOL,
        "max_scaled_residual": _num(worst),
        "checked": len(checked),
        "skipped_flagged": len(results) - len(checked),
        "metadata": asdict(RunMetadata.collect(results)),
    }
    return _json(doc), None


HANDLERS = {
    "spectrum": cmd_spectrum,
    "wavefield": cmd_wavefield,
    "ss-scan": cmd_ss_scan,
    "invisibility": cmd_invisibility,
    "unitarity": cmd_unitarity,
    "potential": cmd_potential,
}


def _emit(cfg: RunConfig, text: str, sidecar: str | None):
    if cfg.out:
        with open(cfg.out, "w", newline="") as fh:
            fh.write(text)
        if sidecar is not None:
            with open(cfg.out + ".meta.json", "w") as fh:
                fh.write(sidecar)
    else:
        sys.stdout.write(text)
        if sidecar is not None:
            sys.stderr.write(sidecar)


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    try:
        cfg = parse_config(argv)
        if cfg.command == "invisibility" and regime_classify(cfg.v0).tag is not RegimeTag.CRITICAL:
            raise ConfigError("v0: invisibility check refused, v0 must be 0.5")
        text, sidecar = HANDLERS[cfg.command](cfg)
    except SystemExit as exc:  # argparse usage errors exit with 2 already
        return int(exc.code or 0)
    except ConfigError as exc:
        print(f"ptscatter: invalid configuration: {exc}", file=sys.stderr)
        return 2
    except (IntegrationError, SeriesNonConvergence, ArithmeticError,
            np.linalg.LinAlgError) as exc:
        print(f"ptscatter: numeric failure: {exc}", file=sys.stderr)
        return 1
    except ValueError as exc:
        print(f"ptscatter: invalid configuration: {exc}", file=sys.stderr)
        return 2
    _emit(cfg, text, sidecar)
    return 0


if __name__ == "__main__":
    sys.exit(main())
