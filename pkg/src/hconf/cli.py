"""Command-line driver: read a JSON run config, compute, write CSV/JSON results.

Exit status: 0 on success, 1 on an invalid config, 2 when a solver fails or
does not converge.
"""

from __future__ import annotations

import argparse
import csv
import datetime as _dt
import json
import math
import os
import re
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

from hconf.errors import ConfigError, HConfError, SolverError
from hconf.geometry import BaseGeometry, flat_exterior, schwarzschild_base, sphere_quadrature
from hconf.harmonic import BoundaryData, harmonic_extension
from hconf.invariants import invariant_set, mu_direct, mu_formula
from hconf.masschecks import check_I_sum, check_mu_alpha, check_zas_estimate, zas_mass
from hconf.minarea import min_area_radial, schwarzschild_min_area_oracle
from hconf.profile import alpha_C, alpha_radial, default_grid, profile_properties

COMMANDS = ("invariants", "mu", "alpha", "minarea", "checks", "all")
EXIT_OK, EXIT_CONFIG, EXIT_SOLVER = 0, 1, 2
TOLERANCE_KEYS = {"mu_tol": float, "alpha_tol": float, "alpha_max_iter": int}
_PI_RE = re.compile(r"^\s*([0-9.eE+-]*)\s*\*?\s*pi\s*$")


def parse_area(value, field_name: str = "A_values") -> float:
    """Accept numbers or strings such as '64pi' / '64*pi'."""
    if isinstance(value, (int, float)) and not isinstance(value, bool):
        out = float(value)
    elif isinstance(value, str):
        m = _PI_RE.match(value)
        try:
            out = (float(m.group(1)) if m.group(1) else 1.0) * math.pi if m else float(value)
        except ValueError as exc:
            raise ConfigError(field_name, f"cannot parse {value!r}") from exc
    else:
        raise ConfigError(field_name, f"cannot parse {value!r}")
    if not out > 0:
        raise ConfigError(field_name, "values must be positive")
    return out


def build_geometry(geo: dict) -> BaseGeometry:
    if not isinstance(geo, dict) or "kind" not in geo:
        raise ConfigError("geometry", "expected an object with a 'kind'")
    kind = geo["kind"]
    try:
        n = int(geo.get("n", 3))
        if kind == "flat_exterior":
            return flat_exterior(n, float(geo.get("r0", 1.0)))
        if kind == "schwarzschild":
            return schwarzschild_base(n, float(geo["mass"]), geo.get("boundary_rho"))
        if kind == "warped_product":
            return BaseGeometry.from_json(geo)
    except KeyError as exc:
        raise ConfigError(f"geometry.{exc.args[0]}", "missing") from exc
    except (ValueError, TypeError) as exc:
        raise ConfigError("geometry", str(exc)) from exc
    raise ConfigError("geometry.kind", f"unknown kind {kind!r}")


@dataclass
class RunConfig:
    geometry: dict
    command: str
    A_values: list[float] = field(default_factory=list)
    C_schedule: list[float] = field(default_factory=list)
    L_max: int = 6
    resolution: int = 24
    starts: int = 4
    seed: int = 0
    output_dir: str = "out"
    tolerances: dict = field(default_factory=dict)

    @classmethod
    def from_dict(cls, data: dict) -> "RunConfig":
        if not isinstance(data, dict):
            raise ConfigError("config", "top level must be an object")
        known = set(cls.__dataclass_fields__)
        extra = set(data) - known
        if extra:
            raise ConfigError(sorted(extra)[0], "unknown field")
        if "geometry" not in data:
            raise ConfigError("geometry", "missing")
        kw = dict(data)
        kw.setdefault("command", "all")
        kw["A_values"] = [parse_area(a) for a in data.get("A_values", [])]
        try:
            kw["C_schedule"] = [float(c) for c in data.get("C_schedule", [])]
        except (TypeError, ValueError) as exc:
            raise ConfigError("C_schedule", "expected numbers") from exc
        for name in ("L_max", "resolution", "starts", "seed"):
            if name in data and (not isinstance(data[name], int) or isinstance(data[name], bool)):
                raise ConfigError(name, "expected an integer")
        tol = kw.get("tolerances", {})
        if not isinstance(tol, dict):
            raise ConfigError("tolerances", "expected an object")
        for key, value in tol.items():
            if key not in TOLERANCE_KEYS:
                raise ConfigError(f"tolerances.{key}", "unknown tolerance")
            if not isinstance(value, (int, float)) or isinstance(value, bool) or value <= 0:
                raise ConfigError(f"tolerances.{key}", "expected a positive number")
            tol[key] = TOLERANCE_KEYS[key](value)
        cfg = cls(**kw)
        cfg.validate()
        return cfg

    def validate(self):
        if self.command not in COMMANDS:
            raise ConfigError("command", f"must be one of {', '.join(COMMANDS)}")
        needs_A = self.command in ("mu", "alpha", "minarea", "checks", "all")
        if needs_A and not self.A_values:
            raise ConfigError("A_values", f"required for command {self.command!r}")
        if self.command in ("alpha", "all") and not self.C_schedule:
            raise ConfigError("C_schedule", "required for the area profile")
        if any(c < 1 for c in self.C_schedule):
            raise ConfigError("C_schedule", "entries must be at least one")
        if self.starts < 1 or self.resolution < 1 or self.L_max < 0:
            raise ConfigError("starts", "counts must be positive")
        build_geometry(self.geometry)

    def to_json(self) -> dict:
        return dict(self.__dict__)


def _threads() -> int:
    try:
        return max(1, int(os.environ.get("HP_THREADS", "1")))
    except ValueError:
        return 1


def _pmap(fn, items):
    items = list(items)
    if _threads() == 1 or len(items) < 2:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=_threads()) as pool:
        return list(pool.map(fn, items))


def _fmt(x) -> str:
    if isinstance(x, bool):
        return str(x).lower()
    return f"{float(x):.16e}"


def _write_csv(path: Path, header: list[str], rows: list[list]):
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) for v in row])


def _write_json(path: Path, obj):
    path.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")


def cmd_invariants(base, cfg, out: Path) -> bool:
    inv = invariant_set(base)
    _write_json(out / "invariants.json", inv.to_json())
    return True


def cmd_mu(base, cfg, out: Path) -> bool:
    inv = invariant_set(base)
    grid = sphere_quadrature(base.n, cfg.L_max if base.n == 3 else 0)

    def row(A):
        extra = {"tol": cfg.tolerances["mu_tol"]} if "mu_tol" in cfg.tolerances else {}
        d = mu_direct(base, A, starts=cfg.starts, grid=grid, seed=cfg.seed, **extra)
        f = mu_formula(inv, A)
        return [A, f, d.mu, abs(d.mu - f)], d.converged

    res = _pmap(row, cfg.A_values)
    _write_csv(out / "mu_profile.csv", ["A", "mu_formula", "mu_direct", "gap"], [r for r, _ in res])
    return all(c for _, c in res)


def cmd_alpha(base, cfg, out: Path) -> bool:
    grid = default_grid(cfg.resolution)
    p = base.consts.p
    jobs = [
        (A, C) for C in cfg.C_schedule for A in cfg.A_values if C**p * base.boundary_area >= A * (1 - 1e-14)
    ]

    extra = {}
    if "alpha_tol" in cfg.tolerances:
        extra["tol"] = cfg.tolerances["alpha_tol"]
    if "alpha_max_iter" in cfg.tolerances:
        extra["max_iter"] = cfg.tolerances["alpha_max_iter"]

    def run(job):
        A, C = job
        return alpha_C(base, A, C, starts=cfg.starts, grid=grid, seed=cfg.seed, **extra)

    results = _pmap(run, jobs)
    rows = [[r.A, r.C, r.value, alpha_radial(base, r.A), r.converged] for r in results]
    _write_csv(out / "alpha_profile.csv", ["A", "C", "alpha_C", "alpha_radial", "converged"], rows)
    props = {}
    for C in cfg.C_schedule:
        sub = [r for r in results if r.C == C]
        if len(sub) >= 2:
            rep = profile_properties(base, [r.A for r in sub], C, values=[r.value for r in sub])
            props[_fmt(C)] = rep.checks
    findings = [r.counterexample_candidate for r in results if r.counterexample_candidate]
    _write_json(out / "alpha_properties.json", {"properties": props, "findings": findings})
    return all(r.converged for r in results)


def cmd_minarea(base, cfg, out: Path) -> bool:
    grid = sphere_quadrature(base.n, 0)
    entries = []
    for A in cfg.A_values:
        c = (A / base.boundary_area) ** (1.0 / base.consts.p)
        u = harmonic_extension(base, BoundaryData.constant(base, grid, c), 1.0)
        val, S = min_area_radial(base, u)
        entry = {"A": A, "min_area": val, "radius": float(S.radii[0]), "surface": S.to_json()}
        if base.is_flat and base.r0 == 1.0:
            entry["schwarzschild_oracle"] = schwarzschild_min_area_oracle(base.n, A)
        entries.append(entry)
    _write_json(out / "minarea.json", entries)
    return True


def cmd_checks(base, cfg, out: Path) -> bool:
    reports = [check_I_sum(base).to_json(), check_zas_estimate(base).to_json()]
    for A in cfg.A_values:
        reports.append({"A": A, **check_mu_alpha(base, A, alpha_radial(base, A)).to_json()})
    _write_json(out / "checks.json", {"reports": reports, "zas": zas_mass(base).to_json()})
    return True


HANDLERS = {
    "invariants": cmd_invariants,
    "mu": cmd_mu,
    "alpha": cmd_alpha,
    "minarea": cmd_minarea,
    "checks": cmd_checks,
}


def run(cfg: RunConfig) -> int:
    base = build_geometry(cfg.geometry)
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    names = list(HANDLERS) if cfg.command == "all" else [cfg.command]
    status = EXIT_OK
    done = []
    try:
        for name in names:
            if not HANDLERS[name](base, cfg, out):
                status = EXIT_SOLVER
            done.append(name)
    except SolverError as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        status = EXIT_SOLVER
    _write_json(
        out / "run.json",
        {
            "timestamp": _dt.datetime.now(_dt.timezone.utc).isoformat(),
            "config": cfg.to_json(),
            "completed": done,
            "status": status,
        },
    )
    return status


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(prog="hconf", description=__doc__.splitlines()[0])
    ap.add_argument("--config", required=True, help="path to a JSON run config")
    ap.add_argument("--command", choices=COMMANDS, help="override the config command")
    ap.add_argument("--out", help="override the output directory")
    ap.add_argument("--seed", type=int, help="override the random seed")
    args = ap.parse_args(argv)
    try:
        data = json.loads(Path(args.config).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        print(f"config: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        cfg = RunConfig.from_dict(data)
        overrides = {}
        if args.command:
            overrides["command"] = args.command
        if args.out:
            overrides["output_dir"] = args.out
        if args.seed is not None:
            overrides["seed"] = args.seed
        cfg = replace(cfg, **overrides)
        cfg.validate()
    except ConfigError as exc:
        print(f"invalid config: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        return run(cfg)
    except HConfError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())
