"""Command-line front end driven by a flat ``key=value`` configuration file.

Example configuration::

    mass=1.0
    basis.lambda=1.0
    basis.N=40
    energy.min=1.1
    energy.max=3.0
    energy.steps=100
    potential.V.preset=gaussian
    potential.V.height=2.0
    potential.V.width=1.0
    mode=sweep
    output=out.csv

Every output file starts with the fully resolved configuration as
``# key=value`` lines; :func:`config_from_output` turns that header back
into a configuration that reproduces the run.
"""
from __future__ import annotations

import argparse
import io
import math
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import potential as pot
from .basis import BasisParams
from .oracle import OracleError, integrate_dirac
from .potential import PotentialSpec
from .refsol import kinematics_from_energy
from .scattering import JMatrixSolver, energy_sweep, plateau_scan

__all__ = ["ConfigError", "RunConfig", "parse_config", "config_from_output", "build_potential", "run", "main"]

HEADER = "# dirac-jmatrix effective configuration"
SWEEP_COLUMNS = ["energy", "k", "re_T", "im_T", "re_R", "im_R", "T2", "R2", "unitarity_defect", "coupling", "flags"]
VALIDATE_COLUMNS = ["energy", "re_T", "im_T", "re_T_oracle", "im_T_oracle", "abs_diff", "T2", "T2_oracle", "unitarity_defect", "unitarity_defect_oracle", "flags"]
PLATEAU_COLUMNS = ["N", "lambda", "tau", "T2", "in_plateau"]

CHANNELS = ("V", "S", "U")
PRESETS = ("none", "gaussian", "square", "smooth_barrier", "odd_gaussian", "table")
CHANNEL_KEYS = ("preset", "height", "width", "center", "smoothness", "file")

DEFAULTS: dict[str, str] = {
    "mass": "1",
    "basis.lambda": "1",
    "basis.tau": "1",
    "basis.N": "40",
    "basis.K": "auto",
    "basis.scheme": "complete",
    "energy.min": "1.1",
    "energy.max": "3",
    "energy.steps": "50",
    "potential.X": "auto",
    "parity": "auto",
    "mode": "sweep",
    "output": "-",
    "tol.oracle": "1e-10",
    "tol.plateau": "0.0001",
    "plateau.energy": "auto",
    "plateau.lambdas": "0.8,1,1.2,1.4,1.6",
    "plateau.taus": "0.5,1,1.5",
    "plateau.Ns": "20,40",
}
for _ch in CHANNELS:
    DEFAULTS.update(
        {
            f"potential.{_ch}.preset": "none",
            f"potential.{_ch}.height": "0",
            f"potential.{_ch}.width": "1",
            f"potential.{_ch}.center": "0",
            f"potential.{_ch}.smoothness": "0.1",
            f"potential.{_ch}.file": "",
        }
    )


class ConfigError(ValueError):
    """Bad configuration: unknown key, malformed value or inconsistent settings."""


def fmt(x: float) -> str:
    return format(float(x), ".17g")


@dataclass(frozen=True)
class RunConfig:
    values: dict

    def __getitem__(self, key: str) -> str:
        return self.values[key]

    def number(self, key: str) -> float:
        try:
            return float(self.values[key])
        except ValueError:
            raise ConfigError(f"{key}: expected a number, got {self.values[key]!r}") from None

    def integer(self, key: str) -> int:
        v = self.number(key)
        if v != int(v):
            raise ConfigError(f"{key}: expected an integer, got {self.values[key]!r}")
        return int(v)

    def number_list(self, key: str) -> list[float]:
        try:
            return [float(t) for t in self.values[key].split(",") if t.strip()]
        except ValueError:
            raise ConfigError(f"{key}: expected a comma-separated list of numbers") from None

    def echo(self) -> str:
        return "\n".join([HEADER] + [f"# {k}={self.values[k]}" for k in sorted(self.values)]) + "\n"


def parse_config(text: str, overrides=(), base_dir: Path | None = None) -> RunConfig:
    """Parse configuration text; overrides are extra ``key=value`` strings."""
    values = dict(DEFAULTS)
    seen: dict[str, int] = {}
    lines = [(i, ln) for i, ln in enumerate(text.splitlines(), 1)]
    lines += [(f"--set {j}", ln) for j, ln in enumerate(overrides, 1)]
    for where, raw in lines:
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {where}: expected key=value, got {raw.strip()!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in DEFAULTS:
            raise ConfigError(f"line {where}: unknown key {key!r}")
        if isinstance(where, int) and key in seen:
            raise ConfigError(f"line {where}: duplicate key {key!r} (first set on line {seen[key]})")
        if isinstance(where, int):
            seen[key] = where
        values[key] = value
    cfg = RunConfig(values)
    _resolve(cfg, base_dir)
    return cfg


def config_from_output(text: str) -> str:
    """Recover the configuration text echoed at the top of an output file."""
    out = []
    for line in text.splitlines():
        if not line.startswith("#"):
            break
        body = line[1:].strip()
        if "=" in body and not line.startswith(HEADER) and not body.startswith("summary"):
            out.append(body)
    return "\n".join(out) + "\n"


def _normalize_float(cfg: RunConfig, key: str):
    cfg.values[key] = fmt(cfg.number(key))


def _resolve(cfg: RunConfig, base_dir: Path | None):
    v = cfg.values
    for key in ("mass", "basis.lambda", "basis.tau", "energy.min", "energy.max", "tol.oracle", "tol.plateau"):
        _normalize_float(cfg, key)
    for key in ("basis.N", "energy.steps"):
        v[key] = str(cfg.integer(key))
    if v["mode"] not in ("sweep", "plateau", "validate"):
        raise ConfigError(f"mode: expected sweep, plateau or validate, got {v['mode']!r}")
    if v["basis.scheme"] not in ("complete", "minimal"):
        raise ConfigError(f"basis.scheme: expected complete or minimal, got {v['basis.scheme']!r}")
    if v["parity"] not in ("auto", "even", "odd", "none"):
        raise ConfigError(f"parity: expected auto, even, odd or none, got {v['parity']!r}")
    M = cfg.number("mass")
    if M < 0:
        raise ConfigError("mass: must be non-negative")
    N = cfg.integer("basis.N")
    if v["basis.K"] == "auto":
        v["basis.K"] = str(2 * N + 20)
    K = cfg.integer("basis.K")
    v["basis.K"] = str(K)
    try:
        BasisParams(cfg.number("basis.lambda"), cfg.number("basis.tau"), N, K)
    except ValueError as exc:
        raise ConfigError(f"basis: {exc}") from None
    if cfg.integer("energy.steps") < 1:
        raise ConfigError("energy.steps: must be >= 1")
    if not cfg.number("energy.min") > M:
        raise ConfigError("energy.min: must exceed the mass (positive-energy scattering only)")
    if cfg.number("energy.max") < cfg.number("energy.min"):
        raise ConfigError("energy.max: must be >= energy.min")
    for ch in CHANNELS:
        pre = v[f"potential.{ch}.preset"]
        if pre not in PRESETS:
            raise ConfigError(f"potential.{ch}.preset: unknown preset {pre!r}; choose from {', '.join(PRESETS)}")
        for key in ("height", "width", "center", "smoothness"):
            _normalize_float(cfg, f"potential.{ch}.{key}")
        if pre == "table":
            path = Path(v[f"potential.{ch}.file"])
            if base_dir is not None and not path.is_absolute():
                path = base_dir / path
            if not path.is_file():
                raise ConfigError(f"potential.{ch}.file: cannot read {str(path)!r}")
            v[f"potential.{ch}.file"] = str(path.resolve())
    if v["potential.X"] == "auto":
        v["potential.X"] = fmt(_auto_range(cfg))
    else:
        _normalize_float(cfg, "potential.X")
    if v["plateau.energy"] == "auto":
        v["plateau.energy"] = fmt(1.5 * M if M > 0 else 1.0)
    else:
        _normalize_float(cfg, "plateau.energy")
    if not cfg.number("plateau.energy") > M:
        raise ConfigError("plateau.energy: must exceed the mass")
    for key in ("plateau.lambdas", "plateau.taus"):
        vals = cfg.number_list(key)
        if not vals or min(vals) <= 0:
            raise ConfigError(f"{key}: need a non-empty list of positive numbers")
        v[key] = ",".join(fmt(x) for x in vals)
    Ns = cfg.number_list("plateau.Ns")
    if not Ns or any(n != int(n) or n < 2 for n in Ns):
        raise ConfigError("plateau.Ns: need a non-empty list of integers >= 2")
    v["plateau.Ns"] = ",".join(str(int(n)) for n in Ns)
    build_potential(cfg)  # surface preset parameter errors at load time


def _auto_range(cfg: RunConfig) -> float:
    X = 0.0
    for ch in CHANNELS:
        pre = cfg[f"potential.{ch}.preset"]
        c = abs(cfg.number(f"potential.{ch}.center"))
        w = cfg.number(f"potential.{ch}.width")
        if pre in ("gaussian", "odd_gaussian"):
            X = max(X, c + 6.0 * w)
        elif pre == "square":
            X = max(X, c + w)
        elif pre == "smooth_barrier":
            X = max(X, c + w + 25.0 * cfg.number(f"potential.{ch}.smoothness"))
        elif pre == "table":
            data = np.loadtxt(cfg[f"potential.{ch}.file"], comments="#", ndmin=2)
            X = max(X, float(np.max(np.abs(data[:, 0]))))
    return X if X > 0 else 1.0


def _channel_function(cfg: RunConfig, ch: str):
    pre = cfg[f"potential.{ch}.preset"]
    h = cfg.number(f"potential.{ch}.height")
    w = cfg.number(f"potential.{ch}.width")
    c = cfg.number(f"potential.{ch}.center")
    try:
        if pre == "none":
            return pot.zero
        if pre == "gaussian":
            return pot.gaussian(h, w, c)
        if pre == "odd_gaussian":
            return pot.odd_gaussian(h, w, c)
        if pre == "square":
            return pot.square(h, w, c)
        if pre == "smooth_barrier":
            return pot.smooth_barrier(h, w, cfg.number(f"potential.{ch}.smoothness"), c)
        return pot.load_table(cfg[f"potential.{ch}.file"])
    except (ValueError, OSError) as exc:
        raise ConfigError(f"potential.{ch}: {exc}") from None


def build_potential(cfg: RunConfig) -> PotentialSpec:
    funcs = {ch: _channel_function(cfg, ch) for ch in CHANNELS}
    try:
        return PotentialSpec(funcs["V"], funcs["S"], funcs["U"], X=cfg.number("potential.X"), parity=cfg["parity"])
    except ValueError as exc:
        raise ConfigError(f"potential: {exc}") from None


def _params(cfg: RunConfig, lam=None, tau=None, N=None) -> BasisParams:
    return BasisParams(
        cfg.number("basis.lambda") if lam is None else lam,
        cfg.number("basis.tau") if tau is None else tau,
        cfg.integer("basis.N") if N is None else N,
        cfg.integer("basis.K") if N is None else None,
    )


def _energies(cfg: RunConfig) -> np.ndarray:
    steps = cfg.integer("energy.steps")
    lo, hi = cfg.number("energy.min"), cfg.number("energy.max")
    return np.array([lo]) if steps == 1 else np.linspace(lo, hi, steps)


def _row(values) -> str:
    return ",".join(v if isinstance(v, str) else fmt(v) for v in values)


def _flags(res) -> str:
    parts = list(res.flags)
    if res.path == "coupled":
        parts.append("coupled")
    if res.error:
        parts.append("error=" + res.error.replace(",", ";").replace("\n", " "))
    return ";".join(parts)


def _run_sweep(cfg, spec, out) -> int:
    solver = JMatrixSolver(cfg.number("mass"), spec, _params(cfg), cfg["basis.scheme"])
    results = energy_sweep(solver, _energies(cfg))
    out.write(",".join(SWEEP_COLUMNS) + "\n")
    for r in results:
        out.write(
            _row(
                [r.energy, r.k, r.T.real, r.T.imag, r.R.real, r.R.imag, abs(r.T) ** 2, abs(r.R) ** 2,
                 r.unitarity_defect, r.channel_coupling, _flags(r)]
            )
            + "\n"
        )
    return 2 if all(not r.ok for r in results) else 0


def _run_validate(cfg, spec, out) -> int:
    M = cfg.number("mass")
    solver = JMatrixSolver(M, spec, _params(cfg), cfg["basis.scheme"])
    results = energy_sweep(solver, _energies(cfg))
    out.write(",".join(VALIDATE_COLUMNS) + "\n")
    worst = 0.0
    failures = 0
    for r in results:
        try:
            o = integrate_dirac(spec, kinematics_from_energy(M, r.energy, cfg.number("basis.lambda")), cfg.number("tol.oracle"))
            oT, od = o.T, o.unitarity_defect
        except OracleError:
            oT, od = complex(math.nan, math.nan), math.nan
        diff = abs(r.T - oT)
        if r.ok and math.isfinite(diff):
            worst = max(worst, diff)
        else:
            failures += 1
        out.write(
            _row([r.energy, r.T.real, r.T.imag, oT.real, oT.imag, diff, abs(r.T) ** 2, abs(oT) ** 2,
                  r.unitarity_defect, od, _flags(r)])
            + "\n"
        )
    out.write(f"# summary max_abs_diff={fmt(worst)}\n")
    print(f"max |T_jmatrix - T_oracle| = {worst:.3e}", file=sys.stderr)
    return 2 if failures == len(results) else 0


def _run_plateau(cfg, spec, out) -> int:
    Ns = [int(n) for n in cfg.number_list("plateau.Ns")]
    lambdas = cfg.number_list("plateau.lambdas")
    taus = cfg.number_list("plateau.taus")
    report = plateau_scan(
        cfg.number("mass"), spec, cfg.number("plateau.energy"), lambdas, taus, Ns,
        tol=cfg.number("tol.plateau"), scheme=cfg["basis.scheme"],
    )
    out.write(",".join(PLATEAU_COLUMNS) + "\n")
    for N in report.Ns:
        reg = report.regions.get(N)
        grid = report.grids[N]
        for i, lam in enumerate(report.lambdas):
            for j, tau in enumerate(report.taus):
                inside = reg is not None and reg.lam_lo <= i <= reg.lam_hi and reg.tau_lo <= j <= reg.tau_hi
                out.write(_row([str(N), lam, tau, grid[i, j], "1" if inside else "0"]) + "\n")
    for N in report.Ns:
        reg = report.regions.get(N)
        if reg is None:
            out.write(f"# summary N={N} plateau=none max_spread={fmt(report.max_spread[N])}\n")
        else:
            out.write(
                f"# summary N={N} width={fmt(reg.width)} area={reg.area} spread={fmt(reg.spread)} "
                f"T2={fmt(report.interior_value(N))}\n"
            )
    out.write(f"# summary growth_ok={report.growth_ok}\n")
    all_nan = all(np.all(np.isnan(report.grids[N])) for N in report.Ns)
    return 2 if all_nan else 0


def run(cfg: RunConfig, out=None) -> int:
    """Execute one configured run, writing to ``out`` or the configured output."""
    spec = build_potential(cfg)
    buf = io.StringIO()
    buf.write(cfg.echo())
    mode = cfg["mode"]
    runner = {"sweep": _run_sweep, "validate": _run_validate, "plateau": _run_plateau}[mode]
    status = runner(cfg, spec, buf)
    text = buf.getvalue()
    if out is not None:
        out.write(text)
    elif cfg["output"] == "-":
        sys.stdout.write(text)
    else:
        Path(cfg["output"]).write_text(text)
    return status


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="dirac-jmatrix",
        description="Relativistic 1D scattering amplitudes by the J-matrix method.",
    )
    parser.add_argument("config", help="key=value configuration file ('-' for stdin)")
    parser.add_argument("--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE",
                        help="override one configuration entry (repeatable)")
    parser.add_argument("-o", "--output", help="output path; shorthand for --set output=PATH")
    args = parser.parse_args(argv)
    overrides = list(args.overrides)
    if args.output:
        overrides.append(f"output={args.output}")
    try:
        if args.config == "-":
            text, base = sys.stdin.read(), Path.cwd()
        else:
            path = Path(args.config)
            text, base = path.read_text(), path.parent
        cfg = parse_config(text, overrides, base)
    except (ConfigError, OSError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    return run(cfg)


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
