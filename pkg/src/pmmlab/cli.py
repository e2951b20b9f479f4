"""Command-line entry point: ``python3 -m pmmlab <command> [--config FILE] [--key=value ...]``.

Configuration is a flat ``key=value`` file (``#`` starts a comment).  Every key
can also be given as a ``--key`` flag, which wins over the file.  The
environment variable ``PMM_SEED`` overrides ``seed``.  Unknown keys are errors.

Exit status: 0 success, 1 invalid input, 2 numerical failure.
"""

from __future__ import annotations

import os
import sys
import time
from dataclasses import dataclass, field, fields
from pathlib import Path

import numpy as np

from . import convergence, energy, io, kmc, oracle, pde
from .errors import NumericalError, OracleResidualError, PMMError, ValidationError
from .lattice import ModelParams
from .testfunctions import generic_test_functions, tensor_dictionary

COMMANDS = ("simulate", "solve", "energy", "sweep", "hydro", "oracle", "slowbond")
MODEL_KEYS = ("m", "n", "kappa", "theta", "a", "alpha", "beta", "T")

# key -> (default, kind); kinds drive both parsing and serialization
DEFAULTS: dict[str, tuple[object, str]] = {
    "m": (2, "int"),
    "n": (100, "int"),
    "kappa": (1.0, "float"),
    "theta": (1.0, "float"),
    "a": (1.5, "float"),
    "alpha": (0.2, "float"),
    "beta": (0.8, "float"),
    "T": (0.1, "float"),
    "N": (200, "int"),
    "cfl": (0.4, "float"),
    "n_out": (100, "int"),
    "M": (200, "int"),
    "bc": ("robin", "str"),
    "topology": ("interval", "str"),
    "profile": ("0.5", "str"),
    "kappa_grid": ((1.0, 0.3, 0.1, 0.03, 0.01), "floats"),
    "n_grid": ((50, 100, 200), "ints"),
    "n_bins": (10, "int"),
    "n_samples": (5, "int"),
    "c": (None, "optfloat"),
    "J": (3, "int"),
    "warmup": (0.0, "float"),
    "seed": (0, "seed"),
    "out": ("pmm_out", "str"),
}


@dataclass(frozen=True)
class RunConfig:
    command: str
    params: ModelParams
    N: int = 200
    cfl: float = 0.4
    n_out: int = 100
    M: int = 200
    bc: str = "robin"
    topology: str = "interval"
    profile: str = "0.5"
    kappa_grid: tuple = (1.0, 0.3, 0.1, 0.03, 0.01)
    n_grid: tuple = (50, 100, 200)
    n_bins: int = 10
    n_samples: int = 5
    c: float | None = None
    J: int = 3
    warmup: float = 0.0
    seed: int = 0
    out: str = "pmm_out"
    defaulted: frozenset = field(default=frozenset(), compare=False)

    def values(self) -> dict:
        out = dict(self.params.as_dict())
        for f in fields(self):
            if f.name not in ("command", "params", "defaulted"):
                out[f.name] = getattr(self, f.name)
        return out

    def boundary(self) -> pde.BoundaryKind:
        return pde.BoundaryKind.parse(self.bc, self.params.kappa if self.bc in ("robin", "periodic") else None)

    def initial_profile(self):
        return parse_profile(self.profile, self.params.alpha, self.params.beta)


# ---------------------------------------------------------------------------
# parsing

def _convert(key: str, raw: str):
    kind = DEFAULTS[key][1]
    text = raw.strip()
    try:
        if kind == "int":
            v = float(text)
            if v != int(v):
                raise ValueError
            return int(v)
        if kind == "float":
            return float(text)
        if kind == "optfloat":
            return None if text.lower() in ("", "none", "auto") else float(text)
        if kind == "floats":
            return tuple(float(t) for t in text.split(",") if t.strip())
        if kind == "ints":
            return tuple(int(t) for t in text.split(",") if t.strip())
        if kind == "seed":
            v = int(text, 0)
            if not 0 <= v < 2**64:
                raise ValidationError(f"seed={v} must be a 64-bit unsigned integer")
            return v
        return text
    except ValueError:
        raise ValidationError(f"{key}={raw!r} is not a valid {kind} value") from None


def _format(key: str, value) -> str:
    kind = DEFAULTS[key][1]
    if kind in ("floats", "ints"):
        return ",".join(repr(v) for v in value)
    if kind == "optfloat":
        return "auto" if value is None else repr(value)
    if kind == "float":
        return repr(float(value))
    return str(value)


def read_config_file(path) -> dict[str, str]:
    path = Path(path)
    if not path.is_file():
        raise ValidationError(f"config file {path} does not exist")
    out: dict[str, str] = {}
    for lineno, line in enumerate(path.read_text().splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValidationError(f"{path}:{lineno}: expected key=value, got {line!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        out[key] = value
    return out


def _parse_flags(argv: list[str]) -> tuple[str | None, str | None, dict[str, str]]:
    command, config_path, flags = None, None, {}
    i = 0
    while i < len(argv):
        tok = argv[i]
        if tok.startswith("--"):
            body = tok[2:]
            if "=" in body:
                key, value = body.split("=", 1)
            else:
                if i + 1 >= len(argv):
                    raise ValidationError(f"flag --{body} needs a value")
                key, value = body, argv[i + 1]
                i += 1
            if key == "config":
                config_path = value
            else:
                flags[key] = value
        elif command is None:
            command = tok
        else:
            raise ValidationError(f"unexpected argument {tok!r}")
        i += 1
    return command, config_path, flags


def parse_config(path=None, flags=None, command: str | None = None, env=None) -> RunConfig:
    """Merge defaults, file values, flags and ``PMM_SEED`` into a validated :class:`RunConfig`.

    ``flags`` is a mapping or an argv-style list.  ``command`` may also be given
    as a ``command`` key in the file or as the first positional argument.
    """
    env = os.environ if env is None else env
    raw: dict[str, str] = {}
    if isinstance(flags, (list, tuple)):
        cmd_arg, cfg_arg, flag_map = _parse_flags(list(flags))
        command = command or cmd_arg
        path = path or cfg_arg
    else:
        flag_map = dict(flags or {})
    if path is not None:
        raw.update(read_config_file(path))
    raw.update({k: str(v) for k, v in flag_map.items()})
    command = command or raw.pop("command", None)
    raw.pop("command", None)
    if command not in COMMANDS:
        raise ValidationError(f"command must be one of {', '.join(COMMANDS)}, got {command!r}")
    unknown = sorted(set(raw) - set(DEFAULTS))
    if unknown:
        raise ValidationError(f"unknown configuration key(s): {', '.join(unknown)}")
    if "PMM_SEED" in env:
        raw["seed"] = env["PMM_SEED"]
    values, defaulted = {}, set()
    for key, (default, _) in DEFAULTS.items():
        if key in raw:
            values[key] = _convert(key, raw[key])
        else:
            values[key] = default
            defaulted.add(key)
    params = ModelParams(**{k: values.pop(k) for k in MODEL_KEYS})
    cfg = RunConfig(command=command, params=params, defaulted=frozenset(defaulted), **values)
    _validate(cfg)
    return cfg


def _validate(cfg: RunConfig) -> None:
    if cfg.N < 8:
        raise ValidationError(f"N={cfg.N} must be >= 8")
    if not cfg.cfl > 0:
        raise ValidationError(f"cfl={cfg.cfl} must be positive")
    for key in ("n_out", "M", "n_bins", "n_samples", "J"):
        if getattr(cfg, key) < 1:
            raise ValidationError(f"{key}={getattr(cfg, key)} must be >= 1")
    if cfg.warmup < 0:
        raise ValidationError(f"warmup={cfg.warmup} must be >= 0")
    if cfg.c is not None and not cfg.c > 0:
        raise ValidationError(f"c={cfg.c} must be positive")
    if not cfg.kappa_grid or any(k <= 0 for k in cfg.kappa_grid):
        raise ValidationError("kappa_grid must hold positive values")
    if not cfg.n_grid or any(n < 3 for n in cfg.n_grid):
        raise ValidationError("n_grid must hold lattice sizes >= 3")
    kmc.Topology.parse(cfg.topology)
    cfg.boundary()
    cfg.initial_profile()
    out = Path(cfg.out).resolve()
    probe = out
    while not probe.exists():
        probe = probe.parent
    if not os.access(probe, os.W_OK):
        raise ValidationError(f"output directory {cfg.out} is not writable")


def serialize(cfg: RunConfig) -> str:
    """Config file text that parses back to an equal :class:`RunConfig`."""
    lines = [f"command={cfg.command}"]
    for key, value in cfg.values().items():
        lines.append(f"{key}={_format(key, value)}")
    return "\n".join(lines) + "\n"


def parse_profile(text: str, alpha: float, beta: float):
    """Initial profile from its textual form.

    Accepted forms: a number (constant), ``linear`` (alpha to beta),
    ``cos:MEAN:AMP`` and ``sinbump:AMP`` (linear plus ``AMP sin(pi u)``).
    """
    t = text.strip().lower()
    parts = t.split(":")
    try:
        if parts[0] == "linear" and len(parts) == 1:
            return lambda u: alpha + (beta - alpha) * np.asarray(u)
        if parts[0] == "cos" and len(parts) == 3:
            mean, amp = float(parts[1]), float(parts[2])
            return lambda u: mean + amp * np.cos(np.pi * np.asarray(u))
        if parts[0] == "sinbump" and len(parts) == 2:
            amp = float(parts[1])
            return lambda u: alpha + (beta - alpha) * np.asarray(u) + amp * np.sin(np.pi * np.asarray(u))
        value = float(t)
    except ValueError:
        raise ValidationError(f"profile={text!r} is not a recognised profile") from None
    if not 0 <= value <= 1:
        raise ValidationError(f"profile={text!r}: constant must lie in [0, 1]")
    return value


# ---------------------------------------------------------------------------
# commands

ORACLE_ROW_TOL = 1e-12
ORACLE_INV_TOL = 1e-10
ORACLE_LAP_TOL = 1e-10


def _cmd_simulate(cfg: RunConfig, out: Path) -> dict:
    topo = kmc.Topology.parse(cfg.topology)
    times = np.linspace(0.0, cfg.params.T, cfg.n_samples + 1)
    first = []
    stats = kmc.simulate_ensemble(
        cfg.initial_profile(), cfg.params, cfg.M, times, master_seed=cfg.seed, topology=topo,
        on_trajectory=lambda tr: first.append(tr) if not first else None,
    )
    io.export_ensemble(stats, out / "ensemble.csv")
    io.export_trajectory(first[0], out / "trajectory0.csv")
    return {"files": ["ensemble.csv", "trajectory0.csv"], "kernel_seeds": stats.seeds}


def _cmd_solve(cfg: RunConfig, out: Path) -> dict:
    f = pde.solve(cfg.initial_profile(), cfg.params, cfg.boundary(), N=cfg.N, cfl=cfg.cfl, n_out=cfg.n_out,
                  warmup=cfg.warmup)
    io.export_field(f, out / "field.csv", out / "traces.csv")
    return {
        "files": ["field.csv", "traces.csv"],
        "dt": f.dt,
        "steps": f.meta["steps"],
        "checksum": f.checksum(),
        "mass_balance_defect": pde.mass_balance_defect(f),
    }


def _cmd_energy(cfg: RunConfig, out: Path) -> dict:
    bc = pde.BoundaryKind.robin(cfg.params.kappa)
    f = pde.solve(cfg.initial_profile(), cfg.params, bc, N=cfg.N, cfl=cfg.cfl, n_out=cfg.n_out, warmup=cfg.warmup)
    ep = energy.EnergyParams.for_field(f, c=cfg.c)
    dictionary = tensor_dictionary(cfg.J, 2, cfg.params.T) + [energy.dual_maximizer(f)]
    holder_H = generic_test_functions(cfg.params.T)[0]
    report = energy.energy_report(f, ep, dictionary, holder_H)
    plain = energy.plain_bracket(energy.power_gradient(f), f)
    io.export_energy(report, out / "energy.json", {"c": ep.c, "kappa": ep.kappa, "plain_gradient_norm2": plain})
    return {"files": ["energy.json"], "c": ep.c}


def _cmd_sweep(cfg: RunConfig, out: Path) -> dict:
    res = convergence.kappa_sweep(cfg.initial_profile(), cfg.params, cfg.kappa_grid, N=cfg.N, n_out=cfg.n_out,
                                  cfl=cfg.cfl)
    io.export_sweep(res, out / "sweep.csv")
    return {"files": ["sweep.csv"], "sweep": res.manifest}


def _cmd_hydro(cfg: RunConfig, out: Path) -> dict:
    res = convergence.hydro_compare(
        cfg.initial_profile(), cfg.params, cfg.params.theta, cfg.n_grid, cfg.M, seed=cfg.seed,
        n_bins=cfg.n_bins, n_samples=cfg.n_samples, N_pde=cfg.N,
    )
    io.export_hydro(res, out / "hydro.csv", out / "hydro_summary.csv")
    return {"files": ["hydro.csv", "hydro_summary.csv"], "hydro": res.manifest}


def _cmd_slowbond(cfg: RunConfig, out: Path) -> dict:
    sweep, hydro = convergence.slow_bond_compare(
        cfg.initial_profile(), cfg.params, cfg.kappa_grid, N=cfg.N, n_grid=cfg.n_grid, M=cfg.M, seed=cfg.seed,
        n_out=cfg.n_out, n_bins=cfg.n_bins,
    )
    io.export_sweep(sweep, out / "slowbond_sweep.csv")
    io.export_hydro(hydro, out / "slowbond_hydro.csv", out / "slowbond_hydro_summary.csv")
    return {
        "files": ["slowbond_sweep.csv", "slowbond_hydro.csv", "slowbond_hydro_summary.csv"],
        "sweep": sweep.manifest,
        "hydro": hydro.manifest,
    }


def _cmd_oracle(cfg: RunConfig, out: Path) -> dict:
    p = cfg.params
    if p.n > 12:
        raise ValidationError(f"n={p.n} is too large for the oracle command (max 12)")
    topo = kmc.Topology.parse(cfg.topology)
    gen = oracle.generator_matrix(p, topo)
    qn = gen.inf_norm()
    report: dict = {"dimension": gen.dimension, "q_inf_norm": qn, "row_sum_defect": gen.row_sum_defect()}
    breaches = []
    if report["row_sum_defect"] > ORACLE_ROW_TOL * qn:
        breaches.append("row_sum_defect")
    if p.alpha == p.beta:
        inv = oracle.invariant_measure_check(p, topo)
        report.update(stationarity=inv.stationarity, detailed_balance=inv.detailed_balance)
        if inv.max_residual > ORACLE_INV_TOL * qn:
            breaches.append("invariant_measure")
    if topo is kmc.Topology.INTERVAL:
        try:
            report["laplacian_defect"] = oracle.laplacian_identity_check(p)
        except ValidationError:
            report["laplacian_defect"] = None
        if report["laplacian_defect"] is not None and report["laplacian_defect"] > ORACLE_LAP_TOL:
            breaches.append("laplacian_identity")
    report["breaches"] = breaches
    io.write_json(out / "oracle_report.json", report)
    oracle.dump_coo(gen, out / "generator.coo")
    if breaches:
        raise OracleResidualError(f"oracle residuals above tolerance: {', '.join(breaches)}")
    return {"files": ["oracle_report.json", "generator.coo"]}


_DISPATCH = {
    "simulate": _cmd_simulate,
    "solve": _cmd_solve,
    "energy": _cmd_energy,
    "sweep": _cmd_sweep,
    "hydro": _cmd_hydro,
    "oracle": _cmd_oracle,
    "slowbond": _cmd_slowbond,
}


def run(cfg: RunConfig) -> int:
    """Execute ``cfg`` and write its artifacts plus ``manifest.json``; returns the exit status."""
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    start = time.perf_counter()
    status, message, details = 0, "ok", {}
    try:
        details = _DISPATCH[cfg.command](cfg, out)
    except ValidationError as exc:
        status, message = 1, str(exc)
    except NumericalError as exc:
        status, message = 2, str(exc)
    manifest = {
        "command": cfg.command,
        "config": cfg.values(),
        "defaulted": sorted(cfg.defaulted),
        "config_text": serialize(cfg),
        "version": io.version_string(),
        "wall_time_s": time.perf_counter() - start,
        "status": status,
        "message": message,
        "details": details,
    }
    io.write_json(out / "manifest.json", manifest)
    if status:
        print(f"error: {message}", file=sys.stderr)
    return status


def main(argv: list[str] | None = None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    if not argv or argv[0] in ("-h", "--help"):
        print(__doc__.strip())
        print("\ncommands: " + ", ".join(COMMANDS))
        print("keys: " + ", ".join(f"{k} (default {_format(k, d)})" for k, (d, _) in DEFAULTS.items()))
        return 0 if argv else 1
    try:
        cfg = parse_config(flags=argv)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except PMMError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return run(cfg)
