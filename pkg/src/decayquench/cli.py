"""Scenario runner.

Usage::

    decayquench run      CONFIG [CONFIG ...] [--out PREFIX] [--quiet] [--jobs N]
    decayquench verify   CONFIG [CONFIG ...] [--quiet] [--jobs N]
    decayquench spectrum CONFIG [--out PREFIX] [--quiet]

Exit codes: 0 ok, 1 usage or configuration error, 2 verification failure,
3 numerical failure.

Configuration files are INI-like with three sections::

    [model]
    type = two_mode          # two_mode | flat_band | custom
    omega0 = 0
    g = 1

    [scenario]
    type = free_decay        # free_decay | entangle_once | zeno
    t_max = 3.141592653589793
    dt_out = 0.031415926535897934

    [output]
    prefix = out/case1

Unknown sections or keys are rejected.
"""

from __future__ import annotations

import argparse
import configparser
import io
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, NamedTuple, Optional, Sequence

import numpy as np

from . import dynamics, oracles, sector, spectral, zeno
from .errors import ConfigError, DecayQuenchError, InvalidParameterError, NumericalError

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_VERIFY = 2
EXIT_NUMERICAL = 3

# key -> (parser, required, default)
_Spec = dict[str, tuple[Callable[[str], Any], bool, Any]]


def _as_int(text: str) -> int:
    value = float(text)
    if not value.is_integer():
        raise ValueError(f"not an integer: {text!r}")
    return int(value)


def _as_float(text: str) -> float:
    value = float(text)
    if not math.isfinite(value):
        raise ValueError(f"not finite: {text!r}")
    return value


def _as_mode(text: str) -> str:
    if text not in zeno.MODES:
        raise ValueError(f"expected one of {', '.join(zeno.MODES)}")
    return text


def _as_solver(text: str) -> str:
    if text not in ("dense", "secular"):
        raise ValueError("expected dense or secular")
    return text


_SOLVER = (_as_solver, False, "dense")

MODEL_KEYS: dict[str, _Spec] = {
    "two_mode": {"omega0": (_as_float, False, 0.0), "g": (_as_float, True, None), "solver": _SOLVER},
    "flat_band": {
        "omega0": (_as_float, False, 0.0),
        "g": (_as_float, True, None),
        "K": (_as_int, True, None),
        "W": (_as_float, True, None),
        "solver": _SOLVER,
    },
    "custom": {"path": (str, True, None), "solver": _SOLVER},
}

SCENARIO_KEYS: dict[str, _Spec] = {
    "free_decay": {"t_max": (_as_float, True, None), "dt_out": (_as_float, True, None)},
    "entangle_once": {
        "t_max": (_as_float, True, None),
        "dt_out": (_as_float, True, None),
        "t1": (_as_float, True, None),
    },
    "zeno": {
        "N": (_as_int, True, None),
        "delta_t": (_as_float, True, None),
        "mode": (_as_mode, False, "incoherent"),
    },
}

OUTPUT_KEYS: _Spec = {"prefix": (str, False, None)}


@dataclass(frozen=True)
class RunConfig:
    model_type: str
    model: dict[str, Any]
    scenario_type: str
    scenario: dict[str, Any]
    prefix: Optional[str] = None
    base_dir: Path = field(default=Path("."), compare=False)

    @property
    def solver(self) -> str:
        return self.model.get("solver", "dense")


def _read_section(cp: configparser.ConfigParser, name: str, spec: _Spec, what: str) -> dict[str, Any]:
    raw = dict(cp[name]) if cp.has_section(name) else {}
    raw.pop("type", None)
    unknown = sorted(set(raw) - set(spec))
    if unknown:
        raise ConfigError(f"[{name}] unknown key(s) for {what}: {', '.join(unknown)}")
    out: dict[str, Any] = {}
    for key, (conv, required, default) in spec.items():
        if key not in raw:
            if required:
                raise ConfigError(f"[{name}] missing required key '{key}' for {what}")
            if default is not None:
                out[key] = default
            continue
        try:
            out[key] = conv(raw[key].strip())
        except ValueError as exc:
            raise ConfigError(f"[{name}] key '{key}': bad value {raw[key]!r} ({exc})") from None
    return out


def parse_config(text: str, base_dir: Optional[Path] = None) -> RunConfig:
    """Parse and validate a run configuration (strict: unknown keys are errors)."""
    cp = configparser.ConfigParser(
        interpolation=None, strict=True, comment_prefixes=("#",), inline_comment_prefixes=("#",)
    )
    cp.optionxform = str  # keep 'K', 'N' and 'W' case-sensitive
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"cannot parse configuration: {exc}") from None

    unknown = sorted(set(cp.sections()) - {"model", "scenario", "output"})
    if unknown:
        raise ConfigError(f"unknown section(s): {', '.join(unknown)}")
    for sec in ("model", "scenario"):
        if not cp.has_section(sec):
            raise ConfigError(f"missing section [{sec}]")
        if "type" not in cp[sec]:
            raise ConfigError(f"[{sec}] missing required key 'type'")

    model_type = cp["model"]["type"].strip()
    if model_type not in MODEL_KEYS:
        raise ConfigError(f"unknown model type {model_type!r}; expected one of {', '.join(MODEL_KEYS)}")
    scenario_type = cp["scenario"]["type"].strip()
    if scenario_type not in SCENARIO_KEYS:
        raise ConfigError(f"unknown scenario {scenario_type!r}; expected one of {', '.join(SCENARIO_KEYS)}")
    if cp.has_section("output") and "type" in cp["output"]:
        raise ConfigError("[output] unknown key(s): type")

    model = _read_section(cp, "model", MODEL_KEYS[model_type], model_type)
    scenario = _read_section(cp, "scenario", SCENARIO_KEYS[scenario_type], scenario_type)
    output = _read_section(cp, "output", OUTPUT_KEYS, "output")
    base = Path(base_dir) if base_dir is not None else Path(".")

    if model_type == "custom":
        path = base / model["path"]
        if not path.is_file():
            raise ConfigError(f"[model] custom model file not found: {path}")
    if scenario_type in ("free_decay", "entangle_once"):
        if scenario["t_max"] <= 0.0 or scenario["dt_out"] <= 0.0:
            raise ConfigError("[scenario] t_max and dt_out must be > 0")
        if scenario["dt_out"] > scenario["t_max"]:
            raise ConfigError("[scenario] dt_out exceeds t_max")
    if scenario_type == "entangle_once" and not 0.0 <= scenario["t1"] <= scenario["t_max"]:
        raise ConfigError("[scenario] t1 must lie in [0, t_max]")
    if scenario_type == "zeno":
        if scenario["N"] < 1:
            raise ConfigError("[scenario] N must be >= 1")
        if scenario["delta_t"] <= 0.0:
            raise ConfigError("[scenario] delta_t must be > 0")

    return RunConfig(model_type, model, scenario_type, scenario, output.get("prefix"), base)


def load_config(path: Path) -> RunConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from None
    return parse_config(text, base_dir=Path(path).parent)


def build_model(cfg: RunConfig) -> spectral.SpectralModel:
    m = cfg.model
    if cfg.model_type == "two_mode":
        return spectral.build_two_mode(m["omega0"], m["g"])
    if cfg.model_type == "flat_band":
        return spectral.build_flat_band(m["omega0"], m["g"], m["K"], m["W"])
    return spectral.load_custom(cfg.base_dir / m["path"])


def time_grid(t_max: float, dt_out: float) -> np.ndarray:
    """``k * dt_out`` for ``k = 0..floor(t_max / dt_out)``, tolerant to rounding."""
    n = int(math.floor(t_max / dt_out * (1.0 + 1e-12)))
    return dt_out * np.arange(n + 1)


class Check(NamedTuple):
    name: str
    delta: float
    tolerance: float

    @property
    def ok(self) -> bool:
        return bool(self.delta <= self.tolerance)


@dataclass
class Outcome:
    code: int = EXIT_OK
    stdout: str = ""
    stderr: str = ""
    files: list[Path] = field(default_factory=list)


def _max_abs(x) -> float:
    x = np.asarray(x, dtype=float)
    return float(np.max(np.abs(x))) if x.size else 0.0


def _entangle_once_columns(e: sector.EigenSystem, grid: np.ndarray, t1: float):
    p = np.asarray(dynamics.survival_probability(e, grid))
    rate = np.asarray(dynamics.decay_rate(e, grid))
    after = grid >= t1
    tau = grid[after] - t1
    p_ent = p.copy()
    rate_ent = rate.copy()
    if tau.size:
        p_ent[after] = dynamics.entangled_probability(e, t1, tau)
        rate_ent[after] = dynamics.entangled_decay_rate(e, t1, tau)
    return p, rate, p_ent, rate_ent


def _entangle_once_csv(grid, p, rate, p_ent, rate_ent) -> str:
    buf = io.StringIO()
    buf.write("t,P,rate,P_ent,rate_ent\n")
    for row in zip(grid, p, rate, p_ent, rate_ent):
        buf.write(",".join(f"{v:.17g}" for v in row) + "\n")
    return buf.getvalue()


def _verify(cfg: RunConfig, model: spectral.SpectralModel, e: sector.EigenSystem, data: dict) -> list[Check]:
    """Engine-versus-oracle deltas for model families that have a closed form."""
    checks: list[Check] = []
    sc = cfg.scenario
    if cfg.model_type == "two_mode":
        p1 = oracles.CaseIParams(model.modes[0][1])
        if cfg.scenario_type == "free_decay":
            grid = data["grid"]
            checks.append(Check("P vs cos^2(gt)", _max_abs(data["P"] - oracles.case1_probability(p1, grid)), 1e-12))
            exact_rate = p1.g * np.sin(2.0 * p1.g * grid)
            checks.append(Check("rate vs g sin(2gt)", _max_abs(data["rate"] - exact_rate), 1e-10))
        elif cfg.scenario_type == "entangle_once":
            grid, t1 = data["grid"], sc["t1"]
            after = grid >= t1
            tau = grid[after] - t1
            checks.append(
                Check("P_ent vs closed form", _max_abs(data["P_ent"][after] - oracles.case1_entangled(p1, t1, tau)), 1e-12)
            )
            checks.append(
                Check(
                    "rate_ent vs g cos(2gt1) sin(2g tau)",
                    _max_abs(data["rate_ent"][after] - oracles.case1_entangled_rate(p1, t1, tau)),
                    1e-10,
                )
            )
        else:
            closed = oracles.zeno_incoherent_closed if sc["mode"] == "incoherent" else oracles.zeno_filtered_closed
            expected = np.array([1.0] + [closed(p1, k, sc["delta_t"]) for k in range(1, sc["N"] + 1)])
            checks.append(Check(f"{sc['mode']} survival vs closed form", _max_abs(data["survival"] - expected), 1e-10))
    elif cfg.model_type == "flat_band" and cfg.scenario_type in ("free_decay", "entangle_once"):
        p2 = oracles.CaseIIParams(model.predicted_gamma(), model.omega0)
        grid = data["grid"]
        window = grid <= 3.0 / p2.gamma
        column = "P" if cfg.scenario_type == "free_decay" else "P_ent"
        delta = _max_abs(data[column][window] - oracles.exponential_probability(p2, grid[window]))
        checks.append(Check(f"{column} vs exp(-Gamma t) on [0, 3/Gamma]", delta, 0.02))
    return checks


def _report(checks: Sequence[Check]) -> str:
    if not checks:
        return "verify: no closed-form oracle for this model/scenario\n"
    lines = [f"{'check':<44} {'max_delta':>12} {'tolerance':>10}  status"]
    for c in checks:
        lines.append(f"{c.name:<44} {c.delta:>12.3e} {c.tolerance:>10.1e}  {'PASS' if c.ok else 'FAIL'}")
    return "\n".join(lines) + "\n"


def _verify_csv(checks: Sequence[Check]) -> str:
    buf = io.StringIO()
    buf.write("check,max_delta,tolerance,status\n")
    for c in checks:
        buf.write(f"{c.name},{c.delta:.17g},{c.tolerance:.17g},{'PASS' if c.ok else 'FAIL'}\n")
    return buf.getvalue()


def _write(path: Path, text: str, outcome: Outcome) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="\n") as fh:
        fh.write(text)
    outcome.files.append(path)


def _prefix(cfg: RunConfig, config_path: Optional[Path], out: Optional[str]) -> Path:
    if out is not None:
        return Path(out)
    if cfg.prefix is not None:
        return cfg.base_dir / cfg.prefix
    if config_path is not None:
        return config_path.with_suffix("")
    return Path("decayquench")


def run(
    cfg: RunConfig,
    command: str = "run",
    out: Optional[str] = None,
    quiet: bool = False,
    config_path: Optional[Path] = None,
) -> Outcome:
    """Execute one configuration.  ``command`` is ``run``, ``verify`` or ``spectrum``."""
    outcome = Outcome()
    info = io.StringIO()
    diag = io.StringIO()
    try:
        model = build_model(cfg)
        e = sector.diagonalize(sector.assemble_hamiltonian(model), method=cfg.solver)
        prefix = _prefix(cfg, config_path, out)

        if command == "spectrum":
            path = Path(f"{prefix}_spectrum.csv")
            _write(path, sector.spectrum_csv(e), outcome)
            info.write(f"wrote {path}\n")
            info.write(f"lowest eigenfrequency {e.lowest_frequency:.17g}\n")
            info.write(f"mean energy {sector.mean_energy(e):.17g} (omega0 = {model.omega0:.17g})\n")
            return outcome

        sc = cfg.scenario
        if model.spacing is not None:
            horizon = sc["t_max"] if "t_max" in sc else sc["N"] * sc["delta_t"]
            t_rec = model.recurrence_time()
            if horizon > t_rec:
                diag.write(f"WARN recurrence: time horizon {horizon:.6g} exceeds recurrence time {t_rec:.6g}\n")

        data: dict[str, Any] = {}
        if cfg.scenario_type == "free_decay":
            grid = time_grid(sc["t_max"], sc["dt_out"])
            data.update(grid=grid, P=np.asarray(dynamics.survival_probability(e, grid)), rate=np.asarray(dynamics.decay_rate(e, grid)))
            text = dynamics.series_csv(e, grid)
        elif cfg.scenario_type == "entangle_once":
            grid = time_grid(sc["t_max"], sc["dt_out"])
            p, rate, p_ent, rate_ent = _entangle_once_columns(e, grid, sc["t1"])
            data.update(grid=grid, P=p, rate=rate, P_ent=p_ent, rate_ent=rate_ent)
            text = _entangle_once_csv(grid, p, rate, p_ent, rate_ent)
        else:
            result = zeno.run_schedule(e, zeno.ZenoSchedule(sc["N"], sc["delta_t"], sc["mode"]))
            data.update(survival=np.asarray(result.survival))
            text = result.to_csv()

        checks = _verify(cfg, model, e, data)
        if command == "run":
            path = Path(f"{prefix}_{cfg.scenario_type}.csv")
            _write(path, text, outcome)
            info.write(f"wrote {path}\n")
            if checks:
                vpath = Path(f"{prefix}_verify.csv")
                _write(vpath, _verify_csv(checks), outcome)
        report = _report(checks)
        if all(c.ok for c in checks):
            info.write(report)
        else:
            outcome.code = EXIT_VERIFY
            diag.write("verification failed\n")
            diag.write(report)
    except NumericalError as exc:
        outcome.code = EXIT_NUMERICAL
        diag.write(f"numerical failure: {exc}\n")
    except (DecayQuenchError, InvalidParameterError, OSError) as exc:
        outcome.code = EXIT_USAGE
        diag.write(f"error: {exc}\n")
    finally:
        outcome.stdout = "" if quiet else info.getvalue()
        outcome.stderr = diag.getvalue()
    return outcome


def _run_path(args: tuple[str, str, Optional[str], bool]) -> Outcome:
    command, path, out, quiet = args
    try:
        cfg = load_config(Path(path))
    except ConfigError as exc:
        return Outcome(EXIT_USAGE, "", f"{path}: config error: {exc}\n")
    return run(cfg, command=command, out=out, quiet=quiet, config_path=Path(path))


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):  # usage errors exit with status 1, not argparse's 2
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _make_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="decayquench", description="Decay, entanglement and Zeno scenarios in the one-photon sector.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name, help_text in (
        ("run", "run scenarios and write CSV output"),
        ("verify", "compare engine output with closed-form oracles"),
        ("spectrum", "write the omega,weight eigen-spectrum"),
    ):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("configs", nargs="+", metavar="CONFIG")
        p.add_argument("--out", default=None, help="output path prefix (single config only)")
        p.add_argument("--quiet", action="store_true", help="suppress informational output")
        p.add_argument("--jobs", type=int, default=1, help="run independent configs in parallel")
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = _make_parser()
    args = parser.parse_args(argv)
    if args.out is not None and len(args.configs) > 1:
        parser.error("--out needs exactly one config")
    if args.jobs < 1:
        parser.error("--jobs must be >= 1")
    tasks = [(args.command, path, args.out, args.quiet) for path in args.configs]
    if args.jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            outcomes = list(pool.map(_run_path, tasks))
    else:
        outcomes = [_run_path(t) for t in tasks]
    for o in outcomes:
        sys.stdout.write(o.stdout)
        sys.stderr.write(o.stderr)
    return max(o.code for o in outcomes)


if __name__ == "__main__":
    sys.exit(main())
