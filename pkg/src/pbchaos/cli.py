"""Command-line front end.

Subcommands: section, orbits, lyapunov-map, ensemble, quantum, scan-t0,
scenario, presets.  Settings come from (lowest to highest priority) the
built-in defaults, a key = value config file with [section] headers,
PBCHAOS_* environment variables and explicit command-line flags.  Every
run prints the fully resolved configuration before computing.

Exit codes: 0 success, 1 runtime failure, 2 usage error, 3 config error.
"""

from __future__ import annotations

import argparse
import configparser
import math
import os
import sys

import numpy as np

from . import ensemble, orbits, output, poincare, quantum, scenarios, svgplot
from .ensemble import CssSpec, NoiseModel
from .errors import PbchaosError, ScenarioError
from .model import PhaseState, SystemParams
from .scenarios import PRESETS, SCENARIOS, ScenarioConfig

DEFAULT_SEED = 20240901

EXIT_RUNTIME = 1
EXIT_USAGE = 2
EXIT_CONFIG = 3


class ConfigError(Exception):
    pass


# settings that may arrive via config file or PBCHAOS_<NAME> environment
# variables; flags of the same name always win
_SETTING_TYPES = {
    "lam": float, "epsilon": float, "drive_amp": float, "drive_freq": float,
    "t0_frac": float, "n_atoms": int, "n_chi": float,
    "z0": float, "phi0": float, "samples": int, "seed": int, "jobs": int,
    "periods": int, "grid_nz": int, "grid_nphi": int, "t0_points": int,
    "time_points": int, "steps_per_period": int, "evolution_ms": float,
    "sigma_delta": float, "loss_tau_ms": float, "lambda_decay": bool,
    "out": str, "start": str, "with_quantum": bool, "dt_fraction": float,
    "svg": bool, "n_guesses": int,
}


def _coerce(name, raw):
    typ = _SETTING_TYPES[name]
    if typ is bool:
        if isinstance(raw, bool):
            return raw
        low = str(raw).strip().lower()
        if low in ("1", "true", "yes", "on"):
            return True
        if low in ("0", "false", "no", "off"):
            return False
        raise ConfigError(f"cannot parse boolean setting {name} = {raw!r}")
    try:
        return typ(raw)
    except ValueError as exc:
        raise ConfigError(f"bad value for {name}: {raw!r} ({exc})")


def load_config_file(path) -> dict:
    """Flat key = value file with [section] headers; sections are cosmetic."""
    parser = configparser.ConfigParser()
    try:
        with open(path) as fh:
            parser.read_string("[_top]\n" + fh.read())
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}")
    except configparser.Error as exc:
        raise ConfigError(f"cannot parse config file {path}: {exc}")
    out = {}
    for section in parser.sections():
        for key, value in parser.items(section):
            key = key.replace("-", "_")
            if key not in _SETTING_TYPES:
                raise ConfigError(f"unknown config key {key!r} in {path}")
            out[key] = _coerce(key, value)
    return out


def env_overrides(environ=None) -> dict:
    env = os.environ if environ is None else environ
    out = {}
    for key, value in env.items():
        if not key.startswith("PBCHAOS_"):
            continue
        name = key[len("PBCHAOS_"):].lower()
        if name in _SETTING_TYPES:
            out[name] = _coerce(name, value)
    return out


_DEFAULTS = {
    "lam": 0.7, "epsilon": -0.11, "drive_amp": 0.0, "drive_freq": 1.5,
    "t0_frac": 0.0, "n_atoms": 700, "n_chi": 2.0 * math.pi * 32.0,
    "z0": 0.0, "phi0": math.pi, "samples": 10000, "seed": DEFAULT_SEED,
    "jobs": 1, "periods": 200, "grid_nz": 40, "grid_nphi": 40,
    "t0_points": 64, "time_points": 33, "steps_per_period": 1000,
    "evolution_ms": 48.0, "sigma_delta": 0.0, "loss_tau_ms": 0.0,
    "lambda_decay": False, "out": "pbchaos-out", "start": "nominal",
    "with_quantum": False, "dt_fraction": 2000.0, "svg": True,
    "n_guesses": 16,
}


def resolve_settings(args) -> dict:
    settings = dict(_DEFAULTS)
    if getattr(args, "config", None):
        settings.update(load_config_file(args.config))
    settings.update(env_overrides())
    if getattr(args, "preset", None):
        name = args.preset
        if name not in PRESETS:
            raise ConfigError(f"unknown preset {name!r}; see 'pbchaos presets'")
        p = PRESETS[name].params
        settings.update(lam=p.lam, epsilon=p.epsilon, drive_amp=p.drive_amp,
                        drive_freq=p.drive_freq, t0_frac=p.t0_frac,
                        n_atoms=p.n_atoms, n_chi=p.n_chi)
        preset = PRESETS[name]
        if preset.center is not None:
            settings.update(z0=preset.center.z, phi0=preset.center.phi)
        if preset.evolution_ms is not None:
            settings["evolution_ms"] = preset.evolution_ms
    for key in _SETTING_TYPES:
        val = getattr(args, key, None)
        if val is not None:
            settings[key] = val
    return settings


def _params(settings) -> SystemParams:
    try:
        return SystemParams(lam=settings["lam"], epsilon=settings["epsilon"],
                            drive_amp=settings["drive_amp"],
                            drive_freq=settings["drive_freq"],
                            t0_frac=settings["t0_frac"],
                            n_atoms=settings["n_atoms"],
                            n_chi=settings["n_chi"])
    except ValueError as exc:
        raise ConfigError(str(exc))


def _noise(settings) -> NoiseModel:
    loss = settings["loss_tau_ms"]
    return NoiseModel(sigma_delta=settings["sigma_delta"],
                      loss_tau_ms=loss if loss and loss > 0 else None,
                      lambda_decay=settings["lambda_decay"])


def print_resolved(settings, keys=None):
    keys = keys or sorted(settings)
    print("resolved configuration:")
    for key in keys:
        print(f"  {key} = {settings[key]}")


# ---------------------------------------------------------------------------
# subcommand implementations

def cmd_presets(args):
    print(f"{'name':12s} {'Lambda':>7s} {'eps':>7s} {'A':>6s} {'omega':>6s}  description")
    for name, p in PRESETS.items():
        q = p.params
        print(f"{name:12s} {q.lam:7.3f} {q.epsilon:7.3f} {q.drive_amp:6.3f} "
              f"{q.drive_freq:6.3f}  {p.describe}")
    return 0


def cmd_section(args):
    settings = resolve_settings(args)
    print_resolved(settings, ["lam", "epsilon", "drive_amp", "drive_freq",
                              "t0_frac", "periods", "grid_nz", "grid_nphi",
                              "steps_per_period", "out", "svg"])
    params = _params(settings)
    seeds = poincare.grid_seeds(settings["grid_nz"], settings["grid_nphi"])
    section = poincare.build_section(
        params, seeds, settings["periods"],
        steps_per_period=min(settings["steps_per_period"], 512))
    header, rows = poincare.section_to_rows(section)
    path = os.path.join(settings["out"], "section.csv")
    output.write_csv(path, header, rows)
    print(f"wrote {path} ({len(rows)} points, {len(section.failures)} failed seeds)")
    if settings["svg"]:
        fig = svgplot.SvgFigure((0.0, 2 * math.pi), (-1.0, 1.0),
                                x_label="phi", y_label="z", title="section")
        pts = section.all_points()
        if len(pts):
            fig.scatter(pts[:, 2], pts[:, 1], color="#444444", size=0.6)
        svg = fig.write(os.path.join(settings["out"], "section.svg"))
        print(f"wrote {svg}")
    return 0


def cmd_orbits(args):
    settings = resolve_settings(args)
    print_resolved(settings, ["lam", "epsilon", "drive_amp", "drive_freq",
                              "t0_frac", "n_guesses", "out"])
    params = _params(settings)
    fixed = orbits.find_fixed_points_undriven(params, branch="both")
    print("undriven fixed points:")
    for st, cls in fixed:
        print(f"  z = {st.z:+.6f}  phi = {st.phi:.6f}  {cls.value}")
    rows = [(1, st.z, st.phi, float("nan"), cls.value) for st, cls in fixed]
    family = None
    preset = PRESETS.get(getattr(args, "preset", None) or "")
    if preset and preset.resonance_family:
        family = preset.resonance_family
    if params.drive_amp > 0 and family is not None:
        pair = orbits.find_resonance_orbits(params, family,
                                            n_guesses=settings["n_guesses"])
        print("period-2 resonance chain:")
        for o in pair:
            print(f"  z = {o.anchor.z:+.6f}  phi = {o.anchor.phi:.6f}  "
                  f"{o.stability.value}  trace = {o.trace:+.6f}")
        rows += orbits.orbits_to_rows(pair)[1]
    elif params.drive_amp > 0:
        print("period-2 search skipped: no resonance family (use --preset)")
    path = os.path.join(settings["out"], "orbits.csv")
    output.write_csv(path, ["n", "z", "phi", "trace", "class"], rows)
    print(f"wrote {path}")
    return 0


def cmd_lyapunov_map(args):
    settings = resolve_settings(args)
    print_resolved(settings, ["lam", "epsilon", "drive_amp", "drive_freq",
                              "t0_frac", "periods", "grid_nz", "grid_nphi",
                              "jobs", "out"])
    params = _params(settings)
    grid = orbits.GridSpec(nz=settings["grid_nz"], nphi=settings["grid_nphi"])
    cmap = orbits.chaos_map(params, grid, settings["periods"], jobs=settings["jobs"])
    header, rows = orbits.chaosmap_to_rows(cmap)
    path = os.path.join(settings["out"], "lyapunov_map.csv")
    output.write_csv(path, header, rows)
    print(f"wrote {path} (chaotic fraction {cmap.chaotic_fraction:.3f})")
    return 0


def cmd_ensemble(args):
    settings = resolve_settings(args)
    print_resolved(settings, ["lam", "epsilon", "drive_amp", "drive_freq",
                              "t0_frac", "z0", "phi0", "samples", "seed",
                              "evolution_ms", "time_points", "out"])
    params = _params(settings)
    center = PhaseState(settings["z0"], settings["phi0"])
    tau_final = params.tau_from_ms(settings["evolution_ms"])
    times = np.linspace(0.0, tau_final, settings["time_points"])
    spec = CssSpec(center=center, n_atoms=params.n_atoms,
                   n_samples=settings["samples"], seed=settings["seed"])
    series = ensemble.evolve_ensemble(params, spec, _noise(settings), times,
                                      steps_per_period=settings["steps_per_period"])
    header, rows = ensemble.series_to_rows(series)
    path = os.path.join(settings["out"], "ensemble.csv")
    output.write_csv(path, header, rows)
    print(f"wrote {path} (final normalized variance "
          f"{series.normalized_var_z[-1]:.4f})")
    return 0


def cmd_quantum(args):
    settings = resolve_settings(args)
    print_resolved(settings, ["lam", "epsilon", "drive_amp", "drive_freq",
                              "t0_frac", "z0", "phi0", "n_atoms",
                              "evolution_ms", "time_points", "dt_fraction", "out"])
    params = _params(settings)
    tau_final = params.tau_from_ms(settings["evolution_ms"])
    times = np.linspace(0.0, tau_final, settings["time_points"])
    psi0 = quantum.css_state(params.n_atoms, settings["z0"], settings["phi0"])
    states = quantum.evolve_quantum(psi0, params, times,
                                    dt_max=params.period / settings["dt_fraction"])
    times_ms = np.array([params.ms_from_tau(t) for t in times])
    header, rows = quantum.quantum_series_rows(times, times_ms, states, params.n_atoms)
    path = os.path.join(settings["out"], "quantum.csv")
    output.write_csv(path, header, rows)
    mz, vz = quantum.expect_observables(states[-1])
    print(f"wrote {path} (final mean_z {mz:.4f}, var_z {vz:.6f})")
    return 0


def cmd_scan_t0(args):
    settings = resolve_settings(args)
    preset_name = getattr(args, "preset", None)
    if preset_name not in ("fig4a", "fig4b", "fig2", "fig3"):
        raise ConfigError("scan-t0 requires --preset fig4a|fig4b|fig2|fig3")
    scenario = {"fig2": "fig4a", "fig3": "fig4b"}.get(preset_name, preset_name)
    print_resolved(settings, ["seed", "jobs", "t0_points", "samples", "start", "out"])
    config = ScenarioConfig(scenario=scenario, out_dir=settings["out"],
                            seed=settings["seed"], jobs=settings["jobs"],
                            t0_points=settings["t0_points"],
                            scan_samples=settings["samples"],
                            steps_per_period=settings["steps_per_period"],
                            start=settings["start"], noise=_noise(settings))
    manifest = scenarios.run_scenario(config)
    print(f"wrote {manifest}")
    return 0


def cmd_scenario(args):
    settings = resolve_settings(args)
    name = args.name
    if name not in SCENARIOS:
        raise ConfigError(f"unknown scenario {name!r}; one of {', '.join(SCENARIOS)}")
    print_resolved(settings, ["seed", "jobs", "samples", "start",
                              "with_quantum", "out"])
    config = ScenarioConfig(scenario=name, out_dir=settings["out"],
                            seed=settings["seed"], jobs=settings["jobs"],
                            n_samples=settings["samples"],
                            t0_points=settings["t0_points"],
                            time_points=settings["time_points"],
                            n_periods=settings["periods"],
                            grid_nz=settings["grid_nz"],
                            grid_nphi=settings["grid_nphi"],
                            steps_per_period=settings["steps_per_period"],
                            start=settings["start"],
                            with_quantum=settings["with_quantum"],
                            quantum_dt_fraction=settings["dt_fraction"],
                            noise=_noise(settings))
    manifest = scenarios.run_scenario(config)
    print(f"wrote {manifest}")
    return 0


# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pbchaos",
        description="driven two-mode condensate: sections, orbits, ensembles")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, preset=True):
        p.add_argument("--config", help="key = value config file")
        if preset:
            p.add_argument("--preset", help="named parameter preset")
        p.add_argument("--seed", type=int)
        p.add_argument("--out", help="output directory")
        p.add_argument("--jobs", type=int)
        for name in ("lam", "epsilon", "drive_amp", "drive_freq", "t0_frac",
                     "n_chi", "sigma_delta", "loss_tau_ms", "evolution_ms",
                     "z0", "phi0", "dt_fraction"):
            p.add_argument(f"--{name.replace('_', '-')}", dest=name, type=float)
        for name in ("n_atoms", "samples", "periods", "grid_nz", "grid_nphi",
                     "t0_points", "time_points", "steps_per_period", "n_guesses"):
            p.add_argument(f"--{name.replace('_', '-')}", dest=name, type=int)
        for name in ("lambda_decay", "with_quantum"):
            p.add_argument(f"--{name.replace('_', '-')}", dest=name,
                           action="store_const", const=True)
        p.add_argument("--no-svg", dest="svg", action="store_const", const=False)
        p.add_argument("--start", choices=("nominal", "effective"))

    for name, fn in (("section", cmd_section), ("orbits", cmd_orbits),
                     ("lyapunov-map", cmd_lyapunov_map),
                     ("ensemble", cmd_ensemble), ("quantum", cmd_quantum),
                     ("scan-t0", cmd_scan_t0)):
        p = sub.add_parser(name)
        common(p)
        p.set_defaults(func=fn)

    p = sub.add_parser("scenario")
    p.add_argument("name", help="one of: " + ", ".join(SCENARIOS))
    common(p)
    p.set_defaults(func=cmd_scenario)

    p = sub.add_parser("presets")
    p.set_defaults(func=cmd_presets)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ScenarioError as exc:
        print(f"runtime error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except PbchaosError as exc:
        print(f"runtime error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
