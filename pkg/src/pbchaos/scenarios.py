"""Turn-key experiment reproductions.

Each scenario composes the section / orbit / ensemble / quantum modules
into a deterministic pipeline and writes CSV (plus SVG) artifacts under a
per-scenario directory together with a manifest that lists the fully
resolved configuration and a content digest per artifact.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, field, replace

import numpy as np

from . import ensemble, integrate, model, orbits, output, poincare, quantum, svgplot
from .ensemble import CssSpec, NoiseModel
from .errors import ScenarioError
from .integrate import DEFAULT_CONFIG
from .model import PhaseState, SystemParams
from .parallel import run_indexed

# ---------------------------------------------------------------------------
# preset registry


@dataclass(frozen=True)
class Preset:
    """A named parameter bundle for one experimental regime."""

    name: str
    describe: str
    params: SystemParams
    center: PhaseState | None = None
    center_variants: dict = field(default_factory=dict)
    t0_variants: dict = field(default_factory=dict)
    evolution_ms: float | None = None
    resonance_family: tuple | None = None


def _weak_params(**kw):
    return SystemParams(lam=0.7, epsilon=-0.11, drive_freq=1.5, n_atoms=700, **kw)


def _mixed_params(**kw):
    return SystemParams(lam=1.5, epsilon=-0.07, drive_freq=1.6, n_atoms=700, **kw)


PRESETS = {
    "fig1d-a0": Preset(
        name="fig1d-a0",
        describe="undriven weakly nonlinear junction: nested invariant curves",
        params=_weak_params(drive_amp=0.0),
    ),
    "fig1d-a003": Preset(
        name="fig1d-a003",
        describe="weak drive at the 2:1 resonance: thin island chain, orbit pairing",
        params=_weak_params(drive_amp=0.03),
        resonance_family=("z", math.pi, 0.0, 0.95),
    ),
    "fig1d-a02": Preset(
        name="fig1d-a02",
        describe="moderate drive: chaotic layer around the resonance chain",
        params=_weak_params(drive_amp=0.2),
        resonance_family=("z", math.pi, 0.0, 0.95),
    ),
    "fig1d-a035": Preset(
        name="fig1d-a035",
        describe="strong drive, amplitude 0.35 chosen here for illustration only",
        params=_weak_params(drive_amp=0.35),
        resonance_family=("z", math.pi, 0.0, 0.95),
    ),
    "fig2": Preset(
        name="fig2",
        describe="weak-drive resonance pair probed by a coherent cloud at (0.55, pi), 48 ms",
        params=_weak_params(drive_amp=0.2),
        center=PhaseState(0.55, math.pi),
        t0_variants={"hyperbolic": 0.2, "elliptic": 0.6, "undriven": 0.0},
        evolution_ms=48.0,
        resonance_family=("z", math.pi, 0.0, 0.95),
    ),
    "fig3": Preset(
        name="fig3",
        describe="mixed phase space: chaotic sea vs moving island at (0, 2.51), 61 ms",
        params=_mixed_params(drive_amp=0.07),
        center=PhaseState(0.0, 2.51),
        center_variants={"nominal": PhaseState(0.0, 2.51),
                         "effective": PhaseState(-0.3, 2.68)},
        t0_variants={"chaotic": 0.9, "island": 0.4, "undriven": 0.0},
        evolution_ms=61.0,
        resonance_family=("phi", 0.0, 2.3, 2.9),
    ),
    "fig4a": Preset(
        name="fig4a",
        describe="final-variance scan over the drive offset, weak-drive preset, 48 ms",
        params=_weak_params(drive_amp=0.2),
        center=PhaseState(0.55, math.pi),
        evolution_ms=48.0,
        resonance_family=("z", math.pi, 0.0, 0.95),
    ),
    "fig4b": Preset(
        name="fig4b",
        describe="final-variance scan over the drive offset, mixed-phase-space preset, 61 ms",
        params=_mixed_params(drive_amp=0.07),
        center=PhaseState(0.0, 2.51),
        center_variants={"nominal": PhaseState(0.0, 2.51),
                         "effective": PhaseState(-0.3, 2.68)},
        evolution_ms=61.0,
        resonance_family=("phi", 0.0, 2.3, 2.9),
    ),
}


@dataclass(frozen=True)
class ScenarioConfig:
    """Resolved inputs of one scenario run."""

    scenario: str
    out_dir: str
    seed: int = 20240901
    jobs: int = 1
    n_samples: int = 10000
    scan_samples: int = 4000
    n_periods: int = 200
    grid_nz: int = 40
    grid_nphi: int = 40
    t0_points: int = 64
    time_points: int = 33
    steps_per_period: int = 1000
    section_steps_per_period: int = 256
    readout: str = "z"
    start: str = "nominal"
    with_quantum: bool = False
    quantum_dt_fraction: float = 2000.0
    noise: NoiseModel = NoiseModel.off()

    def with_(self, **kw) -> "ScenarioConfig":
        return replace(self, **kw)


SCENARIOS = ("fig1d", "fig2-hyperbolic", "fig2-elliptic", "fig2-undriven",
             "fig3-chaotic", "fig3-island", "fig3-undriven", "fig4a", "fig4b")


def _resolved_entries(config: ScenarioConfig, preset: Preset, params, center, extra=None):
    entries = {
        "scenario": config.scenario,
        "preset": preset.name,
        "seed": config.seed,
        "jobs": config.jobs,
        "lam": params.lam,
        "epsilon": params.epsilon,
        "drive_amp": params.drive_amp,
        "drive_freq": params.drive_freq,
        "t0_frac": params.t0_frac,
        "n_atoms": params.n_atoms,
        "n_chi": params.n_chi,
        "n_samples": config.n_samples,
        "steps_per_period": config.steps_per_period,
        "noise_sigma_delta": config.noise.sigma_delta,
        "noise_loss_tau_ms": config.noise.loss_tau_ms,
        "noise_lambda_decay": config.noise.lambda_decay,
    }
    if center is not None:
        entries["center_z"] = center.z
        entries["center_phi"] = center.phi
    if extra:
        entries.update(extra)
    return entries


def _pick_center(preset: Preset, config: ScenarioConfig) -> PhaseState:
    if preset.center_variants:
        try:
            return preset.center_variants[config.start]
        except KeyError:
            raise ScenarioError("setup", f"unknown start variant {config.start!r}")
    return preset.center


# ---------------------------------------------------------------------------
# individual scenario pipelines

def _run_fig1d(config: ScenarioConfig):
    out = []
    panels = ["fig1d-a0", "fig1d-a003", "fig1d-a02", "fig1d-a035"]
    entries = {}
    for pname in panels:
        preset = PRESETS[pname]
        params = preset.params
        seeds = poincare.grid_seeds(config.grid_nz, config.grid_nphi)
        try:
            section = poincare.build_section(
                params, seeds, config.n_periods,
                steps_per_period=config.section_steps_per_period)
        except Exception as exc:
            raise ScenarioError("section", exc)
        header, rows = poincare.section_to_rows(section)
        csv_path = os.path.join(config.out_dir, f"section_{pname}.csv")
        output.write_csv(csv_path, header, rows)
        out.append(csv_path)

        fig = svgplot.SvgFigure((0.0, 2 * math.pi), (-1.0, 1.0),
                                x_label="phi", y_label="z",
                                title=f"{pname}: A = {params.drive_amp}")
        pts = section.all_points()
        if len(pts):
            fig.scatter(pts[:, 2], pts[:, 1], color="#444444", size=0.6)
        if preset.resonance_family is not None:
            try:
                pair = orbits.find_resonance_orbits(params, preset.resonance_family)
            except Exception as exc:
                raise ScenarioError("orbits", exc)
            ell = [o for o in pair if o.stability is orbits.Stability.ELLIPTIC]
            hyp = [o for o in pair if o.stability is orbits.Stability.HYPERBOLIC]
            fig.scatter([o.anchor.phi for o in ell], [o.anchor.z for o in ell],
                        color="#1f3bd0", size=2.0, marker="triangle")
            fig.scatter([o.anchor.phi for o in hyp], [o.anchor.z for o in hyp],
                        color="#d01f1f", size=2.5, marker="circle")
            oh, orows = orbits.orbits_to_rows(pair)
            orbit_csv = os.path.join(config.out_dir, f"orbits_{pname}.csv")
            output.write_csv(orbit_csv, oh, orows)
            out.append(orbit_csv)
        svg_path = os.path.join(config.out_dir, f"section_{pname}.svg")
        fig.write(svg_path)
        out.append(svg_path)
        entries[f"panel_{pname}_amp"] = PRESETS[pname].params.drive_amp
    base = PRESETS["fig1d-a02"]
    entries = {**_resolved_entries(config, base, base.params, None), **entries}
    return entries, out


def _series_scenario(config: ScenarioConfig, preset_name: str, variant: str):
    preset = PRESETS[preset_name]
    t0_frac = preset.t0_variants[variant]
    params = preset.params.with_(t0_frac=t0_frac)
    if variant == "undriven":
        params = params.with_(drive_amp=0.0)
    center = _pick_center(preset, config)
    tau_final = params.tau_from_ms(preset.evolution_ms)
    times = np.linspace(0.0, tau_final, config.time_points)
    spec = CssSpec(center=center, n_atoms=params.n_atoms,
                   n_samples=config.n_samples, seed=config.seed)
    try:
        series = ensemble.evolve_ensemble(params, spec, config.noise, times,
                                          steps_per_period=config.steps_per_period)
    except Exception as exc:
        raise ScenarioError("ensemble", exc)
    header, rows = ensemble.series_to_rows(series)
    base = os.path.join(config.out_dir, f"{config.scenario}")
    artifacts = [output.write_csv(base + ".csv", header, rows)]

    if config.with_quantum:
        try:
            psi0 = quantum.css_state(params.n_atoms, center.z, center.phi)
            states = quantum.evolve_quantum(
                psi0, params, times,
                dt_max=params.period / config.quantum_dt_fraction)
        except Exception as exc:
            raise ScenarioError("quantum", exc)
        qh, qrows = quantum.quantum_series_rows(
            times, series.times_ms, states, params.n_atoms)
        artifacts.append(output.write_csv(base + "_quantum.csv", qh, qrows))

    fig = svgplot.SvgFigure(
        (0.0, float(series.times_ms[-1])),
        (0.0, float(max(series.normalized_var_z.max() * 1.1, 2.0))),
        x_label="t (ms)", y_label="Var(z) / Var_CSS",
        title=config.scenario)
    fig.line(series.times_ms, series.normalized_var_z, color="#1f3b73")
    artifacts.append(fig.write(base + ".svg"))

    extra = {"variant": variant, "evolution_ms": preset.evolution_ms,
             "tau_final": tau_final, "readout": config.readout}
    return _resolved_entries(config, preset, params, center, extra), artifacts


def _scan_point(params, spec, noise, tau_final, steps_per_period):
    series = ensemble.evolve_ensemble(params, spec, noise, np.array([0.0, tau_final]),
                                      steps_per_period=steps_per_period)
    return (float(series.normalized_var_z[-1]), float(series.var_z[-1]),
            float(series.mean_z[-1]))


def run_t0_scan(preset_name: str, config: ScenarioConfig):
    """Final normalized variance versus the drive time offset.

    Returns (t0_grid, normvar array, baseline) plus the per-point raw
    variance; the undriven baseline uses the same cloud and final time.
    """
    preset = PRESETS[preset_name]
    center = _pick_center(preset, config)
    params0 = preset.params
    tau_final = params0.tau_from_ms(preset.evolution_ms)
    spec = CssSpec(center=center, n_atoms=params0.n_atoms,
                   n_samples=config.scan_samples, seed=config.seed)
    grid = np.arange(config.t0_points) / config.t0_points
    args = [(params0.with_(t0_frac=float(t)), spec, config.noise, tau_final,
             config.steps_per_period) for t in grid]
    results = run_indexed(_scan_point, args, config.jobs)
    normvar = np.array([r[0] for r in results])
    var_z = np.array([r[1] for r in results])
    base = _scan_point(params0.with_(drive_amp=0.0), spec, config.noise,
                       tau_final, config.steps_per_period)
    return grid, normvar, var_z, base[0]


def elliptic_phase_alignment(preset_name: str, config: ScenarioConfig):
    """Drive offset at which the elliptic (island) anchor passes the cloud center.

    The anchors of the period-2 chain at offset t0 are the t0 = 0 anchors
    transported along the flow for a time t0; the returned t0_frac
    minimizes the distance between the transported elliptic anchor and
    the scan center over a fine subdivision of the 2 T cycle.
    """
    preset = PRESETS[preset_name]
    center = _pick_center(preset, config)
    params = preset.params
    pair = orbits.find_resonance_orbits(params, preset.resonance_family)
    ells = [o for o in pair if o.stability is orbits.Stability.ELLIPTIC]
    if not ells:
        raise ScenarioError("orbits", "no elliptic anchor located")
    T = params.period
    ts = np.linspace(0.0, 2.0 * T, 512, endpoint=False)
    cfg = DEFAULT_CONFIG.with_(dense_times=tuple(ts))
    traj = integrate.propagate(params, ells[0].anchor, (0.0, 2.0 * T), cfg)
    c = center.cartesian()
    pts = np.array([s.cartesian() for s in traj.states])
    d = np.linalg.norm(pts - c[None, :], axis=1)
    i = int(np.argmin(d))
    # mean drift speed of the anchor along its cycle
    speed = np.mean([np.linalg.norm(model.eom_cartesian(params, pts[j], ts[j]))
                     for j in range(0, len(ts), 8)])
    return float((ts[i] / T) % 1.0), float(d[i]), float(speed)


def _run_scan_scenario(config: ScenarioConfig, preset_name: str):
    preset = PRESETS[preset_name]
    center = _pick_center(preset, config)
    try:
        grid, normvar, var_z, baseline = run_t0_scan(preset_name, config)
    except ScenarioError:
        raise
    except Exception as exc:
        raise ScenarioError("scan", exc)
    try:
        t0_star, d_min, speed = elliptic_phase_alignment(preset_name, config)
    except ScenarioError:
        raise
    except Exception as exc:
        raise ScenarioError("orbits", exc)

    params = preset.params
    header = ["t0_frac", "t0_ms", "normvar_z", "var_z", "below_baseline"]
    t_ms = grid * params.period / params.omega0 * 1e3
    rows = [(grid[i], t_ms[i], normvar[i], var_z[i], int(normvar[i] < baseline))
            for i in range(len(grid))]
    base = os.path.join(config.out_dir, config.scenario)
    artifacts = [output.write_csv(base + ".csv", header, rows)]

    fig = svgplot.SvgFigure((0.0, 1.0), (0.0, float(normvar.max() * 1.1)),
                            x_label="t0 / T", y_label="Var(z) / Var_CSS",
                            title=config.scenario)
    fig.line(grid, normvar, color="#1f3b73")
    fig.line([0.0, 1.0], [baseline, baseline], color="#888888")
    fig.scatter([t0_star], [baseline], color="#d01f1f", size=2.5, marker="triangle")
    artifacts.append(fig.write(base + ".svg"))

    extra = {"evolution_ms": preset.evolution_ms, "baseline_normvar": baseline,
             "elliptic_phase_t0_frac": t0_star, "elliptic_min_distance": d_min,
             "island_drift_speed": speed, "t0_points": config.t0_points,
             "scan_samples": config.scan_samples, "start": config.start}
    return _resolved_entries(config, preset, params, center, extra), artifacts


def run_scenario(config: ScenarioConfig) -> str:
    """Execute a named scenario; returns the manifest path.

    Any stage failure raises ScenarioError naming the stage.
    """
    name = config.scenario
    if name == "fig1d":
        entries, artifacts = _run_fig1d(config)
    elif name.startswith("fig2-") or name.startswith("fig3-"):
        preset_name, variant = name.split("-", 1)
        if preset_name not in PRESETS or variant not in PRESETS[preset_name].t0_variants:
            raise ScenarioError("setup", f"unknown scenario {name!r}")
        entries, artifacts = _series_scenario(config, preset_name, variant)
    elif name in ("fig4a", "fig4b"):
        entries, artifacts = _run_scan_scenario(config, name)
    else:
        raise ScenarioError("setup", f"unknown scenario {name!r}")
    manifest = os.path.join(config.out_dir, f"{name}_manifest.txt")
    return output.write_manifest(manifest, entries, artifacts)
