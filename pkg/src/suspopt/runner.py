"""Scenario runner: assembles a configured problem, optimizes the
characteristic scale factors, and writes the complete result tree.

Every emitted file is deterministic — same config, same bytes — so two
runs of one configuration can be compared by hashing their trees.
"""

import dataclasses
import json
import math
import os
import platform

import numpy as np

from . import __version__
from .analysis import numeric_bode
from .characteristics import (
    DamperCurve,
    LinearLaw,
    SpringTable,
    damper_force,
    fit_damper_curve,
    load_table,
    save_table,
    scale_characteristic,
    spring_force,
)
from .config import RunConfig
from .errors import (
    ComparisonError,
    ConfigError,
    DivergenceError,
    EquilibriumError,
)
from .objectives import CASE_COMPONENTS, ObjectiveSpec, evaluate_objective
from .optimizer import DesignVector, grid_surface, minimize
from .road import RoadProfile, chirp_profile, dual_track_profile, random_profile
from .simulate import integrate, trim_transient
from .vehicle import HalfCarParams, QuarterCarParams, settle
from .weighting import vertical_weighting

DESIGN_NAMES = ("spring_scale", "damper_scale")

COMPONENT_UNITS = {
    "Z_s_w": "m/s^2",
    "dF_tire": "N",
    "Phi_s": "rad",
    "I2_penalty": "m/s^2",
    "C_lost": "m/s^2",
    "H_lost": "N",
}

# sampling grids for the emitted characteristic tables
_SPRING_GRID = np.linspace(-0.2, 0.2, 81)
_DAMPER_GRID = np.linspace(-2.0, 2.0, 81)


def build_spring(cfg):
    if cfg["kind"] == "linear":
        return LinearLaw(cfg["rate"]), None
    if cfg["kind"] == "table":
        return SpringTable(deflection=cfg["deflection"], force=cfg["force"]), None
    x, force = load_table(cfg["path"])
    return SpringTable(deflection=x, force=force), None


def build_damper(cfg):
    if cfg["kind"] == "linear":
        return LinearLaw(cfg["rate"]), None
    if cfg["kind"] == "exponential":
        return DamperCurve(A=cfg["A"], k=cfg["k"], B=cfg["B"], q=cfg["q"]), None
    velocity, force = load_table(cfg["path"])
    fit = fit_damper_curve(velocity, force)
    note = {
        "source": cfg["path"],
        "A": fit.curve.A,
        "k": fit.curve.k,
        "B": fit.curve.B,
        "q": fit.curve.q,
        "residual_rms": fit.residual_rms,
    }
    return fit.curve, note


def build_vehicle(cfg, spring, damper):
    if cfg["kind"] == "quarter":
        return QuarterCarParams(
            m_s=cfg["m_s"],
            m_u=cfg["m_u"],
            spring=spring,
            damper=damper,
            k_u=cfg["k_u"],
            b_u=cfg["b_u"],
        )
    return HalfCarParams.symmetric(
        m_s=cfg["m_s"],
        m_u=cfg["m_u"],
        I_xx=cfg["I_xx"],
        I_uxx=cfg["I_uxx"],
        track=cfg["track"],
        spring=spring,
        damper=damper,
        k_u=cfg["k_u"],
    )


def build_road(cfg, simulation, kind):
    duration = simulation["duration"]
    dt = simulation["dt"]
    if cfg["kind"] == "chirp":
        road = chirp_profile(cfg["f0"], cfg["f1"], cfg["amplitude"], duration, dt)
        if kind == "half":
            road = RoadProfile(
                dt=road.dt,
                elevation=np.vstack([road.elevation[0], road.elevation[0]]),
                meta=dict(road.meta, tracks="duplicated"),
            )
        return road
    if cfg["kind"] == "random":
        return random_profile(
            cfg["roughness"] * cfg["roughness_multiplier"],
            cfg["speed"],
            duration,
            dt,
            cfg["seed"],
            cutoff_wavenumber=cfg["cutoff_wavenumber"],
        )
    if cfg["kind"] == "dual":
        return dual_track_profile(
            cfg["roughness"] * cfg["roughness_multiplier"],
            cfg["speed"],
            duration,
            dt,
            cfg["seed"],
            mode=cfg["mode"],
            right_seed=cfg.get("right_seed"),
            cutoff_wavenumber=cfg["cutoff_wavenumber"],
        )
    road = RoadProfile.load(cfg["path"])
    wanted = 1 if kind == "quarter" else 2
    if road.tracks != wanted:
        raise ConfigError(
            f"road.path: {cfg['path']} has {road.tracks} track(s), "
            f"a {kind} car needs {wanted}"
        )
    return road


@dataclasses.dataclass
class Problem:
    """A fully assembled case: vehicle, road, objective, start design."""

    config: RunConfig
    params: object
    spring: object
    damper: object
    road: RoadProfile
    spec: ObjectiveSpec
    design: DesignVector
    normalization: dict
    initial_trajectory: object
    notes: dict

    def applied(self, values):
        """Vehicle parameters with scaled characteristics, settled."""
        s, d = float(values[0]), float(values[1])
        spring = scale_characteristic(self.spring, s)
        damper = scale_characteristic(self.damper, d)
        if isinstance(self.params, QuarterCarParams):
            candidate = dataclasses.replace(
                self.params, spring=spring, damper=damper, spring_offset=0.0
            )
        else:
            candidate = dataclasses.replace(
                self.params,
                spring_left=spring,
                spring_right=spring,
                damper_left=damper,
                damper_right=damper,
                spring_offset_left=0.0,
                spring_offset_right=0.0,
            )
        return settle(candidate)

    def simulate_full(self, values):
        sim = self.config.simulation
        return integrate(
            self.applied(values), self.road, dt=sim["dt"], duration=sim["duration"]
        )

    def simulate(self, values):
        return trim_transient(self.simulate_full(values), self.config.simulation["t_skip"])

    def objective(self, values):
        """Total objective with the metric components as aux payload."""
        try:
            total, metrics = evaluate_objective(self.spec, self.simulate(values))
        except (DivergenceError, EquilibriumError):
            return math.inf, None
        return total, metrics.as_dict()

    def objective_value(self, values):
        return self.objective(values)[0]


def _load_baseline_design(path):
    if not os.path.isfile(path):
        raise ConfigError(f"objective.baseline: no such baseline file: {path}")
    try:
        with open(path) as fh:
            payload = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"objective.baseline: {path} is not valid JSON: {exc}") from exc
    try:
        design = payload["optimized"]["design"]
        names = tuple(design["names"])
        values = [float(v) for v in design["values"]]
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(
            f"objective.baseline: {path} does not look like a result file "
            "(missing optimized design)"
        ) from exc
    if names != DESIGN_NAMES or len(values) != 2:
        raise ConfigError(
            f"objective.baseline: {path} optimized different design variables: {names}"
        )
    return values, payload.get("scenario")


def prepare_problem(config):
    """Build vehicle, road, objective spec and start design for a config."""
    notes = {}
    spring, _ = build_spring(config.vehicle["spring"])
    damper, fit_note = build_damper(config.vehicle["damper"])
    if fit_note:
        notes["damper_fit"] = fit_note
    params = build_vehicle(config.vehicle, spring, damper)
    road = build_road(config.road, config.simulation, config.kind)

    scenario = config.scenario
    weights = config.objective["weights"]
    w3 = weights[2] if len(weights) == 3 else 0.0
    opt = config.optimizer

    problem = Problem(
        config=config,
        params=params,
        spring=spring,
        damper=damper,
        road=road,
        spec=None,
        design=None,
        normalization={},
        initial_trajectory=None,
        notes=notes,
    )

    baseline = None
    if scenario == "quarter-1":
        ref = config.objective["reference"]
        reference_params = settle(
            dataclasses.replace(
                params,
                spring=LinearLaw(ref["spring_rate"]),
                damper=LinearLaw(ref["damper_rate"]),
                spring_offset=0.0,
            )
        )
        sim = config.simulation
        reference_traj = trim_transient(
            integrate(reference_params, road, dt=sim["dt"], duration=sim["duration"]),
            sim["t_skip"],
        )
        baseline = reference_traj.axle_accel
        notes["reference"] = dict(ref)
        problem.notes["reference_trajectory"] = reference_traj

    initial = opt["initial"]
    if scenario == "half-3":
        baseline_values, baseline_scenario = _load_baseline_design(
            config.objective["baseline"]["file"]
        )
        baseline_traj = _simulate_candidate(problem, baseline_values)
        probe_spec = ObjectiveSpec(
            case="half-2", w1=1.0, w2=1.0, w3=0.0, weighting=vertical_weighting()
        )
        _, baseline_metrics = evaluate_objective(probe_spec, baseline_traj)
        baseline = {
            "Z_s_w": baseline_metrics.Z_s_w,
            "dF_tire": baseline_metrics.dF_tire,
        }
        notes["baseline"] = {
            "file": config.objective["baseline"]["file"],
            "scenario": baseline_scenario,
            "design": {"names": list(DESIGN_NAMES), "values": baseline_values},
            "Z_s_w": baseline_metrics.Z_s_w,
            "dF_tire": baseline_metrics.dF_tire,
            "Phi_s": baseline_metrics.Phi_s,
        }
        if initial == "baseline":
            initial = baseline_values

    design = DesignVector.scales(
        DESIGN_NAMES,
        values=initial,
        lower=[opt["lower"]] * 2,
        upper=[opt["upper"]] * 2,
    )

    raw_spec = ObjectiveSpec(
        case=scenario,
        w1=weights[0],
        w2=weights[1],
        w3=w3,
        weighting=vertical_weighting(),
        baseline=baseline,
        normalization=None,
    )
    problem.spec = raw_spec
    problem.design = design
    traj0 = _simulate_candidate(problem, design.values)
    _, metrics0 = evaluate_objective(raw_spec, traj0)

    norm_cfg = config.objective["normalization"]
    if norm_cfg == "initial":
        raw0 = metrics0.as_dict()
        normalization = {}
        for name in CASE_COMPONENTS[scenario]:
            # Losses are deviations from an allowance, so their natural
            # scale is the baseline metric, not the (possibly tiny or
            # zero) initial deviation itself.
            if name == "C_lost":
                value = baseline["Z_s_w"]
            elif name == "H_lost":
                value = baseline["dF_tire"]
            else:
                value = abs(raw0.get(name, 0.0))
            normalization[name] = value if value > 0.0 else 1.0
    else:
        normalization = dict(norm_cfg)

    problem.spec = dataclasses.replace(raw_spec, normalization=normalization)
    problem.normalization = normalization
    problem.initial_trajectory = traj0
    return problem


def _simulate_candidate(problem, values):
    sim = problem.config.simulation
    return trim_transient(
        integrate(
            problem.applied(values), problem.road, dt=sim["dt"], duration=sim["duration"]
        ),
        sim["t_skip"],
    )


def _write_json(path, payload):
    with open(path, "w", encoding="ascii") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _write_reference_history(path, traj):
    with open(path, "w", encoding="ascii") as fh:
        fh.write("time,axle_accel\n")
        for t, a in zip(traj.t, traj.axle_accel):
            fh.write(f"{float(t)!r},{float(a)!r}\n")


def _curve_tables(problem, values, out):
    spring = scale_characteristic(problem.spring, float(values[0]))
    damper = scale_characteristic(problem.damper, float(values[1]))
    save_table(
        os.path.join(out, "spring_curve.txt"),
        _SPRING_GRID,
        spring_force(spring, _SPRING_GRID),
        header=f"optimized spring: deflection [m], force [N] (scale {float(values[0])!r})",
    )
    save_table(
        os.path.join(out, "damper_curve.txt"),
        _DAMPER_GRID,
        damper_force(damper, _DAMPER_GRID),
        header=f"optimized damper: velocity [m/s], force [N] (scale {float(values[1])!r})",
    )


def _percent(before, after):
    if before == 0.0:
        return "n/a"
    return f"{(after - before) / abs(before) * 100.0:+.2f}%"


def _design_entry(values, total, components):
    return {
        "design": {"names": list(DESIGN_NAMES), "values": [float(v) for v in values]},
        "total": float(total),
        "components": {k: float(v) for k, v in components.items()},
    }


def _metric_report(config, payload, normalization):
    scenario = config.scenario
    lines = [
        f"scenario: {scenario}",
        f"road: {_road_label(config.road)}",
        f"transient skipped: {config.simulation['t_skip']:.9g} s of {config.simulation['duration']:.9g} s at dt = {config.simulation['dt']:.9g} s",
        f"weights: {', '.join(f'{w:.9g}' for w in config.objective['weights'])}",
        "",
        f"initial design:   " + "  ".join(
            f"{n} = {v:.9g}" for n, v in zip(DESIGN_NAMES, payload["initial"]["design"]["values"])
        ),
        f"optimized design: " + "  ".join(
            f"{n} = {v:.9g}" for n, v in zip(DESIGN_NAMES, payload["optimized"]["design"]["values"])
        ),
        f"termination: {payload['termination']} after {payload['evaluations']} evaluations",
        "",
        f"{'component':<22}{'initial':>16}{'optimized':>16}{'normalized init':>18}{'normalized opt':>18}{'change':>10}",
    ]
    a = payload["initial"]["components"]
    b = payload["optimized"]["components"]
    for name in CASE_COMPONENTS[scenario]:
        unit = COMPONENT_UNITS[name]
        norm = normalization.get(name, 1.0)
        lines.append(
            f"{name + ' [' + unit + ']':<22}"
            f"{a[name]:>16.9g}{b[name]:>16.9g}"
            f"{a[name] / norm:>18.9g}{b[name] / norm:>18.9g}"
            f"{_percent(a[name], b[name]):>10}"
        )
    lines.append(
        f"{'total (weighted)':<22}{payload['initial']['total']:>16.9g}{payload['optimized']['total']:>16.9g}"
        f"{'':>18}{'':>18}{_percent(payload['initial']['total'], payload['optimized']['total']):>10}"
    )
    extras = sorted(set(b) - set(CASE_COMPONENTS[scenario]))
    if extras:
        lines.append("")
        lines.append("unweighted diagnostics:")
        for name in extras:
            lines.append(
                f"{name + ' [' + COMPONENT_UNITS[name] + ']':<22}"
                f"{a[name]:>16.9g}{b[name]:>16.9g}{'':>18}{'':>18}"
                f"{_percent(a[name], b[name]):>10}"
            )
    return "\n".join(lines) + "\n"


def _road_label(road_cfg):
    pairs = ", ".join(f"{k}={road_cfg[k]!r}" for k in sorted(road_cfg) if k != "kind")
    return f"{road_cfg['kind']} ({pairs})" if pairs else road_cfg["kind"]


def _manifest(config):
    return {
        "config": config.echo(),
        "versions": {
            "suspopt": __version__,
            "python": platform.python_version(),
            "numpy": np.__version__,
        },
    }


def run_scenario(config, out_dir=None, quiet=False):
    """Execute one case end to end; returns the result payload plus the
    output directory under the key ``output_dir``."""
    say = (lambda *a: None) if quiet else print
    out = os.path.abspath(out_dir or config.output)
    os.makedirs(out, exist_ok=True)

    say(f"[{config.scenario}] assembling problem")
    problem = prepare_problem(config)
    total0, metrics0 = evaluate_objective(problem.spec, problem.initial_trajectory)
    say(f"[{config.scenario}] initial objective {total0:.6g}")

    opt = config.optimizer
    result = minimize(
        problem.objective,
        problem.design,
        grad_rel_step=opt["grad_rel_step"],
        grad_tol=opt["grad_tol"],
        step_tol=opt["step_tol"],
        max_evaluations=opt["max_evaluations"],
    )
    say(
        f"[{config.scenario}] optimized objective {result.value:.6g} "
        f"({result.termination}, {result.evaluations} evaluations)"
    )

    trajN = problem.simulate(result.x)
    totalN, metricsN = evaluate_objective(problem.spec, trajN)

    payload = {
        "scenario": config.scenario,
        "road": config.road,
        "weights": [float(w) for w in config.objective["weights"]],
        "normalization": {k: float(v) for k, v in problem.normalization.items()},
        "initial": _design_entry(problem.design.values, total0, metrics0.as_dict()),
        "optimized": _design_entry(result.x, totalN, metricsN.as_dict()),
        "termination": result.termination,
        "evaluations": result.evaluations,
    }
    for key in ("damper_fit", "baseline", "reference"):
        if key in problem.notes:
            payload[key] = problem.notes[key]

    problem.road.save(os.path.join(out, "road.txt"))
    result.history.to_csv(os.path.join(out, "history.csv"), names=DESIGN_NAMES)
    problem.simulate_full(problem.design.values).save_csv(
        os.path.join(out, "trajectory_initial.csv")
    )
    problem.simulate_full(result.x).save_csv(os.path.join(out, "trajectory_optimized.csv"))
    _curve_tables(problem, result.x, out)
    if "reference_trajectory" in problem.notes:
        _write_reference_history(
            os.path.join(out, "reference_history.csv"),
            problem.notes["reference_trajectory"],
        )
    if "baseline" in problem.notes:
        _write_json(os.path.join(out, "baseline.json"), problem.notes["baseline"])

    if config.bode["enabled"]:
        _emit_bode(problem, problem.design.values, os.path.join(out, "bode_initial.txt"))
        _emit_bode(problem, result.x, os.path.join(out, "bode_optimized.txt"))

    if config.grid["enabled"]:
        surface = _run_grid_surface(problem)
        surface.save(os.path.join(out, "grid.txt"))
        gx, gy = surface.argmin_point
        payload["grid"] = {
            "argmin": [float(gx), float(gy)],
            "minimum": float(surface.minimum),
            "resolution": list(surface.values.shape),
        }

    _write_json(os.path.join(out, "result.json"), payload)
    with open(os.path.join(out, "metrics.txt"), "w", encoding="ascii") as fh:
        fh.write(_metric_report(config, payload, problem.normalization))
    _write_json(os.path.join(out, "manifest.json"), _manifest(config))

    say(f"[{config.scenario}] wrote {out}")
    return dict(payload, output_dir=out)


def _emit_bode(problem, values, path):
    cfg = problem.config.bode
    result = numeric_bode(
        problem.applied(values),
        f0=cfg["f0"],
        f1=cfg["f1"],
        amplitude=cfg["amplitude"],
        duration=cfg["duration"],
        dt=problem.config.simulation["dt"],
        t_skip=cfg["t_skip"],
        output=cfg["output"],
        segment_seconds=cfg["segment_seconds"],
        overlap=cfg["overlap"],
    )
    result.save(path)
    return result


def _run_grid_surface(problem):
    cfg = problem.config.grid
    resolution = cfg["resolution"]
    if isinstance(resolution, list):
        resolution = tuple(resolution)
    return grid_surface(
        problem.objective_value,
        ranges=[(cfg["lower"][0], cfg["upper"][0]), (cfg["lower"][1], cfg["upper"][1])],
        resolution=resolution,
        names=DESIGN_NAMES,
    )


def run_bode(config, out_dir=None, quiet=False):
    """Estimate the frequency response of the configured (unscaled)
    vehicle and write bode.txt."""
    say = (lambda *a: None) if quiet else print
    out = os.path.abspath(out_dir or config.output)
    os.makedirs(out, exist_ok=True)
    spring, _ = build_spring(config.vehicle["spring"])
    damper, _ = build_damper(config.vehicle["damper"])
    params = settle(build_vehicle(config.vehicle, spring, damper))
    cfg = config.bode
    result = numeric_bode(
        params,
        f0=cfg["f0"],
        f1=cfg["f1"],
        amplitude=cfg["amplitude"],
        duration=cfg["duration"],
        dt=config.simulation["dt"],
        t_skip=cfg["t_skip"],
        output=cfg["output"],
        segment_seconds=cfg["segment_seconds"],
        overlap=cfg["overlap"],
    )
    result.save(os.path.join(out, "bode.txt"))
    _write_json(os.path.join(out, "manifest.json"), _manifest(config))
    f_peak, magnitude = result.peak()
    say(f"[{config.scenario}] bode peak {magnitude:.4g} at {f_peak:.4g} Hz -> {out}")
    return result


def run_grid(config, out_dir=None, quiet=False):
    """Sweep the objective over the design box and write grid.txt."""
    say = (lambda *a: None) if quiet else print
    out = os.path.abspath(out_dir or config.output)
    os.makedirs(out, exist_ok=True)
    problem = prepare_problem(config)
    surface = _run_grid_surface(problem)
    surface.save(os.path.join(out, "grid.txt"))
    gx, gy = surface.argmin_point
    _write_json(
        os.path.join(out, "grid_summary.json"),
        {
            "argmin": [float(gx), float(gy)],
            "minimum": float(surface.minimum),
            "resolution": list(surface.values.shape),
            "names": list(DESIGN_NAMES),
        },
    )
    _write_json(os.path.join(out, "manifest.json"), _manifest(config))
    say(f"[{config.scenario}] grid minimum {surface.minimum:.6g} at ({gx:.6g}, {gy:.6g}) -> {out}")
    return surface


def _load_result(run_dir):
    path = os.path.join(run_dir, "result.json")
    if not os.path.isfile(path):
        raise ComparisonError(f"{run_dir}: no result.json (not a completed run directory)")
    with open(path) as fh:
        try:
            return json.load(fh)
        except json.JSONDecodeError as exc:
            raise ComparisonError(f"{path}: not valid JSON: {exc}") from exc


def compare_runs(dir_a, dir_b):
    """Side-by-side metric comparison of two completed run directories."""
    a = _load_result(dir_a)
    b = _load_result(dir_b)
    if a.get("scenario") != b.get("scenario"):
        raise ComparisonError(
            f"scenario mismatch: {a.get('scenario')!r} vs {b.get('scenario')!r}"
        )
    if a.get("road") != b.get("road"):
        raise ComparisonError("road mismatch: the runs excited different roads")
    scenario = a["scenario"]
    lines = [
        f"comparison: {scenario}",
        f"a: {dir_a}",
        f"b: {dir_b}",
        "",
        f"{'component':<22}{'a':>16}{'b':>16}{'change':>10}",
    ]
    ca = a["optimized"]["components"]
    cb = b["optimized"]["components"]
    for name in CASE_COMPONENTS[scenario]:
        if name not in ca or name not in cb:
            raise ComparisonError(f"component {name} missing from a metric report")
        unit = COMPONENT_UNITS[name]
        lines.append(
            f"{name + ' [' + unit + ']':<22}{ca[name]:>16.9g}{cb[name]:>16.9g}"
            f"{_percent(ca[name], cb[name]):>10}"
        )
    comparable = a.get("weights") == b.get("weights") and a.get("normalization") == b.get(
        "normalization"
    )
    if comparable:
        ta, tb = a["optimized"]["total"], b["optimized"]["total"]
        lines.append(f"{'total (weighted)':<22}{ta:>16.9g}{tb:>16.9g}{_percent(ta, tb):>10}")
    else:
        lines.append("totals omitted: the runs weighed or normalized components differently")
    return "\n".join(lines) + "\n"