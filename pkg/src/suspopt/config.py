"""Run configuration: YAML loading, per-scenario defaults, validation.

A run is described by one nested key-value file.  Every setting either
appears in the file or is covered by a documented default (see
docs/config_schema.md); unknown keys anywhere are rejected with the
full key path in the message.
"""

import math
import os
from dataclasses import dataclass

import yaml

from .errors import ConfigError
from .objectives import CASE_COMPONENTS, CASES

SCENARIOS = CASES

_LINEAR_SPRING = {"kind": "linear", "rate": 22000.0}
_LINEAR_DAMPER = {"kind": "linear", "rate": 1800.0}
# default nonlinear shapes: a progressive spring table and a saturating
# exponential damper whose small-velocity slope matches the linear one
_PROGRESSIVE_SPRING = {
    "kind": "table",
    "deflection": [-0.15, -0.05, 0.0, 0.05, 0.15],
    "force": [-6100.0, -1400.0, 0.0, 1400.0, 6100.0],
}
_EXPONENTIAL_DAMPER = {"kind": "exponential", "A": -900.0, "k": 0.8, "B": 900.0, "q": 1.2}

_DEFAULT_SPRING = {
    "quarter-1": _LINEAR_SPRING,
    "quarter-2": _LINEAR_SPRING,
    "quarter-3": _LINEAR_SPRING,
    "half-1": _LINEAR_SPRING,
    "half-2": _PROGRESSIVE_SPRING,
    "half-3": _PROGRESSIVE_SPRING,
}
_DEFAULT_DAMPER = {
    "quarter-1": _LINEAR_DAMPER,
    "quarter-2": _LINEAR_DAMPER,
    "quarter-3": _EXPONENTIAL_DAMPER,
    "half-1": _LINEAR_DAMPER,
    "half-2": _EXPONENTIAL_DAMPER,
    "half-3": _EXPONENTIAL_DAMPER,
}

_DEFAULT_ROAD = {
    "quarter-1": {"kind": "chirp"},
    "quarter-2": {"kind": "random"},
    "quarter-3": {"kind": "random"},
    "half-1": {"kind": "dual", "mode": "identical"},
    "half-2": {"kind": "dual", "mode": "independent"},
    "half-3": {"kind": "dual", "mode": "independent", "roughness_multiplier": 4.0},
}

_DEFAULT_WEIGHTS = {
    "quarter-1": [0.5, 0.5],
    "quarter-2": [0.5, 0.5],
    "quarter-3": [0.5, 0.5],
    "half-1": [0.5, 0.5, 0.0],
    "half-2": [0.5, 0.5, 0.0],
    "half-3": [0.4, 0.4, 0.2],
}


@dataclass(frozen=True)
class RunConfig:
    """A fully resolved run description (all defaults applied)."""

    scenario: str
    output: str
    vehicle: dict
    simulation: dict
    road: dict
    objective: dict
    optimizer: dict
    bode: dict
    grid: dict

    @property
    def kind(self):
        return "quarter" if self.scenario.startswith("quarter") else "half"

    def echo(self):
        """Config echo for the manifest: everything except the output path
        (so identical runs into different directories stay comparable)."""
        return {
            "scenario": self.scenario,
            "vehicle": self.vehicle,
            "simulation": self.simulation,
            "road": self.road,
            "objective": self.objective,
            "optimizer": self.optimizer,
            "bode": self.bode,
            "grid": self.grid,
        }


def _require_mapping(value, path):
    if value is None:
        return {}
    if not isinstance(value, dict):
        raise ConfigError(f"{path}: expected a mapping, got {type(value).__name__}")
    return value


def _reject_unknown(section, path, allowed):
    unknown = sorted(set(section) - set(allowed))
    if unknown:
        raise ConfigError(
            f"{path}: unknown key(s) {', '.join(map(repr, unknown))}; "
            f"allowed: {', '.join(sorted(allowed))}"
        )


def _number(section, path, key, default, *, positive=False, nonneg=False):
    value = section.get(key, default)
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{path}.{key}: expected a number, got {value!r}")
    value = float(value)
    if not math.isfinite(value):
        raise ConfigError(f"{path}.{key}: must be finite, got {value!r}")
    if positive and value <= 0.0:
        raise ConfigError(f"{path}.{key}: must be positive, got {value!r}")
    if nonneg and value < 0.0:
        raise ConfigError(f"{path}.{key}: must be non-negative, got {value!r}")
    return value


def _integer(section, path, key, default, *, minimum=None):
    value = section.get(key, default)
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(f"{path}.{key}: expected an integer, got {value!r}")
    if minimum is not None and value < minimum:
        raise ConfigError(f"{path}.{key}: must be >= {minimum}, got {value}")
    return int(value)


def _string(section, path, key, default, choices=None):
    value = section.get(key, default)
    if not isinstance(value, str):
        raise ConfigError(f"{path}.{key}: expected a string, got {value!r}")
    if choices is not None and value not in choices:
        raise ConfigError(
            f"{path}.{key}: expected one of {', '.join(choices)}, got {value!r}"
        )
    return value


def _boolean(section, path, key, default):
    value = section.get(key, default)
    if not isinstance(value, bool):
        raise ConfigError(f"{path}.{key}: expected true/false, got {value!r}")
    return value


def _number_list(section, path, key, default, length=None):
    value = section.get(key, default)
    if not isinstance(value, (list, tuple)) or any(
        isinstance(v, bool) or not isinstance(v, (int, float)) for v in value
    ):
        raise ConfigError(f"{path}.{key}: expected a list of numbers, got {value!r}")
    out = [float(v) for v in value]
    if any(not math.isfinite(v) for v in out):
        raise ConfigError(f"{path}.{key}: entries must be finite")
    if length is not None and len(out) != length:
        raise ConfigError(f"{path}.{key}: expected {length} entries, got {len(out)}")
    return out


def _path(section, path, key, base_dir):
    if key not in section:
        raise ConfigError(f"{path}.{key}: required for kind 'file'")
    value = section[key]
    if not isinstance(value, str) or not value:
        raise ConfigError(f"{path}.{key}: expected a file path, got {value!r}")
    return os.path.abspath(os.path.join(base_dir, value))


def _resolve_spring(raw, path, scenario, base_dir):
    section = _require_mapping(raw, path)
    if not section:
        section = dict(_DEFAULT_SPRING[scenario])
    kind = _string(section, path, "kind", None, choices=("linear", "table", "file"))
    if kind == "linear":
        _reject_unknown(section, path, ("kind", "rate"))
        return {"kind": "linear", "rate": _number(section, path, "rate", 22000.0, positive=True)}
    if kind == "table":
        _reject_unknown(section, path, ("kind", "deflection", "force"))
        deflection = _number_list(section, path, "deflection", None)
        force = _number_list(section, path, "force", None, length=len(deflection))
        return {"kind": "table", "deflection": deflection, "force": force}
    _reject_unknown(section, path, ("kind", "path"))
    return {"kind": "file", "path": _path(section, path, "path", base_dir)}


def _resolve_damper(raw, path, scenario, base_dir):
    section = _require_mapping(raw, path)
    if not section:
        section = dict(_DEFAULT_DAMPER[scenario])
    kind = _string(
        section, path, "kind", None, choices=("linear", "exponential", "file")
    )
    if kind == "linear":
        _reject_unknown(section, path, ("kind", "rate"))
        return {"kind": "linear", "rate": _number(section, path, "rate", 1800.0, positive=True)}
    if kind == "exponential":
        _reject_unknown(section, path, ("kind", "A", "k", "B", "q"))
        return {
            "kind": "exponential",
            "A": _number(section, path, "A", -900.0),
            "k": _number(section, path, "k", 0.8, positive=True),
            "B": _number(section, path, "B", 900.0),
            "q": _number(section, path, "q", 1.2, positive=True),
        }
    # a measured force-velocity table is fitted to the exponential form
    _reject_unknown(section, path, ("kind", "path"))
    return {"kind": "file", "path": _path(section, path, "path", base_dir)}


def _resolve_vehicle(raw, scenario, base_dir):
    path = "vehicle"
    section = _require_mapping(raw, path)
    kind = "quarter" if scenario.startswith("quarter") else "half"
    declared = _string(section, path, "kind", kind, choices=("quarter", "half"))
    if declared != kind:
        raise ConfigError(
            f"vehicle.kind: scenario {scenario} runs a {kind} car, got {declared!r}"
        )
    common = ("kind", "m_s", "m_u", "k_u", "spring", "damper")
    if kind == "quarter":
        _reject_unknown(section, path, common + ("b_u",))
        out = {
            "kind": kind,
            "m_s": _number(section, path, "m_s", 450.0, positive=True),
            "m_u": _number(section, path, "m_u", 45.0, positive=True),
            "k_u": _number(section, path, "k_u", 200000.0, positive=True),
            "b_u": _number(section, path, "b_u", 150.0, nonneg=True),
        }
    else:
        _reject_unknown(section, path, common + ("I_xx", "I_uxx", "track"))
        out = {
            "kind": kind,
            "m_s": _number(section, path, "m_s", 900.0, positive=True),
            "m_u": _number(section, path, "m_u", 90.0, positive=True),
            "I_xx": _number(section, path, "I_xx", 250.0, positive=True),
            "I_uxx": _number(section, path, "I_uxx", 40.0, positive=True),
            "track": _number(section, path, "track", 1.6, positive=True),
            "k_u": _number(section, path, "k_u", 200000.0, positive=True),
        }
    out["spring"] = _resolve_spring(section.get("spring"), "vehicle.spring", scenario, base_dir)
    out["damper"] = _resolve_damper(section.get("damper"), "vehicle.damper", scenario, base_dir)
    return out


def _resolve_simulation(raw):
    path = "simulation"
    section = _require_mapping(raw, path)
    _reject_unknown(section, path, ("dt", "duration", "t_skip"))
    dt = _number(section, path, "dt", 1e-3, positive=True)
    duration = _number(section, path, "duration", 60.0, positive=True)
    t_skip = _number(section, path, "t_skip", 4.0, nonneg=True)
    if t_skip >= duration:
        raise ConfigError(
            f"simulation.t_skip: must be below the duration, got {t_skip} >= {duration}"
        )
    return {"dt": dt, "duration": duration, "t_skip": t_skip}


def _resolve_road(raw, scenario, base_dir):
    path = "road"
    section = _require_mapping(raw, path)
    defaults = _DEFAULT_ROAD[scenario]
    kind = _string(section, path, "kind", defaults["kind"], choices=("chirp", "random", "dual", "file"))
    quarter = scenario.startswith("quarter")
    if kind == "chirp":
        _reject_unknown(section, path, ("kind", "f0", "f1", "amplitude"))
        f0 = _number(section, path, "f0", 0.1, positive=True)
        f1 = _number(section, path, "f1", 20.0, positive=True)
        if f1 <= f0:
            raise ConfigError(f"road.f1: must exceed f0, got [{f0}, {f1}]")
        return {
            "kind": "chirp",
            "f0": f0,
            "f1": f1,
            "amplitude": _number(section, path, "amplitude", 0.01, positive=True),
        }
    if kind == "random":
        if not quarter:
            raise ConfigError("road.kind: half-car scenarios need a 'dual' or 'file' road")
        _reject_unknown(
            section,
            path,
            ("kind", "seed", "roughness", "speed", "cutoff_wavenumber", "roughness_multiplier"),
        )
        return {
            "kind": "random",
            "seed": _integer(section, path, "seed", 1, minimum=0),
            "roughness": _number(section, path, "roughness", 16e-6, nonneg=True),
            "speed": _number(section, path, "speed", 20.0, positive=True),
            "cutoff_wavenumber": _number(section, path, "cutoff_wavenumber", 0.01, positive=True),
            "roughness_multiplier": _number(
                section, path, "roughness_multiplier", defaults.get("roughness_multiplier", 1.0), positive=True
            ),
        }
    if kind == "dual":
        if quarter:
            raise ConfigError("road.kind: quarter-car scenarios need a single-track road")
        mode = _string(section, path, "mode", defaults.get("mode", "identical"), choices=("identical", "independent"))
        allowed = ["kind", "mode", "seed", "roughness", "speed", "cutoff_wavenumber", "roughness_multiplier"]
        if mode == "independent":
            allowed.append("right_seed")
        _reject_unknown(section, path, allowed)
        out = {
            "kind": "dual",
            "mode": mode,
            "seed": _integer(section, path, "seed", 1, minimum=0),
            "roughness": _number(section, path, "roughness", 16e-6, nonneg=True),
            "speed": _number(section, path, "speed", 20.0, positive=True),
            "cutoff_wavenumber": _number(section, path, "cutoff_wavenumber", 0.01, positive=True),
            "roughness_multiplier": _number(
                section, path, "roughness_multiplier", defaults.get("roughness_multiplier", 1.0), positive=True
            ),
        }
        if mode == "independent":
            out["right_seed"] = _integer(section, path, "right_seed", out["seed"] + 1, minimum=0)
        return out
    _reject_unknown(section, path, ("kind", "path"))
    return {"kind": "file", "path": _path(section, path, "path", base_dir)}


def _resolve_objective(raw, scenario, base_dir):
    path = "objective"
    section = _require_mapping(raw, path)
    arity = len(CASE_COMPONENTS[scenario])
    allowed = ["weights", "normalization"]
    if scenario == "quarter-1":
        allowed.append("reference")
    if scenario == "half-3":
        allowed.append("baseline")
    _reject_unknown(section, path, allowed)

    weights = _number_list(section, path, "weights", list(_DEFAULT_WEIGHTS[scenario]), length=arity)
    if any(w < 0.0 for w in weights):
        raise ConfigError(f"objective.weights: must be non-negative, got {weights}")
    if scenario == "half-1" and weights[2] != 0.0:
        raise ConfigError("objective.weights: half-1 fixes the roll weight at 0")

    normalization = section.get("normalization", "initial")
    if normalization != "initial":
        norm_section = _require_mapping(normalization, f"{path}.normalization")
        _reject_unknown(norm_section, f"{path}.normalization", CASE_COMPONENTS[scenario])
        normalization = {
            key: _number(norm_section, f"{path}.normalization", key, None, positive=True)
            for key in norm_section
        }

    out = {"weights": weights, "normalization": normalization}
    if scenario == "quarter-1":
        ref = _require_mapping(section.get("reference"), f"{path}.reference")
        _reject_unknown(ref, f"{path}.reference", ("spring_rate", "damper_rate"))
        # The tracking target must differ from the stock suspension or the
        # deviation penalty is identically zero at the start design.
        out["reference"] = {
            "spring_rate": _number(ref, f"{path}.reference", "spring_rate", 16000.0, positive=True),
            "damper_rate": _number(ref, f"{path}.reference", "damper_rate", 1500.0, positive=True),
        }
    if scenario == "half-3":
        if "baseline" not in section:
            raise ConfigError("objective.baseline: half-3 requires a baseline run reference")
        ref = _require_mapping(section["baseline"], f"{path}.baseline")
        _reject_unknown(ref, f"{path}.baseline", ("file",))
        out["baseline"] = {"file": _path(ref, f"{path}.baseline", "file", base_dir)}
    return out


def _resolve_optimizer(raw, scenario):
    path = "optimizer"
    section = _require_mapping(raw, path)
    _reject_unknown(
        section,
        path,
        ("lower", "upper", "grad_rel_step", "grad_tol", "step_tol", "max_evaluations", "initial"),
    )
    lower = _number(section, path, "lower", 0.2, positive=True)
    upper = _number(section, path, "upper", 5.0, positive=True)
    if upper <= lower:
        raise ConfigError(f"optimizer.upper: must exceed lower, got [{lower}, {upper}]")
    initial = section.get("initial", "baseline" if scenario == "half-3" else [1.0, 1.0])
    if initial == "baseline":
        if scenario != "half-3":
            raise ConfigError("optimizer.initial: 'baseline' is only meaningful for half-3")
    else:
        initial = _number_list(section, path, "initial", initial, length=2)
        if any(not (lower <= v <= upper) for v in initial):
            raise ConfigError(
                f"optimizer.initial: values must lie within [{lower}, {upper}], got {initial}"
            )
    return {
        "lower": lower,
        "upper": upper,
        "grad_rel_step": _number(section, path, "grad_rel_step", 1e-4, positive=True),
        "grad_tol": _number(section, path, "grad_tol", 1e-8, positive=True),
        "step_tol": _number(section, path, "step_tol", 1e-11, positive=True),
        "max_evaluations": _integer(section, path, "max_evaluations", 400, minimum=1),
        "initial": initial,
    }


def _resolve_bode(raw, simulation):
    path = "bode"
    section = _require_mapping(raw, path)
    _reject_unknown(
        section,
        path,
        ("enabled", "f0", "f1", "amplitude", "duration", "t_skip", "segment_seconds", "overlap", "output"),
    )
    f0 = _number(section, path, "f0", 0.1, positive=True)
    f1 = _number(section, path, "f1", 20.0, positive=True)
    if f1 <= f0:
        raise ConfigError(f"bode.f1: must exceed f0, got [{f0}, {f1}]")
    duration = _number(section, path, "duration", 120.0, positive=True)
    t_skip = _number(section, path, "t_skip", simulation["t_skip"], nonneg=True)
    if t_skip >= duration:
        raise ConfigError(f"bode.t_skip: must be below the duration, got {t_skip} >= {duration}")
    overlap = _number(section, path, "overlap", 0.5, nonneg=True)
    if overlap >= 1.0:
        raise ConfigError(f"bode.overlap: must lie in [0, 1), got {overlap}")
    return {
        "enabled": _boolean(section, path, "enabled", False),
        "f0": f0,
        "f1": f1,
        "amplitude": _number(section, path, "amplitude", 0.01, positive=True),
        "duration": duration,
        "t_skip": t_skip,
        "segment_seconds": _number(section, path, "segment_seconds", 8.0, positive=True),
        "overlap": overlap,
        "output": _string(section, path, "output", "body_disp", choices=("body_disp", "axle_disp")),
    }


def _resolve_grid(raw, optimizer):
    path = "grid"
    section = _require_mapping(raw, path)
    _reject_unknown(section, path, ("enabled", "resolution", "lower", "upper"))
    resolution = section.get("resolution", 21)
    if isinstance(resolution, bool) or not isinstance(resolution, (int, list, tuple)):
        raise ConfigError(f"grid.resolution: expected an integer or pair, got {resolution!r}")
    if isinstance(resolution, (list, tuple)):
        if len(resolution) != 2 or any(isinstance(r, bool) or not isinstance(r, int) for r in resolution):
            raise ConfigError(f"grid.resolution: expected two integers, got {resolution!r}")
        resolution = [int(r) for r in resolution]
        if any(r < 2 for r in resolution):
            raise ConfigError("grid.resolution: needs at least 2 points per axis")
    elif resolution < 2:
        raise ConfigError("grid.resolution: needs at least 2 points per axis")
    lower = _number_list(section, path, "lower", [optimizer["lower"]] * 2, length=2)
    upper = _number_list(section, path, "upper", [optimizer["upper"]] * 2, length=2)
    if any(u <= l for l, u in zip(lower, upper)):
        raise ConfigError(f"grid.upper: must exceed lower per axis, got {lower} / {upper}")
    return {
        "enabled": _boolean(section, path, "enabled", False),
        "resolution": resolution,
        "lower": lower,
        "upper": upper,
    }


def resolve_config(raw, base_dir="."):
    """Validate a raw mapping and fill every default."""
    raw = _require_mapping(raw, "config")
    _reject_unknown(
        raw,
        "config",
        ("scenario", "output", "vehicle", "simulation", "road", "objective", "optimizer", "bode", "grid"),
    )
    if "scenario" not in raw:
        raise ConfigError(f"config.scenario: required; one of {', '.join(SCENARIOS)}")
    scenario = _string(raw, "config", "scenario", None, choices=SCENARIOS)
    output = _string(raw, "config", "output", os.path.join("runs", scenario))
    simulation = _resolve_simulation(raw.get("simulation"))
    optimizer = _resolve_optimizer(raw.get("optimizer"), scenario)
    return RunConfig(
        scenario=scenario,
        output=output,
        vehicle=_resolve_vehicle(raw.get("vehicle"), scenario, base_dir),
        simulation=simulation,
        road=_resolve_road(raw.get("road"), scenario, base_dir),
        objective=_resolve_objective(raw.get("objective"), scenario, base_dir),
        optimizer=optimizer,
        bode=_resolve_bode(raw.get("bode"), simulation),
        grid=_resolve_grid(raw.get("grid"), optimizer),
    )


def load_config(path, seed=None):
    """Load and resolve a YAML run configuration.

    ``seed`` (when given) overrides the road seed; an independent
    dual-track road gets ``seed + 1`` on the right track unless the
    file pinned ``right_seed`` explicitly.
    """
    try:
        with open(path) as fh:
            raw = yaml.safe_load(fh)
    except yaml.YAMLError as exc:
        raise ConfigError(f"{path}: not valid YAML: {exc}") from exc
    config = resolve_config(raw, base_dir=os.path.dirname(os.path.abspath(path)))
    if seed is not None:
        road = config.road
        if "seed" not in road:
            raise ConfigError(f"--seed: the {road['kind']} road takes no seed")
        explicit_right = isinstance(raw.get("road"), dict) and "right_seed" in raw["road"]
        road["seed"] = int(seed)
        if "right_seed" in road and not explicit_right:
            road["right_seed"] = int(seed) + 1
    return config