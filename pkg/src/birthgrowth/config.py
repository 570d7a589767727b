"""Experiment files: INI-style ``key = value`` text, one section per concern.

Every key is optional; missing keys take the defaults below. Unknown
sections or keys and duplicated keys are errors.

    [model]       dimension = 1, tau = lebesgue | <float>, horizon = 1.0,
                  intensity = 1.0, window_scale = 1.0
    [window]      shape = box | ball, sides = 1.0[, ...] (box), radius (ball)
    [speed]       kind = point | discrete | uniform | pareto | lognormal
                  point: value = 1.0       discrete: values, probabilities
                  uniform: upper           pareto: alpha, scale, cap
                  lognormal: mu, sigma
    [campaign]    replications = 1000, scaling = none | window | intensity,
                  scales = <comma list>, seed = 0,
                  algorithm = indexed | naive | both
    [output]      directory = results, summary = summary.json, table = table.csv
    [quadrature]  atol = 1e-12, rtol = 1e-10, max_depth = 200
"""

import configparser
import hashlib
from dataclasses import dataclass

from .geometry import Ball, Box
from .mc import CampaignConfig
from .model import (
    FiniteDiscrete,
    LogNormal,
    ModelSpec,
    PointMass,
    QuadratureSpec,
    TimeIntensity,
    TruncatedPareto,
    Uniform,
    ValidationFailed,
)

SPEED_KEYS = {
    "point": ("value",),
    "discrete": ("values", "probabilities"),
    "uniform": ("upper",),
    "pareto": ("alpha", "scale", "cap"),
    "lognormal": ("mu", "sigma"),
}

ALLOWED = {
    "model": {"dimension", "tau", "horizon", "intensity", "window_scale"},
    "window": {"shape", "sides", "radius"},
    "speed": {"kind"} | {k for keys in SPEED_KEYS.values() for k in keys},
    "campaign": {"replications", "scaling", "scales", "seed", "algorithm"},
    "output": {"directory", "summary", "table"},
    "quadrature": {"atol", "rtol", "max_depth"},
}


class ConfigError(ValueError):
    def __init__(self, errors):
        self.errors = list(errors)
        super().__init__("\n".join(self.errors))


@dataclass(frozen=True)
class Experiment:
    campaign: CampaignConfig
    directory: str = "results"
    summary: str = "summary.json"
    table: str = "table.csv"

    @property
    def spec(self):
        return self.campaign.spec


def _floats(text):
    return tuple(float(x) for x in text.split(",") if x.strip())


class _Reader:
    def __init__(self, parser):
        self.parser = parser
        self.errors = []

    def get(self, section, key, convert, default):
        if not self.parser.has_option(section, key):
            return default
        raw = self.parser.get(section, key)
        try:
            return convert(raw)
        except (TypeError, ValueError) as exc:
            self.errors.append(f"[{section}] {key} = {raw!r}: {exc}")
            return default


def _tau(text):
    text = text.strip().lower()
    if text == "lebesgue":
        return TimeIntensity.lebesgue_measure()
    tau = float(text)
    if not tau > -1:
        raise ValueError("tau must exceed -1")
    return TimeIntensity.power_law(tau)


def parse_text(text, source="<string>"):
    parser = configparser.ConfigParser(strict=True, interpolation=None, inline_comment_prefixes=("#", ";"))
    try:
        parser.read_string(text, source=source)
    except configparser.Error as exc:
        raise ConfigError([str(exc)]) from exc

    errors = []
    for section in parser.sections():
        if section not in ALLOWED:
            errors.append(f"unknown section [{section}]")
            continue
        for key in parser.options(section):
            if key not in ALLOWED[section]:
                errors.append(f"unknown key [{section}] {key}")
    r = _Reader(parser)

    d = r.get("model", "dimension", int, 1)
    ti = r.get("model", "tau", _tau, TimeIntensity.lebesgue_measure())
    horizon = r.get("model", "horizon", float, 1.0)
    intensity = r.get("model", "intensity", float, 1.0)
    window_scale = r.get("model", "window_scale", float, 1.0)

    window = None
    shape = r.get("window", "shape", str.strip, "box")
    try:
        if shape == "box":
            if parser.has_option("window", "radius"):
                errors.append("[window] radius is only valid for shape = ball")
            window = Box(r.get("window", "sides", _floats, (1.0,) * max(d, 1)))
        elif shape == "ball":
            if parser.has_option("window", "sides"):
                errors.append("[window] sides is only valid for shape = box")
            window = Ball(r.get("window", "radius", float, 1.0), max(d, 1))
        else:
            errors.append(f"[window] shape = {shape!r}: must be box or ball")
    except ValueError as exc:
        errors.append(f"[window] {exc}")

    speed = None
    kind = r.get("speed", "kind", str.strip, "point")
    if kind not in SPEED_KEYS:
        errors.append(f"[speed] kind = {kind!r}: must be one of {sorted(SPEED_KEYS)}")
    else:
        for key in parser.options("speed") if parser.has_section("speed") else []:
            if key != "kind" and key not in SPEED_KEYS[kind]:
                errors.append(f"[speed] {key} does not apply to kind = {kind}")
        try:
            if kind == "point":
                speed = PointMass(r.get("speed", "value", float, 1.0))
            elif kind == "discrete":
                speed = FiniteDiscrete(
                    r.get("speed", "values", _floats, (1.0,)), r.get("speed", "probabilities", _floats, (1.0,))
                )
            elif kind == "uniform":
                speed = Uniform(r.get("speed", "upper", float, 1.0))
            elif kind == "pareto":
                speed = TruncatedPareto(
                    r.get("speed", "alpha", float, 3.0), r.get("speed", "scale", float, 1.0),
                    r.get("speed", "cap", float, 100.0),
                )
            else:
                speed = LogNormal(r.get("speed", "mu", float, 0.0), r.get("speed", "sigma", float, 0.5))
        except ValueError as exc:
            errors.append(f"[speed] {exc}")

    quadrature = None
    try:
        quadrature = QuadratureSpec(
            r.get("quadrature", "atol", float, 1e-12),
            r.get("quadrature", "rtol", float, 1e-10),
            r.get("quadrature", "max_depth", int, 200),
        )
    except ValueError as exc:
        errors.append(f"[quadrature] {exc}")

    campaign_kw = dict(
        replications=r.get("campaign", "replications", int, 1000),
        scaling=r.get("campaign", "scaling", str.strip, "none"),
        scales=r.get("campaign", "scales", _floats, ()),
        seed=r.get("campaign", "seed", int, 0),
        algorithm=r.get("campaign", "algorithm", str.strip, "indexed"),
    )
    out = dict(
        directory=r.get("output", "directory", str.strip, "results"),
        summary=r.get("output", "summary", str.strip, "summary.json"),
        table=r.get("output", "table", str.strip, "table.csv"),
    )
    errors = errors + r.errors

    spec = None
    if window is not None and speed is not None and quadrature is not None:
        try:
            spec = ModelSpec(d, ti, horizon, window, speed, intensity, window_scale, quadrature)
        except ValidationFailed as exc:
            errors.extend(f"[model] {v}" for v in exc.violations)
    # campaign keys are checked even when the model is invalid, against a stand-in spec
    stand_in = spec or ModelSpec(1, TimeIntensity.lebesgue_measure(), 1.0, Box((1.0,)), PointMass(1.0))
    campaign = None
    try:
        campaign = CampaignConfig(stand_in, **campaign_kw)
    except ValueError as exc:
        errors.extend(f"[campaign] {m}" for m in str(exc).split("; "))
    if errors:
        raise ConfigError(errors)
    return Experiment(campaign, **out)


def parse_config(path):
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError([f"cannot read {path}: {exc}"]) from exc
    return parse_text(text, source=str(path))


def _num(x):
    return repr(float(x))


def _list(xs):
    return ", ".join(_num(x) for x in xs)


def serialize(experiment):
    """Text form of ``experiment``; :func:`parse_text` inverts it exactly."""
    c = experiment.campaign
    spec = c.spec
    ti = spec.time_intensity
    lines = [
        "[model]",
        f"dimension = {spec.d}",
        f"tau = {'lebesgue' if ti.lebesgue else _num(ti.tau)}",
        f"horizon = {_num(spec.horizon)}",
        f"intensity = {_num(spec.intensity)}",
        f"window_scale = {_num(spec.window_scale)}",
        "",
        "[window]",
    ]
    if isinstance(spec.window, Box):
        lines += ["shape = box", f"sides = {_list(spec.window.sides)}"]
    else:
        lines += ["shape = ball", f"radius = {_num(spec.window.radius)}"]
    lines += ["", "[speed]", f"kind = {spec.speed.kind}"]
    for key, value in spec.speed.parameters().items():
        lines.append(f"{key} = {_list(value) if isinstance(value, (list, tuple)) else _num(value)}")
    lines += [
        "",
        "[campaign]",
        f"replications = {c.replications}",
        f"scaling = {c.scaling}",
    ]
    if c.scales:
        lines.append(f"scales = {_list(c.scales)}")
    lines += [
        f"seed = {c.seed}",
        f"algorithm = {c.algorithm}",
        "",
        "[output]",
        f"directory = {experiment.directory}",
        f"summary = {experiment.summary}",
        f"table = {experiment.table}",
        "",
        "[quadrature]",
        f"atol = {_num(spec.quadrature.atol)}",
        f"rtol = {_num(spec.quadrature.rtol)}",
        f"max_depth = {spec.quadrature.max_depth}",
        "",
    ]
    return "\n".join(lines)


def config_hash(experiment):
    return hashlib.sha256(serialize(experiment).encode("utf-8")).hexdigest()
