"""
Experiment configuration, parameter sweeps and tabular output.

A configuration is a JSON document; dB is used for every power-like quantity
in the file and converted to linear units on load.  See ``configs/`` for the
figure-reproduction files and README.md for the schema.
"""

from __future__ import annotations

import copy
import csv
import io
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Optional

import numpy as np

from . import channel
from .channel import A2gEnvironment, RisSpec, Scene
from .mcsim import McConfig, McScenario, run_mc
from .metrics import BPSK, Modulation, evaluate_point, mpsk, outage_asymptotic, outage_hop, outage_total
from .powopt import objective_constants, solve_split
from .snrstats import A2gLink, G2aLink
from .specfun import SeriesControl

__all__ = [
    "ConfigError",
    "ExperimentConfig",
    "SweepResult",
    "COLUMNS",
    "SWEEP_VARIABLES",
    "load_config",
    "parse_config",
    "derive",
    "run_sweep",
    "run_optimize",
    "emit",
    "to_csv",
    "to_json",
]

SWEEP_VARIABLES = ("avg_snr_db", "n_elements", "n_ris", "uav_height", "uav_x", "total_power")
VARIANT_KEYS = ("label", "n_ris", "n_elements", "avg_snr_db", "uav_height", "uav_x", "k0_db")
INTEGER_SWEEPS = ("n_elements", "n_ris")

COLUMNS = (
    "variant",
    "sweep_variable",
    "sweep_value",
    "avg_snr_a_db",
    "avg_snr_b_db",
    "k0",
    "loss_a2g",
    "p_los",
    "op_a",
    "op_b",
    "op",
    "op_asymptotic",
    "asep_a",
    "asep_b",
    "asep",
    "capacity_a",
    "capacity_b",
    "capacity",
    "mc_op",
    "mc_op_se",
    "mc_asep",
    "mc_asep_se",
    "mc_capacity",
    "mc_capacity_se",
    "e_s_db",
    "e_u_db",
    "e_u_share",
    "op_equal_split",
    "op_asymptotic_equal_split",
    "flags",
)


class ConfigError(ValueError):
    """Invalid configuration; ``path`` names the offending field."""

    def __init__(self, path, message):
        super().__init__(f"{path}: {message}" if path else message)
        self.path = path


@dataclass(frozen=True)
class Sweep:
    variable: str
    start: float
    stop: float
    steps: int

    def values(self):
        vals = np.linspace(self.start, self.stop, self.steps)
        if self.variable in INTEGER_SWEEPS:
            return [int(round(v)) for v in vals]
        return [float(v) for v in vals]


@dataclass(frozen=True)
class ExperimentConfig:
    name: str
    ris: tuple
    environment: A2gEnvironment
    sweep: Sweep
    scene: Optional[Scene] = None
    carrier_frequency_hz: float = 2e9
    reference_loss_db: float = 0.0
    n_ris: Optional[int] = None
    avg_snr_db: Optional[float] = 20.0
    es_db: Optional[float] = None
    eu_db: Optional[float] = None
    n0_db: float = 0.0
    nu_db: float = 0.0
    modulation: Modulation = BPSK
    gamma_out_db: float = 0.0
    variants: tuple = ()
    mc: Optional[McConfig] = None
    series: SeriesControl = SeriesControl()
    capacity_upper_factor: float = 1.0
    raw: dict = field(default_factory=dict, compare=False, repr=False)

    @property
    def wavelength(self):
        return channel.wavelength(self.carrier_frequency_hz)

    @property
    def gamma_out(self):
        return channel.db_to_linear(self.gamma_out_db)


# --------------------------------------------------------------------------
# parsing

_RIS_FIELDS = ("n_elements", "m1", "m2", "omega1", "omega2", "d1", "d2", "g1_dbi", "g2_dbi", "efficiency")
_ENV_FIELDS = ("h", "r0", "a1", "b1", "a2", "b2", "excess_loss_db", "k0_db", "loss_convention")
_SCENE_FIELDS = ("source_destination", "ris_baseline", "ris_offsets", "uav_x", "height")
_TOP_FIELDS = (
    "name", "carrier_frequency_hz", "g2a_reference_loss_db", "scene", "ris", "n_ris", "environment",
    "link", "modulation", "gamma_out_db", "sweep", "variants", "mc", "series", "capacity_upper_factor",
    "description",
)


def _unknown(obj, allowed, path):
    for key in obj:
        if key not in allowed:
            raise ConfigError(f"{path}.{key}" if path else key, "unknown field")


def _number(obj, key, path, default=None, required=False, positive=False, integer=False):
    where = f"{path}.{key}" if path else key
    if key not in obj or obj[key] is None:
        if required:
            raise ConfigError(where, "is required")
        return default
    value = obj[key]
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(where, f"expected a number, got {value!r}")
    if not math.isfinite(value):
        raise ConfigError(where, "must be finite")
    if integer and int(value) != value:
        raise ConfigError(where, f"expected an integer, got {value!r}")
    if positive and not value > 0:
        raise ConfigError(where, f"must be positive, got {value!r}")
    return int(value) if integer else float(value)


def _build(factory, kwargs, path):
    try:
        return factory(**kwargs)
    except (ValueError, TypeError) as exc:
        raise ConfigError(path, str(exc)) from None


def _parse_ris(entry, index):
    path = f"ris[{index}]"
    if not isinstance(entry, dict):
        raise ConfigError(path, "expected an object")
    _unknown(entry, _RIS_FIELDS, path)
    kwargs = {}
    for key in _RIS_FIELDS:
        value = _number(entry, key, path, integer=key == "n_elements")
        if value is not None:
            kwargs[key] = value
    if "n_elements" not in kwargs:
        raise ConfigError(f"{path}.n_elements", "is required")
    if kwargs["n_elements"] < 1:
        raise ConfigError(f"{path}.n_elements", f"must be a positive integer, got {kwargs['n_elements']}")
    return _build(RisSpec, kwargs, path)


def _parse_environment(obj):
    path = "environment"
    if not isinstance(obj, dict):
        raise ConfigError(path, "expected an object")
    _unknown(obj, _ENV_FIELDS, path)
    kwargs = {}
    for key in ("h", "r0", "a1", "b1", "a2", "b2", "excess_loss_db"):
        value = _number(obj, key, path)
        if value is not None:
            kwargs[key] = value
    if "k0_db" in obj:
        k0 = obj["k0_db"]
        if k0 is not None and k0 != "model":
            kwargs["k0_db"] = _number(obj, "k0_db", path)
        else:
            kwargs["k0_db"] = None
    if "loss_convention" in obj:
        kwargs["loss_convention"] = obj["loss_convention"]
    return _build(A2gEnvironment, kwargs, path)


def _parse_scene(obj):
    path = "scene"
    if not isinstance(obj, dict):
        raise ConfigError(path, "expected an object")
    _unknown(obj, _SCENE_FIELDS, path)
    kwargs = {}
    for key in ("source_destination", "ris_baseline", "uav_x", "height"):
        value = _number(obj, key, path)
        if value is not None:
            kwargs[key] = value
    if "ris_offsets" in obj:
        offsets = obj["ris_offsets"]
        if not isinstance(offsets, list) or not offsets:
            raise ConfigError(f"{path}.ris_offsets", "expected a non-empty list of metres")
        for i, _ in enumerate(offsets):
            _number({"v": offsets[i]}, "v", f"{path}.ris_offsets[{i}]")
        kwargs["ris_offsets"] = tuple(float(o) for o in offsets)
    return _build(Scene, kwargs, path)


def _parse_modulation(value):
    if value is None:
        return BPSK
    if isinstance(value, str):
        label = value.strip().upper()
        if label == "BPSK":
            return BPSK
        if label.endswith("-PSK"):
            try:
                order = int(label[:-4])
            except ValueError:
                raise ConfigError("modulation", f"cannot parse {value!r}") from None
            return mpsk(order)
        raise ConfigError("modulation", f"unknown preset {value!r}")
    if isinstance(value, dict):
        _unknown(value, ("p", "q", "label"), "modulation")
        p = _number(value, "p", "modulation", required=True, positive=True)
        q = _number(value, "q", "modulation", required=True, positive=True)
        return Modulation(p, q, str(value.get("label", "")))
    raise ConfigError("modulation", "expected a preset name or {p, q}")


def _parse_sweep(obj):
    path = "sweep"
    if not isinstance(obj, dict):
        raise ConfigError(path, "is required and must be an object")
    _unknown(obj, ("variable", "start", "stop", "steps"), path)
    variable = obj.get("variable")
    if variable not in SWEEP_VARIABLES:
        raise ConfigError(f"{path}.variable", f"must be one of {', '.join(SWEEP_VARIABLES)}")
    start = _number(obj, "start", path, required=True)
    stop = _number(obj, "stop", path, required=True)
    steps = _number(obj, "steps", path, required=True, integer=True)
    if steps < 2:
        raise ConfigError(f"{path}.steps", "a sweep needs at least 2 steps")
    if variable in INTEGER_SWEEPS and min(start, stop) < 1:
        raise ConfigError(f"{path}.start", f"{variable} must stay >= 1")
    return Sweep(variable, start, stop, steps)


def _parse_variants(value):
    if value is None:
        return ()
    if not isinstance(value, list):
        raise ConfigError("variants", "expected a list of override objects")
    out = []
    for i, entry in enumerate(value):
        path = f"variants[{i}]"
        if not isinstance(entry, dict):
            raise ConfigError(path, "expected an object")
        _unknown(entry, VARIANT_KEYS, path)
        item = {}
        for key in VARIANT_KEYS:
            if key == "label" or key not in entry:
                continue
            integer = key in INTEGER_SWEEPS
            item[key] = _number(entry, key, path, integer=integer, positive=integer)
        item["label"] = str(entry.get("label", _variant_label(item)))
        out.append(item)
    return tuple(out)


def _variant_label(item):
    return ",".join(f"{k}={v}" for k, v in item.items())


def parse_config(data: dict, name: str = "experiment") -> ExperimentConfig:
    """Validate a decoded JSON document and build an :class:`ExperimentConfig`."""
    if not isinstance(data, dict):
        raise ConfigError("", "top level must be an object")
    _unknown(data, _TOP_FIELDS, "")
    if "ris" not in data or not isinstance(data["ris"], list) or not data["ris"]:
        raise ConfigError("ris", "a non-empty list of RIS descriptions is required")
    ris = tuple(_parse_ris(entry, i) for i, entry in enumerate(data["ris"]))
    env = _parse_environment(data.get("environment", {}))
    scene = _parse_scene(data["scene"]) if data.get("scene") is not None else None
    sweep = _parse_sweep(data.get("sweep"))

    link = data.get("link", {"avg_snr_db": 20.0})
    if not isinstance(link, dict):
        raise ConfigError("link", "expected an object")
    _unknown(link, ("avg_snr_db", "es_db", "eu_db", "n0_db", "nu_db"), "link")
    avg = _number(link, "avg_snr_db", "link")
    es = _number(link, "es_db", "link")
    eu = _number(link, "eu_db", "link")
    if avg is None and (es is None or eu is None) and sweep.variable not in ("avg_snr_db", "total_power"):
        raise ConfigError("link", "give avg_snr_db or both es_db and eu_db")

    n_ris = _number(data, "n_ris", "", integer=True, positive=True)
    mc = None
    if data.get("mc") is not None:
        mc_obj = data["mc"]
        if not isinstance(mc_obj, dict):
            raise ConfigError("mc", "expected an object or null")
        _unknown(mc_obj, ("trials", "seed", "streams", "batch"), "mc")
        kwargs = {k: _number(mc_obj, k, "mc", integer=True) for k in ("trials", "seed", "streams", "batch")
                  if k in mc_obj}
        mc = _build(McConfig, kwargs, "mc")
    series = SeriesControl()
    if data.get("series") is not None:
        s_obj = data["series"]
        _unknown(s_obj, ("max_terms", "rel_tol", "abs_tol"), "series")
        kwargs = {k: _number(s_obj, k, "series", integer=k == "max_terms") for k in s_obj}
        series = _build(SeriesControl, kwargs, "series")

    cfg = ExperimentConfig(
        name=str(data.get("name", name)),
        ris=ris,
        environment=env,
        sweep=sweep,
        scene=scene,
        carrier_frequency_hz=_number(data, "carrier_frequency_hz", "", default=2e9, positive=True),
        reference_loss_db=_number(data, "g2a_reference_loss_db", "", default=0.0),
        n_ris=n_ris,
        avg_snr_db=avg,
        es_db=es,
        eu_db=eu,
        n0_db=_number(link, "n0_db", "link", default=0.0),
        nu_db=_number(link, "nu_db", "link", default=0.0),
        modulation=_parse_modulation(data.get("modulation")),
        gamma_out_db=_number(data, "gamma_out_db", "", default=0.0),
        variants=_parse_variants(data.get("variants")),
        mc=mc,
        series=series,
        capacity_upper_factor=_number(data, "capacity_upper_factor", "", default=1.0, positive=True),
        raw=copy.deepcopy(data),
    )
    # surface geometry problems now rather than mid-sweep
    for variant in cfg.variants or ({},):
        derive(cfg, variant)
    return cfg


def load_config(path) -> ExperimentConfig:
    """Read and validate a JSON configuration file."""
    path = Path(path)
    text = path.read_text()
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError("", f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from None
    return parse_config(data, name=path.stem)


# --------------------------------------------------------------------------
# derived quantities


@dataclass(frozen=True)
class Derived:
    """Per-point channel quantities, linear units."""

    ris: tuple
    fits: tuple
    environment: A2gEnvironment
    k0: float
    loss: float
    p_los: float
    avg_snr_a: float
    avg_snr_b: float

    def links(self):
        return G2aLink(self.fits, self.avg_snr_a), A2gLink(self.k0, self.loss, self.avg_snr_b)


def _apply(cfg: ExperimentConfig, overrides: dict):
    """Resolve sweep/variant overrides into (ris specs, env, snr_a, snr_b)."""
    n_ris = overrides.get("n_ris", cfg.n_ris)
    template = list(cfg.ris)
    if n_ris is not None:
        template = [cfg.ris[i] if i < len(cfg.ris) else cfg.ris[0] for i in range(n_ris)]
    if "n_elements" in overrides:
        template = [replace(s, n_elements=overrides["n_elements"]) for s in template]

    env = cfg.environment
    if "k0_db" in overrides:
        env = replace(env, k0_db=overrides["k0_db"])
    if cfg.scene is not None:
        scene = cfg.scene
        if "uav_height" in overrides:
            scene = replace(scene, height=overrides["uav_height"])
        if "uav_x" in overrides:
            scene = replace(scene, uav_x=overrides["uav_x"])
        pairs, r0 = channel.scene_distances(scene, len(template))
        template = [replace(s, d1=d1, d2=d2) for s, (d1, d2) in zip(template, pairs)]
        env = env.with_geometry(scene.height, r0)
    elif "uav_height" in overrides or "uav_x" in overrides:
        raise ConfigError("scene", "geometry sweeps need a scene")

    n0 = channel.db_to_linear(cfg.n0_db)
    nu = channel.db_to_linear(cfg.nu_db)
    if "avg_snr_db" in overrides or cfg.es_db is None:
        avg = overrides.get("avg_snr_db", cfg.avg_snr_db)
        snr_a = snr_b = channel.db_to_linear(avg) if avg is not None else None
    else:
        snr_a = channel.db_to_linear(cfg.es_db) / n0
        snr_b = channel.db_to_linear(cfg.eu_db) / nu
    return template, env, snr_a, snr_b


def derive(cfg: ExperimentConfig, overrides: Optional[dict] = None) -> Derived:
    """Geometry -> distances -> path losses -> Gamma fits and A2G link terms."""
    overrides = dict(overrides or {})
    overrides.pop("label", None)
    try:
        specs, env, snr_a, snr_b = _apply(cfg, overrides)
        reference = channel.db_to_linear(cfg.reference_loss_db)
        fits = tuple(channel.gamma_fit(s, cfg.wavelength, reference) for s in specs)
        k0 = channel.rician_factor(env)
        loss = channel.a2g_loss(env)
        p_los = channel.los_probability(env.h, env.r0)
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError("scene" if cfg.scene else "environment", str(exc)) from None
    return Derived(tuple(specs), fits, env, k0, loss, p_los, snr_a or 1.0, snr_b or 1.0)


# --------------------------------------------------------------------------
# sweeps


@dataclass
class SweepResult:
    config: dict
    rows: list
    convention: dict = field(default_factory=dict)

    def column(self, name, variant=None):
        return np.array([r[name] for r in self.rows if variant is None or r["variant"] == variant], dtype=float)

    def variants(self):
        seen = []
        for r in self.rows:
            if r["variant"] not in seen:
                seen.append(r["variant"])
        return seen


def _empty_row():
    return {c: None for c in COLUMNS}


def _db(x):
    return 10.0 * math.log10(x)


def _point_overrides(cfg, variant, value):
    overrides = dict(variant)
    var = cfg.sweep.variable
    if var != "total_power":
        overrides[var] = value
    return overrides


def _evaluate(cfg: ExperimentConfig, variant: dict, value, with_mc: bool):
    derived = derive(cfg, _point_overrides(cfg, variant, value))
    link_a, link_b = derived.links()
    point = evaluate_point(link_a, link_b, cfg.gamma_out, cfg.modulation, cfg.series, cfg.capacity_upper_factor)
    row = _empty_row()
    row.update(
        variant=variant.get("label", ""),
        sweep_variable=cfg.sweep.variable,
        sweep_value=value,
        avg_snr_a_db=_db(derived.avg_snr_a),
        avg_snr_b_db=_db(derived.avg_snr_b),
        k0=derived.k0,
        loss_a2g=derived.loss,
        p_los=derived.p_los,
        op_a=point.op_a,
        op_b=point.op_b,
        op=point.op,
        op_asymptotic=point.op_asymptotic,
        asep_a=point.asep_a,
        asep_b=point.asep_b,
        asep=point.asep,
        capacity_a=point.capacity_a,
        capacity_b=point.capacity_b,
        capacity=point.capacity,
        flags=";".join(f"{k}={v}" for k, v in sorted(point.flags.items())),
    )
    if with_mc:
        scenario = McScenario(derived.ris, tuple(f.path_loss for f in derived.fits), derived.avg_snr_a, link_b,
                              cfg.gamma_out, cfg.modulation)
        op, asep, cap = run_mc(scenario, cfg.mc)
        row.update(mc_op=op.mean, mc_op_se=op.std_error, mc_asep=asep.mean, mc_asep_se=asep.std_error,
                   mc_capacity=cap.mean, mc_capacity_se=cap.std_error)
    return row


def _optimize_point(cfg: ExperimentConfig, variant: dict, total_db):
    derived = derive(cfg, _point_overrides(cfg, variant, total_db))
    n0 = channel.db_to_linear(cfg.n0_db)
    nu = channel.db_to_linear(cfg.nu_db)
    e_total = channel.db_to_linear(total_db) * n0
    consts = objective_constants(derived.fits, derived.k0, derived.loss, cfg.gamma_out, n0, nu)
    split = solve_split(consts, e_total)

    def exact(e_s, e_u):
        la = G2aLink(derived.fits, e_s / n0)
        lb = A2gLink(derived.k0, derived.loss, e_u / nu)
        return outage_total(outage_hop(la, cfg.gamma_out), outage_hop(lb, cfg.gamma_out)), la, lb

    op_opt, la, lb = exact(split.e_s, split.e_u)
    op_eq, la_eq, lb_eq = exact(e_total / 2, e_total / 2)
    row = _empty_row()
    row.update(
        variant=variant.get("label", ""),
        sweep_variable="total_power",
        sweep_value=total_db,
        avg_snr_a_db=_db(la.avg_snr),
        avg_snr_b_db=_db(lb.avg_snr),
        k0=derived.k0,
        loss_a2g=derived.loss,
        p_los=derived.p_los,
        op_a=outage_hop(la, cfg.gamma_out),
        op_b=outage_hop(lb, cfg.gamma_out),
        op=op_opt,
        op_asymptotic=split.op_asymptotic,
        e_s_db=_db(split.e_s),
        e_u_db=_db(split.e_u),
        e_u_share=split.e_u / e_total,
        op_equal_split=op_eq,
        op_asymptotic_equal_split=outage_asymptotic(la_eq, lb_eq, cfg.gamma_out),
        flags=f"bisection_iterations={split.iterations};machine_precision={int(split.machine_precision)}",
    )
    return row


def _run(cfg, worker, threads):
    variants = cfg.variants or ({"label": ""},)
    jobs = [(v, x) for v in variants for x in cfg.sweep.values()]

    def call(job):
        variant, value = job
        try:
            return worker(variant, value)
        except ConfigError:
            raise
        except (ArithmeticError, ValueError) as exc:
            raise ArithmeticError(f"{cfg.sweep.variable}={value}: {exc}") from exc

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            rows = list(pool.map(call, jobs))
    else:
        rows = [call(job) for job in jobs]
    convention = {
        "a2g_loss": cfg.environment.loss_convention,
        "g2a_reference_loss_db": cfg.reference_loss_db,
        "k0_mode": cfg.environment.k0_mode,
    }
    return SweepResult(cfg.raw, rows, convention)


def run_sweep(cfg: ExperimentConfig, threads: int = 1, with_mc: Optional[bool] = None) -> SweepResult:
    """Closed-form metrics (and Monte-Carlo when configured) at every sweep point."""
    if cfg.sweep.variable == "total_power":
        raise ConfigError("sweep.variable", "total_power sweeps are run by run_optimize")
    with_mc = cfg.mc is not None if with_mc is None else with_mc
    if with_mc and cfg.mc is None:
        raise ConfigError("mc", "Monte-Carlo requested but no mc settings given")
    return _run(cfg, lambda v, x: _evaluate(cfg, v, x, with_mc), threads)


def run_optimize(cfg: ExperimentConfig, threads: int = 1) -> SweepResult:
    """Optimal power split, its outage and the equal-split outage per total power."""
    if cfg.sweep.variable != "total_power":
        raise ConfigError("sweep.variable", "optimize needs a total_power sweep")
    return _run(cfg, lambda v, x: _optimize_point(cfg, v, x), threads)


# --------------------------------------------------------------------------
# output


def _cell(value):
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def to_csv(result: SweepResult) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(COLUMNS)
    for row in result.rows:
        writer.writerow([_cell(row.get(c)) for c in COLUMNS])
    return buf.getvalue()


def to_json(result: SweepResult) -> str:
    doc: dict[str, Any] = {
        "config": result.config,
        "conventions": result.convention,
        "columns": list(COLUMNS),
        "rows": [{c: row.get(c) for c in COLUMNS} for row in result.rows],
    }
    return json.dumps(doc, indent=1, sort_keys=False) + "\n"


def emit(result: SweepResult, fmt: str = "csv", path=None) -> str:
    """Serialize a sweep result; writes to ``path`` when given."""
    if fmt == "csv":
        text = to_csv(result)
    elif fmt == "json":
        text = to_json(result)
    else:
        raise ValueError(f"unknown format {fmt!r}")
    if path is not None:
        Path(path).write_text(text)
    return text
