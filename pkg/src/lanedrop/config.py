"""JSON scenario files.

Numeric fields accept plain numbers or small arithmetic expressions over the
model constants, e.g. ``"2*C"``, ``"2k_1"``, ``"35/8"`` or ``"0.02 C"``.
Available names: v_f, w, k_j, k_c, C, delta, k_1, k_2, k_3, v_1, v_2, l_0.
"""

from __future__ import annotations

import ast
import hashlib
import json
import operator
import re
from importlib import resources
from pathlib import Path

import numpy as np

from .controllers import ControllerConfig
from .demand import ConstantArrival, TrapezoidArrival
from .engine import DirectDemand, PlantConfig, ScenarioConfig
from .errors import ConfigError
from .flow_core import Bottleneck, FundamentalDiagram, derive_constants

SCHEMA_VERSION = 1

_BINOPS = {ast.Add: operator.add, ast.Sub: operator.sub, ast.Mult: operator.mul, ast.Div: operator.truediv}
_IMPLICIT_MUL = re.compile(r"(\d|\.)\s*(?![eE][-+]?\d)([A-Za-z_])")


def evaluate(expr, names: dict | None = None, path: str = "value") -> float:
    """Evaluate a number or arithmetic expression string against ``names``."""
    if isinstance(expr, bool):
        raise ConfigError(f"{path}: expected a number, got {expr!r}")
    if isinstance(expr, (int, float)):
        return float(expr)
    if not isinstance(expr, str):
        raise ConfigError(f"{path}: expected a number or expression, got {expr!r}")
    names = names or {}
    text = _IMPLICIT_MUL.sub(r"\1*\2", expr.strip())
    try:
        tree = ast.parse(text, mode="eval")
    except SyntaxError:
        raise ConfigError(f"{path}: cannot parse expression {expr!r}") from None

    def ev(node):
        if isinstance(node, ast.Expression):
            return ev(node.body)
        if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)):
            return float(node.value)
        if isinstance(node, ast.Name):
            if node.id not in names:
                raise ConfigError(f"{path}: unknown name {node.id!r} in {expr!r}")
            return float(names[node.id])
        if isinstance(node, ast.BinOp) and type(node.op) in _BINOPS:
            return _BINOPS[type(node.op)](ev(node.left), ev(node.right))
        if isinstance(node, ast.UnaryOp) and isinstance(node.op, (ast.USub, ast.UAdd)):
            return -ev(node.operand) if isinstance(node.op, ast.USub) else ev(node.operand)
        raise ConfigError(f"{path}: unsupported syntax in {expr!r}")

    try:
        return ev(tree)
    except ZeroDivisionError:
        raise ConfigError(f"{path}: division by zero in {expr!r}") from None


def constant_names(fd: FundamentalDiagram, bn: Bottleneck, l_0: float | None = None) -> dict:
    dc = derive_constants(fd, bn)
    names = dict(v_f=fd.v_f, w=fd.w, k_j=fd.k_j, k_c=dc.k_c, C=bn.C, delta=bn.delta,
                 k_1=dc.k_1, k_2=dc.k_2, k_3=dc.k_3, v_1=dc.v_1, v_2=dc.v_2)
    if l_0 is not None:
        names["l_0"] = l_0
    return names


def _section(doc: dict, key: str, path: str, allowed: set, required: set = frozenset()) -> dict:
    sec = doc.get(key, {})
    where = f"{path}{key}"
    if not isinstance(sec, dict):
        raise ConfigError(f"{where}: expected an object")
    unknown = set(sec) - allowed
    if unknown:
        raise ConfigError(f"{where}.{sorted(unknown)[0]}: unknown key")
    missing = set(required) - set(sec)
    if missing:
        raise ConfigError(f"{where}.{sorted(missing)[0]}: required key missing")
    return sec


_TOP_KEYS = {"schema_version", "name", "description", "fd", "bottleneck", "l_0", "dt", "horizon",
             "window_frac", "plant", "initial", "controller", "demand"}


def from_dict(doc: dict, *, seed: int | None = None, window_frac: float | None = None) -> ScenarioConfig:
    """Build a validated :class:`ScenarioConfig`; errors name the offending key path."""
    if not isinstance(doc, dict):
        raise ConfigError("config: top level must be a JSON object")
    unknown = set(doc) - _TOP_KEYS
    if unknown:
        raise ConfigError(f"{sorted(unknown)[0]}: unknown key")
    version = doc.get("schema_version", SCHEMA_VERSION)
    if version != SCHEMA_VERSION:
        raise ConfigError(f"schema_version: unsupported version {version!r}")

    fd_sec = _section(doc, "fd", "", {"v_f", "w", "k_j"}, {"v_f", "w", "k_j"})
    fd = FundamentalDiagram(**{k: evaluate(v, path=f"fd.{k}") for k, v in fd_sec.items()})
    bn_sec = _section(doc, "bottleneck", "", {"C", "delta"}, {"C", "delta"})
    base_names = dict(v_f=fd.v_f, w=fd.w, k_j=fd.k_j, k_c=fd.k_c)
    bn = Bottleneck(**{k: evaluate(v, base_names, f"bottleneck.{k}") for k, v in bn_sec.items()})

    l_0 = evaluate(doc.get("l_0", 600.0), path="l_0")
    names = constant_names(fd, bn, l_0)

    def num(sec: dict, key: str, path: str, default=None):
        if key not in sec:
            if default is None:
                raise ConfigError(f"{path}.{key}: required key missing")
            return default
        return evaluate(sec[key], names, f"{path}.{key}")

    pl = _section(doc, "plant", "", {"kind", "n", "dx", "sensor_cell"})
    kind = pl.get("kind", "link_queue")
    if kind == "ctm":
        n = int(num(pl, "n", "plant", 20.0))
        plant = PlantConfig("ctm", n, num(pl, "dx", "plant", l_0 / n), pl.get("sensor_cell"))
    else:
        plant = PlantConfig(kind)

    init = doc.get("initial", 0.0)
    if isinstance(init, list):
        initial = tuple(evaluate(v, names, f"initial[{i}]") for i, v in enumerate(init))
    else:
        initial = evaluate(init, names, "initial")

    cs = _section(doc, "controller", "", {"kind", "u_const", "alpha", "beta", "u_min", "xi"})
    ckind = cs.get("kind", "none")
    controller = ControllerConfig(
        ckind,
        u_const=num(cs, "u_const", "controller") if ckind == "constant" else None,
        alpha=num(cs, "alpha", "controller", 0.0),
        beta=num(cs, "beta", "controller", 0.0),
        u_min=num(cs, "u_min", "controller", 0.5),
        xi=num(cs, "xi", "controller", 0.0),
    )

    ds = _section(doc, "demand", "", {"kind", "value", "peak", "ramp_rate", "plateau_end", "noise_std", "seed"})
    dkind = ds.get("kind", "direct")
    horizon = evaluate(doc.get("horizon", 8000.0), names, "horizon")
    if dkind == "direct":
        demand = DirectDemand(num(ds, "value", "demand"))
    elif dkind == "constant":
        demand = ConstantArrival(num(ds, "value", "demand"))
    elif dkind == "trapezoid_noise":
        s = ds.get("seed", 0) if seed is None else seed
        if not isinstance(s, int) or isinstance(s, bool):
            raise ConfigError(f"demand.seed: expected an integer, got {s!r}")
        demand = TrapezoidArrival(
            peak=num(ds, "peak", "demand", names["C"]),
            ramp_rate=num(ds, "ramp_rate", "demand", 0.0005),
            plateau_end=num(ds, "plateau_end", "demand", 4000.0),
            horizon=horizon,
            noise_std=num(ds, "noise_std", "demand", 0.0),
            seed=s,
        )
    else:
        raise ConfigError(f"demand.kind: unknown demand {dkind!r}")

    return ScenarioConfig(
        fd=fd,
        bottleneck=bn,
        controller=controller,
        demand=demand,
        plant=plant,
        l_0=l_0,
        dt=evaluate(doc.get("dt", 1.0), names, "dt"),
        horizon=horizon,
        initial=initial,
        window_frac=window_frac if window_frac is not None else evaluate(doc.get("window_frac", 0.25), path="window_frac"),
        name=str(doc.get("name", "scenario")),
    )


def to_dict(config: ScenarioConfig) -> dict:
    """Resolved, plain-number form of a config (loadable again by :func:`from_dict`)."""
    d = config.demand
    if isinstance(d, DirectDemand):
        demand = {"kind": "direct", "value": d.value}
    elif isinstance(d, ConstantArrival):
        demand = {"kind": "constant", "value": d.value}
    else:
        demand = {"kind": "trapezoid_noise", "peak": d.peak, "ramp_rate": d.ramp_rate,
                  "plateau_end": d.plateau_end, "noise_std": d.noise_std, "seed": d.seed}
    c = config.controller
    controller = {"kind": c.kind, "alpha": c.alpha, "beta": c.beta, "u_min": c.u_min, "xi": c.xi}
    if c.kind == "constant":
        controller["u_const"] = c.u_const
    plant = {"kind": config.plant.kind}
    if config.plant.kind == "ctm":
        plant.update(n=config.plant.n, dx=config.plant.dx, sensor_cell=config.plant.sensor_cell)
    initial = list(config.initial) if np.ndim(config.initial) else float(config.initial)
    return {
        "schema_version": SCHEMA_VERSION,
        "name": config.name,
        "fd": {"v_f": config.fd.v_f, "w": config.fd.w, "k_j": config.fd.k_j},
        "bottleneck": {"C": config.bottleneck.C, "delta": config.bottleneck.delta},
        "l_0": config.l_0,
        "dt": config.dt,
        "horizon": config.horizon,
        "window_frac": config.window_frac,
        "plant": plant,
        "initial": initial,
        "controller": controller,
        "demand": demand,
    }


def config_hash(config: ScenarioConfig) -> str:
    canon = json.dumps(to_dict(config), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canon.encode()).hexdigest()


def bundled_names() -> list[str]:
    root = resources.files("lanedrop") / "configs"
    return sorted(p.name[:-5] for p in root.iterdir() if p.name.endswith(".json"))


def read_document(path_or_name: str | Path) -> dict:
    """Load a config file, falling back to the bundled config of that name."""
    p = Path(path_or_name)
    if p.is_file():
        text = p.read_text()
    else:
        name = p.name[:-5] if p.name.endswith(".json") else p.name
        res = resources.files("lanedrop") / "configs" / f"{name}.json"
        if not res.is_file():
            raise ConfigError(f"config: no file {str(path_or_name)!r} and no bundled config of that name "
                              f"(bundled: {', '.join(bundled_names())})")
        text = res.read_text()
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config: invalid JSON ({exc})") from None


def load(path_or_name: str | Path, *, seed: int | None = None, window_frac: float | None = None) -> ScenarioConfig:
    return from_dict(read_document(path_or_name), seed=seed, window_frac=window_frac)
