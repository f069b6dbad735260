"""Strict JSON scenario configuration.

Example::

    {
      "name": "neumann-demo",
      "T": 1.0,
      "y0": {"preset": "example1", "epsilon": 0.5, "j0": 2},
      "penalty": {"kind": "exp_over_s"},
      "optimizer": {"grid_points": 64},
      "snapshots": [{"s": 1.0, "t": 0.25}]
    }

Without a preset, ``y0`` is a ``{"mode index": coefficient}`` map, and ``f``
and ``yQ`` are signal descriptors: ``{"kind": "zero"}``,
``{"kind": "constant", "coeffs": {"j": c}}`` or
``{"kind": "sampled", "times": [...], "values": {"j": [...]}}``.
Unknown keys are rejected everywhere.
"""

import json
import math
from dataclasses import dataclass, field, replace

import numpy as np

from .objective import PenaltySpec, Scenario
from .optimize import OptimizerConfig
from .scenarios import PRESETS, default_jmax, preset_fields
from .spectral_basis import BasisKind, build_basis
from .state import StateEval, TimeSignal

OUTPUTS = ("summary", "cost_curve", "trace", "snapshots")


class ConfigError(ValueError):
    """Invalid configuration; the message names the offending field."""


def _fail(where, msg):
    raise ConfigError(f"{where}: {msg}")


def _check_keys(obj, where, allowed, required=()):
    if not isinstance(obj, dict):
        _fail(where, "expected an object")
    unknown = sorted(set(obj) - set(allowed))
    if unknown:
        _fail(where, f"unknown key(s) {', '.join(unknown)}")
    for key in required:
        if key not in obj:
            _fail(where, f"missing required key '{key}'")


def _number(value, where, positive=False):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        _fail(where, "expected a number")
    value = float(value)
    if not math.isfinite(value):
        _fail(where, "must be finite")
    if positive and value <= 0:
        _fail(where, "must be positive")
    return value


def _integer(value, where, minimum=None):
    if isinstance(value, bool) or not isinstance(value, int):
        _fail(where, "expected an integer")
    if minimum is not None and value < minimum:
        _fail(where, f"must be >= {minimum}")
    return value


def _mode_key(key, where):
    try:
        j = int(key)
    except (TypeError, ValueError):
        _fail(where, f"mode index {key!r} is not an integer")
    if str(j) != str(key).strip() or j < 0:
        _fail(where, f"mode index {key!r} is not a nonnegative integer")
    return j


@dataclass(frozen=True)
class BasisConfig:
    kind: str
    domain_length: float = math.pi
    J_max: int = None
    eigenvalues: tuple = None

    def to_dict(self):
        out = {"kind": self.kind, "domain_length": self.domain_length, "J_max": self.J_max}
        if self.eigenvalues is not None:
            out["eigenvalues"] = list(self.eigenvalues)
        return out

    def build(self):
        return build_basis(self.kind, self.domain_length, self.J_max,
                           None if self.eigenvalues is None else list(self.eigenvalues))


@dataclass(frozen=True)
class PresetConfig:
    name: str
    epsilon: float
    j0: int

    def to_dict(self):
        return {"preset": self.name, "epsilon": self.epsilon, "j0": self.j0}


@dataclass(frozen=True)
class SignalConfig:
    kind: str = "zero"
    coeffs: tuple = ()
    times: tuple = ()
    values: tuple = ()

    def to_dict(self):
        if self.kind == "zero":
            return {"kind": "zero"}
        if self.kind == "constant":
            return {"kind": "constant", "coeffs": {str(j): c for j, c in self.coeffs}}
        return {"kind": "sampled", "times": list(self.times),
                "values": {str(j): list(v) for j, v in self.values}}

    def build(self, basis, T, where):
        n = basis.J_max
        if self.kind == "zero":
            return TimeSignal.zero()
        if self.kind == "constant":
            c = np.zeros(n)
            for j, value in self.coeffs:
                c[_position(basis, j, where)] = value
            return TimeSignal.constant(c)
        times = np.array(self.times)
        if times[0] > 0 or times[-1] < T:
            _fail(f"{where}.times", f"must span [0, T={T:g}]")
        vals = np.zeros((n, len(times)))
        for j, row in self.values:
            vals[_position(basis, j, where)] = row
        return TimeSignal.sampled(times, vals)


def _position(basis, j, where):
    try:
        return basis.position(j)
    except IndexError as exc:
        _fail(where, f"{exc} (J_max={basis.J_max})")


@dataclass(frozen=True)
class ScenarioConfig:
    basis: BasisConfig
    T: float
    y0: object
    f: SignalConfig
    yQ: SignalConfig
    penalty: PenaltySpec
    optimizer: OptimizerConfig
    name: str = "scenario"
    outputs: tuple = OUTPUTS
    snapshots: tuple = ()
    snapshot_points: int = 512

    @property
    def preset(self):
        return self.y0 if isinstance(self.y0, PresetConfig) else None

    def to_dict(self):
        out = {
            "name": self.name,
            "basis": self.basis.to_dict(),
            "T": self.T,
            "y0": (self.y0.to_dict() if self.preset
                   else {str(j): c for j, c in self.y0}),
            "penalty": self.penalty.to_dict(),
            "optimizer": self.optimizer.to_dict(),
            "outputs": list(self.outputs),
            "snapshots": [{"s": s, "t": t} for s, t in self.snapshots],
            "snapshot_points": self.snapshot_points,
        }
        if not self.preset:
            out["f"] = self.f.to_dict()
            out["yQ"] = self.yQ.to_dict()
        return out

    def with_overrides(self, grid_points=None, J_max=None):
        cfg = self
        if grid_points is not None:
            cfg = replace(cfg, optimizer=replace(cfg.optimizer, grid_points=grid_points))
        if J_max is not None:
            if cfg.basis.kind == BasisKind.EXPLICIT.value:
                raise ConfigError("basis.J_max: cannot override an explicit eigenvalue list")
            cfg = replace(cfg, basis=replace(cfg.basis, J_max=J_max))
            validate(cfg)
        return cfg

    def build(self):
        """The scenario and penalty described by this configuration."""
        basis = self.basis.build()
        if self.preset:
            _, y0, target = preset_fields(self.preset.name, self.preset.epsilon,
                                          self.preset.j0, basis.J_max, basis.domain_length)
            state = StateEval(basis, y0, TimeSignal.zero(), self.T)
            return Scenario(self.name, state, TimeSignal.constant(target)), self.penalty
        y0 = np.zeros(basis.J_max)
        for j, value in self.y0:
            y0[_position(basis, j, "y0")] = value
        f = self.f.build(basis, self.T, "f")
        yQ = self.yQ.build(basis, self.T, "yQ")
        return Scenario(self.name, StateEval(basis, y0, f, self.T), yQ), self.penalty


def _parse_basis(obj, where="basis"):
    _check_keys(obj, where, ("kind", "domain_length", "J_max", "eigenvalues"), ("kind",))
    kind = obj["kind"]
    if kind not in [k.value for k in BasisKind]:
        _fail(f"{where}.kind", f"unsupported basis kind {kind!r}")
    length = _number(obj.get("domain_length", math.pi), f"{where}.domain_length", True)
    eig = obj.get("eigenvalues")
    if kind == BasisKind.EXPLICIT.value:
        if not isinstance(eig, list) or not eig:
            _fail(f"{where}.eigenvalues", "explicit basis needs a nonempty list")
        eig = tuple(_number(v, f"{where}.eigenvalues[{i}]") for i, v in enumerate(eig))
        J_max = obj.get("J_max", len(eig))
        J_max = _integer(J_max, f"{where}.J_max", 1)
        if J_max != len(eig):
            _fail(f"{where}.J_max", "must equal the number of eigenvalues")
    else:
        if eig is not None:
            _fail(f"{where}.eigenvalues", f"not allowed for kind {kind!r}")
        if "J_max" not in obj:
            _fail(where, "missing required key 'J_max'")
        J_max = _integer(obj["J_max"], f"{where}.J_max", 1)
    return BasisConfig(kind, length, J_max, eig)


def _parse_signal(obj, where):
    _check_keys(obj, where, ("kind", "coeffs", "times", "values"), ("kind",))
    kind = obj["kind"]
    if kind == "zero":
        _check_keys(obj, where, ("kind",))
        return SignalConfig()
    if kind == "constant":
        _check_keys(obj, where, ("kind", "coeffs"), ("coeffs",))
        coeffs = obj["coeffs"]
        _check_keys(coeffs, f"{where}.coeffs", coeffs.keys() if isinstance(coeffs, dict) else ())
        items = sorted((_mode_key(k, f"{where}.coeffs"), _number(v, f"{where}.coeffs[{k}]"))
                       for k, v in coeffs.items())
        return SignalConfig("constant", coeffs=tuple(items))
    if kind == "sampled":
        _check_keys(obj, where, ("kind", "times", "values"), ("times", "values"))
        times = obj["times"]
        if not isinstance(times, list) or len(times) < 2:
            _fail(f"{where}.times", "need a list of at least two times")
        times = tuple(_number(v, f"{where}.times[{i}]") for i, v in enumerate(times))
        if any(b <= a for a, b in zip(times, times[1:])):
            _fail(f"{where}.times", "must be strictly increasing")
        values = obj["values"]
        if not isinstance(values, dict):
            _fail(f"{where}.values", "expected an object")
        rows = []
        for k, row in values.items():
            j = _mode_key(k, f"{where}.values")
            if not isinstance(row, list) or len(row) != len(times):
                _fail(f"{where}.values[{k}]", f"need {len(times)} values")
            rows.append((j, tuple(_number(v, f"{where}.values[{k}]") for v in row)))
        return SignalConfig("sampled", times=times, values=tuple(sorted(rows)))
    _fail(f"{where}.kind", f"unknown signal kind {kind!r}")


def _parse_penalty(obj, where="penalty"):
    _check_keys(obj, where, ("kind", "L"), ("kind",))
    kind = obj["kind"]
    if kind == "reciprocal":
        if "L" not in obj:
            _fail(where, "reciprocal penalty needs 'L'")
        return PenaltySpec.reciprocal(_number(obj["L"], f"{where}.L", True))
    if kind == "exp_over_s":
        if "L" in obj:
            _fail(f"{where}.L", "exp_over_s lives on (0, inf); remove 'L'")
        return PenaltySpec.exp_over_s()
    _fail(f"{where}.kind", f"unknown penalty kind {kind!r}")


def _parse_optimizer(obj, where="optimizer"):
    fields_ = ("grid_points", "newton_tol", "max_newton_iters", "bracket_pad")
    _check_keys(obj, where, fields_)
    kwargs = {}
    for key in ("grid_points", "max_newton_iters"):
        if key in obj:
            kwargs[key] = _integer(obj[key], f"{where}.{key}", 1)
    for key in ("newton_tol", "bracket_pad"):
        if key in obj:
            kwargs[key] = _number(obj[key], f"{where}.{key}", True)
    try:
        return OptimizerConfig(**kwargs)
    except ValueError as exc:
        _fail(where, str(exc))


def config_from_dict(obj):
    """Validate a parsed JSON object and apply defaults."""
    top = ("name", "basis", "T", "y0", "f", "yQ", "penalty", "optimizer", "outputs",
           "snapshots", "snapshot_points")
    _check_keys(obj, "config", top, ("y0",))
    name = obj.get("name", "scenario")
    if not isinstance(name, str) or not name:
        _fail("name", "expected a nonempty string")
    T = _number(obj.get("T", 1.0), "T", positive=True)

    y0_obj = obj["y0"]
    if isinstance(y0_obj, dict) and "preset" in y0_obj:
        _check_keys(y0_obj, "y0", ("preset", "epsilon", "j0"), ("preset", "epsilon", "j0"))
        if y0_obj["preset"] not in PRESETS:
            _fail("y0.preset", f"unknown preset {y0_obj['preset']!r}")
        preset = PresetConfig(y0_obj["preset"], _number(y0_obj["epsilon"], "y0.epsilon"),
                              _integer(y0_obj["j0"], "y0.j0", 1))
        for key in ("f", "yQ"):
            if key in obj:
                _fail(key, "not allowed with a preset (the preset defines it)")
        kind = "neumann" if preset.name == "example1" else "dirichlet"
        basis_obj = obj.get("basis", {"kind": kind, "domain_length": math.pi,
                                      "J_max": default_jmax(preset.j0)})
        basis = _parse_basis(basis_obj)
        if basis.kind != kind:
            _fail("basis.kind", f"preset {preset.name} needs a {kind} basis")
        y0 = preset
        f = yQ = SignalConfig()
    else:
        if "basis" not in obj:
            _fail("config", "missing required key 'basis'")
        basis = _parse_basis(obj["basis"])
        if not isinstance(y0_obj, dict):
            _fail("y0", "expected a mode map or a preset object")
        y0 = tuple(sorted((_mode_key(k, "y0"), _number(v, f"y0[{k}]"))
                          for k, v in y0_obj.items()))
        f = _parse_signal(obj.get("f", {"kind": "zero"}), "f")
        yQ = _parse_signal(obj.get("yQ", {"kind": "zero"}), "yQ")

    penalty = _parse_penalty(obj.get("penalty", {"kind": "exp_over_s"}))
    optimizer = _parse_optimizer(obj.get("optimizer", {}))

    outputs = obj.get("outputs", list(OUTPUTS))
    if not isinstance(outputs, list) or any(o not in OUTPUTS for o in outputs):
        _fail("outputs", f"expected a list drawn from {', '.join(OUTPUTS)}")
    outputs = tuple(o for o in OUTPUTS if o in outputs)

    snaps = obj.get("snapshots", [])
    if not isinstance(snaps, list):
        _fail("snapshots", "expected a list")
    pairs = []
    for i, item in enumerate(snaps):
        _check_keys(item, f"snapshots[{i}]", ("s", "t"), ("s", "t"))
        s = _number(item["s"], f"snapshots[{i}].s", positive=True)
        t = _number(item["t"], f"snapshots[{i}].t")
        if not 0 <= t <= T:
            _fail(f"snapshots[{i}].t", f"must lie in [0, T={T:g}]")
        pairs.append((s, t))
    points = _integer(obj.get("snapshot_points", 512), "snapshot_points", 2)

    cfg = ScenarioConfig(basis, T, y0, f, yQ, penalty, optimizer, name, outputs,
                         tuple(pairs), points)
    validate(cfg)
    return cfg


def validate(cfg):
    """Cross-field checks that need the built basis."""
    try:
        basis = cfg.basis.build()
    except ValueError as exc:
        _fail("basis", str(exc))
    if cfg.preset:
        _position(basis, cfg.preset.j0, "y0.j0")
    else:
        for j, _ in cfg.y0:
            _position(basis, j, "y0")
        for key, sig in (("f", cfg.f), ("yQ", cfg.yQ)):
            for j, _ in sig.coeffs + sig.values:
                _position(basis, j, key)
            if sig.kind == "sampled" and (sig.times[0] > 0 or sig.times[-1] < cfg.T):
                _fail(f"{key}.times", f"must span [0, T={cfg.T:g}]")
    if cfg.snapshots and basis.kind is BasisKind.EXPLICIT:
        _fail("snapshots", "explicit bases cannot be reconstructed in space")
    for s, _ in cfg.snapshots:
        if not s < cfg.penalty.L:
            _fail("snapshots", f"s={s:g} outside the penalty domain")
    return cfg


def load_config(path):
    """Read and validate a JSON scenario file."""
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"{path}: {exc.strerror}") from None
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from None
    return config_from_dict(obj)
