"""Run configuration: a JSON document of named blocks plus dotted-path overrides.

Precedence, lowest first: built-in defaults, the config file, ``--set``
overrides in command-line order, then the dedicated ``--out``/``--workers``
flags.

Blocks and keys::

    profile     n, and either (b, a, B) or (lambda, eta); optional tau0
    integrator  rtol, atol, max_step, n_points, frame, basis, max_steps
    sweep       n, lambda, eta_lo, eta_hi, steps, tau0   (n, lambda default to profile)
    system      omega_c, omega_t, J
    experiment  A_hz, delta_hz, omega1_hz, B_exp, omega0_hz, angular
    output      dir, timing, workers
"""

from __future__ import annotations

import copy
import dataclasses
import json
import math
from dataclasses import dataclass, field
from typing import Optional

from .dynamics import IntegratorSettings
from .profiles import ExperimentalParams, SweepProfile

COMMANDS = ("resonances", "simulate", "sweep", "cnot", "translate")

BLOCK_KEYS = {
    "profile": {"n", "b", "a", "B", "lambda", "eta", "tau0"},
    "integrator": {f.name for f in dataclasses.fields(IntegratorSettings)},
    "sweep": {"n", "lambda", "eta_lo", "eta_hi", "steps", "tau0"},
    "system": {"omega_c", "omega_t", "J"},
    "experiment": {"A_hz", "delta_hz", "omega1_hz", "B_exp", "omega0_hz", "angular"},
    "output": {"dir", "timing", "workers"},
}


class ConfigError(ValueError):
    pass


def _number(block, key, value, integer=False):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{block}.{key} must be a number, got {value!r}")
    if not math.isfinite(value):
        raise ConfigError(f"{block}.{key} must be finite, got {value!r}")
    if integer and int(value) != value:
        raise ConfigError(f"{block}.{key} must be an integer, got {value!r}")
    return int(value) if integer else value


def _require(block_name, block, keys):
    if block is None:
        raise ConfigError(f"missing '{block_name}' block")
    missing = [k for k in keys if block.get(k) is None]
    if missing:
        raise ConfigError(f"{block_name} block is missing {', '.join(missing)}")


@dataclass
class RunConfig:
    command: Optional[str] = None
    profile: Optional[dict] = None
    integrator: dict = field(default_factory=dict)
    sweep: Optional[dict] = None
    system: Optional[dict] = None
    experiment: Optional[dict] = None
    output: dict = field(default_factory=dict)

    @classmethod
    def from_dict(cls, d) -> "RunConfig":
        if not isinstance(d, dict):
            raise ConfigError("config must be a JSON object")
        unknown = set(d) - set(BLOCK_KEYS) - {"command"}
        if unknown:
            raise ConfigError(f"unknown config block(s): {', '.join(sorted(unknown))}")
        cmd = d.get("command")
        if cmd is not None and cmd not in COMMANDS:
            raise ConfigError(f"unknown command {cmd!r}; expected one of {', '.join(COMMANDS)}")
        blocks = {}
        for name, allowed in BLOCK_KEYS.items():
            block = d.get(name)
            if block is None:
                continue
            if not isinstance(block, dict):
                raise ConfigError(f"'{name}' must be an object")
            extra = set(block) - allowed
            if extra:
                raise ConfigError(f"unknown key(s) in {name}: {', '.join(sorted(extra))}")
            blocks[name] = copy.deepcopy(block)
        return cls(command=cmd, **blocks)

    def to_dict(self) -> dict:
        out = {}
        if self.command is not None:
            out["command"] = self.command
        for name in BLOCK_KEYS:
            block = getattr(self, name)
            if block is not None:
                out[name] = copy.deepcopy(block)
        return out

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    def build_profile(self) -> SweepProfile:
        p = self.profile
        _require("profile", p, ["n"])
        n = _number("profile", "n", p["n"], integer=True)
        tau0 = p.get("tau0")
        if tau0 is not None:
            tau0 = _number("profile", "tau0", tau0)
        dimensional = [k for k in ("b", "a", "B") if p.get(k) is not None]
        dimensionless = [k for k in ("lambda", "eta") if p.get(k) is not None]
        if dimensional and dimensionless:
            raise ConfigError("profile gives both (b, a, B) and (lambda, eta); pick one")
        if dimensional:
            _require("profile", p, ["b", "a", "B"])
            b, a, B = (_number("profile", k, p[k]) for k in ("b", "a", "B"))
            return SweepProfile(n=n, b=b, a=a, B=B, tau0=tau0)
        _require("profile", p, ["lambda", "eta"])
        lam = _number("profile", "lambda", p["lambda"])
        eta = _number("profile", "eta", p["eta"])
        return SweepProfile.from_dimensionless(n, lam, eta, tau0=tau0)

    def build_settings(self, base: IntegratorSettings = IntegratorSettings()) -> IntegratorSettings:
        kw = dict(self.integrator)
        for k in ("rtol", "atol", "max_step"):
            if k in kw:
                kw[k] = _number("integrator", k, kw[k])
        for k in ("n_points", "max_steps"):
            if k in kw:
                kw[k] = _number("integrator", k, kw[k], integer=True)
        return dataclasses.replace(base, **kw)

    def build_sweep(self):
        from .search import SweepSpec

        s = dict(self.sweep or {})
        if self.sweep is None:
            raise ConfigError("missing 'sweep' block")
        prof = self.profile or {}
        for k in ("n", "lambda"):
            if s.get(k) is None and prof.get(k) is not None:
                s[k] = prof[k]
        _require("sweep", s, ["n", "lambda", "eta_lo", "eta_hi", "steps"])
        tau0 = s.get("tau0")
        return SweepSpec(
            n=_number("sweep", "n", s["n"], integer=True),
            lam=_number("sweep", "lambda", s["lambda"]),
            eta_lo=_number("sweep", "eta_lo", s["eta_lo"]),
            eta_hi=_number("sweep", "eta_hi", s["eta_hi"]),
            steps=_number("sweep", "steps", s["steps"], integer=True),
            settings=self.build_settings(),
            tau0=None if tau0 is None else _number("sweep", "tau0", tau0),
        )

    def build_system(self):
        from .cnot import TwoQubitSystem

        _require("system", self.system, ["omega_c", "omega_t", "J"])
        return TwoQubitSystem(*(_number("system", k, self.system[k])
                                for k in ("omega_c", "omega_t", "J")))

    def build_experiment(self) -> ExperimentalParams:
        e = self.experiment
        _require("experiment", e, ["A_hz", "delta_hz", "omega1_hz"])
        angular = e.get("angular", False)
        if not isinstance(angular, bool):
            raise ConfigError(f"experiment.angular must be true or false, got {angular!r}")
        return ExperimentalParams(
            A=_number("experiment", "A_hz", e["A_hz"]),
            delta=_number("experiment", "delta_hz", e["delta_hz"]),
            omega1=_number("experiment", "omega1_hz", e["omega1_hz"]),
            B_exp=_number("experiment", "B_exp", e.get("B_exp", 0.0)),
            omega0=_number("experiment", "omega0_hz", e.get("omega0_hz", 0.0)),
            angular=angular,
        )


def parse_override(text: str):
    """``"block.key=VALUE"`` -> (["block", "key"], value); VALUE is JSON or a bare string."""
    path, sep, raw = text.partition("=")
    if not sep or not path.strip():
        raise ConfigError(f"override must look like KEY=VALUE, got {text!r}")
    keys = path.strip().split(".")
    if any(not k for k in keys):
        raise ConfigError(f"bad dotted path {path!r}")
    try:
        value = json.loads(raw)
    except json.JSONDecodeError:
        value = raw
    return keys, value


def apply_overrides(d: dict, overrides) -> dict:
    d = copy.deepcopy(d)
    for text in overrides:
        keys, value = parse_override(text)
        node = d
        for k in keys[:-1]:
            nxt = node.get(k)
            if nxt is None:
                nxt = node[k] = {}
            elif not isinstance(nxt, dict):
                raise ConfigError(f"cannot set {'.'.join(keys)}: {k} is not a block")
            node = nxt
        node[keys[-1]] = value
    return d


def load_config(path=None, overrides=()) -> RunConfig:
    d = {}
    if path is not None:
        try:
            with open(path) as fh:
                d = json.load(fh)
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"malformed JSON in {path}: {exc}") from exc
    if not isinstance(d, dict):
        raise ConfigError("config must be a JSON object")
    return RunConfig.from_dict(apply_overrides(d, overrides))
