"""Run configuration: a strict JSON/TOML key tree mapped onto the module configs.

Example (TOML)::

    benchmark = "booth"
    mode = "deterministic"
    seed = 7

    [flow]
    beta = 20.0

Every key is optional except ``benchmark``.  Unknown keys are rejected.
"""

from __future__ import annotations

import json
import sys
from dataclasses import asdict, dataclass, field, fields, replace

from . import domain as dm
from .benchmarks import BENCHMARKS, NoiseModel
from .errors import ConfigError, ValidationError
from .flow import SENSES, FlowConfig
from .sampling import SamplingConfig

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

MODES = ("stochastic", "deterministic")


@dataclass(frozen=True)
class DenseFitConfig:
    """Uniform-grid least-squares fit used by the deterministic mode."""

    order: int = 24
    points: int = 128
    ridge: float = 1e-10
    period_factor: float = 2.0

    def __post_init__(self):
        if int(self.order) < 0 or int(self.points) < 2:
            raise ValidationError("dense order must be >= 0 and points >= 2")
        if self.ridge < 0 or not self.period_factor > 0:
            raise ValidationError("dense ridge must be >= 0 and period_factor > 0")


@dataclass(frozen=True)
class HybridConfig:
    enabled: bool = False
    shrink: float = 0.2
    order: int = 5
    zoom: tuple | None = None

    def __post_init__(self):
        if not 0 < self.shrink <= 1:
            raise ValidationError("hybrid shrink must be in (0, 1]")
        if int(self.order) < 0:
            raise ValidationError("hybrid order must be >= 0")
        if self.zoom is not None:
            object.__setattr__(self, "zoom", dm.make_domain(self.zoom))


@dataclass(frozen=True)
class BoundsConfig:
    sizes: tuple = (100, 400, 1600, 6400)
    order: int = 3
    sigma: float = 0.0
    s: float = 1.0
    delta: float = 0.05
    target: str = "measured_max"

    def __post_init__(self):
        object.__setattr__(self, "sizes", tuple(int(v) for v in self.sizes))
        if len(self.sizes) < 3:
            raise ValidationError("bounds sizes needs at least 3 entries")
        if self.sigma < 0 or not self.s > 0 or not 0 < self.delta < 1:
            raise ValidationError("bounds needs sigma >= 0, s > 0 and 0 < delta < 1")
        if self.target not in ("measured_max", "measured_mae"):
            raise ValidationError("bounds target must be 'measured_max' or 'measured_mae'")


@dataclass(frozen=True)
class RunConfig:
    benchmark: str
    mode: str = "stochastic"
    sense: str = "min"
    seed: int = 0
    output_dir: str = "runs"
    emit_grids: bool = False
    sampling: SamplingConfig = field(default_factory=SamplingConfig)
    flow: FlowConfig = field(default_factory=FlowConfig)
    noise: NoiseModel = field(default_factory=NoiseModel)
    dense: DenseFitConfig = field(default_factory=DenseFitConfig)
    hybrid: HybridConfig = field(default_factory=HybridConfig)
    bounds: BoundsConfig = field(default_factory=BoundsConfig)

    def __post_init__(self):
        if self.benchmark not in BENCHMARKS:
            raise ValidationError(f"benchmark: unknown {self.benchmark!r}; choose from {sorted(BENCHMARKS)}")
        if self.mode not in MODES:
            raise ValidationError(f"mode must be one of {MODES}")
        if self.sense not in SENSES:
            raise ValidationError(f"sense must be one of {SENSES}")
        if not 0 <= int(self.seed) < 2 ** 64:
            raise ValidationError("seed must be a 64-bit unsigned integer")
        # one master seed drives every random stream
        if self.sampling.seed != self.seed:
            object.__setattr__(self, "sampling", replace(self.sampling, seed=int(self.seed)))
        if self.noise.seed != self.seed:
            object.__setattr__(self, "noise", replace(self.noise, seed=int(self.seed)))

    def to_dict(self):
        out = asdict(self)
        out["sampling"].pop("seed")
        out["noise"].pop("seed")
        if out["hybrid"]["zoom"] is not None:
            out["hybrid"]["zoom"] = [list(iv) for iv in out["hybrid"]["zoom"]]
        out["bounds"]["sizes"] = list(out["bounds"]["sizes"])
        return out

    def to_json(self):
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)


SECTIONS = {
    "sampling": SamplingConfig,
    "flow": FlowConfig,
    "noise": NoiseModel,
    "dense": DenseFitConfig,
    "hybrid": HybridConfig,
    "bounds": BoundsConfig,
}
# seeds are derived from the top-level seed, never set per section
FORBIDDEN = {"sampling": {"seed"}, "noise": {"seed"}}


def _coerce(value, type_name, where):
    t = str(type_name).replace(" ", "")
    optional = t.endswith("|None")
    if optional:
        if value is None:
            return None
        t = t[:-len("|None")]
    if t == "bool":
        if isinstance(value, bool):
            return value
    elif t == "int":
        if isinstance(value, int) and not isinstance(value, bool):
            return value
    elif t == "float":
        if isinstance(value, (int, float)) and not isinstance(value, bool):
            return float(value)
    elif t == "str":
        if isinstance(value, str):
            return value
    elif t == "tuple":
        if isinstance(value, list):
            return tuple(tuple(v) if isinstance(v, list) else v for v in value)
    else:
        return value
    raise ConfigError(f"{where}: expected {type_name}, got {type(value).__name__} {value!r}")


def _build(cls, data, where):
    if not isinstance(data, dict):
        raise ConfigError(f"{where}: expected a table of keys")
    known = {f.name: f for f in fields(cls)}
    bad = FORBIDDEN.get(where, set())
    kwargs = {}
    for key, value in data.items():
        path = f"{where}.{key}" if where else key
        if key not in known or key in bad:
            hint = " (use the top-level seed)" if key in bad else ""
            raise ConfigError(f"unknown key {path!r}{hint}")
        if key in SECTIONS and not where:
            kwargs[key] = _build(SECTIONS[key], value, key)
        else:
            kwargs[key] = _coerce(value, known[key].type, path)
    try:
        return cls(**kwargs)
    except ConfigError:
        raise
    except (ValidationError, TypeError) as exc:
        raise ConfigError(f"{where or 'config'}: {exc}") from None


def parse_config(text: str, fmt: str | None = None) -> RunConfig:
    """Parse a JSON or TOML document into a validated :class:`RunConfig`.

    ``fmt`` is ``"json"`` or ``"toml"``; by default a document starting with
    ``{`` is JSON and anything else TOML.
    """
    if fmt is None:
        fmt = "json" if text.lstrip().startswith("{") else "toml"
    if fmt == "json":
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"JSON parse error at line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    elif fmt == "toml":
        try:
            data = tomllib.loads(text)
        except tomllib.TOMLDecodeError as exc:
            raise ConfigError(f"TOML parse error: {exc}") from None
    else:
        raise ConfigError(f"unknown config format {fmt!r}")
    if not isinstance(data, dict):
        raise ConfigError("config document must be a table at the top level")
    if "benchmark" not in data:
        raise ConfigError("missing required key 'benchmark'")
    return _build(RunConfig, data, "")


def load_config(path) -> RunConfig:
    with open(path, encoding="utf-8") as fh:
        text = fh.read()
    fmt = "json" if str(path).endswith(".json") else "toml" if str(path).endswith(".toml") else None
    return parse_config(text, fmt)
