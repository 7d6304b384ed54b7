"""Scenario config files: parsing, validation, and sweep expansion.

Config files use TOML syntax. One file describes a family of runs: a
base ``[scenario]`` table, an optional ``[sweep]`` table whose axes are
expanded as a cartesian product, and an optional ``[churn]`` table whose
``stages`` array schedules participation models over time. A commented
example::

    # Base parameters applied to every expanded run.
    [scenario]
    name = "demo"            # prefix for the scenario column in CSVs
    n = 40                   # node count
    views = 200              # views (BFT variants) or slots (longest-chain)
    seeds = [0, 1]           # required: one full run per seed
    profile = "test64"       # group profile: test64 | std256
    variant = "pvss-bft"     # pvss-bft | baseline-bft | longest-chain
    strategy = "honest"      # adversary strategy for byzantine nodes
    byzantine = 0            # byzantine node count
    txs_per_view = 2         # transactions submitted per view
    crypto_level = "fast"    # fast | full

    # Optional sweep axes; runs = |variants| x |byzantine| x |seeds|.
    [sweep]
    byzantine = [0, 5, 10]
    variants = ["pvss-bft", "baseline-bft"]

    # Optional staged churn; omitting [churn] keeps every node awake.
    [[churn.stages]]
    duration = 360           # ticks (= seconds)
    model = "sinusoidal"     # awake fraction follows a sine wave
    mean = 0.5
    amplitude = 0.2
    period = 120.0

    [[churn.stages]]
    duration = 360
    model = "bernoulli"      # each node offline with probability p per tick
    p = 0.1

    [[churn.stages]]
    duration = 360
    model = "flip"           # each node flips awake/asleep with prob. p
    p = 0.5

``views`` may be replaced by ``duration_ticks``, which fixes the wall
clock budget instead of the round count: BFT variants then run
``duration_ticks // 4`` views and the longest-chain baseline runs
``duration_ticks // 15`` slots, so a mixed variant sweep covers the
same time window. Exactly one of the two keys must be present.

Unknown keys are rejected with their dotted path so typos surface
immediately instead of silently falling back to defaults. ``seeds`` is
mandatory, as is the ``stages`` array whenever ``[churn]`` is present.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Dict, List, Optional, Sequence, Tuple

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib  # type: ignore[no-redef]

from .baselines import SLOT_TICKS
from .simnet import (
    Bernoulli,
    ConfigError,
    FlipEachSecond,
    ScenarioConfig,
    Sinusoidal,
    Stage,
)

__all__ = ["ROUND_TICKS", "ParsedConfig", "load_config", "parse_config"]


_SCENARIO_KEYS = (
    "name",
    "n",
    "views",
    "duration_ticks",
    "seeds",
    "profile",
    "variant",
    "strategy",
    "byzantine",
    "txs_per_view",
    "crypto_level",
    "collect_node_records",
)
_REQUIRED_SCENARIO_KEYS = ("name", "n", "seeds")
# one BFT view spans four one-tick phases; one chain slot spans 15 ticks
ROUND_TICKS = {"pvss-bft": 4, "baseline-bft": 4, "longest-chain": SLOT_TICKS}
_SWEEP_KEYS = ("byzantine", "variants")
_STAGE_COMMON_KEYS = ("duration", "model")
_MODEL_KEYS = {
    "sinusoidal": ("mean", "amplitude", "period"),
    "bernoulli": ("p",),
    "flip": ("p",),
}


def _reject_unknown(table: dict, allowed: Sequence[str], where: str) -> None:
    for key in table:
        if key not in allowed:
            path = f"{where}.{key}" if where else key
            raise ConfigError(
                f"unknown key '{path}' (expected one of: {', '.join(sorted(allowed))})"
            )


def _as_int(value: object, path: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(f"'{path}' must be an integer, got {value!r}")
    return value


def _as_float(value: object, path: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"'{path}' must be a number, got {value!r}")
    return float(value)


def _as_str(value: object, path: str) -> str:
    if not isinstance(value, str):
        raise ConfigError(f"'{path}' must be a string, got {value!r}")
    return value


def _as_bool(value: object, path: str) -> bool:
    if not isinstance(value, bool):
        raise ConfigError(f"'{path}' must be a boolean, got {value!r}")
    return value


def _as_int_list(value: object, path: str) -> List[int]:
    if not isinstance(value, list) or not value:
        raise ConfigError(f"'{path}' must be a non-empty list of integers")
    return [_as_int(v, f"{path}[{i}]") for i, v in enumerate(value)]


def _as_str_list(value: object, path: str) -> List[str]:
    if not isinstance(value, list) or not value:
        raise ConfigError(f"'{path}' must be a non-empty list of strings")
    return [_as_str(v, f"{path}[{i}]") for i, v in enumerate(value)]


def _parse_stage(table: object, where: str) -> Stage:
    if not isinstance(table, dict):
        raise ConfigError(f"'{where}' must be a table")
    kind = _as_str(table.get("model", ""), f"{where}.model")
    if kind not in _MODEL_KEYS:
        raise ConfigError(
            f"'{where}.model' must be one of: {', '.join(sorted(_MODEL_KEYS))}; "
            f"got {kind!r}"
        )
    _reject_unknown(table, _STAGE_COMMON_KEYS + _MODEL_KEYS[kind], where)
    if "duration" not in table:
        raise ConfigError(f"'{where}.duration' is required")
    duration = _as_int(table["duration"], f"{where}.duration")
    if duration < 1:
        raise ConfigError(f"'{where}.duration' must be positive")
    if kind == "sinusoidal":
        model: object = Sinusoidal(
            mean=_as_float(table.get("mean", 0.5), f"{where}.mean"),
            amplitude=_as_float(table.get("amplitude", 0.2), f"{where}.amplitude"),
            period=_as_float(table.get("period", 120.0), f"{where}.period"),
        )
    else:
        if "p" not in table:
            raise ConfigError(f"'{where}.p' is required")
        p = _as_float(table["p"], f"{where}.p")
        if not 0.0 <= p <= 1.0:
            raise ConfigError(f"'{where}.p' must be in [0, 1]")
        model = Bernoulli(p=p) if kind == "bernoulli" else FlipEachSecond(p=p)
    return Stage(duration, model)


@dataclass(frozen=True)
class ParsedConfig:
    """A validated config file, before sweep expansion."""

    base: ScenarioConfig
    seeds: Tuple[int, ...]
    byzantine_sweep: Tuple[int, ...]
    variant_sweep: Tuple[str, ...]
    duration_ticks: Optional[int] = None

    def expand(
        self,
        seed_override: Optional[int] = None,
        profile_override: Optional[str] = None,
    ) -> List[ScenarioConfig]:
        """One ScenarioConfig per (variant, byzantine, seed) combination.

        Expanded names are unique: ``<name>-<variant>-b<byz>-s<seed>``.
        """
        seeds = (seed_override,) if seed_override is not None else self.seeds
        configs: List[ScenarioConfig] = []
        for variant in self.variant_sweep:
            if self.duration_ticks is not None:
                if variant not in ROUND_TICKS:
                    raise ConfigError(f"unknown variant: {variant}")
                views = self.duration_ticks // ROUND_TICKS[variant]
                if views < 1:
                    raise ConfigError(
                        "'scenario.duration_ticks' too short for one "
                        f"{variant} round"
                    )
            else:
                views = self.base.views
            for byz in self.byzantine_sweep:
                for seed in seeds:
                    cfg = replace(
                        self.base,
                        name=f"{self.base.name}-{variant}-b{byz}-s{seed}",
                        variant=variant,
                        views=views,
                        byzantine=byz,
                        seed=seed,
                        profile=profile_override or self.base.profile,
                    )
                    cfg.validate()
                    configs.append(cfg)
        return configs

    def schedule_key(self) -> Tuple[Tuple[int, object], ...]:
        """Hashable identity of the churn schedule, for compatibility checks."""
        if self.base.churn is None:
            return ()
        return tuple((s.duration, s.model) for s in self.base.churn)


def parse_config(data: Dict[str, object], source: str = "<config>") -> ParsedConfig:
    _reject_unknown(data, ("scenario", "sweep", "churn"), "")
    if "scenario" not in data or not isinstance(data["scenario"], dict):
        raise ConfigError(f"{source}: missing [scenario] table")
    scenario = data["scenario"]
    _reject_unknown(scenario, _SCENARIO_KEYS, "scenario")
    for key in _REQUIRED_SCENARIO_KEYS:
        if key not in scenario:
            raise ConfigError(f"'scenario.{key}' is required")
    if ("views" in scenario) == ("duration_ticks" in scenario):
        raise ConfigError(
            "exactly one of 'scenario.views' and 'scenario.duration_ticks' "
            "must be set"
        )
    duration: Optional[int] = None
    if "duration_ticks" in scenario:
        duration = _as_int(scenario["duration_ticks"], "scenario.duration_ticks")
        if duration < 1:
            raise ConfigError("'scenario.duration_ticks' must be positive")

    seeds = tuple(_as_int_list(scenario["seeds"], "scenario.seeds"))
    base = ScenarioConfig(
        name=_as_str(scenario["name"], "scenario.name"),
        n=_as_int(scenario["n"], "scenario.n"),
        views=_as_int(scenario.get("views", 1), "scenario.views"),
        seed=seeds[0],
        profile=_as_str(scenario.get("profile", "test64"), "scenario.profile"),
        byzantine=_as_int(scenario.get("byzantine", 0), "scenario.byzantine"),
        strategy=_as_str(scenario.get("strategy", "honest"), "scenario.strategy"),
        variant=_as_str(scenario.get("variant", "pvss-bft"), "scenario.variant"),
        crypto_level=_as_str(
            scenario.get("crypto_level", "fast"), "scenario.crypto_level"
        ),
        txs_per_view=_as_int(
            scenario.get("txs_per_view", 2), "scenario.txs_per_view"
        ),
        collect_node_records=_as_bool(
            scenario.get("collect_node_records", False),
            "scenario.collect_node_records",
        ),
    )

    byz_sweep: Tuple[int, ...] = (base.byzantine,)
    variant_sweep: Tuple[str, ...] = (base.variant,)
    if "sweep" in data:
        sweep = data["sweep"]
        if not isinstance(sweep, dict):
            raise ConfigError("'sweep' must be a table")
        _reject_unknown(sweep, _SWEEP_KEYS, "sweep")
        if "byzantine" in sweep:
            byz_sweep = tuple(_as_int_list(sweep["byzantine"], "sweep.byzantine"))
        if "variants" in sweep:
            variant_sweep = tuple(
                _as_str_list(sweep["variants"], "sweep.variants")
            )

    if "churn" in data:
        churn = data["churn"]
        if not isinstance(churn, dict):
            raise ConfigError("'churn' must be a table")
        _reject_unknown(churn, ("stages",), "churn")
        raw_stages = churn.get("stages")
        if not isinstance(raw_stages, list) or not raw_stages:
            raise ConfigError("'churn.stages' must be a non-empty array of tables")
        stages = tuple(
            _parse_stage(s, f"churn.stages[{i}]") for i, s in enumerate(raw_stages)
        )
        base = replace(base, churn=stages)

    parsed = ParsedConfig(
        base=base,
        seeds=seeds,
        byzantine_sweep=byz_sweep,
        variant_sweep=variant_sweep,
        duration_ticks=duration,
    )
    parsed.expand()  # fail fast on invalid combinations
    return parsed


def load_config(path: str) -> ParsedConfig:
    """Parse and validate a TOML scenario file.

    Raises ConfigError with the offending dotted key path on unknown or
    ill-typed keys, and on structurally invalid sweeps (so a bad file is
    rejected before any simulation starts).
    """
    try:
        with open(path, "rb") as fh:
            data = tomllib.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"invalid TOML in {path}: {exc}") from exc
    return parse_config(data, source=path)
