"""Scenario configuration: protocol presets, per-network-type defaults,
key = value config parsing with exhaustive error reporting, and assembly
of runnable simulations.
"""

from __future__ import annotations

import configparser
import difflib
import enum
import io
import random
from dataclasses import dataclass, field, fields, replace

from adhocsim import aodv, fsr, olsr
from adhocsim.mobility import (
    SPEED_40_KPH,
    MobilityConfig,
    MobilityModel,
    generate_trajectory,
)
from adhocsim.simkernel import MacProfile, RadioConfig, Simulation
from adhocsim.traffic import FlowConfig


class ConfigError(ValueError):
    """Invalid scenario configuration; carries the full error list."""

    def __init__(self, errors):
        self.errors = list(errors)
        super().__init__("; ".join(self.errors))


class NetType(enum.Enum):
    MANET = "manet"
    VANET = "vanet"


PRESETS = {
    "aodv-def": ("aodv", aodv.DEF_PARAMS),
    "aodv-mod": ("aodv", aodv.MOD_PARAMS),
    "fsr-def": ("fsr", fsr.DEF_PARAMS),
    "fsr-mod": ("fsr", fsr.MOD_PARAMS),
    "olsr-def": ("olsr", olsr.DEF_PARAMS),
    "olsr-mod": ("olsr", olsr.MOD_PARAMS),
}

_AGENT_FACTORY = {
    "aodv": aodv.AodvAgent,
    "fsr": fsr.FsrAgent,
    "olsr": olsr.OlsrAgent,
}


@dataclass(frozen=True)
class TrafficProfile:
    """Knobs for deriving the default CBR flow set."""

    flow_count: int = 10
    rate: float = 4.0
    packet_size: int = 1000
    start_min: float = 10.0
    start_max: float = 20.0


@dataclass(frozen=True)
class Scenario:
    net_type: NetType = NetType.MANET
    preset: str = "aodv-def"
    node_count: int = 10
    seed: int = 1
    horizon: float = 900.0
    mobility: MobilityConfig | None = None  # None -> net-type default
    radio: RadioConfig | None = None  # None -> net-type default
    traffic: TrafficProfile = field(default_factory=TrafficProfile)
    flows: tuple | None = None  # explicit flows override the profile
    protocol_overrides: dict = field(default_factory=dict)

    # -- resolution ---------------------------------------------------------

    def resolved_mobility(self) -> MobilityConfig:
        if self.mobility is not None:
            return replace(self.mobility, seed=self.seed)
        if self.net_type is NetType.MANET:
            return MobilityConfig(
                model=MobilityModel.RANDOM_WAYPOINT,
                area=(1000.0, 1000.0),
                speed=SPEED_40_KPH,
                pause=0.0,
                seed=self.seed,
            )
        return MobilityConfig(
            model=MobilityModel.ROAD_GRID,
            area=(1500.0, 1500.0),
            speed=SPEED_40_KPH,
            grid_spacing=200.0,
            seed=self.seed,
        )

    def resolved_radio(self) -> RadioConfig:
        if self.radio is not None:
            return self.radio
        if self.net_type is NetType.MANET:
            return RadioConfig.mac80211()
        return RadioConfig.mac80211p()

    def resolved_protocol_params(self):
        protocol, params = PRESETS[self.preset]
        if self.protocol_overrides:
            params = replace(params, **self.protocol_overrides)
        return protocol, params

    def resolved_flows(self):
        if self.flows is not None:
            return list(self.flows)
        return default_flows(self)

    def protocol_name(self) -> str:
        return PRESETS[self.preset][0]

    def preset_variant(self) -> str:
        return self.preset.rsplit("-", 1)[1]

    # -- validation -----------------------------------------------------------

    def validate(self):
        """All constraint violations, not just the first one."""
        errors = []
        if self.node_count < 2:
            errors.append("node_count must be >= 2")
        if self.preset not in PRESETS:
            errors.append(
                f"unknown preset {self.preset!r}; valid: {', '.join(sorted(PRESETS))}"
            )
        if self.horizon <= 0:
            errors.append("horizon must be > 0")
        if self.traffic.flow_count < 1:
            errors.append("flow_count must be >= 1")
        if self.traffic.rate <= 0:
            errors.append("traffic rate must be > 0")
        if self.traffic.packet_size <= 0:
            errors.append("packet_size must be > 0")
        if not 0 <= self.traffic.start_min <= self.traffic.start_max:
            errors.append("traffic start window must satisfy 0 <= min <= max")
        if self.traffic.start_max >= self.horizon:
            errors.append("traffic start window must end before the horizon")
        if self.mobility is not None:
            try:
                self.mobility.validate()
            except ValueError as exc:
                errors.append(str(exc))
        if self.preset in PRESETS and self.protocol_overrides:
            protocol, params = PRESETS[self.preset]
            valid_keys = {f.name for f in fields(params)}
            for key in sorted(self.protocol_overrides):
                if key not in valid_keys:
                    errors.append(_unknown_key_error(key, valid_keys, "protocol"))
            if not any(e.startswith("unknown key") for e in errors):
                try:
                    replace(params, **self.protocol_overrides).validate()
                except (ValueError, TypeError) as exc:
                    errors.append(f"protocol overrides invalid: {exc}")
        if self.flows is not None:
            if not self.flows:
                errors.append("explicit flow list must not be empty")
            for flow in self.flows or ():
                try:
                    flow.validate(self.horizon)
                except ValueError as exc:
                    errors.append(str(exc))
                if flow.src >= self.node_count or flow.dst >= self.node_count:
                    errors.append(f"flow endpoints out of range: {flow}")
        return errors

    def validated(self) -> "Scenario":
        errors = self.validate()
        if errors:
            raise ConfigError(errors)
        return self


def default_flows(scenario: Scenario):
    """Default traffic: distinct random (src, dst) pairs starting uniformly
    inside the configured window and running to the horizon.  The draw
    depends only on (seed, node_count), so every protocol preset sees the
    same offered load.
    """
    prof = scenario.traffic
    n = scenario.node_count
    rng = random.Random(f"{scenario.seed}:flows")
    want = min(prof.flow_count, n * (n - 1))
    pairs: list[tuple[int, int]] = []
    seen = set()
    while len(pairs) < want:
        src = rng.randrange(n)
        dst = rng.randrange(n)
        if src == dst or (src, dst) in seen:
            continue
        seen.add((src, dst))
        pairs.append((src, dst))
    flows = []
    for src, dst in pairs:
        start = rng.uniform(prof.start_min, prof.start_max)
        flows.append(
            FlowConfig(
                src=src,
                dst=dst,
                rate=prof.rate,
                start_t=start,
                stop_t=scenario.horizon,
                packet_size=prof.packet_size,
            )
        )
    return flows


def build_simulation(scenario: Scenario, collect_trace: bool = True) -> Simulation:
    scenario = scenario.validated()
    mob = scenario.resolved_mobility()
    trajectories = {
        node_id: generate_trajectory(mob, node_id, scenario.horizon)
        for node_id in range(scenario.node_count)
    }
    protocol, params = scenario.resolved_protocol_params()
    factory = _AGENT_FACTORY[protocol]
    agents = {node_id: factory(params) for node_id in range(scenario.node_count)}
    return Simulation(
        trajectories=trajectories,
        agents=agents,
        flows=scenario.resolved_flows(),
        radio=scenario.resolved_radio(),
        horizon=scenario.horizon,
        seed=scenario.seed,
        collect_trace=collect_trace,
    )


def run_scenario(scenario: Scenario, collect_trace: bool = True):
    return build_simulation(scenario, collect_trace=collect_trace).run()


# -- config text format ---------------------------------------------------------

_SCENARIO_KEYS = {
    "net_type",
    "preset",
    "node_count",
    "seed",
    "horizon",
}
_MOBILITY_KEYS = {"model", "area_w", "area_h", "speed", "pause", "grid_spacing"}
_RADIO_KEYS = {
    "radius",
    "mac_profile",
    "base_delay",
    "per_contender_delay",
    "loss_base",
    "loss_per_contender",
}
_TRAFFIC_KEYS = {"flow_count", "rate", "packet_size", "start_min", "start_max"}
_SECTIONS = {
    "scenario": _SCENARIO_KEYS,
    "mobility": _MOBILITY_KEYS,
    "radio": _RADIO_KEYS,
    "traffic": _TRAFFIC_KEYS,
    "protocol": None,  # validated against the preset's parameter fields
}


def _unknown_key_error(key, valid, where):
    close = difflib.get_close_matches(key, sorted(valid), n=1)
    hint = f" (did you mean {close[0]!r}?)" if close else ""
    return f"unknown key {key!r} in [{where}]{hint}"


def parse_config(text: str) -> Scenario:
    """Parse `key = value` config text with [section] headers into a
    Scenario.  Raises ConfigError carrying every violation found.
    """
    parser = configparser.ConfigParser(interpolation=None)
    parser.optionxform = str
    errors: list[str] = []
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError([f"config syntax: {exc}"]) from exc

    for section in parser.sections():
        if section not in _SECTIONS:
            close = difflib.get_close_matches(section, sorted(_SECTIONS), n=1)
            hint = f" (did you mean [{close[0]}]?)" if close else ""
            errors.append(f"unknown section [{section}]{hint}")
            continue
        allowed = _SECTIONS[section]
        if allowed is None:
            continue
        for key in parser[section]:
            if key not in allowed:
                errors.append(_unknown_key_error(key, allowed, section))

    def get(section, key, conv, default=None):
        if not parser.has_option(section, key):
            return default
        raw = parser.get(section, key)
        try:
            return conv(raw)
        except (ValueError, KeyError) as exc:
            errors.append(f"bad value for {key!r} in [{section}]: {raw!r} ({exc})")
            return default

    def to_bool(raw):
        lowered = raw.strip().lower()
        if lowered in ("1", "true", "yes", "on"):
            return True
        if lowered in ("0", "false", "no", "off"):
            return False
        raise ValueError("expected a boolean")

    net_type = get("scenario", "net_type", lambda r: NetType(r.strip().lower()),
                   NetType.MANET)
    preset = get("scenario", "preset", str, "aodv-def")
    node_count = get("scenario", "node_count", int, 10)
    seed = get("scenario", "seed", int, 1)
    horizon = get("scenario", "horizon", float, 900.0)

    mobility = None
    if parser.has_section("mobility"):
        base = Scenario(net_type=net_type or NetType.MANET, seed=seed or 1)
        default_mob = base.resolved_mobility()
        mobility = MobilityConfig(
            model=get(
                "mobility", "model",
                lambda r: MobilityModel(r.strip().lower()), default_mob.model,
            ),
            area=(
                get("mobility", "area_w", float, default_mob.area[0]),
                get("mobility", "area_h", float, default_mob.area[1]),
            ),
            speed=get("mobility", "speed", float, default_mob.speed),
            pause=get("mobility", "pause", float, default_mob.pause),
            grid_spacing=get(
                "mobility", "grid_spacing", float, default_mob.grid_spacing
            ),
            seed=seed or 1,
        )

    radio = None
    if parser.has_section("radio"):
        base = Scenario(net_type=net_type or NetType.MANET)
        default_radio = base.resolved_radio()
        radio = RadioConfig(
            radius=get("radio", "radius", float, default_radio.radius),
            mac_profile=get(
                "radio", "mac_profile",
                lambda r: MacProfile(r.strip().lower()), default_radio.mac_profile,
            ),
            base_delay=get("radio", "base_delay", float, default_radio.base_delay),
            per_contender_delay=get(
                "radio", "per_contender_delay", float,
                default_radio.per_contender_delay,
            ),
            loss_base=get("radio", "loss_base", float, default_radio.loss_base),
            loss_per_contender=get(
                "radio", "loss_per_contender", float,
                default_radio.loss_per_contender,
            ),
        )

    traffic = TrafficProfile(
        flow_count=get("traffic", "flow_count", int, 10),
        rate=get("traffic", "rate", float, 4.0),
        packet_size=get("traffic", "packet_size", int, 1000),
        start_min=get("traffic", "start_min", float, 10.0),
        start_max=get("traffic", "start_max", float, 20.0),
    )

    overrides = {}
    if parser.has_section("protocol") and preset in PRESETS:
        _, params = PRESETS[preset]
        param_fields = {f.name: f for f in fields(params)}
        for key, raw in parser["protocol"].items():
            if key not in param_fields:
                errors.append(_unknown_key_error(key, param_fields, "protocol"))
                continue
            kind = type(getattr(params, key))
            conv = to_bool if kind is bool else kind
            try:
                overrides[key] = conv(raw)
            except ValueError as exc:
                errors.append(
                    f"bad value for {key!r} in [protocol]: {raw!r} ({exc})"
                )

    if errors:
        raise ConfigError(errors)

    scenario = Scenario(
        net_type=net_type,
        preset=preset,
        node_count=node_count,
        seed=seed,
        horizon=horizon,
        mobility=mobility,
        radio=radio,
        traffic=traffic,
        protocol_overrides=overrides,
    )
    deep_errors = scenario.validate()
    if deep_errors:
        raise ConfigError(deep_errors)
    return scenario


def serialize_config(scenario: Scenario) -> str:
    """Render a Scenario back to config text; parse(serialize(s)) == s for
    scenarios expressible in the file format.
    """
    out = io.StringIO()
    out.write("[scenario]\n")
    out.write(f"net_type = {scenario.net_type.value}\n")
    out.write(f"preset = {scenario.preset}\n")
    out.write(f"node_count = {scenario.node_count}\n")
    out.write(f"seed = {scenario.seed}\n")
    out.write(f"horizon = {scenario.horizon!r}\n")
    if scenario.mobility is not None:
        mob = scenario.mobility
        out.write("\n[mobility]\n")
        out.write(f"model = {mob.model.value}\n")
        out.write(f"area_w = {mob.area[0]!r}\n")
        out.write(f"area_h = {mob.area[1]!r}\n")
        out.write(f"speed = {mob.speed!r}\n")
        out.write(f"pause = {mob.pause!r}\n")
        out.write(f"grid_spacing = {mob.grid_spacing!r}\n")
    if scenario.radio is not None:
        radio = scenario.radio
        out.write("\n[radio]\n")
        out.write(f"radius = {radio.radius!r}\n")
        out.write(f"mac_profile = {radio.mac_profile.value}\n")
        out.write(f"base_delay = {radio.base_delay!r}\n")
        out.write(f"per_contender_delay = {radio.per_contender_delay!r}\n")
        out.write(f"loss_base = {radio.loss_base!r}\n")
        out.write(f"loss_per_contender = {radio.loss_per_contender!r}\n")
    prof = scenario.traffic
    out.write("\n[traffic]\n")
    out.write(f"flow_count = {prof.flow_count}\n")
    out.write(f"rate = {prof.rate!r}\n")
    out.write(f"packet_size = {prof.packet_size}\n")
    out.write(f"start_min = {prof.start_min!r}\n")
    out.write(f"start_max = {prof.start_max!r}\n")
    if scenario.protocol_overrides:
        out.write("\n[protocol]\n")
        for key in sorted(scenario.protocol_overrides):
            out.write(f"{key} = {scenario.protocol_overrides[key]}\n")
    return out.getvalue()
