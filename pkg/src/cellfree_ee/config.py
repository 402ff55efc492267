"""Run configuration in human units and its conversion to model inputs.

Files are JSON documents validated against ``data/config.schema.json``.
Densities are given in AP/km^2, areas in km^2, transmit powers in mW,
bandwidth in MHz and per-rate circuit powers in W/(Gbit/s).
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from importlib import resources
from pathlib import Path

import jsonschema
import numpy as np

from .model import DomainError, PowerModel, SystemParams, noise_power
from .optimize import SearchBounds

KM2 = 1e6  # m^2 per km^2


class ConfigError(ValueError):
    """The configuration document is malformed or out of range."""


@dataclass(frozen=True)
class SystemSpec:
    n_antennas: int = 20
    n_users: int = 10
    pilot_reuse: float = 4.0
    ap_density_per_km2: float = 100.0
    area_km2: float = 1.0
    pathloss_exp: float = 4.0
    pilot_power_mw: float = 100.0
    dl_power_mw: float = 200.0
    coherence_samples: int = 200
    dl_fraction: float = 1.0 / 3.0
    bandwidth_mhz: float = 20.0
    noise_figure_db: float = 9.0
    noise_temperature_k: float = 290.0
    pilot_mode: str = "orthogonal_reuse"

    def noise_w(self) -> float:
        return noise_power(self.bandwidth_mhz * 1e6, self.noise_figure_db, self.noise_temperature_k)

    def to_params(self) -> SystemParams:
        npow = self.noise_w()
        return SystemParams(
            n_antennas=self.n_antennas, n_users=self.n_users, pilot_reuse=self.pilot_reuse,
            ap_density=self.ap_density_per_km2 / KM2, area=self.area_km2 * KM2,
            pathloss_exp=self.pathloss_exp,
            rho_tr=self.pilot_power_mw * 1e-3 / npow, rho_d=self.dl_power_mw * 1e-3 / npow,
            rho_tr_watts=self.pilot_power_mw * 1e-3, rho_d_watts=self.dl_power_mw * 1e-3,
            tau_c=self.coherence_samples, dl_fraction=self.dl_fraction,
            bandwidth=self.bandwidth_mhz * 1e6, pilot_mode=self.pilot_mode,
        )


@dataclass(frozen=True)
class PowerSpec:
    fixed_w: float = 5.0
    lo_w: float = 0.1
    per_ap_antenna_w: float = 0.2
    per_ue_antenna_w: float = 0.1
    coding_w_per_gbps: float = 0.01
    decoding_w_per_gbps: float = 0.08
    backhaul_w_per_gbps: float = 0.025
    ap_gflops_per_w: float = 750.0
    amp_efficiency: float = 0.5

    def to_model(self) -> PowerModel:
        return PowerModel(
            p_fp=self.fixed_w, p_lo=self.lo_w, p_ap=self.per_ap_antenna_w, p_ue=self.per_ue_antenna_w,
            p_cod=self.coding_w_per_gbps * 1e-9, p_dec=self.decoding_w_per_gbps * 1e-9,
            p_bt=self.backhaul_w_per_gbps * 1e-9, l_ap=self.ap_gflops_per_w * 1e9,
            amp_eff=self.amp_efficiency,
        )


@dataclass(frozen=True)
class SearchSpec:
    ap_density_per_km2: tuple = (1.0, 200.0)
    n_antennas: tuple = (1, 256)
    n_users: tuple = (3, 64)
    grid_points: int = 200

    def to_bounds(self) -> SearchBounds:
        lo, hi = self.ap_density_per_km2
        return SearchBounds(ap_density=(lo / KM2, hi / KM2), n_antennas=tuple(self.n_antennas),
                            n_users=tuple(self.n_users), grid_points=self.grid_points)


@dataclass(frozen=True)
class SweepAxis:
    variable: str
    min: float
    max: float
    steps: int
    scale: str = "linear"

    def values(self) -> np.ndarray:
        """Grid in config units; integer variables are rounded and deduplicated."""
        if self.scale == "log":
            v = np.geomspace(self.min, self.max, self.steps)
        else:
            v = np.linspace(self.min, self.max, self.steps)
        if self.variable in ("n_antennas", "n_users"):
            v = np.unique(np.round(v).astype(int))
        return v


@dataclass(frozen=True)
class MCSpec:
    n_realizations: int = 1000
    seed: int = 1
    workers: int = 1
    pilot_policy: str = "round_robin"
    typical_user_only: bool = True


@dataclass(frozen=True)
class OutputSpec:
    path: str | None = None
    format: str = "csv"


@dataclass(frozen=True)
class RunConfig:
    system: SystemSpec = field(default_factory=SystemSpec)
    power: PowerSpec = field(default_factory=PowerSpec)
    gamma0: float = 3.0
    search: SearchSpec = field(default_factory=SearchSpec)
    sweep: tuple = ()
    mc: MCSpec = field(default_factory=MCSpec)
    output: OutputSpec = field(default_factory=OutputSpec)

    def params(self) -> SystemParams:
        return self.system.to_params()

    def power_model(self) -> PowerModel:
        return self.power.to_model()

    def to_dict(self) -> dict:
        search = asdict(self.search)
        for key in ("ap_density_per_km2", "n_antennas", "n_users"):
            search[key] = list(search[key])
        return {
            "system": asdict(self.system),
            "power": asdict(self.power),
            "constraint": {"gamma0": self.gamma0},
            "search": search,
            "sweep": [asdict(a) for a in self.sweep],
            "mc": asdict(self.mc),
            "output": asdict(self.output),
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "RunConfig":
        validate(doc)
        search = dict(doc.get("search", {}))
        for key in ("ap_density_per_km2", "n_antennas", "n_users"):
            if key in search:
                search[key] = tuple(search[key])
        sweep = tuple(SweepAxis(**a) for a in doc.get("sweep", []))
        for axis in sweep:
            if axis.max < axis.min:
                raise ConfigError(f"sweep.{axis.variable}: max {axis.max} is below min {axis.min}")
            if axis.scale == "log" and axis.min <= 0:
                raise ConfigError(f"sweep.{axis.variable}: log scale needs min > 0")
        cfg = cls(
            system=SystemSpec(**doc["system"]),
            power=PowerSpec(**doc["power"]),
            gamma0=doc["constraint"]["gamma0"],
            search=SearchSpec(**search),
            sweep=sweep,
            mc=MCSpec(**doc.get("mc", {})),
            output=OutputSpec(**doc.get("output", {})),
        )
        try:
            cfg.params()
            cfg.power_model()
        except DomainError as exc:
            raise ConfigError(f"system: {exc}") from None
        return cfg


def _schema() -> dict:
    return json.loads(resources.files(__package__).joinpath("data/config.schema.json").read_text())


def validate(doc: dict) -> None:
    """Raise :class:`ConfigError` naming the first offending key."""
    validator = jsonschema.Draft202012Validator(_schema())
    errors = sorted(validator.iter_errors(doc), key=lambda e: list(e.absolute_path))
    if errors:
        err = errors[0]
        where = ".".join(str(p) for p in err.absolute_path) or "<root>"
        raise ConfigError(f"{where}: {err.message}")


def default_config() -> RunConfig:
    text = resources.files(__package__).joinpath("data/reference.json").read_text()
    return RunConfig.from_dict(json.loads(text))


def load_config(path) -> RunConfig:
    try:
        doc = json.loads(Path(path).read_text())
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})") from None
    return RunConfig.from_dict(doc)


def write_config(cfg: RunConfig, path) -> None:
    Path(path).write_text(json.dumps(cfg.to_dict(), indent=2) + "\n")
