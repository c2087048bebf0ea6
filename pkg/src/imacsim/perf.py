"""Analytical delay/energy model: in-array MAC vs. a fetch-then-multiply baseline.

Per layer, the baseline (von-Neumann style) cost is one weight-fetch
term plus one multiplier term; the in-memory path charges per analog
accumulate plus an amortized share of each conversion. Occupancy
fractions (how many rows/banks a layer's weights fill) are evaluated as
real numbers by default; `ceil_occupancy=True` rounds each occupancy up
to whole array operations for a pessimistic variant.

Units are fixed: time ns, energy pJ, leakage power nW. The leakage
contribution is p_leak[nW] x t[ns] x 1e-6 pJ and is negligible at the
defaults (asserted < 0.01% of totals in tests).
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass
from typing import Sequence

from .errors import ConfigError, InputDomainError
from .netspec import LayerSpec

LEAK_PJ_PER_NW_NS = 1e-6


@dataclass(frozen=True)
class PerfParams:
    b_io: int = 16  # bus bits fetched per read
    b_w: int = 5  # stored bits per weight
    n_bank: int = 4
    n_col: int = 256
    n_mult: int = 175  # parallel multipliers in the baseline
    t_read: float = 4.0  # ns
    t_mult: float = 4.0  # ns
    t_amac: float = 1.0  # ns per analog accumulate
    t_adc: float = 5.0  # ns per conversion, amortized over r
    e_read: float = 5.2  # pJ
    e_mult: float = 0.9  # pJ
    e_amac: float = 0.254  # pJ
    e_adc: float = 0.253  # pJ
    p_leak_nw: float = 2.4
    r: int = 10  # accumulates per conversion
    ceil_occupancy: bool = False

    def __post_init__(self):
        for f in dataclasses.fields(self):
            if f.name == "ceil_occupancy":
                continue
            v = getattr(self, f.name)
            if not v > 0:
                raise ConfigError(f"PerfParams.{f.name} must be strictly positive, got {v}")

    def _occ(self, x: float) -> float:
        return float(math.ceil(x)) if self.ceil_occupancy else x


def _weight_count(layer: LayerSpec) -> int:
    return layer.m * layer.n * layer.k * layer.k


def vn_delay(layer: LayerSpec, p: PerfParams) -> float:
    """Baseline latency: weight fetches over the bus, then multiplies."""
    w = _weight_count(layer)
    reads = p._occ(w / ((p.b_io / p.b_w) * p.n_bank))
    mults = p._occ(w / p.n_mult)
    return reads * p.t_read + mults * layer.n_mov ** 2 * p.t_mult


def vn_energy(layer: LayerSpec, p: PerfParams, t_vn: float) -> float:
    w = _weight_count(layer)
    active = w * p.e_read + w * layer.n_mov ** 2 * p.e_mult
    return active + p.p_leak_nw * t_vn * LEAK_PJ_PER_NW_NS


def imac_delay(layer: LayerSpec, p: PerfParams) -> float:
    """In-array latency: column occupancy x movements x per-MAC time."""
    w = _weight_count(layer)
    occupancy = p._occ(w / ((p.n_col / p.b_w) * p.n_bank))
    return occupancy * layer.n_mov ** 2 * (p.t_amac + p.t_adc / p.r)


def imac_energy(layer: LayerSpec, p: PerfParams, t_imac: float) -> float:
    w = _weight_count(layer)
    active = w * layer.n_mov ** 2 * (p.e_amac + p.e_adc / p.r)
    return active + p.p_leak_nw * t_imac * LEAK_PJ_PER_NW_NS


@dataclass(frozen=True)
class LayerReport:
    name: str
    t_vn: float
    e_vn: float
    t_imac: float
    e_imac: float

    @property
    def delay_ratio(self) -> float:
        return self.t_vn / self.t_imac

    @property
    def energy_ratio(self) -> float:
        return self.e_vn / self.e_imac

    @property
    def edp_ratio(self) -> float:
        return self.delay_ratio * self.energy_ratio


@dataclass(frozen=True)
class NetworkReport:
    layers: tuple[LayerReport, ...]

    @property
    def t_vn(self) -> float:
        return sum(l.t_vn for l in self.layers)

    @property
    def e_vn(self) -> float:
        return sum(l.e_vn for l in self.layers)

    @property
    def t_imac(self) -> float:
        return sum(l.t_imac for l in self.layers)

    @property
    def e_imac(self) -> float:
        return sum(l.e_imac for l in self.layers)

    @property
    def delay_ratio(self) -> float:
        return self.t_vn / self.t_imac

    @property
    def energy_ratio(self) -> float:
        return self.e_vn / self.e_imac

    @property
    def edp_ratio(self) -> float:
        # identity: the EDP advantage factors into the two ratios
        return self.delay_ratio * self.energy_ratio


def compare_network(layers: Sequence[LayerSpec], p: PerfParams | None = None) -> NetworkReport:
    p = p if p is not None else PerfParams()
    if not layers:
        raise InputDomainError("compare_network needs at least one layer")
    rows = []
    for layer in layers:
        tv = vn_delay(layer, p)
        ti = imac_delay(layer, p)
        rows.append(
            LayerReport(
                name=layer.name,
                t_vn=tv,
                e_vn=vn_energy(layer, p, tv),
                t_imac=ti,
                e_imac=imac_energy(layer, p, ti),
            )
        )
    return NetworkReport(layers=tuple(rows))


def sweep_bio(
    layers: Sequence[LayerSpec], p: PerfParams | None = None, bio_values: Sequence[int] = ()
) -> list[dict]:
    """EDP advantage vs. bus width; wider buses only help the baseline."""
    p = p if p is not None else PerfParams()
    if not bio_values:
        raise InputDomainError("sweep_bio needs at least one bus width")
    out = []
    for bio in bio_values:
        rep = compare_network(layers, dataclasses.replace(p, b_io=int(bio)))
        out.append(
            {
                "b_io": int(bio),
                "delay_ratio": rep.delay_ratio,
                "energy_ratio": rep.energy_ratio,
                "edp_ratio": rep.edp_ratio,
            }
        )
    return out


def per_inference_energy(layers: Sequence[LayerSpec], p: PerfParams | None = None) -> float:
    """Total in-array energy for one inference, in nJ."""
    p = p if p is not None else PerfParams()
    total_pj = 0.0
    for layer in layers:
        total_pj += imac_energy(layer, p, imac_delay(layer, p))
    return total_pj / 1000.0


_AREA_UM2 = (
    ("sram_array", 83100.0),
    ("adc", 40800.0),
    ("accumulator", 30600.0),
    ("dac", 400.0),
    ("mux", 2100.0),
    ("decoder", 4800.0),
    ("column_circuit", 44000.0),
)

# blocks the MAC scheme adds on top of a plain SRAM macro
_MAC_ADDITIONS = ("adc", "accumulator", "dac", "mux")


@dataclass(frozen=True)
class AreaTable:
    entries: tuple[tuple[str, float], ...] = _AREA_UM2

    def __post_init__(self):
        if not self.entries:
            raise ConfigError("area table cannot be empty")
        for name, um2 in self.entries:
            if um2 <= 0:
                raise ConfigError(f"area of {name!r} must be positive")

    def area(self, component: str) -> float:
        for name, um2 in self.entries:
            if name == component:
                return um2
        raise InputDomainError(f"unknown area component {component!r}")

    @property
    def total(self) -> float:
        return sum(um2 for _, um2 in self.entries)

    @property
    def non_storage_share(self) -> float:
        """Everything that is not the bitcell array, over the total."""
        return (self.total - self.area("sram_array")) / self.total

    @property
    def mac_addition_share(self) -> float:
        """Share taken by the converter/accumulator chain the scheme adds."""
        added = sum(self.area(c) for c in _MAC_ADDITIONS)
        return added / self.total
