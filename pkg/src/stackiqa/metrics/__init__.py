"""Base-metric registry and native metric implementations.

Native metrics (psnr, ssim, niqe) are computed in-process; every other
registered metric is External: its scores must be produced by an outside
scorer and ingested through the score cache.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

from ..errors import DataError
from .fullref import psnr, ssim
from .niqe import (
    NiqePristineModel,
    fit_aggd,
    fit_pristine_model,
    niqe,
)

__all__ = [
    "MetricKind",
    "Polarity",
    "Provenance",
    "MetricDescriptor",
    "MetricRegistry",
    "builtin_registry",
    "NATIVE_METRIC_IDS",
    "psnr",
    "ssim",
    "niqe",
    "fit_aggd",
    "fit_pristine_model",
    "NiqePristineModel",
]


class MetricKind(Enum):
    FULL_REFERENCE = "FR"
    NO_REFERENCE = "NR"


class Polarity(Enum):
    HIGHER_BETTER = "higher"
    LOWER_BETTER = "lower"


class Provenance(Enum):
    NATIVE = "native"
    EXTERNAL = "external"


@dataclass(frozen=True)
class MetricDescriptor:
    metric_id: str
    kind: MetricKind
    polarity: Polarity
    provenance: Provenance

    @property
    def is_native(self) -> bool:
        return self.provenance is Provenance.NATIVE


class MetricRegistry:
    """Unique-id store of metric descriptors."""

    def __init__(self, descriptors: list[MetricDescriptor] | None = None) -> None:
        self._by_id: dict[str, MetricDescriptor] = {}
        for d in descriptors or []:
            self.register(d)

    def register(self, descriptor: MetricDescriptor) -> None:
        if descriptor.metric_id in self._by_id:
            raise DataError(f"metric id {descriptor.metric_id!r} already registered")
        self._by_id[descriptor.metric_id] = descriptor

    def get(self, metric_id: str) -> MetricDescriptor:
        try:
            return self._by_id[metric_id]
        except KeyError:
            raise DataError(
                f"unknown metric id {metric_id!r}; known: {', '.join(self.ids())}"
            )

    def __contains__(self, metric_id: str) -> bool:
        return metric_id in self._by_id

    def ids(self) -> list[str]:
        return list(self._by_id)

    def descriptors(self) -> list[MetricDescriptor]:
        return list(self._by_id.values())


NATIVE_METRIC_IDS = ("psnr", "ssim", "niqe")

_FR = MetricKind.FULL_REFERENCE
_NR = MetricKind.NO_REFERENCE
_HI = Polarity.HIGHER_BETTER
_LO = Polarity.LOWER_BETTER
_NAT = Provenance.NATIVE
_EXT = Provenance.EXTERNAL

# Native trio plus external descriptors for the deep and complex-wavelet
# metrics whose scores arrive through the cache.
_BUILTIN = [
    MetricDescriptor("psnr", _FR, _HI, _NAT),
    MetricDescriptor("ssim", _FR, _HI, _NAT),
    MetricDescriptor("niqe", _NR, _LO, _NAT),
    MetricDescriptor("cwssim", _FR, _HI, _EXT),
    MetricDescriptor("stlpips", _FR, _LO, _EXT),
    MetricDescriptor("pieapp", _FR, _LO, _EXT),
    MetricDescriptor("lpips", _FR, _LO, _EXT),
    MetricDescriptor("lpips_alex", _FR, _LO, _EXT),
    MetricDescriptor("topiq", _FR, _HI, _EXT),
    MetricDescriptor("maniqa", _NR, _HI, _EXT),
    MetricDescriptor("hyperiqa", _NR, _HI, _EXT),
    MetricDescriptor("iqacnn", _NR, _HI, _EXT),
    MetricDescriptor("tres", _NR, _HI, _EXT),
    MetricDescriptor("tres_koniq", _NR, _HI, _EXT),
    MetricDescriptor("clipiqa", _NR, _HI, _EXT),
    MetricDescriptor("musiq", _NR, _HI, _EXT),
]


def builtin_registry() -> MetricRegistry:
    """Fresh registry with the shipped descriptor set."""
    return MetricRegistry(list(_BUILTIN))
