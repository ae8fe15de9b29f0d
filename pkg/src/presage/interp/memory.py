"""Simulated byte-addressed memory: array regions separated by unmapped gaps."""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

from ..ir.core import ELEMENT_TYPES

DEFAULT_START = 0x10000
DEFAULT_GAP = 4096
DEFAULT_ALIGN = 64

_F64 = struct.Struct("<d")
_I64 = struct.Struct("<q")


class Crash(Exception):
    """Raised inside a run when the simulated program would trap."""


@dataclass(frozen=True)
class ArraySpec:
    name: str
    length: int
    elem: str = "f64"

    def __post_init__(self):
        if self.length < 1:
            raise ValueError(f"array {self.name} needs at least one element")
        if self.elem not in ELEMENT_TYPES:
            raise ValueError(f"unknown element type {self.elem!r}")

    @property
    def elem_size(self) -> int:
        return ELEMENT_TYPES[self.elem]

    @property
    def nbytes(self) -> int:
        return self.length * self.elem_size


@dataclass
class Region:
    spec: ArraySpec
    base: int
    data: bytearray

    @property
    def end(self) -> int:
        return self.base + len(self.data)

    def contains(self, addr: int, width: int = 8) -> bool:
        return self.base <= addr and addr + width <= self.end


class MemoryImage:
    def __init__(self, regions: list[Region]):
        spans = sorted((r.base, r.end) for r in regions)
        for (_, e1), (s2, _) in zip(spans, spans[1:]):
            if s2 < e1:
                raise ValueError("regions overlap")
        if any(s <= 0 for s, _ in spans):
            raise ValueError("address 0 must stay unmapped")
        self.regions = list(regions)
        self._by_name = {r.spec.name: r for r in regions}

    @classmethod
    def layout(cls, specs, contents=None, start: int = DEFAULT_START,
               gap: int = DEFAULT_GAP, align: int = DEFAULT_ALIGN) -> MemoryImage:
        """Place ``specs`` in order, each after an unmapped guard gap.

        ``contents`` maps array names to initial element values; missing
        arrays start zeroed.
        """
        contents = contents or {}
        regions = []
        addr = start
        for spec in specs:
            addr = -(-addr // align) * align
            vals = contents.get(spec.name)
            if vals is None:
                data = bytearray(spec.nbytes)
            else:
                dtype = "<f8" if spec.elem == "f64" else "<i8"
                arr = np.asarray(vals, dtype=dtype)
                if arr.size != spec.length:
                    raise ValueError(f"{spec.name}: expected {spec.length} values, got {arr.size}")
                data = bytearray(arr.tobytes())
            regions.append(Region(spec, addr, data))
            addr += spec.nbytes + gap
        return cls(regions)

    def copy(self) -> MemoryImage:
        return MemoryImage([Region(r.spec, r.base, bytearray(r.data)) for r in self.regions])

    def region(self, name: str) -> Region:
        return self._by_name[name]

    def base_of(self, name: str) -> int:
        return self._by_name[name].base

    def names(self) -> list[str]:
        return list(self._by_name)

    def array(self, name: str) -> np.ndarray:
        r = self._by_name[name]
        dtype = "<f8" if r.spec.elem == "f64" else "<i8"
        return np.frombuffer(bytes(r.data), dtype=dtype)

    def snapshot(self, names) -> dict[str, bytes]:
        return {n: bytes(self._by_name[n].data) for n in names}

    def find(self, addr: int, width: int = 8) -> Region | None:
        for r in self.regions:
            if r.contains(addr, width):
                return r
        return None

    def accessors(self):
        """Fast load/store closures used by compiled programs."""
        spans = tuple((r.base, r.end - 8, r.data) for r in self.regions)
        unpack_d, pack_d = _F64.unpack_from, _F64.pack_into
        unpack_q, pack_q = _I64.unpack_from, _I64.pack_into

        def ld_f(a):
            for s, last, buf in spans:
                if s <= a <= last:
                    return unpack_d(buf, a - s)[0]
            raise Crash("unmapped load")

        def ld_i(a):
            for s, last, buf in spans:
                if s <= a <= last:
                    return unpack_q(buf, a - s)[0]
            raise Crash("unmapped load")

        def st_f(a, v):
            for s, last, buf in spans:
                if s <= a <= last:
                    pack_d(buf, a - s, v)
                    return
            raise Crash("unmapped store")

        def st_i(a, v):
            for s, last, buf in spans:
                if s <= a <= last:
                    pack_q(buf, a - s, v)
                    return
            raise Crash("unmapped store")

        return ld_f, ld_i, st_f, st_i
