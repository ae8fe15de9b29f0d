"""Deterministic interpreter with single-bit fault injection.

Typical use::

    prog = Program(f)
    clean = run(prog, mem, args)
    faulty = run(prog, mem, args, budget=10 * clean.dic,
                 fault=FaultSpec(Model.EM1, k=3, bit=6))
    outcome = classify(clean, faulty)
"""

from __future__ import annotations

import enum
import struct
from dataclasses import dataclass, field

from ..ir import Function, ValueType, validate
from .compile import H, M, Program
from .memory import ArraySpec, Crash, MemoryImage, Region
from .sites import Model, enumerate_sites

DEFAULT_BUDGET = 10_000_000


class Status(enum.Enum):
    COMPLETED = "completed"
    CRASH = "crash"
    HANG = "hang"


class OutcomeKind(enum.Enum):
    SDC = "sdc"
    BENIGN = "benign"
    CRASH = "crash"
    HANG = "hang"


@dataclass(frozen=True)
class FaultSpec:
    """Flip ``bit`` of the value produced by the ``k``-th (1-based) dynamic
    instance of a ``model`` fault site."""

    model: Model
    k: int
    bit: int

    def __post_init__(self):
        if self.k < 1:
            raise ValueError("dynamic ordinal k is 1-based")
        if not 0 <= self.bit < 64:
            raise ValueError("bit must be in 0..63")

    @classmethod
    def parse(cls, text: str) -> FaultSpec:
        model, k, bit = text.split(":")
        return cls(Model(model.lower()), int(k), int(bit))

    def __str__(self) -> str:
        return f"{self.model}:{self.k}:{self.bit}"


@dataclass
class ExecResult:
    status: Status
    reason: str
    arrays: dict[str, bytes]
    dic: int
    detect_count: int
    sites: dict[Model, int]
    trace: list[tuple[int, str, str, int | float]] | None = field(default=None, repr=False)

    @property
    def completed(self) -> bool:
        return self.status is Status.COMPLETED


@dataclass(frozen=True)
class Outcome:
    kind: OutcomeKind
    detected: bool


class ConfigError(Exception):
    pass


def flip_unsigned(v: int, bit: int) -> int:
    return v ^ (1 << bit)


def flip_signed(v: int, bit: int) -> int:
    u = (v & M) ^ (1 << bit)
    return u - (1 << 64) if u >= H else u


_programs: dict[int, tuple[Function, Program, Program | None]] = {}


def _program(f: Function | Program, trace: bool) -> Program:
    if isinstance(f, Program):
        if trace and not f.trace:
            return Program(f.function, trace=True)
        return f
    hit = _programs.get(id(f))
    if hit is None or hit[0] is not f:
        diags = validate(f)
        if diags:
            raise ConfigError("refusing to run an invalid function: " + "; ".join(map(str, diags)))
        hit = (f, Program(f), None)
        _programs[id(f)] = hit
    if not trace:
        return hit[1]
    if hit[2] is None:
        hit = (f, hit[1], Program(f, trace=True))
        _programs[id(f)] = hit
    return hit[2]


def bind_args(f: Function, mem: MemoryImage, args: dict) -> list:
    """Parameter values in declaration order; arrays bind to their region base."""
    values = []
    extra = set(args) - {p.name.lstrip("%") for p in f.params} - {p.name for p in f.params}
    if extra:
        raise ConfigError(f"unknown arguments: {sorted(extra)}")
    for p in f.params:
        if p.is_array:
            try:
                values.append(mem.base_of(p.name))
            except KeyError:
                raise ConfigError(f"no memory region for array parameter {p.name}") from None
            continue
        key = p.name if p.name in args else p.name.lstrip("%")
        if key not in args:
            raise ConfigError(f"missing argument {p.name}")
        v = args[key]
        if p.ty is ValueType.I64:
            if isinstance(v, bool) or not isinstance(v, int) or not -H <= v < H:
                raise ConfigError(f"{p.name} expects an i64")
        elif not isinstance(v, float):
            raise ConfigError(f"{p.name} expects an f64")
        values.append(v)
    return values


def _hexval(v) -> str:
    if isinstance(v, float):
        return "0x%016x" % struct.unpack("<Q", struct.pack("<d", v))[0]
    return "0x%016x" % (v & M)


def run(f: Function | Program, mem: MemoryImage, args: dict | None = None,
        budget: int = DEFAULT_BUDGET, fault: FaultSpec | None = None,
        trace: bool = False) -> ExecResult:
    """Execute ``f`` on a private copy of ``mem``.

    Loads and stores outside every region crash; exceeding ``budget`` dynamic
    instructions is a hang. With ``fault`` set, the value produced at the
    ``fault.k``-th eligible dynamic site is XOR-ed with ``2**fault.bit``.
    """
    if budget <= 0:
        raise ConfigError("budget must be positive")
    prog = _program(f, trace)
    func = prog.function
    params = bind_args(func, mem, args or {})
    image = mem.copy()
    k1 = k2 = 0
    flip_a = flip_i = None
    if fault is not None:
        if fault.model is Model.EM1:
            k1 = fault.k
        else:
            k2 = fault.k
        flip_a = lambda v, b=fault.bit: v ^ (1 << b)  # noqa: E731
        flip_i = lambda v, b=fault.bit: flip_signed(v, b)  # noqa: E731
    rows: list | None = [] if trace else None
    status, reason, dic, det, c1, c2 = prog.execute(
        params, k1, k2, flip_a, flip_i, budget, rows.append if trace else None, image.accessors())
    tr = None
    if trace:
        tr = [(step, prog.labels[i][0], prog.labels[i][1], v) for step, (i, v) in enumerate(rows)]
    return ExecResult(
        Status(status), reason, image.snapshot(func.result_arrays), dic, det,
        {Model.EM1: c1, Model.EM2: c2}, tr,
    )


def profile(f: Function | Program, mem: MemoryImage, args: dict | None = None,
            budget: int = DEFAULT_BUDGET) -> dict[Model, int]:
    """Dynamic instance count of each model's eligible static sites."""
    res = run(f, mem, args, budget)
    if not res.completed:
        raise ConfigError(f"profiling run did not complete: {res.status.value} ({res.reason})")
    return res.sites


def classify(fault_free: ExecResult, faulty: ExecResult) -> Outcome:
    if not fault_free.completed:
        raise ConfigError("fault-free run did not complete")
    if faulty.status is Status.CRASH:
        return Outcome(OutcomeKind.CRASH, False)
    if faulty.status is Status.HANG:
        return Outcome(OutcomeKind.HANG, False)
    detected = faulty.detect_count > 0
    if faulty.arrays != fault_free.arrays:
        return Outcome(OutcomeKind.SDC, detected)
    return Outcome(OutcomeKind.BENIGN, detected)


def write_trace_csv(trace, fh) -> None:
    import csv

    w = csv.writer(fh, lineterminator="\n")
    w.writerow(["step", "instruction", "opcode", "value"])
    for step, name, op, v in trace:
        w.writerow([step, name, op, _hexval(v)])


__all__ = [
    "ArraySpec", "ConfigError", "Crash", "DEFAULT_BUDGET", "ExecResult", "FaultSpec",
    "MemoryImage", "Model", "Outcome", "OutcomeKind", "Program", "Region", "Status",
    "bind_args", "classify", "enumerate_sites", "flip_signed", "flip_unsigned",
    "profile", "run", "write_trace_csv",
]
