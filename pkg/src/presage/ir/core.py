"""Core data types for the mini-SSA intermediate representation.

A :class:`Function` is an ordered list of :class:`Block` objects; the first
block is the entry. Every value is named (``%name``) and defined exactly once,
either as a parameter or as the destination of an :class:`Instr`.

Operands are stored as plain Python values: a ``str`` starting with ``%`` is a
value reference, an ``int`` is an i64 immediate and a ``float`` is an f64
immediate.
"""

from __future__ import annotations

import copy
import enum
from dataclasses import dataclass, field
from typing import Iterator, Union


class ValueType(enum.Enum):
    I64 = "i64"
    F64 = "f64"
    ADDR = "addr"

    def __str__(self) -> str:
        return self.value


Operand = Union[str, int, float]

BINOPS = ("add", "sub", "mul", "div", "rem")
FBINOPS = ("fadd", "fsub", "fmul", "fdiv")
ICMP_PREDS = ("eq", "ne", "lt", "le", "gt", "ge")
TERMINATORS = ("br", "condbr", "ret")
OPCODES = BINOPS + FBINOPS + (
    "const", "icmp", "gep", "load", "store", "phi", "cast", "detect",
) + TERMINATORS

# Element types an array parameter may declare; all are 8 bytes wide.
ELEMENT_TYPES = {"f64": 8, "i64": 8}


def is_value(op: Operand) -> bool:
    return isinstance(op, str)


def _tagged(op: Operand) -> tuple:
    # 1 == 1.0 in Python; keep immediates of different types distinct
    return (type(op).__name__, op)


@dataclass
class Instr:
    """One IR instruction.

    ``args`` holds the ordinary operands. For ``phi`` the operands live in
    ``incoming`` as ``(value, block label)`` pairs, and for branches the
    successor labels live in ``targets``. ``size`` is the element size of a
    ``gep``; ``ty`` the declared type of ``load``/``cast``/``const`` (and the
    inferred type of ``phi``). ``detector`` marks code inserted as an error
    detector; it is never a fault site.
    """

    op: str
    dest: str | None = None
    args: list[Operand] = field(default_factory=list)
    pred: str | None = None
    size: int | None = None
    ty: ValueType | None = None
    targets: list[str] = field(default_factory=list)
    incoming: list[tuple[Operand, str]] = field(default_factory=list)
    detector: bool = False
    line: int = field(default=0, compare=False)  # source line for diagnostics

    @property
    def is_terminator(self) -> bool:
        return self.op in TERMINATORS

    def uses(self) -> list[str]:
        """Value names read by this instruction, in operand order."""
        if self.op == "phi":
            return [v for v, _ in self.incoming if is_value(v)]
        return [a for a in self.args if is_value(a)]

    def replace_uses(self, old: str, new: Operand) -> None:
        self.args = [new if a == old else a for a in self.args]
        self.incoming = [(new if v == old else v, lbl) for v, lbl in self.incoming]

    def key(self) -> tuple:
        return (
            self.op, self.dest, tuple(_tagged(a) for a in self.args), self.pred,
            self.size, self.ty, tuple(self.targets),
            tuple((_tagged(v), lbl) for v, lbl in self.incoming), self.detector,
        )


@dataclass
class Block:
    label: str
    instrs: list[Instr] = field(default_factory=list)

    @property
    def terminator(self) -> Instr | None:
        if self.instrs and self.instrs[-1].is_terminator:
            return self.instrs[-1]
        return None

    def phis(self) -> list[Instr]:
        out = []
        for ins in self.instrs:
            if ins.op != "phi":
                break
            out.append(ins)
        return out

    def successors(self) -> list[str]:
        term = self.terminator
        if term is None:
            return []
        seen: list[str] = []
        for t in term.targets:
            if t not in seen:
                seen.append(t)
        return seen


@dataclass
class Param:
    name: str
    ty: ValueType
    elem: str | None = None  # element type for addr params ("f64"/"i64")
    length: int | None = None  # optional element-count hint

    @property
    def is_array(self) -> bool:
        return self.ty is ValueType.ADDR

    @property
    def elem_size(self) -> int | None:
        return ELEMENT_TYPES.get(self.elem) if self.elem else None


@dataclass
class Function:
    name: str
    params: list[Param] = field(default_factory=list)
    blocks: list[Block] = field(default_factory=list)
    result_arrays: list[str] = field(default_factory=list)

    @property
    def entry(self) -> Block:
        return self.blocks[0]

    def block(self, label: str) -> Block:
        for b in self.blocks:
            if b.label == label:
                return b
        raise KeyError(label)

    def param(self, name: str) -> Param:
        for p in self.params:
            if p.name == name:
                return p
        raise KeyError(name)

    def instructions(self) -> Iterator[tuple[Block, Instr]]:
        for b in self.blocks:
            for ins in b.instrs:
                yield b, ins

    def array_params(self) -> list[Param]:
        return [p for p in self.params if p.is_array]

    def predecessors(self) -> dict[str, list[str]]:
        preds: dict[str, list[str]] = {b.label: [] for b in self.blocks}
        for b in self.blocks:
            for s in b.successors():
                if s in preds and b.label not in preds[s]:
                    preds[s].append(b.label)
        return preds

    def value_types(self) -> dict[str, ValueType]:
        """Type of every named value; phi types are inferred to a fixpoint."""
        types = {p.name: p.ty for p in self.params}
        pending = []
        for _, ins in self.instructions():
            if ins.dest is None:
                continue
            ty = result_type(ins)
            if ty is not None:
                types[ins.dest] = ty
            elif ins.op == "phi":
                pending.append(ins)
        changed = True
        while pending and changed:
            changed = False
            for ins in list(pending):
                for v, _ in ins.incoming:
                    ty = operand_type(v, types)
                    if ty is not None:
                        types[ins.dest] = ty
                        pending.remove(ins)
                        changed = True
                        break
        return types

    def copy(self) -> Function:
        return copy.deepcopy(self)

    def structurally_equal(self, other: Function) -> bool:
        return structure(self) == structure(other)


def operand_type(op: Operand, types: dict[str, ValueType]) -> ValueType | None:
    if isinstance(op, bool):
        return None
    if isinstance(op, int):
        return ValueType.I64
    if isinstance(op, float):
        return ValueType.F64
    return types.get(op)


def result_type(ins: Instr) -> ValueType | None:
    """Statically known result type; ``None`` for phis and void instructions."""
    if ins.dest is None:
        return None
    if ins.op in BINOPS or ins.op == "icmp":
        return ValueType.I64
    if ins.op in FBINOPS:
        return ValueType.F64
    if ins.op == "gep":
        return ValueType.ADDR
    if ins.op in ("load", "cast", "const"):
        return ins.ty
    if ins.op == "phi":
        return ins.ty
    return None


def structure(f: Function) -> tuple:
    return (
        f.name,
        tuple((p.name, p.ty, p.elem, p.length) for p in f.params),
        tuple((b.label, tuple(i.key() for i in b.instrs)) for b in f.blocks),
        tuple(f.result_arrays),
    )


class IRError(Exception):
    """Raised when text cannot be parsed or a function fails validation."""

    def __init__(self, diagnostics):
        self.diagnostics = list(diagnostics)
        super().__init__("\n".join(str(d) for d in self.diagnostics))

    @property
    def codes(self) -> list[str]:
        return [d.code for d in self.diagnostics]


@dataclass(frozen=True)
class Diagnostic:
    code: str
    message: str
    block: str | None = None
    instr: str | None = None
    line: int = 0
    col: int = 0

    def __str__(self) -> str:
        where = []
        if self.line:
            where.append(f"{self.line}:{self.col}")
        if self.block:
            where.append(self.block)
        if self.instr:
            where.append(self.instr)
        loc = " ".join(where)
        return f"{self.code}: {self.message}" + (f" [{loc}]" if loc else "")
