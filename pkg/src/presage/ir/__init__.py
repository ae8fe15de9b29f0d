from .core import (
    BINOPS, FBINOPS, ICMP_PREDS, OPCODES, TERMINATORS, Block, Diagnostic, Function,
    Instr, IRError, Operand, Param, ValueType, is_value,
)
from .parser import parse_ir, parse_unchecked
from .printer import format_instr, print_ir
from .validate import dominators, reachable, validate

__all__ = [
    "BINOPS", "FBINOPS", "ICMP_PREDS", "OPCODES", "TERMINATORS", "Block",
    "Diagnostic", "Function", "Instr", "IRError", "Operand", "Param", "ValueType",
    "is_value", "parse_ir", "parse_unchecked", "format_instr", "print_ir",
    "dominators", "reachable", "validate",
]
