"""Static fault-site sets for the two error models.

EM1 targets the computed address of every gep. EM2 targets every integer
instruction in the static backward def-use slice of some gep's index operand
(the index-defining instruction included). Detector code is never a site.
"""

from __future__ import annotations

import enum

from ..ir import Function, ValueType


class Model(enum.Enum):
    EM1 = "em1"
    EM2 = "em2"

    def __str__(self) -> str:
        return self.value


def enumerate_sites(f: Function, model: Model) -> list[str]:
    """Destination names of the eligible static instructions, in program order."""
    defs = {ins.dest: ins for _, ins in f.instructions() if ins.dest is not None}
    if model is Model.EM1:
        return [ins.dest for _, ins in f.instructions() if ins.op == "gep" and not ins.detector]

    types = f.value_types()
    slice_: set[str] = set()
    work = [
        ins.args[1]
        for _, ins in f.instructions()
        if ins.op == "gep" and not ins.detector and isinstance(ins.args[1], str)
    ]
    while work:
        v = work.pop()
        if v in slice_ or v not in defs:
            continue  # parameters and immediates are not instructions
        ins = defs[v]
        if ins.detector or types.get(v) is not ValueType.I64 or ins.op == "const":
            continue
        slice_.add(v)
        if ins.op in ("load", "cast"):
            continue  # memory and float operands are outside the integer slice
        work.extend(ins.uses())
    return [ins.dest for _, ins in f.instructions() if ins.dest in slice_]
