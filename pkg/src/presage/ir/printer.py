from __future__ import annotations

from .core import BINOPS, FBINOPS, Function, Instr, Operand, Param


def format_operand(op: Operand) -> str:
    if isinstance(op, str):
        return op
    if isinstance(op, float):
        return repr(op)
    return str(op)


def format_param(p: Param) -> str:
    if p.is_array:
        inner = p.elem or "f64"
        if p.length is not None:
            inner += f" x {p.length}"
        return f"{p.name}: addr[{inner}]"
    return f"{p.name}: {p.ty}"


def format_instr(ins: Instr) -> str:
    ops = ", ".join(format_operand(a) for a in ins.args)
    op = ins.op
    if op in BINOPS or op in FBINOPS:
        body = f"{op} {ops}"
    elif op == "icmp":
        body = f"icmp {ins.pred} {ops}"
    elif op == "const":
        body = f"const {format_operand(ins.args[0])}"
    elif op == "gep":
        body = f"gep {ops}, {ins.size}"
    elif op in ("load", "cast"):
        body = f"{op} {ops} : {ins.ty}"
    elif op in ("store", "detect"):
        body = f"{op} {ops}"
    elif op == "phi":
        body = "phi " + ", ".join(f"[{format_operand(v)}, {lbl}]" for v, lbl in ins.incoming)
    elif op == "br":
        body = f"br {ins.targets[0]}"
    elif op == "condbr":
        body = f"condbr {ops}, {ins.targets[0]}, {ins.targets[1]}"
    elif op == "ret":
        body = "ret"
    else:
        raise ValueError(f"cannot print opcode {op!r}")
    text = f"{ins.dest} = {body}" if ins.dest is not None else body
    if ins.detector:
        text += " !det"
    return text


def print_ir(f: Function) -> str:
    """Canonical text for ``f``; parsing the result gives back an equal function."""
    params = ", ".join(format_param(p) for p in f.params)
    results = ", ".join(f.result_arrays)
    lines = [f"func @{f.name}({params}) -> results({results})"]
    for b in f.blocks:
        lines.append(f"{b.label}:")
        lines.extend("  " + format_instr(ins) for ins in b.instrs)
    return "\n".join(lines) + "\n"
