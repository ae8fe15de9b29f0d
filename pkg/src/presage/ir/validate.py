"""Structural validation of functions.

Every check reports a :class:`Diagnostic` with a stable code; an empty list
means the function satisfies all IR invariants and may be executed.
"""

from __future__ import annotations

from .core import (
    BINOPS, FBINOPS, Diagnostic, Function, Instr, ValueType, is_value, operand_type,
)

I64, F64, ADDR = ValueType.I64, ValueType.F64, ValueType.ADDR


def reachable(f: Function) -> list[str]:
    labels = {b.label for b in f.blocks}
    seen: list[str] = []
    stack = [f.entry.label]
    while stack:
        lbl = stack.pop()
        if lbl in seen or lbl not in labels:
            continue
        seen.append(lbl)
        stack.extend(reversed(f.block(lbl).successors()))
    return seen


def dominators(f: Function) -> dict[str, set[str]]:
    """Dominator sets over the reachable subgraph (iterative dataflow)."""
    order = reachable(f)
    preds = f.predecessors()
    everything = set(order)
    dom = {lbl: set(everything) for lbl in order}
    dom[f.entry.label] = {f.entry.label}
    changed = True
    while changed:
        changed = False
        for lbl in order[1:]:
            ps = [p for p in preds[lbl] if p in everything]
            new = set.intersection(*(dom[p] for p in ps)) if ps else set()
            new = new | {lbl}
            if new != dom[lbl]:
                dom[lbl] = new
                changed = True
    return dom


def _name(ins: Instr) -> str:
    return ins.dest or ins.op


def validate(f: Function) -> list[Diagnostic]:
    diags: list[Diagnostic] = []

    def err(code, msg, block=None, ins=None):
        diags.append(Diagnostic(code, msg, block, _name(ins) if ins else None,
                                ins.line if ins else 0))

    if not f.blocks:
        err("EMPTY_FUNCTION", "function has no blocks")
        return diags

    labels: set[str] = set()
    for b in f.blocks:
        if b.label in labels:
            err("DUPLICATE_BLOCK", f"block {b.label} declared twice", b.label)
        labels.add(b.label)

    # terminators and phi placement
    for b in f.blocks:
        if not b.instrs or not b.instrs[-1].is_terminator:
            err("MISSING_TERMINATOR", "block does not end in br/condbr/ret", b.label)
        terms = [i for i in b.instrs if i.is_terminator]
        if len(terms) > 1:
            err("MULTIPLE_TERMINATORS", f"{len(terms)} terminators in one block", b.label, terms[1])
        elif len(terms) == 1 and b.instrs[-1] is not terms[0]:
            err("MULTIPLE_TERMINATORS", "terminator is not the last instruction", b.label, terms[0])
        in_prefix = True
        for ins in b.instrs:
            if ins.op != "phi":
                in_prefix = False
            elif not in_prefix:
                err("PHI_NOT_LEADING", "phi after a non-phi instruction", b.label, ins)
        for ins in b.instrs:
            for t in ins.targets:
                if t not in labels:
                    err("UNKNOWN_BLOCK", f"branch to undeclared block {t}", b.label, ins)
    if diags:
        return diags

    preds = f.predecessors()
    if preds[f.entry.label]:
        err("ENTRY_HAS_PREDS", "entry block has predecessors", f.entry.label)
    live = set(reachable(f))
    for b in f.blocks:
        if b.label not in live:
            err("UNREACHABLE_BLOCK", "block is not reachable from entry", b.label)

    for b in f.blocks:
        for ins in b.phis():
            got = [lbl for _, lbl in ins.incoming]
            if sorted(got) != sorted(preds[b.label]) or len(set(got)) != len(got):
                err("PHI_EDGE_MISMATCH",
                    f"phi edges {got} do not match predecessors {preds[b.label]}", b.label, ins)

    # single definition
    defined: dict[str, tuple[str, int]] = {}
    param_names = set()
    for p in f.params:
        if p.name in param_names:
            err("DUPLICATE_DEF", f"parameter {p.name} declared twice")
        param_names.add(p.name)
    for b in f.blocks:
        for pos, ins in enumerate(b.instrs):
            if ins.dest is None:
                continue
            if ins.dest in param_names:
                code = "PARAM_REDEFINED" if f.param(ins.dest).is_array else "DUPLICATE_DEF"
                err(code, f"{ins.dest} redefines a parameter", b.label, ins)
            elif ins.dest in defined:
                err("DUPLICATE_DEF", f"{ins.dest} defined more than once", b.label, ins)
            else:
                defined[ins.dest] = (b.label, pos)

    # every use dominated by its definition
    dom = dominators(f)
    for b in f.blocks:
        if b.label not in live:
            continue
        for pos, ins in enumerate(b.instrs):
            if ins.op == "phi":
                for v, lbl in ins.incoming:
                    if not is_value(v) or v in param_names:
                        continue
                    if v not in defined:
                        err("UNDEFINED_VALUE", f"{v} is never defined", b.label, ins)
                    elif lbl in dom and defined[v][0] not in dom[lbl]:
                        err("SSA_DOMINANCE", f"{v} does not dominate edge from {lbl}", b.label, ins)
                continue
            for v in ins.uses():
                if v in param_names:
                    continue
                if v not in defined:
                    err("UNDEFINED_VALUE", f"{v} is never defined", b.label, ins)
                    continue
                dblock, dpos = defined[v]
                if dblock == b.label:
                    ok = dpos < pos
                else:
                    ok = dblock in dom[b.label]
                if not ok:
                    err("SSA_DOMINANCE", f"use of {v} is not dominated by its definition", b.label, ins)

    if diags:
        return diags
    diags.extend(_check_types(f))

    results = set(f.result_arrays)
    for r in results:
        if r not in param_names or not f.param(r).is_array:
            err("BAD_RESULT", f"result {r} is not an array parameter")
    return diags


def _check_types(f: Function) -> list[Diagnostic]:
    diags: list[Diagnostic] = []
    types = f.value_types()
    elem_sizes: dict[str, int] = {}
    params = {p.name: p for p in f.params if p.is_array}

    for b in f.blocks:
        for ins in b.instrs:
            def bad(msg, code="TYPE_MISMATCH"):
                diags.append(Diagnostic(code, msg, b.label, _name(ins), ins.line))

            def t(op):
                return operand_type(op, types)

            op = ins.op
            if op in BINOPS:
                if any(t(a) is not I64 for a in ins.args):
                    bad(f"{op} operands must be i64 (no address arithmetic outside gep)")
            elif op in FBINOPS:
                if any(t(a) is not F64 for a in ins.args):
                    bad(f"{op} operands must be f64")
            elif op == "icmp":
                ta, tb = t(ins.args[0]), t(ins.args[1])
                ok = ta is tb and (ta is I64 or (ta is ADDR and ins.pred in ("eq", "ne")))
                if not ok:
                    bad("icmp compares two i64 values (addr allowed for eq/ne)")
            elif op == "const":
                pass
            elif op == "gep":
                base, idx = ins.args
                if not is_value(base) or t(base) is not ADDR:
                    bad("gep base must be an addr value")
                if t(idx) is not I64:
                    bad("gep index must be i64")
                if ins.size is None or ins.size <= 0:
                    bad("gep element size must be positive", "BAD_ELEM_SIZE")
                elif is_value(base):
                    declared = params.get(base)
                    if declared is not None and declared.elem_size not in (None, ins.size):
                        bad(f"{base} holds {declared.elem_size}-byte elements, gep uses {ins.size}",
                            "BAD_ELEM_SIZE")
                    prev = elem_sizes.setdefault(base, ins.size)
                    if prev != ins.size:
                        bad(f"base {base} used with element sizes {prev} and {ins.size}",
                            "MIXED_ELEM_SIZE")
            elif op == "load":
                if t(ins.args[0]) is not ADDR or not is_value(ins.args[0]):
                    bad("load address must be an addr value")
                if ins.ty not in (I64, F64):
                    bad("load type must be i64 or f64")
            elif op == "store":
                val, addr = ins.args
                if t(addr) is not ADDR or not is_value(addr):
                    bad("store address must be an addr value")
                if t(val) not in (I64, F64):
                    bad("stored value must be i64 or f64 (addresses never go to memory)")
            elif op == "cast":
                src = t(ins.args[0])
                if {src, ins.ty} != {I64, F64}:
                    bad("cast converts between i64 and f64")
            elif op == "phi":
                if ins.ty is None:
                    bad("cannot infer phi type")
                elif any(t(v) is not ins.ty for v, _ in ins.incoming):
                    bad("phi incoming values disagree in type")
            elif op in ("condbr", "detect"):
                if t(ins.args[0]) is not I64:
                    bad(f"{op} operand must be i64")
    return diags
