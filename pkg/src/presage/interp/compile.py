"""Compile a validated function to a Python closure for fast interpretation.

Each SSA value becomes a local variable and each block a branch of one
dispatch loop. Phi nodes are parallel assignments performed on the incoming
edge. Fault sites carry an inline counter per error model: when a counter
reaches the requested dynamic ordinal the freshly computed value is flipped
before anything reads it.
"""

from __future__ import annotations

import math

from ..ir import FBINOPS, Function, Instr, ValueType
from .memory import Crash
from .sites import Model, enumerate_sites

H = 1 << 63
M = (1 << 64) - 1

_ICMP = {"eq": "==", "ne": "!=", "lt": "<", "le": "<=", "gt": ">", "ge": ">="}


def _sdiv(a, b):
    if b == 0:
        raise Crash("integer division by zero")
    if a == -H and b == -1:
        raise Crash("integer division overflow")
    q = abs(a) // abs(b)
    return q if (a < 0) == (b < 0) else -q


def _srem(a, b):
    return a - b * _sdiv(a, b)


def _fdiv(a, b):
    try:
        return a / b
    except ZeroDivisionError:
        if a != a or a == 0.0:
            return math.nan
        return math.copysign(math.inf, a) * math.copysign(1.0, b)


def _fptosi(x):
    # out-of-range conversions produce the x86 "integer indefinite" value
    if x != x or x >= 9.2233720368547758e18 or x < -9.2233720368547758e18:
        return -H
    return int(x)


class Program:
    """Compiled form of one function; see :func:`presage.interp.run`."""

    def __init__(self, f: Function, trace: bool = False):
        self.function = f
        self.trace = trace
        self.sites = {m: enumerate_sites(f, m) for m in Model}
        self.labels: list[tuple[str, str]] = []  # trace id -> (value, opcode)
        self.source = self._generate()
        ns = {
            "Crash": Crash, "_sdiv": _sdiv, "_srem": _srem, "_fdiv": _fdiv,
            "_fptosi": _fptosi, "_inf": math.inf, "_nan": math.nan,
        }
        exec(compile(self.source, f"<presage:{f.name}>", "exec"), ns)
        self._fn = ns["_exec"]

    def execute(self, params, k1, k2, flip_a, flip_i, budget, tr, mem_fns):
        return self._fn(*params, k1, k2, flip_a, flip_i, budget, tr, *mem_fns)

    # -- code generation ---------------------------------------------------

    def _generate(self) -> str:
        f = self.function
        self._names: dict[str, str] = {}
        for n, p in enumerate(f.params):
            self._names[p.name] = f"p{n}"
        for n, (_, ins) in enumerate(f.instructions()):
            if ins.dest is not None:
                self._names[ins.dest] = f"v{n}"
        self._types = f.value_types()
        self._em1 = set(self.sites[Model.EM1])
        self._em2 = set(self.sites[Model.EM2])
        self._bidx = {b.label: n for n, b in enumerate(f.blocks)}

        params = ", ".join(self._names[p.name] for p in f.params)
        sig = (params + ", " if params else "") + "K1, K2, FLIPA, FLIPI, BUDGET, TR, LD_F, LD_I, ST_F, ST_I"
        out = [f"def _exec({sig}):",
               "    dic = 0; c1 = 0; c2 = 0; det = 0; blk = 0",
               "    try:",
               "        while True:"]
        for n, b in enumerate(f.blocks):
            kw = "if" if n == 0 else "elif"
            out.append(f"            {kw} blk == {n}:")
            body = self._block(b)
            out.extend("                " + line for line in body)
        out.append("            else:")
        out.append("                raise Crash('bad block')")
        out.append("    except Crash as exc:")
        out.append("        return ('crash', str(exc), dic, det, c1, c2)")
        return "\n".join(out) + "\n"

    def _op(self, v) -> str:
        if isinstance(v, str):
            return self._names[v]
        if isinstance(v, float):
            if math.isnan(v):
                return "_nan"
            if math.isinf(v):
                return "_inf" if v > 0 else "(-_inf)"
            return repr(v)
        return str(v)

    def _post_def(self, ins: Instr) -> list[str]:
        lines = []
        var = self._names[ins.dest]
        if ins.dest in self._em1:
            lines += ["c1 += 1", f"if c1 == K1: {var} = FLIPA({var})"]
        elif ins.dest in self._em2:
            lines += ["c2 += 1", f"if c2 == K2: {var} = FLIPI({var})"]
        if self.trace:
            self.labels.append((ins.dest, ins.op))
            lines.append(f"TR(({len(self.labels) - 1}, {var}))")
        return lines

    def _block(self, b) -> list[str]:
        n = len(b.instrs)
        lines = [f"if dic + {n} > BUDGET: return ('hang', 'budget exhausted', dic, det, c1, c2)",
                 f"dic += {n}"]
        for ins in b.instrs:
            if ins.op == "phi":
                lines += self._post_def(ins)
                continue
            lines += self._instr(ins, b)
        return lines

    def _edge(self, src: str, dst: str) -> list[str]:
        phis = self.function.block(dst).phis()
        lines = []
        if phis:
            lhs = ", ".join(self._names[p.dest] for p in phis)
            rhs = ", ".join(self._op(dict((lbl, v) for v, lbl in p.incoming)[src]) for p in phis)
            lines.append(f"{lhs}, = {rhs},")
        lines.append(f"blk = {self._bidx[dst]}")
        lines.append("continue")
        return lines

    def _instr(self, ins: Instr, b) -> list[str]:
        op = ins.op
        a = [self._op(x) for x in ins.args]
        d = self._names.get(ins.dest) if ins.dest else None
        if op in ("add", "sub", "mul"):
            sym = {"add": "+", "sub": "-", "mul": "*"}[op]
            return [f"{d} = (({a[0]} {sym} {a[1]} + {H}) & {M}) - {H}"] + self._post_def(ins)
        if op == "div":
            return [f"{d} = _sdiv({a[0]}, {a[1]})"] + self._post_def(ins)
        if op == "rem":
            return [f"{d} = _srem({a[0]}, {a[1]})"] + self._post_def(ins)
        if op in FBINOPS:
            if op == "fdiv":
                return [f"{d} = _fdiv({a[0]}, {a[1]})"] + self._post_def(ins)
            sym = {"fadd": "+", "fsub": "-", "fmul": "*"}[op]
            return [f"{d} = {a[0]} {sym} {a[1]}"] + self._post_def(ins)
        if op == "icmp":
            return [f"{d} = 1 if {a[0]} {_ICMP[ins.pred]} {a[1]} else 0"] + self._post_def(ins)
        if op == "const":
            return [f"{d} = {a[0]}"] + self._post_def(ins)
        if op == "gep":
            return [f"{d} = ({a[0]} + {ins.size} * {a[1]}) & {M}"] + self._post_def(ins)
        if op == "load":
            fn = "LD_F" if ins.ty is ValueType.F64 else "LD_I"
            return [f"{d} = {fn}({a[0]})"] + self._post_def(ins)
        if op == "store":
            vt = self._types.get(ins.args[0]) if isinstance(ins.args[0], str) else (
                ValueType.F64 if isinstance(ins.args[0], float) else ValueType.I64)
            fn = "ST_F" if vt is ValueType.F64 else "ST_I"
            return [f"{fn}({a[1]}, {a[0]})"]
        if op == "cast":
            expr = f"float({a[0]})" if ins.ty is ValueType.F64 else f"_fptosi({a[0]})"
            return [f"{d} = {expr}"] + self._post_def(ins)
        if op == "detect":
            return [f"if {a[0]}: det += 1"]
        if op == "br":
            return self._edge(b.label, ins.targets[0])
        if op == "condbr":
            t, e = ins.targets
            return ([f"if {a[0]}:"] + ["    " + x for x in self._edge(b.label, t)]
                    + ["else:"] + ["    " + x for x in self._edge(b.label, e)])
        if op == "ret":
            return ["return ('completed', '', dic, det, c1, c2)"]
        raise ValueError(f"cannot compile opcode {op!r}")
