"""Small structured builder for writing kernels as loop nests."""

from __future__ import annotations

from contextlib import contextmanager

from ..ir import Block, Function, Instr, IRError, Operand, Param, ValueType, validate


class Loop:
    def __init__(self, var: str, carried: dict[str, str]):
        self.var = var
        self.carried = carried  # carried name -> phi value
        self.next: dict[str, Operand] = {}

    def __getitem__(self, name: str) -> str:
        return self.carried[name]


class FunctionBuilder:
    def __init__(self, name: str, arrays=(), scalars=(), results=(), elem: str = "f64"):
        params = [Param(f"%{a}", ValueType.ADDR, elem) for a in arrays]
        params += [Param(f"%{s}", ValueType.I64) for s in scalars]
        self.func = Function(name, params, [], [f"%{r}" for r in results])
        self._labels: set[str] = set()
        self._values: set[str] = {p.name for p in params}
        self.cur = self._new_block("entry")

    # -- naming ------------------------------------------------------------

    def _fresh(self, hint: str, taken: set[str]) -> str:
        name, n = hint, 1
        while name in taken:
            n += 1
            name = f"{hint}{n}"
        taken.add(name)
        return name

    def _new_block(self, hint: str) -> Block:
        b = Block(self._fresh(hint, self._labels))
        self.func.blocks.append(b)
        return b

    def _emit(self, op: str, hint: str | None = "t", **kw) -> str | None:
        dest = self._fresh(f"%{hint}", self._values) if hint else None
        self.cur.instrs.append(Instr(op, dest, **kw))
        return dest

    # -- instructions --------------------------------------------------------

    def binop(self, op: str, a: Operand, b: Operand, name: str = "t") -> str:
        return self._emit(op, name, args=[a, b])

    def add(self, a, b, name="t"):
        return self.binop("add", a, b, name)

    def sub(self, a, b, name="t"):
        return self.binop("sub", a, b, name)

    def mul(self, a, b, name="t"):
        return self.binop("mul", a, b, name)

    def fadd(self, a, b, name="f"):
        return self.binop("fadd", a, b, name)

    def fsub(self, a, b, name="f"):
        return self.binop("fsub", a, b, name)

    def fmul(self, a, b, name="f"):
        return self.binop("fmul", a, b, name)

    def fdiv(self, a, b, name="f"):
        return self.binop("fdiv", a, b, name)

    def icmp(self, pred: str, a, b, name="c"):
        return self._emit("icmp", name, args=[a, b], pred=pred)

    def sitofp(self, a, name="f"):
        return self._emit("cast", name, args=[a], ty=ValueType.F64)

    def gep(self, base: str, idx: Operand, size: int = 8, name="p"):
        return self._emit("gep", name, args=[base, idx], size=size)

    def load(self, addr: str, name="v"):
        return self._emit("load", name, args=[addr], ty=ValueType.F64)

    def store(self, value: Operand, addr: str):
        self._emit("store", None, args=[value, addr])

    def get(self, array: str, idx: Operand) -> str:
        """``array[idx]`` as gep + load."""
        return self.load(self.gep(f"%{array}", idx))

    def put(self, array: str, idx: Operand, value: Operand) -> None:
        self.store(value, self.gep(f"%{array}", idx))

    def idx2(self, i: Operand, j: Operand, ncols: Operand) -> str:
        """Row-major linear index ``i * ncols + j``."""
        return self.add(self.mul(i, ncols), j, "ix")

    # -- control flow --------------------------------------------------------

    @contextmanager
    def loop(self, var: str, lo: Operand, hi: Operand, step: int = 1, carry: dict | None = None):
        """``for var = lo; var < hi (or var >= hi when step < 0); var += step``."""
        pre = self.cur
        head = self._new_block(f"{var}.head")
        body = self._new_block(f"{var}.body")
        exit_ = self._new_block(f"{var}.exit")
        pre.instrs.append(Instr("br", targets=[head.label]))

        self.cur = head
        ivar = self._emit("phi", var, incoming=[(lo, pre.label)], ty=ValueType.I64)
        carried = {}
        for cname, init in (carry or {}).items():
            ty = ValueType.ADDR if isinstance(init, str) and self._is_addr(init) else ValueType.I64
            carried[cname] = self._emit("phi", cname, incoming=[(init, pre.label)], ty=ty)
        cond = self.icmp("lt" if step > 0 else "ge", ivar, hi)
        head.instrs.append(Instr("condbr", args=[cond], targets=[body.label, exit_.label]))

        self.cur = body
        handle = Loop(ivar, carried)
        yield handle

        latch = self.cur
        nxt = self.add(ivar, step, f"{var}.next")
        latch.instrs.append(Instr("br", targets=[head.label]))
        phis = {p.dest: p for p in head.phis()}
        phis[ivar].incoming.append((nxt, latch.label))
        for cname, phi in carried.items():
            phis[phi].incoming.append((handle.next[cname], latch.label))
        self.cur = exit_

    def _is_addr(self, value: str) -> bool:
        if any(p.name == value and p.is_array for p in self.func.params):
            return True
        for _, ins in self.func.instructions():
            if ins.dest == value:
                return ins.op == "gep" or (ins.op == "phi" and ins.ty is ValueType.ADDR)
        return False

    def ret(self) -> Function:
        self.cur.instrs.append(Instr("ret"))
        diags = validate(self.func)
        if diags:
            raise IRError(diags)
        return self.func
