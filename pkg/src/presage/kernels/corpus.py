"""Benchmark kernels: the motivating foo1/foo2 pair and PolyBench-style loop nests.

Two-dimensional arrays are linearized row-major and accessed through
single-index geps. Sizes are kept small so that a fault-free run stays within
a few thousand dynamic instructions.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from ..interp.memory import ArraySpec, MemoryImage
from ..ir import Function
from .builder import FunctionBuilder


@dataclass(frozen=True)
class KernelSpec:
    name: str
    builder: Callable[[], Function]
    category: str
    ranges: dict[str, tuple[int, int]]
    arrays: Callable[[dict], dict[str, int]]  # sizes -> array name -> element count
    scalars: Callable[[dict], dict[str, int]]
    description: str
    has_derived_bases: bool = False
    motivating: bool = False
    # square arrays whose diagonal gets +n so factorizations stay well conditioned
    diag_boost: tuple[str, ...] = ()
    aliases: tuple[str, ...] = field(default=())


# -- motivating pair ---------------------------------------------------------


def build_foo1() -> Function:
    fb = FunctionBuilder("foo1", arrays=["a"], scalars=["n"], results=["a"])
    with fb.loop("i", 1, "%n") as L:
        t = fb.mul(L.var, 2)
        idx = fb.sub(t, 2, "id")
        addr = fb.gep("%a", idx, name="addr")
        fb.store(fb.sitofp(L.var), addr)
    return fb.ret()


def build_foo2() -> Function:
    fb = FunctionBuilder("foo2", arrays=["a"], scalars=["n"], results=["a"])
    with fb.loop("i", 1, "%n", carry={"addr": "%a", "pid": 0}) as L:
        t = fb.mul(L.var, 2)
        idx = fb.sub(t, 2, "id")
        rid = fb.sub(idx, L["pid"], "rid")
        addr = fb.gep(L["addr"], rid, name="p")
        fb.store(fb.sitofp(L.var), addr)
        L.next["pid"] = idx
        L.next["addr"] = addr
    return fb.ret()


# -- stencils ----------------------------------------------------------------


def build_jacobi2d() -> Function:
    fb = FunctionBuilder("jacobi2d_mini", arrays=["A", "B"], scalars=["n", "tsteps"], results=["A", "B"])
    n = "%n"
    nm1 = fb.sub(n, 1, "nm1")

    def sweep(src, dst):
        with fb.loop("i", 1, nm1) as I:
            with fb.loop("j", 1, nm1) as J:
                c = fb.idx2(I.var, J.var, n)
                s = fb.get(src, c)
                s = fb.fadd(s, fb.get(src, fb.sub(c, 1)))
                s = fb.fadd(s, fb.get(src, fb.add(c, 1)))
                s = fb.fadd(s, fb.get(src, fb.add(c, n)))
                s = fb.fadd(s, fb.get(src, fb.sub(c, n)))
                fb.put(dst, c, fb.fmul(0.2, s))

    with fb.loop("t", 0, "%tsteps"):
        sweep("A", "B")
        sweep("B", "A")
    return fb.ret()


def build_seidel2d() -> Function:
    fb = FunctionBuilder("seidel2d_mini", arrays=["A"], scalars=["n", "tsteps"], results=["A"])
    n = "%n"
    nm1 = fb.sub(n, 1, "nm1")
    with fb.loop("t", 0, "%tsteps"):
        with fb.loop("i", 1, nm1) as I:
            with fb.loop("j", 1, nm1) as J:
                c = fb.idx2(I.var, J.var, n)
                up = fb.sub(c, n)
                down = fb.add(c, n)
                s = fb.get("A", fb.sub(up, 1))
                s = fb.fadd(s, fb.get("A", up))
                s = fb.fadd(s, fb.get("A", fb.add(up, 1)))
                s = fb.fadd(s, fb.get("A", fb.sub(c, 1)))
                s = fb.fadd(s, fb.get("A", c))
                s = fb.fadd(s, fb.get("A", fb.add(c, 1)))
                s = fb.fadd(s, fb.get("A", fb.sub(down, 1)))
                s = fb.fadd(s, fb.get("A", down))
                s = fb.fadd(s, fb.get("A", fb.add(down, 1)))
                fb.put("A", c, fb.fdiv(s, 9.0))
    return fb.ret()


def build_adi() -> Function:
    fb = FunctionBuilder("adi_mini", arrays=["u", "v", "p", "q"], scalars=["n", "tsteps"], results=["u"])
    n = "%n"
    nm1 = fb.sub(n, 1, "nm1")
    nm2 = fb.sub(n, 2, "nm2")
    fn = fb.sitofp(n, "fn")
    dx = fb.fdiv(1.0, fn, "DX")
    dt = fb.fdiv(1.0, fb.sitofp("%tsteps", "ft"), "DT")
    dx2 = fb.fmul(dx, dx, "DX2")
    mul1 = fb.fdiv(fb.fmul(2.0, dt), dx2, "mul1")
    mul2 = fb.fdiv(fb.fmul(1.0, dt), dx2, "mul2")
    a = fb.fmul(fb.fdiv(mul1, 2.0), -1.0, "a")
    b = fb.fadd(1.0, mul1, "b")
    c = a
    d = fb.fmul(fb.fdiv(mul2, 2.0), -1.0, "d")
    e = fb.fadd(1.0, mul2, "e")
    f = d
    neg_c = fb.fmul(c, -1.0, "negc")
    neg_f = fb.fmul(f, -1.0, "negf")
    neg_d = fb.fmul(d, -1.0, "negd")
    neg_a = fb.fmul(a, -1.0, "nega")
    one_2d = fb.fadd(1.0, fb.fmul(2.0, d), "one2d")
    one_2a = fb.fadd(1.0, fb.fmul(2.0, a), "one2a")

    with fb.loop("t", 1, fb.add("%tsteps", 1, "tend")):
        # column sweep
        with fb.loop("i", 1, nm1) as I:
            i = I.var
            fb.put("v", i, 1.0)
            row = fb.mul(i, n, "row")
            fb.put("p", row, 0.0)
            fb.put("q", row, fb.get("v", i))
            with fb.loop("j", 1, nm1) as J:
                ij = fb.add(row, J.var, "ij")
                pprev = fb.get("p", fb.sub(ij, 1))
                den = fb.fadd(fb.fmul(a, pprev), b)
                fb.put("p", ij, fb.fdiv(neg_c, den))
                jrow = fb.mul(J.var, n, "jrow")
                ji = fb.add(jrow, i, "ji")
                num = fb.fmul(neg_d, fb.get("u", fb.sub(ji, 1)))
                num = fb.fadd(num, fb.fmul(one_2d, fb.get("u", ji)))
                num = fb.fsub(num, fb.fmul(f, fb.get("u", fb.add(ji, 1))))
                num = fb.fsub(num, fb.fmul(a, fb.get("q", fb.sub(ij, 1))))
                fb.put("q", ij, fb.fdiv(num, den))
            fb.put("v", fb.add(fb.mul(nm1, n), i), 1.0)
            with fb.loop("j", nm2, 1, step=-1) as J:
                ij = fb.add(row, J.var, "ij")
                ji = fb.add(fb.mul(J.var, n), i, "ji")
                val = fb.fmul(fb.get("p", ij), fb.get("v", fb.add(ji, n)))
                fb.put("v", ji, fb.fadd(val, fb.get("q", ij)))
        # row sweep
        with fb.loop("i", 1, nm1) as I:
            i = I.var
            row = fb.mul(i, n, "row")
            fb.put("u", row, 1.0)
            fb.put("p", row, 0.0)
            fb.put("q", row, fb.get("u", row))
            with fb.loop("j", 1, nm1) as J:
                ij = fb.add(row, J.var, "ij")
                pprev = fb.get("p", fb.sub(ij, 1))
                den = fb.fadd(fb.fmul(d, pprev), e)
                fb.put("p", ij, fb.fdiv(neg_f, den))
                num = fb.fmul(neg_a, fb.get("v", fb.sub(ij, n)))
                num = fb.fadd(num, fb.fmul(one_2a, fb.get("v", ij)))
                num = fb.fsub(num, fb.fmul(c, fb.get("v", fb.add(ij, n))))
                num = fb.fsub(num, fb.fmul(d, fb.get("q", fb.sub(ij, 1))))
                fb.put("q", ij, fb.fdiv(num, den))
            fb.put("u", fb.add(row, nm1), 1.0)
            with fb.loop("j", nm2, 1, step=-1) as J:
                ij = fb.add(row, J.var, "ij")
                val = fb.fmul(fb.get("p", ij), fb.get("u", fb.add(ij, 1)))
                fb.put("u", ij, fb.fadd(val, fb.get("q", ij)))
    return fb.ret()


def build_fdtd2d() -> Function:
    """fdtd-2d with the ey update written through hoisted row pointers, so those
    geps use a derived base and stay outside any chain."""
    fb = FunctionBuilder("fdtd2d_mini", arrays=["ex", "ey", "hz", "fict"],
                         scalars=["tmax", "nx", "ny"], results=["ex", "ey", "hz"])
    nx, ny = "%nx", "%ny"
    nxm1 = fb.sub(nx, 1, "nxm1")
    nym1 = fb.sub(ny, 1, "nym1")
    with fb.loop("t", 0, "%tmax") as T:
        src = fb.get("fict", T.var)
        with fb.loop("j", 0, ny) as J:
            fb.put("ey", J.var, src)
        with fb.loop("i", 1, nx) as I:
            off = fb.mul(I.var, ny, "off")
            ey_row = fb.gep("%ey", off, name="eyrow")
            hz_row = fb.gep("%hz", off, name="hzrow")
            hz_up = fb.gep("%hz", fb.sub(off, ny), name="hzup")
            with fb.loop("j", 0, ny) as J:
                pe = fb.gep(ey_row, J.var, name="pey")
                dh = fb.fsub(fb.load(fb.gep(hz_row, J.var)), fb.load(fb.gep(hz_up, J.var)))
                fb.store(fb.fsub(fb.load(pe), fb.fmul(0.5, dh)), pe)
        with fb.loop("i", 0, nx) as I:
            with fb.loop("j", 1, ny) as J:
                c = fb.idx2(I.var, J.var, ny)
                dh = fb.fsub(fb.get("hz", c), fb.get("hz", fb.sub(c, 1)))
                fb.put("ex", c, fb.fsub(fb.get("ex", c), fb.fmul(0.5, dh)))
        with fb.loop("i", 0, nxm1) as I:
            with fb.loop("j", 0, nym1) as J:
                c = fb.idx2(I.var, J.var, ny)
                s = fb.fsub(fb.get("ex", fb.add(c, 1)), fb.get("ex", c))
                s = fb.fadd(s, fb.get("ey", fb.add(c, ny)))
                s = fb.fsub(s, fb.get("ey", c))
                fb.put("hz", c, fb.fsub(fb.get("hz", c), fb.fmul(0.7, s)))
    return fb.ret()


# -- BLAS-like ---------------------------------------------------------------


def build_gesummv() -> Function:
    fb = FunctionBuilder("gesummv_mini", arrays=["A", "B", "x", "y", "tmp"], scalars=["n"], results=["y"])
    n = "%n"
    with fb.loop("i", 0, n) as I:
        i = I.var
        fb.put("tmp", i, 0.0)
        fb.put("y", i, 0.0)
        row = fb.mul(i, n, "row")
        with fb.loop("j", 0, n) as J:
            ij = fb.add(row, J.var, "ij")
            xj = fb.get("x", J.var)
            fb.put("tmp", i, fb.fadd(fb.fmul(fb.get("A", ij), xj), fb.get("tmp", i)))
            fb.put("y", i, fb.fadd(fb.fmul(fb.get("B", ij), xj), fb.get("y", i)))
        val = fb.fadd(fb.fmul(1.5, fb.get("tmp", i)), fb.fmul(1.2, fb.get("y", i)))
        fb.put("y", i, val)
    return fb.ret()


def build_atax() -> Function:
    fb = FunctionBuilder("atax_mini", arrays=["A", "x", "y", "tmp"], scalars=["m", "n"], results=["y"])
    m, n = "%m", "%n"
    with fb.loop("i", 0, n) as I:
        fb.put("y", I.var, 0.0)
    with fb.loop("i", 0, m) as I:
        i = I.var
        fb.put("tmp", i, 0.0)
        row = fb.mul(i, n, "row")
        with fb.loop("j", 0, n) as J:
            ij = fb.add(row, J.var, "ij")
            prod = fb.fmul(fb.get("A", ij), fb.get("x", J.var))
            fb.put("tmp", i, fb.fadd(fb.get("tmp", i), prod))
        with fb.loop("j", 0, n) as J:
            ij = fb.add(row, J.var, "ij")
            prod = fb.fmul(fb.get("A", ij), fb.get("tmp", i))
            fb.put("y", J.var, fb.fadd(fb.get("y", J.var), prod))
    return fb.ret()


def build_bicg() -> Function:
    fb = FunctionBuilder("bicg_mini", arrays=["A", "s", "q", "p", "r"], scalars=["m", "n"], results=["s", "q"])
    m, n = "%m", "%n"
    with fb.loop("i", 0, m) as I:
        fb.put("s", I.var, 0.0)
    with fb.loop("i", 0, n) as I:
        i = I.var
        fb.put("q", i, 0.0)
        row = fb.mul(i, m, "row")
        with fb.loop("j", 0, m) as J:
            j = J.var
            ij = fb.add(row, j, "ij")
            aij = fb.get("A", ij)
            fb.put("s", j, fb.fadd(fb.get("s", j), fb.fmul(fb.get("r", i), aij)))
            fb.put("q", i, fb.fadd(fb.get("q", i), fb.fmul(aij, fb.get("p", j))))
    return fb.ret()


def build_trmm() -> Function:
    fb = FunctionBuilder("trmm_mini", arrays=["A", "B"], scalars=["m", "n"], results=["B"])
    m, n = "%m", "%n"
    with fb.loop("i", 0, m) as I:
        i = I.var
        with fb.loop("j", 0, n) as J:
            ij = fb.idx2(i, J.var, n)
            with fb.loop("k", fb.add(i, 1), m) as K:
                aki = fb.get("A", fb.idx2(K.var, i, m))
                bkj = fb.get("B", fb.idx2(K.var, J.var, n))
                fb.put("B", ij, fb.fadd(fb.get("B", ij), fb.fmul(aki, bkj)))
            fb.put("B", ij, fb.fmul(1.5, fb.get("B", ij)))
    return fb.ret()


# -- solvers -----------------------------------------------------------------


def build_lu() -> Function:
    fb = FunctionBuilder("lu_mini", arrays=["A"], scalars=["n"], results=["A"])
    n = "%n"
    with fb.loop("i", 0, n) as I:
        i = I.var
        row = fb.mul(i, n, "row")
        with fb.loop("j", 0, i) as J:
            j = J.var
            ij = fb.add(row, j, "ij")
            with fb.loop("k", 0, j) as K:
                prod = fb.fmul(fb.get("A", fb.add(row, K.var)), fb.get("A", fb.idx2(K.var, j, n)))
                fb.put("A", ij, fb.fsub(fb.get("A", ij), prod))
            fb.put("A", ij, fb.fdiv(fb.get("A", ij), fb.get("A", fb.idx2(j, j, n))))
        with fb.loop("j", i, n) as J:
            ij = fb.add(row, J.var, "ij")
            with fb.loop("k", 0, i) as K:
                prod = fb.fmul(fb.get("A", fb.add(row, K.var)), fb.get("A", fb.idx2(K.var, J.var, n)))
                fb.put("A", ij, fb.fsub(fb.get("A", ij), prod))
    return fb.ret()


def build_cholesky() -> Function:
    """Square-root-free (LDL^T) Cholesky: L below the diagonal, D on it."""
    fb = FunctionBuilder("cholesky_mini", arrays=["A"], scalars=["n"], results=["A"])
    n = "%n"
    with fb.loop("i", 0, n) as I:
        i = I.var
        row = fb.mul(i, n, "row")
        with fb.loop("j", 0, i) as J:
            j = J.var
            ij = fb.add(row, j, "ij")
            jrow = fb.mul(j, n, "jrow")
            with fb.loop("k", 0, j) as K:
                k = K.var
                ld = fb.fmul(fb.get("A", fb.add(row, k)), fb.get("A", fb.idx2(k, k, n)))
                prod = fb.fmul(ld, fb.get("A", fb.add(jrow, k)))
                fb.put("A", ij, fb.fsub(fb.get("A", ij), prod))
            fb.put("A", ij, fb.fdiv(fb.get("A", ij), fb.get("A", fb.add(jrow, j))))
        ii = fb.add(row, i, "ii")
        with fb.loop("k", 0, i) as K:
            lik = fb.get("A", fb.add(row, K.var))
            prod = fb.fmul(fb.fmul(lik, lik), fb.get("A", fb.idx2(K.var, K.var, n)))
            fb.put("A", ii, fb.fsub(fb.get("A", ii), prod))
    return fb.ret()


# -- registry ----------------------------------------------------------------


def _sq(*names):
    return lambda s: {a: s["n"] * s["n"] for a in names}


KERNELS: dict[str, KernelSpec] = {}


def _register(spec: KernelSpec) -> None:
    KERNELS[spec.name] = spec


_register(KernelSpec(
    "foo1", build_foo1, "motivating", {"n": (8, 32)},
    lambda s: {"a": 2 * s["n"]}, lambda s: {"n": s["n"]},
    "stores i to a[2i-2] with fixed-base addressing", motivating=True))
_register(KernelSpec(
    "foo2", build_foo2, "motivating", {"n": (8, 32)},
    lambda s: {"a": 2 * s["n"]}, lambda s: {"n": s["n"]},
    "foo1 rewritten by hand with a relative-base address chain",
    has_derived_bases=True, motivating=True))
_register(KernelSpec(
    "jacobi2d-mini", build_jacobi2d, "stencil", {"n": (8, 12), "tsteps": (1, 2)},
    _sq("A", "B"), lambda s: {"n": s["n"], "tsteps": s["tsteps"]},
    "5-point Jacobi sweeps between two grids"))
_register(KernelSpec(
    "seidel2d-mini", build_seidel2d, "stencil", {"n": (8, 12), "tsteps": (1, 2)},
    _sq("A"), lambda s: {"n": s["n"], "tsteps": s["tsteps"]},
    "9-point Gauss-Seidel sweeps in place"))
_register(KernelSpec(
    "adi-mini", build_adi, "stencil", {"n": (8, 10), "tsteps": (1, 2)},
    _sq("u", "v", "p", "q"), lambda s: {"n": s["n"], "tsteps": s["tsteps"]},
    "alternating-direction implicit solver (column then row tridiagonal sweeps)"))
_register(KernelSpec(
    "fdtd2d-mini", build_fdtd2d, "stencil", {"nx": (8, 12), "ny": (8, 12), "tmax": (1, 2)},
    lambda s: {"ex": s["nx"] * s["ny"], "ey": s["nx"] * s["ny"], "hz": s["nx"] * s["ny"],
               "fict": s["tmax"]},
    lambda s: {"tmax": s["tmax"], "nx": s["nx"], "ny": s["ny"]},
    "2-D finite-difference time domain; ey update uses derived row pointers",
    has_derived_bases=True, aliases=("fdtd-mini",)))
_register(KernelSpec(
    "gesummv-mini", build_gesummv, "blas", {"n": (8, 16)},
    lambda s: {"A": s["n"] ** 2, "B": s["n"] ** 2, "x": s["n"], "y": s["n"], "tmp": s["n"]},
    lambda s: {"n": s["n"]},
    "y = alpha*A*x + beta*B*x"))
_register(KernelSpec(
    "atax-mini", build_atax, "blas", {"m": (8, 14), "n": (8, 14)},
    lambda s: {"A": s["m"] * s["n"], "x": s["n"], "y": s["n"], "tmp": s["m"]},
    lambda s: {"m": s["m"], "n": s["n"]},
    "y = A^T (A x)"))
_register(KernelSpec(
    "bicg-mini", build_bicg, "blas", {"m": (8, 14), "n": (8, 14)},
    lambda s: {"A": s["n"] * s["m"], "s": s["m"], "q": s["n"], "p": s["m"], "r": s["n"]},
    lambda s: {"m": s["m"], "n": s["n"]},
    "BiCG sub-kernel: s = A^T r, q = A p"))
_register(KernelSpec(
    "trmm-mini", build_trmm, "blas", {"m": (8, 10), "n": (8, 10)},
    lambda s: {"A": s["m"] * s["m"], "B": s["m"] * s["n"]},
    lambda s: {"m": s["m"], "n": s["n"]},
    "triangular matrix multiply B = alpha * A^T B"))
_register(KernelSpec(
    "lu-mini", build_lu, "solver", {"n": (8, 10)},
    _sq("A"), lambda s: {"n": s["n"]},
    "in-place LU decomposition without pivoting", diag_boost=("A",)))
_register(KernelSpec(
    "cholesky-mini", build_cholesky, "solver", {"n": (8, 10)},
    _sq("A"), lambda s: {"n": s["n"]},
    "in-place square-root-free Cholesky (LDL^T)", diag_boost=("A",)))


def lookup(name: str) -> KernelSpec:
    if name in KERNELS:
        return KERNELS[name]
    for spec in KERNELS.values():
        if name in spec.aliases:
            return spec
    raise KeyError(f"unknown kernel {name!r}; choose from {', '.join(KERNELS)}")


def benchmark_names() -> list[str]:
    return [k for k, s in KERNELS.items() if not s.motivating]


def draw_sizes(spec: KernelSpec, rng: np.random.Generator) -> dict[str, int]:
    return {k: int(rng.integers(lo, hi + 1)) for k, (lo, hi) in spec.ranges.items()}


def gen_inputs(spec: KernelSpec, seed: int, fn: Function | None = None) -> tuple[MemoryImage, dict]:
    """Deterministic random inputs: sizes uniform in the spec ranges, array
    elements uniform in [-1, 1]."""
    rng = np.random.default_rng(seed)
    sizes = draw_sizes(spec, rng)
    lengths = spec.arrays(sizes)
    fn = fn or build(spec.name)
    specs, contents = [], {}
    for p in fn.array_params():
        name = p.name.lstrip("%")
        length = lengths[name]
        vals = rng.uniform(-1.0, 1.0, length)
        if name in spec.diag_boost:
            dim = int(round(length ** 0.5))
            vals[:: dim + 1] += dim
        specs.append(ArraySpec(p.name, length, p.elem or "f64"))
        contents[p.name] = vals
    return MemoryImage.layout(specs, contents), spec.scalars(sizes)


_cache: dict[str, Function] = {}


def build(name: str) -> Function:
    """A fresh validated copy of kernel ``name``."""
    spec = lookup(name)
    if spec.name not in _cache:
        _cache[spec.name] = spec.builder()
    return _cache[spec.name].copy()
