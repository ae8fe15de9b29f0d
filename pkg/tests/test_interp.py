import io
import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from presage.interp import (
    ArraySpec, ConfigError, ExecResult, FaultSpec, MemoryImage, Model, OutcomeKind, Status,
    classify, enumerate_sites, flip_signed, flip_unsigned, profile, run, write_trace_csv,
)
from presage.ir import parse_ir
from presage.transform import transform

i64 = st.integers(-(2**63), 2**63 - 1)


def foo1_mem():
    return MemoryImage.layout([ArraySpec("%a", 20)])


def test_flip_address_bit6():
    assert flip_unsigned(1024, 6) == 1088


def test_flip_signed_top_bit():
    assert flip_signed(0, 63) == -(2**63)
    assert flip_signed(-1, 0) == -2


def test_store_to_guard_gap_crashes():
    f = parse_ir("func @f(%a: addr[f64 x 4]) -> results(%a)\nentry:\n"
                 "  %p = gep %a, 4, 8\n  store 1.0, %p\n  ret\n")
    res = run(f, MemoryImage.layout([ArraySpec("%a", 4)]))
    assert res.status is Status.CRASH and res.reason == "unmapped store"


def test_load_below_region_crashes():
    f = parse_ir("func @f(%a: addr[f64 x 4]) -> results(%a)\nentry:\n"
                 "  %p = gep %a, -1, 8\n  %v = load %p : f64\n  ret\n")
    assert run(f, MemoryImage.layout([ArraySpec("%a", 4)])).reason == "unmapped load"


def test_layout_regions_disjoint_with_gaps():
    mem = MemoryImage.layout([ArraySpec("%x", 3), ArraySpec("%y", 5)])
    rx, ry = mem.region("%x"), mem.region("%y")
    assert ry.base - rx.end >= 4096 and rx.base > 0
    assert mem.find(rx.end) is None and mem.find(ry.base) is ry


def test_foo1_sites(foo1):
    assert enumerate_sites(foo1, Model.EM1) == ["%addr"]
    em2 = enumerate_sites(foo1, Model.EM2)
    assert set(em2) == {"%i", "%t", "%id", "%inext"}
    assert "%c" not in em2


def test_foo1_dynamic_counts(foo1):
    n = profile(foo1, foo1_mem(), {"n": 10})
    assert n[Model.EM1] == 9
    # per iteration: i, t, id, inext; plus the final header visit of i
    assert n[Model.EM2] == 9 * 4 + 1


def test_no_geps_no_sites():
    f = parse_ir("func @f(%n: i64) -> results()\nentry:\n  %x = add %n, 1\n  ret\n")
    assert enumerate_sites(f, Model.EM1) == [] == enumerate_sites(f, Model.EM2)
    assert profile(f, MemoryImage.layout([]), {"n": 1}) == {Model.EM1: 0, Model.EM2: 0}


def test_detector_code_is_not_a_site(foo1):
    g, _ = transform(foo1)
    for m in Model:
        sites = set(enumerate_sites(g, m))
        assert not any(i.dest in sites for _, i in g.instructions() if i.detector)


def test_em2_slice_stops_at_loads():
    f = parse_ir("""\
func @f(%a: addr[i64 x 4], %b: addr[f64 x 4]) -> results(%b)
entry:
  %p = gep %a, 0, 8
  %k = load %p : i64
  %j = add %k, 1
  %q = gep %b, %j, 8
  ret
""")
    assert enumerate_sites(f, Model.EM2) == ["%k", "%j"]


def _foo1_arrays(res):
    return np.frombuffer(res.arrays["%a"])


def test_fault_free_foo1(foo1):
    res = run(foo1, foo1_mem(), {"n": 10})
    a = _foo1_arrays(res)
    assert res.completed and res.detect_count == 0
    assert [a[2 * i - 2] for i in range(1, 10)] == [float(i) for i in range(1, 10)]


def test_determinism(foo1):
    fault = FaultSpec(Model.EM2, 7, 3)
    r1 = run(foo1, foo1_mem(), {"n": 10}, fault=fault, budget=1000)
    r2 = run(foo1, foo1_mem(), {"n": 10}, fault=fault, budget=1000)
    assert r1 == r2


def test_run_does_not_touch_caller_memory(foo1):
    mem = foo1_mem()
    before = mem.snapshot(["%a"])
    run(foo1, mem, {"n": 10})
    assert mem.snapshot(["%a"]) == before


def test_em1_flip_changes_only_injected_instance_in_native(foo1):
    clean = run(foo1, foo1_mem(), {"n": 10}, trace=True)
    bad = run(foo1, foo1_mem(), {"n": 10}, trace=True, fault=FaultSpec(Model.EM1, 2, 3))
    addrs = lambda r: [v for _, n, _, v in r.trace if n == "%addr"]  # noqa: E731
    diff = [x ^ y for x, y in zip(addrs(clean), addrs(bad))]
    assert diff == [0, 8] + [0] * 7


def test_em1_flip_propagates_in_transformed(foo1):
    g, _ = transform(foo1)
    clean = run(g, foo1_mem(), {"n": 10}, trace=True)
    # bit 6 is set in the 5th address (offset 64), so the flip moves the chain down
    bad = run(g, foo1_mem(), {"n": 10}, trace=True, fault=FaultSpec(Model.EM1, 5, 6))
    addrs = lambda r: [v for _, n, _, v in r.trace if n == "%addr"]  # noqa: E731
    delta = [y - x for x, y in zip(addrs(clean), addrs(bad))]
    assert delta == [0] * 4 + [-64] * 5
    assert bad.completed and bad.detect_count == 1
    out = classify(clean, bad)
    assert out.kind is OutcomeKind.SDC and out.detected


def test_budget_exhaustion_is_hang():
    f = parse_ir("func @f(%n: i64) -> results()\nentry:\n  br loop\nloop:\n  br loop\n")
    res = run(f, MemoryImage.layout([]), {"n": 0}, budget=50)
    assert res.status is Status.HANG and res.dic <= 50


def test_division_by_zero_crashes():
    f = parse_ir("func @f(%n: i64) -> results()\nentry:\n  %x = div 1, %n\n  ret\n")
    assert run(f, MemoryImage.layout([]), {"n": 0}).reason == "integer division by zero"


def test_float_division_by_zero_is_ieee():
    f = parse_ir("func @f(%b: addr[f64 x 3], %n: i64) -> results(%b)\nentry:\n"
                 "  %z = cast %n : f64\n  %x = fdiv 1.0, %z\n  %y = fdiv -1.0, %z\n  %w = fdiv %z, %z\n"
                 "  %p = gep %b, 0, 8\n  store %x, %p\n  %q = gep %b, 1, 8\n  store %y, %q\n"
                 "  %r = gep %b, 2, 8\n  store %w, %r\n  ret\n")
    res = run(f, MemoryImage.layout([ArraySpec("%b", 3)]), {"n": 0})
    x, y, w = np.frombuffer(res.arrays["%b"])
    assert x == math.inf and y == -math.inf and math.isnan(w)


@pytest.mark.parametrize("args,msg", [
    ({}, "missing argument"),
    ({"n": 1.5}, "expects an i64"),
    ({"n": 1, "m": 2}, "unknown arguments"),
    ({"n": 2**63}, "expects an i64"),
])
def test_argument_errors(foo1, args, msg):
    with pytest.raises(ConfigError, match=msg):
        run(foo1, foo1_mem(), args)


def test_missing_region(foo1):
    with pytest.raises(ConfigError, match="no memory region"):
        run(foo1, MemoryImage.layout([]), {"n": 1})


def test_bad_budget(foo1):
    with pytest.raises(ConfigError):
        run(foo1, foo1_mem(), {"n": 1}, budget=0)


def test_fault_spec_parse_and_bounds():
    assert FaultSpec.parse("em2:4:63") == FaultSpec(Model.EM2, 4, 63)
    with pytest.raises(ValueError):
        FaultSpec(Model.EM1, 0, 1)
    with pytest.raises(ValueError):
        FaultSpec(Model.EM1, 1, 64)


def _res(status=Status.COMPLETED, arrays=None, det=0):
    return ExecResult(status, "", arrays or {"%a": b"\0" * 8}, 10, det, {})


def test_classify():
    clean = _res()
    assert classify(clean, _res()).kind is OutcomeKind.BENIGN
    assert classify(clean, _res(arrays={"%a": b"\1" + b"\0" * 7})).kind is OutcomeKind.SDC
    crash = classify(clean, _res(Status.CRASH, det=0))
    assert crash.kind is OutcomeKind.CRASH and not crash.detected
    assert classify(clean, _res(Status.HANG)).kind is OutcomeKind.HANG
    assert classify(clean, _res(det=2)).detected
    with pytest.raises(ConfigError):
        classify(_res(Status.CRASH), _res())


def test_trace_csv(foo1):
    res = run(foo1, foo1_mem(), {"n": 3}, trace=True)
    buf = io.StringIO()
    write_trace_csv(res.trace, buf)
    lines = buf.getvalue().splitlines()
    assert lines[0] == "step,instruction,opcode,value"
    assert lines[1] == "0,%i,phi,0x0000000000000001"
    # three header visits (phi, icmp) and two body passes (mul, sub, gep, cast, add)
    assert len(lines) == 1 + 3 * 2 + 2 * 5


# -- integer semantics against exact rational arithmetic -------------------

INT_FN = parse_ir("""\
func @f(%o: addr[i64 x 5], %x: i64, %y: i64) -> results(%o)
entry:
  %s = add %x, %y
  %d = sub %x, %y
  %m = mul %x, %y
  %q = div %x, %y
  %r = rem %x, %y
  %p0 = gep %o, 0, 8
  store %s, %p0
  %p1 = gep %o, 1, 8
  store %d, %p1
  %p2 = gep %o, 2, 8
  store %m, %p2
  %p3 = gep %o, 3, 8
  store %q, %p3
  %p4 = gep %o, 4, 8
  store %r, %p4
  ret
""")


def wrap(v):
    return (v + 2**63) % 2**64 - 2**63


@settings(max_examples=500, deadline=None)
@given(i64, i64)
def test_integer_ops_wrap_and_truncate(x, y):
    assume(y != 0 and not (x == -(2**63) and y == -1))
    res = run(INT_FN, MemoryImage.layout([ArraySpec("%o", 5, "i64")]), {"x": x, "y": y})
    got = np.frombuffer(res.arrays["%o"], "<i8").tolist()
    q = math.trunc(Fraction(x, y))
    assert got == [wrap(x + y), wrap(x - y), wrap(x * y), q, x - y * q]


@settings(max_examples=300, deadline=None)
@given(i64, st.integers(0, 63))
def test_signed_flip_matches_bit_pattern(v, bit):
    raw = np.array([v], "<i8").view("<u8")[0]
    flipped = np.array([raw ^ np.uint64(1 << bit)], "<u8").view("<i8")[0]
    assert flip_signed(v, bit) == int(flipped)
