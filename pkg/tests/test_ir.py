import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from presage.ir import Block, Function, Instr, IRError, Param, ValueType, parse_ir, print_ir, validate
from presage.kernels import KERNELS, build
from presage.transform import transform

HEADER = "func @f(%a: addr[f64 x 4], %n: i64) -> results(%a)\n"


def codes(text):
    with pytest.raises(IRError) as exc:
        parse_ir(text)
    return exc.value.codes


def test_gep_parses_with_size():
    f = parse_ir(HEADER + "bb0:\n  %p = gep %a, %n, 8\n  ret\n")
    g = f.entry.instrs[0]
    assert (g.op, g.args, g.size) == ("gep", ["%a", "%n"], 8)


def test_foo1_valid_and_round_trips(foo1):
    assert validate(foo1) == []
    assert parse_ir(print_ir(foo1)).structurally_equal(foo1)


def test_print_is_idempotent(foo1):
    text = print_ir(foo1)
    assert print_ir(parse_ir(text)) == text


def test_empty_body_prints_header_entry_ret():
    f = Function("e", [], [Block("entry", [Instr("ret")])], [])
    assert print_ir(f) == "func @e() -> results()\nentry:\n  ret\n"


def test_comments_and_blank_lines_ignored():
    f = parse_ir("; leading\n" + HEADER + "bb0:   ; entry\n\n  ret ; done\n")
    assert len(f.blocks) == 1


def test_multiple_terminators():
    assert "MULTIPLE_TERMINATORS" in codes(HEADER + "bb0:\n  ret\n  ret\n")


def test_missing_terminator():
    assert "MISSING_TERMINATOR" in codes(HEADER + "bb0:\n  %x = add %n, 1\n")


def test_phi_missing_predecessor_entry():
    text = HEADER + (
        "bb0:\n  condbr 1, bb1, bb2\n"
        "bb1:\n  br bb3\n"
        "bb2:\n  br bb3\n"
        "bb3:\n  %x = phi [1, bb1]\n  ret\n"
    )
    assert "PHI_EDGE_MISMATCH" in codes(text)


def test_use_before_def_in_block():
    text = HEADER + "bb0:\n  %x = add %y, 1\n  %y = add %n, 1\n  ret\n"
    assert "SSA_DOMINANCE" in codes(text)


def test_use_not_dominated_across_blocks():
    text = HEADER + (
        "bb0:\n  condbr 1, bb1, bb2\n"
        "bb1:\n  %x = add %n, 1\n  br bb2\n"
        "bb2:\n  %y = add %x, 1\n  ret\n"
    )
    assert "SSA_DOMINANCE" in codes(text)


def test_duplicate_definition():
    assert "DUPLICATE_DEF" in codes(HEADER + "bb0:\n  %x = add %n, 1\n  %x = add %n, 2\n  ret\n")


def test_array_base_redefined():
    assert "PARAM_REDEFINED" in codes(HEADER + "bb0:\n  %a = gep %a, 1, 8\n  ret\n")


def test_scalar_param_redefined():
    assert "DUPLICATE_DEF" in codes(HEADER + "bb0:\n  %n = add %n, 1\n  ret\n")


def test_undefined_value():
    assert "UNDEFINED_VALUE" in codes(HEADER + "bb0:\n  %x = add %zz, 1\n  ret\n")


def test_unknown_block():
    assert "UNKNOWN_BLOCK" in codes(HEADER + "bb0:\n  br nowhere\n")


def test_unreachable_block():
    assert "UNREACHABLE_BLOCK" in codes(HEADER + "bb0:\n  ret\nbb1:\n  ret\n")


def test_entry_with_predecessor():
    assert "ENTRY_HAS_PREDS" in codes(HEADER + "bb0:\n  br bb1\nbb1:\n  br bb0\n")


def test_phi_after_non_phi():
    text = HEADER + "bb0:\n  br bb1\nbb1:\n  %x = add %n, 1\n  %p = phi [0, bb0]\n  ret\n"
    assert "PHI_NOT_LEADING" in codes(text)


def test_address_arithmetic_rejected():
    assert "TYPE_MISMATCH" in codes(HEADER + "bb0:\n  %x = add %a, 8\n  ret\n")


def test_storing_an_address_rejected():
    text = HEADER + "bb0:\n  %p = gep %a, 0, 8\n  store %p, %p\n  ret\n"
    assert "TYPE_MISMATCH" in codes(text)


def test_bad_element_size():
    assert "BAD_ELEM_SIZE" in codes(HEADER + "bb0:\n  %p = gep %a, 0, 4\n  ret\n")


def test_result_must_be_array_param():
    assert "BAD_RESULT" in codes("func @f(%n: i64) -> results(%n)\nbb0:\n  ret\n")


def test_syntax_error_has_position():
    with pytest.raises(IRError) as exc:
        parse_ir(HEADER + "bb0:\n  %x = add %n,, 1\n  ret\n")
    d = exc.value.diagnostics[0]
    assert d.code == "SYNTAX" and d.line == 3 and d.col == 15


def test_unknown_opcode():
    assert "UNKNOWN_OPCODE" in codes(HEADER + "bb0:\n  %x = frob %n\n  ret\n")


def test_empty_text():
    assert "EMPTY_FUNCTION" in codes(HEADER)


@pytest.mark.parametrize("name", list(KERNELS))
def test_corpus_round_trip(name):
    f = build(name)
    g, _ = transform(f)
    for h in (f, g):
        text = print_ir(h)
        assert parse_ir(text).structurally_equal(h)
        assert print_ir(parse_ir(text)) == text


def test_transformed_foo2_has_one_phi_pair_per_header():
    text = print_ir(transform(build("foo1"))[0])
    head = text.split("i.head:\n")[1].split("condbr")[0]
    assert head.count("addr = phi") == 1 and head.count("idx = phi") == 1


def test_copy_is_deep(foo1):
    g = foo1.copy()
    g.blocks[0].instrs.clear()
    assert foo1.blocks[0].instrs


# -- property: random straight-line programs round-trip ------------------

floats = st.floats(allow_nan=False, width=64) | st.sampled_from([math.inf, -math.inf, -0.0])
ints = st.integers(-(2**63), 2**63 - 1)


@st.composite
def programs(draw):
    ivals, fvals, instrs = ["%n"], [], []
    for k in range(draw(st.integers(1, 25))):
        dest = f"%v{k}"
        kind = draw(st.sampled_from(["int", "float", "cast", "cmp", "gep"]))
        pick_i = st.sampled_from(ivals) | ints
        if kind == "int":
            op = draw(st.sampled_from(["add", "sub", "mul", "const"]))
            args = [draw(ints)] if op == "const" else [draw(pick_i), draw(pick_i)]
            instrs.append(Instr(op, dest, args, ty=ValueType.I64 if op == "const" else None))
            ivals.append(dest)
        elif kind == "float" and fvals:
            op = draw(st.sampled_from(["fadd", "fsub", "fmul", "fdiv"]))
            pick_f = st.sampled_from(fvals) | floats
            instrs.append(Instr(op, dest, [draw(pick_f), draw(pick_f)]))
            fvals.append(dest)
        elif kind == "cmp":
            pred = draw(st.sampled_from(["eq", "ne", "lt", "le", "gt", "ge"]))
            instrs.append(Instr("icmp", dest, [draw(pick_i), draw(pick_i)], pred=pred))
            ivals.append(dest)
        elif kind == "gep":
            instrs.append(Instr("gep", dest, ["%a", draw(pick_i)], size=8))
        else:
            instrs.append(Instr("cast", dest, [draw(pick_i)], ty=ValueType.F64))
            fvals.append(dest)
    instrs.append(Instr("ret"))
    params = [Param("%a", ValueType.ADDR, "f64", 4), Param("%n", ValueType.I64)]
    return Function("r", params, [Block("bb0", instrs)], ["%a"])


@settings(max_examples=200, deadline=None)
@given(programs())
def test_round_trip_property(f):
    assert validate(f) == []
    text = print_ir(f)
    g = parse_ir(text)
    assert g.structurally_equal(f)
    assert print_ir(g) == text
