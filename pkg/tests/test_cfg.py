from graphlib import CycleError, TopologicalSorter

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from presage.cfg import analyze, back_edges, bfs_order, same_class
from presage.ir import Block, Function, Instr, Param, ValueType, parse_ir
from presage.ir.validate import dominators, reachable
from presage.kernels import KERNELS, build

HEADER = "func @f(%a: addr[f64 x 8], %b: addr[f64 x 8], %n: i64) -> results(%a)\n"

DIAMOND = HEADER + """\
entry:
  %c = icmp lt %n, 3
  condbr %c, L, R
L:
  br join
R:
  br join
join:
  ret
"""


def test_diamond():
    facts = analyze(parse_ir(DIAMOND))
    assert sorted(facts.preds["join"]) == ["L", "R"]
    assert facts.back_edges == set()
    assert facts.bfs_order == ["entry", "L", "R", "join"]
    assert facts.exit_blocks == ["join"]


def test_single_loop(foo1):
    facts = analyze(foo1)
    assert facts.back_edges == {("bb2", "bb1")}
    assert facts.is_back_edge("bb2", "bb1") and not facts.is_back_edge("bb0", "bb1")


def test_foo1_facts(foo1):
    facts = analyze(foo1)
    assert facts.bases == ["%a"]
    assert facts.exit_blocks == ["bb3"]
    assert facts.last_gep("bb2", "%a") == "%addr"
    assert facts.last_gep("bb1", "%a") is None
    assert facts.diagnostics == []


def test_last_gep_is_lexically_last():
    f = parse_ir(HEADER + "entry:\n  %p = gep %a, 1, 8\n  %q = gep %a, 2, 8\n  %r = gep %b, 0, 8\n  ret\n")
    facts = analyze(f)
    assert facts.last_gep("entry", "%a") == "%q"
    assert facts.last_gep("entry", "%b") == "%r"


def test_same_class():
    f = parse_ir(HEADER + "entry:\n  %p = gep %a, 1, 8\n  %q = gep %a, 2, 8\n"
                 "  %r = gep %b, 0, 8\n  %s = gep %p, 1, 8\n  ret\n")
    p, q, r, s = f.entry.instrs[:4]
    assert same_class(p, q)
    assert not same_class(p, r)
    assert not same_class(p, s)
    assert "%p" not in analyze(f).bases


def test_derived_base_excluded_on_fdtd():
    facts = analyze(build("fdtd2d-mini"))
    assert facts.bases == ["%ex", "%ey", "%hz", "%fict"]
    assert not any(base not in facts.bases for _, base in facts.geps)


def test_unreachable_block_reported():
    f = parse_ir(DIAMOND)
    f.blocks.append(Block("dead", [Instr("ret")]))
    facts = analyze(f)
    assert [d.code for d in facts.diagnostics] == ["UNREACHABLE_BLOCK"]
    assert "dead" not in facts.bfs_order


def test_irreducible_rejected():
    text = HEADER + """\
entry:
  %c = icmp lt %n, 3
  condbr %c, X, Y
X:
  %d = icmp lt %n, 4
  condbr %d, Y, out
Y:
  %e = icmp lt %n, 5
  condbr %e, X, out
out:
  ret
"""
    facts = analyze(parse_ir(text))
    assert "IRREDUCIBLE_CFG" in [d.code for d in facts.diagnostics]


def test_to_json_lists_edges():
    doc = analyze(parse_ir(DIAMOND)).to_json()
    assert ["entry", "L"] in doc["edges"] and doc["back_edges"] == []


def _acyclic_without(f, backs):
    ts = TopologicalSorter()
    live = set(reachable(f))
    for b in f.blocks:
        if b.label in live:
            ts.add(b.label)
            for s in b.successors():
                if (b.label, s) not in backs:
                    ts.add(s, b.label)
    try:
        list(ts.static_order())
        return True
    except CycleError:
        return False


@pytest.mark.parametrize("name", list(KERNELS))
def test_corpus_edge_partition_and_bfs(name):
    f = build(name)
    facts = analyze(f)
    assert facts.diagnostics == []
    assert _acyclic_without(f, facts.back_edges)
    pos = {b: n for n, b in enumerate(facts.bfs_order)}
    for b, preds in facts.preds.items():
        for p in preds:
            if (p, b) not in facts.back_edges:
                assert pos[p] < pos[b]
    dom = dominators(f)
    for src, dst in facts.back_edges:
        assert dst in dom[src]


@st.composite
def cfgs(draw):
    n = draw(st.integers(2, 9))
    labels = [f"b{k}" for k in range(n)]
    blocks = []
    for k, lbl in enumerate(labels):
        kind = draw(st.sampled_from(["br", "condbr", "ret"]))
        targets = labels[1:]  # nothing may branch to the entry
        if kind == "ret" or not targets:
            blocks.append(Block(lbl, [Instr("ret")]))
        elif kind == "br" or len(targets) < 2:
            blocks.append(Block(lbl, [Instr("br", targets=[draw(st.sampled_from(targets))])]))
        else:
            t = draw(st.lists(st.sampled_from(targets), min_size=2, max_size=2, unique=True))
            blocks.append(Block(lbl, [Instr("condbr", args=["%n"], targets=t)]))
    return Function("g", [Param("%n", ValueType.I64)], blocks, [])


@settings(max_examples=300, deadline=None)
@given(cfgs())
def test_back_edge_removal_is_acyclic(f):
    backs = back_edges(f)
    assert _acyclic_without(f, backs)
    for src, dst in backs:
        assert dst in f.block(src).successors()
    order = bfs_order(f)
    assert order[0] == f.entry.label
    assert sorted(order) == sorted(reachable(f))
