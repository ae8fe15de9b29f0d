"""Control-flow facts consumed by the chaining transform."""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field

from .ir import Diagnostic, Function, Instr
from .ir.validate import dominators, reachable


@dataclass
class CfgFacts:
    bfs_order: list[str]
    preds: dict[str, list[str]]
    succs: dict[str, list[str]]
    back_edges: set[tuple[str, str]]
    exit_blocks: list[str]
    bases: list[str]
    # (block, base) -> dests of the geps in that block using the base, lexical order
    geps: dict[tuple[str, str], list[str]] = field(default_factory=dict)
    diagnostics: list[Diagnostic] = field(default_factory=list)

    def last_gep(self, block: str, base: str) -> str | None:
        found = self.geps.get((block, base))
        return found[-1] if found else None

    def has_gep(self, block: str, base: str) -> bool:
        return bool(self.geps.get((block, base)))

    def is_back_edge(self, src: str, dst: str) -> bool:
        return (src, dst) in self.back_edges

    def edge(self, src: str, dst: str) -> bool:
        return dst in self.succs.get(src, [])

    def to_json(self) -> dict:
        return {
            "bfs_order": self.bfs_order,
            "edges": [[b, s] for b in self.bfs_order for s in self.succs[b]],
            "back_edges": sorted([list(e) for e in self.back_edges]),
            "preds": self.preds,
            "exit_blocks": self.exit_blocks,
            "bases": self.bases,
            "last_gep": {
                f"{blk}:{base}": geps[-1] for (blk, base), geps in sorted(self.geps.items())
            },
            "diagnostics": [str(d) for d in self.diagnostics],
        }


def same_class(g1: Instr, g2: Instr) -> bool:
    """True iff both are geps on the identical base value."""
    return g1.op == "gep" and g2.op == "gep" and g1.args[0] == g2.args[0]


def bfs_order(f: Function) -> list[str]:
    decl = {b.label: n for n, b in enumerate(f.blocks)}
    order = [f.entry.label]
    seen = {f.entry.label}
    queue = deque(order)
    while queue:
        lbl = queue.popleft()
        for s in sorted(f.block(lbl).successors(), key=decl.__getitem__):
            if s not in seen:
                seen.add(s)
                order.append(s)
                queue.append(s)
    return order


def back_edges(f: Function) -> set[tuple[str, str]]:
    """Edges into a block that is on the DFS stack (an ancestor in the spanning tree)."""
    edges: set[tuple[str, str]] = set()
    on_stack: set[str] = set()
    visited: set[str] = set()
    entry = f.entry.label
    visited.add(entry)
    on_stack.add(entry)
    stack = [(entry, iter(f.block(entry).successors()))]
    while stack:
        lbl, it = stack[-1]
        nxt = next(it, None)
        if nxt is None:
            on_stack.discard(lbl)
            stack.pop()
            continue
        if nxt in on_stack:
            edges.add((lbl, nxt))
        elif nxt not in visited:
            visited.add(nxt)
            on_stack.add(nxt)
            stack.append((nxt, iter(f.block(nxt).successors())))
    return edges


def analyze(f: Function) -> CfgFacts:
    diags: list[Diagnostic] = []
    live = set(reachable(f))
    for b in f.blocks:
        if b.label not in live:
            diags.append(Diagnostic("UNREACHABLE_BLOCK", "block is not reachable from entry", b.label))

    preds = f.predecessors()
    succs = {b.label: b.successors() for b in f.blocks}
    backs = back_edges(f)
    dom = dominators(f)
    for src, dst in sorted(backs):
        if dst not in dom.get(src, set()):
            diags.append(Diagnostic(
                "IRREDUCIBLE_CFG", f"retreating edge {src}->{dst} whose target does not dominate its source", src))

    bases = [p.name for p in f.array_params()]
    base_set = set(bases)
    geps: dict[tuple[str, str], list[str]] = {}
    for b in f.blocks:
        for ins in b.instrs:
            if ins.op == "gep" and ins.args[0] in base_set and not ins.detector:
                geps.setdefault((b.label, ins.args[0]), []).append(ins.dest)

    exits = [b.label for b in f.blocks if b.terminator is not None and b.terminator.op == "ret"]
    return CfgFacts(bfs_order(f), preds, succs, backs, exits, bases, geps, diags)
