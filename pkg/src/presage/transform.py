"""Relative-base address (RBA) rewrite of structured address computations.

Every ``gep`` on an array parameter is rewritten so that its address is the
previous same-base address plus a scaled relative index. Across blocks the
running address and its absolute index travel through a pair of phis per
(block, base); at every exit block a detector recomputes the last address
from the immutable base and compares.

The pipeline is::

    facts  = analyze(f)
    chains = create_inter_block_chains(f, facts)
    update_inter_block_chains(f, chains, facts, Pass.FIRST)
    update_inter_block_chains(f, chains, facts, Pass.SECOND)
    report = create_intra_block_chains(f, chains, facts)
    insert_detectors(f, chains, facts)

:func:`transform` runs it on a copy and cleans up trivial phis.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

from .cfg import CfgFacts, analyze
from .ir import Function, Instr, Operand, ValueType, validate

MASK64 = (1 << 64) - 1


def fba_address(base: int, size: int, index: int) -> int:
    """Fixed-base address ``base + size * index`` in 64-bit arithmetic."""
    return (base + size * index) & MASK64


def rba_address(rel_base: int, size: int, index: int, rel_index_of_base: int) -> int:
    """Address of element ``index`` from the already computed address of element
    ``rel_index_of_base``."""
    return (rel_base + size * (index - rel_index_of_base)) & MASK64


class TransformError(Exception):
    pass


class Pass(enum.Enum):
    FIRST = 1
    SECOND = 2


@dataclass
class ChainEntry:
    """Running chain state for one base at the top of one block."""

    addr: Operand
    idx: Operand
    addr_phi: Instr | None = None
    idx_phi: Instr | None = None

    def set_slot(self, pred: str, addr: Operand, idx: Operand) -> None:
        for phi, val in ((self.addr_phi, addr), (self.idx_phi, idx)):
            phi.incoming = [(val if lbl == pred else v, lbl) for v, lbl in phi.incoming]

    def slot_filled(self, pred: str) -> bool:
        return all(
            v is not None
            for phi in (self.addr_phi, self.idx_phi)
            for v, lbl in phi.incoming
            if lbl == pred
        )


class PhiChainMap(dict):
    """(block, base) -> :class:`ChainEntry`; entry-block entries are seeds ``(base, 0)``.

    ``sizes`` holds the element size per base and ``out_state`` the chain
    state (address, absolute index) at the end of each (block, base) once the
    intra-block chains exist.
    """

    def __init__(self):
        super().__init__()
        self.sizes: dict[str, int] = {}
        self.out_state: dict[tuple[str, str], tuple[Operand, Operand]] = {}

    def phis(self) -> list[Instr]:
        out = []
        for e in self.values():
            if e.addr_phi is not None:
                out += [e.addr_phi, e.idx_phi]
        return out


@dataclass
class BaseReport:
    chained: int = 0
    phis: int = 0
    detectors: int = 0


@dataclass
class TransformReport:
    bases: dict[str, BaseReport] = field(default_factory=dict)
    # derived base value -> number of geps left in fixed-base form
    skipped: dict[str, int] = field(default_factory=dict)
    total_geps: int = 0

    @property
    def chained(self) -> int:
        return sum(r.chained for r in self.bases.values())

    @property
    def skipped_total(self) -> int:
        return sum(self.skipped.values())

    def to_json(self) -> dict:
        return {
            "total_geps": self.total_geps,
            "chained": self.chained,
            "skipped": self.skipped_total,
            "bases": {
                b: {"chained": r.chained, "phis": r.phis, "detectors": r.detectors}
                for b, r in self.bases.items()
            },
            "skipped_by_base": dict(self.skipped),
        }


class _Names:
    def __init__(self, f: Function):
        self.used = {p.name for p in f.params}
        self.used.update(ins.dest for _, ins in f.instructions() if ins.dest)

    def fresh(self, hint: str) -> str:
        name, n = hint, 1
        while name in self.used:
            n += 1
            name = f"{hint}.{n}"
        self.used.add(name)
        return name


def _chained_bases(f: Function, facts: CfgFacts) -> list[str]:
    # bases without a single gep would only carry dead phis
    return [b for b in facts.bases if any(base == b for _, base in facts.geps)]


def _gep_index(f: Function, block: str, dest: str) -> Operand:
    for ins in f.block(block).instrs:
        if ins.dest == dest:
            return ins.args[1]
    raise KeyError(dest)


def create_inter_block_chains(f: Function, facts: CfgFacts) -> PhiChainMap:
    """Insert an address phi and an index phi per (block, base), one slot per
    incoming edge, filling slots whose predecessor holds a same-base gep."""
    names = _Names(f)
    chains = PhiChainMap()
    bases = _chained_bases(f, facts)
    entry = f.entry.label
    for _, ins in f.instructions():
        if ins.op == "gep" and ins.args[0] in bases:
            chains.sizes.setdefault(ins.args[0], ins.size)
    for lbl in facts.bfs_order:
        block = f.block(lbl)
        preds = facts.preds[lbl]
        insert_at = len(block.phis())
        for base in bases:
            if lbl == entry:
                chains[lbl, base] = ChainEntry(base, 0)
                continue
            stem = f"{base}.{lbl}"
            aphi = Instr("phi", names.fresh(f"{stem}.addr"), ty=ValueType.ADDR,
                         incoming=[(None, p) for p in preds])
            iphi = Instr("phi", names.fresh(f"{stem}.idx"), ty=ValueType.I64,
                         incoming=[(None, p) for p in preds])
            block.instrs[insert_at:insert_at] = [aphi, iphi]
            insert_at += 2
            entry_ = ChainEntry(aphi.dest, iphi.dest, aphi, iphi)
            chains[lbl, base] = entry_
            for p in preds:
                if facts.has_gep(p, base):
                    g = facts.last_gep(p, base)
                    entry_.set_slot(p, g, _gep_index(f, p, g))
    return chains


def update_inter_block_chains(f: Function, chains: PhiChainMap, facts: CfgFacts, pass_: Pass) -> None:
    """Forward the chain through pass-through predecessors: forward edges in
    the first pass, back edges in the second."""
    bases = _chained_bases(f, facts)
    for lbl in facts.bfs_order:
        for p in facts.preds[lbl]:
            back = facts.is_back_edge(p, lbl)
            for base in bases:
                s = not facts.has_gep(p, base) and (p, base) in chains
                s1 = s and not back and pass_ is Pass.FIRST
                s2 = s and back and pass_ is Pass.SECOND
                if s1 or s2:
                    src = chains[p, base]
                    chains[lbl, base].set_slot(p, src.addr, src.idx)
    if pass_ is Pass.SECOND:
        for (lbl, base), e in chains.items():
            if e.addr_phi is None:
                continue
            for p in facts.preds[lbl]:
                if not e.slot_filled(p):
                    raise TransformError(f"phi slot for edge {p}->{lbl} on {base} left unset")


def create_intra_block_chains(f: Function, chains: PhiChainMap, facts: CfgFacts) -> TransformReport:
    """Rewrite each chained gep as ``gep <previous address>, id - pid``."""
    names = _Names(f)
    bases = _chained_bases(f, facts)
    report = TransformReport(bases={b: BaseReport() for b in bases})
    base_set = set(facts.bases)
    for _, ins in f.instructions():
        if ins.op == "gep" and not ins.detector:
            report.total_geps += 1
            if ins.args[0] not in base_set:
                report.skipped[ins.args[0]] = report.skipped.get(ins.args[0], 0) + 1
    for lbl in facts.bfs_order:
        block = f.block(lbl)
        for base in bases:
            entry = chains[lbl, base]
            rel, pid = entry.addr, entry.idx
            for dest in facts.geps.get((lbl, base), []):
                pos = next(n for n, ins in enumerate(block.instrs) if ins.dest == dest)
                old = block.instrs[pos]
                idx = old.args[1]
                rid = Instr("sub", names.fresh(f"{dest}.rid"), [idx, pid])
                # the new gep keeps the old name, which redirects every use to it
                new = Instr("gep", dest, [rel, rid.dest], size=old.size)
                block.instrs[pos:pos + 1] = [rid, new]
                report.bases[base].chained += 1
                rel, pid = new.dest, idx
            chains.out_state[lbl, base] = (rel, pid)

    return report


def insert_detectors(f: Function, chains: PhiChainMap, facts: CfgFacts, report: TransformReport | None = None) -> None:
    """At each exit, compare the chained address with ``gep base, pid``; a
    mismatch bumps the detection counter."""
    names = _Names(f)
    bases = _chained_bases(f, facts)
    for lbl in facts.exit_blocks:
        block = f.block(lbl)
        code: list[Instr] = []
        for base in bases:
            rel, pid = chains.out_state[lbl, base]
            size = chains.sizes[base]
            stem = f"{base}.{lbl}"
            rid = Instr("sub", names.fresh(f"{stem}.drid"), [pid, pid], detector=True)
            obs = Instr("gep", names.fresh(f"{stem}.obs"), [rel, rid.dest], size=size, detector=True)
            dup = Instr("gep", names.fresh(f"{stem}.dup"), [base, pid], size=size, detector=True)
            ne = Instr("icmp", names.fresh(f"{stem}.mismatch"), [obs.dest, dup.dest], pred="ne", detector=True)
            code += [rid, obs, dup, ne, Instr("detect", args=[ne.dest], detector=True)]
            if report is not None:
                report.bases[base].detectors += 1
        block.instrs[-1:-1] = code


def _replace_everywhere(f: Function, old: str, new: Operand) -> None:
    for _, ins in f.instructions():
        ins.replace_uses(old, new)


def simplify_phis(f: Function, inserted: list[Instr]) -> None:
    """Fold inserted phis whose incoming values are all one value, then drop
    inserted phis nothing depends on."""
    inserted_ids = {id(p) for p in inserted}
    changed = True
    while changed:
        changed = False
        for b in f.blocks:
            for phi in list(b.phis()):
                if id(phi) not in inserted_ids:
                    continue
                vals = {(type(v), v) for v, _ in phi.incoming if v != phi.dest}
                if len(vals) == 1:
                    (_, v), = vals
                    b.instrs.remove(phi)
                    _replace_everywhere(f, phi.dest, v)
                    changed = True

    live: set[str] = set()
    phi_of: dict[str, Instr] = {}
    for _, ins in f.instructions():
        if id(ins) in inserted_ids:
            phi_of[ins.dest] = ins
    work = [v for _, ins in f.instructions() if id(ins) not in inserted_ids for v in ins.uses()]
    while work:
        v = work.pop()
        if v in live:
            continue
        live.add(v)
        if v in phi_of:
            work.extend(phi_of[v].uses())
    for b in f.blocks:
        b.instrs = [i for i in b.instrs if id(i) not in inserted_ids or i.dest in live]


def transform(f: Function, detectors: bool = True) -> tuple[Function, TransformReport]:
    """Return an RBA-chained copy of ``f`` (``f`` itself is left untouched)."""
    diags = validate(f)
    if diags:
        raise TransformError("input does not validate: " + "; ".join(map(str, diags)))
    g = f.copy()
    facts = analyze(g)
    if facts.diagnostics:
        raise TransformError("; ".join(map(str, facts.diagnostics)))

    chains = create_inter_block_chains(g, facts)
    update_inter_block_chains(g, chains, facts, Pass.FIRST)
    update_inter_block_chains(g, chains, facts, Pass.SECOND)
    report = create_intra_block_chains(g, chains, facts)
    if detectors:
        insert_detectors(g, chains, facts, report)
    simplify_phis(g, chains.phis())

    remaining = {id(i) for _, i in g.instructions()}
    for (_, base), e in chains.items():
        if e.addr_phi is not None:
            report.bases[base].phis += (id(e.addr_phi) in remaining) + (id(e.idx_phi) in remaining)

    diags = validate(g)
    if diags:
        raise TransformError("transformed function does not validate: " + "; ".join(map(str, diags)))
    return g, report
