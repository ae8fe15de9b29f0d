from __future__ import annotations

import re

from .core import (
    BINOPS, ELEMENT_TYPES, FBINOPS, ICMP_PREDS, Block, Diagnostic, Function,
    Instr, IRError, Operand, Param, ValueType,
)

_TOKEN = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<arrow>->)
  | (?P<num>-?(?:\d+\.\d*(?:[eE][-+]?\d+)?|\d+[eE][-+]?\d+|\d+|inf\b|nan\b))
  | (?P<value>%[A-Za-z0-9_.]+)
  | (?P<global>@[A-Za-z0-9_.]+)
  | (?P<bang>![A-Za-z_]+)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_.]*)
  | (?P<punct>[=,:\[\]()])
    """,
    re.VERBOSE,
)

_TYPES = {t.value: t for t in ValueType}


class _Line:
    def __init__(self, text: str, lineno: int):
        self.lineno = lineno
        self.toks: list[tuple[str, str, int]] = []
        pos = 0
        while pos < len(text):
            m = _TOKEN.match(text, pos)
            if m is None:
                raise _syntax(f"unexpected character {text[pos]!r}", lineno, pos + 1)
            kind = m.lastgroup
            if kind != "ws":
                self.toks.append((kind, m.group(), pos + 1))
            pos = m.end()
        self.i = 0

    def peek(self) -> tuple[str, str, int] | None:
        return self.toks[self.i] if self.i < len(self.toks) else None

    def col(self) -> int:
        tok = self.peek()
        if tok is not None:
            return tok[2]
        return self.toks[-1][2] + len(self.toks[-1][1]) if self.toks else 1

    def take(self, kind: str | None = None, text: str | None = None) -> str:
        tok = self.peek()
        if tok is None or (kind and tok[0] != kind) or (text and tok[1] != text):
            want = text or kind or "token"
            got = tok[1] if tok else "end of line"
            raise _syntax(f"expected {want}, got {got!r}", self.lineno, self.col())
        self.i += 1
        return tok[1]

    def accept(self, text: str) -> bool:
        tok = self.peek()
        if tok is not None and tok[1] == text:
            self.i += 1
            return True
        return False

    def done(self) -> bool:
        return self.i >= len(self.toks)

    def expect_end(self) -> None:
        if not self.done():
            raise _syntax(f"trailing input {self.peek()[1]!r}", self.lineno, self.col())


def _syntax(msg: str, line: int, col: int) -> IRError:
    return IRError([Diagnostic("SYNTAX", msg, line=line, col=col)])


def _number(text: str) -> Operand:
    if re.fullmatch(r"-?\d+", text):
        return int(text)
    return float(text)


def _operand(ln: _Line) -> Operand:
    tok = ln.peek()
    if tok is not None and tok[0] == "num":
        ln.i += 1
        return _number(tok[1])
    if tok is not None and tok[0] == "ident" and tok[1] in ("inf", "nan"):
        ln.i += 1
        return float(tok[1])
    return ln.take("value")


def _type(ln: _Line) -> ValueType:
    col = ln.col()
    name = ln.take("ident")
    if name not in _TYPES:
        raise _syntax(f"unknown type {name!r}", ln.lineno, col)
    return _TYPES[name]


def _header(ln: _Line) -> Function:
    ln.take("ident", "func")
    name = ln.take("global")[1:]
    ln.take("punct", "(")
    params: list[Param] = []
    while not ln.accept(")"):
        if params:
            ln.take("punct", ",")
        pname = ln.take("value")
        ln.take("punct", ":")
        col = ln.col()
        tname = ln.take("ident")
        if tname == "addr":
            ln.take("punct", "[")
            ecol = ln.col()
            elem = ln.take("ident")
            if elem not in ELEMENT_TYPES:
                raise _syntax(f"unknown element type {elem!r}", ln.lineno, ecol)
            length = None
            if ln.accept("x"):
                length = int(ln.take("num"))
            ln.take("punct", "]")
            params.append(Param(pname, ValueType.ADDR, elem, length))
        elif tname in ("i64", "f64"):
            params.append(Param(pname, _TYPES[tname]))
        else:
            raise _syntax(f"unknown parameter type {tname!r}", ln.lineno, col)
    ln.take("arrow")
    ln.take("ident", "results")
    ln.take("punct", "(")
    results: list[str] = []
    while not ln.accept(")"):
        if results:
            ln.take("punct", ",")
        results.append(ln.take("value"))
    ln.expect_end()
    return Function(name, params, [], results)


def _instruction(ln: _Line) -> Instr:
    dest = None
    tok = ln.peek()
    if tok[0] == "value":
        dest = ln.take("value")
        ln.take("punct", "=")
    col = ln.col()
    op = ln.take("ident")
    ins = Instr(op, dest, line=ln.lineno)

    def operands(n: int) -> list[Operand]:
        out = [_operand(ln)]
        for _ in range(n - 1):
            ln.take("punct", ",")
            out.append(_operand(ln))
        return out

    if op in BINOPS or op in FBINOPS:
        ins.args = operands(2)
    elif op == "icmp":
        pcol = ln.col()
        ins.pred = ln.take("ident")
        if ins.pred not in ICMP_PREDS:
            raise _syntax(f"unknown icmp predicate {ins.pred!r}", ln.lineno, pcol)
        ins.args = operands(2)
    elif op == "const":
        ins.args = operands(1)
        if isinstance(ins.args[0], str):
            raise _syntax("const expects a literal", ln.lineno, col)
        ins.ty = ValueType.F64 if isinstance(ins.args[0], float) else ValueType.I64
    elif op == "gep":
        ins.args = operands(2)
        ln.take("punct", ",")
        scol = ln.col()
        size = _number(ln.take("num"))
        if not isinstance(size, int):
            raise _syntax("gep element size must be an integer", ln.lineno, scol)
        ins.size = size
    elif op in ("load", "cast"):
        ins.args = operands(1)
        ln.take("punct", ":")
        ins.ty = _type(ln)
    elif op == "store":
        ins.args = operands(2)
    elif op in ("detect",):
        ins.args = operands(1)
    elif op == "phi":
        while True:
            ln.take("punct", "[")
            v = _operand(ln)
            ln.take("punct", ",")
            lbl = ln.take("ident")
            ln.take("punct", "]")
            ins.incoming.append((v, lbl))
            if not ln.accept(","):
                break
        if ln.accept(":"):
            ins.ty = _type(ln)
    elif op == "br":
        ins.targets = [ln.take("ident")]
    elif op == "condbr":
        ins.args = operands(1)
        ln.take("punct", ",")
        ins.targets.append(ln.take("ident"))
        ln.take("punct", ",")
        ins.targets.append(ln.take("ident"))
    elif op == "ret":
        pass
    else:
        raise IRError([Diagnostic("UNKNOWN_OPCODE", f"unknown opcode {op!r}", line=ln.lineno, col=col)])
    tok = ln.peek()
    if tok is not None and tok[0] == "bang":
        if tok[1] != "!det":
            raise _syntax(f"unknown marker {tok[1]!r}", ln.lineno, tok[2])
        ln.i += 1
        ins.detector = True
    ln.expect_end()
    has_dest = op not in ("store", "detect", "br", "condbr", "ret")
    if has_dest and dest is None:
        raise _syntax(f"{op} needs a destination", ln.lineno, col)
    if not has_dest and dest is not None:
        raise _syntax(f"{op} has no destination", ln.lineno, col)
    return ins


def parse_unchecked(text: str) -> Function:
    """Parse without structural validation (syntax errors still raise)."""
    func: Function | None = None
    current: Block | None = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split(";", 1)[0]
        if not line.strip():
            continue
        ln = _Line(line, lineno)
        first = ln.peek()
        if func is None:
            if first[1] != "func":
                raise _syntax("expected function header", lineno, first[2])
            func = _header(ln)
            continue
        if first[1] == "func":
            raise _syntax("only one function per file", lineno, first[2])
        if first[0] == "ident" and len(ln.toks) == 2 and ln.toks[1][1] == ":":
            current = Block(first[1])
            func.blocks.append(current)
            continue
        if current is None:
            raise _syntax("instruction outside of a block", lineno, first[2])
        current.instrs.append(_instruction(ln))
    if func is None:
        raise _syntax("empty input", 1, 1)
    types = func.value_types()
    for _, ins in func.instructions():
        if ins.op == "phi" and ins.ty is None:
            ins.ty = types.get(ins.dest)
    return func


def parse_ir(text: str) -> Function:
    """Parse and validate; raises :class:`IRError` carrying every diagnostic."""
    from .validate import validate

    func = parse_unchecked(text)
    diags = validate(func)
    if diags:
        raise IRError(diags)
    return func
