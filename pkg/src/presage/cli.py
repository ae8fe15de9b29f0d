"""Command-line entry point: ``presage <command> ...``."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from .campaign import CampaignConfig, CampaignResult, Variant, compare_report, run_campaign
from .cfg import analyze
from .interp import ArraySpec, ConfigError, FaultSpec, MemoryImage, Model, run, write_trace_csv
from .ir import IRError, parse_ir, print_ir
from .kernels import KERNELS, build, gen_inputs, lookup
from .transform import TransformError, transform


class UsageError(Exception):
    pass


def _read_ir(path: str):
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror}") from None
    try:
        return parse_ir(text)
    except IRError as exc:
        raise UsageError(f"{path}: invalid IR\n{exc}") from None


def _write(path: str | None, text: str) -> None:
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        Path(path).write_text(text, encoding="utf-8")


def _kv(items, what: str) -> dict[str, str]:
    out = {}
    for item in items or ():
        name, sep, value = item.partition("=")
        if not sep or not name:
            raise UsageError(f"{what} expects name=value, got {item!r}")
        out[name.lstrip("%")] = value
    return out


# -- commands ----------------------------------------------------------------


def cmd_transform(ns) -> int:
    f = _read_ir(ns.input)
    try:
        g, report = transform(f, detectors=not ns.no_detectors)
    except TransformError as exc:
        print(f"presage: transform failed: {exc}", file=sys.stderr)
        return 1
    _write(ns.output, print_ir(g))
    if ns.report:
        _write(ns.report, json.dumps(report.to_json(), indent=2) + "\n")
    return 0


def cmd_cfg(ns) -> int:
    facts = analyze(_read_ir(ns.input))
    print(json.dumps(facts.to_json(), indent=2))
    return 0 if not facts.diagnostics else 1


def _inputs_for_file(f, ns):
    lengths = {k: int(v) for k, v in _kv(ns.len, "--len").items()}
    rng = np.random.default_rng(ns.seed)
    specs, contents = [], {}
    for p in f.array_params():
        name = p.name.lstrip("%")
        n = lengths.get(name, p.length)
        if n is None:
            raise UsageError(f"array {p.name} has no declared length; pass --len {name}=N")
        specs.append(ArraySpec(p.name, n, p.elem or "f64"))
        contents[p.name] = rng.uniform(-1.0, 1.0, n)
    args = {}
    for name, text in _kv(ns.args, "--args").items():
        try:
            args[name] = int(text)
        except ValueError:
            try:
                args[name] = float(text)
            except ValueError:
                raise UsageError(f"--args {name}: not a number: {text!r}") from None
    return MemoryImage.layout(specs, contents), args


def cmd_run(ns) -> int:
    if (ns.input is None) == (ns.kernel is None):
        raise UsageError("give exactly one of FILE or --kernel")
    if ns.kernel is not None:
        spec = _kernel(ns.kernel)
        f = build(spec.name)
        mem, args = gen_inputs(spec, ns.seed, f)
        args.update({k: int(v) for k, v in _kv(ns.args, "--args").items()})
    else:
        f = _read_ir(ns.input)
        mem, args = _inputs_for_file(f, ns)
    if ns.presage:
        f, _ = transform(f)
    fault = None
    if ns.inject:
        try:
            fault = FaultSpec.parse(ns.inject)
        except ValueError as exc:
            raise UsageError(f"--inject expects em1:k:bit or em2:k:bit ({exc})") from None
    try:
        budget = ns.budget
        if fault is not None and budget is None:
            budget = 10 * run(f, mem, args).dic
        res = run(f, mem, args, budget=budget or 10_000_000, fault=fault, trace=bool(ns.trace))
    except ConfigError as exc:
        raise UsageError(str(exc)) from None
    if ns.trace:
        with open(ns.trace, "w", encoding="utf-8", newline="") as fh:
            write_trace_csv(res.trace, fh)
    doc = {
        "status": res.status.value,
        "reason": res.reason,
        "dic": res.dic,
        "detect_count": res.detect_count,
        "sites": {str(m): n for m, n in res.sites.items()},
        "arrays": {name: np.frombuffer(data, "<f8").tolist() for name, data in res.arrays.items()},
    }
    _write(ns.output, json.dumps(doc, indent=2) + "\n")
    return 0


def _kernel(name: str):
    try:
        return lookup(name)
    except KeyError as exc:
        raise UsageError(exc.args[0]) from None


def cmd_kernels(ns) -> int:
    if ns.show:
        sys.stdout.write(print_ir(build(_kernel(ns.show).name)))
        return 0
    if ns.export:
        out = Path(ns.export)
        out.mkdir(parents=True, exist_ok=True)
        for name in KERNELS:
            (out / f"{name}.pir").write_text(print_ir(build(name)), encoding="utf-8")
        return 0
    rows = []
    for name, spec in KERNELS.items():
        f = build(name)
        rows.append({
            "name": name,
            "category": spec.category,
            "geps": sum(1 for _, i in f.instructions() if i.op == "gep"),
            "derived_bases": spec.has_derived_bases,
            "ranges": {k: list(v) for k, v in spec.ranges.items()},
            "description": spec.description,
        })
    if ns.json:
        print(json.dumps(rows, indent=2))
        return 0
    for r in rows:
        ranges = " ".join(f"{k}={lo}..{hi}" for k, (lo, hi) in r["ranges"].items())
        flag = "derived" if r["derived_bases"] else "chained"
        print(f"{r['name']:<15} {r['category']:<10} {r['geps']:>3} geps  {flag:<8} {ranges:<28} {r['description']}")
    return 0


def cmd_campaign(ns) -> int:
    try:
        cfg = CampaignConfig(ns.kernel, Variant(ns.variant), Model(ns.model), ns.runs, ns.seed,
                             ns.budget_multiplier, ns.output)
    except KeyError as exc:
        raise UsageError(exc.args[0]) from None
    res = run_campaign(cfg, workers=ns.workers)
    if ns.csv:
        with open(ns.csv, "w", encoding="utf-8", newline="") as fh:
            res.write_csv(fh)
    if not ns.output:
        sys.stdout.write(res.dumps())
    else:
        r = res.rates
        print(f"{cfg.kernel} {cfg.set_name}: sdc={r['sdc']:.3f} benign={r['benign']:.3f} "
              f"crash={r['crash']:.3f} hang={r['hang']:.3f} detection={res.detection_rate}",
              file=sys.stderr)
    return 0


def cmd_compare(ns) -> int:
    results = []
    for path in ns.inputs:
        try:
            doc = json.loads(Path(path).read_text(encoding="utf-8"))
            results.append(CampaignResult.from_json(doc))
        except (OSError, ValueError, KeyError) as exc:
            raise UsageError(f"cannot load campaign result {path}: {exc}") from None
    _write(ns.output, json.dumps(compare_report(results), indent=2, sort_keys=True) + "\n")
    return 0


# -- parser ------------------------------------------------------------------


def _positive(text: str) -> int:
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if v < 1:
        raise argparse.ArgumentTypeError("must be at least 1")
    return v


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="presage", description="Address-chain soft-error detection toolkit.")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("transform", help="rewrite geps into relative-base chains")
    p.add_argument("input")
    p.add_argument("-o", "--output")
    p.add_argument("--no-detectors", action="store_true")
    p.add_argument("--report", help="write the transform report as JSON")
    p.set_defaults(func=cmd_transform)

    p = sub.add_parser("cfg", help="print control-flow facts as JSON")
    p.add_argument("input")
    p.add_argument("--dump", action="store_true", help="accepted for compatibility; JSON is always printed")
    p.set_defaults(func=cmd_cfg)

    p = sub.add_parser("run", help="execute a function, optionally with one injected fault")
    p.add_argument("input", nargs="?")
    p.add_argument("--kernel", help="run a corpus kernel on generated inputs instead of a file")
    p.add_argument("--args", nargs="*", metavar="NAME=VALUE")
    p.add_argument("--len", nargs="*", metavar="ARRAY=N", help="array lengths not declared in the header")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--presage", action="store_true", help="transform before running")
    p.add_argument("--inject", metavar="MODEL:K:BIT")
    p.add_argument("--budget", type=_positive)
    p.add_argument("--trace", metavar="CSV")
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("kernels", help="list or export the kernel corpus")
    p.add_argument("--list", action="store_true", help="list kernels (default)")
    p.add_argument("--json", action="store_true")
    p.add_argument("--show", metavar="NAME")
    p.add_argument("--export", metavar="DIR")
    p.set_defaults(func=cmd_kernels)

    p = sub.add_parser("campaign", help="run a fault-injection campaign")
    p.add_argument("--kernel", required=True)
    p.add_argument("--variant", choices=[v.value for v in Variant], default="native")
    p.add_argument("--model", choices=[m.value for m in Model], default="em1")
    p.add_argument("--runs", type=_positive, default=500)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--budget-multiplier", type=_positive, default=10)
    p.add_argument("--workers", type=_positive, default=1)
    p.add_argument("--csv", help="write per-run records")
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_campaign)

    p = sub.add_parser("compare", help="combine campaign results into a comparison table")
    p.add_argument("inputs", nargs="+")
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_compare)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    ns = ap.parse_args(argv)
    try:
        return ns.func(ns)
    except UsageError as exc:
        print(f"presage {ns.command}: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
