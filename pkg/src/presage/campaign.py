"""Fault-injection campaigns and the four-set comparison report.

A campaign is a sequence of independent paired runs on one kernel variant
under one error model. Run ``r`` draws everything it needs from a private RNG
stream seeded with ``(seed, r)``, so results do not depend on how runs are
scheduled across workers.
"""

from __future__ import annotations

import csv
import enum
import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .interp import FaultSpec, Model, Program, classify, run
from .kernels import build, gen_inputs, lookup
from .transform import transform

MASK64 = (1 << 64) - 1
OUTCOMES = ("sdc", "benign", "crash", "hang", "no_site")


class Variant(enum.Enum):
    NATIVE = "native"
    PRESAGE = "presage"

    def __str__(self) -> str:
        return self.value


@dataclass(frozen=True)
class CampaignConfig:
    kernel: str
    variant: Variant = Variant.NATIVE
    model: Model = Model.EM1
    runs: int = 500
    seed: int = 0
    budget_multiplier: int = 10
    output: str | None = None

    def __post_init__(self):
        if self.runs < 1:
            raise ValueError("runs must be at least 1")
        if self.budget_multiplier < 1:
            raise ValueError("budget multiplier must be at least 1")
        lookup(self.kernel)  # unknown kernels fail early

    @property
    def set_name(self) -> str:
        return f"{self.variant}/{self.model}"

    def to_json(self) -> dict:
        return {
            "kernel": lookup(self.kernel).name,
            "variant": str(self.variant),
            "model": str(self.model),
            "runs": self.runs,
            "seed": self.seed,
            "budget_multiplier": self.budget_multiplier,
        }


@dataclass(frozen=True)
class RunRecord:
    run: int
    k: int | None
    bit: int | None
    outcome: str
    detected: bool
    sites: int
    dic: int
    faulty_dic: int | None
    clean_detections: int = 0


@dataclass
class CampaignResult:
    config: dict
    counts: dict[str, int]
    detected_sdc: int
    detected_total: int
    fault_free_detections: int
    mean_dic: float
    dic_overhead: float | None = None
    records: list[RunRecord] = field(default_factory=list, repr=False)

    @property
    def denominator(self) -> int:
        """Runs that received a fault; ``no_site`` runs are excluded."""
        return self.config["runs"] - self.counts["no_site"]

    @property
    def rates(self) -> dict[str, float | None]:
        d = self.denominator
        return {k: (self.counts[k] / d if d else None) for k in OUTCOMES if k != "no_site"}

    @property
    def detection_rate(self) -> float | None:
        sdc = self.counts["sdc"]
        return self.detected_sdc / sdc if sdc else None

    def to_json(self) -> dict:
        return {
            "config": self.config,
            "counts": dict(self.counts),
            "rates": self.rates,
            "detected_sdc": self.detected_sdc,
            "detected_total": self.detected_total,
            "detection_rate": self.detection_rate,
            "fault_free_detections": self.fault_free_detections,
            "mean_dic": self.mean_dic,
            "dic_overhead": self.dic_overhead,
        }

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=2, sort_keys=True) + "\n"

    @classmethod
    def from_json(cls, doc: dict) -> CampaignResult:
        return cls(doc["config"], dict(doc["counts"]), doc["detected_sdc"], doc["detected_total"],
                   doc.get("fault_free_detections", 0), doc["mean_dic"], doc.get("dic_overhead"))

    def write_csv(self, fh) -> None:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["run", "k", "bit", "outcome", "detected"])
        for r in self.records:
            w.writerow([r.run, "" if r.k is None else r.k, "" if r.bit is None else r.bit,
                        r.outcome, int(r.detected)])


def prepare(kernel: str, variant: Variant):
    """The function a campaign executes and the program compiled from it."""
    f = build(kernel)
    if variant is Variant.PRESAGE:
        f, _ = transform(f)
    return f, Program(f)


def run_stream(seed: int, r: int) -> np.random.Generator:
    return np.random.default_rng([seed & MASK64, r])


_worker: dict = {}


def _one_run(cfg: CampaignConfig, prog: Program, r: int) -> RunRecord:
    spec = lookup(cfg.kernel)
    rng = run_stream(cfg.seed, r)
    mem, args = gen_inputs(spec, int(rng.integers(0, 2**63)), prog.function)
    clean = run(prog, mem, args)
    if not clean.completed:
        raise RuntimeError(f"run {r}: fault-free execution ended in {clean.status.value} ({clean.reason})")
    n = clean.sites[cfg.model]
    if n == 0:
        return RunRecord(r, None, None, "no_site", False, 0, clean.dic, None, clean.detect_count)
    k = int(rng.integers(1, n + 1))
    bit = int(rng.integers(0, 64))
    faulty = run(prog, mem, args, budget=cfg.budget_multiplier * clean.dic,
                 fault=FaultSpec(cfg.model, k, bit))
    out = classify(clean, faulty)
    return RunRecord(r, k, bit, out.kind.value, out.detected, n, clean.dic, faulty.dic,
                     clean.detect_count)


def _init_worker(cfg: CampaignConfig) -> None:
    _worker["cfg"] = cfg
    _worker["prog"] = prepare(cfg.kernel, cfg.variant)[1]


def _run_chunk(runs: list[int]) -> list[RunRecord]:
    return [_one_run(_worker["cfg"], _worker["prog"], r) for r in runs]


def aggregate(cfg: CampaignConfig, records: list[RunRecord]) -> CampaignResult:
    records = sorted(records, key=lambda x: x.run)
    counts = dict.fromkeys(OUTCOMES, 0)
    for rec in records:
        counts[rec.outcome] += 1
    return CampaignResult(
        config=cfg.to_json(),
        counts=counts,
        detected_sdc=sum(1 for x in records if x.detected and x.outcome == "sdc"),
        detected_total=sum(1 for x in records if x.detected),
        fault_free_detections=sum(1 for x in records if x.clean_detections),
        mean_dic=float(np.mean([x.dic for x in records])),
        records=records,
    )


def run_campaign(cfg: CampaignConfig, workers: int = 1) -> CampaignResult:
    """Run every injection of ``cfg`` and aggregate the outcomes.

    The result is a pure function of ``cfg``; ``workers`` only changes how
    runs are scheduled.
    """
    if workers <= 1:
        prog = prepare(cfg.kernel, cfg.variant)[1]
        records = [_one_run(cfg, prog, r) for r in range(cfg.runs)]
    else:
        chunks = [list(range(i, cfg.runs, workers)) for i in range(workers)]
        with ProcessPoolExecutor(workers, initializer=_init_worker, initargs=(cfg,)) as pool:
            records = [rec for part in pool.map(_run_chunk, chunks) for rec in part]
    result = aggregate(cfg, records)
    if cfg.output:
        with open(cfg.output, "w", encoding="utf-8") as fh:
            fh.write(result.dumps())
    return result


# -- comparison --------------------------------------------------------------

SETS = [(v, m) for v in Variant for m in Model]


def _rate(res: CampaignResult | None, key: str) -> float | None:
    return None if res is None else res.rates[key]


def _delta(a, b):
    return None if a is None or b is None else a - b


def compare_report(results: list[CampaignResult]) -> dict:
    """Per-kernel table over the four (variant, model) sets.

    Missing sets yield nulls rather than an error. The inputs are not
    modified; the dic overhead appears on the presage sets of the table.
    """
    by_kernel: dict[str, dict[str, CampaignResult]] = {}
    for res in results:
        c = res.config
        by_kernel.setdefault(c["kernel"], {})[f"{c['variant']}/{c['model']}"] = res
    doc = {}
    for kernel in sorted(by_kernel):
        sets = by_kernel[kernel]
        native = [sets[f"native/{m}"] for m in Model if f"native/{m}" in sets]
        presage = [sets[f"presage/{m}"] for m in Model if f"presage/{m}" in sets]
        overhead = None
        if native and presage:
            overhead = presage[0].mean_dic / native[0].mean_dic
        entry: dict = {"sets": {}, "models": {}, "dic_overhead": overhead}
        for v, m in SETS:
            name = f"{v}/{m}"
            res = sets.get(name)
            entry["sets"][name] = None if res is None else {
                "runs": res.config["runs"],
                "counts": res.counts,
                "rates": res.rates,
                "detection_rate": res.detection_rate,
                "mean_dic": res.mean_dic,
                "dic_overhead": overhead if v is Variant.PRESAGE else None,
            }
        for m in Model:
            nat, pre = sets.get(f"native/{m}"), sets.get(f"presage/{m}")
            ch = lambda r: None if r is None else (r.rates["crash"] + r.rates["hang"]  # noqa: E731
                                                   if r.rates["crash"] is not None else None)
            entry["models"][str(m)] = {
                "crash_delta": _delta(_rate(pre, "crash"), _rate(nat, "crash")),
                "crash_hang_delta": _delta(ch(pre), ch(nat)),
                "sdc_delta": _delta(_rate(pre, "sdc"), _rate(nat, "sdc")),
                "detection_rate": None if pre is None else pre.detection_rate,
            }
        doc[kernel] = entry
    return {"kernels": doc}
