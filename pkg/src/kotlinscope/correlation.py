"""Pearson correlation between Kotlin presence and vulnerability counts."""

import csv
import math
import random
from dataclasses import dataclass

from .errors import DegenerateInput, UnmatchedAppId

CATEGORIES = ("critical", "warning", "notice", "info")


@dataclass(frozen=True)
class VulnRecord:
    app_id: str
    critical: int = 0
    warning: int = 0
    notice: int = 0
    info: int = 0

    def __post_init__(self):
        for c in CATEGORIES:
            if getattr(self, c) < 0:
                raise ValueError(f"{self.app_id}: negative {c} count")


@dataclass(frozen=True)
class CorrelationResult:
    category: str
    r: float
    n: int


def pearson(xs, ys):
    """Product-moment correlation coefficient, clamped to [-1, 1]."""
    n = len(xs)
    if n != len(ys):
        raise DegenerateInput(f"length mismatch: {n} vs {len(ys)}")
    if n < 2:
        raise DegenerateInput("need at least two samples")
    mx = math.fsum(xs) / n
    my = math.fsum(ys) / n
    dx = [x - mx for x in xs]
    dy = [y - my for y in ys]
    sxx = math.fsum(d * d for d in dx)
    syy = math.fsum(d * d for d in dy)
    if sxx == 0 or syy == 0:
        raise DegenerateInput("constant series; correlation undefined")
    sxy = math.fsum(a * b for a, b in zip(dx, dy))
    r = sxy / math.sqrt(sxx * syy)
    return max(-1.0, min(1.0, r))


def _presence(report):
    d = report if isinstance(report, dict) else report.to_dict()
    return d["app_id"], 1 if d["has_kotlin_stdlib"] else 0


def join(reports, vulns, strict=False):
    """(presence, VulnRecord) pairs, ordered by app_id; unmatched ids are skipped."""
    pres = dict(_presence(r) for r in reports)
    by_id = {v.app_id: v for v in vulns}
    missing = sorted(set(pres) ^ set(by_id))
    if missing and strict:
        raise UnmatchedAppId(", ".join(missing))
    pairs = [(pres[a], by_id[a]) for a in sorted(set(pres) & set(by_id))]
    return pairs, missing


def balanced_sample(pairs, n, seed):
    """``n`` Kotlin and ``n`` Kotlin-free apps drawn with a fixed seed."""
    rng = random.Random(seed)
    yes = [p for p in pairs if p[0]]
    no = [p for p in pairs if not p[0]]
    if len(yes) < n or len(no) < n:
        raise DegenerateInput(f"need {n} apps per group, have {len(yes)} and {len(no)}")
    picked = rng.sample(yes, n) + rng.sample(no, n)
    return sorted(picked, key=lambda p: p[1].app_id)


def correlate(reports, vulns, *, balanced=None, seed=0):
    """One result per category; degenerate categories have r = None."""
    pairs, missing = join(reports, vulns)
    if balanced:
        pairs = balanced_sample(pairs, balanced, seed)
    xs = [p for p, _ in pairs]
    out, problems = [], []
    for c in CATEGORIES:
        ys = [getattr(v, c) for _, v in pairs]
        try:
            out.append(CorrelationResult(c, pearson(xs, ys), len(pairs)))
        except DegenerateInput as exc:
            out.append(CorrelationResult(c, None, len(pairs)))
            problems.append(f"{c}: {exc}")
    return out, {"unmatched": missing, "degenerate": problems, "n": len(pairs)}


def load_vulns_csv(path):
    with open(path, newline="", encoding="utf-8") as fh:
        return [VulnRecord(r["app_id"], *(int(r[c]) for c in CATEGORIES))
                for r in csv.DictReader(fh)]


def write_results_csv(results, fh):
    w = csv.writer(fh)
    w.writerow(("category", "r", "n"))
    for res in results:
        w.writerow((res.category, "" if res.r is None else repr(res.r), res.n))
