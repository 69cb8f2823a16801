"""Compare detector byte ratios with repository language statistics."""

import csv
import logging
import statistics
from dataclasses import dataclass
from fractions import Fraction

from .errors import DegenerateInput

log = logging.getLogger(__name__)

EPS = 1e-9
ROW_FIELDS = ("app_id", "kot_proj_bytes_ratio", "ling_kot_java_ratio", "error",
              "has_kot_github", "has_kotlin_stdlib")


@dataclass(frozen=True)
class LinguistRecord:
    app_id: str
    ling_kot_ratio: float
    ling_java_ratio: float

    def __post_init__(self):
        for v in (self.ling_kot_ratio, self.ling_java_ratio):
            if not 0 <= v <= 1:
                raise ValueError(f"{self.app_id}: ratio {v} outside [0, 1]")
        if self.ling_kot_ratio + self.ling_java_ratio > 1 + EPS:
            raise ValueError(f"{self.app_id}: Kotlin and Java shares exceed 1")


@dataclass(frozen=True)
class ComparisonRow:
    app_id: str
    kot_proj_bytes_ratio: float
    ling_kot_java_ratio: float
    error: float
    has_kot_github: bool
    has_kotlin_stdlib: bool


def _dec(x):
    # the decimal a ratio was written as (CSV text, JSON report), kept exact
    return Fraction(repr(float(x)))


def kot_java_ratio(rec):
    total = _dec(rec.ling_kot_ratio) + _dec(rec.ling_java_ratio)
    if total == 0:
        return 0.0
    return float(_dec(rec.ling_kot_ratio) / total)


def abs_error(a, b):
    """|a - b| evaluated exactly on the decimal inputs, then rounded once."""
    return float(abs(_dec(a) - _dec(b)))


def histogram(values, width=0.1):
    """Counts per bin of ``width`` over [0, 1]; 1.0 falls in the last bin."""
    if not 0 < width <= 1:
        raise DegenerateInput(f"bin width {width} must be in (0, 1]")
    nbins = round(1 / width) if abs(round(1 / width) - 1 / width) < 1e-9 else int(1 / width) + 1
    counts = [0] * nbins
    for v in values:
        counts[min(int(v / width + 1e-12), nbins - 1)] += 1
    return [(round(i * width, 10), c) for i, c in enumerate(counts)]


def compare(reports, records, bin_width=0.1):
    """Join reports and linguist records on app_id.

    ``reports`` is an iterable of mappings (or AppReport objects) carrying
    app_id, kot_proj_bytes_ratio and has_kotlin_stdlib.  Returns
    (rows, summary); ids present on only one side are listed in the
    summary and skipped.
    """
    by_id = {}
    for r in reports:
        d = r if isinstance(r, dict) else r.to_dict()
        by_id[d["app_id"]] = d
    rows, unmatched = [], []
    seen = set()
    for rec in records:
        seen.add(rec.app_id)
        rep = by_id.get(rec.app_id)
        if rep is None:
            unmatched.append(rec.app_id)
            continue
        det = float(rep["kot_proj_bytes_ratio"])
        ling = kot_java_ratio(rec)
        rows.append(ComparisonRow(rec.app_id, det, ling, abs_error(det, ling), ling > 0,
                                  bool(rep["has_kotlin_stdlib"])))
    unmatched += sorted(a for a in by_id if a not in seen)
    for a in unmatched:
        log.warning("app id %s has no counterpart; skipped", a)

    matrix = {"github_yes_detector_yes": 0, "github_yes_detector_no": 0,
              "github_no_detector_yes": 0, "github_no_detector_no": 0}
    for r in rows:
        key = f"github_{'yes' if r.has_kot_github else 'no'}_detector_{'yes' if r.has_kotlin_stdlib else 'no'}"
        matrix[key] += 1
    errors = [r.error for r in rows]
    det_hist = histogram([r.kot_proj_bytes_ratio for r in rows], bin_width)
    ling_hist = histogram([r.ling_kot_java_ratio for r in rows], bin_width)
    summary = {
        "rows": len(rows),
        "mean_error": statistics.fmean(errors) if errors else 0.0,
        "median_error": statistics.median(errors) if errors else 0.0,
        "agreement": matrix,
        "github_yes_detector_no": matrix["github_yes_detector_no"],
        "histogram": [{"bin": b, "detector": d, "linguist": l}
                      for (b, d), (_, l) in zip(det_hist, ling_hist)],
        "unmatched": unmatched,
    }
    return rows, summary


def load_linguist_csv(path):
    """Read ``app_id,ling_kot_ratio,ling_java_ratio``; percentages are normalised."""
    with open(path, newline="", encoding="utf-8") as fh:
        raw = [(r["app_id"], float(r["ling_kot_ratio"]), float(r["ling_java_ratio"]))
               for r in csv.DictReader(fh)]
    if any(k > 1 or j > 1 for _, k, j in raw):
        log.warning("%s: values above 1 found; treating the file as percentages", path)
        raw = [(a, k / 100, j / 100) for a, k, j in raw]
    return [LinguistRecord(*r) for r in raw]


def write_rows_csv(rows, fh):
    w = csv.writer(fh)
    w.writerow(ROW_FIELDS)
    for r in rows:
        w.writerow([r.app_id, repr(r.kot_proj_bytes_ratio), repr(r.ling_kot_java_ratio), repr(r.error),
                    int(r.has_kot_github), int(r.has_kotlin_stdlib)])


def write_histogram_csv(summary, fh):
    w = csv.writer(fh)
    w.writerow(("bin", "detector", "linguist"))
    for h in summary["histogram"]:
        w.writerow((h["bin"], h["detector"], h["linguist"]))
