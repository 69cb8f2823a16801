"""Command-line interface: scan, batch, compare, correlate."""

import argparse
import csv
import json
import logging
import os
import sys
import traceback
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

from . import correlation, linguist
from .analysis import analyze_apk
from .errors import KotlinScopeError
from .features import ALL_FEATURES
from .scanner import load_signatures

EXIT_OK, EXIT_PARTIAL, EXIT_INPUT, EXIT_INTERNAL = 0, 1, 2, 3

# column order of `scan --csv`
REPORT_CSV_FIELDS = (
    "app_id", "package_name", "has_kotlin_stdlib", "is_obfuscated",
    "stdlib_method_ratio", "stdlib_class_ratio", "kot_invocations_ratio", "kot_classes_ratio",
    "kot_bytes", "total_bytes", "kot_bytes_ratio",
    "kot_proj_bytes_ratio", "kot_proj_classes_ratio", "kot_proj_invocations_ratio",
    "analysis_seconds",
) + tuple(f"feature_{f}" for f in ALL_FEATURES)


@dataclass
class BatchSummary:
    apps_total: int = 0
    apps_kotlin: int = 0
    pct_kotlin: float = 0.0
    apps_obfuscated: int = 0
    mean_seconds_per_app: float = 0.0
    failures: list = field(default_factory=list)  # [path, error]


def error_json(exc, path=None):
    return {
        "error": type(exc).__name__,
        "message": str(exc),
        "apk_path": getattr(exc, "apk_path", None) or (str(path) if path else None),
    }


def report_csv_row(d):
    row = {k: d.get(k) for k in REPORT_CSV_FIELDS if not k.startswith("feature_")}
    for f in ALL_FEATURES:
        row[f"feature_{f}"] = d["features"][f]["invocation_count"]
    for k, v in row.items():
        if isinstance(v, bool):
            row[k] = int(v)
    return row


def _db(args):
    return load_signatures(args.signatures)


def cmd_scan(args):
    try:
        db = _db(args)
        report = analyze_apk(args.apk, db, strict=args.strict, detail=args.detail)
    except KotlinScopeError as exc:
        print(json.dumps(error_json(exc, args.apk)))
        return EXIT_INPUT
    except OSError as exc:
        print(json.dumps(error_json(exc, args.apk)))
        return EXIT_INPUT
    d = report.to_dict(detail=args.detail)
    if args.csv:
        w = csv.DictWriter(sys.stdout, REPORT_CSV_FIELDS)
        w.writeheader()
        w.writerow(report_csv_row(d))
    else:
        json.dump(d, sys.stdout, indent=2)
        sys.stdout.write("\n")
    return EXIT_OK


# one signature db per worker process
_worker_db = None


def _load_worker_db(path):
    global _worker_db
    _worker_db = load_signatures(path)


def _init_worker(path):
    # pool workers stay quiet; per-app warnings travel inside the reports
    logging.getLogger("kotlinscope").setLevel(logging.ERROR)
    _load_worker_db(path)


def _analyze_one(job):
    path, detail, strict = job
    try:
        return True, analyze_apk(path, _worker_db, strict=strict, detail=detail).to_dict(detail=detail)
    except KotlinScopeError as exc:
        return False, error_json(exc, path)
    except Exception as exc:  # isolate per-app crashes from the batch
        info = error_json(exc, path)
        info["traceback"] = traceback.format_exc(limit=3)
        return False, info


def find_apks(root):
    root = Path(root)
    if not root.is_dir():
        raise NotADirectoryError(str(root))
    return sorted(str(p) for p in root.rglob("*.apk") if p.is_file())


def run_batch(paths, *, signatures=None, workers=1, detail=False, strict=False, sink=None):
    """Analyse ``paths``; report dicts go to ``sink`` in input order."""
    summary = BatchSummary()
    seconds = []
    jobs = [(p, detail, strict) for p in paths]
    if workers > 1:
        pool = ProcessPoolExecutor(workers, initializer=_init_worker, initargs=(signatures,))
        results = pool.map(_analyze_one, jobs, chunksize=1)
    else:
        pool = None
        _load_worker_db(signatures)
        results = map(_analyze_one, jobs)
    try:
        for (path, _, _), (ok, payload) in zip(jobs, results):
            summary.apps_total += 1
            if not ok:
                summary.failures.append([path, f"{payload['error']}: {payload['message']}"])
                continue
            summary.apps_kotlin += payload["has_kotlin_stdlib"]
            summary.apps_obfuscated += payload["is_obfuscated"]
            seconds.append(payload["analysis_seconds"])
            if sink:
                sink(payload)
    finally:
        if pool:
            pool.shutdown()
    ok = summary.apps_total - len(summary.failures)
    summary.pct_kotlin = summary.apps_kotlin / summary.apps_total if summary.apps_total else 0.0
    summary.mean_seconds_per_app = sum(seconds) / ok if ok else 0.0
    return summary


def cmd_batch(args):
    try:
        paths = find_apks(args.dir)
        load_signatures(args.signatures)  # fail fast on a bad database
    except (OSError, KotlinScopeError) as exc:
        print(json.dumps(error_json(exc)), file=sys.stderr)
        return EXIT_INPUT
    out = open(args.out, "w", encoding="utf-8") if args.out else sys.stdout
    done = 0

    def sink(d):
        nonlocal done
        out.write(json.dumps(d) + "\n")
        out.flush()
        done += 1
        if args.progress:
            print(f"{done}/{len(paths)}", file=sys.stderr)

    try:
        summary = run_batch(paths, signatures=args.signatures, workers=args.workers,
                            detail=args.detail, strict=args.strict, sink=sink)
    finally:
        if args.out:
            out.close()
    text = json.dumps(asdict(summary), indent=2)
    print(text, file=sys.stdout if args.out else sys.stderr)
    if args.summary:
        Path(args.summary).write_text(text + "\n", encoding="utf-8")
    return EXIT_PARTIAL if summary.failures else EXIT_OK


def load_reports(path):
    """Reports from a JSON Lines file, a JSON list, or a single JSON report."""
    text = Path(path).read_text(encoding="utf-8")
    stripped = text.lstrip()
    if stripped.startswith("["):
        return json.loads(text)
    try:
        return [json.loads(text)]
    except json.JSONDecodeError:
        return [json.loads(line) for line in text.splitlines() if line.strip()]


def cmd_compare(args):
    try:
        reports = load_reports(args.reports)
        records = linguist.load_linguist_csv(args.linguist)
        rows, summary = linguist.compare(reports, records, bin_width=args.bin_width)
    except (OSError, ValueError, KeyError, KotlinScopeError) as exc:
        print(json.dumps(error_json(exc)), file=sys.stderr)
        return EXIT_INPUT
    linguist.write_rows_csv(rows, sys.stdout)
    text = json.dumps(summary, indent=2)
    if args.summary:
        Path(args.summary).write_text(text + "\n", encoding="utf-8")
    else:
        print(text, file=sys.stderr)
    if args.histogram:
        with open(args.histogram, "w", newline="", encoding="utf-8") as fh:
            linguist.write_histogram_csv(summary, fh)
    return EXIT_OK


def cmd_correlate(args):
    try:
        reports = load_reports(args.reports)
        vulns = correlation.load_vulns_csv(args.vulns)
        results, info = correlation.correlate(reports, vulns, balanced=args.balanced, seed=args.seed)
    except (OSError, ValueError, KeyError, KotlinScopeError) as exc:
        print(json.dumps(error_json(exc)), file=sys.stderr)
        return EXIT_INPUT
    if args.json:
        json.dump({"results": [asdict(r) for r in results], **info}, sys.stdout, indent=2)
        sys.stdout.write("\n")
    else:
        correlation.write_results_csv(results, sys.stdout)
        for p in info["degenerate"]:
            print(f"warning: {p}", file=sys.stderr)
    return EXIT_OK


def build_parser():
    p = argparse.ArgumentParser(prog="kotlinscope", description="Detect Kotlin usage in Android APKs.")
    p.add_argument("-v", "--verbose", action="store_true", help="log warnings to stderr")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--signatures", help="signature database (default: $KOTLINSCOPE_SIGNATURES or built-in)")
        sp.add_argument("--detail", action="store_true", help="include the per-class breakdown")
        sp.add_argument("--strict", action="store_true", help="fail on ambiguous prefixes instead of picking one")

    s = sub.add_parser("scan", help="analyse one APK")
    s.add_argument("apk")
    common(s)
    fmt = s.add_mutually_exclusive_group()
    fmt.add_argument("--json", action="store_true", help="JSON output (default)")
    fmt.add_argument("--csv", action="store_true", help="one CSV row")
    s.set_defaults(func=cmd_scan)

    b = sub.add_parser("batch", help="analyse every APK below a directory")
    b.add_argument("dir")
    b.add_argument("--workers", type=int, default=1)
    b.add_argument("--out", help="JSON Lines output file (default: stdout)")
    b.add_argument("--summary", help="also write the batch summary JSON here")
    b.add_argument("--progress", action="store_true", help="print a running counter to stderr")
    common(b)
    b.set_defaults(func=cmd_batch)

    c = sub.add_parser("compare", help="compare reports with linguist statistics")
    c.add_argument("reports")
    c.add_argument("linguist")
    c.add_argument("--bin-width", type=float, default=0.1)
    c.add_argument("--summary", help="summary JSON file (default: stderr)")
    c.add_argument("--histogram", help="histogram CSV file")
    c.set_defaults(func=cmd_compare)

    r = sub.add_parser("correlate", help="correlate Kotlin presence with vulnerability counts")
    r.add_argument("reports")
    r.add_argument("vulns")
    r.add_argument("--balanced", type=int, help="sample N apps per group")
    r.add_argument("--seed", type=int, default=0)
    r.add_argument("--json", action="store_true")
    r.set_defaults(func=cmd_correlate)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING if args.verbose else logging.ERROR,
                        format="%(levelname)s %(name)s: %(message)s")
    if getattr(args, "workers", 1) < 1:
        print("--workers must be at least 1", file=sys.stderr)
        return EXIT_INPUT
    try:
        return args.func(args)
    except BrokenPipeError:
        os._exit(EXIT_OK)
    except Exception:
        traceback.print_exc()
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
