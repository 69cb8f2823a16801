"""Independent oracles.

Nothing here imports the parsing or analysis code under test: DEX
structure comes from androguard, arithmetic from Fraction.
"""

import math
from fractions import Fraction

import numpy as np
from androguard.core.dex import DEX

INVOKES = set(range(0x6E, 0x73)) | set(range(0x74, 0x79))
POLY = {0xFA, 0xFB, 0xFC, 0xFD}


def naive_scan(haystack, pattern):
    """Compare the pattern at every offset, one pattern position at a time."""
    n, m = len(haystack), len(pattern)
    if m > n:
        return []
    hay = np.frombuffer(bytes(haystack), dtype=np.uint8)
    ok = np.ones(n - m + 1, dtype=bool)
    for i, p in enumerate(pattern):
        if p is not None:
            ok &= hay[i:i + n - m + 1] == p
    return np.flatnonzero(ok).tolist()


def triple(dex, idx):
    cls, name, (params, ret) = dex.get_cm_method(idx)
    return cls, name, params.replace(" ", "") + ret


class DexFacts:
    """Per-class code sizes and invoke targets as seen by androguard."""

    def __init__(self, blobs):
        self.dexes = [DEX(b) for b in blobs]
        self.methods = set()
        self.types = set()
        self.classes = {}  # descriptor -> (bytes, [target triples], other invokes)
        for d in self.dexes:
            for i in range(d.header.method_ids_size):
                self.methods.add(triple(d, i))
            for tid in range(d.header.type_ids_size):
                t = d.get_cm_type(tid)
                if t.startswith("L"):
                    self.types.add(t)
            for c in d.get_classes():
                if c.get_name() in self.classes:
                    continue
                size, targets, other = 0, [], 0
                for m in c.get_methods():
                    code = m.get_code()
                    if code is None:
                        continue
                    size += 2 * code.insns_size
                    for ins in code.get_bc().get_instructions():
                        op = ins.get_op_value()
                        if op in INVOKES:
                            targets.append(triple(d, ins.get_ref_kind()))
                        elif op in POLY:
                            other += 1
                self.classes[c.get_name()] = (size, targets, other)


def ratio(num, den):
    return float(Fraction(num, den)) if den else 0.0


def expected_ratios(facts, stdlib_prefix, package_prefix, null_targets=frozenset(), feature_prefixes=None):
    """Every AppReport ratio and count recomputed from androguard facts."""
    feature_prefixes = feature_prefixes or {}
    m_std = sum(1 for m in facts.methods if m[0].startswith(stdlib_prefix))
    c_std = sum(1 for t in facts.types if t.startswith(stdlib_prefix))
    kotlin, total_i, kot_i = set(), 0, 0
    proj_i = proj_kot_i = 0
    features = {f: 0 for f in feature_prefixes}
    feature_classes = {f: set() for f in feature_prefixes}
    nulls, null_classes = 0, set()
    for cls, (size, targets, other) in facts.classes.items():
        total_i += len(targets) + other
        is_std = cls.startswith(stdlib_prefix)
        k = 0 if is_std else sum(1 for t in targets if t[0].startswith(stdlib_prefix))
        kot_i += k
        if k:
            kotlin.add(cls)
        if cls.startswith(package_prefix):
            proj_i += len(targets) + other
            proj_kot_i += k
        if not is_std:
            for t in targets:
                for f, p in feature_prefixes.items():
                    if t[0].startswith(p):
                        features[f] += 1
                        feature_classes[f].add(cls)
                if t in null_targets:
                    nulls += 1
                    null_classes.add(cls)
    total_b = sum(v[0] for v in facts.classes.values())
    kot_b = sum(facts.classes[c][0] for c in kotlin)
    proj = [c for c in facts.classes if c.startswith(package_prefix)]
    proj_b = sum(facts.classes[c][0] for c in proj)
    proj_kot = [c for c in proj if c in kotlin]
    return {
        "stdlib_method_ratio": ratio(m_std, len(facts.methods)),
        "stdlib_class_ratio": ratio(c_std, len(facts.types)),
        "kot_invocations_ratio": ratio(kot_i, total_i),
        "kot_classes_ratio": ratio(len(kotlin), len(facts.classes)),
        "kot_bytes": kot_b,
        "total_bytes": total_b,
        "kot_bytes_ratio": ratio(kot_b, total_b),
        "kot_proj_bytes_ratio": ratio(sum(facts.classes[c][0] for c in proj_kot), proj_b),
        "kot_proj_classes_ratio": ratio(len(proj_kot), len(proj)),
        "kot_proj_invocations_ratio": ratio(proj_kot_i, proj_i),
        "kotlin_classes": kotlin,
        "features": features,
        "feature_classes": feature_classes,
        "null_checks": nulls,
        "null_check_classes": null_classes,
    }


def pearson_exact(xs, ys):
    """Pearson r with rational arithmetic; only the final square root is inexact."""
    xs = [Fraction(x) for x in xs]
    ys = [Fraction(y) for y in ys]
    n = len(xs)
    mx, my = sum(xs) / n, sum(ys) / n
    sxy = sum((x - mx) * (y - my) for x, y in zip(xs, ys))
    sxx = sum((x - mx) ** 2 for x in xs)
    syy = sum((y - my) ** 2 for y in ys)
    r2 = sxy * sxy / (sxx * syy)
    # sqrt of a rational to ~30 digits via integer square root
    scale = 10 ** 60
    num = r2.numerator * scale * scale
    root = math.isqrt(num // r2.denominator)
    r = Fraction(root, scale)
    return float(r if sxy >= 0 else -r)
