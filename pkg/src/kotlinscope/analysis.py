"""Kotlin detection core: presence, obfuscation, ratios, tracing and features."""

import logging
import struct
import time
from collections import Counter
from dataclasses import asdict, dataclass, field, replace

from .apk import open_apk
from .axml import parse_manifest
from .dex import parse_dex, invoke_scan, read_uleb128
from .errors import KotlinScopeError, MalformedBytecode, ProjectPrefixEmpty
from .features import (
    ALL_FEATURES,
    FEATURE_SEGMENTS,
    FEATURES,
    INTRINSICS_CLASS,
    METADATA_ANNOTATION,
    NULL_CHECK_METHODS,
    NULL_SAFETY,
    package_to_prefix,
)
from .scanner import find_feature_prefix, find_stdlib_prefix, has_plain_stdlib, signature_hits

log = logging.getLogger(__name__)

KOTLIN_FRAGMENT = "kotlin/"


@dataclass(frozen=True)
class FeatureUsage:
    feature: str
    present: bool = False
    invocation_count: int = 0
    invoking_class_count: int = 0
    resolved_prefix: str = None


@dataclass(frozen=True)
class ClassTrace:
    descriptor: str
    image: int
    bytes: int
    invocations: int = 0
    kotlin_invocations: int = 0
    kotlin: bool = False
    project: bool = False
    stdlib: bool = False
    metadata: bool = False


@dataclass(frozen=True)
class AppReport:
    has_kotlin_stdlib: bool
    is_obfuscated: bool
    stdlib_method_ratio: float
    stdlib_class_ratio: float
    kot_invocations_ratio: float
    kot_classes_ratio: float
    kot_bytes: int
    total_bytes: int
    kot_bytes_ratio: float
    kot_proj_bytes_ratio: float
    kot_proj_classes_ratio: float
    kot_proj_invocations_ratio: float
    features: dict
    package_name: str
    analysis_seconds: float
    warnings: list
    app_id: str = ""
    apk_path: str = ""
    stdlib_prefix: str = None
    dex_count: int = 0
    dex_bytes: int = 0
    other_invocations: int = 0
    metadata_only_classes: int = 0
    classes: list = field(default=None, repr=False)

    def to_dict(self, detail=False):
        d = asdict(self)
        if not detail or self.classes is None:
            d.pop("classes")
        return d


def ratio(num, den, what, warnings):
    if den == 0:
        warnings.append(f"{what}: zero denominator, reported as 0")
        return 0.0
    return num / den


def empty_features():
    return {f: FeatureUsage(f) for f in ALL_FEATURES}


# -- presence / obfuscation --------------------------------------------------

def detect_presence(images, stdlib_prefix):
    if stdlib_prefix is not None or has_plain_stdlib(images):
        return True
    for img in images:
        for s in img.string_table:
            if KOTLIN_FRAGMENT in s or METADATA_ANNOTATION in s:
                return True
    return False


def detect_obfuscation(images, stdlib_prefix, present):
    # a renamed stdlib is only ever found through its signature
    return bool(present and stdlib_prefix is not None and not has_plain_stdlib(images))


# -- method/class ratios ------------------------------------------------------

def method_set(images):
    out = set()
    for img in images:
        out.update(img.method_triples())
    return out


def class_set(images):
    """Defined classes plus every referenced class type, across all images."""
    return {t for img in images for t in img.type_table if t.startswith("L")}


def stdlib_ratios(images, stdlib_prefix, warnings):
    methods = method_set(images)
    classes = class_set(images)
    if stdlib_prefix is None:
        m_std = c_std = 0
    else:
        m_std = sum(1 for m in methods if m[0].startswith(stdlib_prefix))
        c_std = sum(1 for c in classes if c.startswith(stdlib_prefix))
    if not m_std:
        warnings.append("no stdlib method references found")
    return (ratio(m_std, len(methods), "stdlib_method_ratio", warnings),
            ratio(c_std, len(classes), "stdlib_class_ratio", warnings))


# -- null-check targets -------------------------------------------------------

def null_check_targets(images, db, stdlib_prefix):
    """Method triples treated as runtime null-check intrinsics.

    Plain names are matched on the Intrinsics class under the stdlib
    prefix; under renaming, the methods whose bodies match the stdlib
    signatures stand in for them.
    """
    targets = set()
    if stdlib_prefix is None:
        return targets
    intrinsics = stdlib_prefix + INTRINSICS_CLASS
    for img in images:
        for t in img.method_triples():
            if t[0] == intrinsics and t[1] in NULL_CHECK_METHODS:
                targets.add(t)
    for sig in db.stdlib_signatures:
        for hit in signature_hits(images, sig):
            targets.add(images[hit.image_index].method_triple(hit.method_index))
    return targets


# -- class annotations ----------------------------------------------------------

def class_annotations(image, cdef):
    """Type descriptors of a class's class-level annotations."""
    off = cdef.annotations_offset
    data = image.data
    if not off:
        return ()
    try:
        set_off = struct.unpack_from("<I", data, off)[0]
        if not set_off:
            return ()
        size = struct.unpack_from("<I", data, set_off)[0]
        if set_off + 4 + 4 * size > len(data):
            raise MalformedBytecode("annotation set past end of buffer")
        out = []
        for (item,) in struct.iter_unpack("<I", data[set_off + 4:set_off + 4 + 4 * size]):
            type_idx, _ = read_uleb128(data, item + 1)
            out.append(image.type_table[type_idx])
        return tuple(out)
    except (struct.error, IndexError, ValueError):
        raise MalformedBytecode(f"bad annotations for class {image.type_table[cdef.type_index]}") from None


# -- tracing ------------------------------------------------------------------

@dataclass
class Trace:
    classes: list                 # ClassTrace per defined class
    feature_counts: Counter
    feature_classes: dict         # feature -> set of descriptors
    other_invocations: int = 0


def trace_invocations(images, prefix_map, *, stdlib_prefix=None, null_targets=(),
                      project_prefix=None, warnings=None):
    """Classify every invoke target of every defined class.

    ``prefix_map`` maps a feature name to its descriptor prefix; the
    stdlib prefix counts as Kotlin too.  Callers under the stdlib prefix
    contribute to |I| but never to Kotlin or feature counts.
    """
    warnings = [] if warnings is None else warnings
    kotlin_prefixes = tuple(p for p in (stdlib_prefix, *prefix_map.values()) if p)
    feature_items = [(f, p) for f, p in prefix_map.items() if p]
    null_targets = set(null_targets)
    feature_counts = Counter()
    feature_classes = {f: set() for f in ALL_FEATURES}
    out = []
    seen = set()
    other_total = 0

    for idx, img in enumerate(images):
        # per-method-id categories for this image
        types = img.type_table
        cls_kotlin = [bool(kotlin_prefixes) and t.startswith(kotlin_prefixes) for t in types]
        cls_feature = []
        for t in types:
            hit = None
            for f, p in feature_items:
                if t.startswith(p):
                    hit = f
                    break
            cls_feature.append(hit)
        m_kotlin = [cls_kotlin[c] for c, _, _ in img.method_table]
        m_feature = [cls_feature[c] for c, _, _ in img.method_table]
        if null_targets:
            m_null = [t in null_targets for t in img.method_triples()]
        else:
            m_null = [False] * len(img.method_table)
        n_methods = len(m_kotlin)

        for cdef in img.class_defs:
            desc = types[cdef.type_index]
            if desc in seen:
                warnings.append(f"class {desc} defined in more than one DEX image; later copy ignored")
                continue
            seen.add(desc)
            is_std = stdlib_prefix is not None and desc.startswith(stdlib_prefix)
            try:
                targets = []
                other = 0
                for m in cdef.methods:
                    if m.bytecode_length:
                        t, o = invoke_scan(img.data, m.code_offset, m.bytecode_length)
                        targets.extend(t)
                        other += o
                for t in targets:
                    if t >= n_methods:
                        raise MalformedBytecode(f"invoke of method index {t} outside table")
            except MalformedBytecode as exc:
                warnings.append(f"class {desc} skipped: {exc}")
                continue
            try:
                annotations = class_annotations(img, cdef)
            except MalformedBytecode as exc:
                warnings.append(str(exc))
                annotations = ()
            other_total += other
            kot = 0
            if not is_std:
                for t, n in Counter(targets).items():
                    if m_kotlin[t]:
                        kot += n
                    f = m_feature[t]
                    if f:
                        feature_counts[f] += n
                        feature_classes[f].add(desc)
                    if m_null[t]:
                        feature_counts[NULL_SAFETY] += n
                        feature_classes[NULL_SAFETY].add(desc)
            out.append(ClassTrace(
                descriptor=desc,
                image=idx,
                bytes=cdef.code_bytes,
                invocations=len(targets) + other,
                kotlin_invocations=kot,
                kotlin=kot > 0,
                project=bool(project_prefix) and desc.startswith(project_prefix),
                stdlib=is_std,
                metadata=METADATA_ANNOTATION in annotations,
            ))
    return Trace(out, feature_counts, feature_classes, other_total)


def mark_kotlin_classes(trace):
    return {c.descriptor for c in trace.classes if c.kotlin and not c.stdlib}


def byte_ratios(trace, kotlin_classes, warnings):
    """(kot_bytes, total_bytes, kot_bytes_ratio, proj bytes/classes/invocations ratios)."""
    kot_bytes = sum(c.bytes for c in trace.classes if c.descriptor in kotlin_classes)
    total_bytes = sum(c.bytes for c in trace.classes)
    kot_ratio = ratio(kot_bytes, total_bytes, "kot_bytes_ratio", warnings)
    proj = [c for c in trace.classes if c.project]
    if not proj:
        exc = ProjectPrefixEmpty("no class lies under the manifest package")
        warnings.append(str(exc))
        return kot_bytes, total_bytes, kot_ratio, 0.0, 0.0, 0.0
    pk = [c for c in proj if c.descriptor in kotlin_classes]
    return (
        kot_bytes, total_bytes, kot_ratio,
        ratio(sum(c.bytes for c in pk), sum(c.bytes for c in proj), "kot_proj_bytes_ratio", warnings),
        ratio(len(pk), len(proj), "kot_proj_classes_ratio", warnings),
        ratio(sum(c.kotlin_invocations for c in proj), sum(c.invocations for c in proj),
              "kot_proj_invocations_ratio", warnings),
    )


def extract_features(trace, prefixes):
    out = {}
    for f in FEATURES:
        n = trace.feature_counts.get(f, 0)
        out[f] = FeatureUsage(f, n > 0, n, len(trace.feature_classes[f]), prefixes.get(f))
    return out


def detect_null_safety(trace, null_targets=()):
    """Null-check intrinsic usage; the prefix reported is the intrinsics class."""
    n = trace.feature_counts.get(NULL_SAFETY, 0)
    owners = sorted({t[0] for t in null_targets})
    prefix = owners[0] if owners else None
    return FeatureUsage(NULL_SAFETY, n > 0, n, len(trace.feature_classes[NULL_SAFETY]), prefix)


# -- orchestration --------------------------------------------------------------

def load_images(artifact):
    return [parse_dex(data, lazy=True, name=name) for name, data in artifact.dex_images]


def analyze_artifact(artifact, db, *, strict=False, detail=False, app_id=""):
    start = time.perf_counter()
    warnings = list(artifact.warnings)
    info = parse_manifest(artifact.manifest_bytes)
    images = load_images(artifact)
    for img in images:
        if img.bad_strings:
            warnings.append(f"{img.name}: {img.bad_strings} malformed MUTF-8 strings")

    notes = []
    stdlib_prefix = find_stdlib_prefix(images, db, strict=strict, notes=notes)
    present = detect_presence(images, stdlib_prefix)
    obfuscated = detect_obfuscation(images, stdlib_prefix, present)
    base = dict(
        package_name=info.package_name,
        app_id=app_id,
        apk_path=artifact.apk_path,
        stdlib_prefix=stdlib_prefix,
        dex_count=len(images),
        dex_bytes=artifact.total_dex_bytes,
    )
    if not present:
        # fast path: class data is never decoded, so byte totals stay 0
        return AppReport(
            has_kotlin_stdlib=False, is_obfuscated=False,
            stdlib_method_ratio=0.0, stdlib_class_ratio=0.0,
            kot_invocations_ratio=0.0, kot_classes_ratio=0.0,
            kot_bytes=0, total_bytes=0,
            kot_bytes_ratio=0.0, kot_proj_bytes_ratio=0.0,
            kot_proj_classes_ratio=0.0, kot_proj_invocations_ratio=0.0,
            features=empty_features(), warnings=warnings,
            analysis_seconds=time.perf_counter() - start,
            classes=[] if detail else None, **base,
        )

    if stdlib_prefix is None:
        warnings.append("Kotlin presence found through string references only")
    m_ratio, c_ratio = stdlib_ratios(images, stdlib_prefix, warnings)

    prefixes = {}
    for f in FEATURES:
        p = find_feature_prefix(images, db, f, stdlib_prefix, strict=strict, notes=notes)
        if p is not None:
            prefixes[f] = p
            if p.endswith("/" + FEATURE_SEGMENTS[f][-1] + "/") and len(FEATURE_SEGMENTS[f]) > 1:
                notes.append(f"{f}: resolved through alias package {p}")
    warnings.extend(notes)

    project_prefix = package_to_prefix(info.package_name)
    null_targets = null_check_targets(images, db, stdlib_prefix)
    trace = trace_invocations(
        images, prefixes,
        stdlib_prefix=stdlib_prefix,
        null_targets=null_targets,
        project_prefix=project_prefix,
        warnings=warnings,
    )
    kotlin_classes = mark_kotlin_classes(trace)
    total_i = sum(c.invocations for c in trace.classes)
    kot_i = sum(c.kotlin_invocations for c in trace.classes)
    kot_bytes, total_bytes, kb_ratio, pb_ratio, pc_ratio, pi_ratio = byte_ratios(trace, kotlin_classes, warnings)
    features = extract_features(trace, prefixes)
    features[NULL_SAFETY] = detect_null_safety(trace, null_targets)
    metadata_only = sum(1 for c in trace.classes if c.metadata and not c.kotlin and not c.stdlib)

    return AppReport(
        has_kotlin_stdlib=True,
        is_obfuscated=obfuscated,
        stdlib_method_ratio=m_ratio,
        stdlib_class_ratio=c_ratio,
        kot_invocations_ratio=ratio(kot_i, total_i, "kot_invocations_ratio", warnings),
        kot_classes_ratio=ratio(len(kotlin_classes), len(trace.classes), "kot_classes_ratio", warnings),
        kot_bytes=kot_bytes,
        total_bytes=total_bytes,
        kot_bytes_ratio=kb_ratio,
        kot_proj_bytes_ratio=pb_ratio,
        kot_proj_classes_ratio=pc_ratio,
        kot_proj_invocations_ratio=pi_ratio,
        features=features,
        warnings=warnings,
        other_invocations=trace.other_invocations,
        metadata_only_classes=metadata_only,
        analysis_seconds=time.perf_counter() - start,
        classes=[asdict(c) for c in trace.classes] if detail else None,
        **base,
    )


def app_id_of(path):
    name = str(path).replace("\\", "/").rsplit("/", 1)[-1]
    return name[:-4] if name.lower().endswith(".apk") else name


def analyze_apk(path, db, *, strict=False, detail=False):
    """Full pipeline for one APK; errors carry the APK path in ``apk_path``."""
    start = time.perf_counter()
    try:
        artifact = open_apk(path)
        report = analyze_artifact(artifact, db, strict=strict, detail=detail, app_id=app_id_of(path))
    except KotlinScopeError as exc:
        exc.apk_path = str(path)
        raise
    # include archive decompression in the reported wall-clock time
    return replace(report, analysis_seconds=time.perf_counter() - start)
