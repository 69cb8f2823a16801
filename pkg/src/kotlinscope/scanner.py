"""Wildcard byte-signature scanning and obfuscated package-path recovery.

Identifier renaming rewrites names but keeps the package tree and the
code itself, so a method known to live in the Kotlin standard library can
be recognised by its bytecode and the (renamed) package path read off its
class descriptor.
"""

import bisect
import logging
import os
import re
from collections import Counter
from dataclasses import dataclass
from functools import cached_property
from importlib import resources
from typing import NamedTuple

from .dex import iterate_instructions
from .errors import AmbiguousPrefix, MalformedBytecode, SignatureError, StructureViolation
from .features import FEATURE_SEGMENTS, PLAIN_STDLIB_PREFIX

log = logging.getLogger(__name__)

ENV_SIGNATURES = "KOTLINSCOPE_SIGNATURES"
STDLIB_CORE = "stdlib_core"
STDLIB_FALLBACK = "stdlib_fallback"


@dataclass(frozen=True)
class ByteSignature:
    pattern: tuple  # ints 0-255, None for a wildcard
    label: str = ""
    anchor_kind: str = STDLIB_CORE

    def __post_init__(self):
        if not self.pattern:
            raise SignatureError(f"{self.label}: empty pattern")
        if self.pattern[0] is None:
            raise SignatureError(f"{self.label}: pattern must not start with a wildcard")
        if any(b is not None and not 0 <= b <= 255 for b in self.pattern):
            raise SignatureError(f"{self.label}: byte value out of range")
        kind = self.anchor_kind
        if kind not in (STDLIB_CORE, STDLIB_FALLBACK):
            if not kind.startswith("feature:") or kind[8:] not in FEATURE_SEGMENTS:
                raise SignatureError(f"{self.label}: unknown anchor kind {kind!r}")

    @classmethod
    def from_hex(cls, text, label="", anchor_kind=STDLIB_CORE):
        pattern = []
        for tok in text.split():
            if tok in ("??", "?"):
                pattern.append(None)
            else:
                try:
                    pattern.append(int(tok, 16))
                except ValueError:
                    raise SignatureError(f"{label}: bad byte {tok!r}") from None
        return cls(tuple(pattern), label, anchor_kind)

    @property
    def feature(self):
        return self.anchor_kind[8:] if self.anchor_kind.startswith("feature:") else None

    def to_hex(self):
        return " ".join("??" if b is None else f"{b:02x}" for b in self.pattern)

    @cached_property
    def _matcher(self):
        # longest run of literal bytes drives a C-speed bytes.find
        best_start, best_len, start = 0, 0, None
        for i, b in enumerate(self.pattern + (None,)):
            if b is not None and start is None:
                start = i
            elif b is None and start is not None:
                if i - start > best_len:
                    best_start, best_len = start, i - start
                start = None
        run = bytes(self.pattern[best_start:best_start + best_len])
        regex = re.compile(
            b"".join(b"." if b is None else re.escape(bytes((b,))) for b in self.pattern),
            re.DOTALL,
        )
        return run, best_start, regex


def scan(haystack, sig):
    """All offsets (ascending, overlapping allowed) where ``sig`` matches."""
    run, run_off, regex = sig._matcher
    n = len(sig.pattern)
    size = len(haystack)
    find = haystack.find
    match = regex.match
    out = []
    pos = find(run, run_off)
    while pos >= 0:
        o = pos - run_off
        if o + n > size:
            break
        if match(haystack, o):
            out.append(o)
        pos = find(run, pos + 1)
    return out


@dataclass(frozen=True)
class SignatureDb:
    signatures: tuple
    version: str = ""

    def __post_init__(self):
        cores = [s for s in self.signatures if s.anchor_kind == STDLIB_CORE]
        if len(cores) != 1:
            raise SignatureError(f"expected exactly one stdlib_core signature, found {len(cores)}")

    @property
    def core(self):
        return next(s for s in self.signatures if s.anchor_kind == STDLIB_CORE)

    @property
    def stdlib_signatures(self):
        """Core signature first, then the fallbacks in file order."""
        return (self.core,) + tuple(s for s in self.signatures if s.anchor_kind == STDLIB_FALLBACK)

    def for_feature(self, feature):
        return tuple(s for s in self.signatures if s.feature == feature)


def parse_signatures(text):
    sigs, version = [], ""
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.strip()
        if not line:
            continue
        if line.startswith("#"):
            m = re.match(r"#\s*version\s*:\s*(\S+)", line)
            if m:
                version = m.group(1)
            continue
        parts = line.split("|")
        if len(parts) != 3:
            raise SignatureError(f"line {lineno}: expected label|anchor|hex")
        label, anchor, hexbytes = (p.strip() for p in parts)
        sigs.append(ByteSignature.from_hex(hexbytes, label, anchor))
    return SignatureDb(tuple(sigs), version)


def default_signature_path():
    env = os.environ.get(ENV_SIGNATURES)
    if env:
        return env
    return str(resources.files("kotlinscope").joinpath("data", "signatures.txt"))


def load_signatures(path=None):
    path = path or default_signature_path()
    with open(path, encoding="utf-8") as fh:
        return parse_signatures(fh.read())


class SignatureHit(NamedTuple):
    image_index: int
    offset: int  # absolute offset inside the DEX buffer
    class_descriptor: str
    method_index: int  # index into that image's method table


def signature_hits(images, sig):
    """Hits of ``sig`` that start on an instruction boundary inside method code.

    Results are ordered by image, then offset.  Images without a raw match
    never have their class data decoded.
    """
    hits = []
    for idx, image in enumerate(images):
        raw = scan(image.data, sig)
        if not raw:
            continue
        ranges = image.code_ranges
        starts = [r[0] for r in ranges]
        boundaries = {}
        for off in raw:
            i = bisect.bisect_right(starts, off) - 1
            if i < 0:
                continue
            start, end, cdef, method = ranges[i]
            if off + len(sig.pattern) > end:
                continue
            key = (start, method.method_ref_index)
            if key not in boundaries:
                try:
                    boundaries[key] = {ins.offset * 2 for ins in iterate_instructions(method)}
                except MalformedBytecode:
                    boundaries[key] = set(range(0, end - start, 2))
            if off - start in boundaries[key]:
                hits.append(SignatureHit(idx, off, image.type_table[cdef.type_index],
                                         method.method_ref_index))
    return hits


def _root_of(descriptor):
    """``La/b/c;`` -> ``La/``; None for a class in the default package."""
    body = descriptor[1:]
    cut = body.find("/")
    if not descriptor.startswith("L") or cut <= 0:
        return None
    return "L" + body[:cut + 1]


def _child_of(descriptor, parent):
    """Package one segment below ``parent`` containing ``descriptor``."""
    if not descriptor.startswith(parent):
        return None
    rest = descriptor[len(parent):]
    cut = rest.find("/")
    if cut <= 0:
        return None
    return parent + rest[:cut + 1]


def _pick(counts, strict, notes, what):
    ranked = sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))
    if len(ranked) > 1:
        if strict:
            raise AmbiguousPrefix(counts)
        listing = ", ".join(f"{p}={n}" for p, n in ranked)
        msg = f"ambiguous {what} prefix ({listing}); chose {ranked[0][0]}"
        log.warning(msg)
        if notes is not None:
            notes.append(msg)
    return ranked[0][0]


def has_plain_stdlib(images):
    return any(t.startswith(PLAIN_STDLIB_PREFIX) for img in images for t in img.type_table)


def find_stdlib_prefix(images, db, *, strict=False, notes=None):
    """Descriptor prefix of the (possibly renamed) Kotlin standard library.

    Returns ``Lkotlin/`` when plain descriptors exist; otherwise the root
    package of the classes whose code matches the stdlib signatures, or
    None.  Competing roots resolve to the most frequent (ties: smallest);
    with ``strict=True`` they raise :class:`AmbiguousPrefix` instead.
    """
    if has_plain_stdlib(images):
        return PLAIN_STDLIB_PREFIX
    for sig in db.stdlib_signatures:
        counts = Counter()
        for hit in signature_hits(images, sig):
            root = _root_of(hit.class_descriptor)
            if root is not None:
                counts[root] += 1
        if counts:
            return _pick(counts, strict, notes, "stdlib")
    return None


def find_feature_prefix(images, db, feature, stdlib_prefix, *, strict=False, notes=None):
    """Descriptor prefix of a feature package, one segment below the stdlib root."""
    if stdlib_prefix is None:
        return None
    for segment in FEATURE_SEGMENTS[feature]:
        plain = stdlib_prefix + segment + "/"
        if any(t.startswith(plain) for img in images for t in img.type_table):
            return plain
    counts = Counter()
    for sig in db.for_feature(feature):
        for hit in signature_hits(images, sig):
            prefix = _child_of(hit.class_descriptor, stdlib_prefix)
            if prefix is None:
                if strict:
                    raise StructureViolation(feature, hit.class_descriptor, stdlib_prefix)
                msg = (f"{feature}: signature {sig.label} matched in {hit.class_descriptor}, "
                       f"outside {stdlib_prefix}; ignored")
                log.warning(msg)
                if notes is not None:
                    notes.append(msg)
                continue
            counts[prefix] += 1
    if not counts:
        return None
    return _pick(counts, strict, notes, feature)
