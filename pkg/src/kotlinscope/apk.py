"""APK (ZIP) container access: DEX images and the binary manifest."""

import logging
import re
import zipfile
import zlib
from dataclasses import dataclass

from .errors import CorruptEntry, NoDexFound, NoManifest, NotAZipArchive

log = logging.getLogger(__name__)

MANIFEST = "AndroidManifest.xml"
_DEX_NAME = re.compile(r"classes(\d*)\.dex")


@dataclass(frozen=True)
class ApkArtifact:
    dex_images: tuple  # ((name, bytes), ...) classes.dex first, then ascending N
    manifest_bytes: bytes
    apk_path: str
    total_dex_bytes: int
    warnings: tuple = ()


def dex_order(name):
    """Sort key for a DEX entry name, or None if the name is not a DEX image.

    ``classes.dex`` sorts first, ``classesN.dex`` by integer N (N >= 2).
    """
    m = _DEX_NAME.fullmatch(name)
    if not m:
        return None
    digits = m.group(1)
    if not digits:
        return 1
    n = int(digits)
    if n < 2 or str(n) != digits:
        return None
    return n


def open_apk(path):
    """Decompress every ``classes*.dex`` entry and the manifest of an APK."""
    path = str(path)
    try:
        zf = zipfile.ZipFile(path)
    except zipfile.BadZipFile as exc:
        raise NotAZipArchive(f"{path}: {exc}") from None
    except OSError as exc:
        raise NotAZipArchive(f"{path}: {exc}") from None

    warnings = []
    with zf:
        entries = {}
        for info in zf.infolist():
            if info.filename in entries:
                warnings.append(f"duplicate entry {info.filename}; using the last occurrence")
            entries[info.filename] = info

        dex_entries = []
        for name, info in entries.items():
            if not name.endswith(".dex"):
                continue
            order = dex_order(name)
            if order is None:
                if name.startswith("classes") and "/" not in name:
                    warnings.append(f"ignoring non-conforming DEX entry {name}")
                continue
            dex_entries.append((order, name, info))
        if not dex_entries:
            raise NoDexFound(f"{path}: no classes*.dex entries")
        if MANIFEST not in entries:
            raise NoManifest(f"{path}: no {MANIFEST}")

        dex_entries.sort()
        images = tuple((name, _read(zf, info)) for _, name, info in dex_entries)
        manifest = _read(zf, entries[MANIFEST])
    if not manifest:
        raise NoManifest(f"{path}: {MANIFEST} is empty")
    for w in warnings:
        log.warning("%s: %s", path, w)
    return ApkArtifact(
        dex_images=images,
        manifest_bytes=manifest,
        apk_path=path,
        total_dex_bytes=sum(len(b) for _, b in images),
        warnings=tuple(warnings),
    )


def _read(zf, info):
    if info.flag_bits & 0x1:
        raise CorruptEntry(info.filename, "encrypted entries are not supported")
    try:
        return zf.read(info)
    except (zipfile.BadZipFile, zlib.error, NotImplementedError, RuntimeError, EOFError, OSError) as exc:
        raise CorruptEntry(info.filename, str(exc)) from None
