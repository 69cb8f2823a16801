import zipfile

import pytest
from hypothesis import given, strategies as st

from kotlinscope.apk import dex_order, open_apk
from kotlinscope.errors import CorruptEntry, NoDexFound, NoManifest, NotAZipArchive
from kotlinscope.synth.axmlwriter import manifest

MANIFEST = manifest("com.example")


def make(path, names, compression=zipfile.ZIP_DEFLATED, manifest_bytes=MANIFEST):
    with zipfile.ZipFile(path, "w", compression=compression) as zf:
        if manifest_bytes is not None:
            zf.writestr("AndroidManifest.xml", manifest_bytes)
        for n in names:
            zf.writestr(n, f"payload of {n}".encode() * 7)
    return path


def test_three_images_in_order(tmp_path):
    art = open_apk(make(tmp_path / "a.apk", ["classes3.dex", "classes.dex", "classes2.dex"]))
    assert [n for n, _ in art.dex_images] == ["classes.dex", "classes2.dex", "classes3.dex"]
    assert art.manifest_bytes == MANIFEST
    assert art.total_dex_bytes == sum(len(b) for _, b in art.dex_images)


def test_single_image(tmp_path):
    art = open_apk(make(tmp_path / "a.apk", ["classes.dex"]))
    assert len(art.dex_images) == 1


def test_numeric_not_lexicographic_order(tmp_path):
    art = open_apk(make(tmp_path / "a.apk", ["classes.dex", "classes10.dex", "classes2.dex"]))
    names = [n for n, _ in art.dex_images]
    assert names == sorted(names, key=lambda n: int(n[7:-4] or 1))
    assert names == ["classes.dex", "classes2.dex", "classes10.dex"]


@pytest.mark.parametrize("compression", [zipfile.ZIP_STORED, zipfile.ZIP_DEFLATED])
def test_roundtrip_payloads(tmp_path, compression):
    blobs = {"classes.dex": bytes(range(256)) * 40, "classes2.dex": b"\0" * 5000}
    path = tmp_path / "r.apk"
    with zipfile.ZipFile(path, "w", compression=compression) as zf:
        zf.writestr("AndroidManifest.xml", MANIFEST)
        for n, b in blobs.items():
            zf.writestr(n, b)
    assert dict(open_apk(path).dex_images) == blobs


def test_stray_names_ignored(tmp_path):
    art = open_apk(make(tmp_path / "a.apk", ["classes.dex", "classes1.dex", "classesX.dex",
                                              "assets/classes2.dex", "classes02.dex"]))
    assert [n for n, _ in art.dex_images] == ["classes.dex"]
    assert any("classes1.dex" in w for w in art.warnings)


@given(st.text(alphabet="classe0123456789.dxX/", max_size=16))
def test_name_filter(name):
    order = dex_order(name)
    if order is not None:
        assert name == "classes.dex" or (name[7:-4].isdigit() and int(name[7:-4]) >= 2)
        assert "/" not in name


def test_not_a_zip(tmp_path):
    p = tmp_path / "x.apk"
    p.write_bytes(b"plain text, not an archive")
    with pytest.raises(NotAZipArchive):
        open_apk(p)


def test_missing_file_is_not_a_zip(tmp_path):
    with pytest.raises(NotAZipArchive):
        open_apk(tmp_path / "missing.apk")


def test_no_dex(tmp_path):
    with pytest.raises(NoDexFound):
        open_apk(make(tmp_path / "a.apk", ["resources.arsc"]))


def test_no_manifest(tmp_path):
    with pytest.raises(NoManifest):
        open_apk(make(tmp_path / "a.apk", ["classes.dex"], manifest_bytes=None))


def test_corrupt_entry_names_entry(tmp_path):
    path = make(tmp_path / "a.apk", ["classes.dex"])
    data = bytearray(path.read_bytes())
    # damage the compressed stream of classes.dex
    pos = data.find(b"classes.dex") + len("classes.dex")
    for i in range(pos, pos + 12):
        data[i] ^= 0xFF
    path.write_bytes(bytes(data))
    with pytest.raises(CorruptEntry) as info:
        open_apk(path)
    assert info.value.entry == "classes.dex"


def test_duplicate_entries_last_wins(tmp_path):
    path = tmp_path / "d.apk"
    with pytest.warns(UserWarning):
        with zipfile.ZipFile(path, "w") as zf:
            zf.writestr("AndroidManifest.xml", MANIFEST)
            zf.writestr("classes.dex", b"first")
            zf.writestr("classes.dex", b"second")
    art = open_apk(path)
    assert art.dex_images == (("classes.dex", b"second"),)
    assert any("duplicate" in w for w in art.warnings)
