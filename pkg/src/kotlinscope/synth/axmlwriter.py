"""Writer for Android binary XML documents (fixture manifests)."""

import struct

ANDROID_NS = "http://schemas.android.com/apk/res/android"

# framework attribute resource ids used in manifests
RESOURCE_IDS = {
    "versionCode": 0x0101021B,
    "versionName": 0x0101021C,
    "minSdkVersion": 0x0101020C,
    "name": 0x01010003,
    "label": 0x01010001,
}


class Element:
    def __init__(self, tag, attrs=(), children=()):
        # attrs: (namespace uri or None, name, string value)
        self.tag = tag
        self.attrs = list(attrs)
        self.children = list(children)


def _chunk(ctype, header, body):
    hsize = 8 + len(header)
    return struct.pack("<HHI", ctype, hsize, hsize + len(body)) + header + body


def _string_pool(strings, utf8):
    offsets, data = [], bytearray()
    for s in strings:
        offsets.append(len(data))
        if utf8:
            raw = s.encode("utf-8")
            for n in (len(s), len(raw)):
                data += bytes([n]) if n < 0x80 else bytes([0x80 | (n >> 8), n & 0xFF])
            data += raw + b"\0"
        else:
            raw = s.encode("utf-16-le")
            n = len(raw) // 2
            data += struct.pack("<H", n) if n < 0x8000 else struct.pack("<HH", 0x8000 | (n >> 16), n & 0xFFFF)
            data += raw + b"\0\0"
    while len(data) % 4:
        data.append(0)
    header_size = 28
    strings_start = header_size + 4 * len(strings)
    header = struct.pack("<IIIII", len(strings), 0, 0x100 if utf8 else 0, strings_start, 0)
    body = struct.pack(f"<{len(offsets)}I", *offsets) + bytes(data)
    return _chunk(0x0001, header, body)


def write_axml(root, utf8=False):
    """Encode an :class:`Element` tree as AXML bytes."""
    # attribute names with resource ids must come first in the pool
    names_with_ids, others = [], []

    def add(lst, s):
        if s not in names_with_ids and s not in others:
            lst.append(s)

    def walk(el):
        for ns, name, _ in el.attrs:
            if ns == ANDROID_NS and name in RESOURCE_IDS:
                add(names_with_ids, name)
        for c in el.children:
            walk(c)

    walk(root)

    def walk2(el):
        add(others, el.tag)
        for ns, name, value in el.attrs:
            if ns:
                add(others, ns)
            add(others, name)
            add(others, value)
        for c in el.children:
            walk2(c)

    uses_android = []

    def find_ns(el):
        for ns, _, _ in el.attrs:
            if ns == ANDROID_NS:
                uses_android.append(True)
        for c in el.children:
            find_ns(c)

    find_ns(root)
    if uses_android:
        add(others, "android")
        add(others, ANDROID_NS)
    walk2(root)
    others = [s for s in others if s not in names_with_ids]
    strings = names_with_ids + others
    index = {s: i for i, s in enumerate(strings)}

    body = bytearray(_string_pool(strings, utf8))
    if names_with_ids:
        ids = [RESOURCE_IDS[n] for n in names_with_ids]
        body += _chunk(0x0180, b"", struct.pack(f"<{len(ids)}I", *ids))
    ns_header = struct.pack("<II", 1, 0xFFFFFFFF)
    if uses_android:
        body += _chunk(0x0100, ns_header, struct.pack("<II", index["android"], index[ANDROID_NS]))

    def emit(el):
        attrs = bytearray()
        ordered = sorted(el.attrs, key=lambda a: RESOURCE_IDS.get(a[1], 0) if a[0] else 0)
        for ns, name, value in ordered:
            attrs += struct.pack(
                "<IIIHBBI",
                index[ns] if ns else 0xFFFFFFFF, index[name], index[value], 8, 0, 0x03, index[value],
            )
        ext = struct.pack("<IIHHHHHH", 0xFFFFFFFF, index[el.tag], 20, 20, len(el.attrs), 0, 0, 0)
        out = _chunk(0x0102, ns_header, ext + attrs)
        for c in el.children:
            out += emit(c)
        out += _chunk(0x0103, ns_header, struct.pack("<II", 0xFFFFFFFF, index[el.tag]))
        return out

    body += emit(root)
    if uses_android:
        body += _chunk(0x0101, ns_header, struct.pack("<II", index["android"], index[ANDROID_NS]))
    return struct.pack("<HHI", 0x0003, 8, 8 + len(body)) + bytes(body)


def manifest(package, activities=(), utf8=False):
    """A small but realistic manifest tree for ``package``."""
    app = Element(
        "application",
        [(ANDROID_NS, "label", "App")],
        [Element("activity", [(ANDROID_NS, "name", a)]) for a in activities],
    )
    root = Element(
        "manifest",
        [(ANDROID_NS, "versionCode", "1"), (ANDROID_NS, "versionName", "1.0"), (None, "package", package)],
        [app],
    )
    return write_axml(root, utf8=utf8)
