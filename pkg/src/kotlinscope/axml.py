"""Android binary XML (AXML) decoding, limited to the manifest package name."""

import struct
from dataclasses import dataclass

from .errors import MissingPackageAttribute, NotBinaryXml, TruncatedChunk

RES_STRING_POOL_TYPE = 0x0001
RES_XML_TYPE = 0x0003
RES_XML_START_NAMESPACE_TYPE = 0x0100
RES_XML_END_NAMESPACE_TYPE = 0x0101
RES_XML_START_ELEMENT_TYPE = 0x0102
RES_XML_END_ELEMENT_TYPE = 0x0103
RES_XML_CDATA_TYPE = 0x0104
RES_XML_RESOURCE_MAP_TYPE = 0x0180

UTF8_FLAG = 0x100
NO_ENTRY = 0xFFFFFFFF
TYPE_STRING = 0x03


@dataclass(frozen=True)
class ManifestInfo:
    package_name: str
    raw_attribute_count: int
    is_single_segment: bool = False


def _u16(buf, off):
    if off + 2 > len(buf):
        raise TruncatedChunk(f"read of 2 bytes at {off:#x} past end of buffer")
    return buf[off] | (buf[off + 1] << 8)


def _u32(buf, off):
    if off + 4 > len(buf):
        raise TruncatedChunk(f"read of 4 bytes at {off:#x} past end of buffer")
    return struct.unpack_from("<I", buf, off)[0]


def _chunk_header(buf, off, limit):
    if off + 8 > limit:
        raise TruncatedChunk(f"chunk header at {off:#x} exceeds its container")
    ctype, hsize, csize = struct.unpack_from("<HHI", buf, off)
    if hsize < 8 or csize < hsize or off + csize > limit:
        raise TruncatedChunk(
            f"chunk {ctype:#06x} at {off:#x} declares size {csize} beyond {limit - off} available"
        )
    return ctype, hsize, csize


class StringPool:
    """Lazily decoded AXML string pool."""

    def __init__(self, buf, off, hsize, csize):
        if hsize < 28:
            raise TruncatedChunk("string pool header too small")
        self.buf = buf
        self.start = off
        self.end = off + csize
        count, _styles, flags, strings_start, _ = struct.unpack_from("<IIIII", buf, off + 8)
        if off + hsize + 4 * count > self.end:
            raise TruncatedChunk("string pool offsets exceed chunk")
        self.count = count
        self.utf8 = bool(flags & UTF8_FLAG)
        self.data_start = off + strings_start
        self.offsets = struct.unpack_from(f"<{count}I", buf, off + hsize) if count else ()
        self._cache = {}

    def __len__(self):
        return self.count

    def get(self, index):
        if index == NO_ENTRY or index >= self.count:
            return None
        if index not in self._cache:
            self._cache[index] = self._decode(self.data_start + self.offsets[index])
        return self._cache[index]

    def _decode(self, pos):
        buf, end = self.buf, self.end
        if pos >= end:
            raise TruncatedChunk("string offset beyond string pool")
        if self.utf8:
            # character count, then byte count; each 1 or 2 bytes
            pos += 2 if buf[pos] & 0x80 else 1
            if pos >= end:
                raise TruncatedChunk("string header beyond string pool")
            n = buf[pos]
            if n & 0x80:
                if pos + 1 >= end:
                    raise TruncatedChunk("string header beyond string pool")
                n = ((n & 0x7F) << 8) | buf[pos + 1]
                pos += 2
            else:
                pos += 1
            if pos + n > end:
                raise TruncatedChunk("string bytes beyond string pool")
            return bytes(buf[pos:pos + n]).decode("utf-8", errors="replace")
        n = _u16(buf, pos)
        pos += 2
        if n & 0x8000:
            n = ((n & 0x7FFF) << 16) | _u16(buf, pos)
            pos += 2
        if pos + 2 * n > end:
            raise TruncatedChunk("string characters beyond string pool")
        return bytes(buf[pos:pos + 2 * n]).decode("utf-16-le", errors="replace")


def parse_manifest(manifest_bytes):
    """Return the ``package`` attribute of the root ``manifest`` element."""
    buf = bytes(manifest_bytes)
    if len(buf) < 8:
        raise NotBinaryXml("buffer shorter than a chunk header")
    ctype, hsize, csize = struct.unpack_from("<HHI", buf, 0)
    if ctype != RES_XML_TYPE:
        raise NotBinaryXml(f"first chunk type {ctype:#06x} is not an XML chunk")
    _, hsize, csize = _chunk_header(buf, 0, len(buf))

    pool = None
    pos = hsize
    limit = csize
    while pos < limit:
        ctype, chsize, ccsize = _chunk_header(buf, pos, limit)
        if ctype == RES_STRING_POOL_TYPE:
            pool = StringPool(buf, pos, chsize, ccsize)
        elif ctype == RES_XML_START_ELEMENT_TYPE:
            if pool is None:
                raise NotBinaryXml("element chunk before string pool")
            return _root_element(buf, pos, chsize, ccsize, pool)
        pos += ccsize
    raise MissingPackageAttribute("no element chunk found")


def _root_element(buf, off, hsize, csize, pool):
    ext = off + hsize
    end = off + csize
    if ext + 20 > end:
        raise TruncatedChunk("start element extension exceeds chunk")
    _ns, name_idx, attr_start, attr_size, attr_count = struct.unpack_from("<IIHHH", buf, ext)
    if pool.get(name_idx) != "manifest":
        raise MissingPackageAttribute(f"root element is {pool.get(name_idx)!r}, not 'manifest'")
    if attr_size < 20 and attr_count:
        raise TruncatedChunk("attribute records smaller than 20 bytes")
    first = ext + attr_start
    if first + attr_count * attr_size > end:
        raise TruncatedChunk("attributes exceed element chunk")
    for i in range(attr_count):
        a = first + i * attr_size
        ns, name, raw, _size, _res0, dtype, data = struct.unpack_from("<IIIHBBI", buf, a)
        if ns != NO_ENTRY or pool.get(name) != "package":
            continue
        value = pool.get(raw)
        if value is None and dtype == TYPE_STRING:
            value = pool.get(data)
        if not value:
            break
        return ManifestInfo(value, attr_count, "." not in value)
    raise MissingPackageAttribute("manifest element has no package attribute")
