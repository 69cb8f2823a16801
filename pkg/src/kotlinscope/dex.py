"""DEX file parsing: id tables, class definitions and per-method bytecode.

Only the parts of the format needed for invocation tracing are decoded:
the string, type, proto, field and method id tables, class definitions
with their class_data, and the code item of every concrete method.
Annotations, debug info and static values are skipped.
"""

import struct
from dataclasses import dataclass, field
from functools import cached_property
from typing import NamedTuple, Optional

from . import opcodes
from .errors import (
    BadMagic,
    DexError,
    IndexOutOfBounds,
    MalformedBytecode,
    TruncatedTable,
    UnsupportedVersion,
)

HEADER_SIZE = 0x70
ENDIAN_CONSTANT = 0x12345678
NO_INDEX = 0xFFFFFFFF
MAX_METHOD_REFS = 0x10000
SUPPORTED_VERSIONS = (35, 36, 37, 38, 39)
BAD_STRING = "�<bad-mutf8>"

ACC_STATIC = 0x8
ACC_INTERFACE = 0x200
ACC_ABSTRACT = 0x400

_HEADER = struct.Struct("<8sI20sIIIIIIIIIIIIIIIIIIII")


class Proto(NamedTuple):
    shorty: str
    return_type_index: int
    parameter_type_indices: tuple


class FieldRef(NamedTuple):
    class_type_index: int
    type_index: int
    name_string_index: int


class MethodRef(NamedTuple):
    class_type_index: int
    proto_index: int
    name_string_index: int


class MethodDef(NamedTuple):
    method_ref_index: int
    access_flags: int
    # absolute offset of the first instruction inside the DEX buffer, 0 without code
    code_offset: int
    # B(m): bytecode length in bytes (2 x insns_size)
    bytecode_length: int
    bytecode: memoryview

    @property
    def has_code(self):
        return self.bytecode_length > 0


class ClassDef(NamedTuple):
    type_index: int
    superclass_index: Optional[int]
    access_flags: int
    annotations_offset: int
    methods: tuple

    @property
    def code_bytes(self):
        return sum(m.bytecode_length for m in self.methods)


class Instruction(NamedTuple):
    offset: int
    opcode: int
    length: int
    invoked_method_index: Optional[int] = None


def read_uleb128(data, pos):
    """Decode a ULEB128 value at ``pos``; returns (value, next position)."""
    result = 0
    shift = 0
    end = len(data)
    while True:
        if pos >= end:
            raise TruncatedTable("ULEB128 value runs past end of buffer")
        b = data[pos]
        pos += 1
        result |= (b & 0x7F) << shift
        if b < 0x80:
            return result, pos
        shift += 7
        if shift > 28:
            raise DexError("ULEB128 value longer than 5 bytes")


def decode_mutf8(raw):
    """Decode Modified UTF-8 (two-byte NUL, surrogate pairs as 3-byte units)."""
    units = []
    i = 0
    n = len(raw)
    while i < n:
        b = raw[i]
        if b < 0x80:
            units.append(b)
            i += 1
        elif b & 0xE0 == 0xC0:
            if i + 1 >= n or raw[i + 1] & 0xC0 != 0x80:
                raise ValueError("bad 2-byte sequence")
            units.append(((b & 0x1F) << 6) | (raw[i + 1] & 0x3F))
            i += 2
        elif b & 0xF0 == 0xE0:
            if i + 2 >= n or raw[i + 1] & 0xC0 != 0x80 or raw[i + 2] & 0xC0 != 0x80:
                raise ValueError("bad 3-byte sequence")
            units.append(((b & 0x0F) << 12) | ((raw[i + 1] & 0x3F) << 6) | (raw[i + 2] & 0x3F))
            i += 3
        else:
            raise ValueError(f"invalid MUTF-8 lead byte {b:#x}")
    buf = struct.pack(f"<{len(units)}H", *units)
    return buf.decode("utf-16-le", errors="surrogatepass").encode(
        "utf-16-le", errors="surrogatepass"
    ).decode("utf-16-le", errors="replace")


def encode_mutf8(text):
    """Encode ``text`` as Modified UTF-8 (used by the fixture writer)."""
    out = bytearray()
    utf16 = text.encode("utf-16-le", errors="surrogatepass")
    for (unit,) in struct.iter_unpack("<H", utf16):
        if 0 < unit < 0x80:
            out.append(unit)
        elif unit < 0x800:
            out += bytes((0xC0 | (unit >> 6), 0x80 | (unit & 0x3F)))
        else:
            out += bytes((0xE0 | (unit >> 12), 0x80 | ((unit >> 6) & 0x3F), 0x80 | (unit & 0x3F)))
    return bytes(out)


def _table(data, off, count, item_size, name):
    if count == 0:
        return
    if off < HEADER_SIZE or off + count * item_size > len(data):
        raise TruncatedTable(f"{name} table ({count} items at {off:#x}) extends past end of buffer")


@dataclass(frozen=True, eq=False)
class DexImage:
    """Parsed view of one DEX file.

    ``class_defs`` is decoded on first access so that callers which only
    need the id tables (presence checks on Kotlin-free apps) never pay for
    class_data and code item decoding.
    """

    data: bytes = field(repr=False)
    version: int
    string_table: list = field(repr=False)
    type_table: list = field(repr=False)
    proto_table: list = field(repr=False)
    field_table: list = field(repr=False)
    method_table: list = field(repr=False)
    class_def_offset: int = field(repr=False)
    class_def_count: int = 0
    bad_strings: int = 0
    name: str = ""

    @property
    def has_bad_strings(self):
        return self.bad_strings > 0

    @cached_property
    def class_defs(self):
        return _parse_class_defs(self)

    @cached_property
    def total_code_bytes(self):
        return sum(c.code_bytes for c in self.class_defs)

    @cached_property
    def _proto_descriptors(self):
        types = self.type_table
        return [
            "(" + "".join(types[i] for i in p.parameter_type_indices) + ")" + types[p.return_type_index]
            for p in self.proto_table
        ]

    def class_descriptor(self, type_index):
        return self.type_table[type_index]

    def method_triple(self, method_index):
        """(class descriptor, name, full proto descriptor) of a method id."""
        ref = self.method_table[method_index]
        return (
            self.type_table[ref.class_type_index],
            self.string_table[ref.name_string_index],
            self._proto_descriptors[ref.proto_index],
        )

    def method_triples(self):
        types = self.type_table
        strings = self.string_table
        protos = self._proto_descriptors
        return [(types[c], strings[n], protos[p]) for c, p, n in self.method_table]

    @cached_property
    def code_ranges(self):
        """Sorted (start, end, class_def, method) for every method with code."""
        ranges = []
        for cdef in self.class_defs:
            for m in cdef.methods:
                if m.bytecode_length:
                    ranges.append((m.code_offset, m.code_offset + m.bytecode_length, cdef, m))
        ranges.sort(key=lambda r: r[0])
        return ranges


def parse_dex(data, *, lazy=False, name=""):
    """Parse a DEX buffer into a :class:`DexImage`.

    With ``lazy=False`` (the default) class definitions and code items are
    decoded immediately so every structural error surfaces here.
    """
    data = bytes(data)
    if len(data) < 8 or data[:4] != b"dex\n" or data[7] != 0:
        raise BadMagic("buffer does not start with dex magic")
    try:
        version = int(data[4:7].decode("ascii"))
    except (UnicodeDecodeError, ValueError):
        raise BadMagic(f"unreadable dex version {data[4:7]!r}") from None
    if version not in SUPPORTED_VERSIONS:
        raise UnsupportedVersion(f"dex version {version:03d} not supported")
    if len(data) < HEADER_SIZE:
        raise TruncatedTable("buffer shorter than the 0x70-byte header")

    (_, _, _, _file_size, _header_size, endian_tag, _, _, _map_off,
     string_ids_size, string_ids_off, type_ids_size, type_ids_off,
     proto_ids_size, proto_ids_off, field_ids_size, field_ids_off,
     method_ids_size, method_ids_off, class_defs_size, class_defs_off,
     _, _) = _HEADER.unpack_from(data, 0)
    if endian_tag != ENDIAN_CONSTANT:
        raise DexError(f"unsupported endian tag {endian_tag:#x}")
    if method_ids_size > MAX_METHOD_REFS:
        raise DexError(f"{method_ids_size} method ids exceed the 64K reference limit")

    _table(data, string_ids_off, string_ids_size, 4, "string_ids")
    _table(data, type_ids_off, type_ids_size, 4, "type_ids")
    _table(data, proto_ids_off, proto_ids_size, 12, "proto_ids")
    _table(data, field_ids_off, field_ids_size, 8, "field_ids")
    _table(data, method_ids_off, method_ids_size, 8, "method_ids")
    _table(data, class_defs_off, class_defs_size, 32, "class_defs")

    strings, bad = _parse_strings(data, string_ids_off, string_ids_size)
    n_strings = len(strings)

    type_idx = struct.unpack_from(f"<{type_ids_size}I", data, type_ids_off) if type_ids_size else ()
    if type_idx and max(type_idx) >= n_strings:
        raise IndexOutOfBounds("type_ids entry references a missing string")
    types = [strings[i] for i in type_idx]
    n_types = len(types)

    protos = []
    type_lists = {}
    if proto_ids_size:
        for shorty_idx, ret_idx, params_off in struct.iter_unpack(
            "<III", data[proto_ids_off:proto_ids_off + 12 * proto_ids_size]
        ):
            if shorty_idx >= n_strings or ret_idx >= n_types:
                raise IndexOutOfBounds("proto_ids entry references a missing string or type")
            params = type_lists.get(params_off)
            if params is None:
                params = _type_list(data, params_off, n_types)
                type_lists[params_off] = params
            protos.append(Proto(strings[shorty_idx], ret_idx, params))

    fields = []
    if field_ids_size:
        fields = [FieldRef(*f) for f in struct.iter_unpack(
            "<HHI", data[field_ids_off:field_ids_off + 8 * field_ids_size])]
        if (max(f[0] for f in fields) >= n_types or max(f[1] for f in fields) >= n_types
                or max(f[2] for f in fields) >= n_strings):
            raise IndexOutOfBounds("field_ids entry out of bounds")

    methods = []
    if method_ids_size:
        methods = [MethodRef(*m) for m in struct.iter_unpack(
            "<HHI", data[method_ids_off:method_ids_off + 8 * method_ids_size])]
        if (max(m[0] for m in methods) >= n_types or max(m[1] for m in methods) >= len(protos)
                or max(m[2] for m in methods) >= n_strings):
            raise IndexOutOfBounds("method_ids entry out of bounds")

    image = DexImage(
        data=data,
        version=version,
        string_table=strings,
        type_table=types,
        proto_table=protos,
        field_table=fields,
        method_table=methods,
        class_def_offset=class_defs_off,
        class_def_count=class_defs_size,
        bad_strings=bad,
        name=name,
    )
    if not lazy:
        image.class_defs  # noqa: B018 - forces decoding
    return image


def _parse_strings(data, off, count):
    if not count:
        return [], 0
    offsets = struct.unpack_from(f"<{count}I", data, off)
    size = len(data)
    strings = []
    append = strings.append
    find = data.find
    bad = 0
    for soff in offsets:
        if soff >= size:
            raise TruncatedTable(f"string data offset {soff:#x} past end of buffer")
        b = data[soff]
        if b < 0x80:
            start = soff + 1
        else:
            _, start = read_uleb128(data, soff)
        end = find(b"\0", start)
        if end < 0:
            raise TruncatedTable(f"unterminated string at {soff:#x}")
        raw = data[start:end]
        try:
            append(raw.decode("utf-8"))
        except UnicodeDecodeError:
            try:
                append(decode_mutf8(raw))
            except ValueError:
                append(BAD_STRING)
                bad += 1
    return strings, bad


def _type_list(data, off, n_types):
    if off == 0:
        return ()
    if off + 4 > len(data):
        raise TruncatedTable(f"type_list at {off:#x} past end of buffer")
    (n,) = struct.unpack_from("<I", data, off)
    if off + 4 + 2 * n > len(data):
        raise TruncatedTable(f"type_list at {off:#x} past end of buffer")
    items = struct.unpack_from(f"<{n}H", data, off + 4)
    if items and max(items) >= n_types:
        raise IndexOutOfBounds("type_list references a missing type")
    return items


def _parse_class_defs(image):
    data = image.data
    size = len(data)
    n_types = len(image.type_table)
    n_methods = len(image.method_table)
    view = memoryview(data)
    off = image.class_def_offset
    result = []
    for (class_idx, access, super_idx, _ifaces, _src, annotations_off,
         class_data_off, _static) in struct.iter_unpack(
            "<8I", data[off:off + 32 * image.class_def_count]):
        if class_idx >= n_types:
            raise IndexOutOfBounds("class_def references a missing type")
        if super_idx == NO_INDEX:
            super_idx = None
        elif super_idx >= n_types:
            raise IndexOutOfBounds("class_def superclass references a missing type")
        methods = ()
        if class_data_off:
            methods = _parse_class_data(data, view, size, class_data_off, n_methods)
        result.append(ClassDef(class_idx, super_idx, access, annotations_off, methods))
    return result


def _parse_class_data(data, view, size, pos, n_methods):
    if pos >= size:
        raise TruncatedTable(f"class_data at {pos:#x} past end of buffer")
    counts = []
    for _ in range(4):
        v, pos = read_uleb128(data, pos)
        counts.append(v)
    sfields, ifields, dmethods, vmethods = counts
    # every encoded member takes at least two bytes; reject absurd counts early
    if 2 * (sfields + ifields) + 3 * (dmethods + vmethods) > size - pos:
        raise TruncatedTable("class_data member counts exceed buffer")
    for _ in range(sfields + ifields):
        _, pos = read_uleb128(data, pos)
        _, pos = read_uleb128(data, pos)
    methods = []
    for group in (dmethods, vmethods):
        idx = 0
        for _ in range(group):
            diff, pos = read_uleb128(data, pos)
            access, pos = read_uleb128(data, pos)
            code_off, pos = read_uleb128(data, pos)
            idx += diff
            if idx >= n_methods:
                raise IndexOutOfBounds(f"encoded method index {idx} out of bounds")
            if code_off:
                if code_off + 16 > size:
                    raise TruncatedTable(f"code_item at {code_off:#x} past end of buffer")
                (insns,) = struct.unpack_from("<I", data, code_off + 12)
                start = code_off + 16
                length = insns * 2
                if start + length > size:
                    raise TruncatedTable(f"code_item at {code_off:#x} instructions past end of buffer")
                methods.append(MethodDef(idx, access, start if length else 0, length,
                                         view[start:start + length]))
            else:
                methods.append(MethodDef(idx, access, 0, 0, view[0:0]))
    return tuple(methods)


def descriptor_of_method(image, method_index):
    """Return (class descriptor, method name, proto shorty) for a method id."""
    if not 0 <= method_index < len(image.method_table):
        raise IndexOutOfBounds(
            f"method index {method_index} outside table of {len(image.method_table)}"
        )
    ref = image.method_table[method_index]
    return (
        image.type_table[ref.class_type_index],
        image.string_table[ref.name_string_index],
        image.proto_table[ref.proto_index].shorty,
    )


def iterate_instructions(method):
    """Yield every :class:`Instruction` of a method, payloads included."""
    code = method.bytecode
    if method.bytecode_length <= 0:
        raise MalformedBytecode("method has no bytecode")
    n_units = method.bytecode_length // 2
    units = struct.unpack(f"<{n_units}H", code[: n_units * 2])
    width = opcodes.WIDTH
    kind = opcodes.KIND
    pc = 0
    while pc < n_units:
        unit = units[pc]
        op = unit & 0xFF
        k = kind[op]
        if k == opcodes.UNUSED:
            raise MalformedBytecode(f"unassigned opcode {op:#04x} at unit {pc}")
        if k == opcodes.NOP and unit != 0:
            if pc + 2 > n_units:
                raise MalformedBytecode(f"payload header at unit {pc} runs past end")
            header = (units[pc + 1:pc + 4] + (0, 0))[:3]
            length = opcodes.payload_units(unit, header)
            if length is None:
                raise MalformedBytecode(f"unknown payload ident {unit:#06x} at unit {pc}")
        else:
            length = width[op]
        if pc + length > n_units:
            raise MalformedBytecode(f"instruction at unit {pc} runs past insns_size")
        target = units[pc + 1] if k == opcodes.INVOKE else None
        yield Instruction(pc, op, length, target)
        pc += length


def invoke_scan(data, start, length):
    """Fast decode of one method's instructions straight from the DEX buffer.

    Returns (invoked method indices, count of polymorphic/custom invokes).
    Equivalent to filtering :func:`iterate_instructions` but avoids
    building an Instruction per opcode.
    """
    bwidth = opcodes.BYTE_WIDTH
    kind = opcodes.KIND
    targets = []
    append = targets.append
    other = 0
    pc = start
    end = start + length
    try:
        while pc < end:
            op = data[pc]
            k = kind[op]
            if k:
                if k == 1:
                    append(data[pc + 2] | (data[pc + 3] << 8))
                elif k == 3:
                    hi = data[pc + 1]
                    if hi:
                        if pc + 4 > end:
                            raise MalformedBytecode(f"payload header at {pc:#x} runs past end")
                        h = struct.unpack_from("<HHH", data, pc + 2)
                        n = opcodes.payload_units(hi << 8, h)
                        if n is None:
                            raise MalformedBytecode(f"unknown payload ident at {pc:#x}")
                        pc += n * 2
                        continue
                elif k == 2:
                    other += 1
                else:
                    raise MalformedBytecode(f"unassigned opcode {op:#04x} at {pc:#x}")
            pc += bwidth[op]
    except (IndexError, struct.error):
        raise MalformedBytecode(f"instruction at {pc:#x} runs past end of buffer") from None
    if pc != end:
        raise MalformedBytecode(f"instruction at {pc:#x} runs past insns_size")
    return targets, other
