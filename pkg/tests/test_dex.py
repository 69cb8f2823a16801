import struct

import pytest
from androguard.core.dex import DEX
from hypothesis import given, strategies as st

from kotlinscope import opcodes
from kotlinscope.dex import (
    MethodDef,
    decode_mutf8,
    descriptor_of_method,
    encode_mutf8,
    invoke_scan,
    iterate_instructions,
    parse_dex,
    read_uleb128,
)
from kotlinscope.errors import (
    BadMagic,
    DexError,
    IndexOutOfBounds,
    MalformedBytecode,
    TruncatedTable,
    UnsupportedVersion,
)
from kotlinscope.synth.dexwriter import (
    ACC_PUBLIC,
    ACC_STATIC,
    ClassSpec,
    ConstString,
    Invoke,
    MethodKey,
    MethodSpec,
    Raw,
    write_dex,
)

from oracles import INVOKES, triple

RANGES = "Lkotlin/ranges/IntRange;"


def method(code):
    return MethodDef(0, 0, 0, len(code), memoryview(code))


def one_class_dex(version=35, code=None, extra_strings=()):
    code = code or [Raw(bytes.fromhex("0e00"))]
    cls = ClassSpec("Lcom/example/A;", methods=[
        MethodSpec("<init>", "V", (), ACC_PUBLIC | 0x10000, code=[
            Invoke(MethodKey("Ljava/lang/Object;", "<init>"), 0x70, (0,)), Raw(b"\x0e\x00")], registers=1),
        MethodSpec("run", "V", (), ACC_PUBLIC | ACC_STATIC, code=code, registers=4),
    ])
    return write_dex([cls], version=version, extra_strings=extra_strings)


def test_fixture_one_class_two_methods_matches_androguard():
    data = one_class_dex()
    img = parse_dex(data)
    assert img.version == 35
    assert len(img.class_defs) == 1
    assert len(img.method_table) >= 2
    d = DEX(data)
    assert img.string_table == list(d.get_strings())
    assert [img.method_triple(i) for i in range(len(img.method_table))] == \
        [triple(d, i) for i in range(d.header.method_ids_size)]
    (c,) = d.get_classes()
    ours = {img.method_triple(m.method_ref_index)[1]: m.bytecode_length for m in img.class_defs[0].methods}
    theirs = {m.get_name(): 2 * m.get_code().insns_size for m in c.get_methods()}
    assert ours == theirs


@pytest.mark.parametrize("version", [35, 36, 37, 38, 39])
def test_supported_versions(version):
    assert parse_dex(one_class_dex(version=version)).version == version


def test_empty_buffer_is_bad_magic():
    with pytest.raises(BadMagic):
        parse_dex(b"")


def test_unsupported_version():
    data = bytearray(one_class_dex())
    data[4:7] = b"040"
    with pytest.raises(UnsupportedVersion):
        parse_dex(bytes(data))


def test_bad_endian_tag():
    data = bytearray(one_class_dex())
    struct.pack_into("<I", data, 0x28, 0x78563412)
    with pytest.raises(DexError):
        parse_dex(bytes(data))


def test_string_ids_past_end_is_truncated_table():
    data = bytearray(one_class_dex())
    struct.pack_into("<I", data, 0x3C, len(data) - 4)  # string_ids_off
    with pytest.raises(TruncatedTable):
        parse_dex(bytes(data))


def test_string_data_offset_past_end_is_truncated_table():
    data = bytearray(one_class_dex())
    string_ids = struct.unpack_from("<I", data, 0x3C)[0]
    struct.pack_into("<I", data, string_ids, len(data) + 100)
    with pytest.raises(TruncatedTable):
        parse_dex(bytes(data))


def test_type_index_out_of_bounds():
    data = bytearray(one_class_dex())
    type_ids = struct.unpack_from("<I", data, 0x44)[0]
    struct.pack_into("<I", data, type_ids, 0xFFFF)
    with pytest.raises(IndexOutOfBounds):
        parse_dex(bytes(data))


def test_descriptor_of_method():
    cls = ClassSpec(RANGES, methods=[MethodSpec("first", "I", (), ACC_PUBLIC, code=[Raw(b"\x12\x00\x0f\x00")],
                                                registers=1)])
    img = parse_dex(write_dex([cls]))
    idx = next(i for i in range(len(img.method_table)) if img.method_triple(i)[1] == "first")
    assert descriptor_of_method(img, idx) == (RANGES, "first", "I")
    with pytest.raises(IndexOutOfBounds):
        descriptor_of_method(img, len(img.method_table))


def test_descriptor_returned_verbatim_for_renamed_class():
    cls = ClassSpec("La/b/c;", methods=[MethodSpec("a", "V", (), ACC_PUBLIC, code=[Raw(b"\x0e\x00")])])
    img = parse_dex(write_dex([cls]))
    assert descriptor_of_method(img, 0)[0] == "La/b/c;"


def test_invoke_virtual_then_return():
    ins = list(iterate_instructions(method(bytes.fromhex("6e2003001000 0e00".replace(" ", "")))))
    assert [(i.offset, i.opcode, i.length, i.invoked_method_index) for i in ins] == \
        [(0, 0x6E, 3, 3), (3, 0x0E, 1, None)]


def test_return_void_only():
    (ins,) = iterate_instructions(method(b"\x0e\x00"))
    assert ins.invoked_method_index is None and ins.length == 1


def packed_switch_method(entries):
    # packed-switch v0, +3 ; return-void ; payload
    payload = struct.pack("<HHi", 0x0100, entries, 0) + struct.pack(f"<{entries}i", *([3] * entries))
    return bytes.fromhex("2b000300 0000 0e00".replace(" ", "")) + payload


def test_packed_switch_payload_length_against_androguard():
    # 4 entries: ident + size + 2-unit first_key + 4 two-unit targets = 12 units
    assert opcodes.payload_units(0x0100, (4, 0, 0)) == 4 * 2 + 4 == 12
    code = packed_switch_method(4)
    ins = list(iterate_instructions(method(code)))
    assert ins[-1].length == 12
    assert ins[-1].offset + ins[-1].length == len(code) // 2

    cls = ClassSpec("LSwitch;", methods=[MethodSpec("s", "V", ("I",), ACC_PUBLIC | ACC_STATIC,
                                                    code=[Raw(code)], registers=1)])
    d = DEX(write_dex([cls]))
    (m,) = [m for c in d.get_classes() for m in c.get_methods() if m.get_name() == "s"]
    theirs = [i.get_length() for i in m.get_code().get_bc().get_instructions()]
    assert theirs == [2 * i.length for i in ins]
    assert theirs[-1] == 24


@pytest.mark.parametrize("size,width,units", [(0, 1, 4), (3, 1, 6), (3, 2, 7), (2, 4, 8), (1, 8, 8)])
def test_fill_array_data_payload(size, width, units):
    assert opcodes.payload_units(0x0300, (width, size & 0xFFFF, size >> 16)) == units


def test_sparse_switch_payload():
    assert opcodes.payload_units(0x0200, (3, 0, 0)) == 3 * 4 + 2


def test_unknown_opcode_is_malformed():
    with pytest.raises(MalformedBytecode):
        list(iterate_instructions(method(b"\x3e\x00")))
    with pytest.raises(MalformedBytecode):
        invoke_scan(b"\x3e\x00", 0, 2)


def test_instruction_past_end_is_malformed():
    with pytest.raises(MalformedBytecode):
        list(iterate_instructions(method(b"\x6e\x20\x03\x00")))
    with pytest.raises(MalformedBytecode):
        invoke_scan(b"\x6e\x20\x03\x00", 0, 4)


def test_polymorphic_invokes_counted_separately():
    code = bytes.fromhex("fa2001000000 0200 0e00".replace(" ", ""))
    targets, other = invoke_scan(code, 0, len(code))
    assert targets == [] and other == 1
    assert [i.invoked_method_index for i in iterate_instructions(method(code))] == [None, None]


# every assigned opcode, with arbitrary operand bytes, decoded by both walkers
ASSIGNED = [op for op in range(256) if opcodes.KIND[op] not in (opcodes.UNUSED, opcodes.NOP)]


@given(st.lists(st.tuples(st.sampled_from(ASSIGNED), st.binary(min_size=10, max_size=10)), max_size=40))
def test_tiling_and_fast_scan_agree(ops):
    code = b"".join(bytes([op]) + operands[:2 * opcodes.WIDTH[op] - 1] for op, operands in ops) + b"\x0e\x00"
    ins = list(iterate_instructions(method(code)))
    pos = 0
    for i in ins:
        assert i.offset == pos
        pos += i.length
    assert pos == len(code) // 2
    targets, other = invoke_scan(code, 0, len(code))
    assert targets == [i.invoked_method_index for i in ins if i.invoked_method_index is not None]
    assert other == sum(1 for i in ins if opcodes.KIND[i.opcode] == opcodes.INVOKE_OTHER)


def test_invoke_targets_match_androguard():
    k = MethodKey("Lcom/example/B;", "go", "V", ("I",))
    code = [Invoke(k, 0x71, (1,)), Invoke(k, 0x77, (0, 2)), ConstString(0, "x"), Raw(b"\x0e\x00")]
    data = one_class_dex(code=code)
    img = parse_dex(data)
    d = DEX(data)
    for cdef in img.class_defs:
        for m in cdef.methods:
            ours = [img.method_triple(t) for t in invoke_scan(img.data, m.code_offset, m.bytecode_length)[0]]
            name = img.method_triple(m.method_ref_index)[1]
            am = next(x for c in d.get_classes() for x in c.get_methods() if x.get_name() == name)
            theirs = [triple(d, i.get_ref_kind()) for i in am.get_code().get_bc().get_instructions()
                      if i.get_op_value() in INVOKES]
            assert ours == theirs


def test_cross_dex_invoke_resolves_by_descriptor():
    callee = MethodKey("Lcom/example/Other;", "work", "V")
    first = write_dex([ClassSpec("Lcom/example/Main;", methods=[MethodSpec(
        "run", "V", (), ACC_PUBLIC | ACC_STATIC, code=[Invoke(callee, 0x71), Raw(b"\x0e\x00")])])])
    second = write_dex([ClassSpec("Lcom/example/Other;", methods=[MethodSpec(
        "work", "V", (), ACC_PUBLIC | ACC_STATIC, code=[Raw(b"\x0e\x00")])])])
    a, b = parse_dex(first), parse_dex(second)
    assert "Lcom/example/Other;" not in {a.type_table[c.type_index] for c in a.class_defs}
    m = a.class_defs[0].methods[0]
    (target,) = invoke_scan(a.data, m.code_offset, m.bytecode_length)[0]
    assert a.method_triple(target) == ("Lcom/example/Other;", "work", "()V")
    assert a.method_triple(target) in set(b.method_triples())


def test_total_code_bytes_and_lazy_parse():
    data = one_class_dex()
    lazy = parse_dex(data, lazy=True)
    assert "class_defs" not in lazy.__dict__
    assert lazy.total_code_bytes == sum(m.bytecode_length for c in lazy.class_defs for m in c.methods)
    assert lazy.total_code_bytes == 8 + 2


def test_abstract_methods_have_no_code():
    cls = ClassSpec("LI;", access=0x601, methods=[MethodSpec("f", "V", (), 0x401)])
    (m,) = parse_dex(write_dex([cls])).class_defs[0].methods
    assert m.bytecode_length == 0 and len(m.bytecode) == 0


def test_methods_reference_their_class():
    img = parse_dex(one_class_dex())
    for c in img.class_defs:
        for m in c.methods:
            assert img.method_table[m.method_ref_index].class_type_index == c.type_index


def test_too_many_method_ids_rejected():
    data = bytearray(one_class_dex())
    struct.pack_into("<I", data, 0x58, 65537)
    with pytest.raises(DexError):
        parse_dex(bytes(data))


@given(st.text(alphabet=st.characters(blacklist_categories=("Cs",)), max_size=40))
def test_mutf8_roundtrip(s):
    raw = encode_mutf8(s)
    assert b"\x00" not in raw
    assert decode_mutf8(raw) == s


def test_mutf8_strings_survive_androguard():
    data = one_class_dex(extra_strings=("nul\x00inside", "café", "\U0001F600"))
    img = parse_dex(data)
    for s in ("nul\x00inside", "café", "\U0001F600"):
        assert s in img.string_table
    assert img.bad_strings == 0


def test_malformed_mutf8_is_sentinel_not_fatal():
    data = bytearray(one_class_dex(extra_strings=("zzzzbad",)))
    pos = data.find(b"zzzzbad")
    data[pos] = 0xFF
    img = parse_dex(bytes(data))
    assert img.bad_strings == 1


@given(st.integers(min_value=0, max_value=2**32 - 1))
def test_uleb128_roundtrip(value):
    out = bytearray()
    v = value
    while True:
        b = v & 0x7F
        v >>= 7
        out.append(b | (0x80 if v else 0))
        if not v:
            break
    assert read_uleb128(bytes(out), 0) == (value, len(out))
