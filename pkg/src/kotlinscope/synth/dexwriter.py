"""Minimal DEX writer for building test and benchmark fixtures.

Classes are described with :class:`ClassSpec`/:class:`MethodSpec`; method
bodies mix raw code units with symbolic operations (:class:`Invoke`,
:class:`ConstString`, :class:`TypeOp`) whose indices are resolved after
the id tables are sorted the way the format requires.
"""

import hashlib
import struct
import zlib
from dataclasses import dataclass, field

from ..dex import encode_mutf8

ACC_PUBLIC = 0x1
ACC_PRIVATE = 0x2
ACC_STATIC = 0x8
ACC_FINAL = 0x10
ACC_INTERFACE = 0x200
ACC_ABSTRACT = 0x400
ACC_CONSTRUCTOR = 0x10000

OBJECT = "Ljava/lang/Object;"


@dataclass(frozen=True)
class MethodKey:
    cls: str
    name: str
    ret: str = "V"
    params: tuple = ()

    @property
    def shorty(self):
        return "".join(_short(t) for t in (self.ret,) + tuple(self.params))

    @property
    def proto(self):
        return "(" + "".join(self.params) + ")" + self.ret


def _short(t):
    return "L" if t[0] in "L[" else t[0]


@dataclass(frozen=True)
class Raw:
    data: bytes

    def __post_init__(self):
        if len(self.data) % 2:
            raise ValueError("raw code must be whole 16-bit code units")


@dataclass(frozen=True)
class Invoke:
    target: MethodKey
    opcode: int = 0x71
    regs: tuple = ()


@dataclass(frozen=True)
class ConstString:
    reg: int
    value: str


@dataclass(frozen=True)
class TypeOp:
    """A 21c instruction with a type operand (const-class, check-cast, new-instance)."""

    opcode: int
    reg: int
    descriptor: str


@dataclass
class MethodSpec:
    name: str
    ret: str = "V"
    params: tuple = ()
    access: int = ACC_PUBLIC
    code: list = None  # None -> abstract/native, no code item
    registers: int = 0

    def key(self, cls):
        return MethodKey(cls, self.name, self.ret, tuple(self.params))


@dataclass
class ClassSpec:
    descriptor: str
    superclass: str = OBJECT
    access: int = ACC_PUBLIC
    interfaces: tuple = ()
    methods: list = field(default_factory=list)
    annotations: tuple = ()


def _align(buf, n):
    while len(buf) % n:
        buf.append(0)


def _uleb(value):
    out = bytearray()
    while True:
        b = value & 0x7F
        value >>= 7
        if value:
            out.append(b | 0x80)
        else:
            out.append(b)
            return bytes(out)


def _sort_key(s):
    return s.encode("utf-16-be", errors="surrogatepass")


def _ordered_classes(classes):
    by_name = {c.descriptor: c for c in classes}
    if len(by_name) != len(classes):
        raise ValueError("duplicate class descriptor")
    done, order = set(), []

    def visit(c, stack=()):
        if c.descriptor in done:
            return
        if c.descriptor in stack:
            raise ValueError(f"class hierarchy cycle at {c.descriptor}")
        for dep in (c.superclass,) + tuple(c.interfaces):
            if dep in by_name:
                visit(by_name[dep], stack + (c.descriptor,))
        done.add(c.descriptor)
        order.append(c)

    for c in classes:
        visit(c)
    return order


def write_dex(classes, version=35, extra_strings=()):
    """Serialize ``classes`` into a complete DEX file (with map list and checksums)."""
    classes = _ordered_classes(list(classes))

    strings, types, protos, methods = set(extra_strings), set(), set(), set()

    def use_type(t):
        types.add(t)
        strings.add(t)

    def use_method(k):
        methods.add(k)
        use_type(k.cls)
        strings.add(k.name)
        strings.add(k.shorty)
        use_type(k.ret)
        for p in k.params:
            use_type(p)
        protos.add((k.shorty, k.ret, tuple(k.params)))

    for c in classes:
        use_type(c.descriptor)
        if c.superclass:
            use_type(c.superclass)
        for i in c.interfaces:
            use_type(i)
        for a in c.annotations:
            use_type(a)
        for m in c.methods:
            use_method(m.key(c.descriptor))
            for op in m.code or ():
                if isinstance(op, Invoke):
                    use_method(op.target)
                elif isinstance(op, ConstString):
                    strings.add(op.value)
                elif isinstance(op, TypeOp):
                    use_type(op.descriptor)

    string_list = sorted(strings, key=_sort_key)
    sidx = {s: i for i, s in enumerate(string_list)}
    type_list = sorted(types, key=lambda t: sidx[t])
    tidx = {t: i for i, t in enumerate(type_list)}
    proto_list = sorted(protos, key=lambda p: (tidx[p[1]], [tidx[x] for x in p[2]]))
    pidx = {p: i for i, p in enumerate(proto_list)}

    def proto_of(k):
        return pidx[(k.shorty, k.ret, tuple(k.params))]

    method_list = sorted(methods, key=lambda k: (tidx[k.cls], sidx[k.name], proto_of(k)))
    midx = {k: i for i, k in enumerate(method_list)}
    if len(method_list) > 0x10000:
        raise ValueError("more than 64K method references in one DEX")

    def encode_code(code):
        out = bytearray()
        for op in code:
            if isinstance(op, (bytes, bytearray)):
                op = Raw(bytes(op))
            if isinstance(op, Raw):
                out += op.data
            elif isinstance(op, Invoke):
                idx = midx[op.target]
                if 0x74 <= op.opcode <= 0x78:
                    first, count = op.regs if op.regs else (0, 0)
                    out += struct.pack("<BBHH", op.opcode, count, idx, first)
                else:
                    regs = list(op.regs)
                    if len(regs) > 5:
                        raise ValueError("35c invoke takes at most 5 registers")
                    g = regs[4] if len(regs) == 5 else 0
                    packed = 0
                    for n, r in enumerate(regs[:4]):
                        packed |= (r & 0xF) << (4 * n)
                    out += struct.pack("<BBHH", op.opcode, (len(regs) << 4) | g, idx, packed)
            elif isinstance(op, ConstString):
                idx = sidx[op.value]
                if idx > 0xFFFF:
                    out += struct.pack("<BBI", 0x1B, op.reg, idx)
                else:
                    out += struct.pack("<BBH", 0x1A, op.reg, idx)
            elif isinstance(op, TypeOp):
                out += struct.pack("<BBH", op.opcode, op.reg, tidx[op.descriptor])
            else:
                raise TypeError(f"unsupported code item {op!r}")
        return bytes(out)

    n_str, n_type, n_proto, n_meth, n_cls = (
        len(string_list), len(type_list), len(proto_list), len(method_list), len(classes))
    string_ids_off = 0x70
    type_ids_off = string_ids_off + 4 * n_str
    proto_ids_off = type_ids_off + 4 * n_type
    method_ids_off = proto_ids_off + 12 * n_proto
    class_defs_off = method_ids_off + 8 * n_meth
    data_off = class_defs_off + 32 * n_cls

    out = bytearray(data_off)
    map_items = [(0x0000, 1, 0)]
    if n_str:
        map_items.append((0x0001, n_str, string_ids_off))
    if n_type:
        map_items.append((0x0002, n_type, type_ids_off))
    if n_proto:
        map_items.append((0x0003, n_proto, proto_ids_off))
    if n_meth:
        map_items.append((0x0005, n_meth, method_ids_off))
    if n_cls:
        map_items.append((0x0006, n_cls, class_defs_off))

    # code items
    code_offsets = {}
    n_code = 0
    _align(out, 4)
    code_start = len(out)
    for c in classes:
        for m in c.methods:
            if m.code is None:
                continue
            insns = encode_code(m.code)
            ins = sum(2 if p in ("J", "D") else 1 for p in m.params)
            if not m.access & ACC_STATIC:
                ins += 1
            regs = max(m.registers or ins + 2, ins)
            _align(out, 4)
            code_offsets[(c.descriptor, id(m))] = len(out)
            out += struct.pack("<HHHHII", regs, ins, 5, 0, 0, len(insns) // 2)
            out += insns
            n_code += 1
    if n_code:
        map_items.append((0x2001, n_code, code_start))

    # type lists (proto parameters and interfaces)
    _align(out, 4)
    tl_start = len(out)
    tl_offsets = {}
    wanted = [p[2] for p in proto_list if p[2]] + [tuple(c.interfaces) for c in classes if c.interfaces]
    for tl in wanted:
        if tl in tl_offsets:
            continue
        _align(out, 4)
        tl_offsets[tl] = len(out)
        out += struct.pack(f"<I{len(tl)}H", len(tl), *[tidx[t] for t in tl])
    if tl_offsets:
        map_items.append((0x1001, len(tl_offsets), tl_start))

    # string data
    sd_start = len(out)
    sd_offsets = []
    for s in string_list:
        sd_offsets.append(len(out))
        out += _uleb(len(s.encode("utf-16-le", errors="surrogatepass")) // 2)
        out += encode_mutf8(s) + b"\0"
    if string_list:
        map_items.append((0x2002, n_str, sd_start))

    # annotations (type only, no elements)
    ann_item_off = {}
    ai_start = len(out)
    for c in classes:
        for a in c.annotations:
            if a not in ann_item_off:
                ann_item_off[a] = len(out)
                out += bytes([1]) + _uleb(tidx[a]) + _uleb(0)
    if ann_item_off:
        map_items.append((0x2004, len(ann_item_off), ai_start))
    set_off = {}
    _align(out, 4)
    as_start = len(out)
    for c in classes:
        if c.annotations:
            key = tuple(sorted(set(c.annotations), key=lambda a: tidx[a]))
            if key not in set_off:
                _align(out, 4)
                set_off[key] = len(out)
                out += struct.pack(f"<I{len(key)}I", len(key), *[ann_item_off[a] for a in key])
    if set_off:
        map_items.append((0x1003, len(set_off), as_start))

    # class data
    cd_start = len(out)
    class_data_off = {}
    for c in classes:
        if not c.methods:
            continue
        direct, virtual = [], []
        for m in c.methods:
            target = direct if m.access & (ACC_STATIC | ACC_PRIVATE | ACC_CONSTRUCTOR) else virtual
            target.append((midx[m.key(c.descriptor)], m))
        class_data_off[c.descriptor] = len(out)
        out += _uleb(0) + _uleb(0) + _uleb(len(direct)) + _uleb(len(virtual))
        for group in (direct, virtual):
            group.sort(key=lambda x: x[0])
            prev = 0
            for n, (mi, m) in enumerate(group):
                if n and mi == prev:
                    raise ValueError(f"duplicate method {m.name} in {c.descriptor}")
                out += _uleb(mi - prev) + _uleb(m.access)
                out += _uleb(code_offsets.get((c.descriptor, id(m)), 0))
                prev = mi
    if class_data_off:
        map_items.append((0x2000, len(class_data_off), cd_start))

    # annotation directories
    _align(out, 4)
    ad_start = len(out)
    dir_off = {}
    for c in classes:
        if c.annotations:
            key = tuple(sorted(set(c.annotations), key=lambda a: tidx[a]))
            dir_off[c.descriptor] = len(out)
            out += struct.pack("<IIII", set_off[key], 0, 0, 0)
    if dir_off:
        map_items.append((0x2006, len(dir_off), ad_start))

    _align(out, 4)
    map_off = len(out)
    map_items.append((0x1000, 1, map_off))
    map_items.sort(key=lambda x: x[2])
    out += struct.pack("<I", len(map_items))
    for t, size, off in map_items:
        out += struct.pack("<HHII", t, 0, size, off)

    # id tables
    for i, off in enumerate(sd_offsets):
        struct.pack_into("<I", out, string_ids_off + 4 * i, off)
    for i, t in enumerate(type_list):
        struct.pack_into("<I", out, type_ids_off + 4 * i, sidx[t])
    for i, (shorty, ret, params) in enumerate(proto_list):
        struct.pack_into("<III", out, proto_ids_off + 12 * i, sidx[shorty], tidx[ret],
                         tl_offsets[params] if params else 0)
    for i, k in enumerate(method_list):
        struct.pack_into("<HHI", out, method_ids_off + 8 * i, tidx[k.cls], proto_of(k), sidx[k.name])
    for i, c in enumerate(classes):
        struct.pack_into(
            "<8I", out, class_defs_off + 32 * i,
            tidx[c.descriptor], c.access,
            tidx[c.superclass] if c.superclass else 0xFFFFFFFF,
            tl_offsets[tuple(c.interfaces)] if c.interfaces else 0,
            0xFFFFFFFF,
            dir_off.get(c.descriptor, 0),
            class_data_off.get(c.descriptor, 0),
            0,
        )

    header = struct.pack(
        "<8sI20sIIIIIIIIIIIIIIIIIIII",
        b"dex\n%03d\0" % version, 0, b"\0" * 20, len(out), 0x70, 0x12345678, 0, 0, map_off,
        n_str, string_ids_off if n_str else 0,
        n_type, type_ids_off if n_type else 0,
        n_proto, proto_ids_off if n_proto else 0,
        0, 0,
        n_meth, method_ids_off if n_meth else 0,
        n_cls, class_defs_off if n_cls else 0,
        len(out) - data_off, data_off,
    )
    out[:0x70] = header
    out[12:32] = hashlib.sha1(bytes(out[32:])).digest()
    struct.pack_into("<I", out, 8, zlib.adler32(bytes(out[12:])))
    return bytes(out)
