"""Dalvik opcode widths and classes for DEX versions 035 through 039.

Widths are in 16-bit code units and come from the instruction format of
each opcode.  A width of 0 marks an opcode that is unassigned in every
supported version.
"""

# instruction kinds used by the decoders
PLAIN = 0
INVOKE = 1        # invoke-kind / invoke-kind/range: method index in unit 1
INVOKE_OTHER = 2  # invoke-polymorphic and invoke-custom
NOP = 3           # may introduce a payload pseudo-instruction
UNUSED = 4

PACKED_SWITCH_PAYLOAD = 0x0100
SPARSE_SWITCH_PAYLOAD = 0x0200
FILL_ARRAY_DATA_PAYLOAD = 0x0300


def _build():
    width = [0] * 256

    def span(lo, hi, w):
        for op in range(lo, hi + 1):
            width[op] = w

    span(0x00, 0x01, 1)   # nop, move
    width[0x02] = 2       # move/from16
    width[0x03] = 3       # move/16
    width[0x04] = 1
    width[0x05] = 2
    width[0x06] = 3
    width[0x07] = 1
    width[0x08] = 2
    width[0x09] = 3
    span(0x0A, 0x12, 1)   # move-result*, move-exception, return*, const/4
    width[0x13] = 2       # const/16
    width[0x14] = 3       # const
    width[0x15] = 2       # const/high16
    width[0x16] = 2       # const-wide/16
    width[0x17] = 3       # const-wide/32
    width[0x18] = 5       # const-wide
    width[0x19] = 2       # const-wide/high16
    width[0x1A] = 2       # const-string
    width[0x1B] = 3       # const-string/jumbo
    width[0x1C] = 2       # const-class
    span(0x1D, 0x1E, 1)   # monitor-enter/exit
    width[0x1F] = 2       # check-cast
    width[0x20] = 2       # instance-of
    width[0x21] = 1       # array-length
    width[0x22] = 2       # new-instance
    width[0x23] = 2       # new-array
    width[0x24] = 3       # filled-new-array
    width[0x25] = 3       # filled-new-array/range
    width[0x26] = 3       # fill-array-data
    width[0x27] = 1       # throw
    width[0x28] = 1       # goto
    width[0x29] = 2       # goto/16
    width[0x2A] = 3       # goto/32
    span(0x2B, 0x2C, 3)   # packed-switch, sparse-switch
    span(0x2D, 0x31, 2)   # cmp*
    span(0x32, 0x37, 2)   # if-test
    span(0x38, 0x3D, 2)   # if-testz
    span(0x44, 0x51, 2)   # aget/aput
    span(0x52, 0x5F, 2)   # iget/iput
    span(0x60, 0x6D, 2)   # sget/sput
    span(0x6E, 0x72, 3)   # invoke-kind
    span(0x74, 0x78, 3)   # invoke-kind/range
    span(0x7B, 0x8F, 1)   # unop
    span(0x90, 0xAF, 2)   # binop
    span(0xB0, 0xCF, 1)   # binop/2addr
    span(0xD0, 0xD7, 2)   # binop/lit16
    span(0xD8, 0xE2, 2)   # binop/lit8
    span(0xFA, 0xFB, 4)   # invoke-polymorphic(/range)
    span(0xFC, 0xFD, 3)   # invoke-custom(/range)
    span(0xFE, 0xFF, 2)   # const-method-handle, const-method-type

    kind = [PLAIN if w else UNUSED for w in width]
    for op in list(range(0x6E, 0x73)) + list(range(0x74, 0x79)):
        kind[op] = INVOKE
    for op in range(0xFA, 0xFE):
        kind[op] = INVOKE_OTHER
    kind[0x00] = NOP
    return tuple(width), tuple(kind)


WIDTH, KIND = _build()

# width in bytes, handy for the byte-offset fast paths
BYTE_WIDTH = tuple(w * 2 for w in WIDTH)

INVOKE_OPCODES = frozenset(op for op in range(256) if KIND[op] == INVOKE)

NAMES = {
    0x00: "nop",
    0x0E: "return-void",
    0x6E: "invoke-virtual",
    0x6F: "invoke-super",
    0x70: "invoke-direct",
    0x71: "invoke-static",
    0x72: "invoke-interface",
    0x74: "invoke-virtual/range",
    0x75: "invoke-super/range",
    0x76: "invoke-direct/range",
    0x77: "invoke-static/range",
    0x78: "invoke-interface/range",
    0xFA: "invoke-polymorphic",
    0xFB: "invoke-polymorphic/range",
    0xFC: "invoke-custom",
    0xFD: "invoke-custom/range",
}


def payload_units(ident, header):
    """Length in code units of a payload given its first four units.

    ``header`` holds the raw code units following the ident (at least 3).
    Returns None for an ident that is not a payload.
    """
    if ident == PACKED_SWITCH_PAYLOAD:
        size = header[0]
        return size * 2 + 4
    if ident == SPARSE_SWITCH_PAYLOAD:
        size = header[0]
        return size * 4 + 2
    if ident == FILL_ARRAY_DATA_PAYLOAD:
        element_width = header[0]
        size = header[1] | (header[2] << 16)
        return (size * element_width + 1) // 2 + 4
    return None
