"""Synthetic Android applications with a known ground truth.

An :class:`AppSpec` describes which Kotlin features an app calls and how
often; :func:`build_app` turns it into class specs plus a
:class:`GroundTruth` recorded while the code is generated.  The stdlib
bodies mirror the fingerprints in the shipped signature database, so
renamed twins (:func:`rename_app`) exercise the heuristic recovery path
exactly like a shrunk, identifier-renamed release build.
"""

import random
import struct
import zipfile
from dataclasses import dataclass, field, replace

from ..features import FEATURES
from .axmlwriter import manifest as build_manifest
from .dexwriter import (
    ACC_ABSTRACT,
    ACC_CONSTRUCTOR,
    ACC_INTERFACE,
    ACC_PUBLIC,
    ACC_STATIC,
    OBJECT,
    ClassSpec,
    ConstString,
    Invoke,
    MethodKey,
    MethodSpec,
    Raw,
    TypeOp,
    write_dex,
)

STATIC = ACC_PUBLIC | ACC_STATIC
CTOR = ACC_PUBLIC | ACC_CONSTRUCTOR
IFACE = ACC_PUBLIC | ACC_INTERFACE | ACC_ABSTRACT
ABSTRACT = ACC_PUBLIC | ACC_ABSTRACT

STRING = "Ljava/lang/String;"
METADATA = "Lkotlin/Metadata;"
FRAMEWORK_ROOTS = ("Ljava/", "Ljavax/", "Landroid/", "Landroidx/", "Ldalvik/")


def K(cls, name, ret="V", *params):
    return MethodKey(cls, name, ret, tuple(params))


def R(hexstr):
    return Raw(bytes.fromhex(hexstr))


# -- stdlib model -----------------------------------------------------------

INTRINSICS = "Lkotlin/jvm/internal/Intrinsics;"
NPE = "Ljava/lang/NullPointerException;"
SB = "Ljava/lang/StringBuilder;"

CHECK_PARAM = K(INTRINSICS, "checkNotNullParameter", "V", OBJECT, STRING)
CHECK_NOT_NULL = K(INTRINSICS, "checkNotNull", "V", OBJECT)
CHECK_EXPR = K(INTRINSICS, "checkNotNullExpressionValue", "V", OBJECT, STRING)
THROW_PARAM_NPE = K(INTRINSICS, "throwParameterIsNullNPE", "V", STRING)
THROW_JAVA_NPE = K(INTRINSICS, "throwJavaNpe")
SANITIZE = K(INTRINSICS, "sanitizeStackTrace", "Ljava/lang/Throwable;", "Ljava/lang/Throwable;")

NULL_CHECKS = (CHECK_PARAM, CHECK_EXPR, CHECK_NOT_NULL)


def _intrinsics():
    npe_init = K(NPE, "<init>")
    return ClassSpec(INTRINSICS, methods=[
        MethodSpec("checkNotNullParameter", "V", (OBJECT, STRING), STATIC, registers=2, code=[
            R("39000500"), Invoke(THROW_PARAM_NPE, 0x71, (1,)), R("0e00")]),
        MethodSpec("checkNotNull", "V", (OBJECT,), STATIC, registers=1, code=[
            R("39000400"), Invoke(THROW_JAVA_NPE, 0x71, ()), R("0e00")]),
        MethodSpec("checkNotNullExpressionValue", "V", (OBJECT, STRING), STATIC, registers=4, code=[
            R("39021d00"), TypeOp(0x22, 0, NPE), TypeOp(0x22, 1, SB),
            Invoke(K(SB, "<init>"), 0x70, (1,)),
            Invoke(K(SB, "append", SB, STRING), 0x6E, (1, 3)),
            ConstString(3, " must not be null"),
            Invoke(K(SB, "append", SB, STRING), 0x6E, (1, 3)),
            Invoke(K(SB, "toString", STRING), 0x6E, (1,)),
            R("0c01"),
            Invoke(K(NPE, "<init>", "V", STRING), 0x70, (0, 1)),
            Invoke(SANITIZE, 0x71, (0,)),
            R("0c0027000e00")]),
        MethodSpec("throwParameterIsNullNPE", "V", (STRING,), STATIC, registers=2, code=[
            TypeOp(0x22, 0, NPE), Invoke(npe_init, 0x70, (0,)), R("2700")]),
        MethodSpec("throwJavaNpe", "V", (), STATIC, registers=1, code=[
            TypeOp(0x22, 0, NPE), Invoke(npe_init, 0x70, (0,)), R("2700")]),
        MethodSpec("sanitizeStackTrace", "Ljava/lang/Throwable;", ("Ljava/lang/Throwable;",),
                   STATIC, registers=1, code=[R("1100")]),
    ])


def _simple(name, ret="V", params=(), access=STATIC, registers=2):
    body = "0e00" if ret == "V" else ("1200" + ("1100" if ret[0] in "L[" else "0f00"))
    return MethodSpec(name, ret, tuple(params), access, registers=registers, code=[R(body)])


def _iface(descriptor, *methods):
    return ClassSpec(descriptor, access=IFACE, methods=[
        MethodSpec(n, r, tuple(p), ABSTRACT) for n, r, p in methods])


COROUTINES_K = "Lkotlin/coroutines/intrinsics/IntrinsicsKt;"
CONTINUATION = "Lkotlin/coroutines/Continuation;"
SINGLETONS = "Lkotlin/coroutines/intrinsics/CoroutineSingletons;"
KPROPERTY = "Lkotlin/reflect/KProperty;"
KCLASS = "Lkotlin/reflect/KClass;"
KTYPE = "Lkotlin/reflect/KType;"
KTYPE_PROJ = "Lkotlin/reflect/KTypeProjection;"
KTYPE_PROJ_C = "Lkotlin/reflect/KTypeProjection$Companion;"
KVARIANCE = "Lkotlin/reflect/KVariance;"
DELEGATES = "Lkotlin/properties/Delegates;"
RW_PROPERTY = "Lkotlin/properties/ReadWriteProperty;"
NOT_NULL_VAR = "Lkotlin/properties/NotNullVar;"
RANGES_K = "Lkotlin/ranges/RangesKt;"
INT_RANGE = "Lkotlin/ranges/IntRange;"
STRINGS_K = "Lkotlin/text/StringsKt;"
CHARSEQ = "Ljava/lang/CharSequence;"
COLLECTIONS_K = "Lkotlin/collections/CollectionsKt;"
LIST = "Ljava/util/List;"
COMPARISONS_K = "Lkotlin/comparisons/ComparisonsKt;"
COMPARABLE = "Ljava/lang/Comparable;"
TIMERS_K = "Lkotlin/concurrent/TimersKt;"
TIMER = "Ljava/util/Timer;"
CLOSEABLE_K = "Lkotlin/io/CloseableKt;"
FILES_K = "Lkotlin/io/FilesKt;"
CLOSEABLE = "Ljava/io/Closeable;"
SEQUENCES_K = "Lkotlin/sequences/SequencesKt;"
SEQUENCE = "Lkotlin/sequences/Sequence;"
SEQ_INLINED = "Lkotlin/sequences/SequencesKt$asSequence$$inlined$Sequence$1;"
ITERATOR = "Ljava/util/Iterator;"

# (method key, invoke opcode) pairs the app calls for each feature
FEATURE_API = {
    "coroutines": [(K(COROUTINES_K, "getCOROUTINE_SUSPENDED", OBJECT), 0x71),
                   (K(CONTINUATION, "resumeWith", "V", OBJECT), 0x72)],
    "reflection": [(K(KPROPERTY, "getName", STRING), 0x72),
                   (K(KCLASS, "getSimpleName", STRING), 0x72)],
    "delegated_properties": [(K(DELEGATES, "notNull", RW_PROPERTY), 0x71),
                             (K(RW_PROPERTY, "getValue", OBJECT, OBJECT, KPROPERTY), 0x72)],
    "ranges": [(K(RANGES_K, "coerceIn", "I", "I", "I", "I"), 0x71),
               (K(RANGES_K, "until", INT_RANGE, "I", "I"), 0x71)],
    "text": [(K(STRINGS_K, "isBlank", "Z", CHARSEQ), 0x71),
             (K(STRINGS_K, "trim", STRING, STRING), 0x71)],
    "collections": [(K(COLLECTIONS_K, "listOf", LIST, OBJECT), 0x71),
                    (K(COLLECTIONS_K, "emptyList", LIST), 0x71)],
    "comparisons": [(K(COMPARISONS_K, "compareValues", "I", COMPARABLE, COMPARABLE), 0x71)],
    "concurrent": [(K(TIMERS_K, "timer", TIMER, STRING, "Z"), 0x71)],
    "io": [(K(CLOSEABLE_K, "closeFinally", "V", CLOSEABLE, "Ljava/lang/Throwable;"), 0x71),
           (K(FILES_K, "readText", STRING, "Ljava/io/File;"), 0x71)],
    "sequences": [(K(SEQUENCES_K, "asSequence", SEQUENCE, ITERATOR), 0x71),
                  (K(SEQUENCES_K, "toList", LIST, SEQUENCE), 0x71)],
}


def _feature_classes(feature, reflect_with_code=False):
    if feature == "coroutines":
        return [
            ClassSpec(COROUTINES_K, methods=[MethodSpec(
                "getCOROUTINE_SUSPENDED", OBJECT, (), STATIC, registers=2, code=[
                    TypeOp(0x1C, 0, SINGLETONS), R("1231"),
                    Invoke(K("Ljava/lang/Enum;", "valueOf", "Ljava/lang/Enum;", "Ljava/lang/Class;", STRING),
                           0x71, (0, 1)),
                    R("0c001100")])]),
            ClassSpec(SINGLETONS, superclass="Ljava/lang/Enum;"),
            _iface(CONTINUATION, ("resumeWith", "V", (OBJECT,))),
        ]
    if feature == "reflection":
        classes = [
            _iface(KPROPERTY, ("getName", STRING, ())),
            _iface(KCLASS, ("getSimpleName", STRING, ())),
        ]
        if reflect_with_code:
            classes.append(ClassSpec(KTYPE_PROJ_C, methods=[MethodSpec(
                "contravariant", KTYPE_PROJ, (KTYPE,), ACC_PUBLIC, registers=4, code=[
                    ConstString(0, "type"), Invoke(CHECK_PARAM, 0x71, (3, 0)),
                    TypeOp(0x22, 0, KTYPE_PROJ), R("1221"),
                    Invoke(K(KTYPE_PROJ, "<init>", "V", KVARIANCE, KTYPE), 0x70, (0, 1, 3)),
                    R("1100")])]))
        return classes
    if feature == "delegated_properties":
        return [
            ClassSpec(DELEGATES, methods=[MethodSpec("notNull", RW_PROPERTY, (), STATIC, registers=1, code=[
                TypeOp(0x22, 0, NOT_NULL_VAR), Invoke(K(NOT_NULL_VAR, "<init>"), 0x70, (0,)),
                TypeOp(0x1F, 0, RW_PROPERTY), R("1100")])]),
            ClassSpec(NOT_NULL_VAR, interfaces=(RW_PROPERTY,), methods=[
                MethodSpec("<init>", "V", (), CTOR, registers=1, code=[
                    Invoke(K(OBJECT, "<init>"), 0x70, (0,)), R("0e00")])]),
            _iface(RW_PROPERTY, ("getValue", OBJECT, (OBJECT, KPROPERTY))),
        ]
    if feature == "ranges":
        return [
            ClassSpec(RANGES_K, methods=[
                MethodSpec("coerceIn", "I", ("I", "I", "I"), STATIC, registers=4, code=[
                    R("37320500"), TypeOp(0x22, 0, "Ljava/lang/IllegalArgumentException;"),
                    R("2700352103000f02373103000f030f01")]),
                MethodSpec("until", INT_RANGE, ("I", "I"), STATIC, registers=4, code=[
                    TypeOp(0x22, 0, INT_RANGE),
                    Invoke(K(INT_RANGE, "<init>", "V", "I", "I"), 0x70, (0, 2, 3)), R("1100")]),
            ]),
            ClassSpec(INT_RANGE, methods=[MethodSpec("<init>", "V", ("I", "I"), CTOR, registers=3, code=[
                Invoke(K(OBJECT, "<init>"), 0x70, (0,)), R("0e00")])]),
        ]
    if feature == "text":
        return [ClassSpec(STRINGS_K, methods=[
            MethodSpec("isBlank", "Z", (CHARSEQ,), STATIC, registers=4, code=[
                Invoke(K(CHARSEQ, "length", "I"), 0x72, (3,)), R("0a00120135011100"),
                Invoke(K(CHARSEQ, "charAt", "C", "I"), 0x72, (3, 1)), R("0a02"),
                Invoke(K("Ljava/lang/Character;", "isWhitespace", "Z", "C"), 0x71, (2,)),
                R("0a02380205 00d801010128f212000f0012100f00".replace(" ", ""))]),
            MethodSpec("trim", STRING, (STRING,), STATIC, registers=2, code=[
                Invoke(K(STRING, "trim", STRING), 0x6E, (1,)), R("0c001100")]),
        ])]
    if feature == "collections":
        return [ClassSpec(COLLECTIONS_K, methods=[
            MethodSpec("listOf", LIST, (OBJECT,), STATIC, registers=2, code=[
                Invoke(K("Ljava/util/Collections;", "singletonList", LIST, OBJECT), 0x71, (1,)),
                R("0c00"), ConstString(1, "singletonList(element)"),
                Invoke(CHECK_EXPR, 0x71, (0, 1)), R("1100")]),
            _simple("emptyList", LIST),
        ])]
    if feature == "comparisons":
        return [ClassSpec(COMPARISONS_K, methods=[
            MethodSpec("compareValues", "I", (COMPARABLE, COMPARABLE), STATIC, registers=3, code=[
                R("3321040012000f00390104 0012f00f003902040012100f00".replace(" ", "")),
                Invoke(K(COMPARABLE, "compareTo", "I", OBJECT), 0x72, (1, 2)), R("0a000f00")]),
        ])]
    if feature == "concurrent":
        return [ClassSpec(TIMERS_K, methods=[
            MethodSpec("timer", TIMER, (STRING, "Z"), STATIC, registers=3, code=[
                R("38010800"), TypeOp(0x22, 0, TIMER),
                Invoke(K(TIMER, "<init>", "V", STRING, "Z"), 0x70, (0, 1, 2)), R("1100"),
                TypeOp(0x22, 0, TIMER), Invoke(K(TIMER, "<init>", "V", "Z"), 0x70, (0, 2)), R("1100")]),
        ])]
    if feature == "io":
        close = K(CLOSEABLE, "close")
        return [
            ClassSpec(CLOSEABLE_K, methods=[
                MethodSpec("closeFinally", "V", (CLOSEABLE, "Ljava/lang/Throwable;"), STATIC, registers=2, code=[
                    R("390003000e0039010600"), Invoke(close, 0x72, (0,)), R("0e00"),
                    Invoke(close, 0x72, (0,)), R("0e00")])]),
            ClassSpec(FILES_K, methods=[_simple("readText", STRING, ("Ljava/io/File;",))]),
        ]
    if feature == "sequences":
        return [
            ClassSpec(SEQUENCES_K, methods=[
                MethodSpec("asSequence", SEQUENCE, (ITERATOR,), STATIC, registers=3, code=[
                    ConstString(0, "<this>"), Invoke(CHECK_PARAM, 0x71, (2, 0)),
                    TypeOp(0x22, 0, SEQ_INLINED),
                    Invoke(K(SEQ_INLINED, "<init>", "V", ITERATOR), 0x70, (0, 2)),
                    Invoke(K(SEQUENCES_K, "constrainOnce", SEQUENCE, SEQUENCE), 0x71, (0,)),
                    R("0c001100")]),
                _simple("constrainOnce", SEQUENCE, (SEQUENCE,)),
                _simple("toList", LIST, (SEQUENCE,)),
            ]),
            ClassSpec(SEQ_INLINED, interfaces=(SEQUENCE,), methods=[
                MethodSpec("<init>", "V", (ITERATOR,), CTOR, registers=2, code=[
                    Invoke(K(OBJECT, "<init>"), 0x70, (0,)), R("0e00")])]),
            _iface(SEQUENCE, ("iterator", ITERATOR, ())),
        ]
    raise KeyError(feature)


def stdlib_classes(features, reflect_with_code=False):
    """Shrunk stdlib: runtime support plus the packages of the used features."""
    classes = [
        _intrinsics(),
        ClassSpec("Lkotlin/Unit;", methods=[
            MethodSpec("<init>", "V", (), CTOR, registers=1, code=[
                Invoke(K(OBJECT, "<init>"), 0x70, (0,)), R("0e00")])]),
        _iface("Lkotlin/jvm/functions/Function0;", ("invoke", OBJECT, ())),
    ]
    for f in FEATURES:
        if f in features:
            classes.extend(_feature_classes(f, reflect_with_code))
    return classes


# -- app model --------------------------------------------------------------

# filler instructions that never form a signature: const/4, const/16,
# move, add-int/2addr, add-int/lit8, mul-int
FILLER = [R("1201"), R("13012a00"), R("0110"), R("b010"), R("d8000103"), R("92000102")]
FRAMEWORK_CALLS = [
    (K("Landroid/util/Log;", "d", "I", STRING, STRING), 0x71, (0, 1)),
    (K(OBJECT, "toString", STRING), 0x6E, (0,)),
    (K("Landroid/app/Activity;", "setContentView", "V", "I"), 0x6E, (0, 1)),
    (K("Ljava/util/ArrayList;", "add", "Z", OBJECT), 0x6E, (0, 1)),
]


@dataclass
class AppSpec:
    name: str
    package: str = "com.example.app"
    features: dict = field(default_factory=dict)  # feature -> invocation count
    null_checks: int = 0
    kotlin_classes: int = 2
    java_classes: int = 2
    library_classes: int = 1
    metadata_only_classes: int = 0
    reflect_with_code: bool = False
    images: int = 1
    filler: int = 6  # filler instructions per app method
    seed: int = 0

    @property
    def uses_kotlin(self):
        return bool(self.features or self.null_checks or self.kotlin_classes or self.metadata_only_classes)


@dataclass
class GroundTruth:
    feature_counts: dict           # feature -> invocation count from app code
    feature_classes: dict          # feature -> set of invoking class descriptors
    null_checks: int
    null_check_classes: set
    kotlin_classes: set            # C_kotlin
    class_bytes: dict              # descriptor -> sum of B(m)
    class_invokes: dict            # descriptor -> invoke count
    class_kotlin_invokes: dict     # descriptor -> invokes into the stdlib
    stdlib_classes: set
    project_classes: set
    metadata_only: set


@dataclass
class AppModel:
    spec: AppSpec
    classes: list
    truth: GroundTruth
    package: str
    mapping: dict = field(default_factory=dict)  # original descriptor -> renamed

    def dex_files(self, version=35):
        return [write_dex(group, version=version) for group in split_images(self.classes, self.spec.images)]

    def write_apk(self, path, version=35, compression=zipfile.ZIP_DEFLATED, utf8_manifest=False):
        main = f"{self.package}.MainActivity"
        axml = build_manifest(self.package, [main], utf8=utf8_manifest)
        write_apk(path, self.dex_files(version), axml, compression=compression)
        return path


def code_length(code):
    """Bytes occupied by a symbolic method body, computed from instruction formats."""
    n = 0
    for op in code:
        if isinstance(op, Raw):
            n += len(op.data)
        elif isinstance(op, Invoke):
            n += 6
        elif isinstance(op, (ConstString, TypeOp)):
            n += 4
        else:
            raise TypeError(op)
    return n


def split_images(classes, n):
    """Spread classes over ``n`` DEX images, contiguous runs in model order."""
    n = max(1, n)
    size = -(-len(classes) // n)
    return [classes[i * size:(i + 1) * size] for i in range(n) if classes[i * size:(i + 1) * size]]


def build_app(spec):
    rng = random.Random(spec.seed)
    pkg = "L" + spec.package.replace(".", "/") + "/"
    classes = []
    truth = GroundTruth({f: 0 for f in FEATURES}, {f: set() for f in FEATURES}, 0, set(),
                        set(), {}, {}, {}, set(), set(), set())

    n_kotlin = spec.kotlin_classes
    if (spec.features or spec.null_checks) and n_kotlin == 0:
        n_kotlin = 1
    kotlin_names = [f"{pkg}ui/Screen{i}Kt;" if i % 2 else f"{pkg}Feature{i};" for i in range(n_kotlin)]
    bodies = {name: [] for name in kotlin_names}  # list of methods' call lists

    # distribute every stdlib call round-robin over the Kotlin classes
    calls = []
    for f in FEATURES:
        for j in range(spec.features.get(f, 0)):
            key, op = FEATURE_API[f][j % len(FEATURE_API[f])]
            calls.append((f, key, op))
    for j in range(spec.null_checks):
        calls.append(("null_safety", NULL_CHECKS[j % 2], 0x71))
    for j, call in enumerate(calls):
        bodies[kotlin_names[j % n_kotlin]].append(call) if n_kotlin else None

    def filler(k):
        return [rng.choice(FILLER) for _ in range(k)]

    def framework_calls(k):
        out = []
        for _ in range(k):
            key, op, regs = rng.choice(FRAMEWORK_CALLS)
            out.append(Invoke(key, op, regs))
        return out

    def record(desc, methods, kotlin_invokes, project=True):
        truth.class_bytes[desc] = sum(code_length(m.code) for m in methods if m.code is not None)
        truth.class_invokes[desc] = sum(1 for m in methods for op in (m.code or ()) if isinstance(op, Invoke))
        truth.class_kotlin_invokes[desc] = kotlin_invokes
        if project:
            truth.project_classes.add(desc)

    for name in kotlin_names:
        call_list = bodies[name]
        methods = [MethodSpec("<init>", "V", (), CTOR, registers=1, code=[
            Invoke(K(OBJECT, "<init>"), 0x70, (0,)), R("0e00")])]
        chunks = [call_list[i:i + 4] for i in range(0, len(call_list), 4)] or [[]]
        for mi, chunk in enumerate(chunks):
            code = filler(spec.filler // 2)
            for f, key, op in chunk:
                code.append(Invoke(key, op, (0, 1)[:max(1, min(2, len(key.params)))]))
                code.extend(filler(1))
                if f == "null_safety":
                    truth.null_checks += 1
                    truth.null_check_classes.add(name)
                else:
                    truth.feature_counts[f] += 1
                    truth.feature_classes[f].add(name)
            code.extend(framework_calls(1))
            code.extend(filler(spec.filler - spec.filler // 2))
            code.append(R("0e00"))
            methods.append(MethodSpec(f"run{mi}", "V", (STRING,), ACC_PUBLIC, registers=4, code=code))
        if call_list:
            truth.kotlin_classes.add(name)
        classes.append(ClassSpec(name, annotations=(METADATA,), methods=methods))
        record(name, methods, len(call_list))

    for i in range(spec.metadata_only_classes):
        name = f"{pkg}data/Model{i};"
        methods = [MethodSpec("get", "I", (), ACC_PUBLIC, registers=2, code=filler(3) + [R("0f00")])]
        classes.append(ClassSpec(name, annotations=(METADATA,), methods=methods))
        truth.metadata_only.add(name)
        record(name, methods, 0)

    main = f"{pkg}MainActivity;"
    java_names = [main] + [f"{pkg}util/Helper{i};" for i in range(max(0, spec.java_classes - 1))]
    for i, name in enumerate(java_names[:max(1, spec.java_classes)]):
        methods = [
            MethodSpec("<init>", "V", (), CTOR, registers=1, code=[
                Invoke(K("Landroid/app/Activity;" if name == main else OBJECT, "<init>"), 0x70, (0,)),
                R("0e00")]),
            MethodSpec("onCreate", "V", ("Landroid/os/Bundle;",), ACC_PUBLIC, registers=4,
                       code=filler(spec.filler) + framework_calls(2) + [R("0e00")]),
        ]
        classes.append(ClassSpec(name, superclass="Landroid/app/Activity;" if name == main else OBJECT,
                                 methods=methods))
        record(name, methods, 0)

    for i in range(spec.library_classes):
        name = f"Lokhttp3/internal/Util{i};"
        methods = [MethodSpec("closeQuietly", "V", (CLOSEABLE,), STATIC, registers=3,
                              code=filler(spec.filler) + framework_calls(1) + [R("0e00")])]
        classes.append(ClassSpec(name, methods=methods))
        record(name, methods, 0, project=False)

    if spec.uses_kotlin:
        used = {f for f in FEATURES if spec.features.get(f)}
        for c in stdlib_classes(used, spec.reflect_with_code):
            classes.append(c)
            truth.stdlib_classes.add(c.descriptor)
            # calls between stdlib classes are library internals, never app Kotlin
            record(c.descriptor, c.methods, 0, project=False)

    return AppModel(spec, classes, truth, spec.package)


# -- identifier renaming ----------------------------------------------------

def _short_names():
    letters = "abcdefghijklmnopqrstuvwxyz"
    for ch in letters:
        yield ch
    for a in letters:
        for b in letters:
            yield a + b


class Renamer:
    """ProGuard-style identifier renaming that preserves the package tree.

    Every class under a program root (a top-level package holding defined
    classes, plus ``kotlin``) is renamed except the kept ones; packages
    below the project package keep their names, library packages are
    renamed segment by segment.
    """

    def __init__(self, classes, project_prefix, keep=()):
        self.project = project_prefix
        self.keep = set(keep)
        roots = {"Lkotlin/"}
        for c in classes:
            body = c.descriptor[1:]
            if "/" in body:
                roots.add("L" + body.split("/")[0] + "/")
        self.roots = {r for r in roots if r not in FRAMEWORK_ROOTS}
        # package paths a renamed package must not collide with
        self.reserved = set()
        for c in classes:
            parts = c.descriptor[1:-1].split("/")[:-1]
            for i in range(1, len(parts) + 1):
                self.reserved.add("/".join(parts[:i]))
        self.packages = {}   # original package path -> renamed path
        self.counters = {}
        self.class_map = {}
        self.method_names = {}

    def _fresh(self, scope):
        gen = self.counters.setdefault(scope, _short_names())
        return next(gen)

    def _package(self, path):
        # path like "kotlin/ranges"; project subtree keeps its names
        if ("L" + path + "/").startswith(self.project) or self.project.startswith("L" + path + "/"):
            return path
        if path in self.packages:
            return self.packages[path]
        parent, _, _ = path.rpartition("/")
        new_parent = self._package(parent) if parent else ""
        while True:
            new = (new_parent + "/" if new_parent else "") + self._fresh(("pkg", new_parent))
            if new not in self.reserved:
                break
        self.packages[path] = new
        return new

    def renames(self, descriptor):
        return (descriptor.startswith("L") and any(descriptor.startswith(r) for r in self.roots)
                and descriptor not in self.keep)

    def type(self, t):
        if t.startswith("["):
            return "[" + self.type(t[1:])
        if not self.renames(t):
            return t
        if t not in self.class_map:
            path, _, _ = t[1:-1].rpartition("/")
            new_path = self._package(path)
            self.class_map[t] = "L" + new_path + "/" + self._fresh(("cls", new_path)) + ";"
        return self.class_map[t]

    def method(self, key):
        cls = self.type(key.cls)
        name = key.name
        if self.renames(key.cls) and not name.startswith("<"):
            k = (key.cls, key.name, key.params, key.ret)
            if k not in self.method_names:
                self.method_names[k] = self._fresh(("meth", key.cls))
            name = self.method_names[k]
        return MethodKey(cls, name, self.type(key.ret), tuple(self.type(p) for p in key.params))

    def op(self, op):
        if isinstance(op, Invoke):
            return replace(op, target=self.method(op.target))
        if isinstance(op, TypeOp):
            return replace(op, descriptor=self.type(op.descriptor))
        return op

    def cls(self, c):
        methods = []
        for m in c.methods:
            k = self.method(m.key(c.descriptor))
            methods.append(replace(m, name=k.name, ret=k.ret, params=k.params,
                                   code=None if m.code is None else [self.op(o) for o in m.code]))
        return replace(
            c, descriptor=self.type(c.descriptor),
            superclass=self.type(c.superclass) if c.superclass else c.superclass,
            interfaces=tuple(self.type(i) for i in c.interfaces),
            annotations=tuple(self.type(a) for a in c.annotations),
            methods=methods,
        )


def rename_app(model):
    """Identifier-renamed twin of ``model``; ``mapping`` holds the renaming."""
    pkg = "L" + model.package.replace(".", "/") + "/"
    main = f"{pkg}MainActivity;"
    r = Renamer(model.classes, pkg, keep={main})
    classes = [r.cls(c) for c in model.classes]
    t = model.truth

    def m(s):
        return {r.type(d) for d in s}

    truth = GroundTruth(
        dict(t.feature_counts), {f: m(v) for f, v in t.feature_classes.items()},
        t.null_checks, m(t.null_check_classes), m(t.kotlin_classes),
        {r.type(d): v for d, v in t.class_bytes.items()},
        {r.type(d): v for d, v in t.class_invokes.items()},
        {r.type(d): v for d, v in t.class_kotlin_invokes.items()},
        m(t.stdlib_classes), m(t.project_classes), m(t.metadata_only),
    )
    mapping = dict(r.class_map)
    mapping.update({"L" + k + "/": "L" + v + "/" for k, v in r.packages.items()})
    return AppModel(model.spec, classes, truth, model.package, mapping)


# -- packaging ----------------------------------------------------------------

def dex_entry_name(i):
    return "classes.dex" if i == 0 else f"classes{i + 1}.dex"


def write_apk(path, dex_files, manifest_bytes, compression=zipfile.ZIP_DEFLATED, extra=()):
    """Write an APK with the given DEX payloads, manifest and extra (name, bytes) entries."""
    with zipfile.ZipFile(path, "w", compression=compression) as zf:
        zf.writestr("AndroidManifest.xml", manifest_bytes)
        for i, data in enumerate(dex_files):
            zf.writestr(dex_entry_name(i), data)
        zf.writestr("resources.arsc", struct.pack("<HHI", 0x0002, 12, 12) + b"\0" * 4)
        for name, data in extra:
            zf.writestr(name, data)
    return path


def perf_spec(kotlin=True, target_bytes=5_000_000, images=3, seed=0):
    """Spec for a large multi-DEX app of roughly ``target_bytes`` of DEX data.

    The Kotlin and Kotlin-free variants share the filler density so that
    equal byte sizes mean comparable amounts of bytecode to step through.
    """
    # measured DEX bytes per unit of n at filler=400
    n = max(4, target_bytes // (2020 if kotlin else 1367))
    if kotlin:
        return AppSpec(
            "perf_kotlin", features={f: n // 4 for f in FEATURES}, null_checks=n // 2,
            kotlin_classes=n // 2, java_classes=n // 2, library_classes=8,
            filler=400, images=images, seed=seed,
        )
    return AppSpec("perf_plain", kotlin_classes=0, java_classes=n, library_classes=8,
                   filler=400, images=images, seed=seed)
