"""Exception hierarchy shared by every analysis stage."""


class KotlinScopeError(Exception):
    """Base class for all errors raised by kotlinscope."""


# -- APK container ---------------------------------------------------------

class ApkError(KotlinScopeError):
    pass


class NotAZipArchive(ApkError):
    pass


class NoDexFound(ApkError):
    pass


class NoManifest(ApkError):
    pass


class CorruptEntry(ApkError):
    def __init__(self, entry, reason=""):
        self.entry = entry
        super().__init__(f"{entry}: {reason}" if reason else entry)


# -- binary XML ------------------------------------------------------------

class AxmlError(KotlinScopeError):
    pass


class NotBinaryXml(AxmlError):
    pass


class TruncatedChunk(AxmlError):
    pass


class MissingPackageAttribute(AxmlError):
    pass


# -- DEX -------------------------------------------------------------------

class DexError(KotlinScopeError):
    pass


class BadMagic(DexError):
    pass


class UnsupportedVersion(DexError):
    pass


class TruncatedTable(DexError):
    pass


class IndexOutOfBounds(DexError, IndexError):
    pass


class MalformedBytecode(DexError):
    pass


# -- signatures / prefixes -------------------------------------------------

class SignatureError(KotlinScopeError):
    """Malformed signature file or signature database."""


class AmbiguousPrefix(KotlinScopeError):
    def __init__(self, candidates):
        self.candidates = dict(candidates)
        listing = ", ".join(f"{p} ({n})" for p, n in sorted(self.candidates.items()))
        super().__init__(f"signature hits map to several prefixes: {listing}")


class StructureViolation(KotlinScopeError):
    def __init__(self, feature, prefix, stdlib_prefix):
        self.feature = feature
        self.prefix = prefix
        self.stdlib_prefix = stdlib_prefix
        super().__init__(
            f"{feature}: signature hit under {prefix}, outside {stdlib_prefix}"
        )


# -- analysis / statistics -------------------------------------------------

class ProjectPrefixEmpty(KotlinScopeError):
    pass


class DegenerateInput(KotlinScopeError, ValueError):
    pass


class UnmatchedAppId(KotlinScopeError, KeyError):
    pass
