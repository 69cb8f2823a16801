"""Kotlin language features detectable from standard-library package usage."""

PLAIN_STDLIB_PREFIX = "Lkotlin/"
METADATA_ANNOTATION = "Lkotlin/Metadata;"

# feature name -> package segments directly below the stdlib root.
# The first segment is canonical; kotlin.concurrency is accepted as an alias
# because the shipped stdlib package is kotlin.concurrent.
FEATURE_SEGMENTS = {
    "coroutines": ("coroutines",),
    "reflection": ("reflect",),
    "delegated_properties": ("properties",),
    "ranges": ("ranges",),
    "text": ("text",),
    "collections": ("collections",),
    "comparisons": ("comparisons",),
    "concurrent": ("concurrent", "concurrency"),
    "io": ("io",),
    "sequences": ("sequences",),
}
FEATURES = tuple(FEATURE_SEGMENTS)
NULL_SAFETY = "null_safety"
ALL_FEATURES = FEATURES + (NULL_SAFETY,)

# runtime null-check intrinsics injected by the compiler
INTRINSICS_CLASS = "jvm/internal/Intrinsics;"
NULL_CHECK_METHODS = frozenset({
    "checkNotNull",
    "checkNotNullParameter",
    "checkNotNullExpressionValue",
    "checkParameterIsNotNull",
    "checkExpressionValueIsNotNull",
    "checkReturnedValueIsNotNull",
    "checkFieldIsNotNull",
})


def package_to_prefix(package_name):
    """``com.example`` -> ``Lcom/example/``."""
    return "L" + package_name.replace(".", "/") + "/"
