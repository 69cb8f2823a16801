"""The synthetic application suite and its expected feature matrix."""

from kotlinscope.features import ALL_FEATURES, FEATURES, NULL_SAFETY
from kotlinscope.synth.apps import AppSpec, build_app, rename_app

ALL = {f: 3 for f in FEATURES}

SUITE = [
    AppSpec("all_features", features=ALL, null_checks=5, kotlin_classes=4, seed=1),
    AppSpec("ranges_only", features={"ranges": 5}, null_checks=1, kotlin_classes=1, seed=2),
    AppSpec("text_collections", package="org.fdroid.notes", features={"text": 4, "collections": 6},
            null_checks=3, seed=3),
    AppSpec("async_io", package="io.github.sync", features={"coroutines": 7, "sequences": 2, "io": 3},
            null_checks=2, kotlin_classes=3, seed=4),
    AppSpec("props_compare_timer", features={"delegated_properties": 2, "comparisons": 3, "concurrent": 1},
            seed=5),
    AppSpec("reflection_interfaces", features={"reflection": 4, "text": 1}, null_checks=1, seed=6),
    AppSpec("reflection_with_code", features={"reflection": 4}, reflect_with_code=True, null_checks=1, seed=7),
    AppSpec("null_checks_only", null_checks=7, kotlin_classes=2, seed=8),
    AppSpec("java_2013", package="com.legacy.game", kotlin_classes=0, java_classes=5, library_classes=3, seed=9),
    AppSpec("multidex_all", features=ALL, null_checks=9, kotlin_classes=6, java_classes=4, images=3, seed=10),
    AppSpec("metadata_advisory", features={"collections": 2}, metadata_only_classes=3, seed=11),
    AppSpec("library_heavy", package="de.app", features={"ranges": 1, "sequences": 1, "io": 2},
            library_classes=6, java_classes=4, seed=12),
    AppSpec("kotlin_heavy", package="a.b", features={f: 1 for f in FEATURES}, null_checks=12,
            kotlin_classes=8, java_classes=1, library_classes=0, seed=13),
]


def expected_matrix(spec):
    """feature -> present, straight from the app's construction."""
    out = {f: spec.features.get(f, 0) > 0 for f in FEATURES}
    out[NULL_SAFETY] = spec.null_checks > 0
    return out


def permitted_miss(spec):
    """Features the renamed twin may lose: reflection when its package has no code."""
    return {"reflection"} if spec.features.get("reflection") and not spec.reflect_with_code else set()


def build_suite(directory):
    """Write every suite app and its renamed twin; returns [(spec, plain, twin, paths)]."""
    out = []
    for spec in SUITE:
        plain = build_app(spec)
        twin = rename_app(plain)
        p = plain.write_apk(directory / f"{spec.name}.apk")
        t = twin.write_apk(directory / f"{spec.name}_renamed.apk")
        out.append((spec, plain, twin, p, t))
    return out


assert set(ALL_FEATURES) == set(FEATURES) | {NULL_SAFETY}
