"""Seed inputs for the parser fuzzer: small synthetic DEX images and manifests."""

from kotlinscope.synth.apps import AppSpec, build_app
from kotlinscope.synth.axmlwriter import manifest


def dex_seeds():
    specs = [AppSpec("f1", features={"ranges": 1, "text": 1}, null_checks=2, kotlin_classes=1,
                     java_classes=1, filler=2),
             AppSpec("f2", kotlin_classes=0, java_classes=2, library_classes=0, filler=1),
             AppSpec("f3", features={"coroutines": 1}, kotlin_classes=1, java_classes=0,
                     library_classes=0, filler=0)]
    return [build_app(s).dex_files(v)[0] for s, v in zip(specs, (35, 38, 39))]


def manifest_seeds():
    return [manifest("com.example.app", ["com.example.app.Main"]),
            manifest("org.fdroid.x", [], utf8=True),
            manifest("a", ["a.B", "a.C"])]
