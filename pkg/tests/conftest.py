import os

import pytest
from hypothesis import HealthCheck, settings

settings.register_profile("default", deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))

try:
    from loguru import logger

    logger.remove()  # androguard logs through loguru
except ImportError:
    pass


@pytest.fixture(scope="session")
def db():
    from kotlinscope.scanner import load_signatures

    return load_signatures()


@pytest.fixture(scope="session")
def suite(tmp_path_factory):
    """The synthetic app suite and renamed twins, written once per session."""
    from suite import build_suite

    return build_suite(tmp_path_factory.mktemp("apks"))


@pytest.fixture(scope="session")
def apk_dir(suite):
    return suite[0][3].parent
