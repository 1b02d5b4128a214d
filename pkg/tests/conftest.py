import pytest

from gallery_profiler.privacy import PrivacyConfig
from gallery_profiler.profiler import ProfileConfig
from gallery_profiler.synthetic import build_privacy_fixture


@pytest.fixture(scope="session")
def fixture_gallery():
    return build_privacy_fixture()


@pytest.fixture(scope="session")
def rule_config():
    # The shipped default forces everything private; rule-level tests need
    # the individual rules to actually run.
    return ProfileConfig(privacy=PrivacyConfig(force_all_private=False))
