import os

import pytest


@pytest.fixture(autouse=True, scope="session")
def _isolated_cache(tmp_path_factory):
    # calibration constants land in a throwaway directory
    path = tmp_path_factory.mktemp("cache")
    old = os.environ.get("MULTIPLIER_LAB_CACHE")
    os.environ["MULTIPLIER_LAB_CACHE"] = str(path)
    yield path
    if old is None:
        os.environ.pop("MULTIPLIER_LAB_CACHE", None)
    else:
        os.environ["MULTIPLIER_LAB_CACHE"] = old
