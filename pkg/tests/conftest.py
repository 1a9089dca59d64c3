import pathlib
import sys

import pytest

sys.path.append(str(pathlib.Path(__file__).resolve().parent.parent))

from app.formats import load_icgs  # noqa: E402

DATA = pathlib.Path(__file__).resolve().parent / "data"


@pytest.fixture
def data_dir():
    return DATA


@pytest.fixture
def worked():
    """One agent, two indistinguishable states, ``p`` true in ``s0``."""
    return load_icgs(DATA / "worked.icgs")


@pytest.fixture
def gadget():
    return load_icgs(DATA / "gadget.icgs")


@pytest.fixture
def coalition_model():
    return load_icgs(DATA / "coalition.icgs")
