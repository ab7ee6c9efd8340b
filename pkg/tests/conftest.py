import pytest

from liesym.models import load_model
from liesym.parsing import ParseContext, parse


def P(text, *params, positive=()):
    return parse(text, ParseContext(params=frozenset(params), positive=frozenset(positive)))


@pytest.fixture(scope="session")
def ricci():
    return load_model("ricci")


@pytest.fixture(scope="session")
def convdiff():
    return load_model("convdiff")
