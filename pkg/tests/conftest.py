from __future__ import annotations

import pytest

from rarcheck.core import Event, canonical_sb, make_state
from rarcheck.parser import parse
from rarcheck.cli import resolve

# the state drawn for the four-thread example: initialisers x, y, z
IX, IY, IZ = Event(0, 0, "wr", "x", None, 0), Event(0, 1, "wr", "y", None, 0), Event(0, 2, "wr", "z", None, 0)
U1 = Event(1, 0, "updRA", "x", 2, 4)
W2Y = Event(2, 0, "wr", "y", None, 1)
W2X = Event(2, 1, "wrR", "x", None, 2)
W3Z = Event(3, 0, "wr", "z", None, 3)
R3X = Event(3, 1, "rdA", "x", 2, None)
R4Z = Event(4, 0, "rd", "z", 3, None)
U4 = Event(4, 1, "updRA", "y", 0, 5)
EXAMPLE2_EVENTS = [IX, IY, IZ, U1, W2Y, W2X, W3Z, R3X, R4Z, U4]


def build_example2():
    rf = {(W2X.tag, U1.tag), (W2X.tag, R3X.tag), (W3Z.tag, R4Z.tag), (IY.tag, U4.tag)}
    mo = {
        "x": [IX.tag, W2X.tag, U1.tag],
        "y": [IY.tag, U4.tag, W2Y.tag],
        "z": [IZ.tag, W3Z.tag],
    }
    return make_state(EXAMPLE2_EVENTS, canonical_sb(EXAMPLE2_EVENTS), rf, mo)


@pytest.fixture
def example2():
    return build_example2()


def corpus_spec(name: str):
    return parse(resolve(name))


@pytest.fixture
def corpus():
    return corpus_spec
