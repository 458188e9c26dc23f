import json
import math

import pytest
from hypothesis import given, strategies as st

from pathuq.tables import COLUMNS, CurveTable, dumps_json

finite = st.floats(allow_nan=False, allow_infinity=False)
maybe = st.one_of(finite, st.just(math.nan), st.just(math.inf), st.just(-math.inf))


@given(st.lists(st.tuples(st.one_of(st.none(), finite), finite, maybe, maybe, maybe, maybe,
                          st.sampled_from(["ok", "assumption-violated"])), max_size=8))
def test_csv_round_trip_is_exact(rows):
    tab = CurveTable("x", "s")
    for r in rows:
        tab.append(*r)
    text = tab.to_csv()
    assert text.splitlines()[0] == ",".join(COLUMNS)
    assert "\r" not in text
    assert CurveTable.from_csv(text).same_values(tab)


def test_shortest_round_trip_format():
    tab = CurveTable("bm-mean", None)
    tab.append(None, 2.0, 5 / 3, 2.5)
    line = tab.to_csv().splitlines()[1]
    assert line == "-,2.0,1.6666666666666667,2.5,nan,nan,ok"


def test_json_round_trip():
    tab = CurveTable("q", "eps", meta={"a": 1})
    tab.append(0.1, 0.0, -0.5, 0.6)
    obj = json.loads(dumps_json(tab.to_json()))
    assert obj["rows"][0][4] is None
    assert CurveTable.from_json(obj).same_values(tab)


def test_check_detects_inverted_interval():
    tab = CurveTable("x", "s")
    tab.append(1.0, 0.5, 0.6, 0.4)
    with pytest.raises(AssertionError):
        tab.check()
