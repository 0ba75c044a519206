import json
import math

import numpy as np
from hypothesis import given
from hypothesis import strategies as st

from fdss.profiles import ProfileODE, integrate_profile
from fdss.serialization import dumps, fmt_float, loads, profile_to_csv, profile_to_dict, rows_to_csv

finite = st.floats(allow_nan=False, allow_infinity=False)
leaves = st.one_of(st.none(), st.booleans(), st.integers(-10**6, 10**6), finite,
                   st.text(max_size=8))
trees = st.recursive(leaves, lambda kids: st.one_of(
    st.lists(kids, max_size=4), st.dictionaries(st.text(max_size=5), kids, max_size=4)),
    max_leaves=20)


@given(trees)
def test_json_round_trip(obj):
    assert loads(dumps(obj)) == obj
    assert loads(dumps(obj, indent=None)) == obj


@given(finite)
def test_float_text_is_exact(x):
    s = fmt_float(x)
    assert float(s) == x
    assert isinstance(json.loads(s), float)


def test_non_finite_literals():
    assert fmt_float(math.nan) == "NaN"
    assert fmt_float(-math.inf) == "-Infinity"
    assert math.isinf(loads(dumps([math.inf]))[0])


def test_numpy_and_enum_values():
    from fdss.profiles import TailKind
    out = loads(dumps({"a": np.arange(3.0), "k": TailKind.FAST_DECAY, "t": (1, 2),
                       "n": np.float64(0.1)}))
    assert out == {"a": [0.0, 1.0, 2.0], "k": "FastDecay", "t": [1, 2], "n": 0.1}


def test_csv_rows():
    text = rows_to_csv(("x", "y"), [(0.1, "a"), (1.0, "b")])
    assert text == "x,y\n0.10000000000000001,a\n1.0,b\n"


def test_profile_exports(p_star):
    prof = integrate_profile(ProfileODE.from_params(p_star, 1), 1.0, xi_max=1.0)
    d = loads(dumps(profile_to_dict(prof)))
    assert d["termination"] == "ReachedXiMax"
    assert np.array_equal(np.array(d["f"]), prof.f)
    lines = profile_to_csv(prof).splitlines()
    assert lines[0] == "xi,f,h" and len(lines) == prof.xi.size + 1
