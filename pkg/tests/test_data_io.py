import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from riskfair.data_io import SchemaError, map_labels, read_table, write_rows, write_table


def write(path, text):
    path.write_text(text, encoding="utf-8")
    return path


def test_read_basic(tmp_path):
    p = write(tmp_path / "d.csv", "feature_1,feature_0,group,target,note\n"
                                  "1,2,b,0.5,x\n3,4,a,1.5,y\n5,6,b,2.5,z\n")
    t = read_table(p)
    np.testing.assert_array_equal(t.features, [[2, 1], [4, 3], [6, 5]])
    assert t.labels == ["b", "a"]
    np.testing.assert_array_equal(t.groups, [0, 1, 0])
    np.testing.assert_array_equal(t.target, [0.5, 1.5, 2.5])
    assert t.prediction is None
    assert t.extra == {"note": ["x", "y", "z"]}
    assert list(t.counts()) == [2, 1]


def test_integer_labels_sorted():
    idx, labels = map_labels(["3", "1", "2", "1"])
    assert labels == [1, 2, 3]
    np.testing.assert_array_equal(idx, [2, 0, 1, 0])


def test_known_labels_reject_unknown():
    with pytest.raises(SchemaError, match="unknown group"):
        map_labels(["a", "c"], known=["a", "b"])


@pytest.mark.parametrize("text, msg", [
    ("feature_0,target\n1,2\n", "group"),
    ("feature_0,group\n1,a,3\n", "fields"),
    ("feature_0,group\nx,a\n", "not a number"),
    ("feature_1,group\n1,a\n", "feature"),
    ("feature_0,group\n", "no data"),
    ("", "empty"),
])
def test_schema_errors(tmp_path, text, msg):
    with pytest.raises(SchemaError, match=msg):
        read_table(write(tmp_path / "bad.csv", text))


def test_require_target(tmp_path):
    p = write(tmp_path / "d.csv", "group,prediction\na,1\n")
    with pytest.raises(SchemaError, match="target"):
        read_table(p, require_target=True)


@settings(max_examples=30, deadline=None)
@given(st.lists(st.tuples(st.floats(-1e6, 1e6, allow_nan=False), st.sampled_from("xyz"),
                          st.floats(-1e300, 1e300, allow_nan=False)), min_size=1, max_size=20))
def test_write_read_write_fixpoint(tmp_path_factory, rows):
    d = tmp_path_factory.mktemp("rt")
    first = d / "a.csv"
    write_rows(first, ["feature_0", "group", "target"], rows)
    t = read_table(first)
    second = d / "b.csv"
    write_table(second, t)
    again = read_table(second)
    third = d / "c.csv"
    write_table(third, again)
    assert second.read_bytes() == third.read_bytes()
    np.testing.assert_array_equal(t.target, [r[2] for r in rows])


def test_atomic_write_leaves_no_temp(tmp_path):
    write_rows(tmp_path / "out" / "x.csv", ["a"], [(1.0,)])
    assert [p.name for p in (tmp_path / "out").iterdir()] == ["x.csv"]
