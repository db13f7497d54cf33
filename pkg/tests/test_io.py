import json

import numpy as np
import pytest

from modecert.errors import DegenerateSample, ParseError
from modecert.io import dumps, parse_sample_text, read_sample
from modecert.sample import Sample


def test_read_sample_basic(tmp_path):
    p = tmp_path / "d.txt"
    p.write_text("0\n1\n")
    s = read_sample(p)
    assert s.points.tolist() == [0.0, 1.0] and s.weights.tolist() == [0.5, 0.5] and s.n == 2


def test_ties_collapse_to_weights():
    s = parse_sample_text("1\n1\n2\n")
    assert s.points.tolist() == [1.0, 2.0]
    assert np.allclose(s.weights, [2 / 3, 1 / 3])
    assert s.counts.tolist() == [2, 1]


def test_header_and_blank_lines():
    s = parse_sample_text("# velocity\n3.5\n\n1.0,\n2\n")
    assert s.points.tolist() == [1.0, 2.0, 3.5]


@pytest.mark.parametrize("text, line", [("abc\n", 1), ("# h\n1\nx2\n", 3), ("1\nnan\n", 2), ("1\ninf\n", 2)])
def test_parse_errors_carry_line_numbers(text, line):
    with pytest.raises(ParseError) as info:
        parse_sample_text(text)
    assert info.value.line == line
    assert f"line {line}" in str(info.value)


@pytest.mark.parametrize("text", ["", "# only header\n", "2\n2\n2\n"])
def test_degenerate(text):
    with pytest.raises(DegenerateSample):
        parse_sample_text(text)


def test_sample_validation_and_ecdf():
    s = Sample.from_data([3.0, 1.0, 2.0, 2.0])
    assert s.ecdf(2.0) == pytest.approx(0.75)
    assert s.ecdf(2.0, left=True) == pytest.approx(0.25)
    assert s.ecdf(0.0) == 0.0 and s.ecdf(10.0) == 1.0
    with pytest.raises(ValueError):
        Sample.from_data([0.0, np.inf])


def test_dumps_17_digits_round_trip():
    vals = [0.1, 1 / 3, np.pi * 1e-300, -2.5e17, 1.0, 0.0]
    text = dumps({"x": np.array(vals), "k": np.int64(3), "ok": np.bool_(True)})
    back = json.loads(text)
    assert back["x"] == vals and back["k"] == 3 and back["ok"] is True
    assert "0.33333333333333331" in text


def test_dumps_is_deterministic():
    obj = {"a": [1.5, 2.5], "b": {"c": np.float64(1e-7)}}
    assert dumps(obj) == dumps(obj)
