"""Orienteering instance file parsing tests."""

import numpy as np
import pytest

from impdr.instances import (
    INSTANCE_ENV_VAR,
    Instance,
    InstanceFormatError,
    bundled_instance_path,
    load_instance,
    parse_instance,
    resolve_instance,
)


def test_parse_minimal_points_only():
    inst = parse_instance("0 0 0\n5 0 0\n2 1 7\n")
    assert inst.n == 3
    np.testing.assert_array_equal(inst.start, [0.0, 0.0])
    np.testing.assert_array_equal(inst.end, [5.0, 0.0])
    assert inst.total_score == pytest.approx(7.0)
    assert inst.budget is None and inst.n_paths is None


def test_parse_header_and_comments_and_separators():
    text = """\
# tour budget and path count
12.5 2
0,0;0
5, 0, 0
# a rewarded node
2;1;7
"""
    inst = parse_instance(text, name="demo")
    assert inst.budget == pytest.approx(12.5)
    assert inst.n_paths == 2
    assert inst.n == 3
    assert inst.scores[2] == pytest.approx(7.0)


def test_parse_two_number_rows_after_header_are_points():
    # only the first record may be a header; later 2-number rows are
    # zero-score points
    inst = parse_instance("3.0 1\n0 0\n1 1\n")
    assert inst.budget == pytest.approx(3.0)
    assert inst.n == 2
    np.testing.assert_array_equal(inst.scores, [0.0, 0.0])


def test_parse_errors_carry_line_numbers():
    with pytest.raises(InstanceFormatError, match="line 2"):
        parse_instance("0 0 0\nnought nought\n1 1 0\n", name="bad")
    with pytest.raises(InstanceFormatError, match="line 3"):
        parse_instance("0 0 0\n1 1 0\n1 2 3 4\n")
    with pytest.raises(InstanceFormatError, match="fewer than two"):
        parse_instance("# empty\n0 0 0\n")


def test_instance_validation():
    with pytest.raises(ValueError):
        Instance(points=np.zeros((2, 3)), scores=np.zeros(2),
                 budget=None, n_paths=None, name="bad")
    with pytest.raises(ValueError):
        Instance(points=np.zeros((2, 2)), scores=np.zeros(3),
                 budget=None, n_paths=None, name="bad")


def test_load_instance_missing_file(tmp_path):
    with pytest.raises(InstanceFormatError, match="cannot read"):
        load_instance(tmp_path / "nope.txt")


def test_bundled_synthetic_instance():
    path = bundled_instance_path()
    inst = load_instance(path)
    assert inst.n == 21
    assert inst.total_score > 0
    with pytest.raises(InstanceFormatError, match="available"):
        bundled_instance_path("made-up")


def test_resolve_precedence(tmp_path, monkeypatch):
    own = tmp_path / "own.txt"
    own.write_text("0 0 0\n1 0 0\n0.5 0.5 9\n")
    env_file = tmp_path / "env.txt"
    env_file.write_text("0 0 0\n2 0 0\n")

    # default: the bundled benchmark
    monkeypatch.delenv(INSTANCE_ENV_VAR, raising=False)
    assert resolve_instance().n == 21
    # environment override
    monkeypatch.setenv(INSTANCE_ENV_VAR, str(env_file))
    assert resolve_instance().n == 2
    # explicit path wins over the environment
    assert resolve_instance(own).n == 3
