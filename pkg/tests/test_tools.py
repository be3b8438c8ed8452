import multiprocessing

import pytest

from drhpe.tools import parse_grid, parse_num_processors, parse_rs


def test_parse_num_processors():
    """MAX, MAX-N and plain counts."""
    cpu_count = multiprocessing.cpu_count()
    assert parse_num_processors("MAX") == cpu_count
    assert parse_num_processors("max - 1") == max(cpu_count - 1, 1)
    assert parse_num_processors("MAX-1000") == 1
    assert parse_num_processors("1") == 1
    assert parse_num_processors(1.0) == 1
    with pytest.raises(ValueError):
        parse_num_processors(cpu_count + 1)
    with pytest.raises(ValueError):
        parse_num_processors("0")
    with pytest.raises(ValueError):
        parse_num_processors("HALF")


def test_parse_rs():
    """zero, auto and scaled:r,s; anything else is rejected."""
    assert parse_rs("zero") == ("zero", None, None)
    assert parse_rs(" AUTO ") == ("auto", None, None)
    assert parse_rs("scaled:1,2") == ("scaled", 1.0, 2.0)
    assert parse_rs("scaled: 0.5, 0") == ("scaled", 0.5, 0.0)
    for bad in ("identity", "scaled:1", "scaled:-1,1", "scaled:a,b"):
        with pytest.raises(ValueError):
            parse_rs(bad)


def test_parse_grid():
    """Comma lists and inclusive start:stop:num ranges."""
    assert parse_grid("0,1,2") == (0.0, 1.0, 2.0)
    assert parse_grid("0.5,") == (0.5,)
    assert parse_grid("0:1:3") == pytest.approx((0.0, 0.5, 1.0))
    assert parse_grid("1:2:1") == (1.0,)
