import pytest

from hemsmip.generate import RANGES, STATIC, generate_instance
from hemsmip.scenario import validate_scenario


def _within(v, name):
    lo, hi = RANGES[name]
    return lo <= v <= hi


def test_values_inside_ranges():
    s = generate_instance(4, 6, 3, seed=11)
    assert validate_scenario(s) == []
    assert all(_within(p, "grid_price") for p in s.grid_price)
    for hh in s.households:
        assert hh.grid_limit == STATIC["grid_limit"]
        assert all(_within(r, "renewable") for r in hh.renewable)
        st = hh.storage
        assert st.initial == STATIC["initial"] and st.retention == STATIC["retention"]
        assert _within(st.charge_power, "charge_power")
        assert _within(st.max_capacity, "max_capacity") and _within(st.min_capacity, "min_capacity")
        for i, a in enumerate(hh.appliances):
            assert 1 <= a.duration <= s.horizon
            assert _within(a.power, "power") and _within(a.disutility_factor, "disutility_factor")
            assert a.reservation_slot == 1 and a.max_end == s.horizon
            assert a.interruptible == (i % 2 == 0)


def test_same_seed_same_instance():
    assert generate_instance(3, 4, 2, 7) == generate_instance(3, 4, 2, 7)
    assert generate_instance(3, 4, 2, 7) != generate_instance(3, 4, 2, 8)


def test_many_prices_stay_in_range():
    s = generate_instance(1, 1000, 1, seed=3)
    lo, hi = RANGES["grid_price"]
    assert len(s.grid_price) == 1000
    assert all(lo <= p <= hi for p in s.grid_price)


@pytest.mark.parametrize("sizes", [(0, 3, 2), (2, 0, 2), (2, 3, 0)])
def test_sizes_below_minimum(sizes):
    with pytest.raises(ValueError):
        generate_instance(*sizes, seed=0)
