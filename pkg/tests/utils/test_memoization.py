from vesselkin.grids import build_annulus_grid
from vesselkin.utils import cached_property, clear_cached


class Counter:
    def __init__(self):
        self.calls = 0

    @cached_property
    def value(self):
        self.calls += 1
        return self.calls


def test_cached_property():
    """Test that cached property doesn't re-access the function."""
    counter = Counter()
    assert counter.value == 1
    assert counter.value == 1
    assert counter.calls == 1


def test_clear_cached():
    counter = Counter()
    assert counter.value == 1
    clear_cached(counter)
    assert counter.value == 2


def test_cached_grid_arrays():
    """Derived grid arrays are built once and shared."""
    grid = build_annulus_grid(1.0, 2.0, 4, 8)
    assert grid.areas is grid.areas
    assert grid.e_r is grid.e_r
