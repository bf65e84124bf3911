from functools import wraps
from typing import Callable

__all__ = ['cached_property', 'clear_cached']


def cached_property(func: Callable) -> property:
    """
    A decorator that caches a derived array for the lifetime of a grid object
    in a private ``_property_cache`` mapping. Grids are never mutated after
    construction, so the cached value stays valid.
    """

    @wraps(func)
    def wrapper(self):
        try:
            return self._property_cache[func.__name__]
        except AttributeError:
            self._property_cache = {}
            rv = self._property_cache[func.__name__] = func(self)
        except KeyError:
            rv = self._property_cache[func.__name__] = func(self)
        return rv

    return property(wrapper)


def clear_cached(obj) -> None:
    """Drop every cached property of ``obj``."""
    obj.__dict__.pop('_property_cache', None)
