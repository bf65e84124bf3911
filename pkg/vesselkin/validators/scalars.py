import math
from numbers import Real
from typing import Callable

from voluptuous import Invalid

__all__ = [
    'ValPositive',
    'ValNonNegative',
    'ValNonPositive',
    'ValMinCount',
    'ValEvenCount',
]


def _real(val, name: str) -> float:
    if isinstance(val, bool) or not isinstance(val, Real) or not math.isfinite(val):
        raise Invalid(f'{name} must be a finite number')
    return float(val)


def ValPositive(name: str) -> Callable:
    """
    Build a validator for a strictly positive physical constant.

    :param name: Parameter name used in the error message

    :return:         The validator, which returns the value as a float
    :raises Invalid: ``positivity violated: <name>`` for values ≤ 0
    """

    def validator(val):
        if _real(val, name) <= 0:
            raise Invalid(f'positivity violated: {name}')
        return float(val)

    return validator


def ValNonNegative(name: str) -> Callable:
    def validator(val):
        if _real(val, name) < 0:
            raise Invalid(f'positivity violated: {name}')
        return float(val)

    return validator


def ValNonPositive(name: str) -> Callable:
    """For flux data that may only point one way, e.g. TAF entering through r0."""

    def validator(val):
        if _real(val, name) > 0:
            raise Invalid(f'{name} must be nonpositive')
        return float(val)

    return validator


def ValMinCount(name: str, minimum: int) -> Callable:
    """
    Build a validator for a cell count.

    :param name:    Count name used in the error message
    :param minimum: Smallest admissible count

    :return:         The validator
    :raises Invalid: If the value is not an integer or is below ``minimum``
    """

    def validator(val):
        if isinstance(val, bool) or not isinstance(val, int) or val < minimum:
            raise Invalid(f'{name} must be an integer of at least {minimum}')
        return val

    return validator


def ValEvenCount(name: str) -> Callable:
    def validator(val):
        ValMinCount(name, 2)(val)
        if val % 2:
            raise Invalid(f'{name} must be even')
        return val

    return validator
