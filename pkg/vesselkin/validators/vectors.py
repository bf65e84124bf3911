import math
from typing import Callable, Tuple

from voluptuous import Invalid

from .scalars import _real

__all__ = ['ValVector2', 'ValSproutingVelocity']


def ValVector2(name: str) -> Callable:
    def validator(val) -> Tuple[float, float]:
        if not isinstance(val, (list, tuple)) or len(val) != 2:
            raise Invalid(f'{name} must be a list of two numbers')
        return (_real(val[0], name), _real(val[1], name))

    return validator


def ValSproutingVelocity(val) -> Tuple[float, float]:
    """
    The sprouting velocity must be nonzero with a positive first component,
    since the outer inflow datum is proportional to that component.

    :param val: Two-component list

    :return:         The velocity as a tuple
    :raises Invalid: If the vector is malformed or the first component is not positive
    """
    v0 = ValVector2('v0')(val)
    if math.hypot(*v0) == 0 or v0[0] <= 0:
        raise Invalid('positivity violated: v0')
    return v0
