from .annulus import *  # noqa
from .quadrature import *  # noqa
from .velocity import *  # noqa
