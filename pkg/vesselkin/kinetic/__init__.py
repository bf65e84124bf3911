from .steps import *  # noqa
from .boundary import *  # noqa
from .solver import *  # noqa
