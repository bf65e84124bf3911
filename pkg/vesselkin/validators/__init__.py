from .scalars import *  # noqa
from .vectors import *  # noqa
