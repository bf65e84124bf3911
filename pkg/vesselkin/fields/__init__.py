from .coefficients import *  # noqa
from .density import *  # noqa
from .params import *  # noqa
