from .memoization import *  # noqa
from .validation import *  # noqa
