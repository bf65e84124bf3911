from .config import *  # noqa
from .snapshot import *  # noqa
from .export import *  # noqa
from .runner import *  # noqa
