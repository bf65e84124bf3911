from .problem import *  # noqa
from .admissibility import *  # noqa
from .march import *  # noqa
from .picard import *  # noqa
