from .balance import *  # noqa
from .bounds import *  # noqa
from .boundary import *  # noqa
from .heat import *  # noqa
from .report import *  # noqa
