from vesselkin.conftest import *  # noqa: F401 F403
