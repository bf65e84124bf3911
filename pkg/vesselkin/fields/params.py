import math
from dataclasses import asdict, dataclass, replace
from typing import Tuple

__all__ = ['ModelParams', 'default_vmax']


@dataclass(frozen=True)
class ModelParams:
    """
    Physical constants of the tip/TAF model. Values are engineering defaults; the shipped
    standard scenario narrows the Fermi window to χ = 1.5, σ_v = 0.5 so that one outer
    boundary pass does not amplify the sprouting density. Signs are enforced by the
    config schema, not here, so tests can pass degenerate values directly.
    """

    beta: float = 1.0  # friction
    sigma: float = 0.1  # velocity diffusivity
    gamma: float = 0.05  # anastomosis rate
    d: float = 0.05  # TAF diffusivity
    eta: float = 0.3  # TAF consumption
    alpha1: float = 1.0  # maximal branching rate
    cR: float = 1.0
    d1: float = 1.0
    gamma1: float = 0.5
    q1: float = 1.0
    chi: float = 10.0
    sigma_v: float = 1.0
    v0: Tuple[float, float] = (0.3, 0.0)
    eps_nu: float = 0.09  # 0.3·|v0|

    @property
    def v0_norm(self) -> float:
        return math.hypot(*self.v0)

    @property
    def window_center(self) -> Tuple[float, float]:
        return (self.chi * self.v0[0], self.chi * self.v0[1])

    def with_changes(self, **changes) -> 'ModelParams':
        return replace(self, **changes)

    def serialize(self) -> dict:
        return asdict(self)


def default_vmax(params: ModelParams) -> float:
    """Four thermal or sprouting speeds, whichever is larger, with a 1.5 margin."""
    return 1.5 * 4 * max(params.v0_norm, math.sqrt(params.sigma / params.beta))
