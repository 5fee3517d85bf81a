from __future__ import annotations

from dataclasses import dataclass, field

from .errors import ParameterError


@dataclass(frozen=True)
class AlphaParam:
    """Stability index alpha in (1, 2] with its derived constants."""

    alpha: float
    beta_index: float = field(init=False)
    is_brownian: bool = field(init=False)

    def __post_init__(self) -> None:
        a = float(self.alpha)
        if not (1.0 < a <= 2.0):
            raise ParameterError(f"alpha must lie in (1, 2], got {self.alpha!r}")
        object.__setattr__(self, "alpha", a)
        object.__setattr__(self, "beta_index", 1.0 - 1.0 / a)
        object.__setattr__(self, "is_brownian", a == 2.0)

    def theta(self, p: int) -> float:
        """ML theta parameter of the p-th chain value: p - 1/alpha."""
        return p - 1.0 / self.alpha

    @property
    def b_shape(self) -> float:
        """Second Beta parameter of the glued-branch fraction, (2-alpha)/(alpha-1)."""
        return (2.0 - self.alpha) / (self.alpha - 1.0)


def as_alpha(alpha: "AlphaParam | float") -> AlphaParam:
    return alpha if isinstance(alpha, AlphaParam) else AlphaParam(alpha)
