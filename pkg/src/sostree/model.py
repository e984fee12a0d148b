"""Model parameters and energy evaluation for finite spin configurations.

The model assigns spins from {0..m} to tree vertices with nearest-neighbour
energy -J * sum |s(x) - s(y)|.  J < 0 is the ferromagnetic regime, J > 0 the
antiferromagnetic one.  Everything downstream of the energy depends on the
parameters only through the activation theta = exp(J*beta), which is computed
once per parameter set.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .tree import Word, cached_ball, parent, sphere

FM = "FM"
AFM = "AFM"
FREE = "FREE"


@dataclass(frozen=True)
class ModelParams:
    k: int
    m: int
    J: float
    beta: float
    theta: float = field(init=False, repr=False)

    def __post_init__(self):
        if self.k < 1:
            raise ValueError("tree order k must be >= 1")
        if self.m < 1:
            raise ValueError("max spin m must be >= 1")
        if self.beta < 0:
            raise ValueError("inverse temperature beta must be >= 0")
        object.__setattr__(self, "theta", math.exp(self.J * self.beta))

    @property
    def regime(self) -> str:
        if self.J < 0:
            return FM
        if self.J > 0:
            return AFM
        return FREE

    @classmethod
    def from_theta(cls, k: int, m: int, theta: float) -> "ModelParams":
        """Parameter set with a directly prescribed activation.

        Realised as J = ln(theta), beta = 1; all formulas below the energy
        level consume theta only, so this is equivalent to any (J, beta) pair
        with the same product.
        """
        if theta <= 0:
            raise ValueError("theta must be positive")
        return cls(k=k, m=m, J=math.log(theta), beta=1.0)

    def to_dict(self) -> dict:
        return {"k": self.k, "m": self.m, "J": self.J, "beta": self.beta, "theta": self.theta}


def parse_params_text(text: str) -> ModelParams:
    """Read parameters from 'key = value' lines (keys: k, m, J, beta)."""
    values: dict[str, str] = {}
    for line in text.splitlines():
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"malformed config line: {line!r}")
        key, val = (part.strip() for part in line.split("=", 1))
        values[key] = val
    try:
        return ModelParams(
            k=int(values["k"]), m=int(values["m"]),
            J=float(values["J"]), beta=float(values["beta"]),
        )
    except KeyError as missing:
        raise ValueError(f"config missing key {missing.args[0]!r}") from None


@dataclass(frozen=True)
class SpinConfig:
    """Spin assignment for every vertex of a ball."""

    ball_depth: int
    values: dict[Word, int]

    def spin(self, w: Word) -> int:
        return self.values[w]


def _check_cover(config: SpinConfig, params: ModelParams) -> None:
    for w in cached_ball(params.k, config.ball_depth):
        if w not in config.values:
            raise ValueError(f"configuration missing vertex {w}")
        s = config.values[w]
        if not 0 <= s <= params.m:
            raise ValueError(f"spin {s} at {w} outside 0..{params.m}")


def hamiltonian(config: SpinConfig, params: ModelParams) -> float:
    """Energy over all edges with both endpoints inside the ball."""
    _check_cover(config, params)
    total = 0
    for w in cached_ball(params.k, config.ball_depth):
        p = parent(w)
        if p is None:
            continue
        total += abs(config.values[w] - config.values[p])
    return -params.J * total


def boundary_energy(config: SpinConfig, boundary: dict[Word, int], params: ModelParams) -> float:
    """Energy of the edges joining the ball surface to the next sphere."""
    _check_cover(config, params)
    outer = sphere(params.k, config.ball_depth + 1)
    if set(boundary) != set(outer):
        raise ValueError("boundary must assign a spin to exactly the next sphere")
    total = 0
    for y in outer:
        s = boundary[y]
        if not 0 <= s <= params.m:
            raise ValueError(f"boundary spin {s} at {y} outside 0..{params.m}")
        total += abs(config.values[parent(y)] - s)
    return -params.J * total
