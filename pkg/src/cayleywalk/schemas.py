"""Pydantic models: run configuration and service request/response bodies.

The CLI config file is exactly the ``RunConfig`` schema (one JSON
document with a schema_version field); the service request wraps the
same document with a thread count, so a config file can be posted
as-is by the thin client.
"""

from __future__ import annotations

from typing import Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, model_validator

from .environment import EnvSpec
from .group_words import Presentation
from .rng import MASK64


class StrictModel(BaseModel):
    model_config = ConfigDict(extra="forbid")


def _check_u64(value: int, name: str) -> int:
    if not 0 <= value <= MASK64:
        raise ValueError(f"{name} must be an unsigned 64-bit integer")
    return value


class PresentationModel(StrictModel):
    k: int = Field(ge=0)
    r: int = Field(ge=0)

    @model_validator(mode="after")
    def _valid_presentation(self) -> "PresentationModel":
        # delegates the k+r >= 2, 3 <= d < 256 invariants
        self.build()
        return self

    def build(self) -> Presentation:
        return Presentation(self.k, self.r)


class EnvModel(StrictModel):
    family: Literal["simple_symmetric", "dirichlet", "finite_points", "elliptic_floor"]
    alpha: Optional[list[float]] = None
    epsilon: Optional[float] = None
    points: Optional[list[list[float]]] = None
    weights: Optional[list[float]] = None
    seed: Optional[int] = None

    @model_validator(mode="after")
    def _valid_seed(self) -> "EnvModel":
        if self.seed is not None:
            _check_u64(self.seed, "env.seed")
        return self

    def build(self, p: Presentation) -> EnvSpec:
        return EnvSpec(
            presentation=p,
            family=self.family,
            alpha=None if self.alpha is None else tuple(self.alpha),
            epsilon=self.epsilon,
            points=None if self.points is None else tuple(tuple(q) for q in self.points),
            weights=None if self.weights is None else tuple(self.weights),
        )


class SeedsModel(StrictModel):
    environment: int = 0
    trajectory: int = 0

    @model_validator(mode="after")
    def _valid(self) -> "SeedsModel":
        _check_u64(self.environment, "seeds.environment")
        _check_u64(self.trajectory, "seeds.trajectory")
        return self


class WalkBlock(StrictModel):
    steps: int = Field(default=10_000, ge=1)
    environments: int = Field(default=1, ge=1)
    trajectories: int = Field(default=1, ge=1)
    start: list[int] = Field(default_factory=list)


class FlowBlock(StrictModel):
    delta: Optional[float] = None  # default: midpoint of (1/(d-1), 1)
    lengths: list[int] = Field(default_factory=lambda: [50, 100, 200])
    samples: int = Field(default=2000, ge=100)


class NetworkBlock(StrictModel):
    max_depth: int = Field(default=10, ge=1)
    budget: int = Field(default=10_000_000, ge=1)


class SpeedBlock(StrictModel):
    steps: int = Field(default=10_000, ge=1)
    environments: int = Field(default=1, ge=1)
    trajectories: int = Field(default=1, ge=1)


class AssumptionsBlock(StrictModel):
    samples: int = Field(default=100_000, ge=1)


class RunConfig(StrictModel):
    schema_version: Literal[1]
    presentation: PresentationModel
    env: EnvModel
    seeds: SeedsModel = Field(default_factory=SeedsModel)
    walk: WalkBlock = Field(default_factory=WalkBlock)
    flow: FlowBlock = Field(default_factory=FlowBlock)
    network: NetworkBlock = Field(default_factory=NetworkBlock)
    speed: SpeedBlock = Field(default_factory=SpeedBlock)
    assumptions: AssumptionsBlock = Field(default_factory=AssumptionsBlock)

    @property
    def environment_seed(self) -> int:
        """env.seed (family-local) wins over seeds.environment."""
        return self.env.seed if self.env.seed is not None else self.seeds.environment

    @property
    def trajectory_seed(self) -> int:
        return self.seeds.trajectory


class RunRequest(StrictModel):
    config: RunConfig
    threads: int = Field(default=1, ge=1, le=256)


class RunResponse(StrictModel):
    command: str
    verdict: str
    summary: dict
    csv: str


class ErrorDetail(StrictModel):
    code: Literal["config_error", "resource_budget", "assumption_violated", "internal"]
    message: str


class HealthResponse(StrictModel):
    status: str
    version: str
