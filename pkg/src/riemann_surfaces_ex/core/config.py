"""Runtime settings shared by the numerical services."""
from __future__ import annotations

import logging
import os

from dotenv import load_dotenv
from pydantic import BaseModel, ConfigDict, Field

logger = logging.getLogger(__name__)


class Settings(BaseModel):
    """Tolerances and knobs for root finding, tracking, quadrature and Newton.

    Instances are frozen so one object can be shared by worker threads.
    """

    model_config = ConfigDict(frozen=True)

    # polycore
    root_tol: float = Field(default=1e-10, gt=0)
    resultant_zero_tol: float = Field(default=1e-8, gt=0)
    cluster_tol: float = Field(default=1e-6, gt=0)
    max_root_iterations: int = Field(default=500, ge=10)

    # curve / tracker
    margin_factor: float = Field(default=0.05, gt=0)
    margin_floor: float = Field(default=1e-6, gt=0)
    track_tol: float = Field(default=1e-10, gt=0)
    collision_factor: float = Field(default=1e-3, gt=0)
    initial_step_divisor: int = Field(default=64, ge=1)
    step_underflow_ratio: float = Field(default=1e-12, gt=0)
    loop_points: int = Field(default=32, ge=8)

    # periods / divisor
    quad_order: int = Field(default=64, ge=4)
    quad_max_order: int = Field(default=4096, ge=8)
    quad_tol: float = Field(default=1e-12, gt=0)
    rank_threshold: float = Field(default=1e-8, gt=0)
    cauchy_points: int = Field(default=64, ge=8)

    # jacobian
    newton_steps: int = Field(default=16, ge=1)
    newton_max_iterations: int = Field(default=30, ge=1)
    jacobian_tol: float = Field(default=1e-6, gt=0)

    workers: int = Field(default=1, ge=1)
    seed: int | None = None
    log_level: str = "INFO"

    @classmethod
    def from_env(cls) -> Settings:
        """Build settings from ``RS_*`` environment variables (and a ``.env`` file).

        Returns:
            Settings with environment overrides applied.
        """
        load_dotenv()

        overrides: dict[str, object] = {}
        for name, field in cls.model_fields.items():
            raw = os.getenv(f"RS_{name.upper()}")
            if raw is None:
                continue
            overrides[name] = raw
            logger.debug(f"Setting {name} from environment: {raw}")

        return cls.model_validate(overrides)

    def with_overrides(self, **updates: object) -> Settings:
        """Return a copy with the non-None ``updates`` applied and re-validated."""
        changes = {key: value for key, value in updates.items() if value is not None}
        if not changes:
            return self
        return type(self).model_validate({**self.model_dump(), **changes})


DEFAULT_SETTINGS = Settings()
