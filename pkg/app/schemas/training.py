"""
Pydantic schemas for optimizer and training settings.
"""

from typing import Literal

from pydantic import BaseModel, Field, model_validator

ScheduleMode = Literal["full-batch", "single-sample", "mini-batch"]
RatioMode = Literal["gd", "labeled-sgd", "paired-sgd"]


class OptimizerConfig(BaseModel):
    """Power-normalised step and batch schedule settings."""

    mu: float = Field(0.001, gt=0, description="Step size")
    lam: float = Field(0.99, ge=0, lt=1, description="Forgetting factor of the running power estimate")
    c: float = Field(0.001, gt=0, description="Denominator regulariser")
    iters: int = Field(2000, ge=1, description="Number of update iterations")
    mode: ScheduleMode = Field("full-batch", description="Batch schedule")
    batch_size: int = Field(1, ge=1, description="Block size m for mini-batch mode")
    shuffle: bool = Field(False, description="Reshuffle sample order once per epoch")

    model_config = {"frozen": True}

    @model_validator(mode="after")
    def _single_sample_has_unit_batch(self):
        if self.mode == "single-sample" and self.batch_size != 1:
            raise ValueError("single-sample mode requires batch_size = 1")
        return self
