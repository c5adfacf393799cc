"""
Pydantic schemas for experiment runs.

Every experiment has a full set of defaults; flags and config-file keys override
them field by field.
"""

from typing import Any, Dict, List, Literal, Optional

from pydantic import BaseModel, Field, ValidationError, field_validator, model_validator

from app.exceptions import ConfigError
from app.models.links import LinkFamily
from app.schemas.grids import GridSpec
from app.schemas.problems import Ar1Model
from app.schemas.training import OptimizerConfig

Experiment = Literal["ce-a", "ce-b", "stopping", "rl", "lr", "oracle-check"]

SCHEDULE_MODES = ("full-batch", "single-sample", "mini-batch")
RATIO_MODES = ("gd", "labeled-sgd", "paired-sgd")

EXPERIMENT_DEFAULTS: Dict[str, Dict[str, Any]] = {
    "ce-a": {
        "samples": 200, "hidden": 50, "iters": 2000, "links": ["A1", "A2", "A3"],
        "creg": 0.001, "grid": GridSpec(lo=-6.0, hi=6.0, n=5001), "eval_grid": GridSpec(lo=-2.0, hi=2.0, n=201),
    },
    "ce-b": {
        "samples": 200, "hidden": 50, "iters": 2000, "links": ["A1", "C1:-0.01:1.01"],
        "creg": 0.001, "grid": GridSpec(lo=-6.25, hi=6.25, n=5000, centered=True),
        "eval_grid": GridSpec(lo=-2.0, hi=2.0, n=201),
    },
    "stopping": {
        "samples": 500, "hidden": 100, "iters": 2000, "links": ["A1", "C1:0.2:1"],
        "creg": 0.001, "grid": GridSpec(lo=-30.0, hi=30.0, n=5001), "alpha": 1.0,
        "ar_r": [0.9], "ar_m": [0.0], "ar_s": [5.0], "eval_grid": GridSpec(lo=-20.0, hi=20.0, n=501),
    },
    "rl": {
        "samples": 1000, "hidden": 100, "iters": 2000, "links": ["A1", "C1:1:5"],
        "creg": 0.1, "grid": GridSpec(lo=-20.0, hi=20.0, n=5001), "gamma": 0.8,
        "ar_r": [0.8, 0.8], "ar_m": [1.0, -1.0], "ar_s": [1.0, 1.0], "eval_grid": GridSpec(lo=-5.0, hi=5.0, n=501),
    },
    "lr": {
        "samples": 5000, "hidden": 50, "iters": 2000, "links": ["B1:0"],
        "creg": 0.001, "grid": GridSpec(lo=-6.0, hi=6.0, n=5001), "mode": "gd",
        "eval_grid": GridSpec(lo=-1.0, hi=2.0, n=301),
    },
    "oracle-check": {
        "samples": 1, "hidden": 1, "iters": 1, "links": ["A1"],
        "creg": 0.001, "grid": GridSpec(lo=-6.0, hi=6.0, n=5001),
        "eval_grid": GridSpec(lo=-2.0, hi=2.0, n=201),
    },
}


class RunConfig(BaseModel):
    """Fully resolved configuration of one experiment run."""

    experiment: Experiment = Field(..., description="Experiment to run")
    seed: int = Field(0, ge=0, description="Run seed")
    samples: int = Field(..., ge=1, description="Number of training samples or transitions")
    hidden: int = Field(..., ge=1, description="Hidden layer size L")
    iters: int = Field(..., ge=1, description="Training iterations")
    links: List[str] = Field(..., min_length=1, description="Link specs ID[:a[:b]]")
    mu: float = Field(0.001, gt=0, description="Step size")
    lam: float = Field(0.99, ge=0, lt=1, description="Forgetting factor")
    creg: float = Field(..., gt=0, description="Denominator regulariser c")
    mode: str = Field("full-batch", description="Batch schedule or likelihood-ratio update mode")
    batch_size: int = Field(1, ge=1, description="Mini-batch size m")
    shuffle: bool = Field(False, description="Reshuffle once per epoch")
    grid: GridSpec = Field(..., description="Quadrature grid")
    numeric_iters: int = Field(1000, ge=1, description="Fixed-point iterations of numeric solvers")
    alpha: float = Field(1.0, ge=0, le=1, description="Stopping discount")
    gamma: float = Field(0.8, ge=0, lt=1, description="RL discount")
    ar_r: Optional[List[float]] = Field(None, description="AR coefficient r per action (stopping: one chain)")
    ar_m: Optional[List[float]] = Field(None, description="AR drift m per action")
    ar_s: Optional[List[float]] = Field(None, description="AR innovation variance s per action")
    q: float = Field(0.1, ge=0, description="Constant sampling cost of the stopping problem")
    noise_var: float = Field(0.1, gt=0, description="Noise variance s of the Example (a)/(b) models")
    lr_shift: float = Field(1.0, description="Mean of the f sample; the g sample is N(0, 1)")
    eval_grid: GridSpec = Field(..., description="Grid of the curve file")
    strict_range: bool = Field(True, description="Reject targets outside the link range")
    strict_tail: bool = Field(False, description="Turn tail-mass warnings into errors")
    out: Optional[str] = Field(None, description="Artifact directory")

    model_config = {"frozen": True}

    @field_validator("links")
    @classmethod
    def _links_parse(cls, value: List[str]) -> List[str]:
        return [LinkFamily.from_string(text).spec() for text in value]

    @model_validator(mode="after")
    def _consistent(self):
        allowed = RATIO_MODES if self.experiment == "lr" else SCHEDULE_MODES
        if self.mode not in allowed:
            raise ValueError(f"mode '{self.mode}' not valid for {self.experiment}, expected one of {allowed}")
        if self.mode == "single-sample" and self.batch_size != 1:
            raise ValueError("single-sample mode requires batch_size = 1")
        if self.experiment in ("stopping", "rl"):
            self._check_dynamics()
        return self

    def _check_dynamics(self) -> None:
        lists = {"ar_r": self.ar_r, "ar_m": self.ar_m, "ar_s": self.ar_s}
        missing = [name for name, value in lists.items() if not value]
        if missing:
            raise ValueError(f"{self.experiment} needs {', '.join(missing)}")
        sizes = {len(value) for value in lists.values()}
        if len(sizes) != 1:
            lengths = [len(value) for value in lists.values()]
            raise ValueError(f"ar_r, ar_m and ar_s must have one entry per action, got lengths {lengths}")
        if self.experiment == "stopping" and sizes != {1}:
            raise ValueError("stopping takes a single AR(1) chain")
        if min(self.ar_s) <= 0:
            raise ValueError(f"ar_s must be positive, got {self.ar_s}")

    @classmethod
    def build(cls, experiment: str, **overrides: Any) -> "RunConfig":
        """
        Resolve defaults for ``experiment`` and apply overrides.

        Raises:
            ConfigError: If the experiment is unknown or a value fails validation
        """
        if experiment not in EXPERIMENT_DEFAULTS:
            raise ConfigError(f"unknown experiment '{experiment}'")
        values = dict(EXPERIMENT_DEFAULTS[experiment])
        values.update({k: v for k, v in overrides.items() if v is not None})
        try:
            return cls(experiment=experiment, **values)
        except ValidationError as e:
            details = "; ".join(f"{'.'.join(str(p) for p in err['loc'])}: {err['msg']}" for err in e.errors())
            raise ConfigError(details)

    def link_families(self) -> List[LinkFamily]:
        return [LinkFamily.from_string(text) for text in self.links]

    def ar_models(self) -> List[Ar1Model]:
        """One AR(1) model per action, in action order."""
        return [Ar1Model(r=r, m=m, s=s) for r, m, s in zip(self.ar_r or [], self.ar_m or [], self.ar_s or [])]

    def optimizer(self) -> OptimizerConfig:
        mode = "full-batch" if self.mode in RATIO_MODES else self.mode
        return OptimizerConfig(
            mu=self.mu, lam=self.lam, c=self.creg, iters=self.iters,
            mode=mode, batch_size=self.batch_size, shuffle=self.shuffle,
        )

    def resolved(self) -> Dict[str, Any]:
        """JSON-friendly snapshot for the run manifest."""
        data = self.model_dump()
        data["grid"] = str(self.grid) + (" centered" if self.grid.centered else "")
        data["eval_grid"] = str(self.eval_grid)
        return data
