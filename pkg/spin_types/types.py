from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator
from typing import Literal

import numpy as np

# Frozen, typo-safe, no NaN/inf anywhere in a config
_CONFIG = ConfigDict(frozen=True, extra="forbid", allow_inf_nan=False)


class ModelParams(BaseModel):
    """Physical constants of the multi-body spin and the lattice shape"""
    model_config = _CONFIG

    mu: float = Field(default=1.0, gt=0, description="Magnetic-moment magnitude |mu|")
    field_b: float = Field(default=1.0, ge=0, description="Field magnitude B along +z")
    spring_k: float = Field(default=10.0, ge=0, description="Nearest-neighbor spring constant k")
    spring_a: float = Field(default=2.0, description="Spring equilibrium length a on the unit-chord scale")
    dissipation_b: float = Field(default=1.0, ge=0, description="Damping coefficient b")
    inertia: float = Field(default=1.0, gt=0, description="Moment of inertia I")
    rows: int = Field(default=3, ge=1, description="Lattice rows")
    cols: int = Field(default=3, ge=1, description="Lattice columns")

    @field_validator('spring_a')
    def validate_spring_a(cls, v):
        # a=0 ferromagnetic, a=2 (anti-parallel chord) anti-ferromagnetic
        if not 0.0 <= v <= 2.0:
            raise ValueError("spring_a must lie in [0, 2]")
        return v

    @property
    def n_sites(self) -> int:
        return self.rows * self.cols

    @property
    def ordering(self) -> Literal["ferromagnetic", "anti-ferromagnetic", "intermediate"]:
        if self.spring_a == 0.0:
            return "ferromagnetic"
        if self.spring_a == 2.0:
            return "anti-ferromagnetic"
        return "intermediate"


class RunConfig(BaseModel):
    """Dissipation schedule, settling tolerances and initial noise of one collapse run"""
    model_config = _CONFIG

    t_diss: float = Field(default=20.0, ge=0, description="Time at which dissipation switches on")
    t_end: float = Field(default=200.0, gt=0, description="Maximum simulation time")
    omega_tol: float = Field(default=1e-4, gt=0, description="Settled when every |omega| is below this")
    theta_tol: float = Field(default=0.1, gt=0, description="Settled when every theta is this close to 0 or pi")
    sample_dt: float = Field(default=0.1, gt=0, description="Sampling and settle-check interval")
    noise_amp: float = Field(default=1.2, ge=0, description="Half-width of the uniform initial angle noise")

    @model_validator(mode='after')
    def validate_schedule(self):
        if self.t_end <= self.t_diss:
            raise ValueError(f"t_end ({self.t_end}) must be greater than t_diss ({self.t_diss})")
        return self


class IntegratorConfig(BaseModel):
    """Tolerances and step bounds of the adaptive Dormand-Prince integrator"""
    model_config = _CONFIG

    abs_tol: float = Field(default=1e-9, gt=0)
    rel_tol: float = Field(default=1e-9, gt=0)
    h_init: float = Field(default=1e-2, gt=0)
    h_min: float = Field(default=1e-12, gt=0)
    h_max: float = Field(default=1.0, gt=0)
    safety: float = Field(default=0.9, gt=0, lt=1)

    @model_validator(mode='after')
    def validate_steps(self):
        if not self.h_min <= self.h_init <= self.h_max:
            raise ValueError(
                f"step bounds must satisfy h_min <= h_init <= h_max, "
                f"got {self.h_min} / {self.h_init} / {self.h_max}"
            )
        return self


class SweepConfig(BaseModel):
    """Monte Carlo grid: mean angles spanning [0, pi] and trials per angle"""
    model_config = _CONFIG

    n_angles: int = Field(default=21, ge=2, description="Mean angles on [0, pi], both ends included")
    trials_per_angle: int = Field(default=200, ge=1)
    base_seed: int = Field(default=1729, ge=0, le=2**64 - 1, description="Master seed of the sweep")
    parallelism: int = Field(default=1, ge=1, description="Worker count")

    def angle_grid(self) -> np.ndarray:
        # linspace pins the last point to pi exactly
        return np.linspace(0.0, np.pi, self.n_angles)


class DivergenceConfig(BaseModel):
    """Two-trajectory divergence measurement and its exponential fit"""
    model_config = _CONFIG

    delta0: float = Field(default=1e-8, gt=0, description="Initial phase-space separation")
    t_max: float = Field(default=20.0, gt=0)
    sample_dt: float = Field(default=0.1, gt=0)
    fit_t_start: float = Field(default=1.0, ge=0)
    fit_t_end: float = Field(default=20.0, gt=0)
    renormalize: bool = Field(default=False, description="Rescale the companion back to delta0 after each sample")
    dissipative: bool = Field(default=False, description="Keep damping on from t=0")
    saturation_cap: float = Field(default=0.06, gt=0, description="Separation at which the exponential law stops")

    @model_validator(mode='after')
    def validate_window(self):
        if not self.fit_t_start < self.fit_t_end <= self.t_max:
            raise ValueError(
                f"fit window must satisfy fit_t_start < fit_t_end <= t_max, "
                f"got {self.fit_t_start} / {self.fit_t_end} / {self.t_max}"
            )
        if self.sample_dt > self.t_max:
            raise ValueError("sample_dt must not exceed t_max")
        if self.delta0 >= self.saturation_cap:
            raise ValueError("delta0 must be well below saturation_cap")
        return self


class RootConfig(BaseModel):
    """Everything a CLI command needs; every block and field is optional"""
    model_config = _CONFIG

    model: ModelParams = Field(default_factory=ModelParams)
    run: RunConfig = Field(default_factory=RunConfig)
    sweep: SweepConfig = Field(default_factory=SweepConfig)
    chaos: DivergenceConfig = Field(default_factory=DivergenceConfig)
    integrator: IntegratorConfig = Field(default_factory=IntegratorConfig)
