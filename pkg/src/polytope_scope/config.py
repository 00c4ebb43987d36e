"""Validated run configuration with per-task defaults.

Unset task-dependent fields (architecture, epochs, checkpoint cadence, box
inflation) are filled from ``TASK_DEFAULTS`` so the echoed config written to a
run directory is always complete.
"""

from __future__ import annotations

import json
import os
from enum import Enum
from pathlib import Path
from typing import Optional

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from .network import INIT_SCHEMES


class Task(str, Enum):
    CIRCLES = "circles"
    MOONS = "moons"
    PINN = "pinn-duffing"

    @property
    def is_classification(self) -> bool:
        return self is not Task.PINN


TASK_DEFAULTS = {
    Task.CIRCLES: dict(widths=[2, 6, 6, 2], epochs=4000, checkpoint_every=500, inflate=0.2),
    Task.MOONS: dict(widths=[2, 5, 5, 5, 2], epochs=2000, checkpoint_every=500, inflate=0.2),
    Task.PINN: dict(widths=[2, 50, 50, 50, 50, 1], epochs=10000, checkpoint_every=250, inflate=0.1),
}

PINN_REDUCED_WIDTHS = [2, 16, 16, 16, 16, 1]


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid")


class DataSettings(_Strict):
    n_points: int = Field(200, ge=2)
    noise_sd: float = Field(0.05, ge=0)
    r_inner: float = Field(0.5, gt=0)
    r_outer: float = Field(1.0, gt=0)
    n_steps: int = Field(200, ge=2)
    dt: float = Field(0.1, gt=0)
    delta: float = 0.0
    alpha: float = -1.0
    beta: float = 1.0
    gamma: float = 0.0
    omega: float = 1.2

    @model_validator(mode="after")
    def _radii(self):
        if self.r_inner >= self.r_outer:
            raise ValueError("r_inner must be smaller than r_outer")
        if self.n_points % 2:
            raise ValueError("n_points must be even")
        return self


class TrainerSettings(_Strict):
    epochs: Optional[int] = Field(None, gt=0)
    learning_rate: float = Field(0.01, ge=0)
    checkpoint_every: Optional[int] = Field(None, gt=0)
    init: str = "kaiming"
    adam: tuple[float, float, float] = (0.9, 0.999, 1e-8)

    @field_validator("init")
    @classmethod
    def _init(cls, v):
        if v not in INIT_SCHEMES:
            raise ValueError(f"init must be one of {INIT_SCHEMES}")
        return v


class BoxSettings(_Strict):
    inflate: Optional[float] = Field(None, ge=0)
    zoom: Optional[tuple[float, float, float, float]] = None
    tol: float = Field(1e-9, gt=0)
    retries: int = Field(3, ge=0)

    @field_validator("zoom")
    @classmethod
    def _zoom(cls, v):
        if v is not None and not (v[0] < v[1] and v[2] < v[3]):
            raise ValueError("zoom must be (x_min, x_max, y_min, y_max) with min < max")
        return v


class HomologySettings(_Strict):
    n_trials: int = Field(10, ge=1)
    bins: int = Field(200, ge=2)
    base_seed: int = 0


class RunConfig(_Strict):
    task: Task
    seed: int = 0
    architecture: Optional[list[int]] = None
    data: DataSettings = DataSettings()
    trainer: TrainerSettings = TrainerSettings()
    box: BoxSettings = BoxSettings()
    homology: HomologySettings = HomologySettings()
    out_dir: Optional[str] = None
    workers: Optional[int] = Field(None, ge=1)

    @model_validator(mode="after")
    def _fill_defaults(self):
        d = TASK_DEFAULTS[self.task]
        if self.architecture is None:
            self.architecture = list(d["widths"])
        if len(self.architecture) < 3 or any(w < 1 for w in self.architecture):
            raise ValueError("architecture needs >= 3 positive widths")
        if self.architecture[0] != 2:
            raise ValueError("input width must be 2")
        out = 1 if self.task is Task.PINN else 2
        if self.architecture[-1] != out:
            raise ValueError(f"output width must be {out} for task {self.task.value}")
        if self.trainer.epochs is None:
            self.trainer.epochs = d["epochs"]
        if self.trainer.checkpoint_every is None:
            self.trainer.checkpoint_every = min(d["checkpoint_every"], self.trainer.epochs)
        if self.trainer.checkpoint_every > self.trainer.epochs:
            raise ValueError("checkpoint_every must not exceed epochs")
        if self.box.inflate is None:
            self.box.inflate = d["inflate"]
        if self.out_dir is None:
            self.out_dir = f"runs/{self.task.value}-seed{self.seed}"
        if self.workers is None:
            self.workers = os.cpu_count() or 1
        return self

    def echo(self) -> dict:
        return self.model_dump(mode="json")


def load_config(path, out_dir=None, seed=None) -> RunConfig:
    raw = json.loads(Path(path).read_text())
    if seed is not None:
        raw["seed"] = int(seed)
    if out_dir is not None:
        raw["out_dir"] = str(out_dir)
    return RunConfig.model_validate(raw)
