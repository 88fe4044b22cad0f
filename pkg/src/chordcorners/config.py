"""Run configuration: JSON file loading plus command-line overrides."""

from __future__ import annotations

import json
from dataclasses import dataclass, fields, replace
from pathlib import Path

from .detector import DetectorParams, PipelineConfig, SCA_CHORD
from .errors import InputError, ParameterError
from .transforms import FAMILIES

DETECTOR_CHOICES = ("cpda", "sca", "both")
FORMAT_CHOICES = ("csv", "json")


@dataclass(frozen=True)
class RunConfig:
    """Everything a batch run needs; unset detector knobs fall back to presets."""

    detector: str = "both"
    chord: int | None = None  # single-chord detector override
    curvature_threshold: float | None = None
    angle_threshold: float | None = None
    canny_sigma: float = 1.4
    canny_low: float = 0.1
    canny_high: float = 0.2
    curve_sigma: float = 3.0
    dedup_radius: float = 3.0
    angle_refinement: str = "iterative"
    match_radius: float = 3.0
    seed: int = 0
    jobs: int = 1
    smoke: bool = False
    families: tuple[str, ...] | None = None
    out_format: str = "csv"

    def __post_init__(self) -> None:
        if self.detector not in DETECTOR_CHOICES:
            raise ParameterError(f"detector must be one of {DETECTOR_CHOICES}, got {self.detector!r}")
        if self.out_format not in FORMAT_CHOICES:
            raise ParameterError(f"format must be one of {FORMAT_CHOICES}, got {self.out_format!r}")
        if self.jobs < 1:
            raise ParameterError(f"jobs must be at least 1, got {self.jobs}")
        if self.families is not None:
            bad = set(self.families) - set(FAMILIES)
            if bad:
                raise ParameterError(f"unknown transform families: {sorted(bad)}")

    @classmethod
    def from_file(cls, path: str | Path) -> RunConfig:
        p = Path(path)
        if not p.exists():
            raise InputError(f"no such config file: {p}")
        try:
            data = json.loads(p.read_text())
        except json.JSONDecodeError as exc:
            raise InputError(f"config {p} is not valid JSON: {exc}") from exc
        if not isinstance(data, dict):
            raise InputError(f"config {p} must hold a JSON object")
        if "format" in data:
            data["out_format"] = data.pop("format")
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ParameterError(f"unknown config keys: {sorted(unknown)}")
        if "families" in data and data["families"] is not None:
            data["families"] = tuple(data["families"])
        return cls(**data)

    def merged(self, **overrides) -> RunConfig:
        """A copy with the given non-None overrides applied."""
        updates = {k: v for k, v in overrides.items() if v is not None}
        return replace(self, **updates) if updates else self

    def detector_params(self, name: str) -> DetectorParams:
        if name == "cpda":
            base = DetectorParams.cpda()
        elif name == "sca":
            base = DetectorParams.sca(self.chord or SCA_CHORD)
        else:
            raise ParameterError(f"unknown detector {name!r}")
        updates = {}
        if self.curvature_threshold is not None:
            updates["curvature_threshold"] = self.curvature_threshold
        if self.angle_threshold is not None:
            updates["angle_threshold"] = self.angle_threshold
        return replace(base, **updates) if updates else base

    def detectors(self) -> dict[str, DetectorParams]:
        names = ("cpda", "sca") if self.detector == "both" else (self.detector,)
        return {name: self.detector_params(name) for name in names}

    def pipeline(self) -> PipelineConfig:
        return PipelineConfig(
            canny_sigma=self.canny_sigma,
            canny_low=self.canny_low,
            canny_high=self.canny_high,
            curve_sigma=self.curve_sigma,
            dedup_radius=self.dedup_radius,
            angle_refinement=self.angle_refinement,
        )
