"""Accuracy table shipped with the package."""

from __future__ import annotations

import json
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

from ..errors import StatsError

SUBJECT_ORDER = ("RESNET", "RESNEXT", "FCN", "DUC")
OPERATOR_ORDER = ("IDENTITY", "QUANTIZED", "EARLY_EXIT", "QE")


@dataclass(frozen=True)
class AccuracyFixture:
    tiers: tuple[str, ...]
    metrics: tuple[str, ...]
    subjects: dict          # subject -> operator -> {"size_mb": x, metric: [per tier]}

    @classmethod
    def from_dict(cls, d: dict) -> "AccuracyFixture":
        try:
            return cls(tuple(d["tiers"]), tuple(d["metrics"]), d["subjects"])
        except KeyError as e:
            raise StatsError(f"accuracy fixture lacks {e}") from None

    def to_dict(self) -> dict:
        return {"tiers": list(self.tiers), "metrics": list(self.metrics), "subjects": self.subjects}

    def subject_names(self) -> list[str]:
        known = [s for s in SUBJECT_ORDER if s in self.subjects]
        return known + sorted(set(self.subjects) - set(known))

    def value(self, subject: str, operator: str, tier: str, metric: str) -> float:
        return float(self.subjects[subject][operator][metric][self.tiers.index(tier)])

    def size_mb(self, subject: str, operator: str) -> float:
        return float(self.subjects[subject][operator]["size_mb"])

    def group(self, operator: str) -> list[float]:
        """Every (subject, metric, tier) value of one operator in a fixed order, for pairing."""
        out = []
        for s in self.subject_names():
            row = self.subjects[s][operator]
            for m in self.metrics:
                if m in row:
                    out.extend(float(v) for v in row[m])
        return out


def load_accuracy_fixture(path: str | Path | None = None) -> AccuracyFixture:
    if path is None:
        text = resources.files("edgeops.data").joinpath("accuracy_fixture.json").read_text()
    else:
        text = Path(path).read_text()
    return AccuracyFixture.from_dict(json.loads(text))
