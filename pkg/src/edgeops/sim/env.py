"""Tier and link resource model."""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from importlib import resources
from pathlib import Path

from ..errors import SimError

TIER_CODES = {"M": "MOBILE", "E": "EDGE", "C": "CLOUD"}
TIER_NAMES = {v: k for k, v in TIER_CODES.items()}


@dataclass(frozen=True)
class TierSpec:
    name: str
    cpu_cores: int
    ram_mb: int
    cpu_rate: float
    gpu_rate: float | None = None

    def __post_init__(self):
        if self.cpu_rate <= 0 or (self.gpu_rate is not None and self.gpu_rate <= 0):
            raise SimError(f"tier {self.name}: rates must be positive")


@dataclass(frozen=True)
class LinkSpec:
    endpoints: tuple[str, str]
    bandwidth_mbps: float
    per_message_overhead_s: float = 0.005

    def __post_init__(self):
        if self.bandwidth_mbps <= 0:
            raise SimError(f"link {self.endpoints}: bandwidth must be positive")
        if self.per_message_overhead_s < 0:
            raise SimError(f"link {self.endpoints}: overhead must be nonnegative")


@dataclass(frozen=True)
class EnvironmentSpec:
    tiers: dict                     # code -> TierSpec
    links: dict                     # frozenset({a, b}) -> LinkSpec
    base64_factor: float = 4.0 / 3.0
    jitter_cv: float = 0.0
    cloud_cpu_ratio: float = 2.0
    extra: dict = field(default_factory=dict)

    def tier(self, code: str) -> TierSpec:
        return self.tiers[code]

    def link(self, a: str, b: str) -> LinkSpec:
        try:
            return self.links[frozenset((a, b))]
        except KeyError:
            raise SimError(f"no link between {a} and {b}") from None

    def with_rates(self, **rates) -> "EnvironmentSpec":
        """Copy with updated rates, e.g. ``with_rates(M=(cpu,), C=(cpu, gpu))``."""
        tiers = dict(self.tiers)
        for code, vals in rates.items():
            t = tiers[code]
            tiers[code] = replace(t, cpu_rate=vals[0], gpu_rate=vals[1] if len(vals) > 1 else t.gpu_rate)
        return replace(self, tiers=tiers)

    def with_bandwidth(self, a: str, b: str, mbps: float) -> "EnvironmentSpec":
        links = dict(self.links)
        key = frozenset((a, b))
        links[key] = replace(links[key], bandwidth_mbps=mbps)
        return replace(self, links=links)

    def to_dict(self) -> dict:
        tiers = {}
        for code in ("M", "E", "C"):
            t = self.tiers[code]
            d = {"cpu_cores": t.cpu_cores, "ram_mb": t.ram_mb, "cpu_rate": t.cpu_rate}
            if t.gpu_rate is not None:
                d["gpu_rate"] = t.gpu_rate
            tiers[t.name] = d
        links = []
        for lk in sorted(self.links.values(), key=lambda x: x.endpoints):
            links.append({"endpoints": [TIER_CODES[e] for e in lk.endpoints], "bandwidth_mbps": lk.bandwidth_mbps,
                          "per_message_overhead_s": lk.per_message_overhead_s})
        return {"tiers": tiers, "links": links,
                "constants": {"base64_factor": self.base64_factor, "jitter_cv": self.jitter_cv,
                              "cloud_cpu_ratio": self.cloud_cpu_ratio, **self.extra}}

    @classmethod
    def from_dict(cls, d: dict) -> "EnvironmentSpec":
        try:
            tiers = {}
            for name, t in d["tiers"].items():
                code = TIER_NAMES.get(name.upper(), name.upper())
                if code not in TIER_CODES:
                    raise SimError(f"unknown tier {name!r}")
                tiers[code] = TierSpec(TIER_CODES[code], int(t["cpu_cores"]), int(t["ram_mb"]),
                                       float(t["cpu_rate"]),
                                       float(t["gpu_rate"]) if t.get("gpu_rate") is not None else None)
            if set(tiers) != set(TIER_CODES):
                raise SimError("environment must define MOBILE, EDGE and CLOUD tiers")
            links = {}
            for lk in d["links"]:
                a, b = (TIER_NAMES.get(x.upper(), x.upper()) for x in lk["endpoints"])
                links[frozenset((a, b))] = LinkSpec((a, b), float(lk["bandwidth_mbps"]),
                                                    float(lk.get("per_message_overhead_s", 0.005)))
            c = dict(d.get("constants", {}))
            known = {"base64_factor", "jitter_cv", "cloud_cpu_ratio"}
            return cls(tiers, links,
                       base64_factor=float(c.get("base64_factor", 4.0 / 3.0)),
                       jitter_cv=float(c.get("jitter_cv", 0.0)),
                       cloud_cpu_ratio=float(c.get("cloud_cpu_ratio", 2.0)),
                       extra={k: v for k, v in c.items() if k not in known})
        except (KeyError, TypeError, ValueError) as e:
            raise SimError(f"malformed environment document: {e!r}") from None


def load_env(path: str | Path | None = None) -> EnvironmentSpec:
    if path is None:
        text = resources.files("edgeops.data").joinpath("env.default.json").read_text()
    else:
        text = Path(path).read_text()
    return EnvironmentSpec.from_dict(json.loads(text))


def dumps_env(env: EnvironmentSpec) -> str:
    return json.dumps(env.to_dict(), indent=1, sort_keys=True) + "\n"
