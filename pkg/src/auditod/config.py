"""Run configuration: JSON on disk, :class:`RunConfig` in memory."""
from __future__ import annotations

import json
from dataclasses import dataclass, field, replace

from .data import ALL_LETTERS, ColumnMapping
from .detectors import KINDS, REFERENCE_GRIDS, DetectorConfig, resolve_params
from .errors import AuditODError, ConfigError


def default_detectors(seed=0):
    return tuple(DetectorConfig(kind, {}, seed) for kind in KINDS)


@dataclass(frozen=True)
class RunConfig:
    input: str | None = None
    column_mapping: ColumnMapping = field(default_factory=ColumnMapping)
    features: tuple = ALL_LETTERS
    detectors: tuple = field(default_factory=default_detectors)
    grids: dict = field(default_factory=dict)
    seed: int = 0
    top_k: int = 5
    out_dir: str = "out"
    jobs: int = 1

    def __post_init__(self):
        if not self.detectors:
            raise ConfigError("at least one detector must be enabled")
        if isinstance(self.top_k, bool) or not isinstance(self.top_k, int) or self.top_k < 1:
            raise ConfigError(f"top_k must be a positive integer, got {self.top_k!r}")
        if isinstance(self.seed, bool) or not isinstance(self.seed, int) or not 0 <= self.seed < 2**64:
            raise ConfigError(f"seed must be an unsigned 64-bit integer, got {self.seed!r}")
        if isinstance(self.jobs, bool) or not isinstance(self.jobs, int) or self.jobs < 1:
            raise ConfigError(f"jobs must be a positive integer, got {self.jobs!r}")
        feats = tuple(str(f).upper() for f in self.features)
        bad = [f for f in feats if f not in ALL_LETTERS]
        if not feats or bad or len(set(feats)) != len(feats):
            raise ConfigError(f"features must be distinct letters from A-J, got {list(self.features)}")
        derived = set(ALL_LETTERS[7:])
        if any(f in derived and f not in self.column_mapping.derived_formulas for f in feats):
            raise ConfigError("a derived feature was requested without a formula in column_mapping")
        object.__setattr__(self, "features", feats)
        # every detector follows the master seed
        dets = tuple(replace(d, seed=self.seed) for d in self.detectors)
        names = [d.name for d in dets]
        if len(set(names)) != len(names):
            raise ConfigError(f"detector names must be unique, got {names}; set 'name' for repeated kinds")
        for d in dets:
            resolve_params(d.kind, d.params)
        object.__setattr__(self, "detectors", dets)
        unknown = set(self.grids) - set(names)
        if unknown:
            raise ConfigError(f"grids given for unknown detectors {sorted(unknown)}")

    def grid_for(self, det: DetectorConfig):
        return list(self.grids.get(det.name, REFERENCE_GRIDS[det.kind]))

    def with_overrides(self, **kw):
        kw = {k: v for k, v in kw.items() if v is not None}
        if "detectors" in kw and isinstance(kw["detectors"], str):
            kw["detectors"] = self.select_detectors(kw["detectors"])
        return replace(self, **kw)

    def select_detectors(self, spec: str):
        """Keep detectors whose name or kind appears in a comma list."""
        wanted = [s.strip() for s in spec.split(",") if s.strip()]
        if not wanted:
            raise ConfigError("--detectors needs at least one detector")
        pool = {d.name.upper(): d for d in self.detectors}
        chosen = []
        for w in wanted:
            key = w.upper()
            if key in pool:
                chosen.append(pool[key])
            elif key in KINDS:
                matches = [d for d in self.detectors if d.kind == key]
                chosen.extend(matches or [DetectorConfig(key, {}, self.seed)])
            else:
                raise ConfigError(f"unknown detector {w!r}")
        seen, out = set(), []
        for d in chosen:
            if d.name not in seen:
                seen.add(d.name)
                out.append(d)
        return tuple(out)

    def to_dict(self, resolved=True):
        dets = []
        for d in self.detectors:
            entry = {
                "name": d.name,
                "kind": d.kind,
                "params": resolve_params(d.kind, d.params) if resolved else dict(d.params),
            }
            if d.name in self.grids:
                entry["grid"] = list(self.grids[d.name])
            dets.append(entry)
        return {
            "input": self.input,
            "column_mapping": self.column_mapping.to_dict(),
            "features": list(self.features),
            "detectors": dets,
            "seed": self.seed,
            "top_k": self.top_k,
            "out_dir": self.out_dir,
            "jobs": self.jobs,
        }

    @classmethod
    def from_dict(cls, d):
        if "config" in d and "provenance" in d:
            # a report.json: rerun its config echo
            d = d["config"]
        allowed = {"input", "column_mapping", "features", "detectors", "seed", "top_k", "out_dir", "jobs"}
        unknown = set(d) - allowed
        if unknown:
            raise ConfigError(f"unknown config keys {sorted(unknown)}")
        kw = {}
        try:
            for key in ("input", "seed", "top_k", "out_dir", "jobs"):
                if key in d:
                    kw[key] = d[key]
            if "column_mapping" in d:
                kw["column_mapping"] = ColumnMapping.from_dict(d["column_mapping"])
            if "features" in d:
                kw["features"] = tuple(d["features"])
            if "detectors" in d:
                seed = d.get("seed", 0)
                dets, grids = [], {}
                for entry in d["detectors"]:
                    if isinstance(entry, str):
                        entry = {"kind": entry}
                    extra = set(entry) - {"kind", "name", "params", "grid"}
                    if extra:
                        raise ConfigError(f"unknown detector keys {sorted(extra)}")
                    det = DetectorConfig(entry["kind"], entry.get("params", {}), seed, entry.get("name"))
                    dets.append(det)
                    if "grid" in entry:
                        grids[det.name] = list(entry["grid"])
                kw["detectors"] = tuple(dets)
                kw["grids"] = grids
        except AuditODError:
            raise
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"malformed config: {exc}") from exc
        return cls(**kw)


def load_config(path) -> RunConfig:
    try:
        with open(path, encoding="utf-8") as fh:
            raw = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON: {exc}") from exc
    except FileNotFoundError as exc:
        raise ConfigError(f"config file not found: {path}") from exc
    if not isinstance(raw, dict):
        raise ConfigError(f"{path}: top level must be a JSON object")
    return RunConfig.from_dict(raw)
