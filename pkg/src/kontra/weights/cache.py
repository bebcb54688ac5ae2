"""Persistent weight tables (JSON)."""
from __future__ import annotations

import json
import os
from pathlib import Path

from ..errors import CacheError
from ..graphs import enumerate_graphs, graph_key
from .engine import MAX_WEIGHT_ORDER, WeightEstimate, derive_seed, weight_estimate

FORMAT_VERSION = 1


class WeightCache:
    """Mapping GraphKey -> :class:`WeightEstimate` with file round-tripping."""

    def __init__(self, entries=None, created: str | None = None, version: int = FORMAT_VERSION):
        if version != FORMAT_VERSION:
            raise CacheError(f"cache format version {version} is not supported (want {FORMAT_VERSION})")
        self.version = version
        self.created = created
        self.entries: dict = dict(entries or {})

    def __contains__(self, key):
        return key in self.entries

    def __getitem__(self, key) -> WeightEstimate:
        return self.entries[key]

    def __len__(self):
        return len(self.entries)

    def get(self, key, default=None):
        return self.entries.get(key, default)

    def put(self, est: WeightEstimate) -> None:
        """Insert, keeping whichever entry has more samples (ties go to the newcomer)."""
        old = self.entries.get(est.graph)
        if old is None or est.samples >= old.samples:
            self.entries[est.graph] = est

    def merge(self, other: "WeightCache") -> "WeightCache":
        out = WeightCache(self.entries, self.created)
        for est in other.entries.values():
            out.put(est)
        return out

    def to_json(self) -> dict:
        obj = {"version": self.version}
        if self.created is not None:
            obj["created"] = self.created
        obj["entries"] = {k: self.entries[k].to_json() for k in sorted(self.entries)}
        return obj

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=1, sort_keys=False) + "\n"

    @classmethod
    def from_json(cls, obj) -> "WeightCache":
        if not isinstance(obj, dict) or "entries" not in obj:
            raise CacheError("not a weight cache object")
        version = obj.get("version")
        if version != FORMAT_VERSION:
            raise CacheError(f"cache format version {version!r} is not supported (want {FORMAT_VERSION})")
        entries = {k: WeightEstimate.from_json(k, v) for k, v in obj["entries"].items()}
        return cls(entries, obj.get("created"), version)

    @classmethod
    def load(cls, path) -> "WeightCache":
        path = Path(path)
        if not path.exists():
            return cls()
        try:
            obj = json.loads(path.read_text())
        except json.JSONDecodeError as exc:
            raise CacheError(f"{path}: {exc}") from None
        return cls.from_json(obj)

    def save(self, path) -> None:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        tmp = path.with_suffix(path.suffix + ".tmp")
        tmp.write_text(self.dumps())
        os.replace(tmp, path)

    def values(self) -> dict:
        """GraphKey -> (estimate, stderr)."""
        return {k: (e.estimate, e.stderr) for k, e in self.entries.items()}


def default_cache_path() -> Path:
    root = os.environ.get("KONTRA_CACHE_DIR")
    base = Path(root) if root else Path.home() / ".cache" / "kontra"
    return base / "weights.json"


def compute_weight_table(n: int, samples: int, seed: int, cache: WeightCache | None = None, *,
                         backend: str | None = None, jobs: int = 1,
                         max_order: int = MAX_WEIGHT_ORDER) -> WeightCache:
    """Extend ``cache`` with estimates for every graph of ``G_n`` lacking ``samples`` samples.

    Each graph gets its own seed, derived from ``seed`` and its key.
    """
    if not 1 <= n <= max_order:
        from ..errors import LimitExceeded

        raise LimitExceeded(f"weights are supported for 1 <= n <= {max_order}, got n={n}")
    out = WeightCache() if cache is None else WeightCache(cache.entries, cache.created, cache.version)
    for g in enumerate_graphs(n):
        key = graph_key(g)
        old = out.get(key)
        if old is not None and old.samples >= samples:
            continue
        out.put(weight_estimate(g, samples, derive_seed(seed, key), backend=backend, jobs=jobs,
                                max_order=max_order))
    return out
