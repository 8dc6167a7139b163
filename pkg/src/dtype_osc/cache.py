"""Append-only JSON-lines cache of OscSample values."""
from __future__ import annotations

import json
import os
from pathlib import Path
from typing import Dict, Optional, Tuple

from filelock import FileLock

from .oscint import Engine, OscSample


def fmt(x: float) -> str:
    """17 significant digits: round-trip safe for binary64."""
    return format(float(x), ".17g")


Key = Tuple[str, str, str, str, str, str]


def sample_key(phase_hash: str, cfg_hash: str, lam: float, s, engine) -> Key:
    return (phase_hash, cfg_hash, fmt(lam), fmt(s[0]), fmt(s[1]), Engine(engine).value)


def default_cache_path() -> Path:
    base = os.environ.get("OSC_CACHE_DIR")
    root = Path(base) if base else Path.home() / ".cache" / "dtype_osc"
    return root / "samples.jsonl"


class SampleCache:
    """In-memory index over an append-only file; one writer at a time via an advisory lock.

    ``path=None`` keeps everything in memory.
    """

    def __init__(self, path: Optional[os.PathLike] = None, readonly: bool = False):
        self.path = Path(path) if path is not None else None
        self.readonly = readonly
        self._data: Dict[Key, OscSample] = {}
        self.hits = 0
        self.misses = 0
        if self.path is not None and self.path.exists():
            self._load()

    def _load(self):
        with open(self.path) as fh:
            for line in fh:
                line = line.strip()
                if not line:
                    continue
                rec = json.loads(line)
                key = (rec["phase_hash"], rec["cfg_hash"], rec["lambda"], rec["s1"], rec["s2"], rec["engine"])
                self._data[key] = OscSample(
                    float(rec["lambda"]), (float(rec["s1"]), float(rec["s2"])),
                    complex(float(rec["re"]), float(rec["im"])), float(rec["err_est"]),
                    Engine(rec["engine"]), rec["cfg_hash"], int(rec.get("nevals", 0)))

    def __len__(self):
        return len(self._data)

    def get(self, phase_hash: str, cfg_hash: str, lam: float, s, engine=Engine.DIRECT2D) -> Optional[OscSample]:
        v = self._data.get(sample_key(phase_hash, cfg_hash, lam, s, engine))
        if v is None:
            self.misses += 1
        else:
            self.hits += 1
        return v

    def put(self, phase_hash: str, sample: OscSample) -> None:
        key = sample_key(phase_hash, sample.cfg_hash, sample.lam, sample.s, sample.engine)
        if key in self._data:
            return
        self._data[key] = sample
        if self.path is None or self.readonly:
            return
        rec = {
            "phase_hash": key[0], "cfg_hash": key[1], "lambda": key[2], "s1": key[3], "s2": key[4],
            "re": fmt(sample.value.real), "im": fmt(sample.value.imag), "err_est": fmt(sample.err_est),
            "engine": key[5], "nevals": sample.nevals,
        }
        self.path.parent.mkdir(parents=True, exist_ok=True)
        with FileLock(str(self.path) + ".lock"):
            with open(self.path, "a") as fh:
                fh.write(json.dumps(rec, sort_keys=True) + "\n")
