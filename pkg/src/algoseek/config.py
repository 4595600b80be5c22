"""Key = value configuration with a content hash embedded in artifacts."""

from __future__ import annotations

import hashlib
import os

from .errors import UsageError

DEFAULTS = {
    "encoder.kind": "builtin-hash",
    "encoder.dim": "128",
    "encoder.seed": "42",
    "encoder.sidecar_path": "",
    "gae.h": "512",
    "gae.lr": "0.01",
    "gae.batch": "2048",
    "gae.patience": "10",
    "gae.max_epochs": "200",
    "gae.seed": "0",
    "search.k": "100",
    "search.gap_lines": "2",
    "paths.corpus": "",
    "paths.index": "",
    "paths.model": "",
    "languages": "c,java",
    "seed.comments": "",
    "seed.code": "",
}

ENV_VAR = "ALGOSEEK_CONFIG"


class Config:
    def __init__(self, values: dict = None):
        self.values = dict(DEFAULTS)
        for key, val in (values or {}).items():
            if key not in DEFAULTS:
                raise UsageError(f"unknown config key {key!r}")
            self.values[key] = val
        langs = set(self.get("languages").split(","))
        if not langs <= {"c", "java"}:
            raise UsageError(f"languages must be a subset of c,java, got {langs}")

    def get(self, key: str) -> str:
        if key not in DEFAULTS:
            raise UsageError(f"unknown config key {key!r}")
        return self.values[key]

    def get_int(self, key: str) -> int:
        try:
            return int(self.get(key))
        except ValueError:
            raise UsageError(f"config key {key!r} must be an integer") from None

    def get_float(self, key: str) -> float:
        try:
            return float(self.get(key))
        except ValueError:
            raise UsageError(f"config key {key!r} must be a number") from None

    def content_hash(self) -> str:
        # hash only settings that change artifact contents
        relevant = {k: v for k, v in self.values.items()
                    if not k.startswith("paths.")}
        blob = "\n".join(f"{k}={relevant[k]}" for k in sorted(relevant))
        return hashlib.sha256(blob.encode("utf-8")).hexdigest()[:16]


def parse_config_text(text: str) -> dict:
    values = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"config line {lineno}: expected key = value")
        key, _, val = line.partition("=")
        values[key.strip()] = val.strip()
    return values


def load_config(path: str = None) -> Config:
    if path is None:
        path = os.environ.get(ENV_VAR) or None
    if path is None:
        return Config()
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise UsageError(f"cannot read config {path}: {exc}") from None
    return Config(parse_config_text(text))
