"""JSON model configs: ``{"T": 1.0, "A": [[...]], "Sigma": [[...]], "labels": [...]}``."""

import hashlib
import json
import math

from .bridgecore import BridgeModel
from .errors import InvalidInputError

__all__ = ["ConfigError", "config_hash", "load_config", "parse_config"]


class ConfigError(InvalidInputError):
    """Config could not be parsed; message names the offending field or line."""


def _matrix(obj, path):
    if not isinstance(obj, list) or not obj:
        raise ConfigError(f"{path}: expected a non-empty list of rows")
    width = None
    for i, row in enumerate(obj):
        if not isinstance(row, list):
            raise ConfigError(f"{path}[{i}]: expected a list of numbers")
        if width is None:
            width = len(row)
        if len(row) != width or width == 0:
            raise ConfigError(f"{path}[{i}]: expected {width} entries, got {len(row)}")
        for k, x in enumerate(row):
            if isinstance(x, bool) or not isinstance(x, (int, float)) or not math.isfinite(x):
                raise ConfigError(f"{path}[{i}][{k}]: expected a finite number, got {x!r}")
    return obj


def parse_config(data):
    """Build a :class:`BridgeModel` from a decoded config mapping."""
    if not isinstance(data, dict):
        raise ConfigError("$: expected a JSON object")
    for key in ("T", "A", "Sigma"):
        if key not in data:
            raise ConfigError(f"$.{key}: required field missing")
    T = data["T"]
    if isinstance(T, bool) or not isinstance(T, (int, float)) or not T > 0 or not math.isfinite(T):
        raise ConfigError(f"$.T: expected a positive number, got {T!r}")
    A = _matrix(data["A"], "$.A")
    if len(A) != len(A[0]):
        raise ConfigError(f"$.A: expected a square matrix, got {len(A)}x{len(A[0])}")
    Sigma = _matrix(data["Sigma"], "$.Sigma")
    if len(Sigma) != len(A):
        raise ConfigError(f"$.Sigma: expected {len(A)} rows to match A, got {len(Sigma)}")
    labels = data.get("labels", ())
    if not isinstance(labels, (list, tuple)):
        raise ConfigError("$.labels: expected a list")
    return BridgeModel(A, Sigma, float(T), tuple(str(x) for x in labels))


def load_config(path):
    with open(path, encoding="utf-8") as fh:
        text = fh.read()
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc
    return parse_config(data)


def config_hash(model):
    return hashlib.sha256(json.dumps(model.to_json(), sort_keys=True).encode()).hexdigest()
