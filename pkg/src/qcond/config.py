"""Calibrated constants and their JSON persistence.

The packaged ``calibration.json`` holds the values produced by
``qcond calibrate`` with the default seed; a different file can be loaded
with :func:`load_constants`.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, fields
from importlib import resources
from os import PathLike

from .errors import ConfigError


@dataclass(frozen=True)
class Constants:
    additive_c: float = 2.5
    multiplicative_c: float = 2.5
    compare_c: float = 5.0
    # uniformity tester: q = ceil(c_u / eps) samples, eta = eps / c_eta, c_p pairs
    c_u: float = 2.0
    c_eta: float = 4.0
    c_p: int = 4
    grid: list = field(default_factory=list, compare=False)

    def to_json(self) -> dict:
        return asdict(self)

    @classmethod
    def from_json(cls, data: dict) -> "Constants":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown calibration keys: {sorted(unknown)}")
        try:
            out = cls(**data)
        except TypeError as exc:
            raise ConfigError(str(exc)) from exc
        for name in ("additive_c", "multiplicative_c", "compare_c", "c_u", "c_eta"):
            if not getattr(out, name) > 0:
                raise ConfigError(f"{name} must be positive")
        if int(out.c_p) < 1:
            raise ConfigError("c_p must be >= 1")
        return out


def load_constants(path: str | PathLike | None = None) -> Constants:
    if path is None:
        try:
            text = resources.files("qcond").joinpath("calibration.json").read_text()
        except FileNotFoundError:
            return Constants()
        return Constants.from_json(json.loads(text))
    with open(path) as fh:
        return Constants.from_json(json.load(fh))


def save_constants(constants: Constants, path: str | PathLike) -> None:
    with open(path, "w") as fh:
        json.dump(constants.to_json(), fh, indent=2)
        fh.write("\n")


_active: Constants | None = None


def active() -> Constants:
    """Constants used when callers do not pass their own."""
    global _active
    if _active is None:
        _active = load_constants()
    return _active


def set_active(constants: Constants | None) -> None:
    global _active
    _active = constants
