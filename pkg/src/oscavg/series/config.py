"""Process-wide defaults for truncation bounds and the zero test."""
from contextlib import contextmanager
from dataclasses import dataclass, fields


@dataclass
class SeriesSettings:
    radial_trunc: int = 8
    k1_bound: int = 16
    k2_bound: int = 16
    zero_threshold: float = 1e-11


SETTINGS = SeriesSettings()


@contextmanager
def series_settings(**overrides):
    """Temporarily override entries of :data:`SETTINGS`."""
    names = {f.name for f in fields(SeriesSettings)}
    unknown = set(overrides) - names
    if unknown:
        raise KeyError(f"unknown series settings: {sorted(unknown)}")
    saved = {k: getattr(SETTINGS, k) for k in overrides}
    try:
        for k, v in overrides.items():
            setattr(SETTINGS, k, v)
        yield SETTINGS
    finally:
        for k, v in saved.items():
            setattr(SETTINGS, k, v)
