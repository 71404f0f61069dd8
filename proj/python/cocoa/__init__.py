"""Joint wavefront and 3-D structure recovery from a single widefield stack.

Volumes are float64 numpy arrays in (z, y, x) order, aberrations are
``{ANSI index: coefficient in wavelength units}`` dicts, and pitches are
``(dz, dy, dx)`` tuples in micrometers.
"""

from ._cocoa import (
    ConfigError,
    DomainError,
    GenerationError,
    InputError,
    IoError,
    NumericalError,
    ShapeError,
    aberration_rms,
    bead_phantom,
    blind_richardson_lucy,
    camera_gain,
    contrast,
    convolve,
    default_modes,
    emd,
    estimate,
    filament_phantom,
    gerchberg_saxton,
    high_order_modes,
    low_order_modes,
    pcc,
    psf,
    richardson_lucy,
    rms_wavefront_error,
    sbr,
    simulate,
    snr,
)

__all__ = [
    "ConfigError",
    "DomainError",
    "GenerationError",
    "InputError",
    "IoError",
    "NumericalError",
    "ShapeError",
    "aberration_rms",
    "bead_phantom",
    "blind_richardson_lucy",
    "camera_gain",
    "contrast",
    "convolve",
    "default_modes",
    "emd",
    "estimate",
    "filament_phantom",
    "gerchberg_saxton",
    "high_order_modes",
    "low_order_modes",
    "pcc",
    "psf",
    "richardson_lucy",
    "rms_wavefront_error",
    "sbr",
    "simulate",
    "snr",
]

__version__ = "0.1.0"
