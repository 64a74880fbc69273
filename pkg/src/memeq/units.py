"""Strict parsing of unit-suffixed quantities in config files.

A quantity is a number immediately followed by an SI-prefixed unit, e.g.
``10kohm``, ``500mV``, ``5GHz``, ``200ns``. The unit must match the expected
dimension exactly; bare numbers are rejected wherever a unit is required.
"""

from __future__ import annotations

import re

_PREFIXES = {
    "p": 1e-12, "n": 1e-9, "u": 1e-6, "m": 1e-3,
    "": 1.0, "k": 1e3, "M": 1e6, "G": 1e9, "T": 1e12,
}

# dimension -> unit token (case-sensitive)
_UNITS = {
    "ohm": "ohm",
    "volt": "V",
    "hertz": "Hz",
    "second": "s",
}

_NUMBER = r"[+-]?(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?"


def parse_quantity(text: str, dimension: str) -> float:
    """Parse ``text`` as a quantity of the given dimension, in SI base units."""
    try:
        unit = _UNITS[dimension]
    except KeyError:
        raise ValueError(f"unknown dimension {dimension!r}") from None
    pattern = rf"^({_NUMBER})\s*({'|'.join(re.escape(p) for p in _PREFIXES if p)}?)({re.escape(unit)})$"
    match = re.match(pattern, text.strip())
    if not match:
        raise ValueError(f"cannot parse {text!r} as a quantity in {unit}")
    value, prefix, _ = match.groups()
    return float(value) * _PREFIXES[prefix]


def format_quantity(value: float, dimension: str) -> str:
    unit = _UNITS[dimension]
    for prefix, scale in (("G", 1e9), ("M", 1e6), ("k", 1e3), ("", 1.0),
                          ("m", 1e-3), ("u", 1e-6), ("n", 1e-9)):
        if abs(value) >= scale:
            scaled = value / scale
            if scaled == int(scaled):
                return f"{int(scaled)}{prefix}{unit}"
            return f"{scaled:g}{prefix}{unit}"
    return f"{value:g}{unit}"
