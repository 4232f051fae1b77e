"""Bundled curves and flows used by the test-bed and example scenarios.

The curve catalog covers every causal flavor the geometry supports at low
dimension: a spacelike closed circle, a timelike open hyperbola branch,
and two helices (one timelike, one spacelike with a timelike last frame
vector).  The hand-derived frame data for these curves is recorded in
docs/catalog_values.md.
"""

from __future__ import annotations

import math

import numpy as np

from .curvekit import CLOSED, OPEN, CurveSpec
from .flowsim import FlowSpec

TWO_PI = 2.0 * math.pi

_CURVES: dict[str, dict] = {
    "circle": {
        "components": ("0", "cos(u)", "sin(u)"),
        "domain": (0.0, TWO_PI),
        "topology": CLOSED,
        "summary": "unit spacelike circle in the spacelike plane of E1^3",
    },
    "hyperbola": {
        "components": ("sinh(u)", "cosh(u)"),
        "domain": (-1.0, 1.0),
        "topology": OPEN,
        "summary": "unit timelike hyperbola branch in E1^2",
    },
    "timelike_helix": {
        "components": ("sqrt(2)*u", "cos(u)", "sin(u)"),
        "domain": (0.0, TWO_PI),
        "topology": OPEN,
        "summary": "timelike helix around the time axis (k1=1, k2=sqrt(2))",
    },
    "spacelike_helix": {
        "components": ("u", "sqrt(2)*cos(u)", "sqrt(2)*sin(u)"),
        "domain": (0.0, TWO_PI),
        "topology": OPEN,
        "summary": "spacelike helix with timelike third frame vector (k1=sqrt(2), k2=1)",
    },
    "line2": {
        "components": ("0", "u"),
        "domain": (0.0, 1.0),
        "topology": OPEN,
        "summary": "spacelike straight line in E1^2 (frame completed, k1=0)",
    },
    "line3": {
        "components": ("0", "u", "0"),
        "domain": (0.0, 1.0),
        "topology": OPEN,
        "summary": "spacelike straight line in E1^3 (frame must be clamped to 1 vector)",
    },
}

_FLOWS: dict[str, dict] = {
    "zero": {
        "mode": "explicit",
        "speeds": lambda n: ["0"] * n,
        "summary": "no motion at all",
    },
    "tangent_translate": {
        "mode": "explicit",
        "speeds": lambda n: ["1"] + ["0"] * (n - 1),
        "summary": "unit speed along the tangent (rigid translation on straight curves)",
    },
    "rigid_rotation": {
        "mode": "explicit",
        "speeds": lambda n: ["1 - cos(s)", "sin(s)"] + ["0"] * (n - 2),
        "summary": "rigid rotation of the unit circle about the point (1, 0)",
    },
    "normal_shrink": {
        "mode": "explicit",
        "speeds": lambda n: ["0", "1"] + ["0"] * (n - 2),
        "summary": "unit speed along the principal normal (shrinks the unit circle)",
    },
    "inextensible_sine": {
        "mode": "inextensible",
        "speeds": lambda n: ["sin(s)"] + ["0"] * (n - 2),
        "summary": "arclength-preserving flow with sinusoidal normal speed",
    },
    "helix_twist": {
        "mode": "inextensible",
        "speeds": lambda n: ["sin(s)", "cos(s)"] + ["0"] * (n - 3),
        "summary": "arclength-preserving flow driving both normal directions",
    },
}


def curve_names() -> list[str]:
    return sorted(_CURVES)


def flow_names() -> list[str]:
    return sorted(_FLOWS)


def curve_info(name: str) -> dict:
    return dict(_CURVES[name], name=name)


def flow_info(name: str) -> dict:
    entry = _FLOWS[name]
    return {"name": name, "mode": entry["mode"], "summary": entry["summary"]}


def curve(name: str, samples: int = 256) -> CurveSpec:
    entry = _CURVES[name]
    return CurveSpec.from_strings(
        entry["components"], entry["domain"], entry["topology"], samples
    )


def flow(name: str, dimension: int, f1_at_0: float = 0.0) -> FlowSpec:
    entry = _FLOWS[name]
    speeds = entry["speeds"](dimension)
    if entry["mode"] == "explicit":
        return FlowSpec.explicit(speeds, name=name)
    return FlowSpec.inextensible(speeds, f1_at_0=f1_at_0, name=name)


def random_explicit_flow(dimension: int, seed: int) -> FlowSpec:
    """Deterministic 'random' smooth flow: low-order Fourier speeds in s
    with a slow time modulation.  Coefficients are rounded so the
    expression text (and therefore everything downstream) is reproducible.
    """
    rng = np.random.default_rng(seed)
    speeds = []
    for _ in range(dimension):
        a, b, c = (round(float(x), 3) for x in 0.3 * rng.standard_normal(3))
        speeds.append(f"{a}*sin(s) + {b}*cos(2*s) + {c}*cos(t)")
    return FlowSpec.explicit(speeds, name=f"random_{seed}")
