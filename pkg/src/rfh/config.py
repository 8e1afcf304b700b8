"""Flat key-value run configuration for the command-line pipeline.

Config files are plain text, one `key = value` per line, `#` comments.
Unknown keys are errors (fail fast).  Documented keys and defaults live
in _SPEC below; see the README for semantics.
"""

from dataclasses import dataclass, field

import numpy as np

from .action import TimeWeights
from .hamiltonians import build_hamiltonian, HAMILTONIAN_FAMILIES
from .surfaces import RadialSurface, SurfaceError

__all__ = ["RunConfig", "ConfigError", "parse_config"]


class ConfigError(ValueError):
    """Malformed configuration file or inconsistent values."""


def _parse_floats(text):
    return tuple(float(p) for p in text.replace(",", " ").split())


def _parse_ints(text):
    return tuple(int(p) for p in text.replace(",", " ").split())


def _parse_terms(text):
    """Surface terms 'coeff: e1 e2 .. e2n; coeff: ..' -> [(c, exps), ..]."""
    terms = []
    for chunk in text.split(";"):
        chunk = chunk.strip()
        if not chunk:
            continue
        if ":" not in chunk:
            raise ConfigError(f"term {chunk!r} missing ':'")
        coeff, exps = chunk.split(":", 1)
        terms.append((float(coeff), tuple(int(e) for e in exps.split())))
    return terms


# key -> (parser, default)
_SPEC = {
    "n": (int, 2),
    "loop_samples": (int, 256),
    "surface": (str, "round"),
    "axes": (_parse_floats, (1.0, 1.2)),
    "profile_degree": (int, 14),
    "surface_coeffs": (_parse_terms, ()),
    "hamiltonian": (str, "zero"),
    "epsilon": (float, 0.0),
    "time_window": (_parse_floats, (0.1, 0.4)),
    "seeds": (_parse_ints, (1, 2, 3)),
    "r_step": (float, 0.125),
    "tol_gradient": (float, 1e-8),
    "tol_verify": (float, 1e-4),
    "dedup_radius": (str, "auto"),
    "quantum": (str, "auto"),
    "homology_window": (int, 2),
    "t_max": (float, 60.0),
    "flow_step": (float, 1e-2),
    "jobs": (int, 1),
    "out_dir": (str, "out"),
}


@dataclass
class RunConfig:
    n: int = 2
    loop_samples: int = 256
    surface: str = "round"
    axes: tuple = (1.0, 1.2)
    profile_degree: int = 14
    surface_coeffs: tuple = ()
    hamiltonian: str = "zero"
    epsilon: float = 0.0
    time_window: tuple = (0.1, 0.4)
    seeds: tuple = (1, 2, 3)
    r_step: float = 0.125
    tol_gradient: float = 1e-8
    tol_verify: float = 1e-4
    dedup_radius: str = "auto"
    quantum: str = "auto"
    homology_window: int = 2
    t_max: float = 60.0
    flow_step: float = 1e-2
    jobs: int = 1
    out_dir: str = "out"
    source: str = field(default="<defaults>", compare=False)

    def validate(self):
        if self.n < 1:
            raise ConfigError("n must be >= 1")
        for key in ("tol_gradient", "tol_verify", "r_step", "flow_step"):
            if getattr(self, key) <= 0:
                raise ConfigError(f"{key} must be positive")
        if self.loop_samples < 64 or self.loop_samples % 4:
            raise ConfigError("loop_samples must be >= 64 and divisible by 4")
        if self.surface not in ("round", "ellipsoid", "coeffs"):
            raise ConfigError(f"unknown surface {self.surface!r}")
        if self.hamiltonian not in HAMILTONIAN_FAMILIES:
            raise ConfigError(f"unknown hamiltonian {self.hamiltonian!r}")
        a, b = self.time_window
        if not (0.0 <= a < b <= 0.5):
            raise ConfigError("time_window must lie inside [0, 1/2]")
        if self.hamiltonian != "zero" and abs((a + b) - 0.5) > 1e-12:
            raise ConfigError(
                "time_window must be symmetric about 1/4 (a + b = 1/2): "
                "leaf extraction reads the junction sample at t = 1/2")
        if self.dedup_radius != "auto":
            if float(self.dedup_radius) <= 0:
                raise ConfigError("dedup_radius must be positive or 'auto'")
        if self.quantum != "auto" and float(self.quantum) == 0.0:
            raise ConfigError("quantum must be nonzero or 'auto'")
        if self.homology_window < 1:
            raise ConfigError("homology_window must be >= 1")
        if self.jobs < 1:
            raise ConfigError("jobs must be >= 1")
        if self.t_max < 0:
            raise ConfigError("t_max must be >= 0")
        return self

    # -- derived objects ---------------------------------------------------

    def build_surface(self):
        try:
            if self.surface == "round":
                return RadialSurface.round_sphere(self.n)
            if self.surface == "ellipsoid":
                if len(self.axes) != self.n:
                    raise ConfigError(
                        f"need {self.n} axes, got {len(self.axes)}")
                return RadialSurface.ellipsoid(self.axes,
                                               fit_degree=self.profile_degree)
            return RadialSurface(self.n, self.surface_coeffs)
        except SurfaceError as exc:
            raise ConfigError(f"surface: {exc}") from exc

    def build_perturbation(self, surface=None):
        return build_hamiltonian(self.hamiltonian, self.n, self.epsilon,
                                 window=self.time_window, surface=surface)

    def build_weights(self, mode="time-split"):
        return TimeWeights(mode=mode, ham_window=self.time_window)

    def dedup_radius_value(self, surface):
        if self.dedup_radius == "auto":
            return 1e-3 * surface.min_rho
        return float(self.dedup_radius)

    def quantum_value(self):
        """Action-label quantum for the algebra tables (default 2 pi)."""
        if self.quantum == "auto":
            return 2.0 * np.pi
        return float(self.quantum)


def parse_config(path):
    """Parse and validate a key-value config file."""
    values = {}
    try:
        with open(path) as fh:
            lines = fh.readlines()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    for lineno, raw in enumerate(lines, start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value'")
        key, _, val = line.partition("=")
        key = key.strip()
        val = val.strip()
        if key not in _SPEC:
            raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
        if key in values:
            raise ConfigError(f"{path}:{lineno}: duplicate key {key!r}")
        parser, _ = _SPEC[key]
        try:
            values[key] = parser(val)
        except (TypeError, ValueError) as exc:
            raise ConfigError(
                f"{path}:{lineno}: bad value for {key!r}: {exc}") from exc
    cfg = RunConfig(**values, source=str(path))
    return cfg.validate()
