"""Centrally symmetric perturbation Hamiltonians and radial cutoffs.

Perturbations are data-driven:

    H(t, x) = eps * w(t) * P(x) * beta(|x|^2)

with w a smooth bump supported in a time window inside (0, 1/2), P an even
polynomial (so H(t, -x) = H(t, x) structurally), and beta an optional C^2
radial cutoff profile.  The generated isotopy is the flow of X_H = J grad H.

The time bump is symmetric about the centre of its window.  Windows of the
built-in families are centred at t = 1/4, which makes the whole profile
symmetric under t -> 1/2 - t; the solver's critical-loop-to-leaf extraction
relies on this (see solver.extract_leafwise_point).
"""

import numpy as np

from .poly import EvenPolynomial
from .symplectic import apply_j, integrate_flow, integrate_flow_dense, \
    FlowError
from .surfaces import sphere_samples

__all__ = [
    "PerturbationHamiltonian",
    "build_hamiltonian",
    "cutoff_hamiltonian",
    "CutoffError",
    "bump01",
]

HAMILTONIAN_FAMILIES = ("zero", "quadratic", "quartic")


class CutoffError(RuntimeError):
    """The compact-sweep estimate for the cutoff region failed."""


def bump01(s):
    """Standard mollifier exp(-1/(s(1-s))) on (0, 1), zero outside.

    Smooth on the whole line with all derivatives vanishing at 0 and 1;
    symmetric about s = 1/2.
    """
    s = np.asarray(s, dtype=float)
    out = np.zeros_like(s)
    inside = (s > 0.0) & (s < 1.0)
    si = s[inside]
    out[inside] = np.exp(-1.0 / (si * (1.0 - si)))
    return out


_BUMP_PEAK = float(np.exp(-4.0))  # bump01(1/2)


def _smoothstep(s):
    """Quintic smoothstep: C^2 monotone ramp from 0 at s<=0 to 1 at s>=1."""
    s = np.clip(s, 0.0, 1.0)
    return s ** 3 * (10.0 + s * (-15.0 + 6.0 * s))


def _smoothstep_d(s):
    inside = (s > 0.0) & (s < 1.0)
    s = np.clip(s, 0.0, 1.0)
    d = 30.0 * s ** 2 * (1.0 - s) ** 2
    return np.where(inside, d, 0.0)


class PerturbationHamiltonian:
    """Even, compactly supported, time-windowed Hamiltonian.

    Fields are plain data (picklable): polynomial terms, time window,
    amplitude and radial cutoff in |x|^2.  `cutoff` is None (no radial
    truncation) or (z0, z1, z3, z2): beta ramps 0 -> 1 on [z0, z1] and
    1 -> 0 on [z3, z2] as a quintic smoothstep in s = |x|^2.
    """

    def __init__(self, n, eps, terms, window=(0.1, 0.4), cutoff=None,
                 label="custom"):
        a, b = float(window[0]), float(window[1])
        if not (0.0 <= a < b <= 0.5):
            raise ValueError(f"time window {window} not inside [0, 1/2]")
        self.n = int(n)
        self.dim = 2 * self.n
        self.eps = float(eps)
        self.window = (a, b)
        self.label = label
        self._poly = EvenPolynomial(self.dim, terms)
        self.terms = self._poly.terms
        if cutoff is not None:
            cutoff = tuple(float(c) for c in cutoff)
            if len(cutoff) != 4 or list(cutoff) != sorted(cutoff):
                raise ValueError(f"cutoff radii must be sorted, got {cutoff}")
        self.cutoff = cutoff

    @property
    def is_zero(self):
        return self.eps == 0.0 or not self.terms

    # -- time profile ------------------------------------------------------

    def time_profile(self, t):
        """Bump w(t), peak-normalised to 1 at the window centre."""
        a, b = self.window
        return bump01((np.asarray(t, dtype=float) - a) / (b - a)) / _BUMP_PEAK

    # -- spatial parts -----------------------------------------------------

    def _beta(self, s):
        if self.cutoff is None:
            return np.ones_like(s)
        z0, z1, z3, z2 = self.cutoff
        up = _smoothstep((s - z0) / (z1 - z0)) if z1 > z0 \
            else np.ones_like(s)
        down = 1.0 - _smoothstep((s - z3) / (z2 - z3))
        return up * down

    def _beta_d(self, s):
        if self.cutoff is None:
            return np.zeros_like(s)
        z0, z1, z3, z2 = self.cutoff
        up = _smoothstep((s - z0) / (z1 - z0)) if z1 > z0 \
            else np.ones_like(s)
        down = 1.0 - _smoothstep((s - z3) / (z2 - z3))
        d_up = _smoothstep_d((s - z0) / (z1 - z0)) / (z1 - z0) if z1 > z0 \
            else np.zeros_like(s)
        d_down = -_smoothstep_d((s - z3) / (z2 - z3)) / (z2 - z3)
        return d_up * down + up * d_down

    # -- evaluation ----------------------------------------------------------

    def value(self, t, x):
        """H(t, x); t broadcasts against the leading axes of x."""
        x = np.asarray(x, dtype=float)
        if self.is_zero:
            return np.zeros(np.broadcast_shapes(
                np.shape(t), x.shape[:-1]))
        s = np.sum(x * x, axis=-1)
        return (self.eps * self.time_profile(t)
                * self._poly.value(x) * self._beta(s))

    def grad(self, t, x):
        """Spatial gradient of H at (t, x)."""
        x = np.asarray(x, dtype=float)
        if self.is_zero:
            return np.zeros(np.broadcast_shapes(
                np.shape(t), x.shape[:-1]) + (self.dim,))
        s = np.sum(x * x, axis=-1)
        pval, pgrad = self._poly.value_and_grad(x)
        core = (pgrad * self._beta(s)[..., None]
                + (pval * self._beta_d(s))[..., None] * 2.0 * x)
        w = self.time_profile(t)
        return self.eps * np.asarray(w)[..., None] * core

    def field(self, t, x):
        """Hamiltonian vector field X_H = J grad H."""
        return apply_j(self.grad(t, x))

    def flow(self, x0, t0=0.0, t1=1.0, step=5e-3):
        """Flow the generated isotopy from t0 to t1 (identity if zero)."""
        if self.is_zero:
            return np.asarray(x0, dtype=float).copy()
        return integrate_flow(self.field, x0, t0, t1, step)

    def time_one_map(self, x0, step=5e-3):
        """The isotopy endpoint: flow of X_H over [0, 1]."""
        return self.flow(x0, 0.0, 1.0, step)

    def __repr__(self):
        return (f"PerturbationHamiltonian({self.label!r}, n={self.n}, "
                f"eps={self.eps}, window={self.window})")


def build_hamiltonian(family, n, eps, window=(0.1, 0.4), surface=None):
    """Built-in perturbation families, all even in x by construction.

    zero       H = 0 (identity isotopy)
    quadratic  P(x) = sum_i (i / 2n) x_i^2
    quartic    P(x) = sum_i (i / 2n) x_i^4

    When a surface is supplied, a radial cutoff is installed whose plateau
    comfortably contains the surface annulus, so the dynamics near the
    surface are those of the bare polynomial.
    """
    if family not in HAMILTONIAN_FAMILIES:
        raise ValueError(
            f"unknown family {family!r}; choose from {HAMILTONIAN_FAMILIES}")
    dim = 2 * n
    if family == "zero":
        return PerturbationHamiltonian(n, 0.0, (), window, label="zero")
    power = 2 if family == "quadratic" else 4
    terms = []
    for i in range(dim):
        exps = [0] * dim
        exps[i] = power
        terms.append(((i + 1) / dim, tuple(exps)))
    cutoff = None
    if surface is not None:
        lo, hi = surface.min_rho, surface.max_rho
        cutoff = ((0.3 * lo) ** 2, (0.5 * lo) ** 2,
                  (1.8 * hi) ** 2, (2.4 * hi) ** 2)
    return PerturbationHamiltonian(n, eps, terms, window, cutoff,
                                   label=family)


def cutoff_hamiltonian(tilde, surface, margin, n_samples=256, step=1e-2,
                       escape_factor=50.0, seed=11):
    """Truncate a (possibly unbounded) Hamiltonian outside the isotopy sweep.

    The sweep of the surface under the flow of `tilde` over [0, 1] is
    estimated from quasi-uniform surface samples; the returned Hamiltonian
    agrees with `tilde` on a `margin`-neighbourhood of the sweep and
    vanishes outside a larger annulus.  Since critical loops of the action
    stay inside the sweep, truncation does not change them.

    Raises CutoffError when a sample trajectory escapes (non-finite or
    beyond escape_factor times the outer surface radius).
    """
    if margin <= 0:
        raise ValueError("margin must be positive")
    theta = sphere_samples(surface.n, n_samples, seed=seed)
    pts = surface.graph_point(theta)
    bound = escape_factor * surface.max_rho
    lo = np.inf
    hi = 0.0
    try:
        _, states, _ = _dense_flow(tilde, pts, step)
    except FlowError as exc:
        raise CutoffError(f"sweep estimate failed: {exc}") from exc
    radii = np.linalg.norm(states, axis=-1)
    lo = float(min(lo, radii.min()))
    hi = float(max(hi, radii.max()))
    if hi > bound:
        raise CutoffError(
            f"flow escapes: sweep radius {hi:.3g} exceeds bound {bound:.3g}")
    inner = max(lo - 2.0 * margin, 0.25 * lo)
    plateau_in = max(lo - margin, 0.5 * (inner + lo))
    cutoff = (inner ** 2, plateau_in ** 2,
              (hi + margin) ** 2, (hi + 2.0 * margin) ** 2)
    out = PerturbationHamiltonian(
        tilde.n, tilde.eps, tilde.terms, tilde.window, cutoff,
        label=f"{tilde.label}|cutoff")
    out.sweep_annulus = (lo, hi)
    return out


def _dense_flow(ham, pts, step):
    """Trajectories of all points under the isotopy field (batched RK4)."""
    if ham.is_zero:
        times = np.array([0.0, 1.0])
        states = np.stack([pts, pts])
        return times, states, np.zeros_like(states)
    return integrate_flow_dense(ham.field, pts, 0.0, 1.0, step)
