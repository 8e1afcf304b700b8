"""Discretised perturbed action functional on loops times multipliers.

The functional evaluated here is

    A_r(v, eta) = - int v*lambda0 - eta * int chi(t) F_r(v) dt
                  - int r H(t, v) dt

on loops v: R/Z -> R^{2n} stored as N uniform samples plus the scalar
multiplier eta.  In plain mode chi = 1, which is the unperturbed
functional; time-split mode concentrates chi in (1/2, 1), away from the
Hamiltonian window in (0, 1/2), so that critical loops decompose into an
isotopy arc and a characteristic arc.

Under the conventions of `symplectic` the exact first variation is

    grad_v  = J dv/dt - eta chi(t) grad F_r(v) - r grad H(t, v)
            = J (dv/dt + eta chi X_{F_r}(v) + r X_H(v)),
    grad_eta = - int chi F_r(v) dt,

so critical loops satisfy dv/dt = -eta chi X_{F_r}(v) - r X_H(v): the
multiplier of a loop winding k times positively around a plane is
eta = -2 pi k, and its action is -pi k (the circulation of lambda0 over
a k-fold unit circle is pi k).

The loop gradient is returned pointwise (no quadrature weight); inner
products against it carry the weight 1/N, see `state_norm`.
"""

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .symplectic import apply_j
from .hamiltonians import bump01

__all__ = [
    "DiscreteLoopState",
    "TimeWeights",
    "action",
    "action_gradient",
    "seed_reeb_orbit",
    "constant_seed",
    "loop_derivative",
    "state_norm",
    "time_grid",
]

MIN_SAMPLES = 64


def time_grid(num):
    """Uniform sample times t_j = j / N on the circle."""
    return np.arange(num) / num


@dataclass
class DiscreteLoopState:
    """A loop sampled at N uniform times plus the multiplier eta.

    samples has shape (N, 2n) with N >= 64 and divisible by 4 (so the
    half- and quarter-period junctions of time-split mode land on
    sample indices).
    """

    samples: np.ndarray
    eta: float

    def __post_init__(self):
        self.samples = np.asarray(self.samples, dtype=float)
        if self.samples.ndim != 2:
            raise ValueError("samples must be a (N, 2n) array")
        num, dim = self.samples.shape
        if num < MIN_SAMPLES or num % 4:
            raise ValueError(
                f"need N >= {MIN_SAMPLES} and divisible by 4, got {num}")
        if dim < 2 or dim % 2:
            raise ValueError(f"phase dimension must be even >= 2, got {dim}")
        if not np.all(np.isfinite(self.samples)) or not np.isfinite(self.eta):
            raise ValueError("non-finite loop state")
        self.eta = float(self.eta)

    @property
    def num_samples(self):
        return self.samples.shape[0]

    @property
    def dim(self):
        return self.samples.shape[1]

    def copy(self):
        return DiscreteLoopState(self.samples.copy(), self.eta)

    def reflected(self):
        """The centrally reflected state (-v, eta)."""
        return DiscreteLoopState(-self.samples, self.eta)


# ----------------------------------------------------------------------
# loop derivative
# ----------------------------------------------------------------------

def _spectral_factor(num):
    freq = np.fft.rfftfreq(num, d=1.0 / num)
    fac = 2j * np.pi * freq
    if num % 2 == 0:
        fac[-1] = 0.0  # drop the Nyquist derivative; keeps D antisymmetric
    return fac


def loop_derivative(samples):
    """Time derivative of periodic samples along axis -2.

    Spectral differentiation when N is a power of two, centred
    differences otherwise.  Both discrete operators are antisymmetric,
    which the discrete variational identities rely on.
    """
    samples = np.asarray(samples, dtype=float)
    num = samples.shape[-2]
    if num & (num - 1) == 0:
        coeff = np.fft.rfft(samples, axis=-2)
        fac = _spectral_factor(num)
        return np.fft.irfft(coeff * fac[:, None], n=num, axis=-2)
    return (np.roll(samples, -1, axis=-2)
            - np.roll(samples, 1, axis=-2)) * (num / 2.0)


def _antiderivative(values):
    """Periodic antiderivative of uniform samples, X(0) = 0, spectral.

    The mean is integrated as a linear ramp; fluctuations through the
    inverse spectral derivative, so the pair (values, X) is consistent
    for the discrete differentiation above.
    """
    num = len(values)
    mean = values.mean()
    coeff = np.fft.rfft(values - mean)
    fac = _spectral_factor(num)
    with np.errstate(divide="ignore", invalid="ignore"):
        anti = np.where(fac == 0, 0.0, coeff / np.where(fac == 0, 1.0, fac))
    prim = np.fft.irfft(anti, n=num)
    return mean * time_grid(num) + prim - prim[0]


# ----------------------------------------------------------------------
# time weights
# ----------------------------------------------------------------------

class TimeWeights:
    """Weight profile chi for the surface term and the isotopy window.

    mode "plain": chi = 1 on the whole circle (the functional as usually
    written); mode "time-split": chi is a smooth bump with unit integral
    supported in chi_window inside (1/2, 1), disjoint from the
    Hamiltonian window in (0, 1/2).
    """

    def __init__(self, mode="time-split", chi_window=(0.5, 1.0),
                 ham_window=(0.1, 0.4)):
        if mode not in ("time-split", "plain"):
            raise ValueError(f"unknown mode {mode!r}")
        c, d = float(chi_window[0]), float(chi_window[1])
        a, b = float(ham_window[0]), float(ham_window[1])
        if mode == "time-split":
            if not (0.5 <= c < d <= 1.0):
                raise ValueError(f"chi window {chi_window} not in [1/2, 1]")
            if not (0.0 <= a < b <= 0.5):
                raise ValueError(f"ham window {ham_window} not in [0, 1/2]")
            if b > c:
                raise ValueError("chi and Hamiltonian windows overlap")
        self.mode = mode
        self.chi_window = (c, d)
        self.ham_window = (a, b)

    def chi(self, num):
        """Discrete chi samples, normalised to unit mean (= unit integral
        under the periodic rectangle rule)."""
        return self._tables(num)[0]

    def chi_cumulative(self, num):
        """X(t_j) = int_0^{t_j} chi, consistent with loop_derivative."""
        return self._tables(num)[1]

    @lru_cache(maxsize=32)
    def _tables(self, num):
        if self.mode == "plain":
            return np.ones(num), time_grid(num)
        c, d = self.chi_window
        raw = bump01((time_grid(num) - c) / (d - c))
        chi = raw / raw.mean()
        return chi, _antiderivative(chi)

    def __hash__(self):
        return hash((self.mode, self.chi_window, self.ham_window))

    def __eq__(self, other):
        return (isinstance(other, TimeWeights)
                and (self.mode, self.chi_window, self.ham_window)
                == (other.mode, other.chi_window, other.ham_window))

    def __repr__(self):
        return (f"TimeWeights({self.mode!r}, chi={self.chi_window}, "
                f"ham={self.ham_window})")


# ----------------------------------------------------------------------
# functional, gradient
# ----------------------------------------------------------------------

def _action_terms(samples, etas, surface, ham, weights, r):
    """Batched action; samples (.., N, 2n), etas broadcastable scalar part."""
    num = samples.shape[-2]
    t = time_grid(num)
    chi = weights.chi(num)
    vdot = loop_derivative(samples)
    circulation = 0.5 * np.sum(apply_j(samples) * vdot, axis=-1).mean(axis=-1)
    fvals = surface.value(r, samples)
    constraint = (chi * fvals).mean(axis=-1)
    total = -circulation - etas * constraint
    if r != 0.0 and not ham.is_zero:
        total = total - r * ham.value(t, samples).mean(axis=-1)
    return total


def action(state, surface, ham, weights, r):
    """Value of the discretised functional A_r at a loop state."""
    return float(_action_terms(state.samples[None], np.array([state.eta]),
                               surface, ham, weights, r)[0])


def _gradient_arrays(samples, etas, surface, ham, weights, r):
    """Pointwise loop gradient (.., N, 2n) and eta gradient (..,)."""
    num = samples.shape[-2]
    t = time_grid(num)
    chi = weights.chi(num)
    vdot = loop_derivative(samples)
    fvals, fgrad = surface.value_and_grad(r, samples)
    scale = np.asarray(etas)[..., None, None] * chi[:, None]
    loop_grad = apply_j(vdot) - scale * fgrad
    if r != 0.0 and not ham.is_zero:
        loop_grad = loop_grad - r * ham.grad(t, samples)
    eta_grad = -(chi * fvals).mean(axis=-1)
    return loop_grad, eta_grad


def action_gradient(state, surface, ham, weights, r):
    """Exact gradient of the discrete functional.

    Returns (loop_grad, eta_grad): loop_grad is the pointwise array
    J dv/dt - eta chi grad F_r(v) - r grad H(t, v) of shape (N, 2n);
    eta_grad is the scalar -mean(chi F_r(v)).  The directional
    derivative of `action` along (d, de) is mean(loop_grad . d) +
    eta_grad * de.
    """
    lg, eg = _gradient_arrays(state.samples[None], np.array([state.eta]),
                              surface, ham, weights, r)
    return lg[0], float(eg[0])


def state_norm(loop_part, eta_part):
    """L2-style magnitude sqrt(mean |loop|^2 + eta^2) of a tangent pair."""
    return float(np.sqrt(np.mean(np.sum(loop_part * loop_part, axis=-1))
                         + eta_part ** 2))


def gradient_norm(state, surface, ham, weights, r):
    lg, eg = action_gradient(state, surface, ham, weights, r)
    return state_norm(lg, eg)


# ----------------------------------------------------------------------
# seeds
# ----------------------------------------------------------------------

def seed_reeb_orbit(k, base, num_samples=256, weights=None):
    """Exact k-fold closed orbit on the unit sphere as a loop state.

    The loop winds k times through the rotation flow starting at `base`
    (|base| = 1): v(t) = cos(2 pi k X(t)) base + sin(2 pi k X(t)) J base
    with X the cumulative chi profile (X(t) = t in plain mode).  With
    eta = -2 pi k this is a continuum critical point of the unperturbed
    functional at r = 0, and an exact discrete one up to spectral
    truncation.  Negative k gives the backward orbit; k = 0 is rejected
    (constant loops are a separate seed family, see constant_seed).
    """
    k = int(k)
    if k == 0:
        raise ValueError("k = 0 is the constant-loop family; use "
                         "constant_seed")
    base = np.asarray(base, dtype=float)
    if abs(np.linalg.norm(base) - 1.0) > 1e-9:
        raise ValueError("base point must lie on the unit sphere")
    base = base / np.linalg.norm(base)
    if weights is None:
        weights = TimeWeights(mode="plain")
    phase = 2.0 * np.pi * k * weights.chi_cumulative(num_samples)
    jbase = apply_j(base)
    samples = (np.cos(phase)[:, None] * base
               + np.sin(phase)[:, None] * jbase)
    return DiscreteLoopState(samples, -2.0 * np.pi * k)


def constant_seed(point, num_samples=256):
    """Constant loop at a point (the k = 0 critical family), eta = 0."""
    point = np.asarray(point, dtype=float)
    return DiscreteLoopState(np.tile(point, (num_samples, 1)), 0.0)
