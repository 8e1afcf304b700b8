"""Linear symplectic conventions on R^{2n} and fixed-step flow integration.

Every sign in this package traces back to the conventions fixed here.
Coordinates are ordered (x_1..x_n, y_1..y_n).

    J(x, y)   = (-y, x)                         (standard complex structure)
    omega(u, w) = sum_i  u_xi w_yi - u_yi w_xi  = <J u, w>
    lambda0_p(u) = 0.5 * omega(p, u)            (primitive of omega)
    X_G defined by  omega(X_G, .) = -dG   =>   X_G = J grad(G)
    central involution:  x -> -x

Derived constants used elsewhere: the flow of X_G for G = (|x|^2 - 1)/2 is
the rotation exp(t J), so the primitive closed orbit on the unit sphere has
period 2*pi and circulation  integral of lambda0  equal to pi (the enclosed
area of the unit disc).  The "action quantum" of the package is therefore pi.
"""

import numpy as np

__all__ = [
    "apply_j",
    "omega_pairing",
    "liouville_form",
    "central_involution",
    "hamiltonian_vector_field",
    "integrate_flow",
    "integrate_flow_dense",
    "FlowError",
]


class FlowError(RuntimeError):
    """Raised when a trajectory leaves the finite range of float64."""


def _check_even_dim(u):
    d = u.shape[-1]
    if d < 2 or d % 2 != 0:
        raise ValueError(f"phase vectors must have even length >= 2, got {d}")
    return d // 2


def apply_j(u):
    """Apply the standard complex structure J(x, y) = (-y, x).

    Works on any array whose last axis is the 2n phase coordinates.
    """
    u = np.asarray(u, dtype=float)
    n = _check_even_dim(u)
    return np.concatenate([-u[..., n:], u[..., :n]], axis=-1)


def omega_pairing(u, w):
    """Standard symplectic form omega(u, w) = sum u_x w_y - u_y w_x.

    Bilinear, antisymmetric; broadcasts over leading axes.  Raises on
    mismatched phase dimension.
    """
    u = np.asarray(u, dtype=float)
    w = np.asarray(w, dtype=float)
    if u.shape[-1] != w.shape[-1]:
        raise ValueError(
            f"dimension mismatch: {u.shape[-1]} vs {w.shape[-1]}"
        )
    return np.sum(apply_j(u) * w, axis=-1)


def liouville_form(p, u):
    """Standard primitive lambda0 at base point p applied to the vector u.

    lambda0 = 0.5 * sum (x_i dy_i - y_i dx_i), i.e. 0.5 * omega(p, u).
    """
    return 0.5 * omega_pairing(p, u)


def central_involution(x):
    """The symplectic involution x -> -x."""
    return -np.asarray(x, dtype=float)


def hamiltonian_vector_field(grad_g, x):
    """Vector field X_G of a scalar field G with gradient callable grad_g.

    Fixed convention omega(X_G, .) = -dG, which gives X_G = J grad(G).
    `grad_g` maps points to gradient vectors of the same shape.
    """
    x = np.asarray(x, dtype=float)
    g = np.asarray(grad_g(x), dtype=float)
    if g.shape != x.shape:
        raise ValueError(f"gradient shape {g.shape} != point shape {x.shape}")
    return apply_j(g)


# ----------------------------------------------------------------------
# Classical 4th-order one-step integration
# ----------------------------------------------------------------------

def _rk4_step(field, t, x, h):
    k1 = field(t, x)
    k2 = field(t + 0.5 * h, x + 0.5 * h * k1)
    k3 = field(t + 0.5 * h, x + 0.5 * h * k2)
    k4 = field(t + h, x + h * k3)
    return x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def integrate_flow(field, x0, t0, t1, step):
    """Integrate dx/dt = field(t, x) from t0 to t1 with fixed-step RK4.

    The step count is ceil(|t1 - t0| / step) so the endpoint is hit
    exactly; t1 < t0 integrates backwards.  Deterministic for fixed
    inputs.  Raises FlowError if the state stops being finite.
    """
    if step <= 0:
        raise ValueError("step must be positive")
    x = np.asarray(x0, dtype=float).copy()
    span = t1 - t0
    if span == 0.0:
        return x
    n_steps = max(1, int(np.ceil(abs(span) / step)))
    h = span / n_steps
    t = t0
    for _ in range(n_steps):
        x = _rk4_step(field, t, x, h)
        t += h
        if not np.all(np.isfinite(x)):
            raise FlowError(f"non-finite state at t = {t}")
    return x


def integrate_flow_dense(field, x0, t0, t1, step):
    """Like integrate_flow but keeps the whole trajectory.

    Returns (times, states, derivs) with one row per step endpoint,
    including the initial condition.  The stored derivatives support
    cubic Hermite reconstruction between the nodes.
    """
    if step <= 0:
        raise ValueError("step must be positive")
    x = np.asarray(x0, dtype=float).copy()
    span = t1 - t0
    n_steps = 0 if span == 0.0 else max(1, int(np.ceil(abs(span) / step)))
    times = np.empty(n_steps + 1)
    states = np.empty((n_steps + 1,) + x.shape)
    derivs = np.empty_like(states)
    times[0] = t0
    states[0] = x
    derivs[0] = field(t0, x)
    h = span / n_steps if n_steps else 0.0
    t = t0
    for i in range(n_steps):
        x = _rk4_step(field, t, x, h)
        t = t0 + (i + 1) * h
        if not np.all(np.isfinite(x)):
            raise FlowError(f"non-finite state at t = {t}")
        times[i + 1] = t
        states[i + 1] = x
        derivs[i + 1] = field(t, x)
    return times, states, derivs
