"""Newton refinement, deformation continuation, and leaf-wise extraction.

The critical-point equations solved here are the vanishing of the exact
discrete gradient from `action`:

    J dv/dt - eta chi(t) grad F_r(v) - r grad H(t, v) = 0,
    mean(chi F_r(v)) = 0.

Refinement is damped Newton with a Levenberg fallback; the Jacobian
combines the exact linear part coming from the time derivative with
forward differences of the pointwise nonlinear terms.  Continuation
marches the deformation parameter r from the round sphere (r = 0), where
seeds are known in closed form, to the target surface with the switched-on
perturbation at r = 1.

In time-split mode a critical loop at r = 1 freezes outside the two
windows, traverses the inverse isotopy on the Hamiltonian window and a
characteristic leaf on the chi window.  Provided the Hamiltonian time
profile is symmetric under t -> 1/2 - t (true for all built-in families),
the junction sample v(1/2) is then a leaf-wise intersection point of the
isotopy: its image flows along the leaf back to v(1) = v(0) = the other
junction.  Extraction therefore reports v(1/2), and every report is
re-verified by the flow oracle in `leafwise`.
"""

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .action import (DiscreteLoopState, action, action_gradient,
                     loop_derivative, seed_reeb_orbit, constant_seed,
                     state_norm, time_grid)
from .leafwise import LeafwiseReport, leafwise_check, \
    closed_characteristic_probe
from .surfaces import GuardBallError

__all__ = [
    "SolverOptions",
    "CriticalPoint",
    "ContinuationTrace",
    "RefineError",
    "ContinuationError",
    "refine_critical_point",
    "continue_to_target",
    "extract_leafwise_point",
    "dedup_reports",
]


@dataclass
class SolverOptions:
    tol: float = 1e-8            # gradient norm target
    max_iter: int = 60
    fd_step: float = 1e-6        # forward-difference step for the Jacobian
    lm_floor: float = 1e-9       # first nonzero Levenberg shift
    lm_max: float = 1e2
    max_backtracks: int = 5
    max_stalls: int = 3


@dataclass
class CriticalPoint:
    state: DiscreteLoopState
    r: float
    action: float
    gradient_norm: float
    seed_k: int
    iterations: int = 0


@dataclass
class ContinuationTrace:
    seed_k: int
    r_values: list = field(default_factory=list)
    points: list = field(default_factory=list)

    @property
    def actions(self):
        return [p.action for p in self.points]

    @property
    def endpoint(self):
        return self.points[-1]

    def append(self, point):
        self.r_values.append(point.r)
        self.points.append(point)


class RefineError(RuntimeError):
    """Newton refinement did not reach the tolerance; carries the best
    iterate found."""

    def __init__(self, message, best=None):
        super().__init__(message)
        self.best = best


class ContinuationError(RuntimeError):
    """Continuation step size underflowed; carries the partial trace."""

    def __init__(self, message, trace=None):
        super().__init__(message)
        self.trace = trace


# ----------------------------------------------------------------------
# residual and Jacobian
# ----------------------------------------------------------------------

def _residual(state, surface, ham, weights, r):
    """Flattened gradient vector and its weighted norm."""
    lg, eg = action_gradient(state, surface, ham, weights, r)
    vec = np.concatenate([lg.ravel(), [eg]])
    return vec, state_norm(lg, eg)


@lru_cache(maxsize=8)
def _linear_block(num, dim):
    """kron(D, J): the exact Jacobian of v -> J dv/dt, flattened."""
    deriv = loop_derivative(np.eye(num))
    n = dim // 2
    jmat = np.zeros((dim, dim))
    jmat[:n, n:] = -np.eye(n)
    jmat[n:, :n] = np.eye(n)
    return np.kron(deriv, jmat)


def _pointwise_terms(samples, etas_chi, surface, ham, weights, r, t):
    """-eta chi grad F_r - r grad H, batched over leading axes."""
    _, fgrad = surface.value_and_grad(r, samples)
    out = -etas_chi[..., None] * fgrad
    if r != 0.0 and not ham.is_zero:
        out = out - r * ham.grad(t, samples)
    return out


def _assemble_jacobian(state, surface, ham, weights, r, fd_step):
    """Jacobian of the residual map at the current state.

    The linear time-derivative part is exact; the pointwise part
    (surface and Hamiltonian gradients) is forward-differenced one
    coordinate direction at a time, vectorised over all samples.  The
    multiplier couplings are analytic.
    """
    v = state.samples
    num, dim = v.shape
    t = time_grid(num)
    chi = weights.chi(num)
    etas_chi = state.eta * chi

    batch = np.broadcast_to(v, (dim + 1, num, dim)).copy()
    for i in range(dim):
        batch[i + 1, :, i] += fd_step
    pw = _pointwise_terms(batch, etas_chi, surface, ham, weights, r, t)
    blocks = (pw[1:] - pw[0]) / fd_step          # (dim_in, num, dim_out)
    blocks = np.moveaxis(blocks, 0, -1)          # (num, dim_out, dim_in)

    size = num * dim + 1
    jac = np.zeros((size, size))
    jac[:-1, :-1] = _linear_block(num, dim)
    body = jac[:-1, :-1].reshape(num, dim, num, dim)
    idx = np.arange(num)
    body[idx, :, idx, :] += blocks

    _, fgrad = surface.value_and_grad(r, v)
    eta_col = -(chi[:, None] * fgrad)
    jac[:-1, -1] = eta_col.ravel()
    jac[-1, :-1] = eta_col.ravel() / num
    return jac


# ----------------------------------------------------------------------
# Newton refinement
# ----------------------------------------------------------------------

def _try_norm(samples, eta, surface, ham, weights, r):
    try:
        st = DiscreteLoopState(samples, eta)
        _, gn = _residual(st, surface, ham, weights, r)
        return st, gn
    except (GuardBallError, ValueError):
        return None, np.inf


def refine_critical_point(initial, surface, ham, weights, r, opts=None,
                          seed_k=0):
    """Drive the discrete gradient at parameter r to (near) zero.

    Damped Newton on the critical-point equations with an escalating
    Levenberg shift when the plain step fails (the unperturbed problem
    has whole critical manifolds, so the Jacobian can be singular), and
    a Gauss-Newton descent fallback.  Returns a CriticalPoint with
    gradient_norm <= opts.tol, or raises RefineError with the best
    iterate attached.
    """
    opts = opts or SolverOptions()
    state = initial.copy()
    vec, gn = _residual(state, surface, ham, weights, r)
    best, best_gn = state, gn
    stalls = 0
    for iteration in range(opts.max_iter):
        if gn <= opts.tol:
            return CriticalPoint(state, float(r),
                                 action(state, surface, ham, weights, r),
                                 gn, seed_k, iteration)
        jac = _assemble_jacobian(state, surface, ham, weights, r,
                                 opts.fd_step)
        size = jac.shape[0]
        accepted = False
        shift = 0.0
        while shift <= opts.lm_max:
            mat = jac if shift == 0.0 else \
                jac + shift * np.eye(size)
            try:
                step = np.linalg.solve(mat, -vec)
            except np.linalg.LinAlgError:
                step = None
            if step is not None and np.all(np.isfinite(step)):
                alpha = 1.0
                for _ in range(opts.max_backtracks):
                    cand_samples = state.samples + alpha * \
                        step[:-1].reshape(state.samples.shape)
                    cand_eta = state.eta + alpha * step[-1]
                    cand, cand_gn = _try_norm(cand_samples, cand_eta,
                                              surface, ham, weights, r)
                    if cand_gn < gn * (1.0 - 1e-4 * alpha):
                        state, gn = cand, cand_gn
                        vec, _ = _residual(state, surface, ham, weights, r)
                        accepted = True
                        break
                    alpha *= 0.5
            if accepted:
                break
            shift = opts.lm_floor if shift == 0.0 else 10.0 * shift
        if not accepted:
            # Gauss-Newton descent on the weighted squared residual
            w = np.full(size, 1.0 / state.num_samples)
            w[-1] = 1.0
            direction = -(jac.T @ (w * vec))
            dnorm = np.linalg.norm(direction)
            if dnorm > 0:
                alpha = min(1.0, gn / dnorm)
                for _ in range(2 * opts.max_backtracks):
                    cand_samples = state.samples + alpha * \
                        direction[:-1].reshape(state.samples.shape)
                    cand_eta = state.eta + alpha * direction[-1]
                    cand, cand_gn = _try_norm(cand_samples, cand_eta,
                                              surface, ham, weights, r)
                    if cand_gn < gn * (1.0 - 1e-4 * alpha):
                        state, gn = cand, cand_gn
                        vec, _ = _residual(state, surface, ham, weights, r)
                        accepted = True
                        break
                    alpha *= 0.5
        if accepted:
            if gn < best_gn:
                best, best_gn = state, gn
            continue
        stalls += 1
        if stalls >= opts.max_stalls:
            break
    if gn <= opts.tol:
        return CriticalPoint(state, float(r),
                             action(state, surface, ham, weights, r),
                             gn, seed_k, opts.max_iter)
    raise RefineError(
        f"no convergence: gradient norm {best_gn:.3e} > tol {opts.tol:.1e}",
        best=CriticalPoint(best, float(r),
                           action(best, surface, ham, weights, r),
                           best_gn, seed_k, opts.max_iter))


# ----------------------------------------------------------------------
# continuation in r
# ----------------------------------------------------------------------

def continue_to_target(seed_k, surface, ham, weights, opts=None,
                       num_samples=256, base=None, r_step=0.125,
                       min_step=1e-6, jump_factor=10.0):
    """Predictor-corrector continuation of a seed from r = 0 to r = 1.

    The predictor is the previous state; the corrector is Newton
    refinement at the new r.  Failed steps halve the increment; an
    increment below min_step raises ContinuationError with the partial
    trace attached (a per-seed failure, not a global abort).  A step is
    also rejected when the corrector moves the state much farther than
    the recent continuation speed suggests (branch-jump guard).
    """
    opts = opts or SolverOptions()
    dim = 2 * surface.n
    if base is None:
        base = np.zeros(dim)
        base[0] = 1.0
    if seed_k == 0:
        initial = constant_seed(base / np.linalg.norm(base), num_samples)
    else:
        initial = seed_reeb_orbit(seed_k, base, num_samples, weights=weights)

    trace = ContinuationTrace(seed_k)
    cp = refine_critical_point(initial, surface, ham, weights, 0.0, opts,
                               seed_k)
    trace.append(cp)
    r = 0.0
    step = r_step
    last_move = 0.0
    while r < 1.0:
        r_next = min(1.0, r + step)
        try:
            cand = refine_critical_point(cp.state, surface, ham, weights,
                                         r_next, opts, seed_k)
        except (RefineError, GuardBallError):
            cand = None
        if cand is not None:
            move = state_norm(cand.state.samples - cp.state.samples,
                              cand.state.eta - cp.state.eta)
            floor = (r_next - r) * (1.0 + state_norm(cp.state.samples,
                                                     cp.state.eta))
            if move > jump_factor * max(last_move, floor):
                cand = None          # suspicious jump: treat as failure
            else:
                last_move = move
        if cand is None:
            step *= 0.5
            if step < min_step:
                raise ContinuationError(
                    f"seed {seed_k}: step underflow at r = {r:.6f} "
                    f"(possible bifurcation)", trace=trace)
            continue
        cp = cand
        r = r_next
        trace.append(cp)
        step = min(r_step, 1.5 * step)
    return trace


# ----------------------------------------------------------------------
# extraction and deduplication
# ----------------------------------------------------------------------

def extract_leafwise_point(cp, surface, ham, weights, t_max=60.0, tol=1e-4,
                           flow_step=1e-2):
    """Read a leaf-wise intersection point off a critical point at r = 1.

    Only time-split mode admits the literal decomposition of the loop
    into isotopy arc and leaf arc, so plain mode is refused.  The
    reported point is the junction sample v(1/2); the report's residuals
    are filled by an immediate independent flow check.  A report whose
    residual exceeds the tolerance is flagged invalid rather than
    raised: it signals a solver artifact.
    """
    if weights.mode != "time-split":
        raise ValueError("extraction requires time-split mode; the plain "
                         "functional mixes the arcs at every time")
    if abs(cp.r - 1.0) > 1e-12:
        raise ValueError(f"extraction requires r = 1, got r = {cp.r}")
    junction = cp.state.num_samples // 2
    point = cp.state.samples[junction].copy()
    sres = abs(float(surface.value(1.0, point)))
    if sres > tol:
        return LeafwiseReport(point, float("nan"), cp.action, cp.seed_k,
                              sres, float("inf"), False)
    verified, leaf_time, residual = leafwise_check(
        surface, ham, point, t_max=t_max, tol=tol, step=flow_step)
    closed, period = closed_characteristic_probe(
        surface, point, t_max=t_max, tol=10.0 * tol, step=flow_step)
    return LeafwiseReport(point, leaf_time, cp.action, cp.seed_k, sres,
                          residual, verified, closed, period)


def dedup_reports(reports, radius):
    """Cluster verified reports by point distance on the surface.

    Reports closer than `radius` merge into one cluster; the
    representative is the member with the smallest |seed_k| (ties by
    seed_k then action).  A cluster fed by several seeds on a closed
    leaf realises the non-injectivity of the critical-point map along
    closed characteristics; merged_seeds keeps the provenance.
    """
    reports = list(reports)
    if not all(rep.verified for rep in reports):
        raise ValueError("dedup_reports expects verified reports only")
    if not reports:
        return []
    pts = np.stack([rep.point for rep in reports])
    m = len(reports)
    parent = list(range(m))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for i in range(m):
        for j in range(i + 1, m):
            if np.linalg.norm(pts[i] - pts[j]) <= radius:
                parent[find(i)] = find(j)

    clusters = {}
    for i in range(m):
        clusters.setdefault(find(i), []).append(reports[i])
    merged = []
    for members in clusters.values():
        members.sort(key=lambda rep: (abs(rep.seed_k), rep.seed_k,
                                      rep.action))
        rep = members[0]
        seeds = tuple(sorted({s for mem in members
                              for s in mem.merged_seeds}))
        closed = any(mem.on_closed_characteristic for mem in members)
        period = rep.closed_period
        if closed and not rep.on_closed_characteristic:
            period = next(mem.closed_period for mem in members
                          if mem.on_closed_characteristic)
        merged.append(LeafwiseReport(
            rep.point, rep.leaf_time, rep.action, rep.seed_k,
            rep.surface_residual, rep.leaf_residual, rep.verified,
            closed, period, seeds))
    merged.sort(key=lambda rep: (rep.seed_k, rep.action))
    return merged
