"""Star-shaped hypersurfaces given by even radial profiles over the sphere.

A surface is the radial graph {rho(theta) * theta : |theta| = 1} of a
positive profile

    rho(theta) = 1 + sum_m c_m * theta^(e_m),     all exponents even,

so central symmetry rho(-theta) = rho(theta) holds structurally.  The
deformation family interpolates profiles linearly,

    rho_r = (1 - r) + r * rho,    r in [0, 1],

which keeps every intermediate level set a centrally symmetric radial
graph.  The defining function of the family is

    F_r(x) = 0.5 * (|x|^2 / rho_r(x/|x|)^2 - 1),

so F_0(x) = (|x|^2 - 1)/2 is the round-sphere function and F_1^{-1}(0)
is the target surface.
"""

import numpy as np

from .poly import EvenPolynomial
from .symplectic import apply_j

__all__ = ["RadialSurface", "SurfaceError", "GuardBallError", "sphere_samples"]

# Fraction of the smallest radius below which F_r is never evaluated; the
# profile quotient x/|x| degenerates at the origin.
GUARD_FRACTION = 0.1


class SurfaceError(ValueError):
    """Invalid radial profile (wrong parity, non-positive, bad shape)."""


class GuardBallError(ValueError):
    """A point fell inside the guard ball around the origin."""


def sphere_samples(n, count, seed=7):
    """Quasi-uniform sample of `count` points on the unit sphere in R^{2n}.

    Normalized Gaussian vectors with a fixed seed: deterministic and
    uniformly distributed in any dimension.
    """
    rng = np.random.default_rng(seed)
    pts = rng.normal(size=(count, 2 * n))
    return pts / np.linalg.norm(pts, axis=-1, keepdims=True)


class RadialSurface:
    """Even polynomial radial profile and its interpolation family.

    Parameters
    ----------
    n : half the ambient dimension (surface lives in R^{2n}).
    terms : iterable of (coefficient, exponents) pairs; `exponents` is a
        tuple of 2n even non-negative integers.  Empty terms give the
        round sphere.
    positivity_margin : smallest sampled profile value accepted.
    """

    def __init__(self, n, terms=(), positivity_margin=0.05,
                 check_samples=4096, seed=7):
        if n < 1:
            raise SurfaceError("n must be >= 1")
        self.n = int(n)
        self.dim = 2 * self.n
        try:
            self._poly = EvenPolynomial(self.dim, terms)
        except ValueError as exc:
            raise SurfaceError(str(exc)) from exc
        self.terms = self._poly.terms

        probe = sphere_samples(self.n, check_samples, seed=seed)
        vals = self.rho(probe)
        self.min_rho = float(np.min(vals))
        self.max_rho = float(np.max(vals))
        if self.min_rho <= positivity_margin:
            raise SurfaceError(
                f"profile dips to {self.min_rho:.4g} <= margin "
                f"{positivity_margin:.4g} on sampled sphere")
        self.guard_radius = GUARD_FRACTION * min(1.0, self.min_rho)

    # -- profile ---------------------------------------------------------

    @property
    def is_round(self):
        return self._poly.is_zero

    def rho(self, theta, r=1.0):
        """Interpolated profile rho_r on unit vectors theta (.., 2n)."""
        theta = np.asarray(theta, dtype=float)
        if self.is_round or r == 0.0:
            return np.ones(theta.shape[:-1])
        return 1.0 + r * self._poly.value(theta)

    def rho_grad_theta(self, theta, r=1.0):
        """Formal gradient of rho_r in theta (unprojected)."""
        theta = np.asarray(theta, dtype=float)
        if self.is_round or r == 0.0:
            return np.zeros(theta.shape)
        return r * self._poly.grad(theta)

    def graph_point(self, theta, r=1.0):
        """Point rho_r(theta) * theta of the level set F_r = 0."""
        theta = np.asarray(theta, dtype=float)
        return self.rho(theta, r)[..., None] * theta

    # -- defining function -----------------------------------------------

    def value_and_grad(self, r, x):
        """Evaluate (F_r(x), grad F_r(x)); broadcasts over leading axes.

        F_r(x) = 0.5 * (|x|^2 / rho_r(x/|x|)^2 - 1).  Points inside the
        guard ball are rejected: the interpolation family is never needed
        there once the Hamiltonian is cut off.
        """
        x = np.asarray(x, dtype=float)
        if x.shape[-1] != self.dim:
            raise SurfaceError(
                f"point dimension {x.shape[-1]} != {self.dim}")
        norm = np.linalg.norm(x, axis=-1)
        if np.any(norm < self.guard_radius):
            raise GuardBallError(
                f"|x| = {float(np.min(norm)):.4g} inside guard radius "
                f"{self.guard_radius:.4g}")
        theta = x / norm[..., None]
        if self.is_round or r == 0.0:
            value = 0.5 * (norm ** 2 - 1.0)
            return value, x.copy()
        pval, pgrad = self._poly.value_and_grad(theta)
        rho = 1.0 + r * pval
        g = r * pgrad
        # project onto the sphere tangent space at theta
        g = g - np.sum(g * theta, axis=-1, keepdims=True) * theta
        value = 0.5 * (norm ** 2 / rho ** 2 - 1.0)
        grad = x / rho[..., None] ** 2 - (norm / rho ** 3)[..., None] * g
        return value, grad

    def value(self, r, x):
        """F_r(x) alone (same guard-ball rules as value_and_grad)."""
        x = np.asarray(x, dtype=float)
        if x.shape[-1] != self.dim:
            raise SurfaceError(
                f"point dimension {x.shape[-1]} != {self.dim}")
        norm = np.linalg.norm(x, axis=-1)
        if np.any(norm < self.guard_radius):
            raise GuardBallError(
                f"|x| = {float(np.min(norm)):.4g} inside guard radius "
                f"{self.guard_radius:.4g}")
        rho = self.rho(x / norm[..., None], r)
        return 0.5 * (norm ** 2 / rho ** 2 - 1.0)

    def characteristic_field(self, x, r=1.0):
        """X_{F_r}(x) = J grad F_r(x); spans the characteristic line field
        at points of the level set."""
        _, grad = self.value_and_grad(r, x)
        return apply_j(grad)

    def __repr__(self):
        kind = "round" if self.is_round else f"{len(self.terms)} terms"
        return f"RadialSurface(n={self.n}, {kind})"

    # -- constructors ------------------------------------------------------

    @classmethod
    def round_sphere(cls, n):
        return cls(n)

    @classmethod
    def scaled_sphere(cls, n, radius):
        """Sphere of the given radius (constant profile)."""
        return cls(n, [(radius - 1.0, (0,) * (2 * n))])

    @classmethod
    def ellipsoid(cls, axes, fit_degree=14):
        """Radial-profile ellipsoid with one axis per symplectic plane.

        For axes (a_1, .., a_n) the target surface is
        sum_i (x_i^2 + y_i^2) / a_i^2 = 1.  The exact profile is
        rho(theta) = (sum u_i / a_i^2)^(-1/2) with u_i = theta_xi^2 +
        theta_yi^2; for n <= 2 it reduces to one variable and is fitted
        by a Chebyshev expansion re-expressed in even monomials.  The
        fit residual is stored as `profile_fit_error`.
        """
        axes = [float(a) for a in axes]
        n = len(axes)
        if any(a <= 0 for a in axes):
            raise SurfaceError("axes must be positive")
        if n == 1:
            surf = cls.scaled_sphere(1, axes[0])
            surf.profile_fit_error = 0.0
            surf.axes = tuple(axes)
            return surf
        if n != 2:
            raise NotImplementedError(
                "ellipsoid profiles implemented for n <= 2")
        a, b = axes

        def profile(u):
            return 1.0 / np.sqrt(u / a ** 2 + (1.0 - u) / b ** 2)

        ugrid = np.linspace(0.0, 1.0, 512)
        cheb = np.polynomial.chebyshev.Chebyshev.fit(
            ugrid, profile(ugrid), deg=fit_degree, domain=[0.0, 1.0])
        poly = cheb.convert(kind=np.polynomial.polynomial.Polynomial,
                            domain=[0.0, 1.0], window=[0.0, 1.0])
        pw = poly.coef  # rho(u) = sum_j pw[j] u^j, u = th_x1^2 + th_y1^2
        terms = []
        if len(pw) > 0 and pw[0] != 1.0:
            terms.append((pw[0] - 1.0, (0, 0, 0, 0)))
        from math import comb
        for j in range(1, len(pw)):
            if pw[j] == 0.0:
                continue
            for i in range(j + 1):
                # u^j expands over the plane-1 coordinates (x_1, y_1)
                terms.append((pw[j] * comb(j, i),
                              (2 * i, 0, 2 * (j - i), 0)))
        surf = cls(2, terms)
        uu = np.linspace(0.0, 1.0, 257)
        th = np.zeros((uu.size, 4))
        th[:, 0] = np.sqrt(uu)
        th[:, 1] = np.sqrt(1.0 - uu)
        surf.profile_fit_error = float(
            np.max(np.abs(surf.rho(th) - profile(uu))))
        surf.axes = (a, b)
        return surf
