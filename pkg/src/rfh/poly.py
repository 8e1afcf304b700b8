"""Vectorised multivariate polynomials with even exponents.

Shared evaluation engine for radial profiles and perturbation
Hamiltonians.  Evaluation builds a per-coordinate power table once and
gathers monomials from it, so value and gradient cost O(M * d) vector
operations regardless of exponent size (M terms, d coordinates).
"""

import numpy as np

__all__ = ["EvenPolynomial"]


class EvenPolynomial:
    """p(x) = sum_m c_m * prod_i x_i^{e_mi} with all e_mi even.

    Evenness p(-x) = p(x) is structural: odd exponents are rejected.
    """

    def __init__(self, dim, terms):
        self.dim = int(dim)
        clean = []
        for coeff, exps in terms:
            exps = tuple(int(e) for e in exps)
            if len(exps) != self.dim:
                raise ValueError(
                    f"exponent tuple {exps} has length {len(exps)}, "
                    f"expected {self.dim}")
            if any(e < 0 or e % 2 for e in exps):
                raise ValueError(
                    f"only even non-negative exponents admitted: {exps}")
            coeff = float(coeff)
            if not np.isfinite(coeff):
                raise ValueError("non-finite coefficient")
            if coeff != 0.0:
                clean.append((coeff, exps))
        self.terms = tuple(clean)
        m = len(self.terms)
        self.coeffs = np.array([c for c, _ in self.terms]) \
            if m else np.zeros(0)
        self.expo = np.array([e for _, e in self.terms], dtype=np.int64) \
            if m else np.zeros((0, self.dim), dtype=np.int64)
        self.max_power = int(self.expo.max()) if m else 0
        # per-coordinate differentiation data: rows with e_mi > 0, their
        # coefficients c_m * e_mi and lowered exponent matrices
        self._dcoeffs = []
        self._dexpo = []
        for i in range(self.dim):
            rows = np.nonzero(self.expo[:, i] > 0)[0] if m else np.array([], int)
            e = self.expo[rows].copy()
            if rows.size:
                e[:, i] -= 1
            self._dcoeffs.append(self.coeffs[rows] * self.expo[rows, i])
            self._dexpo.append(e)

    @property
    def is_zero(self):
        return len(self.terms) == 0

    def _powers(self, x):
        # table[..., i, p] = x_i^p for p = 0..max_power
        shape = x.shape + (self.max_power + 1,)
        table = np.empty(shape)
        table[..., 0] = 1.0
        for p in range(1, self.max_power + 1):
            table[..., p] = table[..., p - 1] * x
        return table

    @staticmethod
    def _gather(table, expo):
        # prod_i table[..., i, expo[m, i]] -> (..., M)
        idx = np.broadcast_to(expo.T, table.shape[:-2] + expo.T.shape)
        mono = np.take_along_axis(table, idx, axis=-1)
        return np.prod(mono, axis=-2)

    # Below this many points the direct broadcast-power path beats the
    # power-table path (which pays fixed gather overheads).
    _SMALL = 64

    def _small(self, x):
        return x.size <= self._SMALL * self.dim

    def value(self, x):
        """Evaluate on points (..., dim); returns (...,)."""
        x = np.asarray(x, dtype=float)
        if self.is_zero:
            return np.zeros(x.shape[:-1])
        if self._small(x):
            mono = np.prod(x[..., None, :] ** self.expo, axis=-1)
            return mono @ self.coeffs
        table = self._powers(x)
        return self._gather(table, self.expo) @ self.coeffs

    def grad(self, x):
        """Gradient on points (..., dim); returns (..., dim)."""
        return self.value_and_grad(x)[1]

    def value_and_grad(self, x):
        x = np.asarray(x, dtype=float)
        if self.is_zero:
            return np.zeros(x.shape[:-1]), np.zeros(x.shape)
        out = np.zeros(x.shape)
        if self._small(x):
            val = np.prod(x[..., None, :] ** self.expo, axis=-1) @ self.coeffs
            for i in range(self.dim):
                if self._dcoeffs[i].size:
                    mono = np.prod(x[..., None, :] ** self._dexpo[i], axis=-1)
                    out[..., i] = mono @ self._dcoeffs[i]
            return val, out
        table = self._powers(x)
        val = self._gather(table, self.expo) @ self.coeffs
        for i in range(self.dim):
            if self._dcoeffs[i].size:
                out[..., i] = self._gather(table, self._dexpo[i]) \
                    @ self._dcoeffs[i]
        return val, out

    def __len__(self):
        return len(self.terms)
