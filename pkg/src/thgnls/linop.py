"""Linearized operators around a standing wave and their spectra.

Writing the perturbed wave as (e^{i w t}(P + phi), e^{3 i w t}(Q + psi))
and splitting real/imaginary parts produces the block operators

    Lplus  = [[ L1, A ], [ A, L3 ]]     (real parts)
    Lminus = [[ L2, B ], [ B, L4 ]]     (imaginary parts)

with scalar Schroedinger operators

    L1 = -Lap + alpha - (P^2/3 + 2 Q^2 + 2 P Q / 3)
    L2 = -Lap + alpha - (P^2/9 + 2 Q^2 - 2 P Q / 3)
    L3 = -Lap + beta  - (27 Q^2 + 2 P^2)
    L4 = -Lap + beta  - (9 Q^2 + 2 P^2)

and couplings A = -4 P Q - P^2/3, B = -P^2/3.  Differentiating the
elliptic system gives the exact kernel identities Lminus (P, 3Q) = 0 and
Lplus (dP/dx_j, dQ/dx_j) = 0, which double as assembly self-tests.  The
essential spectrum of both operators starts at min(alpha, beta).

Note the sign of the P*Q term in L2: it is fixed by the requirement
Lminus (P, 3Q) = 0 (gauge invariance), and differs from the sign in L1.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .grids import RadialGrid, UniformGrid1D
from .solver import WaveProfile


def _sqrtw(grid):
    if hasattr(grid, "sqrtw"):
        return grid.sqrtw
    return np.sqrt(np.ravel(grid.weights))


def two_field(h1, h2):
    return np.stack([np.asarray(h1), np.asarray(h2)])


def pair_inner(grid, f, g) -> float:
    """Quadrature inner product of 2-component fields."""
    return grid.integrate(f[0] * g[0]) + grid.integrate(f[1] * g[1])


@dataclass
class LinearizedOperators:
    """Matrix-free applicators for Lplus/Lminus plus dense sector assembly."""

    profile: WaveProfile
    pot1: np.ndarray = field(init=False)
    pot2: np.ndarray = field(init=False)
    pot3: np.ndarray = field(init=False)
    pot4: np.ndarray = field(init=False)
    A: np.ndarray = field(init=False)
    B: np.ndarray = field(init=False)

    def __post_init__(self):
        P, Q = self.profile.P, self.profile.Q
        pr = self.profile.params
        self.alpha, self.beta = pr.alpha, pr.beta
        self.pot1 = -(P ** 2 / 3.0 + 2.0 * Q ** 2 + 2.0 * P * Q / 3.0)
        self.pot2 = -(P ** 2 / 9.0 + 2.0 * Q ** 2 - 2.0 * P * Q / 3.0)
        self.pot3 = -(27.0 * Q ** 2 + 2.0 * P ** 2)
        self.pot4 = -(9.0 * Q ** 2 + 2.0 * P ** 2)
        self.A = -4.0 * P * Q - P ** 2 / 3.0
        self.B = -(P ** 2) / 3.0
        self.grid = self.profile.grid
        self._spectra = {}

    @property
    def ess_threshold(self) -> float:
        return min(self.alpha, self.beta)

    @property
    def potential_scale(self) -> float:
        return max(self.beta, float(np.max(np.abs(self.pot3))),
                   float(np.max(np.abs(self.pot1))), 1.0)

    # -- matrix-free application -----------------------------------------
    def apply_plus(self, h):
        g = self.grid
        h1, h2 = h[0], h[1]
        r1 = -g.laplacian(h1) + (self.alpha + self.pot1) * h1 + self.A * h2
        r2 = -g.laplacian(h2) + (self.beta + self.pot3) * h2 + self.A * h1
        return two_field(r1, r2)

    def apply_minus(self, h):
        g = self.grid
        h1, h2 = h[0], h[1]
        r1 = -g.laplacian(h1) + (self.alpha + self.pot2) * h1 + self.B * h2
        r2 = -g.laplacian(h2) + (self.beta + self.pot4) * h2 + self.B * h1
        return two_field(r1, r2)

    def apply(self, which: str, h):
        return self.apply_plus(h) if which == "plus" else self.apply_minus(h)

    # -- dense sector assembly (sqrt-weight coordinates, exactly symmetric) --
    def dense(self, which: str, ell: int = 0) -> np.ndarray:
        lap = self.grid.dense_laplacian(ell)
        if which == "plus":
            d1, d2, off = self.alpha + self.pot1, self.beta + self.pot3, self.A
        else:
            d1, d2, off = self.alpha + self.pot2, self.beta + self.pot4, self.B
        top = np.hstack([-lap + np.diag(d1), np.diag(off)])
        bot = np.hstack([np.diag(off), -lap + np.diag(d2)])
        return np.vstack([top, bot])

    def to_sym(self, h):
        sw = _sqrtw(self.grid)
        return np.concatenate([sw * h[0], sw * h[1]])

    def from_sym(self, y):
        sw = _sqrtw(self.grid)
        N = sw.size
        return two_field(y[:N] / sw, y[N:] / sw)


def assemble(profile: WaveProfile) -> LinearizedOperators:
    return LinearizedOperators(profile)


@dataclass
class OperatorSpectrum:
    operator: str
    eigenvalues: np.ndarray
    eigenvectors: list            # plain-coordinate (2, N) arrays, W-orthonormal
    neg_count: int
    kernel_dim: int
    ess_threshold: float
    tol: float

    def as_dict(self):
        return {
            "operator": self.operator,
            "eigenvalues": [float(v) for v in self.eigenvalues],
            "neg_count": self.neg_count,
            "kernel_dim": self.kernel_dim,
            "ess_threshold": self.ess_threshold,
            "tol": self.tol,
        }


DENSE_NODE_LIMIT = 4096


def spectrum(ops: LinearizedOperators, which: str = "plus", k: int = 8,
             tol: float | None = None, ell: int = 0) -> OperatorSpectrum:
    """Lowest-k eigenpairs of Lplus/Lminus (radial sector on radial grids).

    Dense below DENSE_NODE_LIMIT nodes, Lanczos (ARPACK) above.  Kernel
    vectors are classified by |lambda| <= tol with the default tolerance
    1e-6 times the potential scale; discretization shifts exact kernels
    by a comparable amount.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    grid = ops.grid
    N = grid.N
    if tol is None:
        tol = 1e-6 * ops.potential_scale
    if N <= DENSE_NODE_LIMIT:
        M = ops.dense(which, ell)
        lam, V = np.linalg.eigh(M)
        idx = np.argsort(lam)[:k]
        vals = lam[idx]
        vecs = [ops.from_sym(V[:, i]) for i in idx]
    else:
        from scipy.sparse.linalg import LinearOperator, eigsh
        sw = _sqrtw(grid)

        def mv(y):
            h = two_field(y[:N] / sw, y[N:] / sw)
            out = ops.apply(which, h)
            return np.concatenate([sw * out[0], sw * out[1]])

        lin = LinearOperator((2 * N, 2 * N), matvec=mv, dtype=float)
        vals, V = eigsh(lin, k=k, which="SA", maxiter=5000)
        order = np.argsort(vals)
        vals = vals[order]
        vecs = [ops.from_sym(V[:, i]) for i in order]
    neg = int(np.sum(vals < -tol))
    ker = int(np.sum(np.abs(vals) <= tol))
    return OperatorSpectrum(operator=which, eigenvalues=vals, eigenvectors=vecs,
                            neg_count=neg, kernel_dim=ker,
                            ess_threshold=ops.ess_threshold, tol=tol)


def cached_spectrum(ops: LinearizedOperators, which: str, k: int = 8) -> OperatorSpectrum:
    key = (which, k)
    if key not in ops._spectra:
        ops._spectra[key] = spectrum(ops, which, k=k)
    return ops._spectra[key]


def kernel_projection(ops: LinearizedOperators, which: str, h, tol: float | None = None):
    """h minus its components along the numerically resolved kernel."""
    spec = cached_spectrum(ops, which)
    if tol is None:
        tol = spec.tol
    g = ops.grid
    out = two_field(h[0].copy(), h[1].copy())
    for lam, vec in zip(spec.eigenvalues, spec.eigenvectors):
        if abs(lam) <= tol:
            c = pair_inner(g, out, vec) / pair_inner(g, vec, vec)
            out = out - c * vec
    return out


def negative_direction_witness(profile: WaveProfile):
    """Quadratic form <Lplus (P,3Q), (P,3Q)> two ways.

    The direct route applies the assembled operator; the closed form

        - int ( 2 P^4/9 + 4 P^3 Q/3 + 24 P^2 Q^2 + 162 Q^4 )

    follows by eliminating -Lap through the elliptic system, so agreement
    is a solver+assembly consistency check.  Both are strictly negative on
    nontrivial waves, certifying the negative direction of Lplus.
    """
    P, Q, g = profile.P, profile.Q, profile.grid
    ops = assemble(profile)
    z = two_field(P, 3.0 * Q)
    direct = pair_inner(g, ops.apply_plus(z), z)
    closed = -g.integrate(2.0 * P ** 4 / 9.0 + 4.0 * P ** 3 * Q / 3.0
                          + 24.0 * P ** 2 * Q ** 2 + 162.0 * Q ** 4)
    return direct, closed


def _rel_residual(grid, total, parts) -> float:
    num = np.sqrt(grid.integrate(total[0] ** 2) + grid.integrate(total[1] ** 2))
    den = 0.0
    for p in parts:
        den += np.sqrt(grid.integrate(p[0] ** 2) + grid.integrate(p[1] ** 2))
    return num / max(den, 1e-300)


def gauge_kernel_residual(profile: WaveProfile) -> float:
    """Relative size of Lminus (P, 3Q), which vanishes identically."""
    g = profile.grid
    ops = assemble(profile)
    z = two_field(profile.P, 3.0 * profile.Q)
    out = ops.apply_minus(z)
    kin = two_field(-g.laplacian(z[0]) + ops.alpha * z[0],
                    -g.laplacian(z[1]) + ops.beta * z[1])
    pot = two_field(ops.pot2 * z[0] + ops.B * z[1], ops.pot4 * z[1] + ops.B * z[0])
    return _rel_residual(g, out, [kin, pot])


def translation_kernel_residual(profile: WaveProfile, axis: int = 0) -> float:
    """Relative size of Lplus (dP, dQ) along one axis.

    On 1D grids the derivative is spectral in x.  On radial grids the
    translation mode leaves the radial sector, so the check interpolates
    the profile onto a tensor grid first (see transfer_to_tensor).
    """
    g = profile.grid
    ops = assemble(profile)
    if isinstance(g, UniformGrid1D):
        z = two_field(g.deriv(profile.P), g.deriv(profile.Q))
    elif isinstance(g, RadialGrid):
        raise ValueError("translation modes leave the radial sector; "
                         "transfer the profile to a tensor grid first")
    else:
        z = two_field(g.deriv_axis(profile.P, axis), g.deriv_axis(profile.Q, axis))
    out = ops.apply_plus(z)
    kin = two_field(-g.laplacian(z[0]) + ops.alpha * z[0],
                    -g.laplacian(z[1]) + ops.beta * z[1])
    pot = two_field(ops.pot1 * z[0] + ops.A * z[1], ops.pot3 * z[1] + ops.A * z[0])
    return _rel_residual(g, out, [kin, pot])


def transfer_to_tensor(profile: WaveProfile, N: int, L: float | None = None) -> WaveProfile:
    """Radial profile resampled onto a periodic tensor grid (n = 2, 3)."""
    from .grids import TensorGrid, radial_profile_interpolator
    from .model import eval_energy, eval_mass, residual_sup

    g = profile.grid
    if not isinstance(g, RadialGrid):
        raise ValueError("transfer_to_tensor expects a radial-grid profile")
    L = L or g.L
    tg = TensorGrid(g.ndim, N, L)
    rr = tg.radius()
    P = radial_profile_interpolator(g, profile.P)(rr)
    Q = radial_profile_interpolator(g, profile.Q)(rr)
    return WaveProfile(
        P=P, Q=Q, params=profile.params, grid=tg, provenance="imported",
        residual_sup=residual_sup(P, Q, tg, profile.params),
        mass=eval_mass(P, Q, tg, profile.params),
        energy=eval_energy(P, Q, tg, profile.params),
    )
