"""Spectral stability classification of standing waves.

The linearized evolution is y_t = J L y with L = diag(Lplus, Lminus) and

    J = [[0, I_s], [-I_s, 0]],   I_s = diag(1, 1/sigma)   (per 2-block),

so growth modes solve J L y = lam y.  Conjugating by sqrt(I_s) removes the
1/sigma asymmetry: with Ltilde_{+,-} = sqrt(I_s) L_{+,-} sqrt(I_s) the
problem collapses to

    sqrt(Ltilde_minus) Ltilde_plus sqrt(Ltilde_minus) h = -lam^2 h

on the complement of Z_s = (P, 3 sqrt(sigma) Q), where Ltilde_minus is
strictly positive.  Eigenvalues of the symmetrized operator are real, so
lam is real or purely imaginary, and instability is equivalent to a
negative direction of Lplus on (P, 3 sigma Q)-perp.

Two independent decision routes are implemented (the symmetrized operator
and the direct nonsymmetric J L eigenproblem) plus the scaling vector
H = (n/2 P + x.grad P, n/2 Q + x.grad Q), whose quadratic form
<Lplus H, H> = -(n-2) (|grad P|^2 + |grad Q|^2) certifies instability for
n = 3 outright and degeneracy for n = 2.  For n = 2 with mu = 3 sigma the
identity Lplus H = -2 (omega+1) (P, 3 sigma Q) makes the Vakhitov-Kolokolov
pairing vanish, the marginal case with an enlarged generalized kernel.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .grids import RadialGrid, UniformGrid1D
from .linop import (LinearizedOperators, assemble, cached_spectrum, pair_inner,
                    two_field, _sqrtw)
from .solver import WaveProfile

GROWTH_TOL = 1e-4          # lam above this declares instability
DEFLATE = 1e8


class SpectralAssumptionError(RuntimeError):
    """A spectral hypothesis of the stability theory fails numerically."""


@dataclass
class CertificateVector:
    H: np.ndarray                  # (2, N) pair (n/2 P + x.grad P, n/2 Q + x.grad Q)
    quadratic_form: float          # <Lplus H, H>
    orthogonality_defect: float    # <H, (P, 3Q)> (vanishes identically)


@dataclass
class SpectralReport:
    verdict: str                   # stable | unstable | marginal
    growth_rate: float
    vk_value: float | None
    H_quadratic_form: float
    zero_multiplicity: int | None
    method_crosscheck: float | None
    growth_tol: float
    grid_kind: str
    grid_N: int
    notes: list

    def as_dict(self):
        return {
            "verdict": self.verdict,
            "growth_rate": self.growth_rate,
            "vk_value": self.vk_value,
            "H_form": self.H_quadratic_form,
            "zero_multiplicity": self.zero_multiplicity,
            "crosscheck": self.method_crosscheck,
            "tolerances": {"growth": self.growth_tol},
            "grid": {"kind": self.grid_kind, "N": self.grid_N},
            "notes": self.notes,
        }


def _sigma_weight(ops: LinearizedOperators, power: float) -> np.ndarray:
    N = ops.grid.N
    s = ops.profile.params.sigma
    return np.concatenate([np.ones(N), np.full(N, s ** power)])


def _z_sigma_sym(ops: LinearizedOperators) -> np.ndarray:
    """sqrt-weight coordinates of Z_s = (P, 3 sqrt(sigma) Q), normalized."""
    p = ops.profile
    sw = _sqrtw(ops.grid)
    z = np.concatenate([sw * p.P, sw * 3.0 * np.sqrt(p.params.sigma) * p.Q])
    return z / np.linalg.norm(z)


def _tilde_dense(ops: LinearizedOperators, which: str, ell: int = 0) -> np.ndarray:
    s = _sigma_weight(ops, -0.5)
    M = ops.dense(which, ell)
    return s[:, None] * M * s[None, :]


def symmetrized_growth_rate(ops: LinearizedOperators, profile: WaveProfile,
                            tol: float = 1e-9) -> float:
    """Largest real growth rate via the symmetric reduction (radial sector).

    Computes the smallest eigenvalue mu_min of
    sqrt(Ltilde_minus) Ltilde_plus sqrt(Ltilde_minus) restricted to the
    complement of Z_s; a negative mu_min means an eigenvalue pair
    +/- sqrt(-mu_min) of the full problem.  The square root is taken by
    spectral calculus on the projected positive operator.  Raises
    SpectralAssumptionError when Ltilde_minus fails to be positive on the
    complement (the theory's standing hypothesis).
    """
    Lpt = _tilde_dense(ops, "plus")
    Lmt = _tilde_dense(ops, "minus")
    z = _z_sigma_sym(ops)
    n2 = Lpt.shape[0]
    Pi = np.eye(n2) - np.outer(z, z)
    Am = Pi @ Lmt @ Pi
    Am = 0.5 * (Am + Am.T)
    lam, V = np.linalg.eigh(Am)
    floor = -1e-8 * ops.potential_scale
    # one eigenvalue sits at zero by construction (the projected direction)
    if np.sum(lam < floor) > 0:
        raise SpectralAssumptionError(
            f"Ltilde_minus is not positive on the constraint complement "
            f"(min eigenvalue {lam.min():.3e})")
    B = (V * np.sqrt(np.clip(lam, 0.0, None))) @ V.T
    T = B @ Lpt @ B
    T = 0.5 * (T + T.T) + DEFLATE * np.outer(z, z)
    mu_min = float(np.linalg.eigvalsh(T)[0])
    if mu_min < -tol:
        return float(np.sqrt(-mu_min))
    return 0.0


def direct_jl_matrix(ops: LinearizedOperators, ell: int = 0) -> np.ndarray:
    """Dense J L in sqrt-weight coordinates (same spectrum as the PDE block)."""
    Lp = ops.dense("plus", ell)
    Lm = ops.dense("minus", ell)
    is2 = _sigma_weight(ops, -1.0)
    n2 = Lp.shape[0]
    Z = np.zeros((n2, n2))
    return np.block([[Z, is2[:, None] * Lm], [-(is2[:, None] * Lp), Z]])


def direct_jl_eigen(ops: LinearizedOperators, profile: WaveProfile,
                    k: int | None = None, ell: int = 0) -> np.ndarray:
    """Eigenvalues of the 4-component problem J L y = lam y, Re descending."""
    M = direct_jl_matrix(ops, ell)
    vals = scipy.linalg.eigvals(M)
    order = np.argsort(-vals.real)
    vals = vals[order]
    return vals[:k] if k else vals


def h_certificate(profile: WaveProfile) -> CertificateVector:
    """Scaling vector H and its Lplus quadratic form."""
    g = profile.grid
    n = profile.params.n
    P, Q = profile.P, profile.Q
    H = two_field(0.5 * n * P + g.x_dot_grad(P), 0.5 * n * Q + g.x_dot_grad(Q))
    ops = assemble(profile)
    form = pair_inner(g, ops.apply_plus(H), H)
    ortho = pair_inner(g, H, two_field(P, 3.0 * Q))
    return CertificateVector(H=H, quadratic_form=form, orthogonality_defect=ortho)


def l_plus_action_identity(profile: WaveProfile) -> float:
    """sup-norm defect of Lplus H = ((n-2) Lap P - n alpha P, (n-2) Lap Q - n beta Q),
    relative to the sup-norm of Lplus H."""
    g = profile.grid
    pr = profile.params
    n = pr.n
    P, Q = profile.P, profile.Q
    cert = h_certificate(profile)
    ops = assemble(profile)
    lhs = ops.apply_plus(cert.H)
    rhs = two_field((n - 2.0) * g.laplacian(P) - n * pr.alpha * P,
                    (n - 2.0) * g.laplacian(Q) - n * pr.beta * Q)
    scale = max(np.max(np.abs(lhs)), np.max(np.abs(rhs)), 1e-300)
    return float(np.max(np.abs(lhs - rhs)) / scale)


def gauge_action_residual(profile: WaveProfile) -> float:
    """n=2, mu=3sigma: sup-norm of Lplus H + 2 (omega+1) (P, 3 sigma Q),
    normalized by sup |Lplus H|."""
    pr = profile.params
    if pr.n != 2:
        raise ValueError("identity specific to n = 2")
    g = profile.grid
    ops = assemble(profile)
    cert = h_certificate(profile)
    lhs = ops.apply_plus(cert.H)
    target = -2.0 * pr.alpha * two_field(profile.P, 3.0 * pr.sigma * profile.Q)
    scale = max(np.max(np.abs(lhs)), np.max(np.abs(target)), 1e-300)
    return float(np.max(np.abs(lhs - target)) / scale)


def offgauge_projection(profile: WaveProfile):
    """n=2, mu != 3sigma: projection of Lplus H off (P, 3 sigma Q).

    Returns (projected field, predicted field); the prediction is
    -2 (mu - 3 sigma) Pi (0, Q), nonzero exactly when the instability
    argument applies.
    """
    pr = profile.params
    if pr.n != 2:
        raise ValueError("identity specific to n = 2")
    g = profile.grid
    ops = assemble(profile)
    cert = h_certificate(profile)
    lhs = ops.apply_plus(cert.H)
    zeta = two_field(profile.P, 3.0 * pr.sigma * profile.Q)
    nz = pair_inner(g, zeta, zeta)

    def proj(f):
        return f - (pair_inner(g, f, zeta) / nz) * zeta

    predicted = -2.0 * (pr.mu - 3.0 * pr.sigma) * proj(two_field(np.zeros_like(profile.Q),
                                                                 profile.Q))
    return proj(lhs), predicted


def vk_quantity(ops: LinearizedOperators, profile: WaveProfile) -> float:
    """Vakhitov-Kolokolov pairing <Lplus^{-1} (P, 3 sigma Q), (P, 3 sigma Q)>.

    Solved densely in the radial sector through the eigendecomposition of
    Lplus, dropping kernel components; a right-hand side with significant
    kernel overlap triggers a conditioning warning.
    """
    pr = profile.params
    g = ops.grid
    sw = _sqrtw(g)
    M = ops.dense("plus", 0)
    lam, V = np.linalg.eigh(M)
    zeta = np.concatenate([sw * profile.P, sw * 3.0 * pr.sigma * profile.Q])
    coef = V.T @ zeta
    ktol = 1e-6 * ops.potential_scale
    kernel = np.abs(lam) <= ktol
    overlap = np.linalg.norm(coef[kernel])
    if overlap > 1e-8 * np.linalg.norm(zeta):
        warnings.warn(
            f"(P, 3 sigma Q) has kernel overlap {overlap:.2e}; the VK pairing is "
            "computed on the kernel complement", stacklevel=2)
    coef = np.where(kernel, 0.0, coef)
    sol = np.where(kernel, 0.0, coef / np.where(kernel, 1.0, lam))
    return float(sol @ coef)


def instability_criterion(ops: LinearizedOperators, profile: WaveProfile,
                          tol: float = 1e-7):
    """Minimize <Lplus h, h> over unit h perpendicular to (P, 3 sigma Q).

    Returns (verdict, minimum).  Spectral instability holds if and only if
    the minimum is negative; the radial sector carries the decision (the
    translation sectors contribute only nonnegative directions).
    """
    pr = profile.params
    sw = _sqrtw(ops.grid)
    M = ops.dense("plus", 0)
    zeta = np.concatenate([sw * profile.P, sw * 3.0 * pr.sigma * profile.Q])
    zeta = zeta / np.linalg.norm(zeta)
    Md = M + DEFLATE * ops.potential_scale * np.outer(zeta, zeta)
    mn = float(np.linalg.eigvalsh(Md)[0])
    verdict = "unstable" if mn < -tol * ops.potential_scale else "stable"
    return verdict, mn


def _sector_plan(n: int):
    # (ell, angular multiplicity) pairs covering every sector that can carry
    # zero modes: gauge/scaling live at ell=0, translations at ell=1.
    if n == 1:
        return [(0, 1)]
    if n == 2:
        return [(0, 1), (1, 2)]
    return [(0, 1), (1, 3)]


def zero_multiplicity(ops: LinearizedOperators, profile: WaveProfile,
                      tol_scale: float = 1e-5):
    """Algebraic multiplicity of the zero eigenvalue of J L.

    Radial profiles block-diagonalize J L over angular harmonics, so the
    count is taken per sector at full radial resolution and weighted by the
    angular degeneracy: gauge and scaling chains live in the ell = 0
    sector, translation/boost chains in ell = 1 (degeneracy n).  Within a
    sector the eigenvalues of the dense J L are clustered: those below
    tol_scale * potential-scale count as zero.  Returns (count, details);
    details['separation'] is the smallest non-cluster magnitude, and
    details['conclusive'] is False when the cluster fails to separate.
    """
    g = ops.grid
    if not isinstance(g, (RadialGrid, UniformGrid1D)):
        raise ValueError("zero multiplicity needs a radial or 1D grid")
    n = profile.params.n
    tau = tol_scale * ops.potential_scale
    total = 0
    details = {"sectors": {}, "threshold": tau, "conclusive": True}
    sep = np.inf
    for ell, mult in _sector_plan(n):
        vals = np.abs(scipy.linalg.eigvals(direct_jl_matrix(ops, ell)))
        inside = int(np.sum(vals < tau))
        outside = vals[vals >= tau]
        smallest_out = float(outside.min()) if outside.size else np.inf
        sep = min(sep, smallest_out)
        if smallest_out < 3.0 * tau:
            details["conclusive"] = False
        details["sectors"][ell] = {"count": inside, "angular_multiplicity": mult,
                                   "smallest_excluded": smallest_out}
        total += mult * inside
    details["separation"] = sep
    return total, details


def analyze(profile: WaveProfile, growth_tol: float = GROWTH_TOL,
            with_direct: bool = True, with_multiplicity: bool = False,
            direct_N: int | None = None) -> SpectralReport:
    """Full stability classification of a wave profile.

    Runs the symmetrized eigenproblem, optionally the direct J L spectrum
    as an independent cross-check, the H certificate, and the VK pairing.
    Verdict policy: growth above growth_tol is unstable; at zero growth the
    VK sign separates stable (negative) from marginal (zero within 1e-5).
    """
    notes = []
    ops = assemble(profile)
    growth = symmetrized_growth_rate(ops, profile)
    cross = None
    if with_direct:
        dops, dprof = ops, profile
        if direct_N and direct_N < profile.grid.N:
            dprof = _resample_profile(profile, direct_N)
            dops = assemble(dprof)
        vals = direct_jl_eigen(dops, dprof)
        direct_growth = float(np.max(vals.real))
        cross = abs(direct_growth - growth)
        if max(growth, direct_growth) > 0:
            cross = cross / max(growth, direct_growth, growth_tol)
    vk = vk_quantity(ops, profile)
    cert = h_certificate(profile)
    mult = None
    details = None
    if with_multiplicity:
        mult, details = zero_multiplicity(ops, profile)
        if not details["conclusive"]:
            notes.append("zero-cluster separation is weak; refine the grid")
    if growth > growth_tol:
        verdict = "unstable"
    elif vk < -1e-5:
        verdict = "stable"
    else:
        verdict = "marginal"
        if growth > 0:
            notes.append(f"residual growth {growth:.2e} below tolerance; "
                         "grid refinement recommended")
    return SpectralReport(
        verdict=verdict, growth_rate=growth, vk_value=vk,
        H_quadratic_form=cert.quadratic_form,
        zero_multiplicity=mult, method_crosscheck=cross,
        growth_tol=growth_tol, grid_kind=profile.grid.kind, grid_N=profile.grid.N,
        notes=notes,
    )


def _resample_profile(profile: WaveProfile, N: int) -> WaveProfile:
    """Same wave on a coarser grid of the same kind and extent."""
    from .grids import RadialGrid, UniformGrid1D, radial_profile_interpolator
    from .model import eval_energy, eval_mass, residual_sup
    from .solver import newton_polish

    g = profile.grid
    if isinstance(g, UniformGrid1D):
        g2 = UniformGrid1D(N, g.L)
        xs = g2.x
    else:
        g2 = RadialGrid(g.ndim, N, g.L)
        xs = g2.r
    P = radial_profile_interpolator(g, profile.P)(xs)
    Q = radial_profile_interpolator(g, profile.Q)(xs)
    P, Q, res = newton_polish(P, Q, g2, profile.params)
    return WaveProfile(
        P=P, Q=Q, params=profile.params, grid=g2, provenance="imported",
        residual_sup=res,
        mass=eval_mass(P, Q, g2, profile.params),
        energy=eval_energy(P, Q, g2, profile.params),
    )
