"""Conserved functionals, the quartic potential, and elliptic-system residuals.

For fields (u, v) on R^n the model's conserved quantities are

    M(u,v) = int |u|^2 + 3 sigma |v|^2
    E(u,v) = (1/2) int |grad u|^2 + |grad v|^2 + |u|^2 + mu |v|^2  -  int F(u,v)

with the quartic potential

    F(u,v) = |u|^4/36 + (9/4)|v|^4 + |u|^2 |v|^2 + Re(conj(u)^3 v)/9.

The auxiliary functionals of the variational construction are

    J[u,v] = int F(u,v)
    I[u,v] = int |grad u|^2 + |grad v|^2 + alpha |u|^2 + beta |v|^2

and the virial workhorse (n = 2, 3)

    R(u,v) = (1/2) ( int |grad u|^2 + |grad v|^2  -  n * int F(u,v) ).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .params import ModelParams


def F_density(u, v):
    """Pointwise quartic density F(u, v); real-valued for any complex inputs."""
    au2 = np.abs(u) ** 2
    av2 = np.abs(v) ** 2
    coupling = (np.conj(u) ** 3 * v).real if np.iscomplexobj(u) or np.iscomplexobj(v) \
        else u ** 3 * v
    return au2 ** 2 / 36.0 + 2.25 * av2 ** 2 + au2 * av2 + coupling / 9.0


def eval_F(u, v, grid) -> float:
    """int F(u,v) dx by the grid quadrature."""
    return grid.integrate(F_density(u, v))


# J is the quartic functional of the constrained maximization; identical to eval_F.
eval_J = eval_F


def eval_I(u, v, grid, alpha: float, beta: float) -> float:
    """Quadratic form int |grad u|^2 + |grad v|^2 + alpha|u|^2 + beta|v|^2."""
    return (grid.gradient_sq_norm(u) + grid.gradient_sq_norm(v)
            + alpha * grid.integrate(np.abs(u) ** 2)
            + beta * grid.integrate(np.abs(v) ** 2))


def eval_mass(u, v, grid, params: ModelParams) -> float:
    """M = int |u|^2 + 3 sigma |v|^2."""
    return grid.integrate(np.abs(u) ** 2 + 3.0 * params.sigma * np.abs(v) ** 2)


def kinetic(u, v, grid) -> float:
    return grid.gradient_sq_norm(u) + grid.gradient_sq_norm(v)


def eval_energy(u, v, grid, params: ModelParams) -> float:
    """E = (1/2) int |grad u|^2+|grad v|^2+|u|^2+mu|v|^2 - int F."""
    quad = (kinetic(u, v, grid)
            + grid.integrate(np.abs(u) ** 2)
            + params.mu * grid.integrate(np.abs(v) ** 2))
    return 0.5 * quad - eval_F(u, v, grid)


def eval_R(u, v, grid, params: ModelParams) -> float:
    """R = (kinetic - n * quartic)/2; defined for n = 2, 3 only.

    Equals (lambda/2) d/dlambda E(u^lam, v^lam) at lambda = 1 under the
    mass-preserving dilation u^lam = lam^{n/2} u(lam x), and vanishes on
    solitary waves (kinetic = n*quartic by the Pohozaev identities).
    """
    if params.n not in (2, 3):
        raise ValueError("R(u,v) is defined for n = 2 or 3 only")
    return 0.5 * (kinetic(u, v, grid) - params.n * eval_F(u, v, grid))


@dataclass
class FunctionalLedger:
    mass: float
    energy: float
    quartic: float
    kinetic: float
    R_value: float | None

    @classmethod
    def of(cls, u, v, grid, params: ModelParams) -> "FunctionalLedger":
        return cls(
            mass=eval_mass(u, v, grid, params),
            energy=eval_energy(u, v, grid, params),
            quartic=eval_F(u, v, grid),
            kinetic=kinetic(u, v, grid),
            R_value=eval_R(u, v, grid, params) if params.n in (2, 3) else None,
        )


def nonlinearity(P, Q):
    """Right-hand sides (f1, f2) of the elliptic system."""
    f1 = P ** 3 / 9.0 + 2.0 * Q ** 2 * P + P ** 2 * Q / 3.0
    f2 = 9.0 * Q ** 3 + 2.0 * P ** 2 * Q + P ** 3 / 9.0
    return f1, f2


def elliptic_residual(P, Q, grid, params: ModelParams):
    """Pointwise residuals of the standing-wave elliptic system.

    Returns (-Lap P + alpha P - f1, -Lap Q + beta Q - f2); both vanish on a
    true solution.  This is also the L^2 gradient of E + (omega/2) M at
    real fields.
    """
    f1, f2 = nonlinearity(P, Q)
    r1 = -grid.laplacian(P) + params.alpha * P - f1
    r2 = -grid.laplacian(Q) + params.beta * Q - f2
    return r1, r2


def residual_sup(P, Q, grid, params: ModelParams) -> float:
    r1, r2 = elliptic_residual(P, Q, grid, params)
    return max(np.max(np.abs(r1)), np.max(np.abs(r2)))


def pohozaev_residuals(P, Q, grid, params: ModelParams):
    """Signed, normalized defects of the three Pohozaev identities.

    Identity 1:  int |grad P|^2 + alpha P^2            = int P^4/9 + 2 P^2 Q^2 + P^3 Q/3
    Identity 2:  int |grad Q|^2 + beta Q^2             = int 9 Q^4 + 2 P^2 Q^2 + P^3 Q/9
    Identity 3:  (4-n) int |grad P|^2 + |grad Q|^2     = n alpha int P^2 + n beta int Q^2

    Each residual is (LHS - RHS), divided by |LHS| when |LHS| > 1e-12 and
    left absolute otherwise (degenerate zero fields).
    """
    a, b, n = params.alpha, params.beta, params.n
    gP = grid.gradient_sq_norm(P)
    gQ = grid.gradient_sq_norm(Q)
    iP2 = grid.integrate(P ** 2)
    iQ2 = grid.integrate(Q ** 2)

    lhs1 = gP + a * iP2
    rhs1 = grid.integrate(P ** 4 / 9.0 + 2.0 * P ** 2 * Q ** 2 + P ** 3 * Q / 3.0)
    lhs2 = gQ + b * iQ2
    rhs2 = grid.integrate(9.0 * Q ** 4 + 2.0 * P ** 2 * Q ** 2 + P ** 3 * Q / 9.0)
    lhs3 = (4.0 - n) * (gP + gQ)
    rhs3 = n * (a * iP2 + b * iQ2)

    def norm(lhs, rhs):
        d = lhs - rhs
        return d / abs(lhs) if abs(lhs) > 1e-12 else d

    return norm(lhs1, rhs1), norm(lhs2, rhs2), norm(lhs3, rhs3)


def normalized_multiplier(P, Q, grid, params_wo_omega) -> float:
    """Frequency of a mass-constrained energy minimizer, from the quotient

        omega = (4 int F - kinetic - int P^2 - mu int Q^2) / M(P,Q),

    the pairing of the elliptic system against (P, Q).
    """
    mu, sigma = params_wo_omega.mu, params_wo_omega.sigma
    K = kinetic(P, Q, grid)
    iP2 = grid.integrate(P ** 2)
    iQ2 = grid.integrate(Q ** 2)
    mass = iP2 + 3.0 * sigma * iQ2
    return (4.0 * eval_F(P, Q, grid) - K - iP2 - mu * iQ2) / mass
