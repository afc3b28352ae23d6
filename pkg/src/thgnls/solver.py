"""Solitary-wave construction.

Two variational routes:

* ``solve_weinstein`` maximizes the quartic functional J on the ellipsoid
  I = 1 (preconditioned natural-gradient ascent with periodic decreasing
  rearrangement), then ``rescale_to_physical`` maps the maximizer (U, V)
  to a solution (P, Q) = sqrt(C) (U, V) of the physical elliptic system,
  where C = 1/(4 J_max) is the Euler-Lagrange multiplier.

* ``solve_normalized`` (n = 1) minimizes the energy E at fixed mass
  M = mass_level by projected, mass-renormalized descent; the frequency
  omega comes out as the Lagrange multiplier.

Both routes finish with a translation-deflated Newton polish of the
elliptic system, which drives the residual to discretization level; the
ascent/descent phase supplies the variational branch, the polish only
sharpens it.  ``semi_trivial_wave`` returns the exact 1D branch with
P = 0 and Q a cubic-NLS soliton, used as an analytic oracle throughout
the test suite.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .grids import (RadialGrid, UniformGrid1D, rearrange_decreasing)
from .model import (eval_F, eval_I, eval_energy, eval_mass, nonlinearity,
                    normalized_multiplier, residual_sup)
from .params import ModelParams


class ConvergenceError(RuntimeError):
    def __init__(self, msg, last_residual=None):
        super().__init__(msg)
        self.last_residual = last_residual


class DegenerateSolutionError(RuntimeError):
    """Iteration collapsed to the zero field."""


@dataclass
class SolverOptions:
    tol: float = 1e-7                 # sup-norm of the physical elliptic residual
    max_iter: int = 100_000
    rearrange_every: int = 10
    newton_polish: bool = True
    seed: int = 0
    init_jitter: float = 0.0          # relative Gaussian jitter on the initial bump
    verbose: bool = False


@dataclass
class WeinsteinSolution:
    U: np.ndarray
    V: np.ndarray
    J_max: float
    C_ab: float
    alpha: float
    beta: float
    iterations: int
    final_residual: float
    grid: object


@dataclass
class WaveProfile:
    P: np.ndarray
    Q: np.ndarray
    params: ModelParams
    grid: object
    provenance: str
    residual_sup: float
    mass: float
    energy: float
    J_max: float | None = None
    C_ab: float | None = None
    diagnostics: dict = field(default_factory=dict)

    @property
    def is_semitrivial(self) -> bool:
        """True when the fundamental component is numerically absent."""
        return float(np.max(np.abs(self.P))) < 1e-8 * float(np.max(np.abs(self.Q)))

    def refresh(self):
        """Recompute the cached ledger from the stored fields."""
        self.residual_sup = residual_sup(self.P, self.Q, self.grid, self.params)
        self.mass = eval_mass(self.P, self.Q, self.grid, self.params)
        self.energy = eval_energy(self.P, self.Q, self.grid, self.params)
        return self


def _initial_pair(grid, alpha, beta, opts: SolverOptions):
    r = grid.radius() if not isinstance(grid, UniformGrid1D) else grid.x
    wu = 2.0 / np.sqrt(alpha)
    wv = 2.0 / np.sqrt(beta)
    u = np.exp(-(r / wu) ** 2)
    v = np.exp(-(r / wv) ** 2) / 3.0
    if opts.init_jitter > 0:
        rng = np.random.default_rng(opts.seed)
        u = u * (1.0 + opts.init_jitter * rng.standard_normal(u.shape))
        v = v * (1.0 + opts.init_jitter * rng.standard_normal(v.shape))
    return u, v


def _recenter_1d(grid, *fields):
    """Roll the node values so the first field peaks at x = 0."""
    i0 = int(np.argmax(np.abs(fields[0])))
    shift = grid.N // 2 - i0
    if shift == 0:
        return fields
    return tuple(np.roll(f, shift) for f in fields)


def solve_weinstein(params: ModelParams, grid, opts: SolverOptions | None = None) -> WeinsteinSolution:
    """Maximize J[u,v] subject to I[u,v] = 1.

    Each step maps the quartic gradient through the inverse-Helmholtz
    preconditioner ((-Lap+alpha)^-1, (-Lap+beta)^-1) -- the natural gradient
    of the quotient J / I^2 -- and renormalizes back to the constraint
    ellipsoid.  A full step is the classical normalized fixed-point
    iteration; when it fails to increase J the step is halved.  Iterates
    are replaced by their decreasing rearrangement every few steps, which
    never decreases J and enforces the bell shape.
    """
    opts = opts or SolverOptions()
    a, b = params.alpha, params.beta

    def normalize(u, v):
        nrm = eval_I(u, v, grid, a, b)
        if not np.isfinite(nrm) or nrm < 1e-28:
            raise DegenerateSolutionError("iterate collapsed to the zero field")
        s = 1.0 / np.sqrt(nrm)
        return u * s, v * s

    u, v = normalize(*_initial_pair(grid, a, b, opts))
    res = np.inf
    it = 0
    tau = 1.0
    check_every = 25
    best_res, best_it = np.inf, 0
    for it in range(1, opts.max_iter + 1):
        f1, f2 = nonlinearity(u, v)
        gu = grid.helmholtz_inverse(f1, a)
        gv = grid.helmholtz_inverse(f2, b)
        J0 = eval_F(u, v, grid)
        if J0 < 1e-20:
            raise DegenerateSolutionError("quartic functional collapsed to zero")
        # tangent natural gradient: <(gu,gv), (u,v)>_I = <grad J, (u,v)> = 4 J
        du, dv = gu - 4.0 * J0 * u, gv - 4.0 * J0 * v
        dn = np.sqrt(eval_I(du, dv, grid, a, b))
        if dn < 1e-15:
            break
        du, dv = du / dn, dv / dn
        accepted = False
        t = tau
        for _ in range(45):
            un, vn = normalize(u + t * du, v + t * dv)
            if eval_F(un, vn, grid) > J0:
                accepted = True
                break
            t *= 0.5
            if t < 1e-10:
                break
        if not accepted:
            break                      # ascent exhausted at roundoff level
        u, v = un, vn
        tau = min(2.0, 1.5 * t)

        if opts.rearrange_every and it % opts.rearrange_every == 0:
            ur, vr = normalize(rearrange_decreasing(u, grid),
                               rearrange_decreasing(v, grid))
            # rearrangement never hurts the quotient in theory; on the discrete
            # measure it can lose a hair, so keep it only when it does not
            if eval_F(ur, vr, grid) >= eval_F(u, v, grid):
                u, v = ur, vr
        elif isinstance(grid, UniformGrid1D):
            u, v = _recenter_1d(grid, u, v)

        if it % check_every == 0 or it == opts.max_iter:
            J = eval_F(u, v, grid)
            sc = np.sqrt(1.0 / (4.0 * J))
            res = residual_sup(sc * u, sc * v, grid, params)
            if opts.verbose and it % (check_every * 20) == 0:
                print(f"  weinstein it={it} J={J:.8e} res={res:.3e}")
            if res < opts.tol:
                break
            if res < 0.9 * best_res:
                best_res, best_it = res, it
            elif it - best_it > 1500:
                break                  # residual plateau: let the polish decide

    J = eval_F(u, v, grid)
    sc = np.sqrt(1.0 / (4.0 * J))
    res = residual_sup(sc * u, sc * v, grid, params)
    if res >= opts.tol:
        # a stalled line search close to the maximizer is fine when the Newton
        # polish can finish the job; anything farther out is a genuine failure
        amp = max(np.max(np.abs(u)), np.max(np.abs(v)))
        if not (opts.newton_polish and res < 1e6 * opts.tol * max(amp, 1.0)):
            raise ConvergenceError(
                f"Weinstein ascent stalled at residual {res:.3e} after {it} iterations",
                last_residual=res)
    return WeinsteinSolution(U=u, V=v, J_max=J, C_ab=1.0 / (4.0 * J), alpha=a, beta=b,
                             iterations=it, final_residual=res, grid=grid)


def _dense_plain_laplacian(grid):
    if isinstance(grid, RadialGrid):
        M = grid.dense_laplacian(0)
        return (1.0 / grid.sqrtw)[:, None] * M * grid.sqrtw[None, :]
    return grid.dense_laplacian(0)


def newton_polish(P, Q, grid, params: ModelParams, iters: int = 12, tol: float = 1e-12):
    """Newton iteration on the elliptic system from a converged seed.

    The Jacobian is the scalar-potential linearization; on translation-
    invariant grids its near-kernel along (P', Q') is deflated so the
    solve stays well conditioned.  Keeps the best iterate seen.
    """
    lap = _dense_plain_laplacian(grid)
    N = grid.N
    a, b = params.alpha, params.beta
    scale = max(np.max(np.abs(P)), np.max(np.abs(Q)), 1.0)
    best = (residual_sup(P, Q, grid, params), P, Q)
    for _ in range(iters):
        f1, f2 = nonlinearity(P, Q)
        r = np.concatenate([-grid.laplacian(P) + a * P - f1,
                            -grid.laplacian(Q) + b * Q - f2])
        res = np.max(np.abs(r))
        if res < best[0]:
            best = (res, P.copy(), Q.copy())
        if res < tol * scale:
            break
        Jmat = np.zeros((2 * N, 2 * N))
        Jmat[:N, :N] = -lap + np.diag(a - (P ** 2 / 3.0 + 2.0 * Q ** 2 + 2.0 * P * Q / 3.0))
        Jmat[N:, N:] = -lap + np.diag(b - (27.0 * Q ** 2 + 2.0 * P ** 2))
        off = np.diag(-(4.0 * P * Q + P ** 2 / 3.0))
        Jmat[:N, N:] = off
        Jmat[N:, :N] = off
        if isinstance(grid, UniformGrid1D):
            t = np.concatenate([grid.deriv(P), grid.deriv(Q)])
            nt = np.linalg.norm(t)
            if nt > 0:
                t /= nt
                Jmat += (abs(b) + 1.0) * np.outer(t, t)
        try:
            d = np.linalg.solve(Jmat, r)
        except np.linalg.LinAlgError:
            break
        P, Q = P - d[:N], Q - d[N:]
    res = residual_sup(P, Q, grid, params)
    if res < best[0]:
        best = (res, P, Q)
    return best[1], best[2], best[0]


def rescale_to_physical(sol: WeinsteinSolution, params: ModelParams,
                        opts: SolverOptions | None = None) -> WaveProfile:
    """Physical wave (P, Q) = sqrt(C) (U, V) from a constrained maximizer."""
    opts = opts or SolverOptions()
    if not (abs(sol.alpha - params.alpha) < 1e-12 and abs(sol.beta - params.beta) < 1e-12):
        raise ValueError("WeinsteinSolution coefficients do not match params")
    sc = np.sqrt(sol.C_ab)
    P, Q = sc * sol.U, sc * sol.V
    grid = sol.grid
    res = residual_sup(P, Q, grid, params)
    if opts.newton_polish:
        P, Q, res = newton_polish(P, Q, grid, params)
    if res >= opts.tol:
        raise ConvergenceError(
            f"wave residual {res:.3e} above tolerance {opts.tol:g} after polish",
            last_residual=res)
    prof = WaveProfile(
        P=P, Q=Q, params=params, grid=grid, provenance="weinstein",
        residual_sup=res,
        mass=eval_mass(P, Q, grid, params),
        energy=eval_energy(P, Q, grid, params),
        J_max=sol.J_max, C_ab=sol.C_ab,
        diagnostics={"iterations": sol.iterations,
                     "ascent_residual": sol.final_residual},
    )
    return prof


def solve_ground_state(params: ModelParams, grid=None,
                       opts: SolverOptions | None = None) -> WaveProfile:
    """Weinstein solve + physical rescaling in one call."""
    from .grids import default_grid
    grid = grid or default_grid(params)
    sol = solve_weinstein(params, grid, opts)
    return rescale_to_physical(sol, params, opts)


@dataclass
class NormalizedSolveRequest:
    """Mass-constrained solve: minimize E with M = mass_level (n = 1 only).

    The frequency omega is an output (the constraint multiplier), so the
    request carries only (mu, sigma).
    """
    mass_level: float
    mu: float
    sigma: float

    def __post_init__(self):
        if self.mass_level <= 0:
            raise ValueError("mass_level must be positive")
        if self.mu <= 0 or self.sigma <= 0:
            raise ValueError("mu and sigma must be positive")


class _MuSigma:
    def __init__(self, mu, sigma):
        self.mu, self.sigma = mu, sigma


def solve_normalized(req: NormalizedSolveRequest, grid: UniformGrid1D,
                     opts: SolverOptions | None = None):
    """Projected-descent energy minimization at fixed mass.

    Returns (profile, omega_lambda).  Each step: energy gradient in the
    mass-weighted metric, projected off the constraint direction (P, Q),
    preconditioned by the inverse-Helmholtz maps, backtracked so E never
    increases, then renormalized to the target mass.  A bordered Newton
    solve on (P, Q, omega) polishes the triple to discretization accuracy.
    """
    if not isinstance(grid, UniformGrid1D):
        raise ValueError("normalized waves exist in n = 1 only; supply a 1D grid")
    opts = opts or SolverOptions()
    mu, sigma, lam = req.mu, req.sigma, req.mass_level
    ms = _MuSigma(mu, sigma)

    u = np.exp(-(grid.x / 2.0) ** 2)
    v = np.exp(-(grid.x * np.sqrt(mu) / 3.0) ** 2) / 3.0
    if opts.init_jitter > 0:
        rng = np.random.default_rng(opts.seed)
        u *= 1.0 + opts.init_jitter * rng.standard_normal(u.shape)
        v *= 1.0 + opts.init_jitter * rng.standard_normal(v.shape)

    def mass_of(P, Q):
        return grid.integrate(P ** 2 + 3.0 * sigma * Q ** 2)

    def project_mass(P, Q):
        s = np.sqrt(lam / mass_of(P, Q))
        return P * s, Q * s

    u, v = project_mass(u, v)
    energy_hist = []
    tau = 0.5
    E = _energy_ms(u, v, grid, mu)
    omega_hat = 0.0
    for it in range(1, opts.max_iter + 1):
        f1, f2 = nonlinearity(u, v)
        gP = -grid.laplacian(u) + u - f1
        gQ3 = (-grid.laplacian(v) + mu * v - f2)          # plain-metric gradient
        omega_hat = -(grid.integrate(gP * u) + grid.integrate(gQ3 * v)) / lam
        # residual of the elliptic system at the current multiplier estimate
        r1 = gP + omega_hat * u
        r2 = gQ3 + 3.0 * sigma * omega_hat * v
        res = max(np.max(np.abs(r1)), np.max(np.abs(r2)))
        if res < opts.tol:
            break
        dP = grid.helmholtz_inverse(r1, 1.0)
        dQ = grid.helmholtz_inverse(r2, mu)
        accepted = False
        for _ in range(25):
            Pn, Qn = project_mass(u - tau * dP, v - tau * dQ)
            En = _energy_ms(Pn, Qn, grid, mu)
            if En <= E + 1e-14 * max(abs(E), 1.0):
                accepted = True
                break
            tau *= 0.5
        if not accepted:
            break
        u, v, E = Pn, Qn, En
        energy_hist.append(E)
        tau = min(tau * 1.3, 2.0)
        if opts.rearrange_every and it % opts.rearrange_every == 0:
            u = rearrange_decreasing(u, grid)
            v = rearrange_decreasing(v, grid)
            u, v = project_mass(u, v)
            E = _energy_ms(u, v, grid, mu)
        else:
            u, v = _recenter_1d(grid, u, v)

    u, v, omega_hat, res = _normalized_newton(u, v, grid, ms, lam)
    omega_lam = normalized_multiplier(u, v, grid, ms)
    lower = max(-1.0, -mu / (3.0 * sigma))
    if omega_lam <= lower:
        raise ConvergenceError(
            f"normalized solve produced omega={omega_lam:.6g} outside the admissible "
            f"range (> {lower:g})", last_residual=res)
    if omega_lam <= 0.0:
        warnings.warn(
            f"normalized wave multiplier omega={omega_lam:.6g} is not positive; "
            "the variational theory predicts omega > 0", stacklevel=2)
    params = ModelParams(n=1, omega=omega_lam, mu=mu, sigma=sigma)
    prof = WaveProfile(
        P=u, Q=v, params=params, grid=grid, provenance="normalized",
        residual_sup=residual_sup(u, v, grid, params),
        mass=eval_mass(u, v, grid, params),
        energy=eval_energy(u, v, grid, params),
        diagnostics={"iterations": it, "energy_history": energy_hist,
                     "omega_newton": omega_hat},
    )
    return prof, omega_lam


def _energy_ms(P, Q, grid, mu):
    quad = (grid.gradient_sq_norm(P) + grid.gradient_sq_norm(Q)
            + grid.integrate(P ** 2) + mu * grid.integrate(Q ** 2))
    return 0.5 * quad - eval_F(P, Q, grid)


def _normalized_newton(P, Q, grid, ms, lam, iters: int = 10):
    """Bordered Newton on (P, Q, omega) with the mass constraint appended."""
    mu, sigma = ms.mu, ms.sigma
    N = grid.N
    lap = _dense_plain_laplacian(grid)
    w = grid.weights
    omega = normalized_multiplier(P, Q, grid, ms)

    def residual(P, Q, omega):
        f1, f2 = nonlinearity(P, Q)
        r1 = -grid.laplacian(P) + (omega + 1.0) * P - f1
        r2 = -grid.laplacian(Q) + (mu + 3.0 * sigma * omega) * Q - f2
        rm = grid.integrate(P ** 2 + 3.0 * sigma * Q ** 2) - lam
        return r1, r2, rm

    best = None
    for _ in range(iters):
        r1, r2, rm = residual(P, Q, omega)
        res = max(np.max(np.abs(r1)), np.max(np.abs(r2)), abs(rm) / max(lam, 1.0))
        if best is None or res < best[0]:
            best = (res, P.copy(), Q.copy(), omega)
        if res < 1e-12:
            break
        A = np.zeros((2 * N + 1, 2 * N + 1))
        A[:N, :N] = -lap + np.diag((omega + 1.0) - (P ** 2 / 3.0 + 2.0 * Q ** 2 + 2.0 * P * Q / 3.0))
        A[N:2 * N, N:2 * N] = -lap + np.diag((mu + 3.0 * sigma * omega) - (27.0 * Q ** 2 + 2.0 * P ** 2))
        off = np.diag(-(4.0 * P * Q + P ** 2 / 3.0))
        A[:N, N:2 * N] = off
        A[N:2 * N, :N] = off
        A[:N, -1] = P
        A[N:2 * N, -1] = 3.0 * sigma * Q
        A[-1, :N] = 2.0 * w * P
        A[-1, N:2 * N] = 6.0 * sigma * w * Q
        t = np.concatenate([grid.deriv(P), grid.deriv(Q), [0.0]])
        nt = np.linalg.norm(t)
        if nt > 0:
            A += (mu + 1.0) * np.outer(t / nt, t / nt)
        rhs = np.concatenate([r1, r2, [rm]])
        try:
            d = np.linalg.solve(A, rhs)
        except np.linalg.LinAlgError:
            break
        P, Q, omega = P - d[:N], Q - d[N:2 * N], omega - d[-1]
    r1, r2, rm = residual(P, Q, omega)
    res = max(np.max(np.abs(r1)), np.max(np.abs(r2)), abs(rm) / max(lam, 1.0))
    if best is not None and best[0] < res:
        res, P, Q, omega = best
    return P, Q, omega, res


def semi_trivial_wave(params: ModelParams, grid: UniformGrid1D) -> WaveProfile:
    """Exact 1D branch P = 0, Q = sqrt(2 beta)/3 * sech(sqrt(beta) x).

    The first equation of the elliptic system holds identically at P = 0
    (every nonlinear term there carries a factor of P), and the second
    reduces to the scalar cubic equation -Q'' + beta Q = 9 Q^3 solved by
    the sech profile.
    """
    if params.n != 1 or not isinstance(grid, UniformGrid1D):
        raise ValueError("the closed-form semi-trivial branch exists in n = 1 only")
    b = params.beta
    Q = np.sqrt(2.0 * b) / 3.0 / np.cosh(np.sqrt(b) * grid.x)
    P = np.zeros_like(Q)
    return WaveProfile(
        P=P, Q=Q, params=params, grid=grid, provenance="semi-trivial",
        residual_sup=residual_sup(P, Q, grid, params),
        mass=eval_mass(P, Q, grid, params),
        energy=eval_energy(P, Q, grid, params),
    )
