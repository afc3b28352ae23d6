"""Time evolution, conservation and virial tracking, blow-up experiments.

The flow is advanced by symmetric (Strang) operator splitting.  The linear
substep applies the exact Fourier/eigenbasis propagators

    u -> exp(+i (Lap - 1) dt) u,      v -> exp(+i (Lap - mu) dt / sigma) v,

which are unitary in the discrete norm, so the linear step conserves mass
exactly.  The nonlinear substep freezes space pointwise and integrates the
coupled amplitude ODE

    u' = i [ (|u|^2/9 + 2 |v|^2) u + conj(u)^2 v / 3 ]
    v' = (i/sigma) [ (9 |v|^2 + 2 |u|^2) v + u^3 / 9 ]

with one classical RK4 step: the cubic cross terms exchange power between
the harmonics, so unlike scalar NLS the moduli are not invariant and an
exact phase rotation is not available.  The pointwise mass density
|u|^2 + 3 sigma |v|^2 is conserved by this ODE, so the splitting's mass
drift is at the RK4 truncation level; energy drift is second order in dt.

For sigma = 3, mu = 9 the variance V(t) = int |x|^2 (|u|^2 + 9 |v|^2)
obeys V'' = 16 R(u, v); in n = 2 this collapses to the constant
16 E - 8 M, so any data with 16 E - 8 M < 0 rides a concave parabola into
finite-time blow-up.  Blow-up runs detect collapse by amplitude/gradient
growth and confirm the time against a dt-refined rerun.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .grids import TensorGrid, radial_profile_interpolator
from .model import eval_F, eval_R, eval_energy, eval_mass
from .params import ModelParams
from .solver import WaveProfile


class UnsupportedParametersError(ValueError):
    """Operation requires the sigma = 3, mu = 9 parameter slice."""


def _require_virial_params(params: ModelParams, what: str):
    if not (abs(params.sigma - 3.0) < 1e-12 and abs(params.mu - 9.0) < 1e-12):
        raise UnsupportedParametersError(
            f"{what} is derived for sigma = 3, mu = 9 only "
            f"(got sigma={params.sigma}, mu={params.mu})")


@dataclass
class FieldState:
    u: np.ndarray
    v: np.ndarray
    t: float
    params: ModelParams
    grid: object

    def copy(self):
        return FieldState(self.u.copy(), self.v.copy(), self.t, self.params, self.grid)


def _nonlinear_rhs(u, v, sigma):
    au2 = np.abs(u) ** 2
    av2 = np.abs(v) ** 2
    du = 1j * ((au2 / 9.0 + 2.0 * av2) * u + np.conj(u) ** 2 * v / 3.0)
    dv = (1j / sigma) * ((9.0 * av2 + 2.0 * au2) * v + u ** 3 / 9.0)
    return du, dv


def _nonlinear_substep(u, v, sigma, tau):
    k1u, k1v = _nonlinear_rhs(u, v, sigma)
    k2u, k2v = _nonlinear_rhs(u + 0.5 * tau * k1u, v + 0.5 * tau * k1v, sigma)
    k3u, k3v = _nonlinear_rhs(u + 0.5 * tau * k2u, v + 0.5 * tau * k2v, sigma)
    k4u, k4v = _nonlinear_rhs(u + tau * k3u, v + tau * k3v, sigma)
    un = u + (tau / 6.0) * (k1u + 2.0 * k2u + 2.0 * k3u + k4u)
    vn = v + (tau / 6.0) * (k1v + 2.0 * k2v + 2.0 * k3v + k4v)
    return un, vn


def step(state: FieldState, dt: float) -> FieldState:
    """One Strang step: half nonlinear, full linear, half nonlinear."""
    if dt <= 0:
        raise ValueError("dt must be positive")
    pr = state.params
    g = state.grid
    u, v = _nonlinear_substep(state.u, state.v, pr.sigma, 0.5 * dt)
    u = g.propagate_linear(u, 1.0, 1.0, dt)
    v = g.propagate_linear(v, pr.mu, 1.0 / pr.sigma, dt)
    u, v = _nonlinear_substep(u, v, pr.sigma, 0.5 * dt)
    return FieldState(u, v, state.t + dt, pr, g)


def virial(state: FieldState) -> float:
    """V = int |x|^2 (|u|^2 + 9 |v|^2); the sigma = 3, mu = 9 variance."""
    _require_virial_params(state.params, "the virial weight")
    rsq = state.grid.rsq()
    return state.grid.integrate(rsq * (np.abs(state.u) ** 2 + 9.0 * np.abs(state.v) ** 2))


def virial_second_derivative(state: FieldState) -> float:
    """V''(t) = 16 R(u, v) along the flow (sigma = 3, mu = 9; n = 2, 3)."""
    _require_virial_params(state.params, "the virial identity")
    return 16.0 * eval_R(state.u, state.v, state.grid, state.params)


def ohta_membership(state: FieldState, reference: WaveProfile,
                    mass_rtol: float = 1e-6):
    """Membership in the flow-invariant comparison sets around the wave.

    Set A: energy strictly below the wave's, equal mass, quartic term
    strictly above the wave's.  Set B: additionally R < 0.  Strict
    inequalities carry a margin 1e-10 |E(P,Q)|.
    """
    _require_virial_params(state.params, "the comparison sets")
    g = state.grid
    pr = state.params
    E = eval_energy(state.u, state.v, g, pr)
    M = eval_mass(state.u, state.v, g, pr)
    Fq = eval_F(state.u, state.v, g)
    E_ref, M_ref = reference.energy, reference.mass
    F_ref = eval_F(reference.P, reference.Q, reference.grid)
    margin = 1e-10 * abs(E_ref)
    in_A = (E < E_ref - margin
            and abs(M - M_ref) <= mass_rtol * max(M_ref, 1.0)
            and Fq > F_ref + margin)
    in_B = bool(in_A and eval_R(state.u, state.v, g, pr) < 0.0)
    return {"in_A": bool(in_A), "in_B": in_B}


@dataclass
class InitialData:
    """Initial-data recipes anchored at a wave profile.

    wave              -- (P, Q) itself
    dilated(lam)      -- mass-preserving dilation lam^{n/2} (P, Q)(lam x)
    amplified(eps)    -- (1+eps) (P, Q)
    custom            -- caller-supplied complex fields
    """
    recipe: str
    lam: float = 1.0
    eps: float = 0.0
    custom_u: np.ndarray | None = None
    custom_v: np.ndarray | None = None

    def build(self, profile: WaveProfile, grid=None) -> FieldState:
        g = grid or profile.grid
        if self.recipe == "custom":
            if self.custom_u is None or self.custom_v is None:
                raise ValueError("custom recipe needs custom_u and custom_v")
            return FieldState(self.custom_u.astype(complex),
                              self.custom_v.astype(complex), 0.0, profile.params, g)
        pts = g.x if g.ndim == 1 else g.radius()   # signed coord in 1D, radius otherwise
        if self.recipe in ("wave", "amplified"):
            if g is profile.grid:
                P, Q = profile.P, profile.Q
            else:
                P = radial_profile_interpolator(profile.grid, profile.P)(pts)
                Q = radial_profile_interpolator(profile.grid, profile.Q)(pts)
            fac = 1.0 + self.eps if self.recipe == "amplified" else 1.0
            u, v = fac * P, fac * Q
        elif self.recipe == "dilated":
            lam = self.lam
            n = profile.params.n
            Pf = radial_profile_interpolator(profile.grid, profile.P)
            Qf = radial_profile_interpolator(profile.grid, profile.Q)
            u = lam ** (n / 2.0) * Pf(lam * pts)
            v = lam ** (n / 2.0) * Qf(lam * pts)
        else:
            raise ValueError(f"unknown recipe {self.recipe!r}")
        return FieldState(u.astype(complex), v.astype(complex), 0.0, profile.params, g)

    def describe(self):
        d = {"recipe": self.recipe}
        if self.recipe == "dilated":
            d["lam"] = self.lam
        if self.recipe == "amplified":
            d["eps"] = self.eps
        return d


@dataclass
class EvolutionTrace:
    times: list = field(default_factory=list)
    mass: list = field(default_factory=list)
    energy: list = field(default_factory=list)
    virial: list = field(default_factory=list)
    virial_dd: list = field(default_factory=list)
    max_u: list = field(default_factory=list)
    max_v: list = field(default_factory=list)
    gradnorm: list = field(default_factory=list)
    in_A: list = field(default_factory=list)
    in_B: list = field(default_factory=list)
    blowup_time: float | None = None
    valid: bool = True
    notes: list = field(default_factory=list)

    def record(self, state: FieldState, reference=None):
        g = state.grid
        pr = state.params
        self.times.append(state.t)
        self.mass.append(eval_mass(state.u, state.v, g, pr))
        self.energy.append(eval_energy(state.u, state.v, g, pr))
        virial_ok = (abs(pr.sigma - 3.0) < 1e-12 and abs(pr.mu - 9.0) < 1e-12)
        self.virial.append(virial(state) if virial_ok else np.nan)
        self.virial_dd.append(virial_second_derivative(state)
                              if virial_ok and pr.n in (2, 3) else np.nan)
        self.max_u.append(float(np.max(np.abs(state.u))))
        self.max_v.append(float(np.max(np.abs(state.v))))
        self.gradnorm.append(np.sqrt(g.gradient_sq_norm(state.u)
                                     + g.gradient_sq_norm(state.v)))
        if reference is not None and virial_ok:
            m = ohta_membership(state, reference)
            self.in_A.append(m["in_A"])
            self.in_B.append(m["in_B"])
        else:
            self.in_A.append(False)
            self.in_B.append(False)


BLOWUP_AMP_FACTOR = 1e3
BLOWUP_GRAD_FACTOR = 1e4


def evolve(data, T: float, dt: float, trace_every: int = 10,
           reference: WaveProfile | None = None, profile: WaveProfile | None = None,
           drift_tol: float | None = 1e-6, adaptive: bool = False,
           max_steps: int | None = None) -> EvolutionTrace:
    """Advance initial data to time T, recording a trace every few steps.

    `data` is an InitialData (built against `profile`) or a FieldState.
    Halts early with a blow-up signal when the amplitude grows past 1e3x
    its initial value or the gradient norm past 1e4x.  Mass/energy drift
    beyond drift_tol per unit time marks the trace invalid (a scheme
    failure, distinct from blow-up); the check is suspended once the
    amplitude has left the perturbative regime in adaptive (blow-up) runs.
    """
    if T <= 0 or dt <= 0:
        raise ValueError("T and dt must be positive")
    if isinstance(data, InitialData):
        if profile is None:
            raise ValueError("an InitialData recipe needs the anchoring profile")
        state = data.build(profile)
    else:
        state = data.copy()
    trace = EvolutionTrace()
    trace.record(state, reference)
    amp0 = max(trace.max_u[0], trace.max_v[0], 1e-300)
    grad0 = max(trace.gradnorm[0], 1e-300)
    M0, E0 = trace.mass[0], trace.energy[0]
    amp_gate = 2.0 * amp0
    nsteps = int(np.ceil(T / dt)) if max_steps is None else max_steps
    k = 0
    while state.t < T - 1e-12 * T and k < nsteps:
        state = step(state, dt)
        k += 1
        amp = max(np.max(np.abs(state.u)), np.max(np.abs(state.v)))
        if adaptive and amp > amp_gate:
            dt *= 0.5
            amp_gate *= 2.0
        if amp > BLOWUP_AMP_FACTOR * amp0:
            trace.record(state, reference)
            trace.blowup_time = state.t
            trace.notes.append(f"amplitude passed {BLOWUP_AMP_FACTOR:g} x initial")
            break
        if k % trace_every == 0 or state.t >= T - 1e-12 * T:
            trace.record(state, reference)
            if trace.gradnorm[-1] > BLOWUP_GRAD_FACTOR * grad0:
                trace.blowup_time = state.t
                trace.notes.append(f"gradient norm passed {BLOWUP_GRAD_FACTOR:g} x initial")
                break
            perturbative = amp < 30.0 * amp0
            if drift_tol is not None and state.t > 0 and (perturbative or not adaptive):
                dm = abs(trace.mass[-1] - M0) / max(abs(M0), 1e-300) / state.t
                de = abs(trace.energy[-1] - E0) / max(abs(E0), 1e-300) / state.t
                if max(dm, de) > drift_tol:
                    trace.valid = False
                    trace.notes.append(
                        f"conservation drift {max(dm, de):.2e}/unit time exceeds "
                        f"{drift_tol:g} at t={state.t:.4g}")
                    break
    # boundary-mass guard: the |x|^2 weight is meaningless after wrap-around
    rad = state.grid.radius()
    shell = rad > 0.9 * state.grid.L
    dens = np.abs(state.u) ** 2 + 3.0 * state.params.sigma * np.abs(state.v) ** 2
    outer = state.grid.integrate(np.where(shell, dens, 0.0))
    total = state.grid.integrate(dens)
    if total > 0 and outer / total > 1e-8:
        trace.notes.append(f"boundary mass fraction {outer/total:.2e}; "
                           "virial diagnostics unreliable")
    return trace


@dataclass
class ExperimentReport:
    recipe: dict
    params: ModelParams
    precheck_16E_8M: float | None
    t_star: float | None
    t_star_refined: float | None
    parabola: dict | None
    distance_H1: float
    concave: bool | None
    inconclusive: bool
    trace: EvolutionTrace

    def as_dict(self):
        return {
            "recipe": self.recipe,
            "params": {"n": self.params.n, "omega": self.params.omega,
                       "mu": self.params.mu, "sigma": self.params.sigma},
            "precheck_16E_minus_8M": self.precheck_16E_8M,
            "t_star": self.t_star,
            "t_star_refined": self.t_star_refined,
            "parabola": self.parabola,
            "distance_H1": self.distance_H1,
            "concave": self.concave,
            "inconclusive": self.inconclusive,
            "notes": self.trace.notes,
        }


def h1_distance(state: FieldState, profile: WaveProfile) -> float:
    g = state.grid
    du = state.u - profile.P
    dv = state.v - profile.Q
    return float(np.sqrt(g.gradient_sq_norm(du) + g.integrate(np.abs(du) ** 2)
                         + g.gradient_sq_norm(dv) + g.integrate(np.abs(dv) ** 2)))


def blowup_experiment(profile: WaveProfile, recipe: InitialData | None = None,
                      budget_T: float = 10.0, dt: float = 2e-3,
                      trace_every: int = 5, confirm: bool = True) -> ExperimentReport:
    """Drive a slightly-perturbed wave to collapse and report diagnostics.

    Default recipes follow the instability constructions: amplification
    (1+eps)(P,Q) with eps = 0.01 in n = 2, dilation (P^lam, Q^lam) with
    lam = 1.1 in n = 3.  The n = 2 sign condition 16E - 8M < 0 is checked
    on the initial data before evolving.  dt halves whenever the amplitude
    doubles; the blow-up time is confirmed against a dt/2 rerun.  A budget
    exhausted without collapse or dispersal yields an inconclusive report.
    """
    pr = profile.params
    _require_virial_params(pr, "the blow-up machinery")
    if pr.n not in (2, 3):
        raise UnsupportedParametersError("blow-up experiments run in n = 2 or 3")
    if recipe is None:
        recipe = (InitialData("amplified", eps=0.01) if pr.n == 2
                  else InitialData("dilated", lam=1.1))
    state0 = recipe.build(profile)
    g = state0.grid
    dist = h1_distance(state0, profile)
    precheck = None
    if pr.n == 2:
        E0 = eval_energy(state0.u, state0.v, g, pr)
        M0 = eval_mass(state0.u, state0.v, g, pr)
        precheck = 16.0 * E0 - 8.0 * M0
        if precheck >= 0:
            warnings.warn(f"16E - 8M = {precheck:.3e} is not negative; "
                          "no blow-up guarantee for this data", stacklevel=2)
    trace = evolve(state0, budget_T, dt, trace_every=trace_every,
                   reference=profile, adaptive=True, drift_tol=1e-5)
    t_star = trace.blowup_time
    t_ref = None
    if t_star is not None and confirm:
        trace2 = evolve(state0, budget_T, dt / 2.0, trace_every=trace_every * 2,
                        reference=profile, adaptive=True, drift_tol=1e-5)
        t_ref = trace2.blowup_time
    parab = None
    concave = None
    vir = np.array(trace.virial)
    tms = np.array(trace.times)
    if np.isfinite(vir).all() and len(vir) >= 4:
        vdd = np.array(trace.virial_dd)
        concave = bool(np.all(vdd[np.isfinite(vdd)] < 0))
        v0 = vir[0]
        vp0 = (vir[1] - vir[0]) / (tms[1] - tms[0]) if len(vir) > 1 else 0.0
        vddc = float(vdd[0])
        tz = None
        if vddc < 0:
            disc = vp0 ** 2 - 2.0 * vddc * v0
            tz = (-vp0 - np.sqrt(disc)) / vddc if disc >= 0 else None
        parab = {"V0": float(v0), "Vp0": float(vp0), "Vdd": vddc,
                 "t_zero": float(tz) if tz is not None else None}
    inconclusive = t_star is None
    return ExperimentReport(
        recipe=recipe.describe(), params=pr, precheck_16E_8M=precheck,
        t_star=t_star, t_star_refined=t_ref, parabola=parab,
        distance_H1=dist, concave=concave, inconclusive=inconclusive, trace=trace,
    )
