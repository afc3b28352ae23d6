"""Model parameters for the third-harmonic-generation NLS system.

The system couples a fundamental field u with its third harmonic v:

    i u_t     + Lap u -  u  + (|u|^2/9 + 2|v|^2) u + conj(u)^2 v / 3 = 0
    i s v_t   + Lap v - mu v + (9|v|^2 + 2|u|^2) v + u^3 / 9          = 0

with mass parameter mu > 0 and time-scale parameter sigma > 0.  Standing
waves (e^{i w t} P, e^{3 i w t} Q) solve the elliptic system

    -Lap P + (w+1) P      = P^3/9 + 2 Q^2 P + P^2 Q / 3
    -Lap Q + (mu+3 s w) Q = 9 Q^3 + 2 P^2 Q + P^3 / 9

whose linear coefficients alpha = w+1 and beta = mu + 3*sigma*w must both
be positive for localized solutions to exist; localized waves only exist
in spatial dimension n = 1, 2, 3 (a Pohozaev-identity obstruction kills
n >= 4).
"""

from __future__ import annotations

from dataclasses import dataclass


class ParameterError(ValueError):
    """Invalid model parameters."""


@dataclass(frozen=True)
class ModelParams:
    """Physical parameters (n, omega, mu, sigma) and derived coefficients."""

    n: int
    omega: float
    mu: float
    sigma: float

    def __post_init__(self):
        if self.n not in (1, 2, 3):
            raise ParameterError(
                f"n={self.n}: localized waves exist only for n in {{1,2,3}} "
                "(Pohozaev identities force nonexistence for n >= 4)"
            )
        if self.mu <= 0 or self.sigma <= 0:
            raise ParameterError(f"mu={self.mu}, sigma={self.sigma}: both must be > 0")
        lower = max(-1.0, -self.mu / (3.0 * self.sigma))
        if self.omega <= lower:
            raise ParameterError(
                f"omega={self.omega} violates omega > max(-1, -mu/(3 sigma)) = {lower:g} "
                "(equivalently alpha > 0 and beta > 0)"
            )

    @property
    def alpha(self) -> float:
        return self.omega + 1.0

    @property
    def beta(self) -> float:
        return self.mu + 3.0 * self.sigma * self.omega

    def replace(self, **kw) -> "ModelParams":
        d = dict(n=self.n, omega=self.omega, mu=self.mu, sigma=self.sigma)
        d.update(kw)
        return ModelParams(**d)
