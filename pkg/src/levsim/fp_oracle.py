"""Closed-form steady-state phase-space densities and derived quantities.

Particle 2's slow-flow drift is the negative gradient of a potential U and its
noise is isotropic, so its exact stationary density is exp(-U/D) with
D = A_t/4 -- valid for every scenario, including the quartic (ring and
bistable) cases.  Particle 1's density is the adiabatic-transfer
approximation obtained by slaving its quadratures to particle 2's through the
steady coupling response; it is exact only in the limit s >> gamma_g1 *and*
when particle 1's own noise is negligible, and is therefore tagged with its
validity conditions.  Both densities, their moments, the closed-form
variances, phonon populations and the transfer fidelity serve as ground truth
for the Monte Carlo estimators.

All densities have the form

    P(Q, P) = exp(-U(Q, P) / D) / Z
    U = 1/2 c_Q Q^2 + 1/2 c_P P^2 + c_QP Q P + c4 (Q^2 + P^2)^2

parameterized by the four potential coefficients and the diffusion constant.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .params import ScenarioParams

__all__ = [
    "StationaryDensity", "stationary_density_p2", "stationary_density_p1",
    "analytic_variances", "analytic_phonon", "analytic_fidelity", "moment",
    "NonIntegrableDensityError", "DegenerateDensityError", "ValidityError",
    "QuadratureError",
]


class NonIntegrableDensityError(ValueError):
    """The potential does not confine the density (no normalizable steady state)."""


class DegenerateDensityError(ValueError):
    """Zero diffusion: the stationary distribution collapses to a point mass."""


class ValidityError(ValueError):
    """Parameters outside the validity region of an approximate formula."""


class QuadratureError(RuntimeError):
    """Grid quadrature failed to converge to the requested tolerance."""


# ----------------------------------------------------------------------------
# density container
# ----------------------------------------------------------------------------

@dataclass
class StationaryDensity:
    """Gradient-potential stationary density exp(-U/D)/Z on the (Q, P) plane."""

    c_Q: float
    c_P: float
    c_QP: float
    c4: float
    D: float
    particle: int = 2
    validity: tuple = ()
    _norm: float | None = field(default=None, repr=False)
    _u_min: float | None = field(default=None, repr=False)
    _extent: float | None = field(default=None, repr=False)

    def __post_init__(self) -> None:
        if self.D <= 0.0:
            raise DegenerateDensityError(
                "diffusion constant D = A_t/4 is zero: the stationary "
                "distribution is a point mass (degenerate density)")
        if self.c4 < 0.0:
            raise NonIntegrableDensityError(
                f"quartic coefficient c4 = {self.c4!r} < 0: potential "
                "unbounded below")
        if self.c4 == 0.0:
            if self.c_Q <= 0.0 or self.c_P <= 0.0:
                raise NonIntegrableDensityError(
                    f"quadratic coefficients (c_Q = {self.c_Q!r}, "
                    f"c_P = {self.c_P!r}) must both be positive when there "
                    "is no quartic confinement")
            if self.c_QP * self.c_QP >= self.c_Q * self.c_P:
                raise NonIntegrableDensityError(
                    f"cross coefficient c_QP = {self.c_QP!r} violates "
                    "|c_QP| < sqrt(c_Q c_P): quadratic form not positive "
                    "definite")

    # -- potential and raw weight ------------------------------------------

    def potential(self, q, p):
        """U(Q, P) of the exponent."""
        q = np.asarray(q, dtype=float)
        p = np.asarray(p, dtype=float)
        n = q * q + p * p
        return (0.5 * self.c_Q * q * q + 0.5 * self.c_P * p * p
                + self.c_QP * q * p + self.c4 * n * n)

    def _potential_min(self) -> float:
        """Lower bound on U used to shift the exponent away from overflow."""
        if self._u_min is None:
            candidates = [0.0]
            if self.c4 > 0.0:
                # axis minima of 1/2 c x^2 + c4 x^4 at x^2 = -c/(4 c4)
                for c in (self.c_Q, self.c_P):
                    if c < 0.0:
                        candidates.append(-c * c / (16.0 * self.c4))
                # isotropic ring minimum for the symmetric case
                cbar = 0.5 * (self.c_Q + self.c_P)
                if cbar < 0.0:
                    candidates.append(-cbar * cbar / (16.0 * self.c4))
            # the cross term can only lower the minimum further; pad by its
            # largest possible contribution at the candidate radius
            u_min = min(candidates)
            if self.c_QP != 0.0 and self.c4 > 0.0:
                r2 = max(-min(self.c_Q, self.c_P, 0.0), abs(self.c_QP)) / (
                    4.0 * self.c4)
                u_min -= 0.5 * abs(self.c_QP) * r2
            self._u_min = u_min
        return self._u_min

    def log_weight(self, q, p):
        """log of the unnormalized density, shifted so its maximum is ~0."""
        return -(self.potential(q, p) - self._potential_min()) / self.D

    # -- geometry ----------------------------------------------------------

    def extent(self) -> float:
        """Radius beyond which the density is negligible (< e^-40 of peak)."""
        if self._extent is None:
            target = 40.0
            directions = [(math.cos(a), math.sin(a))
                          for a in np.linspace(0.0, math.pi, 8, endpoint=False)]
            worst = 0.0
            for (uq, up) in directions:
                # radial potential 1/2 c_u t^2 + c4 t^4 along this ray: start
                # the bracket at its minimum so the weight decays monotonically
                # over [lo, hi] (from the origin it first *grows* toward a
                # ring or well rim)
                c_u = (self.c_Q * uq * uq + self.c_P * up * up
                       + 2.0 * self.c_QP * uq * up)
                if self.c4 > 0.0 and c_u < 0.0:
                    lo = math.sqrt(-c_u / (4.0 * self.c4))
                else:
                    lo = 0.0
                hi = max(1.0, 2.0 * lo)
                while (-self.log_weight(hi * uq, hi * up)) < target:
                    hi *= 2.0
                    if hi > 1e12:
                        raise NonIntegrableDensityError(
                            "density does not decay along direction "
                            f"({uq:.3f}, {up:.3f})")
                for _ in range(60):
                    mid = 0.5 * (lo + hi)
                    if (-self.log_weight(mid * uq, mid * up)) < target:
                        lo = mid
                    else:
                        hi = mid
                worst = max(worst, hi)
            self._extent = 1.1 * worst
        return self._extent

    def is_ring(self) -> bool:
        """True when the density peaks on a circle rather than at points."""
        return (self.c4 > 0.0 and self.c_QP == 0.0
                and self.c_Q == self.c_P and self.c_Q < 0.0)

    def ring_radius(self) -> float:
        """Peak radius sqrt(-c_Q / (4 c4)) of a ring-shaped density."""
        if not self.is_ring():
            raise ValueError("density does not have ring structure")
        return math.sqrt(-self.c_Q / (4.0 * self.c4))

    def predicted_modes(self) -> dict:
        """Structure of the density maxima implied by the potential.

        Returns {"structure": "point" | "wells" | "ring", "count": int or
        None} -- a ring is a continuous maximum set, so its count is None.
        """
        if self.is_ring():
            return {"structure": "ring", "count": None}
        if self.c4 == 0.0:
            return {"structure": "point", "count": 1}
        # principal-axis quadratic coefficients
        m = np.array([[self.c_Q, self.c_QP], [self.c_QP, self.c_P]])
        eigs = np.linalg.eigvalsh(m)
        if eigs[0] >= 0.0:
            return {"structure": "point", "count": 1}
        return {"structure": "wells", "count": 2}

    # -- normalization and moments -----------------------------------------

    def _grid(self, n: int):
        half = self.extent()
        edges = np.linspace(-half, half, n + 1)
        centers = 0.5 * (edges[:-1] + edges[1:])
        cell = (edges[1] - edges[0]) ** 2
        qg, pg = np.meshgrid(centers, centers, indexing="ij")
        return qg, pg, cell

    def _raw_integral(self, func, n: int) -> float:
        qg, pg, cell = self._grid(n)
        w = np.exp(self.log_weight(qg, pg))
        return float(np.sum(func(qg, pg) * w) * cell)

    def normalization(self, rtol: float = 1e-6) -> float:
        """Normalization integral of the shifted weight, to ``rtol`` relative."""
        if self._norm is None:
            one = lambda q, p: 1.0
            n = 512
            prev = self._raw_integral(one, n)
            for _ in range(3):
                n *= 2
                cur = self._raw_integral(one, n)
                if abs(cur - prev) <= rtol * abs(cur):
                    self._norm = cur
                    return self._norm
                prev = cur
            raise QuadratureError(
                f"normalization quadrature did not converge to {rtol} "
                f"(last values {prev!r}, grid {n})")
        return self._norm

    def density(self, q, p):
        """Normalized probability density at (Q, P); broadcasts over arrays."""
        return np.exp(self.log_weight(q, p)) / self.normalization()

    def moment(self, observable, rtol: float = 1e-6) -> float:
        """Expectation of ``observable(Q, P)`` under the density.

        Midpoint-grid quadrature checked by doubling the resolution
        (values at n and 2n must agree to ``rtol`` relative, measured
        against the mean absolute observable as scale).
        """
        z = self.normalization()
        n = 512
        prev = self._raw_integral(observable, n) / z
        scale = abs(self._raw_integral(
            lambda q, p: np.abs(np.asarray(observable(q, p), dtype=float)),
            n)) / z
        for _ in range(3):
            n *= 2
            cur = self._raw_integral(observable, n) / z
            # the 1e-6*scale floor lets symmetry-zero moments converge
            if abs(cur - prev) <= rtol * max(abs(cur), abs(prev), 1e-6 * scale):
                return cur
            prev = cur
        raise QuadratureError(
            f"moment quadrature did not converge to {rtol} "
            f"(last values {prev!r}, grid {n})")

    def covariance(self) -> np.ndarray:
        """2x2 covariance matrix (exact for Gaussian, quadrature otherwise)."""
        if self.c4 == 0.0:
            m = np.array([[self.c_Q, self.c_QP], [self.c_QP, self.c_P]])
            return self.D * np.linalg.inv(m)
        var_q = self.moment(lambda q, p: q * q)
        var_p = self.moment(lambda q, p: p * p)
        cov = self.moment(lambda q, p: q * p)
        return np.array([[var_q, cov], [cov, var_p]])

    def default_bounds(self) -> tuple:
        """((Q_lo, Q_hi), (P_lo, P_hi)) for histogram grids.

        Rings use +-1.5 peak radius; everything else +-6 standard
        deviations per axis.
        """
        if self.is_ring():
            half = 1.5 * self.ring_radius()
            return ((-half, half), (-half, half))
        cov = self.covariance()
        hq = 6.0 * math.sqrt(cov[0, 0])
        hp = 6.0 * math.sqrt(cov[1, 1])
        return ((-hq, hq), (-hp, hp))

    def cell_masses(self, q_edges, p_edges, subdiv: int = 5) -> np.ndarray:
        """Integrals of the density over the cells of a rectangular grid.

        Each cell is subdivided ``subdiv`` x ``subdiv`` for the midpoint rule
        so that features narrower than one cell (e.g. a thin ring) are
        captured correctly.
        """
        q_edges = np.asarray(q_edges, dtype=float)
        p_edges = np.asarray(p_edges, dtype=float)
        nq, np_ = q_edges.size - 1, p_edges.size - 1
        # fine midpoint grid: subdiv points per cell along each axis
        def fine_centers(edges):
            widths = np.diff(edges)
            offs = (np.arange(subdiv) + 0.5) / subdiv
            return (edges[:-1, None] + widths[:, None] * offs[None, :]).ravel()
        qf = fine_centers(q_edges)
        pf = fine_centers(p_edges)
        qg, pg = np.meshgrid(qf, pf, indexing="ij")
        w = self.density(qg, pg)
        w = w.reshape(nq, subdiv, np_, subdiv).mean(axis=(1, 3))
        areas = np.outer(np.diff(q_edges), np.diff(p_edges))
        return w * areas


# ----------------------------------------------------------------------------
# spec-level constructors
# ----------------------------------------------------------------------------

def stationary_density_p2(sp: ScenarioParams) -> StationaryDensity:
    """Exact stationary density of particle 2 (gradient drift, isotropic noise)."""
    if sp.D_t <= 0.0:
        raise DegenerateDensityError(
            "A_t + D_p = 0: no diffusion, the stationary distribution "
            "degenerates to a point mass")
    return StationaryDensity(
        c_Q=sp.gamma_g2 * (1.0 - sp.r) - sp.gamma_a,
        c_P=sp.gamma_g2 * (1.0 + sp.r) - sp.gamma_a,
        c_QP=0.0,
        c4=1.5 * sp.gamma_f,
        D=sp.D_t / 4.0,
        particle=2,
        validity=("exact stationary solution of the particle-2 slow flow",),
    )


def stationary_density_p1(sp: ScenarioParams) -> StationaryDensity:
    """Approximate stationary density of particle 1 (adiabatic transfer).

    Obtained by slaving particle 1's quadratures to particle 2 through the
    steady response of its damped rotation at rate s, which maps particle 2's
    density through a scaled rotation.  Valid for s >> gamma_g1; requires
    s > gamma_g1.  The slaving step neglects particle 1's own noise and its
    response to the off-resonant part of the drive spectrum, each of which
    adds about A_t/(4 gamma_g1) of isotropic variance to the true steady
    state -- the documented accuracy limit of this oracle.
    """
    if sp.s <= sp.gamma_g1:
        raise ValidityError(
            f"particle-1 density requires s > gamma_g1 "
            f"(got s = {sp.s!r}, gamma_g1 = {sp.gamma_g1!r})")
    p2 = stationary_density_p2(sp)
    beta = (sp.gamma_g1 / sp.s) ** 2
    return StationaryDensity(
        c_Q=p2.c_Q + beta * p2.c_P,
        c_P=p2.c_P + beta * p2.c_Q,
        c_QP=(sp.gamma_g1 / sp.s) * (p2.c_P - p2.c_Q),
        c4=p2.c4 * (1.0 + beta) ** 2,
        D=p2.D,
        particle=1,
        validity=(
            "approximate: adiabatic-transfer limit, s >> gamma_g1",
            "neglects particle-1 recoil noise (~A_t/(4 gamma_g1) per quadrature)",
        ),
    )


# ----------------------------------------------------------------------------
# closed-form scalars
# ----------------------------------------------------------------------------

def _require_linear(sp: ScenarioParams, what: str) -> None:
    if sp.gamma_f != 0.0 or sp.gamma_a != 0.0:
        raise ValidityError(
            f"{what} requires the linear scenario (gamma_a = gamma_f = 0); "
            f"got gamma_a = {sp.gamma_a!r}, gamma_f = {sp.gamma_f!r}")
    if sp.gamma_g2 <= 0.0:
        raise ValidityError(f"{what} requires gamma_g2 > 0, got {sp.gamma_g2!r}")
    if abs(sp.r) >= 1.0:
        raise NonIntegrableDensityError(
            f"|r| = {abs(sp.r)!r} >= 1: parametric drive exceeds damping, "
            "no stationary state")


def analytic_variances(sp: ScenarioParams) -> tuple:
    """Closed-form stationary variances (var_Q2, var_P2, var_Q1, var_P1).

    Particle 2's pair is exact; particle 1's pair is the adiabatic-transfer
    closed form

        var_Q1 = s^2 (s^2 var_Q2 + g1^2 var_P2) / (g1^2 + s^2)^2
        var_P1 = s^2 (g1^2 var_Q2 + s^2 var_P2) / (g1^2 + s^2)^2

    (g1 = gamma_g1), the full expressions rather than their s >> gamma_g
    limits.
    """
    _require_linear(sp, "analytic_variances")
    var_q2 = sp.D_t / (4.0 * sp.gamma_g2 * (1.0 - sp.r))
    var_p2 = sp.D_t / (4.0 * sp.gamma_g2 * (1.0 + sp.r))
    g1 = sp.gamma_g1
    denom = (g1 * g1 + sp.s * sp.s) ** 2
    var_q1 = sp.s * sp.s * (sp.s * sp.s * var_q2 + g1 * g1 * var_p2) / denom
    var_p1 = sp.s * sp.s * (g1 * g1 * var_q2 + sp.s * sp.s * var_p2) / denom
    return (var_q2, var_p2, var_q1, var_p1)


def analytic_phonon(sp: ScenarioParams) -> tuple:
    """Steady-state phonon populations (N2, N1), N = <Q^2 + P^2>.

    N2 = (gamma_a - gamma_g2) / (6 gamma_f) is the ring radius squared;
    N1 = N2 s^2 / (gamma_g1^2 + s^2) is the transferred population.
    """
    if sp.gamma_f <= 0.0:
        raise ValidityError(
            f"phonon formulas require gamma_f > 0, got {sp.gamma_f!r}")
    if sp.gamma_a <= sp.gamma_g2:
        raise ValidityError(
            f"phonon formulas require gamma_a > gamma_g2 (ring regime); "
            f"got gamma_a = {sp.gamma_a!r}, gamma_g2 = {sp.gamma_g2!r}")
    n2 = (sp.gamma_a - sp.gamma_g2) / (6.0 * sp.gamma_f)
    n1 = n2 * sp.s * sp.s / (sp.gamma_g1 ** 2 + sp.s * sp.s)
    return (n2, n1)


def analytic_fidelity(sp: ScenarioParams) -> float:
    """Closed-form transfer fidelity between the two Gaussian densities.

    F = integral(P1 P2) / integral(P2^2) = 2 sqrt(det S2) / sqrt(det(S1+S2))
    with S_j the 2x2 covariance of particle j's closed-form density
    (particle 1's includes its QP cross term).
    """
    _require_linear(sp, "analytic_fidelity")
    p2 = stationary_density_p2(sp)
    p1 = stationary_density_p1(sp)
    s2 = p2.covariance()
    s1 = p1.covariance()
    det2 = float(np.linalg.det(s2))
    det12 = float(np.linalg.det(s1 + s2))
    return 2.0 * math.sqrt(det2) / math.sqrt(det12)


def moment(density: StationaryDensity, observable, rtol: float = 1e-6) -> float:
    """Expectation of ``observable(Q, P)`` under ``density`` (module-level form)."""
    return density.moment(observable, rtol=rtol)
