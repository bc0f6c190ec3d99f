"""Ensemble statistics, phase-space histograms, and structure detection.

All estimators treat trajectories as the independent unit: pooled point
estimates are accompanied by standard errors computed from the spread of
per-trajectory batch means, which is unbiased even though samples within a
trajectory are strongly correlated in time.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
from scipy import ndimage

from .fp_oracle import StationaryDensity
from .integrator import Ensemble, SimConfig, demodulate_oscillator, run_ensemble
from .params import CouplingCoefficients, InvalidParameterError, ScenarioParams

__all__ = [
    "VarianceReport",
    "PhononReport",
    "CoherenceResult",
    "PhaseSpaceHistogram",
    "WitnessReport",
    "ensemble_variances",
    "phonon_population",
    "second_order_coherence",
    "coherence_decay_rate",
    "histogram2d",
    "fidelity_numeric",
    "distribution_distance",
    "unidirectionality_witness",
    "mode_detect",
    "demodulate_ensemble",
]

# Column layout of ensemble data: (Q1, P1, Q2, P2).
_PARTICLE_COLUMNS = {1: (0, 1), 2: (2, 3)}


def _particle_block(data: np.ndarray, particle: int) -> np.ndarray:
    if particle not in _PARTICLE_COLUMNS:
        raise InvalidParameterError(
            "particle must be 1 or 2, got %r" % (particle,))
    q, p = _PARTICLE_COLUMNS[particle]
    return data[..., (q, p)]


def _batch_se(per_traj: np.ndarray) -> float:
    """Standard error of the mean of independent per-trajectory values."""
    n = per_traj.shape[0]
    if n < 2:
        return float("nan")
    return float(np.std(per_traj, ddof=1) / math.sqrt(n))


# ---------------------------------------------------------------------------
# moments
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class VarianceReport:
    """Pooled quadrature moments of an ensemble with batch-mean errors.

    Arrays of length 4 follow the (Q1, P1, Q2, P2) layout; the two
    covariances are within-particle (Q1 with P1, Q2 with P2).
    """

    mean: np.ndarray
    variance: np.ndarray
    variance_se: np.ndarray
    cov_q1p1: float
    cov_q1p1_se: float
    cov_q2p2: float
    cov_q2p2_se: float
    n_trajectories: int
    n_samples: int

    def variance_of(self, particle: int) -> tuple:
        q, p = _PARTICLE_COLUMNS[particle]
        return (float(self.variance[q]), float(self.variance[p]))


def ensemble_variances(ens: Ensemble) -> VarianceReport:
    """Stationary quadrature variances and covariances of an ensemble.

    Point estimates pool every recorded sample (ddof = 1); standard errors
    come from the spread of per-trajectory means of the same squared
    deviations about the pooled mean.
    """
    data = ens.data
    n_traj, n_rec, _ = data.shape
    n_tot = n_traj * n_rec
    if n_tot < 2:
        raise InvalidParameterError(
            "variance estimation needs at least two samples")
    pooled_mean = data.reshape(-1, 4).mean(axis=0)
    dev = data - pooled_mean
    sq = dev ** 2
    per_traj_var = sq.mean(axis=1)                     # (n_traj, 4)
    corr = n_tot / (n_tot - 1)
    variance = per_traj_var.mean(axis=0) * corr
    variance_se = np.array([
        _batch_se(per_traj_var[:, c]) * corr for c in range(4)])

    per_traj_c1 = (dev[..., 0] * dev[..., 1]).mean(axis=1)
    per_traj_c2 = (dev[..., 2] * dev[..., 3]).mean(axis=1)
    return VarianceReport(
        mean=pooled_mean,
        variance=variance,
        variance_se=variance_se,
        cov_q1p1=float(per_traj_c1.mean() * corr),
        cov_q1p1_se=_batch_se(per_traj_c1) * corr,
        cov_q2p2=float(per_traj_c2.mean() * corr),
        cov_q2p2_se=_batch_se(per_traj_c2) * corr,
        n_trajectories=n_traj,
        n_samples=n_tot,
    )


@dataclass(frozen=True)
class PhononReport:
    """Mean occupation N = <Q^2 + P^2> of one particle."""

    particle: int
    population: float
    population_se: float
    variance: float
    variance_se: float
    n_trajectories: int


def phonon_population(ens: Ensemble, particle: int) -> PhononReport:
    """Occupation N = <Q^2 + P^2> with its fluctuation Var(n)."""
    block = _particle_block(ens.data, particle)
    n = block[..., 0] ** 2 + block[..., 1] ** 2       # (n_traj, n_rec)
    per_traj_mean = n.mean(axis=1)
    pooled = float(n.mean())
    per_traj_var = ((n - pooled) ** 2).mean(axis=1)
    return PhononReport(
        particle=particle,
        population=pooled,
        population_se=_batch_se(per_traj_mean),
        variance=float(per_traj_var.mean()),
        variance_se=_batch_se(per_traj_var),
        n_trajectories=block.shape[0],
    )


# ---------------------------------------------------------------------------
# intensity autocorrelation
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CoherenceResult:
    """Normalized intensity autocorrelation g2(tau) on the recorded grid."""

    particle: int
    taus: np.ndarray
    g2: np.ndarray
    se: np.ndarray
    mean_n: float


def second_order_coherence(ens: Ensemble, particle: int,
                           max_lag: int,
                           window: tuple | None = None) -> CoherenceResult:
    """g2(tau) = <n(t) n(t+tau)> / <n>^2 for n = Q^2 + P^2.

    Lags run over 0 .. max_lag recorded steps.  ``window = (t0, t1)``
    restricts the base times t (and t + tau) to recorded times in that
    interval; by default every recorded sample is used.  The standard error
    of each lag reflects trajectory-to-trajectory spread of the lagged
    product and ignores the (smaller) uncertainty of the normalization.
    """
    block = _particle_block(ens.data, particle)
    n = block[..., 0] ** 2 + block[..., 1] ** 2
    times = ens.times
    if window is not None:
        sel = (times >= window[0]) & (times <= window[1])
        if not np.any(sel):
            raise InvalidParameterError(
                "g2 window %r contains no recorded times" % (window,))
        n = n[:, sel]
        times = times[sel]
    n_traj, n_rec = n.shape
    if max_lag < 0 or max_lag >= n_rec:
        raise InvalidParameterError(
            "max_lag must be in [0, %d), got %d" % (n_rec, max_lag))
    mean_n = float(n.mean())
    if mean_n <= 0.0:
        raise InvalidParameterError(
            "g2 undefined: mean occupation is not positive")
    dt_rec = float(times[1] - times[0]) if n_rec > 1 else 0.0
    lags = np.arange(max_lag + 1)
    g2 = np.empty(max_lag + 1)
    se = np.empty(max_lag + 1)
    for k in lags:
        prod = n[:, : n_rec - k] * n[:, k:]
        per_traj = prod.mean(axis=1) / mean_n ** 2
        g2[k] = per_traj.mean()
        se[k] = _batch_se(per_traj)
    return CoherenceResult(particle=particle, taus=lags * dt_rec,
                           g2=g2, se=se, mean_n=mean_n)


def coherence_decay_rate(result: CoherenceResult,
                         t_max: float | None = None) -> tuple:
    """Decay rate of g2(tau) - 1 assuming exponential relaxation.

    Fits ln(g2 - 1) = ln(a) - rate * tau by weighted least squares over
    lags with tau <= t_max (default: all) whose excess g2 - 1 clears its
    own standard error.  Returns (rate, rate_se).
    """
    tau = result.taus
    excess = result.g2 - 1.0
    keep = excess > np.maximum(result.se, 1e-12)
    keep[0] = excess[0] > 0.0
    if t_max is not None:
        keep &= tau <= t_max
    if np.count_nonzero(keep) < 3:
        raise InvalidParameterError(
            "too few usable lags to fit a decay rate")
    x = tau[keep]
    y = np.log(excess[keep])
    w = (excess[keep] / np.maximum(result.se[keep], 1e-12)) ** 2
    wsum = w.sum()
    xm = (w * x).sum() / wsum
    ym = (w * y).sum() / wsum
    sxx = (w * (x - xm) ** 2).sum()
    slope = (w * (x - xm) * (y - ym)).sum() / sxx
    resid = y - (ym + slope * (x - xm))
    dof = max(np.count_nonzero(keep) - 2, 1)
    slope_se = math.sqrt((w * resid ** 2).sum() / wsum / dof / (sxx / wsum))
    return (-slope, slope_se)


# ---------------------------------------------------------------------------
# phase-space histograms
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PhaseSpaceHistogram:
    """2-D phase-space histogram of one particle.

    ``density`` integrates to (1 - oob_fraction) over the grid:
    sum(density) * cell_area = in-bounds probability, so comparisons
    against normalized references automatically penalize out-of-window
    mass.
    """

    particle: int
    q_edges: np.ndarray
    p_edges: np.ndarray
    counts: np.ndarray
    density: np.ndarray
    n_total: int
    oob_fraction: float

    @property
    def cell_area(self) -> float:
        return float((self.q_edges[1] - self.q_edges[0])
                     * (self.p_edges[1] - self.p_edges[0]))

    @property
    def q_centers(self) -> np.ndarray:
        return 0.5 * (self.q_edges[:-1] + self.q_edges[1:])

    @property
    def p_centers(self) -> np.ndarray:
        return 0.5 * (self.p_edges[:-1] + self.p_edges[1:])

    def cell_probabilities(self) -> np.ndarray:
        return self.counts / self.n_total


def histogram2d(ens_or_data, particle: int, bounds: tuple,
                bins: int = 64) -> PhaseSpaceHistogram:
    """Histogram a particle's (Q, P) samples on a uniform grid.

    ``bounds = (qmin, qmax, pmin, pmax)``; ``ens_or_data`` is an Ensemble
    or any array whose last axis is (Q1, P1, Q2, P2).  Out-of-bounds
    samples are dropped but counted in ``oob_fraction``; it is an error if
    no sample falls inside the window.
    """
    data = ens_or_data.data if isinstance(ens_or_data, Ensemble) else \
        np.asarray(ens_or_data, dtype=float)
    block = _particle_block(data, particle).reshape(-1, 2)
    qmin, qmax, pmin, pmax = (float(v) for v in bounds)
    if not (qmax > qmin and pmax > pmin):
        raise InvalidParameterError(
            "histogram bounds must satisfy qmax > qmin and pmax > pmin")
    q_edges = np.linspace(qmin, qmax, bins + 1)
    p_edges = np.linspace(pmin, pmax, bins + 1)
    counts, _, _ = np.histogram2d(block[:, 0], block[:, 1],
                                  bins=[q_edges, p_edges])
    n_total = block.shape[0]
    n_in = counts.sum()
    if n_in == 0:
        raise InvalidParameterError(
            "no samples fall inside the histogram window %r" % (bounds,))
    cell_area = (q_edges[1] - q_edges[0]) * (p_edges[1] - p_edges[0])
    density = counts / (n_total * cell_area)
    return PhaseSpaceHistogram(
        particle=particle, q_edges=q_edges, p_edges=p_edges,
        counts=counts, density=density, n_total=n_total,
        oob_fraction=float(1.0 - n_in / n_total))


def _require_matching_grids(a: PhaseSpaceHistogram, b) -> None:
    bq = b.q_edges if hasattr(b, "q_edges") else None
    bp = b.p_edges if hasattr(b, "p_edges") else None
    if bq is None or bp is None:
        return
    if (a.q_edges.shape != bq.shape or a.p_edges.shape != bp.shape
            or not np.allclose(a.q_edges, bq) or not np.allclose(a.p_edges, bp)):
        raise InvalidParameterError(
            "histogram grids differ; rebuild both on a shared grid")


def fidelity_numeric(hist1: PhaseSpaceHistogram,
                     hist2: PhaseSpaceHistogram) -> float:
    """Overlap fidelity integral(P1 P2) / integral(P2^2) on a shared grid.

    1 when the first density reproduces the second; the asymmetric
    normalization makes it a transfer measure onto the reference ``hist2``.
    """
    _require_matching_grids(hist1, hist2)
    d1 = hist1.density
    d2 = hist2.density
    denom = float((d2 * d2).sum())
    if denom <= 0.0:
        raise InvalidParameterError(
            "reference histogram is empty; fidelity undefined")
    return float((d1 * d2).sum() / denom)


def distribution_distance(hist: PhaseSpaceHistogram,
                          density: StationaryDensity,
                          subdiv: int = 5) -> float:
    """Total-variation distance between a histogram and a model density.

    ½ sum over cells of |empirical mass − model mass|, with model masses
    cell-averaged on a ``subdiv``-times finer grid so thin ring crests are
    integrated rather than point-sampled.  Mass outside the window counts
    toward the distance on both sides, so generous bounds matter.
    """
    model = density.cell_masses(hist.q_edges, hist.p_edges, subdiv=subdiv)
    emp = hist.cell_probabilities()
    inside = 0.5 * float(np.abs(emp - model).sum())
    # out-of-window mass of each distribution is |emp_out - model_out| / 2
    # at most; attribute it fully, keeping the bound interpretation.
    emp_out = hist.oob_fraction
    model_out = max(0.0, 1.0 - float(model.sum()))
    return inside + 0.5 * abs(emp_out - model_out)


# ---------------------------------------------------------------------------
# unidirectionality witness
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class WitnessReport:
    """Seed-matched response of each particle to the other's perturbation.

    ``response_on_2`` is the largest absolute change of any particle-2
    sample when particle 1's initial state is shifted (zero when nothing
    flows 1 -> 2); ``response_on_1`` is the reverse probe, which stays
    finite when transfer 2 -> 1 is live.  ``rms_scale`` (root mean square
    of the unperturbed particle-2 samples) gives the comparison scale.
    """

    perturbation: float
    response_on_2: float
    response_on_1: float
    rms_scale: float


def unidirectionality_witness(cfg: SimConfig, sp: ScenarioParams,
                              coeffs: CouplingCoefficients | None = None,
                              perturbation: float = 50.0) -> WitnessReport:
    """Probe transfer directionality with seed-matched ensembles.

    Three ensembles share every random draw (offsets are applied after the
    initial-state draw): unperturbed, particle 1 shifted by
    ``perturbation`` in both quadratures, and particle 2 shifted likewise.
    Differences are evaluated sample-by-sample, so any leakage -- however
    transient -- registers.
    """
    base = run_ensemble(cfg, sp, coeffs=coeffs)

    off1 = replace(cfg.initial,
                   offset=(perturbation, perturbation, 0.0, 0.0))
    kick1 = run_ensemble(replace(cfg, initial=off1), sp, coeffs=coeffs)

    off2 = replace(cfg.initial,
                   offset=(0.0, 0.0, perturbation, perturbation))
    kick2 = run_ensemble(replace(cfg, initial=off2), sp, coeffs=coeffs)

    diff_on_2 = np.abs(kick1.data[..., 2:] - base.data[..., 2:]).max()
    diff_on_1 = np.abs(kick2.data[..., :2] - base.data[..., :2]).max()
    rms = float(np.sqrt((base.data[..., 2:] ** 2).mean()))
    return WitnessReport(perturbation=float(perturbation),
                         response_on_2=float(diff_on_2),
                         response_on_1=float(diff_on_1),
                         rms_scale=rms)


# ---------------------------------------------------------------------------
# structure detection
# ---------------------------------------------------------------------------

def mode_detect(hist: PhaseSpaceHistogram, smooth_bins: float = 2.0,
                rel_height: float = 0.1) -> list:
    """Local maxima of a smoothed phase-space histogram.

    Returns a list of (Q, P, height) triples sorted by decreasing height.
    The histogram is Gaussian-smoothed by ``smooth_bins`` cells, and only
    maxima taller than ``rel_height`` times the global peak count.  A
    filled ring reports many crest maxima; a well-separated double well
    reports two; a Gaussian blob one.
    """
    sm = ndimage.gaussian_filter(hist.density, sigma=smooth_bins,
                                 mode="nearest")
    peak = float(sm.max())
    if peak <= 0.0:
        return []
    local_max = (sm == ndimage.maximum_filter(sm, size=3, mode="nearest"))
    local_max &= sm >= rel_height * peak
    labels, n_found = ndimage.label(local_max)
    out = []
    if n_found:
        qc, pc = hist.q_centers, hist.p_centers
        for idx in ndimage.center_of_mass(local_max, labels,
                                          range(1, n_found + 1)):
            qi = int(round(idx[0]))
            pi = int(round(idx[1]))
            out.append((float(qc[qi]), float(pc[pi]), float(sm[qi, pi])))
    out.sort(key=lambda t: -t[2])
    return out


def demodulate_ensemble(ens: Ensemble, omega0: float | None = None) -> Ensemble:
    """Rotating-frame view of an oscillator-coordinate ensemble.

    Convenience for ensembles produced with ``demodulate=False``; uses the
    ensemble's own trap frequency unless ``omega0`` is given.
    """
    w0 = float(omega0) if omega0 is not None else ens.params.omega0
    rotated = demodulate_oscillator(ens.data, ens.times, w0)
    return Ensemble(times=ens.times, data=rotated, config=ens.config,
                    params=ens.params, parameter_hash=ens.parameter_hash)
