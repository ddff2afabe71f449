"""Hidden-state smoothing of short multi-year observation series.

Per-year empirical tables are noisy; to pool them into one
year-independent estimate, the sequence of yearly vectors is treated as
the observation sequence of a hidden-state model with Gaussian
emissions, fit by Baum-Welch expectation-maximization.  The smoothed
estimate is the stationary emission mixture: the emission means
weighted by the stationary distribution of the fitted transition
matrix.  Because every emission mean is a responsibility-weighted
average of the yearly vectors, the smoothed vector is always a convex
combination of the observed years.

The fit is deliberately conservative: it is seeded, capped in
iterations, and reports failure instead of returning a questionable
estimate, letting the caller fall back to the arithmetic mean.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

_VARIANCE_FLOOR = 1e-12


@dataclass(frozen=True)
class HmmConfig:
    hidden_states: int = 2
    max_iterations: int = 200
    seed: int = 0
    tolerance: float = 1e-8
    epsilon: float = 1e-6


def _log_densities(series: np.ndarray, means: np.ndarray, variances: np.ndarray) -> np.ndarray:
    """Log N(y_t; mu_k, var_k I) for all t, k; shape (T, K)."""
    t, d = series.shape
    diffs = series[:, None, :] - means[None, :, :]
    sq = np.sum(diffs * diffs, axis=2)
    return -0.5 * (d * np.log(2.0 * np.pi * variances)[None, :] + sq / variances[None, :])


def _stationary(transition: np.ndarray) -> np.ndarray:
    """Stationary distribution of a row-stochastic matrix."""
    k = transition.shape[0]
    a = np.vstack([transition.T - np.eye(k), np.ones((1, k))])
    b = np.zeros(k + 1)
    b[-1] = 1.0
    pi, *_ = np.linalg.lstsq(a, b, rcond=None)
    pi = np.clip(pi, 0.0, None)
    total = pi.sum()
    if total <= 0 or not np.isfinite(total):
        return np.full(k, 1.0 / k)
    return pi / total


class GaussianHMM:
    """Baum-Welch fit of a K-state Gaussian-emission chain to one sequence."""

    def __init__(self, config: HmmConfig):
        self.config = config
        self.means: np.ndarray | None = None
        self.variances: np.ndarray | None = None
        self.transition: np.ndarray | None = None
        self.initial: np.ndarray | None = None
        self.converged = False

    def _initialize(self, series: np.ndarray) -> None:
        t, d = series.shape
        k = self.config.hidden_states
        rng = np.random.default_rng(self.config.seed)
        # spread initial means over the sequence, with a deterministic jitter
        # so identical rows do not start the states at the same point
        positions = np.linspace(0, t - 1, k).round().astype(int)
        spread = series.std(axis=0).mean() + self.config.epsilon
        self.means = series[positions] + rng.normal(0.0, 0.01 * spread, size=(k, d))
        self.variances = np.full(k, max(spread**2, _VARIANCE_FLOOR))
        self.transition = np.full((k, k), 1.0 / k)
        self.initial = np.full(k, 1.0 / k)

    def fit(self, series: np.ndarray) -> bool:
        """Run EM on a (T, d) series; True when the likelihood stabilized."""
        series = np.asarray(series, dtype=float)
        t, _ = series.shape
        k = self.config.hidden_states
        if t < 2 or self.config.max_iterations < 1:
            return False
        self._initialize(series)
        previous_ll = -np.inf
        for _ in range(self.config.max_iterations):
            log_b = _log_densities(series, self.means, self.variances)
            shift = log_b.max(axis=1, keepdims=True)
            b = np.exp(log_b - shift)

            alpha = np.zeros((t, k))
            scales = np.zeros(t)
            alpha[0] = self.initial * b[0]
            scales[0] = alpha[0].sum()
            alpha[0] /= scales[0]
            for step in range(1, t):
                alpha[step] = (alpha[step - 1] @ self.transition) * b[step]
                scales[step] = alpha[step].sum()
                if scales[step] <= 0 or not np.isfinite(scales[step]):
                    return False
                alpha[step] /= scales[step]

            beta = np.ones((t, k))
            for step in range(t - 2, -1, -1):
                beta[step] = self.transition @ (b[step + 1] * beta[step + 1])
                beta[step] /= scales[step + 1]

            gamma = alpha * beta
            gamma /= gamma.sum(axis=1, keepdims=True)

            xi_sum = np.zeros((k, k))
            for step in range(t - 1):
                xi = (
                    alpha[step][:, None]
                    * self.transition
                    * (b[step + 1] * beta[step + 1])[None, :]
                ) / scales[step + 1]
                xi_sum += xi

            occupancy = gamma[:-1].sum(axis=0)
            self.transition = xi_sum / np.maximum(occupancy[:, None], _VARIANCE_FLOOR)
            row_sums = self.transition.sum(axis=1, keepdims=True)
            starved = row_sums[:, 0] <= 0.0
            self.transition[starved] = 1.0 / k  # state owns no mass: stay agnostic
            row_sums[starved] = 1.0
            self.transition /= row_sums
            self.initial = gamma[0]
            weights = gamma.sum(axis=0)
            self.means = (gamma.T @ series) / np.maximum(weights[:, None], _VARIANCE_FLOOR)
            diffs = series[:, None, :] - self.means[None, :, :]
            sq = np.sum(diffs * diffs, axis=2)
            d = series.shape[1]
            self.variances = np.maximum(
                (gamma * sq).sum(axis=0) / np.maximum(weights * d, _VARIANCE_FLOOR),
                _VARIANCE_FLOOR,
            )

            ll = float(np.log(scales).sum() + shift.sum())
            if not np.isfinite(ll):
                return False
            if abs(ll - previous_ll) <= self.config.tolerance * max(1.0, abs(ll)):
                self.converged = True
                break
            previous_ll = ll
        return self.converged

    def stationary_mixture(self) -> np.ndarray:
        pi = _stationary(self.transition)
        return pi @ self.means


def smooth_series(series: np.ndarray, config: HmmConfig) -> tuple[np.ndarray, bool]:
    """Smooth a (T, d) series into one vector.

    Returns ``(vector, ok)``; on a failed or disabled fit the vector is
    the column mean and ``ok`` is False so the caller can apply its own
    fallback policy.
    """
    series = np.asarray(series, dtype=float)
    model = GaussianHMM(config)
    if model.fit(series):
        mixture = model.stationary_mixture()
        if np.all(np.isfinite(mixture)):
            return mixture, True
    return series.mean(axis=0), False
