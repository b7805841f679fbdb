"""Surrogate regressors over the unit box.

Two families: a Gaussian-process regressor with a squared-exponential kernel
(gives predictive uncertainty) and a cubic radial-basis interpolator with a
linear tail (exact at its data, no uncertainty). Both follow the sklearn
estimator protocol so they compose with the usual tooling.

Callers are expected to keep duplicate rows out of the training set; points
closer than about 1e-10 make the kernel systems singular.
"""

from __future__ import annotations

import numpy as np
from scipy.linalg import LinAlgError, cho_factor, cho_solve, solve_triangular
from scipy.optimize import minimize
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.utils.validation import check_array, check_is_fitted, check_X_y

from .exceptions import TrainingError
from .rng import RngStream

_LOG_AMP_BOUNDS = (np.log(1e-2), np.log(1e2))
_LOG_LEN_BOUNDS = (np.log(1e-2), np.log(1e1))
_PENALTY = 1e25


def _as_rng(random_state) -> RngStream:
    if isinstance(random_state, RngStream):
        return random_state
    return RngStream(0 if random_state is None else int(random_state))


class GprRegressor(RegressorMixin, BaseEstimator):
    """Gaussian-process regression with a squared-exponential kernel.

    Hyperparameters (signal amplitude and length scale, shared across
    dimensions by default or one per dimension) are chosen by maximizing the
    log marginal likelihood with a multi-start bounded quasi-Newton search.
    Targets are standardized internally. The Cholesky factorization gets a
    diagonal jitter that starts at ``jitter`` and is escalated a hundredfold
    at a time up to 1e-6 before fitting is declared failed.

    :param length_scale_mode: "shared" or "per_dim".
    :param n_starts: number of optimizer starts, at least 5 by default.
    :param jitter: initial diagonal regularization.
    :param random_state: seed or RngStream driving the extra starts.
    """

    def __init__(self, length_scale_mode="shared", n_starts=5, jitter=1e-10,
                 random_state=None):
        self.length_scale_mode = length_scale_mode
        self.n_starts = n_starts
        self.jitter = jitter
        self.random_state = random_state

    # -- kernel helpers ----------------------------------------------------

    def _sq_dists(self, X):
        # per-dimension squared differences, shape (d, n, n)
        return (X[:, None, :] - X[None, :, :]) ** 2

    def _corr(self, sq_dists, ell):
        # sq_dists: (d, n, m) transposed view; ell: (k,) with k in {1, d}
        scaled = sq_dists / (ell[:, None, None] ** 2)
        return np.exp(-0.5 * scaled.sum(axis=0))

    def _theta_to_params(self, theta):
        amp = np.exp(theta[0])
        ell = np.exp(theta[1:])
        return amp, ell

    def _lml_and_grad(self, theta, d2, y, jitter):
        """Negative LML and gradient; penalty value when the factorization fails."""
        amp, ell = self._theta_to_params(theta)
        n = y.size
        scaled = d2 / (ell[:, None, None] ** 2)
        corr = np.exp(-0.5 * scaled.sum(axis=0))
        k_se = amp**2 * corr
        k = k_se + jitter * np.eye(n)
        try:
            factor = cho_factor(k, lower=True, check_finite=False)
        except LinAlgError:
            return _PENALTY, np.zeros_like(theta)
        alpha = cho_solve(factor, y, check_finite=False)
        lml = (-0.5 * float(y @ alpha)
               - float(np.log(np.diag(factor[0])).sum())
               - 0.5 * n * np.log(2.0 * np.pi))
        k_inv = cho_solve(factor, np.eye(n), check_finite=False)
        outer = np.outer(alpha, alpha) - k_inv
        grad = np.empty_like(theta)
        grad[0] = 0.5 * float(np.sum(outer * (2.0 * k_se)))
        if ell.size == 1:
            grad[1] = 0.5 * float(np.sum(outer * (k_se * scaled.sum(axis=0))))
        else:
            for j in range(ell.size):
                grad[1 + j] = 0.5 * float(np.sum(outer * (k_se * scaled[j])))
        return -lml, -grad

    # -- estimator protocol ------------------------------------------------

    def fit(self, X, y):
        X, y = check_X_y(X, y, y_numeric=True)
        if X.shape[0] < 2:
            raise ValueError("need at least two training points")
        if self.length_scale_mode not in ("shared", "per_dim"):
            raise ValueError(f"unknown length_scale_mode {self.length_scale_mode!r}")
        if self.n_starts < 1:
            raise ValueError("n_starts must be >= 1")
        rng = _as_rng(self.random_state)

        self.X_train_ = np.asarray(X, dtype=float)
        y = np.asarray(y, dtype=float)
        self.y_mean_ = float(y.mean())
        y_sd = float(y.std())
        self.y_std_ = y_sd if y_sd > 1e-12 else 1.0
        y_s = (y - self.y_mean_) / self.y_std_

        d = X.shape[1]
        n_ell = d if self.length_scale_mode == "per_dim" else 1
        d2 = np.transpose(self._sq_dists(self.X_train_), (2, 0, 1))  # (d, n, n)
        if n_ell == 1:
            d2_opt = d2.sum(axis=0)[None, :, :]
        else:
            d2_opt = d2

        bounds = [_LOG_AMP_BOUNDS] + [_LOG_LEN_BOUNDS] * n_ell
        lo = np.array([b[0] for b in bounds])
        hi = np.array([b[1] for b in bounds])
        starts = [np.concatenate([[np.log(1.0)], np.full(n_ell, np.log(0.3))])]
        while len(starts) < max(5, int(self.n_starts)):
            starts.append(lo + rng.gen.random(lo.size) * (hi - lo))

        jitter = float(self.jitter)
        last_error = None
        while jitter <= 1e-6 + 1e-30:
            best_theta, best_nll = None, np.inf
            start_log = []
            for theta0 in starts:
                nll0, _ = self._lml_and_grad(theta0, d2_opt, y_s, jitter)
                start_log.append((theta0.copy(), -nll0))
                res = minimize(
                    self._lml_and_grad, theta0, args=(d2_opt, y_s, jitter),
                    method="L-BFGS-B", jac=True, bounds=bounds,
                    options={"maxiter": 60},
                )
                if res.fun < best_nll:
                    best_nll, best_theta = res.fun, res.x
            if best_theta is None or best_nll >= _PENALTY:
                last_error = "no optimizer start produced a usable factorization"
                jitter *= 100.0
                continue
            amp, ell = self._theta_to_params(best_theta)
            k = amp**2 * self._corr(d2_opt, ell) + jitter * np.eye(X.shape[0])
            try:
                factor = cho_factor(k, lower=True, check_finite=False)
            except LinAlgError:
                last_error = "final factorization failed"
                jitter *= 100.0
                continue
            self.signal_amplitude_ = float(amp)
            self.length_scale_ = ell.copy()
            self.theta_ = best_theta.copy()
            self.jitter_ = jitter
            self.optimizer_starts_ = start_log
            self._chol_ = factor[0]
            self.alpha_ = cho_solve(factor, y_s, check_finite=False)
            self._y_s_ = y_s
            self._d2_opt_ = d2_opt
            return self
        raise TrainingError(f"GP fit failed up to jitter 1e-6: {last_error}")

    def log_marginal_likelihood(self, theta=None) -> float:
        """LML of the standardized targets at ``theta`` (default: fitted value)."""
        check_is_fitted(self, "alpha_")
        if theta is None:
            theta = self.theta_
        nll, _ = self._lml_and_grad(np.asarray(theta, float), self._d2_opt_,
                                    self._y_s_, self.jitter_)
        return -nll

    def predict(self, X, return_std: bool = False):
        check_is_fitted(self, "alpha_")
        X = check_array(X)
        diff2 = (X[:, None, :] - self.X_train_[None, :, :]) ** 2  # (m, n, d)
        if self.length_scale_.size == 1:
            scaled = diff2.sum(axis=2) / self.length_scale_[0] ** 2
        else:
            scaled = (diff2 / self.length_scale_[None, None, :] ** 2).sum(axis=2)
        k_star = self.signal_amplitude_**2 * np.exp(-0.5 * scaled)
        mean = k_star @ self.alpha_ * self.y_std_ + self.y_mean_
        if not return_std:
            return mean
        v = solve_triangular(self._chol_, k_star.T, lower=True, check_finite=False)
        var = self.signal_amplitude_**2 + self.jitter_ - np.sum(v * v, axis=0)
        std = np.sqrt(np.clip(var, 0.0, None)) * self.y_std_
        return mean, std


class RbfInterpolator(RegressorMixin, BaseEstimator):
    """Cubic radial-basis interpolation with a linear polynomial tail.

    Solves the standard saddle-point system, so the fitted surface passes
    through every training point and the radial weights are orthogonal to
    constants and to each coordinate. Linear targets are reproduced exactly
    by the tail. ``predict`` with ``return_std=True`` reports zero spread:
    an interpolant carries no uncertainty estimate.
    """

    def fit(self, X, y):
        X, y = check_X_y(X, y, y_numeric=True)
        n, d = X.shape
        if n < d + 2:
            raise ValueError(f"need at least d+2={d + 2} points, got {n}")
        self.X_train_ = np.asarray(X, dtype=float)
        y = np.asarray(y, dtype=float)

        r = np.sqrt(np.maximum(((X[:, None, :] - X[None, :, :]) ** 2).sum(axis=2), 0.0))
        phi = r**3
        p = np.hstack([np.ones((n, 1)), X])
        a = np.zeros((n + d + 1, n + d + 1))
        a[:n, :n] = phi
        a[:n, n:] = p
        a[n:, :n] = p.T
        rhs = np.concatenate([y, np.zeros(d + 1)])
        try:
            sol = np.linalg.solve(a, rhs)
        except np.linalg.LinAlgError as exc:
            raise TrainingError(f"radial system is singular: {exc}") from exc
        residual = float(np.max(np.abs(a @ sol - rhs)))
        scale = max(1.0, float(np.max(np.abs(y))))
        if not np.all(np.isfinite(sol)) or residual > 1e-8 * scale:
            raise TrainingError(
                f"radial system too ill-conditioned (residual {residual:.3e})")
        self.radial_weights_ = sol[:n]
        self.tail_coefficients_ = sol[n:]
        return self

    def predict(self, X, return_std: bool = False):
        check_is_fitted(self, "radial_weights_")
        X = check_array(X)
        r = np.sqrt(np.maximum(
            ((X[:, None, :] - self.X_train_[None, :, :]) ** 2).sum(axis=2), 0.0))
        mean = (r**3) @ self.radial_weights_
        mean = mean + self.tail_coefficients_[0] + X @ self.tail_coefficients_[1:]
        if not return_std:
            return mean
        return mean, np.zeros(X.shape[0])
