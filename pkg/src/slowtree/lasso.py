"""Lasso by cyclic coordinate descent with a cross-validated penalty.

Objective on standardized features Z and centered y:
    (1 / 2N) ||y - Z b||^2 + lam ||b||_1
so lam is on the same scale for any N.
"""
import logging
import warnings
from dataclasses import dataclass

import numpy as np

from . import _kernels as K
from .tabular import make_folds

log = logging.getLogger(__name__)

TOL = 1e-8
MAX_SWEEPS = 10_000


class ConvergenceWarning(UserWarning):
    pass


@dataclass(frozen=True)
class LassoModel:
    coef: np.ndarray  # on the standardized scale
    intercept: float
    lam: float
    x_mean: np.ndarray
    x_sd: np.ndarray
    cv_mse: np.ndarray = None
    lambda_grid: np.ndarray = None

    @property
    def raw_coef(self):
        """Coefficients on the original feature scale."""
        sd = np.where(self.x_sd > 0, self.x_sd, 1.0)
        return np.where(self.x_sd > 0, self.coef / sd, 0.0)


def standardize(X):
    X = np.asarray(X, dtype=float)
    mu = X.mean(axis=0)
    sd = X.std(axis=0)
    keep = sd > 1e-12 * np.maximum(1.0, np.abs(mu))
    sd = np.where(keep, sd, 0.0)
    Z = np.where(keep, (X - mu) / np.where(keep, sd, 1.0), 0.0)
    return np.ascontiguousarray(Z), mu, sd


def lambda_max(Z, yc):
    return float(np.max(np.abs(Z.T @ yc)) / Z.shape[0])


def lambda_path(lmax, n=50, ratio=1e-4):
    if lmax <= 0:
        return np.zeros(1)
    return np.geomspace(lmax, ratio * lmax, n)


def coordinate_descent(Z, yc, lam, beta0=None, tol=TOL, max_sweeps=MAX_SWEEPS, record=False):
    """Returns (beta, sweeps, achieved max change, objective history)."""
    if beta0 is None:
        beta0 = np.zeros(Z.shape[1])
    beta, sweeps, delta, hist = K.lasso_cd(Z, np.ascontiguousarray(yc, dtype=float), float(lam),
                                           np.asarray(beta0, dtype=float), tol, max_sweeps, record)
    if delta >= tol:
        warnings.warn(f"lasso did not converge in {sweeps} sweeps at lambda={lam:.4g} "
                      f"(max coefficient change {delta:.3g})", ConvergenceWarning)
    return beta, sweeps, delta, hist


def _path(Z, yc, grid):
    beta = np.zeros(Z.shape[1])
    out = np.empty((len(grid), Z.shape[1]))
    for i, lam in enumerate(grid):  # warm starts down the path
        beta = coordinate_descent(Z, yc, lam, beta)[0]
        out[i] = beta
    return out


def fit_lasso_path(X, y, grid):
    Z, mu, sd = standardize(X)
    yc = np.asarray(y, dtype=float) - np.mean(y)
    return _path(Z, yc, np.asarray(grid, dtype=float)), mu, sd


def _predict(coef, intercept, mu, sd, X):
    sdd = np.where(sd > 0, sd, 1.0)
    Z = np.where(sd > 0, (np.asarray(X, dtype=float) - mu) / sdd, 0.0)
    return intercept + Z @ coef


def fit_lasso(train, lambda_grid=None, folds=None, seed=0):
    """Pick lambda by minimum mean CV MSE (first on ties), refit on all rows.

    With lambda_grid=None a 50-point log grid from lambda_max down to
    1e-4 lambda_max of the full training set is used; folds default to 5.
    """
    train.check_learnable()
    X, y = np.asarray(train.X), np.asarray(train.y)
    Z, mu, sd = standardize(X)
    ybar = float(y.mean())
    yc = y - ybar
    if lambda_grid is None:
        grid = lambda_path(lambda_max(Z, yc))
    else:
        grid = np.asarray(lambda_grid, dtype=float)
        if grid.size == 0 or np.any(grid < 0):
            raise ValueError("lambda grid must be non-empty and nonnegative")
    # solve in decreasing order for warm starts, report in the caller's order
    desc = np.argsort(-grid, kind="stable")
    cv = None
    if grid.size > 1:
        if folds is None:
            folds = make_folds(train.n, min(5, train.n), seed)
        sq = np.zeros(grid.size)
        for tr, va in folds:
            B, m_, s_ = fit_lasso_path(X[tr], y[tr], grid[desc])
            ic = y[tr].mean()
            for j, b in enumerate(B):
                e = y[va] - _predict(b, ic, m_, s_, X[va])
                sq[desc[j]] += np.sum(e * e)
        cv = sq / train.n
        best = int(np.argmin(cv))
    else:
        best = 0
    lam = float(grid[best])
    path = _path(Z, yc, grid[desc][: int(np.flatnonzero(desc == best)[0]) + 1])
    return LassoModel(path[-1], ybar, lam, mu, sd, cv, grid)


def predict_lasso(model, X):
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if X.shape[1] != model.coef.shape[0]:
        raise ValueError(f"expected {model.coef.shape[0]} features, got {X.shape[1]}")
    return _predict(model.coef, model.intercept, model.x_mean, model.x_sd, X)
