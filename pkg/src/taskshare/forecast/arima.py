"""ARIMA(p, d, q) estimation by conditional sum of squares.

The differenced series ``w`` follows

    w[t] = c + sum_i ar[i] * w[t-1-i] + e[t] + sum_j ma[j] * e[t-1-j]

with ``c`` fitted only when ``d == 0``. Residuals are computed conditionally:
the first ``p`` values of ``w`` are taken as given and pre-sample shocks are
zero.
"""

from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np
from scipy import optimize, signal

logger = logging.getLogger(__name__)

MAX_ITER = 500
# order selection skips fits with a root modulus below this
NEAR_UNIT_ROOT = 1.01
_PACF_CLIP = 0.99


class ArimaError(ValueError):
    pass


class SeriesTooShort(ArimaError):
    pass


class ConvergenceError(ArimaError):
    pass


class FitRejected(ArimaError):
    """Fitted polynomial has a root on or inside the unit circle."""


class DegenerateSeriesWarning(UserWarning):
    pass


@dataclass(frozen=True, order=True)
class ArimaOrder:
    p: int
    d: int
    q: int

    def __post_init__(self):
        if min(self.p, self.d, self.q) < 0:
            raise ValueError(f"ARIMA orders must be non-negative, got {tuple(self)}")

    def __iter__(self):
        return iter((self.p, self.d, self.q))

    def __str__(self) -> str:
        return f"{self.p},{self.d},{self.q}"

    @classmethod
    def parse(cls, text: str) -> "ArimaOrder":
        parts = [int(v) for v in text.replace("(", "").replace(")", "").split(",")]
        if len(parts) != 3:
            raise ValueError(f"order must look like 'p,d,q', got {text!r}")
        return cls(*parts)

    @property
    def min_length(self) -> int:
        return 3 * (self.p + self.q + self.d) + 10


DEFAULT_GRID: tuple[ArimaOrder, ...] = tuple(
    ArimaOrder(p, d, q) for d in (0, 1) for p in (0, 1, 2) for q in (0, 1, 2)
)


@dataclass
class ArimaModel:
    order: ArimaOrder
    ar_coeffs: np.ndarray
    ma_coeffs: np.ndarray
    intercept: float
    sigma2: float
    training_window: tuple[int, int]
    css: float = 0.0
    residuals: np.ndarray = field(default_factory=lambda: np.zeros(0), repr=False)
    css_trace: list[float] = field(default_factory=list, repr=False)

    @property
    def n_resid(self) -> int:
        return len(self.residuals)

    @property
    def n_params(self) -> int:
        return self.order.p + self.order.q + 1

    def aic(self) -> float:
        return _aic(self.css, self.n_resid, self.n_params)


def _aic(css: float, n: int, k: int) -> float:
    if css <= 0:
        return -math.inf
    return n * math.log(css / n) + 2 * k


# --- differencing ---------------------------------------------------------------

def difference(x: Sequence[float], d: int) -> np.ndarray:
    return np.diff(np.asarray(x, dtype=float), n=d) if d else np.asarray(x, dtype=float).copy()


def integrate(dx: Sequence[float], d: int, initial: Sequence[float]) -> np.ndarray:
    """Invert :func:`difference` given the first ``d`` values of the original series."""
    y = np.asarray(dx, dtype=float)
    if d == 0:
        return y.copy()
    initial = np.asarray(initial, dtype=float)
    if len(initial) != d:
        raise ValueError(f"need {d} initial values, got {len(initial)}")
    heads = [difference(initial, k)[0] for k in range(d)]
    for k in reversed(range(d)):
        y = np.concatenate(([heads[k]], y)).cumsum()
    return y


# --- polynomial constraints -----------------------------------------------------

def _roots_outside(poly_tail: np.ndarray, sign: float) -> bool:
    """True if ``1 + sign * sum_k poly_tail[k] z^(k+1)`` has all roots outside the unit circle.

    Checked through the companion matrix, whose eigenvalues are the
    reciprocal roots; this stays well conditioned when the last coefficient
    is tiny.
    """
    coefs = -sign * np.asarray(poly_tail, dtype=float)
    k = coefs.size
    if k == 0 or not np.any(coefs):
        return True
    if not np.all(np.isfinite(coefs)):
        return False
    companion = np.zeros((k, k))
    companion[0] = coefs
    companion[1:, :-1] = np.eye(k - 1)
    return bool(np.all(np.abs(np.linalg.eigvals(companion)) < 1.0))


def min_root_modulus(ar: Sequence[float], ma: Sequence[float]) -> float:
    """Smallest root modulus over the AR and MA polynomials (inf if both are empty)."""
    recip = [0.0]
    for coefs in (np.asarray(ar, dtype=float), -np.asarray(ma, dtype=float)):
        k = coefs.size
        if k and np.any(coefs):
            companion = np.zeros((k, k))
            companion[0] = coefs
            companion[1:, :-1] = np.eye(k - 1)
            recip.append(float(np.abs(np.linalg.eigvals(companion)).max()))
    top = max(recip)
    return math.inf if top == 0 else 1.0 / top


def is_stationary(ar: Sequence[float]) -> bool:
    return _roots_outside(np.asarray(ar), -1.0)


def is_invertible(ma: Sequence[float]) -> bool:
    return _roots_outside(np.asarray(ma), 1.0)


def _pacf_to_ar(r: np.ndarray) -> np.ndarray:
    # Durbin-Levinson: partial autocorrelations in (-1, 1) give a stationary AR polynomial
    phi = np.zeros(0)
    for rk in r:
        phi = np.r_[phi - rk * phi[::-1], rk]
    return phi


def _ar_to_pacf(phi: np.ndarray) -> np.ndarray:
    phi = np.asarray(phi, dtype=float).copy()
    r = np.zeros(len(phi))
    for k in range(len(phi) - 1, -1, -1):
        rk = phi[k]
        if abs(rk) >= 1:
            raise ValueError("coefficients are not stationary")
        r[k] = rk
        phi = (phi[:k] + rk * phi[:k][::-1]) / (1.0 - rk * rk)
    return r


def _shrink_to_region(coefs: np.ndarray, ok) -> np.ndarray:
    coefs = np.asarray(coefs, dtype=float)
    for _ in range(60):
        if ok(coefs):
            return coefs
        coefs = 0.9 * coefs
    return np.zeros_like(coefs)


# --- conditional residuals -------------------------------------------------------

def css_residuals(
    w: np.ndarray, ar: np.ndarray, ma: np.ndarray, intercept: float
) -> np.ndarray:
    """Conditional residuals for ``w[p:]``."""
    p = len(ar)
    n = len(w)
    u = w[p:] - intercept
    for i in range(p):
        u = u - ar[i] * w[p - 1 - i: n - 1 - i]
    if len(ma):
        return signal.lfilter([1.0], np.r_[1.0, ma], u)
    return u


def _lagmat(x: np.ndarray, lags: int, start: int) -> np.ndarray:
    """Columns x[t-1], ..., x[t-lags] for t = start .. len(x)-1."""
    n = len(x)
    return np.column_stack([x[start - k: n - k] for k in range(1, lags + 1)]) if lags else np.zeros((n - start, 0))


def hannan_rissanen(w: np.ndarray, p: int, q: int, intercept: bool) -> tuple[float, np.ndarray, np.ndarray]:
    """Two-stage regression start values for (c, ar, ma).

    A long autoregression supplies residual estimates, which then enter an
    ordinary regression of ``w`` on its own lags and lagged residuals.
    """
    n = len(w)
    if q == 0:
        start = p
        X = _lagmat(w, p, start)
        resid_lags = np.zeros((n - start, 0))
    else:
        m = max(p + q + 1, min(int(10 * math.log10(n)), n // 3))
        Xl = _lagmat(w, m, m)
        Xl = np.column_stack([np.ones(len(Xl)), Xl])
        beta, *_ = np.linalg.lstsq(Xl, w[m:], rcond=None)
        ehat = np.zeros(n)
        ehat[m:] = w[m:] - Xl @ beta
        start = m + q
        X = _lagmat(w, p, start)
        resid_lags = _lagmat(ehat, q, start)
    design = np.column_stack([X, resid_lags])
    if intercept:
        design = np.column_stack([np.ones(len(design)), design])
    beta, *_ = np.linalg.lstsq(design, w[start:], rcond=None)
    c = float(beta[0]) if intercept else 0.0
    rest = beta[1:] if intercept else beta
    return c, np.asarray(rest[:p], dtype=float), np.asarray(rest[p:p + q], dtype=float)


# --- fitting ---------------------------------------------------------------------

def _unpack(theta: np.ndarray, p: int, q: int, has_c: bool) -> tuple[float, np.ndarray, np.ndarray]:
    c = float(theta[0]) if has_c else 0.0
    off = 1 if has_c else 0
    ar = _pacf_to_ar(np.tanh(theta[off:off + p]))
    ma = -_pacf_to_ar(np.tanh(theta[off + p:off + p + q]))
    return c, ar, ma


def _pack(c: float, ar: np.ndarray, ma: np.ndarray, has_c: bool) -> np.ndarray:
    r_ar = np.clip(_ar_to_pacf(ar), -_PACF_CLIP, _PACF_CLIP)
    r_ma = np.clip(_ar_to_pacf(-np.asarray(ma)), -_PACF_CLIP, _PACF_CLIP)
    head = [c] if has_c else []
    return np.r_[head, np.arctanh(r_ar), np.arctanh(r_ma)]


def _null_model(w: np.ndarray, order: ArimaOrder, window: tuple[int, int]) -> ArimaModel:
    c = float(w.mean()) if order.d == 0 else 0.0
    resid = w - c
    css = float(np.dot(resid, resid))
    return ArimaModel(
        order=order,
        ar_coeffs=np.zeros(0),
        ma_coeffs=np.zeros(0),
        intercept=c,
        sigma2=css / len(resid),
        training_window=window,
        css=css,
        residuals=resid,
        css_trace=[css],
    )


def fit_arima(series: Sequence[float], order: ArimaOrder, start: int = 0) -> ArimaModel:
    """Fit ``order`` to ``series`` by minimizing the conditional sum of squares.

    ``start`` is the month index of ``series[0]``; it only labels the
    training window. A series whose differences are constant cannot support
    ARMA terms: the fit falls back to ``(0, d, 0)`` with a
    :class:`DegenerateSeriesWarning`.
    """
    x = np.asarray(series, dtype=float)
    if not np.all(np.isfinite(x)):
        raise ArimaError("series contains non-finite values")
    if len(x) < order.min_length:
        raise SeriesTooShort(
            f"ARIMA({order}) needs at least {order.min_length} points, got {len(x)}"
        )
    window = (start, start + len(x) - 1)
    p, d, q = order
    w = difference(x, d)

    if p + q == 0:
        return _null_model(w, order, window)
    if np.ptp(w) == 0:
        warnings.warn(
            f"differenced series is constant; ARIMA({order}) reduced to (0,{d},0)",
            DegenerateSeriesWarning,
            stacklevel=2,
        )
        return _null_model(w, ArimaOrder(0, d, 0), window)

    has_c = d == 0
    loc = float(w.mean()) if has_c else 0.0
    scale = float(np.std(w)) if has_c else float(np.sqrt(np.mean(w * w)))
    ws = (w - loc) / scale

    c0, ar0, ma0 = hannan_rissanen(ws, p, q, has_c)
    ar0 = _shrink_to_region(ar0, is_stationary)
    ma0 = _shrink_to_region(ma0, is_invertible)
    theta0 = _pack(c0, ar0, ma0, has_c)

    def objective(theta: np.ndarray) -> float:
        c, ar, ma = _unpack(theta, p, q, has_c)
        e = css_residuals(ws, ar, ma, c)
        val = float(np.dot(e, e)) / len(e)
        return val if math.isfinite(val) else 1e300

    trace = [objective(theta0)]
    res = optimize.minimize(
        objective,
        theta0,
        method="BFGS",
        callback=lambda xk: trace.append(objective(xk)),
        options={"maxiter": MAX_ITER, "gtol": 1e-7},
    )
    theta = res.x
    if not res.success:
        # BFGS often stops on precision loss near the optimum; polish with simplex
        nm = optimize.minimize(
            objective,
            res.x,
            method="Nelder-Mead",
            callback=lambda xk: trace.append(objective(xk)),
            options={"maxiter": MAX_ITER * len(theta0), "xatol": 1e-8, "fatol": 1e-14},
        )
        if not nm.success:
            raise ConvergenceError(f"ARIMA({order}) did not converge: {nm.message}")
        theta = nm.x
        logger.debug("BFGS stopped (%s); simplex polish used", res.message)

    c_s, ar, ma = _unpack(theta, p, q, has_c)
    if not is_stationary(ar) or not is_invertible(ma):
        raise FitRejected(f"ARIMA({order}) fit lies on the stationarity/invertibility boundary")

    intercept = loc * (1.0 - float(ar.sum())) + scale * c_s if has_c else 0.0
    resid = css_residuals(w, ar, ma, intercept)
    css = float(np.dot(resid, resid))
    return ArimaModel(
        order=order,
        ar_coeffs=ar,
        ma_coeffs=ma,
        intercept=intercept,
        sigma2=css / len(resid),
        training_window=window,
        css=css,
        residuals=resid,
        css_trace=[v * scale * scale * len(resid) for v in trace],
    )


def select_order(
    series: Sequence[float],
    grid: Iterable[ArimaOrder] | None = None,
) -> ArimaOrder:
    """Pick the grid order with the lowest AIC.

    AIC is ``n * ln(CSS / n) + 2 * (p + q + 1)``, with every candidate scored
    on the same trailing ``n`` residuals (the sample left after the largest
    ``p + d`` in the grid) so that values are comparable across orders.
    Fits with a root modulus below ``NEAR_UNIT_ROOT`` are not candidates.
    Ties go to the smaller ``p + q + d``.
    """
    return select_and_fit(series, grid)[0].order


def select_and_fit(
    series: Sequence[float],
    grid: Iterable[ArimaOrder] | None = None,
    start: int = 0,
) -> tuple[ArimaModel, list[tuple[ArimaOrder, float]]]:
    """Fit every grid order; return the AIC-best model and the ``(order, aic)`` scores."""
    grid = list(grid if grid is not None else DEFAULT_GRID)
    if not grid:
        raise ArimaError("order grid is empty")
    x = np.asarray(series, dtype=float)
    fitted: dict[ArimaOrder, ArimaModel] = {}
    errors = []
    for order in grid:
        try:
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", DegenerateSeriesWarning)
                model = fit_arima(x, order, start=start)
        except ArimaError as exc:
            errors.append(f"{order}: {exc}")
            continue
        if min_root_modulus(model.ar_coeffs, model.ma_coeffs) < NEAR_UNIT_ROOT:
            errors.append(f"{order}: root near the unit circle")
            continue
        fitted.setdefault(model.order, model)
    if not fitted:
        raise ArimaError("no candidate order could be fitted: " + "; ".join(errors))

    common = len(x) - max(o.p + o.d for o in fitted)
    scores = []
    for order, model in fitted.items():
        tail = model.residuals[len(model.residuals) - common:]
        scores.append((order, _aic(float(np.dot(tail, tail)), common, model.n_params)))
    scores.sort(key=lambda s: (s[1], s[0].p + s[0].q + s[0].d, tuple(s[0])))
    return fitted[scores[0][0]], scores
