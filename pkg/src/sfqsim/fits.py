"""Nonlinear least-squares fitters for decay curves: inversion-recovery T1,
damped Rabi oscillations, and the quasiparticle double-exponential model
with reduced-chi^2 model selection.

All fitters use trust-region least squares with analytic Jacobians.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.interpolate import UnivariateSpline
from scipy.optimize import least_squares

from .errors import FitError, ParameterError


@dataclass(frozen=True)
class T1Fit:
    t1_us: float
    amplitude: float
    offset: float
    chi2: float
    cov_diag: tuple


@dataclass(frozen=True)
class RabiFit:
    omega_mhz: float
    decay_us: float
    phase: float
    offset: float
    amplitude: float
    chi2: float


@dataclass(frozen=True)
class QpFit:
    """Double-exponential quasiparticle fit P(1) = exp(n_qp (e^{-t/T_qp} - 1) - t/T_R).

    valid is True only when the double-exponential model has strictly lower
    reduced chi^2 than the plain single exponential.
    """

    n_qp: float
    t_qp_us: float
    t_r_us: float
    chi2_red_double: float
    chi2_red_single: float
    valid: bool
    n_qp_std: float
    unstable: bool  # n_qp confidence interval includes 0 or is wider than the value


def _noise_sigma(times: np.ndarray, values: np.ndarray) -> float:
    """Noise scale from residuals of a smoothing-spline pre-fit.

    The spline smoothing factor needs a variance estimate itself, so it is
    seeded from a first-difference estimator and refined once.
    """
    if len(values) < 5:
        return max(float(np.std(values)), 1e-12)
    sigma0 = float(np.std(np.diff(values)) / np.sqrt(2.0)) or 1e-12
    try:
        spline = UnivariateSpline(times, values, s=len(values) * sigma0**2)
        resid = values - spline(times)
        sigma = float(np.std(resid))
    except Exception:
        sigma = sigma0
    return max(sigma, 1e-12)


def fit_t1(times_us: np.ndarray, populations: np.ndarray) -> T1Fit:
    """Fit A exp(-t/T1) + B; initialization from a log-linear regression."""
    t = np.asarray(times_us, dtype=float)
    p = np.asarray(populations, dtype=float)
    if len(t) < 5:
        raise ParameterError("fit_t1 needs at least 5 points")
    if np.any(np.diff(t) <= 0):
        raise ParameterError("times must be strictly ascending")
    if np.ptp(p) < 1e-12:
        raise FitError("degenerate fit: data are constant")

    b0 = p[-1]
    a0 = p[0] - p[-1]
    shifted = p - b0
    mask = shifted * np.sign(a0 or 1.0) > 1e-12
    if mask.sum() >= 2:
        slope = np.polyfit(t[mask], np.log(np.abs(shifted[mask])), 1)[0]
        t1_0 = -1.0 / slope if slope < 0 else t[-1]
    else:
        t1_0 = t[-1] / 3.0

    def residual(x):
        a, t1, b = x
        return a * np.exp(-t / t1) + b - p

    def jac(x):
        a, t1, b = x
        e = np.exp(-t / t1)
        return np.stack([e, a * e * t / t1**2, np.ones_like(t)], axis=1)

    sol = least_squares(residual, [a0, max(t1_0, 1e-3), b0], jac=jac, method="trf")
    a, t1, b = sol.x
    if t1 <= 0 or not sol.success:
        raise FitError(f"T1 fit failed (T1={t1:.3g}, status={sol.status})")
    jtj = sol.jac.T @ sol.jac
    dof = max(len(t) - 3, 1)
    chi2 = 2.0 * sol.cost
    try:
        cov = np.linalg.inv(jtj) * chi2 / dof
        cov_diag = tuple(np.sqrt(np.abs(np.diag(cov))))
    except np.linalg.LinAlgError:
        cov_diag = (np.inf,) * 3
    return T1Fit(t1_us=float(t1), amplitude=float(a), offset=float(b), chi2=float(chi2), cov_diag=cov_diag)


def _qp_model(t, n_qp, t_qp, t_r):
    return np.exp(n_qp * (np.exp(-t / t_qp) - 1.0) - t / t_r)


def _qp_jac(t, n_qp, t_qp, t_r):
    e = np.exp(-t / t_qp)
    f = _qp_model(t, n_qp, t_qp, t_r)
    return np.stack(
        [f * (e - 1.0), f * n_qp * e * t / t_qp**2, f * t / t_r**2],
        axis=1,
    )


N_QP_MAX = 50.0
_QP_MULTISTART = 5


def fit_qp(times_us: np.ndarray, populations: np.ndarray, sigma: float | None = None) -> QpFit:
    """Fit both the double-exponential quasiparticle model and the nested
    single exponential exp(-t/T_R); select by reduced chi^2."""
    t = np.asarray(times_us, dtype=float)
    p = np.asarray(populations, dtype=float)
    if len(t) < 8:
        raise ParameterError("fit_qp needs at least 8 points")
    if sigma is None:
        sigma = _noise_sigma(t, p)

    # single exponential: log-linear start on positive data
    pos = p > 1e-9
    if pos.sum() >= 2:
        slope = np.polyfit(t[pos], np.log(p[pos]), 1)[0]
        tr0 = -1.0 / slope if slope < 0 else t[-1]
    else:
        tr0 = t[-1] / 3.0
    tr0 = max(tr0, 1e-3)

    def res_single(x):
        return np.exp(-t / x[0]) - p

    def jac_single(x):
        return (np.exp(-t / x[0]) * t / x[0] ** 2)[:, None]

    sol_s = least_squares(res_single, [tr0], jac=jac_single, method="trf", bounds=([1e-6], [np.inf]))
    chi2_s = 2.0 * sol_s.cost / sigma**2
    chi2_red_s = chi2_s / max(len(t) - 1, 1)

    def res_double(x):
        return _qp_model(t, *x) - p

    def jac_double(x):
        return _qp_jac(t, *x)

    lo = [0.0, 1e-3, 1e-3]
    hi = [N_QP_MAX, np.inf, np.inf]
    rng = np.random.default_rng(20260810)
    best = None
    starts = [[0.5, max(t[-1] / 4.0, 1e-2), sol_s.x[0]]]
    for _ in range(_QP_MULTISTART - 1):
        f = rng.uniform(0.3, 3.0, size=3)
        starts.append([min(0.5 * f[0], N_QP_MAX), starts[0][1] * f[1], starts[0][2] * f[2]])
    for x0 in starts:
        try:
            sol = least_squares(res_double, x0, jac=jac_double, bounds=(lo, hi), method="trf")
        except ValueError:
            continue
        if best is None or sol.cost < best.cost:
            best = sol
    if best is None:
        raise FitError("quasiparticle fit did not converge from any start")
    chi2_d = 2.0 * best.cost / sigma**2
    chi2_red_d = chi2_d / max(len(t) - 3, 1)

    n_qp, t_qp, t_r = best.x
    jtj = best.jac.T @ best.jac
    try:
        cov = np.linalg.inv(jtj) * (sigma**2)
        n_qp_std = float(np.sqrt(abs(cov[0, 0])))
    except np.linalg.LinAlgError:
        n_qp_std = np.inf
    valid = bool(chi2_red_d < chi2_red_s)
    unstable = bool(n_qp_std >= max(n_qp, 1e-12) or n_qp - 2.0 * n_qp_std <= 0.0)
    return QpFit(
        n_qp=float(n_qp),
        t_qp_us=float(t_qp),
        t_r_us=float(t_r),
        chi2_red_double=float(chi2_red_d),
        chi2_red_single=float(chi2_red_s),
        valid=valid,
        n_qp_std=n_qp_std,
        unstable=unstable,
    )


def fit_rabi(times_ns: np.ndarray, populations: np.ndarray) -> RabiFit:
    """Fit A cos(2 pi Omega t + phi) exp(-t/tau) + B.

    Omega is initialized from the discrete spectrum peak; an absent peak
    (no oscillation above the noise floor) raises FitError.
    """
    t = np.asarray(times_ns, dtype=float)
    p = np.asarray(populations, dtype=float)
    if len(t) < 8:
        raise ParameterError("fit_rabi needs at least 8 points")
    dt = t[1] - t[0]
    detrended = p - np.mean(p)
    spectrum = np.abs(np.fft.rfft(detrended))
    freqs = np.fft.rfftfreq(len(t), d=dt)  # GHz
    peak = int(np.argmax(spectrum[1:]) + 1)
    noise_floor = np.median(spectrum[1:]) + 1e-15
    if spectrum[peak] < 5.0 * noise_floor or np.ptp(p) < 1e-9:
        raise FitError("no spectral peak above the noise floor")
    omega0 = freqs[peak]  # GHz

    a0 = 0.5 * np.ptp(p)
    b0 = float(np.mean(p))

    # decay parametrized as a rate (1/us) so undamped data sits at the r=0 bound
    def residual(x):
        a, om, phi, r, b = x
        return a * np.cos(2 * np.pi * om * t + phi) * np.exp(-t * 1e-3 * r) + b - p

    def jac(x):
        a, om, phi, r, b = x
        decay = np.exp(-t * 1e-3 * r)
        arg = 2 * np.pi * om * t + phi
        c, s = np.cos(arg), np.sin(arg)
        return np.stack(
            [
                c * decay,
                -a * s * decay * 2 * np.pi * t,
                -a * s * decay,
                -a * c * decay * t * 1e-3,
                np.ones_like(t),
            ],
            axis=1,
        )

    best = None
    for phi0 in (0.0, np.pi):
        sol = least_squares(
            residual,
            [a0, omega0, phi0, 1e-3, b0],
            jac=jac,
            method="trf",
            bounds=([-1.5, omega0 * 0.25, -2 * np.pi, 0.0, -0.5], [1.5, omega0 * 4.0, 2 * np.pi, np.inf, 1.5]),
        )
        if best is None or sol.cost < best.cost:
            best = sol
    a, om, phi, rate, b = best.x
    if best.status <= 0:
        raise FitError("Rabi fit did not converge")
    return RabiFit(
        omega_mhz=float(om * 1e3),
        decay_us=float(1.0 / rate) if rate > 1e-12 else np.inf,
        phase=float(phi),
        offset=float(b),
        amplitude=float(a),
        chi2=float(2.0 * best.cost),
    )
