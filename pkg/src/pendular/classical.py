"""Mean-field dynamics, steady states and bistability of the pendular cavity.

The mean-field variables are the complex field amplitude ``alpha``
(sqrt of photon number) and the mirror amplitude ``beta`` (sqrt of phonon
number), with mirror displacement ``x = A (beta + beta*)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .params import PhysicalParams


class ConfigurationError(ValueError):
    pass


class ClassicalDivergence(FloatingPointError):
    def __init__(self, time: float):
        super().__init__(f"classical integration produced a non-finite value at t={time:.6g} s")
        self.time = time


@dataclass(frozen=True)
class ClassicalState:
    alpha: complex
    beta: complex

    def __post_init__(self):
        if not (np.isfinite(self.alpha) and np.isfinite(self.beta)):
            raise ValueError("classical state must be finite")


@dataclass(frozen=True)
class ClassicalSeries:
    times: np.ndarray
    alpha: np.ndarray
    beta: np.ndarray
    position_scale: float

    @property
    def intensity(self) -> np.ndarray:
        return np.abs(self.alpha) ** 2

    @property
    def x(self) -> np.ndarray:
        return 2.0 * self.position_scale * self.beta.real


@dataclass
class SteadyState:
    alpha_ss: complex
    beta_ss: float
    iterations: int
    converged: bool
    history: list = field(default_factory=list, repr=False)


@dataclass
class BistabilityReport:
    cubic_coeffs: tuple  # (I^3, I^2, I, 1) coefficients
    intensity_roots: list
    turning_points: tuple | None
    bistable: bool


def _drift(a: complex, b: complex, eps: float, gam: float, delta: float, gA: float, wm: float, gm: float):
    xb = b + b.conjugate()
    da = eps - complex(gam, delta) * a + 1j * gA * a * xb
    db = -1j * wm * b - gm * (b - b.conjugate()) + 1j * gA * (a.real * a.real + a.imag * a.imag)
    return da, db


def mean_drift(state: ClassicalState, params: PhysicalParams, detuning: float = 0.0) -> ClassicalState:
    """Time derivative of the mean-field amplitudes.

    With ``detuning=0`` this is the undetuned pair of equations; the detuning
    enters only as ``-(gamma + i Delta) alpha`` in the field equation.
    """
    da, db = _drift(
        complex(state.alpha), complex(state.beta), params.pump, params.cavity_decay, detuning,
        params.gA, params.mirror_frequency, params.mirror_damping,
    )
    return ClassicalState(da, db)


def integrate_classical(
    init: ClassicalState,
    params: PhysicalParams,
    detuning: float,
    t_end: float,
    dt: float,
    record_stride: int = 1,
) -> ClassicalSeries:
    """Fixed-step RK4 integration of the mean-field equations.

    The step must resolve the cavity decay: ``dt * gamma <= 0.05``.
    Records are taken at step 0 and every ``record_stride`` steps; the run
    stops at the last whole record, ``floor(round(t_end/dt)/stride)*stride``
    steps.
    """
    gam = params.cavity_decay
    if not dt > 0 or dt * gam > 0.05:
        raise ConfigurationError(f"dt*gamma = {dt * gam:.3g} exceeds the stability guard 0.05")
    if record_stride < 1:
        raise ConfigurationError("record_stride must be >= 1")
    n_rec = int(round(t_end / dt)) // record_stride
    args = (params.pump, gam, detuning, params.gA, params.mirror_frequency, params.mirror_damping)
    a, b = complex(init.alpha), complex(init.beta)
    alpha = np.empty(n_rec + 1, complex)
    beta = np.empty(n_rec + 1, complex)
    alpha[0], beta[0] = a, b
    h2, h6 = dt / 2.0, dt / 6.0
    for r in range(1, n_rec + 1):
        for _ in range(record_stride):
            k1a, k1b = _drift(a, b, *args)
            k2a, k2b = _drift(a + h2 * k1a, b + h2 * k1b, *args)
            k3a, k3b = _drift(a + h2 * k2a, b + h2 * k2b, *args)
            k4a, k4b = _drift(a + dt * k3a, b + dt * k3b, *args)
            a = a + h6 * (k1a + 2.0 * k2a + 2.0 * k3a + k4a)
            b = b + h6 * (k1b + 2.0 * k2b + 2.0 * k3b + k4b)
        if not (math.isfinite(abs(a)) and math.isfinite(abs(b))):
            raise ClassicalDivergence(r * record_stride * dt)
        alpha[r], beta[r] = a, b
    times = np.arange(n_rec + 1) * (record_stride * dt)
    return ClassicalSeries(times, alpha, beta, params.position_scale)


def steady_state_iterative(
    params: PhysicalParams,
    detuning: float = 0.0,
    tol: float = 1e-12,
    max_iter: int = 1000,
) -> SteadyState:
    """Fixed-point iteration for the stationary mean field.

    Starts from the fixed-mirror field ``epsilon/gamma`` and alternates
    ``beta = (gA/omega_m)|alpha|^2`` and
    ``alpha = epsilon / (gamma + i(Delta - 2 gA beta))``.  Convergence is
    declared when both relative changes drop below ``tol``.  When successive
    beta updates change sign the update is relaxed by a factor 0.5, so a
    reported non-convergence is not an artefact of a numerical two-cycle.
    Non-convergence is returned (``converged=False``), not raised.
    """
    if not tol > 0:
        raise ValueError("tol must be positive")
    eps, gam, gA, wm = params.pump, params.cavity_decay, params.gA, params.mirror_frequency
    alpha = complex(eps / gam)
    beta = gA / wm * abs(alpha) ** 2
    history = [beta]
    relax = 1.0
    last_step = 0.0
    for it in range(1, max_iter + 1):
        alpha_new = eps / complex(gam, detuning - 2.0 * gA * beta)
        beta_target = gA / wm * abs(alpha_new) ** 2
        step = beta_target - beta
        if last_step * step < 0:
            relax = 0.5
        beta_new = beta + relax * step
        scale_a = max(abs(alpha_new), 1e-300)
        scale_b = max(abs(beta_new), 1e-300)
        res_a = abs(alpha_new - alpha) / scale_a
        res_b = abs(beta_new - beta) / scale_b
        alpha, beta, last_step = alpha_new, beta_new, step
        history.append(beta)
        if res_a < tol and res_b < tol:
            # settle alpha onto the final beta
            alpha = eps / complex(gam, detuning - 2.0 * gA * beta)
            return SteadyState(alpha, beta, it, True, history)
    return SteadyState(alpha, beta, max_iter, False, history)


def steady_state_residual(ss: SteadyState, params: PhysicalParams, detuning: float = 0.0) -> tuple[float, float]:
    """Relative mean-field drift at a candidate steady state.

    The field drift is scaled by the pump and the mirror drift by the
    radiation-pressure term gA |alpha|^2.
    """
    d = mean_drift(ClassicalState(ss.alpha_ss, ss.beta_ss), params, detuning)
    scale_b = max(params.gA * abs(ss.alpha_ss) ** 2, 1e-300)
    return abs(d.alpha) / max(params.pump, 1e-300), abs(d.beta) / scale_b


def quadratures_vs_x(x, params: PhysicalParams):
    """Stationary field quadratures and intensity for a fixed mirror offset x."""
    eps, gam, g = params.pump, params.cavity_decay, params.coupling
    x = np.asarray(x, dtype=float)
    den = gam**2 + (g * x) ** 2
    return 2.0 * eps * gam / den, 2.0 * g * eps * x / den, eps**2 / den


def quadratures_vs_x_expansion(x, params: PhysicalParams):
    """Small-displacement forms of :func:`quadratures_vs_x`.

    Only ``Y_a`` is linear in x; ``X_a`` and the intensity move at second
    order.  Requires ``(g x)^2 < gamma^2``.
    """
    eps, gam, g = params.pump, params.cavity_decay, params.coupling
    x = np.asarray(x, dtype=float)
    u2 = (g * x / gam) ** 2
    if np.any(u2 >= 1.0):
        raise ValueError("expansion requires g^2 x^2 < gamma^2")
    corr = 1.0 - u2
    den = gam**2
    return 2.0 * eps * gam / den * corr, 2.0 * g * eps * x / den * corr, eps**2 / den * corr


def _real_cubic_roots(c3: float, c2: float, c1: float, c0: float) -> list[float]:
    """Real roots of c3 t^3 + c2 t^2 + c1 t + c0 via the discriminant."""
    p, q, r = c2 / c3, c1 / c3, c0 / c3
    P = q - p * p / 3.0
    Q = 2.0 * p**3 / 27.0 - p * q / 3.0 + r
    disc = -(4.0 * P**3 + 27.0 * Q**2)
    shift = -p / 3.0
    if disc >= 0 and P < 0:
        m = 2.0 * math.sqrt(-P / 3.0)
        arg = 3.0 * Q / (P * m)
        theta = math.acos(max(-1.0, min(1.0, arg))) / 3.0
        roots = [m * math.cos(theta - 2.0 * math.pi * k / 3.0) + shift for k in range(3)]
    else:
        s = math.sqrt(max(Q * Q / 4.0 + P**3 / 27.0, 0.0))
        roots = [float(np.cbrt(-Q / 2.0 + s)) + float(np.cbrt(-Q / 2.0 - s)) + shift]

    def f(t):
        return ((c3 * t + c2) * t + c1) * t + c0

    def fp(t):
        return (3.0 * c3 * t + 2.0 * c2) * t + c1

    polished = []
    for t in roots:
        d = fp(t)
        if d != 0.0:
            t = t - f(t) / d
        polished.append(t)
    return sorted(polished)


def _scales(params: PhysicalParams):
    # intensity unit I0 and pump-squared unit E0 for the scaled cubic
    gam, wm, gA = params.cavity_decay, params.mirror_frequency, params.gA
    I0 = wm * gam / gA**2
    E0 = wm * gam**3 / gA**2
    return I0, E0


def cubic_coefficients(params: PhysicalParams, detuning: float, pump: float | None = None) -> tuple:
    """Coefficients of the steady-state cubic in I = |alpha|^2, highest power first."""
    eps = params.pump if pump is None else pump
    gam, wm, gA = params.cavity_decay, params.mirror_frequency, params.gA
    return (
        4.0 * gA**4 / wm**2,
        -4.0 * gA**2 * detuning / wm,
        gam**2 + detuning**2,
        -(eps**2),
    )


def cubic_relative_residual(coeffs, intensity: float) -> float:
    terms = [c * intensity ** (3 - k) for k, c in enumerate(coeffs)]
    return abs(sum(terms)) / max(abs(t) for t in terms)


def bistability_analysis(params: PhysicalParams, detuning: float, pump: float | None = None) -> BistabilityReport:
    """Positive stationary intensities and fold points for a detuned cavity.

    ``pump`` overrides the pump amplitude epsilon derived from the laser
    power.  Turning points are the intensities at which the cubic's slope
    vanishes; they exist when ``Delta^2 >= 3 gamma^2``.  The cavity is
    bistable only for ``Delta > sqrt(3) gamma``: negative detuning never
    gives two positive turning points.
    """
    eps = params.pump if pump is None else pump
    coeffs = cubic_coefficients(params, detuning, eps)
    gam, wm, gA = params.cavity_decay, params.mirror_frequency, params.gA
    if gA == 0.0:
        roots = [eps**2 / (gam**2 + detuning**2)] if eps > 0 else []
        return BistabilityReport(coeffs, roots, None, False)
    I0, E0 = _scales(params)
    delta = detuning / gam
    scaled = _real_cubic_roots(4.0, -4.0 * delta, 1.0 + delta**2, -(eps**2) / E0)
    roots = [j * I0 for j in scaled if j > 0]
    turning = None
    if detuning**2 >= 3.0 * gam**2:
        centre = detuning * wm / (3.0 * gA**2)
        half = wm / (6.0 * gA**2) * math.sqrt(detuning**2 - 3.0 * gam**2)
        turning = (centre + half, centre - half)
    return BistabilityReport(coeffs, roots, turning, detuning > math.sqrt(3.0) * gam)


def anchor_pump(params: PhysicalParams, detuning: float) -> float:
    """Pump amplitude placing the stationary intensity at the cubic's inflection.

    For ``Delta > sqrt(3) gamma`` this pump always lies inside the fold
    window, which makes it a natural centre for pump scans.  Below
    ``Delta = gamma`` the inflection moves to zero intensity, so the
    anchor is frozen at the ``Delta = gamma`` scale.
    """
    I0, E0 = _scales(params)
    delta = detuning / params.cavity_decay
    j = max(delta, 1.0) / 3.0
    e = 4.0 * j**3 - 4.0 * delta * j**2 + (1.0 + delta**2) * j
    return math.sqrt(e * E0)


def pump_grid(params: PhysicalParams, detuning: float, n: int = 20, decades: float = 4.0) -> np.ndarray:
    """``n`` log-spaced pumps spanning ``decades`` around :func:`anchor_pump`.

    The anchor itself is always one of the grid points.
    """
    lo = np.linspace(-decades / 2, 0.0, n // 2, endpoint=False)
    hi = np.linspace(0.0, decades / 2, n - n // 2)
    return anchor_pump(params, detuning) * 10.0 ** np.concatenate([lo, hi])


def bistability_scan(params: PhysicalParams, deltas, n_pump: int = 20, decades: float = 4.0) -> list[dict]:
    """Run :func:`bistability_analysis` over a detuning x pump grid."""
    rows = []
    for d in deltas:
        for eps in pump_grid(params, float(d), n_pump, decades):
            rep = bistability_analysis(params, float(d), float(eps))
            rows.append({"detuning": float(d), "pump": float(eps), "report": rep})
    return rows
