"""Physical constants and derived rates for the pumped pendular cavity.

Every quantity is in SI units. The three fundamental constants below are the
only place they are defined in the package (CODATA 2018, exact or to more
than ten significant digits).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, fields, replace

HBAR = 1.054571817e-34  # J s
K_B = 1.380649e-23  # J / K (exact)
C_LIGHT = 299792458.0  # m / s (exact)

#: Smallest accepted k_B T / (hbar omega_m). The Brownian-motion master
#: equation used for the mirror only holds for k_B T >> hbar omega_m.
DEFAULT_MIN_THERMAL_RATIO = 10.0


class ParameterError(ValueError):
    """Raised for an invalid physical input; ``field`` names the culprit."""

    def __init__(self, field: str, message: str):
        super().__init__(f"{field}: {message}")
        self.field = field


class DiosiValidityError(ParameterError):
    """The temperature is too low for the high-temperature damping model."""


@dataclass(frozen=True)
class RawParams:
    """Experimental inputs, exactly as they would be quoted in a lab book."""

    mirror_mass: float  # kg
    mirror_frequency: float  # angular, rad/s
    quality_factor: float
    cavity_length: float  # m
    finesse: float
    optical_wavelength: float  # m
    laser_power: float  # W
    temperature: float  # K
    detuning: float = 0.0  # rad/s

    def validate(self) -> None:
        for f in fields(self):
            value = getattr(self, f.name)
            if not isinstance(value, (int, float)) or not math.isfinite(value):
                raise ParameterError(f.name, f"must be a finite number, got {value!r}")
            if f.name == "detuning":
                continue
            if f.name == "laser_power":
                if value < 0:
                    raise ParameterError(f.name, f"must be non-negative, got {value!r}")
            elif value <= 0:
                raise ParameterError(f.name, f"must be strictly positive, got {value!r}")


@dataclass(frozen=True)
class PhysicalParams:
    """Raw inputs plus every derived rate and scale used by the dynamics.

    ``pump`` is the real pump amplitude epsilon (units 1/sqrt(s)),
    ``position_scale`` is A = sqrt(hbar / 2 m omega_m) and
    ``momentum_scale`` is |B| = sqrt(hbar m omega_m / 2).  Their product is
    hbar / 2.
    """

    raw: RawParams
    cavity_decay: float  # gamma, 1/s
    optical_frequency: float  # omega_0, rad/s
    coupling: float  # g, 1/(m s)
    pump: float  # epsilon
    mirror_damping: float  # gamma_m, 1/s
    position_scale: float  # A, m
    momentum_scale: float  # |B|, kg m/s
    thermal_de_broglie: float  # lambda_dB, m
    mean_occupation: float  # k_B T / hbar omega_m
    thermal_ratio: float  # same number, kept under its validity-check name

    def __getattr__(self, name):
        # forward raw inputs (mirror_mass, temperature, ...) for convenience
        raw = object.__getattribute__(self, "raw")
        try:
            return getattr(raw, name)
        except AttributeError:
            raise AttributeError(name) from None

    @property
    def gA(self) -> float:
        """Optomechanical coupling rate g*A in 1/s."""
        return self.coupling * self.position_scale

    @property
    def thermal_coefficient(self) -> float:
        """gamma_m (1 - 2 k_B T / hbar omega_m); negative in any valid regime."""
        return self.mirror_damping * (1.0 - 2.0 * self.thermal_ratio)

    @property
    def mirror_period(self) -> float:
        return 2.0 * math.pi / self.raw.mirror_frequency

    def with_(self, min_thermal_ratio: float = DEFAULT_MIN_THERMAL_RATIO, **changes) -> "PhysicalParams":
        """Re-derive with some raw inputs replaced (e.g. ``laser_power=0.1``)."""
        return derive_params(replace(self.raw, **changes), min_thermal_ratio=min_thermal_ratio)


def derive_params(raw: RawParams, min_thermal_ratio: float = DEFAULT_MIN_THERMAL_RATIO) -> PhysicalParams:
    """Validate ``raw`` and compute all derived quantities.

    Raises
    ------
    ParameterError
        If any input is non-finite or out of range.
    DiosiValidityError
        If k_B T / hbar omega_m is below ``min_thermal_ratio``.
    """
    raw.validate()
    m, wm = raw.mirror_mass, raw.mirror_frequency
    kT = K_B * raw.temperature
    ratio = kT / (HBAR * wm)
    if ratio < min_thermal_ratio:
        raise DiosiValidityError(
            "temperature",
            f"k_B T / hbar omega_m = {ratio:.4g} is below the floor {min_thermal_ratio:g}",
        )
    gamma = math.pi * C_LIGHT / (2.0 * raw.finesse * raw.cavity_length)
    w0 = 2.0 * math.pi * C_LIGHT / raw.optical_wavelength
    return PhysicalParams(
        raw=raw,
        cavity_decay=gamma,
        optical_frequency=w0,
        coupling=w0 / raw.cavity_length,
        pump=math.sqrt(gamma * raw.laser_power / (HBAR * w0)),
        mirror_damping=0.5 * wm / raw.quality_factor,
        position_scale=math.sqrt(HBAR / (2.0 * m * wm)),
        momentum_scale=math.sqrt(HBAR * m * wm / 2.0),
        thermal_de_broglie=HBAR / math.sqrt(4.0 * m * kT),
        mean_occupation=ratio,
        thermal_ratio=ratio,
    )


def _check_temperature(T: float) -> None:
    if not T > 0:
        raise ParameterError("temperature", f"must be strictly positive, got {T!r}")


def planck_occupation(T: float, omega_m: float) -> float:
    """Bose-Einstein occupation 1 / (exp(hbar omega_m / k_B T) - 1)."""
    _check_temperature(T)
    x = HBAR * omega_m / (K_B * T)
    if x > 700.0:
        return math.exp(-x)
    return 1.0 / math.expm1(x)


def thermal_quadrature_variance_paper(T: float, omega_m: float) -> float:
    """Quadrature variance 1 + 2 sqrt(pi) (k_B T / hbar omega_m)^(3/2).

    This is the closed form quoted alongside the original experiment.  It is
    *not* the Gaussian P-function result; see
    :func:`thermal_quadrature_variance_gaussian` for that, and the thermal
    sampler in :mod:`pendular.sde` for an empirical check of both.  ``T=0``
    is accepted and returns the coherent-state value 1.
    """
    if T < 0 or not math.isfinite(T):
        raise ParameterError("temperature", f"must be non-negative, got {T!r}")
    ratio = K_B * T / (HBAR * omega_m)
    return 1.0 + 2.0 * math.sqrt(math.pi) * ratio**1.5


def thermal_quadrature_variance_gaussian(T: float, omega_m: float) -> float:
    """V(X_b) = 1 + 2 n for a thermal P-function with n = k_B T / hbar omega_m."""
    if T < 0 or not math.isfinite(T):
        raise ParameterError("temperature", f"must be non-negative, got {T!r}")
    return 1.0 + 2.0 * K_B * T / (HBAR * omega_m)


def thermal_sigma_x(T: float, params: PhysicalParams) -> float:
    """Classical thermal position spread sqrt(k_B T / m omega_m^2), in metres."""
    _check_temperature(T)
    return math.sqrt(K_B * T / (params.raw.mirror_mass * params.raw.mirror_frequency**2))


def schiller_raw(laser_power: float = 5e-3, temperature: float = 4.2, detuning: float = 0.0) -> RawParams:
    """Published bench-top parameters (26 kHz, 10 mg mirror, 1 cm cavity).

    The mechanical Q is 4e6 at 4.2 K and 2.25e6 at 70 K; other temperatures
    use the 4.2 K value.
    """
    q = 2.25e6 if math.isclose(temperature, 70.0) else 4e6
    return RawParams(
        mirror_mass=1e-5,
        mirror_frequency=2.0 * math.pi * 26e3,
        quality_factor=q,
        cavity_length=0.01,
        finesse=1.5e4,
        optical_wavelength=1064e-9,
        laser_power=laser_power,
        temperature=temperature,
        detuning=detuning,
    )
