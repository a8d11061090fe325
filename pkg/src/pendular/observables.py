"""Physical observables from positive-P moment accumulators.

Positive-P averages are normally ordered.  Every symmetric (Hermitian)
quantity therefore needs an ordering correction, and all of them live in
:func:`ordering_correction`:

* quadratures of one mode, Q_t = exp(-it) a + exp(it) a^dag:
  sym<Q_t Q_s> = <Q_t Q_s>_P + cos(t - s), so V(X) = 1 + Var_P(X);
* quadrature with photon number: sym<Q N> = <Q N>_P + <Q>/2;
* photon number with itself: <N N> = <N N>_P + <N>.

Operators on different subsystems commute, so mirror x field products need
no correction.  Same-mode pairs of *different* observables use the
symmetrised product, which is a convention; callers get that number but
should treat it as convention dependent.  Correlation denominators use the
corrected variances, which is why C(w, w) is exactly 1.

Standard errors come from batch means over the accumulator's blocks.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .params import PhysicalParams
from .sde.moments import BlockMoments, MomentAccumulator

_I = 1j
# coefficient vectors over (alpha, alpha+, beta, beta+, alpha+ alpha)
_COEFFS = {
    "Xa": np.array([1, 1, 0, 0, 0], complex),
    "Ya": np.array([-_I, _I, 0, 0, 0], complex),
    "Na": np.array([0, 0, 0, 0, 1], complex),
    "Xb": np.array([0, 0, 1, 1, 0], complex),
    "Yb": np.array([0, 0, -_I, _I, 0], complex),
}
_MODE = {"Xa": "a", "Ya": "a", "Na": "a", "Xb": "b", "Yb": "b"}
_ANGLE = {"Xa": 0.0, "Ya": math.pi / 2, "Xb": 0.0, "Yb": math.pi / 2}
_ALIASES = {"x": "Xb", "p": "Yb"}
OBSERVABLE_IDS = tuple(_COEFFS) + tuple(_ALIASES)

MIN_BATCHES = 16


class InsufficientData(ValueError):
    pass


class UndefinedCorrelation(ZeroDivisionError):
    pass


def _canon(name: str) -> str:
    name = _ALIASES.get(name, name)
    if name not in _COEFFS:
        raise KeyError(f"unknown observable {name!r}; choose from {OBSERVABLE_IDS}")
    return name


def _mean(m: BlockMoments, w: str) -> np.ndarray:
    return m.mean @ _COEFFS[w]


def _cov_p(m: BlockMoments, w: str, z: str) -> np.ndarray:
    u, v = _COEFFS[w], _COEFFS[z]
    return np.einsum("i,tij,j->t", u, m.comoment, v) / m.count


def ordering_correction(m: BlockMoments, w: str, z: str) -> np.ndarray:
    """Term added to the P-average of w z to get the symmetrised operator moment."""
    w, z = _canon(w), _canon(z)
    zero = np.zeros(len(m.mean))
    if _MODE[w] != _MODE[z]:
        return zero
    if w == "Na" and z == "Na":
        return _mean(m, "Na").real
    if w == "Na" or z == "Na":
        q = z if w == "Na" else w
        return 0.5 * _mean(m, q).real
    return zero + math.cos(_ANGLE[w] - _ANGLE[z])


def covariance(m: BlockMoments, w: str, z: str) -> np.ndarray:
    """Symmetrised operator covariance V(w, z) per recorded time."""
    w, z = _canon(w), _canon(z)
    return _cov_p(m, w, z).real + ordering_correction(m, w, z)


def variance(m: BlockMoments, w: str) -> np.ndarray:
    return covariance(m, w, w)


def _correlation(m, w, z):
    vw, vz = variance(m, w), variance(m, z)
    den = np.sqrt(np.where((vw > 0) & (vz > 0), vw * vz, np.nan))
    return covariance(m, w, z) / den


def _inferred(m, via):
    vb = variance(m, "Xb")
    vv = variance(m, via)
    cov = covariance(m, "Xb", via)
    vv = np.where(vv > 0, vv, np.nan)
    return vb - cov * cov / vv, cov / vv


def _need(acc: MomentAccumulator, n: int = 2) -> BlockMoments:
    t = acc.total() if isinstance(acc, MomentAccumulator) else acc
    if t.count < n:
        raise InsufficientData(f"need at least {n} trajectories, have {t.count}")
    return t


def mirror_position_momentum(acc, params: PhysicalParams):
    """(mean_x, mean_p, sigma_x, sigma_p) in SI units, per recorded time."""
    m = _need(acc)
    A, B = params.position_scale, params.momentum_scale
    return (
        A * _mean(m, "Xb").real,
        B * _mean(m, "Yb").real,
        A * np.sqrt(variance(m, "Xb")),
        B * np.sqrt(variance(m, "Yb")),
    )


def _fano(m: BlockMoments) -> np.ndarray:
    n = _mean(m, "Na").real
    noise = np.sqrt(np.abs(_cov_p(m, "Na", "Na").real) / m.count)
    vn = variance(m, "Na")
    ok = n > 3.0 * noise
    return np.where(ok, vn / np.where(ok, n, 1.0), np.nan)


def field_variances(acc):
    """(V(X_a), V(Y_a), Fano factor); Fano is NaN where <N> is not
    significantly positive."""
    m = _need(acc)
    return variance(m, "Xa"), variance(m, "Ya"), _fano(m)


def correlation(acc, w: str, z: str, undefined: str = "raise") -> np.ndarray:
    """C(w, z) = V(w, z) / sqrt(V(w) V(z)) per recorded time.

    With ``undefined="nan"`` times with a vanishing variance give NaN
    instead of raising :class:`UndefinedCorrelation`.
    """
    m = _need(acc)
    with np.errstate(invalid="ignore"):
        c = _correlation(m, w, z)
    if undefined == "raise" and np.any(np.isnan(c)):
        raise UndefinedCorrelation(f"V({w}) or V({z}) vanishes")
    return c


def inferred_position_uncertainty(acc, via: str, params: PhysicalParams, undefined: str = "raise"):
    """Residual position uncertainty after the best linear estimate of X_b from ``via``.

    Returns ``(sigma_inf_x, gain)`` with ``gain = V(X_b, via) / V(via)`` and
    ``sigma_inf_x = A sqrt(V(X_b) - V(X_b, via)^2 / V(via))``.  The residual
    can never exceed V(X_b) since a non-negative term is subtracted.
    """
    m = _need(acc)
    via = _canon(via)
    if via not in ("Ya", "Xa", "Na"):
        raise KeyError("inference is from a field observable: Ya, Xa or Na")
    with np.errstate(invalid="ignore"):
        vinf, gain = _inferred(m, via)
        sigma = params.position_scale * np.sqrt(vinf)
    if undefined == "raise" and np.any(np.isnan(gain)):
        raise UndefinedCorrelation(f"V({via}) vanishes")
    return sigma, gain


def _observable_table(params: PhysicalParams):
    A, B = params.position_scale, params.momentum_scale
    return {
        "mean_x": lambda m: A * _mean(m, "Xb").real,
        "mean_x_imag": lambda m: A * _mean(m, "Xb").imag,
        "mean_p": lambda m: B * _mean(m, "Yb").real,
        "mean_p_imag": lambda m: B * _mean(m, "Yb").imag,
        "sigma_x": lambda m: A * np.sqrt(variance(m, "Xb")),
        "sigma_p": lambda m: B * np.sqrt(variance(m, "Yb")),
        "mean_Na": lambda m: _mean(m, "Na").real,
        "V_Xa": lambda m: variance(m, "Xa"),
        "V_Ya": lambda m: variance(m, "Ya"),
        "fano": _fano,
        "C_xXa": lambda m: _correlation(m, "Xb", "Xa"),
        "C_xYa": lambda m: _correlation(m, "Xb", "Ya"),
        "C_xNa": lambda m: _correlation(m, "Xb", "Na"),
        "C_XaYb_sq": lambda m: _correlation(m, "Xa", "Yb") ** 2,
        "sigma_inf_x_Ya": lambda m: A * np.sqrt(_inferred(m, "Ya")[0]),
        "sigma_inf_x_Xa": lambda m: A * np.sqrt(_inferred(m, "Xa")[0]),
        "sigma_inf_x_Na": lambda m: A * np.sqrt(_inferred(m, "Na")[0]),
    }


OBSERVABLE_NAMES = tuple(sorted([
    "mean_x", "mean_x_imag", "mean_p", "mean_p_imag", "sigma_x", "sigma_p", "mean_Na",
    "V_Xa", "V_Ya", "fano", "C_xXa", "C_xYa", "C_xNa", "C_XaYb_sq",
    "sigma_inf_x_Ya", "sigma_inf_x_Xa", "sigma_inf_x_Na",
]))


@dataclass
class ObservableSeries:
    times: np.ndarray
    values: dict = field(default_factory=dict)
    errors: dict = field(default_factory=dict)
    count: int = 0
    n_batches: int = 0

    def __getitem__(self, name: str) -> np.ndarray:
        return self.values[name]

    def se(self, name: str) -> np.ndarray:
        return self.errors[name]

    def __len__(self) -> int:
        return len(self.times)


def batch_standard_error(acc: MomentAccumulator, fn) -> tuple[np.ndarray, int]:
    """Standard error of ``fn(moments)`` from the spread over blocks."""
    vals = [fn(acc.blocks[b]) for b in acc.block_ids() if acc.blocks[b].count >= 2]
    nb = len(vals)
    if nb < 2:
        return np.full(len(acc.times), np.nan), nb
    with np.errstate(invalid="ignore"):
        return np.std(np.array(vals), axis=0, ddof=1) / math.sqrt(nb), nb


def compute_series(acc: MomentAccumulator, params: PhysicalParams, names=None) -> ObservableSeries:
    """Evaluate every observable (or ``names``) with batch-mean standard errors.

    Batch errors are only meaningful with many blocks; fewer than
    ``MIN_BATCHES`` still gives numbers but they should be read with care.
    """
    total = _need(acc)
    table = _observable_table(params)
    names = OBSERVABLE_NAMES if names is None else names
    out = ObservableSeries(np.asarray(acc.times), count=total.count)
    with np.errstate(invalid="ignore", divide="ignore"):
        for name in names:
            fn = table[name]
            out.values[name] = fn(total)
            out.errors[name], out.n_batches = batch_standard_error(acc, fn)
    return out
