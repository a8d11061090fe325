"""Positive-P drift, diffusion and noise matrices, and a reference stepper.

Variables are ordered (alpha, alpha+, beta, beta+).  In the doubled phase
space alpha+ is independent of alpha and only equals conj(alpha) on average.
The Lindblad-completion terms of order hbar omega_m / k_B T are dropped from
the diffusion, so ``noise_matrix @ noise_matrix.T`` reproduces
``diffusion_matrix`` exactly.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..params import PhysicalParams

N_NOISES = 5


class TrajectoryDivergence(FloatingPointError):
    """A trajectory left the bounded region; ``time`` is when (if known)."""

    def __init__(self, time: float | None = None, index: int | None = None):
        where = "" if time is None else f" at t={time:.6g} s"
        who = "" if index is None else f" (trajectory {index})"
        super().__init__(f"trajectory diverged{where}{who}")
        self.time = time
        self.index = index


@dataclass(frozen=True)
class PhaseSpaceState:
    alpha: complex
    alpha_plus: complex
    beta: complex
    beta_plus: complex

    def as_array(self) -> np.ndarray:
        return np.array([self.alpha, self.alpha_plus, self.beta, self.beta_plus], dtype=complex)

    @classmethod
    def from_array(cls, z) -> "PhaseSpaceState":
        a, ap, b, bp = (complex(v) for v in z)
        return cls(a, ap, b, bp)

    @classmethod
    def classical(cls, alpha: complex, beta: complex) -> "PhaseSpaceState":
        """A point on the classical manifold alpha+ = conj(alpha), beta+ = conj(beta)."""
        alpha, beta = complex(alpha), complex(beta)
        return cls(alpha, alpha.conjugate(), beta, beta.conjugate())


def _as_vec(state) -> np.ndarray:
    if isinstance(state, PhaseSpaceState):
        return state.as_array()
    return np.asarray(state, dtype=complex)


def pp_drift(state, params: PhysicalParams, detuning: float = 0.0) -> np.ndarray:
    """Deterministic part of the four positive-P equations."""
    a, ap, b, bp = _as_vec(state)
    eps, gam, gA = params.pump, params.cavity_decay, params.gA
    wm, gm = params.mirror_frequency, params.mirror_damping
    xb = b + bp
    n = ap * a
    return np.array([
        eps - complex(gam, detuning) * a + 1j * gA * a * xb,
        eps - complex(gam, -detuning) * ap - 1j * gA * ap * xb,
        -1j * wm * b - gm * (b - bp) + 1j * gA * n,
        1j * wm * bp + gm * (b - bp) - 1j * gA * n,
    ])


def diffusion_matrix(state, params: PhysicalParams) -> np.ndarray:
    """4x4 complex symmetric diffusion matrix D (kappa terms dropped)."""
    a, ap, _, _ = _as_vec(state)
    gA = params.gA
    t = params.thermal_coefficient
    D = np.zeros((4, 4), dtype=complex)
    D[0, 2] = D[2, 0] = -1j * gA * a
    D[1, 3] = D[3, 1] = 1j * gA * ap
    D[2, 2] = D[3, 3] = t
    D[2, 3] = D[3, 2] = -t
    return D


def noise_matrix(state, params: PhysicalParams) -> np.ndarray:
    """4x5 noise matrix N with N N^T = D, principal-branch square roots."""
    a, ap, _, _ = _as_vec(state)
    gA = params.gA
    th = np.sqrt(complex(params.thermal_coefficient))
    s1 = np.sqrt(-1j * gA * a / 2)
    s2 = np.sqrt(1j * gA * a / 2)
    s3 = np.sqrt(1j * gA * ap / 2)
    s4 = np.sqrt(-1j * gA * ap / 2)
    return np.array([
        [0, s1, s2, 0, 0],
        [0, 0, 0, s3, -s4],
        [-th, s1, -s2, 0, 0],
        [th, 0, 0, s3, s4],
    ], dtype=complex)


def psd_report(matrix) -> tuple[bool, float]:
    """(is positive semidefinite, smallest eigenvalue) of the Hermitian part."""
    M = np.asarray(matrix, dtype=complex)
    H = 0.5 * (M + M.conj().T)
    w = np.linalg.eigvalsh(H)
    lo = float(w[0])
    tol = 1e-12 * max(1.0, float(np.max(np.abs(w))))
    return lo >= -tol, lo


def is_diffusion_psd(state, params: PhysicalParams) -> tuple[bool, float]:
    """Whether the diffusion matrix at ``state`` could drive an ordinary
    Fokker-Planck equation. For the pendular cavity it never can: the mirror
    diagonal gamma_m (1 - 2 k_B T / hbar omega_m) is negative."""
    return psd_report(diffusion_matrix(state, params))


def step(state, params: PhysicalParams, detuning: float, dt: float, dW,
         n_iter: int = 3, threshold: float | None = None) -> PhaseSpaceState:
    """One semi-implicit midpoint step of dX = drift dt + N(X) dW.

    ``dW`` are the five Wiener increments for this step (already scaled by
    sqrt(dt)); the same increments are reused in every corrector iteration.
    Since the Ito and Stratonovich forms of these equations coincide, the
    midpoint rule needs no correction term.

    This is the readable reference implementation; ensembles run through the
    compiled kernel in :mod:`pendular.sde.kernel`.
    """
    x0 = _as_vec(state)
    dW = np.asarray(dW, dtype=float)
    mid = x0.copy()
    for _ in range(n_iter):
        mid = x0 + 0.5 * (pp_drift(mid, params, detuning) * dt + noise_matrix(mid, params) @ dW)
    x1 = 2.0 * mid - x0
    if threshold is not None and not np.all(np.abs(x1) <= threshold):
        raise TrajectoryDivergence()
    return PhaseSpaceState.from_array(x1)
