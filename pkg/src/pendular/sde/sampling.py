"""Initial mirror states and per-trajectory random streams."""
from __future__ import annotations

import math

import numpy as np

from ..params import HBAR, K_B, ParameterError, PhysicalParams
from .dynamics import PhaseSpaceState


def trajectory_rngs(base_seed: int, index: int) -> tuple[np.random.Generator, np.random.Generator]:
    """Independent (initial-state, noise) generators for one trajectory.

    Streams are keyed only on ``(base_seed, index)`` through
    :class:`numpy.random.SeedSequence` spawn keys, so a trajectory draws the
    same numbers no matter how the ensemble is split across workers.
    """
    init = np.random.SeedSequence(base_seed, spawn_key=(index, 0))
    noise = np.random.SeedSequence(base_seed, spawn_key=(index, 1))
    return np.random.Generator(np.random.SFC64(init)), np.random.Generator(np.random.SFC64(noise))


def _occupation(params: PhysicalParams, T: float) -> float:
    if not T >= 0:
        raise ParameterError("temperature", f"must be non-negative, got {T!r}")
    return K_B * T / (HBAR * params.mirror_frequency)


def sample_initial_coherent(params: PhysicalParams, T: float) -> PhaseSpaceState:
    """Real coherent mirror state with |beta|^2 = k_B T / hbar omega_m; cavity empty."""
    b = math.sqrt(_occupation(params, T))
    return PhaseSpaceState(0j, 0j, complex(b), complex(b))


def sample_initial_thermal(params: PhysicalParams, T: float, rng: np.random.Generator) -> PhaseSpaceState:
    """Draw beta from the thermal P-function exp(-|beta|^2/n)/(pi n).

    beta+ starts as conj(beta) and the phase is uniform; the cavity is empty.
    """
    n = _occupation(params, T)
    re, im = rng.standard_normal(2)
    b = complex(re, im) * math.sqrt(n / 2.0)
    return PhaseSpaceState(0j, 0j, b, b.conjugate())


def sample_initial_vacuum(params: PhysicalParams = None, T: float = 0.0) -> PhaseSpaceState:
    return PhaseSpaceState(0j, 0j, 0j, 0j)
