"""Trajectory ensembles: configuration, single runs and parallel reduction."""
from __future__ import annotations

import cmath
import logging
import math
import multiprocessing
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass

import numpy as np

from ..params import PhysicalParams
from .dynamics import PhaseSpaceState, TrajectoryDivergence
from .kernel import integrate_block
from .moments import BlockMoments, MomentAccumulator
from .sampling import (
    sample_initial_coherent,
    sample_initial_thermal,
    sample_initial_vacuum,
    trajectory_rngs,
)

log = logging.getLogger(__name__)

INITIAL_STATES = ("coherent", "thermal", "vacuum")

# noise buffer per chunk is capped near this many bytes
_CHUNK_BYTES = 32 * 2**20


class EnsembleConfigError(ValueError):
    pass


class DivergenceWarning(RuntimeWarning):
    pass


@dataclass(frozen=True)
class EnsembleConfig:
    """Everything needed to reproduce an ensemble bit for bit.

    ``power``, ``temperature`` and ``detuning`` override the corresponding
    raw parameters when given.  ``noise_substeps`` > 1 makes each step sum
    that many consecutive normal draws, so a run at ``dt`` follows the same
    Brownian paths as a run at ``dt/noise_substeps`` with the same seed.
    """

    n_trajectories: int
    t_end: float
    dt: float
    record_stride: int = 1
    base_seed: int = 0
    initial_state: str = "thermal"
    power: float | None = None
    temperature: float | None = None
    detuning: float | None = None
    divergence_threshold: float = 1e8
    block_size: int = 500
    corrector_iterations: int = 3
    noise_substeps: int = 1
    max_dt_gamma: float = 0.01

    @property
    def n_steps(self) -> int:
        return (int(round(self.t_end / self.dt)) // self.record_stride) * self.record_stride

    @property
    def n_records(self) -> int:
        return self.n_steps // self.record_stride + 1

    @property
    def n_blocks(self) -> int:
        return -(-self.n_trajectories // self.block_size)

    def times(self) -> np.ndarray:
        return np.arange(self.n_records) * (self.record_stride * self.dt)

    def replace(self, **changes) -> "EnsembleConfig":
        return EnsembleConfig(**{**asdict(self), **changes})

    def effective_params(self, params: PhysicalParams) -> PhysicalParams:
        changes = {}
        if self.power is not None:
            changes["laser_power"] = self.power
        if self.temperature is not None:
            changes["temperature"] = self.temperature
        if self.detuning is not None:
            changes["detuning"] = self.detuning
        return params.with_(**changes) if changes else params

    def validate(self, params: PhysicalParams) -> PhysicalParams:
        """Check the configuration against ``params``; return the effective params."""
        if self.n_trajectories < 1:
            raise EnsembleConfigError("n_trajectories must be >= 1")
        if self.block_size < 1:
            raise EnsembleConfigError("block_size must be >= 1")
        if self.record_stride < 1:
            raise EnsembleConfigError("record_stride must be >= 1")
        if self.noise_substeps < 1:
            raise EnsembleConfigError("noise_substeps must be >= 1")
        if self.corrector_iterations < 1:
            raise EnsembleConfigError("corrector_iterations must be >= 1")
        if self.initial_state not in INITIAL_STATES:
            raise EnsembleConfigError(f"initial_state must be one of {INITIAL_STATES}, got {self.initial_state!r}")
        if not (self.t_end > 0 and self.dt > 0):
            raise EnsembleConfigError("t_end and dt must be positive")
        if self.n_steps < self.record_stride:
            raise EnsembleConfigError("t_end shorter than one record interval")
        eff = self.effective_params(params)
        if self.dt * eff.cavity_decay > self.max_dt_gamma * (1 + 1e-12):
            raise EnsembleConfigError(
                f"dt*gamma = {self.dt * eff.cavity_decay:.3g} exceeds {self.max_dt_gamma:g}; the step must resolve the cavity decay")
        scale = expected_amplitude(eff)
        if not self.divergence_threshold > 10.0 * scale:
            raise EnsembleConfigError(
                f"divergence_threshold {self.divergence_threshold:.3g} is not above 10x the expected amplitude {scale:.3g}")
        return eff


def expected_amplitude(params: PhysicalParams) -> float:
    """Rough upper scale of |alpha| and |beta| for a physical trajectory."""
    field = params.pump / abs(complex(params.cavity_decay, params.detuning))
    shift = 2.0 * params.gA / params.mirror_frequency * field**2
    return max(field, shift, 6.0 * math.sqrt(params.mean_occupation), 1.0)


def initial_state(config: EnsembleConfig, params: PhysicalParams, index: int) -> PhaseSpaceState:
    T = params.temperature
    if config.initial_state == "coherent":
        return sample_initial_coherent(params, T)
    if config.initial_state == "thermal":
        rng, _ = trajectory_rngs(config.base_seed, index)
        return sample_initial_thermal(params, T, rng)
    return sample_initial_vacuum(params, T)


def _kernel_constants(params: PhysicalParams, config: EnsembleConfig) -> tuple:
    return (
        config.dt, params.pump, params.cavity_decay, params.detuning, params.gA,
        params.mirror_frequency, params.mirror_damping,
        cmath.sqrt(complex(params.thermal_coefficient)),
        config.corrector_iterations, config.divergence_threshold,
    )


def _integrate(states: np.ndarray, indices, config: EnsembleConfig, params: PhysicalParams):
    """Integrate trajectories ``indices`` from ``states`` (B, 4).

    Returns records (B, n_records, 4) and the diverged-at step per trajectory
    (-1 when the trajectory stayed bounded).
    """
    B = len(indices)
    stride, sub = config.record_stride, config.noise_substeps
    n_rec = config.n_records
    records = np.empty((B, n_rec, 4), complex)
    records[:, 0] = states
    diverged_at = np.full(B, -1, dtype=np.int64)
    gens = [trajectory_rngs(config.base_seed, j)[1] for j in indices]
    per_record = stride * sub * 5 * 8 * B
    rec_per_chunk = max(1, _CHUNK_BYTES // per_record)
    dt, eps, gam, delta, gA, wm, gm, therm, n_iter, thr = _kernel_constants(params, config)
    r = 1
    while r < n_rec:
        m = min(rec_per_chunk, n_rec - r)
        steps = m * stride
        noise = np.empty((B, steps * sub, 5))
        for k, g in enumerate(gens):
            g.standard_normal(out=noise[k])
        chunk = np.full((B, m, 4), np.nan, complex)
        integrate_block(states, noise, chunk, diverged_at, (r - 1) * stride, steps, stride, sub,
                        dt, eps, gam, delta, gA, wm, gm, therm, n_iter, thr)
        records[:, r:r + m] = chunk
        r += m
    return records, diverged_at


@dataclass
class TrajectoryResult:
    times: np.ndarray
    states: np.ndarray  # (n_records, 4)
    index: int


def run_trajectory(init: PhaseSpaceState, config: EnsembleConfig, params: PhysicalParams,
                   index: int = 0) -> TrajectoryResult:
    """Integrate one trajectory with the noise stream of trajectory ``index``.

    Raises
    ------
    TrajectoryDivergence
        With the time of divergence, if the trajectory escapes.
    """
    eff = config.validate(params)
    states = init.as_array()[None, :].copy()
    records, div = _integrate(states, [index], config, eff)
    if div[0] >= 0:
        raise TrajectoryDivergence(float(div[0] * config.dt), index)
    return TrajectoryResult(config.times(), records[0], index)


def _run_block(block_id: int, config: EnsembleConfig, params: PhysicalParams) -> BlockMoments:
    lo = block_id * config.block_size
    hi = min(config.n_trajectories, lo + config.block_size)
    indices = range(lo, hi)
    states = np.array([initial_state(config, params, j).as_array() for j in indices])
    records, div = _integrate(states, indices, config, params)
    ok = div < 0
    return BlockMoments.from_trajectories(records[ok], diverged=int((~ok).sum()))


def run_ensemble(config: EnsembleConfig, params: PhysicalParams, workers: int = 1,
                 blocks=None, progress=None) -> MomentAccumulator:
    """Run the ensemble and reduce it to a :class:`MomentAccumulator`.

    Blocks of ``config.block_size`` consecutive trajectories are the unit of
    work.  ``blocks`` restricts the run to some block ids, e.g. to spread
    one ensemble over several machines and merge afterwards.  Diverged
    trajectories are excluded from the moments and counted; more than 1%
    diverged raises a :class:`DivergenceWarning` and marks the accumulator
    unreliable.
    """
    eff = config.validate(params)
    ids = list(range(config.n_blocks)) if blocks is None else sorted(blocks)
    acc = MomentAccumulator(config.times(), {}, config.block_size)
    if workers <= 1 or len(ids) <= 1:
        for done, b in enumerate(ids, 1):
            acc.add_block(b, _run_block(b, config, eff))
            if progress:
                progress(done, len(ids))
    else:
        ctx = multiprocessing.get_context("fork")
        with ProcessPoolExecutor(max_workers=workers, mp_context=ctx) as pool:
            futures = {b: pool.submit(_run_block, b, config, eff) for b in ids}
            for done, b in enumerate(ids, 1):
                acc.add_block(b, futures[b].result())
                if progress:
                    progress(done, len(ids))
    if not acc.reliable:
        warnings.warn(
            f"{acc.diverged_count} of {acc.count + acc.diverged_count} trajectories diverged; "
            "moments are unreliable", DivergenceWarning, stacklevel=2)
    log.debug("ensemble done: %d kept, %d diverged", acc.count, acc.diverged_count)
    return acc
