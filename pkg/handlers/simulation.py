"""Bootstrap simulation of sessions with injected decoding errors.

Each simulated run replays the staircase from the participant's first
correct SNR, drawing spoken correctness from the sampling frame. Error
counts e reuse the same spoken-correctness draws per run (common random
numbers), so differences between e values come from the injected errors
only. Streams are derived with numpy's SeedSequence:

    spoken    SeedSequence(seed, spawn_key=(0, run))
    injection SeedSequence(seed, spawn_key=(1, e, run))
"""
from concurrent.futures import ProcessPoolExecutor
from typing import Collection, Dict, Iterable, List, Optional, Sequence, Tuple
import logging

import numpy as np
from tqdm import tqdm

from models.evaluation import ErrorEffectModel
from models.session import SessionResult, StaircaseConfig
from models.simulation import BootstrapReport, ErrorCountSummary, FrameEntry, SamplingFrame
from services.listener_service import logistic_listener_respond
from utils.errors import EmptySamples, IncompleteSession
from utils.validators import SimulationValidator, ValidationError, raise_for

logger = logging.getLogger(__name__)

_SPOKEN_STREAM = 0
_INJECTION_STREAM = 1


def build_frame(session: SessionResult) -> SamplingFrame:
    """Per-SNR tally of correct responses over every presentation of a session"""
    if not session.is_complete:
        raise IncompleteSession(f"Session {session.session_id} is not complete ({session.status})")

    tallies: Dict[float, List[int]] = {}
    for trial in session.first_trial_repeats + session.trials:
        presented, correct = tallies.setdefault(float(trial.snr), [0, 0])
        tallies[float(trial.snr)] = [presented + 1, correct + int(trial.scored_correct)]

    entries = tuple(FrameEntry(snr=snr, n_presented=n, n_correct=k) for snr, (n, k) in tallies.items())
    return SamplingFrame(entries=entries, first_correct_snr=session.first_correct_snr,
                         source_session=session.session_id)


def lookup_p(frame: SamplingFrame, snr: float) -> float:
    """p_correct at the nearest frame SNR; equidistant neighbours resolve to the lower SNR"""
    return float(_lookup_p_vec(frame.snrs, frame.probabilities, np.array([snr], dtype=np.float64))[0])


def _lookup_p_vec(snrs: np.ndarray, probabilities: np.ndarray, query: np.ndarray) -> np.ndarray:
    # snrs are sorted ascending, argmin keeps the first (lower) of tied neighbours
    nearest = np.argmin(np.abs(query[:, None] - snrs[None, :]), axis=1)
    return probabilities[nearest]


def run_generators(seed: int, errors: int, run: int) -> Tuple[np.random.Generator, np.random.Generator]:
    """(spoken, injection) generators of one bootstrap run"""
    spoken = np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(_SPOKEN_STREAM, run))))
    injection = np.random.Generator(
        np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(_INJECTION_STREAM, errors, run)))
    )
    return spoken, injection


def draw_error_indices(rng: np.random.Generator, errors: int, n_trials: int = 24) -> np.ndarray:
    """``errors`` distinct trial indices from 2..n_trials"""
    if errors == 0:
        return np.empty(0, dtype=int)
    return np.sort(rng.choice(np.arange(2, n_trials + 1), size=errors, replace=False))


def _simulate_batch(snrs: np.ndarray, probabilities: np.ndarray, first_snr: float, config: StaircaseConfig,
                    spoken_u: np.ndarray, error_mask: np.ndarray, flip_u: np.ndarray,
                    flips: Tuple[float, float]) -> np.ndarray:
    """Simulated SRTs of a batch of runs; columns of the draw arrays are trials 2..n_trials"""
    runs = spoken_u.shape[0]
    history = np.empty((runs, config.final_index + 1), dtype=np.float64)
    history[:, 1] = first_snr
    snr = np.full(runs, config.clamp(first_snr - config.step))

    for trial in range(2, config.n_trials + 1):
        column = trial - 2
        history[:, trial] = snr
        spoken = spoken_u[:, column] < _lookup_p_vec(snrs, probabilities, snr)
        flip_p = np.where(spoken, flips[0], flips[1])
        scored = spoken ^ (error_mask[:, column] & (flip_u[:, column] < flip_p))
        snr = np.clip(np.where(scored, snr - config.step, snr + config.step), config.snr_min, config.snr_max)

    history[:, config.final_index] = snr
    return history[:, config.srt_window_start:config.final_index + 1].mean(axis=1)


def simulate_run(frame: SamplingFrame, config: StaircaseConfig, error_indices: Collection[int],
                 effect: ErrorEffectModel, rng: np.random.Generator,
                 injection_rng: Optional[np.random.Generator] = None, form: str = 'conditional') -> float:
    """SRT of one simulated session

    Spoken correctness comes from ``rng``; flips at the error indices come
    from ``injection_rng`` (``rng`` when not given).
    """
    eligible = config.n_trials - 1
    indices = sorted(int(i) for i in error_indices)
    if len(set(indices)) != len(indices) or any(not 2 <= i <= config.n_trials for i in indices):
        raise ValidationError(f"Error indices must be distinct trials in 2..{config.n_trials}", 'error_indices')

    spoken_u = rng.random(eligible)[None, :]
    mask = np.zeros((1, eligible), dtype=bool)
    flip_u = np.zeros((1, eligible))
    if indices:
        mask[0, np.array(indices) - 2] = True
        flip_u = (injection_rng or rng).random(eligible)[None, :]

    srt = _simulate_batch(frame.snrs, frame.probabilities, frame.first_correct_snr, config,
                          spoken_u, mask, flip_u, effect.flip_probabilities(form))
    return float(srt[0])


def fit_gaussian(samples: Sequence[float]) -> Tuple[float, float]:
    """Maximum-likelihood Gaussian: sample mean and population SD"""
    values = np.asarray(samples, dtype=np.float64)
    if values.size == 0:
        raise EmptySamples("Cannot fit a Gaussian to zero samples")
    return float(values.mean()), float(values.std())


def _spoken_draws(seed: int, n_runs: int, eligible: int) -> np.ndarray:
    return np.stack([run_generators(seed, 0, run)[0].random(eligible) for run in range(n_runs)])


def _error_count_samples(frame: SamplingFrame, config: StaircaseConfig, flips: Tuple[float, float],
                         seed: int, errors: int, spoken_u: np.ndarray) -> np.ndarray:
    n_runs, eligible = spoken_u.shape
    mask = np.zeros((n_runs, eligible), dtype=bool)
    flip_u = np.zeros((n_runs, eligible))
    if errors:
        for run in range(n_runs):
            _, injection = run_generators(seed, errors, run)
            mask[run, draw_error_indices(injection, errors, config.n_trials) - 2] = True
            flip_u[run] = injection.random(eligible)
    return _simulate_batch(frame.snrs, frame.probabilities, frame.first_correct_snr, config,
                           spoken_u, mask, flip_u, flips)


def _error_count_task(args) -> np.ndarray:
    return _error_count_samples(*args)


def bootstrap(frame: SamplingFrame, config: StaircaseConfig, effect: ErrorEffectModel, n_runs: int = 10000,
              error_counts: Optional[Iterable[int]] = None, seed: int = 0, form: str = 'conditional',
              workers: int = 1, session_srt_mean: Optional[float] = None, progress: bool = False) -> BootstrapReport:
    """Simulated SRT distributions for each number of injected decoding errors

    ``error_counts`` defaults to 0..n_trials-1. Results do not depend on
    ``workers``.
    """
    raise_for(SimulationValidator.validate_runs(n_runs), 'runs')
    eligible = config.n_trials - 1
    counts = list(range(eligible + 1)) if error_counts is None else list(error_counts)
    counts = raise_for(SimulationValidator.validate_error_counts(counts, eligible), 'errors')['values']
    flips = effect.flip_probabilities(form)

    logger.info(f"Bootstrapping {n_runs} runs for e in {counts[0]}..{counts[-1]} "
                f"(seed {seed}, {form} effect, {workers} worker(s))")

    spoken_u = _spoken_draws(seed, n_runs, eligible)
    wanted = counts if 0 in counts else [0] + counts
    tasks = [(frame, config, flips, seed, errors, spoken_u) for errors in wanted]

    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            iterator = pool.map(_error_count_task, tasks)
            samples = list(tqdm(iterator, total=len(tasks), desc='error counts', disable=not progress))
    else:
        samples = [_error_count_task(task) for task in tqdm(tasks, desc='error counts', disable=not progress)]

    by_errors = dict(zip(wanted, samples))
    baseline_mu, baseline_sigma = fit_gaussian(by_errors[0])

    summaries = []
    for errors in counts:
        mu, sigma = fit_gaussian(by_errors[errors])
        summaries.append(ErrorCountSummary(
            errors=errors,
            mu=mu,
            sigma=sigma,
            deviation=abs(baseline_mu - mu),
            samples=by_errors[errors],
            deviation_from_session=abs(session_srt_mean - mu) if session_srt_mean is not None else None,
        ))
        logger.debug(f"e={errors}: mu {mu:+.3f} dB, sigma {sigma:.3f} dB")

    return BootstrapReport(
        n_runs=n_runs,
        seed=seed,
        effect=effect,
        effect_form=form,
        baseline_mu=baseline_mu,
        baseline_sigma=baseline_sigma,
        summaries=tuple(summaries),
        config_hash=config.hash(),
        source_session=frame.source_session,
        session_srt_mean=session_srt_mean,
    )


__all__ = [
    'build_frame', 'lookup_p', 'run_generators', 'draw_error_indices', 'simulate_run',
    'fit_gaussian', 'bootstrap', 'logistic_listener_respond',
]
