from pathlib import Path
from typing import Dict, List, Mapping, Optional, Sequence, Tuple, Union
import logging

import numpy as np

from models.session import SessionResult, StaircaseConfig, StaircaseState, TrialRecord
from models.simulation import LogisticListener
from models.transcript import DigitLexicon
from models.triplet import DigitTriplet, TripletList
from services.asr_service import MockToneAsr, extract_digits
from services.listener_service import SimulatedParticipant
from services.stimulus_service import StimulusService
from utils.errors import FirstTripletFailure, IncompleteSession, SessionError
from utils.helpers import format_digits, generate_session_id, isoformat, log_session_event, utc_now

logger = logging.getLogger(__name__)


def score_response(presented: DigitTriplet, digit_sequence: Sequence[int], policy: str = 'contiguous') -> bool:
    """Score a filtered response against the presented triplet"""
    target = tuple(presented.digits)
    sequence = tuple(digit_sequence)
    if policy == 'exact':
        return sequence == target
    return any(sequence[i:i + 3] == target for i in range(len(sequence) - 2))


def next_snr(state: StaircaseState, scored_correct: bool, config: Optional[StaircaseConfig] = None) -> float:
    """SNR of the next presentation

    The first triplet is repeated at +first_step_up until it is repeated
    correctly; from then on the staircase moves one step down after a
    correct and one step up after an incorrect response.
    """
    config = config or StaircaseConfig()

    if state.trial_index == 1 and not state.first_resolved and not scored_correct:
        if state.presentations >= config.max_first_trial_presentations:
            raise FirstTripletFailure(
                f"First triplet not repeated correctly after {state.presentations} presentations",
                {'snr': state.snr, 'presentations': state.presentations},
            )
        return config.clamp(state.snr + config.first_step_up)

    if scored_correct:
        return config.clamp(state.snr - config.step)
    return config.clamp(state.snr + config.step)


def compute_srt(snr_history: Union[Mapping[int, float], Sequence[float]], window_start: int = 5,
                final_index: int = 25) -> Tuple[float, float]:
    """Mean and population SD of SNR_window_start .. SNR_final_index

    A plain sequence is read as SNR_1, SNR_2, ...
    """
    if not isinstance(snr_history, Mapping):
        snr_history = {j: snr for j, snr in enumerate(snr_history, start=1)}

    missing = [j for j in range(window_start, final_index + 1) if j not in snr_history]
    if missing:
        raise IncompleteSession(
            f"SNR history lacks trials {missing[0]}..{missing[-1]} of the SRT window",
            {'missing': missing},
        )

    window = np.array([snr_history[j] for j in range(window_start, final_index + 1)], dtype=np.float64)
    return float(window.mean()), float(window.std())


class StaircaseEngine:
    """Run one adaptive digits-in-noise session

    ``audio`` receives each stimulus, ``recorder`` returns the spoken
    response (both may be the same object, e.g. a simulated participant),
    ``asr`` turns the response into a transcript.
    """

    def __init__(self, config: StaircaseConfig, asr, audio, recorder=None,
                 stimulus_service: Optional[StimulusService] = None, lexicon: Optional[DigitLexicon] = None,
                 seed: Optional[int] = None, result_dir: Optional[Union[str, Path]] = None,
                 asr_label: str = '', listener_label: Optional[str] = None):
        self.config = config
        self.asr = asr
        self.audio = audio
        self.recorder = recorder or audio
        self.stimulus_service = stimulus_service or StimulusService()
        self.lexicon = lexicon or DigitLexicon()
        self.seed = seed
        self.result_dir = Path(result_dir) if result_dir else None
        self.asr_label = asr_label
        self.listener_label = listener_label

    def _present(self, session_id: str, trial_index: int, presentation: int, triplet: DigitTriplet,
                 snr: float, rng: np.random.Generator) -> TrialRecord:
        context = {'trial_index': trial_index, 'presentation': presentation, 'presented': triplet, 'snr': snr}

        stimulus = self.stimulus_service.synth_triplet(triplet, snr, rng)
        self.audio.play(stimulus, context)
        response = self.recorder.record(self.config.response_timeout)
        transcript = self.asr.decode(response, context)

        digits = extract_digits(transcript, self.lexicon)
        correct = score_response(triplet, digits, self.config.match_policy)

        log_session_event(
            session_id, f"trial {trial_index}.{presentation}",
            f"{triplet} at {snr:+.1f} dB -> {format_digits(digits) or '-'} "
            f"({'correct' if correct else 'incorrect'})"
        )

        return TrialRecord(
            trial_index=trial_index,
            presentation_count=presentation,
            snr=snr,
            presented=triplet,
            raw_transcript=transcript.tokens,
            digit_sequence=digits,
            scored_correct=correct,
            speech_level=self.config.speech_level(snr),
            noise_level=self.config.noise_level,
            raw_output=transcript.raw_output,
        )

    def _result(self, session_id: str, triplet_list: TripletList, trials: List[TrialRecord],
                repeats: List[TrialRecord], history: Dict[int, float], started_at: str,
                status: str = 'complete', abort_reason: Optional[str] = None) -> SessionResult:
        final_snr = history.get(self.config.final_index)
        srt_mean = srt_sd = None
        if status == 'complete':
            srt_mean, srt_sd = compute_srt(history, self.config.srt_window_start, self.config.final_index)

        return SessionResult(
            session_id=session_id,
            list_id=triplet_list.list_id,
            config=self.config,
            trials=tuple(trials),
            first_trial_repeats=tuple(repeats),
            snr_history=dict(history),
            final_snr=final_snr,
            srt_mean=srt_mean,
            srt_sd=srt_sd,
            started_at=started_at,
            finished_at=isoformat(utc_now()),
            seed=self.seed,
            asr_backend=self.asr_label,
            listener=self.listener_label,
            status=status,
            abort_reason=abort_reason,
        )

    def run_session(self, triplet_list: TripletList, session_id: Optional[str] = None) -> SessionResult:
        config = self.config
        if len(triplet_list) < config.n_trials:
            raise IncompleteSession(f"List {triplet_list.list_id} has fewer than {config.n_trials} triplets")

        session_id = session_id or generate_session_id('DIN', self.seed, salt=triplet_list.list_id)
        rng = np.random.default_rng(self.seed)
        started_at = isoformat(utc_now())
        log_session_event(session_id, "started", f"list {triplet_list.list_id}, seed {self.seed}")

        history: Dict[int, float] = {}
        trials: List[TrialRecord] = []
        repeats: List[TrialRecord] = []
        state = StaircaseState(trial_index=1, snr=config.clamp(config.start_snr))

        try:
            for trial_index in range(1, config.n_trials + 1):
                triplet = triplet_list[trial_index - 1]
                while True:
                    history[trial_index] = state.snr
                    record = self._present(session_id, trial_index, state.presentations, triplet, state.snr, rng)

                    if trial_index == 1 and not record.scored_correct:
                        repeats.append(record)
                        snr = next_snr(state, False, config)
                        state = StaircaseState(1, snr, False, state.presentations + 1)
                        continue

                    trials.append(record)
                    state = StaircaseState(trial_index + 1, next_snr(state, record.scored_correct, config), True, 1)
                    break

            history[config.final_index] = state.snr

        except SessionError as e:
            reason = f"{type(e).__name__}: {e.message}"
            log_session_event(session_id, "aborted", reason)
            partial = self._result(session_id, triplet_list, trials, repeats, history, started_at,
                                   status='aborted', abort_reason=reason)
            if self.result_dir:
                e.partial_log = str(partial.save(self.result_dir / f"{session_id}.partial.json"))
                logger.info(f"Partial session log written to {e.partial_log}")
            raise

        result = self._result(session_id, triplet_list, trials, repeats, history, started_at)
        log_session_event(
            session_id, "completed",
            f"SRT {result.srt_mean:+.2f} dB (sd {result.srt_sd:.2f}), {result.total_presentations} presentations"
        )
        return result


def run_session(triplet_list: TripletList, config: StaircaseConfig, asr, audio, recorder=None,
                **kwargs) -> SessionResult:
    """Run a session with a throwaway engine"""
    return StaircaseEngine(config, asr, audio, recorder=recorder, **kwargs).run_session(triplet_list)


def create_session_handler(config: StaircaseConfig, asr, audio, recorder=None, **kwargs) -> StaircaseEngine:
    """Create staircase engine instance"""
    return StaircaseEngine(config, asr, audio, recorder=recorder, **kwargs)


def create_simulated_session(config: StaircaseConfig, listener: LogisticListener, seed: Optional[int] = None,
                             burst_rate: float = 0.0, asr=None, asr_label: str = 'mock-tone',
                             **kwargs) -> StaircaseEngine:
    """Engine wired to a simulated participant (tone decoder unless another ASR is given)"""
    stimulus_service = kwargs.pop('stimulus_service', None) or StimulusService()
    participant = SimulatedParticipant(listener, stimulus_service=stimulus_service, burst_rate=burst_rate)
    return StaircaseEngine(
        config, asr or MockToneAsr(), participant,
        stimulus_service=stimulus_service,
        seed=seed,
        asr_label=asr_label,
        listener_label=listener.describe(),
        **kwargs
    )
