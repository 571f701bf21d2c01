from pathlib import Path
from typing import Any, Dict, Optional, TextIO
import logging
import sys

import numpy as np

from handlers.evaluation import build_responses, create_evaluation_handler, load_annotations
from handlers.session import create_session_handler, create_simulated_session
from handlers.simulation import bootstrap, build_frame
from models.evaluation import ErrorEffectModel
from models.session import SessionResult, StaircaseConfig
from models.simulation import BootstrapReport, LogisticListener, SamplingFrame
from models.stimulus import StimulusManifest
from models.transcript import AsrBackendSpec, DigitLexicon
from models.triplet import DigitTriplet, TripletList, get_builtin_list
from services.asr_service import create_asr_service
from services.audio_service import create_audio_service
from services.stimulus_service import create_stimulus_service
from utils.dsp import third_octave_levels, wav_read, wav_write
from utils.errors import DinError
from utils.helpers import file_digest, format_db, parse_error_range, write_csv, write_json
from utils.validators import SimulationValidator, ValidationError, raise_for

logger = logging.getLogger(__name__)


class ReportFormatter:
    """Human-readable summaries for standard output"""

    @staticmethod
    def session_summary(result: SessionResult, path: Path) -> str:
        return (
            f"Session {result.session_id} (list {result.list_id}, seed {result.seed})\n"
            f"  SRT: {format_db(result.srt_mean)}  (sd {result.srt_sd:.2f} dB)\n"
            f"  Final SNR: {format_db(result.final_snr, 1)}\n"
            f"  Presentations: {result.total_presentations} "
            f"({len(result.first_trial_repeats)} first-triplet repeats)\n"
            f"  Result: {path}"
        )

    @staticmethod
    def evaluation_summary(report: Dict[str, Any], path: Optional[Path]) -> str:
        lines = ["Participant            WER      I    D    S   error triplets"]
        for session_id, summary in report['participants'].items():
            wer = f"{summary['wer']:6.2f}%" if summary['wer'] is not None else "   n/a "
            lines.append(
                f"{session_id:<20} {wer} {summary['insertions']:4d} {summary['deletions']:4d} "
                f"{summary['substitutions']:4d}   {summary['n_error_triplets']}"
            )
        lines.append(f"Pooled WER: {report['pooled_wer']:.2f}%")

        effect = report.get('effect_model')
        if effect:
            joint = effect['joint']
            lines.append(
                "Effect model (joint): "
                f"{joint['affecting_given_correct']:.3f} {joint['affecting_given_incorrect']:.3f} "
                f"{joint['not_affecting_given_correct']:.3f} {joint['not_affecting_given_incorrect']:.3f}"
            )

        welch = report.get('welch')
        if welch:
            lines.append(f"Welch: t({welch['df']:.2f}) = {welch['t']:.2f}, p = {welch['p']:.3f}")
        if path:
            lines.append(f"Report: {path}")
        return "\n".join(lines)

    @staticmethod
    def bootstrap_summary(report: BootstrapReport, path: Path) -> str:
        lines = [
            f"Bootstrap: {report.n_runs} runs, seed {report.seed}, {report.effect_form} effect",
            f"  Baseline: mu {format_db(report.baseline_mu)}, sigma {report.baseline_sigma:.2f} dB",
            "   e      mu (dB)   sigma   deviation",
        ]
        for item in report.summaries:
            lines.append(f"  {item.errors:2d}   {item.mu:+8.2f}   {item.sigma:5.2f}   {item.deviation:6.2f}")
        lines.append(
            f"  Largest e within {report.acceptable_deviation:.2f} dB: {report.max_acceptable_errors}"
        )
        lines.append(f"  Report: {path}")
        return "\n".join(lines)

    @staticmethod
    def band_levels(levels: Dict[float, float]) -> str:
        return "\n".join(f"{centre:8.0f} Hz  {level:7.1f} dB" for centre, level in levels.items())

    @staticmethod
    def error_message(error: Exception) -> str:
        return f"Error: {getattr(error, 'message', str(error))}"


def _resolve_seed(seed: Optional[int]) -> int:
    if seed is not None:
        return raise_for(SimulationValidator.validate_seed(seed), 'seed')['seed']
    return int(np.random.SeedSequence().entropy % (2 ** 31))


class CommandHandler:
    """Dispatch parsed command-line arguments to the workflows"""

    def __init__(self, config, out: TextIO = None):
        self.config = config
        self.out = out or sys.stdout

    def _emit(self, text: str):
        print(text, file=self.out)

    def handle(self, args) -> int:
        """Run a subcommand and map failures to exit codes"""
        try:
            return args.handler(self, args)
        except ValidationError as e:
            logger.error(f"Invalid input ({e.field}): {e.message}")
            self._emit(ReportFormatter.error_message(e))
            return ValidationError.code
        except DinError as e:
            logger.error(f"{type(e).__name__}: {e.message}")
            self._emit(ReportFormatter.error_message(e))
            if getattr(e, 'partial_log', None):
                self._emit(f"Partial log: {e.partial_log}")
            return e.code
        except (KeyError, ValueError) as e:
            # malformed JSON/CSV inputs
            logger.error(f"Malformed input: {e}")
            self._emit(ReportFormatter.error_message(e))
            return ValidationError.code

    def _staircase(self, args) -> StaircaseConfig:
        return StaircaseConfig.from_config(self.config).with_overrides(
            match_policy=getattr(args, 'match_policy', None),
            response_timeout=getattr(args, 'response_timeout', None),
        )

    def _triplet_list(self, args) -> TripletList:
        if args.list_file:
            return TripletList.load(args.list_file)
        return get_builtin_list(args.list)

    def _stimulus_service(self, args):
        manifest = StimulusManifest.load(args.manifest) if getattr(args, 'manifest', None) else None
        return create_stimulus_service(manifest)

    def cmd_run(self, args) -> int:
        staircase = self._staircase(args)
        triplet_list = self._triplet_list(args)
        seed = _resolve_seed(args.seed)
        result_dir = Path(args.result_dir or self.config.DIN_RESULT_DIR)
        lexicon = DigitLexicon(expand_compounds=args.expand_compounds or self.config.DIN_EXPAND_COMPOUNDS)
        stimulus_service = self._stimulus_service(args)

        if args.asr_cmd:
            spec = AsrBackendSpec.from_config(self.config, 'external-process', args.asr_cmd, args.asr_timeout)
        else:
            spec = AsrBackendSpec.from_config(self.config, args.asr, None, args.asr_timeout)
        asr = create_asr_service(spec)

        options = dict(stimulus_service=stimulus_service, lexicon=lexicon, result_dir=result_dir)
        if args.listener:
            listener = LogisticListener.parse(args.listener)
            listener.rng = np.random.default_rng([seed, 1])
            engine = create_simulated_session(staircase, listener, seed, burst_rate=args.burst_rate,
                                              asr=asr, asr_label=spec.describe(), **options)
        else:
            audio = create_audio_service('device' if args.device else 'loopback',
                                         record_rate=self.config.DIN_RECORD_SAMPLE_RATE,
                                         output_rate=spec.sample_rate)
            engine = create_session_handler(staircase, asr, audio, seed=seed, asr_label=spec.describe(), **options)

        result = engine.run_session(triplet_list)
        path = result.save(Path(args.out) if args.out else result_dir / f"{result.session_id}.json")
        self._emit(ReportFormatter.session_summary(result, path))
        return 0

    def cmd_evaluate(self, args) -> int:
        rows = load_annotations(args.annotations)
        inputs = {Path(args.annotations).name: file_digest(args.annotations)}
        results = {}
        for result_path in args.results or []:
            result = SessionResult.load(result_path)
            results[result.session_id] = result
            inputs[Path(result_path).name] = file_digest(result_path)

        handler = create_evaluation_handler(args.match_policy or self.config.DIN_MATCH_POLICY)
        report = handler.build_report(
            build_responses(rows, results),
            results,
            compare=tuple(args.compare) if args.compare else None,
            exclude=args.exclude or (),
            inputs=inputs,
        )
        path = write_json(args.out, report) if args.out else None
        self._emit(ReportFormatter.evaluation_summary(report, path))
        return 0

    def cmd_simulate(self, args) -> int:
        session_srt_mean = None
        staircase = self._staircase(args)
        if args.from_session:
            session = SessionResult.load(args.from_session)
            frame = build_frame(session)
            staircase = session.config
            session_srt_mean = session.srt_mean
        elif args.frame:
            frame = SamplingFrame.load(args.frame)
        else:
            raise ValidationError("Give a sampling frame (--frame) or a session result (--from-session)", 'frame')

        try:
            error_counts = parse_error_range(args.errors)
        except ValueError as e:
            raise ValidationError(str(e), 'errors')

        effect = ErrorEffectModel.from_flat(args.effect_counts) if args.effect_counts else ErrorEffectModel.published()
        seed = _resolve_seed(args.seed)
        runs = self.config.DIN_SIM_RUNS if args.runs is None else args.runs

        report = bootstrap(
            frame, staircase, effect,
            n_runs=runs,
            error_counts=error_counts,
            seed=seed,
            form=args.effect_form,
            workers=args.workers or self.config.DIN_SIM_WORKERS,
            session_srt_mean=session_srt_mean,
            progress=args.progress,
        )

        out = Path(args.out) if args.out else Path(self.config.DIN_RESULT_DIR) / f"bootstrap-{seed}.json"
        path = report.save(out)
        write_csv(out.with_suffix('.csv'), ['e', 'mu', 'sigma', 'deviation'], report.summary_rows())
        if args.histograms:
            write_csv(args.histograms, ['e', 'bin_low', 'bin_high', 'count'], report.histogram_rows())
        if args.save_frame:
            frame.save(args.save_frame)

        self._emit(ReportFormatter.bootstrap_summary(report, path))
        return 0

    def cmd_stim_synth(self, args) -> int:
        triplet = DigitTriplet.parse(args.triplet)
        staircase = StaircaseConfig.from_config(self.config)
        if not staircase.snr_min <= args.snr <= staircase.snr_max:
            raise ValidationError(
                f"SNR {args.snr} dB outside {staircase.snr_min:g}..{staircase.snr_max:g} dB", 'snr'
            )

        service = self._stimulus_service(args)
        waveform = service.synth_triplet(triplet, args.snr, np.random.default_rng(_resolve_seed(args.seed)))
        path = wav_write(args.out, waveform)
        self._emit(f"Wrote {triplet} at {format_db(args.snr, 1)} SNR ({waveform.duration:.3f} s) to {path}")
        return 0

    def cmd_calibrate(self, args) -> int:
        levels = third_octave_levels(wav_read(args.wav))
        if args.out:
            write_csv(args.out, ['band_hz', 'level_db'], [(centre, round(level, 3)) for centre, level in levels.items()])
        self._emit(ReportFormatter.band_levels(levels))
        return 0


def create_command_handler(config, out: TextIO = None) -> CommandHandler:
    """Create command handler instance"""
    return CommandHandler(config, out=out)
