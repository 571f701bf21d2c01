# Handlers package
from .session import (
    StaircaseEngine, compute_srt, create_session_handler, create_simulated_session,
    next_snr, run_session, score_response
)
from .evaluation import (
    EvaluationHandler, align_digits, classify_case, compute_wer, create_evaluation_handler,
    effect_model, welch_t
)
from .simulation import bootstrap, build_frame, fit_gaussian, lookup_p, simulate_run
from .commands import CommandHandler, ReportFormatter, create_command_handler

__all__ = [
    'StaircaseEngine', 'compute_srt', 'create_session_handler', 'create_simulated_session',
    'next_snr', 'run_session', 'score_response',
    'EvaluationHandler', 'align_digits', 'classify_case', 'compute_wer', 'create_evaluation_handler',
    'effect_model', 'welch_t',
    'bootstrap', 'build_frame', 'fit_gaussian', 'lookup_p', 'simulate_run',
    'CommandHandler', 'ReportFormatter', 'create_command_handler'
]
