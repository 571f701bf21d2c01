import argparse
import logging
import sys
from typing import List, Optional

# Local imports
from config import get_config
from handlers.commands import CommandHandler, create_command_handler
from models.evaluation import EFFECT_FORMS
from utils.validators import MATCH_POLICIES

logger = logging.getLogger(__name__)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog='din', description='Automated digits-in-noise hearing test toolkit')
    parser.add_argument('-v', '--verbose', action='store_true', help='debug logging')
    parser.add_argument('-q', '--quiet', action='store_true', help='warnings and errors only')
    subparsers = parser.add_subparsers(dest='command', required=True)

    # din run
    run = subparsers.add_parser('run', help='run an adaptive session')
    lists = run.add_mutually_exclusive_group()
    lists.add_argument('--list', type=int, default=1, help='built-in list number 1..10')
    lists.add_argument('--list-file', help='triplet list (JSON or CSV)')
    backends = run.add_mutually_exclusive_group()
    backends.add_argument('--asr', choices=['mock-tone', 'external-process'], help='ASR backend kind')
    backends.add_argument('--asr-cmd', help='external decoder command template containing {wav}')
    run.add_argument('--asr-timeout', type=float, help='decoder timeout in seconds')
    run.add_argument('--listener', help='simulated participant, logistic:<midpoint>,<slope>[,<lapse>]')
    run.add_argument('--burst-rate', type=float, default=0.0,
                     help='probability of a spurious leading burst in simulated responses')
    run.add_argument('--device', action='store_true', help='play and record through the sound card')
    run.add_argument('--manifest', help='stimulus manifest with recorded digits')
    run.add_argument('--match-policy', choices=MATCH_POLICIES)
    run.add_argument('--response-timeout', type=float)
    run.add_argument('--expand-compounds', action='store_true', help='expand Dutch two-digit numerals')
    run.add_argument('--seed', type=int)
    run.add_argument('--result-dir')
    run.add_argument('--out', help='result JSON path')
    run.set_defaults(handler=CommandHandler.cmd_run)

    # din evaluate
    evaluate = subparsers.add_parser('evaluate', help='evaluate decoded responses against annotations')
    evaluate.add_argument('--annotations', required=True, help='annotation CSV or JSON')
    evaluate.add_argument('--results', nargs='*', help='session result files')
    evaluate.add_argument('--match-policy', choices=MATCH_POLICIES)
    evaluate.add_argument('--compare', nargs=2, metavar=('GROUP_A', 'GROUP_B'), help='Welch t-test on WER')
    evaluate.add_argument('--exclude', nargs='*', help='session ids left out of the group comparison')
    evaluate.add_argument('--out', help='report JSON path')
    evaluate.set_defaults(handler=CommandHandler.cmd_evaluate)

    # din simulate
    simulate = subparsers.add_parser('simulate', help='bootstrap simulation of decoding errors')
    sources = simulate.add_mutually_exclusive_group()
    sources.add_argument('--frame', help='sampling frame JSON')
    sources.add_argument('--from-session', help='session result JSON to build the frame from')
    simulate.add_argument('--runs', type=int)
    simulate.add_argument('--errors', default='0..23', help="error counts, e.g. '4', '0..23', '1..4,8'")
    simulate.add_argument('--seed', type=int)
    simulate.add_argument('--effect-form', choices=EFFECT_FORMS, default='conditional')
    simulate.add_argument('--effect-counts', nargs=4, type=int, metavar='N',
                          help='scored-correct row then scored-incorrect row')
    simulate.add_argument('--workers', type=int)
    simulate.add_argument('--histograms', help='histogram CSV path')
    simulate.add_argument('--save-frame', help='write the sampling frame JSON')
    simulate.add_argument('--progress', action='store_true')
    simulate.add_argument('--out', help='report JSON path')
    simulate.set_defaults(handler=CommandHandler.cmd_simulate)

    # din stim synth
    stim = subparsers.add_parser('stim', help='stimulus tools')
    stim_commands = stim.add_subparsers(dest='stim_command', required=True)
    synth = stim_commands.add_parser('synth', help='synthesise one triplet in noise')
    synth.add_argument('--triplet', required=True, help="e.g. '5,2,8'")
    synth.add_argument('--snr', type=float, required=True)
    synth.add_argument('--seed', type=int)
    synth.add_argument('--manifest')
    synth.add_argument('--out', required=True)
    synth.set_defaults(handler=CommandHandler.cmd_stim_synth)

    # din calibrate
    calibrate = subparsers.add_parser('calibrate', help='third-octave band levels of a WAV file')
    calibrate.add_argument('--wav', required=True)
    calibrate.add_argument('--out', help='band level CSV path')
    calibrate.set_defaults(handler=CommandHandler.cmd_calibrate)

    return parser


def configure_logging(config, verbose: bool = False, quiet: bool = False):
    level = getattr(logging, config.LOG_LEVEL.upper(), logging.INFO)
    if verbose:
        level = logging.DEBUG
    elif quiet:
        level = logging.WARNING
    logging.basicConfig(
        level=level,
        format='%(asctime)s - %(name)s - %(levelname)s - %(message)s',
        stream=sys.stderr,
        force=True,
    )


def main(argv: Optional[List[str]] = None) -> int:
    config = get_config()
    args = build_parser().parse_args(argv)
    configure_logging(config, args.verbose, args.quiet)

    handler = create_command_handler(config)
    try:
        return handler.handle(args)
    except Exception as e:
        logger.error(f"Unexpected error in {args.command}: {e}")
        return 1


if __name__ == '__main__':
    sys.exit(main())
