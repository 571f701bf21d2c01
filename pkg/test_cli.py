#!/usr/bin/env python3
"""
Tests for the din command line: subcommands, artifacts and exit codes
"""

import csv
import hashlib
import json
import os
import shlex
import sys

import pytest

# Add the project root to the path
sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

from app import build_parser, main
from models.session import SessionResult
from models.simulation import SamplingFrame
from models.triplet import get_builtin_list
from utils.dsp import wav_read


def _run_session(tmp_path, seed=7):
    out = tmp_path / f'session-{seed}.json'
    code = main(['run', '--list', '1', '--asr', 'mock-tone', '--listener', 'logistic:-7.3,0.2',
                 '--seed', str(seed), '--out', str(out)])
    assert code == 0
    return out


def test_parser_subcommands():
    parser = build_parser()
    args = parser.parse_args(['simulate', '--frame', 'f.json', '--errors', '0..4'])
    assert args.command == 'simulate'
    assert args.effect_form == 'conditional'
    args = parser.parse_args(['stim', 'synth', '--triplet', '5,2,8', '--snr', '-5', '--out', 'x.wav'])
    assert args.snr == -5.0


def test_run_with_simulated_listener(tmp_path, capsys):
    out = _run_session(tmp_path)
    result = SessionResult.load(out)
    assert result.is_complete
    assert len(result.trials) == 24
    assert result.seed == 7
    assert result.listener == 'logistic:-7.3,0.2,0'
    assert result.asr_backend == 'mock-tone'
    assert 'SRT:' in capsys.readouterr().out


def test_run_is_reproducible(tmp_path, monkeypatch):
    monkeypatch.setenv('SOURCE_DATE_EPOCH', '1700000000')
    first = _run_session(tmp_path / 'a')
    second = _run_session(tmp_path / 'b')
    assert first.read_bytes() == second.read_bytes()


def test_run_with_list_file(tmp_path):
    list_file = tmp_path / 'list.json'
    list_file.write_text(json.dumps(get_builtin_list(4).to_dict()))
    out = tmp_path / 'session.json'
    code = main(['run', '--list-file', str(list_file), '--listener', 'logistic:-7.3,0.2', '--seed', '2',
                 '--out', str(out)])
    assert code == 0
    assert SessionResult.load(out).list_id == '4'


def test_run_aborts_with_partial_log(tmp_path, capsys):
    decoder = tmp_path / 'silent.py'
    decoder.write_text('print("")\n')
    command = f"{shlex.quote(sys.executable)} {shlex.quote(str(decoder))} {{wav}}"
    code = main(['run', '--seed', '3', '--asr-cmd', command, '--result-dir', str(tmp_path / 'results')])
    assert code == 3

    partials = list((tmp_path / 'results').glob('*.partial.json'))
    assert len(partials) == 1
    partial = SessionResult.load(partials[0])
    assert partial.status == 'aborted'
    assert len(partial.first_trial_repeats) == 10
    assert 'Partial log:' in capsys.readouterr().out


def test_run_rejects_bad_input(tmp_path):
    """Test exit status 2 for invalid arguments"""
    test_cases = [
        ['run', '--list', '11'],
        ['run', '--listener', 'logistic:-7.3'],
        ['run', '--list-file', str(tmp_path / 'missing.json')],
    ]
    for argv in test_cases:
        assert main(argv) == 2


def test_negative_seed_is_rejected(tmp_path, capsys):
    session = _run_session(tmp_path)
    capsys.readouterr()
    test_cases = [
        ['run', '--listener', 'logistic:-7.3,0.2', '--seed', '-1', '--out', str(tmp_path / 'r.json')],
        ['simulate', '--from-session', str(session), '--runs', '10', '--seed', '-4',
         '--out', str(tmp_path / 'b.json')],
        ['stim', 'synth', '--triplet', '5,2,8', '--snr', '0', '--seed', '-2', '--out', str(tmp_path / 't.wav')],
    ]
    for argv in test_cases:
        assert main(argv) == 2
        assert 'Seed must be a non-negative integer' in capsys.readouterr().out
    assert not (tmp_path / 'r.json').exists()


def test_argparse_errors_exit_with_status_2():
    with pytest.raises(SystemExit) as error:
        main(['run', '--asr', 'kaldi'])
    assert error.value.code == 2
    with pytest.raises(SystemExit):
        main(['run', '--list', '1', '--list-file', 'x.csv'])


def test_simulate_from_session(tmp_path):
    session = _run_session(tmp_path)
    out = tmp_path / 'bootstrap.json'
    histograms = tmp_path / 'histograms.csv'
    frame_path = tmp_path / 'frame.json'
    code = main(['simulate', '--from-session', str(session), '--runs', '200', '--errors', '0..4', '--seed', '1',
                 '--out', str(out), '--histograms', str(histograms), '--save-frame', str(frame_path)])
    assert code == 0

    report = json.loads(out.read_text())
    assert [item['errors'] for item in report['errors']] == [0, 1, 2, 3, 4]
    assert report['baseline']['session_srt_mean'] == SessionResult.load(session).srt_mean
    assert report['n_runs'] == 200

    with open(out.with_suffix('.csv'), newline='') as handle:
        rows = list(csv.reader(handle))
    assert rows[0] == ['e', 'mu', 'sigma', 'deviation']
    assert len(rows) == 6
    assert histograms.read_text().startswith('e,bin_low,bin_high,count')
    assert SamplingFrame.load(frame_path).first_correct_snr == SessionResult.load(session).first_correct_snr


def test_simulate_is_byte_identical(tmp_path):
    session = _run_session(tmp_path)
    frame_path = tmp_path / 'frame.json'
    assert main(['simulate', '--from-session', str(session), '--runs', '50', '--errors', '0',
                 '--seed', '1', '--out', str(tmp_path / 'x.json'), '--save-frame', str(frame_path)]) == 0

    outputs = []
    for name, workers in (('a.json', '1'), ('b.json', '2')):
        out = tmp_path / name
        code = main(['simulate', '--frame', str(frame_path), '--runs', '150', '--errors', '0..3,8', '--seed', '11',
                     '--effect-counts', '10', '1', '50', '19', '--workers', workers, '--out', str(out)])
        assert code == 0
        outputs.append(out.read_bytes())
    assert outputs[0] == outputs[1]


def test_simulate_rejects_bad_input(tmp_path):
    session = _run_session(tmp_path)
    test_cases = [
        ['simulate', '--runs', '10'],
        ['simulate', '--from-session', str(session), '--errors', '5..2'],
        ['simulate', '--from-session', str(session), '--errors', '30'],
        ['simulate', '--from-session', str(session), '--runs', '0'],
        ['simulate', '--frame', str(tmp_path / 'missing.json')],
    ]
    for argv in test_cases:
        assert main(argv + ['--out', str(tmp_path / 'out.json')]) == 2


def test_stim_synth_and_calibrate(tmp_path, capsys):
    wav = tmp_path / 'stimulus.wav'
    assert main(['stim', 'synth', '--triplet', '5,2,8', '--snr', '-5', '--seed', '1', '--out', str(wav)]) == 0
    waveform = wav_read(wav)
    assert waveform.sample_rate == 16000
    assert 2.0 <= waveform.duration <= 2.4

    bands = tmp_path / 'bands.csv'
    assert main(['calibrate', '--wav', str(wav), '--out', str(bands)]) == 0
    with open(bands, newline='') as handle:
        rows = list(csv.reader(handle))
    assert rows[0] == ['band_hz', 'level_db']
    assert [float(row[0]) for row in rows[1:]][:2] == [50.0, 63.0]
    assert 'Hz' in capsys.readouterr().out


def test_stim_and_calibrate_errors(tmp_path):
    """Test exit status 2 for invalid stimulus requests"""
    test_cases = [
        ['stim', 'synth', '--triplet', '5,5,8', '--snr', '-5', '--out', str(tmp_path / 'a.wav')],
        ['stim', 'synth', '--triplet', '5,2,8', '--snr', '20', '--out', str(tmp_path / 'b.wav')],
        ['calibrate', '--wav', str(tmp_path / 'missing.wav')],
    ]
    for argv in test_cases:
        assert main(argv) == 2


def test_evaluate(tmp_path):
    annotations = tmp_path / 'annotations.csv'
    lines = ['session_id,trial_index,presented,spoken,decoded,group']
    for session_id, group, deleted in (('P01', 'young', 1), ('P02', 'young', 3), ('P03', 'old', 4),
                                       ('P04', 'old', 6)):
        for index, triplet in enumerate(get_builtin_list(3).triplets[:8], start=1):
            decoded = str(triplet)[:2] if index <= deleted else str(triplet)
            lines.append(f'{session_id},{index},{triplet},{triplet},{decoded},{group}')
    annotations.write_text('\n'.join(lines) + '\n')

    out = tmp_path / 'evaluation.json'
    code = main(['evaluate', '--annotations', str(annotations), '--compare', 'young', 'old', '--out', str(out)])
    assert code == 0
    report = json.loads(out.read_text())
    assert report['participants']['P02']['deletions'] == 3
    assert report['participants']['P02']['per_position']['deletions'] == {'3': 3}
    assert report['welch']['n'] == [2, 2]
    assert report['effect_model']['total'] == 14
    assert report['seed'] is None
    assert report['inputs'] == {'annotations.csv': hashlib.sha256(annotations.read_bytes()).hexdigest()}
    assert len(report['config_hash']) == 16


def test_evaluate_with_session_results(tmp_path):
    session = _run_session(tmp_path)
    result = SessionResult.load(session)
    annotations = tmp_path / 'annotations.json'
    annotations.write_text(json.dumps([
        {'session_id': result.session_id, 'trial_index': trial.trial_index, 'spoken': list(trial.digit_sequence)}
        for trial in result.trials
    ]))
    out = tmp_path / 'evaluation.json'
    assert main(['evaluate', '--annotations', str(annotations), '--results', str(session), '--out', str(out)]) == 0
    report = json.loads(out.read_text())
    assert report['pooled_wer'] == 0.0
    assert report['effect_model'] is None
    assert sorted(report['inputs']) == ['annotations.json', session.name]


def test_evaluate_errors(tmp_path):
    bad = tmp_path / 'bad.csv'
    bad.write_text('session_id,trial_index,spoken\nP01,x,528\n')
    assert main(['evaluate', '--annotations', str(bad)]) == 2

    single = tmp_path / 'single.csv'
    single.write_text('session_id,trial_index,presented,spoken,decoded,group\nP01,1,528,528,58,young\n')
    assert main(['evaluate', '--annotations', str(single), '--compare', 'young', 'old']) == 2

    unresolved = tmp_path / 'unresolved.csv'
    unresolved.write_text('session_id,trial_index,spoken\nP01,1,528\n')
    assert main(['evaluate', '--annotations', str(unresolved)]) == 2
