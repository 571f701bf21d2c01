#!/usr/bin/env python3
"""
Tests for the ASR bridge: digit extraction, tone decoder, external decoders
"""

import os
import shlex
import sys
from pathlib import Path

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

# Add the project root to the path
sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

from config import TestingConfig
from models.stimulus import Waveform
from models.transcript import DIGIT_WORDS, AsrBackendSpec, DigitLexicon, Transcript
from models.triplet import DigitTriplet
from services.asr_service import (
    ExternalAsrService, MockToneAsr, ScriptedAsr, create_asr_service, decode_external, detect_tone_frames,
    extract_digits, mock_tone_decode
)
from services.stimulus_service import StimulusService
from utils.errors import AsrOutputUnparseable, AsrTimeout, AsrUnavailable, WrongSampleRate
from utils.validators import ValidationError

FILLERS = ('eh', 'uhm', 'ja', 'nee', 'de', 'dat', 'was')


def _tokens(*words):
    return Transcript(tokens=tuple(words))


def test_extract_digits():
    """Test digit filtering of transcripts"""
    test_cases = [
        (('vijf', 'twee', 'acht'), (5, 2, 8)),
        (('eh', 'vijf', 'twee', 'acht', 'ja'), (5, 2, 8)),
        (('1', '5', '2', '8'), (1, 5, 2, 8)),
        (('één', 'nul', 'negen'), (1, 0, 9)),
        (('twee', 'twee'), (2, 2)),
        ((), ()),
    ]
    for tokens, expected in test_cases:
        assert extract_digits(_tokens(*tokens)) == expected


def test_extract_digits_normalises_case_and_punctuation():
    transcript = Transcript.from_text('Vijf, TWEE... acht!\n')
    assert transcript.tokens == ('vijf,', 'twee...', 'acht!')
    assert transcript.raw_output == 'Vijf, TWEE... acht!\n'
    assert extract_digits(transcript) == (5, 2, 8)


def test_compound_expansion_is_optional():
    transcript = _tokens('vijfentwintig', 'drie')
    assert extract_digits(transcript) == (3,)
    assert extract_digits(transcript, DigitLexicon(expand_compounds=True)) == (2, 5, 3)
    assert DigitLexicon(expand_compounds=True).lookup('tweeëndertig') == (3, 2)
    assert DigitLexicon(expand_compounds=True).lookup('twaalf') == (1, 2)


def test_lexicon_validation():
    with pytest.raises(ValidationError):
        DigitLexicon(words={'een': 1})
    with pytest.raises(ValidationError):
        DigitLexicon(words=dict({str(d): d for d in range(10)}, tien=10))


@given(st.lists(st.one_of(st.integers(0, 9), st.sampled_from(FILLERS)), max_size=12))
def test_extract_digits_keeps_order(items):
    words = [DIGIT_WORDS[item] if isinstance(item, int) else item for item in items]
    digits = extract_digits(_tokens(*words))
    assert digits == tuple(item for item in items if isinstance(item, int))
    # idempotent on digit-only transcripts
    assert extract_digits(_tokens(*[DIGIT_WORDS[d] for d in digits])) == digits


def test_mock_decoder_round_trip():
    service = StimulusService()
    waveform = service.synth_triplet(DigitTriplet(5, 2, 8), 10.0, np.random.default_rng(0))
    transcript = mock_tone_decode(waveform)
    assert transcript.tokens == ('vijf', 'twee', 'acht')
    assert transcript.source == 'mock'


@settings(max_examples=30, deadline=None)
@given(st.permutations(list(range(10))), st.integers(0, 10), st.integers(0, 2 ** 16))
def test_mock_decoder_round_trip_above_zero_db(digits, snr, seed):
    triplet = DigitTriplet(*digits[:3])
    waveform = StimulusService().synth_triplet(triplet, float(snr), np.random.default_rng(seed))
    assert extract_digits(MockToneAsr().decode(waveform)) == triplet.digits


def test_mock_decoder_loses_digits_in_heavy_noise():
    waveform = StimulusService().synth_triplet(DigitTriplet(5, 2, 8), -40.0, np.random.default_rng(0))
    assert len(extract_digits(mock_tone_decode(waveform))) < 3


def test_mock_decoder_silence():
    assert mock_tone_decode(Waveform.silence(2.0)).tokens == ()
    assert mock_tone_decode(Waveform(np.zeros(100), 16000)).tokens == ()
    assert len(detect_tone_frames(Waveform(np.zeros(100), 16000))) == 0


def test_mock_decoder_reads_spoken_responses():
    service = StimulusService()
    rng = np.random.default_rng(3)
    response = service.synth_response((1, 5, 2, 8), rng)
    assert mock_tone_decode(response).tokens == ('een', 'vijf', 'twee', 'acht')

    with_burst = service.synth_response((5, 2, 8), rng, leading_burst=True)
    assert mock_tone_decode(with_burst).tokens == ('een', 'vijf', 'twee', 'acht')


def _script(tmp_path, body):
    path = tmp_path / 'decoder.py'
    path.write_text('import sys\n' + body + '\n')
    return f"{shlex.quote(sys.executable)} {shlex.quote(str(path))} {{wav}}"


def _external(command, timeout=10.0, working_dir=None):
    return ExternalAsrService(
        AsrBackendSpec(kind='external-process', command=command, timeout=timeout, working_dir=working_dir)
    )


def _response():
    return Waveform(np.zeros(1600), 16000)


def test_external_decoder_pass_through(tmp_path):
    decoder = _external(_script(tmp_path, "print('Vijf twee acht')"))
    transcript = decoder.decode(_response())
    assert transcript.tokens == ('vijf', 'twee', 'acht')
    assert transcript.raw_output == 'Vijf twee acht\n'
    assert transcript.source == 'external-asr'

    spec = AsrBackendSpec(kind='external-process', command=_script(tmp_path, "print('nul een')"))
    assert extract_digits(decode_external(_response(), spec)) == (0, 1)


def test_external_decoder_receives_pcm_wav(tmp_path):
    body = (
        "import wave\n"
        "with wave.open(sys.argv[1], 'rb') as handle:\n"
        "    ok = (handle.getframerate(), handle.getsampwidth(), handle.getnchannels()) == (16000, 2, 1)\n"
        "print('nul' if ok else 'negen')"
    )
    assert _external(_script(tmp_path, body)).decode(_response()).tokens == ('nul',)


def test_external_decoder_working_dir(tmp_path):
    workdir = tmp_path / 'work'
    workdir.mkdir()
    decoder = _external(_script(tmp_path, "import os\nprint(os.getcwd())"), working_dir=str(workdir))
    assert Path(decoder.decode(_response()).raw_output.strip()).resolve() == workdir.resolve()


def test_external_decoder_failures(tmp_path):
    """Test mapping of decoder failures onto ASR errors"""
    test_cases = [
        ("sys.exit(3)", 10.0, AsrUnavailable),
        ("import time\ntime.sleep(10)", 0.5, AsrTimeout),
        ("sys.stdout.buffer.write(b'\\xff\\xfe vijf')", 10.0, AsrOutputUnparseable),
        ("sys.stdout.write('vijf\\x00twee')", 10.0, AsrOutputUnparseable),
    ]
    for body, timeout, error in test_cases:
        with pytest.raises(error):
            _external(_script(tmp_path, body), timeout=timeout).decode(_response())


def test_external_decoder_missing_binary(tmp_path):
    decoder = _external(f"{tmp_path / 'no-such-decoder'} {{wav}}")
    with pytest.raises(AsrUnavailable):
        decoder.decode(_response())


def test_external_decoder_sample_rate(tmp_path):
    decoder = _external(_script(tmp_path, "print('vijf')"))
    with pytest.raises(WrongSampleRate):
        decoder.decode(Waveform(np.zeros(4000), 40000))


def test_backend_spec_validation():
    test_cases = [
        {'kind': 'kaldi'},
        {'kind': 'external-process'},
        {'kind': 'external-process', 'command': 'decode.sh input.wav'},
        {'kind': 'mock-tone', 'timeout': 0.0},
    ]
    for values in test_cases:
        with pytest.raises(ValidationError):
            AsrBackendSpec(**values)


def test_backend_spec_from_config():
    spec = AsrBackendSpec.from_config(TestingConfig, command='decode {wav}')
    assert spec.kind == 'external-process'
    assert spec.describe() == 'external-process:decode {wav}'
    assert AsrBackendSpec.from_config(TestingConfig, kind='mock-tone').command is None


def test_scripted_decoder():
    decoder = ScriptedAsr(['vijf twee acht', ['een', 'drie'], None])
    assert decoder.decode().tokens == ('vijf', 'twee', 'acht')
    assert decoder.decode().tokens == ('een', 'drie')
    assert decoder.decode().tokens == ()
    with pytest.raises(AsrUnavailable):
        decoder.decode()

    contextual = ScriptedAsr(lambda context: [DIGIT_WORDS[d] for d in context['presented'].digits])
    assert contextual.decode(None, {'presented': DigitTriplet(4, 0, 7)}).tokens == ('vier', 'nul', 'zeven')


def test_create_asr_service():
    assert isinstance(create_asr_service(), MockToneAsr)
    external = create_asr_service(AsrBackendSpec(kind='external-process', command='decode {wav}'))
    assert isinstance(external, ExternalAsrService)
    assert isinstance(create_asr_service(AsrBackendSpec(kind='scripted'), script=['nul']), ScriptedAsr)
    with pytest.raises(AsrUnavailable):
        create_asr_service(AsrBackendSpec(kind='scripted'))
