import os
from dotenv import load_dotenv

load_dotenv()


def _flag(name: str, default: str = 'False') -> bool:
    return os.getenv(name, default).lower() in ('1', 'true', 'yes')


class Config:
    # Staircase configuration
    DIN_START_SNR = float(os.getenv('DIN_START_SNR', '-5'))
    DIN_FIRST_STEP_UP = float(os.getenv('DIN_FIRST_STEP_UP', '4'))
    DIN_STEP = float(os.getenv('DIN_STEP', '2'))
    DIN_NOISE_LEVEL = float(os.getenv('DIN_NOISE_LEVEL', '65'))
    DIN_SPEECH_LEVEL_MIN = float(os.getenv('DIN_SPEECH_LEVEL_MIN', '42'))
    DIN_SPEECH_LEVEL_MAX = float(os.getenv('DIN_SPEECH_LEVEL_MAX', '75'))
    DIN_N_TRIALS = int(os.getenv('DIN_N_TRIALS', '24'))
    DIN_SRT_WINDOW_START = int(os.getenv('DIN_SRT_WINDOW_START', '5'))
    DIN_MAX_FIRST_PRESENTATIONS = int(os.getenv('DIN_MAX_FIRST_PRESENTATIONS', '10'))
    DIN_MATCH_POLICY = os.getenv('DIN_MATCH_POLICY', 'contiguous')
    DIN_RESPONSE_TIMEOUT = float(os.getenv('DIN_RESPONSE_TIMEOUT', '5.0'))

    # ASR configuration
    DIN_ASR_CMD = os.getenv('DIN_ASR_CMD')
    DIN_ASR_WORKDIR = os.getenv('DIN_ASR_WORKDIR')
    DIN_ASR_TIMEOUT = float(os.getenv('DIN_ASR_TIMEOUT', '30'))
    DIN_ASR_SAMPLE_RATE = int(os.getenv('DIN_ASR_SAMPLE_RATE', '16000'))
    DIN_EXPAND_COMPOUNDS = _flag('DIN_EXPAND_COMPOUNDS')

    # Audio
    DIN_RECORD_SAMPLE_RATE = int(os.getenv('DIN_RECORD_SAMPLE_RATE', '40000'))

    # Output
    DIN_RESULT_DIR = os.getenv('DIN_RESULT_DIR', 'results')

    # Simulation
    DIN_SIM_RUNS = int(os.getenv('DIN_SIM_RUNS', '10000'))
    DIN_SIM_WORKERS = int(os.getenv('DIN_SIM_WORKERS', '1'))

    # Logging
    LOG_LEVEL = os.getenv('LOG_LEVEL', 'INFO')

    # Environment
    ENVIRONMENT = os.getenv('ENVIRONMENT', 'development')
    DEBUG = _flag('DEBUG')


class DevelopmentConfig(Config):
    DEBUG = True


class ProductionConfig(Config):
    DEBUG = False


class TestingConfig(Config):
    TESTING = True
    DIN_SIM_RUNS = 2000
    DIN_RESULT_DIR = os.getenv('DIN_RESULT_DIR', 'test-results')


config_dict = {
    'development': DevelopmentConfig,
    'production': ProductionConfig,
    'testing': TestingConfig
}


def get_config():
    return config_dict.get(os.getenv('ENVIRONMENT', 'development'), DevelopmentConfig)
