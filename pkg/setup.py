from setuptools import find_packages, setup

setup(
    name='din-asr',
    version='1.0.0',
    description='Automated digits-in-noise hearing test with ASR scoring and bootstrap error simulation',
    packages=find_packages(include=['handlers', 'handlers.*', 'models', 'models.*',
                                    'services', 'services.*', 'utils', 'utils.*']),
    py_modules=['app', 'config'],
    python_requires='>=3.9',
    install_requires=[
        'python-dotenv>=1.0.0',
        'python-dateutil>=2.8.2',
        'numpy>=1.22',
        'scipy>=1.11',
        'tqdm>=4.60',
    ],
    extras_require={
        'device': ['sounddevice>=0.4.6'],
        'test': ['pytest>=7.0', 'hypothesis>=6.0'],
    },
    entry_points={
        'console_scripts': ['din=app:main'],
    },
)
