"""Spread continuous phase modulation with code index modulation and NOMA.

Modules build bottom-up: ``msequence`` -> ``cpm`` -> ``codebook`` ->
``modems`` -> ``channel`` / ``noma`` -> ``analysis`` -> ``harness``.
"""

from .codebook import CpmSsCodebook, build_codebook, verify_theorem1
from .cpm import BasebandFrame, CpmConfig, PulseShape, modulate, viterbi_mlsd
from .errors import ConfigurationError, DegenerateChannelError, InputError, NumericalError
from .modems import CimBaselineConfig, CimConfig, DsssConfig, ImConfig, ImSepConfig, make_modem

__version__ = "0.1.0"

__all__ = [
    "BasebandFrame", "CimBaselineConfig", "CimConfig", "ConfigurationError", "CpmConfig", "CpmSsCodebook",
    "DegenerateChannelError", "DsssConfig", "ImConfig", "ImSepConfig", "InputError", "NumericalError",
    "PulseShape", "build_codebook", "make_modem", "modulate", "verify_theorem1", "viterbi_mlsd",
]
