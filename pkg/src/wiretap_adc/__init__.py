"""Secrecy rates for a Gaussian wiretap channel with keyed power modulation
and clipping uniform A/D converters."""

from .entropy import (MiResult, OverflowEvents, QuadratureError, bob_mutual_info,
                      conditional_output_pdf, eve_mutual_info, h_out, h_out_given_x,
                      in_range_prob, mutual_info, to_unit)
from .game import RateReport, alice_maximin, eve_best_response, secrecy_rate
from .quantizer import QuantizerSpec, QuantizerWarning, noise_model_sample, quantize, step
from .signal_model import (ChannelParams, EffectiveObservation, EveStrategy, PowerModulation,
                           bob_effective, eve_effective, snr_to_noise_var, solve_gains)

__version__ = "0.1.0"

__all__ = [
    "ChannelParams", "EffectiveObservation", "EveStrategy", "MiResult", "OverflowEvents",
    "PowerModulation", "QuadratureError", "QuantizerSpec", "QuantizerWarning", "RateReport",
    "alice_maximin", "bob_effective", "bob_mutual_info", "conditional_output_pdf",
    "eve_best_response", "eve_effective", "eve_mutual_info", "h_out", "h_out_given_x",
    "in_range_prob", "mutual_info", "noise_model_sample", "quantize", "secrecy_rate",
    "snr_to_noise_var", "solve_gains", "step", "to_unit",
]
