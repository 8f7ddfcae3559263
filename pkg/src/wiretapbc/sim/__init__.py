"""Monte Carlo realisation of the binned superposition wiretap scheme."""

from .design import (DesignError, RateDesign, config_for_target, design_rates,
                     inner_region_for, interior_point, scheme_informations)
from .scheme import (CODEWORD_CAP, ENUM_CAP, Codebook, DecodeResult, EncodeResult, ErrorRate,
                     SimConfig, SimResult, decode, encode, estimate_leakage, gen_codebook,
                     run_trials, simulate, sweep_n, transmit)
from .typical import delta_n, is_cond_typical, is_typical, typical_mask

__all__ = [
    "CODEWORD_CAP", "ENUM_CAP", "Codebook", "DecodeResult", "DesignError", "EncodeResult",
    "ErrorRate", "RateDesign", "SimConfig", "SimResult", "config_for_target", "decode",
    "delta_n", "design_rates", "encode", "estimate_leakage", "gen_codebook",
    "inner_region_for", "interior_point", "is_cond_typical", "is_typical", "run_trials",
    "scheme_informations", "simulate", "sweep_n", "transmit", "typical_mask",
]
