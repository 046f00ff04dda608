"""PUF-RLA mutual-authentication protocol: python bindings over the C++ core."""

from _pufrla import (
    AttackReport,
    BchCode,
    BitString,
    MetricsReport,
    PufConfig,
    PufInstance,
    SweepResult,
    System,
    balance_check,
    calibrate_sigma,
    compute_metrics,
    default_seed_hex,
    deshuffle,
    deshuffle_tuples,
    hamming_distance,
    helper_gen,
    odd_challenges,
    recover,
    shuffle,
    shuffle_tuples,
    splitmix_next,
)

__all__ = [
    "AttackReport",
    "BchCode",
    "BitString",
    "MetricsReport",
    "PufConfig",
    "PufInstance",
    "SweepResult",
    "System",
    "balance_check",
    "calibrate_sigma",
    "compute_metrics",
    "default_seed_hex",
    "deshuffle",
    "deshuffle_tuples",
    "hamming_distance",
    "helper_gen",
    "odd_challenges",
    "recover",
    "shuffle",
    "shuffle_tuples",
    "splitmix_next",
]
