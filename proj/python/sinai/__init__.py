"""Random walk in a one-dimensional random environment."""

from ._core import (
    DerivedScales,
    DistSpec,
    Environment,
    SinaiError,
    Valley,
    basic_valley,
    check_good_environment,
    derived_scales,
    exit_prob,
    expected_exit_time,
    expected_exit_times,
    refine,
    run_experiment,
    second_moment_exit_adjacent,
    simulate,
)

__all__ = [
    "DerivedScales",
    "DistSpec",
    "Environment",
    "SinaiError",
    "Valley",
    "basic_valley",
    "check_good_environment",
    "derived_scales",
    "exit_prob",
    "expected_exit_time",
    "expected_exit_times",
    "refine",
    "run_experiment",
    "second_moment_exit_adjacent",
    "simulate",
]
