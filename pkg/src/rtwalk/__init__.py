"""Exact spectra, distances and simulations for the random transposition walk
on permutations with one-sided interval restrictions."""

__version__ = "0.1.0"

from .errors import CapExceededError, EmptyWalkError, InconsistencyError, NotTwoStepError
from .restricted import (
    RestrictedPermutation,
    RestrictionVector,
    TwoStepParams,
    count_permutations,
    degree,
    enumerate_permutations,
    equivalence_classes,
    is_allowed_transposition,
    neighbors,
    sample_uniform,
    two_step_vector,
)
