import numpy as np


def rms_error(computed, reference, skip_initial: bool = True) -> float:
    """
    Root-mean-square error over grid points and components.

    Args:
        computed: states of shape (M + 1, N) on the output grid
        reference: reference states with the same shape
        skip_initial: leave out the shared initial point

    Returns:
        sqrt(sum ||computed_n - reference_n||^2 / (M * N))
    """
    computed = np.asarray(computed, dtype=float)
    reference = np.asarray(reference, dtype=float)
    if computed.shape != reference.shape:
        raise ValueError(f"Shape mismatch: {computed.shape} vs {reference.shape}")
    if skip_initial and computed.shape[0] > 1:
        computed = computed[1:]
        reference = reference[1:]
    difference = computed - reference
    if not np.all(np.isfinite(difference)):
        return float("inf")
    return float(np.sqrt(np.mean(difference ** 2)))
