"""Numerical laboratory for classical and quantum tensor product expanders."""

from tpelab.rng import stream
from tpelab.perms import (
    Permutation,
    PermutationFamily,
    random_permutation,
    compose,
    inverse,
    cycle_count,
    hermitian_family,
    matching_family,
    doubled_counterexample,
    cayley_family,
    cyclic_group_table,
    save_family,
    load_family,
)
from tpelab.classical import (
    Partition,
    ClassicalTpeOperator,
    enumerate_partitions,
    f_count,
    trivial_basis,
    lambda_estimate,
    unit_multiplicity,
)
from tpelab.quantum import (
    UnitaryFamily,
    QuantumTpeOperator,
    haar_unitary,
    hermitian_unitary_family,
    perm_operator_gram,
    twirl_basis,
    lambda_estimate_quantum,
    trace_moment_mc,
    sk_overlap_check,
    save_unitary_family,
    load_unitary_family,
)
from tpelab.channels import (
    KrausChannel,
    SignDiagonal,
    sign_expander,
    z_phase_expander,
    channel_apply,
    channel_gap,
    measure_2tpe_epsilon,
    save_channel,
    load_channel,
)
from tpelab.mixing import (
    MixingTrace,
    iterate_channel,
    iterate_classical,
    required_iterations,
    word_count,
    randomness_exponent,
    state_random_experiment,
)
from tpelab.lemma import (
    LemmaInstance,
    operator_norm,
    sample_lemma_instance,
    check_lemma,
)
from tpelab.spectral import SpectralReport, lambda_h

__version__ = "0.1.0"
