"""Age-of-information analysis for single-source preemptive networks.

Four mutually-verifying routes to the stationary age law at every node (and
node subset): exact subset recursion, MGF recursion with numerical
inversion, Monte Carlo shortest-path sampling, and discrete-event
simulation of the actual preemptive dynamics.
"""

from .cascade import BlockChain, chain_average_ages, decompose_chain
from .closed_forms import (
    TriangleRates,
    serial_cascade_age,
    triangle_age,
    triangle_cascade_age,
    triangle_min_tail,
)
from .exact import (
    AgeTable,
    MgfQuery,
    TailQuery,
    average_age,
    average_age_all,
    cdf_via_inversion,
    chernoff_bound,
    mgf,
    mgf_convergence_bound,
)
from .network import (
    AugmentedNetwork,
    Boundary,
    EdgeSpec,
    NetworkSpec,
    boundary,
    parse_network,
    validate_ssn,
)
from .sampler import (
    Functional,
    RngPolicy,
    SampleBatch,
    empirical_cdf,
    estimate,
    fold_estimate,
    sample_ages,
    sample_target_ages,
)
from .simulator import (
    SimConfig,
    SimResult,
    equal_age_fraction,
    simulate,
    time_average,
    time_average_stderr,
    violation_fraction,
)

__version__ = "0.1.0"

__all__ = [
    "AgeTable",
    "AugmentedNetwork",
    "BlockChain",
    "Boundary",
    "EdgeSpec",
    "Functional",
    "MgfQuery",
    "NetworkSpec",
    "RngPolicy",
    "SampleBatch",
    "SimConfig",
    "SimResult",
    "TailQuery",
    "TriangleRates",
    "average_age",
    "average_age_all",
    "boundary",
    "cdf_via_inversion",
    "chain_average_ages",
    "chernoff_bound",
    "decompose_chain",
    "empirical_cdf",
    "equal_age_fraction",
    "estimate",
    "fold_estimate",
    "mgf",
    "mgf_convergence_bound",
    "parse_network",
    "sample_ages",
    "sample_target_ages",
    "serial_cascade_age",
    "simulate",
    "time_average",
    "time_average_stderr",
    "triangle_age",
    "triangle_cascade_age",
    "triangle_min_tail",
    "validate_ssn",
    "violation_fraction",
]
