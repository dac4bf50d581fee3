"""Gaussian random numbers from a network of interacting probabilistic bits.

The N-bit readout of a p-bit Ising network with rank-1 couplings follows a
discretized Gaussian with chosen mean and standard deviation. This package
builds those couplings, samples the network (Gibbs or continuous-time), checks
it against exact enumeration, and measures the output statistics.

Set ``PBIT_GRNG_DISABLE_NUMBA=1`` before import to run the kernels as plain
Python.
"""

from ._jit import USE_NUMBA, backend_name
from .config import ExperimentConfig
from .coupling import (
    CouplingSet,
    GrngSpec,
    Mode,
    build_couplings,
    couplings_for,
    dump_couplings,
    materialize_full_matrix,
    parse_coupling_dump,
    truncate_couplings,
    validate_spec,
)
from .errors import (
    CapacityError,
    ConfigurationError,
    DegenerateDataError,
    FormatError,
    GrngError,
    ShapeError,
    ToleranceError,
)
from .oracle import (
    Comparison,
    ExactDistribution,
    compare,
    energy,
    enumerate_states,
    exact_for,
    target_pmf,
    truncated_block_distribution,
)
from .sampler import (
    NetworkState,
    SampleStream,
    StreamMeta,
    autonomous_run,
    free_pbit_trace,
    generate,
    generate_chains,
    gibbs_sweep,
    gibbs_update,
    local_field,
)
from .stats import (
    AnalysisReport,
    GaussianFit,
    analyze,
    autocorrelation,
    combine_streams,
    fit_gaussian,
    normalized_rmse,
    tail_error,
)

__version__ = "0.1.0"
