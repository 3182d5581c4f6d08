"""chaintest: certified hypothesis tests for Markov chain Monte Carlo.

Decide whether the stationary mean of a bounded function under a reversible
chain exceeds a threshold, with proven non-asymptotic error bounds; includes
an absolute-spectral-gap estimator, exact finite-chain oracles, a
Metropolis-Hastings sampler, and an ODE-model case study wired through a
reproducible CLI harness.
"""

from ._kernels import backend_name
from .chains import (
    FiniteChain,
    FiniteChainSource,
    ReplaySource,
    SampleSource,
    Trajectory,
    check_detailed_balance,
    simulate_finite,
    stationary_of,
)
from .errors import (
    ChainTestError,
    ConfigError,
    DegenerateFunctionError,
    DivergenceError,
    InsufficientSamples,
    SourceExhausted,
    ValidationError,
)
from .hyptest import (
    Decision,
    Schedule,
    TestConfig,
    TestOutcome,
    default_burn_in,
    expected_stop_indiff,
    expected_stop_noindiff,
    fixed_length_test,
    g_threshold,
    hoeffding_tail,
    m_threshold,
    required_n,
    seq_indiff_test,
    seq_noindiff_test,
    stop_tail_indiff,
    xi_default,
)
from .mh import (
    MHChain,
    MHSource,
    MHState,
    PriorBox,
    ProposalSpec,
    gaussian_loglik,
    mh_step,
    run_chain,
)
from .spectral import (
    GapEstimate,
    autocovariance,
    estimate_gap,
    eta_for,
    exact_gap_finite,
    gap_from_ratio,
)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
