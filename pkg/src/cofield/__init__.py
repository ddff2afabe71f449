"""Mean-field simulation of collaboration dynamics in coauthorship networks.

The package aggregates individual scientists into states
``(publications, coauthor category, age decade, institutional class)``,
estimates interaction and transition distributions from bibliographic
event data, and iterates the discrete-time master equation to predict
average collaboration behavior per class, validated against an explicit
per-node stochastic simulator.
"""

from .abstraction import (
    ClassMap,
    NodeState,
    ParameterBins,
    ScientistDistribution,
    abstract_classes,
    bin_coauthor_category,
    cap_annual_publications,
    dispersion_test,
    relative_coauthor_count,
    scientific_age_bin,
)
from .corpus import EventLog, load_corpus
from .estimation import (
    ContactMatrix,
    DecayModel,
    KappaTable,
    SmoothedModel,
    annual_to_weekly,
    compute_contact,
    compute_kappa,
    estimate_smoothed,
    initial_occupancy,
    pair_probability,
    uniform_baseline,
)
from .hmm import HmmConfig
from .meanfield import (
    StateSpace,
    build_operator,
    enumerate_states,
    initialize_year,
    run_trajectory,
    step,
)
from .oracle import AgentPopulation, compare_to_meanfield, simulate_agents

__version__ = "0.1.0"
