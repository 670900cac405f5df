"""primerace: computational prime number races.

Race weights on (Z/qZ)^x, Dirichlet L-function zeros, truncated explicit
formulas, Wasserstein-1 equidistribution bounds, the limiting distribution
of the race error and its logarithmic density, constructions of moduli with
forced-large least residue/nonresidue primes, and Skewes-number searches.
"""

from .analysis import (
    DensityEstimate,
    RunConfig,
    SkewesResult,
    log_density,
    run_pipeline,
    skewes_search,
)
from .chowla import (
    ConstructionCertificate,
    conjecture_diagnostic,
    construct_q,
    construct_q_prime,
    is_probable_prime,
    jacobi,
    least_qr_nr,
    load_certificate,
    save_certificate,
    verify_certificate,
)
from .explicit import (
    TruncatedModel,
    almost_periodicity_gap,
    build_model,
    pi_psi_bridge,
    psi_truncated,
)
from .limiting import (
    LimitingDistribution,
    MuHat,
    RandomModel,
    bias_summary,
    build_random_model,
    eli_threshold,
    invert_density,
    lipschitz_constant_D,
    mu_hat,
    mu_hat_l1,
)
from .primes import (
    PrimeTable,
    RaceTrajectory,
    pi_weighted,
    psi_weighted,
    sieve,
    theta_weighted,
    trajectory,
)
from .residues import (
    DirichletCharacter,
    RaceWeight,
    UnitGroup,
    WeightStats,
    build_unit_group,
    characters,
    mean_shift,
    r_map,
    race_weight_from_values,
    race_weight_qr_nr,
    race_weight_two_class,
    rad,
    residue_split,
    rho,
    star,
    weight_stats,
)
from .wasserstein import (
    EmpiricalMeasure,
    KWBound,
    TorusOrbitSpec,
    kw_bound,
    lipschitz_bracket,
    orbit_fourier,
    w1_circle,
    w1_duality_lower_bound,
    w1_line,
)
from .zeros import (
    ZeroStore,
    compute_zeros,
    count_zeros,
    ensure_coverage,
    ingest_zeros,
    zero_pair_sum,
    zero_sums,
)

__version__ = "0.1.0"
