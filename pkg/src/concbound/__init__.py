"""Upper bounds on the number of integer points in {x >= 0, Ax = b} from the
maximum-entropy product of geometric distributions, with exact and Monte Carlo
oracles to check them."""
from .basis_bounds import BasisCover, best_basis, bound_cor1, bound_thm1, cover_by_bases
from .gaussian_bounds import (
    BasisPartition,
    Thm2Constants,
    bound_thm2,
    optimize_gamma,
    partition_into_bases,
    thm2_constants,
    thm2b_closed_forms,
)
from .lognum import BoundReport, LogNumber
from .maxent import (
    MaxEntSolution,
    SolveOptions,
    SolverError,
    entropy_geometric,
    entropy_inverse,
    entropy_total,
    solve_maxent,
)
from .model import PolytopeSpec, SpecError, gen_simplex, gen_transportation, load_spec, make_spec, validate
from .oracles import (
    ExactCount,
    McEstimate,
    conc_quadrature,
    conc_sum_geometrics,
    count_exact,
    count_exact_binomial,
    count_transportation,
    estimate_count_mc,
)
from .poset_bounds import ChainProductSpec, asymptotic_conc, bound_thm3, conc_chain, detect_cyclic, width_exact

__version__ = "0.1.0"
