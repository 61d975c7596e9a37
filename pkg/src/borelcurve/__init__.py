"""borelcurve: resurgence toolkit for singularly perturbed linear ODEs whose
Borel transforms live on parametric algebraic curves.

Computes germ expansions, the algebraic curve itself, singularity and
Stokes graphs (with higher-order truncation), Stokes constants,
automorphism words along paths, inner-outer matched transseries constants,
and numerically verified Borel-Laplace resummations.
"""

__version__ = "0.1.0"

from .exact import CurvePoly, GaussianRational, Poly, RatFunc
from .ode import OdeSpec, Singulant, characteristic_roots, integrate_singulant
from .borelpde import (BorelPde, Germ, SectorSeries, origin_sequence_mp,
                       perturbative_germ, sector_recursion, to_borel_pde)
from .ansatz import AnsatzShape, CurveNotFound, consistency_system, find_curve
from .geometry import (SingularityGraph, borel_singularities, continue_branch,
                       eval_branches, germ_at, origin_germ_from_curve,
                       singularity_graph, visibility)
from .stokes import (SingulantField, StokesGraphData, StokesLine, seed_points,
                     stokes_graph, trace_line, truncate, turning_points,
                     turning_points_curve)
from .largeorder import (DarbouxFit, coefficient_saddle_integral, fit_darboux,
                         richardson, stokes_constant)
from .automorphisms import (Generator, TransseriesState, apply_generator,
                            apply_word, check_path_equivalence, reduce_word,
                            word_along_path)
from .outer import StokesSeries, convolve_constants, normalize_sector
from .innerouter import (InnerFrame, PsiGrid, consistency_check, inner_grid,
                         match_darboux, match_link, recover_constants, select_links)
from .resummation import LateralSum, laplace_sum, ode_oracle, stokes_jump
from . import systems
