"""Graph coarsening and Laplacian reduction with spectral quality metrics."""

from .eigen import (Bipartition, EigenBasis, EigenConvergenceError, eigs, fiedler_bipartition,
                    polarity_partition)
from .graph import (DisconnectedGraphError, Graph, GraphError, LaplacianMatrix, build_graph,
                    incidence, laplacian, pseudoinverse, random_graph)
from .matchers import (CoarseMap, algdist_matching, algebraic_distances, hem, lesc,
                       leverage_scores)
from .multilevel import (Hierarchy, coarsen_hierarchy, lifted_laplacian, project_to_level,
                         prolong_from_level)
from .ordering import BlockOrdering, coarsen_order, edge_weights, pivot_impacts
from .quality import (QualityReport, delta_pinv_bound_check, eig_sandwich_check, quality_report,
                      resistance_error, sigma_similarity)
from .reduction import (indset_coarsen, kron_reduce, maximal_independent_set,
                        spectral_downsample)
from .spectral import (InterpolationOp, build_C, build_uniform_P, galerkin_coarse, lift,
                       preserve_many, preserve_one)

__version__ = "0.1.0"
