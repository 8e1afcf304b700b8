"""Numerical workbench for leaf-wise intersection points on centrally
symmetric star-shaped hypersurfaces, plus the exact GF(2) ladder homology
of the orbit-manifold complex.

Library layout:

    symplectic   fixed conventions (omega, J, primitive, flows)
    surfaces     radial-profile hypersurfaces and their deformation family
    hamiltonians even perturbation Hamiltonians, bumps, radial cutoff
    leafwise     flow-based verification oracle
    action       discretised action functional, gradient, explicit seeds
    solver       Newton refinement, continuation, extraction, dedup
    gf2          GF(2) elimination
    complexes    Morse/ladder complexes, quotients, homology, spectrum
    config, cli  key-value configuration and the `rfh` command

See also demos/ for narrative walkthroughs of each capability.
"""

from .symplectic import (apply_j, omega_pairing, liouville_form,
                         central_involution, hamiltonian_vector_field,
                         integrate_flow, FlowError)
from .surfaces import RadialSurface, SurfaceError, GuardBallError, \
    sphere_samples
from .hamiltonians import (PerturbationHamiltonian, build_hamiltonian,
                           cutoff_hamiltonian, CutoffError)
from .leafwise import (LeafwiseReport, leafwise_check,
                       closed_characteristic_probe, OffSurfaceError)
from .action import (DiscreteLoopState, TimeWeights, action,
                     action_gradient, gradient_norm, seed_reeb_orbit,
                     constant_seed, state_norm)
from .solver import (SolverOptions, CriticalPoint, ContinuationTrace,
                     RefineError, ContinuationError, refine_critical_point,
                     continue_to_target, extract_leafwise_point,
                     dedup_reports)
from .gf2 import gf2_rank, gf2_row_echelon
from .complexes import (Generator, GradedComplexGF2, HomologyTable,
                        sphere_morse_complex, morse_index_oracle,
                        quotient_by_involution, rabinowitz_ladder,
                        gf2_homology, action_spectrum)
from .config import RunConfig, ConfigError, parse_config

__version__ = "0.1.0"
