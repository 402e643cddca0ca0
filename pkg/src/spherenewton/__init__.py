"""Newton-type solvers for singularities of nonsmooth vector fields on the
unit sphere, with the absolute value vector field (AVVF) benchmark family."""

__version__ = "0.1.0"

from ._kernels import BACKEND
from .errors import (AntipodalPoints, DegenerateMatrix, DimensionMismatch, InstanceFormatError,
                     LineSearchStall, NotOnSphere, SingularClarkeElement, SphereNewtonError,
                     ZeroDirection)
from .field import AvvfField, ProjectedAffineField, VectorField, avvf_clarke_element, avvf_eval
from .geometry import (TangentBasis, distance, exp, log, parallel_transport, project_to_tangent,
                       tangent_basis)
from .instances import (AvvfInstance, generate_instance, load_instance, random_start,
                        save_instance, start_seed_for)
from .solver import (Direction, DirectionKind, SolverConfig, SolveTrace, Status, gnm_solve,
                     line_search, merit, merit_gradient, newton_direction, nm_solve,
                     nonmonotone_reference, verify_certificates)
