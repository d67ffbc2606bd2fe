"""Numerical workbench for prequantized sphere geometry.

Library layout:

- `sphere`     chart atlas, prequantum data, curvature checks
- `sections`   sections, rho forms, exponential trajectories, pairings
- `loops`      Fourier loops, holonomy certificates, the SBS search
- `dynamics`   Hamiltonian transport of pairs and the induced field on loops
- `dw`         annulus normal form: q-Fourier x p-power series calculus
- `structure`  lifted complex structure on SBS tangent data
- `quantize`   integer-area fiber enumeration and compatibility checks
- `verify`     one-call residual suite across all of the above
- `service`    FastAPI wrapper; `cli` drives the same handlers from files
"""

from .dw import QPSeries, apply_euler, euler_solve, normalize_neighborhood
from .dynamics import HamiltonianFn, theta_field, transport_pair
from .errors import WorkbenchError
from .expressions import hamiltonian_from_text, parse_expression
from .loops import (BTangent, FailureReport, Loop, SbsPair, enclosed_area,
                    find_sbs, holonomy_defect, make_pair, sbs_residual)
from .quantize import MomentMap, enumerate_bs_fibers, sbs_fiber_compat
from .sections import RhoTangent, Section, exp_trajectory, hermitian_product
from .sphere import ChartPoint, GridSpec, SphereConfig, curvature_residual
from .structure import LiftedVector, apply_I, dp_project, lift
from .tables import PolyTable
from .verify import verify_axioms

__version__ = "0.1.0"

__all__ = [
    "BTangent", "ChartPoint", "FailureReport", "GridSpec", "HamiltonianFn",
    "LiftedVector", "Loop", "MomentMap", "PolyTable", "QPSeries", "RhoTangent",
    "SbsPair", "Section", "SphereConfig", "WorkbenchError", "apply_I",
    "apply_euler", "curvature_residual", "dp_project", "enclosed_area",
    "enumerate_bs_fibers", "euler_solve", "exp_trajectory", "find_sbs",
    "hamiltonian_from_text", "hermitian_product", "holonomy_defect", "lift",
    "make_pair", "normalize_neighborhood", "parse_expression", "sbs_fiber_compat",
    "sbs_residual", "theta_field", "transport_pair", "verify_axioms",
]
