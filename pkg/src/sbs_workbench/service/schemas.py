"""Request and response bodies for the HTTP surface.

These mirror the JSON documents the library reads and writes; the field
named "schema" in the wire format is carried as `schema_version` here.
Validation of the mathematical content (degree consistency, hermitian
symmetry, loop embeddedness) stays in the library; the models only pin
the document shapes.
"""

from __future__ import annotations

from typing import Any, Optional, Union

from pydantic import BaseModel, ConfigDict, Field


class _Body(BaseModel):
    model_config = ConfigDict(populate_by_name=True)


# -- documents ---------------------------------------------------------------

class SectionDoc(_Body):
    degree: int
    is_global: bool = Field(alias="global")
    coeffs: list[list[float]]
    region_radius: float = 4.0


class LoopDoc(_Body):
    J: int
    coeffs: list[list[float]]
    samples: int = 512


class PairDoc(_Body):
    loop: LoopDoc
    section: SectionDoc


class QPSeriesDoc(_Body):
    n: int
    Np: int
    Nq: int
    terms: list[list[Union[int, float, str]]]


class MomentMapSpec(_Body):
    phi_coeffs: Optional[list[float]] = None
    c_min: Optional[float] = None
    c_max: Optional[float] = None


class LiftedDoc(_Body):
    f0: list[list[float]]
    g0: list[list[float]]
    loop: LoopDoc


class FailureDoc(_Body):
    reason: str
    best_residual: float
    best_defect: float
    iterations: int
    zero_rejections: int = 0


# -- requests -----------------------------------------------------------------

class VerifyAxiomsRequest(_Body):
    level: int = 1
    tol: float = 1e-5
    fd_step: float = 1e-4
    seed: int = 0


class BsCheckRequest(_Body):
    level: int = 1
    loop: LoopDoc
    tol_bs: float = 1e-6


class SbsResidualRequest(_Body):
    level: int = 1
    pair: Optional[PairDoc] = None
    loop: Optional[LoopDoc] = None
    section: Optional[SectionDoc] = None
    tol: float = 1e-6
    tol_bs: float = 1e-6


class FindSbsRequest(_Body):
    level: int = 1
    section: SectionDoc
    seed_loop: LoopDoc
    tol: float = 1e-6
    tol_bs: float = 1e-6
    max_iter: int = 60
    n_samples: int = 256


class FlowRequest(_Body):
    level: int = 1
    pair: PairDoc
    hamiltonian: str
    t: float = 1.0
    steps: int = 500


class LiftRequest(_Body):
    level: int = 1
    loop: LoopDoc
    f0: list[list[float]]
    g0: list[list[float]]


class EulerSolveRequest(_Body):
    series: QPSeriesDoc
    sigma: int = 1


class EnumerateFibersRequest(_Body):
    level: int = 1
    mu: Optional[MomentMapSpec] = None
    include_poles: bool = False
    n_levels: int = 512


class LoopTraceRequest(_Body):
    loop: LoopDoc


class FieldScanRequest(_Body):
    expression: str
    half_width: float = 2.0
    n: int = 41


# -- responses ----------------------------------------------------------------

class _Reply(_Body):
    schema_version: int = Field(default=1, alias="schema")


class HealthResponse(_Reply):
    status: str
    version: str


class CheckRow(_Body):
    name: str
    residual: float
    bound: float
    ok: bool = Field(alias="pass")


class VerifyAxiomsResponse(_Reply):
    level: int
    tol: float
    fd_step: float
    seed: int
    checks: list[CheckRow]
    all_pass: bool


class BsCheckResponse(_Reply):
    level: int
    defect: float
    area: float
    is_bs: bool
    tol_bs: float


class SbsResidualResponse(_Reply):
    level: int
    bs_defect: float
    sbs_residual: float
    is_sbs: bool
    tol: float
    tol_bs: float


class FindSbsResponse(_Reply):
    level: int
    found: bool
    pair: Optional[PairDoc] = None
    bs_defect: Optional[float] = None
    sbs_residual: Optional[float] = None
    enclosed_area: Optional[float] = None
    report: Optional[FailureDoc] = None


class TransportMeta(_Body):
    hamiltonian: str
    t: float
    steps: int
    base_section: SectionDoc


class FlowResponse(_Reply):
    level: int
    loop: LoopDoc
    bs_defect: float
    sbs_residual: float
    error_estimate: float
    transport: TransportMeta


class LiftResponse(_Reply):
    level: int
    lifted: LiftedDoc
    coherence: float


class EulerSolveResponse(_Reply):
    sigma: int
    series: QPSeriesDoc


class FiberEntryDoc(_Body):
    level: float
    r2: Optional[float]
    area: float
    defect: float
    loop: Optional[LoopDoc]


class CompatRow(_Body):
    level: float
    m: int
    residual: float


class EnumerateFibersResponse(_Reply):
    level: int
    count: int
    entries: list[FiberEntryDoc]
    basis: list[str]
    compat: list[CompatRow]


class CsvResponse(_Reply):
    csv: str


class ErrorBody(_Body):
    type: str
    message: str


class ErrorResponse(_Body):
    error: ErrorBody


def doc(model: BaseModel) -> dict[str, Any]:
    return model.model_dump(by_alias=True)
