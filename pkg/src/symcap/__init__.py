"""symcap: numerical experiments around symplectic non-squeezing.

Subpackages build a scaled-and-rotated circle-times-sphere Lagrangian, the
cone over its area-generating loops, action spectra and a capacity ledger,
box-counting and shadow diagnostics, area-preserving planar embeddings,
squeezing pipelines, and Hamiltonian displacement-energy probes.  Everything
is deterministic under an explicit seed.
"""

from .cone import (
    SampledSet,
    assemble_union_set,
    load_pointcloud,
    pointcloud_csv,
    sample_lagrangian,
    save_pointcloud,
)
from .core import (
    BallSpec,
    CylinderSpec,
    Loop,
    PhasePoint,
    PolydiscSpec,
    complex_to_real,
    liouville_integral,
    omega0,
    real_to_complex,
    smooth_bump,
    smooth_step,
    standard_form_matrix,
    symplecticity_defect,
)
from .embed2d import (
    GridMap2D,
    RectangleDomain,
    StarShapedDomain,
    moser_correct,
    radial_embed,
    volume_embed,
)
from .energy import (
    CylinderProbeReport,
    DisplacementCertificate,
    FlowBlowupError,
    FlowPath,
    Hamiltonian,
    candidate_family,
    chord_ramp_hamiltonian,
    cylinder_energy_probe,
    directional_hamiltonian,
    displacement_check,
    flow,
    flow_points,
    hofer_norm,
    linear_ramp_hamiltonian,
    sample_truncated_cylinder,
)
from .lagrangian import (
    LoopLift,
    PhaseSphereLagrangian,
    conjugate_symmetric_model,
    lift,
    permute_middle_coordinate,
    random_area_loop,
)
from .measure import (
    BoxCountReport,
    ContainmentReport,
    RotationSearchResult,
    box_dimension,
    containment,
    find_avoiding_rotation,
    shadow_area,
)
from .spectra import (
    ActionSpectrum,
    BestSplit,
    CoisoProductSpec,
    LedgerRow,
    ap_spectrum,
    capacity_ledger,
    coiso_product_area,
    hopf_circle_loop,
    ledger_to_csv,
    ledger_to_json,
    optimal_split,
    product_spectrum,
    real_gcd,
    sphere_spectrum,
    torus_factor_loop,
    torus_spectrum,
)
from .squeeze import SqueezeReport, squeeze_pipeline

__all__ = [
    "ActionSpectrum",
    "BallSpec",
    "BestSplit",
    "BoxCountReport",
    "CoisoProductSpec",
    "ContainmentReport",
    "CylinderProbeReport",
    "CylinderSpec",
    "DisplacementCertificate",
    "FlowBlowupError",
    "FlowPath",
    "GridMap2D",
    "Hamiltonian",
    "LedgerRow",
    "Loop",
    "LoopLift",
    "PhasePoint",
    "PhaseSphereLagrangian",
    "PolydiscSpec",
    "RectangleDomain",
    "RotationSearchResult",
    "SampledSet",
    "SqueezeReport",
    "StarShapedDomain",
    "ap_spectrum",
    "assemble_union_set",
    "box_dimension",
    "candidate_family",
    "capacity_ledger",
    "chord_ramp_hamiltonian",
    "coiso_product_area",
    "complex_to_real",
    "conjugate_symmetric_model",
    "containment",
    "cylinder_energy_probe",
    "directional_hamiltonian",
    "displacement_check",
    "find_avoiding_rotation",
    "flow",
    "flow_points",
    "hofer_norm",
    "hopf_circle_loop",
    "ledger_to_csv",
    "ledger_to_json",
    "lift",
    "linear_ramp_hamiltonian",
    "liouville_integral",
    "load_pointcloud",
    "moser_correct",
    "omega0",
    "optimal_split",
    "permute_middle_coordinate",
    "pointcloud_csv",
    "product_spectrum",
    "radial_embed",
    "random_area_loop",
    "real_gcd",
    "real_to_complex",
    "sample_lagrangian",
    "sample_truncated_cylinder",
    "save_pointcloud",
    "shadow_area",
    "smooth_bump",
    "smooth_step",
    "sphere_spectrum",
    "squeeze_pipeline",
    "standard_form_matrix",
    "symplecticity_defect",
    "torus_factor_loop",
    "torus_spectrum",
    "volume_embed",
]

__version__ = "0.1.0"
