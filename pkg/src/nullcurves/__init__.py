"""Null curves and conformal minimal surfaces: Weierstrass data, periods,
isotopy classes, convex integration of quadric-valued paths, and
period-correcting sprays."""

__version__ = "0.1.0"

from .catalog import CatalogEntry, get_entry, load_catalog
from .convexint import (
    CutoffProfile,
    DeformConfig,
    HomotopyOfPaths,
    PathFamily,
    ShellConfig,
    TargetSchedule,
    convex_blend,
    convex_decompose,
    deform_paths,
    endpoint_splice,
    oscillate,
    retract_path,
)
from .domain import (
    BasisLoop,
    DiscretePath,
    PuncturedDomain,
    contour_integral,
    homology_basis,
    make_domain,
    sample_loop,
    winding_number,
)
from .mesh import export_mesh
from .quadric import (
    DirectionVariety,
    is_nonflat,
    nondegeneracy_rank,
    on_quadric,
    residual,
    retract,
    spinor_lift,
    spinor_monodromy,
    spinor_project,
    tangent_frame,
)
from .rational import QI, Poly, RationalMap, parse_rational
from .spray import (
    SprayConfig,
    SprayedMap,
    TangentFlow,
    apply_flow,
    correct_to_null,
    default_config,
    evaluate_spray,
    isotope_family,
    period_jacobian,
    solve_periods,
)
from .verify import VerificationReport, verify_minimal
from .weierstrass import (
    IsotopyClass,
    PeriodVector,
    PolarGrid,
    RationalVector,
    SurfaceGrid,
    WeierstrassData,
    classify,
    flux,
    from_gw,
    integrate_complex,
    integrate_real,
    nullity_residual,
    periods,
    winding_parity_class,
)
