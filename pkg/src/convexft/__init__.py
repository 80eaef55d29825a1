"""Fourier transforms of convex indicators, their spherical averages and
lattice-point discrepancies."""

from convexft.errors import (
    AllZeros,
    BodySpecError,
    ConvexFTError,
    DegeneratePatch,
    DimensionUnsupported,
    EmptyInterior,
    InsufficientData,
    NonSmoothPoint,
    QuadratureBudgetExceeded,
    UnboundedBody,
)
from convexft.geometry import (
    AxisBox,
    Ball,
    BoundaryPatch,
    ConvexBody,
    Ellipsoid,
    PBall,
    PolytopeH,
    Rotated,
    Rotation,
    check_c32,
    check_secant_property,
    decompose_boundary,
    make_ball,
    make_box,
    make_ellipsoid,
    make_pball,
    make_polytope_h,
    make_polytope_v,
    normal_at,
    parse_body,
    random_rotation,
    rotate,
    sphere_family_rotation,
    support,
    translate,
)
from convexft.fourier import (
    FtValue,
    QuadratureSpec,
    ft,
    ft_boundary_divergence,
    ft_closed_ball,
    ft_closed_box,
    ft_many,
    ft_mc_oracle,
    ft_polar_oracle,
    ft_polytope_exact,
    ft_surface_measure,
)
from convexft.sphere import SphereScheme, l2_average, l2_average_surface, sample_directions
from convexft.decay import DecaySeries, SlopeFit, fit_exponent, geometric_grid, resolving_ppo, scan
from convexft.lattice import (
    DiscrepancyEnsemble,
    count_points,
    count_points_brute,
    rotation_ensemble,
    lattice_exponent_fit,
    rotational_l2,
)

__version__ = "0.1.0"
