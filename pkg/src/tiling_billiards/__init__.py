"""Tiling billiards in periodic triangle and cyclic quadrilateral tilings."""

from .billiard import Status, TrajectoryRecord, classify, energy, parallel_foliation, perturb_and_compare, refract, trace, trace_chord
from .errors import TilingBilliardsError
from .geom import CyclicPolygon, circumcircle, contains_circumcenter, is_cyclic, quad_from_positions, reflect_direction, triangle_from_angles
from .helicoid import HelicoidModel, euler_genus, rectify, saddles, surface_membership
from .iet import IETWithFlips, coding_crosscheck, first_return_iet
from .tiling import Color, TileAddress, Tiling

__version__ = "0.1.0"

__all__ = [
    "Color",
    "CyclicPolygon",
    "HelicoidModel",
    "IETWithFlips",
    "Status",
    "TileAddress",
    "Tiling",
    "TilingBilliardsError",
    "TrajectoryRecord",
    "circumcircle",
    "classify",
    "coding_crosscheck",
    "contains_circumcenter",
    "energy",
    "euler_genus",
    "first_return_iet",
    "is_cyclic",
    "parallel_foliation",
    "perturb_and_compare",
    "quad_from_positions",
    "rectify",
    "reflect_direction",
    "refract",
    "saddles",
    "surface_membership",
    "trace",
    "trace_chord",
    "triangle_from_angles",
]
