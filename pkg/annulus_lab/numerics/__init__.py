"""
Lõi tính toán: hình học vành khuyên, danh mục dòng chảy, hàm dòng,
đường dòng, bài toán xuyên tâm và so sánh đối xứng.
"""

from .flows import VectorField, catalog, field_from_spec, list_flow_keys
from .geometry import AnnularDomain, JordanPolygon, PolarGrid, make_annulus, polar_grid
from .stream import StreamGrid, stream_from_field
from .tolerances import TOLERANCES, Tolerances

__all__ = [
    "AnnularDomain",
    "JordanPolygon",
    "PolarGrid",
    "StreamGrid",
    "TOLERANCES",
    "Tolerances",
    "VectorField",
    "catalog",
    "field_from_spec",
    "list_flow_keys",
    "make_annulus",
    "polar_grid",
    "stream_from_field",
]
