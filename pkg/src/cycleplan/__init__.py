"""Planning support for cycling uptake.

Ingests origin-destination commute data, fits a distance-decay mode
model, projects cycling futures under named scenarios, estimates health
and carbon impacts, aggregates routes into a network layer, and serves
the results as map-ready GeoJSON.
"""

__version__ = "0.1.0"

from .core_data import ODPair, ValidationError, Zone
from .mode_model import ModelCoefficients
from .region_pipeline import PipelineConfig, RegionBundle, build_region
from .scenarios import ScenarioParams

__all__ = [
    "ODPair",
    "ValidationError",
    "Zone",
    "ModelCoefficients",
    "PipelineConfig",
    "RegionBundle",
    "build_region",
    "ScenarioParams",
    "__version__",
]
