"""Quantum feature encoding optimization on a classical statevector simulator."""

__version__ = "0.1.0"

from .statevec import BACKEND, Circuit, Statevector, run_circuit  # noqa: F401
from .featuremaps import FeatureMapConfig  # noqa: F401
from .manipulate import ManipulationSpec, apply_manipulation  # noqa: F401
from .pqfm import ProjectedDataset, project  # noqa: F401
from .qfeo import ExperimentConfig, QfeoResult, feature_importance, run_qfeo  # noqa: F401
