"""Verification toolkit for the extracellular-membrane-intracellular model."""

from .core import (Annulus2D, CellLattice3D, ConfigurationError, DomainError,
                   EmiError, FamilyViolationError, GeometrySpec,
                   HemispherePair3D, ModelParams, NumericError, gap_key,
                   ion_current_gap, ion_current_membrane, validate)
from .signals import SignalTerm, TimeSignal, membrane_integral
from .analytic import (MmsFamily, SingleCellFamily, TwoCellFamily,
                       build_mms, build_single_cell, build_two_cell)
from .presets import PRESET_NAMES, get_preset
from .residuals import residual_check
from .splitting import (IntegrationError, SplitProblem, TimeGrid, integrate,
                        lie_trotter_step, relaxation_update)

__version__ = "0.1.0"
