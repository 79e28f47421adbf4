"""Quantum maps on the two-torus, phase-space representations, eigenstate statistics
and random-wave ensembles."""

from .classical import S_CAT, S_DEGI, BakerMap, CatMap, KickedCatMap, PhasePoint, SymplecticMatrix
from .errors import CutoffError, DomainError, FormatError, NumericalError, ParityError, ToruslabError
from .maps import eigensystem, egorov_defect, perturbed_cat, quantize_baker, quantize_cat
from .obsparse import format_observable, parse_observable
from .phase_space import husimi_grid, stellar_zeros
from .torus import TorusObservable, TorusState, coherent_state, cos_mode, quantize_observable, sin_mode

__version__ = "0.1.0"

__all__ = [
    "S_CAT", "S_DEGI", "BakerMap", "CatMap", "KickedCatMap", "PhasePoint", "SymplecticMatrix",
    "CutoffError", "DomainError", "FormatError", "NumericalError", "ParityError", "ToruslabError",
    "eigensystem", "egorov_defect", "perturbed_cat", "quantize_baker", "quantize_cat",
    "format_observable", "parse_observable", "husimi_grid", "stellar_zeros",
    "TorusObservable", "TorusState", "coherent_state", "cos_mode", "quantize_observable", "sin_mode",
    "__version__",
]
