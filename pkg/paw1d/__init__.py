from .model import (ModelParams, ExactEigenpair, AtomicEigenpair, characteristic_negative, characteristic_positive,
                    negative_spectrum, positive_spectrum, atomic_spectrum, eigenfunction_evaluator, jump_residuals)
from .pawgen import (PawSetup, CutoffKind, cutoff_profile, build_pseudo_waves, build_projectors, build_odd_set,
                     build_sites)
from .quad import FunctionEvaluator, Partition, integrate
from .assemble import (Method, PlaneWaveBasis, GalerkinSystem, SiteCorrection, assemble, assemble_H,
                       assemble_paw_trunc, assemble_paw_pseudo, assemble_paw_pseudo_odd, assemble_vpaw,
                       site_correction_trunc, projector_fourier)
from .eig import EigResult, smallest_generalized
from .study import SweepRecord, SlopeFit, eta_sweep, m_sweep, fit_slope, method_comparison

__all__ = [
    "ModelParams", "ExactEigenpair", "AtomicEigenpair", "characteristic_negative", "characteristic_positive",
    "negative_spectrum", "positive_spectrum", "atomic_spectrum", "eigenfunction_evaluator", "jump_residuals",
    "PawSetup", "CutoffKind", "cutoff_profile", "build_pseudo_waves", "build_projectors", "build_odd_set",
    "build_sites",
    "FunctionEvaluator", "Partition", "integrate",
    "Method", "PlaneWaveBasis", "GalerkinSystem", "SiteCorrection", "assemble", "assemble_H",
    "assemble_paw_trunc", "assemble_paw_pseudo", "assemble_paw_pseudo_odd", "assemble_vpaw",
    "site_correction_trunc", "projector_fourier",
    "EigResult", "smallest_generalized",
    "SweepRecord", "SlopeFit", "eta_sweep", "m_sweep", "fit_slope", "method_comparison",
]
