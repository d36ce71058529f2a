"""Exact computations for finite dynamical systems with discrete spectrum."""

from .duality import (
    Character,
    DualBundle,
    bidual_check,
    dual_group,
    dual_morphism,
    dual_of_subtrivialized,
    dual_rotation_bundle,
)
from .dynamics import (
    FinBundle,
    FinSystem,
    ellis_bundle,
    ellis_semigroup,
    has_discrete_spectrum,
    maximal_trivial_factor,
    pullback,
)
from .errors import (
    DiscreteSpectrumRequired,
    DiscSpecError,
    DocumentError,
    FullSupportRequired,
    InvarianceRequired,
    PreconditionError,
    SizeBoundExceeded,
    VerificationError,
)
from .io import parse, serialize
from .koopman import CyclicSpectrum, QComplex, QFunction, RationalAngle, RationalMeasure
from .spectrum import (
    GroupRotationBundle,
    IsoWitness,
    MeasuredSpectrumBundle,
    PointSpectrumBundle,
    canonical_form,
    iso_brute_force,
    iso_systems,
    markov_iso,
    measured_spectrum_bundle,
    realize,
    spectrum_bundle,
)

__version__ = "0.1.0"
