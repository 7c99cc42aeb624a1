"""Gamma-deviations, entropic projections and their quantum counterparts."""

from .cmeasure import conditional_expectation, expectation, gamma_embed, gamma_unembed
from .divergence import bregman, csiszar, d_gamma, gamma_bregman, kl
from .entproj import ConstraintSet, PenaltyFunction, PriorMixture, Schedule, project, trajectory, weighted_project
from .errors import ConvergenceError, InfeasibleError, InfodynError, UnboundedError
from .qproj import (
    QuantumConstraintSet,
    QuantumPenalty,
    QuantumPriorMixture,
    QuantumSchedule,
    luders_experiment,
    q_project,
    q_trajectory,
    q_weighted_project,
)
from .qstate import q_d_gamma, wyd_metric

__version__ = "0.1.0"
