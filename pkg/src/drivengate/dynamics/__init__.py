"""Hamiltonians, dissipators and integrators."""

from .hamiltonians import (FreeSplit, HamiltonianSpec, SampledHamiltonian, build_hamiltonian,
                           build_sampled, echo_operator, free_split, noise_operator)
from .lambda_system import lambda_reference
from .master import (DissipatorSet, IntegrationError, IntegratorConfig, LeakageError, Trajectory,
                     gate_dissipators, integrate_master, lindblad_rhs, liouvillian)
from .pure import DysonStepper, integrate_pure, propagate_batch
