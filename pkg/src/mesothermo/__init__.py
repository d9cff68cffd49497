"""Thermodynamic reductions and GENERIC kinetics on a 1D phase-space grid."""
from .errors import (ConfigError, ConstructionError, ConvergenceError, DomainError,
                     NumericalBlowup, ShapeError, SingularSystemError, StabilityError)
from .grid import (DistFn, ExtendedState, PhaseGrid, ScalarField, integrate_v, log_mean,
                   maxwellian, moments, read_distribution_csv, read_hydro_csv,
                   write_distribution_csv, write_hydro_csv)
from .functionals import (REGISTRY, DissipationPotential, Eta, Functional, HydroEnergy,
                          StateEnergy, boltzmann_entropy, casimir, dissipation_property_report,
                          eta_family, fokker_planck_dissipation, gateaux_check, get_functional,
                          kinetic_coupled_energy, kinetic_energy, number, projected_dissipation,
                          quadratic_dissipation, sackur_tetrode_energy, sackur_tetrode_hydro,
                          thermo_potential)
from .reduction import (DualRelation, FluxClosure, ReductionResult, back_transform,
                        check_local_minimum, density_entropy, diffusion_closure, diffusion_rhs,
                        diffusion_scenario, entropy_rate_diagnostic, kinetic_flux_entropy,
                        legendre_involution_check, periodic_heat_kernel, reduce_flux,
                        reduce_static)
from .dynamics import (BoundaryFluxWarning, Diagnostics, Integrator, KineticBracket, evolve,
                       fokker_planck_rhs, fp_dt_max, fp_entropy_production, generic_rhs,
                       gradient_rhs, hamiltonian_rhs, transport_dt_max)
from .poisson_grad import (ConstitutiveResult, HydroClosure, ViscosityResult, ce_zeroth_explicit,
                           ce_zeroth_fixed_point, ce_zeroth_rhs, constitutive_explicit,
                           constitutive_fixed_point, energy_audit, entropy_production_density,
                           euler_rhs, hydro_closure, local_equilibrium, pg_euler_part,
                           pg_regularized_rhs, pg_rhs, reduced_hydro_rhs, viscosity_extract)
from .config import ScenarioConfig, default_config, load_config

__version__ = "0.1.0"
