"""magorb: closed orbits of weakly exact magnetic flows on model surfaces.

Free-period action functional over discrete loops with a free period,
supercritical minimization in homotopy classes, a numerical mountain pass for
subcritical energies, Mane critical value bracketing and a verifying magnetic
flow integrator.
"""

from .errors import (ConfigError, DomainError, FluxUndefinedError,
                     IntegrationError, MagorbError, ModelError,
                     NoNegativeSeedError, NotBoundedBelowError)
from .geometry import (FreeHomotopyClass, SurfaceModel, TRIVIAL_CLASS,
                       apply_deck, eval_christoffel, eval_metric,
                       eval_sigma_density, eval_theta, make_model)
from .loopspace import (DiscreteLoop, LoopTangent, TimedLoop, h1_inner,
                        loop_kinetic, loop_length, make_circle_loop,
                        make_class_loop, make_loop, negative_action_seed,
                        resample)
from .action import ActionReport, action_A, action_S, dS_dT, flux, grad_S
from .dynamics import (ClosureResidual, IntegrateOptions, Orbit, PhaseState,
                       closure_residual, integrate, lorentz_rhs,
                       orbit_from_critical)
from .mane import (BracketOptions, CriticalValueBracket, MinimaxEstimate,
                   PotentialEstimate, PotentialOptions, SearchBudget,
                   critical_value_bracket, critical_value_upper,
                   mane_potential, negative_loop_search)
from .solvers import (MinimizeResult, MountainPassResult, PSConstants,
                      PSDiagnostics, PSReport, SolverConfig, SweepResult,
                      energy_sweep, minimize, mountain_pass, ps_monitor)

__version__ = "0.1.0"
