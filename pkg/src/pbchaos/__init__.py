"""Classical and quantum dynamics of a periodically driven two-mode condensate.

Phase-space cartography (stroboscopic sections, periodic-orbit pairs,
Lyapunov maps), coherent-spin-state ensemble statistics and exact
collective-spin propagation for cross validation.
"""

from .ensemble import (CssSpec, EnsembleSeries, NoiseModel, evolve_ensemble,
                       sample_css, sample_css_cartesian)
from .errors import (ConvergenceFailure, DegenerateMAD, InsufficientSamples,
                     NoConvergence, PbchaosError, PoleSingularity,
                     ScenarioError, SingularJacobian, StepUnderflow)
from .integrate import (DEFAULT_CONFIG, IntegratorConfig, Trajectory,
                        propagate, propagate_with_tangent)
from .model import (PhaseState, SystemParams, TangentFrame, critical_lambda,
                    drive_value, eom_canonical, eom_cartesian, hamiltonian,
                    jacobian_canonical)
from .orbits import (ChaosMap, GridSpec, PeriodicOrbit, Stability, chaos_map,
                     find_fixed_points_undriven, find_periodic_orbit,
                     find_resonance_orbits, lyapunov_exponent,
                     orbit_rotation_check, resonance_ring, resonant_start,
                     undriven_orbit_period)
from .poincare import (PoincareSection, build_section, contour_seeds,
                       grid_seeds, sphere_seeds, stroboscopic_map)
from .quantum import (CollectiveOps, PhysParams, QuantumState,
                      build_collective_operators, css_state, dicke_state,
                      evolve_quantum, expect_observables, expect_y,
                      normalized_var_z, rotate_pi2_x)
from .scenarios import PRESETS, SCENARIOS, Preset, ScenarioConfig, run_scenario
from .stats import (JackknifeResult, ShotStatistics, jackknife_variance_ci,
                    measurement_resample, reject_outliers_modified_z)

__version__ = "0.1.0"
