"""failbench: deterministic desk-scale test bench for fixed-wing autopilot
resilience under stochastic compound actuator failures."""

from .controllers import (AirspeedTooLow, AttitudeGains, PlanTracker,
                          PositionGains, Setpoints, angular_accel_setpoint,
                          coordinated_turn_yaw_rate, euler_rates_to_body,
                          position_controller, rate_setpoints)
from .evaluate import (DegeneratePlan, EmptyInput, Source, Trajectory,
                       dtw_distance, dtw_normalized, from_waypoints, resample)
from .failure import (HOLD_LAST, ZERO, FailureState, Injector,
                      InvalidProbability, TransitionModel,
                      build_transition_model, enumerate_states, gate, inject,
                      step_chain)
from .harness import (EnsembleSummary, TrialConfig, TrialRecord, run_ensemble,
                      run_trial, summarize)
from .mission import FlightPlan, build_flight_plan, hilbert
from .plant import (ActuatorVector, AircraftState, CrashDetected, NoTrimFound,
                    NonFinite, PlantConfig, compute_trim, mix, step_dynamics)
from .rcac import (NumericalBreakdown, RcacChannel, RcacHyper, RcacState,
                   accumulate, augment, control, regressor, update_gains)

__version__ = "0.1.0"
