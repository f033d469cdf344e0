"""Trust-region optimization with forward finite-difference surrogates and a
step-size benchmark harness."""

from .core import (Bounds, ConfigError, EvalCache, EvaluationError, Evaluator,
                   FrequencySweep, as_design, clip_to_bounds, default_sweep,
                   objective_minmax)
from .perturb import (CustomFractions, FractionOfInitial, SqrtMachineEps,
                      fd_error_curve, fd_jacobian, parse_scheme, resolve_steps)
from .surrogate import (LinearModel, SubproblemSpec, model_predict,
                        solve_tr_subproblem, subproblem_oracle_grid)
from .trustloop import (OptimizationAborted, RunResult, TraceRow, TrustConfig,
                        accept_or_reject, gain_ratio, optimize, should_terminate,
                        trace_to_csv, update_radius)
from .problems import (FIXTURE_BOUNDS, FIXTURE_DESIGNS, AntennaEvaluator,
                       NoiseSpec, SyntheticAntennaSpec, affine_minmax,
                       antenna_response, noise_overlay, quadratic_bowl)
from .adapter import ExternalEvaluator, ProtocolError, serve_mock
from .bench import SweepPlan, SweepTable, column_stats, load_plan, render_table, run_sweep

__version__ = "0.1.0"
