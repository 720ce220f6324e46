"""Goodness-of-fit tests for functional time series.

Library + CLI for testing whether a curve-valued time series follows an
autoregressive Hilbertian model of a given order (projected
Cramér-von Mises statistic, wild-bootstrap calibration) and whether a
scalar diffusion path behaves like an Ornstein-Uhlenbeck process
(two-stage specification test), together with the simulators and
estimators needed to reproduce the reference Monte Carlo tables at desk
scale.
"""

__version__ = "0.1.0"

from .grids import (Grid, FunctionalSample, inner_product, center,
                    trapezoid_weights, read_curves_csv, write_curves_csv)
from .fpca import FPCBasis, ScoreMatrix, fpca, ev_cutoff, project, reconstruct
from .glasso import (CoefMatrix, group_lasso, lambda_path, select_lambda,
                     group_lasso_objective, kkt_residual)
from .flmfr import FitResult, fpcr_l1s_fit, residual_curves
from .gof import (AdotMatrix, GofResult, OrderScanResult, lag_embed, adot,
                  pcvm_statistic, wild_multipliers, arh_gof_test,
                  arh_order_scan)
from .arhsim import (KernelSpec, ARHSpec, kernel_surface, apply_kernel,
                     brownian_bridge, simulate_arh, check_stationarity)
from .sde import (SDEModel, PathRecord, drift_vol, euler_maruyama, split_path,
                  estimate_kappa, estimate_sigma, read_path_csv,
                  write_path_csv)
from .spectest import (SpecTestResult, ou_residuals, rssn, f_statistic,
                       two_stage_test, parametric_bootstrap_f,
                       REJECT_STAGE1, REJECT_STAGE2, NOT_REJECTED)
from .ticks import TickSeries, IngestResult, ingest_ticks, read_ticks_csv
from .experiments import (ExperimentConfig, ExperimentResult, run_experiment,
                          clopper_pearson, SCENARIOS)
from . import errors

__all__ = [name for name in dir() if not name.startswith("_")]
