"""Grid topology identification from locational marginal prices."""

__version__ = "0.1.0"

from .dispatch import MarketScenario, compute_lmp, solve_dispatch
from .market import (PriceDataset, SimulationConfig, ieee14_day_config, load_dataset,
                     save_dataset, simulate_day)
from .metrics import EvalReport, evaluate
from .network import GridTopology, build_incidence, dc_flows, ieee14, weighted_laplacian
from .recovery import DEFAULT_KAPPA, Kappa, LaplacianRecovery, admm_solve
from .tuning import KappaSearch, TuningConfig, tune_kappa

__all__ = [
    "GridTopology", "build_incidence", "weighted_laplacian", "dc_flows", "ieee14",
    "MarketScenario", "solve_dispatch", "compute_lmp",
    "SimulationConfig", "PriceDataset", "ieee14_day_config", "simulate_day",
    "save_dataset", "load_dataset",
    "Kappa", "DEFAULT_KAPPA", "admm_solve", "LaplacianRecovery",
    "TuningConfig", "tune_kappa", "KappaSearch",
    "EvalReport", "evaluate",
]
