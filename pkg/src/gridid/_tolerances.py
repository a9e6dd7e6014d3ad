"""Numerical tolerances shared across the package."""

# simplex pivoting / feasibility
LP_PIVOT_TOL = 1e-9
LP_FEAS_TOL = 1e-9
LP_KKT_TOL = 1e-8
LP_MAX_ITER = 10_000

# symmetric inputs to the eigensolver
SYM_TOL = 1e-8
# reconstruction / orthonormality contract of the factorizations
FACTOR_TOL = 1e-10

# ADMM stopping defaults
ADMM_EPS_ABS = 1e-6
ADMM_EPS_REL = 1e-4
ADMM_MAX_ITER = 50_000

# multiplier magnitude below which a line counts as uncongested
CONGESTION_TOL = 1e-7
