"""Instance-level timestep schedules learned with James-Stein baselines."""

from ._resched import (
    ConfigError,
    DomainError,
    Error,
    allocation_to_schedule,
    bench,
    config_hash,
    digamma,
    dirichlet_log_prob,
    integrate,
    js_baseline,
    log_gamma,
    marginal_velocity,
    optimal_baseline,
    rloo_baseline,
    sample_dirichlet,
    score_wrt_alpha,
    terminal_reward,
    train_toy,
    variance_components,
    xctx_baseline,
)

__all__ = [
    "ConfigError",
    "DomainError",
    "Error",
    "allocation_to_schedule",
    "bench",
    "config_hash",
    "digamma",
    "dirichlet_log_prob",
    "integrate",
    "js_baseline",
    "log_gamma",
    "marginal_velocity",
    "optimal_baseline",
    "rloo_baseline",
    "sample_dirichlet",
    "score_wrt_alpha",
    "terminal_reward",
    "train_toy",
    "variance_components",
    "xctx_baseline",
]
