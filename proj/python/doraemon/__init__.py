from ._core import (
    Error,
    PolarAction,
    aori_value,
    default_config,
    discrete_steps,
    generate_scene,
    run_batch,
    run_episode,
    stuck_metrics,
)

__all__ = [
    "Error",
    "PolarAction",
    "aori_value",
    "default_config",
    "discrete_steps",
    "generate_scene",
    "run_batch",
    "run_episode",
    "stuck_metrics",
]
