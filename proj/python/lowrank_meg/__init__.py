"""Low-rank matrix exponentiated gradient on the spectrahedron.

Thin Python layer over the compiled ``_lowrank_meg`` extension.
"""
from ._lowrank_meg import (  # noqa: F401
    ConfigError,
    IoError,
    LowRankIterate,
    MegError,
    ModeError,
    NumericalError,
    ParameterError,
    QuadMeasInstance,
    RunConfig,
    bregman,
    certificate_cheap,
    certificate_full,
    eigh_top,
    exact_step,
    generate_instance,
    load_instance,
    lowrank_step,
    project_simplex,
    reproduce_table,
    von_neumann_entropy,
    warm_start_wrap,
)
from ._lowrank_meg import run as _run

__all__ = [
    "ConfigError", "IoError", "LowRankIterate", "MegError", "ModeError",
    "NumericalError", "ParameterError", "QuadMeasInstance", "RunConfig",
    "bregman", "certificate_cheap", "certificate_full", "eigh_top",
    "exact_step", "generate_instance", "load_instance", "lowrank_step",
    "project_simplex", "reproduce_table", "run", "von_neumann_entropy",
    "warm_start_wrap",
]


def run(config=None, *, instance=None, **options):
    """Run the solver and return ``(rows, summary)``.

    Either pass a ``RunConfig`` or keyword options named after its fields,
    e.g. ``run(n=50, T=100, mode="lockstep", dense_shadow=True)``.
    """
    if config is None:
        config = RunConfig()
    for key, value in options.items():
        if not hasattr(config, key):
            raise TypeError(f"unknown run option {key!r}")
        setattr(config, key, value)
    if instance is not None:
        config.set_instance(instance)
    return _run(config)
