"""Figure-reproduction presets and run-config resolution.

Calibrations:
  fig3  n=20, k=100, r=10, ks=(19, 17, ..., 1), per-task lambda=10, a=0.01
  fig4  n=20, per-task lambda=1, a=0.01, k in {20, 40, 60, 80, 100}, r from select_r
  fig5  n=20, mu=0.1 inside the closed-form coefficients, k = 1..190
  fig6  same sweep as fig5, read as the ratio L / L_p
"""

from typing import Any

from strata.errors import InvalidArgumentError
from strata.models.run_config import RunConfig

FIG3_KS = (19, 17, 15, 13, 11, 9, 7, 5, 3, 1)

PRESETS: dict[str, RunConfig] = {
    "fig3": RunConfig(
        n=20,
        k=100,
        r=10,
        rate=10.0,
        shift=0.01,
        mu=0.1,
        alpha=0.01,
        ks=FIG3_KS,
        t_grid=tuple(round(0.1 * i, 10) for i in range(1, 21)),
        trials=100_000,
        preset="fig3",
    ),
    "fig4": RunConfig(n=20, rate=1.0, shift=0.01, mu=0.1, alpha=0.01, trials=0, preset="fig4"),
    "fig5": RunConfig(n=20, mu=0.1, preset="fig5"),
    "fig6": RunConfig(n=20, mu=0.1, preset="fig6"),
}

K_SWEEPS: dict[str, tuple[int, ...]] = {
    "fig3": (100,),
    "fig4": (20, 40, 60, 80, 100),
    "fig5": tuple(range(1, 191)),
    "fig6": tuple(range(1, 191)),
}


def resolve_config(file_config: RunConfig | None, flags: dict[str, Any]) -> RunConfig:
    """Preset values, then values set in the config file, then explicit flags.

    A preset fills only what neither the file nor the flags set.
    """
    base = file_config or RunConfig()
    explicit = {key: value for key, value in flags.items() if value is not None}
    preset = explicit.get("preset", base.preset)
    if preset == "none":
        return base.merged(**explicit)
    if preset not in PRESETS:
        raise InvalidArgumentError(f"unknown preset '{preset}'")
    from_file = base.model_dump(exclude_unset=True)
    return PRESETS[preset].merged(**{**from_file, **explicit})


def k_sweep(config: RunConfig, explicit_k: int | None = None) -> tuple[int, ...]:
    """The k values a sweep command evaluates: the explicit --k, else the preset's sweep."""
    if explicit_k is not None:
        return (explicit_k,)
    if config.preset != "none" and config.k is None:
        return K_SWEEPS[config.preset]
    if config.k is None:
        raise InvalidArgumentError("--k is required without a preset")
    return (config.k,)
