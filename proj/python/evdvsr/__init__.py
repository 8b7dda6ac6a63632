"""Event-guided joint deblurring and video super-resolution."""

from ._evdvsr import (
    DataError,
    InvalidInput,
    Model,
    cli,
    evaluate_clip,
    load_events,
    loss_r,
    psnr,
    selfcheck,
    simulate_events,
    ssim,
    synthesize_blur,
    synthetic_clip,
    voxelize,
)

__all__ = [
    "DataError",
    "InvalidInput",
    "Model",
    "cli",
    "evaluate_clip",
    "load_events",
    "loss_r",
    "psnr",
    "selfcheck",
    "simulate_events",
    "ssim",
    "synthesize_blur",
    "synthetic_clip",
    "voxelize",
]
