"""Focal stack spectrum analysis and anti-aliasing (numpy front end)."""

from ._focalspec import (
    FocalStack,
    InputError,
    LightField,
    RefocusConfig,
    antialias,
    apex_angle,
    conj_symmetry_residual,
    detect_spectral_lines,
    energy_concentration,
    evaluate_stack,
    fss_forward,
    fss_inverse,
    line_mask,
    load_lightfield,
    psnr,
    read_fstk,
    refocus,
    refocus_epi,
    render_scene,
    save_lightfield,
    ssim,
    support_mask,
    write_fstk,
)

__all__ = [name for name in dir() if not name.startswith("_")]
