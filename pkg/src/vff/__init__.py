"""Voxel-local sinusoidal video fields.

Videos are modeled as a grid of local 3D sinusoidal expansions over a shared
frequency bank, fit by windowed ridge least squares and resampled at
arbitrary space-time rates with closed-form Gaussian-PSF anti-aliasing.

Submodules are imported lazily so the command line can configure threading
before numpy loads.
"""

__version__ = "0.1.0"

_EXPORTS = {
    "FrequencyBank": "core",
    "PsfSpec": "core",
    "LocalField": "core",
    "FieldGrid": "core",
    "psf_attenuation": "core",
    "eval_local": "core",
    "eval_grid_point": "core",
    "locate": "core",
    "phase_shift": "core",
    "translate_grid": "core",
    "coeff_to_amp_phase": "core",
    "amp_phase_to_coeff": "core",
    "wrap_phase": "core",
    "SampleSpec": "sampling",
    "sample_grid": "sampling",
    "FitConfig": "fit",
    "BankInitConfig": "fit",
    "RefineConfig": "fit",
    "init_bank": "fit",
    "design_matrix": "fit",
    "fit_voxel": "fit",
    "fit_video": "fit",
    "refine_bank": "fit",
    "PsfPolicy": "pipeline",
    "auto_psf": "pipeline",
    "bicubic_downsample": "pipeline",
    "temporal_subsample": "pipeline",
    "degrade": "pipeline",
    "trilinear_resample": "pipeline",
    "stvsr": "pipeline",
    "MetricReport": "metrics",
    "rgb_to_luma": "metrics",
    "psnr": "metrics",
    "ssim": "metrics",
    "evaluate": "metrics",
    "VideoBuffer": "video",
    "read_png_sequence": "io",
    "write_png_sequence": "io",
    "read_y4m": "io",
    "write_y4m": "io",
    "save_field": "io",
    "load_field": "io",
    "SynthSpec": "synth",
    "rasterize": "synth",
    "pattern_value": "synth",
    "reference_at_output": "synth",
    "VffError": "errors",
    "ConfigError": "errors",
    "DomainError": "errors",
    "StructureError": "errors",
    "RankDeficiencyError": "errors",
}

__all__ = sorted(_EXPORTS) + ["__version__"]


def __getattr__(name):
    module_name = _EXPORTS.get(name)
    if module_name is None:
        raise AttributeError(f"module {__name__!r} has no attribute {name!r}")
    import importlib

    module = importlib.import_module(f".{module_name}", __name__)
    value = getattr(module, name)
    globals()[name] = value
    return value
