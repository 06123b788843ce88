"""Text-guided spatial audio mixing: prompt -> plan -> deterministic binaural render."""

__version__ = "0.1.0"

from .analysis import AnalysisReport, analyze_render, azimuth_from_itd, estimate_ild, estimate_itd
from .audio_io import HrirBank, RirBank, load_hrir_bank, load_rir_bank, read_wav, write_wav
from .conductor import Remote, RemoteFallbackWarning, RuleBased, backend_from_env, build_plan, select_rir
from .dsp import AudioBuffer, HeadModel, convolve, fractional_delay, ild_filter, itd_seconds, pan_gains, schroeder_reverb
from .errors import SpatialMixError
from .prompt import classify, parse_cues
from .render import RenderConfig, RenderTrace, render
from .scene import (
    LocalizationMode,
    OutputFormat,
    SourcePlacement,
    SpatialPlan,
    Stem,
    Template,
    merge_template,
    select_mode,
    validate_plan,
)
from .templates import TemplateBank, load_bank, retrieve

__all__ = [
    "AnalysisReport", "AudioBuffer", "HeadModel", "HrirBank", "LocalizationMode", "OutputFormat", "Remote",
    "RemoteFallbackWarning", "RenderConfig", "RenderTrace", "RirBank", "RuleBased", "SourcePlacement",
    "SpatialMixError", "SpatialPlan", "Stem", "Template", "TemplateBank", "analyze_render", "azimuth_from_itd",
    "backend_from_env", "build_plan", "classify", "convolve", "estimate_ild", "estimate_itd", "fractional_delay",
    "ild_filter", "itd_seconds", "load_bank", "load_hrir_bank", "load_rir_bank", "merge_template", "pan_gains",
    "parse_cues", "read_wav", "render", "retrieve", "schroeder_reverb", "select_mode", "select_rir",
    "validate_plan", "write_wav",
]
