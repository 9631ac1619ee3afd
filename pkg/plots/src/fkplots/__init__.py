"""Figure rendering for Fourier-Klibanov tumor-model CSV outputs."""

from .render import KINDS, RenderError, render

__version__ = "0.1.0"

__all__ = ["KINDS", "RenderError", "render"]
