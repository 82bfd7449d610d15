"""Alert life-cycle engine: denoising, actionable summaries, rule refinement."""

__version__ = "0.1.0"
