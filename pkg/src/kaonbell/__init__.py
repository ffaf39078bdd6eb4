"""Entangled neutral-kaon Bell tests: probabilities, CP-parameter inequalities,
detection-efficiency thresholds and local hidden-variable counter-models."""

__version__ = "0.1.0"
