"""Feedback-controlled qubit cooling against a single thermal bath:
simulator, hybrid-action soft actor-critic, interpretable baselines, and a
trade-off sweep harness."""

__version__ = "0.1.0"
