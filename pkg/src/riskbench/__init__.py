"""Risk-preference elicitation and prediction workbench.

Administers and scores multiple-price-list lottery tasks and an 11-point
willingness-to-take-risk battery, generates synthetic register-style
datasets with planted signal, and runs a preprocessing + model-zoo +
evaluation pipeline that ranks regression models and reports feature
importance.
"""

__version__ = "0.1.0"
