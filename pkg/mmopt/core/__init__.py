# mmopt/core/__init__.py
"""Library layer: mechanisms, distributions, measures, certificates and the learner."""
