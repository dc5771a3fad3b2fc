"""Question-classification benchmark toolkit.

Corpus handling, TF-IDF featurization, seven classifiers, stratified
cross-validation, and empirical scaling checks.
"""

__version__ = "0.1.0"
