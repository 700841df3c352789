"""Cold-start questionnaire recommender: dichotomous topic extraction from an
article corpus and edit log, pairwise A/B question generation, and
interest-vector recommendation with an offline evaluation harness.
"""

__version__ = "0.1.0"
