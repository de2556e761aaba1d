"""Nutrition-constrained grocery bundle recommender."""

__version__ = "0.1.0"
