"""Membership inference laboratory for recommender systems."""
