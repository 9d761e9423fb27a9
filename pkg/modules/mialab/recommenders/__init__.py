"""Target and shadow recommenders, the recommendation protocol and the popularity defense."""
