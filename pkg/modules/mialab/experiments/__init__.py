"""Experiment orchestration: stages, full runs, repetitions and the verify suite."""
