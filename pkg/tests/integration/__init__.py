# Integration tests - full pipeline runs on synthetic data
