"""Rating datasets: ingestion, filtering, splits, synthetic generation and dumps."""
