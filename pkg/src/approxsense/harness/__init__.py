"""Data ingestion, experiment runner, sweeps, plots and CLI."""
