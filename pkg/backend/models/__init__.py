"""Pydantic models for rotor parameters, spectra, ensembles, OTOC series, sweeps and run configuration."""
