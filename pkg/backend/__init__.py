"""PT-symmetric kicked rotor diagnostics: services, CLI and HTTP API."""
