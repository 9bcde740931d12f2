"""Logging, errors, configuration and file IO shared by the CLI and the HTTP API."""
