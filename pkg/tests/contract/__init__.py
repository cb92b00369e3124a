"""Contract tests for on-disk formats."""
