"""Pipeline and CLI tests across several modules."""
