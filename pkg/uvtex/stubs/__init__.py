"""Reference tools for the external-process protocol."""
