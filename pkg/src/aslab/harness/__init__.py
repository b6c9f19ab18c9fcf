"""Run configuration, command-line pipeline, plots and self-test."""
