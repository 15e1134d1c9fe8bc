"""Experiment drivers behind the command-line interface."""
