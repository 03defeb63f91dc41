"""Experiment harness: configs, runs, sweeps, averaging and theory comparisons."""
