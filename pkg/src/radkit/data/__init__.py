"""Committed data fixtures: prompt packs and reference scripted kernels."""
