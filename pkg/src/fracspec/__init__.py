"""Spectral solver and verification toolkit for two-sided fractional diffusion."""
