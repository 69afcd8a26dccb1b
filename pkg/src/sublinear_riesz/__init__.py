"""Minimal positive solutions of sublinear integral equations with Riesz and Green kernels."""
