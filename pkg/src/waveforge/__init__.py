"""Learned perfect-reconstruction wavelet filterbanks."""
