"""Boolean-model pictures: sampling, effective ball counts, tail studies and quantizers."""

__version__ = "0.1.0"
