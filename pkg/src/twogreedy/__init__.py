"""2GREEDY 2-matchings on random graphs of minimum degree 3, their fluid limits,
and the extension-rotation upgrade to a Hamilton cycle."""

__version__ = "0.1.0"
