"""Local-to-global predictions for mean values and correlations of
pretentious multiplicative functions, with brute-force oracles."""

__version__ = "0.1.0"
