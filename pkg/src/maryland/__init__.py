"""Exact renormalization of the Maryland-model transfer-matrix cocycle."""
