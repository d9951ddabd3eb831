"""Empirical Christoffel scores, the optimal sampling measure and weighted draws"""
