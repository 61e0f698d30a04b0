"""Numerical toolkit for lower-semibounded singular Sturm-Liouville
operators: endpoint classification, principal/nonprincipal solution bases,
generalized boundary values, self-adjoint extensions and their semibounded
forms, and the finite-dimensional boundary-triplet algebra behind them."""

__version__ = "0.1.0"
