"""
Numerical core of the MA-APNN toolkit

Framework-free building blocks: truncated-jet network evaluation, angular
quadrature and Sobol sampling, transfer problem definitions, residuals and
losses, reference solvers and the Adam training loop. Nothing in this package
imports Django; the experiments app wires it to the command line.
"""
