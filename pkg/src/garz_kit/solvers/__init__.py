"""
Numerical solvers for the density, marker and Picard layers plus reference solutions.
"""
