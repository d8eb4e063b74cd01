"""
Domain types: velocity models, grids, states, trajectories and reports.
"""
