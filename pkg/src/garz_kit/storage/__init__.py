"""
Run-directory persistence.
"""
