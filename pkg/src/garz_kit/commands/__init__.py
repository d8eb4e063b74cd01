"""
Command modules for the garz command-line tool.
"""
