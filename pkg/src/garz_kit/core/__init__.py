"""
Core functionality for the GARZ solver kit.
Includes configuration, logging, exceptions and the run-configuration format.
"""
