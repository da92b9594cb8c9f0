"""
View module for the FastMel toolkit.

This module contains the command-line surface, table emitters and figures.
"""
