"""
Configuration module.

Contains example model spec files under specs/.
"""
