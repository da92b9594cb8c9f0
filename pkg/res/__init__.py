"""
Resources module.

Contains shipped fixtures such as the EMCD oracle sequences.
"""
