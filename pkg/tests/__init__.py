"""
Test suite for the linkfit estimators, oracles and CLI.
"""
