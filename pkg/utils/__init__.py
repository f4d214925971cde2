"""
Utilities package for cdqsim.
Contains environment configuration and run store initialization utilities.
"""
