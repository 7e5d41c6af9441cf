"""
Test suite for betagan.
"""
