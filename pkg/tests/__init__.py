"""
Tests for jetsym.
"""
