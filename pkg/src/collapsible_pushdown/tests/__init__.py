"""
Test suite for the collapsible pushdown toolkit.
"""
