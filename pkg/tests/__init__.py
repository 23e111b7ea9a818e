"""
Tests for eurovoc_indexer
"""
