"""Unit test fixtures: see tests/unit/kb/conftest.py for source-file writers"""
