"""Tests for the specflow laboratory."""
