"""Tests for causalsynth."""
