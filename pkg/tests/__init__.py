"""Unit test package for bcresnet."""
