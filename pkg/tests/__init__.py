"""
Tests for thinprobe.

Fast tests cover every module; checks that march the solver on refined
grids or run whole scenarios carry the ``slow`` marker.
"""
