"""Pseudo-LiDAR camera pose regression.

Depth maps are lifted to point sets, encoded by a PointNet-style stream
without input/feature transforms, optionally fused with an RGB stream, and
regressed to a 6DOF pose.
"""

__version__ = "0.1.0"
