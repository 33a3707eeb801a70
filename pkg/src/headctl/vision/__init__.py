"""Synthetic point clouds and the pose-estimation pipeline."""

from .geometry import Pose, quat_to_matrix, quat_to_rpy, rotation_angle, rpy_to_quat
from .pipeline import Measurement, PoseMeter, VisionConfig, measure_pose
from .registration import estimate_pose
from .scene import SceneConfig, SceneSample, model_landmarks, state_to_pose, synth_scene
from .segmentation import (PlaneHull, PlaneModel, PointCloud, centroid, convex_hull_2d, downsample_voxel,
                           euclidean_cluster, extrude_prism, fit_sphere, load_cloud, plane_hull, save_cloud,
                           segment_plane)

__all__ = [
    "Measurement", "PlaneHull", "PlaneModel", "PointCloud", "Pose", "PoseMeter", "SceneConfig", "SceneSample",
    "VisionConfig", "centroid", "convex_hull_2d", "downsample_voxel", "estimate_pose", "euclidean_cluster",
    "extrude_prism", "fit_sphere", "load_cloud", "measure_pose", "model_landmarks", "plane_hull",
    "quat_to_matrix", "quat_to_rpy", "rotation_angle", "rpy_to_quat", "save_cloud", "segment_plane",
    "state_to_pose", "synth_scene",
]
