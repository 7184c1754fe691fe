"""Rotation matrices, wave vectors and rigid motion of element layouts.

Angles follow the yaw-pitch-roll (z-y-x) convention. Wave vectors use the
polar angle ``theta`` measured from +z and the azimuth ``phi`` measured from
+x in the xy-plane.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


class DegenerateGeometryError(ValueError):
    pass


@dataclass(frozen=True)
class RotationAngles:
    yaw: float = 0.0
    pitch: float = 0.0
    roll: float = 0.0

    def as_array(self) -> np.ndarray:
        return np.array([self.yaw, self.pitch, self.roll], dtype=float)

    @classmethod
    def from_array(cls, arr) -> "RotationAngles":
        yaw, pitch, roll = (float(v) for v in np.asarray(arr, dtype=float).reshape(3))
        return cls(yaw, pitch, roll)


@dataclass(frozen=True)
class ElementLayout:
    """Element positions ``(M, 3)`` and the point they rotate about."""

    positions: np.ndarray
    center: np.ndarray

    def __post_init__(self):
        pos = np.asarray(self.positions, dtype=float)
        if pos.ndim != 2 or pos.shape[1] != 3:
            raise ValueError(f"positions must be (M, 3), got {pos.shape}")
        object.__setattr__(self, "positions", pos)
        object.__setattr__(self, "center", np.asarray(self.center, dtype=float).reshape(3))

    @property
    def M(self) -> int:
        return self.positions.shape[0]


def _check_finite(*values):
    for v in values:
        if not np.all(np.isfinite(v)):
            raise ValueError(f"angle must be finite, got {v!r}")


def axis_rotation(axis: str, angle: float) -> np.ndarray:
    """Elementary right-handed rotation about ``axis`` in {'x', 'y', 'z'}."""
    _check_finite(angle)
    c, s = np.cos(angle), np.sin(angle)
    if axis == "x":
        return np.array([[1.0, 0.0, 0.0], [0.0, c, -s], [0.0, s, c]])
    if axis == "y":
        return np.array([[c, 0.0, s], [0.0, 1.0, 0.0], [-s, 0.0, c]])
    if axis == "z":
        return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])
    raise ValueError(f"axis must be one of 'x', 'y', 'z', got {axis!r}")


def combined_rotation(angles) -> np.ndarray:
    """``R_z(yaw) @ R_y(pitch) @ R_x(roll)``.

    ``angles`` is a :class:`RotationAngles` or an array whose last axis holds
    (yaw, pitch, roll); batched input gives a ``(..., 3, 3)`` stack.
    """
    if isinstance(angles, RotationAngles):
        angles = angles.as_array()
    angles = np.asarray(angles, dtype=float)
    _check_finite(angles)
    cy, sy = np.cos(angles[..., 0]), np.sin(angles[..., 0])
    cp, sp = np.cos(angles[..., 1]), np.sin(angles[..., 1])
    cr, sr = np.cos(angles[..., 2]), np.sin(angles[..., 2])
    R = np.empty(angles.shape[:-1] + (3, 3))
    R[..., 0, 0] = cy * cp
    R[..., 0, 1] = cy * sp * sr - sy * cr
    R[..., 0, 2] = cy * sp * cr + sy * sr
    R[..., 1, 0] = sy * cp
    R[..., 1, 1] = sy * sp * sr + cy * cr
    R[..., 1, 2] = sy * sp * cr - cy * sr
    R[..., 2, 0] = -sp
    R[..., 2, 1] = cp * sr
    R[..., 2, 2] = cp * cr
    return R


def wave_vector(theta, phi) -> np.ndarray:
    """Unit direction ``[sin(theta)cos(phi), sin(theta)sin(phi), cos(theta)]``."""
    theta = np.asarray(theta, dtype=float)
    phi = np.asarray(phi, dtype=float)
    st = np.sin(theta)
    return np.stack([st * np.cos(phi), st * np.sin(phi), np.cos(theta)], axis=-1)


def direction_angles(origin, target) -> tuple[float, float]:
    """(theta, phi) of the unit vector pointing from ``origin`` to ``target``.

    On the z-axis the azimuth is undefined and reported as 0.
    """
    d = np.asarray(target, dtype=float) - np.asarray(origin, dtype=float)
    norm = np.linalg.norm(d)
    if norm == 0.0:
        raise DegenerateGeometryError("origin and target coincide")
    u = d / norm
    theta = float(np.arccos(np.clip(u[2], -1.0, 1.0)))
    rho = np.hypot(u[0], u[1])
    phi = 0.0 if rho == 0.0 else float(np.arctan2(u[1], u[0]))
    if rho != 0.0:
        # arccos loses precision near the poles
        theta = float(np.arctan2(rho, u[2]))
    return theta, phi


def rotate_layout(layout: ElementLayout, angles) -> np.ndarray:
    """Positions after rotating the whole panel about ``layout.center``."""
    R = combined_rotation(angles)
    rel = layout.positions - layout.center
    return rel @ R.T + layout.center


def rotate_positions(positions, center, rotation) -> np.ndarray:
    """Batched ``R (r_m - c) + c`` for positions ``(..., M, 3)`` and ``R`` ``(..., 3, 3)``."""
    positions = np.asarray(positions, dtype=float)
    center = np.asarray(center, dtype=float)
    rel = positions - center
    return np.matmul(rel, np.swapaxes(rotation, -1, -2)) + center


def pairwise_distances(positions) -> np.ndarray:
    """Euclidean distance matrix over the last two axes ``(..., M, 3) -> (..., M, M)``."""
    positions = np.asarray(positions, dtype=float)
    diff = positions[..., :, None, :] - positions[..., None, :, :]
    return np.sqrt(np.sum(diff * diff, axis=-1))
