"""Quaternion geometry, the uncertainty-weighted pose loss, and error metrics.

Quaternions are scalar-first ``(u, v)`` with a canonical sign ``u >= 0``
(for ``u == 0`` the first nonzero component of ``v`` is made positive).
"""

from dataclasses import dataclass

import numpy as np

from . import autodiff as ad
from .errors import DegenerateInputError, RejectedInputError

_NORM_TOL = 1e-9


def _canonical(q):
    q = np.asarray(q, dtype=np.float64)
    if q[0] < 0:
        return -q
    if q[0] == 0:
        nz = np.flatnonzero(q[1:])
        if nz.size and q[1 + nz[0]] < 0:
            return -q
    return q


@dataclass(frozen=True)
class UnitQuaternion:
    u: float
    v: tuple

    def __post_init__(self):
        q = np.array([self.u, *np.asarray(self.v, dtype=np.float64).reshape(3)])
        if not np.all(np.isfinite(q)):
            raise RejectedInputError("quaternion has non-finite components")
        if abs(q @ q - 1.0) > _NORM_TOL:
            raise RejectedInputError(f"quaternion norm^2 {q @ q!r} is not 1 within {_NORM_TOL}")
        q = _canonical(q)
        object.__setattr__(self, "u", float(q[0]))
        object.__setattr__(self, "v", tuple(float(c) for c in q[1:]))

    @classmethod
    def from_array(cls, q, normalize=False):
        q = np.asarray(q, dtype=np.float64)
        if normalize:
            n = np.linalg.norm(q)
            if n == 0:
                raise RejectedInputError("cannot normalize a zero quaternion")
            q = q / n
        return cls(q[0], tuple(q[1:]))

    @classmethod
    def identity(cls):
        return cls(1.0, (0.0, 0.0, 0.0))

    def as_array(self):
        return np.array([self.u, *self.v])


@dataclass(frozen=True)
class Pose:
    """Camera-to-world pose: position ``t`` (meters) and orientation ``q``."""

    t: np.ndarray
    q: UnitQuaternion

    def __post_init__(self):
        t = np.asarray(self.t, dtype=np.float64).reshape(3)
        if not np.all(np.isfinite(t)):
            raise RejectedInputError("pose translation must be finite")
        object.__setattr__(self, "t", t)

    def matrix(self):
        m = np.eye(4)
        m[:3, :3] = quat_to_rotmat(self.q)
        m[:3, 3] = self.t
        return m

    @classmethod
    def from_matrix(cls, m):
        m = np.asarray(m, dtype=np.float64)
        if m.shape != (4, 4):
            raise RejectedInputError(f"pose matrix must be 4x4, got {m.shape}")
        return cls(m[:3, 3].copy(), rotmat_to_quat(m[:3, :3]))


def quat_log(q: UnitQuaternion) -> np.ndarray:
    """Axis times half-angle; the zero vector for the identity.

    ``atan2(|v|, u)`` equals ``arccos(u)`` on unit quaternions and stays
    accurate near the identity.
    """
    v = np.array(q.v)
    nv = np.linalg.norm(v)
    if nv == 0:
        return np.zeros(3)
    return v / nv * np.arctan2(nv, q.u)


def quat_exp(w) -> UnitQuaternion:
    w = np.asarray(w, dtype=np.float64).reshape(3)
    if not np.all(np.isfinite(w)):
        raise RejectedInputError("log-quaternion must be finite")
    th = np.linalg.norm(w)
    if th == 0:
        return UnitQuaternion.identity()
    sinc = np.sin(th) / th if th > 1e-8 else 1.0 - th * th / 6.0
    q = np.array([np.cos(th), *(sinc * w)])
    return UnitQuaternion.from_array(q / np.linalg.norm(q))


def quat_multiply(a, b):
    a, b = np.asarray(a, dtype=np.float64), np.asarray(b, dtype=np.float64)
    w1, x1, y1, z1 = a
    w2, x2, y2, z2 = b
    return np.array([
        w1 * w2 - x1 * x2 - y1 * y2 - z1 * z2,
        w1 * x2 + x1 * w2 + y1 * z2 - z1 * y2,
        w1 * y2 - x1 * z2 + y1 * w2 + z1 * x2,
        w1 * z2 + x1 * y2 - y1 * x2 + z1 * w2,
    ])


def quat_rotate(q: UnitQuaternion, vec):
    """Rotate 3-vector(s) by ``q`` via ``q * (0, v) * conj(q)``."""
    vec = np.asarray(vec, dtype=np.float64)
    qa = q.as_array()
    conj = qa * np.array([1.0, -1.0, -1.0, -1.0])
    flat = vec.reshape(-1, 3)
    out = np.array([quat_multiply(quat_multiply(qa, np.r_[0.0, p]), conj)[1:] for p in flat])
    return out.reshape(vec.shape)


def quat_to_rotmat(q: UnitQuaternion) -> np.ndarray:
    w, x, y, z = q.as_array()
    return np.array([
        [1 - 2 * (y * y + z * z), 2 * (x * y - z * w), 2 * (x * z + y * w)],
        [2 * (x * y + z * w), 1 - 2 * (x * x + z * z), 2 * (y * z - x * w)],
        [2 * (x * z - y * w), 2 * (y * z + x * w), 1 - 2 * (x * x + y * y)],
    ])


def rotmat_to_quat(r) -> UnitQuaternion:
    """Rotation matrix to quaternion, pivoting on the largest of trace and diagonal."""
    r = np.asarray(r, dtype=np.float64)
    if r.shape != (3, 3) or not np.all(np.isfinite(r)):
        raise RejectedInputError(f"expected a finite 3x3 matrix, got shape {r.shape}")
    if np.abs(r.T @ r - np.eye(3)).max() > 1e-4 or abs(np.linalg.det(r) - 1.0) > 1e-4:
        raise RejectedInputError("matrix is not a rotation (orthonormal with det +1 within 1e-4)")
    tr = np.trace(r)
    diag = np.diag(r)
    k = int(np.argmax(diag))
    if tr >= diag[k]:
        s = 2.0 * np.sqrt(1.0 + tr)
        q = [0.25 * s, (r[2, 1] - r[1, 2]) / s, (r[0, 2] - r[2, 0]) / s, (r[1, 0] - r[0, 1]) / s]
    elif k == 0:
        s = 2.0 * np.sqrt(1.0 + r[0, 0] - r[1, 1] - r[2, 2])
        q = [(r[2, 1] - r[1, 2]) / s, 0.25 * s, (r[0, 1] + r[1, 0]) / s, (r[0, 2] + r[2, 0]) / s]
    elif k == 1:
        s = 2.0 * np.sqrt(1.0 + r[1, 1] - r[0, 0] - r[2, 2])
        q = [(r[0, 2] - r[2, 0]) / s, (r[0, 1] + r[1, 0]) / s, 0.25 * s, (r[1, 2] + r[2, 1]) / s]
    else:
        s = 2.0 * np.sqrt(1.0 + r[2, 2] - r[0, 0] - r[1, 1])
        q = [(r[1, 0] - r[0, 1]) / s, (r[0, 2] + r[2, 0]) / s, (r[1, 2] + r[2, 1]) / s, 0.25 * s]
    return UnitQuaternion.from_array(q, normalize=True)


# -- loss ---------------------------------------------------------------------

class LossWeights(ad.Module):
    """Learnable log-scale weights for the translation (beta) and rotation (gamma) terms."""

    def __init__(self, beta=0.0, gamma=-3.0):
        self.beta = ad.Parameter(np.array(float(beta)))
        self.gamma = ad.Parameter(np.array(float(gamma)))


def pose_loss(pred_t, pred_logq, true_t, true_logq, weights: LossWeights):
    """``|dt|_1 e^-beta + beta + |dlogq|_2 e^-gamma + gamma``, averaged over a batch.

    Inputs are (3,) or (B, 3); predictions are usually graph tensors,
    targets plain arrays.
    """
    dt = ad.sub(pred_t, true_t)
    dq = ad.sub(pred_logq, true_logq)
    if dt.shape[-1] != 3 or dq.shape[-1] != 3:
        raise RejectedInputError("pose vectors must have length 3")
    rt = ad.l1_norm(dt, axis=-1)
    rq = ad.l2_norm(dq, axis=-1)
    if rt.ndim:
        rt, rq = ad.mean(rt), ad.mean(rq)
    b, g = weights.beta, weights.gamma
    return rt * ad.exp(ad.negate(b)) + b + rq * ad.exp(ad.negate(g)) + g


# -- metrics --------------------------------------------------------------------

def translation_error(pred: Pose, truth: Pose) -> float:
    return float(np.linalg.norm(pred.t - truth.t))


def rotation_error(pred: Pose, truth: Pose) -> float:
    """Angle in degrees of the relative rotation, in [0, 180].

    Computed as ``2 atan2(|vec(p^-1 t)|, |scalar(p^-1 t)|)``, which equals
    ``2 arccos(|<p, t>|)`` but is well conditioned near zero. The vector
    part is grouped so that equal (or sign-flipped) inputs cancel exactly.
    """
    ua, va = pred.q.u, np.array(pred.q.v)
    ub, vb = truth.q.u, np.array(truth.q.v)
    vec = (ua * vb - ub * va) - np.cross(va, vb)
    scalar = ua * ub + va @ vb
    return float(np.degrees(2.0 * np.arctan2(np.linalg.norm(vec), abs(scalar))))


def median_errors(per_frame):
    """Component-wise median of ``[(meters, degrees), ...]``."""
    arr = np.asarray(per_frame, dtype=np.float64).reshape(-1, 2)
    if arr.shape[0] == 0:
        raise DegenerateInputError("no per-frame errors to summarize")
    med = np.median(arr, axis=0)
    return float(med[0]), float(med[1])


def mean_pose(poses):
    """Mean position and chordal-mean rotation (principal eigenvector of sum q q^T)."""
    t = np.mean([p.t for p in poses], axis=0)
    qs = np.array([p.q.as_array() for p in poses])
    _, vecs = np.linalg.eigh(qs.T @ qs)
    return Pose(t, UnitQuaternion.from_array(vecs[:, -1], normalize=True))
