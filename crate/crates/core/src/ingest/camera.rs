use super::{Detection, IngestError};
use serde::{Deserialize, Serialize};

pub type Point3 = [f64; 3];

/// Pinhole intrinsics (zero skew).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CameraIntrinsics {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
    /// Image size, when known, bounds detection pixel coordinates.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub width: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub height: Option<u32>,
}

impl CameraIntrinsics {
    pub fn new(fx: f64, fy: f64, cx: f64, cy: f64) -> Self {
        Self { fx, fy, cx, cy, width: None, height: None }
    }

    fn check(&self) -> Result<(), IngestError> {
        if self.fx == 0.0 || self.fy == 0.0 || !self.fx.is_finite() || !self.fy.is_finite() {
            return Err(IngestError::SingularIntrinsics);
        }
        Ok(())
    }

    pub fn contains_pixel(&self, u: f64, v: f64) -> bool {
        let within = |p: f64, size: Option<u32>| p.is_finite() && p >= 0.0 && size.is_none_or(|s| p < s as f64);
        within(u, self.width) && within(v, self.height)
    }
}

/// World-from-camera rigid transform. Camera axes follow the usual
/// computer-vision convention: x right, y down, z forward.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FramePose {
    pub rotation: [[f64; 3]; 3],
    pub translation: Point3,
    pub timestamp: f64,
}

impl FramePose {
    pub fn new(rotation: [[f64; 3]; 3], translation: Point3, timestamp: f64) -> Result<Self, IngestError> {
        let pose = Self { rotation, translation, timestamp };
        pose.check()?;
        Ok(pose)
    }

    pub fn identity() -> Self {
        Self { rotation: [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]], translation: [0.0; 3], timestamp: 0.0 }
    }

    /// Camera looking horizontally along `yaw` (radians from world +x,
    /// world z up) from `position`.
    pub fn looking(position: Point3, yaw: f64, timestamp: f64) -> Self {
        let (s, c) = yaw.sin_cos();
        // columns: camera x (right), camera y (down), camera z (forward)
        let rotation = [[s, 0.0, c], [-c, 0.0, s], [0.0, -1.0, 0.0]];
        Self { rotation, translation: position, timestamp }
    }

    /// Max abs entry of `RᵀR - I`, plus the determinant sign check.
    pub fn check(&self) -> Result<(), IngestError> {
        let r = &self.rotation;
        let mut worst: f64 = 0.0;
        for i in 0..3 {
            for j in 0..3 {
                let dot: f64 = (0..3).map(|k| r[k][i] * r[k][j]).sum();
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((dot - target).abs());
            }
        }
        let det = r[0][0] * (r[1][1] * r[2][2] - r[1][2] * r[2][1]) - r[0][1] * (r[1][0] * r[2][2] - r[1][2] * r[2][0])
            + r[0][2] * (r[1][0] * r[2][1] - r[1][1] * r[2][0]);
        worst = worst.max((det - 1.0).abs());
        if !(worst <= 1e-6) {
            return Err(IngestError::NotOrthonormal(worst));
        }
        Ok(())
    }
}

/// `X_w = t_wc + Z_c * R_wc * K^-1 * [u, v, 1]^T`.
pub fn unproject_pixel(
    u: f64,
    v: f64,
    depth: f64,
    intr: &CameraIntrinsics,
    pose: &FramePose,
) -> Result<Point3, IngestError> {
    intr.check()?;
    if !(depth > 0.0 && depth.is_finite()) {
        return Err(IngestError::InvalidDepth(depth));
    }
    let ray = [(u - intr.cx) / intr.fx, (v - intr.cy) / intr.fy, 1.0];
    let r = &pose.rotation;
    let mut out = pose.translation;
    for (i, o) in out.iter_mut().enumerate() {
        *o += depth * (r[i][0] * ray[0] + r[i][1] * ray[1] + r[i][2] * ray[2]);
    }
    Ok(out)
}

pub fn unproject(det: &Detection, intr: &CameraIntrinsics, pose: &FramePose) -> Result<Point3, IngestError> {
    unproject_pixel(det.pixel_u, det.pixel_v, det.median_depth, intr, pose)
}

/// Inverse of [`unproject_pixel`]: returns `(u, v, Z_c)`.
pub fn project(point: Point3, intr: &CameraIntrinsics, pose: &FramePose) -> Result<(f64, f64, f64), IngestError> {
    intr.check()?;
    let r = &pose.rotation;
    let d = [point[0] - pose.translation[0], point[1] - pose.translation[1], point[2] - pose.translation[2]];
    // camera coords = Rᵀ d
    let cam: Vec<f64> = (0..3).map(|j| (0..3).map(|i| r[i][j] * d[i]).sum()).collect();
    if cam[2] <= 0.0 {
        return Err(IngestError::BehindCamera);
    }
    Ok((intr.fx * cam[0] / cam[2] + intr.cx, intr.fy * cam[1] / cam[2] + intr.cy, cam[2]))
}
