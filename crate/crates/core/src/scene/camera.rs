use nalgebra::{Matrix3, Matrix4};

use crate::{Error, Result, Vec3};

/// Pinhole camera. Camera frame: +z forward, +x right, +y down; pixel
/// centers sit at integer coordinates plus one half.
#[derive(Clone, Debug, PartialEq)]
pub struct Camera {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
    pub width: u32,
    pub height: u32,
    cam_to_world: Matrix4<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Ray {
    pub origin: Vec3,
    pub direction: Vec3,
    pub near: f64,
    pub far: f64,
}

impl Ray {
    pub fn at(&self, t: f64) -> Vec3 {
        self.origin + self.direction * t
    }
}

const ORTHO_TOL: f64 = 1e-6;

impl Camera {
    pub fn new(
        fx: f64,
        fy: f64,
        cx: f64,
        cy: f64,
        width: u32,
        height: u32,
        cam_to_world: Matrix4<f64>,
    ) -> Result<Self> {
        if !(fx > 0.0 && fy > 0.0) || !cx.is_finite() || !cy.is_finite() {
            return Err(Error::InvalidCamera(format!(
                "bad intrinsics fx={fx} fy={fy} cx={cx} cy={cy}"
            )));
        }
        if width == 0 || height == 0 {
            return Err(Error::InvalidCamera(format!(
                "empty image {width}x{height}"
            )));
        }
        let rot: Matrix3<f64> = cam_to_world.fixed_view::<3, 3>(0, 0).into();
        let ortho_err = (rot.transpose() * rot - Matrix3::identity()).abs().max();
        if ortho_err > ORTHO_TOL || (rot.determinant() - 1.0).abs() > ORTHO_TOL {
            return Err(Error::InvalidCamera(
                "rotation block is not a proper rotation".into(),
            ));
        }
        let last = cam_to_world.row(3);
        if last[0] != 0.0 || last[1] != 0.0 || last[2] != 0.0 || last[3] != 1.0 {
            return Err(Error::InvalidCamera(
                "last row of cam_to_world must be 0 0 0 1".into(),
            ));
        }
        if cam_to_world.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidCamera("non-finite pose".into()));
        }
        Ok(Camera {
            fx,
            fy,
            cx,
            cy,
            width,
            height,
            cam_to_world,
        })
    }

    /// Camera at `eye` looking at `target`, with `up` pointing towards the
    /// top of the image. Principal point at the image center.
    pub fn look_at(
        eye: Vec3,
        target: Vec3,
        up: Vec3,
        width: u32,
        height: u32,
        fov_x_deg: f64,
    ) -> Result<Self> {
        let forward = (target - eye)
            .try_normalize(1e-12)
            .ok_or_else(|| Error::InvalidCamera("eye and target coincide".into()))?;
        let right = forward
            .cross(&up)
            .try_normalize(1e-12)
            .ok_or_else(|| Error::InvalidCamera("up vector parallel to view direction".into()))?;
        let down = forward.cross(&right);
        let rot = Matrix3::from_columns(&[right, down, forward]);
        let fx = width as f64 * 0.5 / (fov_x_deg.to_radians() * 0.5).tan();
        Camera::new(
            fx,
            fx,
            width as f64 * 0.5,
            height as f64 * 0.5,
            width,
            height,
            pose_matrix(&rot, &eye),
        )
    }

    pub fn cam_to_world(&self) -> &Matrix4<f64> {
        &self.cam_to_world
    }

    pub fn rotation(&self) -> Matrix3<f64> {
        self.cam_to_world.fixed_view::<3, 3>(0, 0).into()
    }

    pub fn position(&self) -> Vec3 {
        self.cam_to_world.fixed_view::<3, 1>(0, 3).into()
    }

    pub fn forward(&self) -> Vec3 {
        self.rotation().column(2).into()
    }

    pub fn pixel_count(&self) -> usize {
        self.width as usize * self.height as usize
    }

    /// Same intrinsics, different pose.
    pub fn with_pose(&self, rotation: &Matrix3<f64>, position: &Vec3) -> Result<Self> {
        Camera::new(
            self.fx,
            self.fy,
            self.cx,
            self.cy,
            self.width,
            self.height,
            pose_matrix(rotation, position),
        )
    }

    /// World-space ray through the center of pixel `(px, py)`.
    pub fn ray(&self, px: u32, py: u32, near: f64, far: f64) -> Result<Ray> {
        if px >= self.width || py >= self.height {
            return Err(Error::PixelOutOfRange {
                px,
                py,
                width: self.width,
                height: self.height,
            });
        }
        Ok(self.ray_unchecked(px, py, near, far))
    }

    #[inline]
    pub(crate) fn ray_unchecked(&self, px: u32, py: u32, near: f64, far: f64) -> Ray {
        let d_cam = Vec3::new(
            (px as f64 + 0.5 - self.cx) / self.fx,
            (py as f64 + 0.5 - self.cy) / self.fy,
            1.0,
        );
        let m = &self.cam_to_world;
        let d = Vec3::new(
            m[(0, 0)] * d_cam.x + m[(0, 1)] * d_cam.y + m[(0, 2)] * d_cam.z,
            m[(1, 0)] * d_cam.x + m[(1, 1)] * d_cam.y + m[(1, 2)] * d_cam.z,
            m[(2, 0)] * d_cam.x + m[(2, 1)] * d_cam.y + m[(2, 2)] * d_cam.z,
        );
        Ray {
            origin: Vec3::new(m[(0, 3)], m[(1, 3)], m[(2, 3)]),
            direction: d.normalize(),
            near,
            far,
        }
    }
}

pub(crate) fn pose_matrix(rot: &Matrix3<f64>, position: &Vec3) -> Matrix4<f64> {
    let mut m = Matrix4::identity();
    m.fixed_view_mut::<3, 3>(0, 0).copy_from(rot);
    m.fixed_view_mut::<3, 1>(0, 3).copy_from(position);
    m
}
