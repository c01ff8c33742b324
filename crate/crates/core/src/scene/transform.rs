use nalgebra::{Matrix3, Rotation3, Unit};

use crate::{Error, Result, Vec3};

/// Uniform scale, rotation and translation of the object about its centroid.
///
/// The forward map takes a canonical object point to the world,
/// `p' = R (p - O) s + O + t`; rendering uses the inverse to pull world
/// samples back into the object field.
#[derive(Clone, Debug, PartialEq)]
pub struct SrtTransform {
    scale: f64,
    rotation: Matrix3<f64>,
    translation: Vec3,
    centroid: Vec3,
}

impl SrtTransform {
    pub fn new(
        scale: f64,
        rotation: Matrix3<f64>,
        translation: Vec3,
        centroid: Vec3,
    ) -> Result<Self> {
        if !(scale > 0.0) || !scale.is_finite() {
            return Err(Error::InvalidTransform(format!(
                "scale must be positive, got {scale}"
            )));
        }
        let ortho_err = (rotation.transpose() * rotation - Matrix3::identity())
            .abs()
            .max();
        if ortho_err > 1e-6 || (rotation.determinant() - 1.0).abs() > 1e-6 {
            return Err(Error::InvalidTransform(
                "rotation is not orthonormal with det +1".into(),
            ));
        }
        if translation
            .iter()
            .chain(centroid.iter())
            .any(|v| !v.is_finite())
        {
            return Err(Error::InvalidTransform(
                "non-finite translation or centroid".into(),
            ));
        }
        Ok(SrtTransform {
            scale,
            rotation,
            translation,
            centroid,
        })
    }

    pub fn identity() -> Self {
        SrtTransform {
            scale: 1.0,
            rotation: Matrix3::identity(),
            translation: Vec3::zeros(),
            centroid: Vec3::zeros(),
        }
    }

    /// Rotation given as an axis and an angle in degrees.
    pub fn from_axis_angle(
        scale: f64,
        axis: Vec3,
        angle_deg: f64,
        translation: Vec3,
        centroid: Vec3,
    ) -> Result<Self> {
        let rotation = if angle_deg == 0.0 {
            Matrix3::identity()
        } else {
            let axis = Unit::try_new(axis, 1e-12)
                .ok_or_else(|| Error::InvalidTransform("rotation axis has zero length".into()))?;
            *Rotation3::from_axis_angle(&axis, angle_deg.to_radians()).matrix()
        };
        SrtTransform::new(scale, rotation, translation, centroid)
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn rotation(&self) -> &Matrix3<f64> {
        &self.rotation
    }

    pub fn translation(&self) -> &Vec3 {
        &self.translation
    }

    pub fn centroid(&self) -> &Vec3 {
        &self.centroid
    }

    /// True when the map is exactly the identity regardless of the centroid.
    pub fn is_identity(&self) -> bool {
        self.scale == 1.0
            && self.rotation == Matrix3::identity()
            && self.translation == Vec3::zeros()
    }

    #[inline]
    pub fn world_to_canonical(&self, p: &Vec3) -> Vec3 {
        self.rotation
            .tr_mul(&((p - self.translation - self.centroid) / self.scale))
            + self.centroid
    }

    pub fn canonical_to_world(&self, p: &Vec3) -> Vec3 {
        self.rotation * (p - self.centroid) * self.scale + self.centroid + self.translation
    }

    /// Factor applied to canonical density so optical depth through the
    /// object is preserved when its extent grows by `scale`.
    pub fn density_correction(&self) -> f64 {
        1.0 / self.scale
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn identity_maps_points_to_themselves() {
        let x = SrtTransform::identity();
        assert_eq!(
            x.world_to_canonical(&Vec3::new(1.0, 2.0, 3.0)),
            Vec3::new(1.0, 2.0, 3.0)
        );
        assert_eq!(x.density_correction(), 1.0);
    }

    #[test]
    fn scale_two_halves_offsets() {
        let x = SrtTransform::new(2.0, Matrix3::identity(), Vec3::zeros(), Vec3::zeros()).unwrap();
        assert!((x.world_to_canonical(&Vec3::x()) - Vec3::new(0.5, 0.0, 0.0)).norm() < 1e-15);
        assert_eq!(x.density_correction(), 0.5);
        let half =
            SrtTransform::new(0.5, Matrix3::identity(), Vec3::zeros(), Vec3::zeros()).unwrap();
        assert_eq!(half.density_correction(), 2.0);
    }

    #[test]
    fn quarter_turn_about_z_is_undone() {
        let x = SrtTransform::from_axis_angle(1.0, Vec3::z(), 90.0, Vec3::zeros(), Vec3::zeros())
            .unwrap();
        assert!((x.world_to_canonical(&Vec3::y()) - Vec3::x()).norm() < 1e-12);
    }

    #[test]
    fn rejects_invalid_parameters() {
        assert!(SrtTransform::new(0.0, Matrix3::identity(), Vec3::zeros(), Vec3::zeros()).is_err());
        assert!(
            SrtTransform::new(1.0, Matrix3::identity() * 2.0, Vec3::zeros(), Vec3::zeros())
                .is_err()
        );
        assert!(SrtTransform::from_axis_angle(
            1.0,
            Vec3::zeros(),
            10.0,
            Vec3::zeros(),
            Vec3::zeros()
        )
        .is_err());
    }

    proptest! {
        #[test]
        fn canonical_round_trip(
            scale in 0.1f64..5.0,
            axis in proptest::array::uniform3(-1.0f64..1.0),
            angle in -180.0f64..180.0,
            t in proptest::array::uniform3(-3.0f64..3.0),
            o in proptest::array::uniform3(-2.0f64..2.0),
            p in proptest::array::uniform3(-4.0f64..4.0),
        ) {
            let axis = Vec3::from(axis);
            prop_assume!(axis.norm() > 1e-3);
            let x = SrtTransform::from_axis_angle(scale, axis, angle, Vec3::from(t), Vec3::from(o)).unwrap();
            let p = Vec3::from(p);
            let back = x.world_to_canonical(&x.canonical_to_world(&p));
            prop_assert!((back - p).norm() < 1e-9);
        }
    }
}
