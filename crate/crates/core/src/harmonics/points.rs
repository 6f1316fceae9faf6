use std::f64::consts::PI;

use nalgebra::{Matrix3, Vector3};

use crate::error::{Error, Result};

/// A point on the unit sphere S².
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpherePoint([f64; 3]);

impl SpherePoint {
    /// Normalizes `(x, y, z)`; rejects the zero vector.
    pub fn new(x: f64, y: f64, z: f64) -> Result<Self> {
        let n = (x * x + y * y + z * z).sqrt();
        if !(n.is_finite() && n > 0.0) {
            return Err(Error::Domain(format!(
                "cannot normalize ({x}, {y}, {z}) onto the sphere"
            )));
        }
        Ok(SpherePoint([x / n, y / n, z / n]))
    }

    /// Builds a point from coordinates that are already (close to) unit length.
    pub fn from_unit(v: [f64; 3]) -> Self {
        let n = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
        if (n - 1.0).abs() < 1e-15 {
            SpherePoint(v)
        } else {
            SpherePoint([v[0] / n, v[1] / n, v[2] / n])
        }
    }

    /// Polar angle `theta` from +z and azimuth `phi`.
    pub fn from_angles(theta: f64, phi: f64) -> Self {
        let s = theta.sin();
        SpherePoint([s * phi.cos(), s * phi.sin(), theta.cos()])
    }

    pub fn north() -> Self {
        SpherePoint([0.0, 0.0, 1.0])
    }

    pub fn coords(&self) -> [f64; 3] {
        self.0
    }

    pub fn x(&self) -> f64 {
        self.0[0]
    }
    pub fn y(&self) -> f64 {
        self.0[1]
    }
    pub fn z(&self) -> f64 {
        self.0[2]
    }

    pub fn vector(&self) -> Vector3<f64> {
        Vector3::new(self.0[0], self.0[1], self.0[2])
    }

    pub fn antipode(&self) -> Self {
        SpherePoint([-self.0[0], -self.0[1], -self.0[2]])
    }

    pub fn dot(&self, other: &SpherePoint) -> f64 {
        self.0[0] * other.0[0] + self.0[1] * other.0[1] + self.0[2] * other.0[2]
    }

    /// Great-circle distance.
    pub fn distance(&self, other: &SpherePoint) -> f64 {
        // atan2 form stays accurate for nearly equal and nearly antipodal points
        let a = self.vector();
        let b = other.vector();
        a.cross(&b).norm().atan2(a.dot(&b))
    }

    /// An orthonormal pair `(e1, e2)` completing `self` to a right-handed frame.
    pub fn tangent_frame(&self) -> (SpherePoint, SpherePoint) {
        let n = self.vector();
        let helper = if n.z.abs() < 0.9 {
            Vector3::new(0.0, 0.0, 1.0)
        } else {
            Vector3::new(1.0, 0.0, 0.0)
        };
        let e1 = helper.cross(&n).normalize();
        let e2 = n.cross(&e1);
        (
            SpherePoint([e1.x, e1.y, e1.z]),
            SpherePoint([e2.x, e2.y, e2.z]),
        )
    }
}

/// An element of SO(3), stored both as Euler angles `g = Z(gamma) X(beta) Z(alpha)`
/// and as its matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RotationPoint {
    alpha: f64,
    beta: f64,
    gamma: f64,
    matrix: Matrix3<f64>,
}

fn rot_z(t: f64) -> Matrix3<f64> {
    let (s, c) = t.sin_cos();
    Matrix3::new(c, -s, 0.0, s, c, 0.0, 0.0, 0.0, 1.0)
}

fn rot_x(t: f64) -> Matrix3<f64> {
    let (s, c) = t.sin_cos();
    Matrix3::new(1.0, 0.0, 0.0, 0.0, c, -s, 0.0, s, c)
}

fn wrap_angle(a: f64) -> f64 {
    let w = a.rem_euclid(2.0 * PI);
    if w >= 2.0 * PI {
        0.0
    } else {
        w
    }
}

impl RotationPoint {
    pub fn identity() -> Self {
        RotationPoint::from_euler(0.0, 0.0, 0.0)
    }

    pub fn from_euler(alpha: f64, beta: f64, gamma: f64) -> Self {
        let matrix = rot_z(gamma) * rot_x(beta) * rot_z(alpha);
        RotationPoint {
            alpha: wrap_angle(alpha),
            beta,
            gamma: wrap_angle(gamma),
            matrix,
        }
    }

    /// Recovers Euler angles from an orthogonal matrix with determinant 1.
    pub fn from_matrix(m: Matrix3<f64>) -> Result<Self> {
        let orth = (m.transpose() * m - Matrix3::identity()).abs().max();
        if orth > 1e-9 || (m.determinant() - 1.0).abs() > 1e-9 {
            return Err(Error::Domain("matrix is not a proper rotation".into()));
        }
        let cb = m[(2, 2)].clamp(-1.0, 1.0);
        let sb = (m[(2, 0)].powi(2) + m[(2, 1)].powi(2)).sqrt();
        let beta = sb.atan2(cb);
        let (alpha, gamma) = if sb > 1e-12 {
            (m[(2, 0)].atan2(m[(2, 1)]), m[(0, 2)].atan2(-m[(1, 2)]))
        } else {
            // gimbal lock: only alpha +/- gamma is determined
            (0.0, m[(1, 0)].atan2(m[(0, 0)]))
        };
        Ok(RotationPoint {
            alpha: wrap_angle(alpha),
            beta,
            gamma: wrap_angle(gamma),
            matrix: m,
        })
    }

    pub fn euler(&self) -> (f64, f64, f64) {
        (self.alpha, self.beta, self.gamma)
    }

    pub fn matrix(&self) -> &Matrix3<f64> {
        &self.matrix
    }

    pub fn apply(&self, p: &SpherePoint) -> SpherePoint {
        let v = self.matrix * p.vector();
        SpherePoint::from_unit([v.x, v.y, v.z])
    }

    pub fn compose(&self, other: &RotationPoint) -> RotationPoint {
        let m = self.matrix * other.matrix;
        RotationPoint::from_matrix(m).expect("product of rotations is a rotation")
    }

    pub fn inverse(&self) -> RotationPoint {
        RotationPoint::from_matrix(self.matrix.transpose()).expect("transpose of a rotation")
    }

    /// Rotation angle of `self^T other`.
    pub fn distance(&self, other: &RotationPoint) -> f64 {
        let tr = (self.matrix.transpose() * other.matrix).trace();
        ((tr - 1.0) / 2.0).clamp(-1.0, 1.0).acos()
    }

    /// Density of the normalized Haar measure in Euler coordinates.
    pub fn haar_density(beta: f64) -> f64 {
        beta.sin() / (8.0 * PI * PI)
    }

    /// A rotation mapping the north pole onto `p`.
    pub fn north_to(p: &SpherePoint) -> RotationPoint {
        // Z(gamma) X(beta) maps e_z to (sin b sin g, -sin b cos g, cos b)
        let beta = p.z().clamp(-1.0, 1.0).acos();
        let gamma = if beta.sin().abs() > 1e-15 {
            p.x().atan2(-p.y())
        } else {
            0.0
        };
        RotationPoint::from_euler(0.0, beta, gamma)
    }

    /// Rotation about the z-axis.
    pub fn about_z(angle: f64) -> RotationPoint {
        RotationPoint::from_euler(angle, 0.0, 0.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn euler_matrix_round_trip() {
        for &(a, b, g) in &[(0.3, 1.1, 4.0), (5.9, 0.01, 0.2), (1.0, 3.1, 2.5), (0.0, 0.0, 1.7)] {
            let r = RotationPoint::from_euler(a, b, g);
            let back = RotationPoint::from_matrix(*r.matrix()).unwrap();
            let again = RotationPoint::from_euler(back.alpha, back.beta, back.gamma);
            assert!((again.matrix() - r.matrix()).abs().max() < 1e-12);
        }
    }

    #[test]
    fn north_to_hits_target() {
        let p = SpherePoint::new(0.3, -0.5, 0.2).unwrap();
        let r = RotationPoint::north_to(&p);
        let q = r.apply(&SpherePoint::north());
        assert!(q.distance(&p) < 1e-12);
        let s = RotationPoint::north_to(&SpherePoint::north().antipode());
        assert!(s.apply(&SpherePoint::north()).distance(&SpherePoint::north().antipode()) < 1e-12);
    }

    #[test]
    fn antipode_distance_is_pi() {
        let p = SpherePoint::new(1.0, 2.0, 3.0).unwrap();
        assert!((p.distance(&p.antipode()) - PI).abs() < 1e-15);
    }
}
