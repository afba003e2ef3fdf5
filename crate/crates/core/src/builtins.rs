//! Ready-made metrics and domains used by the examples, the tests and the
//! scenario configurations.

use crate::domain::{LevelFn, SignedDistanceField};
use crate::geometry::{Mat2, MetricField, MetricFn, Point, Tangent};

/// The Euclidean metric.
#[derive(Clone, Copy, Debug, Default)]
pub struct Euclidean;

impl MetricFn for Euclidean {
    fn matrix(&self, _q: &Point) -> Mat2 {
        Mat2::identity()
    }
    fn partials(&self, _q: &Point) -> Option<[Mat2; 2]> {
        Some([Mat2::zeros(); 2])
    }
}

/// `e^{2 x₁} δ`, a conformally flat test metric.
#[derive(Clone, Copy, Debug, Default)]
pub struct ConformalExp;

impl MetricFn for ConformalExp {
    fn matrix(&self, q: &Point) -> Mat2 {
        Mat2::identity() * (2.0 * q.x).exp()
    }
    fn partials(&self, q: &Point) -> Option<[Mat2; 2]> {
        Some([Mat2::identity() * (2.0 * (2.0 * q.x).exp()), Mat2::zeros()])
    }
}

/// The round unit sphere in stereographic coordinates from the south pole:
/// `g = 4 / (1 + |z|²)² δ`. The origin is the north pole.
#[derive(Clone, Copy, Debug, Default)]
pub struct StereographicSphere;

impl MetricFn for StereographicSphere {
    fn matrix(&self, q: &Point) -> Mat2 {
        Mat2::identity() * (4.0 / (1.0 + q.norm_squared()).powi(2))
    }
    fn partials(&self, q: &Point) -> Option<[Mat2; 2]> {
        let c = -16.0 / (1.0 + q.norm_squared()).powi(3);
        Some([Mat2::identity() * (c * q.x), Mat2::identity() * (c * q.y)])
    }
}

/// `φ = x₁`.
#[derive(Clone, Copy, Debug, Default)]
pub struct HalfPlane;

impl LevelFn for HalfPlane {
    fn value(&self, q: &Point) -> f64 {
        q.x
    }
    fn differential(&self, _q: &Point) -> Option<Tangent> {
        Some(Tangent::new(1.0, 0.0))
    }
}

/// `φ = |x - c| - r`.
#[derive(Clone, Copy, Debug)]
pub struct EuclideanBall {
    pub center: Point,
    pub radius: f64,
}

impl LevelFn for EuclideanBall {
    fn value(&self, q: &Point) -> f64 {
        (q - self.center).norm() - self.radius
    }
    fn differential(&self, q: &Point) -> Option<Tangent> {
        let d = q - self.center;
        let n = d.norm();
        Some(if n == 0.0 { Tangent::zeros() } else { d / n })
    }
}

/// Spherical distance to the north pole minus `r₀`, in stereographic
/// coordinates: `φ = 2 atan|z| - r₀`.
#[derive(Clone, Copy, Debug)]
pub struct StereographicCap {
    pub r0: f64,
}

impl LevelFn for StereographicCap {
    fn value(&self, q: &Point) -> f64 {
        2.0 * q.norm().atan() - self.r0
    }
    fn differential(&self, q: &Point) -> Option<Tangent> {
        let r = q.norm();
        Some(if r == 0.0 {
            Tangent::zeros()
        } else {
            q * (2.0 / ((1.0 + r * r) * r))
        })
    }
}

pub fn euclidean() -> MetricField {
    MetricField::new(Euclidean)
}

pub fn conformal_exp() -> MetricField {
    MetricField::new(ConformalExp)
}

pub fn stereographic_sphere() -> MetricField {
    MetricField::new(StereographicSphere)
}

/// The Euclidean unit disk. Convex, so it fails the concavity scan.
pub fn flat_disk() -> SignedDistanceField {
    SignedDistanceField::new(
        euclidean(),
        EuclideanBall {
            center: Point::zeros(),
            radius: 1.0,
        },
        Point::zeros(),
        4.0,
    )
    .expect("origin is inside the unit disk")
}

/// `{x₁ < 0}`. Unbounded, so ray searches fail.
pub fn half_plane() -> SignedDistanceField {
    SignedDistanceField::new(euclidean(), HalfPlane, Point::new(-1.0, 0.0), 50.0)
        .expect("(-1, 0) is inside the half-plane")
}

/// The geodesic ball of radius `r₀` about the north pole of the unit sphere.
/// Strongly concave for `r₀ ∈ ]π/2, π[`.
pub fn spherical_cap(r0: f64) -> SignedDistanceField {
    let boundary = (r0 / 2.0).tan();
    let reach = (((r0 + 1.0).min(3.0)) / 2.0).tan().max(2.0 * boundary);
    SignedDistanceField::new(stereographic_sphere(), StereographicCap { r0 }, Point::zeros(), reach)
        .expect("the north pole is inside the cap")
}
