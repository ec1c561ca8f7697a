//! Planar geometry primitives: bounding boxes, points, and similarity
//! transforms with closed-form least-squares estimation.

use serde::{Deserialize, Serialize};

use crate::error::GeometryError;

/// A point in image pixel coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

impl Point2 {
    pub fn new(x: f64, y: f64) -> Self {
        Point2 { x, y }
    }

    pub fn dist(&self, other: &Point2) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

/// Axis-aligned detection box in image pixel coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundingBox {
    pub x_min: f64,
    pub y_min: f64,
    pub x_max: f64,
    pub y_max: f64,
}

impl BoundingBox {
    pub fn new(x_min: f64, y_min: f64, x_max: f64, y_max: f64) -> Result<Self, GeometryError> {
        let b = BoundingBox {
            x_min,
            y_min,
            x_max,
            y_max,
        };
        if ![x_min, y_min, x_max, y_max].iter().all(|v| v.is_finite()) {
            return Err(GeometryError::NonFinite);
        }
        if x_min >= x_max || y_min >= y_max {
            return Err(GeometryError::EmptyBox);
        }
        Ok(b)
    }

    pub fn center(&self) -> Point2 {
        Point2::new(
            0.5 * (self.x_min + self.x_max),
            0.5 * (self.y_min + self.y_max),
        )
    }

    pub fn width(&self) -> f64 {
        self.x_max - self.x_min
    }

    pub fn height(&self) -> f64 {
        self.y_max - self.y_min
    }

    /// Axis-aligned hull of an arbitrary point set.
    pub fn hull_of(points: &[Point2]) -> Result<Self, GeometryError> {
        let mut x_min = f64::INFINITY;
        let mut y_min = f64::INFINITY;
        let mut x_max = f64::NEG_INFINITY;
        let mut y_max = f64::NEG_INFINITY;
        for p in points {
            x_min = x_min.min(p.x);
            y_min = y_min.min(p.y);
            x_max = x_max.max(p.x);
            y_max = y_max.max(p.y);
        }
        BoundingBox::new(x_min, y_min, x_max, y_max)
    }
}

/// The four corner vertices of a box, in fixed counter-clockwise order
/// starting at (x_min, y_min).
pub fn corners(b: &BoundingBox) -> [Point2; 4] {
    [
        Point2::new(b.x_min, b.y_min),
        Point2::new(b.x_max, b.y_min),
        Point2::new(b.x_max, b.y_max),
        Point2::new(b.x_min, b.y_max),
    ]
}

/// Planar similarity: uniform scale, rotation, then translation.
///
/// `apply` computes `s * R(theta) * p + t`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimilarityTransform {
    pub theta: f64,
    pub t_x: f64,
    pub t_y: f64,
    pub scale: f64,
}

impl SimilarityTransform {
    pub fn new(theta: f64, t_x: f64, t_y: f64, scale: f64) -> Result<Self, GeometryError> {
        if !(scale > 0.0) || ![theta, t_x, t_y, scale].iter().all(|v| v.is_finite()) {
            return Err(GeometryError::InvalidScale(scale));
        }
        Ok(SimilarityTransform {
            theta,
            t_x,
            t_y,
            scale,
        })
    }

    pub fn identity() -> Self {
        SimilarityTransform {
            theta: 0.0,
            t_x: 0.0,
            t_y: 0.0,
            scale: 1.0,
        }
    }

    pub fn apply(&self, p: Point2) -> Point2 {
        let (s, c) = self.theta.sin_cos();
        Point2::new(
            self.scale * (c * p.x - s * p.y) + self.t_x,
            self.scale * (s * p.x + c * p.y) + self.t_y,
        )
    }

    /// `self ∘ other`: apply `other` first, then `self`.
    pub fn compose(&self, other: &SimilarityTransform) -> SimilarityTransform {
        let t = self.apply(Point2::new(other.t_x, other.t_y));
        SimilarityTransform {
            theta: self.theta + other.theta,
            t_x: t.x,
            t_y: t.y,
            scale: self.scale * other.scale,
        }
    }

    pub fn inverse(&self) -> SimilarityTransform {
        let inv_s = 1.0 / self.scale;
        let (s, c) = (-self.theta).sin_cos();
        SimilarityTransform {
            theta: -self.theta,
            t_x: -inv_s * (c * self.t_x - s * self.t_y),
            t_y: -inv_s * (s * self.t_x + c * self.t_y),
            scale: inv_s,
        }
    }

    /// 3x3 homogeneous matrix, row-major.
    pub fn matrix(&self) -> [[f64; 3]; 3] {
        let (s, c) = self.theta.sin_cos();
        [
            [self.scale * c, -self.scale * s, self.t_x],
            [self.scale * s, self.scale * c, self.t_y],
            [0.0, 0.0, 1.0],
        ]
    }
}

/// Map each box's corner set through `t`, preserving per-box corner order.
/// The results are general quadrilaterals, not re-axis-aligned.
pub fn transform_box_points(t: &SimilarityTransform, boxes: &[BoundingBox]) -> Vec<[Point2; 4]> {
    boxes
        .iter()
        .map(|b| {
            let cs = corners(b);
            [
                t.apply(cs[0]),
                t.apply(cs[1]),
                t.apply(cs[2]),
                t.apply(cs[3]),
            ]
        })
        .collect()
}

/// Least-squares similarity estimate aligning `p1` onto `p2`:
/// minimizes sum of ||T(p1_k) - p2_k||^2 in closed form via centroid
/// subtraction and the 2D cross/dot angle estimate.
pub fn estimate_similarity(
    p1: &[Point2],
    p2: &[Point2],
    with_scale: bool,
) -> Result<SimilarityTransform, GeometryError> {
    if p1.len() != p2.len() || p1.len() < 2 {
        return Err(GeometryError::BadPointCount {
            left: p1.len(),
            right: p2.len(),
        });
    }
    let n = p1.len() as f64;
    let c1 = Point2::new(
        p1.iter().map(|p| p.x).sum::<f64>() / n,
        p1.iter().map(|p| p.y).sum::<f64>() / n,
    );
    let c2 = Point2::new(
        p2.iter().map(|p| p.x).sum::<f64>() / n,
        p2.iter().map(|p| p.y).sum::<f64>() / n,
    );

    let mut dot = 0.0; // sum p' . q'
    let mut cross = 0.0; // sum p' x q'
    let mut norm1 = 0.0; // sum |p'|^2
    for (p, q) in p1.iter().zip(p2.iter()) {
        let px = p.x - c1.x;
        let py = p.y - c1.y;
        let qx = q.x - c2.x;
        let qy = q.y - c2.y;
        dot += px * qx + py * qy;
        cross += px * qy - py * qx;
        norm1 += px * px + py * py;
    }
    if norm1 <= 1e-18 {
        return Err(GeometryError::DegenerateInput);
    }

    let theta = cross.atan2(dot);
    let scale = if with_scale {
        let s = (dot * dot + cross * cross).sqrt() / norm1;
        if !(s > 0.0) {
            return Err(GeometryError::DegenerateInput);
        }
        s
    } else {
        1.0
    };
    let (sn, cs) = theta.sin_cos();
    let t_x = c2.x - scale * (cs * c1.x - sn * c1.y);
    let t_y = c2.y - scale * (sn * c1.x + cs * c1.y);
    SimilarityTransform::new(theta, t_x, t_y, scale)
}
