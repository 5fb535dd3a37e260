//! Closed polylines in the plane: orientation, winding numbers, and
//! self-intersection detection.

use thiserror::Error;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum CurveError {
    #[error("closed curve needs at least 4 distinct vertices (got {0})")]
    TooFewVertices(usize),
    #[error("curve endpoints differ by {0:e}, more than the closure tolerance 1e-9")]
    NotClosed(f64),
    #[error("point lies on the curve (within 1e-9)")]
    PointOnCurve,
}

/// Closed polyline. The vertex list stores the closure explicitly: the last
/// vertex equals the first exactly (snapped at construction from an input
/// that must close within 1e-9). Consecutive duplicates are removed.
#[derive(Debug, Clone, PartialEq)]
pub struct ClosedCurve {
    vertices: Vec<[f64; 2]>,
    orientation: i8,
    self_intersecting: bool,
}

impl ClosedCurve {
    /// Builds a curve from vertices; the input may or may not repeat the
    /// first vertex at the end, but first and last must agree within 1e-9.
    pub fn new(mut vertices: Vec<[f64; 2]>) -> Result<ClosedCurve, CurveError> {
        if let (Some(first), Some(last)) = (vertices.first().copied(), vertices.last().copied()) {
            let gap = dist(first, last);
            if gap > 0.0 {
                if gap > 1e-9 {
                    return Err(CurveError::NotClosed(gap));
                }
                vertices.push(first);
            }
            // Snap the closure exactly.
            if let Some(last) = vertices.last_mut() {
                *last = first;
            }
        }
        vertices.dedup_by(|a, b| a == b);
        // dedup removed the closing duplicate; restore it.
        if let Some(&first) = vertices.first() {
            if vertices.last() != Some(&first) {
                vertices.push(first);
            }
        }
        if vertices.len() < 5 {
            return Err(CurveError::TooFewVertices(vertices.len().saturating_sub(1)));
        }
        let area = shoelace(&vertices);
        let scale: f64 = vertices
            .iter()
            .map(|v| v[0].abs().max(v[1].abs()))
            .fold(0.0, f64::max);
        let orientation = if area.abs() <= 1e-14 * scale.max(1.0).powi(2) {
            0
        } else if area > 0.0 {
            1
        } else {
            -1
        };
        let self_intersecting = polyline_self_intersects(&vertices);
        Ok(ClosedCurve { vertices, orientation, self_intersecting })
    }

    /// Builds a curve from an open vertex loop, closing it back to the first
    /// vertex implicitly. Useful for synthetic curves sampled over a
    /// half-open parameter range.
    pub fn from_loop(mut vertices: Vec<[f64; 2]>) -> Result<ClosedCurve, CurveError> {
        if let Some(&first) = vertices.first() {
            if vertices.last() != Some(&first) {
                vertices.push(first);
            }
        }
        ClosedCurve::new(vertices)
    }

    /// Vertices including the closing duplicate of the first.
    pub fn vertices(&self) -> &[[f64; 2]] {
        &self.vertices
    }

    pub fn segment_count(&self) -> usize {
        self.vertices.len() - 1
    }

    /// +1 counterclockwise, -1 clockwise, 0 when the signed area vanishes
    /// (degenerate or balanced self-intersecting curves).
    pub fn orientation(&self) -> i8 {
        self.orientation
    }

    pub fn is_self_intersecting(&self) -> bool {
        self.self_intersecting
    }

    /// Net signed area (counterclockwise positive). For self-intersecting
    /// curves this is the winding-weighted area.
    pub fn signed_area(&self) -> f64 {
        shoelace(&self.vertices)
    }

    pub fn bounding_box(&self) -> ([f64; 2], [f64; 2]) {
        let mut lo = [f64::INFINITY; 2];
        let mut hi = [f64::NEG_INFINITY; 2];
        for v in &self.vertices {
            for i in 0..2 {
                lo[i] = lo[i].min(v[i]);
                hi[i] = hi[i].max(v[i]);
            }
        }
        (lo, hi)
    }

    /// Same curve traversed in the opposite direction.
    pub fn reversed(&self) -> ClosedCurve {
        let mut vertices = self.vertices.clone();
        vertices.reverse();
        ClosedCurve {
            vertices,
            orientation: -self.orientation,
            self_intersecting: self.self_intersecting,
        }
    }

    /// Signed winding number of the curve around `pt` by ray crossings.
    /// Errors when `pt` lies within 1e-9 of the curve; the caller perturbs.
    pub fn winding_number(&self, pt: [f64; 2]) -> Result<i32, CurveError> {
        for seg in self.vertices.windows(2) {
            if point_segment_distance(pt, seg[0], seg[1]) <= 1e-9 {
                return Err(CurveError::PointOnCurve);
            }
        }
        Ok(self.winding_number_unchecked(pt))
    }

    /// Ray-crossing count without the on-curve guard.
    pub fn winding_number_unchecked(&self, pt: [f64; 2]) -> i32 {
        let mut wn = 0;
        for seg in self.vertices.windows(2) {
            let (a, b) = (seg[0], seg[1]);
            if a[1] <= pt[1] {
                if b[1] > pt[1] && is_left(a, b, pt) > 0.0 {
                    wn += 1;
                }
            } else if b[1] <= pt[1] && is_left(a, b, pt) < 0.0 {
                wn -= 1;
            }
        }
        wn
    }
}

fn dist(a: [f64; 2], b: [f64; 2]) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt()
}

/// Twice the signed area of the triangle (a, b, p); positive when p is to
/// the left of the directed segment a->b.
fn is_left(a: [f64; 2], b: [f64; 2], p: [f64; 2]) -> f64 {
    (b[0] - a[0]) * (p[1] - a[1]) - (p[0] - a[0]) * (b[1] - a[1])
}

fn shoelace(vertices: &[[f64; 2]]) -> f64 {
    let mut acc = 0.0;
    for seg in vertices.windows(2) {
        acc += seg[0][0] * seg[1][1] - seg[1][0] * seg[0][1];
    }
    0.5 * acc
}

pub fn point_segment_distance(p: [f64; 2], a: [f64; 2], b: [f64; 2]) -> f64 {
    let ab = [b[0] - a[0], b[1] - a[1]];
    let ap = [p[0] - a[0], p[1] - a[1]];
    let len2 = ab[0] * ab[0] + ab[1] * ab[1];
    if len2 == 0.0 {
        return dist(p, a);
    }
    let t = ((ap[0] * ab[0] + ap[1] * ab[1]) / len2).clamp(0.0, 1.0);
    dist(p, [a[0] + t * ab[0], a[1] + t * ab[1]])
}

/// Segment-pair sweep over the polyline: segments are sorted by their lower
/// x-extent and tested only against actives whose x-ranges overlap.
/// Segments adjacent along the curve (sharing an endpoint, including the
/// first-last wraparound) are skipped; any other contact counts.
fn polyline_self_intersects(vertices: &[[f64; 2]]) -> bool {
    let n = vertices.len() - 1; // closed: last vertex duplicates the first
    if n < 4 {
        return false;
    }
    let mut order: Vec<usize> = (0..n).collect();
    let min_x = |i: usize| vertices[i][0].min(vertices[i + 1][0]);
    let max_x = |i: usize| vertices[i][0].max(vertices[i + 1][0]);
    order.sort_by(|&a, &b| min_x(a).total_cmp(&min_x(b)));

    let mut active: Vec<usize> = Vec::new();
    for &i in &order {
        let xi = min_x(i);
        active.retain(|&j| max_x(j) >= xi);
        for &j in &active {
            let adjacent = i.abs_diff(j) == 1 || i.abs_diff(j) == n - 1;
            if adjacent {
                continue;
            }
            if segments_touch(
                vertices[i],
                vertices[i + 1],
                vertices[j],
                vertices[j + 1],
            ) {
                return true;
            }
        }
        active.push(i);
    }
    false
}

/// True when the closed segments [p1,p2] and [p3,p4] share any point.
fn segments_touch(p1: [f64; 2], p2: [f64; 2], p3: [f64; 2], p4: [f64; 2]) -> bool {
    let d1 = is_left(p3, p4, p1);
    let d2 = is_left(p3, p4, p2);
    let d3 = is_left(p1, p2, p3);
    let d4 = is_left(p1, p2, p4);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0))
        && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0))
    {
        return true;
    }
    (d1 == 0.0 && on_segment(p3, p4, p1))
        || (d2 == 0.0 && on_segment(p3, p4, p2))
        || (d3 == 0.0 && on_segment(p1, p2, p3))
        || (d4 == 0.0 && on_segment(p1, p2, p4))
}

fn on_segment(a: [f64; 2], b: [f64; 2], p: [f64; 2]) -> bool {
    p[0] >= a[0].min(b[0])
        && p[0] <= a[0].max(b[0])
        && p[1] >= a[1].min(b[1])
        && p[1] <= a[1].max(b[1])
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    pub fn circle(n: usize, r: f64) -> ClosedCurve {
        let pts: Vec<[f64; 2]> = (0..n)
            .map(|i| {
                let t = 2.0 * PI * i as f64 / n as f64;
                [r * t.cos(), r * t.sin()]
            })
            .collect();
        ClosedCurve::from_loop(pts).unwrap()
    }

    pub fn figure_eight(n: usize) -> ClosedCurve {
        let pts: Vec<[f64; 2]> = (0..n)
            .map(|i| {
                let t = 2.0 * PI * i as f64 / n as f64;
                [t.cos(), (2.0 * t).sin()]
            })
            .collect();
        ClosedCurve::from_loop(pts).unwrap()
    }

    #[test]
    fn construction_rules() {
        assert!(matches!(
            ClosedCurve::new(vec![[0.0, 0.0], [1.0, 0.0], [0.0, 0.0]]),
            Err(CurveError::TooFewVertices(_))
        ));
        assert!(matches!(
            ClosedCurve::new(vec![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0], [0.5, 0.5]]),
            Err(CurveError::NotClosed(_))
        ));
        let c = ClosedCurve::new(vec![
            [0.0, 0.0],
            [1.0, 0.0],
            [1.0, 1.0],
            [0.0, 1.0],
            [0.0, 1e-10],
        ])
        .unwrap();
        assert_eq!(c.vertices().first(), c.vertices().last());
        assert_eq!(c.orientation(), 1);
        assert!((c.signed_area() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn winding_examples() {
        let c = circle(512, 1.0);
        assert_eq!(c.winding_number([0.0, 0.0]).unwrap(), 1);
        assert_eq!(c.winding_number([5.0, 5.0]).unwrap(), 0);
        assert_eq!(c.reversed().winding_number([0.0, 0.0]).unwrap(), -1);
        assert!(matches!(
            c.winding_number([1.0, 0.0]),
            Err(CurveError::PointOnCurve)
        ));
    }

    #[test]
    fn figure_eight_lobes_wind_oppositely() {
        let c = figure_eight(2048);
        let right = c.winding_number([0.5, 0.3]).unwrap();
        let left = c.winding_number([-0.5, 0.3]).unwrap();
        assert_eq!(right.abs(), 1);
        assert_eq!(left, -right);
        // Brute-force oracle: recount crossings along a +x ray by hand.
        let brute = |pt: [f64; 2]| -> i32 {
            let mut wn = 0;
            for seg in c.vertices().windows(2) {
                let (a, b) = (seg[0], seg[1]);
                if (a[1] <= pt[1]) != (b[1] <= pt[1]) {
                    let x_int = a[0] + (pt[1] - a[1]) * (b[0] - a[0]) / (b[1] - a[1]);
                    if x_int > pt[0] {
                        wn += if b[1] > a[1] { 1 } else { -1 };
                    }
                }
            }
            wn
        };
        assert_eq!(brute([0.5, 0.3]), right);
        assert_eq!(brute([-0.5, 0.3]), left);
    }

    #[test]
    fn self_intersection_flags() {
        assert!(!circle(256, 1.0).is_self_intersecting());
        assert!(figure_eight(256).is_self_intersecting());
        // Figure eight sampled so the crossing point is hit exactly by two
        // vertices (t = pi/2 and 3pi/2 with n divisible by 4).
        assert!(figure_eight(64).is_self_intersecting());
    }

    #[test]
    fn orientation_and_reversal() {
        let c = circle(128, 2.0);
        assert_eq!(c.orientation(), 1);
        let r = c.reversed();
        assert_eq!(r.orientation(), -1);
        assert!((r.signed_area() + c.signed_area()).abs() < 1e-12);
        // Figure eight: balanced lobes give zero net area and orientation 0.
        let f = figure_eight(1024);
        assert_eq!(f.orientation(), 0);
    }
}
