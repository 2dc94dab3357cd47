//! Boundary extraction and ellipse-specific direct least-squares fitting.
//!
//! The fit minimizes the algebraic distance `sum (x_i . a)^2` subject to
//! `4ac - b^2 = 1`, solved through the numerically stable block
//! decomposition: the 6x6 generalized eigenproblem is reduced to a 3x3
//! ordinary one on the quadratic coefficients, and the linear coefficients
//! follow by back-substitution.

use nalgebra::{Matrix3, Vector3};

use crate::error::{Error, Result};
use crate::geometry::{canonicalize_ellipse, ConicCoefficients, EllipseParams};
use crate::volume::MaskSlice;

/// Minimum number of points a conic fit accepts.
pub const MIN_FIT_POINTS: usize = 6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }
}

impl From<(f64, f64)> for Point {
    fn from((x, y): (f64, f64)) -> Self {
        Point { x, y }
    }
}

/// Ordered 2-D points in pixel coordinates.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PointSet(pub Vec<Point>);

impl PointSet {
    pub fn points(&self) -> &[Point] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl FromIterator<(f64, f64)> for PointSet {
    fn from_iter<I: IntoIterator<Item = (f64, f64)>>(iter: I) -> Self {
        PointSet(iter.into_iter().map(Point::from).collect())
    }
}

const NEIGHBORS_4: [(isize, isize); 4] = [(-1, 0), (1, 0), (0, -1), (0, 1)];

/// Centers of foreground pixels that touch background through a 4-neighbor.
///
/// Pixels on the image border see their out-of-image neighbors as
/// background. Points come out in (row, column) order.
pub fn extract_boundary(mask: &MaskSlice) -> Result<PointSet> {
    if mask.count() == 0 {
        return Err(Error::EmptyMask);
    }
    let mut points = Vec::new();
    for y in 0..mask.height() as isize {
        for x in 0..mask.width() as isize {
            if mask.is_set(x, y) && NEIGHBORS_4.iter().any(|(dx, dy)| !mask.is_set(x + dx, y + dy)) {
                points.push(Point::new(x as f64, y as f64));
            }
        }
    }
    Ok(PointSet(points))
}

/// Midpoints of every edge separating a foreground pixel from a background
/// 4-neighbor, i.e. the crack boundary of the foreground region.
///
/// Pixel-center boundaries sit on average 0.35–0.5 px inside the region they
/// outline, which shrinks fitted axes by several percent on small ellipses.
/// Edge midpoints straddle the rasterization threshold and carry no such
/// bias, so [`fit_ellipse`] fits these instead.
pub fn extract_edge_boundary(mask: &MaskSlice) -> Result<PointSet> {
    if mask.count() == 0 {
        return Err(Error::EmptyMask);
    }
    let mut points = Vec::new();
    for y in 0..mask.height() as isize {
        for x in 0..mask.width() as isize {
            if !mask.is_set(x, y) {
                continue;
            }
            for (dx, dy) in NEIGHBORS_4 {
                if !mask.is_set(x + dx, y + dy) {
                    points.push(Point::new(x as f64 + 0.5 * dx as f64, y as f64 + 0.5 * dy as f64));
                }
            }
        }
    }
    Ok(PointSet(points))
}

/// Number of 8-connected foreground components.
pub fn count_components(mask: &MaskSlice) -> usize {
    let (w, h) = (mask.width(), mask.height());
    let mut seen = vec![false; w * h];
    let mut stack = Vec::new();
    let mut components = 0;
    for start in 0..w * h {
        if seen[start] || mask.data()[start] == 0 {
            continue;
        }
        components += 1;
        seen[start] = true;
        stack.push(start);
        while let Some(i) = stack.pop() {
            let (x, y) = ((i % w) as isize, (i / w) as isize);
            for dy in -1..=1 {
                for dx in -1..=1 {
                    let (nx, ny) = (x + dx, y + dy);
                    if mask.is_set(nx, ny) {
                        let j = ny as usize * w + nx as usize;
                        if !seen[j] {
                            seen[j] = true;
                            stack.push(j);
                        }
                    }
                }
            }
        }
    }
    components
}

/// Fits an ellipse-specific conic to `points`.
///
/// Points are centered on their mean and scaled to unit RMS radius before
/// the scatter matrices are formed; the fitted conic is mapped back to the
/// original frame.
pub fn fit_conic(points: &[Point]) -> Result<ConicCoefficients> {
    let n = points.len();
    if n < MIN_FIT_POINTS {
        return Err(Error::DegenerateInput("fewer than 6 points"));
    }
    if points.iter().any(|p| !p.x.is_finite() || !p.y.is_finite()) {
        return Err(Error::NonFiniteInput);
    }
    let mx = points.iter().map(|p| p.x).sum::<f64>() / n as f64;
    let my = points.iter().map(|p| p.y).sum::<f64>() / n as f64;
    let spread = points
        .iter()
        .map(|p| (p.x - mx).powi(2) + (p.y - my).powi(2))
        .sum::<f64>()
        / n as f64;
    if spread == 0.0 {
        return Err(Error::DegenerateInput("all points coincide"));
    }
    let scale = spread.sqrt();

    let mut s1 = Matrix3::<f64>::zeros();
    let mut s2 = Matrix3::<f64>::zeros();
    let mut s3 = Matrix3::<f64>::zeros();
    for p in points {
        let (u, v) = ((p.x - mx) / scale, (p.y - my) / scale);
        let quad = Vector3::new(u * u, u * v, v * v);
        let lin = Vector3::new(u, v, 1.0);
        s1 += quad * quad.transpose();
        s2 += quad * lin.transpose();
        s3 += lin * lin.transpose();
    }

    // After centering, S3 is singular exactly when the points are collinear.
    let (suu, suv, svv) = (s3[(0, 0)], s3[(0, 1)], s3[(1, 1)]);
    if suu * svv - suv * suv <= 1e-12 * (suu + svv).powi(2) {
        return Err(Error::DegenerateInput("points are collinear"));
    }
    let s3_inv = s3
        .try_inverse()
        .ok_or(Error::DegenerateInput("singular linear scatter matrix"))?;
    let t = -s3_inv * s2.transpose();
    let reduced = s1 + s2 * t;
    // Premultiply by C1^-1 where C1 = [[0, 0, 2], [0, -1, 0], [2, 0, 0]].
    let m = Matrix3::from_rows(&[reduced.row(2) / 2.0, -reduced.row(1), reduced.row(0) / 2.0]);

    let a1 = ellipse_eigenvector(&m).ok_or(Error::NoEllipseSolution)?;
    let a2 = t * a1;
    let [a, b, c] = [a1[0], a1[1], a1[2]];
    let [d, e, f] = [a2[0], a2[1], a2[2]];

    // Undo the normalization u = (x - mx) / s, v = (y - my) / s; the whole
    // polynomial is multiplied by s^2.
    let (ds, es, fs) = (d * scale, e * scale, f * scale * scale);
    let coefficients = [
        a,
        b,
        c,
        -2.0 * a * mx - b * my + ds,
        -b * mx - 2.0 * c * my + es,
        a * mx * mx + b * mx * my + c * my * my - ds * mx - es * my + fs,
    ];
    ConicCoefficients::new(coefficients)
}

/// The real eigenvector of the reduced 3x3 system satisfying
/// `4 a c - b^2 > 0`; ties go to the largest constraint value.
fn ellipse_eigenvector(m: &Matrix3<f64>) -> Option<Vector3<f64>> {
    let magnitude = m.abs().max().max(f64::MIN_POSITIVE);
    m.complex_eigenvalues()
        .iter()
        .filter(|z| z.im.abs() <= 1e-9 * magnitude)
        .filter_map(|z| null_vector(&(m - Matrix3::identity() * z.re)))
        .map(|v| (4.0 * v[0] * v[2] - v[1] * v[1], v))
        .filter(|(constraint, _)| *constraint > 0.0)
        .max_by(|a, b| a.0.total_cmp(&b.0))
        .map(|(_, v)| v)
}

/// Unit vector spanning the (numerical) null space of a rank-2 matrix: the
/// largest cross product of two of its rows.
fn null_vector(a: &Matrix3<f64>) -> Option<Vector3<f64>> {
    let rows = [a.row(0).transpose(), a.row(1).transpose(), a.row(2).transpose()];
    let best = [(0, 1), (0, 2), (1, 2)]
        .iter()
        .map(|&(i, j)| rows[i].cross(&rows[j]))
        .max_by(|u, v| u.norm_squared().total_cmp(&v.norm_squared()))?;
    let norm = best.norm();
    (norm > 0.0 && norm.is_finite()).then(|| best / norm)
}

/// Center, semi-axes and rotation of an ellipse given in conic form.
pub fn conic_to_params(conic: &ConicCoefficients) -> Result<EllipseParams> {
    let [a, b, c, d, e, f] = conic.as_array();
    let det = 4.0 * a * c - b * b;
    if det <= 0.0 {
        return Err(Error::NotAnEllipse { discriminant: -det });
    }
    // Stationary point of the conic polynomial.
    let cx = (b * e - 2.0 * c * d) / det;
    let cy = (b * d - 2.0 * a * e) / det;
    let f_center = f + (d * cx + e * cy) / 2.0;

    let mean = (a + c) / 2.0;
    let radius = (((a - c) / 2.0).powi(2) + (b / 2.0).powi(2)).sqrt();
    let (lambda_small, lambda_large) = (mean - radius, mean + radius);
    if lambda_small <= 0.0 || -f_center <= 0.0 {
        return Err(Error::ImaginaryEllipse);
    }
    let w = (-f_center / lambda_small).sqrt();
    let h = (-f_center / lambda_large).sqrt();
    // Direction of the small-eigenvalue eigenvector, i.e. the major axis.
    let theta = 0.5 * (-b).atan2(c - a);
    canonicalize_ellipse(cx, cy, w, h, theta)
}

/// Boundary extraction, conic fit and parameter recovery in one step.
pub fn fit_ellipse(mask: &MaskSlice) -> Result<EllipseParams> {
    let boundary = extract_edge_boundary(mask)?;
    let components = count_components(mask);
    if components > 1 {
        log::warn!("mask has {components} disjoint regions; fitting their union");
    }
    let conic = fit_conic(boundary.points())?;
    conic_to_params(&conic)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::{FRAC_PI_2, PI};

    fn pts(v: &[(f64, f64)]) -> Vec<Point> {
        v.iter().copied().map(Point::from).collect()
    }

    #[test]
    fn isolated_pixel_is_its_own_boundary() {
        let mask = MaskSlice::from_fn(5, 5, |x, y| (x, y) == (2, 2));
        assert_eq!(extract_boundary(&mask).unwrap().0, pts(&[(2.0, 2.0)]));
    }

    #[test]
    fn full_mask_boundary_is_the_frame() {
        let mask = MaskSlice::from_fn(5, 5, |_, _| true);
        let b = extract_boundary(&mask).unwrap();
        assert_eq!(b.len(), 16);
        assert!(b
            .points()
            .iter()
            .all(|p| p.x == 0.0 || p.y == 0.0 || p.x == 4.0 || p.y == 4.0));
        // (row, column) order
        assert_eq!(b.points()[0], Point::new(0.0, 0.0));
        assert_eq!(b.points()[5], Point::new(0.0, 1.0));
    }

    #[test]
    fn empty_mask_errors() {
        assert!(matches!(
            extract_boundary(&MaskSlice::zeros(3, 3)),
            Err(Error::EmptyMask)
        ));
        assert!(matches!(fit_ellipse(&MaskSlice::zeros(3, 3)), Err(Error::EmptyMask)));
    }

    #[test]
    fn disk_boundary_hugs_the_circle() {
        let mask = MaskSlice::from_fn(64, 64, |x, y| {
            (x as f64 - 32.0).powi(2) + (y as f64 - 32.0).powi(2) < 400.0
        });
        let b = extract_boundary(&mask).unwrap();
        assert!(!b.is_empty());
        for p in b.points() {
            let r = ((p.x - 32.0).powi(2) + (p.y - 32.0).powi(2)).sqrt();
            assert!((r - 20.0).abs() <= 1.0, "r = {r}");
        }
    }

    #[test]
    fn edge_boundary_of_single_pixel() {
        let mask = MaskSlice::from_fn(3, 3, |x, y| (x, y) == (1, 1));
        let b = extract_edge_boundary(&mask).unwrap();
        assert_eq!(b.0, pts(&[(0.5, 1.0), (1.5, 1.0), (1.0, 0.5), (1.0, 1.5)]));
    }

    #[test]
    fn counts_components() {
        let mask = MaskSlice::from_fn(6, 6, |x, y| (x, y) == (0, 0) || (x, y) == (1, 1) || x == 4);
        assert_eq!(count_components(&mask), 2);
    }

    #[test]
    fn six_points_of_unit_circle() {
        let points: Vec<Point> = (0..6)
            .map(|k| {
                let t = 2.0 * PI * k as f64 / 6.0 + 0.3;
                Point::new(t.cos(), t.sin())
            })
            .collect();
        let conic = fit_conic(&points).unwrap().as_array();
        let expected = [1.0, 0.0, 1.0, 0.0, 0.0, -1.0].map(|v: f64| v / 3f64.sqrt());
        for (got, want) in conic.iter().zip(expected) {
            assert_abs_diff_eq!(*got, want, epsilon = 1e-12);
        }
    }

    #[test]
    fn recovers_parametric_ellipse() {
        let truth = EllipseParams::new(128.0, 120.0, 40.0, 25.0, 0.6).unwrap();
        let points: Vec<Point> = truth.boundary_points(128).into_iter().map(Point::from).collect();
        let fitted = conic_to_params(&fit_conic(&points).unwrap()).unwrap();
        assert_abs_diff_eq!(fitted.cx, 128.0, epsilon = 1e-6);
        assert_abs_diff_eq!(fitted.cy, 120.0, epsilon = 1e-6);
        assert_abs_diff_eq!(fitted.w, 40.0, epsilon = 1e-6);
        assert_abs_diff_eq!(fitted.h, 25.0, epsilon = 1e-6);
        assert_abs_diff_eq!(fitted.theta, 0.6, epsilon = 1e-6);
    }

    #[test]
    fn collinear_points_are_degenerate() {
        let points: Vec<Point> = (0..10).map(|i| Point::new(i as f64, 2.0 * i as f64)).collect();
        assert!(matches!(fit_conic(&points), Err(Error::DegenerateInput(_))));
    }

    #[test]
    fn unit_circle_conic_to_params() {
        let c = ConicCoefficients::new([1.0, 0.0, 1.0, 0.0, 0.0, -1.0]).unwrap();
        let p = conic_to_params(&c).unwrap();
        assert_abs_diff_eq!(p.cx, 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(p.cy, 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(p.w, 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(p.h, 1.0, epsilon = 1e-15);
        assert_eq!(p.theta, 0.0);
    }

    #[test]
    fn shifted_axis_aligned_ellipse() {
        // (x - 1)^2 + 4 (y - 2)^2 = 4: semi-axis 2 along x, 1 along y.
        let c = ConicCoefficients::new([1.0, 0.0, 4.0, -2.0, -16.0, 13.0]).unwrap();
        let p = conic_to_params(&c).unwrap();
        assert_abs_diff_eq!(p.cx, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(p.cy, 2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(p.w, 2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(p.h, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(p.theta, 0.0, epsilon = 1e-12);
        // Substitution oracle: parametric points of the recovered ellipse
        // satisfy the original polynomial.
        for (x, y) in p.boundary_points(16) {
            let value = (x - 1.0).powi(2) + 4.0 * (y - 2.0).powi(2) - 4.0;
            assert!(value.abs() < 1e-12, "{value}");
        }
    }

    #[test]
    fn major_axis_along_y_gives_quarter_turn() {
        // 4 (x - 1)^2 + (y - 2)^2 = 4
        let c = ConicCoefficients::new([4.0, 0.0, 1.0, -8.0, -4.0, 4.0]).unwrap();
        let p = conic_to_params(&c).unwrap();
        assert_abs_diff_eq!(p.w, 2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(p.theta.abs(), FRAC_PI_2, epsilon = 1e-12);
    }

    #[test]
    fn hyperbola_is_not_an_ellipse() {
        assert!(matches!(
            ConicCoefficients::new([1.0, 0.0, -1.0, 0.0, 0.0, -1.0]),
            Err(Error::NotAnEllipse { .. })
        ));
    }

    #[test]
    fn imaginary_ellipse_rejected() {
        let c = ConicCoefficients::new([1.0, 0.0, 1.0, 0.0, 0.0, 1.0]).unwrap();
        assert!(matches!(conic_to_params(&c), Err(Error::ImaginaryEllipse)));
    }

    #[test]
    fn single_pixel_mask_cannot_be_fitted() {
        let mask = MaskSlice::from_fn(5, 5, |x, y| (x, y) == (2, 2));
        assert!(matches!(
            fit_ellipse(&mask),
            Err(Error::DegenerateInput(_) | Error::NoEllipseSolution)
        ));
    }

    fn rasterize(p: &EllipseParams, n: usize) -> MaskSlice {
        MaskSlice::from_fn(n, n, |x, y| p.contains(x as f64, y as f64))
    }

    #[test]
    fn fits_rasterized_ellipse() {
        let truth = EllipseParams::new(128.0, 128.0, 40.0, 25.0, 0.0).unwrap();
        let fitted = fit_ellipse(&rasterize(&truth, 256)).unwrap();
        assert!((fitted.cx - 128.0).hypot(fitted.cy - 128.0) <= 0.5);
        assert!((fitted.w / 40.0 - 1.0).abs() <= 0.02);
        assert!((fitted.h / 25.0 - 1.0).abs() <= 0.02);
        assert!(fitted.theta.abs() <= 0.02);
    }

    #[test]
    fn fits_rasterized_circle() {
        let truth = EllipseParams::new(100.3, 140.7, 30.0, 30.0, 0.0).unwrap();
        let fitted = fit_ellipse(&rasterize(&truth, 256)).unwrap();
        assert!((fitted.w / 30.0 - 1.0).abs() <= 0.02);
        assert!((fitted.h / 30.0 - 1.0).abs() <= 0.02);
        // A rasterized circle fits as a very slightly eccentric ellipse; the
        // angle is then arbitrary. Only an exact circle pins theta to 0.
        assert!(fitted.w / fitted.h < 1.01);
    }

    #[test]
    fn symmetric_rasterized_circle_has_zero_angle() {
        let truth = EllipseParams::new(128.0, 128.0, 30.0, 30.0, 0.0).unwrap();
        let fitted = fit_ellipse(&rasterize(&truth, 256)).unwrap();
        assert!((fitted.w / 30.0 - 1.0).abs() <= 0.02);
        assert!((fitted.h / 30.0 - 1.0).abs() <= 0.02);
        assert_eq!(fitted.theta, 0.0);
    }
}
