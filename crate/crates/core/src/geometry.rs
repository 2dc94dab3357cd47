//! Ellipse parameterizations.
//!
//! Coordinates follow image convention: `x` is the column index, `y` the row
//! index, and pixel `(0, 0)` has its center at the origin. Angles are measured
//! from the +x axis towards +y, so with `y` pointing down the rotation appears
//! clockwise on screen. A rotation `theta` maps the ellipse's major axis onto
//! the direction `(cos theta, sin theta)`.

use std::f64::consts::{FRAC_PI_2, PI};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative axis difference below which an ellipse is treated as a circle.
pub const CIRCLE_TOLERANCE: f64 = 1e-9;

/// A geometric ellipse: center, semi-axes and rotation.
///
/// Always canonical: `w >= h > 0`, `theta` in `[-pi/2, pi/2]`, and
/// `theta == 0` for circles. Build one with [`EllipseParams::new`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EllipseParams {
    pub cx: f64,
    pub cy: f64,
    /// Semi-major axis in pixels.
    pub w: f64,
    /// Semi-minor axis in pixels.
    pub h: f64,
    /// Rotation of the major axis in radians.
    pub theta: f64,
}

impl EllipseParams {
    /// Canonicalizes raw `(cx, cy, r1, r2, angle)` values, where `r1` lies
    /// along `angle` and `r2` perpendicular to it.
    pub fn new(cx: f64, cy: f64, r1: f64, r2: f64, angle: f64) -> Result<Self> {
        canonicalize_ellipse(cx, cy, r1, r2, angle)
    }

    pub fn is_circle(&self) -> bool {
        (self.w - self.h).abs() <= CIRCLE_TOLERANCE * self.w
    }

    /// Point on the boundary at eccentric anomaly `t`.
    pub fn point_at(&self, t: f64) -> (f64, f64) {
        let (s, c) = self.theta.sin_cos();
        let (a, b) = (self.w * t.cos(), self.h * t.sin());
        (self.cx + a * c - b * s, self.cy + a * s + b * c)
    }

    /// `count` boundary points at evenly spaced eccentric anomalies.
    pub fn boundary_points(&self, count: usize) -> Vec<(f64, f64)> {
        (0..count)
            .map(|k| self.point_at(2.0 * PI * k as f64 / count as f64))
            .collect()
    }

    /// Coordinates of `(x, y)` in the ellipse's own frame (major axis first).
    pub fn to_local(&self, x: f64, y: f64) -> (f64, f64) {
        let (s, c) = self.theta.sin_cos();
        let (mx, my) = (x - self.cx, y - self.cy);
        (mx * c + my * s, my * c - mx * s)
    }

    /// `(px/w)^2 + (py/h)^2`: below 1 inside, 1 on the boundary, above 1 outside.
    pub fn normalized_radius_sq(&self, x: f64, y: f64) -> f64 {
        let (px, py) = self.to_local(x, y);
        (px / self.w).powi(2) + (py / self.h).powi(2)
    }

    /// Center-inclusion test used for rasterization.
    pub fn contains(&self, x: f64, y: f64) -> bool {
        self.normalized_radius_sq(x, y) < 1.0
    }

    /// Implicit conic `a x^2 + b xy + c y^2 + d x + e y + f = 0` of this ellipse.
    pub fn to_conic(&self) -> ConicCoefficients {
        let (s, c) = self.theta.sin_cos();
        let (iw, ih) = (1.0 / (self.w * self.w), 1.0 / (self.h * self.h));
        let a = c * c * iw + s * s * ih;
        let b = 2.0 * s * c * (iw - ih);
        let cc = s * s * iw + c * c * ih;
        let (x0, y0) = (self.cx, self.cy);
        let d = -2.0 * a * x0 - b * y0;
        let e = -b * x0 - 2.0 * cc * y0;
        let f = a * x0 * x0 + b * x0 * y0 + cc * y0 * y0 - 1.0;
        ConicCoefficients::gauge([a, b, cc, d, e, f])
    }
}

/// Reduces an angle into `[-pi/2, pi/2]` by adding multiples of `pi`.
pub fn reduce_angle(angle: f64) -> f64 {
    if (-FRAC_PI_2..=FRAC_PI_2).contains(&angle) {
        return angle;
    }
    let reduced = angle - PI * ((angle + FRAC_PI_2) / PI).floor();
    // floor() can land a hair outside the range through rounding.
    reduced.clamp(-FRAC_PI_2, FRAC_PI_2)
}

/// Puts raw ellipse parameters into canonical form.
///
/// The larger radius becomes `w`; if that means swapping, the angle turns by
/// `pi/2` so the same point set is described. Circles get `theta = 0`.
pub fn canonicalize_ellipse(cx: f64, cy: f64, r1: f64, r2: f64, angle: f64) -> Result<EllipseParams> {
    if !(cx.is_finite() && cy.is_finite() && r1.is_finite() && r2.is_finite() && angle.is_finite()) {
        return Err(Error::NonFiniteParameter);
    }
    if r1 <= 0.0 || r2 <= 0.0 {
        return Err(Error::NonPositiveAxis { r1, r2 });
    }
    let (w, h, angle) = if r2 > r1 {
        (r2, r1, angle + FRAC_PI_2)
    } else {
        (r1, r2, angle)
    };
    let mut params = EllipseParams {
        cx,
        cy,
        w,
        h,
        theta: reduce_angle(angle),
    };
    if params.is_circle() {
        params.theta = 0.0;
    }
    Ok(params)
}

/// Algebraic conic coefficients `[a, b, c, d, e, f]`.
///
/// Kept in a fixed gauge: unit Euclidean norm with `a > 0`. Construction
/// rejects anything that is not an ellipse (`b^2 - 4ac >= 0`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConicCoefficients([f64; 6]);

impl ConicCoefficients {
    pub fn new(coefficients: [f64; 6]) -> Result<Self> {
        if coefficients.iter().any(|c| !c.is_finite()) {
            return Err(Error::NonFiniteInput);
        }
        if coefficients.iter().all(|&c| c == 0.0) {
            return Err(Error::DegenerateInput("all conic coefficients are zero"));
        }
        let conic = Self::gauge(coefficients);
        let discriminant = conic.discriminant();
        if discriminant >= 0.0 {
            return Err(Error::NotAnEllipse { discriminant });
        }
        Ok(conic)
    }

    // Callers guarantee a nonzero, finite vector.
    pub(crate) fn gauge(mut v: [f64; 6]) -> Self {
        let norm = v.iter().map(|c| c * c).sum::<f64>().sqrt();
        let sign = if v[0] < 0.0 { -1.0 } else { 1.0 };
        for c in &mut v {
            *c *= sign / norm;
        }
        ConicCoefficients(v)
    }

    pub fn as_array(&self) -> [f64; 6] {
        self.0
    }

    /// `b^2 - 4ac`.
    pub fn discriminant(&self) -> f64 {
        let [a, b, c, ..] = self.0;
        b * b - 4.0 * a * c
    }

    /// Value of the conic polynomial at `(x, y)`.
    pub fn evaluate(&self, x: f64, y: f64) -> f64 {
        let [a, b, c, d, e, f] = self.0;
        a * x * x + b * x * y + c * y * y + d * x + e * y + f
    }
}

/// An ellipse annotation attached to one slice of a stack.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EllipseRecord {
    pub slice_index: usize,
    pub params: EllipseParams,
}

/// Sorts records by slice and rejects duplicate slice indices.
pub fn sort_records(records: &mut [EllipseRecord]) -> Result<()> {
    records.sort_by_key(|r| r.slice_index);
    if let Some(pair) = records.windows(2).find(|p| p[0].slice_index == p[1].slice_index) {
        return Err(Error::InvalidArgument(format!(
            "duplicate ellipse record for slice {}",
            pair[0].slice_index
        )));
    }
    Ok(())
}
