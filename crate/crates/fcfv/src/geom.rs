//! Plain 3-vector arithmetic on `[f64; 3]`.
//!
//! Points are always stored with three components; 2D meshes keep the third
//! component exactly zero so every downstream routine can be written once.

pub type Point = [f64; 3];

#[inline]
pub fn add(a: Point, b: Point) -> Point {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}

#[inline]
pub fn sub(a: Point, b: Point) -> Point {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

#[inline]
pub fn scale(a: Point, s: f64) -> Point {
    [a[0] * s, a[1] * s, a[2] * s]
}

#[inline]
pub fn axpy(y: Point, alpha: f64, x: Point) -> Point {
    [y[0] + alpha * x[0], y[1] + alpha * x[1], y[2] + alpha * x[2]]
}

#[inline]
pub fn dot(a: Point, b: Point) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

#[inline]
pub fn cross(a: Point, b: Point) -> Point {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

#[inline]
pub fn norm(a: Point) -> f64 {
    dot(a, a).sqrt()
}

#[inline]
pub fn dist(a: Point, b: Point) -> f64 {
    norm(sub(a, b))
}

/// Unit vector along `a`; returns `None` for vectors shorter than `tol`.
#[inline]
pub fn normalize(a: Point, tol: f64) -> Option<Point> {
    let n = norm(a);
    if n <= tol {
        None
    } else {
        Some(scale(a, 1.0 / n))
    }
}

/// Arithmetic mean of a point set.
pub fn mean(pts: &[Point]) -> Point {
    let mut m = [0.0; 3];
    for p in pts {
        m = add(m, *p);
    }
    scale(m, 1.0 / pts.len() as f64)
}
