//! Parametric bacterial swimmer surface.
//!
//! The body is an elliptic tube around a helical centreline.  The
//! centreline is arc-length parametrised; its Frenet-style frame (N, B) is
//! twisted by an angle gamma*F1(lambda) and the tube radii taper by a
//! smoothed-step profile F0 and the end-closure factor
//! (1 - (lambda/L)^8)^(1/8), which brings both radii to exactly zero at the
//! tips.

use crate::geom::{self, Point};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SwimmerParams {
    /// Flagella pitch angle applied through the twist profile.
    pub gamma: f64,
    /// Half-length L of the body; lambda ranges over [-L, L].
    pub half_length: f64,
    pub a_b: f64,
    pub c1: f64,
    pub c2: f64,
    /// Vertical advance rate of the helix; the helix radius follows as
    /// sqrt(1 - alpha^2)/kappa so the centreline is arc-length.
    pub alpha: f64,
    pub kappa: f64,
    pub lambda0: f64,
    pub lambda1: f64,
    pub sigma: f64,
}

impl Default for SwimmerParams {
    fn default() -> Self {
        let l = 1.0;
        SwimmerParams {
            gamma: 0.0,
            half_length: l,
            a_b: l / 27.0,
            c1: 1.75,
            c2: 2.75,
            alpha: 0.7,
            kappa: 4.0 * std::f64::consts::PI / l,
            lambda0: (1.0 - 9.0 / 54.2) * l,
            lambda1: (1.0 - 11.0 / 54.2) * l,
            sigma: 0.02 * l,
        }
    }
}

impl SwimmerParams {
    pub fn with_gamma(gamma: f64) -> Self {
        SwimmerParams {
            gamma,
            ..Default::default()
        }
    }

    fn beta(&self) -> f64 {
        (1.0 - self.alpha * self.alpha).sqrt() / self.kappa
    }

    /// Smoothed step 0.5*(1 - erf((lambda - centre)/(sqrt(2) sigma))).
    fn step(&self, lambda: f64, centre: f64) -> f64 {
        0.5 * (1.0 - libm::erf((lambda - centre) / (std::f64::consts::SQRT_2 * self.sigma)))
    }

    pub fn centreline(&self, lambda: f64) -> Point {
        let b = self.beta();
        [
            b * (self.kappa * lambda).cos(),
            b * (self.kappa * lambda).sin(),
            self.alpha * lambda,
        ]
    }

    /// Unit tangent, normal, and binormal of the centreline.
    pub fn frame(&self, lambda: f64) -> (Point, Point, Point) {
        let b = self.beta();
        let (s, c) = (self.kappa * lambda).sin_cos();
        let t = [-b * self.kappa * s, b * self.kappa * c, self.alpha];
        let n = [-c, -s, 0.0];
        let bi = geom::cross(t, n);
        (t, n, bi)
    }

    /// Tube radii (r_n, r_b) at lambda; both vanish at the tips.
    pub fn radii(&self, lambda: f64) -> (f64, f64) {
        let l = self.half_length;
        let closure = (1.0 - (lambda / l).powi(8)).max(0.0).powf(0.125);
        let r_b = self.a_b * (self.c1 + self.c2 * self.step(lambda, self.lambda0)) * closure;
        (0.25 * r_b, r_b)
    }

    /// Point on the swimmer surface at (lambda, theta).
    pub fn surface_point(&self, lambda: f64, theta: f64) -> Point {
        let (_, n, b) = self.frame(lambda);
        let twist = self.gamma * self.step(lambda, self.lambda1);
        let (ts, tc) = twist.sin_cos();
        let n1 = geom::axpy(geom::scale(n, tc), ts, b);
        let n2 = geom::axpy(geom::scale(b, tc), -ts, n);
        let (r_n, r_b) = self.radii(lambda);
        let c = self.centreline(lambda);
        geom::axpy(geom::axpy(c, r_n * theta.sin(), n1), r_b * theta.cos(), n2)
    }
}

/// Surface sampled on an (n_lambda+1) x n_theta grid, closed in theta and
/// collapsed to a single point at each tip: quads in the interior, triangle
/// fans at the two ends.
pub struct SwimmerSurface {
    pub points: Vec<Point>,
    pub quads: Vec<[usize; 4]>,
    pub tris: Vec<[usize; 3]>,
}

pub fn surface_grid(params: &SwimmerParams, n_lambda: usize, n_theta: usize) -> SwimmerSurface {
    assert!(n_lambda >= 2 && n_theta >= 3);
    let l = params.half_length;
    let lambda_at = |i: usize| -l + 2.0 * l * i as f64 / n_lambda as f64;
    let mut points = Vec::new();
    // Interior rings exclude the tips, where the section degenerates.
    for i in 1..n_lambda {
        let lambda = lambda_at(i);
        for j in 0..n_theta {
            let theta = 2.0 * std::f64::consts::PI * j as f64 / n_theta as f64;
            points.push(params.surface_point(lambda, theta));
        }
    }
    let tail = points.len();
    points.push(params.centreline(-l));
    let head = points.len();
    points.push(params.centreline(l));

    let ring = |i: usize, j: usize| (i - 1) * n_theta + (j % n_theta);
    let mut quads = Vec::new();
    for i in 1..n_lambda - 1 {
        for j in 0..n_theta {
            quads.push([ring(i, j), ring(i + 1, j), ring(i + 1, j + 1), ring(i, j + 1)]);
        }
    }
    let mut tris = Vec::new();
    for j in 0..n_theta {
        tris.push([tail, ring(1, j), ring(1, j + 1)]);
        tris.push([head, ring(n_lambda - 1, j + 1), ring(n_lambda - 1, j)]);
    }
    SwimmerSurface {
        points,
        quads,
        tris,
    }
}
