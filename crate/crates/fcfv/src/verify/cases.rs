//! Manufactured solutions driving the verification harness.
//!
//! Each case packages the exact fields plus the induced source and
//! boundary data.  Neumann data always lives on the coordinate plane
//! x_axis = 0, whose outward normal is -e_axis, so the Poisson datum is
//! t = -grad u . e_axis and the Stokes datum is the pseudo-traction
//! t = nu (n . grad) u - p n evaluated with that normal.

use std::sync::Arc;

use crate::geom::Point;
use crate::mesh::BoundaryRule;
use crate::poisson::PoissonProblem;
use crate::stokes::StokesProblem;
use crate::{scalar_field, vector_field, ScalarField, VectorField};

/// Full gradient as a matrix: out[k][l] = d_k u_l.
pub type TensorField = Arc<dyn Fn(Point) -> [[f64; 3]; 3] + Send + Sync>;

pub fn tensor_field(
    f: impl Fn(Point) -> [[f64; 3]; 3] + Send + Sync + 'static,
) -> TensorField {
    Arc::new(f)
}

#[derive(Clone)]
pub struct PoissonCase {
    pub name: &'static str,
    pub nsd: usize,
    pub exact: ScalarField,
    pub gradient: VectorField,
    /// Source s = -lap u.
    pub source: ScalarField,
    /// Coordinate plane x_axis = 0 carrying Neumann data, if any.
    pub neumann_axis: Option<usize>,
}

impl PoissonCase {
    pub fn boundary_rule(&self) -> BoundaryRule {
        match self.neumann_axis {
            Some(axis) => BoundaryRule::NeumannOnPlane { axis, value: 0.0 },
            None => BoundaryRule::AllDirichlet,
        }
    }

    pub fn problem(&self, tau: f64, source_degree: usize) -> PoissonProblem {
        let gradient = self.gradient.clone();
        let axis = self.neumann_axis.unwrap_or(0);
        PoissonProblem {
            source: self.source.clone(),
            dirichlet: self.exact.clone(),
            neumann: scalar_field(move |x| -gradient(x)[axis]),
            tau,
            source_degree,
        }
    }

    /// Exact flux q = -grad u.
    pub fn flux(&self) -> VectorField {
        let gradient = self.gradient.clone();
        vector_field(move |x| {
            let g = gradient(x);
            [-g[0], -g[1], -g[2]]
        })
    }
}

/// Oscillatory exponential on the unit square, Neumann on x2 = 0.
pub fn poisson_smooth_2d() -> PoissonCase {
    let k1 = [5.1, -6.2, 0.0];
    let k2 = [4.3, 3.4, 0.0];
    build_exp_case("poisson-smooth-2d", 2, 0.1, 0.3, k1, k2, Some(1))
}

/// Oscillatory exponential on the unit cube, Neumann on x3 = 0.
pub fn poisson_smooth_3d() -> PoissonCase {
    let k1 = [5.1, -6.2, 1.8];
    let k2 = [4.3, 3.4, 1.7];
    build_exp_case("poisson-smooth-3d", 3, 0.1, 0.3, k1, k2, Some(2))
}

fn build_exp_case(
    name: &'static str,
    nsd: usize,
    alpha: f64,
    beta: f64,
    k1: Point,
    k2: Point,
    neumann_axis: Option<usize>,
) -> PoissonCase {
    let g = move |x: Point| {
        let t1 = k1[0] * x[0] + k1[1] * x[1] + k1[2] * x[2];
        let t2 = k2[0] * x[0] + k2[1] * x[1] + k2[2] * x[2];
        (t1, t2)
    };
    let exact = scalar_field(move |x| {
        let (t1, t2) = g(x);
        (alpha * t1.sin() + beta * t2.cos()).exp()
    });
    let grad_g = move |x: Point| -> Point {
        let (t1, t2) = g(x);
        let c1 = alpha * t1.cos();
        let s2 = beta * t2.sin();
        [
            c1 * k1[0] - s2 * k2[0],
            c1 * k1[1] - s2 * k2[1],
            c1 * k1[2] - s2 * k2[2],
        ]
    };
    let exact_for_grad = exact.clone();
    let gradient = vector_field(move |x| {
        let u = exact_for_grad(x);
        let dg = grad_g(x);
        [u * dg[0], u * dg[1], u * dg[2]]
    });
    let exact_for_src = exact.clone();
    let nk1 = k1[0] * k1[0] + k1[1] * k1[1] + k1[2] * k1[2];
    let nk2 = k2[0] * k2[0] + k2[1] * k2[1] + k2[2] * k2[2];
    let source = scalar_field(move |x| {
        let (t1, t2) = g(x);
        let u = exact_for_src(x);
        let dg = grad_g(x);
        let lap_g = -alpha * t1.sin() * nk1 - beta * t2.cos() * nk2;
        let grad_sq = dg[0] * dg[0] + dg[1] * dg[1] + dg[2] * dg[2];
        -(u * (grad_sq + lap_g))
    });
    PoissonCase {
        name,
        nsd,
        exact,
        gradient,
        source,
        neumann_axis,
    }
}

/// Sharp Gaussian bump at (0.7, 0.7) on the unit square, all-Dirichlet;
/// drives the adaptive study.
pub fn poisson_gaussian_bump() -> PoissonCase {
    const A: f64 = 100.0;
    const C: [f64; 2] = [0.7, 0.7];
    let r2 = |x: Point| (x[0] - C[0]).powi(2) + (x[1] - C[1]).powi(2);
    let exact = scalar_field(move |x| 1.0 + (-A * r2(x)).exp());
    let gradient = vector_field(move |x| {
        let e = (-A * r2(x)).exp();
        [
            -2.0 * A * (x[0] - C[0]) * e,
            -2.0 * A * (x[1] - C[1]) * e,
            0.0,
        ]
    });
    let source = scalar_field(move |x| {
        let r2 = r2(x);
        let e = (-A * r2).exp();
        // -lap u = e^(-a r^2) (4a - 4 a^2 r^2).
        e * (4.0 * A - 4.0 * A * A * r2)
    });
    PoissonCase {
        name: "poisson-gaussian-bump",
        nsd: 2,
        exact,
        gradient,
        source,
        neumann_axis: None,
    }
}

#[derive(Clone)]
pub struct StokesCase {
    pub name: &'static str,
    pub nsd: usize,
    pub velocity: VectorField,
    /// gradient[k][l] = d_k u_l.
    pub gradient: TensorField,
    pub pressure: ScalarField,
    /// Body force s = -nu lap u + grad p.
    pub source: VectorField,
    pub viscosity: f64,
    pub neumann_axis: Option<usize>,
}

impl StokesCase {
    pub fn boundary_rule(&self) -> BoundaryRule {
        match self.neumann_axis {
            Some(axis) => BoundaryRule::NeumannOnPlane { axis, value: 0.0 },
            None => BoundaryRule::AllDirichlet,
        }
    }

    pub fn problem(&self, tau: f64, source_degree: usize) -> StokesProblem {
        let gradient = self.gradient.clone();
        let pressure = self.pressure.clone();
        let nu = self.viscosity;
        let axis = self.neumann_axis.unwrap_or(0);
        StokesProblem {
            source: self.source.clone(),
            dirichlet: self.velocity.clone(),
            neumann: vector_field(move |x| {
                // n = -e_axis: t_l = -nu d_axis u_l + p delta(l, axis).
                let g = gradient(x);
                let p = pressure(x);
                let mut t = [0.0; 3];
                for (l, tl) in t.iter_mut().enumerate() {
                    *tl = -nu * g[axis][l];
                }
                t[axis] += p;
                t
            }),
            viscosity: nu,
            tau,
            source_degree,
        }
    }

    /// Exact scaled gradient L = -sqrt(nu) grad u.
    pub fn scaled_gradient(&self) -> TensorField {
        let gradient = self.gradient.clone();
        let scale = -self.viscosity.sqrt();
        tensor_field(move |x| {
            let mut g = gradient(x);
            for row in g.iter_mut() {
                for v in row.iter_mut() {
                    *v *= scale;
                }
            }
            g
        })
    }
}

/// Polynomial vortex on the unit square with linear-in-x pressure,
/// Neumann on x2 = 0.
pub fn stokes_vortex_2d() -> StokesCase {
    let g = |x: f64| x * x * (1.0 - x) * (1.0 - x);
    let dg = |x: f64| 2.0 * x * (1.0 - x) * (1.0 - 2.0 * x);
    let d2g = |x: f64| 2.0 * (6.0 * x * x - 6.0 * x + 1.0);
    let d3g = |x: f64| 24.0 * x - 12.0;
    let velocity = vector_field(move |x| [g(x[0]) * dg(x[1]), -dg(x[0]) * g(x[1]), 0.0]);
    let gradient = tensor_field(move |x| {
        let mut out = [[0.0; 3]; 3];
        out[0][0] = dg(x[0]) * dg(x[1]);
        out[1][0] = g(x[0]) * d2g(x[1]);
        out[0][1] = -d2g(x[0]) * g(x[1]);
        out[1][1] = -dg(x[0]) * dg(x[1]);
        out
    });
    let pressure = scalar_field(|x| x[0] * (1.0 - x[0]));
    let source = vector_field(move |x| {
        let lap_u1 = d2g(x[0]) * dg(x[1]) + g(x[0]) * d3g(x[1]);
        let lap_u2 = -(d3g(x[0]) * g(x[1]) + dg(x[0]) * d2g(x[1]));
        // s = -nu lap u + grad p with nu = 1, grad p = (1 - 2 x1, 0).
        [-lap_u1 + 1.0 - 2.0 * x[0], -lap_u2, 0.0]
    });
    StokesCase {
        name: "stokes-vortex-2d",
        nsd: 2,
        velocity,
        gradient,
        pressure,
        source,
        viscosity: 1.0,
        neumann_axis: Some(1),
    }
}

/// Trigonometric divergence-free field on the unit cube with quadratic
/// pressure, Neumann on x3 = 0.
pub fn stokes_trig_3d() -> StokesCase {
    let velocity = vector_field(|x| {
        let s1 = (x[0] - 0.5).sin();
        let c1 = (x[0] - 0.5).cos();
        let s3 = (x[2] - 0.5).sin();
        let c3 = (x[2] - 0.5).cos();
        [
            0.5 + (x[2] - x[1]) * s1,
            1.0 - x[1] * (x[2] - 0.5 * x[1]) * c1 - x[1] * (x[0] - 0.5 * x[1]) * c3,
            0.5 + (x[0] - x[1]) * s3,
        ]
    });
    let gradient = tensor_field(|x| {
        let s1 = (x[0] - 0.5).sin();
        let c1 = (x[0] - 0.5).cos();
        let s3 = (x[2] - 0.5).sin();
        let c3 = (x[2] - 0.5).cos();
        let a = x[1] * (x[2] - 0.5 * x[1]);
        let b = x[1] * (x[0] - 0.5 * x[1]);
        let mut out = [[0.0; 3]; 3];
        out[0][0] = (x[2] - x[1]) * c1;
        out[1][0] = -s1;
        out[2][0] = s1;
        out[0][1] = a * s1 - x[1] * c3;
        out[1][1] = -(x[2] - x[1]) * c1 - (x[0] - x[1]) * c3;
        out[2][1] = -x[1] * c1 + b * s3;
        out[0][2] = s3;
        out[1][2] = -s3;
        out[2][2] = (x[0] - x[1]) * c3;
        out
    });
    let pressure =
        scalar_field(|x| (0..3).map(|k| x[k] * (1.0 - x[k])).sum::<f64>());
    let source = vector_field(|x| {
        let s1 = (x[0] - 0.5).sin();
        let c1 = (x[0] - 0.5).cos();
        let s3 = (x[2] - 0.5).sin();
        let c3 = (x[2] - 0.5).cos();
        let a = x[1] * (x[2] - 0.5 * x[1]);
        let b = x[1] * (x[0] - 0.5 * x[1]);
        let lap = [
            -(x[2] - x[1]) * s1,
            a * c1 + b * c3 + c1 + c3,
            -(x[0] - x[1]) * s3,
        ];
        let grad_p = [1.0 - 2.0 * x[0], 1.0 - 2.0 * x[1], 1.0 - 2.0 * x[2]];
        [
            -lap[0] + grad_p[0],
            -lap[1] + grad_p[1],
            -lap[2] + grad_p[2],
        ]
    });
    StokesCase {
        name: "stokes-trig-3d",
        nsd: 3,
        velocity,
        gradient,
        pressure,
        source,
        viscosity: 1.0,
        neumann_axis: Some(2),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const FD_H: f64 = 1e-5;
    const FD_TOL: f64 = 5e-7;

    fn sample_points(nsd: usize) -> Vec<Point> {
        let vals = [0.13, 0.37, 0.52, 0.78, 0.91];
        let mut out = Vec::new();
        for (i, &a) in vals.iter().enumerate() {
            let b = vals[(i + 2) % vals.len()];
            let c = vals[(i + 3) % vals.len()];
            out.push(if nsd == 2 { [a, b, 0.0] } else { [a, b, c] });
        }
        out
    }

    fn fd_gradient(f: &dyn Fn(Point) -> f64, x: Point, nsd: usize) -> Point {
        let mut g = [0.0; 3];
        for k in 0..nsd {
            let mut xp = x;
            let mut xm = x;
            xp[k] += FD_H;
            xm[k] -= FD_H;
            g[k] = (f(xp) - f(xm)) / (2.0 * FD_H);
        }
        g
    }

    fn fd_laplacian(f: &dyn Fn(Point) -> f64, x: Point, nsd: usize) -> f64 {
        let mut lap = 0.0;
        let f0 = f(x);
        for k in 0..nsd {
            let mut xp = x;
            let mut xm = x;
            xp[k] += FD_H;
            xm[k] -= FD_H;
            lap += (f(xp) - 2.0 * f0 + f(xm)) / (FD_H * FD_H);
        }
        lap
    }

    fn check_poisson(case: &PoissonCase) {
        for x in sample_points(case.nsd) {
            let exact = case.exact.clone();
            let g_fd = fd_gradient(&|y| exact(y), x, case.nsd);
            let g = (case.gradient)(x);
            for k in 0..case.nsd {
                assert!(
                    (g[k] - g_fd[k]).abs() < FD_TOL * (1.0 + g[k].abs()),
                    "{}: gradient[{k}] at {x:?}: {} vs fd {}",
                    case.name,
                    g[k],
                    g_fd[k]
                );
            }
            let lap_fd = fd_laplacian(&|y| exact(y), x, case.nsd);
            let s = (case.source)(x);
            assert!(
                (s + lap_fd).abs() < 1e-4 * (1.0 + s.abs()),
                "{}: source at {x:?}: {} vs fd {}",
                case.name,
                s,
                -lap_fd
            );
        }
    }

    fn check_stokes(case: &StokesCase) {
        for x in sample_points(case.nsd) {
            let g = (case.gradient)(x);
            let mut div = 0.0;
            let mut lap = [0.0; 3];
            for l in 0..case.nsd {
                let velocity = case.velocity.clone();
                let ul = move |y: Point| velocity(y)[l];
                let g_fd = fd_gradient(&ul, x, case.nsd);
                for k in 0..case.nsd {
                    assert!(
                        (g[k][l] - g_fd[k]).abs() < FD_TOL * (1.0 + g[k][l].abs()),
                        "{}: gradient[{k}][{l}] at {x:?}: {} vs fd {}",
                        case.name,
                        g[k][l],
                        g_fd[k]
                    );
                }
                lap[l] = fd_laplacian(&ul, x, case.nsd);
                div += g[l][l];
            }
            assert!(div.abs() < 1e-12, "{}: div u = {div} at {x:?}", case.name);
            let pressure = case.pressure.clone();
            let grad_p = fd_gradient(&|y| pressure(y), x, case.nsd);
            let s = (case.source)(x);
            for l in 0..case.nsd {
                let want = -case.viscosity * lap[l] + grad_p[l];
                assert!(
                    (s[l] - want).abs() < 1e-4 * (1.0 + s[l].abs()),
                    "{}: source[{l}] at {x:?}: {} vs fd {}",
                    case.name,
                    s[l],
                    want
                );
            }
        }
    }

    #[test]
    fn poisson_cases_are_self_consistent() {
        check_poisson(&poisson_smooth_2d());
        check_poisson(&poisson_smooth_3d());
        check_poisson(&poisson_gaussian_bump());
    }

    #[test]
    fn stokes_cases_are_self_consistent() {
        check_stokes(&stokes_vortex_2d());
        check_stokes(&stokes_trig_3d());
    }

    #[test]
    fn stokes_neumann_datum_matches_its_definition() {
        let case = stokes_vortex_2d();
        let problem = case.problem(10.0, 2);
        // On x2 = 0: h'(0) = 0, h''(0) = 2, so (n . grad) u = (-2 g, 0)
        // and t = (-2 g(x1), p).
        let x = [0.3, 0.0, 0.0];
        let t = (problem.neumann)(x);
        let g = 0.3f64 * 0.3 * 0.7 * 0.7;
        assert!((t[0] + 2.0 * g).abs() < 1e-14);
        assert!((t[1] - 0.3 * 0.7).abs() < 1e-14);
    }
}
