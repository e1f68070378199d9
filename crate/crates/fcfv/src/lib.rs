//! Face-centred finite volume solvers with a per-cell linear reconstruction.
//!
//! The crate discretises Poisson and Stokes problems on general 2D/3D
//! meshes of triangles, quadrilaterals, tetrahedra, hexahedra, prisms, and
//! pyramids, including hybrid mixtures.  Unknowns live on faces; per-cell
//! linear solution coefficients, a cheap local error indicator, and
//! triangle-mesh adaptation are built on top.  The `verify` module carries
//! manufactured solutions and the convergence, robustness, and timing
//! studies; `run` exposes the same functionality as CLI commands.

pub mod adapt;
pub mod basis;
pub mod config;
pub mod error;
pub mod geom;
pub mod io;
pub mod linsys;
pub mod mesh;
pub mod poisson;
pub mod quadrature;
pub mod run;
pub mod stokes;
pub mod verify;

pub use error::{Error, Result};

/// Shared-ownership scalar field of position.
pub type ScalarField = std::sync::Arc<dyn Fn(geom::Point) -> f64 + Send + Sync>;
/// Shared-ownership vector field of position; 2D fields keep the third
/// component zero.
pub type VectorField = std::sync::Arc<dyn Fn(geom::Point) -> [f64; 3] + Send + Sync>;

/// Wraps a plain function or closure as a [`ScalarField`].
pub fn scalar_field(f: impl Fn(geom::Point) -> f64 + Send + Sync + 'static) -> ScalarField {
    std::sync::Arc::new(f)
}

/// Wraps a plain function or closure as a [`VectorField`].
pub fn vector_field(f: impl Fn(geom::Point) -> [f64; 3] + Send + Sync + 'static) -> VectorField {
    std::sync::Arc::new(f)
}
