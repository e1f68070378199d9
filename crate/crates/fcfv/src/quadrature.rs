//! Quadrature on cells and faces via sub-simplex decomposition.
//!
//! Every supported cell is tiled exactly by triangles (2D) or tetrahedra
//! (3D); the splits below are exact for planar-faced cells, which the mesh
//! layer guarantees.  Rules are picked by requested polynomial degree:
//! triangles carry degree-2 (3 point) and degree-4 (6 point) rules,
//! tetrahedra degree-2 (4 point) and degree-5 (14 point) rules.  Weights of
//! a returned rule sum to the cell measure.

use crate::geom::{cross, norm, sub, Point};
use crate::mesh::CellType;

/// Physical-space quadrature rule; weights sum to the domain measure.
#[derive(Debug, Clone)]
pub struct QuadRule {
    pub pts: Vec<Point>,
    pub wts: Vec<f64>,
}

impl QuadRule {
    pub fn integrate(&self, mut f: impl FnMut(Point) -> f64) -> f64 {
        self.pts
            .iter()
            .zip(&self.wts)
            .map(|(p, w)| w * f(*p))
            .sum()
    }
}

/// Vertex index tuples tiling each cell type with simplices.
pub fn sub_simplices(ct: CellType) -> &'static [&'static [usize]] {
    match ct {
        CellType::Tri => &[&[0, 1, 2]],
        CellType::Qua => &[&[0, 1, 2], &[0, 2, 3]],
        CellType::Tet => &[&[0, 1, 2, 3]],
        CellType::Hex => &[
            &[0, 1, 2, 6],
            &[0, 2, 3, 6],
            &[0, 3, 7, 6],
            &[0, 7, 4, 6],
            &[0, 4, 5, 6],
            &[0, 5, 1, 6],
        ],
        CellType::Pri => &[&[0, 1, 2, 3], &[1, 2, 3, 4], &[2, 3, 4, 5]],
        CellType::Pyr => &[&[0, 1, 2, 4], &[0, 2, 3, 4]],
    }
}

/// Triangulation of a polygonal face given its vertex count (3 or 4).
pub fn face_sub_triangles(n_verts: usize) -> &'static [[usize; 3]] {
    match n_verts {
        3 => &[[0, 1, 2]],
        4 => &[[0, 1, 2], [0, 2, 3]],
        _ => panic!("faces must have 3 or 4 vertices, got {n_verts}"),
    }
}

/// Signed simplex measure: triangle area in the z = 0 plane for nsd = 2,
/// tetrahedron volume for nsd = 3.  Positive for correctly oriented cells.
pub fn signed_simplex_measure(nsd: usize, pts: &[Point]) -> f64 {
    match nsd {
        2 => {
            let c = cross(sub(pts[1], pts[0]), sub(pts[2], pts[0]));
            0.5 * c[2]
        }
        3 => {
            let a = sub(pts[1], pts[0]);
            let b = sub(pts[2], pts[0]);
            let c = sub(pts[3], pts[0]);
            crate::geom::dot(a, cross(b, c)) / 6.0
        }
        _ => panic!("nsd must be 2 or 3"),
    }
}

/// Unsigned area of a triangle embedded in 3D.
pub fn triangle_area3(p0: Point, p1: Point, p2: Point) -> f64 {
    0.5 * norm(cross(sub(p1, p0), sub(p2, p0)))
}

/// Barycentric rule on a reference simplex; weights sum to one.
struct BaryRule {
    pts: &'static [&'static [f64]],
    wts: &'static [f64],
}

const TRI_DEG2: BaryRule = BaryRule {
    pts: &[&[0.5, 0.5, 0.0], &[0.0, 0.5, 0.5], &[0.5, 0.0, 0.5]],
    wts: &[
        0.333_333_333_333_333_33,
        0.333_333_333_333_333_33,
        0.333_333_333_333_333_33,
    ],
};

// Dunavant degree-4 rule, two symmetric orbits of three points.
const TRI_A1: f64 = 0.445_948_490_915_965;
const TRI_B1: f64 = 1.0 - 2.0 * TRI_A1;
const TRI_W1: f64 = 0.223_381_589_678_011;
const TRI_A2: f64 = 0.091_576_213_509_771;
const TRI_B2: f64 = 1.0 - 2.0 * TRI_A2;
const TRI_W2: f64 = 0.109_951_743_655_322;

const TRI_DEG4: BaryRule = BaryRule {
    pts: &[
        &[TRI_B1, TRI_A1, TRI_A1],
        &[TRI_A1, TRI_B1, TRI_A1],
        &[TRI_A1, TRI_A1, TRI_B1],
        &[TRI_B2, TRI_A2, TRI_A2],
        &[TRI_A2, TRI_B2, TRI_A2],
        &[TRI_A2, TRI_A2, TRI_B2],
    ],
    wts: &[TRI_W1, TRI_W1, TRI_W1, TRI_W2, TRI_W2, TRI_W2],
};

// Degree-2 tetrahedron rule at the four interior symmetry points.
const TET_A: f64 = 0.585_410_196_624_968_5;
const TET_B: f64 = 0.138_196_601_125_010_5;

const TET_DEG2: BaryRule = BaryRule {
    pts: &[
        &[TET_A, TET_B, TET_B, TET_B],
        &[TET_B, TET_A, TET_B, TET_B],
        &[TET_B, TET_B, TET_A, TET_B],
        &[TET_B, TET_B, TET_B, TET_A],
    ],
    wts: &[0.25, 0.25, 0.25, 0.25],
};

// Keast 14-point degree-5 rule: two vertex-type orbits and one edge-type
// orbit.  Exactness through degree 5 is asserted by unit test against the
// closed-form monomial integrals on the reference tetrahedron.
const KE_A1: f64 = 0.721_794_249_067_326_4;
const KE_B1: f64 = 0.092_735_250_310_891_2;
const KE_W1: f64 = 0.073_493_043_116_361_95;
const KE_A2: f64 = 0.067_342_242_210_098_3;
const KE_B2: f64 = 0.310_885_919_263_300_6;
const KE_W2: f64 = 0.112_687_925_718_015_7;
const KE_A3: f64 = 0.454_496_295_874_350_5;
const KE_B3: f64 = 0.045_503_704_125_649_5;
const KE_W3: f64 = 0.042_546_020_777_081_47;

const TET_DEG5: BaryRule = BaryRule {
    pts: &[
        &[KE_A1, KE_B1, KE_B1, KE_B1],
        &[KE_B1, KE_A1, KE_B1, KE_B1],
        &[KE_B1, KE_B1, KE_A1, KE_B1],
        &[KE_B1, KE_B1, KE_B1, KE_A1],
        &[KE_A2, KE_B2, KE_B2, KE_B2],
        &[KE_B2, KE_A2, KE_B2, KE_B2],
        &[KE_B2, KE_B2, KE_A2, KE_B2],
        &[KE_B2, KE_B2, KE_B2, KE_A2],
        &[KE_A3, KE_A3, KE_B3, KE_B3],
        &[KE_A3, KE_B3, KE_A3, KE_B3],
        &[KE_A3, KE_B3, KE_B3, KE_A3],
        &[KE_B3, KE_A3, KE_A3, KE_B3],
        &[KE_B3, KE_A3, KE_B3, KE_A3],
        &[KE_B3, KE_B3, KE_A3, KE_A3],
    ],
    wts: &[
        KE_W1, KE_W1, KE_W1, KE_W1, KE_W2, KE_W2, KE_W2, KE_W2, KE_W3, KE_W3,
        KE_W3, KE_W3, KE_W3, KE_W3,
    ],
};

fn simplex_rule(nsd: usize, degree: usize) -> &'static BaryRule {
    match (nsd, degree) {
        (2, d) if d <= 2 => &TRI_DEG2,
        (2, d) if d <= 4 => &TRI_DEG4,
        (3, d) if d <= 2 => &TET_DEG2,
        (3, d) if d <= 5 => &TET_DEG5,
        _ => panic!("no simplex rule for nsd = {nsd}, degree = {degree}"),
    }
}

fn push_simplex(rule: &mut QuadRule, nsd: usize, pts: &[Point], degree: usize) {
    let measure = signed_simplex_measure(nsd, pts).abs();
    let bary = simplex_rule(nsd, degree);
    for (b, w) in bary.pts.iter().zip(bary.wts) {
        let mut x = [0.0; 3];
        for (coeff, p) in b.iter().zip(pts) {
            x = crate::geom::axpy(x, *coeff, *p);
        }
        rule.pts.push(x);
        rule.wts.push(w * measure);
    }
}

/// Quadrature over a cell given its vertex coordinates, exact to `degree`
/// on each sub-simplex.
pub fn cell_quadrature(ct: CellType, pts: &[Point], nsd: usize, degree: usize) -> QuadRule {
    let mut rule = QuadRule {
        pts: Vec::new(),
        wts: Vec::new(),
    };
    let mut simplex = [[0.0; 3]; 4];
    for tet in sub_simplices(ct) {
        for (slot, &v) in simplex.iter_mut().zip(tet.iter()) {
            *slot = pts[v];
        }
        push_simplex(&mut rule, nsd, &simplex[..tet.len()], degree);
    }
    rule
}

/// Quadrature over a face: Gauss on a segment in 2D, triangle rules on the
/// (split) face in 3D.
pub fn face_quadrature(nsd: usize, pts: &[Point], degree: usize) -> QuadRule {
    let mut rule = QuadRule {
        pts: Vec::new(),
        wts: Vec::new(),
    };
    if nsd == 2 {
        let (p0, p1) = (pts[0], pts[1]);
        let mid = crate::geom::scale(crate::geom::add(p0, p1), 0.5);
        let half = crate::geom::scale(sub(p1, p0), 0.5);
        let len = 2.0 * norm(half);
        let (nodes, wts): (&[f64], &[f64]) = if degree <= 3 {
            (&[-0.577_350_269_189_625_7, 0.577_350_269_189_625_7], &[1.0, 1.0])
        } else {
            (
                &[-0.774_596_669_241_483_4, 0.0, 0.774_596_669_241_483_4],
                &[
                    0.555_555_555_555_555_6,
                    0.888_888_888_888_888_9,
                    0.555_555_555_555_555_6,
                ],
            )
        };
        for (t, w) in nodes.iter().zip(wts) {
            rule.pts.push(crate::geom::axpy(mid, *t, half));
            rule.wts.push(w * 0.5 * len);
        }
    } else {
        let bary = match degree {
            d if d <= 2 => &TRI_DEG2,
            _ => &TRI_DEG4,
        };
        for tri in face_sub_triangles(pts.len()) {
            let tp = [pts[tri[0]], pts[tri[1]], pts[tri[2]]];
            let area = triangle_area3(tp[0], tp[1], tp[2]);
            for (b, w) in bary.pts.iter().zip(bary.wts) {
                let mut x = [0.0; 3];
                for (coeff, p) in b.iter().zip(&tp) {
                    x = crate::geom::axpy(x, *coeff, *p);
                }
                rule.pts.push(x);
                rule.wts.push(w * area);
            }
        }
    }
    rule
}

/// Exact measure and centroid of a cell from its simplex decomposition.
/// The measure is signed, so inverted cells surface as negative values.
pub fn cell_measure_centroid(ct: CellType, pts: &[Point], nsd: usize) -> (f64, Point) {
    let mut vol = 0.0;
    let mut cen = [0.0; 3];
    let mut simplex = [[0.0; 3]; 4];
    for tet in sub_simplices(ct) {
        for (slot, &v) in simplex.iter_mut().zip(tet.iter()) {
            *slot = pts[v];
        }
        let v = signed_simplex_measure(nsd, &simplex[..tet.len()]);
        let c = crate::geom::mean(&simplex[..tet.len()]);
        vol += v;
        cen = crate::geom::axpy(cen, v, c);
    }
    (vol, crate::geom::scale(cen, 1.0 / vol))
}
