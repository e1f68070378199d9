//! Newest-vertex bisection forest over a triangular mesh.
//!
//! Each node stores its peak vertex first; the refinement edge is always
//! (verts[1], verts[2]).  Bisection inserts the edge midpoint m (shared
//! between the two triangles on the edge) and replaces the parent
//! (p, a, b) by the children (m, p, a) and (m, b, p), both with peak m,
//! which preserves orientation.  A triangle is only bisected when its
//! refinement edge is compatible: on the boundary, or shared as the
//! refinement edge of the neighbour.  Incompatible neighbours are
//! bisected first, so the active mesh is conforming at every step.
//! Coarsening undoes previous bisections only, never past the initial
//! mesh, and only when every triangle around a midpoint vertex is a
//! sibling pair marked for removal.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::geom::{self, Point};
use crate::mesh::{BoundaryTag, Cell, CellType, Mesh};

#[derive(Debug, Clone)]
struct TriNode {
    /// Peak vertex first; refinement edge is (verts[1], verts[2]).
    verts: [usize; 3],
    children: Option<[usize; 2]>,
}

#[derive(Debug, Clone)]
pub struct Forest {
    pub vertices: Vec<Point>,
    nodes: Vec<TriNode>,
    roots: Vec<usize>,
    /// Sorted edge -> midpoint vertex, deduplicating shared bisections.
    midpoints: HashMap<(usize, usize), usize>,
    /// Sorted boundary edge -> tag, maintained under bisection.
    boundary_tags: HashMap<(usize, usize), BoundaryTag>,
    /// Sorted edge -> active leaves containing it (one or two).
    edge_leaves: HashMap<(usize, usize), Vec<usize>>,
    n_active: usize,
}

fn key(a: usize, b: usize) -> (usize, usize) {
    (a.min(b), a.max(b))
}

const EDGES: [(usize, usize); 3] = [(0, 1), (1, 2), (2, 0)];

impl Forest {
    /// Builds a forest whose roots are the mesh triangles, with the
    /// longest edge (ties broken by vertex pair) as refinement edge.
    pub fn from_mesh(mesh: &Mesh) -> Result<Forest> {
        if mesh.nsd != 2 || mesh.cells.iter().any(|c| c.cell_type != CellType::Tri) {
            return Err(Error::Adapt(
                "bisection refinement requires a 2d mesh of TRI cells".into(),
            ));
        }
        let mut boundary_tags = HashMap::new();
        for face in &mesh.faces {
            if face.right.is_none() {
                let tag = face.tag.unwrap_or(BoundaryTag::Dirichlet);
                boundary_tags.insert(key(face.verts[0], face.verts[1]), tag);
            }
        }
        let mut nodes = Vec::with_capacity(mesh.n_cells());
        let mut roots = Vec::with_capacity(mesh.n_cells());
        let mut edge_leaves: HashMap<(usize, usize), Vec<usize>> = HashMap::new();
        for cell in &mesh.cells {
            let v = &cell.verts;
            let lens: Vec<f64> = EDGES
                .iter()
                .map(|&(i, j)| geom::dist(mesh.vertices[v[i]], mesh.vertices[v[j]]))
                .collect();
            let max_len = lens.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            // Longest edge, ties broken by the smaller sorted vertex pair so
            // neighbours agree on shared edges.
            let best = (0..3)
                .filter(|&k| lens[k] >= max_len * (1.0 - 1e-12))
                .min_by_key(|&k| key(v[EDGES[k].0], v[EDGES[k].1]))
                .unwrap();
            let (i, j) = EDGES[best];
            let peak = 3 - i - j;
            let idx = nodes.len();
            nodes.push(TriNode {
                verts: [v[peak], v[i], v[j]],
                children: None,
            });
            roots.push(idx);
            for &(a, b) in &EDGES {
                let vs = nodes[idx].verts;
                edge_leaves.entry(key(vs[a], vs[b])).or_default().push(idx);
            }
        }
        let n_active = roots.len();
        Ok(Forest {
            vertices: mesh.vertices.clone(),
            nodes,
            roots,
            midpoints: HashMap::new(),
            boundary_tags,
            edge_leaves,
            n_active,
        })
    }

    pub fn n_active(&self) -> usize {
        self.n_active
    }

    fn is_leaf(&self, idx: usize) -> bool {
        self.nodes[idx].children.is_none()
    }

    pub fn children_of(&self, idx: usize) -> Option<[usize; 2]> {
        self.nodes[idx].children
    }

    /// Triangle diameter: the longest edge.
    pub fn diameter(&self, idx: usize) -> f64 {
        let [a, b, c] = self.nodes[idx].verts;
        let (pa, pb, pc) = (self.vertices[a], self.vertices[b], self.vertices[c]);
        geom::dist(pa, pb).max(geom::dist(pb, pc)).max(geom::dist(pc, pa))
    }

    fn refinement_edge(&self, idx: usize) -> (usize, usize) {
        let v = self.nodes[idx].verts;
        key(v[1], v[2])
    }

    /// Active leaves in depth-first pre-order from the roots; this order
    /// defines the cell numbering of `to_mesh`.
    pub fn active(&self) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.n_active);
        let mut stack: Vec<usize> = self.roots.iter().rev().copied().collect();
        while let Some(idx) = stack.pop() {
            match self.nodes[idx].children {
                Some([c0, c1]) => {
                    stack.push(c1);
                    stack.push(c0);
                }
                None => out.push(idx),
            }
        }
        out
    }

    fn neighbour(&self, edge: (usize, usize), not: usize) -> Option<usize> {
        self.edge_leaves
            .get(&edge)?
            .iter()
            .copied()
            .find(|&n| n != not)
    }

    fn drop_leaf_edges(&mut self, idx: usize) {
        let vs = self.nodes[idx].verts;
        for &(a, b) in &EDGES {
            if let Some(list) = self.edge_leaves.get_mut(&key(vs[a], vs[b])) {
                list.retain(|&n| n != idx);
                if list.is_empty() {
                    self.edge_leaves.remove(&key(vs[a], vs[b]));
                }
            }
        }
    }

    fn add_leaf_edges(&mut self, idx: usize) {
        let vs = self.nodes[idx].verts;
        for &(a, b) in &EDGES {
            self.edge_leaves
                .entry(key(vs[a], vs[b]))
                .or_default()
                .push(idx);
        }
    }

    /// Unconditional single bisection; callers must ensure compatibility.
    fn bisect(&mut self, idx: usize) {
        debug_assert!(self.is_leaf(idx));
        let [p, a, b] = self.nodes[idx].verts;
        let edge = key(a, b);
        let m = match self.midpoints.get(&edge) {
            Some(&m) => m,
            None => {
                let mid = geom::scale(geom::add(self.vertices[a], self.vertices[b]), 0.5);
                let m = self.vertices.len();
                self.vertices.push(mid);
                self.midpoints.insert(edge, m);
                if let Some(&tag) = self.boundary_tags.get(&edge) {
                    self.boundary_tags.insert(key(a, m), tag);
                    self.boundary_tags.insert(key(m, b), tag);
                }
                m
            }
        };
        let c0 = self.nodes.len();
        self.nodes.push(TriNode {
            verts: [m, p, a],
            children: None,
        });
        let c1 = self.nodes.len();
        self.nodes.push(TriNode {
            verts: [m, b, p],
            children: None,
        });
        self.drop_leaf_edges(idx);
        self.nodes[idx].children = Some([c0, c1]);
        self.add_leaf_edges(c0);
        self.add_leaf_edges(c1);
        self.n_active += 1;
    }

    /// Bisects a leaf after recursively making its refinement edge
    /// compatible; both triangles on the edge are split together.
    pub fn bisect_compatibly(&mut self, idx: usize) -> Result<()> {
        let mut stack = vec![idx];
        while let Some(&top) = stack.last() {
            if !self.is_leaf(top) {
                stack.pop();
                continue;
            }
            let edge = self.refinement_edge(top);
            match self.neighbour(edge, top) {
                Some(n) if self.refinement_edge(n) != edge => {
                    if stack.len() > self.n_active {
                        return Err(Error::Adapt(
                            "bisection recursion exceeded the mesh size; the initial \
                             refinement edges admit no compatible subdivision"
                                .into(),
                        ));
                    }
                    stack.push(n);
                }
                partner => {
                    self.bisect(top);
                    if let Some(n) = partner {
                        if self.is_leaf(n) {
                            self.bisect(n);
                        }
                    }
                    stack.pop();
                }
            }
        }
        Ok(())
    }

    /// Refines the given leaves (stable node ids); returns the number of
    /// bisections performed.  Ids bisected along the way by neighbour
    /// recursion are skipped silently.
    pub fn refine_nodes(&mut self, ids: &[usize]) -> Result<usize> {
        let before = self.nodes.len();
        for &idx in ids {
            if self.is_leaf(idx) {
                self.bisect_compatibly(idx)?;
            }
        }
        Ok((self.nodes.len() - before) / 2)
    }

    /// Refines the active triangles marked `true` (indexed in `active()`
    /// order); returns the number of bisections performed.
    pub fn refine(&mut self, marks: &[bool]) -> Result<usize> {
        let active = self.active();
        if marks.len() != active.len() {
            return Err(Error::Adapt(format!(
                "refinement marks ({}) do not match active cells ({})",
                marks.len(),
                active.len()
            )));
        }
        let ids: Vec<usize> = active
            .iter()
            .zip(marks)
            .filter(|&(_, &m)| m)
            .map(|(&idx, _)| idx)
            .collect();
        self.refine_nodes(&ids)
    }

    /// Coarsens marked sibling pairs (stable node ids) whose midpoint
    /// vertex is surrounded exclusively by marked sibling pairs; never
    /// removes the initial triangles.  Returns undone bisections.
    pub fn coarsen_nodes(&mut self, marked: &std::collections::HashSet<usize>) -> usize {
        let active = self.active();
        // Candidate parents: both children are marked leaves.  The child
        // peak (verts[0]) is the parent's midpoint vertex.
        let mut by_midpoint: HashMap<usize, Vec<usize>> = HashMap::new();
        for (idx, node) in self.nodes.iter().enumerate() {
            if let Some([c0, c1]) = node.children {
                if marked.contains(&c0)
                    && marked.contains(&c1)
                    && self.is_leaf(c0)
                    && self.is_leaf(c1)
                {
                    by_midpoint
                        .entry(self.nodes[c0].verts[0])
                        .or_default()
                        .push(idx);
                }
            }
        }
        let mut touching: HashMap<usize, usize> = HashMap::new();
        for &idx in &active {
            for &v in &self.nodes[idx].verts {
                *touching.entry(v).or_insert(0) += 1;
            }
        }
        let mut undone = 0;
        for (m, parents) in by_midpoint {
            // Every active triangle touching the midpoint must be a child
            // of one of the candidate parents, otherwise undoing would
            // leave a hanging node.
            if touching.get(&m).copied().unwrap_or(0) != 2 * parents.len() {
                continue;
            }
            for &p in &parents {
                let [c0, c1] = self.nodes[p].children.unwrap();
                self.drop_leaf_edges(c0);
                self.drop_leaf_edges(c1);
                self.nodes[p].children = None;
                self.add_leaf_edges(p);
                self.n_active -= 1;
                undone += 1;
            }
        }
        undone
    }

    /// Coarsening with marks indexed in `active()` order.
    pub fn coarsen(&mut self, marks: &[bool]) -> Result<usize> {
        let active = self.active();
        if marks.len() != active.len() {
            return Err(Error::Adapt(format!(
                "coarsening marks ({}) do not match active cells ({})",
                marks.len(),
                active.len()
            )));
        }
        let marked: std::collections::HashSet<usize> = active
            .iter()
            .zip(marks)
            .filter(|&(_, &m)| m)
            .map(|(&idx, _)| idx)
            .collect();
        Ok(self.coarsen_nodes(&marked))
    }

    /// Materialises the active triangulation, carrying boundary tags
    /// through from the initial mesh.  Fails if an exterior edge is not
    /// covered by the recorded boundary, which would indicate a
    /// conformity defect.
    pub fn to_mesh(&self) -> Result<Mesh> {
        let cells: Vec<Cell> = self
            .active()
            .iter()
            .map(|&idx| Cell {
                cell_type: CellType::Tri,
                verts: self.nodes[idx].verts.to_vec(),
            })
            .collect();
        let mut mesh = Mesh::new(2, self.vertices.clone(), cells)?;
        for face in mesh.faces.iter_mut() {
            if face.right.is_none() {
                let tag = self
                    .boundary_tags
                    .get(&key(face.verts[0], face.verts[1]))
                    .copied()
                    .ok_or_else(|| {
                        Error::Adapt(format!(
                            "exterior edge ({}, {}) is not part of the recorded \
                             boundary; the refined mesh is not conforming",
                            face.verts[0], face.verts[1]
                        ))
                    })?;
                face.tag = Some(tag);
            }
        }
        Ok(mesh)
    }
}
