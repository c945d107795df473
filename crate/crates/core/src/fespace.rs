//! Conforming P1 (1D) / bilinear Q1 (2D) finite element spaces with
//! homogeneous Dirichlet constraints.
//!
//! The 2D basis on the reference square `[-1, 1]^2` spans
//! `{1, x1, x2, x1*x2}` with nodal basis functions ordered counter-clockwise
//! to match [`crate::mesh::Mesh::element_nodes`]. Assembly uses tensorized
//! Gauss-Legendre quadrature with 3 points per axis, which integrates the
//! cubic reaction term of the discrete systems exactly on axis-aligned
//! elements.
//!
//! Boundary conditions are handled by symmetric row/column elimination: full
//! matrices are assembled over all nodes and then restricted to the free
//! (interior) set.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::mesh::Mesh;
use crate::sparse::SparseMatrix;

/// Per-axis Gauss-Legendre rule on `[-1, 1]`.
#[derive(Debug, Clone)]
pub struct QuadratureRule {
    points: Vec<f64>,
    weights: Vec<f64>,
}

impl QuadratureRule {
    /// Gauss-Legendre rule with `n` points (1 to 5), exact for polynomials
    /// of degree `2n - 1`.
    pub fn gauss(n: usize) -> Result<Self> {
        let (points, weights): (Vec<f64>, Vec<f64>) = match n {
            1 => (vec![0.0], vec![2.0]),
            2 => {
                let x = 0.577_350_269_189_625_8;
                (vec![-x, x], vec![1.0, 1.0])
            }
            3 => {
                let x = 0.774_596_669_241_483_4;
                let (w0, w1) = (8.0 / 9.0, 5.0 / 9.0);
                (vec![-x, 0.0, x], vec![w1, w0, w1])
            }
            4 => {
                let x0 = 0.339_981_043_584_856_26;
                let x1 = 0.861_136_311_594_052_6;
                let w0 = 0.652_145_154_862_546_1;
                let w1 = 0.347_854_845_137_453_85;
                (vec![-x1, -x0, x0, x1], vec![w1, w0, w0, w1])
            }
            5 => {
                let x1 = 0.538_469_310_105_683_1;
                let x2 = 0.906_179_845_938_664;
                let w0 = 0.568_888_888_888_888_9;
                let w1 = 0.478_628_670_499_366_5;
                let w2 = 0.236_926_885_056_189_08;
                (vec![-x2, -x1, 0.0, x1, x2], vec![w2, w1, w0, w1, w2])
            }
            _ => {
                return Err(Error::invalid(format!(
                    "unsupported Gauss rule with {n} points"
                )))
            }
        };
        Ok(QuadratureRule { points, weights })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }
}

/// Basis function values at a reference point.
fn shape_values(dim: usize, xi: &[f64], out: &mut [f64; 4]) -> usize {
    if dim == 1 {
        out[0] = 0.5 * (1.0 - xi[0]);
        out[1] = 0.5 * (1.0 + xi[0]);
        2
    } else {
        let (a, b) = (xi[0], xi[1]);
        out[0] = 0.25 * (1.0 - a) * (1.0 - b);
        out[1] = 0.25 * (1.0 + a) * (1.0 - b);
        out[2] = 0.25 * (1.0 + a) * (1.0 + b);
        out[3] = 0.25 * (1.0 - a) * (1.0 + b);
        4
    }
}

/// Reference-coordinate gradients of the basis functions.
fn shape_ref_grads(dim: usize, xi: &[f64], out: &mut [[f64; 2]; 4]) -> usize {
    if dim == 1 {
        out[0] = [-0.5, 0.0];
        out[1] = [0.5, 0.0];
        2
    } else {
        let (a, b) = (xi[0], xi[1]);
        out[0] = [-0.25 * (1.0 - b), -0.25 * (1.0 - a)];
        out[1] = [0.25 * (1.0 - b), -0.25 * (1.0 + a)];
        out[2] = [0.25 * (1.0 + b), 0.25 * (1.0 + a)];
        out[3] = [-0.25 * (1.0 + b), 0.25 * (1.0 - a)];
        4
    }
}

/// Tensorized quadrature data with the (uniform) element geometry folded in.
struct QuadTables {
    /// Reference coordinates of each tensor point.
    ref_points: Vec<[f64; 2]>,
    /// Tensor weight times the reference-to-physical Jacobian determinant.
    weights: Vec<f64>,
    /// Basis values at each point.
    shapes: Vec<[f64; 4]>,
    /// Physical gradients at each point (identical on every element).
    grads: Vec<[[f64; 2]; 4]>,
    nbasis: usize,
}

impl QuadTables {
    fn build(mesh: &Mesh, rule: &QuadratureRule) -> Self {
        let dim = mesh.dim();
        let nbasis = if dim == 1 { 2 } else { 4 };
        let jac: f64 = (0..dim).map(|a| 0.5 * mesh.edge_length(a)).product();
        let mut ref_points = Vec::new();
        let mut weights = Vec::new();
        let q = rule.len();
        let npts = if dim == 1 { q } else { q * q };
        for k in 0..npts {
            let (i, j) = (k % q, k / q);
            let xi = [
                rule.points()[i],
                if dim == 1 { 0.0 } else { rule.points()[j] },
            ];
            let w = rule.weights()[i] * if dim == 1 { 1.0 } else { rule.weights()[j] };
            ref_points.push(xi);
            weights.push(w * jac);
        }
        let mut shapes = Vec::with_capacity(npts);
        let mut grads = Vec::with_capacity(npts);
        for xi in &ref_points {
            let mut s = [0.0; 4];
            shape_values(dim, xi, &mut s);
            shapes.push(s);
            let mut g = [[0.0; 2]; 4];
            shape_ref_grads(dim, xi, &mut g);
            for gb in g.iter_mut().take(nbasis) {
                for (a, ga) in gb.iter_mut().enumerate().take(dim) {
                    *ga *= 2.0 / mesh.edge_length(a);
                }
            }
            grads.push(g);
        }
        QuadTables {
            ref_points,
            weights,
            shapes,
            grads,
            nbasis,
        }
    }
}

/// P1/Q1 finite element space with homogeneous Dirichlet constraints on the
/// domain boundary.
pub struct FeSpace {
    mesh: Mesh,
    free_index: Vec<Option<usize>>,
    free_nodes: Vec<usize>,
    constrained: Vec<bool>,
    tables: QuadTables,
}

impl FeSpace {
    pub fn new(mesh: Mesh) -> Self {
        let rule = QuadratureRule::gauss(3).expect("builtin rule");
        let n = mesh.num_nodes();
        let constrained: Vec<bool> = (0..n).map(|k| mesh.is_boundary_node(k)).collect();
        let mut free_index = vec![None; n];
        let mut free_nodes = Vec::new();
        for (k, &c) in constrained.iter().enumerate() {
            if !c {
                free_index[k] = Some(free_nodes.len());
                free_nodes.push(k);
            }
        }
        let tables = QuadTables::build(&mesh, &rule);
        FeSpace {
            mesh,
            free_index,
            free_nodes,
            constrained,
            tables,
        }
    }

    pub fn mesh(&self) -> &Mesh {
        &self.mesh
    }

    pub fn num_nodes(&self) -> usize {
        self.mesh.num_nodes()
    }

    pub fn num_free(&self) -> usize {
        self.free_nodes.len()
    }

    /// Free (interior) node indices in increasing node order.
    pub fn free_nodes(&self) -> &[usize] {
        &self.free_nodes
    }

    pub fn constrained_mask(&self) -> &[bool] {
        &self.constrained
    }

    /// Nodal interpolant of `f` over all mesh nodes.
    pub fn interpolate(&self, f: impl Fn(&[f64]) -> f64) -> Vec<f64> {
        (0..self.num_nodes())
            .map(|k| f(&self.mesh.node_coord(k)))
            .collect()
    }

    /// Zeroes the constrained entries of a coefficient vector.
    pub fn zero_constrained(&self, coeffs: &mut [f64]) {
        for (k, &c) in self.constrained.iter().enumerate() {
            if c {
                coeffs[k] = 0.0;
            }
        }
    }

    /// Mass matrix `M_ij = integral(phi_i phi_j)` over all nodes.
    pub fn assemble_mass(&self) -> SparseMatrix {
        self.assemble_constant_element(|t, q, a, b| t.weights[q] * t.shapes[q][a] * t.shapes[q][b])
    }

    /// Stiffness matrix `A_ij = integral(grad phi_i . grad phi_j)`.
    pub fn assemble_stiffness(&self) -> SparseMatrix {
        let dim = self.mesh.dim();
        self.assemble_constant_element(move |t, q, a, b| {
            let (ga, gb) = (&t.grads[q][a], &t.grads[q][b]);
            t.weights[q] * (0..dim).map(|d| ga[d] * gb[d]).sum::<f64>()
        })
    }

    // On a uniform mesh the element matrix is identical everywhere: compute
    // it once and scatter.
    fn assemble_constant_element(
        &self,
        kernel: impl Fn(&QuadTables, usize, usize, usize) -> f64,
    ) -> SparseMatrix {
        let t = &self.tables;
        let nb = t.nbasis;
        let mut elem = [[0.0f64; 4]; 4];
        for q in 0..t.weights.len() {
            for a in 0..nb {
                for b in 0..nb {
                    elem[a][b] += kernel(t, q, a, b);
                }
            }
        }
        let mut trip = Vec::with_capacity(self.mesh.num_elements() * nb * nb);
        for e in 0..self.mesh.num_elements() {
            let nodes = self.mesh.element_nodes(e);
            for a in 0..nb {
                for b in 0..nb {
                    trip.push((nodes[a], nodes[b], elem[a][b]));
                }
            }
        }
        SparseMatrix::from_triplets(self.num_nodes(), self.num_nodes(), &trip)
            .expect("assembly indices are in range")
    }

    /// Weighted mass matrix `N_ij = integral(w phi_i phi_j)` by quadrature.
    ///
    /// The weight may live on a different mesh; it is evaluated at this
    /// space's quadrature points and failures propagate.
    pub fn assemble_weighted_mass(
        &self,
        w: impl Fn(&[f64]) -> Result<f64>,
    ) -> Result<SparseMatrix> {
        let t = &self.tables;
        let nb = t.nbasis;
        let dim = self.mesh.dim();
        let mut trip = Vec::with_capacity(self.mesh.num_elements() * nb * nb);
        for e in 0..self.mesh.num_elements() {
            let nodes = self.mesh.element_nodes(e);
            let mut elem = [[0.0f64; 4]; 4];
            for q in 0..t.weights.len() {
                let x = self.mesh.map_to_physical(e, &t.ref_points[q][..dim]);
                let wq = t.weights[q] * w(&x)?;
                if wq == 0.0 {
                    continue;
                }
                for a in 0..nb {
                    let sa = wq * t.shapes[q][a];
                    for b in 0..nb {
                        elem[a][b] += sa * t.shapes[q][b];
                    }
                }
            }
            for a in 0..nb {
                for b in 0..nb {
                    trip.push((nodes[a], nodes[b], elem[a][b]));
                }
            }
        }
        SparseMatrix::from_triplets(self.num_nodes(), self.num_nodes(), &trip)
    }

    /// Load vector `b_i = integral(s phi_i)` by quadrature.
    pub fn assemble_load(&self, s: impl Fn(&[f64]) -> Result<f64>) -> Result<Vec<f64>> {
        let t = &self.tables;
        let nb = t.nbasis;
        let dim = self.mesh.dim();
        let mut b = vec![0.0; self.num_nodes()];
        for e in 0..self.mesh.num_elements() {
            let nodes = self.mesh.element_nodes(e);
            for q in 0..t.weights.len() {
                let x = self.mesh.map_to_physical(e, &t.ref_points[q][..dim]);
                let sq = t.weights[q] * s(&x)?;
                for a in 0..nb {
                    b[nodes[a]] += sq * t.shapes[q][a];
                }
            }
        }
        Ok(b)
    }

    /// Restricts a full matrix to the free-node block.
    pub fn restrict_matrix(&self, m: &SparseMatrix) -> Result<SparseMatrix> {
        apply_dirichlet_matrix(m, &self.constrained)
    }

    /// Restricts a full vector to the free nodes.
    pub fn restrict_vector(&self, v: &[f64]) -> Vec<f64> {
        apply_dirichlet_vector(v, &self.constrained)
    }

    /// Expands a free vector to all nodes with zeros on the boundary.
    pub fn scatter_free(&self, vfree: &[f64]) -> Vec<f64> {
        assert_eq!(vfree.len(), self.num_free());
        let mut full = vec![0.0; self.num_nodes()];
        for (fi, &node) in self.free_nodes.iter().enumerate() {
            full[node] = vfree[fi];
        }
        full
    }
}

/// Symmetric elimination of constrained rows and columns: keeps the
/// free-by-free block of `m`.
pub fn apply_dirichlet_matrix(m: &SparseMatrix, constrained: &[bool]) -> Result<SparseMatrix> {
    if m.nrows() != constrained.len() || m.ncols() != constrained.len() {
        return Err(Error::invalid(
            "constraint mask length does not match matrix size",
        ));
    }
    let mut free_index = vec![usize::MAX; constrained.len()];
    let mut nfree = 0;
    for (k, &c) in constrained.iter().enumerate() {
        if !c {
            free_index[k] = nfree;
            nfree += 1;
        }
    }
    let mut trip = Vec::new();
    for (r, c, v) in m.triplet_iter() {
        if !constrained[r] && !constrained[c] {
            trip.push((free_index[r], free_index[c], v));
        }
    }
    SparseMatrix::from_triplets(nfree, nfree, &trip)
}

/// Drops the constrained entries of a vector.
pub fn apply_dirichlet_vector(v: &[f64], constrained: &[bool]) -> Vec<f64> {
    v.iter()
        .zip(constrained)
        .filter_map(|(&x, &c)| (!c).then_some(x))
        .collect()
}

/// Coefficient vector over the nodes of an [`FeSpace`], evaluable anywhere
/// in the domain.
#[derive(Debug, Clone)]
pub struct FeFunction {
    space: Arc<FeSpace>,
    coeffs: Vec<f64>,
}

impl FeFunction {
    pub fn new(space: Arc<FeSpace>, coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.len() != space.num_nodes() {
            return Err(Error::invalid(format!(
                "coefficient vector length {} does not match node count {}",
                coeffs.len(),
                space.num_nodes()
            )));
        }
        Ok(FeFunction { space, coeffs })
    }

    pub fn zero(space: Arc<FeSpace>) -> Self {
        let coeffs = vec![0.0; space.num_nodes()];
        FeFunction { space, coeffs }
    }

    /// Nodal interpolant of `f`.
    pub fn interpolate(space: Arc<FeSpace>, f: impl Fn(&[f64]) -> f64) -> Self {
        let coeffs = space.interpolate(f);
        FeFunction { space, coeffs }
    }

    pub fn space(&self) -> &Arc<FeSpace> {
        &self.space
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [f64] {
        &mut self.coeffs
    }

    /// Value of the piecewise-polynomial interpolant at `p`.
    pub fn eval(&self, p: &[f64]) -> Result<f64> {
        let (e, xi) = self.space.mesh.locate_point(p)?;
        Ok(self.eval_local(e, &xi))
    }

    /// Value at reference coordinates `xi` of element `e`.
    pub fn eval_local(&self, e: usize, xi: &[f64; 2]) -> f64 {
        let dim = self.space.mesh.dim();
        let mut s = [0.0; 4];
        let nb = shape_values(dim, &xi[..dim], &mut s);
        let nodes = self.space.mesh.element_nodes(e);
        (0..nb).map(|a| s[a] * self.coeffs[nodes[a]]).sum()
    }

    /// Physical gradient at reference coordinates `xi` of element `e`.
    pub fn grad_local(&self, e: usize, xi: &[f64; 2]) -> [f64; 2] {
        let dim = self.space.mesh.dim();
        let mut g = [[0.0; 2]; 4];
        let nb = shape_ref_grads(dim, &xi[..dim], &mut g);
        let nodes = self.space.mesh.element_nodes(e);
        let mut out = [0.0; 2];
        for a in 0..nb {
            for d in 0..dim {
                out[d] += g[a][d] * (2.0 / self.space.mesh.edge_length(d)) * self.coeffs[nodes[a]];
            }
        }
        out
    }
}
