//! Uniform tensor-product meshes on 1D intervals and 2D rectangles.
//!
//! Node and element numbering is lexicographic with the first axis running
//! fastest. 2D elements list their four corner nodes counter-clockwise:
//!
//! ```text
//!   3 --- 2
//!   |     |
//!   0 --- 1
//! ```
//!
//! Meshes are immutable after construction; coarse and fine meshes over the
//! same domain are independent objects and talk to each other only through
//! [`Mesh::locate_point`].

use crate::error::{Error, Result};

/// Axis-aligned box domain in one or two dimensions.
#[derive(Debug, Clone, PartialEq)]
pub struct Domain {
    bounds: Vec<(f64, f64)>,
}

impl Domain {
    pub fn new(bounds: &[(f64, f64)]) -> Result<Self> {
        if bounds.is_empty() || bounds.len() > 2 {
            return Err(Error::invalid("domain dimension must be 1 or 2"));
        }
        for &(lo, hi) in bounds {
            if !(lo < hi) {
                return Err(Error::invalid(format!(
                    "domain bounds must satisfy lower < upper, got [{lo}, {hi}]"
                )));
            }
        }
        Ok(Domain {
            bounds: bounds.to_vec(),
        })
    }

    pub fn interval(lo: f64, hi: f64) -> Result<Self> {
        Domain::new(&[(lo, hi)])
    }

    pub fn rectangle(x: (f64, f64), y: (f64, f64)) -> Result<Self> {
        Domain::new(&[x, y])
    }

    pub fn dim(&self) -> usize {
        self.bounds.len()
    }

    pub fn bounds(&self, axis: usize) -> (f64, f64) {
        self.bounds[axis]
    }

    pub fn measure(&self) -> f64 {
        self.bounds.iter().map(|&(lo, hi)| hi - lo).product()
    }

    /// Relative tolerance scale used for boundary and containment tests.
    fn tol_scale(&self) -> f64 {
        self.bounds
            .iter()
            .flat_map(|&(lo, hi)| [lo.abs(), hi.abs(), 1.0])
            .fold(0.0, f64::max)
    }
}

/// Uniform mesh over a [`Domain`].
#[derive(Debug, Clone)]
pub struct Mesh {
    domain: Domain,
    divisions: Vec<usize>,
    steps: Vec<f64>,
    boundary_nodes: Vec<usize>,
}

/// Builds a uniform mesh with `divisions[axis]` elements per axis.
pub fn make_uniform_mesh(domain: Domain, divisions: &[usize]) -> Result<Mesh> {
    Mesh::uniform(domain, divisions)
}

impl Mesh {
    pub fn uniform(domain: Domain, divisions: &[usize]) -> Result<Self> {
        if divisions.len() != domain.dim() {
            return Err(Error::invalid(format!(
                "expected {} division counts, got {}",
                domain.dim(),
                divisions.len()
            )));
        }
        if divisions.iter().any(|&d| d == 0) {
            return Err(Error::invalid("divisions must be at least 1 per axis"));
        }
        let steps = divisions
            .iter()
            .zip(&domain.bounds)
            .map(|(&d, &(lo, hi))| (hi - lo) / d as f64)
            .collect();
        let mut mesh = Mesh {
            domain,
            divisions: divisions.to_vec(),
            steps,
            boundary_nodes: Vec::new(),
        };
        mesh.boundary_nodes = (0..mesh.num_nodes())
            .filter(|&k| mesh.node_on_boundary(k))
            .collect();
        Ok(mesh)
    }

    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    pub fn dim(&self) -> usize {
        self.domain.dim()
    }

    pub fn divisions(&self) -> &[usize] {
        &self.divisions
    }

    /// Element edge length along `axis`.
    pub fn edge_length(&self, axis: usize) -> f64 {
        self.steps[axis]
    }

    /// Element diameter: the edge length in 1D, the diagonal in 2D.
    pub fn diameter(&self) -> f64 {
        self.steps.iter().map(|s| s * s).sum::<f64>().sqrt()
    }

    pub fn num_nodes(&self) -> usize {
        self.divisions.iter().map(|&d| d + 1).product()
    }

    pub fn num_elements(&self) -> usize {
        self.divisions.iter().product()
    }

    pub fn element_measure(&self) -> f64 {
        self.steps.iter().product()
    }

    /// Node coordinate along one axis; endpoints are reproduced exactly.
    fn axis_coord(&self, axis: usize, i: usize) -> f64 {
        let (lo, hi) = self.domain.bounds[axis];
        if i == self.divisions[axis] {
            hi
        } else {
            lo + i as f64 * self.steps[axis]
        }
    }

    fn node_multi_index(&self, node: usize) -> [usize; 2] {
        match self.dim() {
            1 => [node, 0],
            _ => {
                let nx = self.divisions[0] + 1;
                [node % nx, node / nx]
            }
        }
    }

    pub fn node_coord(&self, node: usize) -> Vec<f64> {
        let mi = self.node_multi_index(node);
        (0..self.dim()).map(|a| self.axis_coord(a, mi[a])).collect()
    }

    fn node_index(&self, mi: [usize; 2]) -> usize {
        match self.dim() {
            1 => mi[0],
            _ => mi[1] * (self.divisions[0] + 1) + mi[0],
        }
    }

    fn node_on_boundary(&self, node: usize) -> bool {
        let mi = self.node_multi_index(node);
        (0..self.dim()).any(|a| mi[a] == 0 || mi[a] == self.divisions[a])
    }

    /// Boundary node indices in increasing order.
    pub fn boundary_nodes(&self) -> &[usize] {
        &self.boundary_nodes
    }

    pub fn is_boundary_node(&self, node: usize) -> bool {
        self.node_on_boundary(node)
    }

    /// Corner nodes of element `e` (2 in 1D, 4 counter-clockwise in 2D).
    pub fn element_nodes(&self, e: usize) -> Vec<usize> {
        match self.dim() {
            1 => vec![e, e + 1],
            _ => {
                let nx = self.divisions[0];
                let (i, j) = (e % nx, e / nx);
                vec![
                    self.node_index([i, j]),
                    self.node_index([i + 1, j]),
                    self.node_index([i + 1, j + 1]),
                    self.node_index([i, j + 1]),
                ]
            }
        }
    }

    fn element_multi_index(&self, e: usize) -> [usize; 2] {
        match self.dim() {
            1 => [e, 0],
            _ => [e % self.divisions[0], e / self.divisions[0]],
        }
    }

    /// Maps local reference coordinates in `[-1, 1]^dim` through element `e`.
    pub fn map_to_physical(&self, e: usize, xi: &[f64]) -> Vec<f64> {
        let mi = self.element_multi_index(e);
        (0..self.dim())
            .map(|a| {
                let c0 = self.axis_coord(a, mi[a]);
                let c1 = self.axis_coord(a, mi[a] + 1);
                c0 + 0.5 * (xi[a] + 1.0) * (c1 - c0)
            })
            .collect()
    }

    /// Finds the element containing `p` and the local coordinates of `p`
    /// within it. Points on inter-element faces resolve to the lower element
    /// index; points farther than a `1e-12` relative tolerance outside the
    /// domain are rejected.
    pub fn locate_point(&self, p: &[f64]) -> Result<(usize, [f64; 2])> {
        if p.len() != self.dim() {
            return Err(Error::invalid(format!(
                "point dimension {} does not match mesh dimension {}",
                p.len(),
                self.dim()
            )));
        }
        let tol = 1e-12 * self.domain.tol_scale();
        let mut cell = [0usize; 2];
        let mut local = [0.0f64; 2];
        for a in 0..self.dim() {
            let (lo, hi) = self.domain.bounds[a];
            if p[a] < lo - tol || p[a] > hi + tol {
                return Err(Error::OutOfDomain { point: p.to_vec() });
            }
            let t = (p[a] - lo) / self.steps[a];
            let mut k = (t.floor() as i64).clamp(0, self.divisions[a] as i64 - 1) as usize;
            // Exact face hits snap to the lower element.
            if k > 0 && p[a] == self.axis_coord(a, k) {
                k -= 1;
            }
            let c0 = self.axis_coord(a, k);
            let c1 = self.axis_coord(a, k + 1);
            cell[a] = k;
            local[a] = (2.0 * (p[a] - c0) / (c1 - c0) - 1.0).clamp(-1.0, 1.0);
        }
        let e = match self.dim() {
            1 => cell[0],
            _ => cell[1] * self.divisions[0] + cell[0],
        };
        Ok((e, local))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};
    use proptest::prelude::*;

    #[test]
    fn interval_lattice() {
        let mesh = Mesh::uniform(Domain::interval(-1.0, 1.0).unwrap(), &[4]).unwrap();
        assert_eq!(mesh.num_nodes(), 5);
        assert_eq!(mesh.num_elements(), 4);
        let coords: Vec<f64> = (0..5).map(|k| mesh.node_coord(k)[0]).collect();
        assert_eq!(coords, vec![-1.0, -0.5, 0.0, 0.5, 1.0]);
        assert_eq!(mesh.boundary_nodes(), &[0, 4]);
    }

    #[test]
    fn square_lattice_counts() {
        // Edge length 1/25 on [-1, 1]^2 means 50 divisions per axis.
        let mesh = Mesh::uniform(
            Domain::rectangle((-1.0, 1.0), (-1.0, 1.0)).unwrap(),
            &[50, 50],
        )
        .unwrap();
        assert_eq!(mesh.num_nodes(), 51 * 51);
        assert_eq!(mesh.num_elements(), 2500);
        assert_abs_diff_eq!(mesh.edge_length(0), 1.0 / 25.0, epsilon = 1e-15);
    }

    #[test]
    fn element_diameter_is_sqrt2_times_edge() {
        let mesh = Mesh::uniform(
            Domain::rectangle((-1.0, 1.0), (-1.0, 1.0)).unwrap(),
            &[10, 10],
        )
        .unwrap();
        assert_relative_eq!(
            mesh.diameter(),
            2.0_f64.sqrt() / 5.0,
            max_relative = 1e-14
        );
    }

    #[test]
    fn zero_divisions_rejected() {
        assert!(Mesh::uniform(Domain::interval(0.0, 1.0).unwrap(), &[0]).is_err());
        assert!(Domain::interval(1.0, 1.0).is_err());
    }

    #[test]
    fn locate_midpoint_of_first_element() {
        let mesh = Mesh::uniform(Domain::interval(-1.0, 1.0).unwrap(), &[4]).unwrap();
        let (e, xi) = mesh.locate_point(&[-0.75]).unwrap();
        assert_eq!(e, 0);
        assert_abs_diff_eq!(xi[0], 0.0, epsilon = 1e-14);
    }

    #[test]
    fn locate_corner_gives_corner_local_coords() {
        let mesh = Mesh::uniform(
            Domain::rectangle((-1.0, 1.0), (-1.0, 1.0)).unwrap(),
            &[4, 4],
        )
        .unwrap();
        let (e, xi) = mesh.locate_point(&[1.0, 1.0]).unwrap();
        assert_eq!(e, mesh.num_elements() - 1);
        assert_eq!(xi, [1.0, 1.0]);
        let (e, xi) = mesh.locate_point(&[-1.0, -1.0]).unwrap();
        assert_eq!(e, 0);
        assert_eq!(xi, [-1.0, -1.0]);
    }

    #[test]
    fn face_points_resolve_to_lower_element() {
        let mesh = Mesh::uniform(Domain::interval(0.0, 1.0).unwrap(), &[4]).unwrap();
        let (e, xi) = mesh.locate_point(&[0.25]).unwrap();
        assert_eq!(e, 0);
        assert_abs_diff_eq!(xi[0], 1.0, epsilon = 1e-14);
    }

    #[test]
    fn out_of_domain_rejected() {
        let mesh = Mesh::uniform(Domain::interval(0.0, 1.0).unwrap(), &[4]).unwrap();
        assert!(mesh.locate_point(&[1.1]).is_err());
        assert!(mesh.locate_point(&[-1e-9]).is_err());
        // Within the 1e-12 tolerance band the point snaps inside.
        assert!(mesh.locate_point(&[1.0 + 1e-13]).is_ok());
    }

    #[test]
    fn element_measures_sum_to_domain_measure() {
        let mesh = Mesh::uniform(
            Domain::rectangle((-1.0, 1.0), (0.0, 3.0)).unwrap(),
            &[7, 5],
        )
        .unwrap();
        let total: f64 = (0..mesh.num_elements())
            .map(|_| mesh.element_measure())
            .sum();
        assert_relative_eq!(total, mesh.domain().measure(), max_relative = 1e-12);
    }

    #[test]
    fn boundary_classification_matches_coordinate_test() {
        let mesh = Mesh::uniform(
            Domain::rectangle((-1.0, 1.0), (-1.0, 1.0)).unwrap(),
            &[6, 9],
        )
        .unwrap();
        for k in 0..mesh.num_nodes() {
            let p = mesh.node_coord(k);
            let on_bdry = (0..2).any(|a| {
                let (lo, hi) = mesh.domain().bounds(a);
                (p[a] - lo).abs() <= 1e-14 || (p[a] - hi).abs() <= 1e-14
            });
            assert_eq!(mesh.is_boundary_node(k), on_bdry, "node {k}");
        }
    }

    proptest! {
        #[test]
        fn locate_round_trip_2d(px in -1.0f64..1.0, py in -1.0f64..1.0) {
            let mesh = Mesh::uniform(
                Domain::rectangle((-1.0, 1.0), (-1.0, 1.0)).unwrap(),
                &[9, 7],
            )
            .unwrap();
            let (e, xi) = mesh.locate_point(&[px, py]).unwrap();
            let q = mesh.map_to_physical(e, &xi[..2]);
            prop_assert!((q[0] - px).abs() <= 1e-12);
            prop_assert!((q[1] - py).abs() <= 1e-12);
        }

        #[test]
        fn map_then_locate_contains_same_point(e in 0usize..35, xi in -1.0f64..1.0, eta in -1.0f64..1.0) {
            let mesh = Mesh::uniform(
                Domain::rectangle((0.0, 2.0), (0.0, 1.0)).unwrap(),
                &[7, 5],
            )
            .unwrap();
            let p = mesh.map_to_physical(e, &[xi, eta]);
            let (e2, xi2) = mesh.locate_point(&p).unwrap();
            let q = mesh.map_to_physical(e2, &xi2[..2]);
            prop_assert!((q[0] - p[0]).abs() <= 1e-12);
            prop_assert!((q[1] - p[1]).abs() <= 1e-12);
        }
    }
}
