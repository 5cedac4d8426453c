//! Spatial mesh, angular quadrature and material data for slab problems.
//!
//! Everything here is immutable once built and may be shared freely between
//! worker threads.

use crate::error::GridError;

/// One-dimensional slab mesh described by its cell edges.
#[derive(Debug, Clone, PartialEq)]
pub struct SlabMesh {
    edges: Vec<f64>,
    widths: Vec<f64>,
    centers: Vec<f64>,
}

impl SlabMesh {
    /// Builds a mesh from strictly increasing edge positions `x_0 < ... < x_I`.
    pub fn from_edges(edges: Vec<f64>) -> Result<Self, GridError> {
        if edges.len() < 2 {
            return Err(GridError::EmptyMesh);
        }
        if edges.iter().any(|x| !x.is_finite()) {
            return Err(GridError::NonFinite("mesh edge"));
        }
        for (i, pair) in edges.windows(2).enumerate() {
            if pair[1] <= pair[0] {
                return Err(GridError::NonIncreasingEdges { cell: i });
            }
        }
        let widths = edges.windows(2).map(|p| p[1] - p[0]).collect();
        let centers = edges.windows(2).map(|p| 0.5 * (p[1] + p[0])).collect();
        Ok(Self {
            edges,
            widths,
            centers,
        })
    }

    /// Uniform mesh on `[0, length]` with `cells` equal intervals.
    pub fn uniform(length: f64, cells: usize) -> Result<Self, GridError> {
        if !(length > 0.0) || !length.is_finite() {
            return Err(GridError::NonPositiveLength(length));
        }
        if cells == 0 {
            return Err(GridError::EmptyMesh);
        }
        let width = length / cells as f64;
        let mut edges: Vec<f64> = (0..cells).map(|i| i as f64 * width).collect();
        edges.push(length);
        Self::from_edges(edges)
    }

    pub fn cell_count(&self) -> usize {
        self.widths.len()
    }

    pub fn edges(&self) -> &[f64] {
        &self.edges
    }

    pub fn widths(&self) -> &[f64] {
        &self.widths
    }

    pub fn centers(&self) -> &[f64] {
        &self.centers
    }

    pub fn length(&self) -> f64 {
        self.edges[self.edges.len() - 1] - self.edges[0]
    }
}

/// Symmetric discrete-ordinates set on `[-1, 1]`.
///
/// Directions are stored in ascending order, so the first `M/2` entries are
/// the negative half-range and the remainder the positive half-range.
#[derive(Debug, Clone, PartialEq)]
pub struct AngularQuadrature {
    directions: Vec<f64>,
    weights: Vec<f64>,
}

impl AngularQuadrature {
    /// Double Gauss-Legendre set: a `points_per_half`-point Gauss rule mapped
    /// onto each of `[-1, 0]` and `[0, 1]`.
    pub fn double_gauss(points_per_half: usize) -> Result<Self, GridError> {
        if points_per_half == 0 {
            return Err(GridError::EmptyQuadrature);
        }
        let (nodes, weights) = gauss_legendre(points_per_half);
        let n = points_per_half;
        let mut mu = vec![0.0; 2 * n];
        let mut w = vec![0.0; 2 * n];
        for (k, (&x, &wk)) in nodes.iter().zip(&weights).enumerate() {
            // x in [-1, 1] ascending maps to (x + 1)/2 on [0, 1]
            let pos = 0.5 * (x + 1.0);
            mu[n + k] = pos;
            w[n + k] = 0.5 * wk;
            mu[n - 1 - k] = -pos;
            w[n - 1 - k] = 0.5 * wk;
        }
        Ok(Self {
            directions: mu,
            weights: w,
        })
    }

    pub fn len(&self) -> usize {
        self.directions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.directions.is_empty()
    }

    pub fn directions(&self) -> &[f64] {
        &self.directions
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// `Σ w_m μ_m^p` over the whole set.
    pub fn moment(&self, power: i32) -> f64 {
        self.directions
            .iter()
            .zip(&self.weights)
            .map(|(mu, w)| w * mu.powi(power))
            .sum()
    }

    /// `Σ w_m μ_m^p` restricted to one half-range.
    pub fn half_moment(&self, power: i32, positive: bool) -> f64 {
        self.directions
            .iter()
            .zip(&self.weights)
            .filter(|(mu, _)| (**mu > 0.0) == positive)
            .map(|(mu, w)| w * mu.powi(power))
            .sum()
    }
}

/// Gauss-Legendre nodes (ascending) and weights on `[-1, 1]`, found by
/// Newton iteration on `P_n` from Chebyshev starting guesses.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    const TOL: f64 = 1e-15;
    const MAX_ITER: usize = 100;

    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let nf = n as f64;
    for k in 0..n.div_ceil(2) {
        let mut x = (std::f64::consts::PI * (k as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..MAX_ITER {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() <= TOL {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, x);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        // x here is the k-th largest root
        nodes[n - 1 - k] = x;
        nodes[k] = -x;
        weights[n - 1 - k] = w;
        weights[k] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    (nodes, weights)
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Per-cell cross sections and source moments.
///
/// Data are constant in time; solvers read them through [`MaterialField::cell`]
/// with the step index so time-dependent data can be slotted in later.
#[derive(Debug, Clone, PartialEq)]
pub struct MaterialField {
    sigma_t: Vec<f64>,
    sigma_s: Vec<f64>,
    source_avg: Vec<f64>,
    source_slope: Vec<f64>,
}

/// Material data of one cell at one time level.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CellMaterial {
    pub sigma_t: f64,
    pub sigma_s: f64,
    /// Cell average of the external source.
    pub source_avg: f64,
    /// First spatial moment of the external source.
    pub source_slope: f64,
}

impl CellMaterial {
    pub fn sigma_a(&self) -> f64 {
        self.sigma_t - self.sigma_s
    }
}

impl MaterialField {
    pub fn new(
        sigma_t: Vec<f64>,
        sigma_s: Vec<f64>,
        source_avg: Vec<f64>,
        source_slope: Vec<f64>,
    ) -> Result<Self, GridError> {
        let n = sigma_t.len();
        if sigma_s.len() != n || source_avg.len() != n || source_slope.len() != n {
            return Err(GridError::LengthMismatch {
                what: "material field",
                expected: n,
                found: sigma_s.len().min(source_avg.len()).min(source_slope.len()),
            });
        }
        for (i, (&st, &ss)) in sigma_t.iter().zip(&sigma_s).enumerate() {
            if !st.is_finite() || !ss.is_finite() || !(ss >= 0.0) || ss > st {
                return Err(GridError::InvalidCrossSections {
                    cell: i,
                    sigma_t: st,
                    sigma_s: ss,
                });
            }
        }
        if source_avg
            .iter()
            .chain(&source_slope)
            .any(|q| !q.is_finite())
        {
            return Err(GridError::NonFinite("source"));
        }
        Ok(Self {
            sigma_t,
            sigma_s,
            source_avg,
            source_slope,
        })
    }

    /// Spatially uniform material; a constant source has zero first moment.
    pub fn uniform(
        cells: usize,
        sigma_t: f64,
        sigma_s: f64,
        source: f64,
    ) -> Result<Self, GridError> {
        Self::new(
            vec![sigma_t; cells],
            vec![sigma_s; cells],
            vec![source; cells],
            vec![0.0; cells],
        )
    }

    pub fn cell_count(&self) -> usize {
        self.sigma_t.len()
    }

    pub fn cell(&self, cell: usize, _step: usize) -> CellMaterial {
        CellMaterial {
            sigma_t: self.sigma_t[cell],
            sigma_s: self.sigma_s[cell],
            source_avg: self.source_avg[cell],
            source_slope: self.source_slope[cell],
        }
    }
}

/// Incoming angular flux on the two slab faces.
///
/// Values are constant in time; as with materials, access goes through the
/// step index.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundarySource {
    /// `ψ_in` at `x = 0` for `μ > 0`.
    pub left: f64,
    /// `ψ_in` at `x = X` for `μ < 0`.
    pub right: f64,
}

impl BoundarySource {
    pub fn new(left: f64, right: f64) -> Self {
        Self { left, right }
    }

    pub fn vacuum() -> Self {
        Self::new(0.0, 0.0)
    }

    /// Per-direction incoming values at time level `step`: each direction
    /// gets the value on its upwind face.
    pub fn incoming(&self, quad: &AngularQuadrature, _step: usize) -> Vec<f64> {
        quad.directions()
            .iter()
            .map(|&mu| if mu > 0.0 { self.left } else { self.right })
            .collect()
    }
}

/// Initial angular flux as per-cell, per-direction moments.
#[derive(Debug, Clone, PartialEq)]
pub struct InitialCondition {
    /// Direction-major `ψ̄`, index `m * I + i`.
    pub cell_avg: Vec<f64>,
    /// Direction-major `ψ̂`, same layout.
    pub cell_slope: Vec<f64>,
}

impl InitialCondition {
    /// Spatially flat, isotropic initial flux.
    pub fn constant(value: f64, cells: usize, directions: usize) -> Self {
        Self {
            cell_avg: vec![value; cells * directions],
            cell_slope: vec![0.0; cells * directions],
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_mesh_widths() {
        let mesh = SlabMesh::uniform(5.0, 100).unwrap();
        assert_eq!(mesh.cell_count(), 100);
        assert!(mesh.widths().iter().all(|w| (w - 0.05).abs() < 1e-15));
        let mesh = SlabMesh::uniform(5.0, 25).unwrap();
        assert!(mesh.widths().iter().all(|w| (w - 0.2).abs() < 1e-15));
        let mesh = SlabMesh::uniform(1.0, 1).unwrap();
        assert_eq!(mesh.edges(), &[0.0, 1.0]);
        assert_eq!(mesh.centers(), &[0.5]);
    }

    #[test]
    fn mesh_rejects_bad_input() {
        assert!(SlabMesh::uniform(0.0, 4).is_err());
        assert!(SlabMesh::uniform(-1.0, 4).is_err());
        assert!(SlabMesh::uniform(1.0, 0).is_err());
        assert!(SlabMesh::from_edges(vec![0.0, 1.0, 1.0]).is_err());
    }

    #[test]
    fn edges_rebuild_from_widths() {
        let mesh = SlabMesh::from_edges(vec![0.0, 0.1, 0.35, 0.4, 1.3]).unwrap();
        let mut x = mesh.edges()[0];
        for (i, w) in mesh.widths().iter().enumerate() {
            x += w;
            assert!((x - mesh.edges()[i + 1]).abs() < 1e-14);
            assert_eq!(
                mesh.centers()[i],
                0.5 * (mesh.edges()[i] + mesh.edges()[i + 1])
            );
        }
    }

    #[test]
    fn one_point_double_gauss_is_midpoint() {
        let q = AngularQuadrature::double_gauss(1).unwrap();
        assert_eq!(q.directions(), &[-0.5, 0.5]);
        assert_eq!(q.weights(), &[1.0, 1.0]);
    }

    #[test]
    fn double_s4_has_eight_directions() {
        let q = AngularQuadrature::double_gauss(4).unwrap();
        assert_eq!(q.len(), 8);
        assert!(q.directions().iter().all(|&mu| mu != 0.0 && mu.abs() < 1.0));
        for m in 0..8 {
            assert_eq!(q.directions()[m], -q.directions()[7 - m]);
            assert_eq!(q.weights()[m], q.weights()[7 - m]);
        }
    }

    #[test]
    fn quadrature_moments() {
        for n in 1..=12 {
            let q = AngularQuadrature::double_gauss(n).unwrap();
            assert!((q.moment(0) - 2.0).abs() < 1e-14, "n={n}");
            assert!(q.moment(1).abs() < 1e-14, "n={n}");
            if n >= 2 {
                assert!((q.moment(2) - 2.0 / 3.0).abs() < 1e-14, "n={n}");
                assert!((q.half_moment(1, true) - 0.5).abs() < 1e-14);
                assert!((q.half_moment(3, true) - 0.25).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn gauss_legendre_known_two_point() {
        let (x, w) = gauss_legendre(2);
        let r = 1.0 / 3f64.sqrt();
        assert!((x[0] + r).abs() < 1e-15 && (x[1] - r).abs() < 1e-15);
        assert!((w[0] - 1.0).abs() < 1e-15 && (w[1] - 1.0).abs() < 1e-15);
        let (x, w) = gauss_legendre(3);
        assert_eq!(x[1], 0.0);
        assert!((w[1] - 8.0 / 9.0).abs() < 1e-15);
    }

    #[test]
    fn material_validation() {
        assert!(MaterialField::uniform(3, 1.0, 2.0, 0.0).is_err());
        assert!(MaterialField::uniform(3, 1.0, -0.1, 0.0).is_err());
        let m = MaterialField::uniform(3, 100.0, 99.99, 0.01).unwrap();
        let c = m.cell(1, 7);
        assert!((c.sigma_a() - 0.01).abs() < 1e-12);
    }

    #[test]
    fn boundary_incoming_by_half_range() {
        let q = AngularQuadrature::double_gauss(2).unwrap();
        let b = BoundarySource::new(100.0, 0.0);
        assert_eq!(b.incoming(&q, 0), vec![0.0, 0.0, 100.0, 100.0]);
    }
}
