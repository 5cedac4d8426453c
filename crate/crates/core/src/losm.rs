//! Low-order second-moment equations.
//!
//! The discrete system is the set of `{1, μ}` angular moments of the cell
//! average and first-moment transport equations. Per cell the unknowns are
//! `u = (φ̄, J̄, φ̂, Ĵ)`, and rows are ordered the same way:
//!
//! ```text
//! (τ + σ_aΔx) φ̄ + J_R − J_L                      = Δx q̄ + τ φ̄ⁿ⁻¹
//! (τ + σ_tΔx) J̄ + (φ_R − φ_L)/3                  = τ J̄ⁿ⁻¹ + F_R − F_L
//! (τ + σ_aΔx) φ̂ + 3(J_R + J_L) − 6 J̄            = Δx q̂ + τ φ̂ⁿ⁻¹
//! (τ + σ_tΔx) Ĵ + φ_R + φ_L − 2 φ̄                = τ Ĵⁿ⁻¹ + 3(F_R + F_L) − 6 F̄
//! ```
//!
//! with `τ = Δx/(vΔt)` and `J_{L,R}`, `φ_{L,R}` the edge current and edge
//! scalar flux. Edge values are closed by a surrogate in the adjacent
//! low-order corner values plus an additive correction computed from the
//! latest transport iterate, so the transport moments are an exact fixed
//! point of the system. Corrections and `F` only enter the right-hand side.

use nalgebra::{Matrix4, Vector4};

use crate::error::LowOrderError;
use crate::grid::{AngularQuadrature, MaterialField, SlabMesh};
use crate::transport::{ClosureFactors, TransportState};

/// Scalar flux and current moments per cell.
#[derive(Debug, Clone, PartialEq)]
pub struct LowOrderState {
    pub avg_flux: Vec<f64>,
    pub slope_flux: Vec<f64>,
    pub avg_current: Vec<f64>,
    pub slope_current: Vec<f64>,
}

impl LowOrderState {
    pub fn zeros(cells: usize) -> Self {
        Self {
            avg_flux: vec![0.0; cells],
            slope_flux: vec![0.0; cells],
            avg_current: vec![0.0; cells],
            slope_current: vec![0.0; cells],
        }
    }

    pub fn cells(&self) -> usize {
        self.avg_flux.len()
    }

    pub fn flux_left(&self, cell: usize) -> f64 {
        self.avg_flux[cell] - self.slope_flux[cell]
    }

    pub fn flux_right(&self, cell: usize) -> f64 {
        self.avg_flux[cell] + self.slope_flux[cell]
    }

    pub fn is_finite(&self) -> bool {
        self.avg_flux
            .iter()
            .chain(&self.slope_flux)
            .chain(&self.avg_current)
            .chain(&self.slope_current)
            .all(|v| v.is_finite())
    }

    pub fn value_count(&self) -> usize {
        4 * self.cells()
    }

    fn unknowns(&self, cell: usize) -> Vector4<f64> {
        Vector4::new(
            self.avg_flux[cell],
            self.avg_current[cell],
            self.slope_flux[cell],
            self.slope_current[cell],
        )
    }
}

/// Additive edge closures: exact transport edge moment minus its surrogate.
#[derive(Debug, Clone, PartialEq)]
pub struct ConsistencyCorrections {
    /// One per edge (`cells + 1`).
    pub edge_current: Vec<f64>,
    /// One per edge (`cells + 1`).
    pub edge_flux: Vec<f64>,
}

impl ConsistencyCorrections {
    pub fn zeros(cells: usize) -> Self {
        Self {
            edge_current: vec![0.0; cells + 1],
            edge_flux: vec![0.0; cells + 1],
        }
    }

    pub fn value_count(&self) -> usize {
        self.edge_current.len() + self.edge_flux.len()
    }
}

/// Half-range angular moments of the prescribed boundary inflow.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct InflowMoments {
    /// `Σ_{μ>0} w ψ_in` at `x = 0`.
    pub left_flux: f64,
    /// `Σ_{μ>0} w μ ψ_in` at `x = 0`.
    pub left_current: f64,
    /// `Σ_{μ<0} w ψ_in` at `x = X`.
    pub right_flux: f64,
    /// `Σ_{μ<0} w μ ψ_in` at `x = X`.
    pub right_current: f64,
}

impl InflowMoments {
    pub fn new(quadrature: &AngularQuadrature, incoming: &[f64]) -> Self {
        let mut out = Self::default();
        for ((&mu, &w), &psi) in quadrature
            .directions()
            .iter()
            .zip(quadrature.weights())
            .zip(incoming)
        {
            if mu > 0.0 {
                out.left_flux += w * psi;
                out.left_current += w * mu * psi;
            } else {
                out.right_flux += w * psi;
                out.right_current += w * mu * psi;
            }
        }
        out
    }
}

/// Linear edge closure: `value = left·u_{e−1} + right·u_e + constant`.
#[derive(Debug, Clone, Copy, PartialEq)]
struct EdgeStencil {
    current_left: Vector4<f64>,
    current_right: Vector4<f64>,
    flux_left: Vector4<f64>,
    flux_right: Vector4<f64>,
}

/// Surrogate coefficients for every edge of a mesh.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Surrogate {
    cells: usize,
    interior: EdgeStencil,
    left_boundary: EdgeStencil,
    right_boundary: EdgeStencil,
}

impl Surrogate {
    fn new(quadrature: &AngularQuadrature, cells: usize) -> Self {
        let zero = Vector4::zeros();
        // Each half-range of an edge takes the P1 expansion ψ = (φ + 3μJ)/2
        // of the upwind cell's corner moments.
        let leaving = |positive: bool, corner_sign: f64| {
            let h0 = quadrature.half_moment(0, positive);
            let h1 = quadrature.half_moment(1, positive);
            let h2 = quadrature.half_moment(2, positive);
            let current = Vector4::new(
                0.5 * h1,
                1.5 * h2,
                corner_sign * 0.5 * h1,
                corner_sign * 1.5 * h2,
            );
            let flux = Vector4::new(
                0.5 * h0,
                1.5 * h1,
                corner_sign * 0.5 * h0,
                corner_sign * 1.5 * h1,
            );
            (current, flux)
        };
        let (cl, fl) = leaving(false, -1.0);
        let left_boundary = EdgeStencil {
            current_left: zero,
            current_right: cl,
            flux_left: zero,
            flux_right: fl,
        };
        let (cr, fr) = leaving(true, 1.0);
        let right_boundary = EdgeStencil {
            current_left: cr,
            current_right: zero,
            flux_left: fr,
            flux_right: zero,
        };
        let interior = EdgeStencil {
            current_left: cr,
            current_right: cl,
            flux_left: fr,
            flux_right: fl,
        };
        Self {
            cells,
            interior,
            left_boundary,
            right_boundary,
        }
    }

    fn edge(&self, edge: usize) -> &EdgeStencil {
        if edge == 0 {
            &self.left_boundary
        } else if edge == self.cells {
            &self.right_boundary
        } else {
            &self.interior
        }
    }

    /// `(J, φ)` of the surrogate at `edge`, without constants.
    fn evaluate(&self, edge: usize, state: &LowOrderState) -> (f64, f64) {
        let s = self.edge(edge);
        let mut current = 0.0;
        let mut flux = 0.0;
        if edge > 0 {
            let u = state.unknowns(edge - 1);
            current += s.current_left.dot(&u);
            flux += s.flux_left.dot(&u);
        }
        if edge < self.cells {
            let u = state.unknowns(edge);
            current += s.current_right.dot(&u);
            flux += s.flux_right.dot(&u);
        }
        (current, flux)
    }
}

/// Quadrature moments `φ = Σwψ`, `J = Σwμψ` of a transport state.
pub fn transport_moments(state: &TransportState, quadrature: &AngularQuadrature) -> LowOrderState {
    let cells = state.cells();
    let mut out = LowOrderState::zeros(cells);
    for (m, (&mu, &w)) in quadrature
        .directions()
        .iter()
        .zip(quadrature.weights())
        .enumerate()
    {
        for i in 0..cells {
            let a = state.avg(m, i);
            let s = state.slope(m, i);
            out.avg_flux[i] += w * a;
            out.slope_flux[i] += w * s;
            out.avg_current[i] += w * mu * a;
            out.slope_current[i] += w * mu * s;
        }
    }
    out
}

/// Exact upwinded edge moments `(J^e, φ^e)` of a transport state, including
/// the prescribed inflow on boundary edges.
pub fn transport_edge_moments(
    state: &TransportState,
    quadrature: &AngularQuadrature,
    incoming: &[f64],
) -> (Vec<f64>, Vec<f64>) {
    let cells = state.cells();
    let mut current = vec![0.0; cells + 1];
    let mut flux = vec![0.0; cells + 1];
    for (m, (&mu, &w)) in quadrature
        .directions()
        .iter()
        .zip(quadrature.weights())
        .enumerate()
    {
        for e in 0..=cells {
            let psi = state.edge_flux(mu, m, e, incoming[m]);
            current[e] += w * mu * psi;
            flux[e] += w * psi;
        }
    }
    (current, flux)
}

/// Corrections that make the surrogate edge closures exact for `state`.
pub fn compute_corrections(
    state: &TransportState,
    quadrature: &AngularQuadrature,
    incoming: &[f64],
) -> ConsistencyCorrections {
    let cells = state.cells();
    let surrogate = Surrogate::new(quadrature, cells);
    let moments = transport_moments(state, quadrature);
    let inflow = InflowMoments::new(quadrature, incoming);
    let (mut current, mut flux) = transport_edge_moments(state, quadrature, incoming);
    current[0] -= inflow.left_current;
    flux[0] -= inflow.left_flux;
    current[cells] -= inflow.right_current;
    flux[cells] -= inflow.right_flux;
    for e in 0..=cells {
        let (js, fs) = surrogate.evaluate(e, &moments);
        current[e] -= js;
        flux[e] -= fs;
    }
    ConsistencyCorrections {
        edge_current: current,
        edge_flux: flux,
    }
}

/// Everything the low-order assembly reads.
#[derive(Debug, Clone, Copy)]
pub struct LowOrderInputs<'a> {
    pub mesh: &'a SlabMesh,
    pub quadrature: &'a AngularQuadrature,
    pub materials: &'a MaterialField,
    pub step: usize,
    pub inflow: InflowMoments,
    pub previous: &'a LowOrderState,
    pub closure: &'a ClosureFactors,
    pub corrections: &'a ConsistencyCorrections,
    pub dt: f64,
    pub speed: f64,
}

/// Block-tridiagonal system, one 4×4 block row per cell.
#[derive(Debug, Clone, PartialEq)]
pub struct LowOrderSystem {
    /// Coupling to the left neighbour; entry 0 is unused.
    pub lower: Vec<Matrix4<f64>>,
    pub diag: Vec<Matrix4<f64>>,
    /// Coupling to the right neighbour; last entry unused.
    pub upper: Vec<Matrix4<f64>>,
    pub rhs: Vec<Vector4<f64>>,
}

// Row weights of the edge current and edge flux in the four cell rows.
const LEFT_EDGE_CURRENT: [f64; 4] = [-1.0, 0.0, 3.0, 0.0];
const LEFT_EDGE_FLUX: [f64; 4] = [0.0, -1.0 / 3.0, 0.0, 1.0];
const RIGHT_EDGE_CURRENT: [f64; 4] = [1.0, 0.0, 3.0, 0.0];
const RIGHT_EDGE_FLUX: [f64; 4] = [0.0, 1.0 / 3.0, 0.0, 1.0];

fn edge_constants(inputs: &LowOrderInputs<'_>, edge: usize) -> (f64, f64) {
    let cells = inputs.mesh.cell_count();
    let mut current = inputs.corrections.edge_current[edge];
    let mut flux = inputs.corrections.edge_flux[edge];
    if edge == 0 {
        current += inputs.inflow.left_current;
        flux += inputs.inflow.left_flux;
    }
    if edge == cells {
        current += inputs.inflow.right_current;
        flux += inputs.inflow.right_flux;
    }
    (current, flux)
}

fn couple(
    weights_current: &[f64; 4],
    weights_flux: &[f64; 4],
    current: &Vector4<f64>,
    flux: &Vector4<f64>,
) -> Matrix4<f64> {
    Vector4::from_row_slice(weights_current) * current.transpose()
        + Vector4::from_row_slice(weights_flux) * flux.transpose()
}

/// Builds the block system for one low-order solve.
pub fn assemble(inputs: &LowOrderInputs<'_>) -> LowOrderSystem {
    let cells = inputs.mesh.cell_count();
    let surrogate = Surrogate::new(inputs.quadrature, cells);
    let widths = inputs.mesh.widths();
    let prev = inputs.previous;
    let f = inputs.closure;

    let mut lower = vec![Matrix4::zeros(); cells];
    let mut diag = vec![Matrix4::zeros(); cells];
    let mut upper = vec![Matrix4::zeros(); cells];
    let mut rhs = vec![Vector4::zeros(); cells];

    for c in 0..cells {
        let mat = inputs.materials.cell(c, inputs.step);
        let dx = widths[c];
        let tau = dx / (inputs.speed * inputs.dt);
        let absorb = tau + mat.sigma_a() * dx;
        let remove = tau + mat.sigma_t * dx;

        let d = &mut diag[c];
        d[(0, 0)] = absorb;
        d[(1, 1)] = remove;
        d[(2, 2)] = absorb;
        d[(2, 1)] = -6.0;
        d[(3, 3)] = remove;
        d[(3, 0)] = -2.0;

        let mut b = Vector4::new(
            dx * mat.source_avg + tau * prev.avg_flux[c],
            tau * prev.avg_current[c] + f.edge[c + 1] - f.edge[c],
            dx * mat.source_slope + tau * prev.slope_flux[c],
            tau * prev.slope_current[c] + 3.0 * (f.edge[c + 1] + f.edge[c]) - 6.0 * f.cell_avg[c],
        );

        // left edge of cell c is edge c; this cell is its right neighbour
        let left = surrogate.edge(c);
        diag[c] += couple(
            &LEFT_EDGE_CURRENT,
            &LEFT_EDGE_FLUX,
            &left.current_right,
            &left.flux_right,
        );
        if c > 0 {
            lower[c] = couple(
                &LEFT_EDGE_CURRENT,
                &LEFT_EDGE_FLUX,
                &left.current_left,
                &left.flux_left,
            );
        }
        let (jc, fc) = edge_constants(inputs, c);
        for r in 0..4 {
            b[r] -= LEFT_EDGE_CURRENT[r] * jc + LEFT_EDGE_FLUX[r] * fc;
        }

        let right = surrogate.edge(c + 1);
        diag[c] += couple(
            &RIGHT_EDGE_CURRENT,
            &RIGHT_EDGE_FLUX,
            &right.current_left,
            &right.flux_left,
        );
        if c + 1 < cells {
            upper[c] = couple(
                &RIGHT_EDGE_CURRENT,
                &RIGHT_EDGE_FLUX,
                &right.current_right,
                &right.flux_right,
            );
        }
        let (jc, fc) = edge_constants(inputs, c + 1);
        for r in 0..4 {
            b[r] -= RIGHT_EDGE_CURRENT[r] * jc + RIGHT_EDGE_FLUX[r] * fc;
        }
        rhs[c] = b;
    }
    LowOrderSystem {
        lower,
        diag,
        upper,
        rhs,
    }
}

impl LowOrderSystem {
    pub fn cells(&self) -> usize {
        self.diag.len()
    }

    /// Block-Thomas elimination.
    pub fn solve(&self) -> Result<LowOrderState, LowOrderError> {
        let n = self.cells();
        let mut inv_diag: Vec<Matrix4<f64>> = Vec::with_capacity(n);
        let mut reduced_rhs: Vec<Vector4<f64>> = Vec::with_capacity(n);
        for c in 0..n {
            let (d, r) = if c == 0 {
                (self.diag[0], self.rhs[0])
            } else {
                let w = self.lower[c] * inv_diag[c - 1];
                (
                    self.diag[c] - w * self.upper[c - 1],
                    self.rhs[c] - w * reduced_rhs[c - 1],
                )
            };
            let inv = d
                .try_inverse()
                .ok_or(LowOrderError::SingularBlock { cell: c })?;
            if !inv.iter().all(|v| v.is_finite()) {
                return Err(LowOrderError::SingularBlock { cell: c });
            }
            inv_diag.push(inv);
            reduced_rhs.push(r);
        }
        let mut x = vec![Vector4::zeros(); n];
        for c in (0..n).rev() {
            let r = if c + 1 < n {
                reduced_rhs[c] - self.upper[c] * x[c + 1]
            } else {
                reduced_rhs[c]
            };
            x[c] = inv_diag[c] * r;
            if !x[c].iter().all(|v| v.is_finite()) {
                return Err(LowOrderError::NonFinite { cell: c });
            }
        }
        let mut out = LowOrderState::zeros(n);
        for (c, u) in x.iter().enumerate() {
            out.avg_flux[c] = u[0];
            out.avg_current[c] = u[1];
            out.slope_flux[c] = u[2];
            out.slope_current[c] = u[3];
        }
        Ok(out)
    }

    /// Per-cell residual `A u − b` of a candidate state.
    pub fn residual(&self, state: &LowOrderState) -> Vec<Vector4<f64>> {
        let n = self.cells();
        (0..n)
            .map(|c| {
                let mut r = self.diag[c] * state.unknowns(c) - self.rhs[c];
                if c > 0 {
                    r += self.lower[c] * state.unknowns(c - 1);
                }
                if c + 1 < n {
                    r += self.upper[c] * state.unknowns(c + 1);
                }
                r
            })
            .collect()
    }
}

/// Assembles and solves the low-order system.
pub fn assemble_and_solve(inputs: &LowOrderInputs<'_>) -> Result<LowOrderState, LowOrderError> {
    assemble(inputs).solve()
}

/// Edge currents `J^e` implied by a low-order state under the closures of
/// `inputs` (surrogate, corrections and inflow).
pub fn edge_currents(inputs: &LowOrderInputs<'_>, state: &LowOrderState) -> Vec<f64> {
    let cells = inputs.mesh.cell_count();
    let surrogate = Surrogate::new(inputs.quadrature, cells);
    (0..=cells)
        .map(|e| surrogate.evaluate(e, state).0 + edge_constants(inputs, e).0)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{BoundarySource, SlabMesh};

    fn setup(cells: usize) -> (SlabMesh, AngularQuadrature) {
        (
            SlabMesh::uniform(2.0, cells).unwrap(),
            AngularQuadrature::double_gauss(4).unwrap(),
        )
    }

    fn isotropic(cells: usize, value: f64) -> TransportState {
        TransportState::from_parts(cells, 8, vec![value; 8 * cells], vec![0.0; 8 * cells])
    }

    #[test]
    fn transport_moment_identities() {
        let q = AngularQuadrature::double_gauss(4).unwrap();
        let lo = transport_moments(&isotropic(3, 1.5), &q);
        for i in 0..3 {
            assert!((lo.avg_flux[i] - 3.0).abs() < 1e-14);
            assert!(lo.avg_current[i].abs() < 1e-14);
        }
        let cells = 2;
        let mu = q.directions();
        let avg: Vec<f64> = (0..8)
            .flat_map(|m| std::iter::repeat_n(mu[m], cells))
            .collect();
        let lo = transport_moments(
            &TransportState::from_parts(cells, 8, avg, vec![0.0; 16]),
            &q,
        );
        assert!((lo.avg_current[0] - 2.0 / 3.0).abs() < 1e-14);
        let lo = transport_moments(&TransportState::zeros(4, 8), &q);
        assert_eq!(lo, LowOrderState::zeros(4));
    }

    #[test]
    fn isotropic_state_needs_no_corrections() {
        let (_, q) = setup(5);
        let state = isotropic(5, 2.0);
        let c = compute_corrections(&state, &q, &[2.0; 8]);
        for v in c.edge_current.iter().chain(&c.edge_flux) {
            assert!(v.abs() < 1e-12, "{v}");
        }
        let c = compute_corrections(&TransportState::zeros(5, 8), &q, &[0.0; 8]);
        assert!(c.edge_current.iter().chain(&c.edge_flux).all(|&v| v == 0.0));
    }

    #[test]
    fn single_direction_correction() {
        // Only one μ > 0 direction carries flux. The exact interior edge
        // moments come from the upwind cell's right corner; the surrogate
        // takes the half-range P1 expansion of both adjacent corners.
        let q = AngularQuadrature::double_gauss(4).unwrap();
        let cells = 3;
        let m = 6;
        let (mu, w) = (q.directions()[m], q.weights()[m]);
        let mut avg = vec![0.0; 8 * cells];
        let mut slope = vec![0.0; 8 * cells];
        let vals = [(1.0, 0.2), (0.7, -0.1), (0.4, 0.05)];
        for (i, &(a, s)) in vals.iter().enumerate() {
            avg[m * cells + i] = a;
            slope[m * cells + i] = s;
        }
        let state = TransportState::from_parts(cells, 8, avg, slope);
        let c = compute_corrections(&state, &q, &[0.0; 8]);
        let h = |p: i32, pos: bool| q.half_moment(p, pos);
        for e in 1..cells {
            let (al, sl) = vals[e - 1];
            let (ar, sr) = vals[e];
            let (phi_up, j_up) = (w * (al + sl), w * mu * (al + sl));
            let (phi_dn, j_dn) = (w * (ar - sr), w * mu * (ar - sr));
            let exact = w * mu * (al + sl);
            let surrogate = 0.5 * h(1, true) * phi_up
                + 1.5 * h(2, true) * j_up
                + 0.5 * h(1, false) * phi_dn
                + 1.5 * h(2, false) * j_dn;
            assert!((c.edge_current[e] - (exact - surrogate)).abs() < 1e-14);
            let exact_f = w * (al + sl);
            let surrogate_f = 0.5 * h(0, true) * phi_up
                + 1.5 * h(1, true) * j_up
                + 0.5 * h(0, false) * phi_dn
                + 1.5 * h(1, false) * j_dn;
            assert!((c.edge_flux[e] - (exact_f - surrogate_f)).abs() < 1e-14);
        }
    }

    #[test]
    fn zero_inputs_zero_solution() {
        let (mesh, q) = setup(6);
        let mat = MaterialField::uniform(6, 1.0, 0.5, 0.0).unwrap();
        let prev = LowOrderState::zeros(6);
        let f = ClosureFactors::zeros(6);
        let corr = ConsistencyCorrections::zeros(6);
        let inputs = LowOrderInputs {
            mesh: &mesh,
            quadrature: &q,
            materials: &mat,
            step: 1,
            inflow: InflowMoments::default(),
            previous: &prev,
            closure: &f,
            corrections: &corr,
            dt: 0.02,
            speed: 30.0,
        };
        let sol = assemble_and_solve(&inputs).unwrap();
        assert_eq!(sol, LowOrderState::zeros(6));
    }

    #[test]
    fn infinite_medium_equilibrium() {
        let cells = 8;
        let (mesh, q) = setup(cells);
        let (st, ss, src) = (1.0, 0.6, 0.2);
        let phi = src / (st - ss);
        let mat = MaterialField::uniform(cells, st, ss, src).unwrap();
        let mut prev = LowOrderState::zeros(cells);
        prev.avg_flux = vec![phi; cells];
        let f = ClosureFactors::zeros(cells);
        let corr = ConsistencyCorrections::zeros(cells);
        let incoming = BoundarySource::new(phi / 2.0, phi / 2.0).incoming(&q, 1);
        let inputs = LowOrderInputs {
            mesh: &mesh,
            quadrature: &q,
            materials: &mat,
            step: 1,
            inflow: InflowMoments::new(&q, &incoming),
            previous: &prev,
            closure: &f,
            corrections: &corr,
            dt: 0.02,
            speed: 30.0,
        };
        let sol = assemble_and_solve(&inputs).unwrap();
        for i in 0..cells {
            assert!((sol.avg_flux[i] - phi).abs() < 1e-13 * phi);
            assert!(sol.slope_flux[i].abs() < 1e-13);
            assert!(sol.avg_current[i].abs() < 1e-13);
            assert!(sol.slope_current[i].abs() < 1e-13);
        }
    }

    #[test]
    fn absorption_not_total_on_zeroth_rows() {
        // The cross sections enter only the diagonal blocks: σ_a on the
        // flux rows, σ_t on the current rows.
        let cells = 3;
        let (mesh, q) = setup(cells);
        let prev = LowOrderState::zeros(cells);
        let f = ClosureFactors::zeros(cells);
        let corr = ConsistencyCorrections::zeros(cells);
        let assemble_with = |mat: &MaterialField| {
            assemble(&LowOrderInputs {
                mesh: &mesh,
                quadrature: &q,
                materials: mat,
                step: 1,
                inflow: InflowMoments::default(),
                previous: &prev,
                closure: &f,
                corrections: &corr,
                dt: 1.0,
                speed: 1.0,
            })
        };
        let with = assemble_with(&MaterialField::uniform(cells, 2.0, 1.5, 0.0).unwrap());
        let without = assemble_with(&MaterialField::uniform(cells, 0.0, 0.0, 0.0).unwrap());
        let dx = mesh.widths()[1];
        for i in 0..cells {
            let d = with.diag[i] - without.diag[i];
            let expected =
                Matrix4::from_diagonal(&Vector4::new(0.5 * dx, 2.0 * dx, 0.5 * dx, 2.0 * dx));
            assert!((d - expected).abs().max() < 1e-14, "cell {i}: {d}");
            assert_eq!(with.lower[i], without.lower[i]);
            assert_eq!(with.upper[i], without.upper[i]);
        }
    }
}
