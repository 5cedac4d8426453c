//! Time stepping with two-level second-moment iteration.
//!
//! Each step starts with a low-order solve using the closure data carried
//! over from the previous step. Each subsequent iteration sweeps the
//! transport equation with the latest low-order scalar flux in the
//! scattering source, refreshes the closure data from the sweep and solves
//! the low-order system again. Iteration stops on the ρ-scaled criterion
//! applied to successive low-order cell-average scalar fluxes.

use crate::error::SolveError;
use crate::grid::{AngularQuadrature, BoundarySource, InitialCondition, MaterialField, SlabMesh};
use crate::losm::{
    self, assemble_and_solve, compute_corrections, ConsistencyCorrections, InflowMoments,
    LowOrderInputs, LowOrderState,
};
use crate::slope_approx::{self, BetaGuard, MethodKind};
use crate::transport::{
    compute_closure_factors, sweep_all, ClosureFactors, EffectivePreviousSlope, SweepInputs,
    TransportState,
};

/// How successive-iterate differences are measured.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DifferenceNorm {
    /// `‖φ^s − φ^{s−1}‖∞`.
    Absolute,
    /// `‖φ^s − φ^{s−1}‖∞ / ‖φ^s‖∞`.
    Relative,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterationControl {
    pub tolerance: f64,
    pub max_iterations: usize,
    pub norm: DifferenceNorm,
}

impl Default for IterationControl {
    fn default() -> Self {
        Self {
            tolerance: 1e-8,
            max_iterations: 200,
            norm: DifferenceNorm::Absolute,
        }
    }
}

/// Outcome of one stopping test.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvergenceDecision {
    pub stop: bool,
    /// Ratio of the last two differences, once two are available.
    pub rho: Option<f64>,
}

/// Stopping rule on the history of successive-iterate differences.
///
/// With a single difference the test is `d < ε`. Afterwards
/// `ρ = d_s / d_{s−1}` and the test is `d_s < ε(1/ρ − 1)`; for `ρ ≥ 1` only
/// the hard floor `d_s < 1e−2·ε` stops.
pub fn convergence_check(history: &[f64], tolerance: f64) -> ConvergenceDecision {
    let Some(&last) = history.last() else {
        return ConvergenceDecision {
            stop: false,
            rho: None,
        };
    };
    if history.len() < 2 {
        return ConvergenceDecision {
            stop: last < tolerance,
            rho: None,
        };
    }
    let before = history[history.len() - 2];
    let rho = if before > 0.0 { last / before } else { 0.0 };
    let stop = if last == 0.0 {
        true
    } else if rho < 1.0 {
        last < tolerance * (1.0 / rho - 1.0)
    } else {
        last < 1e-2 * tolerance
    };
    ConvergenceDecision {
        stop,
        rho: Some(rho),
    }
}

/// A fully specified transient problem.
#[derive(Debug, Clone, PartialEq)]
pub struct Problem {
    pub mesh: SlabMesh,
    pub quadrature: AngularQuadrature,
    pub materials: MaterialField,
    pub boundary: BoundarySource,
    pub initial: InitialCondition,
    /// Particle speed in cm/ns.
    pub speed: f64,
    /// Step size in ns.
    pub dt: f64,
    pub steps: usize,
    pub control: IterationControl,
    pub guard: BetaGuard,
    /// Sweep worker threads; 1 keeps everything on the calling thread.
    pub threads: usize,
}

impl Problem {
    pub fn cells(&self) -> usize {
        self.mesh.cell_count()
    }

    pub fn directions(&self) -> usize {
        self.quadrature.len()
    }
}

/// Data carried from one time step to the next.
///
/// Reduced-memory methods keep only the cell averages of the angular flux;
/// the reference method also keeps the first moments. The initial state
/// carries the exact initial first moments for every method.
#[derive(Debug, Clone, PartialEq)]
pub struct PersistedState {
    /// Time level this state describes.
    pub step: usize,
    /// Direction-major `ψ̄`.
    pub cell_avg: Vec<f64>,
    /// Direction-major `ψ̂`, when kept.
    pub cell_slope: Option<Vec<f64>>,
    pub low_order: LowOrderState,
    pub closure: ClosureFactors,
    pub corrections: ConsistencyCorrections,
    /// Per-direction inflow of this time level.
    pub incoming: Vec<f64>,
}

impl PersistedState {
    pub fn initial(problem: &Problem) -> Self {
        let cells = problem.cells();
        let m = problem.directions();
        let psi0 = TransportState::from_parts(
            cells,
            m,
            problem.initial.cell_avg.clone(),
            problem.initial.cell_slope.clone(),
        );
        let incoming = problem.boundary.incoming(&problem.quadrature, 0);
        let low_order = losm::transport_moments(&psi0, &problem.quadrature);
        let closure = compute_closure_factors(&psi0, &problem.quadrature, &incoming);
        let corrections = compute_corrections(&psi0, &problem.quadrature, &incoming);
        let (cell_avg, cell_slope) = psi0.into_parts();
        Self {
            step: 0,
            cell_avg,
            cell_slope: Some(cell_slope),
            low_order,
            closure,
            corrections,
            incoming,
        }
    }

    /// Angular-flux values held (the memory the reduced methods halve).
    pub fn angular_values(&self) -> usize {
        self.cell_avg.len() + self.cell_slope.as_ref().map_or(0, Vec::len)
    }

    /// All scalar values held.
    pub fn value_count(&self) -> usize {
        self.angular_values()
            + self.low_order.value_count()
            + self.closure.value_count()
            + self.corrections.value_count()
            + self.incoming.len()
    }

    pub fn payload_bytes(&self) -> usize {
        self.value_count() * std::mem::size_of::<f64>()
    }
}

/// Angular-flux values a method persists between steps.
pub fn persisted_angular_values(method: MethodKind, cells: usize, directions: usize) -> usize {
    if method.is_reduced() {
        cells * directions
    } else {
        2 * cells * directions
    }
}

/// Bytes persisted between steps by `method` on an `cells × directions`
/// grid: angular payload plus the low-order, closure, correction and inflow
/// data shared by every method.
pub fn persisted_bytes(method: MethodKind, cells: usize, directions: usize) -> usize {
    let overhead = 4 * cells          // φ̄, φ̂, J̄, Ĵ
        + 2 * cells + (cells + 1)     // F̄, F̂, edge F
        + 2 * (cells + 1)             // edge corrections
        + directions; // inflow
    (persisted_angular_values(method, cells, directions) + overhead) * std::mem::size_of::<f64>()
}

/// `λ_i = (φ̄ⁿ − φ̄ⁿ⁻¹)/(Δt φ̄ⁿ)`, zero where `|φ̄ⁿ| < 1e−300`.
pub fn lambda_rate(current: &[f64], previous: &[f64], dt: f64) -> Vec<f64> {
    current
        .iter()
        .zip(previous)
        .map(|(&c, &p)| {
            if c.abs() < 1e-300 {
                0.0
            } else {
                (c - p) / (dt * c)
            }
        })
        .collect()
}

/// Converged data of one time step.
#[derive(Debug, Clone, PartialEq)]
pub struct StepResult {
    pub step: usize,
    /// End-of-step time in ns.
    pub time: f64,
    pub low_order: LowOrderState,
    pub transport: TransportState,
    /// Iteration passes: the initial low-order solve plus one per
    /// transport sweep.
    pub iterations: usize,
    /// Successive low-order differences, one per transport sweep.
    pub differences: Vec<f64>,
    pub rho: Vec<f64>,
    /// Global particle-balance residual relative to the largest balance term.
    pub balance_residual: f64,
    /// Relative change rate per cell, 1/ns.
    pub lambda: Vec<f64>,
}

fn max_abs_difference(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

fn max_abs(a: &[f64]) -> f64 {
    a.iter().map(|x| x.abs()).fold(0.0, f64::max)
}

/// Advances `persisted` (time level `step − 1`) to time level `step`.
pub fn advance_step(
    problem: &Problem,
    method: MethodKind,
    persisted: &PersistedState,
    step: usize,
) -> Result<(StepResult, PersistedState), SolveError> {
    let cells = problem.cells();
    let directions = problem.directions();
    let quad = &problem.quadrature;
    let incoming = problem.boundary.incoming(quad, step);
    let inflow = InflowMoments::new(quad, &incoming);
    let previous = &persisted.low_order;

    let solve_low_order = |closure: &ClosureFactors, corrections: &ConsistencyCorrections| {
        assemble_and_solve(&LowOrderInputs {
            mesh: &problem.mesh,
            quadrature: quad,
            materials: &problem.materials,
            step,
            inflow,
            previous,
            closure,
            corrections,
            dt: problem.dt,
            speed: problem.speed,
        })
    };

    // Linear methods fix ψ̂* once per step.
    let fixed_slope =
        match (&persisted.cell_slope, method) {
            (Some(s), _) => Some(EffectivePreviousSlope::Dense(s.clone())),
            (None, MethodKind::Reference) => {
                unreachable!("reference state always persists first moments")
            }
            (None, MethodKind::ZeroSlope) => Some(EffectivePreviousSlope::Dense(
                slope_approx::zero_slope(cells, directions),
            )),
            (None, MethodKind::P1) => Some(EffectivePreviousSlope::Dense(slope_approx::p1_slope(
                previous, quad,
            ))),
            (None, MethodKind::SrSl) => Some(EffectivePreviousSlope::Dense(
                slope_approx::sr_sl_slope(&persisted.cell_avg, cells, quad, &persisted.incoming)?,
            )),
            (None, MethodKind::BetaBar | MethodKind::BetaLr) => None,
        };

    let mut low = solve_low_order(&persisted.closure, &persisted.corrections)?;
    let mut differences = Vec::new();
    let mut rho = Vec::new();
    let control = &problem.control;

    loop {
        let effective = match &fixed_slope {
            Some(s) => std::borrow::Cow::Borrowed(s),
            None => std::borrow::Cow::Owned(EffectivePreviousSlope::Coefficients(match method {
                MethodKind::BetaBar => slope_approx::beta_bar_coefficients(
                    &previous.avg_flux,
                    &low.avg_flux,
                    &problem.guard,
                ),
                _ => slope_approx::beta_lr_coefficients(previous, &low, &problem.guard),
            })),
        };
        let transport = sweep_all(&SweepInputs {
            mesh: &problem.mesh,
            quadrature: quad,
            materials: &problem.materials,
            step,
            incoming: &incoming,
            prev_avg: &persisted.cell_avg,
            prev_slope: &effective,
            scalar_avg: &low.avg_flux,
            scalar_slope: &low.slope_flux,
            dt: problem.dt,
            speed: problem.speed,
            threads: problem.threads,
        })?;
        let closure = compute_closure_factors(&transport, quad, &incoming);
        let corrections = compute_corrections(&transport, quad, &incoming);
        let next = solve_low_order(&closure, &corrections)?;

        let mut diff = max_abs_difference(&next.avg_flux, &low.avg_flux);
        if control.norm == DifferenceNorm::Relative {
            let scale = max_abs(&next.avg_flux);
            if scale > 0.0 {
                diff /= scale;
            }
        }
        differences.push(diff);
        low = next;
        let decision = convergence_check(&differences, control.tolerance);
        if let Some(r) = decision.rho {
            rho.push(r);
        }
        if decision.stop {
            let balance_residual = balance_residual(
                problem,
                step,
                &inflow,
                previous,
                &closure,
                &corrections,
                &low,
            );
            let lambda = lambda_rate(&low.avg_flux, &previous.avg_flux, problem.dt);
            let next_state = PersistedState {
                step,
                cell_avg: transport.cell_avg().to_vec(),
                cell_slope: (!method.is_reduced()).then(|| transport.cell_slope().to_vec()),
                low_order: low.clone(),
                closure,
                corrections,
                incoming,
            };
            let result = StepResult {
                step,
                time: step as f64 * problem.dt,
                low_order: low,
                transport,
                iterations: differences.len() + 1,
                differences,
                rho,
                balance_residual,
                lambda,
            };
            return Ok((result, next_state));
        }
        if differences.len() >= control.max_iterations || !diff.is_finite() {
            let tail = differences[differences.len().saturating_sub(3)..].to_vec();
            return Err(SolveError::NonConvergence {
                step,
                iterations: differences.len() + 1,
                history: differences,
                tail,
            });
        }
    }
}

/// Relative residual of the global low-order particle balance.
#[allow(clippy::too_many_arguments)]
fn balance_residual(
    problem: &Problem,
    step: usize,
    inflow: &InflowMoments,
    previous: &LowOrderState,
    closure: &ClosureFactors,
    corrections: &ConsistencyCorrections,
    state: &LowOrderState,
) -> f64 {
    let inputs = LowOrderInputs {
        mesh: &problem.mesh,
        quadrature: &problem.quadrature,
        materials: &problem.materials,
        step,
        inflow: *inflow,
        previous,
        closure,
        corrections,
        dt: problem.dt,
        speed: problem.speed,
    };
    let currents = losm::edge_currents(&inputs, state);
    let (mut change, mut absorption, mut source) = (0.0, 0.0, 0.0);
    for (c, &dx) in problem.mesh.widths().iter().enumerate() {
        let mat = problem.materials.cell(c, step);
        change += dx / (problem.speed * problem.dt) * (state.avg_flux[c] - previous.avg_flux[c]);
        absorption += mat.sigma_a() * dx * state.avg_flux[c];
        source += dx * mat.source_avg;
    }
    let leak_right = currents[currents.len() - 1];
    let leak_left = currents[0];
    let residual = change + leak_right - leak_left + absorption - source;
    let scale = [change, leak_right, leak_left, absorption, source]
        .iter()
        .map(|v| v.abs())
        .fold(0.0, f64::max);
    if scale > 0.0 {
        residual.abs() / scale
    } else {
        residual.abs()
    }
}

/// Sequential time integration of one problem with one method.
#[derive(Debug, Clone)]
pub struct Simulation {
    problem: Problem,
    method: MethodKind,
    state: PersistedState,
}

impl Simulation {
    pub fn new(problem: Problem, method: MethodKind) -> Self {
        let state = PersistedState::initial(&problem);
        Self {
            problem,
            method,
            state,
        }
    }

    pub fn problem(&self) -> &Problem {
        &self.problem
    }

    pub fn method(&self) -> MethodKind {
        self.method
    }

    pub fn persisted(&self) -> &PersistedState {
        &self.state
    }

    pub fn steps_taken(&self) -> usize {
        self.state.step
    }

    pub fn is_finished(&self) -> bool {
        self.state.step >= self.problem.steps
    }

    pub fn advance(&mut self) -> Result<StepResult, SolveError> {
        let step = self.state.step + 1;
        let (result, next) = advance_step(&self.problem, self.method, &self.state, step)?;
        self.state = next;
        Ok(result)
    }

    /// Runs the remaining steps; on failure returns the completed steps too.
    pub fn run(&mut self) -> Result<Vec<StepResult>, (Vec<StepResult>, SolveError)> {
        let mut out = Vec::with_capacity(self.problem.steps.saturating_sub(self.state.step));
        while !self.is_finished() {
            match self.advance() {
                Ok(r) => out.push(r),
                Err(e) => return Err((out, e)),
            }
        }
        Ok(out)
    }
}
