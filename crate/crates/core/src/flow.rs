//! Logarithmic curvature flow for spacelike graphs τ = u(ξ) in de Sitter space.
//!
//! The flow solves F̃(κ) = 1/f on the dual side. With the residual
//! R = log F̃ − log f⁻¹ and its sphere average R̄, the scalar flow is
//!
//! ```text
//! ∂u/∂t = v (R − 2R̄),    v = (1 − |Du|²_ḡ)^{1/2},
//! ```
//!
//! which on slices reduces to ∂u/∂t = −vR and has the same stationary set
//! (R − 2R̄ ≡ 0 forces R̄ = 0 and so R ≡ 0). The step is explicit Euler with
//! a parabolic CFL limit; rows close to the poles, where the longitude spacing
//! sin θ Δφ is small, get an implicit stabilizing correction in φ.

use crate::curvfunc::{eval_tensor, inverse_spec, CurvError, CurvatureFunctionSpec};
use crate::geometry::{graph_geometry, Ambient, GeometryError, GraphHypersurface, ShapeField};
use crate::linalg;
use crate::sphere_grid::SphereGrid;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone)]
pub enum FlowError {
    #[error("no slice barriers: {0}")]
    NoBarrier(String),
    #[error("time step collapsed below the floor (dt = {0:e})")]
    StepCollapse(f64),
    #[error("flow invariant breached after repeated step rejection: {0}")]
    InvariantBreach(String),
    #[error("flow did not converge in {} steps (final residual {:e})", .0.steps, .0.final_residual)]
    NotConverged(Box<FlowResult>),
    #[error("invalid prescribed data: {0}")]
    InvalidData(String),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Curv(#[from] CurvError),
}

/// Prescribed positive function f of the de Sitter point (sinh τ, cosh τ ξ).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PrescribedData {
    Constant {
        c: f64,
    },
    /// c₀ (1 + ε ⟨ξ, d⟩)
    LowHarmonic {
        c0: f64,
        eps: f64,
        dir: [f64; 3],
    },
    /// Values on τ-samples × grid nodes (row-major per τ), interpolated
    /// linearly in τ and bilinearly in (θ, φ).
    Tabulated {
        n: usize,
        resolution: Vec<usize>,
        tau: Vec<f64>,
        values: Vec<Vec<f64>>,
    },
}

impl PrescribedData {
    pub fn validate(&self) -> Result<(), FlowError> {
        match self {
            PrescribedData::Constant { c } if !(c.is_finite() && *c > 0.0) => Err(
                FlowError::InvalidData(format!("constant must be positive, got {c}")),
            ),
            PrescribedData::LowHarmonic { c0, eps, dir } => {
                let nd = crate::lorentz::norm3(dir);
                if !(c0.is_finite() && *c0 > 0.0) {
                    Err(FlowError::InvalidData(format!(
                        "c0 must be positive, got {c0}"
                    )))
                } else if !(eps.abs() < 1.0) {
                    Err(FlowError::InvalidData(format!(
                        "|eps| must be below 1, got {eps}"
                    )))
                } else if !(nd > 0.0 && nd.is_finite()) {
                    Err(FlowError::InvalidData("direction must be nonzero".into()))
                } else {
                    Ok(())
                }
            }
            PrescribedData::Tabulated {
                n,
                resolution,
                tau,
                values,
            } => {
                let g = crate::sphere_grid::build_grid(*n, resolution, 2)
                    .map_err(|e| FlowError::InvalidData(format!("table grid: {e}")))?;
                if tau.is_empty() || tau.len() != values.len() {
                    return Err(FlowError::InvalidData(
                        "tau samples and value rows differ in count".into(),
                    ));
                }
                if tau.windows(2).any(|w| !(w[1] > w[0])) {
                    return Err(FlowError::InvalidData("tau samples must increase".into()));
                }
                for row in values {
                    if row.len() != g.len() {
                        return Err(FlowError::InvalidData(format!(
                            "table row has {} values, grid has {}",
                            row.len(),
                            g.len()
                        )));
                    }
                    if row.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
                        return Err(FlowError::InvalidData(
                            "table values must be positive".into(),
                        ));
                    }
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    pub fn value(&self, tau: f64, xi: &[f64; 3]) -> f64 {
        match self {
            PrescribedData::Constant { c } => *c,
            PrescribedData::LowHarmonic { c0, eps, dir } => {
                let d = crate::lorentz::normalize3(dir);
                c0 * (1.0 + eps * crate::lorentz::dot3(xi, &d))
            }
            PrescribedData::Tabulated {
                n,
                resolution,
                tau: ts,
                values,
            } => {
                let g = crate::sphere_grid::build_grid(*n, resolution, 2).expect("validated table");
                let at = |row: &Vec<f64>| g.interpolate_linear(row, xi);
                if tau <= ts[0] {
                    return at(&values[0]);
                }
                if tau >= ts[ts.len() - 1] {
                    return at(&values[ts.len() - 1]);
                }
                let k = ts.partition_point(|&t| t <= tau) - 1;
                let w = (tau - ts[k]) / (ts[k + 1] - ts[k]);
                (1.0 - w) * at(&values[k]) + w * at(&values[k + 1])
            }
        }
    }

    /// Exact infimum and supremum over all de Sitter points.
    pub fn bounds(&self) -> (f64, f64) {
        match self {
            PrescribedData::Constant { c } => (*c, *c),
            PrescribedData::LowHarmonic { c0, eps, .. } => {
                (c0 * (1.0 - eps.abs()), c0 * (1.0 + eps.abs()))
            }
            PrescribedData::Tabulated { values, .. } => {
                let it = values.iter().flatten();
                (
                    it.clone().cloned().fold(f64::INFINITY, f64::min),
                    it.cloned().fold(f64::NEG_INFINITY, f64::max),
                )
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BarrierPair {
    /// Lower barrier slice (F̃ ≤ f⁻¹ on it).
    pub tau1: f64,
    /// Upper barrier slice (F̃ ≥ f⁻¹ on it); the flow starts here.
    pub tau2: f64,
}

pub const DEFAULT_MARGIN: f64 = 0.05;

/// Slice barriers from the bounds of f, verified node by node on `grid`.
pub fn auto_barriers(
    f: &PrescribedData,
    spec: &CurvatureFunctionSpec,
    grid: &SphereGrid,
    margin: f64,
) -> Result<BarrierPair, FlowError> {
    f.validate()?;
    let (lo, hi) = f.bounds();
    if !(lo > 1.0) {
        return Err(FlowError::NoBarrier(format!("inf f = {lo} must exceed 1")));
    }
    let star_hi = (1.0 / lo).atanh();
    let star_lo = (1.0 / hi).atanh();
    let tau2 = star_hi + margin;
    let mut tau1 = star_lo - margin;
    if tau1 <= 0.0 {
        tau1 = 0.5 * star_lo;
    }
    if !(tau1 < tau2) || !(tau1 > 0.0) {
        return Err(FlowError::NoBarrier(format!(
            "margins collapse: tau1 = {tau1}, tau2 = {tau2}"
        )));
    }
    let ft = inverse_spec(spec);
    for (tau, upper) in [(tau2, true), (tau1, false)] {
        let s = graph_geometry(
            &GraphHypersurface::new(Ambient::DeSitter, vec![tau; grid.len()]),
            grid,
        )?;
        for (i, p) in s.nodes.iter().enumerate() {
            let t = eval_tensor(&ft, grid.n, &p.g, &p.h)?;
            let target = 1.0 / f.value(tau, &grid.xi(i));
            let ok = if upper {
                t.eval.value >= target
            } else {
                t.eval.value <= target
            };
            if !ok {
                return Err(FlowError::NoBarrier(format!(
                    "slice tau = {tau} fails the {} barrier inequality at node {i}",
                    if upper { "upper" } else { "lower" }
                )));
            }
        }
    }
    Ok(BarrierPair { tau1, tau2 })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FlowOptions {
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default = "default_max_steps")]
    pub max_steps: usize,
    #[serde(default = "default_cfl")]
    pub cfl: f64,
    #[serde(default = "default_margin")]
    pub margin: f64,
}

fn default_tol() -> f64 {
    1e-6
}
fn default_max_steps() -> usize {
    200_000
}
fn default_cfl() -> f64 {
    0.2
}
fn default_margin() -> f64 {
    DEFAULT_MARGIN
}

impl Default for FlowOptions {
    fn default() -> Self {
        FlowOptions {
            tol: default_tol(),
            max_steps: default_max_steps(),
            cfl: default_cfl(),
            margin: default_margin(),
        }
    }
}

pub const DT_FLOOR: f64 = 1e-10;
const MAX_REJECTIONS: usize = 40;

/// One record per accepted step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FlowDiagnostics {
    pub t: f64,
    pub dt: f64,
    pub res_sup: f64,
    pub res_inf: f64,
    pub kappa_min: f64,
    pub kappa_max: f64,
    pub vtilde_max: f64,
    pub chi_min: f64,
    pub chi_max: f64,
    pub barrier_lo_margin: f64,
    pub barrier_hi_margin: f64,
    pub u_increase_max: f64,
}

#[derive(Debug, Clone)]
pub struct FlowState {
    pub t: f64,
    pub u: Vec<f64>,
    /// R = log F̃ − log f⁻¹ per node.
    pub residual: Vec<f64>,
    pub dt: f64,
    pub step: usize,
}

#[derive(Debug, Clone)]
pub struct FlowResult {
    pub converged: bool,
    pub u: Vec<f64>,
    pub barriers: BarrierPair,
    pub history: Vec<FlowDiagnostics>,
    pub steps: usize,
    pub final_residual: f64,
}

/// Residual and linearized coefficients of the flow at one state.
struct Evaluation {
    shape: ShapeField,
    residual: Vec<f64>,
    /// Coefficient of u_φφ in ∂u/∂t (coordinate component F̃^{φφ}/F̃).
    a_phiphi: Vec<f64>,
    /// Largest eigenvalue of F̃^{ij}/F̃ in the σ-orthonormal frame.
    lambda_max: f64,
}

fn evaluate(
    u: &[f64],
    ft: &CurvatureFunctionSpec,
    f: &PrescribedData,
    grid: &SphereGrid,
) -> Result<Evaluation, FlowError> {
    let shape = graph_geometry(&GraphHypersurface::new(Ambient::DeSitter, u.to_vec()), grid)?;
    let n = grid.n;
    let mut residual = Vec::with_capacity(grid.len());
    let mut a_phiphi = Vec::with_capacity(grid.len());
    let mut lambda_max: f64 = 0.0;
    for (i, p) in shape.nodes.iter().enumerate() {
        let t = eval_tensor(ft, n, &p.g, &p.h)?;
        residual.push(t.eval.value.ln() + f.value(u[i], &grid.xi(i)).ln());
        let a = t.fij;
        let fv = t.eval.value;
        if n == 1 {
            a_phiphi.push(a[0][0] / fv);
            lambda_max = lambda_max.max(a[0][0] / fv);
        } else {
            let s = grid.theta[grid.row(i)].sin();
            a_phiphi.push(a[1][1] / fv);
            let fr = [
                [a[0][0] / fv, a[0][1] * s / fv],
                [a[1][0] * s / fv, a[1][1] * s * s / fv],
            ];
            let id = [[1.0, 0.0], [0.0, 1.0]];
            lambda_max = lambda_max.max(linalg::pencil_eigen(2, &id, &fr).values[1]);
        }
    }
    Ok(Evaluation {
        shape,
        residual,
        a_phiphi,
        lambda_max,
    })
}

/// Solves (I − c D)x = b on a periodic row, D the second-difference matrix [1, −2, 1].
fn solve_periodic(c: f64, b: &[f64]) -> Vec<f64> {
    let m = b.len();
    let diag = 1.0 + 2.0 * c;
    let off = -c;
    // Sherman-Morrison on the cyclic system: A = T + w wᵀ-type correction
    let gamma = -diag;
    let mut dmod = vec![diag; m];
    dmod[0] = diag - gamma;
    dmod[m - 1] = diag - off * off / gamma;
    let thomas = |rhs: &[f64]| -> Vec<f64> {
        let mut cp = vec![0.0; m];
        let mut dp = vec![0.0; m];
        cp[0] = off / dmod[0];
        dp[0] = rhs[0] / dmod[0];
        for i in 1..m {
            let den = dmod[i] - off * cp[i - 1];
            cp[i] = off / den;
            dp[i] = (rhs[i] - off * dp[i - 1]) / den;
        }
        let mut x = vec![0.0; m];
        x[m - 1] = dp[m - 1];
        for i in (0..m - 1).rev() {
            x[i] = dp[i] - cp[i] * x[i + 1];
        }
        x
    };
    let y = thomas(b);
    let mut uvec = vec![0.0; m];
    uvec[0] = gamma;
    uvec[m - 1] = off;
    let z = thomas(&uvec);
    let vy = y[0] + off / gamma * y[m - 1];
    let vz = z[0] + off / gamma * z[m - 1];
    let k = vy / (1.0 + vz);
    y.iter().zip(&z).map(|(yi, zi)| yi - k * zi).collect()
}

fn summarize(ev: &Evaluation, u: &[f64]) -> (f64, f64, f64, f64, f64, f64, f64) {
    let (mut rs, mut ri) = (f64::NEG_INFINITY, f64::INFINITY);
    for &r in &ev.residual {
        rs = rs.max(r.abs());
        ri = ri.min(r);
    }
    let (mut kmin, mut kmax, mut vmax, mut cmin, mut cmax) = (
        f64::INFINITY,
        f64::NEG_INFINITY,
        f64::NEG_INFINITY,
        f64::INFINITY,
        f64::NEG_INFINITY,
    );
    for (p, &ui) in ev.shape.nodes.iter().zip(u) {
        for &k in &p.kappa[..ev.shape.n] {
            kmin = kmin.min(k);
            kmax = kmax.max(k);
        }
        vmax = vmax.max(p.vtilde);
        let chi = p.vtilde / ui.cosh();
        cmin = cmin.min(chi);
        cmax = cmax.max(chi);
    }
    (rs, ri, kmin, kmax, vmax, cmin, cmax)
}

/// Tentative update for a given dt; returns the new field.
fn advance(u: &[f64], ev: &Evaluation, grid: &SphereGrid, dt: f64) -> Vec<f64> {
    let rbar = grid.integrate(&ev.residual) / grid.volume();
    let mut du: Vec<f64> = (0..grid.len())
        .map(|i| dt * ev.shape.nodes[i].v * (ev.residual[i] - 2.0 * rbar))
        .collect();
    if grid.n == 2 {
        let h2 = grid.dphi * grid.dphi;
        for j in 0..grid.nlat {
            let row = j * grid.nlon..(j + 1) * grid.nlon;
            let a_row = ev.a_phiphi[row.clone()].iter().cloned().fold(0.0, f64::max);
            let c = dt * a_row / h2;
            if c > 0.25 {
                let x = solve_periodic(c, &du[row.clone()]);
                du[row].copy_from_slice(&x);
            }
        }
    }
    u.iter().zip(&du).map(|(a, b)| a + b).collect()
}

/// One accepted step, with rejection and halving of dt on invariant failure.
pub fn flow_step(
    state: &FlowState,
    ft: &CurvatureFunctionSpec,
    f: &PrescribedData,
    grid: &SphereGrid,
    cfl: f64,
) -> Result<FlowState, FlowError> {
    let ev = evaluate(&state.u, ft, f, grid)?;
    let (state, _, _) = step_from(state, &ev, ft, f, grid, cfl)?;
    Ok(state)
}

fn step_from(
    state: &FlowState,
    ev: &Evaluation,
    ft: &CurvatureFunctionSpec,
    f: &PrescribedData,
    grid: &SphereGrid,
    cfl: f64,
) -> Result<(FlowState, Evaluation, f64), FlowError> {
    let mut dt = cfl * grid.dtheta * grid.dtheta / ev.lambda_max.max(1e-300);
    let mut last = String::new();
    for _ in 0..MAX_REJECTIONS {
        if dt < DT_FLOOR {
            return Err(FlowError::StepCollapse(dt));
        }
        let un = advance(&state.u, ev, grid, dt);
        match evaluate(&un, ft, f, grid) {
            Ok(next) => {
                let kmin = next
                    .shape
                    .nodes
                    .iter()
                    .map(|p| p.kappa[0])
                    .fold(f64::INFINITY, f64::min);
                if kmin > 0.0 {
                    let st = FlowState {
                        t: state.t + dt,
                        u: un,
                        residual: next.residual.clone(),
                        dt,
                        step: state.step + 1,
                    };
                    return Ok((st, next, dt));
                }
                last = format!("convexity lost (min kappa {kmin:e})");
            }
            Err(FlowError::Geometry(e)) => last = e.to_string(),
            Err(FlowError::Curv(e)) => last = e.to_string(),
            Err(e) => return Err(e),
        }
        dt *= 0.5;
    }
    Err(FlowError::InvariantBreach(last))
}

/// Runs the dual flow for F̃ = inverse of `spec` with prescribed value f⁻¹,
/// starting from the upper barrier slice.
pub fn run_flow(
    spec: &CurvatureFunctionSpec,
    f: &PrescribedData,
    grid: &SphereGrid,
    opts: &FlowOptions,
) -> Result<FlowResult, FlowError> {
    spec.validate(grid.n)?;
    let barriers = auto_barriers(f, spec, grid, opts.margin)?;
    let ft = inverse_spec(spec);
    let u0 = vec![barriers.tau2; grid.len()];
    let mut ev = evaluate(&u0, &ft, f, grid)?;
    let mut state = FlowState {
        t: 0.0,
        u: u0,
        residual: ev.residual.clone(),
        dt: 0.0,
        step: 0,
    };
    let mut history = Vec::new();
    let mut res = summarize(&ev, &state.u).0;
    while res >= opts.tol && state.step < opts.max_steps {
        let (next, nev, dt) = step_from(&state, &ev, &ft, f, grid, opts.cfl)?;
        let (rs, ri, kmin, kmax, vmax, cmin, cmax) = summarize(&nev, &next.u);
        let mut inc: f64 = 0.0;
        let (mut lo, mut hi) = (f64::INFINITY, f64::INFINITY);
        for (a, b) in next.u.iter().zip(&state.u) {
            inc = inc.max(a - b);
            lo = lo.min(a - barriers.tau1);
            hi = hi.min(barriers.tau2 - a);
        }
        history.push(FlowDiagnostics {
            t: next.t,
            dt,
            res_sup: rs,
            res_inf: ri,
            kappa_min: kmin,
            kappa_max: kmax,
            vtilde_max: vmax,
            chi_min: cmin,
            chi_max: cmax,
            barrier_lo_margin: lo,
            barrier_hi_margin: hi,
            u_increase_max: inc.max(0.0),
        });
        res = rs;
        state = next;
        ev = nev;
    }
    let result = FlowResult {
        converged: res < opts.tol,
        u: state.u,
        barriers,
        history,
        steps: state.step,
        final_residual: res,
    };
    if result.converged {
        Ok(result)
    } else {
        Err(FlowError::NotConverged(Box::new(result)))
    }
}

/// Closed-form stationary slice for constant f: tanh τ* = 1/c.
pub fn slice_oracle(c: f64) -> Option<f64> {
    if c > 1.0 {
        Some((1.0 / c).atanh())
    } else {
        None
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sphere_grid::build_grid;

    #[test]
    fn barrier_examples() {
        let grid = build_grid(2, &[8, 16], 2).unwrap();
        let b = auto_barriers(
            &PrescribedData::Constant { c: 2.0 },
            &CurvatureFunctionSpec::hk(1),
            &grid,
            DEFAULT_MARGIN,
        )
        .unwrap();
        let star = 3f64.ln() / 2.0;
        assert!(b.tau1 < star && star < b.tau2);
        let f = PrescribedData::LowHarmonic {
            c0: 2.0,
            eps: 0.1,
            dir: [0.0, 0.0, 1.0],
        };
        let (lo, hi) = f.bounds();
        assert!((lo - 1.8).abs() < 1e-15 && (hi - 2.2).abs() < 1e-15);
        let b = auto_barriers(&f, &CurvatureFunctionSpec::gauss(), &grid, DEFAULT_MARGIN).unwrap();
        assert!(b.tau2 >= (1.0f64 / 1.8).atanh() && b.tau1 <= (1.0f64 / 2.2).atanh());
        let e = auto_barriers(
            &PrescribedData::Constant { c: 0.9 },
            &CurvatureFunctionSpec::hk(1),
            &grid,
            DEFAULT_MARGIN,
        );
        assert!(matches!(e, Err(FlowError::NoBarrier(_))));
    }

    #[test]
    fn invalid_data() {
        for f in [
            PrescribedData::Constant { c: -1.0 },
            PrescribedData::LowHarmonic {
                c0: 2.0,
                eps: 1.0,
                dir: [0.0, 0.0, 1.0],
            },
            PrescribedData::LowHarmonic {
                c0: 2.0,
                eps: 0.1,
                dir: [0.0; 3],
            },
            PrescribedData::Tabulated {
                n: 2,
                resolution: vec![4, 8],
                tau: vec![0.0],
                values: vec![vec![1.0; 3]],
            },
        ] {
            assert!(matches!(f.validate(), Err(FlowError::InvalidData(_))));
        }
    }

    #[test]
    fn tabulated_interpolation() {
        let g = build_grid(2, &[8, 16], 2).unwrap();
        let row =
            |s: f64| -> Vec<f64> { (0..g.len()).map(|i| s * (2.0 + 0.1 * g.xi(i)[2])).collect() };
        let f = PrescribedData::Tabulated {
            n: 2,
            resolution: vec![8, 16],
            tau: vec![0.0, 1.0],
            values: vec![row(1.0), row(2.0)],
        };
        f.validate().unwrap();
        let xi = g.xi(20);
        assert!((f.value(0.0, &xi) - row(1.0)[20]).abs() < 1e-14);
        assert!((f.value(0.5, &xi) - 1.5 * row(1.0)[20]).abs() < 1e-14);
        assert!((f.value(7.0, &xi) - row(2.0)[20]).abs() < 1e-14);
    }

    #[test]
    fn periodic_solver() {
        let b: Vec<f64> = (0..16).map(|k| (k as f64).sin() + 0.3).collect();
        let c = 3.7;
        let x = solve_periodic(c, &b);
        for i in 0..16 {
            let l = x[(i + 15) % 16];
            let r = x[(i + 1) % 16];
            let ax = x[i] - c * (l - 2.0 * x[i] + r);
            assert!((ax - b[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn stationary_input_is_unchanged() {
        let grid = build_grid(2, &[8, 16], 2).unwrap();
        let tau: f64 = 0.6;
        let f = PrescribedData::Constant {
            c: 1.0 / tau.tanh(),
        };
        let ft = inverse_spec(&CurvatureFunctionSpec::hk(1));
        let st = FlowState {
            t: 0.0,
            u: vec![tau; grid.len()],
            residual: vec![0.0; grid.len()],
            dt: 0.0,
            step: 0,
        };
        let next = flow_step(&st, &ft, &f, &grid, 0.2).unwrap();
        for u in &next.u {
            assert!((u - tau).abs() < 1e-15);
        }
    }

    fn radial_run(cfl: f64) -> (FlowState, f64) {
        let grid = build_grid(2, &[8, 16], 2).unwrap();
        let f = PrescribedData::Constant { c: 2.0 };
        let ft = inverse_spec(&CurvatureFunctionSpec::gauss());
        let mut st = FlowState {
            t: 0.0,
            u: vec![0.8; grid.len()],
            residual: vec![],
            dt: 0.0,
            step: 0,
        };
        let mut prev = 0.8;
        while st.t < 0.5 {
            st = flow_step(&st, &ft, &f, &grid, cfl).unwrap();
            assert!(st.u[0] < prev);
            prev = st.u[0];
        }
        // RK4 oracle for du/dt = −(log tanh u − log ½)
        let rhs = |u: f64| -(u.tanh().ln() - 0.5f64.ln());
        let (mut u, steps) = (0.8f64, 20000);
        let h = st.t / steps as f64;
        for _ in 0..steps {
            let k1 = rhs(u);
            let k2 = rhs(u + 0.5 * h * k1);
            let k3 = rhs(u + 0.5 * h * k2);
            let k4 = rhs(u + h * k3);
            u += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        }
        (st, u)
    }

    #[test]
    fn slice_follows_radial_ode() {
        let (coarse, oc) = radial_run(0.2);
        let (fine, of) = radial_run(0.05);
        let (ec, ef) = ((coarse.u[0] - oc).abs(), (fine.u[0] - of).abs());
        // explicit Euler: first order in dt
        assert!(ec / ef > 3.0, "{ec} {ef}");
        assert!(ef < 2e-2 * (0.8 - of));
        for st in [&coarse, &fine] {
            let spread = st.u.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
                - st.u.iter().cloned().fold(f64::INFINITY, f64::min);
            assert!(spread < 1e-12);
        }
    }

    #[test]
    fn radial_flow_converges_to_slice() {
        let grid = build_grid(2, &[16, 32], 2).unwrap();
        for spec in [CurvatureFunctionSpec::hk(1), CurvatureFunctionSpec::gauss()] {
            let r = run_flow(
                &spec,
                &PrescribedData::Constant { c: 2.0 },
                &grid,
                &FlowOptions::default(),
            )
            .unwrap();
            assert!(r.converged);
            let star = slice_oracle(2.0).unwrap();
            for u in &r.u {
                assert!((u - star).abs() < 1e-6);
            }
            assert_eq!(r.history.len(), r.steps);
            let first = r.history[0];
            for d in &r.history {
                assert!(d.barrier_lo_margin >= 0.0 && d.barrier_hi_margin >= 0.0);
                assert!(d.u_increase_max <= 10.0 * d.dt * d.dt);
                assert!(d.res_inf >= -1e-8);
                assert!(
                    d.kappa_min >= 0.5 * first.kappa_min && d.kappa_min <= 2.0 * first.kappa_min
                );
                assert!(d.chi_min >= 0.5 * first.chi_min && d.chi_max <= 2.0 * first.chi_max);
            }
        }
    }

    #[test]
    fn circle_flow_converges() {
        let grid = build_grid(1, &[32], 2).unwrap();
        let r = run_flow(
            &CurvatureFunctionSpec::hk(1),
            &PrescribedData::Constant { c: 3.0 },
            &grid,
            &FlowOptions::default(),
        )
        .unwrap();
        assert!((r.u[5] - slice_oracle(3.0).unwrap()).abs() < 1e-6);
    }

    #[test]
    fn not_converged_carries_diagnostics() {
        let grid = build_grid(2, &[8, 16], 2).unwrap();
        let opts = FlowOptions {
            max_steps: 3,
            ..FlowOptions::default()
        };
        match run_flow(
            &CurvatureFunctionSpec::hk(1),
            &PrescribedData::Constant { c: 2.0 },
            &grid,
            &opts,
        ) {
            Err(FlowError::NotConverged(r)) => {
                assert_eq!(r.history.len(), 3);
                assert!(!r.converged);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn prescribed_json() {
        let f: PrescribedData =
            serde_json::from_str(r#"{"kind":"low_harmonic","c0":2.0,"eps":0.1,"dir":[0,0,1]}"#)
                .unwrap();
        assert_eq!(
            f,
            PrescribedData::LowHarmonic {
                c0: 2.0,
                eps: 0.1,
                dir: [0.0, 0.0, 1.0]
            }
        );
        assert!(
            serde_json::from_str::<PrescribedData>(r#"{"kind":"constant","c":2.0,"extra":1}"#)
                .is_err()
        );
    }
}
