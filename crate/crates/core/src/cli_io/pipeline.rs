use super::config::{DualizeConfig, SolveConfig};
use super::export::{read_field_csv, write_diagnostics_jsonl, write_field_csv, write_obj};
use super::CliError;
use crate::curvfunc::{f_eval, CurvatureFunctionSpec};
use crate::duality::{
    beltrami_forward, duality_verify, gauss_map, resample_to_graph, DerivMode, DualPair,
    GaussDirection,
};
use crate::flow::{run_flow, BarrierPair, FlowDiagnostics, FlowError, FlowResult};
use crate::geometry::{convexity_report, graph_geometry, Ambient, GraphHypersurface};
use crate::lorentz;
use crate::sphere_grid::{build_grid, SphereGrid};
use serde::Serialize;
use std::path::{Path, PathBuf};
use std::time::Instant;

#[derive(Debug, Clone, Serialize)]
pub struct SolveReport {
    pub converged: bool,
    pub steps: usize,
    /// sup |log F̃ − log f⁻¹| on the final dual graph.
    pub dual_residual: f64,
    /// sup |F(κ) − f(x̃)| on the recovered hyperbolic hypersurface.
    pub primal_residual: Option<f64>,
    pub dual_kappa: [f64; 2],
    pub primal_kappa: Option<[f64; 2]>,
    /// Range of the dual graph τ = u(ξ).
    pub dual_tau: [f64; 2],
    /// Range of the hyperbolic graph ρ = u(ξ).
    pub primal_radius: Option<[f64; 2]>,
    pub barriers: BarrierPair,
    pub wall_time_s: f64,
    pub files: Vec<PathBuf>,
}

#[derive(Debug, Clone)]
pub struct SolveOutput {
    pub report: SolveReport,
    pub dual_u: Vec<f64>,
    pub primal_u: Option<Vec<f64>>,
    pub history: Vec<FlowDiagnostics>,
}

fn range(v: impl Iterator<Item = f64>) -> [f64; 2] {
    v.fold([f64::INFINITY, f64::NEG_INFINITY], |[a, b], x| {
        [a.min(x), b.max(x)]
    })
}

/// Dual flow only; a non-converged run is returned with its diagnostics.
pub fn run_dual_flow(config: &SolveConfig, grid: &SphereGrid) -> Result<FlowResult, CliError> {
    match run_flow(&config.curvature, &config.f, grid, &config.flow) {
        Ok(r) => Ok(r),
        Err(FlowError::NotConverged(r)) => Ok(*r),
        Err(e) => Err(CliError::stage("flow", e)),
    }
}

struct Writer<'a> {
    dir: Option<&'a Path>,
    files: Vec<PathBuf>,
}

impl Writer<'_> {
    fn path(&mut self, name: &str) -> Option<PathBuf> {
        let p = self.dir?.join(name);
        self.files.push(p.clone());
        Some(p)
    }
}

/// Flow on the dual side, Gauss map back to H^{n+1}, resampling to a radial
/// graph and verification of the primal equation. Files are written at the end
/// of each stage, so a failing stage leaves earlier outputs in place.
pub fn solve_minkowski(config: &SolveConfig) -> Result<SolveOutput, CliError> {
    let start = Instant::now();
    let grid = config.validate()?;
    let mut w = Writer {
        dir: config.output_dir.as_deref(),
        files: Vec::new(),
    };
    let emit = config.emit;

    let flow = run_dual_flow(config, &grid)?;
    if emit.fields {
        if let Some(p) = w.path("dual_u.csv") {
            write_field_csv(&p, &grid, &flow.u)?;
        }
    }
    if emit.diagnostics {
        if let Some(p) = w.path("diagnostics.jsonl") {
            write_diagnostics_jsonl(&p, &flow.history)?;
        }
    }
    let dual = graph_geometry(
        &GraphHypersurface::new(Ambient::DeSitter, flow.u.clone()),
        &grid,
    )
    .map_err(|e| CliError::stage("dual_geometry", e))?;
    let mut report = SolveReport {
        converged: flow.converged,
        steps: flow.steps,
        dual_residual: flow.final_residual,
        primal_residual: None,
        dual_kappa: range(dual.nodes.iter().flat_map(|p| p.kappa[..grid.n].to_vec())),
        primal_kappa: None,
        dual_tau: range(flow.u.iter().cloned()),
        primal_radius: None,
        barriers: flow.barriers,
        wall_time_s: 0.0,
        files: Vec::new(),
    };
    let mut primal_u = None;

    if flow.converged {
        let cloud =
            gauss_map(&dual, GaussDirection::NtoH).map_err(|e| CliError::stage("gauss_map", e))?;
        let (hg, _) =
            resample_to_graph(&cloud, &grid).map_err(|e| CliError::stage("resample", e))?;
        let hs = graph_geometry(&hg, &grid).map_err(|e| CliError::stage("primal_geometry", e))?;
        let mut res: f64 = 0.0;
        for p in &hs.nodes {
            let fk = f_eval(&config.curvature, &p.kappa[..grid.n])
                .map_err(|e| CliError::stage("primal_check", e))?;
            res = res.max((fk.value - prescribed_at(config, &p.nu)).abs());
        }
        report.primal_residual = Some(res);
        let cr = convexity_report(&hs);
        report.primal_kappa = Some([cr.kappa_min, cr.kappa_max]);
        report.primal_radius = Some(range(hg.u.iter().cloned()));
        if emit.fields {
            if let Some(p) = w.path("primal_u.csv") {
                write_field_csv(&p, &grid, &hg.u)?;
            }
        }
        if emit.mesh {
            if let Some(p) = w.path("primal_beltrami.obj") {
                let pts = hs
                    .nodes
                    .iter()
                    .map(|q| beltrami_forward(&q.x))
                    .collect::<Result<Vec<_>, _>>()
                    .map_err(|e| CliError::stage("export", e))?;
                write_obj(&p, &grid, &pts)?;
            }
        }
        primal_u = Some(hg.u);
    }

    report.wall_time_s = start.elapsed().as_secs_f64();
    if let Some(p) = w.path("report.json") {
        report.files = w.files.clone();
        let text = serde_json::to_string_pretty(&report).expect("plain record");
        std::fs::write(&p, text).map_err(|e| CliError::io(&p, e))?;
    }
    report.files = w.files;
    Ok(SolveOutput {
        report,
        dual_u: flow.u,
        primal_u,
        history: flow.history,
    })
}

/// f at the de Sitter point x̃ = (sinh τ, cosh τ ξ).
fn prescribed_at(config: &SolveConfig, xt: &lorentz::Lv) -> f64 {
    let tau = xt[0].asinh();
    let mut xi = lorentz::normalize3(&lorentz::space_part(xt));
    if config.n == 1 {
        xi[2] = 0.0;
    }
    config.f.value(tau, &xi)
}

#[derive(Debug, Clone, Serialize)]
pub struct DualizeReport {
    pub input_ambient: Ambient,
    pub dual_ambient: Ambient,
    pub resample_residual: f64,
    pub input_kappa: [f64; 2],
    pub dual_kappa: [f64; 2],
    /// sup |κ̃ κ − 1| between matched principal directions.
    pub kappa_product_dev: f64,
    pub files: Vec<PathBuf>,
}

/// Gauss map of a provided graph, resampled as a graph over the same grid.
pub fn dualize(config: &DualizeConfig) -> Result<(DualizeReport, Vec<f64>), CliError> {
    let grid = build_grid(config.n, &config.resolution, config.stencil_order)
        .map_err(|e| CliError::Config(e.to_string()))?;
    let u = read_field_csv(&config.graph)?;
    let m = GraphHypersurface::new(config.ambient, u);
    let s = graph_geometry(&m, &grid).map_err(|e| CliError::stage("geometry", e))?;
    let dir = match config.ambient {
        Ambient::Hyperbolic => GaussDirection::HtoN,
        Ambient::DeSitter => GaussDirection::NtoH,
    };
    let cloud = gauss_map(&s, dir).map_err(|e| CliError::stage("gauss_map", e))?;
    let (dual, rep) =
        resample_to_graph(&cloud, &grid).map_err(|e| CliError::stage("resample", e))?;
    let ds = graph_geometry(&dual, &grid).map_err(|e| CliError::stage("dual_geometry", e))?;
    let pair = DualPair::new(&s, &dual, &grid, DerivMode::Analytic)
        .map_err(|e| CliError::stage("verify", e))?;
    let dev = duality_verify(&pair);
    let mut files = Vec::new();
    if let Some(d) = &config.output_dir {
        let p = d.join("dual_u.csv");
        write_field_csv(&p, &grid, &dual.u)?;
        files.push(p);
    }
    let report = DualizeReport {
        input_ambient: config.ambient,
        dual_ambient: dual.ambient,
        resample_residual: rep.max_residual,
        input_kappa: range(s.nodes.iter().flat_map(|p| p.kappa[..grid.n].to_vec())),
        dual_kappa: range(ds.nodes.iter().flat_map(|p| p.kappa[..grid.n].to_vec())),
        kappa_product_dev: dev.kappa,
        files,
    };
    Ok((report, dual.u))
}

/// Closed-form radial answer for constant f: every degree-1 normalized F
/// equals κ on umbilic points, so the sphere has coth ρ* = c and its dual
/// slice tanh τ* = 1/c.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SliceOracle {
    pub c: f64,
    pub rho_star: f64,
    pub tau_star: f64,
    pub kappa_primal: f64,
    pub kappa_dual: f64,
}

pub fn slice_oracle_report(
    spec: &CurvatureFunctionSpec,
    n: usize,
    c: f64,
) -> Result<SliceOracle, CliError> {
    spec.validate(n)
        .map_err(|e| CliError::Config(e.to_string()))?;
    let tau = crate::flow::slice_oracle(c)
        .ok_or_else(|| CliError::Config(format!("constant f = {c} must exceed 1")))?;
    // evaluate F on the umbilic point to confirm the normalization
    let k = f_eval(spec, &vec![c; n])
        .map_err(|e| CliError::Config(e.to_string()))?
        .value;
    Ok(SliceOracle {
        c,
        rho_star: tau,
        tau_star: tau,
        kappa_primal: k,
        kappa_dual: 1.0 / c,
    })
}
