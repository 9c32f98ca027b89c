use super::config::read_json;
use super::CliError;
use crate::curvfunc::{kstar_check, CurvatureFunctionSpec};
use crate::duality::{
    beltrami_convexity_check, beltrami_forward, beltrami_inverse, duality_verify, gauss_map,
    gauss_map_cloud, resample_to_graph, DerivMode, DualPair, GaussDirection,
};
use crate::geometry::{codazzi_residual, graph_geometry, Ambient, GraphHypersurface, Orientation};
use crate::lorentz;
use crate::sphere_grid::{build_grid, SphereGrid};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::path::Path;

fn default_ladder() -> Vec<usize> {
    vec![16, 32, 64]
}

fn default_samples() -> usize {
    10_000
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CheckConfig {
    /// Latitude counts of the refinement ladder (longitudes are doubled).
    #[serde(default = "default_ladder")]
    pub ladder: Vec<usize>,
    #[serde(default = "default_samples")]
    pub kstar_samples: usize,
    #[serde(default)]
    pub seed: u64,
    /// Test mode: evaluates the primal fixtures with the wrong orientation.
    #[serde(default)]
    pub flip_orientation: bool,
}

impl Default for CheckConfig {
    fn default() -> Self {
        CheckConfig {
            ladder: default_ladder(),
            kstar_samples: default_samples(),
            seed: 0,
            flip_orientation: false,
        }
    }
}

impl CheckConfig {
    pub fn from_path(path: &Path) -> Result<Self, CliError> {
        read_json(path)
    }
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct SuiteResult {
    pub name: String,
    pub pass: bool,
    pub measured: BTreeMap<String, f64>,
    /// Empirical convergence orders between consecutive ladder rungs.
    pub orders: BTreeMap<String, Vec<f64>>,
    pub failures: Vec<String>,
}

impl SuiteResult {
    fn new(name: &str) -> Self {
        SuiteResult {
            name: name.into(),
            pass: true,
            ..Default::default()
        }
    }

    fn require(&mut self, ok: bool, what: String) {
        if !ok {
            self.pass = false;
            self.failures.push(what);
        }
    }

    fn bound(&mut self, key: &str, value: f64, max: f64) {
        self.measured.insert(key.into(), value);
        self.require(value <= max, format!("{key} = {value:e} exceeds {max:e}"));
    }

    fn order(&mut self, key: &str, ladder: &[usize], errs: &[f64], min: f64) {
        let ords: Vec<f64> = (1..errs.len())
            .map(|i| (errs[i - 1] / errs[i]).ln() / (ladder[i] as f64 / ladder[i - 1] as f64).ln())
            .collect();
        for o in &ords {
            self.require(*o >= min, format!("{key} order {o:.3} below {min}"));
        }
        self.orders.insert(key.into(), ords);
    }

    fn fail(mut self, e: impl std::fmt::Display) -> Self {
        self.pass = false;
        self.failures.push(e.to_string());
        self
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CheckReport {
    pub all_pass: bool,
    pub suites: Vec<SuiteResult>,
}

fn perturbed(grid: &SphereGrid) -> Vec<f64> {
    (0..grid.len())
        .map(|i| 1.0 + 0.05 * grid.xi(i)[2])
        .collect()
}

fn ladder_grids(cfg: &CheckConfig) -> Result<Vec<SphereGrid>, String> {
    if cfg.ladder.len() < 2 {
        return Err("ladder needs at least two resolutions".into());
    }
    cfg.ladder
        .iter()
        .map(|&m| build_grid(2, &[m, 2 * m], 2).map_err(|e| e.to_string()))
        .collect()
}

fn orientation(cfg: &CheckConfig) -> Orientation {
    if cfg.flip_orientation {
        Orientation::Flipped
    } else {
        Orientation::Standard
    }
}

fn duality_suite(cfg: &CheckConfig) -> SuiteResult {
    let s = SuiteResult::new("duality");
    let run = |mut s: SuiteResult| -> Result<SuiteResult, String> {
        let grids = ladder_grids(cfg)?;
        let mut e = [vec![], vec![], vec![], vec![]];
        for grid in &grids {
            let mut m = GraphHypersurface::new(Ambient::Hyperbolic, perturbed(grid));
            m.orientation = orientation(cfg);
            let sh = graph_geometry(&m, grid).map_err(|e| e.to_string())?;
            let cloud = gauss_map(&sh, GaussDirection::HtoN).map_err(|e| e.to_string())?;
            let (dual, _) = resample_to_graph(&cloud, grid).map_err(|e| e.to_string())?;
            let pair = DualPair::new(&sh, &dual, grid, DerivMode::FiniteDifference)
                .map_err(|e| e.to_string())?;
            let r = duality_verify(&pair);
            for (k, v) in [r.inner, r.metric, r.sff, r.kappa].into_iter().enumerate() {
                e[k].push(v);
            }
        }
        for (k, name) in ["inner", "metric", "sff", "kappa"].iter().enumerate() {
            s.order(name, &cfg.ladder, &e[k], 1.8);
        }
        s.bound("kappa_dev_finest", *e[3].last().unwrap(), 1e-3);
        Ok(s)
    };
    run(s.clone()).unwrap_or_else(|e| s.fail(e))
}

fn involution_suite(cfg: &CheckConfig) -> SuiteResult {
    let s = SuiteResult::new("involution");
    let run = |mut s: SuiteResult| -> Result<SuiteResult, String> {
        let grids = ladder_grids(cfg)?;
        let sphere = |grid: &SphereGrid, u: Vec<f64>| -> Result<f64, String> {
            let mut m = GraphHypersurface::new(Ambient::Hyperbolic, u);
            m.orientation = orientation(cfg);
            let sh = graph_geometry(&m, grid).map_err(|e| e.to_string())?;
            let cloud = gauss_map(&sh, GaussDirection::HtoN).map_err(|e| e.to_string())?;
            let back = gauss_map_cloud(&cloud, grid);
            Ok(sh
                .nodes
                .iter()
                .zip(&back)
                .map(|(p, q)| lorentz::euclid_norm(&lorentz::sub(&p.x, q)))
                .fold(0.0, f64::max))
        };
        let mut disp = vec![];
        for grid in &grids {
            disp.push(sphere(grid, perturbed(grid))?);
        }
        s.order("displacement", &cfg.ladder, &disp, 1.8);
        let g0 = &grids[0];
        s.bound(
            "sphere_displacement",
            sphere(g0, vec![0.8; g0.len()])?,
            1e-8,
        );
        Ok(s)
    };
    run(s.clone()).unwrap_or_else(|e| s.fail(e))
}

fn beltrami_suite(cfg: &CheckConfig) -> SuiteResult {
    let s = SuiteResult::new("beltrami");
    let run = |mut s: SuiteResult| -> Result<SuiteResult, String> {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let mut id: f64 = 0.0;
        for _ in 0..1000 {
            let y = [
                rng.gen_range(-0.55..0.55),
                rng.gen_range(-0.55..0.55),
                rng.gen_range(-0.55..0.55),
            ];
            let back = beltrami_forward(&beltrami_inverse(&y).map_err(|e| e.to_string())?)
                .map_err(|e| e.to_string())?;
            id = id.max((0..3).map(|k| (back[k] - y[k]).abs()).fold(0.0, f64::max));
        }
        s.bound("forward_inverse", id, 1e-12);
        let grids = ladder_grids(cfg)?;
        let g0 = &grids[0];
        let sp = beltrami_convexity_check(
            &GraphHypersurface::new(Ambient::Hyperbolic, vec![0.8; g0.len()]),
            g0,
        )
        .map_err(|e| e.to_string())?;
        s.bound(
            "sphere_relation",
            sp.relation_chain.max(sp.relation_fd),
            1e-8,
        );
        s.bound(
            "critical_point",
            sp.critical_point_dev.unwrap_or(f64::INFINITY),
            1e-8,
        );
        let mut fd = vec![];
        for grid in &grids {
            let r = beltrami_convexity_check(
                &GraphHypersurface::new(Ambient::Hyperbolic, perturbed(grid)),
                grid,
            )
            .map_err(|e| e.to_string())?;
            s.require(
                r.eigen_order_holds,
                format!("eigenvalue order violated (gap {:e})", r.min_eigen_gap),
            );
            s.bound("perturbed_relation_chain", r.relation_chain, 1e-8);
            fd.push(r.relation_fd);
        }
        s.order("perturbed_relation_fd", &cfg.ladder, &fd, 1.8);
        Ok(s)
    };
    run(s.clone()).unwrap_or_else(|e| s.fail(e))
}

fn kstar_suite(cfg: &CheckConfig) -> SuiteResult {
    let s = SuiteResult::new("kstar");
    let run = |mut s: SuiteResult| -> Result<SuiteResult, String> {
        let k = kstar_check(
            &CurvatureFunctionSpec::gauss(),
            2,
            cfg.kstar_samples,
            cfg.seed,
        )
        .map_err(|e| e.to_string())?;
        s.measured.insert("gauss_k_inf".into(), k.inf_estimate);
        s.require(
            (k.inf_estimate - 1.0).abs() <= 1e-8,
            format!("GaussK infimum {} not within 1e-8 of 1", k.inf_estimate),
        );
        let h = kstar_check(
            &CurvatureFunctionSpec::hk(1),
            2,
            cfg.kstar_samples,
            cfg.seed,
        )
        .map_err(|e| e.to_string())?;
        s.measured.insert("h1_inf".into(), h.inf_estimate);
        s.require(
            (h.inf_estimate - 0.5).abs() <= 1e-3,
            format!("H1 infimum {} not within 1e-3 of 1/2", h.inf_estimate),
        );
        Ok(s)
    };
    run(s.clone()).unwrap_or_else(|e| s.fail(e))
}

fn codazzi_suite(cfg: &CheckConfig) -> SuiteResult {
    let s = SuiteResult::new("codazzi");
    let run = |mut s: SuiteResult| -> Result<SuiteResult, String> {
        let grids = ladder_grids(cfg)?;
        let g0 = &grids[0];
        let sp = graph_geometry(
            &GraphHypersurface::new(Ambient::Hyperbolic, vec![0.8; g0.len()]),
            g0,
        )
        .map_err(|e| e.to_string())?;
        s.bound(
            "sphere",
            codazzi_residual(&sp, g0).into_iter().fold(0.0, f64::max),
            1e-8,
        );
        let mut band = vec![];
        for grid in &grids {
            let sh = graph_geometry(
                &GraphHypersurface::new(Ambient::Hyperbolic, perturbed(grid)),
                grid,
            )
            .map_err(|e| e.to_string())?;
            let r = codazzi_residual(&sh, grid);
            band.push(
                (0..grid.len())
                    .filter(|&i| grid.theta[grid.row(i)].sin() >= 0.5)
                    .map(|i| r[i])
                    .fold(0.0, f64::max),
            );
        }
        s.order("perturbed_band", &cfg.ladder, &band, 1.8);
        Ok(s)
    };
    run(s.clone()).unwrap_or_else(|e| s.fail(e))
}

/// Runs every verification suite; failures are report entries, not errors.
pub fn run_checks(cfg: &CheckConfig) -> CheckReport {
    let suites = vec![
        duality_suite(cfg),
        involution_suite(cfg),
        beltrami_suite(cfg),
        kstar_suite(cfg),
        codazzi_suite(cfg),
    ];
    CheckReport {
        all_pass: suites.iter().all(|s| s.pass),
        suites,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> CheckConfig {
        CheckConfig {
            ladder: vec![32, 64],
            kstar_samples: 2000,
            ..Default::default()
        }
    }

    #[test]
    fn default_fixtures_pass() {
        let r = run_checks(&small());
        assert!(r.all_pass, "{r:#?}");
        let k = r.suites.iter().find(|s| s.name == "kstar").unwrap();
        assert!((k.measured["gauss_k_inf"] - 1.0).abs() <= 1e-8);
    }

    #[test]
    fn flipped_orientation_fails_duality() {
        let cfg = CheckConfig {
            flip_orientation: true,
            ..small()
        };
        let d = duality_suite(&cfg);
        assert!(!d.pass);
        assert!(!d.failures.is_empty());
    }

    #[test]
    fn short_ladder_is_a_failure_entry() {
        let cfg = CheckConfig {
            ladder: vec![16],
            ..small()
        };
        assert!(!run_checks(&cfg).all_pass);
    }
}
