//! Graph hypersurfaces over S^n in hyperbolic space and de Sitter space.
//!
//! Hyperbolic graphs are ρ = u(ξ) in geodesic polar coordinates, embedded as
//! x = (cosh u, sinh u ξ). De Sitter graphs are τ = u(ξ) in the eigen-time chart
//! −dτ² + cosh²τ σ, embedded as x = (sinh u, cosh u ξ).
//!
//! Orientation ledger (the only place signs are fixed):
//! * Hyperbolic: exterior normal ν = (e_r − u^k ξ_k / sinh u)/v, e_r = (sinh u, cosh u ξ).
//!   Geodesic spheres have κ = coth ρ.
//! * De Sitter: future-directed normal ν = ṽ (T + u^k ξ_k / cosh u), T = (cosh u, sinh u ξ).
//!   Slices τ > 0 have κ = tanh τ.
//!
//! In both cases h_ij = −⟨∂_i∂_j x, ν⟩.
//!
//! Gradient factors: for Hyperbolic `v` is the Riemannian factor √(1 + |Du|²/sinh²u)
//! of the conformal chart; for De Sitter `vtilde` is (1 − |Du|²_ḡ)^{−1/2} with
//! |Du|²_ḡ = σ^{ij}u_iu_j / cosh²u. In both ambients `vtilde = 1/v`.

use crate::linalg::{self, Mat2, PencilEigen};
use crate::lorentz::{self, Lv};
use crate::sphere_grid::{covariant_jet, GridError, JetField, Parity, SphereGrid};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Ambient {
    Hyperbolic,
    DeSitter,
}

/// Sign applied to the normal and second fundamental form. `Flipped` exists
/// only to check that downstream verification notices a wrong orientation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Orientation {
    #[default]
    Standard,
    Flipped,
}

impl Orientation {
    pub fn sign(self) -> f64 {
        match self {
            Orientation::Standard => 1.0,
            Orientation::Flipped => -1.0,
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("graph is not spacelike at node {node}: |Du|^2 = {grad_sq}")]
    SpacelikeViolation { node: usize, grad_sq: f64 },
    #[error("radius {value} at node {node} is not positive")]
    NonpositiveRadius { node: usize, value: f64 },
    #[error("non-finite graph value at node {0}")]
    NonFinite(usize),
    #[error(transparent)]
    Grid(#[from] GridError),
}

#[derive(Debug, Clone)]
pub struct GraphHypersurface {
    pub ambient: Ambient,
    pub u: Vec<f64>,
    pub orientation: Orientation,
}

impl GraphHypersurface {
    pub fn new(ambient: Ambient, u: Vec<f64>) -> Self {
        GraphHypersurface {
            ambient,
            u,
            orientation: Orientation::Standard,
        }
    }
}

/// Geometry at one node.
#[derive(Debug, Clone, Copy)]
pub struct NodeShape {
    pub g: Mat2,
    pub h: Mat2,
    /// Mixed shape operator h^i_j = g^{ik}h_kj.
    pub shape: Mat2,
    /// Principal curvatures, ascending (only the first entry is used for n = 1).
    pub kappa: [f64; 2],
    pub eigen: PencilEigen,
    pub v: f64,
    pub vtilde: f64,
    /// σ^{ij}u_iu_j scaled by the ambient warping (sinh²u or cosh²u).
    pub grad_sq: f64,
    /// log of the warping factor: ln sinh u (Hyperbolic) or ln cosh u (De Sitter).
    pub psi: f64,
    pub x: Lv,
    pub nu: Lv,
}

#[derive(Debug, Clone)]
pub struct ShapeField {
    pub ambient: Ambient,
    pub n: usize,
    pub nodes: Vec<NodeShape>,
    pub jet: JetField,
}

impl ShapeField {
    pub fn kappa(&self, node: usize) -> &[f64] {
        &self.nodes[node].kappa[..self.n]
    }
}

pub fn graph_geometry(
    m: &GraphHypersurface,
    grid: &SphereGrid,
) -> Result<ShapeField, GeometryError> {
    grid.check_field(&m.u)?;
    for (i, &u) in m.u.iter().enumerate() {
        if !u.is_finite() {
            return Err(GeometryError::NonFinite(i));
        }
        if m.ambient == Ambient::Hyperbolic && u <= 0.0 {
            return Err(GeometryError::NonpositiveRadius { node: i, value: u });
        }
    }
    let jet = covariant_jet(&m.u, grid)?;
    shape_from_jet(m.ambient, m.orientation, grid, jet)
}

/// Builds the shape field from a given jet (finite-difference or analytic).
pub fn shape_from_jet(
    ambient: Ambient,
    orientation: Orientation,
    grid: &SphereGrid,
    jet: JetField,
) -> Result<ShapeField, GeometryError> {
    let n = grid.n;
    let sgn = orientation.sign();
    let mut nodes = Vec::with_capacity(grid.len());
    for i in 0..grid.len() {
        let u = jet.value[i];
        let du = jet.grad[i];
        let ddu = jet.hess[i];
        let sigma = grid.sigma(i);
        let sinv = grid.sigma_inv(i);
        let xi = grid.xi(i);
        let tang = grid.tangents(i);
        // u^k = σ^{kl} u_l (σ is diagonal)
        let up = [sinv[0][0] * du[0], sinv[1][1] * du[1]];
        let dsq = up[0] * du[0] + up[1] * du[1];
        let (sh, ch) = (u.sinh(), u.cosh());
        let lift = |c: f64, d: f64| -> Lv {
            let mut w = [0.0; 3];
            for a in 0..3 {
                w[a] = c * tang[0][a] + d * tang[1][a];
            }
            lorentz::spatial(&w)
        };
        let mut g = linalg::ZERO2;
        let mut h = linalg::ZERO2;
        let (v, vtilde, grad_sq, psi, x, nu);
        match ambient {
            Ambient::Hyperbolic => {
                grad_sq = dsq / (sh * sh);
                v = (1.0 + grad_sq).sqrt();
                vtilde = 1.0 / v;
                psi = sh.ln();
                let coth = ch / sh;
                for a in 0..n {
                    for b in 0..n {
                        g[a][b] = du[a] * du[b] + sh * sh * sigma[a][b];
                        h[a][b] = sgn
                            * (-ddu[a][b] + 2.0 * coth * du[a] * du[b] + sh * ch * sigma[a][b])
                            / v;
                    }
                }
                x = [ch, sh * xi[0], sh * xi[1], sh * xi[2]];
                let er = [sh, ch * xi[0], ch * xi[1], ch * xi[2]];
                let t = lift(up[0] / sh, up[1] / sh);
                nu = lorentz::scale(sgn / v, &lorentz::sub(&er, &t));
            }
            Ambient::DeSitter => {
                grad_sq = dsq / (ch * ch);
                if grad_sq >= 1.0 || !grad_sq.is_finite() {
                    return Err(GeometryError::SpacelikeViolation { node: i, grad_sq });
                }
                vtilde = 1.0 / (1.0 - grad_sq).sqrt();
                v = 1.0 / vtilde;
                psi = ch.ln();
                let th = sh / ch;
                for a in 0..n {
                    for b in 0..n {
                        g[a][b] = -du[a] * du[b] + ch * ch * sigma[a][b];
                        h[a][b] = sgn
                            * vtilde
                            * (ddu[a][b] - 2.0 * th * du[a] * du[b] + sh * ch * sigma[a][b]);
                    }
                }
                x = [sh, ch * xi[0], ch * xi[1], ch * xi[2]];
                let tt = [ch, sh * xi[0], sh * xi[1], sh * xi[2]];
                let t = lift(up[0] / ch, up[1] / ch);
                nu = lorentz::scale(sgn * vtilde, &lorentz::add(&tt, &t));
            }
        }
        let ginv = linalg::inverse(n, &g);
        let shape = linalg::matmul(n, &ginv, &h);
        let eigen = linalg::pencil_eigen(n, &g, &h);
        nodes.push(NodeShape {
            g,
            h,
            shape,
            kappa: eigen.values,
            eigen,
            v,
            vtilde,
            grad_sq,
            psi,
            x,
            nu,
        });
    }
    Ok(ShapeField {
        ambient,
        n,
        nodes,
        jet,
    })
}

/// Embedded points and unit normals.
pub fn embed(m: &GraphHypersurface, grid: &SphereGrid) -> Result<Vec<(Lv, Lv)>, GeometryError> {
    let s = graph_geometry(m, grid)?;
    Ok(s.nodes.iter().map(|p| (p.x, p.nu)).collect())
}

/// Frame components T(e_a, e_b) in the σ-orthonormal frame e_θ = ∂θ, e_φ = ∂φ/sin θ.
fn to_frame(grid: &SphereGrid, node: usize, t: &Mat2) -> Mat2 {
    if grid.n == 1 {
        return *t;
    }
    let s = grid.theta[grid.row(node)].sin();
    [[t[0][0], t[0][1] / s], [t[1][0] / s, t[1][1] / (s * s)]]
}

/// σ-covariant derivative of a symmetric 2-tensor in the orthonormal frame,
/// indexed `[a][b][k]` = (∇_{e_k} T)(e_a, e_b).
fn frame_derivative(grid: &SphereGrid, comps: &[Vec<f64>; 3]) -> Vec<[[[f64; 2]; 2]; 2]> {
    // comps = (T_θθ, T_θφ, T_φφ) in frame; all even across the poles
    let d: Vec<Vec<[f64; 2]>> = comps
        .iter()
        .map(|c| grid.coord_grad(c, Parity::Even))
        .collect();
    let mut out = Vec::with_capacity(grid.len());
    for i in 0..grid.len() {
        let t = grid.theta[grid.row(i)];
        let (s, c) = t.sin_cos();
        let cot = c / s;
        let tt = [[comps[0][i], comps[1][i]], [comps[1][i], comps[2][i]]];
        let dd = |a: usize, b: usize, k: usize| -> f64 {
            let idx = match (a, b) {
                (0, 0) => 0,
                (1, 1) => 2,
                _ => 1,
            };
            if k == 0 {
                d[idx][i][0]
            } else {
                d[idx][i][1] / s
            }
        };
        let mut r = [[[0.0; 2]; 2]; 2];
        for a in 0..2 {
            for b in 0..2 {
                r[a][b][0] = dd(a, b, 0);
                // ∇_{e_φ} e_θ = cot e_φ, ∇_{e_φ} e_φ = −cot e_θ
                let conn = |a: usize, bb: usize| -> f64 {
                    if a == 0 {
                        cot * tt[1][bb]
                    } else {
                        -cot * tt[0][bb]
                    }
                };
                r[a][b][1] = dd(a, b, 1) - conn(a, b) - conn(b, a);
            }
        }
        out.push(r);
    }
    out
}

/// Per-node max-norm of h_{ab|k} − h_{ak|b} (covariant w.r.t. g) in the σ-orthonormal frame.
pub fn codazzi_residual(s: &ShapeField, grid: &SphereGrid) -> Vec<f64> {
    if grid.n == 1 {
        return vec![0.0; grid.len()];
    }
    let split = |f: &dyn Fn(&NodeShape) -> Mat2| -> (Vec<Mat2>, [Vec<f64>; 3]) {
        let fr: Vec<Mat2> = (0..grid.len())
            .map(|i| to_frame(grid, i, &f(&s.nodes[i])))
            .collect();
        let comps = [
            fr.iter().map(|m| m[0][0]).collect(),
            fr.iter().map(|m| m[0][1]).collect(),
            fr.iter().map(|m| m[1][1]).collect(),
        ];
        (fr, comps)
    };
    let (gf, gc) = split(&|p| p.g);
    let (hf, hc) = split(&|p| p.h);
    let dg = frame_derivative(grid, &gc);
    let dh = frame_derivative(grid, &hc);
    (0..grid.len())
        .map(|i| {
            let ginv = linalg::inverse(2, &gf[i]);
            // difference tensor C^c_{ka} between the Levi-Civita connections of g and σ
            let mut cdiff = [[[0.0; 2]; 2]; 2];
            for c in 0..2 {
                for k in 0..2 {
                    for a in 0..2 {
                        let mut acc = 0.0;
                        for e in 0..2 {
                            acc += ginv[c][e] * (dg[i][e][a][k] + dg[i][e][k][a] - dg[i][k][a][e]);
                        }
                        cdiff[c][k][a] = 0.5 * acc;
                    }
                }
            }
            let h = hf[i];
            let cov = |a: usize, b: usize, k: usize| -> f64 {
                let mut r = dh[i][a][b][k];
                for c in 0..2 {
                    r -= cdiff[c][k][a] * h[c][b] + cdiff[c][k][b] * h[a][c];
                }
                r
            };
            let mut worst: f64 = 0.0;
            for a in 0..2 {
                worst = worst.max((cov(a, 0, 1) - cov(a, 1, 0)).abs());
            }
            worst
        })
        .collect()
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct ConvexityReport {
    pub kappa_min: f64,
    pub kappa_max: f64,
    pub v_min: f64,
    pub v_max: f64,
    pub vtilde_min: f64,
    pub vtilde_max: f64,
    /// min over nodes of 1 − |Du|²_ḡ (De Sitter); +∞ for Hyperbolic graphs.
    pub spacelike_margin: f64,
    pub strictly_convex: bool,
}

pub fn convexity_report(s: &ShapeField) -> ConvexityReport {
    let mut r = ConvexityReport {
        kappa_min: f64::INFINITY,
        kappa_max: f64::NEG_INFINITY,
        v_min: f64::INFINITY,
        v_max: f64::NEG_INFINITY,
        vtilde_min: f64::INFINITY,
        vtilde_max: f64::NEG_INFINITY,
        spacelike_margin: f64::INFINITY,
        strictly_convex: false,
    };
    for p in &s.nodes {
        for &k in &p.kappa[..s.n] {
            r.kappa_min = r.kappa_min.min(k);
            r.kappa_max = r.kappa_max.max(k);
        }
        r.v_min = r.v_min.min(p.v);
        r.v_max = r.v_max.max(p.v);
        r.vtilde_min = r.vtilde_min.min(p.vtilde);
        r.vtilde_max = r.vtilde_max.max(p.vtilde);
        if s.ambient == Ambient::DeSitter {
            r.spacelike_margin = r.spacelike_margin.min(1.0 - p.grad_sq);
        }
    }
    r.strictly_convex = r.kappa_min > 0.0;
    r
}
