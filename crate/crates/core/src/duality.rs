//! Beltrami map, Gauss maps between H^{n+1} and de Sitter space, and duality checks.

use crate::geometry::{graph_geometry, Ambient, GeometryError, GraphHypersurface, ShapeField};
use crate::linalg::{self, Mat2};
use crate::lorentz::{self, Lv};
use crate::sphere_grid::{covariant_jet, GridError, JetField, Parity, SphereGrid};
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DualityError {
    #[error("point {0:?} is not on the upper hyperboloid")]
    NotOnHyperboloid(Lv),
    #[error("point {0:?} lies outside the open unit ball")]
    OutsideBall([f64; 3]),
    #[error("hypersurface is not strictly convex at node {node} (min kappa {kappa})")]
    NotStrictlyConvex { node: usize, kappa: f64 },
    #[error("normal at node {0} is not future directed")]
    NormalNotFutureDirected(usize),
    #[error("expected a {expected:?} hypersurface, got {got:?}")]
    WrongAmbient { expected: Ambient, got: Ambient },
    #[error("direction-map inversion failed at node {node} (residual {residual:e})")]
    NewtonDivergence { node: usize, residual: f64 },
    #[error("Beltrami point is not interior: radius {value} at node {node}")]
    BeltramiPointNotInterior { node: usize, value: f64 },
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Grid(#[from] GridError),
}

const QUADRIC_TOL: f64 = 1e-9;

/// y = x_space / x⁰.
pub fn beltrami_forward(x: &Lv) -> Result<[f64; 3], DualityError> {
    let q = lorentz::mdot(x, x);
    if !(x[0] > 0.0) || (q + 1.0).abs() > QUADRIC_TOL * x[0] * x[0] {
        return Err(DualityError::NotOnHyperboloid(*x));
    }
    Ok([x[1] / x[0], x[2] / x[0], x[3] / x[0]])
}

/// x = (1, y)/√(1 − |y|²).
pub fn beltrami_inverse(y: &[f64; 3]) -> Result<Lv, DualityError> {
    let r2 = lorentz::dot3(y, y);
    if !(r2 < 1.0) {
        return Err(DualityError::OutsideBall(*y));
    }
    let s = 1.0 / (1.0 - r2).sqrt();
    Ok([s, s * y[0], s * y[1], s * y[2]])
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GaussDirection {
    HtoN,
    NtoH,
}

/// Points on one quadric indexed by the nodes of a grid, with their radial
/// coordinate (τ for de Sitter, ρ for hyperbolic) and direction on S^n.
#[derive(Debug, Clone)]
pub struct DualCloud {
    pub ambient: Ambient,
    pub points: Vec<Lv>,
    pub radial: Vec<f64>,
    pub directions: Vec<[f64; 3]>,
}

impl DualCloud {
    pub fn from_points(ambient: Ambient, points: Vec<Lv>) -> Self {
        let radial = points
            .iter()
            .map(|p| match ambient {
                Ambient::DeSitter => p[0].asinh(),
                Ambient::Hyperbolic => p[0].max(1.0).acosh(),
            })
            .collect();
        let directions = points
            .iter()
            .map(|p| lorentz::normalize3(&lorentz::space_part(p)))
            .collect();
        DualCloud {
            ambient,
            points,
            radial,
            directions,
        }
    }

    /// Every point has positive time component.
    pub fn in_future_half(&self) -> bool {
        self.points.iter().all(|p| p[0] > 0.0)
    }
}

/// Gauss map of a graph: each node is sent to its unit normal.
pub fn gauss_map(shape: &ShapeField, direction: GaussDirection) -> Result<DualCloud, DualityError> {
    let (expected, target) = match direction {
        GaussDirection::HtoN => (Ambient::Hyperbolic, Ambient::DeSitter),
        GaussDirection::NtoH => (Ambient::DeSitter, Ambient::Hyperbolic),
    };
    if shape.ambient != expected {
        return Err(DualityError::WrongAmbient {
            expected,
            got: shape.ambient,
        });
    }
    for (i, p) in shape.nodes.iter().enumerate() {
        if !(p.kappa[0] > 0.0) {
            return Err(DualityError::NotStrictlyConvex {
                node: i,
                kappa: p.kappa[0],
            });
        }
        if direction == GaussDirection::NtoH && !(p.nu[0] > 0.0) {
            return Err(DualityError::NormalNotFutureDirected(i));
        }
    }
    Ok(DualCloud::from_points(
        target,
        shape.nodes.iter().map(|p| p.nu).collect(),
    ))
}

/// Unit normals of a point cloud indexed on `grid`, from the Lorentzian
/// orthogonal complement of the point and its finite-difference tangents.
///
/// The normal of a de Sitter cloud is taken future directed; the normal of a
/// hyperbolic cloud is taken exterior (spatial part along the point's).
pub fn gauss_map_cloud(cloud: &DualCloud, grid: &SphereGrid) -> Vec<Lv> {
    let tangents = cloud_tangents(&cloud.points, grid);
    cloud
        .points
        .iter()
        .zip(&tangents)
        .map(|(x, t)| {
            let third = if grid.n == 1 {
                [0.0, 0.0, 0.0, 1.0]
            } else {
                t[1]
            };
            let w = lorentz::cross4(x, &t[0], &third);
            let w = lorentz::scale(1.0 / lorentz::mdot(&w, &w).abs().sqrt(), &w);
            let flip = match cloud.ambient {
                Ambient::DeSitter => w[0] < 0.0,
                Ambient::Hyperbolic => {
                    lorentz::dot3(&lorentz::space_part(&w), &lorentz::space_part(x)) < 0.0
                }
            };
            if flip {
                lorentz::scale(-1.0, &w)
            } else {
                w
            }
        })
        .collect()
}

/// Finite-difference coordinate tangents ∂x/∂θ, ∂x/∂φ of a cloud.
pub fn cloud_tangents(points: &[Lv], grid: &SphereGrid) -> Vec<[Lv; 2]> {
    let comps: Vec<Vec<[f64; 2]>> = (0..4)
        .map(|a| {
            grid.coord_grad(
                &points.iter().map(|p| p[a]).collect::<Vec<_>>(),
                Parity::Even,
            )
        })
        .collect();
    (0..points.len())
        .map(|i| {
            let mut t = [[0.0; 4]; 2];
            for k in 0..grid.n {
                for a in 0..4 {
                    t[k][a] = comps[a][i][k];
                }
            }
            t
        })
        .collect()
}

/// Orthonormal tangent basis of S^n at a unit vector.
fn tangent_basis(grid: &SphereGrid, eta: &[f64; 3]) -> [[f64; 3]; 2] {
    if grid.n == 1 {
        return [[-eta[1], eta[0], 0.0], [0.0; 3]];
    }
    let helper = if eta[2].abs() < 0.9 {
        [0.0, 0.0, 1.0]
    } else {
        [1.0, 0.0, 0.0]
    };
    let e1 = lorentz::normalize3(&lorentz::cross3(&helper, eta));
    let e0 = lorentz::cross3(eta, &e1);
    [e0, e1]
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct ResampleReport {
    pub max_residual: f64,
    pub max_iterations: usize,
}

const SNAP_TOL: f64 = 1e-12;
const RESAMPLE_TOL: f64 = 1e-10;

/// Re-parameterizes a cloud (indexed on `grid`) as a graph over the same grid:
/// for each node direction η finds ξ with ξ̃(ξ) = η and interpolates the radial value there.
pub fn resample_to_graph(
    cloud: &DualCloud,
    grid: &SphereGrid,
) -> Result<(GraphHypersurface, ResampleReport), DualityError> {
    grid.check_field(&cloud.radial)?;
    let dir_comp: Vec<Vec<f64>> = (0..3)
        .map(|a| cloud.directions.iter().map(|d| d[a]).collect())
        .collect();
    let dir_at = |p: &[f64; 3]| -> [f64; 3] {
        lorentz::normalize3(&[
            grid.interpolate(&dir_comp[0], p),
            grid.interpolate(&dir_comp[1], p),
            grid.interpolate(&dir_comp[2], p),
        ])
    };
    let mut u = vec![0.0; grid.len()];
    let mut rep = ResampleReport {
        max_residual: 0.0,
        max_iterations: 0,
    };
    for node in 0..grid.len() {
        let eta = grid.xi(node);
        let d = cloud.directions[node];
        let gap = lorentz::norm3(&[d[0] - eta[0], d[1] - eta[1], d[2] - eta[2]]);
        if gap <= SNAP_TOL {
            u[node] = cloud.radial[node];
            rep.max_residual = rep.max_residual.max(gap);
            continue;
        }
        let e = tangent_basis(grid, &eta);
        let n = grid.n;
        let point = |a: &[f64; 2]| -> [f64; 3] {
            let mut p = eta;
            for k in 0..n {
                for c in 0..3 {
                    p[c] += a[k] * e[k][c];
                }
            }
            lorentz::normalize3(&p)
        };
        let resid = |a: &[f64; 2]| -> [f64; 2] {
            let t = dir_at(&point(a));
            let mut r = [0.0; 2];
            for k in 0..n {
                r[k] = lorentz::dot3(&t, &e[k]);
            }
            r
        };
        let norm = |r: &[f64; 2]| r[0].hypot(r[1]);
        let mut a = [0.0; 2];
        let mut r = resid(&a);
        let mut iters = 0;
        while norm(&r) > 1e-14 && iters < 60 {
            iters += 1;
            let fd = 1e-7;
            let mut jac = linalg::ZERO2;
            for k in 0..n {
                let mut ap = a;
                let mut am = a;
                ap[k] += fd;
                am[k] -= fd;
                let (rp, rm) = (resid(&ap), resid(&am));
                for m in 0..n {
                    jac[m][k] = (rp[m] - rm[m]) / (2.0 * fd);
                }
            }
            if linalg::det(n, &jac).abs() < 1e-14 {
                break;
            }
            let ji = linalg::inverse(n, &jac);
            let mut step = [0.0; 2];
            for m in 0..n {
                step[m] = -(0..n).map(|k| ji[m][k] * r[k]).sum::<f64>();
            }
            let mut lam = 1.0;
            let mut accepted = false;
            for _ in 0..30 {
                let trial = [a[0] + lam * step[0], a[1] + lam * step[1]];
                let rt = resid(&trial);
                if norm(&rt) < norm(&r) {
                    a = trial;
                    r = rt;
                    accepted = true;
                    break;
                }
                lam *= 0.5;
            }
            if !accepted {
                break;
            }
        }
        let xi = point(&a);
        let t = dir_at(&xi);
        let res = lorentz::norm3(&[t[0] - eta[0], t[1] - eta[1], t[2] - eta[2]]);
        if !(res <= RESAMPLE_TOL) {
            return Err(DualityError::NewtonDivergence {
                node,
                residual: res,
            });
        }
        rep.max_residual = rep.max_residual.max(res);
        rep.max_iterations = rep.max_iterations.max(iters);
        u[node] = grid.interpolate(&cloud.radial, &xi);
    }
    Ok((GraphHypersurface::new(cloud.ambient, u), rep))
}

/// sup over the sampled primal points of ⟨x, y⟩, with the maximizing index.
pub fn polar_gap(primal: &[Lv], y: &Lv) -> (f64, usize) {
    let mut best = (f64::NEG_INFINITY, 0);
    for (i, x) in primal.iter().enumerate() {
        let v = lorentz::mdot(x, y);
        if v > best.0 {
            best = (v, i);
        }
    }
    best
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DerivMode {
    /// Dual tangents from the Weingarten map and the chain rule.
    Analytic,
    /// Dual tangents by finite differences of the sampled dual cloud.
    FiniteDifference,
}

/// A primal graph and the dual graph sampled at the primal Gauss-image
/// directions, matched by primal node index.
#[derive(Debug, Clone)]
pub struct DualPair {
    pub n: usize,
    pub spacing: f64,
    pub x: Vec<Lv>,
    pub x_t: Vec<[Lv; 2]>,
    pub h: Vec<Mat2>,
    pub g: Vec<Mat2>,
    pub kappa: Vec<[f64; 2]>,
    pub xd: Vec<Lv>,
    pub xd_t: Vec<[Lv; 2]>,
    /// σ-orthonormal frame scales (1, sin θ) per node.
    pub frame: Vec<[f64; 2]>,
}

/// Analytic coordinate tangents of a graph embedding from its jet.
fn graph_tangents(
    ambient: Ambient,
    grid: &SphereGrid,
    node: usize,
    u: f64,
    du: [f64; 2],
) -> [Lv; 2] {
    let xi = grid.xi(node);
    let tang = grid.tangents(node);
    let (sh, ch) = (u.sinh(), u.cosh());
    let (radial, warp) = match ambient {
        Ambient::Hyperbolic => ([sh, ch * xi[0], ch * xi[1], ch * xi[2]], sh),
        Ambient::DeSitter => ([ch, sh * xi[0], sh * xi[1], sh * xi[2]], ch),
    };
    let mut t = [[0.0; 4]; 2];
    for k in 0..grid.n {
        let s = lorentz::spatial(&tang[k]);
        t[k] = lorentz::add(&lorentz::scale(du[k], &radial), &lorentz::scale(warp, &s));
    }
    t
}

/// Cartesian gradient field of a jet, as three component fields.
fn cartesian_gradient(grid: &SphereGrid, jet: &JetField) -> [Vec<f64>; 3] {
    let mut out = [
        vec![0.0; grid.len()],
        vec![0.0; grid.len()],
        vec![0.0; grid.len()],
    ];
    for i in 0..grid.len() {
        let tang = grid.tangents(i);
        let si = grid.sigma_inv(i);
        for c in 0..3 {
            let mut v = 0.0;
            for k in 0..grid.n {
                v += si[k][k] * jet.grad[i][k] * tang[k][c];
            }
            out[c][i] = v;
        }
    }
    out
}

fn embed_point(ambient: Ambient, r: f64, d: &[f64; 3]) -> Lv {
    match ambient {
        Ambient::Hyperbolic => [r.cosh(), r.sinh() * d[0], r.sinh() * d[1], r.sinh() * d[2]],
        Ambient::DeSitter => [r.sinh(), r.cosh() * d[0], r.cosh() * d[1], r.cosh() * d[2]],
    }
}

impl DualPair {
    pub fn new(
        primal: &ShapeField,
        dual: &GraphHypersurface,
        grid: &SphereGrid,
        mode: DerivMode,
    ) -> Result<DualPair, DualityError> {
        if dual.ambient == primal.ambient {
            let expected = match primal.ambient {
                Ambient::Hyperbolic => Ambient::DeSitter,
                Ambient::DeSitter => Ambient::Hyperbolic,
            };
            return Err(DualityError::WrongAmbient {
                expected,
                got: dual.ambient,
            });
        }
        grid.check_field(&dual.u)?;
        let n = grid.n;
        let djet = covariant_jet(&dual.u, grid)?;
        let dgrad = cartesian_gradient(grid, &djet);
        let mut x = Vec::with_capacity(grid.len());
        let mut x_t = Vec::with_capacity(grid.len());
        let mut xd = Vec::with_capacity(grid.len());
        let mut analytic_t = Vec::with_capacity(grid.len());
        for i in 0..grid.len() {
            let p = &primal.nodes[i];
            let pt = graph_tangents(
                primal.ambient,
                grid,
                i,
                primal.jet.value[i],
                primal.jet.grad[i],
            );
            let s = lorentz::space_part(&p.nu);
            let eta = lorentz::normalize3(&s);
            let own = grid.xi(i);
            let snapped =
                lorentz::norm3(&[eta[0] - own[0], eta[1] - own[1], eta[2] - own[2]]) <= SNAP_TOL;
            let (r, gradc) = if snapped {
                (dual.u[i], [dgrad[0][i], dgrad[1][i], dgrad[2][i]])
            } else {
                (
                    grid.interpolate(&dual.u, &eta),
                    [
                        grid.interpolate(&dgrad[0], &eta),
                        grid.interpolate(&dgrad[1], &eta),
                        grid.interpolate(&dgrad[2], &eta),
                    ],
                )
            };
            let xdi = embed_point(dual.ambient, r, &eta);
            // Weingarten: ν_k = h_k^l x_l, then the chain rule through η(ξ)
            let mut at = [[0.0; 4]; 2];
            for k in 0..n {
                let mut nuk = [0.0; 4];
                for l in 0..n {
                    let c = p.shape[l][k];
                    nuk = lorentz::add(&nuk, &lorentz::scale(c, &pt[l]));
                }
                let sk = lorentz::space_part(&nuk);
                let sn = lorentz::norm3(&s);
                let proj = lorentz::dot3(&eta, &sk);
                let etak = [
                    (sk[0] - eta[0] * proj) / sn,
                    (sk[1] - eta[1] * proj) / sn,
                    (sk[2] - eta[2] * proj) / sn,
                ];
                let rk = lorentz::dot3(&gradc, &etak);
                let (sh, ch) = (r.sinh(), r.cosh());
                let (radial, warp) = match dual.ambient {
                    Ambient::Hyperbolic => ([sh, ch * eta[0], ch * eta[1], ch * eta[2]], sh),
                    Ambient::DeSitter => ([ch, sh * eta[0], sh * eta[1], sh * eta[2]], ch),
                };
                at[k] = lorentz::add(
                    &lorentz::scale(rk, &radial),
                    &lorentz::scale(warp, &lorentz::spatial(&etak)),
                );
            }
            x.push(p.x);
            x_t.push(pt);
            xd.push(xdi);
            analytic_t.push(at);
        }
        let xd_t = match mode {
            DerivMode::Analytic => analytic_t,
            DerivMode::FiniteDifference => cloud_tangents(&xd, grid),
        };
        let frame = (0..grid.len())
            .map(|i| {
                if n == 2 {
                    [1.0, grid.theta[grid.row(i)].sin()]
                } else {
                    [1.0, 1.0]
                }
            })
            .collect();
        Ok(DualPair {
            n,
            spacing: grid.dtheta,
            x,
            x_t,
            h: primal.nodes.iter().map(|p| p.h).collect(),
            g: primal.nodes.iter().map(|p| p.g).collect(),
            kappa: primal.nodes.iter().map(|p| p.kappa).collect(),
            xd,
            xd_t,
            frame,
        })
    }
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct DualityReport {
    /// max |⟨x, x̃⟩|
    pub inner: f64,
    /// max |g̃_ij − h_ik h^k_j| in the σ-orthonormal frame
    pub metric: f64,
    /// max |h̃_ij − h_ij| in the σ-orthonormal frame
    pub sff: f64,
    /// max |κ̃_m κ_m − 1| with κ̃ descending against κ ascending
    pub kappa: f64,
    pub spacing: f64,
}

pub fn duality_verify(pair: &DualPair) -> DualityReport {
    let n = pair.n;
    let mut r = DualityReport {
        inner: 0.0,
        metric: 0.0,
        sff: 0.0,
        kappa: 0.0,
        spacing: pair.spacing,
    };
    for i in 0..pair.x.len() {
        r.inner = r.inner.max(lorentz::mdot(&pair.x[i], &pair.xd[i]).abs());
        let mut gd = linalg::ZERO2;
        let mut hd = linalg::ZERO2;
        for a in 0..n {
            for b in 0..n {
                gd[a][b] = lorentz::mdot(&pair.xd_t[i][a], &pair.xd_t[i][b]);
                hd[a][b] = 0.5
                    * (lorentz::mdot(&pair.xd_t[i][a], &pair.x_t[i][b])
                        + lorentz::mdot(&pair.xd_t[i][b], &pair.x_t[i][a]));
            }
        }
        let gi = linalg::inverse(n, &pair.g[i]);
        let third = linalg::matmul(n, &pair.h[i], &linalg::matmul(n, &gi, &pair.h[i]));
        let f = pair.frame[i];
        for a in 0..n {
            for b in 0..n {
                let s = f[a] * f[b];
                r.metric = r.metric.max((gd[a][b] - third[a][b]).abs() / s);
                r.sff = r.sff.max((hd[a][b] - pair.h[i][a][b]).abs() / s);
            }
        }
        let e = linalg::pencil_eigen(n, &gd, &hd);
        for m in 0..n {
            let kd = e.values[n - 1 - m];
            r.kappa = r.kappa.max((kd * pair.kappa[i][m] - 1.0).abs());
        }
    }
    r
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct BeltramiReport {
    /// max relative deviation of h̃ṽ = (1 − r²) h v with chain-rule jets of ln tanh u
    pub relation_chain: f64,
    /// same with finite-difference jets of ln tanh u
    pub relation_fd: f64,
    /// min over nodes and m of κ̃_m − κ_m (Euclidean image against hyperbolic)
    pub min_eigen_gap: f64,
    pub eigen_order_holds: bool,
    /// max |κ̃_m − κ_m| over nodes where Du vanishes; None if there are none
    pub critical_point_dev: Option<f64>,
}

fn euclid_shape(
    n: usize,
    r: f64,
    du: [f64; 2],
    ddu: &Mat2,
    sigma: &Mat2,
    sinv: &Mat2,
) -> (Mat2, Mat2, f64) {
    let dsq: f64 = (0..n).map(|k| sinv[k][k] * du[k] * du[k]).sum();
    let vt = (1.0 + dsq).sqrt();
    let mut h = linalg::ZERO2;
    let mut g = linalg::ZERO2;
    for a in 0..n {
        for b in 0..n {
            h[a][b] = r / vt * (-ddu[a][b] + du[a] * du[b] + sigma[a][b]);
            g[a][b] = r * r * (du[a] * du[b] + sigma[a][b]);
        }
    }
    (h, g, vt)
}

/// Compares the hyperbolic graph with its Beltrami image in the unit ball,
/// written in the Euclidean log-radial chart ũ = ln tanh u.
pub fn beltrami_convexity_check(
    m: &GraphHypersurface,
    grid: &SphereGrid,
) -> Result<BeltramiReport, DualityError> {
    if m.ambient != Ambient::Hyperbolic {
        return Err(DualityError::WrongAmbient {
            expected: Ambient::Hyperbolic,
            got: m.ambient,
        });
    }
    grid.check_field(&m.u)?;
    for (i, &u) in m.u.iter().enumerate() {
        if !(u > 0.0) {
            return Err(DualityError::BeltramiPointNotInterior { node: i, value: u });
        }
    }
    let s = graph_geometry(m, grid)?;
    let ut: Vec<f64> = m.u.iter().map(|u| u.tanh().ln()).collect();
    let fd_jet = covariant_jet(&ut, grid)?;
    let n = grid.n;
    let mut rep = BeltramiReport {
        relation_chain: 0.0,
        relation_fd: 0.0,
        min_eigen_gap: f64::INFINITY,
        eigen_order_holds: true,
        critical_point_dev: None,
    };
    for i in 0..grid.len() {
        let p = &s.nodes[i];
        let u = m.u[i];
        let r = u.tanh();
        let sigma = grid.sigma(i);
        let sinv = grid.sigma_inv(i);
        let f = if n == 2 {
            [1.0, grid.theta[grid.row(i)].sin()]
        } else {
            [1.0, 1.0]
        };
        // chain rule through w = u_i/sinh u: ũ_i = w_i/cosh u, ũ_ij = w_ij/cosh u − r² w_i w_j
        let (sh, ch) = (u.sinh(), u.cosh());
        let du = s.jet.grad[i];
        let ddu = s.jet.hess[i];
        let mut cg = [0.0; 2];
        let mut ch_ = linalg::ZERO2;
        for a in 0..n {
            cg[a] = du[a] / (sh * ch);
        }
        for a in 0..n {
            for b in 0..n {
                let wab = ddu[a][b] / sh - ch * du[a] * du[b] / (sh * sh);
                let wa = du[a] / sh;
                let wb = du[b] / sh;
                ch_[a][b] = wab / ch - r * r * wa * wb;
            }
        }
        let rhs_scale = (1.0 - r * r) * p.v;
        let eval = |jg: [f64; 2], jh: &Mat2| -> (f64, Mat2, Mat2) {
            let (he, ge, vt) = euclid_shape(n, r, jg, jh, &sigma, &sinv);
            let mut dev: f64 = 0.0;
            let mut mag: f64 = 0.0;
            for a in 0..n {
                for b in 0..n {
                    let rhs = rhs_scale * p.h[a][b];
                    dev = dev.max((he[a][b] * vt - rhs).abs() / (f[a] * f[b]));
                    mag = mag.max(rhs.abs() / (f[a] * f[b]));
                }
            }
            (dev / mag, he, ge)
        };
        let (dc, he, ge) = eval(cg, &ch_);
        let (dfd, _, _) = eval(fd_jet.grad[i], &fd_jet.hess[i]);
        rep.relation_chain = rep.relation_chain.max(dc);
        rep.relation_fd = rep.relation_fd.max(dfd);
        let ke = linalg::pencil_eigen(n, &ge, &he);
        for k in 0..n {
            rep.min_eigen_gap = rep.min_eigen_gap.min(ke.values[k] - p.kappa[k]);
        }
        let dnorm: f64 = (0..n).map(|k| du[k].abs()).fold(0.0, f64::max);
        if dnorm == 0.0 {
            let dev = (0..n)
                .map(|k| (ke.values[k] - p.kappa[k]).abs())
                .fold(0.0, f64::max);
            rep.critical_point_dev = Some(rep.critical_point_dev.unwrap_or(0.0).max(dev));
        }
    }
    rep.eigen_order_holds = rep.min_eigen_gap >= -1e-10;
    Ok(rep)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sphere_grid::build_grid;

    fn fixture(grid: &SphereGrid, f: impl Fn([f64; 3]) -> f64) -> Vec<f64> {
        (0..grid.len()).map(|i| f(grid.xi(i))).collect()
    }

    #[test]
    fn beltrami_examples() {
        assert_eq!(beltrami_forward(&[1.0, 0.0, 0.0, 0.0]).unwrap(), [0.0; 3]);
        let rho: f64 = 1.3;
        let xi = lorentz::normalize3(&[0.2, -0.5, 0.7]);
        let x = [
            rho.cosh(),
            rho.sinh() * xi[0],
            rho.sinh() * xi[1],
            rho.sinh() * xi[2],
        ];
        let y = beltrami_forward(&x).unwrap();
        for a in 0..3 {
            assert!((y[a] - rho.tanh() * xi[a]).abs() < 1e-15);
        }
        let back = beltrami_inverse(&y).unwrap();
        for a in 0..4 {
            assert!((back[a] - x[a]).abs() < 1e-12);
        }
        let y = [0.3, 0.1, -0.2];
        let r2: f64 = 0.14;
        let x = beltrami_inverse(&y).unwrap();
        assert!((x[0] - 1.0 / (1.0 - r2).sqrt()).abs() < 1e-15);
        assert!(matches!(
            beltrami_forward(&[1.0, 1.0, 0.0, 0.0]),
            Err(DualityError::NotOnHyperboloid(_))
        ));
        assert!(matches!(
            beltrami_forward(&[-1.0, 0.0, 0.0, 0.0]),
            Err(DualityError::NotOnHyperboloid(_))
        ));
        assert!(matches!(
            beltrami_inverse(&[0.6, 0.8, 0.0]),
            Err(DualityError::OutsideBall(_))
        ));
    }

    #[test]
    fn sphere_maps_to_slice_with_same_directions() {
        let grid = build_grid(2, &[8, 16], 2).unwrap();
        let rho0 = 0.8;
        let s = graph_geometry(
            &GraphHypersurface::new(Ambient::Hyperbolic, vec![rho0; grid.len()]),
            &grid,
        )
        .unwrap();
        let c = gauss_map(&s, GaussDirection::HtoN).unwrap();
        assert!(c.in_future_half());
        for i in 0..grid.len() {
            assert!((c.radial[i] - rho0).abs() < 1e-14);
            let xi = grid.xi(i);
            for a in 0..3 {
                assert!((c.directions[i][a] - xi[a]).abs() < 1e-14);
            }
        }
        let (g, rep) = resample_to_graph(&c, &grid).unwrap();
        assert_eq!(g.u, c.radial);
        assert!(rep.max_residual <= 1e-12);
    }

    #[test]
    fn gauss_map_errors() {
        let grid = build_grid(2, &[8, 16], 2).unwrap();
        let s = graph_geometry(
            &GraphHypersurface::new(Ambient::Hyperbolic, vec![0.8; grid.len()]),
            &grid,
        )
        .unwrap();
        assert!(matches!(
            gauss_map(&s, GaussDirection::NtoH),
            Err(DualityError::WrongAmbient { .. })
        ));
        let mut flipped = GraphHypersurface::new(Ambient::DeSitter, vec![0.8; grid.len()]);
        flipped.orientation = crate::geometry::Orientation::Flipped;
        let s = graph_geometry(&flipped, &grid).unwrap();
        assert!(matches!(
            gauss_map(&s, GaussDirection::NtoH),
            Err(DualityError::NotStrictlyConvex { .. })
        ));
        // slices in the past half have negative curvature under the future normal
        let s = graph_geometry(
            &GraphHypersurface::new(Ambient::DeSitter, vec![-0.5; grid.len()]),
            &grid,
        )
        .unwrap();
        assert!(matches!(
            gauss_map(&s, GaussDirection::NtoH),
            Err(DualityError::NotStrictlyConvex { .. })
        ));
    }

    #[test]
    fn curvatures_invert_at_a_node() {
        // κ = (2, 3) on a hyperbolic sphere-like node → dual (1/2, 1/3)
        let grid = build_grid(2, &[32, 64], 2).unwrap();
        let u = fixture(&grid, |x| 0.9 + 0.04 * x[2] * x[2] + 0.03 * x[0]);
        let m = GraphHypersurface::new(Ambient::Hyperbolic, u);
        let s = graph_geometry(&m, &grid).unwrap();
        let c = gauss_map(&s, GaussDirection::HtoN).unwrap();
        let (dual, _) = resample_to_graph(&c, &grid).unwrap();
        let pair = DualPair::new(&s, &dual, &grid, DerivMode::Analytic).unwrap();
        let r = duality_verify(&pair);
        assert!(r.kappa < 1e-3, "{r:?}");
    }

    #[test]
    fn sphere_slice_pair_is_exact_with_analytic_tangents() {
        for n in [1, 2] {
            let grid = if n == 1 {
                build_grid(1, &[16], 2)
            } else {
                build_grid(2, &[8, 16], 2)
            }
            .unwrap();
            let s = graph_geometry(
                &GraphHypersurface::new(Ambient::Hyperbolic, vec![0.7; grid.len()]),
                &grid,
            )
            .unwrap();
            let dual = GraphHypersurface::new(Ambient::DeSitter, vec![0.7; grid.len()]);
            let r = duality_verify(&DualPair::new(&s, &dual, &grid, DerivMode::Analytic).unwrap());
            assert!(
                r.inner <= 1e-8 && r.metric <= 1e-8 && r.sff <= 1e-8 && r.kappa <= 1e-8,
                "{r:?}"
            );
        }
    }

    #[test]
    fn mismatched_pair_is_detected() {
        let grid = build_grid(2, &[8, 16], 2).unwrap();
        let (rho0, tau0): (f64, f64) = (0.7, 1.1);
        let s = graph_geometry(
            &GraphHypersurface::new(Ambient::Hyperbolic, vec![rho0; grid.len()]),
            &grid,
        )
        .unwrap();
        let dual = GraphHypersurface::new(Ambient::DeSitter, vec![tau0; grid.len()]);
        let r = duality_verify(&DualPair::new(&s, &dual, &grid, DerivMode::Analytic).unwrap());
        assert!((r.inner - (rho0 - tau0).sinh().abs()).abs() < 1e-12);
    }

    #[test]
    fn polar_gap_examples() {
        let grid = build_grid(2, &[16, 32], 2).unwrap();
        let rho: f64 = 0.8;
        let s = graph_geometry(
            &GraphHypersurface::new(Ambient::Hyperbolic, vec![rho; grid.len()]),
            &grid,
        )
        .unwrap();
        let pts: Vec<Lv> = s.nodes.iter().map(|p| p.x).collect();
        let xi = grid.xi(37);
        let y = embed_point(Ambient::DeSitter, rho, &xi);
        let (gap, arg) = polar_gap(&pts, &y);
        assert!(gap.abs() < 1e-12);
        assert_eq!(arg, 37);
        // dual point of a larger sphere: sup⟨x, y⟩ = sinh(ρ − τ) < 0
        let tau: f64 = 1.2;
        let y = embed_point(Ambient::DeSitter, tau, &xi);
        let (gap, arg) = polar_gap(&pts, &y);
        assert!((gap - (rho - tau).sinh()).abs() < 1e-12);
        assert_eq!(arg, 37);
        // reversed spatial direction: brute force against the closed form at the antipode
        let y = [
            tau.sinh(),
            -tau.cosh() * xi[0],
            -tau.cosh() * xi[1],
            -tau.cosh() * xi[2],
        ];
        let (gap, _) = polar_gap(&pts, &y);
        let brute = pts
            .iter()
            .map(|x| lorentz::mdot(x, &y))
            .fold(f64::NEG_INFINITY, f64::max);
        assert_eq!(gap, brute);
        assert!(gap <= -(rho.cosh() * tau.sinh()) + rho.sinh() * tau.cosh() + 1e-12);
    }

    #[test]
    fn cloud_normal_of_slice_is_sphere() {
        let grid = build_grid(2, &[8, 16], 2).unwrap();
        let s = graph_geometry(
            &GraphHypersurface::new(Ambient::Hyperbolic, vec![0.6; grid.len()]),
            &grid,
        )
        .unwrap();
        let c = gauss_map(&s, GaussDirection::HtoN).unwrap();
        let back = gauss_map_cloud(&c, &grid);
        for (p, q) in s.nodes.iter().zip(&back) {
            assert!(lorentz::euclid_norm(&lorentz::sub(&p.x, q)) < 1e-8);
        }
    }

    #[test]
    fn beltrami_relation_on_sphere_and_critical_points() {
        let grid = build_grid(2, &[16, 32], 2).unwrap();
        let rep = beltrami_convexity_check(
            &GraphHypersurface::new(Ambient::Hyperbolic, vec![0.9; grid.len()]),
            &grid,
        )
        .unwrap();
        assert!(
            rep.relation_chain < 1e-8 && rep.relation_fd < 1e-8,
            "{rep:?}"
        );
        assert!(rep.eigen_order_holds);
        // odd colatitude count puts the equator on a row where the zonal gradient vanishes
        let grid = build_grid(2, &[17, 34], 2).unwrap();
        let u = fixture(&grid, |x| 0.9 + 0.05 * (2.0 * x[2] * x[2] - 1.0));
        let rep = beltrami_convexity_check(&GraphHypersurface::new(Ambient::Hyperbolic, u), &grid)
            .unwrap();
        assert!(rep.critical_point_dev.unwrap() < 1e-8, "{rep:?}");
        assert!(rep.relation_chain < 1e-12);
    }

    #[test]
    fn beltrami_errors() {
        let grid = build_grid(2, &[8, 16], 2).unwrap();
        let mut u = vec![0.5; grid.len()];
        u[2] = 0.0;
        assert!(matches!(
            beltrami_convexity_check(&GraphHypersurface::new(Ambient::Hyperbolic, u), &grid),
            Err(DualityError::BeltramiPointNotInterior { node: 2, .. })
        ));
    }

    #[test]
    fn newton_divergence_reported() {
        let grid = build_grid(2, &[8, 16], 2).unwrap();
        // a cloud whose directions all collapse to one point is not invertible
        let pts: Vec<Lv> = (0..grid.len())
            .map(|_| [0.5f64.sinh(), 0.0, 0.0, 0.5f64.cosh()])
            .collect();
        let c = DualCloud::from_points(Ambient::DeSitter, pts);
        assert!(matches!(
            resample_to_graph(&c, &grid),
            Err(DualityError::NewtonDivergence { .. })
        ));
    }
}
