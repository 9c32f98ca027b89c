//! Latitude-longitude discretization of S^n for n ∈ {1, 2}.
//!
//! Nodes are stored row-major: node `j * nlon + k` sits at colatitude θ_j and
//! longitude φ_k. For n = 1 there is a single row and the circle angle is the
//! longitude coordinate, ξ = (cos φ, sin φ).
//!
//! Colatitudes are pole-staggered, θ_j = (j + ½)π/N_θ. Rows beyond a pole are
//! ghost rows: row −1−j (and 2N_θ−1−j) is row j read at longitude φ + π, with
//! a parity factor for tensor components (see [`Parity`]).

use crate::linalg::Mat2;
use std::f64::consts::PI;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GridError {
    #[error("unsupported dimension {0}; only n = 1 and n = 2 are available")]
    UnsupportedDimension(usize),
    #[error("resolution {got:?} below minimum {min:?}")]
    ResolutionTooLow { got: Vec<usize>, min: Vec<usize> },
    #[error("longitude count {0} must be even for the pole ghost rule")]
    OddLongitudeCount(usize),
    #[error("resolution needs {expected} entries for n = {n}, got {got}")]
    ResolutionShape {
        n: usize,
        expected: usize,
        got: usize,
    },
    #[error("unsupported stencil order {0}; use 2 or 4")]
    UnsupportedStencilOrder(usize),
    #[error("field has {got} values but the grid has {expected} nodes")]
    FieldMismatch { expected: usize, got: usize },
}

/// Sign picked up by a field component when continued across a pole.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Parity {
    /// Scalars and θθ, φφ tensor components.
    Even,
    /// θ components of vectors and θφ tensor components.
    Odd,
}

impl Parity {
    fn sign(self) -> f64 {
        match self {
            Parity::Even => 1.0,
            Parity::Odd => -1.0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SphereGrid {
    pub n: usize,
    pub nlat: usize,
    pub nlon: usize,
    pub order: usize,
    pub theta: Vec<f64>,
    pub phi: Vec<f64>,
    pub dtheta: f64,
    pub dphi: f64,
    /// Quadrature weight per node.
    pub weights: Vec<f64>,
}

/// Per-node value, σ-covariant gradient and σ-covariant Hessian.
#[derive(Debug, Clone)]
pub struct JetField {
    pub value: Vec<f64>,
    pub grad: Vec<[f64; 2]>,
    pub hess: Vec<Mat2>,
}

pub fn build_grid(
    n: usize,
    resolution: &[usize],
    stencil_order: usize,
) -> Result<SphereGrid, GridError> {
    if stencil_order != 2 && stencil_order != 4 {
        return Err(GridError::UnsupportedStencilOrder(stencil_order));
    }
    match n {
        1 => {
            if resolution.len() != 1 {
                return Err(GridError::ResolutionShape {
                    n,
                    expected: 1,
                    got: resolution.len(),
                });
            }
            let m = resolution[0];
            if m < 8 {
                return Err(GridError::ResolutionTooLow {
                    got: vec![m],
                    min: vec![8],
                });
            }
            let dphi = 2.0 * PI / m as f64;
            Ok(SphereGrid {
                n,
                nlat: 1,
                nlon: m,
                order: stencil_order,
                theta: vec![0.5 * PI],
                phi: (0..m).map(|k| k as f64 * dphi).collect(),
                dtheta: dphi,
                dphi,
                weights: vec![dphi; m],
            })
        }
        2 => {
            if resolution.len() != 2 {
                return Err(GridError::ResolutionShape {
                    n,
                    expected: 2,
                    got: resolution.len(),
                });
            }
            let (nt, np) = (resolution[0], resolution[1]);
            if nt < 4 || np < 8 {
                return Err(GridError::ResolutionTooLow {
                    got: vec![nt, np],
                    min: vec![4, 8],
                });
            }
            if np % 2 != 0 {
                return Err(GridError::OddLongitudeCount(np));
            }
            let dtheta = PI / nt as f64;
            let dphi = 2.0 * PI / np as f64;
            let theta: Vec<f64> = (0..nt).map(|j| (j as f64 + 0.5) * dtheta).collect();
            let phi: Vec<f64> = (0..np).map(|k| k as f64 * dphi).collect();
            let wlat = fejer_weights(&theta);
            let mut weights = Vec::with_capacity(nt * np);
            for w in &wlat {
                for _ in 0..np {
                    weights.push(w * dphi);
                }
            }
            Ok(SphereGrid {
                n,
                nlat: nt,
                nlon: np,
                order: stencil_order,
                theta,
                phi,
                dtheta,
                dphi,
                weights,
            })
        }
        _ => Err(GridError::UnsupportedDimension(n)),
    }
}

/// Fejér first-rule weights in x = cos θ for the staggered colatitudes.
fn fejer_weights(theta: &[f64]) -> Vec<f64> {
    let nn = theta.len();
    theta
        .iter()
        .map(|&t| {
            let mut s = 0.0;
            for k in 1..=nn / 2 {
                let kf = k as f64;
                s += (2.0 * kf * t).cos() / (4.0 * kf * kf - 1.0);
            }
            2.0 / nn as f64 * (1.0 - 2.0 * s)
        })
        .collect()
}

/// One-sided halves of the central stencils, `(offset, coefficient)`, and the
/// common denominator. Differenced form makes both derivatives exactly zero on
/// constants.
type Pairs = [(isize, f64); 2];
const PAIRS_2: (Pairs, Pairs, f64) = ([(1, 0.5), (2, 0.0)], [(1, 1.0), (2, 0.0)], 1.0);
const PAIRS_4: (Pairs, Pairs, f64) = ([(1, 8.0), (2, -1.0)], [(1, 16.0), (2, -1.0)], 12.0);

impl SphereGrid {
    pub fn len(&self) -> usize {
        self.nlat * self.nlon
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn idx(&self, j: usize, k: usize) -> usize {
        j * self.nlon + k
    }

    #[inline]
    pub fn row(&self, node: usize) -> usize {
        node / self.nlon
    }

    #[inline]
    pub fn col(&self, node: usize) -> usize {
        node % self.nlon
    }

    pub fn check_field(&self, u: &[f64]) -> Result<(), GridError> {
        if u.len() != self.len() {
            return Err(GridError::FieldMismatch {
                expected: self.len(),
                got: u.len(),
            });
        }
        Ok(())
    }

    /// Unit vector ξ ∈ S^n ⊂ R^3 at a node.
    pub fn xi(&self, node: usize) -> [f64; 3] {
        let p = self.phi[self.col(node)];
        if self.n == 1 {
            return [p.cos(), p.sin(), 0.0];
        }
        let t = self.theta[self.row(node)];
        [t.sin() * p.cos(), t.sin() * p.sin(), t.cos()]
    }

    /// Coordinate tangent vectors ∂ξ/∂θ, ∂ξ/∂φ (n = 2) or ∂ξ/∂φ (n = 1).
    pub fn tangents(&self, node: usize) -> [[f64; 3]; 2] {
        let p = self.phi[self.col(node)];
        if self.n == 1 {
            return [[-p.sin(), p.cos(), 0.0], [0.0; 3]];
        }
        let t = self.theta[self.row(node)];
        [
            [t.cos() * p.cos(), t.cos() * p.sin(), -t.sin()],
            [-t.sin() * p.sin(), t.sin() * p.cos(), 0.0],
        ]
    }

    pub fn sigma(&self, node: usize) -> Mat2 {
        if self.n == 1 {
            return [[1.0, 0.0], [0.0, 0.0]];
        }
        let s = self.theta[self.row(node)].sin();
        [[1.0, 0.0], [0.0, s * s]]
    }

    pub fn sigma_inv(&self, node: usize) -> Mat2 {
        if self.n == 1 {
            return [[1.0, 0.0], [0.0, 0.0]];
        }
        let s = self.theta[self.row(node)].sin();
        [[1.0, 0.0], [0.0, 1.0 / (s * s)]]
    }

    /// Christoffel symbols Γ^k_ij of σ, indexed `[k][i][j]`.
    pub fn christoffel(&self, node: usize) -> [[[f64; 2]; 2]; 2] {
        let mut g = [[[0.0; 2]; 2]; 2];
        if self.n == 2 {
            let t = self.theta[self.row(node)];
            g[0][1][1] = -t.sin() * t.cos();
            g[1][0][1] = t.cos() / t.sin();
            g[1][1][0] = g[1][0][1];
        }
        g
    }

    /// Field value at (possibly ghost) row `j` and any integer column `k`.
    #[inline]
    fn fetch(&self, u: &[f64], j: isize, k: isize, parity: Parity) -> f64 {
        let nt = self.nlat as isize;
        let np = self.nlon as isize;
        let (jj, shift, sgn) = if j < 0 {
            (-1 - j, np / 2, parity.sign())
        } else if j >= nt {
            (2 * nt - 1 - j, np / 2, parity.sign())
        } else {
            (j, 0, 1.0)
        };
        let kk = (k + shift).rem_euclid(np);
        sgn * u[jj as usize * self.nlon + kk as usize]
    }

    /// First and second derivative along one direction; `at(m)` returns the
    /// value at offset m from the centre.
    #[inline]
    fn stencil(&self, at: impl Fn(isize) -> f64, h: f64) -> (f64, f64) {
        let (p1, p2, den) = if self.order == 2 { PAIRS_2 } else { PAIRS_4 };
        let v0 = at(0);
        let (mut a, mut b) = (0.0, 0.0);
        for ((m, c1), (_, c2)) in p1.iter().zip(p2.iter()) {
            if *c1 == 0.0 && *c2 == 0.0 {
                continue;
            }
            let (vp, vm) = (at(*m), at(-*m));
            a += c1 * (vp - vm);
            b += c2 * ((vp - v0) + (vm - v0));
        }
        (a / (den * h), b / (den * h * h))
    }

    /// ∂u/∂θ and ∂²u/∂θ² for a field with the given pole parity (n = 2).
    pub fn d_theta(&self, u: &[f64], parity: Parity) -> (Vec<f64>, Vec<f64>) {
        let mut d1 = vec![0.0; u.len()];
        let mut d2 = vec![0.0; u.len()];
        for node in 0..u.len() {
            let j = self.row(node) as isize;
            let k = self.col(node) as isize;
            let (a, b) = self.stencil(|m| self.fetch(u, j + m, k, parity), self.dtheta);
            d1[node] = a;
            d2[node] = b;
        }
        (d1, d2)
    }

    /// ∂u/∂φ and ∂²u/∂φ² (periodic).
    pub fn d_phi(&self, u: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let np = self.nlon as isize;
        let mut d1 = vec![0.0; u.len()];
        let mut d2 = vec![0.0; u.len()];
        for node in 0..u.len() {
            let base = self.row(node) * self.nlon;
            let k = self.col(node) as isize;
            let (a, b) = self.stencil(|m| u[base + (k + m).rem_euclid(np) as usize], self.dphi);
            d1[node] = a;
            d2[node] = b;
        }
        (d1, d2)
    }

    /// Coordinate first derivatives of a field, `[∂θ, ∂φ]` (n = 2) or `[∂φ, 0]` (n = 1).
    pub fn coord_grad(&self, u: &[f64], parity: Parity) -> Vec<[f64; 2]> {
        if self.n == 1 {
            let (d1, _) = self.d_phi(u);
            return d1.into_iter().map(|a| [a, 0.0]).collect();
        }
        let (dt, _) = self.d_theta(u, parity);
        let (dp, _) = self.d_phi(u);
        dt.into_iter().zip(dp).map(|(a, b)| [a, b]).collect()
    }

    /// Quadrature Σ uᵢ wᵢ.
    pub fn integrate(&self, u: &[f64]) -> f64 {
        u.iter().zip(&self.weights).map(|(a, w)| a * w).sum()
    }

    pub fn volume(&self) -> f64 {
        if self.n == 1 {
            2.0 * PI
        } else {
            4.0 * PI
        }
    }

    /// Spherical coordinates (θ, φ) of a unit vector; θ is π/2 for n = 1.
    pub fn coords_of(&self, x: &[f64; 3]) -> (f64, f64) {
        let p = x[1].atan2(x[0]);
        if self.n == 1 {
            return (0.5 * PI, p);
        }
        (x[2].clamp(-1.0, 1.0).acos(), p)
    }

    /// Cubic Lagrange interpolation of an even-parity field at a point of S^n.
    pub fn interpolate(&self, u: &[f64], x: &[f64; 3]) -> f64 {
        let (t, p) = self.coords_of(x);
        let (kp, wp) = lagrange4(p / self.dphi);
        if self.n == 1 {
            return (0..4)
                .map(|b| wp[b] * self.fetch(u, 0, kp + b as isize, Parity::Even))
                .sum();
        }
        let (jt, wt) = lagrange4((t - 0.5 * self.dtheta) / self.dtheta);
        let mut s = 0.0;
        for a in 0..4 {
            let mut r = 0.0;
            for b in 0..4 {
                r += wp[b] * self.fetch(u, jt + a as isize, kp + b as isize, Parity::Even);
            }
            s += wt[a] * r;
        }
        s
    }
    /// Bilinear interpolation in (θ, φ); pole rows reach across through the ghost row.
    pub fn interpolate_linear(&self, u: &[f64], x: &[f64; 3]) -> f64 {
        let (t, p) = self.coords_of(x);
        let sp = p / self.dphi;
        let kp = sp.floor();
        let wp = sp - kp;
        let kp = kp as isize;
        let lin = |j: isize| {
            (1.0 - wp) * self.fetch(u, j, kp, Parity::Even)
                + wp * self.fetch(u, j, kp + 1, Parity::Even)
        };
        if self.n == 1 {
            return lin(0);
        }
        let st = (t - 0.5 * self.dtheta) / self.dtheta;
        let jt = st.floor();
        let wt = st - jt;
        let jt = jt as isize;
        (1.0 - wt) * lin(jt) + wt * lin(jt + 1)
    }
}

/// Base index and weights of the 4-point Lagrange stencil around fractional index `s`.
fn lagrange4(s: f64) -> (isize, [f64; 4]) {
    let i0 = s.floor() as isize - 1;
    let x = s - (i0 as f64);
    let mut w = [0.0; 4];
    for (a, wa) in w.iter_mut().enumerate() {
        let mut l = 1.0;
        for b in 0..4 {
            if b != a {
                l *= (x - b as f64) / (a as f64 - b as f64);
            }
        }
        *wa = l;
    }
    (i0, w)
}

/// σ-covariant gradient and Hessian by finite differences.
pub fn covariant_jet(u: &[f64], grid: &SphereGrid) -> Result<JetField, GridError> {
    grid.check_field(u)?;
    let nodes = grid.len();
    if grid.n == 1 {
        let (d1, d2) = grid.d_phi(u);
        return Ok(JetField {
            value: u.to_vec(),
            grad: d1.iter().map(|&a| [a, 0.0]).collect(),
            hess: d2.iter().map(|&b| [[b, 0.0], [0.0, 0.0]]).collect(),
        });
    }
    let (ut, utt) = grid.d_theta(u, Parity::Even);
    let (up, upp) = grid.d_phi(u);
    let (utp, _) = grid.d_phi(&ut);
    let mut grad = Vec::with_capacity(nodes);
    let mut hess = Vec::with_capacity(nodes);
    for node in 0..nodes {
        let t = grid.theta[grid.row(node)];
        let (s, c) = t.sin_cos();
        let htp = utp[node] - c / s * up[node];
        grad.push([ut[node], up[node]]);
        hess.push([[utt[node], htp], [htp, upp[node] + s * c * ut[node]]]);
    }
    Ok(JetField {
        value: u.to_vec(),
        grad,
        hess,
    })
}

pub fn sphere_integrate(u: &[f64], grid: &SphereGrid) -> Result<f64, GridError> {
    grid.check_field(u)?;
    Ok(grid.integrate(u))
}
