//! Vectors in Minkowski space R^{n+1,1}.
//!
//! Points are stored as `[x⁰, x¹, x², x³]` with signature (−,+,+,+). For
//! n = 1 the ambient space is R^{2,1} and the last component stays zero, so
//! the same four-component representation serves both dimensions.

pub type Lv = [f64; 4];

/// Minkowski inner product ⟨a, b⟩ = −a⁰b⁰ + Σ aⁱbⁱ.
#[inline]
pub fn mdot(a: &Lv, b: &Lv) -> f64 {
    -a[0] * b[0] + a[1] * b[1] + a[2] * b[2] + a[3] * b[3]
}

#[inline]
pub fn add(a: &Lv, b: &Lv) -> Lv {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2], a[3] + b[3]]
}

#[inline]
pub fn sub(a: &Lv, b: &Lv) -> Lv {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2], a[3] - b[3]]
}

#[inline]
pub fn scale(s: f64, a: &Lv) -> Lv {
    [s * a[0], s * a[1], s * a[2], s * a[3]]
}

/// Lift a spatial vector of R^{n+1} into R^{n+1,1} with zero time component.
#[inline]
pub fn spatial(v: &[f64; 3]) -> Lv {
    [0.0, v[0], v[1], v[2]]
}

/// Spatial part of a Minkowski vector.
#[inline]
pub fn space_part(a: &Lv) -> [f64; 3] {
    [a[1], a[2], a[3]]
}

/// Euclidean length of all four components; used only for displacement norms.
#[inline]
pub fn euclid_norm(a: &Lv) -> f64 {
    (a[0] * a[0] + a[1] * a[1] + a[2] * a[2] + a[3] * a[3]).sqrt()
}

#[inline]
pub fn norm3(v: &[f64; 3]) -> f64 {
    (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt()
}

#[inline]
pub fn dot3(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

pub fn normalize3(v: &[f64; 3]) -> [f64; 3] {
    let n = norm3(v);
    [v[0] / n, v[1] / n, v[2] / n]
}

pub fn cross3(a: &[f64; 3], b: &[f64; 3]) -> [f64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

fn det3(m: [[f64; 3]; 3]) -> f64 {
    m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
        - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
}

/// Generalized cross product: a vector Minkowski-orthogonal to `p`, `q`, `r`.
///
/// Computes the cofactor covector w_a = ε_{abcd} p^b q^c r^d and raises the
/// index with the metric, so that ⟨w, p⟩ = ⟨w, q⟩ = ⟨w, r⟩ = 0.
pub fn cross4(p: &Lv, q: &Lv, r: &Lv) -> Lv {
    let mut w = [0.0; 4];
    for (a, wa) in w.iter_mut().enumerate() {
        let cols: Vec<usize> = (0..4).filter(|&c| c != a).collect();
        let mut m = [[0.0; 3]; 3];
        for (row, v) in [p, q, r].iter().enumerate() {
            for (c, &col) in cols.iter().enumerate() {
                m[row][c] = v[col];
            }
        }
        let sign = if a % 2 == 0 { 1.0 } else { -1.0 };
        *wa = sign * det3(m);
    }
    w[0] = -w[0];
    w
}
