//! Dense 1×1 / 2×2 symmetric tensor helpers.
//!
//! Tensors on S^n with n ≤ 2 are stored in `[[f64; 2]; 2]`; for n = 1 only the
//! `[0][0]` entry is meaningful and the remaining entries are kept at zero.

pub type Mat2 = [[f64; 2]; 2];

pub const ZERO2: Mat2 = [[0.0; 2]; 2];

pub fn det(n: usize, m: &Mat2) -> f64 {
    if n == 1 {
        m[0][0]
    } else {
        m[0][0] * m[1][1] - m[0][1] * m[1][0]
    }
}

pub fn inverse(n: usize, m: &Mat2) -> Mat2 {
    if n == 1 {
        return [[1.0 / m[0][0], 0.0], [0.0, 0.0]];
    }
    let d = det(2, m);
    [[m[1][1] / d, -m[0][1] / d], [-m[1][0] / d, m[0][0] / d]]
}

pub fn matmul(n: usize, a: &Mat2, b: &Mat2) -> Mat2 {
    let mut c = ZERO2;
    for i in 0..n {
        for j in 0..n {
            c[i][j] = (0..n).map(|k| a[i][k] * b[k][j]).sum();
        }
    }
    c
}

/// Contraction Σ aⁱʲ b_ij.
pub fn contract(n: usize, a: &Mat2, b: &Mat2) -> f64 {
    let mut s = 0.0;
    for i in 0..n {
        for j in 0..n {
            s += a[i][j] * b[i][j];
        }
    }
    s
}

pub fn is_spd(n: usize, m: &Mat2) -> bool {
    if n == 1 {
        m[0][0] > 0.0
    } else {
        m[0][0] > 0.0 && det(2, m) > 0.0
    }
}

/// Eigen-decomposition of the pencil (h, g) with g positive definite.
#[derive(Debug, Clone, Copy)]
pub struct PencilEigen {
    /// Eigenvalues in ascending order.
    pub values: [f64; 2],
    /// g-orthonormal eigenvectors (contravariant components), one per value.
    pub vectors: [[f64; 2]; 2],
    pub umbilic: bool,
}

/// Solves h e = κ g e for κ ascending with g(e, e) = 1.
pub fn pencil_eigen(n: usize, g: &Mat2, h: &Mat2) -> PencilEigen {
    if n == 1 {
        let k = h[0][0] / g[0][0];
        return PencilEigen {
            values: [k, 0.0],
            vectors: [[1.0 / g[0][0].sqrt(), 0.0], [0.0, 0.0]],
            umbilic: true,
        };
    }
    // symmetrize with the Cholesky factor g = L Lᵀ: S = L⁻¹ h L⁻ᵀ
    let l00 = g[0][0].sqrt();
    let l10 = g[1][0] / l00;
    let l11 = (g[1][1] - l10 * l10).sqrt();
    let li = [[1.0 / l00, 0.0], [-l10 / (l00 * l11), 1.0 / l11]];
    let m = matmul(2, &li, h);
    let lit = [[li[0][0], li[1][0]], [li[0][1], li[1][1]]];
    let sm = matmul(2, &m, &lit);
    let (s00, s11) = (sm[0][0], sm[1][1]);
    let s01 = 0.5 * (sm[0][1] + sm[1][0]);
    let mean = 0.5 * (s00 + s11);
    let half = 0.5 * (s00 - s11);
    let r = half.hypot(s01);
    let (k1, k2) = (mean - r, mean + r);
    let scale = k1.abs().max(k2.abs()).max(1e-300);
    let umbilic = r <= 0.5e-12 * scale;
    // orthonormal eigenvectors q of S, mapped back by e = L⁻ᵀ q
    let q1 = if umbilic {
        [1.0, 0.0]
    } else if half <= 0.0 {
        let (a, b) = (r - half, -s01);
        let m = a.hypot(b);
        [a / m, b / m]
    } else {
        let (a, b) = (s01, -(r + half));
        let m = a.hypot(b);
        [a / m, b / m]
    };
    let q2 = [-q1[1], q1[0]];
    let back = |q: [f64; 2]| -> [f64; 2] {
        let e1 = q[1] / l11;
        [(q[0] - l10 * e1) / l00, e1]
    };
    PencilEigen {
        values: [k1, k2],
        vectors: [back(q1), back(q2)],
        umbilic,
    }
}

#[cfg(test)]
fn quad(g: &Mat2, e: &[f64; 2]) -> f64 {
    g[0][0] * e[0] * e[0] + 2.0 * g[0][1] * e[0] * e[1] + g[1][1] * e[1] * e[1]
}
