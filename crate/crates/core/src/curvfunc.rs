//! Curvature functions F(κ) on the positive cone, their inverses and derivatives.
//!
//! Every family is evaluated in its degree-1 normalized form with F(1,…,1) = 1:
//!
//! | family      | F(κ)                                   |
//! |-------------|----------------------------------------|
//! | `Hk(k)`     | (H_k / C(n,k))^{1/k}                   |
//! | `GaussK`    | (κ₁⋯κ_n)^{1/n}                         |
//! | `HkKa(k,a)` | ((H_k / C(n,k)) K^a)^{1/(k+an)}        |
//! | `Power(F,p)`| F (the power collapses under normalization) |
//!
//! The inverse function is F̃(κ) = 1/F(κ⁻¹).

use crate::linalg::{self, Mat2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CurvError {
    #[error("curvatures {0:?} are not in the positive cone")]
    DomainError(Vec<f64>),
    #[error("invalid curvature function: {0}")]
    InvalidSpec(String),
}

#[derive(Debug, Clone, PartialEq)]
pub enum Family {
    Hk { k: usize },
    GaussK,
    HkKa { k: usize, a: f64 },
    Power { base: Box<Family>, p: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SpecRepr", into = "SpecRepr")]
pub struct CurvatureFunctionSpec {
    pub family: Family,
    /// Read this spec as F̃ of its family.
    pub inverse: bool,
}

/// Flat JSON form, e.g. `{"family": "hk_ka", "k": 1, "a": 0.5}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SpecRepr {
    family: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    k: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    a: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    p: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    base: Option<Box<SpecRepr>>,
    #[serde(default)]
    inverse: bool,
}

fn family_from_repr(r: &SpecRepr) -> Result<Family, CurvError> {
    let need_k = || {
        r.k.ok_or_else(|| CurvError::InvalidSpec(format!("family {} needs k", r.family)))
    };
    match r.family.as_str() {
        "hk" => Ok(Family::Hk { k: need_k()? }),
        "gauss_k" => Ok(Family::GaussK),
        "hk_ka" => Ok(Family::HkKa {
            k: need_k()?,
            a: r.a
                .ok_or_else(|| CurvError::InvalidSpec("family hk_ka needs a".into()))?,
        }),
        "power" => {
            let base = r
                .base
                .as_ref()
                .ok_or_else(|| CurvError::InvalidSpec("family power needs base".into()))?;
            Ok(Family::Power {
                base: Box::new(family_from_repr(base)?),
                p: r.p
                    .ok_or_else(|| CurvError::InvalidSpec("family power needs p".into()))?,
            })
        }
        other => Err(CurvError::InvalidSpec(format!("unknown family {other:?}"))),
    }
}

fn family_to_repr(f: &Family, inverse: bool) -> SpecRepr {
    let mut r = SpecRepr {
        family: String::new(),
        k: None,
        a: None,
        p: None,
        base: None,
        inverse,
    };
    match f {
        Family::Hk { k } => {
            r.family = "hk".into();
            r.k = Some(*k);
        }
        Family::GaussK => r.family = "gauss_k".into(),
        Family::HkKa { k, a } => {
            r.family = "hk_ka".into();
            r.k = Some(*k);
            r.a = Some(*a);
        }
        Family::Power { base, p } => {
            r.family = "power".into();
            r.p = Some(*p);
            r.base = Some(Box::new(family_to_repr(base, false)));
        }
    }
    r
}

impl TryFrom<SpecRepr> for CurvatureFunctionSpec {
    type Error = CurvError;
    fn try_from(r: SpecRepr) -> Result<Self, CurvError> {
        Ok(CurvatureFunctionSpec {
            family: family_from_repr(&r)?,
            inverse: r.inverse,
        })
    }
}

impl From<CurvatureFunctionSpec> for SpecRepr {
    fn from(s: CurvatureFunctionSpec) -> SpecRepr {
        family_to_repr(&s.family, s.inverse)
    }
}

impl CurvatureFunctionSpec {
    pub fn new(family: Family) -> Self {
        CurvatureFunctionSpec {
            family,
            inverse: false,
        }
    }

    pub fn hk(k: usize) -> Self {
        Self::new(Family::Hk { k })
    }

    pub fn gauss() -> Self {
        Self::new(Family::GaussK)
    }

    pub fn validate(&self, n: usize) -> Result<(), CurvError> {
        fn check(f: &Family, n: usize) -> Result<(), CurvError> {
            match f {
                Family::Hk { k } if *k == 0 || *k > n => Err(CurvError::InvalidSpec(format!(
                    "H_k needs 1 <= k <= n, got k = {k}, n = {n}"
                ))),
                Family::HkKa { k, a } => {
                    if *k == 0 || *k > n {
                        Err(CurvError::InvalidSpec(format!(
                            "H_k K^a needs 1 <= k <= n, got k = {k}"
                        )))
                    } else if !(a.is_finite() && *a > 0.0) {
                        Err(CurvError::InvalidSpec(format!(
                            "H_k K^a needs a > 0, got {a}"
                        )))
                    } else {
                        Ok(())
                    }
                }
                Family::Power { base, p } => {
                    if !(p.is_finite() && *p > 0.0) {
                        return Err(CurvError::InvalidSpec(format!(
                            "power must be positive, got {p}"
                        )));
                    }
                    check(base, n)
                }
                _ => Ok(()),
            }
        }
        check(&self.family, n)
    }

    /// Homogeneity degree of the un-normalized family representative.
    pub fn raw_degree(&self, n: usize) -> f64 {
        fn deg(f: &Family, n: usize) -> f64 {
            match f {
                Family::Hk { k } => *k as f64,
                Family::GaussK => n as f64,
                Family::HkKa { k, a } => *k as f64 + a * n as f64,
                Family::Power { base, p } => p * deg(base, n),
            }
        }
        deg(&self.family, n)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CurvatureEval {
    pub value: f64,
    /// ∂F/∂κ_i.
    pub grad: Vec<f64>,
}

/// Elementary symmetric polynomial of degree k, skipping index `skip`.
fn esym(k: usize, kappa: &[f64], skip: Option<usize>) -> f64 {
    let mut e = vec![0.0; k + 1];
    e[0] = 1.0;
    for (i, &x) in kappa.iter().enumerate() {
        if Some(i) == skip {
            continue;
        }
        for j in (1..=k).rev() {
            e[j] += e[j - 1] * x;
        }
    }
    e[k]
}

fn binom(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

fn eval_family(f: &Family, kappa: &[f64]) -> CurvatureEval {
    let n = kappa.len();
    match f {
        Family::Hk { k } => {
            let hk = esym(*k, kappa, None);
            let value = (hk / binom(n, *k)).powf(1.0 / *k as f64);
            let grad = (0..n)
                .map(|i| value * esym(k - 1, kappa, Some(i)) / (*k as f64 * hk))
                .collect();
            CurvatureEval { value, grad }
        }
        Family::GaussK => {
            let value = (kappa.iter().map(|x| x.ln()).sum::<f64>() / n as f64).exp();
            let grad = kappa.iter().map(|x| value / (n as f64 * x)).collect();
            CurvatureEval { value, grad }
        }
        Family::HkKa { k, a } => {
            let hk = esym(*k, kappa, None);
            let d = *k as f64 + a * n as f64;
            let logk: f64 = kappa.iter().map(|x| x.ln()).sum();
            let value = (((hk / binom(n, *k)).ln() + a * logk) / d).exp();
            let grad = (0..n)
                .map(|i| value * (esym(k - 1, kappa, Some(i)) / hk + a / kappa[i]) / d)
                .collect();
            CurvatureEval { value, grad }
        }
        Family::Power { base, .. } => eval_family(base, kappa),
    }
}

pub fn f_eval(spec: &CurvatureFunctionSpec, kappa: &[f64]) -> Result<CurvatureEval, CurvError> {
    if kappa.is_empty() || kappa.iter().any(|&x| !(x.is_finite() && x > 0.0)) {
        return Err(CurvError::DomainError(kappa.to_vec()));
    }
    spec.validate(kappa.len())?;
    if !spec.inverse {
        return Ok(eval_family(&spec.family, kappa));
    }
    let inv: Vec<f64> = kappa.iter().map(|x| 1.0 / x).collect();
    let base = eval_family(&spec.family, &inv);
    let value = 1.0 / base.value;
    let grad = base
        .grad
        .iter()
        .zip(kappa)
        .map(|(gi, k)| value * value * gi / (k * k))
        .collect();
    Ok(CurvatureEval { value, grad })
}

pub fn inverse_spec(spec: &CurvatureFunctionSpec) -> CurvatureFunctionSpec {
    match spec.family {
        Family::GaussK => CurvatureFunctionSpec::gauss(),
        _ => CurvatureFunctionSpec {
            family: spec.family.clone(),
            inverse: !spec.inverse,
        },
    }
}

/// F evaluated on the principal curvatures of the pencil (h, g), with F^{ij}.
#[derive(Debug, Clone)]
pub struct TensorEval {
    pub eval: CurvatureEval,
    pub kappa: Vec<f64>,
    /// Contravariant F^{ij} = ∂F/∂h_ij.
    pub fij: Mat2,
}

pub fn eval_tensor(
    spec: &CurvatureFunctionSpec,
    n: usize,
    g: &Mat2,
    h: &Mat2,
) -> Result<TensorEval, CurvError> {
    let e = linalg::pencil_eigen(n, g, h);
    let kappa = e.values[..n].to_vec();
    let eval = f_eval(spec, &kappa)?;
    let mut fij = linalg::ZERO2;
    if e.umbilic {
        let gi = linalg::inverse(n, g);
        for a in 0..n {
            for b in 0..n {
                fij[a][b] = eval.grad[0] * gi[a][b];
            }
        }
    } else {
        for (m, vec) in e.vectors[..n].iter().enumerate() {
            for a in 0..n {
                for b in 0..n {
                    fij[a][b] += eval.grad[m] * vec[a] * vec[b];
                }
            }
        }
    }
    Ok(TensorEval { eval, kappa, fij })
}

#[derive(Debug, Clone, Serialize)]
pub struct KStarReport {
    /// Sampled infimum of the ratio; an estimate, not a bound.
    pub inf_estimate: f64,
    pub samples: usize,
    pub worst_kappa: Vec<f64>,
}

/// Ratio F^{ij}h_{ik}h^k_j / (F H) scaled by the family degree, for one (g, h).
pub fn kstar_ratio(
    spec: &CurvatureFunctionSpec,
    n: usize,
    g: &Mat2,
    h: &Mat2,
) -> Result<(f64, Vec<f64>), CurvError> {
    let t = eval_tensor(spec, n, g, h)?;
    let gi = linalg::inverse(n, g);
    // h^k_j = g^{kl} h_lj, then h_ik h^k_j
    let hmix = linalg::matmul(n, &gi, h);
    let hh = linalg::matmul(n, h, &hmix);
    let num = linalg::contract(n, &t.fij, &hh);
    let mean = linalg::contract(n, &gi, h);
    Ok((spec.raw_degree(n) * num / (t.eval.value * mean), t.kappa))
}

fn random_spd(rng: &mut ChaCha8Rng, n: usize, spread: f64) -> Mat2 {
    let l1 = rng.gen_range(-spread..spread).exp();
    if n == 1 {
        return [[l1, 0.0], [0.0, 0.0]];
    }
    let l2 = rng.gen_range(-spread..spread).exp();
    let t: f64 = rng.gen_range(0.0..std::f64::consts::PI);
    let (s, c) = t.sin_cos();
    let off = (l1 - l2) * c * s;
    [
        [l1 * c * c + l2 * s * s, off],
        [off, l1 * s * s + l2 * c * c],
    ]
}

/// Sampled infimum of the (K*) ratio over random SPD pairs plus the
/// anisotropic family g = id, h = diag(1, M).
pub fn kstar_check(
    spec: &CurvatureFunctionSpec,
    n: usize,
    samples: usize,
    seed: u64,
) -> Result<KStarReport, CurvError> {
    spec.validate(n)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rep = KStarReport {
        inf_estimate: f64::INFINITY,
        samples: 0,
        worst_kappa: vec![],
    };
    let take = |r: (f64, Vec<f64>), rep: &mut KStarReport| {
        rep.samples += 1;
        if r.0 < rep.inf_estimate {
            rep.inf_estimate = r.0;
            rep.worst_kappa = r.1;
        }
    };
    let id = [[1.0, 0.0], [0.0, if n == 2 { 1.0 } else { 0.0 }]];
    let family = samples.clamp(1, 64);
    for s in 0..family {
        let m = if s == 0 {
            1.0
        } else {
            10f64.powf(-6.0 + 12.0 * s as f64 / family as f64)
        };
        let h = [[1.0, 0.0], [0.0, if n == 2 { m } else { 0.0 }]];
        take(kstar_ratio(spec, n, &id, &h)?, &mut rep);
    }
    for _ in family..samples {
        let g = random_spd(&mut rng, n, 2.0);
        let h = random_spd(&mut rng, n, 4.0);
        take(kstar_ratio(spec, n, &g, &h)?, &mut rep);
    }
    Ok(rep)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn families() -> Vec<CurvatureFunctionSpec> {
        vec![
            CurvatureFunctionSpec::hk(1),
            CurvatureFunctionSpec::hk(2),
            CurvatureFunctionSpec::gauss(),
            CurvatureFunctionSpec::new(Family::HkKa { k: 1, a: 0.5 }),
            CurvatureFunctionSpec::new(Family::Power {
                base: Box::new(Family::Hk { k: 1 }),
                p: 2.0,
            }),
        ]
    }

    #[test]
    fn examples() {
        assert!(
            (f_eval(&CurvatureFunctionSpec::hk(1), &[1.0, 1.0])
                .unwrap()
                .value
                - 1.0)
                .abs()
                < 1e-15
        );
        assert!(
            (f_eval(&CurvatureFunctionSpec::gauss(), &[2.0, 3.0])
                .unwrap()
                .value
                - 6f64.sqrt())
            .abs()
                < 1e-14
        );
        for s in families() {
            for spec in [s.clone(), inverse_spec(&s)] {
                let e = f_eval(&spec, &[2.0, 3.0]).unwrap();
                let euler = 2.0 * e.grad[0] + 3.0 * e.grad[1];
                assert!((euler - e.value).abs() < 1e-10);
                assert!((f_eval(&spec, &[1.0, 1.0]).unwrap().value - 1.0).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn domain_and_spec_errors() {
        let h = CurvatureFunctionSpec::hk(1);
        assert!(matches!(
            f_eval(&h, &[1.0, 0.0]),
            Err(CurvError::DomainError(_))
        ));
        assert!(matches!(
            f_eval(&h, &[-1.0, 2.0]),
            Err(CurvError::DomainError(_))
        ));
        assert!(matches!(
            f_eval(&CurvatureFunctionSpec::hk(3), &[1.0, 2.0]),
            Err(CurvError::InvalidSpec(_))
        ));
        let bad = CurvatureFunctionSpec::new(Family::HkKa { k: 1, a: -1.0 });
        assert!(matches!(
            f_eval(&bad, &[1.0, 2.0]),
            Err(CurvError::InvalidSpec(_))
        ));
    }

    #[test]
    fn inverse_examples() {
        assert_eq!(
            inverse_spec(&CurvatureFunctionSpec::gauss()),
            CurvatureFunctionSpec::gauss()
        );
        let ht = inverse_spec(&CurvatureFunctionSpec::hk(1));
        assert!((f_eval(&ht, &[2.0, 3.0]).unwrap().value - 12.0 / 5.0).abs() < 1e-14);
    }

    #[test]
    fn double_inversion_is_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for s in families() {
            let ss = inverse_spec(&inverse_spec(&s));
            for _ in 0..100 {
                let k = [rng.gen_range(0.1..10.0), rng.gen_range(0.1..10.0)];
                let a = f_eval(&s, &k).unwrap().value;
                let b = f_eval(&ss, &k).unwrap().value;
                assert!((a - b).abs() <= 1e-12 * a.abs());
            }
        }
    }

    #[test]
    fn gradients_match_central_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for s in families() {
            for spec in [s.clone(), inverse_spec(&s)] {
                for _ in 0..100 {
                    let k = vec![rng.gen_range(0.1..10.0), rng.gen_range(0.1..10.0)];
                    let e = f_eval(&spec, &k).unwrap();
                    for i in 0..2 {
                        let hs = 1e-5 * k[i];
                        let mut kp = k.clone();
                        let mut km = k.clone();
                        kp[i] += hs;
                        km[i] -= hs;
                        let fd = (f_eval(&spec, &kp).unwrap().value
                            - f_eval(&spec, &km).unwrap().value)
                            / (2.0 * hs);
                        assert!(
                            (fd - e.grad[i]).abs() <= 1e-6 * e.grad[i].abs(),
                            "{spec:?} {k:?}"
                        );
                        assert!(e.grad[i] > 0.0);
                    }
                }
            }
        }
    }

    #[test]
    fn boundary_vanishing() {
        for spec in [
            CurvatureFunctionSpec::gauss(),
            CurvatureFunctionSpec::new(Family::HkKa { k: 1, a: 1.0 }),
        ] {
            let f4 = f_eval(&spec, &[1e-4, 1.0]).unwrap().value;
            let f6 = f_eval(&spec, &[1e-6, 1.0]).unwrap().value;
            // F ~ ε^{p} with p = 1/2 for K and a/(k + a n) = 1/3 for H₁K (a = 1)
            let p = match spec.family {
                Family::GaussK => 0.5,
                _ => 1.0 / 3.0,
            };
            assert!(f6 < f4);
            assert!(((f4 / f6).log10() / 2.0 - p).abs() < 1e-3);
        }
    }

    #[test]
    fn kstar_examples() {
        let r = kstar_check(&CurvatureFunctionSpec::gauss(), 2, 1000, 1).unwrap();
        assert!((r.inf_estimate - 1.0).abs() < 1e-10);
        let r = kstar_check(&CurvatureFunctionSpec::gauss(), 1, 100, 1).unwrap();
        assert!((r.inf_estimate - 1.0).abs() < 1e-12);
        let id = [[1.0, 0.0], [0.0, 1.0]];
        for m in [0.3, 1.0, 7.0] {
            let (r, _) = kstar_ratio(
                &CurvatureFunctionSpec::hk(1),
                2,
                &id,
                &[[1.0, 0.0], [0.0, m]],
            )
            .unwrap();
            assert!((r - (1.0 + m * m) / ((1.0 + m) * (1.0 + m))).abs() < 1e-12);
        }
        let r = kstar_check(&CurvatureFunctionSpec::hk(1), 2, 1000, 1).unwrap();
        assert!((r.inf_estimate - 0.5).abs() < 1e-3);
    }

    #[test]
    fn tensor_frame_consistency() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for s in families() {
            for _ in 0..50 {
                let g = random_spd(&mut rng, 2, 1.0);
                let h = random_spd(&mut rng, 2, 1.0);
                let t = eval_tensor(&s, 2, &g, &h).unwrap();
                assert!(
                    (linalg::contract(2, &t.fij, &h) - t.eval.value).abs()
                        < 1e-10 * t.eval.value.max(1.0)
                );
            }
        }
    }

    #[test]
    fn spec_json_round_trip() {
        let s: CurvatureFunctionSpec =
            serde_json::from_str(r#"{"family":"hk_ka","k":1,"a":0.5}"#).unwrap();
        assert_eq!(s.family, Family::HkKa { k: 1, a: 0.5 });
        let back: CurvatureFunctionSpec =
            serde_json::from_str(&serde_json::to_string(&s).unwrap()).unwrap();
        assert_eq!(back, s);
        assert!(
            serde_json::from_str::<CurvatureFunctionSpec>(r#"{"family":"gauss_k","x":1}"#).is_err()
        );
        assert!(serde_json::from_str::<CurvatureFunctionSpec>(r#"{"family":"hk"}"#).is_err());
        let p: CurvatureFunctionSpec =
            serde_json::from_str(r#"{"family":"power","p":2.0,"base":{"family":"hk","k":1}}"#)
                .unwrap();
        assert_eq!(
            p.family,
            Family::Power {
                base: Box::new(Family::Hk { k: 1 }),
                p: 2.0
            }
        );
    }
}
