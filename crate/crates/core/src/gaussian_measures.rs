//! Gaussian measures in the `exp(-pi |x|^2)` normalization, Chebyshev box
//! bounds, the full-measure criterion for variance sequences, and truncated
//! rotation-invariance checks.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Uniform, StandardNormal};
use thiserror::Error;

use crate::product_engine::{
    classify_allowing_zeros, classify_product, ConvergenceCertificate, ProductError, SequenceSpec,
    TailRule,
};
use crate::quadrature::gauss_legendre;
use crate::sequence_spaces::{lp_membership, Membership};

/// Largest dimension accepted by [`rotation_invariance_check`].
pub const MAX_ROTATION_DIM: usize = 12;
const GRID_BUDGET: f64 = 2.0e6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GaussianError {
    #[error("factor {index} of the Chebyshev product is {value} <= 0")]
    VacuousBound { index: usize, value: f64 },
    #[error("x_{index} vanishes while sigma_{index}^2 does not")]
    DivisionByZero { index: usize },
    #[error("matrix is not symmetric positive definite")]
    NotPositiveDefinite,
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("invalid variance sequence: {0}")]
    InvalidVariance(String),
    #[error("L must be positive, got {0}")]
    InvalidScale(f64),
    #[error(transparent)]
    Product(#[from] ProductError),
}

fn c(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

/// Variances `sigma_k^2 >= 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct VarianceSpec {
    pub sigma2: SequenceSpec,
}

impl VarianceSpec {
    pub fn new(sigma2: SequenceSpec) -> Result<Self, GaussianError> {
        sigma2.validate()?;
        let bad = |m: &str| Err(GaussianError::InvalidVariance(m.to_string()));
        if !sigma2.is_real() || sigma2.prefix.iter().any(|v| v.re < 0.0) {
            return bad("variances must be real and nonnegative");
        }
        match &sigma2.tail {
            TailRule::Zero => {}
            TailRule::Constant(v) if v.re >= 0.0 => {}
            TailRule::Geometric { a, r } if a.re >= 0.0 && r.re >= 0.0 => {}
            TailRule::PowerLaw { a, .. } if a.re >= 0.0 => {}
            _ => return bad("tail must be zero, a nonnegative constant, geometric or power law"),
        }
        Ok(Self { sigma2 })
    }
}

/// `prod_k (1 - s_k)` as a spec for a nonnegative closed-form `s`, scaled by `scale`.
fn one_minus_spec(s: &SequenceSpec, scale: f64) -> SequenceSpec {
    let prefix = s.prefix.iter().map(|v| c(1.0) - *v * scale).collect();
    let tail = match &s.tail {
        TailRule::Zero => TailRule::Constant(c(1.0)),
        TailRule::Constant(v) => TailRule::Constant(c(1.0) - *v * scale),
        TailRule::Geometric { a, r } => {
            TailRule::OnePlus(Box::new(SequenceSpec::geometric(-*a * scale, *r)))
        }
        TailRule::PowerLaw { a, p } => {
            TailRule::OnePlus(Box::new(SequenceSpec::power_law(-*a * scale, *p)))
        }
        other => other.clone(),
    };
    SequenceSpec { prefix, tail }
}

/// Index past which a decaying nonnegative rule stays below `bound`.
fn settle_index(s: &SequenceSpec, bound: f64) -> usize {
    let mut k = s.prefix.len();
    match &s.tail {
        TailRule::Geometric { a, r } => {
            while a.norm() * r.norm().powi(k as i32 + 1) >= bound && k < 100_000 {
                k += 1;
            }
        }
        TailRule::PowerLaw { a, p } => {
            k = k.max((a.norm() / bound).powf(1.0 / p).ceil() as usize);
        }
        _ => {}
    }
    k + 1
}

/// Chebyshev lower bound `prod_k (1 - sigma_k^2 / L^2)` for the measure of
/// the box `prod_k [-L, L]`.
pub fn chebyshev_box_bound(
    s: &VarianceSpec,
    l: f64,
    tol: f64,
) -> Result<ConvergenceCertificate, GaussianError> {
    if !(l > 0.0) {
        return Err(GaussianError::InvalidScale(l));
    }
    let scale = 1.0 / (l * l);
    let spec = one_minus_spec(&s.sigma2, scale);
    if let TailRule::Constant(v) = spec.tail {
        if v.re <= 0.0 {
            return Err(GaussianError::VacuousBound { index: spec.prefix.len() + 1, value: v.re });
        }
    }
    for k in 1..=settle_index(&s.sigma2, l * l) {
        let v = spec.term(k).re;
        if v <= 0.0 {
            return Err(GaussianError::VacuousBound { index: k, value: v });
        }
    }
    Ok(classify_product(&spec, tol)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Criterion {
    Holds,
    Fails,
    Unknown,
}

impl Criterion {
    pub fn name(&self) -> &'static str {
        match self {
            Criterion::Holds => "Holds",
            Criterion::Fails => "Fails",
            Criterion::Unknown => "Unknown",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FullMeasureReport {
    pub verdict: Criterion,
    pub x_in_l1: Membership,
    pub ratio_summable: Membership,
    /// Certificate for `prod_k (1 - sigma_k^2 / |x_k|)` when computable.
    pub product: Option<ConvergenceCertificate>,
}

/// `sigma_k^2 / |x_k|` as a closed-form spec.
fn ratio_spec(s: &SequenceSpec, x: &SequenceSpec) -> Result<Option<SequenceSpec>, GaussianError> {
    let n = s.explicit_len().max(x.explicit_len());
    let mut prefix = Vec::with_capacity(n);
    for k in 1..=n {
        let (sv, xv) = (s.term(k).re, x.term(k).norm());
        if xv == 0.0 {
            if sv != 0.0 {
                return Err(GaussianError::DivisionByZero { index: k });
            }
            prefix.push(c(0.0));
        } else {
            prefix.push(c(sv / xv));
        }
    }
    let sigma_zero = matches!(s.tail, TailRule::Zero) || matches!(s.tail, TailRule::Constant(v) if v == c(0.0));
    let tail = match (&s.tail, &x.tail) {
        _ if sigma_zero => TailRule::Zero,
        (_, TailRule::Zero) => return Err(GaussianError::DivisionByZero { index: n + 1 }),
        (_, TailRule::Constant(d)) if *d == c(0.0) => return Err(GaussianError::DivisionByZero { index: n + 1 }),
        (TailRule::Constant(v), TailRule::Constant(d)) => TailRule::Constant(c(v.re / d.norm())),
        (TailRule::Geometric { a, r }, TailRule::Geometric { a: b, r: q }) => {
            let ratio = r.norm() / q.norm();
            let amp = c(a.re / b.norm());
            if ratio < 1.0 {
                TailRule::Geometric { a: amp, r: c(ratio) }
            } else if ratio == 1.0 {
                TailRule::Constant(amp)
            } else {
                return Ok(None);
            }
        }
        (TailRule::PowerLaw { a, p }, TailRule::PowerLaw { a: b, p: q }) => {
            let amp = c(a.re / b.norm());
            if p > q {
                TailRule::PowerLaw { a: amp, p: p - q }
            } else if p == q {
                TailRule::Constant(amp)
            } else {
                return Ok(None);
            }
        }
        (TailRule::Geometric { a, r }, TailRule::Constant(d)) => TailRule::Geometric { a: c(a.re / d.norm()), r: *r },
        (TailRule::PowerLaw { a, p }, TailRule::Constant(d)) => TailRule::PowerLaw { a: c(a.re / d.norm()), p: *p },
        _ => return Ok(None),
    };
    Ok(Some(SequenceSpec { prefix, tail }))
}

fn ratio_membership(s: &SequenceSpec, x: &SequenceSpec) -> Membership {
    // Geometric over power law decays; power law or constant over a
    // geometric grows.
    match (&s.tail, &x.tail) {
        (TailRule::Geometric { .. }, TailRule::PowerLaw { .. }) => Membership::CertifiedIn,
        (TailRule::PowerLaw { a, .. }, TailRule::Geometric { .. })
        | (TailRule::Constant(a), TailRule::Geometric { .. } | TailRule::PowerLaw { .. })
            if a.norm() > 0.0 =>
        {
            Membership::CertifiedOut
        }
        (TailRule::Geometric { a, r }, TailRule::Geometric { a: b, r: q }) if a.norm() > 0.0 && b.norm() > 0.0 => {
            if r.norm() < q.norm() {
                Membership::CertifiedIn
            } else {
                Membership::CertifiedOut
            }
        }
        (TailRule::PowerLaw { a, p }, TailRule::PowerLaw { p: q, .. }) if a.norm() > 0.0 => {
            if p - q > 1.0 {
                Membership::CertifiedIn
            } else {
                Membership::CertifiedOut
            }
        }
        _ => Membership::Unknown,
    }
}

/// `x in l1` and `sum sigma_k^2 / |x_k| < inf`: the Gaussian measure of the
/// weighted box is then 1.
pub fn full_measure_criterion(
    s: &VarianceSpec,
    x: &SequenceSpec,
    tol: f64,
) -> Result<FullMeasureReport, GaussianError> {
    x.validate()?;
    let x_in_l1 = lp_membership(x, 1.0);
    let ratio = ratio_spec(&s.sigma2, x)?;
    let ratio_summable = match &ratio {
        Some(r) => lp_membership(r, 1.0),
        None => ratio_membership(&s.sigma2, x),
    };
    let product = match &ratio {
        Some(r) if ratio_summable == Membership::CertifiedIn => {
            Some(classify_allowing_zeros(&one_minus_spec(r, 1.0), tol)?)
        }
        _ => None,
    };
    let verdict = match (x_in_l1, ratio_summable) {
        (Membership::CertifiedIn, Membership::CertifiedIn) => Criterion::Holds,
        (Membership::CertifiedOut, _) | (_, Membership::CertifiedOut) => Criterion::Fails,
        _ => Criterion::Unknown,
    };
    Ok(FullMeasureReport { verdict, x_in_l1, ratio_summable, product })
}

/// `mu[H_a] = 1` for `H_a = {x : sum a_n^2 x_n^2 < inf}` iff `a in l2`.
pub fn weighted_space_full_measure(a: &SequenceSpec) -> Membership {
    lp_membership(a, 2.0)
}

#[derive(Debug, Clone, PartialEq)]
pub struct GaussianDensityEval {
    pub point: Vec<f64>,
    pub value: f64,
    pub truncation_dim: usize,
}

/// `exp(-pi |x|^2)`.
pub fn gaussian_density(x: &[f64]) -> GaussianDensityEval {
    let q: f64 = x.iter().map(|v| v * v).sum();
    GaussianDensityEval { point: x.to_vec(), value: (-PI * q).exp(), truncation_dim: x.len() }
}

/// `det(Q)^(-1/2) exp(-pi <Q^-1 (x - m), x - m>)`.
pub fn covariance_density(x: &[f64], m: &[f64], q: &DMatrix<f64>) -> Result<f64, GaussianError> {
    let n = x.len();
    if m.len() != n || q.nrows() != n || q.ncols() != n {
        return Err(GaussianError::DimensionMismatch(format!(
            "x has {n} entries, m has {}, Q is {}x{}",
            m.len(),
            q.nrows(),
            q.ncols()
        )));
    }
    if (q - q.transpose()).amax() > 1e-12 * q.amax().max(1.0) {
        return Err(GaussianError::NotPositiveDefinite);
    }
    let chol = q.clone().cholesky().ok_or(GaussianError::NotPositiveDefinite)?;
    let d = nalgebra::DVector::from_iterator(n, x.iter().zip(m).map(|(a, b)| a - b));
    let y = chol.solve(&d);
    let form = d.dot(&y);
    let sqrt_det: f64 = chol.l().diagonal().iter().product();
    Ok((-PI * form).exp() / sqrt_det)
}

/// Haar-distributed orthogonal matrix: QR of a Gaussian matrix with the
/// signs of `diag(R)` absorbed into `Q`.
pub fn haar_orthogonal(n: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    let g = DMatrix::from_fn(n, n, |_, _| StandardNormal.sample(rng));
    let qr = g.qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..n {
        if r[(j, j)] < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    q
}

/// Gauss-Legendre tensor quadrature of `exp(-pi |U x|^2)` and of
/// `exp(-pi |x|^2)` over a box; returns both values.
pub fn rotated_box_integrals(u: &DMatrix<f64>, bx: &[(f64, f64)]) -> (f64, f64) {
    let n = bx.len();
    let m = ((GRID_BUDGET.powf(1.0 / n as f64)).floor() as usize).clamp(2, 24);
    let (nodes, weights) = gauss_legendre(m);
    let pts: Vec<Vec<(f64, f64)>> = bx
        .iter()
        .map(|&(a, b)| {
            let (h, mid) = (0.5 * (b - a), 0.5 * (a + b));
            nodes.iter().zip(&weights).map(|(t, w)| (mid + h * t, h * w)).collect()
        })
        .collect();
    let total = m.pow(n as u32);
    let mut idx = vec![0usize; n];
    let mut x = vec![0.0; n];
    let (mut rotated, mut plain) = (0.0, 0.0);
    for _ in 0..total {
        let mut w = 1.0;
        for d in 0..n {
            let (xi, wi) = pts[d][idx[d]];
            x[d] = xi;
            w *= wi;
        }
        let mut ux2 = 0.0;
        for i in 0..n {
            let mut s = 0.0;
            for j in 0..n {
                s += u[(i, j)] * x[j];
            }
            ux2 += s * s;
        }
        let x2: f64 = x.iter().map(|v| v * v).sum();
        rotated += w * (-PI * ux2).exp();
        plain += w * (-PI * x2).exp();
        for d in 0..n {
            idx[d] += 1;
            if idx[d] < m {
                break;
            }
            idx[d] = 0;
        }
    }
    (rotated, plain)
}

/// Max deviation between the rotated and unrotated box integrals over
/// `trials` Haar rotations and random boxes in `[-3/2, 3/2]^n`.
pub fn rotation_invariance_check(n: usize, trials: usize, seed: u64) -> Result<f64, GaussianError> {
    if n == 0 || n > MAX_ROTATION_DIM {
        return Err(GaussianError::DimensionMismatch(format!("n = {n} must be in 1..={MAX_ROTATION_DIM}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let side = Uniform::new(-1.5f64, 1.5).expect("valid range");
    let mut worst = 0.0f64;
    for _ in 0..trials {
        let u = haar_orthogonal(n, &mut rng);
        let bx: Vec<(f64, f64)> = (0..n)
            .map(|_| {
                let (a, b) = (side.sample(&mut rng), side.sample(&mut rng));
                (a.min(b), a.max(b))
            })
            .collect();
        let (r, p) = rotated_box_integrals(&u, &bx);
        worst = worst.max((r - p).abs());
    }
    Ok(worst)
}
