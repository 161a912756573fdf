//! Sums and products of factor operators on finite-dimensional factor
//! spaces: Reed-series certification of scs/scp vectors, tensor semigroups
//! `S_n(t)` and the contraction bound `||(S_n - S_m) g|| <= t ||(A^n - A^m) g||`.

use nalgebra::DVector;
use num_complex::Complex64;
use thiserror::Error;

use crate::product_engine::{
    abs_series_bound, classify_product, ConvergenceCertificate, ProductError, SequenceSpec,
    SeriesBound, TailRule, Verdict,
};
use crate::quadrature::{hermitian_eigen, matrix_exp, CMatrix, QuadError};
use crate::sequence_spaces::{lp_membership, Membership};

pub type CVector = DVector<Complex64>;

pub const MAX_FACTOR_DIM: usize = 16;
pub const MAX_TENSOR_DIM: usize = 4096;
/// Tolerance for `||g_k|| = 1`.
pub const UNIT_TOL: f64 = 1e-12;
const ZERO: f64 = 1e-13;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OperatorError {
    #[error("factor {index} has norm {norm}, expected 1")]
    NonUnitVector { index: usize, norm: f64 },
    #[error("A_{index} g_{index} = 0")]
    ZeroImage { index: usize },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("tensor dimension {0} exceeds {MAX_TENSOR_DIM}")]
    TensorDimTooLarge(usize),
    #[error("invalid operator family: {0}")]
    InvalidFamily(String),
    #[error("time must be nonnegative, got {0}")]
    NegativeTime(f64),
    #[error(transparent)]
    Quadrature(#[from] QuadError),
    #[error(transparent)]
    Product(#[from] ProductError),
}

fn c(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

/// `<u, v> = sum u_i conj(v_i)`.
pub fn inner(u: &CVector, v: &CVector) -> Complex64 {
    u.iter().zip(v.iter()).map(|(a, b)| a * b.conj()).sum()
}

#[derive(Debug, Clone, PartialEq)]
pub enum TailOperator {
    Zero,
    /// `A_k = w_k A`.
    ScaledFixed { a: CMatrix, weights: SequenceSpec },
}

#[derive(Debug, Clone, PartialEq)]
pub struct FactorOperatorFamily {
    pub ops: Vec<CMatrix>,
    pub tail: TailOperator,
}

impl FactorOperatorFamily {
    pub fn new(ops: Vec<CMatrix>, tail: TailOperator) -> Result<Self, OperatorError> {
        let bad = |m: String| Err(OperatorError::InvalidFamily(m));
        for (i, a) in ops.iter().enumerate() {
            if a.nrows() != a.ncols() || a.nrows() == 0 || a.nrows() > MAX_FACTOR_DIM {
                return bad(format!("operator {} is {}x{}", i + 1, a.nrows(), a.ncols()));
            }
            if a.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
                return bad(format!("operator {} has non-finite entries", i + 1));
            }
        }
        if let TailOperator::ScaledFixed { a, weights } = &tail {
            weights.validate()?;
            if a.nrows() != a.ncols() || a.nrows() == 0 || a.nrows() > MAX_FACTOR_DIM {
                return bad(format!("tail operator is {}x{}", a.nrows(), a.ncols()));
            }
        }
        Ok(Self { ops, tail })
    }

    /// `A_k` (one-based); `dim` sizes the zero tail.
    pub fn op_at(&self, k: usize, dim: usize) -> CMatrix {
        if k <= self.ops.len() {
            return self.ops[k - 1].clone();
        }
        match &self.tail {
            TailOperator::Zero => CMatrix::zeros(dim, dim),
            TailOperator::ScaledFixed { a, weights } => a * weights.term(k),
        }
    }

    fn weights(&self) -> Option<(&CMatrix, &SequenceSpec)> {
        match &self.tail {
            TailOperator::Zero => None,
            TailOperator::ScaledFixed { a, weights } => Some((a, weights)),
        }
    }

    /// Last index whose operator is not given by the closed-form tail.
    fn explicit_len(&self) -> usize {
        self.ops.len().max(self.weights().map_or(0, |(_, w)| w.explicit_len()))
    }
}

/// Unit vectors `g_k` in `C^{d_k}`: an explicit prefix and a constant tail.
#[derive(Debug, Clone, PartialEq)]
pub struct ProductVectorFD {
    pub prefix: Vec<CVector>,
    pub tail: CVector,
}

impl ProductVectorFD {
    pub fn new(prefix: Vec<CVector>, tail: CVector) -> Result<Self, OperatorError> {
        let v = Self { prefix, tail };
        for k in 1..=v.prefix.len() + 1 {
            let n = v.vector_at(k).norm();
            if (n - 1.0).abs() > UNIT_TOL {
                return Err(OperatorError::NonUnitVector { index: k, norm: n });
            }
        }
        Ok(v)
    }

    pub fn vector_at(&self, k: usize) -> &CVector {
        self.prefix.get(k - 1).unwrap_or(&self.tail)
    }
}

fn check_dims(f: &FactorOperatorFamily, g: &ProductVectorFD, upto: usize) -> Result<(), OperatorError> {
    for k in 1..=upto + 1 {
        let d = g.vector_at(k).len();
        let a = f.op_at(k, d);
        if a.nrows() != d {
            return Err(OperatorError::DimensionMismatch(format!(
                "A_{k} is {0}x{0} but g_{k} has {d} entries",
                a.nrows()
            )));
        }
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceVectorReport {
    pub g: ProductVectorFD,
    pub scs_certified: bool,
    pub scp_certified: bool,
    /// `sum_k |<A_k g_k, g_k>|`
    pub reed_sum_1: SeriesBound,
    /// `sum_k ||A_k g_k||^2`
    pub reed_sum_2: SeriesBound,
    /// Certificate for `prod_k ||A_k g_k||` (scp only).
    pub norm_product: Option<ConvergenceCertificate>,
    /// `sum_k |1 - <A_k g_k / ||A_k g_k||, g_k>|` (scp only; absent when
    /// no closed form applies).
    pub direction_series: Option<SeriesBound>,
}

fn square_rule(rule: &TailRule) -> Option<TailRule> {
    Some(match rule {
        TailRule::Zero => TailRule::Zero,
        TailRule::Constant(v) => TailRule::Constant(c(v.norm_sqr())),
        TailRule::Geometric { a, r } => TailRule::Geometric { a: c(a.norm_sqr()), r: c(r.norm_sqr()) },
        TailRule::PowerLaw { a, p } => TailRule::PowerLaw { a: c(a.norm_sqr()), p: 2.0 * p },
        _ => return None,
    })
}

/// `scale * sum_{k > from} |t_k|` where `t` is given over all indices.
fn scaled_tail_sum(t: &SequenceSpec, from: usize, scale: f64) -> Result<SeriesBound, OperatorError> {
    if scale <= ZERO {
        return Ok(SeriesBound { lower: 0.0, upper: 0.0 });
    }
    let all = abs_series_bound(t)?;
    let head: f64 = (1..=from).map(|k| t.term(k).norm()).sum();
    Ok(SeriesBound {
        lower: scale * (all.lower - head).max(0.0),
        upper: scale * (all.upper - head).max(0.0),
    })
}

fn add(a: SeriesBound, v: f64) -> SeriesBound {
    SeriesBound { lower: a.lower + v, upper: a.upper + v }
}

/// Both Reed series along `g`.
pub fn certify_scs(f: &FactorOperatorFamily, g: &ProductVectorFD) -> Result<ConvergenceVectorReport, OperatorError> {
    let g = ProductVectorFD::new(g.prefix.clone(), g.tail.clone())?;
    let k0 = f.explicit_len().max(g.prefix.len());
    check_dims(f, &g, k0)?;
    let (mut s1, mut s2) = (0.0, 0.0);
    for k in 1..=k0 {
        let v = g.vector_at(k);
        let av = f.op_at(k, v.len()) * v;
        s1 += inner(&av, v).norm();
        s2 += av.norm_squared();
    }
    let (r1, r2) = match f.weights() {
        None => (SeriesBound { lower: s1, upper: s1 }, SeriesBound { lower: s2, upper: s2 }),
        Some((a, w)) => {
            let av = a * &g.tail;
            let alpha = inner(&av, &g.tail).norm();
            let beta = av.norm_squared();
            let t1 = scaled_tail_sum(w, k0, alpha)?;
            let t2 = if beta <= ZERO {
                SeriesBound { lower: 0.0, upper: 0.0 }
            } else {
                match square_rule(&w.tail) {
                    Some(rule) => {
                        let prefix = w.prefix.iter().map(|z| c(z.norm_sqr())).collect();
                        scaled_tail_sum(&SequenceSpec::new(prefix, rule)?, k0, beta)?
                    }
                    // Non-decaying weights: |w_k|^2 and |w_k| diverge together.
                    None => scaled_tail_sum(w, k0, beta)?,
                }
            };
            (add(t1, s1), add(t2, s2))
        }
    };
    Ok(ConvergenceVectorReport {
        scs_certified: r1.is_finite() && r2.is_finite(),
        g,
        scp_certified: false,
        reed_sum_1: r1,
        reed_sum_2: r2,
        norm_product: None,
        direction_series: None,
    })
}

fn scale_rule(rule: &TailRule, s: f64) -> Option<TailRule> {
    if (s - 1.0).abs() <= UNIT_TOL {
        return Some(rule.clone());
    }
    Some(match rule {
        TailRule::Zero => TailRule::Zero,
        TailRule::Constant(v) => TailRule::Constant(v * s),
        TailRule::Geometric { a, r } => TailRule::Geometric { a: a * s, r: *r },
        TailRule::PowerLaw { a, p } => TailRule::PowerLaw { a: a * s, p: *p },
        _ => return None,
    })
}

fn is_decaying(rule: &TailRule) -> bool {
    matches!(rule, TailRule::Zero | TailRule::Geometric { .. } | TailRule::PowerLaw { .. })
        || matches!(rule, TailRule::Constant(v) if *v == c(0.0))
}

fn series(lower: f64, upper: f64) -> Option<SeriesBound> {
    Some(SeriesBound { lower, upper })
}

/// `sum_{k > k0} |1 - beta w_k / |w_k||` for unit `beta`.
fn direction_tail(beta: Complex64, w: &TailRule, k0: usize) -> Option<SeriesBound> {
    let inf = series(0.0, f64::INFINITY);
    let constant = |ph: Complex64| {
        if (c(1.0) - beta * ph).norm() <= ZERO {
            series(0.0, 0.0)
        } else {
            inf
        }
    };
    match w {
        TailRule::Constant(v) => constant(v / v.norm()),
        TailRule::PowerLaw { a, .. } => constant(a / a.norm()),
        TailRule::Geometric { a, r } if r.im == 0.0 && r.re > 0.0 => constant(a / a.norm()),
        TailRule::OnePlus(x) if is_decaying(&x.tail) => {
            if (c(1.0) - beta).norm() > ZERO {
                return inf;
            }
            if x.is_real() {
                return series(0.0, 0.0);
            }
            match lp_membership(x, 1.0) {
                Membership::CertifiedIn => {
                    let b = abs_series_bound(x).ok()?;
                    let head: f64 = (1..=k0).map(|k| x.term(k).norm()).sum();
                    series(0.0, std::f64::consts::FRAC_PI_2 * (b.upper - head).max(0.0))
                }
                Membership::CertifiedOut => match &x.tail {
                    TailRule::PowerLaw { a, .. } if a.im != 0.0 => inf,
                    _ => None,
                },
                Membership::Unknown => None,
            }
        }
        TailRule::UnitPhase(theta) => match &theta.tail {
            TailRule::Constant(t) => constant(Complex64::from_polar(1.0, t.re)),
            rule if is_decaying(rule) => {
                if (c(1.0) - beta).norm() > ZERO {
                    return inf;
                }
                let b = abs_series_bound(theta).ok()?;
                if !b.is_finite() {
                    return inf;
                }
                let head: f64 = (1..=k0).map(|k| theta.term(k).norm()).sum();
                series(0.0, (b.upper - head).max(0.0))
            }
            _ => None,
        },
        _ => None,
    }
}

/// Reed series plus the scp conditions: `prod ||A_k g_k||` converges to a
/// nonzero value and the normalized images are strongly equivalent to `g`.
pub fn certify_scp(f: &FactorOperatorFamily, g: &ProductVectorFD, tol: f64) -> Result<ConvergenceVectorReport, OperatorError> {
    let mut report = certify_scs(f, g)?;
    let g = &report.g;
    let k0 = f.explicit_len().max(g.prefix.len());
    let mut norms = Vec::with_capacity(k0);
    let mut head = 0.0;
    for k in 1..=k0 {
        let v = g.vector_at(k);
        let av = f.op_at(k, v.len()) * v;
        let n = av.norm();
        if n <= ZERO {
            return Err(OperatorError::ZeroImage { index: k });
        }
        head += (c(1.0) - inner(&av, v) / n).norm();
        norms.push(c(n));
    }
    let Some((a, w)) = f.weights() else {
        return Err(OperatorError::ZeroImage { index: k0 + 1 });
    };
    let av = a * &g.tail;
    let cn = av.norm();
    if cn <= ZERO || matches!(w.tail, TailRule::Zero) {
        return Err(OperatorError::ZeroImage { index: k0 + 1 });
    }
    let beta = inner(&av, &g.tail) / cn;
    let (product_ok, certificate) = match scale_rule(&w.tail, cn) {
        Some(rule) => {
            let cert = classify_product(&SequenceSpec::new(norms, rule)?, tol)?;
            let modulus = match cert.verdict {
                Verdict::Convergent => cert.limit.map(|l| l.norm()),
                Verdict::QuasiConvergent => cert.modulus_limit,
                Verdict::Divergent => None,
            };
            (modulus.is_some_and(|m| m > 0.0), Some(cert))
        }
        None => (false, None),
    };
    let direction = if (beta.norm() - 1.0).abs() > 1e-12 {
        series(head, f64::INFINITY)
    } else {
        direction_tail(beta / beta.norm(), &w.tail, k0).map(|b| add(b, head))
    };
    report.scp_certified = product_ok && direction.is_some_and(|d| d.is_finite());
    report.norm_product = certificate;
    report.direction_series = direction;
    Ok(report)
}

/// `S_n(t) g`: `exp(t A_k) g_k` for `k <= n`, identity beyond.
pub fn semigroup_apply(
    f: &FactorOperatorFamily,
    t: f64,
    g: &ProductVectorFD,
    n: usize,
) -> Result<ProductVectorFD, OperatorError> {
    if !(t >= 0.0) {
        return Err(OperatorError::NegativeTime(t));
    }
    check_dims(f, g, n)?;
    let len = n.max(g.prefix.len());
    let mut prefix = Vec::with_capacity(len);
    for k in 1..=len {
        let v = g.vector_at(k);
        if k <= n {
            prefix.push(matrix_exp(&f.op_at(k, v.len()), t)? * v);
        } else {
            prefix.push(v.clone());
        }
    }
    Ok(ProductVectorFD { prefix, tail: g.tail.clone() })
}

/// Largest eigenvalue of `(A + A^*) / 2`.
pub fn numerical_abscissa(a: &CMatrix) -> f64 {
    let h = (a + a.adjoint()) * c(0.5);
    hermitian_eigen(&h).0.into_iter().fold(f64::NEG_INFINITY, f64::max)
}

/// Numerical range in the closed left half-plane.
pub fn is_dissipative(a: &CMatrix) -> bool {
    numerical_abscissa(a) <= 1e-12 * a.norm().max(1.0)
}

fn kron(vs: &[CVector]) -> CVector {
    vs.iter().fold(CVector::from_element(1, c(1.0)), |acc, v| {
        CVector::from_iterator(acc.len() * v.len(), acc.iter().flat_map(|a| v.iter().map(move |b| a * b)))
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct GapReport {
    pub gap: f64,
    pub bound: f64,
    /// Indices `k <= m` whose generator fails the dissipativity check.
    pub non_dissipative: Vec<usize>,
}

impl GapReport {
    pub fn holds(&self) -> bool {
        self.gap <= self.bound + 1e-9
    }
}

/// `||S_n(t) g - S_m(t) g||` and `t ||sum_{n<k<=m} A_k g||` in the tensor
/// space of the first `m` factors.
pub fn contraction_gap(
    f: &FactorOperatorFamily,
    t: f64,
    g: &ProductVectorFD,
    n: usize,
    m: usize,
) -> Result<GapReport, OperatorError> {
    if n > m || m > f.ops.len() {
        return Err(OperatorError::DimensionMismatch(format!(
            "need n <= m <= {} operators, got n = {n}, m = {m}",
            f.ops.len()
        )));
    }
    check_dims(f, g, m)?;
    let dim: usize = (1..=m).map(|k| g.vector_at(k).len()).product();
    if dim > MAX_TENSOR_DIM {
        return Err(OperatorError::TensorDimTooLarge(dim));
    }
    let sn = semigroup_apply(f, t, g, n)?;
    let sm = semigroup_apply(f, t, g, m)?;
    let take = |v: &ProductVectorFD| (1..=m).map(|k| v.vector_at(k).clone()).collect::<Vec<_>>();
    let gap = (kron(&take(&sn)) - kron(&take(&sm))).norm();
    let base = take(g);
    let mut sum = CVector::zeros(dim);
    for k in n + 1..=m {
        let mut factors = base.clone();
        factors[k - 1] = &f.ops[k - 1] * &base[k - 1];
        sum += kron(&factors);
    }
    let non_dissipative = (1..=m).filter(|&k| !is_dissipative(&f.ops[k - 1])).collect();
    Ok(GapReport { gap, bound: t * sum.norm(), non_dissipative })
}

/// `||sum_{k1 < k <= k2} A_k g||` from the factor data alone.
pub fn partial_sum_increment(
    f: &FactorOperatorFamily,
    g: &ProductVectorFD,
    k1: usize,
    k2: usize,
) -> Result<f64, OperatorError> {
    check_dims(f, g, k2)?;
    let (mut sq, mut abs_sq, mut total) = (0.0, 0.0, c(0.0));
    for k in k1 + 1..=k2 {
        let v = g.vector_at(k);
        let av = f.op_at(k, v.len()) * v;
        let a = inner(&av, v);
        sq += av.norm_squared();
        abs_sq += a.norm_sqr();
        total += a;
    }
    Ok((sq - abs_sq + total.norm_sqr()).max(0.0).sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StreitReport {
    /// `sum |<A_k E_k g_k, g_k>|` finite.
    pub first: bool,
    /// `sum |<A_k^2 E_k g_k, g_k>|` finite.
    pub second: bool,
    /// `sum ||(I - E_k) g_k||^2` finite.
    pub third: bool,
}

impl StreitReport {
    pub fn all(&self) -> bool {
        self.first && self.second && self.third
    }
}

/// Spectral projector of a Hermitian matrix onto eigenvalues in `[-c, c]`.
fn spectral_projector(a: &CMatrix, cut: f64) -> CMatrix {
    let (vals, vecs) = hermitian_eigen(a);
    let mut p = CMatrix::zeros(a.nrows(), a.nrows());
    for (j, l) in vals.iter().enumerate() {
        if l.abs() <= cut {
            let v = vecs.column(j);
            p += &v * v.adjoint();
        }
    }
    p
}

/// Streit's conditions with spectral cut `[-cut, cut]` for a family of
/// Hermitian operators whose tail weights are real and either decay or are
/// eventually constant.
pub fn streit_conditions(f: &FactorOperatorFamily, g: &ProductVectorFD, cut: f64) -> Result<StreitReport, OperatorError> {
    let g = ProductVectorFD::new(g.prefix.clone(), g.tail.clone())?;
    let mut k0 = f.explicit_len().max(g.prefix.len());
    check_dims(f, &g, k0)?;
    let Some((a, w)) = f.weights() else {
        return Ok(StreitReport { first: true, second: true, third: true });
    };
    if !w.is_real() || (a - a.adjoint()).norm() > 1e-12 * a.norm().max(1.0) {
        return Err(OperatorError::InvalidFamily("Streit conditions need Hermitian operators and real weights".into()));
    }
    let spread = hermitian_eigen(a).0.iter().fold(0.0f64, |m, l| m.max(l.abs()));
    let (limit_weight, decaying) = match &w.tail {
        TailRule::Constant(v) => (v.re, v.re == 0.0),
        rule if is_decaying(rule) => (0.0, true),
        _ => return Err(OperatorError::InvalidFamily("weights must decay or be constant".into())),
    };
    if decaying {
        while w.term(k0 + 1).norm() * spread > cut && k0 < 1_000_000 {
            k0 += 1;
        }
    }
    let e = spectral_projector(&(a * c(limit_weight)), cut);
    let v = &g.tail;
    let ev = &e * v;
    let first_c = inner(&(a * &ev), v).norm();
    let second_c = inner(&(a * (a * &ev)), v).norm();
    let third_c = (v - &ev).norm_squared();
    let squares = match square_rule(&w.tail) {
        Some(rule) => Some(SequenceSpec::new(w.prefix.iter().map(|z| c(z.norm_sqr())).collect(), rule)?),
        None => None,
    };
    let first = scaled_tail_sum(w, k0, first_c)?.is_finite();
    let second = match &squares {
        Some(s) => scaled_tail_sum(s, k0, second_c)?.is_finite(),
        None => second_c <= ZERO,
    };
    let third = decaying || third_c <= ZERO;
    Ok(StreitReport { first, second, third })
}
