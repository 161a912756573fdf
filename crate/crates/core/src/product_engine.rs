//! Infinite products of complex numbers over eventually canonical sequences.
//!
//! A product converges when `sum |1 - z_k|` is finite (its limit is then
//! nonzero), is quasi-convergent when only `sum |1 - |z_k||` is finite (value
//! 0 by convention), and diverges otherwise. Both series are bounded
//! analytically on the closed-form tail, never by sampling.

use num_complex::Complex64;
use thiserror::Error;

const U: f64 = 1.2e-16;
/// Extra explicit terms summed to produce a finite lower bound for a
/// divergent series.
const LOWER_WITNESS_TERMS: usize = 1000;
/// Cap on the truncation index chosen for geometric tails.
const MAX_TRUNCATION: usize = 1_000_000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ProductError {
    #[error("term {index} is zero")]
    ZeroTerm { index: usize },
    #[error("tail cannot be majorized: {0}")]
    UnboundedTail(String),
    #[error("invalid sequence: {0}")]
    InvalidSpec(String),
    #[error("tolerance must be positive, got {0}")]
    InvalidTolerance(f64),
}

/// Closed-form rule for the terms after the prefix.
#[derive(Debug, Clone, PartialEq)]
pub enum TailRule {
    Zero,
    Constant(Complex64),
    /// `a * r^k`
    Geometric { a: Complex64, r: Complex64 },
    /// `a * k^(-p)`
    PowerLaw { a: Complex64, p: f64 },
    /// `1 + s_k`
    OnePlus(Box<SequenceSpec>),
    /// `exp(i theta_k)` for a real sequence `theta`.
    UnitPhase(Box<SequenceSpec>),
}

/// Explicit prefix `z_1..z_n` followed by a tail rule evaluated at `k > n`.
#[derive(Debug, Clone, PartialEq)]
pub struct SequenceSpec {
    pub prefix: Vec<Complex64>,
    pub tail: TailRule,
}

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

impl SequenceSpec {
    pub fn new(prefix: Vec<Complex64>, tail: TailRule) -> Result<Self, ProductError> {
        let s = Self { prefix, tail };
        s.validate()?;
        Ok(s)
    }

    pub fn tail_only(tail: TailRule) -> Self {
        Self { prefix: Vec::new(), tail }
    }

    pub fn zero() -> Self {
        Self::tail_only(TailRule::Zero)
    }

    pub fn constant(v: Complex64) -> Self {
        Self::tail_only(TailRule::Constant(v))
    }

    pub fn geometric(a: Complex64, r: Complex64) -> Self {
        Self::tail_only(TailRule::Geometric { a, r })
    }

    pub fn power_law(a: Complex64, p: f64) -> Self {
        Self::tail_only(TailRule::PowerLaw { a, p })
    }

    pub fn one_plus(inner: SequenceSpec) -> Self {
        Self::tail_only(TailRule::OnePlus(Box::new(inner)))
    }

    pub fn unit_phase(inner: SequenceSpec) -> Self {
        Self::tail_only(TailRule::UnitPhase(Box::new(inner)))
    }

    pub fn with_prefix(mut self, prefix: Vec<Complex64>) -> Self {
        self.prefix = prefix;
        self
    }

    pub fn validate(&self) -> Result<(), ProductError> {
        if self.prefix.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(ProductError::InvalidSpec("non-finite prefix term".into()));
        }
        match &self.tail {
            TailRule::Zero => Ok(()),
            TailRule::Constant(v) => finite(*v),
            TailRule::Geometric { a, r } => {
                finite(*a)?;
                finite(*r)?;
                if r.norm() >= 1.0 {
                    return Err(ProductError::InvalidSpec(format!(
                        "geometric ratio |r| = {} is not below 1",
                        r.norm()
                    )));
                }
                Ok(())
            }
            TailRule::PowerLaw { a, p } => {
                finite(*a)?;
                if !(*p > 0.0) || !p.is_finite() {
                    return Err(ProductError::InvalidSpec(format!(
                        "power-law exponent {p} is not positive"
                    )));
                }
                Ok(())
            }
            TailRule::OnePlus(inner) => inner.validate(),
            TailRule::UnitPhase(inner) => {
                inner.validate()?;
                if !inner.is_real() {
                    return Err(ProductError::InvalidSpec(
                        "unit-phase argument must be real".into(),
                    ));
                }
                Ok(())
            }
        }
    }

    /// True when every parameter and prefix entry is real.
    pub fn is_real(&self) -> bool {
        self.prefix.iter().all(|z| z.im == 0.0)
            && match &self.tail {
                TailRule::Zero => true,
                TailRule::Constant(v) => v.im == 0.0,
                TailRule::Geometric { a, r } => a.im == 0.0 && r.im == 0.0,
                TailRule::PowerLaw { a, .. } => a.im == 0.0,
                TailRule::OnePlus(inner) => inner.is_real(),
                TailRule::UnitPhase(_) => false,
            }
    }

    /// Term `z_k`, one-based.
    pub fn term(&self, k: usize) -> Complex64 {
        if k >= 1 && k <= self.prefix.len() {
            return self.prefix[k - 1];
        }
        self.tail.eval(k)
    }

    /// Largest prefix length found at any nesting level; beyond it every
    /// term comes from the pure closed-form rule.
    pub fn explicit_len(&self) -> usize {
        let inner = match &self.tail {
            TailRule::OnePlus(s) | TailRule::UnitPhase(s) => s.explicit_len(),
            _ => 0,
        };
        self.prefix.len().max(inner)
    }
}

fn finite(v: Complex64) -> Result<(), ProductError> {
    if v.re.is_finite() && v.im.is_finite() {
        Ok(())
    } else {
        Err(ProductError::InvalidSpec("non-finite parameter".into()))
    }
}

impl TailRule {
    pub fn eval(&self, k: usize) -> Complex64 {
        match self {
            TailRule::Zero => c(0.0),
            TailRule::Constant(v) => *v,
            TailRule::Geometric { a, r } => *a * r.powu(k as u32),
            TailRule::PowerLaw { a, p } => *a * (k as f64).powf(-p),
            TailRule::OnePlus(s) => c(1.0) + s.term(k),
            TailRule::UnitPhase(s) => Complex64::from_polar(1.0, s.term(k).re),
        }
    }

    /// Constant value of the pure rule, if it is constant.
    fn as_constant(&self) -> Option<Complex64> {
        match self {
            TailRule::Zero => Some(c(0.0)),
            TailRule::Constant(v) => Some(*v),
            TailRule::Geometric { a, .. } | TailRule::PowerLaw { a, .. } if *a == c(0.0) => {
                Some(c(0.0))
            }
            TailRule::Geometric { .. } | TailRule::PowerLaw { .. } => None,
            TailRule::OnePlus(s) => s.tail.as_constant().map(|v| c(1.0) + v),
            TailRule::UnitPhase(s) => s.tail.as_constant().map(|v| Complex64::from_polar(1.0, v.re)),
        }
    }

    /// Limit of the pure rule as `k -> inf`, when it exists.
    fn limit(&self) -> Option<Complex64> {
        match self {
            TailRule::Zero | TailRule::Geometric { .. } | TailRule::PowerLaw { .. } => {
                self.as_constant().or(Some(c(0.0)))
            }
            TailRule::Constant(v) => Some(*v),
            TailRule::OnePlus(s) => s.tail.limit().map(|v| c(1.0) + v),
            TailRule::UnitPhase(s) => s.tail.limit().map(|v| Complex64::from_polar(1.0, v.re)),
        }
    }
}

/// Certified enclosure `[lo, hi]` of a nonnegative series; `hi = inf`
/// certifies divergence.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesBound {
    pub lower: f64,
    pub upper: f64,
}

impl SeriesBound {
    fn exact(v: f64) -> Self {
        Self { lower: v, upper: v }
    }
    fn infinite() -> Self {
        Self { lower: 0.0, upper: f64::INFINITY }
    }
    fn shift(self, v: f64) -> Self {
        Self { lower: self.lower + v, upper: self.upper + v }
    }
    pub fn is_finite(&self) -> bool {
        self.upper.is_finite()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Convergent,
    QuasiConvergent,
    Divergent,
}

impl Verdict {
    pub fn name(&self) -> &'static str {
        match self {
            Verdict::Convergent => "Convergent",
            Verdict::QuasiConvergent => "QuasiConvergent",
            Verdict::Divergent => "Divergent",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceCertificate {
    pub verdict: Verdict,
    /// Limit estimate; `0` for quasi-convergent products, absent when
    /// divergent.
    pub limit: Option<Complex64>,
    pub partial_value: Complex64,
    /// For convergent products, bounds `|limit - true limit|`, and also
    /// `|partial_value - true limit|` when the tail is geometric.
    pub error_bound: f64,
    /// Upper bound on `sum |1 - z_k|` (convergent or divergent) or on
    /// `sum |1 - |z_k||` (quasi-convergent).
    pub series_sum_bound: f64,
    pub truncation_k: usize,
    /// Bound on `|partial_value - true limit|`.
    pub remainder_bound: f64,
    pub one_minus: SeriesBound,
    pub modulus_series: SeriesBound,
    /// Limit of `prod |z_k|` when that product converges.
    pub modulus_limit: Option<f64>,
    /// Divergent products whose partial products tend to 0.
    pub diverges_to_zero: bool,
}

impl ConvergenceCertificate {
    /// Value assigned to the product: the limit when convergent, 0 when
    /// quasi-convergent or divergent to 0, none otherwise.
    pub fn value(&self) -> Option<Complex64> {
        match self.verdict {
            Verdict::Convergent | Verdict::QuasiConvergent => self.limit,
            Verdict::Divergent if self.diverges_to_zero => Some(c(0.0)),
            Verdict::Divergent => None,
        }
    }
}

/// `prod_{k=1..K} z_k` by direct multiplication.
pub fn partial_product(z: &SequenceSpec, k_max: usize) -> Complex64 {
    (1..=k_max).fold(c(1.0), |acc, k| acc * z.term(k))
}

/// Tail of the zeta series `sum_{k>n} k^-p` with an error bound.
pub fn zeta_tail(p: f64, n: usize) -> (f64, f64) {
    let m = n.max(64);
    let explicit: f64 = ((n + 1)..=m).rev().map(|k| (k as f64).powf(-p)).sum();
    let x = (m + 1) as f64;
    // Euler-Maclaurin at x: integral + f/2 - sum B_2j/(2j)! f^(2j-1)(x).
    let f = x.powf(-p);
    let rising = |j: u32| (0..j).fold(1.0, |acc, i| acc * (p + i as f64));
    let d = |j: u32| rising(j) * x.powf(-p - j as f64);
    let integral = x.powf(1.0 - p) / (p - 1.0);
    let em = integral + 0.5 * f + d(1) / 12.0 - d(3) / 720.0 + d(5) / 30240.0;
    let err = 2.0 * d(7) / 1209600.0 + 4.0 * U * (explicit + em);
    (explicit + em, err)
}

/// Returns `(value, err)` for `sum_{k>n} rule_k` over a pure decaying rule.
fn pure_sum(rule: &TailRule, n: usize) -> Option<(Complex64, f64)> {
    match rule {
        TailRule::Zero => Some((c(0.0), 0.0)),
        TailRule::Constant(v) if *v == c(0.0) => Some((c(0.0), 0.0)),
        TailRule::Geometric { a, r } => {
            let v = *a * r.powu(n as u32 + 1) / (c(1.0) - *r);
            Some((v, 4.0 * U * v.norm()))
        }
        TailRule::PowerLaw { a, p } if *p > 1.0 => {
            let (z, e) = zeta_tail(*p, n);
            Some((*a * z, a.norm() * e))
        }
        _ => None,
    }
}

/// Bound on `sum_{k>n} |s_k|` for a pure rule `s`.
fn pure_abs_series(rule: &TailRule, n: usize) -> Result<SeriesBound, ProductError> {
    if let Some(v) = rule.as_constant() {
        return Ok(if v == c(0.0) { SeriesBound::exact(0.0) } else { SeriesBound::infinite() });
    }
    match rule {
        TailRule::Geometric { a, r } => {
            let v = a.norm() * r.norm().powi(n as i32 + 1) / (1.0 - r.norm());
            Ok(SeriesBound { lower: v * (1.0 - 4.0 * U), upper: v * (1.0 + 4.0 * U) })
        }
        TailRule::PowerLaw { a, p } => {
            if *p > 1.0 {
                let (z, e) = zeta_tail(*p, n);
                Ok(SeriesBound {
                    lower: a.norm() * (z - e).max(0.0),
                    upper: a.norm() * (z + e),
                })
            } else {
                Ok(SeriesBound::infinite())
            }
        }
        _ => match rule.limit() {
            Some(l) if l.norm() > 0.0 => Ok(SeriesBound::infinite()),
            _ => Err(ProductError::UnboundedTail(format!("{rule:?}"))),
        },
    }
}

/// Bound on `sum_{k>n} |1 - z_k|` for a pure rule `z`.
fn pure_one_minus(rule: &TailRule, n: usize) -> Result<SeriesBound, ProductError> {
    if let Some(v) = rule.as_constant() {
        return Ok(if v == c(1.0) { SeriesBound::exact(0.0) } else { SeriesBound::infinite() });
    }
    match rule {
        TailRule::OnePlus(s) => pure_abs_series(&s.tail, n),
        TailRule::UnitPhase(theta) => {
            // |1 - e^{it}| = 2|sin(t/2)|, between |t|(1 - t^2/24) and |t|.
            match &theta.tail {
                TailRule::Geometric { .. } | TailRule::PowerLaw { .. } => {
                    let b = pure_abs_series(&theta.tail, n)?;
                    if !b.is_finite() {
                        return Ok(SeriesBound::infinite());
                    }
                    let cube = cube_series(&theta.tail, n);
                    Ok(SeriesBound { lower: (b.lower - cube / 24.0).max(0.0), upper: b.upper })
                }
                t => match t.limit() {
                    Some(l) if (Complex64::from_polar(1.0, l.re) - c(1.0)).norm() > 1e-300 => {
                        Ok(SeriesBound::infinite())
                    }
                    _ => Err(ProductError::UnboundedTail(format!("{rule:?}"))),
                },
            }
        }
        _ => match rule.limit() {
            Some(l) if (l - c(1.0)).norm() > 0.0 => Ok(SeriesBound::infinite()),
            _ => Err(ProductError::UnboundedTail(format!("{rule:?}"))),
        },
    }
}

fn cube_series(rule: &TailRule, n: usize) -> f64 {
    match rule {
        TailRule::Geometric { a, r } => {
            let q = r.norm().powi(3);
            a.norm().powi(3) * q.powi(n as i32 + 1) / (1.0 - q)
        }
        TailRule::PowerLaw { a, p } => {
            let (z, e) = zeta_tail(3.0 * p, n);
            a.norm().powi(3) * (z + e)
        }
        _ => 0.0,
    }
}

/// Bound on `sum_{k>n} |1 - |z_k||` for a pure rule `z`.
fn pure_modulus_series(rule: &TailRule, n: usize) -> Result<SeriesBound, ProductError> {
    if let Some(v) = rule.as_constant() {
        return Ok(if v.norm() == 1.0 { SeriesBound::exact(0.0) } else { SeriesBound::infinite() });
    }
    match rule {
        TailRule::UnitPhase(_) => Ok(SeriesBound::exact(0.0)),
        TailRule::OnePlus(s) => {
            let abs = pure_abs_series(&s.tail, n)?;
            if abs.is_finite() {
                // ||1+s| - 1| <= |s|.
                return Ok(SeriesBound { lower: 0.0, upper: abs.upper });
            }
            match &s.tail {
                TailRule::PowerLaw { a, p } => {
                    if a.re != 0.0 {
                        // |1+s| - 1 ~ Re(a) k^-p with a fixed sign.
                        return Ok(SeriesBound::infinite());
                    }
                    // |1 + i b x| - 1 = sqrt(1 + b^2 x^2) - 1 in [u/2 - u^2/8, u/2].
                    let b2 = a.norm_sqr();
                    if 2.0 * p > 1.0 {
                        let (z2, e2) = zeta_tail(2.0 * p, n);
                        let (z4, e4) = zeta_tail(4.0 * p, n);
                        Ok(SeriesBound {
                            lower: (0.5 * b2 * (z2 - e2) - b2 * b2 / 8.0 * (z4 + e4)).max(0.0),
                            upper: 0.5 * b2 * (z2 + e2),
                        })
                    } else {
                        Ok(SeriesBound::infinite())
                    }
                }
                t => match t.limit() {
                    Some(l) if ((c(1.0) + l).norm() - 1.0).abs() > 0.0 => Ok(SeriesBound::infinite()),
                    _ => Err(ProductError::UnboundedTail(format!("{rule:?}"))),
                },
            }
        }
        _ => match rule.limit() {
            Some(l) if (l.norm() - 1.0).abs() > 0.0 => Ok(SeriesBound::infinite()),
            _ => Err(ProductError::UnboundedTail(format!("{rule:?}"))),
        },
    }
}

fn explicit_sum(z: &SequenceSpec, from: usize, to: usize, g: impl Fn(Complex64) -> f64) -> f64 {
    ((from + 1)..=to).map(|k| g(z.term(k))).sum()
}

fn series_with<F, G>(z: &SequenceSpec, pure: F, g: G) -> Result<SeriesBound, ProductError>
where
    F: Fn(&TailRule, usize) -> Result<SeriesBound, ProductError>,
    G: Fn(Complex64) -> f64 + Copy,
{
    z.validate()?;
    let n0 = z.explicit_len();
    let head = explicit_sum(z, 0, n0, g);
    let tail = pure(&z.tail, n0)?;
    if tail.is_finite() {
        Ok(tail.shift(head))
    } else {
        let witness = explicit_sum(z, n0, n0 + LOWER_WITNESS_TERMS, g);
        Ok(SeriesBound { lower: head + witness, upper: f64::INFINITY })
    }
}

/// Certified enclosure of `sum_k |1 - z_k|`.
pub fn one_minus_series_bound(z: &SequenceSpec) -> Result<SeriesBound, ProductError> {
    series_with(z, pure_one_minus, |t| (c(1.0) - t).norm())
}

/// Certified enclosure of `sum_k |z_k|`.
pub fn abs_series_bound(z: &SequenceSpec) -> Result<SeriesBound, ProductError> {
    series_with(z, pure_abs_series, |t| t.norm())
}

/// Certified enclosure of `sum_k |1 - |z_k||`.
pub fn modulus_series_bound(z: &SequenceSpec) -> Result<SeriesBound, ProductError> {
    series_with(z, pure_modulus_series, |t| (1.0 - t.norm()).abs())
}

/// Tail product `prod_{k>n} z_k` for a pure rule with finite `sum |1 - z_k|`,
/// returned as `(log value, error on the log)`.
fn tail_log_product(rule: &TailRule, n: usize) -> Result<(Complex64, f64), ProductError> {
    if let Some(v) = rule.as_constant() {
        if v == c(1.0) {
            return Ok((c(0.0), 0.0));
        }
    }
    match rule {
        TailRule::UnitPhase(theta) => {
            let (s, e) = pure_sum(&theta.tail, n)
                .ok_or_else(|| ProductError::UnboundedTail(format!("{rule:?}")))?;
            Ok((Complex64::new(0.0, s.re), e))
        }
        TailRule::OnePlus(s) => log_one_plus_tail(&s.tail, n),
        _ => Err(ProductError::UnboundedTail(format!("{rule:?}"))),
    }
}

/// `sum_{k>n} log(1 + s_k)` via the power series of the logarithm, valid
/// when `|s_k| <= 1/2` for all `k > n`.
fn log_one_plus_tail(s: &TailRule, n: usize) -> Result<(Complex64, f64), ProductError> {
    if let Some(v) = s.as_constant() {
        if v == c(0.0) {
            return Ok((c(0.0), 0.0));
        }
    }
    // sum_{k>n} s_k^j in closed form.
    let power_sum = |j: u32| -> (Complex64, f64) {
        match s {
            TailRule::Geometric { a, r } => {
                let rj = r.powu(j);
                let v = a.powu(j) * rj.powu(n as u32 + 1) / (c(1.0) - rj);
                (v, 4.0 * U * v.norm())
            }
            TailRule::PowerLaw { a, p } => {
                let (z, e) = zeta_tail(j as f64 * p, n);
                (a.powu(j) * z, a.norm().powi(j as i32) * e)
            }
            _ => (c(0.0), 0.0),
        }
    };
    if !matches!(s, TailRule::Geometric { .. } | TailRule::PowerLaw { .. }) {
        return Err(ProductError::UnboundedTail(format!("{s:?}")));
    }
    let mut total = c(0.0);
    let mut err = 0.0;
    let mut sign = 1.0;
    for j in 1..=60u32 {
        let (v, e) = power_sum(j);
        total += v * (sign / j as f64);
        err += e / j as f64;
        sign = -sign;
        // Remainder after j terms: sum_{i>j} |s|^i / i <= 2 |sum |s|^{j+1}| / (j+1).
        let next = abs_power_sum(s, n, j + 1);
        if next < 1e-18 * total.norm().max(1e-300) || next < 1e-30 {
            err += 2.0 * next / (j + 1) as f64;
            return Ok((total, err));
        }
        if j == 60 {
            err += 2.0 * next / (j + 1) as f64;
        }
    }
    Ok((total, err))
}

fn abs_power_sum(s: &TailRule, n: usize, j: u32) -> f64 {
    match s {
        TailRule::Geometric { a, r } => {
            let q = r.norm().powi(j as i32);
            a.norm().powi(j as i32) * q.powi(n as i32 + 1) / (1.0 - q)
        }
        TailRule::PowerLaw { a, p } => {
            let (z, e) = zeta_tail(j as f64 * p, n);
            a.norm().powi(j as i32) * (z + e)
        }
        _ => 0.0,
    }
}

/// Largest `|s_k|` for `k > n` on a pure decaying rule.
fn sup_after(s: &TailRule, n: usize) -> f64 {
    match s {
        TailRule::Geometric { a, r } => a.norm() * r.norm().powi(n as i32 + 1),
        TailRule::PowerLaw { a, p } => a.norm() * ((n + 1) as f64).powf(-p),
        _ => 0.0,
    }
}

fn is_geometric_type(rule: &TailRule) -> bool {
    match rule {
        TailRule::OnePlus(s) | TailRule::UnitPhase(s) => {
            matches!(s.tail, TailRule::Geometric { .. })
        }
        _ => false,
    }
}

fn inner_decay(rule: &TailRule) -> Option<&TailRule> {
    match rule {
        TailRule::OnePlus(s) | TailRule::UnitPhase(s) => Some(&s.tail),
        _ => None,
    }
}

struct Limit {
    partial: Complex64,
    estimate: Complex64,
    error: f64,
    remainder: f64,
    k: usize,
}

/// Truncate at some `K >= n0`, multiply exactly, then correct with the
/// closed-form log of the tail product.
fn limit_estimate(z: &SequenceSpec, tol: f64, geometric_cap: bool) -> Result<Limit, ProductError> {
    let n0 = z.explicit_len();
    let rule = &z.tail;
    let mut k = n0;
    if let Some(s) = inner_decay(rule) {
        // Keep |s_k| <= 1/2 beyond K so the log series converges.
        while sup_after(s, k) > 0.5 {
            k += 1;
        }
        if matches!(s, TailRule::PowerLaw { .. }) {
            k = k.max(1000);
        }
    }
    let mut partial = partial_product(z, k);
    if geometric_cap && is_geometric_type(rule) {
        let mut rem = remainder(rule, k, partial);
        while rem > 0.25 * tol && k < MAX_TRUNCATION {
            let step = (k / 2).max(8);
            for j in (k + 1)..=(k + step) {
                partial *= z.term(j);
            }
            k += step;
            rem = remainder(rule, k, partial);
        }
    }
    for j in 1..=k {
        if z.term(j) == c(0.0) {
            return Err(ProductError::ZeroTerm { index: j });
        }
    }
    let (log_tail, log_err) = tail_log_product(rule, k)?;
    let estimate = partial * log_tail.exp();
    let extra = if log_tail == c(0.0) { 0.0 } else { 4.0 };
    let rounding = 2.0 * U * (k as f64 + extra) * estimate.norm();
    let error = estimate.norm() * log_err.exp_m1() + rounding;
    let rem = remainder(rule, k, partial) + rounding;
    Ok(Limit { partial, estimate, error, remainder: rem, k })
}

/// `|P_K| (exp(sum_{k>K} |1 - z_k|) - 1)`.
fn remainder(rule: &TailRule, k: usize, partial: Complex64) -> f64 {
    match pure_one_minus(rule, k) {
        Ok(b) if b.is_finite() => partial.norm() * b.upper.exp_m1(),
        _ => f64::INFINITY,
    }
}

/// Modulus sequence `|z_k|` expressed as a spec, plus an exponent to apply
/// to its product.
fn modulus_spec(z: &SequenceSpec) -> Option<(SequenceSpec, f64)> {
    let n0 = z.explicit_len();
    let prefix: Vec<Complex64> = (1..=n0).map(|k| c(z.term(k).norm())).collect();
    match &z.tail {
        TailRule::UnitPhase(_) => Some((SequenceSpec::constant(c(1.0)).with_prefix(prefix), 1.0)),
        TailRule::Constant(v) => Some((SequenceSpec::constant(c(v.norm())).with_prefix(prefix), 1.0)),
        TailRule::OnePlus(s) => match &s.tail {
            TailRule::PowerLaw { a, p } if a.re == 0.0 => {
                // |z|^2 = 1 + |a|^2 k^-2p on the tail.
                let sq: Vec<Complex64> = prefix.iter().map(|v| *v * *v).collect();
                let inner = SequenceSpec::power_law(c(a.norm_sqr()), 2.0 * p);
                Some((SequenceSpec::one_plus(inner).with_prefix(sq), 0.5))
            }
            _ => None,
        },
        _ => None,
    }
}

/// Classify `prod z_k` and estimate its limit.
pub fn classify_product(z: &SequenceSpec, tol: f64) -> Result<ConvergenceCertificate, ProductError> {
    if !(tol > 0.0) {
        return Err(ProductError::InvalidTolerance(tol));
    }
    z.validate()?;
    if let Some(i) = z.prefix.iter().position(|v| *v == c(0.0)) {
        return Err(ProductError::ZeroTerm { index: i + 1 });
    }
    let one_minus = one_minus_series_bound(z)?;
    let n0 = z.explicit_len();
    if one_minus.is_finite() {
        let lim = limit_estimate(z, tol, true)?;
        let error_bound = if is_geometric_type(&z.tail) {
            lim.error.max(lim.remainder)
        } else {
            lim.error
        };
        let modulus_series = modulus_series_bound(z).unwrap_or(SeriesBound {
            lower: 0.0,
            upper: one_minus.upper,
        });
        return Ok(ConvergenceCertificate {
            verdict: Verdict::Convergent,
            limit: Some(lim.estimate),
            partial_value: lim.partial,
            error_bound,
            series_sum_bound: one_minus.upper,
            truncation_k: lim.k,
            remainder_bound: lim.remainder,
            one_minus,
            modulus_series,
            modulus_limit: Some(lim.estimate.norm()),
            diverges_to_zero: false,
        });
    }
    let modulus_series = modulus_series_bound(z)?;
    if modulus_series.is_finite() {
        let modulus_limit = match modulus_spec(z) {
            Some((m, e)) => {
                let lim = limit_estimate(&m, tol, false)?;
                Some(lim.estimate.re.powf(e))
            }
            None => None,
        };
        return Ok(ConvergenceCertificate {
            verdict: Verdict::QuasiConvergent,
            limit: Some(c(0.0)),
            partial_value: partial_product(z, n0),
            error_bound: 0.0,
            series_sum_bound: modulus_series.upper,
            truncation_k: n0,
            remainder_bound: f64::INFINITY,
            one_minus,
            modulus_series,
            modulus_limit,
            diverges_to_zero: false,
        });
    }
    Ok(ConvergenceCertificate {
        verdict: Verdict::Divergent,
        limit: None,
        partial_value: partial_product(z, n0),
        error_bound: f64::INFINITY,
        series_sum_bound: f64::INFINITY,
        truncation_k: n0,
        remainder_bound: f64::INFINITY,
        one_minus,
        modulus_series,
        modulus_limit: None,
        diverges_to_zero: modulus_to_zero(&z.tail),
    })
}

/// Certifies `|z_k| -> 0` in product, i.e. `prod |z_k| = 0`.
fn modulus_to_zero(rule: &TailRule) -> bool {
    if let Some(l) = rule.limit() {
        if l.norm() < 1.0 {
            return true;
        }
    }
    match rule {
        TailRule::OnePlus(s) => match &s.tail {
            TailRule::PowerLaw { a, p } => a.re < 0.0 && *p <= 1.0,
            _ => false,
        },
        _ => false,
    }
}

/// Like [`classify_product`], but a zero term yields a divergent
/// certificate with value 0 instead of an error.
pub fn classify_allowing_zeros(
    z: &SequenceSpec,
    tol: f64,
) -> Result<ConvergenceCertificate, ProductError> {
    match classify_product(z, tol) {
        Err(ProductError::ZeroTerm { index }) => {
            let one_minus = one_minus_series_bound(z).unwrap_or(SeriesBound::infinite());
            let modulus_series = modulus_series_bound(z).unwrap_or(SeriesBound::infinite());
            Ok(ConvergenceCertificate {
                verdict: Verdict::Divergent,
                limit: None,
                partial_value: c(0.0),
                error_bound: 0.0,
                series_sum_bound: one_minus.upper,
                truncation_k: index,
                remainder_bound: 0.0,
                one_minus,
                modulus_series,
                modulus_limit: Some(0.0),
                diverges_to_zero: true,
            })
        }
        other => other,
    }
}
