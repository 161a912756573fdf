//! Product vectors `g = (x)_k g_k` with a closed-form tail, their inner
//! products as infinite products, strong and weak equivalence, and phase
//! maps `U[z]`.

use std::f64::consts::PI;

use num_complex::Complex64;
use statrs::function::erf::erf;
use thiserror::Error;

use crate::cylinder_measure::{overlap_spec, CylinderError};
use crate::product_engine::{
    classify_allowing_zeros, classify_product, modulus_series_bound, one_minus_series_bound,
    zeta_tail, ConvergenceCertificate, ProductError, SequenceSpec, SeriesBound, TailRule, Verdict,
};
use crate::quadrature::{integrate, Decay, Domain, Integrand1D, QuadError};

/// Factor inner products below this modulus count as exact zeros.
pub const ZERO_INNER: f64 = 1e-14;
/// Tolerance for `|z_k| = 1` in phase sequences.
pub const UNIT_TOL: f64 = 1e-12;
const QUAD_TOL: f64 = 1e-13;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TensorError {
    #[error("tails admit no analytic comparison: {0}")]
    TailNotComparable(String),
    #[error("phase term {index} has modulus {modulus}")]
    NotUnitPhase { index: usize, modulus: f64 },
    #[error("invalid factor: {0}")]
    InvalidFactor(String),
    #[error(transparent)]
    Quadrature(#[from] QuadError),
    #[error(transparent)]
    Product(#[from] ProductError),
}

impl From<CylinderError> for TensorError {
    fn from(e: CylinderError) -> Self {
        match e {
            CylinderError::Product(p) => TensorError::Product(p),
            other => TensorError::TailNotComparable(other.to_string()),
        }
    }
}

fn c(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

/// Shape of a one-dimensional factor.
#[derive(Debug, Clone, PartialEq)]
pub enum FactorKind {
    /// Indicator of `[-1/2, 1/2]`.
    IndicatorI,
    ScaledIndicator { lo: f64, hi: f64, height: f64 },
    /// `sin(pi x) / (pi x)`
    Sinc,
    /// Unit-norm `(sigma sqrt(pi))^(-1/2) exp(-(x - mean)^2 / (2 sigma^2))`.
    Gaussian { sigma: f64, mean: f64 },
    /// Unit-norm `H_n(sqrt(2 pi) x) exp(-pi x^2)`; eigenfunctions of the
    /// Fourier transform with eigenvalue `(-i)^n`.
    HermiteGaussian { degree: u8 },
    /// `e^x` on `[-1/2, 1/2]`, zero elsewhere.
    XiExp { eps: f64 },
    /// Piecewise-linear interpolation of `values` on a uniform grid over
    /// `[lo, hi]`, zero outside.
    SampledGrid { lo: f64, hi: f64, values: Vec<Complex64> },
    /// First derivative of a `Gaussian`, `HermiteGaussian` or `Sinc` shape.
    Derivative(Box<FactorKind>),
}

/// `scale * kind(x)` with its L2 norm cached.
#[derive(Debug, Clone, PartialEq)]
pub struct FactorFunction {
    pub kind: FactorKind,
    pub scale: Complex64,
    norm: f64,
}

/// Physicists' Hermite polynomial `H_n(x)` for `n <= 4`.
pub fn hermite(n: u8, x: f64) -> f64 {
    match n {
        0 => 1.0,
        1 => 2.0 * x,
        2 => 4.0 * x * x - 2.0,
        3 => 8.0 * x * x * x - 12.0 * x,
        _ => 16.0 * x.powi(4) - 48.0 * x * x + 12.0,
    }
}

fn factorial(n: u8) -> f64 {
    (1..=n as u32).map(f64::from).product()
}

impl FactorKind {
    pub fn eval(&self, x: f64) -> Complex64 {
        match self {
            FactorKind::IndicatorI => c(if (-0.5..=0.5).contains(&x) { 1.0 } else { 0.0 }),
            FactorKind::ScaledIndicator { lo, hi, height } => {
                c(if x >= *lo && x <= *hi { *height } else { 0.0 })
            }
            FactorKind::Sinc => c(sinc(x)),
            FactorKind::Gaussian { sigma, mean } => {
                let n = (sigma * PI.sqrt()).powf(-0.5);
                c(n * (-(x - mean).powi(2) / (2.0 * sigma * sigma)).exp())
            }
            FactorKind::HermiteGaussian { degree } => c(hermite_function(*degree, x)),
            FactorKind::XiExp { .. } => c(if (-0.5..=0.5).contains(&x) { x.exp() } else { 0.0 }),
            FactorKind::Derivative(base) => c(derivative_value(base, x)),
            FactorKind::SampledGrid { lo, hi, values } => {
                if x < *lo || x > *hi {
                    return c(0.0);
                }
                let n = values.len() - 1;
                let h = (hi - lo) / n as f64;
                let t = ((x - lo) / h).min(n as f64);
                let i = (t.floor() as usize).min(n - 1);
                let w = t - i as f64;
                values[i] * (1.0 - w) + values[i + 1] * w
            }
        }
    }

    pub fn support(&self) -> Domain {
        match self {
            FactorKind::IndicatorI | FactorKind::XiExp { .. } => Domain::Interval(-0.5, 0.5),
            FactorKind::ScaledIndicator { lo, hi, .. } | FactorKind::SampledGrid { lo, hi, .. } => {
                Domain::Interval(*lo, *hi)
            }
            FactorKind::Derivative(base) => base.support(),
            _ => Domain::Line,
        }
    }

    pub fn decay(&self) -> Decay {
        match self {
            FactorKind::Sinc => Decay::Power(1.0),
            FactorKind::Derivative(base) => base.decay(),
            FactorKind::Gaussian { .. } | FactorKind::HermiteGaussian { .. } => Decay::Gaussian,
            _ => Decay::Compact,
        }
    }

    fn base_norm(&self) -> f64 {
        match self {
            FactorKind::IndicatorI | FactorKind::Sinc => 1.0,
            FactorKind::Gaussian { .. } | FactorKind::HermiteGaussian { .. } => 1.0,
            FactorKind::ScaledIndicator { lo, hi, height } => height.abs() * (hi - lo).sqrt(),
            FactorKind::XiExp { .. } => 1f64.sinh().sqrt(),
            FactorKind::Derivative(base) => match **base {
                FactorKind::Gaussian { sigma, .. } => 1.0 / (sigma * 2f64.sqrt()),
                FactorKind::HermiteGaussian { degree } => (PI * (2 * degree + 1) as f64).sqrt(),
                _ => PI / 3f64.sqrt(),
            },
            FactorKind::SampledGrid { lo, hi, values } => {
                let h = (hi - lo) / (values.len() - 1) as f64;
                let s: f64 = values
                    .windows(2)
                    .map(|w| w[0].norm_sqr() + (w[0] * w[1].conj()).re + w[1].norm_sqr())
                    .sum();
                (h * s / 3.0).sqrt()
            }
        }
    }

    fn validate(&self) -> Result<(), TensorError> {
        let bad = |m: &str| Err(TensorError::InvalidFactor(m.to_string()));
        match self {
            FactorKind::ScaledIndicator { lo, hi, height } => {
                if !(lo < hi) || !height.is_finite() || !lo.is_finite() || !hi.is_finite() {
                    return bad("scaled indicator needs lo < hi and finite height");
                }
            }
            FactorKind::Gaussian { sigma, mean } => {
                if !(*sigma > 0.0) || !mean.is_finite() || !sigma.is_finite() {
                    return bad("gaussian needs sigma > 0");
                }
            }
            FactorKind::HermiteGaussian { degree } if *degree > 4 => {
                return bad("hermite degree must be at most 4");
            }
            FactorKind::XiExp { eps } if !(*eps > 0.0) => return bad("xi-exp needs eps > 0"),
            FactorKind::Derivative(base) => {
                if !matches!(
                    **base,
                    FactorKind::Gaussian { .. } | FactorKind::HermiteGaussian { .. } | FactorKind::Sinc
                ) {
                    return bad("derivatives are available for gaussian, hermite and sinc shapes");
                }
                base.validate()?;
            }
            FactorKind::SampledGrid { lo, hi, values } => {
                if values.len() < 2 || !(lo < hi) {
                    return bad("sampled grid needs at least 2 points on lo < hi");
                }
                if values.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
                    return bad("sampled grid values must be finite");
                }
            }
            _ => {}
        }
        Ok(())
    }
}

pub fn sinc(x: f64) -> f64 {
    if x == 0.0 {
        1.0
    } else {
        (PI * x).sin() / (PI * x)
    }
}

fn derivative_value(base: &FactorKind, x: f64) -> f64 {
    match base {
        FactorKind::Gaussian { sigma, mean } => -(x - mean) / (sigma * sigma) * base.eval(x).re,
        FactorKind::HermiteGaussian { degree } => {
            let n = *degree;
            let norm = 2f64.powf(0.25) / (2f64.powi(n as i32) * factorial(n)).sqrt();
            let u = (2.0 * PI).sqrt() * x;
            let lower = if n == 0 { 0.0 } else { 2.0 * n as f64 * hermite(n - 1, u) };
            norm * (2.0 * PI).sqrt() * (lower - u * hermite(n, u)) * (-PI * x * x).exp()
        }
        FactorKind::Sinc if x == 0.0 => 0.0,
        FactorKind::Sinc => {
            let t = PI * x;
            (t * t.cos() - t.sin()) / (PI * x * x)
        }
        _ => f64::NAN,
    }
}

/// Unit-norm Hermite function adapted to `exp(-2 pi i x xi)`.
pub fn hermite_function(n: u8, x: f64) -> f64 {
    let norm = 2f64.powf(0.25) / (2f64.powi(n as i32) * factorial(n)).sqrt();
    norm * hermite(n, (2.0 * PI).sqrt() * x) * (-PI * x * x).exp()
}

impl FactorFunction {
    pub fn new(kind: FactorKind) -> Result<Self, TensorError> {
        Self::scaled(kind, c(1.0))
    }

    pub fn scaled(kind: FactorKind, scale: Complex64) -> Result<Self, TensorError> {
        kind.validate()?;
        let norm = kind.base_norm() * scale.norm();
        Ok(Self { kind, scale, norm })
    }

    pub fn indicator() -> Self {
        Self { kind: FactorKind::IndicatorI, scale: c(1.0), norm: 1.0 }
    }

    pub fn norm(&self) -> f64 {
        self.norm
    }

    pub fn eval(&self, x: f64) -> Complex64 {
        self.scale * self.kind.eval(x)
    }

    pub fn with_scale(&self, s: Complex64) -> Self {
        Self { kind: self.kind.clone(), scale: self.scale * s, norm: self.kind.base_norm() * (self.scale * s).norm() }
    }

    /// Same shape rescaled to unit L2 norm.
    pub fn normalized(&self) -> Self {
        self.with_scale(c(1.0 / self.norm))
    }

    pub fn integrand(&self) -> Integrand1D<impl Fn(f64) -> Complex64 + '_> {
        Integrand1D::new(move |x| self.eval(x), self.kind.support(), self.kind.decay())
    }
}

fn interval_of(k: &FactorKind) -> Option<(f64, f64, f64)> {
    match k {
        FactorKind::IndicatorI => Some((-0.5, 0.5, 1.0)),
        FactorKind::ScaledIndicator { lo, hi, height } => Some((*lo, *hi, *height)),
        _ => None,
    }
}

/// Closed-form `int a(x) conj(b(x)) dx` for unscaled kinds, when available.
fn closed_inner(a: &FactorKind, b: &FactorKind) -> Option<Complex64> {
    if let (Some((l1, h1, v1)), Some((l2, h2, v2))) = (interval_of(a), interval_of(b)) {
        return Some(c(v1 * v2 * (h1.min(h2) - l1.max(l2)).max(0.0)));
    }
    match (a, b) {
        (FactorKind::Gaussian { sigma: s1, mean: m1 }, FactorKind::Gaussian { sigma: s2, mean: m2 }) => {
            let v = s1 * s1 + s2 * s2;
            let n = (s1 * PI.sqrt()).powf(-0.5) * (s2 * PI.sqrt()).powf(-0.5);
            Some(c(n * (2.0 * PI * s1 * s1 * s2 * s2 / v).sqrt() * (-(m1 - m2).powi(2) / (2.0 * v)).exp()))
        }
        (FactorKind::HermiteGaussian { degree: p }, FactorKind::HermiteGaussian { degree: q }) => {
            Some(c(if p == q { 1.0 } else { 0.0 }))
        }
        (FactorKind::Sinc, FactorKind::Sinc) => Some(c(1.0)),
        (FactorKind::Gaussian { sigma, mean }, other) | (other, FactorKind::Gaussian { sigma, mean }) => {
            let (lo, hi, v) = interval_of(other)?;
            let n = (sigma * PI.sqrt()).powf(-0.5);
            let z = |t: f64| erf((t - mean) / (sigma * std::f64::consts::SQRT_2));
            Some(c(v * n * sigma * (PI / 2.0).sqrt() * (z(hi) - z(lo))))
        }
        (FactorKind::XiExp { .. }, FactorKind::XiExp { .. }) => Some(c(1f64.sinh())),
        (FactorKind::XiExp { .. }, other) | (other, FactorKind::XiExp { .. }) => {
            let (lo, hi, v) = interval_of(other)?;
            let (lo, hi) = (lo.max(-0.5), hi.min(0.5));
            Some(c(if hi > lo { v * (hi.exp() - lo.exp()) } else { 0.0 }))
        }
        _ => None,
    }
}

fn bounds(d: Domain) -> (f64, f64) {
    match d {
        Domain::Interval(a, b) => (a, b),
        Domain::HalfLine(a) => (a, f64::INFINITY),
        Domain::Line => (f64::NEG_INFINITY, f64::INFINITY),
    }
}

fn combined_decay(a: Decay, b: Decay) -> Decay {
    match (a, b) {
        (Decay::Compact, _) | (_, Decay::Compact) => Decay::Compact,
        (Decay::Gaussian, _) | (_, Decay::Gaussian) => Decay::Gaussian,
        (Decay::Exponential, _) | (_, Decay::Exponential) => Decay::Exponential,
        (Decay::Power(p), Decay::Power(q)) => Decay::Power(p + q),
    }
}

/// `<f, g> = int f(x) conj(g(x)) dx`.
pub fn factor_inner(f: &FactorFunction, g: &FactorFunction) -> Result<Complex64, TensorError> {
    if f == g {
        return Ok(c(f.norm * f.norm));
    }
    let s = f.scale * g.scale.conj();
    if let Some(v) = closed_inner(&f.kind, &g.kind) {
        return Ok(s * v);
    }
    let (l1, h1) = bounds(f.kind.support());
    let (l2, h2) = bounds(g.kind.support());
    let (lo, hi) = (l1.max(l2), h1.min(h2));
    if lo >= hi {
        return Ok(c(0.0));
    }
    let domain = match (lo.is_finite(), hi.is_finite()) {
        (true, true) => Domain::Interval(lo, hi),
        _ => Domain::Line,
    };
    let fk = &f.kind;
    let gk = &g.kind;
    let integrand = Integrand1D::new(
        |x: f64| fk.eval(x) * gk.eval(x).conj(),
        domain,
        combined_decay(fk.decay(), gk.decay()),
    );
    let r = integrate(&integrand, domain, QUAD_TOL)?;
    Ok(s * r.value)
}

/// Rule for the factors beyond the explicit list.
#[derive(Debug, Clone, PartialEq)]
pub enum TailBase {
    /// `g_k = f` for every tail index.
    Fixed(FactorFunction),
    /// `g_k(y) = chi_I(y - x_k)`.
    Shifted(SequenceSpec),
}

/// Tail `g_k = (prod_j z^(j)_k) base_k` with unit-modulus phase sequences.
#[derive(Debug, Clone, PartialEq)]
pub struct TailFactor {
    pub base: TailBase,
    pub phases: Vec<SequenceSpec>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProductVector {
    pub explicit: Vec<FactorFunction>,
    pub tail: TailFactor,
    pub label: Option<String>,
}

impl ProductVector {
    /// The canonical vector `(x)_k chi_I`.
    pub fn canonical() -> Self {
        Self::with_tail(Vec::new(), FactorFunction::indicator())
    }

    pub fn with_tail(explicit: Vec<FactorFunction>, tail: FactorFunction) -> Self {
        Self {
            explicit,
            tail: TailFactor { base: TailBase::Fixed(tail), phases: Vec::new() },
            label: None,
        }
    }

    /// Canonical factors translated by `x_k` at every index.
    pub fn shifted(x: SequenceSpec) -> Self {
        Self {
            explicit: Vec::new(),
            tail: TailFactor { base: TailBase::Shifted(x), phases: Vec::new() },
            label: None,
        }
    }

    pub fn validate(&self) -> Result<(), TensorError> {
        for (i, f) in self.explicit.iter().enumerate() {
            if !(f.norm() > 0.0) || !f.norm().is_finite() {
                return Err(TensorError::InvalidFactor(format!("factor {} has norm {}", i + 1, f.norm())));
            }
        }
        match &self.tail.base {
            TailBase::Fixed(f) => {
                if (f.norm() - 1.0).abs() > 1e-8 {
                    return Err(TensorError::InvalidFactor(format!("tail norm {} is not 1", f.norm())));
                }
            }
            TailBase::Shifted(x) => {
                x.validate()?;
                if !x.is_real() {
                    return Err(TensorError::InvalidFactor("shift must be real".into()));
                }
            }
        }
        for z in &self.tail.phases {
            check_unit(z)?;
        }
        Ok(())
    }

    /// Factor at index `k` (one-based).
    pub fn factor_at(&self, k: usize) -> FactorFunction {
        if k <= self.explicit.len() {
            return self.explicit[k - 1].clone();
        }
        let base = match &self.tail.base {
            TailBase::Fixed(f) => f.clone(),
            TailBase::Shifted(x) => {
                let s = x.term(k).re;
                FactorFunction {
                    kind: FactorKind::ScaledIndicator { lo: -0.5 + s, hi: 0.5 + s, height: 1.0 },
                    scale: c(1.0),
                    norm: 1.0,
                }
            }
        };
        let phase = self.tail.phases.iter().fold(c(1.0), |acc, z| acc * z.term(k));
        if phase == c(1.0) {
            base
        } else {
            base.with_scale(phase)
        }
    }
}

fn check_unit(z: &SequenceSpec) -> Result<(), TensorError> {
    z.validate()?;
    for k in 1..=z.explicit_len() {
        let m = z.term(k).norm();
        if (m - 1.0).abs() > UNIT_TOL {
            return Err(TensorError::NotUnitPhase { index: k, modulus: m });
        }
    }
    phase_decomposition(z, 0).map(|_| ())
}

/// Pure tail of a unit-modulus sequence: `constant * exp(i sum_j s_j theta_j(k))`.
#[derive(Debug, Clone)]
struct PhaseTail {
    constant: Complex64,
    thetas: Vec<(f64, TailRule)>,
}

impl PhaseTail {
    fn one() -> Self {
        Self { constant: c(1.0), thetas: Vec::new() }
    }

    fn mul(mut self, other: PhaseTail) -> Self {
        self.constant *= other.constant;
        self.thetas.extend(other.thetas);
        self
    }

    fn conj(mut self) -> Self {
        self.constant = self.constant.conj();
        for t in &mut self.thetas {
            t.0 = -t.0;
        }
        self
    }

    /// Group thetas of the same family and drop vanishing ones.
    fn merged(&self) -> Vec<TailRule> {
        let mut out: Vec<TailRule> = Vec::new();
        for (s, rule) in &self.thetas {
            let scaled = match rule {
                TailRule::Geometric { a, r } => TailRule::Geometric { a: *a * *s, r: *r },
                TailRule::PowerLaw { a, p } => TailRule::PowerLaw { a: *a * *s, p: *p },
                _ => continue,
            };
            let slot = out.iter_mut().find(|o| match (&**o, &scaled) {
                (TailRule::Geometric { r: r1, .. }, TailRule::Geometric { r: r2, .. }) => r1 == r2,
                (TailRule::PowerLaw { p: p1, .. }, TailRule::PowerLaw { p: p2, .. }) => p1 == p2,
                _ => false,
            });
            match (slot, scaled) {
                (Some(TailRule::Geometric { a, .. }), TailRule::Geometric { a: b, .. }) => *a += b,
                (Some(TailRule::PowerLaw { a, .. }), TailRule::PowerLaw { a: b, .. }) => *a += b,
                (_, s) => out.push(s),
            }
        }
        out.retain(|r| match r {
            TailRule::Geometric { a, .. } | TailRule::PowerLaw { a, .. } => a.norm() > 0.0,
            _ => false,
        });
        out
    }
}

/// Decompose the pure tail of a unit-modulus `z` beyond index `n`.
fn phase_decomposition(z: &SequenceSpec, _n: usize) -> Result<PhaseTail, TensorError> {
    let not_unit = |m: f64| TensorError::NotUnitPhase { index: usize::MAX, modulus: m };
    match &z.tail {
        TailRule::Constant(v) => {
            if (v.norm() - 1.0).abs() > UNIT_TOL {
                return Err(not_unit(v.norm()));
            }
            Ok(PhaseTail { constant: *v, thetas: Vec::new() })
        }
        TailRule::UnitPhase(theta) => theta_decomposition(theta, 1.0),
        other => {
            let m = other.eval(z.explicit_len() + 1).norm();
            Err(not_unit(m))
        }
    }
}

fn theta_decomposition(theta: &SequenceSpec, sign: f64) -> Result<PhaseTail, TensorError> {
    match &theta.tail {
        TailRule::Zero => Ok(PhaseTail::one()),
        TailRule::Constant(v) => Ok(PhaseTail { constant: Complex64::from_polar(1.0, sign * v.re), thetas: Vec::new() }),
        r @ (TailRule::Geometric { .. } | TailRule::PowerLaw { .. }) => {
            Ok(PhaseTail { constant: c(1.0), thetas: vec![(sign, r.clone())] })
        }
        TailRule::OnePlus(s) => {
            let rest = theta_decomposition(s, sign)?;
            Ok(PhaseTail { constant: rest.constant * Complex64::from_polar(1.0, sign), thetas: rest.thetas })
        }
        TailRule::UnitPhase(_) => Err(TensorError::TailNotComparable(
            "phase argument is itself a unit phase".into(),
        )),
    }
}

/// Strong and weak series for `sum |1 - <g_k, h_k>|` and
/// `sum |1 - |<g_k, h_k>||`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    StrongEquivalent,
    WeakEquivalentOnly,
    Inequivalent,
}

impl Relation {
    pub fn name(&self) -> &'static str {
        match self {
            Relation::StrongEquivalent => "StrongEquivalent",
            Relation::WeakEquivalentOnly => "WeakEquivalentOnly",
            Relation::Inequivalent => "Inequivalent",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EquivalenceVerdict {
    pub relation: Relation,
    pub strong: SeriesBound,
    pub weak: SeriesBound,
}

/// Factor inner products up to the explicit horizon plus a closed-form tail.
enum InnerSequence {
    /// Complete spec of `<g_k, h_k>`.
    Spec(SequenceSpec),
    /// `values` for `k <= values.len()`, then `d * exp(i sum s_j theta_j(k))`.
    Phase { values: Vec<Complex64>, tail: PhaseTail },
}

fn zeroed(v: Complex64) -> Complex64 {
    if v.norm() < ZERO_INNER {
        c(0.0)
    } else {
        v
    }
}

fn inner_sequence(g: &ProductVector, h: &ProductVector) -> Result<InnerSequence, TensorError> {
    g.validate()?;
    h.validate()?;
    let n = g.explicit.len().max(h.explicit.len());
    let phase_len = g.tail.phases.iter().chain(&h.tail.phases).map(|z| z.explicit_len()).max().unwrap_or(0);
    let explicit = |upto: usize| -> Result<Vec<Complex64>, TensorError> {
        (1..=upto)
            .map(|k| factor_inner(&g.factor_at(k), &h.factor_at(k)).map(zeroed))
            .collect()
    };
    let phase_tail = || -> Result<PhaseTail, TensorError> {
        let mut t = PhaseTail::one();
        for z in &g.tail.phases {
            t = t.mul(phase_decomposition(z, n)?);
        }
        for z in &h.tail.phases {
            t = t.mul(phase_decomposition(z, n)?.conj());
        }
        Ok(t)
    };
    let has_phase = !g.tail.phases.is_empty() || !h.tail.phases.is_empty();
    match (&g.tail.base, &h.tail.base) {
        (a, b) if a == b => {
            let m = n.max(phase_len);
            Ok(InnerSequence::Phase { values: explicit(m)?, tail: phase_tail()? })
        }
        (TailBase::Fixed(f), TailBase::Fixed(k)) => {
            let c0 = closed_inner(&f.kind, &k.kind)
                .map(|v| v * f.scale * k.scale.conj())
                .ok_or_else(|| TensorError::TailNotComparable(format!("{:?} vs {:?}", f.kind, k.kind)))?;
            let m = n.max(phase_len);
            let mut t = phase_tail()?;
            t.constant *= c0;
            Ok(InnerSequence::Phase { values: explicit(m)?, tail: t })
        }
        (TailBase::Shifted(x), TailBase::Fixed(f)) | (TailBase::Fixed(f), TailBase::Shifted(x)) => {
            if has_phase {
                return Err(TensorError::TailNotComparable("phased shifted tail".into()));
            }
            if closed_inner(&f.kind, &FactorKind::IndicatorI) != Some(c(1.0)) || f.scale != c(1.0) {
                return Err(TensorError::TailNotComparable("shift against a non-canonical tail".into()));
            }
            let mut spec = overlap_spec(x, n)?;
            let vals = explicit(n)?;
            spec.prefix[..n].copy_from_slice(&vals);
            Ok(InnerSequence::Spec(spec))
        }
        _ => Err(TensorError::TailNotComparable("different shifted tails".into())),
    }
}

fn one_minus_abs(v: Complex64) -> f64 {
    (c(1.0) - v).norm()
}

fn modulus_dev(v: Complex64) -> f64 {
    (1.0 - v.norm()).abs()
}

fn theta_abs_sum(rule: &TailRule, n: usize) -> f64 {
    match rule {
        TailRule::Geometric { a, r } => a.norm() * r.norm().powi(n as i32 + 1) / (1.0 - r.norm()),
        TailRule::PowerLaw { a, p } if *p > 1.0 => {
            let (z, e) = zeta_tail(*p, n);
            a.norm() * (z + e)
        }
        TailRule::PowerLaw { .. } => f64::INFINITY,
        _ => 0.0,
    }
}

fn theta_sum(rule: &TailRule, n: usize) -> (f64, f64) {
    match rule {
        TailRule::Geometric { a, r } => {
            let v = a.re * r.re.powi(n as i32 + 1) / (1.0 - r.re);
            (v, 4.0 * f64::EPSILON * v.abs())
        }
        TailRule::PowerLaw { a, p } => {
            let (z, e) = zeta_tail(*p, n);
            (a.re * z, a.norm() * e)
        }
        _ => (0.0, 0.0),
    }
}

/// Series bounds and product for `values` followed by a phase tail.
fn evaluate_phase(values: &[Complex64], tail: &PhaseTail) -> (SeriesBound, SeriesBound, ConvergenceCertificate) {
    let m = values.len();
    let head_strong: f64 = values.iter().map(|v| one_minus_abs(*v)).sum();
    let head_weak: f64 = values.iter().map(|v| modulus_dev(*v)).sum();
    let partial = values.iter().fold(c(1.0), |acc, v| acc * v);
    let merged = tail.merged();
    let d = tail.constant;
    let weak_tail_finite = (d.norm() - 1.0).abs() <= ZERO_INNER;
    let weak = if weak_tail_finite {
        SeriesBound { lower: head_weak, upper: head_weak }
    } else {
        SeriesBound { lower: head_weak, upper: f64::INFINITY }
    };
    let d_is_one = (d - c(1.0)).norm() <= ZERO_INNER;
    let theta_tail: f64 = merged.iter().map(|r| theta_abs_sum(r, m)).sum();
    let strong = if d_is_one && theta_tail.is_finite() {
        SeriesBound { lower: head_strong, upper: head_strong + theta_tail }
    } else {
        SeriesBound { lower: head_strong, upper: f64::INFINITY }
    };
    let base = ConvergenceCertificate {
        verdict: Verdict::Divergent,
        limit: None,
        partial_value: partial,
        error_bound: f64::INFINITY,
        series_sum_bound: strong.upper,
        truncation_k: m,
        remainder_bound: f64::INFINITY,
        one_minus: strong,
        modulus_series: weak,
        modulus_limit: None,
        diverges_to_zero: false,
    };
    let has_zero = values.iter().any(|v| *v == c(0.0));
    let cert = if has_zero {
        ConvergenceCertificate { partial_value: c(0.0), modulus_limit: Some(0.0), diverges_to_zero: true, error_bound: 0.0, ..base }
    } else if strong.is_finite() {
        let (s, e): (f64, f64) = merged.iter().map(|r| theta_sum(r, m)).fold((0.0, 0.0), |a, b| (a.0 + b.0, a.1 + b.1));
        let limit = partial * Complex64::from_polar(1.0, s);
        let rounding = 2.0 * 1.2e-16 * (m as f64 + 2.0) * limit.norm();
        ConvergenceCertificate {
            verdict: Verdict::Convergent,
            limit: Some(limit),
            error_bound: limit.norm() * e + rounding,
            remainder_bound: partial.norm() * theta_tail.exp_m1() + rounding,
            modulus_limit: Some(limit.norm()),
            ..base
        }
    } else if weak.is_finite() {
        ConvergenceCertificate {
            verdict: Verdict::QuasiConvergent,
            limit: Some(c(0.0)),
            error_bound: 0.0,
            series_sum_bound: weak.upper,
            modulus_limit: Some(partial.norm()),
            ..base
        }
    } else {
        ConvergenceCertificate { diverges_to_zero: d.norm() < 1.0, ..base }
    };
    (strong, weak, cert)
}

fn relation_of(strong: SeriesBound, weak: SeriesBound) -> Relation {
    if strong.is_finite() {
        Relation::StrongEquivalent
    } else if weak.is_finite() {
        Relation::WeakEquivalentOnly
    } else {
        Relation::Inequivalent
    }
}

/// Strong / weak equivalence of two product vectors.
pub fn classify_equivalence(g: &ProductVector, h: &ProductVector) -> Result<EquivalenceVerdict, TensorError> {
    let (strong, weak) = match inner_sequence(g, h)? {
        InnerSequence::Phase { values, tail } => {
            let (s, w, _) = evaluate_phase(&values, &tail);
            (s, w)
        }
        InnerSequence::Spec(spec) => (
            one_minus_series_bound(&spec).map_err(not_comparable)?,
            modulus_series_bound(&spec).map_err(not_comparable)?,
        ),
    };
    Ok(EquivalenceVerdict { relation: relation_of(strong, weak), strong, weak })
}

fn not_comparable(e: ProductError) -> TensorError {
    match e {
        ProductError::UnboundedTail(m) => TensorError::TailNotComparable(m),
        other => TensorError::Product(other),
    }
}

/// Certificate for `<g, h> = prod_k <g_k, h_k>`.
pub fn tensor_inner(g: &ProductVector, h: &ProductVector, tol: f64) -> Result<ConvergenceCertificate, TensorError> {
    match inner_sequence(g, h)? {
        InnerSequence::Phase { values, tail } => Ok(evaluate_phase(&values, &tail).2),
        InnerSequence::Spec(spec) => classify_allowing_zeros(&spec, tol).map_err(not_comparable),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum PhaseVerdict {
    /// `U[z] g = (prod z_k) g`.
    SameStrongClass(Complex64),
    /// `U[z] g` lies in a strong class orthogonal to that of `g`.
    MovedToOrthogonalClass,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhaseResult {
    pub vector: ProductVector,
    pub verdict: PhaseVerdict,
    /// Always true: `U[z]` maps every weak class onto itself.
    pub weak_class_preserved: bool,
}

/// Apply `U[z]`, multiplying the `k`-th factor by `z_k`.
pub fn apply_phase(z: &SequenceSpec, g: &ProductVector, tol: f64) -> Result<PhaseResult, TensorError> {
    check_unit(z)?;
    let cert = classify_product(z, tol)?;
    let verdict = match cert.verdict {
        Verdict::Convergent => PhaseVerdict::SameStrongClass(cert.limit.unwrap_or(c(1.0))),
        _ => PhaseVerdict::MovedToOrthogonalClass,
    };
    let mut vector = g.clone();
    for (i, f) in vector.explicit.iter_mut().enumerate() {
        let zk = z.term(i + 1);
        if zk != c(1.0) {
            *f = f.with_scale(zk);
        }
    }
    if !matches!(z.tail.eval_constant(), Some(v) if v == c(1.0)) || z.explicit_len() > g.explicit.len() {
        vector.tail.phases.push(z.clone());
    }
    Ok(PhaseResult { vector, verdict, weak_class_preserved: true })
}

impl TailRule {
    fn eval_constant(&self) -> Option<Complex64> {
        match self {
            TailRule::Constant(v) => Some(*v),
            TailRule::Zero => Some(c(0.0)),
            _ => None,
        }
    }
}
