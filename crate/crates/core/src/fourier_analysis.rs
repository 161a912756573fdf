//! Factorwise Fourier transform `F f(xi) = int exp(-2 pi i x xi) f(x) dx` on
//! product vectors, Plancherel checks, factor convolutions and Young's
//! inequality.

use std::f64::consts::PI;

use num_complex::Complex64;
use thiserror::Error;

use crate::quadrature::{integrate, Decay, Domain, Integrand1D, QuadError};
use crate::tensor_states::{sinc, FactorFunction, FactorKind, ProductVector, TailBase, TensorError};

const QUAD_TOL: f64 = 1e-12;
/// Half-width of the window used for inverse transforms of slowly decaying
/// spectra.
pub const INVERSE_WINDOW: f64 = 4096.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FourierError {
    #[error("unsupported tail: {0}")]
    UnsupportedTail(String),
    #[error("exponents p = {p}, q = {q} need p, q >= 1 and 1/p + 1/q >= 1")]
    InvalidExponents { p: f64, q: f64 },
    #[error("K = {k} does not cover the {explicit} explicit factors")]
    TruncationTooShort { k: usize, explicit: usize },
    #[error(transparent)]
    Quadrature(#[from] QuadError),
    #[error(transparent)]
    Tensor(#[from] TensorError),
}

fn c(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

fn cis(t: f64) -> Complex64 {
    Complex64::from_polar(1.0, t)
}

fn kind_transform(kind: &FactorKind, xi: f64) -> Option<Complex64> {
    Some(match kind {
        FactorKind::IndicatorI => c(sinc(xi)),
        FactorKind::ScaledIndicator { lo, hi, height } => {
            let w = hi - lo;
            c(height * w * sinc(w * xi)) * cis(-PI * xi * (lo + hi))
        }
        FactorKind::Sinc => c(match xi.abs() {
            a if a < 0.5 => 1.0,
            a if a == 0.5 => 0.5,
            _ => 0.0,
        }),
        FactorKind::Gaussian { sigma, mean } => {
            let n = (sigma * PI.sqrt()).powf(-0.5);
            c(n * sigma * (2.0 * PI).sqrt() * (-2.0 * (PI * sigma * xi).powi(2)).exp()) * cis(-2.0 * PI * xi * mean)
        }
        FactorKind::HermiteGaussian { degree } => {
            Complex64::new(0.0, -1.0).powu(*degree as u32) * kind.eval(xi)
        }
        FactorKind::XiExp { .. } => {
            let a = Complex64::new(1.0, -2.0 * PI * xi);
            (a * 0.5).sinh() * 2.0 / a
        }
        FactorKind::Derivative(base) => Complex64::new(0.0, 2.0 * PI * xi) * kind_transform(base, xi)?,
        FactorKind::SampledGrid { .. } => return None,
    })
}

/// `F f(xi)`, in closed form where available and by quadrature otherwise.
pub fn fourier_factor(f: &FactorFunction, xi: f64) -> Result<Complex64, FourierError> {
    if let Some(v) = kind_transform(&f.kind, xi) {
        return Ok(f.scale * v);
    }
    let g = Integrand1D::new(move |x| f.eval(x) * cis(-2.0 * PI * x * xi), f.kind.support(), f.kind.decay());
    Ok(integrate(&g, f.kind.support(), QUAD_TOL)?.value)
}

/// Image shape when the transform of `f` is itself a factor kind.
fn image_factor(f: &FactorFunction) -> Option<FactorFunction> {
    let (kind, phase) = match &f.kind {
        FactorKind::IndicatorI => (FactorKind::Sinc, c(1.0)),
        FactorKind::Sinc => (FactorKind::IndicatorI, c(1.0)),
        FactorKind::Gaussian { sigma, mean } if *mean == 0.0 => {
            (FactorKind::Gaussian { sigma: 1.0 / (2.0 * PI * sigma), mean: 0.0 }, c(1.0))
        }
        FactorKind::HermiteGaussian { degree } => {
            (FactorKind::HermiteGaussian { degree: *degree }, Complex64::new(0.0, -1.0).powu(*degree as u32))
        }
        _ => return None,
    };
    FactorFunction::scaled(kind, f.scale * phase).ok()
}

/// Fourier image of a single factor.
#[derive(Debug, Clone, PartialEq)]
pub struct TransformedFactor {
    pub source: FactorFunction,
    /// The image as a factor when it has a named shape.
    pub image: Option<FactorFunction>,
}

impl TransformedFactor {
    pub fn new(source: FactorFunction) -> Self {
        let image = image_factor(&source);
        Self { source, image }
    }

    pub fn eval(&self, xi: f64) -> Result<Complex64, FourierError> {
        fourier_factor(&self.source, xi)
    }

    /// Support and decay of the spectrum.
    fn shape(&self) -> (Domain, Decay) {
        match &self.source.kind {
            FactorKind::Sinc => (Domain::Interval(-0.5, 0.5), Decay::Compact),
            FactorKind::Gaussian { .. } | FactorKind::HermiteGaussian { .. } => (Domain::Line, Decay::Gaussian),
            FactorKind::Derivative(b) if !matches!(**b, FactorKind::Sinc) => (Domain::Line, Decay::Gaussian),
            FactorKind::Derivative(_) => (Domain::Interval(-0.5, 0.5), Decay::Compact),
            _ => (Domain::Line, Decay::Power(1.0)),
        }
    }

    /// `||F f||_2^2` by quadrature of the spectrum.
    pub fn norm_sq(&self, tol: f64) -> Result<f64, FourierError> {
        let (dom, decay) = self.shape();
        let sq_decay = match decay {
            Decay::Power(p) => Decay::Power(2.0 * p),
            d => d,
        };
        let f = |x: f64| c(self.eval(x).map(|v| v.norm_sqr()).unwrap_or(f64::NAN));
        Ok(integrate(&Integrand1D::new(f, dom, sq_decay), dom, tol)?.value.re)
    }
}

/// `F f` for a product vector with the canonical tail: the explicit
/// factors are transformed one by one and the tail becomes the sinc tail.
#[derive(Debug, Clone, PartialEq)]
pub struct TransformedVector {
    pub explicit: Vec<TransformedFactor>,
    pub tail: FactorFunction,
    pub label: Option<String>,
}

impl TransformedVector {
    /// The image as a product vector when every factor has a named shape.
    pub fn as_product_vector(&self) -> Option<ProductVector> {
        let explicit = self.explicit.iter().map(|t| t.image.clone()).collect::<Option<Vec<_>>>()?;
        let mut v = ProductVector::with_tail(explicit, self.tail.clone());
        v.label = self.label.clone();
        Some(v)
    }
}

fn require_canonical_tail(g: &ProductVector) -> Result<(), FourierError> {
    match &g.tail.base {
        TailBase::Fixed(f) if f.kind == FactorKind::IndicatorI && f.scale == c(1.0) && g.tail.phases.is_empty() => Ok(()),
        other => Err(FourierError::UnsupportedTail(format!("{other:?}"))),
    }
}

pub fn fourier_product(g: &ProductVector) -> Result<TransformedVector, FourierError> {
    require_canonical_tail(g)?;
    g.validate()?;
    Ok(TransformedVector {
        explicit: g.explicit.iter().cloned().map(TransformedFactor::new).collect(),
        tail: FactorFunction::new(FactorKind::Sinc)?,
        label: g.label.clone(),
    })
}

/// `int exp(2 pi i y x) F f(x) dx`; spectra with power decay are
/// integrated over `[-INVERSE_WINDOW, INVERSE_WINDOW]`.
pub fn inverse_fourier(t: &TransformedFactor, y: f64, tol: f64) -> Result<Complex64, FourierError> {
    let (dom, decay) = t.shape();
    let (dom, decay) = match decay {
        Decay::Power(_) => (Domain::Interval(-INVERSE_WINDOW, INVERSE_WINDOW), Decay::Compact),
        d => (dom, d),
    };
    let f = |x: f64| t.eval(x).unwrap_or(c(f64::NAN)) * cis(2.0 * PI * x * y);
    Ok(integrate(&Integrand1D::new(f, dom, decay), dom, tol)?.value)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlancherelReport {
    pub lhs: f64,
    pub rhs: f64,
    pub gap: f64,
}

/// Compares `prod ||g_k||^2` with `prod ||F g_k||^2` over the first `k`
/// factors of `g`.
pub fn plancherel_check(g: &ProductVector, k: usize, tol: f64) -> Result<PlancherelReport, FourierError> {
    if k < g.explicit.len() {
        return Err(FourierError::TruncationTooShort { k, explicit: g.explicit.len() });
    }
    let t = fourier_product(g)?;
    let tail_count = (k - g.explicit.len()) as i32;
    let lhs = g.explicit.iter().map(|f| f.norm().powi(2)).product::<f64>();
    let mut rhs = 1.0;
    for f in &t.explicit {
        rhs *= f.norm_sq(tol)?;
    }
    if tail_count > 0 {
        let sinc_tail = TransformedFactor { source: FactorFunction::indicator(), image: None };
        rhs *= sinc_tail.norm_sq(tol)?.powi(tail_count);
    }
    Ok(PlancherelReport { lhs, rhs, gap: (lhs - rhs).abs() })
}

fn box_of(kind: &FactorKind) -> Option<(f64, f64, f64)> {
    match kind {
        FactorKind::IndicatorI => Some((-0.5, 0.5, 1.0)),
        FactorKind::ScaledIndicator { lo, hi, height } => Some((*lo, *hi, *height)),
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

fn weaker(a: Decay, b: Decay) -> Decay {
    match (a, b) {
        (Decay::Compact, d) | (d, Decay::Compact) => d,
        (Decay::Power(p), Decay::Power(q)) => Decay::Power(p.min(q)),
        (Decay::Power(p), _) | (_, Decay::Power(p)) => Decay::Power(p),
        (Decay::Exponential, _) | (_, Decay::Exponential) => Decay::Exponential,
        _ => Decay::Gaussian,
    }
}

/// `(f * g)(x) = int f(y) g(x - y) dy`.
pub fn convolve_factor(f: &FactorFunction, g: &FactorFunction, x: f64) -> Result<Complex64, FourierError> {
    let s = f.scale * g.scale;
    if let (Some((a, b, h1)), Some((c0, d, h2))) = (box_of(&f.kind), box_of(&g.kind)) {
        let overlap = (b.min(x - c0) - a.max(x - d)).max(0.0);
        return Ok(s * (h1 * h2 * overlap));
    }
    if let (FactorKind::Gaussian { sigma: s1, mean: m1 }, FactorKind::Gaussian { sigma: s2, mean: m2 }) = (&f.kind, &g.kind) {
        let n = (s1 * PI.sqrt()).powf(-0.5) * (s2 * PI.sqrt()).powf(-0.5);
        let v = s1 * s1 + s2 * s2;
        let amp = n * (2.0 * PI).sqrt() * s1 * s2 / v.sqrt();
        return Ok(s * (amp * (-(x - m1 - m2).powi(2) / (2.0 * v)).exp()));
    }
    let (fa, fb) = bounds(f.kind.support());
    let (ga, gb) = bounds(g.kind.support());
    let (lo, hi) = (fa.max(x - gb), fb.min(x - ga));
    if lo >= hi {
        return Ok(c(0.0));
    }
    let dom = match (lo.is_finite(), hi.is_finite()) {
        (true, true) => Domain::Interval(lo, hi),
        (true, false) => Domain::HalfLine(lo),
        _ => Domain::Line,
    };
    if matches!(dom, Domain::Line) && (lo.is_finite() || hi.is_finite()) {
        // Only the upper limit is finite: reflect y -> -y.
        let r = |y: f64| f.eval(-y) * g.eval(x + y);
        let d = Domain::HalfLine(-hi);
        let val = integrate(&Integrand1D::new(r, d, weaker(f.kind.decay(), g.kind.decay())), d, QUAD_TOL)?;
        return Ok(val.value);
    }
    let integrand = |y: f64| f.eval(y) * g.eval(x - y);
    let decay = weaker(f.kind.decay(), g.kind.decay());
    if matches!(dom, Domain::Line) && !matches!(decay, Decay::Power(_)) {
        // Mass sits near y = center(f) and y = x - center(g); anchor the
        // half-line maps there so a bump far from the origin is not missed.
        let (p1, p2) = (center(&f.kind), x - center(&g.kind));
        let (a, b) = (p1.min(p2), p1.max(p2));
        let left = |u: f64| f.eval(-u) * g.eval(x + u);
        let mut total = integrate(&Integrand1D::new(left, Domain::HalfLine(-a), decay), Domain::HalfLine(-a), QUAD_TOL)?.value;
        total += integrate(&Integrand1D::new(integrand, Domain::HalfLine(b), decay), Domain::HalfLine(b), QUAD_TOL)?.value;
        if b > a {
            total += integrate(&Integrand1D::new(integrand, Domain::Interval(a, b), decay), Domain::Interval(a, b), QUAD_TOL)?.value;
        }
        return Ok(total);
    }
    Ok(integrate(&Integrand1D::new(integrand, dom, decay), dom, QUAD_TOL)?.value)
}

fn center(k: &FactorKind) -> f64 {
    match k {
        FactorKind::Gaussian { mean, .. } => *mean,
        FactorKind::Derivative(inner) => center(inner),
        _ => 0.0,
    }
}

fn support_sum(f: &FactorFunction, g: &FactorFunction) -> Domain {
    let (fa, fb) = bounds(f.kind.support());
    let (ga, gb) = bounds(g.kind.support());
    match ((fa + ga).is_finite(), (fb + gb).is_finite()) {
        (true, true) => Domain::Interval(fa + ga, fb + gb),
        (true, false) => Domain::HalfLine(fa + ga),
        _ => Domain::Line,
    }
}

/// `F(f * g)(xi)` by quadrature of the convolution itself.
pub fn fourier_of_convolution(f: &FactorFunction, g: &FactorFunction, xi: f64, tol: f64) -> Result<Complex64, FourierError> {
    let dom = support_sum(f, g);
    let h = |x: f64| convolve_factor(f, g, x).unwrap_or(c(f64::NAN)) * cis(-2.0 * PI * x * xi);
    let decay = weaker(f.kind.decay(), g.kind.decay());
    Ok(integrate(&Integrand1D::new(h, dom, decay), dom, tol)?.value)
}

/// Breakpoints of `f * g` for a pair of indicators: a trapezoid.
fn trapezoid(f: &FactorFunction, g: &FactorFunction) -> Option<(f64, [f64; 4])> {
    let (a, b, h1) = box_of(&f.kind)?;
    let (c0, d, h2) = box_of(&g.kind)?;
    let (w1, w2) = (b - a, d - c0);
    let (m, big) = (w1.min(w2), w1.max(w2));
    let peak = (f.scale * g.scale).norm() * h1.abs() * h2.abs() * m;
    let start = a + c0;
    Some((peak, [start, start + m, start + big, start + m + big]))
}

/// `||f||_p`, with `p = inf` giving the essential supremum.
pub fn lp_norm_factor(f: &FactorFunction, p: f64, tol: f64) -> Result<f64, FourierError> {
    if let Some((_, _, h)) = box_of(&f.kind) {
        let w = match f.kind.support() {
            Domain::Interval(a, b) => b - a,
            _ => unreachable!(),
        };
        let m = h.abs() * f.scale.norm();
        return Ok(if p.is_infinite() { m } else { m * w.powf(1.0 / p) });
    }
    if p.is_infinite() {
        return Ok(sup_norm(|x| f.eval(x).norm(), f.kind.support()));
    }
    let dom = f.kind.support();
    let decay = match f.kind.decay() {
        Decay::Power(q) => Decay::Power(q * p),
        d => d,
    };
    let g = |x: f64| c(f.eval(x).norm().powf(p));
    Ok(integrate(&Integrand1D::new(g, dom, decay), dom, tol)?.value.re.powf(1.0 / p))
}

/// Grid maximum refined by golden-section search around the best node.
fn sup_norm(f: impl Fn(f64) -> f64, dom: Domain) -> f64 {
    let (a, b) = match dom {
        Domain::Interval(a, b) => (a, b),
        _ => (-8.0, 8.0),
    };
    let n = 4000;
    let h = (b - a) / n as f64;
    let (mut best, mut at) = (0.0, a);
    for i in 0..=n {
        let x = a + h * i as f64;
        let v = f(x);
        if v > best {
            best = v;
            at = x;
        }
    }
    let (mut lo, mut hi) = ((at - h).max(a), (at + h).min(b));
    let g = 0.5 * (5f64.sqrt() - 1.0);
    for _ in 0..80 {
        let (x1, x2) = (hi - g * (hi - lo), lo + g * (hi - lo));
        if f(x1) > f(x2) {
            hi = x2;
        } else {
            lo = x1;
        }
    }
    best.max(f(0.5 * (lo + hi)))
}

/// `||f * g||_r`.
pub fn convolution_norm(f: &FactorFunction, g: &FactorFunction, r: f64, tol: f64) -> Result<f64, FourierError> {
    if let Some((peak, [t0, t1, t2, _])) = trapezoid(f, g) {
        if r.is_infinite() {
            return Ok(peak);
        }
        // Two linear ramps of width t1 - t0 and a plateau.
        let ramp = (t1 - t0) / (r + 1.0);
        return Ok(peak * (2.0 * ramp + (t2 - t1)).powf(1.0 / r));
    }
    let dom = support_sum(f, g);
    let conv = |x: f64| convolve_factor(f, g, x).map(|v| v.norm()).unwrap_or(f64::NAN);
    if r.is_infinite() {
        return Ok(sup_norm(conv, dom));
    }
    let decay = match weaker(f.kind.decay(), g.kind.decay()) {
        Decay::Power(q) => Decay::Power(q * r),
        d => d,
    };
    let h = |x: f64| c(conv(x).powf(r));
    Ok(integrate(&Integrand1D::new(h, dom, decay), dom, tol)?.value.re.powf(1.0 / r))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct YoungReport {
    pub r: f64,
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
}

/// `r` with `1/r = 1/p + 1/q - 1`.
pub fn young_exponent(p: f64, q: f64) -> Result<f64, FourierError> {
    let s = 1.0 / p + 1.0 / q - 1.0;
    if !(p >= 1.0) || !(q >= 1.0) || s < -1e-15 {
        return Err(FourierError::InvalidExponents { p, q });
    }
    Ok(if s <= 0.0 { f64::INFINITY } else { 1.0 / s })
}

/// Checks `||f * g||_r <= ||f||_p ||g||_q` factorwise over the first `k`
/// factors of two product vectors with fixed tails.
pub fn young_check(
    f: &ProductVector,
    g: &ProductVector,
    p: f64,
    q: f64,
    k: usize,
    tol: f64,
) -> Result<YoungReport, FourierError> {
    let r = young_exponent(p, q)?;
    let explicit = f.explicit.len().max(g.explicit.len());
    if k < explicit {
        return Err(FourierError::TruncationTooShort { k, explicit });
    }
    for v in [f, g] {
        if !matches!(v.tail.base, TailBase::Fixed(_)) || !v.tail.phases.is_empty() {
            return Err(FourierError::UnsupportedTail(format!("{:?}", v.tail.base)));
        }
    }
    let factor = |i: usize| -> Result<(f64, f64), FourierError> {
        let (a, b) = (f.factor_at(i), g.factor_at(i));
        let lhs = convolution_norm(&a, &b, r, tol)?;
        let rhs = lp_norm_factor(&a, p, tol)? * lp_norm_factor(&b, q, tol)?;
        Ok((lhs, rhs))
    };
    let (mut lhs, mut rhs) = (1.0, 1.0);
    for i in 1..=explicit {
        let (l, h) = factor(i)?;
        lhs *= l;
        rhs *= h;
    }
    if k > explicit {
        let (l, h) = factor(explicit + 1)?;
        let n = (k - explicit) as i32;
        lhs *= l.powi(n);
        rhs *= h.powi(n);
    }
    Ok(YoungReport { r, lhs, rhs, holds: lhs <= rhs + tol })
}
