//! The special function `h(x) = int_0^inf exp(-y^a e^{iax}) dy`, the
//! mollified exponential factor, the product differential operator
//! `D^inf`, truncated elliptic operators and Thompson's equilibrium density.

use std::f64::consts::PI;

use num_complex::Complex64;
use statrs::function::gamma::gamma;
use thiserror::Error;

use crate::quadrature::{fd_derivative, integrate, Decay, Domain, Integrand1D, QuadError};
use crate::tensor_states::{FactorFunction, FactorKind, ProductVector, TailBase, TensorError};

pub const MAX_LAPLACIAN_DIM: usize = 10;
pub const MAX_THOMPSON_DIM: usize = 8;
const QUAD_TOL: f64 = 1e-13;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PdeError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error(transparent)]
    Quadrature(#[from] QuadError),
    #[error("factor {index} has no derivative in closed form")]
    NonDifferentiableFactor { index: usize },
    #[error("unsupported tail: {0}")]
    UnsupportedTail(String),
    #[error("unsupported test function: {0}")]
    UnsupportedTestFunction(String),
    #[error("beta[{i},{j},{k}] = {value} breaks the permutation symmetry")]
    InvalidBeta { i: usize, j: usize, k: usize, value: f64 },
    #[error(transparent)]
    Tensor(#[from] TensorError),
}

fn c(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HBarSpec {
    pub a: f64,
}

impl HBarSpec {
    pub fn new(a: f64) -> Result<Self, PdeError> {
        if !(a > 1.0) || !a.is_finite() {
            return Err(PdeError::InvalidParameter(format!("a = {a} must lie in (1, inf)")));
        }
        Ok(Self { a })
    }

    /// `pi / (2a)`
    pub fn half_width(&self) -> f64 {
        PI / (2.0 * self.a)
    }

    pub fn in_domain(&self, x: f64) -> bool {
        x.abs() <= self.half_width()
    }
}

/// `h(x)` by quadrature; zero outside `[-pi/2a, pi/2a]`.
pub fn hbar_eval(spec: &HBarSpec, x: f64, tol: f64) -> Result<Complex64, PdeError> {
    if !spec.in_domain(x) {
        return Ok(c(0.0));
    }
    let a = spec.a;
    let cos = (a * x).cos();
    if cos <= 0.0 {
        return Err(QuadError::NoConvergence { panels: 0, estimate: f64::INFINITY }.into());
    }
    // y = s u with s = cos(ax)^(-1/a) makes the modulus exp(-u^a).
    let s = cos.powf(-1.0 / a);
    let phase = Complex64::new(1.0, (a * x).tan());
    let f = move |u: f64| c(s) * (-(u.powf(a)) * phase).exp();
    let g = Integrand1D::new(f, Domain::HalfLine(0.0), Decay::Exponential);
    Ok(integrate(&g, Domain::HalfLine(0.0), tol)?.value)
}

/// `Gamma(1 + 1/a) e^{-ix}` on the domain, zero outside.
pub fn hbar_closed_form(spec: &HBarSpec, x: f64) -> Complex64 {
    if !spec.in_domain(x) {
        return c(0.0);
    }
    Complex64::from_polar(gamma(1.0 + 1.0 / spec.a), -x)
}

/// `|h'(x) + i h(x)|` with a central difference of step `step`.
pub fn hbar_ode_residual(spec: &HBarSpec, x: f64, step: f64) -> Result<f64, PdeError> {
    let w = spec.half_width();
    let inner = Integrand1D::new(
        |t: f64| hbar_eval(spec, t, QUAD_TOL).unwrap_or(c(f64::NAN)),
        Domain::Interval(-w, w),
        Decay::Compact,
    );
    if x.abs() + step >= w {
        return Err(QuadError::OutOfSupport { x, h: step }.into());
    }
    let d = fd_derivative(&inner, x, step)?;
    let r = (d + Complex64::i() * hbar_eval(spec, x, QUAD_TOL)?).norm();
    if r.is_nan() {
        return Err(QuadError::NoConvergence { panels: 0, estimate: f64::NAN }.into());
    }
    Ok(r)
}

/// The mollified exponential: `e^x` on `[-1/2, 1/2]` with its mollifier
/// data.
#[derive(Debug, Clone, PartialEq)]
pub struct XiFactor {
    pub factor: FactorFunction,
    /// `int e^{iz} f_eps(z) dz`
    pub alpha: f64,
    /// `c` with `int c bump(z) dz = 1`.
    pub mollifier_norm: f64,
}

impl XiFactor {
    /// Unit-norm copy of the factor.
    pub fn unit(&self) -> FactorFunction {
        self.factor.normalized()
    }
}

/// `exp(-1 / (1 - (2z/eps)^2))` on `|z| < eps/2`.
pub fn bump(eps: f64, z: f64) -> f64 {
    let t = 2.0 * z / eps;
    if t.abs() >= 1.0 {
        0.0
    } else {
        (-1.0 / (1.0 - t * t)).exp()
    }
}

pub fn xi_build(eps: f64) -> Result<XiFactor, PdeError> {
    if !(eps > 0.0 && eps <= 0.1) {
        return Err(PdeError::InvalidParameter(format!("eps = {eps} must lie in (0, 0.1]")));
    }
    let half = eps / 2.0;
    let dom = Domain::Interval(-half, half);
    let mass = integrate(&Integrand1D::new(|z| c(bump(eps, z)), dom, Decay::Compact), dom, 1e-15)?;
    let norm = 1.0 / mass.value.re;
    let alpha = integrate(
        &Integrand1D::new(|z| Complex64::from_polar(norm * bump(eps, z), z), dom, Decay::Compact),
        dom,
        1e-15,
    )?;
    Ok(XiFactor {
        factor: FactorFunction::new(FactorKind::XiExp { eps })?,
        alpha: alpha.value.re,
        mollifier_norm: norm,
    })
}

fn differentiate(f: &FactorFunction, index: usize) -> Result<FactorFunction, PdeError> {
    let kind = match &f.kind {
        FactorKind::XiExp { eps } => FactorKind::XiExp { eps: *eps },
        k @ (FactorKind::Gaussian { .. } | FactorKind::HermiteGaussian { .. } | FactorKind::Sinc) => {
            FactorKind::Derivative(Box::new(k.clone()))
        }
        FactorKind::SampledGrid { lo, hi, values } => {
            let n = values.len() - 1;
            let h = (hi - lo) / n as f64;
            let d = (0..=n)
                .map(|i| {
                    let (l, r) = (i.saturating_sub(1), (i + 1).min(n));
                    (values[r] - values[l]) / ((r - l) as f64 * h)
                })
                .collect();
            FactorKind::SampledGrid { lo: *lo, hi: *hi, values: d }
        }
        _ => return Err(PdeError::NonDifferentiableFactor { index }),
    };
    Ok(FactorFunction::scaled(kind, f.scale)?)
}

/// `D^inf` on a vector with the exponential tail: the first `n` explicit
/// factors are differentiated and the tail is left fixed.
pub fn dinfty_apply(g: &ProductVector, n: usize) -> Result<ProductVector, PdeError> {
    match &g.tail.base {
        TailBase::Fixed(f) if matches!(f.kind, FactorKind::XiExp { .. }) && g.tail.phases.is_empty() => {}
        other => return Err(PdeError::UnsupportedTail(format!("{other:?}"))),
    }
    let mut out = g.clone();
    for (i, f) in out.explicit.iter_mut().enumerate().take(n) {
        *f = differentiate(f, i + 1)?;
    }
    Ok(out)
}

/// `p(x) exp(-width x^2)` with `p(x) = sum coeffs[j] x^j`.
#[derive(Debug, Clone, PartialEq)]
pub struct PolyGauss {
    pub coeffs: Vec<f64>,
    pub width: f64,
}

impl PolyGauss {
    fn poly(c: &[f64], x: f64) -> f64 {
        c.iter().rev().fold(0.0, |acc, a| acc * x + a)
    }

    fn derivative(c: &[f64]) -> Vec<f64> {
        c.iter().enumerate().skip(1).map(|(j, a)| j as f64 * a).collect()
    }

    /// Value, first and second derivative.
    pub fn jet(&self, x: f64) -> (f64, f64, f64) {
        let d1 = Self::derivative(&self.coeffs);
        let d2 = Self::derivative(&d1);
        let (p, p1, p2) = (Self::poly(&self.coeffs, x), Self::poly(&d1, x), Self::poly(&d2, x));
        let w = self.width;
        let e = (-w * x * x).exp();
        let u1 = p1 - 2.0 * w * x * p;
        let u2 = p2 - 4.0 * w * x * p1 + (4.0 * w * w * x * x - 2.0 * w) * p;
        (p * e, u1 * e, u2 * e)
    }
}

/// `f(x) = prod_i u_i(x_i)`.
#[derive(Debug, Clone, PartialEq)]
pub struct TestFunction {
    pub factors: Vec<PolyGauss>,
}

impl TestFunction {
    pub fn eval(&self, x: &[f64]) -> f64 {
        self.factors.iter().zip(x).map(|(u, &t)| u.jet(t).0).product()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum EllipticOperator {
    /// `sum_i d^2/dx_i^2`
    NaturalLaplacian,
    /// `(1/2) sum_i d^2/dx_i^2 - sum_i b_i x_i d/dx_i`
    OrnsteinUhlenbeck(Vec<f64>),
    /// `sum_i (d^2/dx_i^2 - (x_i / c^2) d/dx_i)`
    Umemura(f64),
}

impl EllipticOperator {
    /// Coefficients `(second, first_i)` so the operator reads
    /// `second * sum d_i^2 - sum first_i x_i d_i`.
    fn coefficients(&self, n: usize) -> Result<(f64, Vec<f64>), PdeError> {
        Ok(match self {
            EllipticOperator::NaturalLaplacian => (1.0, vec![0.0; n]),
            EllipticOperator::OrnsteinUhlenbeck(b) => {
                if b.len() < n {
                    return Err(PdeError::UnsupportedTestFunction(format!("{} drift coefficients for dimension {n}", b.len())));
                }
                (0.5, b[..n].to_vec())
            }
            EllipticOperator::Umemura(cc) => {
                if *cc == 0.0 || !cc.is_finite() {
                    return Err(PdeError::InvalidParameter(format!("c = {cc}")));
                }
                (1.0, vec![1.0 / (cc * cc); n])
            }
        })
    }
}

fn check_test_function(f: &TestFunction, x: &[f64]) -> Result<(), PdeError> {
    if x.len() > MAX_LAPLACIAN_DIM || f.factors.len() != x.len() {
        return Err(PdeError::UnsupportedTestFunction(format!(
            "{} factors at a point of dimension {} (at most {MAX_LAPLACIAN_DIM})",
            f.factors.len(),
            x.len()
        )));
    }
    if f.factors.iter().any(|u| !(u.width >= 0.0) || u.coeffs.iter().any(|a| !a.is_finite())) {
        return Err(PdeError::UnsupportedTestFunction("widths must be nonnegative and coefficients finite".into()));
    }
    Ok(())
}

/// Truncated operator applied to `f` at `x` from closed-form derivatives.
pub fn laplacian_truncated(op: &EllipticOperator, f: &TestFunction, x: &[f64]) -> Result<f64, PdeError> {
    check_test_function(f, x)?;
    let (second, first) = op.coefficients(x.len())?;
    let jets: Vec<_> = f.factors.iter().zip(x).map(|(u, &t)| u.jet(t)).collect();
    let mut total = 0.0;
    for i in 0..x.len() {
        let others: f64 = jets.iter().enumerate().filter(|&(j, _)| j != i).map(|(_, u)| u.0).product();
        total += others * (second * jets[i].2 - first[i] * x[i] * jets[i].1);
    }
    Ok(total)
}

/// Same operator with central differences of step `h`.
pub fn laplacian_fd(op: &EllipticOperator, f: &TestFunction, x: &[f64], h: f64) -> Result<f64, PdeError> {
    check_test_function(f, x)?;
    let (second, first) = op.coefficients(x.len())?;
    let f0 = f.eval(x);
    let mut y = x.to_vec();
    let mut total = 0.0;
    for i in 0..x.len() {
        y[i] = x[i] + h;
        let fp = f.eval(&y);
        y[i] = x[i] - h;
        let fm = f.eval(&y);
        y[i] = x[i];
        total += second * (fp - 2.0 * f0 + fm) / (h * h) - first[i] * x[i] * (fp - fm) / (2.0 * h);
    }
    Ok(total)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ThompsonCoeffs {
    pub alpha: Vec<f64>,
    pub mu: Vec<f64>,
    pub nu: f64,
    beta: Vec<f64>,
}

impl ThompsonCoeffs {
    /// `beta` is the dense `n^3` array in row-major `(i, j, k)` order.
    pub fn new(alpha: Vec<f64>, mu: Vec<f64>, nu: f64, beta: Vec<f64>) -> Result<Self, PdeError> {
        let n = alpha.len();
        if n == 0 || mu.len() != n || beta.len() != n * n * n {
            return Err(PdeError::InvalidParameter(format!(
                "alpha has {n} entries, mu {}, beta {}",
                mu.len(),
                beta.len()
            )));
        }
        if alpha.iter().chain(&mu).any(|v| !(*v > 0.0) || !v.is_finite()) || !(nu > 0.0) || !nu.is_finite() {
            return Err(PdeError::InvalidParameter("alpha, mu and nu must be positive".into()));
        }
        let s = Self { alpha, mu, nu, beta };
        s.check_symmetry()?;
        Ok(s)
    }

    /// Completes one-based triples `(i, j, k, value)` by cyclic and
    /// sign-reversing permutations.
    pub fn from_triples(alpha: Vec<f64>, mu: Vec<f64>, nu: f64, triples: &[(usize, usize, usize, f64)]) -> Result<Self, PdeError> {
        let n = alpha.len();
        let mut beta = vec![0.0; n * n * n];
        for &(i, j, k, v) in triples {
            if [i, j, k].iter().any(|&t| t == 0 || t > n) {
                return Err(PdeError::InvalidParameter(format!("triple ({i}, {j}, {k}) outside 1..={n}")));
            }
            let (i, j, k) = (i - 1, j - 1, k - 1);
            if i == j || j == k || i == k {
                return Err(PdeError::InvalidBeta { i: i + 1, j: j + 1, k: k + 1, value: v });
            }
            let idx = |a: usize, b: usize, c: usize| (a * n + b) * n + c;
            for (a, b, c, s) in [(i, j, k, v), (j, k, i, v), (k, i, j, v), (j, i, k, -v), (i, k, j, -v), (k, j, i, -v)] {
                beta[idx(a, b, c)] = s;
            }
        }
        Self::new(alpha, mu, nu, beta)
    }

    pub fn dim(&self) -> usize {
        self.alpha.len()
    }

    /// Zero-based `beta_{ijk}`.
    pub fn beta(&self, i: usize, j: usize, k: usize) -> f64 {
        let n = self.dim();
        self.beta[(i * n + j) * n + k]
    }

    /// Nonzero `beta_{ijk}` with `i < j < k` as one-based triples; the
    /// rest follows by symmetry.
    pub fn generators(&self) -> Vec<(usize, usize, usize, f64)> {
        let n = self.dim();
        let mut out = Vec::new();
        for i in 0..n {
            for j in i + 1..n {
                for k in j + 1..n {
                    let v = self.beta(i, j, k);
                    if v != 0.0 {
                        out.push((i + 1, j + 1, k + 1, v));
                    }
                }
            }
        }
        out
    }

    fn check_symmetry(&self) -> Result<(), PdeError> {
        let n = self.dim();
        let fail = |i: usize, j: usize, k: usize| {
            Err(PdeError::InvalidBeta { i: i + 1, j: j + 1, k: k + 1, value: self.beta(i, j, k) })
        };
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    let v = self.beta(i, j, k);
                    if !v.is_finite() || ((i == j || j == k || i == k) && v != 0.0) {
                        return fail(i, j, k);
                    }
                    if self.beta(j, k, i) != v || self.beta(j, i, k) != -v {
                        return fail(i, j, k);
                    }
                }
            }
        }
        Ok(())
    }

    /// `C = prod_k (nu alpha_k^2 / 2 pi)^(1/2)`.
    pub fn normalization(&self) -> f64 {
        self.alpha.iter().map(|a| (self.nu * a * a / (2.0 * PI)).sqrt()).product()
    }

    /// `M_k(x)` (zero-based `k`).
    pub fn drift(&self, k: usize, x: &[f64]) -> f64 {
        let n = self.dim();
        let (a, m) = (&self.alpha, &self.mu);
        let mut s = 0.0;
        for i in 0..n {
            for j in 0..n {
                let b = self.beta(i, j, k);
                if b != 0.0 {
                    s += a[j] * a[j] * b / (a[i] * a[j] * a[k]) * (m[i] * m[j] * m[k]).sqrt() / m[k] * x[i] * x[j];
                }
            }
        }
        s
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThompsonReport {
    pub density: f64,
    /// `|-nu sum d_k[rho alpha_k^2 x_k] - sum d_k^2 rho|`
    pub viscous_plus_diffusion_residual: f64,
    /// `sum M_k(x) d_k rho`
    pub advective_term: f64,
}

/// Evaluates `rho_0 = C exp(-nu/2 sum alpha_k^2 x_k^2)` and the terms of
/// the stationary continuity equation at `x`.
pub fn thompson_equilibrium(coeffs: &ThompsonCoeffs, x: &[f64]) -> Result<ThompsonReport, PdeError> {
    let n = coeffs.dim();
    if x.len() != n {
        return Err(PdeError::InvalidParameter(format!("x has {} entries, expected {n}", x.len())));
    }
    let nu = coeffs.nu;
    let q: f64 = coeffs.alpha.iter().zip(x).map(|(a, t)| a * a * t * t).sum();
    let rho = coeffs.normalization() * (-0.5 * nu * q).exp();
    let (mut viscous, mut diffusion, mut advective) = (0.0, 0.0, 0.0);
    for k in 0..n {
        let a2 = coeffs.alpha[k].powi(2);
        let d1 = -nu * a2 * x[k] * rho;
        viscous += a2 * rho + a2 * x[k] * d1;
        diffusion += (nu * nu * a2 * a2 * x[k] * x[k] - nu * a2) * rho;
        advective += coeffs.drift(k, x) * d1;
    }
    Ok(ThompsonReport {
        density: rho,
        viscous_plus_diffusion_residual: (-nu * viscous - diffusion).abs(),
        advective_term: advective,
    })
}

/// `prod_k int C_k exp(-nu alpha_k^2 t^2 / 2) dt` by quadrature.
pub fn thompson_normalization_check(coeffs: &ThompsonCoeffs) -> Result<f64, PdeError> {
    let mut total = 1.0;
    for a in &coeffs.alpha {
        let s = coeffs.nu * a * a;
        let ck = (s / (2.0 * PI)).sqrt();
        let f = Integrand1D::new(move |t: f64| c(ck * (-0.5 * s * t * t).exp()), Domain::Line, Decay::Gaussian);
        total *= integrate(&f, Domain::Line, 1e-13)?.value.re;
    }
    Ok(total)
}
