//! Adaptive Gauss-Kronrod integration, central differences and small dense
//! linear algebra.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use thiserror::Error;

/// Complex dense matrix used throughout the crate.
pub type CMatrix = DMatrix<Complex64>;

/// Default panel budget for [`integrate`].
pub const DEFAULT_PANEL_BUDGET: usize = 1 << 16;

/// Largest accepted dimension for [`matrix_exp`].
pub const MAX_EXP_DIM: usize = 64;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QuadError {
    #[error("no convergence after {panels} panels (error estimate {estimate:e})")]
    NoConvergence { panels: usize, estimate: f64 },
    #[error("point {x} with step {h} leaves the support")]
    OutOfSupport { x: f64, h: f64 },
    #[error("matrix dimension {0} exceeds {MAX_EXP_DIM}")]
    DimensionTooLarge(usize),
    #[error("invalid domain: {0}")]
    InvalidDomain(String),
    #[error("tolerance must be positive, got {0}")]
    InvalidTolerance(f64),
}

/// Integration domain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Domain {
    Interval(f64, f64),
    /// `[a, +inf)`
    HalfLine(f64),
    Line,
}

impl Domain {
    pub fn contains(&self, x: f64) -> bool {
        match *self {
            Domain::Interval(a, b) => x >= a && x <= b,
            Domain::HalfLine(a) => x >= a,
            Domain::Line => x.is_finite(),
        }
    }

    fn bounded(&self) -> Option<(f64, f64)> {
        match *self {
            Domain::Interval(a, b) => Some((a, b)),
            _ => None,
        }
    }
}

/// How an integrand decays at infinity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Decay {
    Compact,
    Gaussian,
    Exponential,
    /// `|f(x)| = O(|x|^-p)` with `p > 1`.
    Power(f64),
}

/// A pointwise rule together with its support and decay class.
pub struct Integrand1D<F> {
    pub eval: F,
    pub support: Domain,
    pub decay: Decay,
}

impl<F: Fn(f64) -> Complex64> Integrand1D<F> {
    pub fn new(eval: F, support: Domain, decay: Decay) -> Self {
        Self { eval, support, decay }
    }

    /// Zero outside the support.
    pub fn at(&self, x: f64) -> Complex64 {
        if self.support.contains(x) {
            (self.eval)(x)
        } else {
            Complex64::new(0.0, 0.0)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadResult {
    pub value: Complex64,
    pub abs_error_estimate: f64,
    pub subdivisions: usize,
}

const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144838258730,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.0,
];
const WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];
// Gauss weights for the nodes XGK[1], XGK[3], XGK[5], XGK[7].
const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

struct Panel {
    a: f64,
    b: f64,
    value: Complex64,
    error: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error
            .total_cmp(&other.error)
            .then_with(|| other.a.total_cmp(&self.a))
    }
}

fn gk15<G: Fn(f64) -> Complex64>(g: &G, a: f64, b: f64) -> Panel {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = g(c);
    let mut kron = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for j in 0..7 {
        let dx = h * XGK[j];
        let s = g(c - dx) + g(c + dx);
        kron += s * WGK[j];
        if j % 2 == 1 {
            gauss += s * WG[j / 2];
        }
    }
    let kron = kron * h;
    let gauss = gauss * h;
    let d = kron - gauss;
    Panel {
        a,
        b,
        value: kron,
        error: d.re.abs() + d.im.abs(),
    }
}

/// Globally adaptive bisection on a bounded interval.
fn adapt<G: Fn(f64) -> Complex64>(
    g: &G,
    a: f64,
    b: f64,
    tol: f64,
    budget: usize,
) -> Result<QuadResult, QuadError> {
    let mut heap = BinaryHeap::new();
    let first = gk15(g, a, b);
    let mut total_err = first.error;
    let mut value = first.value;
    heap.push(first);
    let mut panels = 1usize;
    loop {
        let target = tol.max(4.0 * f64::EPSILON * value.norm());
        if total_err <= target {
            break;
        }
        if panels >= budget {
            return Err(QuadError::NoConvergence {
                panels,
                estimate: total_err,
            });
        }
        let worst = heap.pop().expect("heap is never empty");
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            // Panel can no longer be split in floating point.
            return Err(QuadError::NoConvergence {
                panels,
                estimate: total_err,
            });
        }
        let l = gk15(g, worst.a, mid);
        let r = gk15(g, mid, worst.b);
        total_err += l.error + r.error - worst.error;
        value += l.value + r.value - worst.value;
        heap.push(l);
        heap.push(r);
        panels += 1;
        if panels % 64 == 0 {
            total_err = heap.iter().map(|p| p.error).sum();
            value = heap.iter().map(|p| p.value).sum();
        }
    }
    let mut all: Vec<Panel> = heap.into_vec();
    all.sort_by(|p, q| p.a.total_cmp(&q.a));
    let value = all.iter().map(|p| p.value).sum();
    let abs_error_estimate = all.iter().map(|p| p.error).sum();
    Ok(QuadResult {
        value,
        abs_error_estimate,
        subdivisions: all.len(),
    })
}

fn intersect(domain: Domain, support: Domain) -> Result<Domain, QuadError> {
    let (dlo, dhi) = bounds(domain);
    let (slo, shi) = bounds(support);
    let lo = dlo.max(slo);
    let hi = dhi.min(shi);
    if lo > hi {
        return Ok(Domain::Interval(0.0, 0.0));
    }
    Ok(match (lo.is_finite(), hi.is_finite()) {
        (true, true) => Domain::Interval(lo, hi),
        (true, false) => Domain::HalfLine(lo),
        (false, false) => Domain::Line,
        (false, true) => {
            return Err(QuadError::InvalidDomain(
                "left-unbounded intervals are not supported".into(),
            ))
        }
    })
}

fn bounds(d: Domain) -> (f64, f64) {
    match d {
        Domain::Interval(a, b) => (a, b),
        Domain::HalfLine(a) => (a, f64::INFINITY),
        Domain::Line => (f64::NEG_INFINITY, f64::INFINITY),
    }
}

/// Integrate `f` over `domain` to absolute tolerance `tol`.
///
/// Gaussian and exponential tails are mapped onto a bounded interval by
/// `x = a + t/(1-t)` (half-line) or `x = t/(1-t^2)` (line). Power-law tails
/// are truncated at a cutoff and the remainder is estimated from the mean of
/// `|x|^p f(x)` over the last stretch before the cutoff.
pub fn integrate<F: Fn(f64) -> Complex64>(
    f: &Integrand1D<F>,
    domain: Domain,
    tol: f64,
) -> Result<QuadResult, QuadError> {
    integrate_with_budget(f, domain, tol, DEFAULT_PANEL_BUDGET)
}

pub fn integrate_with_budget<F: Fn(f64) -> Complex64>(
    f: &Integrand1D<F>,
    domain: Domain,
    tol: f64,
    budget: usize,
) -> Result<QuadResult, QuadError> {
    if !(tol > 0.0) {
        return Err(QuadError::InvalidTolerance(tol));
    }
    if let Domain::Interval(a, b) = domain {
        if !(a <= b) || !a.is_finite() || !b.is_finite() {
            return Err(QuadError::InvalidDomain(format!("[{a}, {b}]")));
        }
    }
    let dom = intersect(domain, f.support)?;
    if let Some((a, b)) = dom.bounded() {
        if a == b {
            return Ok(QuadResult {
                value: Complex64::new(0.0, 0.0),
                abs_error_estimate: 0.0,
                subdivisions: 0,
            });
        }
        return adapt(&|x| f.at(x), a, b, tol, budget);
    }
    match f.decay {
        Decay::Compact => Err(QuadError::InvalidDomain(
            "unbounded domain with a compact decay tag".into(),
        )),
        Decay::Gaussian | Decay::Exponential => match dom {
            Domain::HalfLine(a) => {
                let g = |t: f64| {
                    let s = 1.0 - t;
                    if s <= 0.0 {
                        return Complex64::new(0.0, 0.0);
                    }
                    let v = f.at(a + t / s);
                    if v == Complex64::new(0.0, 0.0) {
                        v
                    } else {
                        v / (s * s)
                    }
                };
                adapt(&g, 0.0, 1.0, tol, budget)
            }
            _ => {
                let g = |t: f64| {
                    let s = 1.0 - t * t;
                    if s <= 0.0 {
                        return Complex64::new(0.0, 0.0);
                    }
                    let v = f.at(t / s);
                    if v == Complex64::new(0.0, 0.0) {
                        v
                    } else {
                        v * ((1.0 + t * t) / (s * s))
                    }
                };
                adapt(&g, -1.0, 1.0, tol, budget)
            }
        },
        Decay::Power(p) => power_tail(f, dom, p, tol, budget),
    }
}

fn power_tail<F: Fn(f64) -> Complex64>(
    f: &Integrand1D<F>,
    dom: Domain,
    p: f64,
    tol: f64,
    budget: usize,
) -> Result<QuadResult, QuadError> {
    if !(p > 1.0) {
        return Err(QuadError::InvalidDomain(format!(
            "power decay exponent {p} is not integrable"
        )));
    }
    let (lo, two_sided) = match dom {
        Domain::HalfLine(a) => (a, false),
        _ => (0.0, true),
    };
    // The cutoff is averaged over [R/2, R] with the smooth weight
    // w(u) = (8/3) sin^4(pi u), which suppresses oscillating tails. Beyond
    // each averaged cutoff the integrand is taken as A x^-p, with A the
    // w-weighted mean of x^p f(x).
    let r = 4096.0_f64.max(4.0 * lo.abs());
    let half = 0.5 * r;
    let panel = 1.0;
    let u_of = |x: f64| (x - half) / half;
    let weight = |x: f64| (8.0 / 3.0) * (PI * u_of(x)).sin().powi(4) / half;
    let survival = |x: f64| {
        let u = u_of(x);
        1.0 - u + (2.0 / (3.0 * PI)) * (2.0 * PI * u).sin() - (4.0 * PI * u).sin() / (12.0 * PI)
    };
    let n_panels = if two_sided { 2.0 * r } else { r };
    let share = tol / n_panels.max(1.0);
    let mut value = Complex64::new(0.0, 0.0);
    let mut err = 0.0;
    let mut subdivisions = 0;
    let mut run = |a: f64, b: f64, g: &dyn Fn(f64) -> Complex64| -> Result<Complex64, QuadError> {
        let mut acc = Complex64::new(0.0, 0.0);
        let mut x = a;
        while x < b {
            let y = (x + panel).min(b);
            let q = adapt(&|t| g(t), x, y, share, budget)?;
            acc += q.value;
            err += q.abs_error_estimate;
            subdivisions += q.subdivisions;
            x = y;
        }
        Ok(acc)
    };
    let (core_lo, core_hi) = if two_sided { (-half, half) } else { (lo, lo + half) };
    value += run(core_lo, core_hi, &|t| f.at(t))?;
    let tail_decay = adapt(&|x| Complex64::new(weight(x) * x.powf(1.0 - p) / (p - 1.0), 0.0), half, r, 1e-15, budget)?.value.re;
    let sides: &[f64] = if two_sided { &[1.0, -1.0] } else { &[1.0] };
    for &sign in sides {
        let origin = if two_sided { 0.0 } else { lo };
        let at = |x: f64| f.at(origin + sign * x);
        value += run(half, r, &|x| at(x) * survival(x))?;
        let amplitude = run(half, r, &|x| at(x) * (weight(x) * x.powf(p)))?;
        value += amplitude * tail_decay;
    }
    Ok(QuadResult {
        value,
        abs_error_estimate: err,
        subdivisions,
    })
}

/// Integrate a real-valued closure over a bounded interval.
pub fn integrate_real<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    tol: f64,
) -> Result<f64, QuadError> {
    let g = Integrand1D::new(move |x| Complex64::new(f(x), 0.0), Domain::Interval(a, b), Decay::Compact);
    integrate(&g, Domain::Interval(a, b), tol).map(|r| r.value.re)
}

/// Central difference `(f(x+h) - f(x-h)) / 2h`.
pub fn fd_derivative<F: Fn(f64) -> Complex64>(
    f: &Integrand1D<F>,
    x: f64,
    h: f64,
) -> Result<Complex64, QuadError> {
    if !(h > 0.0) || !f.support.contains(x - h) || !f.support.contains(x + h) {
        return Err(QuadError::OutOfSupport { x, h });
    }
    Ok(((f.eval)(x + h) - (f.eval)(x - h)) / (2.0 * h))
}

const PADE13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];
const THETA13: f64 = 5.371920351148152;

fn norm1(a: &CMatrix) -> f64 {
    (0..a.ncols())
        .map(|j| a.column(j).iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// `exp(tA)` by scaling and squaring with a degree-13 Pade approximant.
pub fn matrix_exp(a: &CMatrix, t: f64) -> Result<CMatrix, QuadError> {
    let n = a.nrows();
    if n != a.ncols() {
        return Err(QuadError::InvalidDomain("matrix is not square".into()));
    }
    if n > MAX_EXP_DIM {
        return Err(QuadError::DimensionTooLarge(n));
    }
    let ta = a * Complex64::new(t, 0.0);
    let nrm = norm1(&ta);
    let s = if nrm > THETA13 {
        (nrm / THETA13).log2().ceil() as i32
    } else {
        0
    };
    let m = &ta * Complex64::new(0.5_f64.powi(s), 0.0);
    let id = CMatrix::identity(n, n);
    let m2 = &m * &m;
    let m4 = &m2 * &m2;
    let m6 = &m4 * &m2;
    let c = |k: usize| Complex64::new(PADE13[k], 0.0);
    let u_inner = &m6 * (&m6 * c(13) + &m4 * c(11) + &m2 * c(9))
        + &m6 * c(7)
        + &m4 * c(5)
        + &m2 * c(3)
        + &id * c(1);
    let u = &m * u_inner;
    let v = &m6 * (&m6 * c(12) + &m4 * c(10) + &m2 * c(8))
        + &m6 * c(6)
        + &m4 * c(4)
        + &m2 * c(2)
        + &id * c(0);
    let p = &v + &u;
    let q = &v - &u;
    let mut r = q
        .lu()
        .solve(&p)
        .ok_or_else(|| QuadError::InvalidDomain("singular Pade denominator".into()))?;
    for _ in 0..s {
        r = &r * &r;
    }
    Ok(r)
}

/// Gauss-Legendre nodes and weights on `[-1, 1]` by Newton iteration on
/// the Legendre recurrence.
pub fn gauss_legendre(m: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; m];
    let mut w = vec![0.0; m];
    for i in 0..m.div_ceil(2) {
        let mut z = (PI * (i as f64 + 0.75) / (m as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, 0.0);
            for j in 0..m {
                let p2 = p1;
                p1 = p0;
                p0 = ((2 * j + 1) as f64 * z * p1 - j as f64 * p2) / (j + 1) as f64;
            }
            dp = m as f64 * (z * p0 - p1) / (z * z - 1.0);
            let dz = p0 / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = -z;
        x[m - 1 - i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
        w[m - 1 - i] = w[i];
    }
    (x, w)
}

/// Eigen-decomposition of a Hermitian matrix: real eigenvalues and a unitary
/// matrix whose columns are the eigenvectors.
pub fn hermitian_eigen(a: &CMatrix) -> (Vec<f64>, CMatrix) {
    let eig = nalgebra::linalg::SymmetricEigen::new(a.clone());
    (eig.eigenvalues.iter().copied().collect(), eig.eigenvectors)
}
