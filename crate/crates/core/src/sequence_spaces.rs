//! Membership in `l^p` and `c_0`, partial-sum norms, and the halved
//! absolute basis `v_n = u_n / 2^n`.

use num_complex::Complex64;
use thiserror::Error;

use crate::product_engine::{zeta_tail, SequenceSpec, TailRule};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpaceError {
    #[error("coefficient {index} overflows after scaling by 2^{index}")]
    Overflow { index: usize },
    #[error("tail {0} has no closed form after the transform")]
    NotRepresentable(String),
    #[error("transform requires the {0} basis")]
    WrongBasis(&'static str),
    #[error("exponent p = {0} must be at least 1")]
    InvalidExponent(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Space {
    EllP(f64),
    C0,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Basis {
    StandardUnitVectors,
    /// `v_n = u_n / 2^n`
    HalvedAbsolute,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BasisSpec {
    pub space: Space,
    pub basis: Basis,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientVector {
    pub coeffs: SequenceSpec,
    pub basis: BasisSpec,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Membership {
    CertifiedIn,
    CertifiedOut,
    Unknown,
}

impl Membership {
    pub fn name(&self) -> &'static str {
        match self {
            Membership::CertifiedIn => "Certified-in",
            Membership::CertifiedOut => "Certified-out",
            Membership::Unknown => "Unknown",
        }
    }
}

/// Limit of the pure tail rule, when it exists in closed form.
fn rule_limit(rule: &TailRule) -> Option<Complex64> {
    match rule {
        TailRule::Zero | TailRule::Geometric { .. } | TailRule::PowerLaw { .. } => {
            Some(Complex64::new(0.0, 0.0))
        }
        TailRule::Constant(v) => Some(*v),
        TailRule::OnePlus(s) => rule_limit(&s.tail).map(|v| v + 1.0),
        TailRule::UnitPhase(s) => rule_limit(&s.tail).map(|v| Complex64::from_polar(1.0, v.re)),
    }
}

/// Certify whether `sum |x_k|^p` is finite. The explicit prefix never
/// changes the verdict, so only the tail rule is inspected.
pub fn lp_membership(x: &SequenceSpec, p: f64) -> Membership {
    if !(p >= 1.0) {
        return Membership::Unknown;
    }
    tail_membership(&x.tail, Space::EllP(p))
}

/// Certify whether `x_k -> 0`.
pub fn c0_membership(x: &SequenceSpec) -> Membership {
    tail_membership(&x.tail, Space::C0)
}

fn tail_membership(rule: &TailRule, space: Space) -> Membership {
    match rule {
        TailRule::Zero => Membership::CertifiedIn,
        TailRule::Constant(v) => {
            if v.norm() == 0.0 {
                Membership::CertifiedIn
            } else {
                Membership::CertifiedOut
            }
        }
        TailRule::Geometric { .. } => Membership::CertifiedIn,
        TailRule::PowerLaw { a, p: decay } => match space {
            _ if a.norm() == 0.0 => Membership::CertifiedIn,
            Space::C0 => Membership::CertifiedIn,
            Space::EllP(p) => {
                if decay * p > 1.0 {
                    Membership::CertifiedIn
                } else {
                    Membership::CertifiedOut
                }
            }
        },
        TailRule::OnePlus(s) => match rule_limit(rule) {
            Some(l) if l.norm() > 0.0 => Membership::CertifiedOut,
            _ if matches!(s.tail, TailRule::Constant(_) | TailRule::Zero) => Membership::CertifiedIn,
            _ => Membership::Unknown,
        },
        TailRule::UnitPhase(_) => Membership::CertifiedOut,
    }
}

/// Sum `sum_{k>n} |x_k|^p` for a decaying closed-form tail, with error.
pub fn tail_power_sum(rule: &TailRule, n: usize, p: f64) -> Option<(f64, f64)> {
    match rule {
        TailRule::Zero => Some((0.0, 0.0)),
        TailRule::Constant(v) if v.norm() == 0.0 => Some((0.0, 0.0)),
        TailRule::Geometric { a, r } => {
            let q = r.norm().powf(p);
            let v = a.norm().powf(p) * q.powi(n as i32 + 1) / (1.0 - q);
            Some((v, 4.0 * f64::EPSILON * v))
        }
        TailRule::PowerLaw { a, p: decay } if decay * p > 1.0 => {
            let (z, e) = zeta_tail(decay * p, n);
            let s = a.norm().powf(p);
            Some((s * z, s * e))
        }
        _ => None,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BiNorm {
    pub value: f64,
    /// Index `n <= K` where the supremum is first attained.
    pub attained_at: usize,
    pub monotone: bool,
}

fn weight(basis: Basis, k: usize) -> f64 {
    match basis {
        Basis::StandardUnitVectors => 1.0,
        Basis::HalvedAbsolute => 0.5f64.powi(k as i32),
    }
}

/// `sup_{n <= K} || sum_{k<=n} a_k e_k ||` in the stated space.
pub fn bi_norm(x: &CoefficientVector, k_max: usize) -> BiNorm {
    let k_max = k_max.max(1);
    let mut acc = 0.0f64;
    let mut best = f64::NEG_INFINITY;
    let mut attained_at = 0;
    let mut prev = 0.0f64;
    let mut monotone = true;
    for k in 1..=k_max {
        let v = x.coeffs.term(k).norm() * weight(x.basis.basis, k);
        let norm = match x.basis.space {
            Space::EllP(p) => {
                acc += v.powf(p);
                acc.powf(1.0 / p)
            }
            Space::C0 => {
                acc = acc.max(v);
                acc
            }
        };
        if norm < prev {
            monotone = false;
        }
        prev = norm;
        if norm > best {
            best = norm;
            attained_at = k;
        }
    }
    BiNorm { value: best, attained_at, monotone }
}

/// Rewrite standard-basis coefficients `a_n` as `b_n = 2^n a_n` against the
/// halved absolute basis.
pub fn absolute_basis_transform(x: &CoefficientVector) -> Result<CoefficientVector, SpaceError> {
    if x.basis.basis != Basis::StandardUnitVectors {
        return Err(SpaceError::WrongBasis("standard"));
    }
    let scale = |k: usize, v: Complex64| -> Result<Complex64, SpaceError> {
        let s = 2f64.powi(k as i32);
        let b = v * s;
        if !s.is_finite() || !b.re.is_finite() || !b.im.is_finite() {
            return Err(SpaceError::Overflow { index: k });
        }
        Ok(b)
    };
    let prefix = x
        .coeffs
        .prefix
        .iter()
        .enumerate()
        .map(|(i, v)| scale(i + 1, *v))
        .collect::<Result<Vec<_>, _>>()?;
    let tail = match &x.coeffs.tail {
        TailRule::Zero => TailRule::Zero,
        TailRule::Constant(v) if v.norm() == 0.0 => TailRule::Zero,
        TailRule::Geometric { a, r } => {
            let r2 = *r * 2.0;
            if r2 == Complex64::new(1.0, 0.0) {
                TailRule::Constant(*a)
            } else if r2.norm() < 1.0 {
                TailRule::Geometric { a: *a, r: r2 }
            } else {
                return Err(SpaceError::NotRepresentable(format!("{:?}", x.coeffs.tail)));
            }
        }
        t => return Err(SpaceError::NotRepresentable(format!("{t:?}"))),
    };
    Ok(CoefficientVector {
        coeffs: SequenceSpec { prefix, tail },
        basis: BasisSpec { space: x.basis.space, basis: Basis::HalvedAbsolute },
    })
}

/// Inverse of [`absolute_basis_transform`]: `a_n = b_n / 2^n`.
pub fn inverse_absolute_basis_transform(x: &CoefficientVector) -> Result<CoefficientVector, SpaceError> {
    if x.basis.basis != Basis::HalvedAbsolute {
        return Err(SpaceError::WrongBasis("halved absolute"));
    }
    let prefix = x
        .coeffs
        .prefix
        .iter()
        .enumerate()
        .map(|(i, v)| *v * 0.5f64.powi(i as i32 + 1))
        .collect();
    let tail = match &x.coeffs.tail {
        TailRule::Zero => TailRule::Zero,
        TailRule::Constant(v) if v.norm() == 0.0 => TailRule::Zero,
        TailRule::Constant(v) => TailRule::Geometric { a: *v, r: Complex64::new(0.5, 0.0) },
        TailRule::Geometric { a, r } => TailRule::Geometric { a: *a, r: *r * 0.5 },
        t => return Err(SpaceError::NotRepresentable(format!("{t:?}"))),
    };
    Ok(CoefficientVector {
        coeffs: SequenceSpec { prefix, tail },
        basis: BasisSpec { space: x.basis.space, basis: Basis::StandardUnitVectors },
    })
}

/// Coordinates of the partial sum `sum_{k<=n} c_k e_k` in the standard basis.
pub fn partial_reconstruction(x: &CoefficientVector, n: usize) -> Vec<Complex64> {
    (1..=n)
        .map(|k| x.coeffs.term(k) * weight(x.basis.basis, k))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(x: f64) -> Complex64 {
        Complex64::new(x, 0.0)
    }

    fn std_basis(space: Space) -> BasisSpec {
        BasisSpec { space, basis: Basis::StandardUnitVectors }
    }

    #[test]
    fn membership_examples() {
        let g = SequenceSpec::geometric(c(1.0), c(0.5));
        assert_eq!(lp_membership(&g, 1.0), Membership::CertifiedIn);
        let h = SequenceSpec::power_law(c(1.0), 1.0);
        assert_eq!(lp_membership(&h, 1.0), Membership::CertifiedOut);
        assert_eq!(lp_membership(&h, 2.0), Membership::CertifiedIn);
        let s = SequenceSpec::power_law(c(1.0), 0.6);
        assert_eq!(lp_membership(&s, 2.0), Membership::CertifiedIn);
        assert_eq!(lp_membership(&SequenceSpec::constant(c(2.0)), 3.0), Membership::CertifiedOut);
        assert_eq!(c0_membership(&h), Membership::CertifiedIn);
    }

    #[test]
    fn partial_sum_oracle_for_slow_tail() {
        // sum k^-1.2 converges; closed form agrees with a long partial sum.
        let (tail, _) = tail_power_sum(&TailRule::PowerLaw { a: c(1.0), p: 0.6 }, 1_000_000, 2.0).unwrap();
        let head: f64 = (1..=1_000_000u64).map(|k| (k as f64).powf(-1.2)).sum();
        let (full, _) = tail_power_sum(&TailRule::PowerLaw { a: c(1.0), p: 0.6 }, 0, 2.0).unwrap();
        assert!((head + tail - full).abs() < 1e-9);
    }

    #[test]
    fn bi_norm_examples() {
        let e1 = CoefficientVector {
            coeffs: SequenceSpec::zero().with_prefix(vec![c(1.0)]),
            basis: std_basis(Space::EllP(2.0)),
        };
        assert_eq!(bi_norm(&e1, 10).value, 1.0);
        let g = CoefficientVector {
            coeffs: SequenceSpec::geometric(c(1.0), c(0.5)),
            basis: std_basis(Space::EllP(1.0)),
        };
        let b = bi_norm(&g, 200);
        assert!((b.value - 1.0).abs() < 1e-15 && b.monotone);
        let v = CoefficientVector {
            coeffs: SequenceSpec::zero().with_prefix(vec![c(3.0), c(-4.0)]),
            basis: std_basis(Space::EllP(2.0)),
        };
        let b = bi_norm(&v, 5);
        assert_eq!(b.value, 5.0);
        assert_eq!(b.attained_at, 2);
    }

    #[test]
    fn basis_transform() {
        let zero = CoefficientVector { coeffs: SequenceSpec::zero(), basis: std_basis(Space::EllP(1.0)) };
        assert_eq!(absolute_basis_transform(&zero).unwrap().coeffs, SequenceSpec::zero());
        let g = CoefficientVector {
            coeffs: SequenceSpec::geometric(c(1.0), c(0.5)),
            basis: std_basis(Space::EllP(1.0)),
        };
        let t = absolute_basis_transform(&g).unwrap();
        assert_eq!(t.coeffs.tail, TailRule::Constant(c(1.0)));
        assert_eq!(partial_reconstruction(&t, 30), partial_reconstruction(&g, 30));
        let long = CoefficientVector {
            coeffs: SequenceSpec::zero().with_prefix(vec![c(1.0); 1100]),
            basis: std_basis(Space::EllP(1.0)),
        };
        assert!(matches!(absolute_basis_transform(&long), Err(SpaceError::Overflow { .. })));
    }
}
