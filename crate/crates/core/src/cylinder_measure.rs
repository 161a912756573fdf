//! Cylinder sets `A x I_n` over `R_I^inf`, where `I_n` is the product of
//! `[-1/2, 1/2]` in every coordinate after `n`.

use num_complex::Complex64;
use thiserror::Error;

use crate::product_engine::{
    classify_allowing_zeros, ConvergenceCertificate, ProductError, SequenceSpec, TailRule,
};
use crate::quadrature::{integrate, Decay, Domain, Integrand1D};
use crate::sequence_spaces::{lp_membership, Membership};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CylinderError {
    #[error("boxes {0} and {1} overlap in their interiors")]
    OverlappingBoxes(usize, usize),
    #[error("box {index} has dimension {got}, expected {expected}")]
    DimensionMismatch { index: usize, got: usize, expected: usize },
    #[error("interval [{0}, {1}] is reversed or not finite")]
    InvalidInterval(f64, f64),
    #[error("complement needs a bounding cylinder")]
    UnboundedComplement,
    #[error("translation vector must be real")]
    ComplexVector,
    #[error(transparent)]
    Product(#[from] ProductError),
}

/// Half-width of the canonical tail interval.
pub const HALF: f64 = 0.5;

#[derive(Debug, Clone, PartialEq)]
pub struct Box {
    pub intervals: Vec<(f64, f64)>,
}

impl Box {
    pub fn new(intervals: Vec<(f64, f64)>) -> Self {
        Self { intervals }
    }

    pub fn dim(&self) -> usize {
        self.intervals.len()
    }

    pub fn volume(&self) -> f64 {
        self.intervals.iter().map(|(lo, hi)| hi - lo).product()
    }

    fn is_empty(&self) -> bool {
        self.intervals.iter().any(|(lo, hi)| hi <= lo)
    }

    fn intersect(&self, other: &Box) -> Option<Box> {
        let intervals: Vec<(f64, f64)> = self
            .intervals
            .iter()
            .zip(&other.intervals)
            .map(|(a, b)| (a.0.max(b.0), a.1.min(b.1)))
            .collect();
        let b = Box { intervals };
        (!b.is_empty()).then_some(b)
    }

    /// `self \ other` as at most `2 dim` disjoint boxes.
    fn subtract(&self, other: &Box) -> Vec<Box> {
        if self.intersect(other).is_none() {
            return vec![self.clone()];
        }
        let mut out = Vec::new();
        let mut rest = self.intervals.clone();
        for d in 0..rest.len() {
            let (lo, hi) = rest[d];
            let (olo, ohi) = other.intervals[d];
            if olo > lo {
                let mut piece = rest.clone();
                piece[d] = (lo, olo.min(hi));
                out.push(Box { intervals: piece });
            }
            if ohi < hi {
                let mut piece = rest.clone();
                piece[d] = (ohi.max(lo), hi);
                out.push(Box { intervals: piece });
            }
            rest[d] = (lo.max(olo), hi.min(ohi));
        }
        out.retain(|b| !b.is_empty());
        out
    }

    fn promote(&self, dim: usize) -> Box {
        let mut intervals = self.intervals.clone();
        intervals.resize(dim, (-HALF, HALF));
        Box { intervals }
    }
}

/// Finite union of interior-disjoint `dim`-dimensional boxes times `I_dim`.
#[derive(Debug, Clone, PartialEq)]
pub struct CylinderSet {
    pub dim: usize,
    pub boxes: Vec<Box>,
}

impl CylinderSet {
    pub fn new(dim: usize, boxes: Vec<Box>) -> Result<Self, CylinderError> {
        let set = Self { dim, boxes };
        set.validate()?;
        Ok(set)
    }

    /// `I_0 = [-1/2, 1/2]^N`, the whole canonical cube.
    pub fn canonical() -> Self {
        Self { dim: 0, boxes: vec![Box::new(Vec::new())] }
    }

    pub fn empty(dim: usize) -> Self {
        Self { dim, boxes: Vec::new() }
    }

    pub fn validate(&self) -> Result<(), CylinderError> {
        for (i, b) in self.boxes.iter().enumerate() {
            if b.dim() != self.dim {
                return Err(CylinderError::DimensionMismatch { index: i, got: b.dim(), expected: self.dim });
            }
            for &(lo, hi) in &b.intervals {
                if !(lo <= hi) || !lo.is_finite() || !hi.is_finite() {
                    return Err(CylinderError::InvalidInterval(lo, hi));
                }
            }
        }
        self.check_disjoint()
    }

    /// Sweep over boxes sorted by their lower corner in the first coordinate.
    fn check_disjoint(&self) -> Result<(), CylinderError> {
        if self.dim == 0 {
            return if self.boxes.len() > 1 { Err(CylinderError::OverlappingBoxes(0, 1)) } else { Ok(()) };
        }
        let mut order: Vec<usize> = (0..self.boxes.len()).collect();
        order.sort_by(|&i, &j| self.boxes[i].intervals[0].0.total_cmp(&self.boxes[j].intervals[0].0));
        for (pos, &i) in order.iter().enumerate() {
            let bi = &self.boxes[i];
            for &j in &order[pos + 1..] {
                let bj = &self.boxes[j];
                if bj.intervals[0].0 >= bi.intervals[0].1 {
                    break;
                }
                if bi.intersect(bj).is_some() && !bi.is_empty() && !bj.is_empty() {
                    return Err(CylinderError::OverlappingBoxes(i.min(j), i.max(j)));
                }
            }
        }
        Ok(())
    }

    /// Append `[-1/2, 1/2]` factors up to `dim`.
    pub fn promote(&self, dim: usize) -> CylinderSet {
        assert!(dim >= self.dim);
        CylinderSet { dim, boxes: self.boxes.iter().map(|b| b.promote(dim)).collect() }
    }

    /// True when `other \ self` has measure zero.
    pub fn contains(&self, other: &CylinderSet) -> bool {
        algebra(other, self, SetOp::Difference)
            .map(|d| d.boxes.iter().all(|b| b.volume() == 0.0))
            .unwrap_or(false)
    }
}

/// `lambda_inf(A)`: sum over boxes of the product of interval lengths.
pub fn measure(a: &CylinderSet) -> Result<f64, CylinderError> {
    a.validate()?;
    Ok(a.boxes.iter().map(Box::volume).sum())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SetOp {
    Union,
    Intersection,
    Difference,
}

fn subtract_all(pieces: Vec<Box>, cut: &[Box]) -> Vec<Box> {
    let mut pieces = pieces;
    for c in cut {
        pieces = pieces.iter().flat_map(|p| p.subtract(c)).collect();
    }
    pieces
}

/// Set operation on two cylinders after promoting both to a common dimension.
pub fn algebra(a: &CylinderSet, b: &CylinderSet, op: SetOp) -> Result<CylinderSet, CylinderError> {
    a.validate()?;
    b.validate()?;
    let dim = a.dim.max(b.dim);
    let a = a.promote(dim);
    let b = b.promote(dim);
    let boxes = match op {
        SetOp::Intersection => a
            .boxes
            .iter()
            .flat_map(|x| b.boxes.iter().filter_map(move |y| x.intersect(y)))
            .collect(),
        SetOp::Difference => subtract_all(a.boxes.clone(), &b.boxes),
        SetOp::Union => {
            let mut out = a.boxes.clone();
            out.extend(subtract_all(b.boxes.clone(), &a.boxes));
            out
        }
    };
    let boxes = if dim == 0 {
        boxes.into_iter().take(1).collect()
    } else {
        boxes.into_iter().filter(|x: &Box| !x.is_empty()).collect()
    };
    Ok(CylinderSet { dim, boxes })
}

/// Complement of `a` inside the bounding cylinder `bound`.
pub fn complement(a: &CylinderSet, bound: Option<&CylinderSet>) -> Result<CylinderSet, CylinderError> {
    let bound = bound.ok_or(CylinderError::UnboundedComplement)?;
    algebra(bound, a, SetOp::Difference)
}

#[derive(Debug, Clone, PartialEq)]
pub struct TranslationReport {
    pub vector: SequenceSpec,
    pub admissible: bool,
    /// Certificate for `prod_{k>n} (1 - |x_k|)_+`.
    pub tail_factor: ConvergenceCertificate,
    /// `lambda_n(base - x) * prod_{k>n} (1 - |x_k|)_+`.
    pub translated_measure: f64,
    /// Measure of `A - x` as a cylinder over the shifted tail; equals
    /// `measure(A)` whenever the translation is admissible.
    pub shifted_tail_measure: Option<f64>,
}

fn positive_part(v: f64) -> f64 {
    v.max(0.0)
}

/// Sequence with term `1` for `k <= n` and `(1 - |x_k|)_+` for `k > n`.
pub fn overlap_spec(x: &SequenceSpec, n: usize) -> Result<SequenceSpec, CylinderError> {
    if !x.is_real() {
        return Err(CylinderError::ComplexVector);
    }
    let c = |v: f64| Complex64::new(v, 0.0);
    let (start, tail) = match &x.tail {
        TailRule::Zero => (0, TailRule::Constant(c(1.0))),
        TailRule::Constant(v) => (0, TailRule::Constant(c(positive_part(1.0 - v.norm())))),
        TailRule::Geometric { a, r } => {
            let (an, rn) = (a.norm(), r.norm());
            let mut k0 = 0usize;
            while an * rn.powi(k0 as i32 + 1) > 1.0 {
                k0 += 1;
            }
            (k0, TailRule::OnePlus(std::boxed::Box::new(SequenceSpec::geometric(c(-an), c(rn)))))
        }
        TailRule::PowerLaw { a, p } => {
            let k0 = a.norm().powf(1.0 / p).ceil() as usize;
            (k0, TailRule::OnePlus(std::boxed::Box::new(SequenceSpec::power_law(c(-a.norm()), *p))))
        }
        t => {
            return Err(CylinderError::Product(ProductError::UnboundedTail(format!(
                "overlap of {t:?}"
            ))))
        }
    };
    let m = n.max(x.explicit_len()).max(start);
    let prefix = (1..=m)
        .map(|k| if k <= n { c(1.0) } else { c(positive_part(1.0 - x.term(k).norm())) })
        .collect();
    Ok(SequenceSpec { prefix, tail })
}

/// Translate `A` by a real sequence `x` and measure its overlap with the
/// canonical tail.
pub fn translate(a: &CylinderSet, x: &SequenceSpec, tol: f64) -> Result<TranslationReport, CylinderError> {
    let base = measure(a)?;
    let ws = overlap_spec(x, a.dim)?;
    let tail_factor = classify_allowing_zeros(&ws, tol)?;
    let admissible = lp_membership(x, 1.0) == Membership::CertifiedIn;
    let factor = tail_factor.value().map(|v| v.re).unwrap_or(0.0);
    // Lebesgue measure on R^n is translation invariant, so lambda_n(base - x) = lambda_n(base).
    Ok(TranslationReport {
        vector: x.clone(),
        admissible,
        translated_measure: base * factor,
        shifted_tail_measure: admissible.then_some(base),
        tail_factor,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct KakutaniReport {
    pub certificate: ConvergenceCertificate,
    /// Value of `prod_k (1 - |x_k|)_+`.
    pub overlap: f64,
    /// `(closed form, quadrature)` for each cross-checked factor.
    pub cross_checks: Vec<(f64, f64)>,
}

/// Quadrature of `int sqrt(chi(y) chi(y - x)) dy` over the unit interval,
/// split at the jumps of the shifted indicator.
pub fn overlap_by_quadrature(x: f64) -> f64 {
    let inside = |t: f64| (-HALF..=HALF).contains(&t);
    let f = Integrand1D::new(
        move |y: f64| Complex64::new(if inside(y) && inside(y - x) { 1.0 } else { 0.0 }, 0.0),
        Domain::Interval(-HALF, HALF),
        Decay::Compact,
    );
    let mut cuts = vec![-HALF, HALF];
    cuts.extend([x - HALF, x + HALF].into_iter().filter(|t| t.abs() < HALF));
    cuts.sort_by(f64::total_cmp);
    let mut total = 0.0;
    for w in cuts.windows(2) {
        match integrate(&f, Domain::Interval(w[0], w[1]), 1e-13) {
            Ok(r) => total += r.value.re,
            Err(_) => return f64::NAN,
        }
    }
    total
}

/// Overlap `prod_k int sqrt(h(y) h(y - x_k)) dy` of the canonical cube with
/// its translate by `x`.
pub fn kakutani_overlap(x: &SequenceSpec, tol: f64) -> Result<KakutaniReport, CylinderError> {
    let ws = overlap_spec(x, 0)?;
    let certificate = classify_allowing_zeros(&ws, tol)?;
    let overlap = certificate.value().map(|v| v.re).unwrap_or(0.0);
    let cross_checks = (1..=x.prefix.len().min(10))
        .map(|k| (ws.term(k).re, overlap_by_quadrature(x.term(k).re)))
        .collect();
    Ok(KakutaniReport { certificate, overlap, cross_checks })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(x: f64) -> Complex64 {
        Complex64::new(x, 0.0)
    }

    fn line(lo: f64, hi: f64) -> CylinderSet {
        CylinderSet::new(1, vec![Box::new(vec![(lo, hi)])]).unwrap()
    }

    #[test]
    fn measures() {
        assert_eq!(measure(&CylinderSet::canonical()).unwrap(), 1.0);
        let a = CylinderSet::new(2, vec![Box::new(vec![(0.0, 2.0), (-1.0, 1.0)])]).unwrap();
        assert_eq!(measure(&a).unwrap(), 4.0);
        assert_eq!(measure(&CylinderSet::empty(3)).unwrap(), 0.0);
    }

    #[test]
    fn overlapping_rejected_shared_face_allowed() {
        let bad = CylinderSet::new(1, vec![Box::new(vec![(0.0, 1.0)]), Box::new(vec![(0.5, 2.0)])]);
        assert_eq!(bad, Err(CylinderError::OverlappingBoxes(0, 1)));
        assert!(CylinderSet::new(1, vec![Box::new(vec![(0.0, 1.0)]), Box::new(vec![(1.0, 2.0)])]).is_ok());
    }

    #[test]
    fn one_dimensional_algebra() {
        let a = line(0.0, 1.0);
        let b = line(0.5, 1.5);
        assert_eq!(measure(&algebra(&a, &b, SetOp::Intersection).unwrap()).unwrap(), 0.5);
        assert_eq!(measure(&algebra(&a, &b, SetOp::Union).unwrap()).unwrap(), 1.5);
        assert_eq!(measure(&algebra(&a, &a, SetOp::Union).unwrap()).unwrap(), 1.0);
        assert_eq!(measure(&algebra(&a, &b, SetOp::Difference).unwrap()).unwrap(), 0.5);
    }

    #[test]
    fn promotion_against_grid_oracle() {
        let a = CylinderSet::new(2, vec![Box::new(vec![(0.0, 1.0), (0.0, 1.0)])]).unwrap();
        let b = line(0.0, 1.0);
        let i = algebra(&a, &b, SetOp::Intersection).unwrap();
        let got = measure(&i).unwrap();
        // Midpoint grid at spacing 1e-3 over [0,1]^2; second factor of B is [-1/2,1/2].
        let h = 1e-3;
        let mut count = 0usize;
        for i in 0..1000 {
            for j in 0..1000 {
                let (x, y) = ((i as f64 + 0.5) * h, (j as f64 + 0.5) * h);
                if (0.0..=1.0).contains(&x) && (-0.5..=0.5).contains(&y) {
                    count += 1;
                }
            }
        }
        let oracle = count as f64 * h * h;
        assert!((got - oracle).abs() < 1e-9);
        assert_eq!(got, 0.5);
    }

    #[test]
    fn complement_needs_bound() {
        let a = line(0.0, 1.0);
        assert_eq!(complement(&a, None), Err(CylinderError::UnboundedComplement));
        let bound = line(-1.0, 2.0);
        assert_eq!(measure(&complement(&a, Some(&bound)).unwrap()).unwrap(), 2.0);
    }

    #[test]
    fn translations() {
        let zero = translate(&CylinderSet::canonical(), &SequenceSpec::zero(), 1e-10).unwrap();
        assert!(zero.admissible);
        assert_eq!(zero.translated_measure, 1.0);
        let g = translate(&CylinderSet::canonical(), &SequenceSpec::geometric(c(1.0), c(0.5)), 1e-10).unwrap();
        assert!(g.admissible);
        assert!((g.translated_measure - 0.288788).abs() < 1e-6);
        let h = translate(&CylinderSet::canonical(), &SequenceSpec::power_law(c(1.0), 1.0), 1e-10).unwrap();
        assert!(!h.admissible);
        assert_eq!(h.translated_measure, 0.0);
    }

    #[test]
    fn kakutani_examples() {
        let x = SequenceSpec::zero().with_prefix(vec![c(0.3), c(0.1)]);
        let r = kakutani_overlap(&x, 1e-10).unwrap();
        assert!((r.overlap - 0.63).abs() < 1e-15);
        for (closed, quad) in &r.cross_checks {
            assert!((closed - quad).abs() < 1e-10);
        }
        let big = SequenceSpec::zero().with_prefix(vec![c(0.2), c(-1.5)]);
        assert_eq!(kakutani_overlap(&big, 1e-10).unwrap().overlap, 0.0);
        let t = SequenceSpec::power_law(c(1.0), 2.0).with_prefix(vec![c(0.5)]);
        let r = kakutani_overlap(&t, 1e-10).unwrap();
        assert!((r.overlap - 0.25).abs() < 1e-9, "{}", r.overlap);
    }
}
