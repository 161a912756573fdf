//! Command-line surface over `infdim`. Each subcommand reads structured-text
//! inputs (inline, or `@path` to read a file) and prints a flat report.

use std::fmt::Display;

use clap::{Parser, Subcommand, ValueEnum};
use infdim::cylinder_measure::{self as cyl, CylinderSet, SetOp};
use infdim::fourier_analysis as fa;
use infdim::gaussian_measures as gm;
use infdim::operator_semigroups as ops;
use infdim::pde_examples as pde;
use infdim::product_engine::{classify_allowing_zeros, classify_product, SequenceSpec};
use infdim::sequence_spaces::{self as seq, Basis, BasisSpec, CoefficientVector, Space};
use infdim::tensor_states::{self as ts, FactorFunction, PhaseVerdict, ProductVector};
use infdim::text::{self, ParseError, Report};
use infdim::Complex64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Output {
    Human,
    Machine,
}

#[derive(Debug, Parser)]
#[command(name = "infdim", version, about = "Certified computations on eventually canonical infinite-dimensional objects")]
pub struct Cli {
    /// Target accuracy for products and quadrature.
    #[arg(long, global = true, default_value_t = 1e-8)]
    pub tol: f64,
    #[arg(long, global = true, value_enum, default_value_t = Output::Human)]
    pub output: Output,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum AlgebraOp {
    Union,
    Intersection,
    Difference,
    Complement,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Classify the infinite product of a sequence.
    ClassifyProduct {
        #[arg(long, allow_hyphen_values = true)]
        tail: String,
        /// Report a zero term as a divergent product with value 0.
        #[arg(long)]
        allow_zeros: bool,
    },
    /// Lebesgue measure of a cylinder set.
    Measure {
        #[arg(long, allow_hyphen_values = true)]
        cylinder: String,
    },
    /// Union, intersection, difference or bounded complement of cylinders.
    SetAlgebra {
        #[arg(long, allow_hyphen_values = true)]
        a: String,
        /// Second operand; the bounding set for `complement`.
        #[arg(long, allow_hyphen_values = true)]
        b: Option<String>,
        #[arg(long, value_enum)]
        op: AlgebraOp,
    },
    /// Translate a cylinder by a real sequence.
    Translate {
        #[arg(long, allow_hyphen_values = true)]
        cylinder: String,
        #[arg(long, allow_hyphen_values = true)]
        vector: String,
    },
    /// Overlap product of the canonical tail with its translate.
    Kakutani {
        #[arg(long, allow_hyphen_values = true)]
        vector: String,
    },
    /// Strong and weak equivalence of two product vectors.
    Equivalence {
        #[arg(long, allow_hyphen_values = true)]
        g: String,
        #[arg(long, allow_hyphen_values = true)]
        h: String,
    },
    /// Inner product of two product vectors.
    TensorInner {
        #[arg(long, allow_hyphen_values = true)]
        g: String,
        #[arg(long, allow_hyphen_values = true)]
        h: String,
    },
    /// Multiply the factors of a product vector by unit phases.
    Phase {
        #[arg(long, allow_hyphen_values = true)]
        z: String,
        #[arg(long, allow_hyphen_values = true)]
        g: String,
    },
    /// Membership of a sequence in l^p or c0.
    LpTest {
        #[arg(long, allow_hyphen_values = true)]
        x: String,
        /// Exponent, `inf`, or `c0`.
        #[arg(long, allow_hyphen_values = true)]
        p: String,
    },
    /// Basis constant estimate of a coefficient vector.
    BiNorm {
        #[arg(long, allow_hyphen_values = true)]
        x: String,
        /// `lp:P` or `c0`.
        #[arg(long, allow_hyphen_values = true, default_value = "lp:2")]
        space: String,
        /// `standard` or `halved`.
        #[arg(long, allow_hyphen_values = true, default_value = "standard")]
        basis: String,
        #[arg(long, allow_hyphen_values = true, default_value_t = 1000)]
        k: usize,
    },
    /// Chebyshev lower bound for a Gaussian measure of a symmetric box.
    Chebyshev {
        #[arg(long, allow_hyphen_values = true)]
        sigma2: String,
        #[arg(long, allow_hyphen_values = true)]
        l: f64,
    },
    /// Full-measure criterion for a weighted box.
    FullMeasure {
        #[arg(long, allow_hyphen_values = true)]
        sigma2: String,
        #[arg(long, allow_hyphen_values = true)]
        x: String,
    },
    /// Standard Gaussian density, or a general one given mean and covariance.
    Density {
        #[arg(long, allow_hyphen_values = true)]
        x: String,
        #[arg(long, allow_hyphen_values = true)]
        mean: Option<String>,
        /// Covariance as `n:entries` in row-major order.
        #[arg(long, allow_hyphen_values = true)]
        cov: Option<String>,
    },
    /// Rotation invariance of the Gaussian measure on random boxes.
    RotationCheck {
        #[arg(long, allow_hyphen_values = true)]
        n: usize,
        #[arg(long, allow_hyphen_values = true, default_value_t = 20)]
        trials: usize,
        #[arg(long, allow_hyphen_values = true)]
        seed: u64,
    },
    /// Fourier transform of a factor function at given frequencies.
    Fourier {
        #[arg(long, allow_hyphen_values = true)]
        factor: String,
        /// Comma-separated frequencies.
        #[arg(long, allow_hyphen_values = true)]
        xi: String,
        /// Also invert the transform numerically at the same points.
        #[arg(long)]
        inverse: bool,
    },
    /// Plancherel identity over the first `k` factors.
    Plancherel {
        #[arg(long, allow_hyphen_values = true)]
        g: String,
        #[arg(long, allow_hyphen_values = true)]
        k: usize,
    },
    /// Convolution of two factor functions and the convolution theorem.
    Convolve {
        #[arg(long, allow_hyphen_values = true)]
        f: String,
        #[arg(long, allow_hyphen_values = true)]
        g: String,
        #[arg(long, allow_hyphen_values = true)]
        x: Option<String>,
        #[arg(long, allow_hyphen_values = true)]
        xi: Option<String>,
    },
    /// Young's inequality over the first `k` factors.
    Young {
        #[arg(long, allow_hyphen_values = true)]
        f: String,
        #[arg(long, allow_hyphen_values = true)]
        g: String,
        #[arg(long, allow_hyphen_values = true)]
        p: f64,
        #[arg(long, allow_hyphen_values = true)]
        q: f64,
        #[arg(long, allow_hyphen_values = true)]
        k: usize,
    },
    /// Reed series for strong convergence of the operator sum.
    Scs {
        #[arg(long, allow_hyphen_values = true)]
        family: String,
        #[arg(long, allow_hyphen_values = true)]
        g: String,
    },
    /// Strong convergence of the operator product.
    Scp {
        #[arg(long, allow_hyphen_values = true)]
        family: String,
        #[arg(long, allow_hyphen_values = true)]
        g: String,
    },
    /// Apply the first `n` semigroup factors at time `t`.
    Semigroup {
        #[arg(long, allow_hyphen_values = true)]
        family: String,
        #[arg(long, allow_hyphen_values = true)]
        g: String,
        #[arg(long, allow_hyphen_values = true)]
        t: f64,
        #[arg(long, allow_hyphen_values = true)]
        n: usize,
        /// Also check `S(t + s) = S(t) S(s)`.
        #[arg(long, allow_hyphen_values = true)]
        s: Option<f64>,
    },
    /// Contraction gap between two truncations against its bound.
    Gap {
        #[arg(long, allow_hyphen_values = true)]
        family: String,
        #[arg(long, allow_hyphen_values = true)]
        g: String,
        #[arg(long, allow_hyphen_values = true)]
        t: f64,
        #[arg(long, allow_hyphen_values = true)]
        n: usize,
        #[arg(long, allow_hyphen_values = true)]
        m: usize,
    },
    /// The generalized exponential integral and its closed form.
    Hbar {
        #[arg(long, allow_hyphen_values = true)]
        a: f64,
        #[arg(long, allow_hyphen_values = true)]
        x: String,
        #[arg(long, allow_hyphen_values = true, default_value_t = 1e-4)]
        step: f64,
    },
    /// Mollified exponential factor.
    Xi {
        #[arg(long, allow_hyphen_values = true)]
        eps: f64,
    },
    /// Differentiate the first `n` factors of a vector with exponential tail.
    Dinfty {
        #[arg(long, allow_hyphen_values = true)]
        g: String,
        #[arg(long, allow_hyphen_values = true)]
        n: usize,
    },
    /// Truncated elliptic operator on a product test function.
    Laplacian {
        /// `natural`, `ou:b1,b2,...` or `umemura:c`.
        #[arg(long, allow_hyphen_values = true)]
        op: String,
        #[arg(long, allow_hyphen_values = true)]
        f: String,
        #[arg(long, allow_hyphen_values = true)]
        x: String,
        #[arg(long, allow_hyphen_values = true, default_value_t = 1e-3)]
        h: f64,
    },
    /// Stationary density for randomly forced flow modes.
    Thompson {
        #[arg(long, allow_hyphen_values = true)]
        coeffs: String,
        #[arg(long, allow_hyphen_values = true)]
        x: String,
        #[arg(long)]
        check_normalization: bool,
    },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Outcome {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

struct Failure(String);

impl From<ParseError> for Failure {
    fn from(e: ParseError) -> Self {
        Failure(e.to_string())
    }
}

fn fail(e: impl Display) -> Failure {
    Failure(e.to_string())
}

/// Inline text, or the contents of a file for `@path`.
fn load(name: &str, v: &str) -> Result<String, Failure> {
    match v.strip_prefix('@') {
        Some(path) => std::fs::read_to_string(path).map_err(|e| Failure(format!("--{name}: cannot read {path}: {e}"))),
        None => Ok(v.to_string()),
    }
}

fn with_input<T>(name: &str, v: &str, parse: impl Fn(&str) -> Result<T, ParseError>) -> Result<T, Failure> {
    parse(&load(name, v)?).map_err(|e| Failure(format!("--{name}: {e}")))
}

fn reals(name: &str, v: &str) -> Result<Vec<f64>, Failure> {
    let s = load(name, v)?;
    text::parse_reals(s.trim()).map_err(|m| Failure(format!("--{name}: line 1, field `{name}`: {m}")))
}

fn spec(name: &str, v: &str) -> Result<SequenceSpec, Failure> {
    with_input(name, v, text::parse_spec)
}

fn vector(name: &str, v: &str) -> Result<ProductVector, Failure> {
    with_input(name, v, text::parse_vector)
}

fn factor(name: &str, v: &str) -> Result<FactorFunction, Failure> {
    let s = load(name, v)?;
    text::parse_factor(s.trim()).map_err(|m| Failure(format!("--{name}: line 1, field `{name}`: {m}")))
}

fn cylinder(name: &str, v: &str) -> Result<CylinderSet, Failure> {
    with_input(name, v, text::parse_cylinder)
}

struct Render {
    report: Report,
    violated: bool,
}

impl From<Report> for Render {
    fn from(report: Report) -> Self {
        Render { report, violated: false }
    }
}

fn space_of(s: &str) -> Result<Space, Failure> {
    if s == "c0" {
        return Ok(Space::C0);
    }
    let p = s.strip_prefix("lp:").ok_or_else(|| Failure(format!("--space: expected `lp:P` or `c0`, got `{s}`")))?;
    Ok(Space::EllP(text::parse_real(p).map_err(|m| Failure(format!("--space: {m}")))?))
}

fn operator_of(s: &str) -> Result<pde::EllipticOperator, Failure> {
    if s == "natural" {
        return Ok(pde::EllipticOperator::NaturalLaplacian);
    }
    if let Some(b) = s.strip_prefix("ou:") {
        return Ok(pde::EllipticOperator::OrnsteinUhlenbeck(reals("op", b)?));
    }
    if let Some(c) = s.strip_prefix("umemura:") {
        return Ok(pde::EllipticOperator::Umemura(text::parse_real(c).map_err(|m| Failure(format!("--op: {m}")))?));
    }
    Err(Failure(format!("--op: unknown operator `{s}`")))
}

fn execute(cmd: &Command, tol: f64) -> Result<Render, Failure> {
    let mut r = Report::new();
    match cmd {
        Command::ClassifyProduct { tail, allow_zeros } => {
            let z = spec("tail", tail)?;
            let cert = if *allow_zeros { classify_allowing_zeros(&z, tol) } else { classify_product(&z, tol) }.map_err(fail)?;
            r.text("spec", text::fmt_spec(&z)).certificate("", &cert);
        }
        Command::Measure { cylinder: c } => {
            let a = cylinder("cylinder", c)?;
            r.text("cylinder", text::fmt_cylinder(&a)).real("measure", cyl::measure(&a).map_err(fail)?);
        }
        Command::SetAlgebra { a, b, op } => {
            let a = cylinder("a", a)?;
            let b = b.as_deref().map(|s| cylinder("b", s)).transpose()?;
            let result = match (op, &b) {
                (AlgebraOp::Complement, bound) => cyl::complement(&a, bound.as_ref()),
                (_, None) => return Err(Failure("--b: required for this operation".into())),
                (AlgebraOp::Union, Some(b)) => cyl::algebra(&a, b, SetOp::Union),
                (AlgebraOp::Intersection, Some(b)) => cyl::algebra(&a, b, SetOp::Intersection),
                (AlgebraOp::Difference, Some(b)) => cyl::algebra(&a, b, SetOp::Difference),
            }
            .map_err(fail)?;
            r.text("result", text::fmt_cylinder(&result)).real("measure", cyl::measure(&result).map_err(fail)?);
        }
        Command::Translate { cylinder: c, vector: v } => {
            let a = cylinder("cylinder", c)?;
            let x = spec("vector", v)?;
            let t = cyl::translate(&a, &x, tol).map_err(fail)?;
            r.text("vector", text::fmt_spec(&t.vector))
                .flag("admissible", t.admissible)
                .real("translated_measure", t.translated_measure);
            match t.shifted_tail_measure {
                Some(m) => r.real("shifted_tail_measure", m),
                None => r.text("shifted_tail_measure", "none"),
            };
            r.certificate("tail_factor", &t.tail_factor);
        }
        Command::Kakutani { vector: v } => {
            let x = spec("vector", v)?;
            let k = cyl::kakutani_overlap(&x, tol).map_err(fail)?;
            r.real("overlap", k.overlap).flag("positive", k.overlap > 0.0);
            for (i, (closed, quad)) in k.cross_checks.iter().enumerate() {
                r.real(format!("check.{}.closed_form", i + 1), *closed)
                    .real(format!("check.{}.quadrature", i + 1), *quad);
            }
            r.certificate("product", &k.certificate);
        }
        Command::Equivalence { g, h } => {
            let (g, h) = (vector("g", g)?, vector("h", h)?);
            let e = ts::classify_equivalence(&g, &h).map_err(fail)?;
            r.text("relation", e.relation.name()).series("strong", &e.strong).series("weak", &e.weak);
        }
        Command::TensorInner { g, h } => {
            let (g, h) = (vector("g", g)?, vector("h", h)?);
            r.certificate("", &ts::tensor_inner(&g, &h, tol).map_err(fail)?);
        }
        Command::Phase { z, g } => {
            let z = spec("z", z)?;
            let g = vector("g", g)?;
            let p = ts::apply_phase(&z, &g, tol).map_err(fail)?;
            r.text("vector", text::fmt_vector(&p.vector));
            match p.verdict {
                PhaseVerdict::SameStrongClass(v) => r.text("verdict", "SameStrongClass").complex("multiplier", v),
                PhaseVerdict::MovedToOrthogonalClass => r.text("verdict", "MovedToOrthogonalClass"),
            };
            r.flag("weak_class_preserved", p.weak_class_preserved);
        }
        Command::LpTest { x, p } => {
            let x = spec("x", x)?;
            let m = if p == "c0" {
                seq::c0_membership(&x)
            } else {
                seq::lp_membership(&x, text::parse_real(p).map_err(|m| Failure(format!("--p: {m}")))?)
            };
            r.text("space", if p == "c0" { "c0".to_string() } else { format!("l{p}") }).text("membership", m.name());
        }
        Command::BiNorm { x, space, basis, k } => {
            let coeffs = spec("x", x)?;
            let basis = match basis.as_str() {
                "standard" => Basis::StandardUnitVectors,
                "halved" => Basis::HalvedAbsolute,
                other => return Err(Failure(format!("--basis: unknown basis `{other}`"))),
            };
            let v = CoefficientVector { coeffs, basis: BasisSpec { space: space_of(space)?, basis } };
            let b = seq::bi_norm(&v, *k);
            r.real("value", b.value).int("attained_at", b.attained_at).flag("monotone", b.monotone);
        }
        Command::Chebyshev { sigma2, l } => {
            let s = gm::VarianceSpec::new(spec("sigma2", sigma2)?).map_err(fail)?;
            r.real("l", *l).certificate("", &gm::chebyshev_box_bound(&s, *l, tol).map_err(fail)?);
        }
        Command::FullMeasure { sigma2, x } => {
            let s = gm::VarianceSpec::new(spec("sigma2", sigma2)?).map_err(fail)?;
            let f = gm::full_measure_criterion(&s, &spec("x", x)?, tol).map_err(fail)?;
            r.text("verdict", f.verdict.name())
                .text("x_in_l1", f.x_in_l1.name())
                .text("ratio_summable", f.ratio_summable.name());
            if let Some(c) = &f.product {
                r.certificate("product", c);
            }
        }
        Command::Density { x, mean, cov } => {
            let x = reals("x", x)?;
            let d = gm::gaussian_density(&x);
            r.int("dim", d.truncation_dim).real("standard", d.value);
            if let Some(q) = cov {
                let q = text::parse_real_matrix(&load("cov", q)?).map_err(|m| Failure(format!("--cov: {m}")))?;
                let m = match mean {
                    Some(m) => reals("mean", m)?,
                    None => vec![0.0; x.len()],
                };
                r.real("covariance", gm::covariance_density(&x, &m, &q).map_err(fail)?);
            }
        }
        Command::RotationCheck { n, trials, seed } => {
            let dev = gm::rotation_invariance_check(*n, *trials, *seed).map_err(fail)?;
            r.int("n", *n).int("trials", *trials).int("seed", *seed as i64).real("max_deviation", dev);
        }
        Command::Fourier { factor: f, xi, inverse } => {
            let f = factor("factor", f)?;
            let t = fa::TransformedFactor::new(f.clone());
            r.text("factor", text::fmt_factor(&f));
            for (i, x) in reals("xi", xi)?.into_iter().enumerate() {
                r.real(format!("xi.{}", i + 1), x).complex(format!("value.{}", i + 1), t.eval(x).map_err(fail)?);
                if *inverse {
                    r.complex(format!("inverse.{}", i + 1), fa::inverse_fourier(&t, x, tol).map_err(fail)?)
                        .complex(format!("source.{}", i + 1), f.eval(x));
                }
            }
        }
        Command::Plancherel { g, k } => {
            let p = fa::plancherel_check(&vector("g", g)?, *k, tol).map_err(fail)?;
            r.real("lhs", p.lhs).real("rhs", p.rhs).real("gap", p.gap);
        }
        Command::Convolve { f, g, x, xi } => {
            let (f, g) = (factor("f", f)?, factor("g", g)?);
            if let Some(x) = x {
                for (i, t) in reals("x", x)?.into_iter().enumerate() {
                    r.real(format!("x.{}", i + 1), t)
                        .complex(format!("conv.{}", i + 1), fa::convolve_factor(&f, &g, t).map_err(fail)?);
                }
            }
            if let Some(xi) = xi {
                for (i, s) in reals("xi", xi)?.into_iter().enumerate() {
                    let lhs = fa::fourier_of_convolution(&f, &g, s, tol).map_err(fail)?;
                    let rhs = fa::fourier_factor(&f, s).map_err(fail)? * fa::fourier_factor(&g, s).map_err(fail)?;
                    r.real(format!("xi.{}", i + 1), s)
                        .complex(format!("transform.{}", i + 1), lhs)
                        .complex(format!("product.{}", i + 1), rhs)
                        .real(format!("gap.{}", i + 1), (lhs - rhs).norm());
                }
            }
        }
        Command::Young { f, g, p, q, k } => {
            let y = fa::young_check(&vector("f", f)?, &vector("g", g)?, *p, *q, *k, tol).map_err(fail)?;
            r.real("r", y.r).real("lhs", y.lhs).real("rhs", y.rhs).flag("holds", y.holds);
            return Ok(Render { report: r, violated: !y.holds });
        }
        Command::Scs { family, g } | Command::Scp { family, g } => {
            let fam = with_input("family", family, text::parse_family)?;
            let v = with_input("g", g, text::parse_fd_vector)?;
            let rep = if matches!(cmd, Command::Scs { .. }) {
                ops::certify_scs(&fam, &v)
            } else {
                ops::certify_scp(&fam, &v, tol)
            }
            .map_err(fail)?;
            r.flag("scs_certified", rep.scs_certified)
                .flag("scp_certified", rep.scp_certified)
                .series("reed_sum_1", &rep.reed_sum_1)
                .series("reed_sum_2", &rep.reed_sum_2);
            if let Some(d) = &rep.direction_series {
                r.series("direction_series", d);
            }
            if let Some(c) = &rep.norm_product {
                r.certificate("norm_product", c);
            }
        }
        Command::Semigroup { family, g, t, n, s } => {
            let fam = with_input("family", family, text::parse_family)?;
            let v = with_input("g", g, text::parse_fd_vector)?;
            let out = ops::semigroup_apply(&fam, *t, &v, *n).map_err(fail)?;
            r.text("result", text::fmt_fd_vector(&out));
            for (k, u) in out.prefix.iter().enumerate() {
                r.real(format!("norm.{}", k + 1), u.norm());
            }
            if let Some(s) = s {
                let joint = ops::semigroup_apply(&fam, t + s, &v, *n).map_err(fail)?;
                let inner = ops::semigroup_apply(&fam, *s, &v, *n).map_err(fail)?;
                let composed = ops::semigroup_apply(&fam, *t, &inner, *n).map_err(fail)?;
                let law = joint.prefix.iter().zip(&composed.prefix).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
                r.real("law_gap", law);
            }
        }
        Command::Gap { family, g, t, n, m } => {
            let fam = with_input("family", family, text::parse_family)?;
            let v = with_input("g", g, text::parse_fd_vector)?;
            let gap = ops::contraction_gap(&fam, *t, &v, *n, *m).map_err(fail)?;
            let nd: Vec<String> = gap.non_dissipative.iter().map(|k| k.to_string()).collect();
            r.real("gap", gap.gap)
                .real("bound", gap.bound)
                .flag("holds", gap.holds())
                .text("non_dissipative", if nd.is_empty() { "none".to_string() } else { nd.join(",") });
            return Ok(Render { report: r, violated: !gap.holds() });
        }
        Command::Hbar { a, x, step } => {
            let h = pde::HBarSpec::new(*a).map_err(fail)?;
            r.real("a", *a).real("half_width", h.half_width());
            for (i, t) in reals("x", x)?.into_iter().enumerate() {
                let v = pde::hbar_eval(&h, t, tol).map_err(fail)?;
                let c = pde::hbar_closed_form(&h, t);
                r.real(format!("x.{}", i + 1), t)
                    .complex(format!("value.{}", i + 1), v)
                    .complex(format!("closed_form.{}", i + 1), c)
                    .real(format!("ode_residual.{}", i + 1), pde::hbar_ode_residual(&h, t, *step).map_err(fail)?);
            }
        }
        Command::Xi { eps } => {
            let x = pde::xi_build(*eps).map_err(fail)?;
            r.text("factor", text::fmt_factor(&x.factor))
                .real("norm", x.factor.norm())
                .real("alpha", x.alpha)
                .real("mollifier_norm", x.mollifier_norm)
                .text("unit", text::fmt_factor(&x.unit()));
        }
        Command::Dinfty { g, n } => {
            let out = pde::dinfty_apply(&vector("g", g)?, *n).map_err(fail)?;
            r.text("result", text::fmt_vector(&out));
            for (k, f) in out.explicit.iter().enumerate() {
                r.real(format!("norm.{}", k + 1), f.norm());
            }
        }
        Command::Laplacian { op, f, x, h } => {
            let op = operator_of(op)?;
            let tf = with_input("f", f, text::parse_test_function)?;
            let x = reals("x", x)?;
            let exact = pde::laplacian_truncated(&op, &tf, &x).map_err(fail)?;
            let fd = pde::laplacian_fd(&op, &tf, &x, *h).map_err(fail)?;
            r.real("value", exact).real("finite_difference", fd).real("gap", (exact - fd).abs());
        }
        Command::Thompson { coeffs, x, check_normalization } => {
            let c = with_input("coeffs", coeffs, text::parse_thompson)?;
            let t = pde::thompson_equilibrium(&c, &reals("x", x)?).map_err(fail)?;
            r.real("density", t.density)
                .real("viscous_plus_diffusion_residual", t.viscous_plus_diffusion_residual)
                .real("advective_term", t.advective_term)
                .real("normalization", c.normalization());
            if *check_normalization {
                r.real("normalization_integral", pde::thompson_normalization_check(&c).map_err(fail)?);
            }
        }
    }
    Ok(r.into())
}

/// Runs one job. Exit code 0 on success, 2 when a checked property is
/// violated, 1 on usage or input errors.
pub fn run<I, S>(args: I) -> Outcome
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let out = e.render().to_string();
            return if code == 0 {
                Outcome { code, stdout: out, stderr: String::new() }
            } else {
                Outcome { code, stdout: String::new(), stderr: out }
            };
        }
    };
    if !(cli.tol > 0.0) {
        return Outcome { code: 1, stdout: String::new(), stderr: format!("error: --tol must be positive, got {}\n", cli.tol) };
    }
    match execute(&cli.command, cli.tol) {
        Ok(Render { report, violated }) => {
            let stdout = match cli.output {
                Output::Human => report.human(),
                Output::Machine => report.machine(),
            };
            Outcome { code: if violated { 2 } else { 0 }, stdout, stderr: String::new() }
        }
        Err(Failure(m)) => Outcome { code: 1, stdout: String::new(), stderr: format!("error: {m}\n") },
    }
}

/// Value of `key` in machine output.
pub fn machine_value<'a>(stdout: &'a str, key: &str) -> Option<&'a str> {
    stdout.lines().find_map(|l| l.split_once('=').filter(|(k, _)| *k == key).map(|(_, v)| v))
}

pub fn machine_complex(stdout: &str, key: &str) -> Option<Complex64> {
    machine_value(stdout, key).and_then(|v| text::parse_complex(v).ok())
}
