//! Structured text shared by the CLI: `key=value` fields separated by `;`
//! or newlines, canonical serializations of the domain types, and flat
//! key/value reports.
//!
//! Sequence tails use tags: `zero`, `const:c`, `geometric:a,r`,
//! `powerlaw:a,p`, `oneplus-<tail>` and `unitphase-<tail>`, where the
//! nested spec may carry an explicit prefix as `oneplus{z1,z2}-<tail>`.
//! Complex literals read `1`, `-2.5i` or `1e-3+2i`.

use std::fmt;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::cylinder_measure::{Box as CylBox, CylinderSet};
use crate::operator_semigroups::{CVector, FactorOperatorFamily, ProductVectorFD, TailOperator};
use crate::pde_examples::{PolyGauss, TestFunction, ThompsonCoeffs};
use crate::product_engine::{ConvergenceCertificate, SequenceSpec, SeriesBound, TailRule};
use crate::quadrature::CMatrix;
use crate::tensor_states::{FactorFunction, FactorKind, ProductVector, TailBase, TailFactor};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseError {
    pub field: String,
    pub line: usize,
    pub message: String,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}, field `{}`: {}", self.line, self.field, self.message)
    }
}

impl std::error::Error for ParseError {}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Field {
    /// Empty for a bare value without `key=`.
    pub key: String,
    pub value: String,
    pub line: usize,
}

impl Field {
    fn error(&self, message: impl Into<String>) -> ParseError {
        let field = if self.key.is_empty() { self.value.clone() } else { self.key.clone() };
        ParseError { field, line: self.line, message: message.into() }
    }
}

/// Splits `s` at top-level occurrences of `sep` (outside brackets).
fn split_top(s: &str, sep: char) -> Vec<&str> {
    let mut out = Vec::new();
    let (mut depth, mut start) = (0i32, 0);
    for (i, ch) in s.char_indices() {
        match ch {
            '(' | '{' | '[' => depth += 1,
            ')' | '}' | ']' => depth -= 1,
            c if c == sep && depth == 0 => {
                out.push(&s[start..i]);
                start = i + c.len_utf8();
            }
            _ => {}
        }
    }
    out.push(&s[start..]);
    out
}

fn find_top(s: &str, target: char) -> Option<usize> {
    let mut depth = 0i32;
    for (i, ch) in s.char_indices() {
        match ch {
            '(' | '{' | '[' => depth += 1,
            ')' | '}' | ']' => depth -= 1,
            c if c == target && depth == 0 => return Some(i),
            _ => {}
        }
    }
    None
}

pub fn fields(text: &str) -> Vec<Field> {
    let mut out = Vec::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("");
        for piece in split_top(line, ';') {
            let piece = piece.trim();
            if piece.is_empty() {
                continue;
            }
            let (key, value) = match find_top(piece, '=') {
                Some(i) => (piece[..i].trim().to_string(), piece[i + 1..].trim().to_string()),
                None => (String::new(), piece.to_string()),
            };
            out.push(Field { key, value, line: n + 1 });
        }
    }
    out
}

fn unparen(s: &str) -> &str {
    let t = s.trim();
    if t.starts_with('(') && t.ends_with(')') && find_top(&t[1..t.len() - 1], ')').is_none() {
        &t[1..t.len() - 1]
    } else {
        t
    }
}

/// Reals with 17 significant digits.
pub fn fmt_real(x: f64) -> String {
    if x == 0.0 {
        "0.0000000000000000e0".into()
    } else if x.is_finite() {
        format!("{x:.16e}")
    } else if x.is_nan() {
        "NaN".into()
    } else if x > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

/// Shortest representation that parses back to `x`.
pub fn fmt_num(x: f64) -> String {
    let s = format!("{x:?}");
    s.strip_suffix(".0").map(str::to_string).unwrap_or(s)
}

pub fn parse_real(s: &str) -> Result<f64, String> {
    let t = s.trim();
    t.parse::<f64>().map_err(|_| format!("`{t}` is not a real number"))
}

fn parse_usize(s: &str) -> Result<usize, String> {
    let t = s.trim();
    t.parse::<usize>().map_err(|_| format!("`{t}` is not a nonnegative integer"))
}

pub fn fmt_complex(z: Complex64) -> String {
    if z.im == 0.0 {
        fmt_num(z.re)
    } else if z.re == 0.0 {
        format!("{}i", fmt_num(z.im))
    } else if z.im < 0.0 || (z.im == 0.0 && z.im.is_sign_negative()) {
        format!("{}-{}i", fmt_num(z.re), fmt_num(-z.im))
    } else {
        format!("{}+{}i", fmt_num(z.re), fmt_num(z.im))
    }
}

/// Complex with both parts at 17 significant digits.
pub fn fmt_complex_full(z: Complex64) -> String {
    let sign = if z.im < 0.0 { '-' } else { '+' };
    format!("{}{sign}{}i", fmt_real(z.re), fmt_real(z.im.abs()))
}

pub fn parse_complex(s: &str) -> Result<Complex64, String> {
    let t: String = s.chars().filter(|c| !c.is_whitespace()).collect();
    let bad = || format!("`{t}` is not a complex number");
    if t.is_empty() {
        return Err(bad());
    }
    let Some(body) = t.strip_suffix('i') else {
        return Ok(Complex64::new(parse_real(&t).map_err(|_| bad())?, 0.0));
    };
    let bytes = body.as_bytes();
    let split = (1..bytes.len())
        .rev()
        .find(|&i| (bytes[i] == b'+' || bytes[i] == b'-') && !matches!(bytes[i - 1], b'e' | b'E'));
    let imag = |s: &str| -> Result<f64, String> {
        match s {
            "" | "+" => Ok(1.0),
            "-" => Ok(-1.0),
            _ => parse_real(s).map_err(|_| bad()),
        }
    };
    match split {
        Some(i) => Ok(Complex64::new(parse_real(&body[..i]).map_err(|_| bad())?, imag(&body[i..])?)),
        None => Ok(Complex64::new(0.0, imag(body)?)),
    }
}

fn parse_list<T>(s: &str, item: impl Fn(&str) -> Result<T, String>) -> Result<Vec<T>, String> {
    if s.trim().is_empty() {
        return Ok(Vec::new());
    }
    s.split(',').map(item).collect()
}

fn join<T>(v: &[T], f: impl Fn(&T) -> String) -> String {
    v.iter().map(f).collect::<Vec<_>>().join(",")
}

pub fn fmt_tail(rule: &TailRule) -> String {
    match rule {
        TailRule::Zero => "zero".into(),
        TailRule::Constant(v) => format!("const:{}", fmt_complex(*v)),
        TailRule::Geometric { a, r } => format!("geometric:{},{}", fmt_complex(*a), fmt_complex(*r)),
        TailRule::PowerLaw { a, p } => format!("powerlaw:{},{}", fmt_complex(*a), fmt_num(*p)),
        TailRule::OnePlus(s) => format!("oneplus{}", fmt_nested(s)),
        TailRule::UnitPhase(s) => format!("unitphase{}", fmt_nested(s)),
    }
}

fn fmt_nested(s: &SequenceSpec) -> String {
    if s.prefix.is_empty() {
        format!("-{}", fmt_tail(&s.tail))
    } else {
        format!("{{{}}}-{}", join(&s.prefix, |z| fmt_complex(*z)), fmt_tail(&s.tail))
    }
}

pub fn parse_tail(s: &str) -> Result<TailRule, String> {
    let s = s.trim();
    fn pair(r: &str) -> Result<(Complex64, &str), String> {
        let (a, b) = r.split_once(',').ok_or_else(|| format!("`{r}` needs two parameters"))?;
        Ok((parse_complex(a)?, b))
    }
    if s == "zero" {
        return Ok(TailRule::Zero);
    }
    if let Some(r) = s.strip_prefix("const:") {
        return Ok(TailRule::Constant(parse_complex(r)?));
    }
    if let Some(r) = s.strip_prefix("geometric:") {
        let (a, b) = pair(r)?;
        return Ok(TailRule::Geometric { a, r: parse_complex(b)? });
    }
    if let Some(r) = s.strip_prefix("powerlaw:") {
        let (a, b) = pair(r)?;
        return Ok(TailRule::PowerLaw { a, p: parse_real(b)? });
    }
    for (tag, is_phase) in [("oneplus", false), ("unitphase", true)] {
        let Some(rest) = s.strip_prefix(tag) else { continue };
        let (prefix, rest) = match rest.strip_prefix('{') {
            Some(r) => {
                let close = r.find('}').ok_or("unclosed `{` in nested prefix")?;
                (parse_list(&r[..close], parse_complex)?, &r[close + 1..])
            }
            None => (Vec::new(), rest),
        };
        let inner = rest.strip_prefix('-').ok_or_else(|| format!("`{tag}` must be followed by `-<tail>`"))?;
        let inner = SequenceSpec { prefix, tail: parse_tail(inner)? };
        return Ok(if is_phase { TailRule::UnitPhase(Box::new(inner)) } else { TailRule::OnePlus(Box::new(inner)) });
    }
    Err(format!("unknown tail `{s}`"))
}

/// `tail` alone when the prefix is empty, else `prefix=...; tail=...`.
pub fn fmt_spec(s: &SequenceSpec) -> String {
    if s.prefix.is_empty() {
        fmt_tail(&s.tail)
    } else {
        format!("prefix={}; tail={}", join(&s.prefix, |z| fmt_complex(*z)), fmt_tail(&s.tail))
    }
}

fn spec_from_fields(fs: &[Field], line: usize) -> Result<SequenceSpec, ParseError> {
    let mut prefix = Vec::new();
    let mut tail = None;
    let mut line = line;
    for f in fs {
        match f.key.as_str() {
            "prefix" => prefix = parse_list(&f.value, parse_complex).map_err(|m| f.error(m))?,
            "tail" | "" => {
                tail = Some(parse_tail(&f.value).map_err(|m| f.error(m))?);
                line = f.line;
            }
            _ => return Err(f.error("unexpected field in a sequence spec")),
        }
    }
    let tail = tail.ok_or(ParseError { field: "tail".into(), line, message: "missing".into() })?;
    SequenceSpec::new(prefix, tail).map_err(|e| ParseError { field: "tail".into(), line, message: e.to_string() })
}

pub fn parse_spec(text: &str) -> Result<SequenceSpec, ParseError> {
    spec_from_fields(&fields(text), 1)
}

/// Spec embedded in a field value, optionally parenthesized.
fn nested_spec(f: &Field) -> Result<SequenceSpec, ParseError> {
    let inner = fields(unparen(&f.value));
    spec_from_fields(&inner, f.line).map_err(|e| f.error(e.message))
}

pub fn fmt_cylinder(a: &CylinderSet) -> String {
    if *a == CylinderSet::canonical() {
        return "I0".into();
    }
    let mut s = format!("dim={}", a.dim);
    for b in &a.boxes {
        let coords: Vec<String> = b.intervals.iter().flat_map(|(lo, hi)| [fmt_num(*lo), fmt_num(*hi)]).collect();
        s.push_str(&format!("; box={}", coords.join(",")));
    }
    s
}

pub fn parse_cylinder(text: &str) -> Result<CylinderSet, ParseError> {
    let fs = fields(text);
    if let [f] = fs.as_slice() {
        if f.key.is_empty() && f.value == "I0" {
            return Ok(CylinderSet::canonical());
        }
    }
    let mut dim = None;
    let mut boxes = Vec::new();
    let mut last_line = 1;
    for f in &fs {
        last_line = f.line;
        match f.key.as_str() {
            "dim" => dim = Some(parse_usize(&f.value).map_err(|m| f.error(m))?),
            "box" => {
                let d = dim.ok_or_else(|| f.error("`dim` must come before `box`"))?;
                let v = parse_list(&f.value, parse_real).map_err(|m| f.error(m))?;
                if v.len() != 2 * d {
                    return Err(f.error(format!("expected {} bounds, got {}", 2 * d, v.len())));
                }
                if v.chunks(2).any(|p| !(p[0] <= p[1]) || !p[0].is_finite() || !p[1].is_finite()) {
                    return Err(f.error("each interval needs finite lo <= hi"));
                }
                boxes.push(CylBox::new(v.chunks(2).map(|p| (p[0], p[1])).collect()));
            }
            _ => return Err(f.error("unexpected field in a cylinder set")),
        }
    }
    let dim = dim.ok_or(ParseError { field: "dim".into(), line: last_line, message: "missing".into() })?;
    CylinderSet::new(dim, boxes).map_err(|e| ParseError { field: "box".into(), line: last_line, message: e.to_string() })
}

pub fn fmt_kind(k: &FactorKind) -> String {
    match k {
        FactorKind::IndicatorI => "indicator".into(),
        FactorKind::ScaledIndicator { lo, hi, height } => {
            format!("box:{},{},{}", fmt_num(*lo), fmt_num(*hi), fmt_num(*height))
        }
        FactorKind::Sinc => "sinc".into(),
        FactorKind::Gaussian { sigma, mean } => format!("gaussian:{},{}", fmt_num(*sigma), fmt_num(*mean)),
        FactorKind::HermiteGaussian { degree } => format!("hermite:{degree}"),
        FactorKind::XiExp { eps } => format!("xiexp:{}", fmt_num(*eps)),
        FactorKind::SampledGrid { lo, hi, values } => {
            format!("grid:{},{}:{}", fmt_num(*lo), fmt_num(*hi), join(values, |z| fmt_complex(*z)))
        }
        FactorKind::Derivative(b) => format!("d({})", fmt_kind(b)),
    }
}

pub fn parse_kind(s: &str) -> Result<FactorKind, String> {
    let s = s.trim();
    let nums = |r: &str, n: usize| -> Result<Vec<f64>, String> {
        let v = parse_list(r, parse_real)?;
        if v.len() == n {
            Ok(v)
        } else {
            Err(format!("`{s}` needs {n} parameters"))
        }
    };
    Ok(match s {
        "indicator" => FactorKind::IndicatorI,
        "sinc" => FactorKind::Sinc,
        _ if s.starts_with("d(") && s.ends_with(')') => FactorKind::Derivative(Box::new(parse_kind(&s[2..s.len() - 1])?)),
        _ => {
            let (tag, rest) = s.split_once(':').ok_or_else(|| format!("unknown factor `{s}`"))?;
            match tag {
                "box" => {
                    let v = nums(rest, 3)?;
                    FactorKind::ScaledIndicator { lo: v[0], hi: v[1], height: v[2] }
                }
                "gaussian" => {
                    let v = nums(rest, 2)?;
                    FactorKind::Gaussian { sigma: v[0], mean: v[1] }
                }
                "hermite" => FactorKind::HermiteGaussian {
                    degree: rest.trim().parse().map_err(|_| format!("bad hermite degree `{rest}`"))?,
                },
                "xiexp" => FactorKind::XiExp { eps: parse_real(rest)? },
                "grid" => {
                    let (range, values) = rest.split_once(':').ok_or("grid needs `lo,hi:values`")?;
                    let v = nums(range, 2)?;
                    FactorKind::SampledGrid { lo: v[0], hi: v[1], values: parse_list(values, parse_complex)? }
                }
                _ => return Err(format!("unknown factor `{s}`")),
            }
        }
    })
}

/// `kind` or `kind@scale`; `@unit` rescales to unit norm.
pub fn fmt_factor(f: &FactorFunction) -> String {
    if f.scale == Complex64::new(1.0, 0.0) {
        fmt_kind(&f.kind)
    } else {
        format!("{}@{}", fmt_kind(&f.kind), fmt_complex(f.scale))
    }
}

pub fn parse_factor(s: &str) -> Result<FactorFunction, String> {
    let (kind, scale) = match find_top(s, '@') {
        Some(i) => (&s[..i], Some(s[i + 1..].trim())),
        None => (s, None),
    };
    let kind = parse_kind(kind)?;
    match scale {
        None => FactorFunction::new(kind),
        Some("unit") => FactorFunction::new(kind).map(|f| f.normalized()),
        Some(z) => FactorFunction::scaled(kind, parse_complex(z)?),
    }
    .map_err(|e| e.to_string())
}

pub fn fmt_vector(v: &ProductVector) -> String {
    let mut parts: Vec<String> = v.explicit.iter().map(|f| format!("factor={}", fmt_factor(f))).collect();
    parts.push(match &v.tail.base {
        TailBase::Fixed(f) => format!("tail={}", fmt_factor(f)),
        TailBase::Shifted(x) => format!("tail=shift({})", fmt_spec(x)),
    });
    parts.extend(v.tail.phases.iter().map(|z| format!("phase=({})", fmt_spec(z))));
    if let Some(l) = &v.label {
        parts.push(format!("label={l}"));
    }
    parts.join("; ")
}

pub fn parse_vector(text: &str) -> Result<ProductVector, ParseError> {
    let fs = fields(text);
    let mut explicit = Vec::new();
    let mut tail = None;
    let mut phases = Vec::new();
    let mut label = None;
    let mut last_line = 1;
    for f in &fs {
        last_line = f.line;
        match f.key.as_str() {
            "factor" => explicit.push(parse_factor(&f.value).map_err(|m| f.error(m))?),
            "tail" => {
                let v = f.value.trim();
                tail = Some(if let Some(inner) = v.strip_prefix("shift") {
                    let g = Field { key: f.key.clone(), value: inner.to_string(), line: f.line };
                    TailBase::Shifted(nested_spec(&g)?)
                } else {
                    TailBase::Fixed(parse_factor(v).map_err(|m| f.error(m))?)
                });
            }
            "phase" => phases.push(nested_spec(f)?),
            "label" => label = Some(f.value.clone()),
            _ => return Err(f.error("unexpected field in a product vector")),
        }
    }
    let base = tail.ok_or(ParseError { field: "tail".into(), line: last_line, message: "missing".into() })?;
    let v = ProductVector { explicit, tail: TailFactor { base, phases }, label };
    v.validate().map_err(|e| ParseError { field: "tail".into(), line: last_line, message: e.to_string() })?;
    Ok(v)
}

pub fn fmt_cmatrix(a: &CMatrix) -> String {
    let entries: Vec<Complex64> = (0..a.nrows()).flat_map(|i| (0..a.ncols()).map(move |j| a[(i, j)])).collect();
    format!("{}:{}", a.nrows(), join(&entries, |z| fmt_complex(*z)))
}

/// `d:entries` for a square `d x d` matrix in row-major order.
pub fn parse_cmatrix(s: &str) -> Result<CMatrix, String> {
    let (d, rest) = s.split_once(':').ok_or("matrix needs `dim:entries`")?;
    let d = parse_usize(d)?;
    let v = parse_list(rest, parse_complex)?;
    if v.len() != d * d || d == 0 {
        return Err(format!("a {d}x{d} matrix needs {} entries, got {}", d * d, v.len()));
    }
    Ok(CMatrix::from_row_slice(d, d, &v))
}

pub fn parse_real_matrix(s: &str) -> Result<DMatrix<f64>, String> {
    let m = parse_cmatrix(s)?;
    if m.iter().any(|z| z.im != 0.0) {
        return Err("matrix must be real".into());
    }
    Ok(m.map(|z| z.re))
}

pub fn fmt_family(f: &FactorOperatorFamily) -> String {
    let mut parts: Vec<String> = f.ops.iter().map(|a| format!("op={}", fmt_cmatrix(a))).collect();
    match &f.tail {
        TailOperator::Zero => parts.push("tail=zero".into()),
        TailOperator::ScaledFixed { a, weights } => {
            parts.push(format!("tail={}", fmt_cmatrix(a)));
            parts.push(format!("weights=({})", fmt_spec(weights)));
        }
    }
    parts.join("; ")
}

pub fn parse_family(text: &str) -> Result<FactorOperatorFamily, ParseError> {
    let mut ops = Vec::new();
    let mut tail_op = None;
    let mut weights = None;
    let mut last_line = 1;
    for f in &fields(text) {
        last_line = f.line;
        match f.key.as_str() {
            "op" => ops.push(parse_cmatrix(&f.value).map_err(|m| f.error(m))?),
            "tail" if f.value.trim() == "zero" => tail_op = Some(None),
            "tail" => tail_op = Some(Some(parse_cmatrix(&f.value).map_err(|m| f.error(m))?)),
            "weights" => weights = Some(nested_spec(f)?),
            _ => return Err(f.error("unexpected field in an operator family")),
        }
    }
    let missing = |field: &str| ParseError { field: field.into(), line: last_line, message: "missing".into() };
    let tail = match tail_op.ok_or_else(|| missing("tail"))? {
        None => TailOperator::Zero,
        Some(a) => TailOperator::ScaledFixed { a, weights: weights.ok_or_else(|| missing("weights"))? },
    };
    FactorOperatorFamily::new(ops, tail)
        .map_err(|e| ParseError { field: "op".into(), line: last_line, message: e.to_string() })
}

fn fmt_cvector(v: &CVector) -> String {
    join(v.as_slice(), |z| fmt_complex(*z))
}

pub fn fmt_fd_vector(g: &ProductVectorFD) -> String {
    let mut parts: Vec<String> = g.prefix.iter().map(|v| format!("vec={}", fmt_cvector(v))).collect();
    parts.push(format!("tail={}", fmt_cvector(&g.tail)));
    parts.join("; ")
}

pub fn parse_fd_vector(text: &str) -> Result<ProductVectorFD, ParseError> {
    let mut prefix = Vec::new();
    let mut tail = None;
    let mut last_line = 1;
    let vec_of = |f: &Field| -> Result<CVector, ParseError> {
        let v = parse_list(&f.value, parse_complex).map_err(|m| f.error(m))?;
        if v.is_empty() {
            return Err(f.error("empty vector"));
        }
        Ok(CVector::from_vec(v))
    };
    for f in &fields(text) {
        last_line = f.line;
        match f.key.as_str() {
            "vec" => prefix.push(vec_of(f)?),
            "tail" => tail = Some(vec_of(f)?),
            _ => return Err(f.error("unexpected field in a factor vector")),
        }
    }
    let tail = tail.ok_or(ParseError { field: "tail".into(), line: last_line, message: "missing".into() })?;
    ProductVectorFD::new(prefix, tail)
        .map_err(|e| ParseError { field: "vec".into(), line: last_line, message: e.to_string() })
}

pub fn fmt_thompson(t: &ThompsonCoeffs) -> String {
    let mut parts = vec![
        format!("nu={}", fmt_num(t.nu)),
        format!("alpha={}", join(&t.alpha, |x| fmt_num(*x))),
        format!("mu={}", join(&t.mu, |x| fmt_num(*x))),
    ];
    for (i, j, k, v) in t.generators() {
        parts.push(format!("beta={i},{j},{k},{}", fmt_num(v)));
    }
    parts.join("; ")
}

pub fn parse_thompson(text: &str) -> Result<ThompsonCoeffs, ParseError> {
    let (mut alpha, mut mu, mut nu) = (None, None, None);
    let mut triples = Vec::new();
    let mut last_line = 1;
    for f in &fields(text) {
        last_line = f.line;
        match f.key.as_str() {
            "alpha" => alpha = Some(parse_list(&f.value, parse_real).map_err(|m| f.error(m))?),
            "mu" => mu = Some(parse_list(&f.value, parse_real).map_err(|m| f.error(m))?),
            "nu" => nu = Some(parse_real(&f.value).map_err(|m| f.error(m))?),
            "beta" => {
                let parts: Vec<&str> = f.value.split(',').collect();
                if parts.len() != 4 {
                    return Err(f.error("beta needs `i,j,k,value`"));
                }
                let idx = |s: &str| parse_usize(s).map_err(|m| f.error(m));
                let v = parse_real(parts[3]).map_err(|m| f.error(m))?;
                triples.push((idx(parts[0])?, idx(parts[1])?, idx(parts[2])?, v));
            }
            _ => return Err(f.error("unexpected field in Thompson coefficients")),
        }
    }
    let missing = |field: &str| ParseError { field: field.into(), line: last_line, message: "missing".into() };
    let alpha = alpha.ok_or_else(|| missing("alpha"))?;
    let mu = mu.ok_or_else(|| missing("mu"))?;
    let nu = nu.ok_or_else(|| missing("nu"))?;
    ThompsonCoeffs::from_triples(alpha, mu, nu, &triples)
        .map_err(|e| ParseError { field: "beta".into(), line: last_line, message: e.to_string() })
}

pub fn fmt_test_function(t: &TestFunction) -> String {
    let parts: Vec<String> = t
        .factors
        .iter()
        .map(|u| format!("u={}@{}", join(&u.coeffs, |x| fmt_num(*x)), fmt_num(u.width)))
        .collect();
    parts.join("; ")
}

/// Factors `u=c0,c1,...@width` for `(sum c_j x^j) exp(-width x^2)`.
pub fn parse_test_function(text: &str) -> Result<TestFunction, ParseError> {
    let mut factors = Vec::new();
    for f in &fields(text) {
        if f.key != "u" {
            return Err(f.error("unexpected field in a test function"));
        }
        let (coeffs, width) = match f.value.split_once('@') {
            Some((c, w)) => (c, parse_real(w).map_err(|m| f.error(m))?),
            None => (f.value.as_str(), 0.0),
        };
        factors.push(PolyGauss { coeffs: parse_list(coeffs, parse_real).map_err(|m| f.error(m))?, width });
    }
    Ok(TestFunction { factors })
}

pub fn parse_reals(s: &str) -> Result<Vec<f64>, String> {
    parse_list(s, parse_real)
}

#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Real(f64),
    Int(i64),
    Bool(bool),
    Complex(Complex64),
    Text(String),
}

/// Ordered flat key/value report.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Report {
    pub entries: Vec<(String, Value)>,
}

impl Report {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn real(&mut self, k: impl Into<String>, v: f64) -> &mut Self {
        self.entries.push((k.into(), Value::Real(v)));
        self
    }

    pub fn int(&mut self, k: impl Into<String>, v: impl TryInto<i64>) -> &mut Self {
        let v = v.try_into().unwrap_or(i64::MAX);
        self.entries.push((k.into(), Value::Int(v)));
        self
    }

    pub fn flag(&mut self, k: impl Into<String>, v: bool) -> &mut Self {
        self.entries.push((k.into(), Value::Bool(v)));
        self
    }

    pub fn complex(&mut self, k: impl Into<String>, v: Complex64) -> &mut Self {
        self.entries.push((k.into(), Value::Complex(v)));
        self
    }

    pub fn text(&mut self, k: impl Into<String>, v: impl Into<String>) -> &mut Self {
        self.entries.push((k.into(), Value::Text(v.into())));
        self
    }

    pub fn series(&mut self, k: &str, b: &SeriesBound) -> &mut Self {
        self.real(format!("{k}.lower"), b.lower).real(format!("{k}.upper"), b.upper)
    }

    /// Flat record of a certificate under `prefix.`.
    pub fn certificate(&mut self, prefix: &str, c: &ConvergenceCertificate) -> &mut Self {
        let key = |s: &str| if prefix.is_empty() { s.to_string() } else { format!("{prefix}.{s}") };
        self.text(key("verdict"), c.verdict.name());
        match c.limit {
            Some(l) => self.complex(key("limit"), l),
            None => self.text(key("limit"), "none"),
        };
        match c.value() {
            Some(v) => self.complex(key("value"), v),
            None => self.text(key("value"), "none"),
        };
        self.complex(key("partial_value"), c.partial_value)
            .real(key("error_bound"), c.error_bound)
            .real(key("series_sum_bound"), c.series_sum_bound)
            .int(key("truncation_k"), c.truncation_k)
            .real(key("remainder_bound"), c.remainder_bound);
        match c.modulus_limit {
            Some(m) => self.real(key("modulus_limit"), m),
            None => self.text(key("modulus_limit"), "none"),
        };
        self.flag(key("diverges_to_zero"), c.diverges_to_zero)
    }

    pub fn get(&self, k: &str) -> Option<&Value> {
        self.entries.iter().find(|(key, _)| key == k).map(|(_, v)| v)
    }

    /// `key=value` lines with reals at 17 significant digits.
    pub fn machine(&self) -> String {
        let mut s = String::new();
        for (k, v) in &self.entries {
            let v = match v {
                Value::Real(x) => fmt_real(*x),
                Value::Int(i) => i.to_string(),
                Value::Bool(b) => b.to_string(),
                Value::Complex(z) => fmt_complex_full(*z),
                Value::Text(t) => t.clone(),
            };
            s.push_str(&format!("{k}={v}\n"));
        }
        s
    }

    pub fn human(&self) -> String {
        let width = self.entries.iter().map(|(k, _)| k.len()).max().unwrap_or(0);
        let mut s = String::new();
        for (k, v) in &self.entries {
            let v = match v {
                Value::Real(x) => human_real(*x),
                Value::Int(i) => i.to_string(),
                Value::Bool(b) => if *b { "yes" } else { "no" }.to_string(),
                Value::Complex(z) if z.im == 0.0 => human_real(z.re),
                Value::Complex(z) => {
                    format!("{} {} {}i", human_real(z.re), if z.im < 0.0 { '-' } else { '+' }, human_real(z.im.abs()))
                }
                Value::Text(t) => t.clone(),
            };
            s.push_str(&format!("{k:<width$}  {v}\n"));
        }
        s
    }
}

fn human_real(x: f64) -> String {
    let a = x.abs();
    if !x.is_finite() {
        fmt_real(x)
    } else if x == 0.0 || (1e-4..1e10).contains(&a) {
        let s = format!("{x:.10}");
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        format!("{x:.6e}")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn complex_literals() {
        assert_eq!(parse_complex("1+2i").unwrap(), c(1.0, 2.0));
        assert_eq!(parse_complex("-i").unwrap(), c(0.0, -1.0));
        assert_eq!(parse_complex("1e-3-2.5e-2i").unwrap(), c(1e-3, -2.5e-2));
        assert_eq!(parse_complex("-4").unwrap(), c(-4.0, 0.0));
        assert!(parse_complex("x").is_err());
        for z in [c(0.1, -0.3), c(-2.0, 0.0), c(0.0, 1e-300), c(1e20, 3.0)] {
            assert_eq!(parse_complex(&fmt_complex(z)).unwrap(), z);
            assert_eq!(parse_complex(&fmt_complex_full(z)).unwrap(), z);
        }
    }

    #[test]
    fn spec_syntax() {
        let s = parse_spec("oneplus-powerlaw:1,2").unwrap();
        assert_eq!(s, SequenceSpec::one_plus(SequenceSpec::power_law(c(1.0, 0.0), 2.0)));
        let s = parse_spec("prefix=2,3; tail=unitphase{0.5}-geometric:1,0.5").unwrap();
        assert_eq!(fmt_spec(&s), "prefix=2,3; tail=unitphase{0.5}-geometric:1,0.5");
        let e = parse_spec("prefix=2\ntail=geometric:1,2").unwrap_err();
        assert_eq!((e.field.as_str(), e.line), ("tail", 2));
        let e = parse_spec("tail=wobble").unwrap_err();
        assert_eq!(e.field, "tail");
    }

    #[test]
    fn cylinders() {
        assert_eq!(parse_cylinder("I0").unwrap(), CylinderSet::canonical());
        let a = parse_cylinder("dim=2; box=0,2,-1,1").unwrap();
        assert_eq!(fmt_cylinder(&a), "dim=2; box=0,2,-1,1");
        let e = parse_cylinder("dim=2\nbox=0,1").unwrap_err();
        assert_eq!((e.field.as_str(), e.line), ("box", 2));
    }

    #[test]
    fn vectors_and_families() {
        let text = "factor=gaussian:0.5,0; factor=box:0,1,2@1i; tail=indicator; phase=(unitphase-powerlaw:1,2)";
        let v = parse_vector(text).unwrap();
        assert_eq!(fmt_vector(&v), text);
        let x = parse_vector("tail=xiexp:0.05@unit").unwrap();
        assert!((x.factor_at(1).norm() - 1.0).abs() < 1e-15);
        let f = parse_family("op=2:-1,0,0,-2; tail=1:1; weights=(geometric:1,0.5)").unwrap();
        assert_eq!(parse_family(&fmt_family(&f)).unwrap(), f);
        let g = parse_fd_vector("vec=1,0; tail=0,1i").unwrap();
        assert_eq!(parse_fd_vector(&fmt_fd_vector(&g)).unwrap(), g);
        let t = parse_thompson("nu=1; alpha=1,2,3; mu=1,1,1; beta=2,3,1,0.5").unwrap();
        assert_eq!(t.beta(0, 1, 2), 0.5);
        assert_eq!(parse_thompson(&fmt_thompson(&t)).unwrap(), t);
    }
}
