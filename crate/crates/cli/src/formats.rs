//! Text formats for models, filters, signals and images.
//!
//! Floating-point values are written with 17 significant digits
//! (`{:.16e}`), which reads back bit-exactly.
//!
//! Step regularizer:
//! ```text
//! format stepreg v1
//! grid m1=-1 m2=2 n=4 eps=3.9062500000000000e-03
//! filter levels=1 taps=2
//! tap 0 7.0710678118654757e-01
//! tap 1 7.0710678118654757e-01
//! dim 2
//! coeffs 0 <bins values>
//! coeffs 1 <bins values>
//! ```
//! `filter none` stands for the identity transform.
//!
//! Penalty weights:
//! ```text
//! format lambda v1
//! filter none
//! dim 3
//! terms 2
//! term lambda=1.0000000000000000e+00 p=2.0000000000000000e+00
//! weights 1.0 1.0 1.0
//! ...
//! ```
//!
//! Filter file: a header `offsets k0 k1 ...` followed by one tap per line,
//! written as a decimal or a fraction `a/b`.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use steplearn::mra::{decompose, reconstruct, Pyramid, ScalingFilter};
use steplearn::shrink::WeightedTerm;
use steplearn::{GridSpec, MultiPenalty, StepRegularizer};

use crate::error::CliError;

pub fn num(v: f64) -> String {
    format!("{v:.16e}")
}

/// Orthonormal pyramid transform applied before regularization.
#[derive(Debug, Clone, PartialEq)]
pub struct TransformSpec {
    pub filter: ScalingFilter,
    pub levels: usize,
}

impl TransformSpec {
    pub fn forward(&self, samples: &[f64]) -> Result<Vec<f64>, CliError> {
        Ok(decompose(samples, &self.filter, self.levels)?.flatten().into_values())
    }

    pub fn inverse(&self, coeffs: &[f64]) -> Result<Vec<f64>, CliError> {
        Ok(reconstruct(&Pyramid::from_flat(coeffs, self.levels)?, &self.filter)?)
    }
}

pub fn forward(t: Option<&TransformSpec>, samples: &[f64]) -> Result<Vec<f64>, CliError> {
    match t {
        Some(t) => t.forward(samples),
        None => Ok(samples.to_vec()),
    }
}

pub fn inverse(t: Option<&TransformSpec>, coeffs: &[f64]) -> Result<Vec<f64>, CliError> {
    match t {
        Some(t) => t.inverse(coeffs),
        None => Ok(coeffs.to_vec()),
    }
}

pub fn describe_transform(t: Option<&TransformSpec>) -> String {
    match t {
        None => "identity".into(),
        Some(t) => format!("{} levels of filter {:?} at offsets {:?}", t.levels, t.filter.taps(), t.filter.offsets()),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepModel {
    pub reg: StepRegularizer,
    pub transform: Option<TransformSpec>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LambdaModel {
    pub pen: MultiPenalty,
    pub transform: Option<TransformSpec>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Model {
    Step(StepModel),
    Lambda(LambdaModel),
}

impl Model {
    pub fn transform(&self) -> Option<&TransformSpec> {
        match self {
            Model::Step(m) => m.transform.as_ref(),
            Model::Lambda(m) => m.transform.as_ref(),
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            Model::Step(m) => m.reg.dim(),
            Model::Lambda(m) => m.pen.dim(),
        }
    }
}

fn render_filter(out: &mut String, t: Option<&TransformSpec>) {
    match t {
        None => out.push_str("filter none\n"),
        Some(t) => {
            let _ = writeln!(out, "filter levels={} taps={}", t.levels, t.filter.taps().len());
            for (k, p) in t.filter.iter() {
                let _ = writeln!(out, "tap {k} {}", num(p));
            }
        }
    }
}

pub fn render_step_model(m: &StepModel) -> String {
    let g = m.reg.grid();
    let mut out = String::from("format stepreg v1\n");
    let _ = writeln!(out, "grid m1={} m2={} n={} eps={}", g.m1(), g.m2(), g.level(), num(g.eps()));
    render_filter(&mut out, m.transform.as_ref());
    let _ = writeln!(out, "dim {}", m.reg.dim());
    for j in 0..m.reg.dim() {
        let _ = write!(out, "coeffs {j}");
        for &c in m.reg.coeffs(j) {
            let _ = write!(out, " {}", num(c));
        }
        out.push('\n');
    }
    out
}

pub fn render_lambda_model(m: &LambdaModel) -> String {
    let mut out = String::from("format lambda v1\n");
    render_filter(&mut out, m.transform.as_ref());
    let _ = writeln!(out, "dim {}", m.pen.dim());
    match m.pen.partition() {
        None => out.push_str("partition none\n"),
        Some(p) => {
            out.push_str("partition");
            for k in p {
                let _ = write!(out, " {k}");
            }
            out.push('\n');
        }
    }
    let _ = writeln!(out, "terms {}", m.pen.terms().len());
    for t in m.pen.terms() {
        let _ = writeln!(out, "term lambda={} p={}", num(t.lambda), num(t.p));
        out.push_str("weights");
        for &w in &t.weights {
            let _ = write!(out, " {}", num(w));
        }
        out.push('\n');
    }
    out
}

pub fn render_model(m: &Model) -> String {
    match m {
        Model::Step(s) => render_step_model(s),
        Model::Lambda(l) => render_lambda_model(l),
    }
}

/// Line cursor that skips blanks and `#` comments and reports line numbers.
struct Lines<'a> {
    path: &'a Path,
    iter: std::iter::Peekable<std::iter::Enumerate<std::str::Lines<'a>>>,
    line: usize,
}

impl<'a> Lines<'a> {
    fn new(path: &'a Path, text: &'a str) -> Self {
        Self {
            path,
            iter: text.lines().enumerate().peekable(),
            line: 0,
        }
    }

    fn err(&self, msg: impl Into<String>) -> CliError {
        CliError::Format {
            path: self.path.to_path_buf(),
            line: self.line,
            msg: msg.into(),
        }
    }

    fn next(&mut self) -> Result<&'a str, CliError> {
        for (i, l) in self.iter.by_ref() {
            let t = l.trim();
            if !t.is_empty() && !t.starts_with('#') {
                self.line = i + 1;
                return Ok(t);
            }
        }
        Err(self.err("unexpected end of file"))
    }

    fn finished(&mut self) -> bool {
        while let Some((_, l)) = self.iter.peek() {
            let t = l.trim();
            if t.is_empty() || t.starts_with('#') {
                self.iter.next();
            } else {
                return false;
            }
        }
        true
    }

    /// Next line, which must start with `key`; returns the remaining fields.
    fn expect(&mut self, key: &str) -> Result<Vec<&'a str>, CliError> {
        let l = self.next()?;
        let mut it = l.split_whitespace();
        if it.next() != Some(key) {
            return Err(self.err(format!("expected `{key}`, found `{l}`")));
        }
        Ok(it.collect())
    }

    fn parse<T: std::str::FromStr>(&self, s: &str) -> Result<T, CliError> {
        s.parse().map_err(|_| self.err(format!("cannot parse `{s}`")))
    }

    fn kv<T: std::str::FromStr>(&self, field: &str, key: &str) -> Result<T, CliError> {
        match field.split_once('=') {
            Some((k, v)) if k == key => self.parse(v),
            _ => Err(self.err(format!("expected `{key}=...`, found `{field}`"))),
        }
    }
}

fn parse_filter(lines: &mut Lines<'_>) -> Result<Option<TransformSpec>, CliError> {
    let f = lines.expect("filter")?;
    if f == ["none"] {
        return Ok(None);
    }
    if f.len() != 2 {
        return Err(lines.err("expected `filter none` or `filter levels=L taps=T`"));
    }
    let levels: usize = lines.kv(f[0], "levels")?;
    let count: usize = lines.kv(f[1], "taps")?;
    let mut offsets = Vec::with_capacity(count);
    let mut taps = Vec::with_capacity(count);
    for _ in 0..count {
        let t = lines.expect("tap")?;
        if t.len() != 2 {
            return Err(lines.err("expected `tap <offset> <value>`"));
        }
        offsets.push(lines.parse(t[0])?);
        taps.push(lines.parse(t[1])?);
    }
    let filter = ScalingFilter::new(offsets, taps).map_err(|e| lines.err(e.to_string()))?;
    Ok(Some(TransformSpec { filter, levels }))
}

pub fn parse_step_model(path: &Path, text: &str) -> Result<StepModel, CliError> {
    let mut lines = Lines::new(path, text);
    if lines.expect("format")? != ["stepreg", "v1"] {
        return Err(lines.err("expected `format stepreg v1`"));
    }
    let g = lines.expect("grid")?;
    if g.len() != 4 {
        return Err(lines.err("expected `grid m1=.. m2=.. n=.. eps=..`"));
    }
    let grid = GridSpec::new(lines.kv(g[0], "m1")?, lines.kv(g[1], "m2")?, lines.kv(g[2], "n")?, lines.kv(g[3], "eps")?)
        .map_err(|e| lines.err(e.to_string()))?;
    let transform = parse_filter(&mut lines)?;
    let d = lines.expect("dim")?;
    let dim: usize = lines.parse(d.first().copied().unwrap_or(""))?;
    let mut coeffs = Vec::with_capacity(dim);
    for j in 0..dim {
        let c = lines.expect("coeffs")?;
        if c.first().map(|s| lines.parse::<usize>(s)).transpose()? != Some(j) {
            return Err(lines.err(format!("expected coefficients of coordinate {j}")));
        }
        let vals = c[1..].iter().map(|s| lines.parse(s)).collect::<Result<Vec<f64>, _>>()?;
        if vals.len() != grid.bins() {
            return Err(lines.err(format!("{} coefficients for {} bins", vals.len(), grid.bins())));
        }
        coeffs.push(vals);
    }
    if !lines.finished() {
        let _ = lines.next();
        return Err(lines.err("trailing content"));
    }
    let reg = StepRegularizer::new(grid, coeffs).map_err(|e| lines.err(e.to_string()))?;
    Ok(StepModel { reg, transform })
}

pub fn parse_lambda_model(path: &Path, text: &str) -> Result<LambdaModel, CliError> {
    let mut lines = Lines::new(path, text);
    if lines.expect("format")? != ["lambda", "v1"] {
        return Err(lines.err("expected `format lambda v1`"));
    }
    let transform = parse_filter(&mut lines)?;
    let d = lines.expect("dim")?;
    let dim: usize = lines.parse(d.first().copied().unwrap_or(""))?;
    let p = lines.expect("partition")?;
    let partition = if p == ["none"] {
        None
    } else {
        Some(p.iter().map(|s| lines.parse(s)).collect::<Result<Vec<usize>, _>>()?)
    };
    let t = lines.expect("terms")?;
    let count: usize = lines.parse(t.first().copied().unwrap_or(""))?;
    let mut terms = Vec::with_capacity(count);
    for _ in 0..count {
        let h = lines.expect("term")?;
        if h.len() != 2 {
            return Err(lines.err("expected `term lambda=.. p=..`"));
        }
        let lambda = lines.kv(h[0], "lambda")?;
        let p = lines.kv(h[1], "p")?;
        let w = lines.expect("weights")?;
        let weights = w.iter().map(|s| lines.parse(s)).collect::<Result<Vec<f64>, _>>()?;
        if weights.len() != dim {
            return Err(lines.err(format!("{} weights for dimension {dim}", weights.len())));
        }
        terms.push(WeightedTerm { lambda, weights, p });
    }
    if !lines.finished() {
        let _ = lines.next();
        return Err(lines.err("trailing content"));
    }
    let pen = MultiPenalty::new(terms, partition).map_err(|e| lines.err(e.to_string()))?;
    Ok(LambdaModel { pen, transform })
}

pub fn parse_model(path: &Path, text: &str) -> Result<Model, CliError> {
    let first = text.lines().map(str::trim).find(|l| !l.is_empty() && !l.starts_with('#'));
    match first {
        Some("format stepreg v1") => Ok(Model::Step(parse_step_model(path, text)?)),
        Some("format lambda v1") => Ok(Model::Lambda(parse_lambda_model(path, text)?)),
        _ => Err(CliError::Format {
            path: path.to_path_buf(),
            line: 1,
            msg: "not a model file".into(),
        }),
    }
}

pub fn read_model(path: &Path) -> Result<Model, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    parse_model(path, &text)
}

pub fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    }
    fs::write(path, text).map_err(|e| CliError::io(path, e))
}

pub fn render_filter_file(filter: &ScalingFilter) -> String {
    let mut out = String::from("offsets");
    for k in filter.offsets() {
        let _ = write!(out, " {k}");
    }
    out.push('\n');
    for &p in filter.taps() {
        let _ = writeln!(out, "{}", num(p));
    }
    out
}

fn parse_tap(lines: &Lines<'_>, s: &str) -> Result<f64, CliError> {
    match s.split_once('/') {
        Some((a, b)) => {
            let a: f64 = lines.parse(a.trim())?;
            let b: f64 = lines.parse(b.trim())?;
            if b == 0.0 {
                return Err(lines.err("zero denominator"));
            }
            Ok(a / b)
        }
        None => lines.parse(s),
    }
}

pub fn parse_filter_file(path: &Path, text: &str) -> Result<ScalingFilter, CliError> {
    let mut lines = Lines::new(path, text);
    let offsets = lines
        .expect("offsets")?
        .iter()
        .map(|s| lines.parse(s))
        .collect::<Result<Vec<i64>, _>>()?;
    let mut taps = Vec::with_capacity(offsets.len());
    for _ in 0..offsets.len() {
        let l = lines.next()?;
        taps.push(parse_tap(&lines, l)?);
    }
    if !lines.finished() {
        let _ = lines.next();
        return Err(lines.err("more taps than offsets"));
    }
    ScalingFilter::new(offsets, taps).map_err(|e| lines.err(e.to_string()))
}

pub fn read_filter_file(path: &Path) -> Result<ScalingFilter, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    parse_filter_file(path, &text)
}

/// Signal or square image in exact numeric text.
#[derive(Debug, Clone, PartialEq)]
pub enum Samples {
    Signal(Vec<f64>),
    Image { side: usize, data: Vec<f64> },
}

impl Samples {
    pub fn values(&self) -> &[f64] {
        match self {
            Samples::Signal(v) => v,
            Samples::Image { data, .. } => data,
        }
    }

    /// Same shape with new values.
    pub fn with_values(&self, values: Vec<f64>) -> Self {
        match self {
            Samples::Signal(_) => Samples::Signal(values),
            Samples::Image { side, .. } => Samples::Image { side: *side, data: values },
        }
    }
}

/// `signal N` then one value per line, or `image S` then `S` rows of `S` values.
pub fn render_samples(s: &Samples) -> String {
    let mut out = String::new();
    match s {
        Samples::Signal(v) => {
            let _ = writeln!(out, "signal {}", v.len());
            for &x in v {
                let _ = writeln!(out, "{}", num(x));
            }
        }
        Samples::Image { side, data } => {
            let _ = writeln!(out, "image {side}");
            for row in data.chunks(*side) {
                let r: Vec<String> = row.iter().map(|&x| num(x)).collect();
                let _ = writeln!(out, "{}", r.join(" "));
            }
        }
    }
    out
}

pub fn parse_samples(path: &Path, text: &str) -> Result<Samples, CliError> {
    let mut lines = Lines::new(path, text);
    let header = lines.next()?;
    let (kind, n) = header.split_once(' ').ok_or_else(|| lines.err("expected `signal N` or `image S`"))?;
    let n: usize = lines.parse(n.trim())?;
    let (count, per_line) = match kind {
        "signal" => (n, 1),
        "image" => (n, n),
        _ => return Err(lines.err(format!("unknown sample kind `{kind}`"))),
    };
    let mut data = Vec::with_capacity(count * per_line);
    for _ in 0..count {
        let l = lines.next()?;
        let row = l.split_whitespace().map(|s| lines.parse(s)).collect::<Result<Vec<f64>, _>>()?;
        if row.len() != per_line {
            return Err(lines.err(format!("expected {per_line} values, found {}", row.len())));
        }
        data.extend(row);
    }
    if !lines.finished() {
        let _ = lines.next();
        return Err(lines.err("trailing content"));
    }
    Ok(match kind {
        "signal" => Samples::Signal(data),
        _ => Samples::Image { side: n, data },
    })
}

pub fn read_samples(path: &Path) -> Result<Samples, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    parse_samples(path, &text)
}

/// 8-bit binary PGM; values are clamped to `[0, 1]` and scaled to `0..=255`.
pub fn encode_pgm(side: usize, data: &[f64]) -> Vec<u8> {
    let mut out = format!("P5\n{side} {side}\n255\n").into_bytes();
    out.extend(data.iter().map(|&v| (v.clamp(0.0, 1.0) * 255.0).round() as u8));
    out
}

/// `(width, height, pixels / 255)` of a binary PGM with maxval 255.
pub fn decode_pgm(bytes: &[u8]) -> Option<(usize, usize, Vec<f64>)> {
    let mut fields = Vec::with_capacity(4);
    let mut i = 0;
    while fields.len() < 4 {
        while i < bytes.len() && bytes[i].is_ascii_whitespace() {
            i += 1;
        }
        let start = i;
        while i < bytes.len() && !bytes[i].is_ascii_whitespace() {
            i += 1;
        }
        if start == i {
            return None;
        }
        fields.push(std::str::from_utf8(&bytes[start..i]).ok()?.to_string());
    }
    i += 1;
    if fields[0] != "P5" || fields[3] != "255" {
        return None;
    }
    let w: usize = fields[1].parse().ok()?;
    let h: usize = fields[2].parse().ok()?;
    let px = bytes.get(i..i + w * h)?;
    Some((w, h, px.iter().map(|&b| b as f64 / 255.0).collect()))
}
