//! Problem ingestion: the line-oriented config format, exact expression
//! parsing, and the quadratic-convolution nonlinearity generator.
//!
//! Config files have three sections. Model data is exact: rational literals
//! and integer-coefficient expressions only. Floating-point literals are
//! accepted solely in the `[run]` section, which holds simulation options.
//!
//! ```text
//! [model]
//! modes = -5..5            # or a comma list: -1,0,1
//! alpha = 1 - j^2          # eigenvalue expression in j (i is the imaginary unit)
//! alpha[0] = 1             # optional per-mode overrides
//! gap_alpha = 0
//! gap_beta = 3             # rational or inf
//! gap_gamma = 1
//! mu_tilde = 1/20
//! truncation = 5           # optional, defaults to max |mode|
//!
//! [nonlinearity]
//! kind = quadratic_convolution
//! b = k*(j-k)              # interaction coefficient b(j,k)
//! time_factor = 1/2*t
//! # or: kind = explicit, with repeated lines
//! # term = 2 | 1:2 | 1:1/2:0/1
//!
//! [run]
//! order = 4
//! dt = 0.001
//! t0 = 0
//! t1 = 1
//! horizon = 2
//! radius = 0.01
//! samples = 100
//! seed = 7
//! manifold_t0 = 0
//! manifold_t1 = 1
//! ```

use std::collections::BTreeMap;
use std::sync::Arc;

use num_traits::Zero;

use crate::algebra::{
    crat_int, parse_rat, CRat, ModalSeries, MultiIndex, Rat, TimePoly,
};
use crate::error::{Error, Result};
use crate::model::{GapParams, SpectralModel};

// ---------------------------------------------------------------------------
// exact expression parsing
// ---------------------------------------------------------------------------

/// Parsed arithmetic expression over integer literals and the variables
/// `t`, `j`, `k`, plus the imaginary unit `i`.
#[derive(Clone, Debug, PartialEq)]
pub enum Expr {
    Int(i64),
    Var(char),
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, u32),
}

struct Tokens<'a> {
    src: &'a [u8],
    pos: usize,
}

impl<'a> Tokens<'a> {
    fn new(s: &'a str) -> Self {
        Tokens {
            src: s.as_bytes(),
            pos: 0,
        }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn bump(&mut self) -> Option<u8> {
        let c = self.peek()?;
        self.pos += 1;
        Some(c)
    }
}

fn expr_err(msg: impl Into<String>) -> Error {
    Error::Parse {
        line: 0,
        msg: msg.into(),
    }
}

/// Parse an expression like `k*(j-k)` or `1/2*t - 3*t^2`.
pub fn parse_expr(s: &str) -> Result<Expr> {
    let mut tk = Tokens::new(s);
    let e = parse_sum(&mut tk)?;
    if tk.peek().is_some() {
        return Err(expr_err(format!("trailing input in expression `{s}`")));
    }
    Ok(e)
}

fn parse_sum(tk: &mut Tokens) -> Result<Expr> {
    let mut lhs = parse_product(tk)?;
    while let Some(c) = tk.peek() {
        match c {
            b'+' => {
                tk.bump();
                lhs = Expr::Add(Box::new(lhs), Box::new(parse_product(tk)?));
            }
            b'-' => {
                tk.bump();
                lhs = Expr::Sub(Box::new(lhs), Box::new(parse_product(tk)?));
            }
            _ => break,
        }
    }
    Ok(lhs)
}

fn parse_product(tk: &mut Tokens) -> Result<Expr> {
    let mut lhs = parse_unary(tk)?;
    while let Some(c) = tk.peek() {
        match c {
            b'*' => {
                tk.bump();
                lhs = Expr::Mul(Box::new(lhs), Box::new(parse_unary(tk)?));
            }
            b'/' => {
                tk.bump();
                lhs = Expr::Div(Box::new(lhs), Box::new(parse_unary(tk)?));
            }
            _ => break,
        }
    }
    Ok(lhs)
}

fn parse_unary(tk: &mut Tokens) -> Result<Expr> {
    if tk.peek() == Some(b'-') {
        tk.bump();
        return Ok(Expr::Neg(Box::new(parse_unary(tk)?)));
    }
    parse_power(tk)
}

fn parse_power(tk: &mut Tokens) -> Result<Expr> {
    let base = parse_atom(tk)?;
    if tk.peek() == Some(b'^') {
        tk.bump();
        let mut digits = String::new();
        while let Some(c) = tk.peek() {
            if c.is_ascii_digit() {
                digits.push(c as char);
                tk.bump();
            } else {
                break;
            }
        }
        if digits.is_empty() {
            return Err(expr_err("exponent must be a nonnegative integer"));
        }
        let e: u32 = digits
            .parse()
            .map_err(|_| expr_err("exponent out of range"))?;
        return Ok(Expr::Pow(Box::new(base), e));
    }
    Ok(base)
}

fn parse_atom(tk: &mut Tokens) -> Result<Expr> {
    match tk.peek() {
        Some(b'(') => {
            tk.bump();
            let e = parse_sum(tk)?;
            if tk.bump() != Some(b')') {
                return Err(expr_err("unbalanced parenthesis"));
            }
            Ok(e)
        }
        Some(c) if c.is_ascii_digit() => {
            let mut digits = String::new();
            while let Some(c) = tk.peek() {
                if c.is_ascii_digit() {
                    digits.push(c as char);
                    tk.bump();
                } else {
                    break;
                }
            }
            digits
                .parse::<i64>()
                .map(Expr::Int)
                .map_err(|_| expr_err(format!("integer literal `{digits}` out of range")))
        }
        Some(c) if (c as char).is_ascii_alphabetic() => {
            tk.bump();
            Ok(Expr::Var(c as char))
        }
        other => Err(expr_err(format!(
            "unexpected token `{}`",
            other.map(|c| (c as char).to_string()).unwrap_or_default()
        ))),
    }
}

/// Variable bindings for evaluation. `t` maps to the polynomial
/// indeterminate; everything else to constants.
pub type Bindings = BTreeMap<char, TimePoly>;

/// Evaluate an expression in the ring of exact time polynomials.
/// Division requires a nonzero constant divisor.
pub fn eval_expr(e: &Expr, binds: &Bindings) -> Result<TimePoly> {
    Ok(match e {
        Expr::Int(n) => TimePoly::constant(crat_int(*n)),
        Expr::Var(c) => binds
            .get(c)
            .cloned()
            .ok_or_else(|| expr_err(format!("unknown variable `{c}`")))?,
        Expr::Neg(a) => eval_expr(a, binds)?.neg(),
        Expr::Add(a, b) => eval_expr(a, binds)?.add(&eval_expr(b, binds)?),
        Expr::Sub(a, b) => eval_expr(a, binds)?.sub(&eval_expr(b, binds)?),
        Expr::Mul(a, b) => eval_expr(a, binds)?.mul(&eval_expr(b, binds)?),
        Expr::Div(a, b) => {
            let den = eval_expr(b, binds)?;
            if den.degree() != Some(0) {
                return Err(expr_err("division requires a nonzero constant divisor"));
            }
            eval_expr(a, binds)?.div_scalar(&den.coeff(0))
        }
        Expr::Pow(a, e) => {
            let base = eval_expr(a, binds)?;
            let mut acc = TimePoly::one();
            for _ in 0..*e {
                acc = acc.mul(&base);
            }
            acc
        }
    })
}

fn const_bindings(pairs: &[(char, CRat)]) -> Bindings {
    let mut b = Bindings::new();
    b.insert(
        'i',
        TimePoly::constant(crate::algebra::crat(
            Rat::zero(),
            Rat::from_integer(1.into()),
        )),
    );
    for (c, v) in pairs {
        b.insert(*c, TimePoly::constant(v.clone()));
    }
    b
}

/// Evaluate an expression that must come out constant (no `t`).
pub fn eval_expr_const(e: &Expr, pairs: &[(char, CRat)]) -> Result<CRat> {
    let v = eval_expr(e, &const_bindings(pairs))?;
    match v.degree() {
        None => Ok(crate::algebra::crat_zero()),
        Some(0) => Ok(v.coeff(0)),
        Some(d) => Err(expr_err(format!(
            "expected a constant, found a degree-{d} polynomial in t"
        ))),
    }
}

/// Evaluate an expression in `t` only (a time polynomial).
pub fn eval_expr_timepoly(e: &Expr) -> Result<TimePoly> {
    let mut b = const_bindings(&[]);
    b.insert('t', TimePoly::t());
    eval_expr(e, &b)
}

// ---------------------------------------------------------------------------
// quadratic convolution generator
// ---------------------------------------------------------------------------

/// Expand a convolution-type quadratic nonlinearity over the model's modes:
/// for every target `j` and every mode pair `(k, j-k)` inside the window,
/// the stored coefficient on `{k, j-k}` (k != j-k) is
/// `time_factor * (b(j,k) + b(j,j-k))`, and on `{k:2}` (j = 2k) it is
/// `time_factor * b(j,k)`, so the symmetric sum over ordered `k` is
/// represented once per distinct monomial.
pub fn generate_quadratic_convolution(
    b: &Expr,
    time_factor: &TimePoly,
    model: &Arc<SpectralModel>,
) -> Result<ModalSeries> {
    let mut f = ModalSeries::zero(model.clone(), 2);
    for &j in model.modes() {
        for &k in model.modes() {
            let m64 = j as i64 - k as i64;
            let Ok(m) = i32::try_from(m64) else { continue };
            if !model.contains_mode(m) || k > m {
                continue;
            }
            let jj = crat_int(j as i64);
            let bjk = eval_expr_const(b, &[('j', jj.clone()), ('k', crat_int(k as i64))])?;
            let total = if k == m {
                bjk
            } else {
                let bjm = eval_expr_const(b, &[('j', jj), ('k', crat_int(m as i64))])?;
                bjk + bjm
            };
            if total.is_zero() {
                continue;
            }
            let q = if k == m {
                MultiIndex::single(k, 2)
            } else {
                MultiIndex::from_pairs([(k, 1), (m, 1)])
            };
            f.add_term(j, q, time_factor.scale(&total))?;
        }
    }
    Ok(f)
}

// ---------------------------------------------------------------------------
// problem files
// ---------------------------------------------------------------------------

/// Simulation options from the `[run]` section (floating point allowed here).
#[derive(Clone, Debug, PartialEq)]
pub struct RunOptions {
    pub dt: f64,
    pub t0: f64,
    pub t1: f64,
    pub horizon: f64,
    pub radius: f64,
    pub samples: usize,
    pub seed: u64,
    pub manifold_t: (f64, f64),
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions {
            dt: 1e-3,
            t0: 0.0,
            t1: 1.0,
            horizon: 2.0,
            radius: 1e-2,
            samples: 100,
            seed: 7,
            manifold_t: (0.0, 1.0),
        }
    }
}

/// A fully validated problem: model, nonlinearity, target order, options.
#[derive(Clone, Debug)]
pub struct ProblemSpec {
    pub model: Arc<SpectralModel>,
    pub nonlinearity: ModalSeries,
    pub p_target: u32,
    pub run: RunOptions,
}

impl PartialEq for ProblemSpec {
    fn eq(&self, other: &Self) -> bool {
        self.model == other.model
            && self.nonlinearity == other.nonlinearity
            && self.p_target == other.p_target
            && self.run == other.run
    }
}

fn parse_modes(s: &str, line: usize) -> Result<Vec<i32>> {
    let err = |msg: String| Error::Parse { line, msg };
    let s = s.trim();
    if let Some((a, b)) = s.split_once("..") {
        let lo: i32 = a
            .trim()
            .parse()
            .map_err(|_| err(format!("invalid mode range start `{a}`")))?;
        let hi: i32 = b
            .trim()
            .parse()
            .map_err(|_| err(format!("invalid mode range end `{b}`")))?;
        if lo > hi {
            return Err(err(format!("empty mode range {lo}..{hi}")));
        }
        Ok((lo..=hi).collect())
    } else {
        s.split(',')
            .map(|p| {
                p.trim()
                    .parse()
                    .map_err(|_| err(format!("invalid mode label `{p}`")))
            })
            .collect()
    }
}

fn parse_bound(s: &str, line: usize) -> Result<Option<Rat>> {
    let s = s.trim();
    if s == "inf" || s == "infinity" {
        return Ok(None);
    }
    parse_rat(s).map(Some).map_err(|_| Error::Parse {
        line,
        msg: format!("invalid rational bound `{s}` (use num/den or inf)"),
    })
}

#[derive(Default)]
struct ModelDraft {
    modes: Option<Vec<i32>>,
    alpha_expr: Option<Expr>,
    alpha_overrides: Vec<(i32, CRat)>,
    gap_alpha: Option<Rat>,
    gap_beta: Option<Option<Rat>>,
    gap_gamma: Option<Option<Rat>>,
    mu_tilde: Option<Rat>,
    truncation: Option<i64>,
}

#[derive(Default)]
struct NonlinDraft {
    kind: Option<String>,
    b: Option<Expr>,
    time_factor: Option<TimePoly>,
    terms: Vec<(i32, MultiIndex, TimePoly)>,
}

/// Parse and validate a problem file. All model invariants are checked here:
/// gap ordering, forbidden bands, and second-order vanishing of the
/// nonlinearity.
pub fn parse_problem(text: &str) -> Result<ProblemSpec> {
    let mut section = String::new();
    let mut model_draft = ModelDraft::default();
    let mut nl = NonlinDraft::default();
    let mut p_target: Option<u32> = None;
    let mut run = RunOptions::default();

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let err = |msg: String| Error::Parse {
            line: line_no,
            msg,
        };
        let line = match raw.find('#') {
            Some(i) => &raw[..i],
            None => raw,
        }
        .trim();
        if line.is_empty() {
            continue;
        }
        if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
            section = name.trim().to_string();
            if !matches!(section.as_str(), "model" | "nonlinearity" | "run") {
                return Err(err(format!("unknown section `[{section}]`")));
            }
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| err(format!("expected `key = value`, found `{line}`")))?;
        let key = key.trim();
        let value = value.trim();
        let reline = |e: Error| match e {
            Error::Parse { line: 0, msg } => Error::Parse { line: line_no, msg },
            other => other,
        };

        match section.as_str() {
            "model" => match key {
                "modes" => model_draft.modes = Some(parse_modes(value, line_no)?),
                "alpha" => model_draft.alpha_expr = Some(parse_expr(value).map_err(reline)?),
                _ if key.starts_with("alpha[") && key.ends_with(']') => {
                    let label: i32 = key[6..key.len() - 1]
                        .trim()
                        .parse()
                        .map_err(|_| err(format!("invalid mode label in `{key}`")))?;
                    let e = parse_expr(value).map_err(reline)?;
                    let v = eval_expr_const(&e, &[]).map_err(reline)?;
                    model_draft.alpha_overrides.push((label, v));
                }
                "gap_alpha" => model_draft.gap_alpha = Some(parse_rat(value).map_err(reline)?),
                "gap_beta" => model_draft.gap_beta = Some(parse_bound(value, line_no)?),
                "gap_gamma" => model_draft.gap_gamma = Some(parse_bound(value, line_no)?),
                "mu_tilde" => model_draft.mu_tilde = Some(parse_rat(value).map_err(reline)?),
                "truncation" => {
                    model_draft.truncation = Some(
                        value
                            .parse()
                            .map_err(|_| err(format!("invalid truncation `{value}`")))?,
                    )
                }
                _ => return Err(err(format!("unknown model key `{key}`"))),
            },
            "nonlinearity" => match key {
                "kind" => nl.kind = Some(value.to_string()),
                "b" => nl.b = Some(parse_expr(value).map_err(reline)?),
                "time_factor" => {
                    let e = parse_expr(value).map_err(reline)?;
                    nl.time_factor = Some(eval_expr_timepoly(&e).map_err(reline)?)
                }
                "term" => {
                    let mut parts = value.splitn(3, '|');
                    let target: i32 = parts
                        .next()
                        .ok_or_else(|| err("missing term target".into()))?
                        .trim()
                        .parse()
                        .map_err(|_| err("invalid term target".into()))?;
                    let q = MultiIndex::from_text(
                        parts
                            .next()
                            .ok_or_else(|| err("missing term multi-index".into()))?,
                    )
                    .map_err(reline)?;
                    let c = TimePoly::from_text(
                        parts
                            .next()
                            .ok_or_else(|| err("missing term coefficient".into()))?,
                    )
                    .map_err(reline)?;
                    nl.terms.push((target, q, c));
                }
                _ => return Err(err(format!("unknown nonlinearity key `{key}`"))),
            },
            "run" => {
                let fval = || -> Result<f64> {
                    value
                        .parse()
                        .map_err(|_| err(format!("invalid number `{value}`")))
                };
                match key {
                    "order" => {
                        p_target = Some(
                            value
                                .parse()
                                .map_err(|_| err(format!("invalid order `{value}`")))?,
                        )
                    }
                    "dt" => run.dt = fval()?,
                    "t0" => run.t0 = fval()?,
                    "t1" => run.t1 = fval()?,
                    "horizon" => run.horizon = fval()?,
                    "radius" => run.radius = fval()?,
                    "samples" => {
                        run.samples = value
                            .parse()
                            .map_err(|_| err(format!("invalid samples `{value}`")))?
                    }
                    "seed" => {
                        run.seed = value
                            .parse()
                            .map_err(|_| err(format!("invalid seed `{value}`")))?
                    }
                    "manifold_t0" => run.manifold_t.0 = fval()?,
                    "manifold_t1" => run.manifold_t.1 = fval()?,
                    _ => return Err(err(format!("unknown run key `{key}`"))),
                }
            }
            _ => return Err(err(format!("`{key}` appears before any section header"))),
        }
    }

    // assemble the model
    let modes = model_draft.modes.ok_or_else(|| Error::Parse {
        line: 0,
        msg: "missing `modes` in [model]".into(),
    })?;
    let mut alpha: BTreeMap<i32, CRat> = BTreeMap::new();
    if let Some(e) = &model_draft.alpha_expr {
        for &j in &modes {
            alpha.insert(j, eval_expr_const(e, &[('j', crat_int(j as i64))])?);
        }
    }
    for (j, v) in model_draft.alpha_overrides {
        alpha.insert(j, v);
    }
    let gap = GapParams {
        alpha: model_draft.gap_alpha.ok_or_else(|| Error::Parse {
            line: 0,
            msg: "missing `gap_alpha`".into(),
        })?,
        beta: model_draft.gap_beta.ok_or_else(|| Error::Parse {
            line: 0,
            msg: "missing `gap_beta`".into(),
        })?,
        gamma: model_draft.gap_gamma.ok_or_else(|| Error::Parse {
            line: 0,
            msg: "missing `gap_gamma`".into(),
        })?,
        mu_tilde: model_draft.mu_tilde.ok_or_else(|| Error::Parse {
            line: 0,
            msg: "missing `mu_tilde`".into(),
        })?,
    };
    let model = SpectralModel::new(modes, alpha, gap, model_draft.truncation)?;

    // assemble the nonlinearity
    let kind = nl.kind.unwrap_or_else(|| "explicit".into());
    let nonlinearity = match kind.as_str() {
        "quadratic_convolution" => {
            let b = nl.b.ok_or_else(|| Error::Parse {
                line: 0,
                msg: "quadratic_convolution requires `b`".into(),
            })?;
            let tf = nl.time_factor.ok_or_else(|| Error::Parse {
                line: 0,
                msg: "quadratic_convolution requires `time_factor`".into(),
            })?;
            generate_quadratic_convolution(&b, &tf, &model)?
        }
        "explicit" => {
            let max_deg = nl
                .terms
                .iter()
                .map(|(_, q, _)| q.degree())
                .max()
                .unwrap_or(2)
                .max(2);
            let mut f = ModalSeries::zero(model.clone(), max_deg);
            for (j, q, c) in nl.terms {
                f.add_term(j, q, c)?;
            }
            f
        }
        other => {
            return Err(Error::Parse {
                line: 0,
                msg: format!("unknown nonlinearity kind `{other}`"),
            })
        }
    };
    if nonlinearity.min_degree().map_or(false, |d| d < 2) {
        return Err(Error::ModelInvariant(
            "nonlinearity has a degree-1 term; it must vanish to second order".into(),
        ));
    }

    Ok(ProblemSpec {
        model,
        nonlinearity,
        p_target: p_target.ok_or_else(|| Error::Parse {
            line: 0,
            msg: "missing `order` in [run]".into(),
        })?,
        run,
    })
}

/// Canonical serialization; `parse_problem(serialize_problem(s)) == s`.
/// The nonlinearity is always emitted as an explicit term list.
pub fn serialize_problem(spec: &ProblemSpec) -> String {
    let mut s = String::from("[model]\n");
    let modes = spec.model.modes();
    let contiguous = modes.windows(2).all(|w| w[1] == w[0] + 1);
    if contiguous && modes.len() > 1 {
        s.push_str(&format!(
            "modes = {}..{}\n",
            modes[0],
            modes[modes.len() - 1]
        ));
    } else {
        s.push_str(&format!(
            "modes = {}\n",
            modes
                .iter()
                .map(|m| m.to_string())
                .collect::<Vec<_>>()
                .join(",")
        ));
    }
    for &j in modes {
        let a = spec.model.eigenvalue(j).expect("mode in model");
        s.push_str(&format!("alpha[{j}] = {} + {}*i\n", a.re, a.im));
    }
    let gap = spec.model.gap();
    let bound = |b: &Option<Rat>| b.as_ref().map_or("inf".to_string(), |r| r.to_string());
    s.push_str(&format!("gap_alpha = {}\n", gap.alpha));
    s.push_str(&format!("gap_beta = {}\n", bound(&gap.beta)));
    s.push_str(&format!("gap_gamma = {}\n", bound(&gap.gamma)));
    s.push_str(&format!("mu_tilde = {}\n", gap.mu_tilde));
    s.push_str(&format!("truncation = {}\n", spec.model.truncation()));

    s.push_str("\n[nonlinearity]\nkind = explicit\n");
    for (j, q, c) in spec.nonlinearity.terms() {
        s.push_str(&format!("term = {j} | {} | {}\n", q.to_text(), c.to_text()));
    }

    s.push_str("\n[run]\n");
    s.push_str(&format!("order = {}\n", spec.p_target));
    let r = &spec.run;
    s.push_str(&format!("dt = {:?}\n", r.dt));
    s.push_str(&format!("t0 = {:?}\n", r.t0));
    s.push_str(&format!("t1 = {:?}\n", r.t1));
    s.push_str(&format!("horizon = {:?}\n", r.horizon));
    s.push_str(&format!("radius = {:?}\n", r.radius));
    s.push_str(&format!("samples = {}\n", r.samples));
    s.push_str(&format!("seed = {}\n", r.seed));
    s.push_str(&format!("manifold_t0 = {:?}\n", r.manifold_t.0));
    s.push_str(&format!("manifold_t1 = {:?}\n", r.manifold_t.1));
    s
}

/// The worked-example problem file at `r = 1`: eigenvalues `1 - j^2` over
/// `-n..n`, interaction `b(j,k) = k(j-k)` with time factor `t/2`.
pub fn burgers_problem_text(n: i32, order: u32) -> String {
    format!(
        "[model]\n\
         modes = -{n}..{n}\n\
         alpha = 1 - j^2\n\
         gap_alpha = 0\n\
         gap_beta = 3\n\
         gap_gamma = 1\n\
         mu_tilde = 1/20\n\
         \n\
         [nonlinearity]\n\
         kind = quadratic_convolution\n\
         b = k*(j-k)\n\
         time_factor = 1/2*t\n\
         \n\
         [run]\n\
         order = {order}\n"
    )
}
