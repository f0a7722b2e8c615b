//! Type-H families: prototiles shared by several substitution rules, each rule a
//! uniformly contracting graph-directed IFS whose branch images tile the prototiles.
//!
//! Families are read from TOML. A rule branch `source → target` with offset `b`
//! is the map `x ↦ θx + b` sending the source prototile into the target
//! prototile, so the target is tiled by the scaled copies of its sources.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::expr;
use crate::geometry::{intersection_dimension, overlap_volume, AffineContraction, BBox, TileShape, Vector, EPS};
use crate::matrix::IntMatrix;
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Prototile {
    pub id: String,
    pub shape: TileShape,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Branch {
    pub source: usize,
    pub target: usize,
    /// Per-branch contraction; equal to the rule's `theta` in any valid family.
    pub scale: f64,
    pub offset: Vector,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SubstitutionRule {
    pub id: String,
    pub theta: f64,
    pub branches: Vec<Branch>,
}

impl SubstitutionRule {
    /// Indices of the branches whose image lies in `target`, in file order.
    pub fn branches_into(&self, target: usize) -> impl Iterator<Item = usize> + '_ {
        self.branches.iter().enumerate().filter(move |(_, b)| b.target == target).map(|(i, _)| i)
    }

    /// Indices of the branches starting at `source`, in file order.
    pub fn branches_from(&self, source: usize) -> impl Iterator<Item = usize> + '_ {
        self.branches.iter().enumerate().filter(move |(_, b)| b.source == source).map(|(i, _)| i)
    }

    pub fn map(&self, branch: usize, dim: usize) -> AffineContraction {
        let b = &self.branches[branch];
        AffineContraction { dim, scale: b.scale, offset: b.offset }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TypeHFamily {
    pub name: String,
    pub dim: usize,
    pub prototiles: Vec<Prototile>,
    pub rules: Vec<SubstitutionRule>,
}

impl TypeHFamily {
    pub fn m(&self) -> usize {
        self.prototiles.len()
    }

    pub fn n_rules(&self) -> usize {
        self.rules.len()
    }

    pub fn shape(&self, proto: usize) -> &TileShape {
        &self.prototiles[proto].shape
    }

    pub fn prototile_index(&self, id: &str) -> Option<usize> {
        self.prototiles.iter().position(|p| p.id == id)
    }

    pub fn max_diameter(&self) -> f64 {
        self.prototiles.iter().map(|p| p.shape.diameter()).fold(0.0, f64::max)
    }

    pub fn min_volume(&self) -> f64 {
        self.prototiles.iter().map(|p| p.shape.volume()).fold(f64::INFINITY, f64::min)
    }

    /// Distance from the anchor to the boundary, minimised over prototiles.
    pub fn min_anchor_depth(&self) -> f64 {
        self.prototiles.iter().map(|p| p.shape.depth(Vector::ZERO)).fold(f64::INFINITY, f64::min)
    }

    pub fn theta_min(&self) -> f64 {
        self.rules.iter().map(|r| r.theta).fold(f64::INFINITY, f64::min)
    }

    pub fn theta_max(&self) -> f64 {
        self.rules.iter().map(|r| r.theta).fold(0.0, f64::max)
    }

    /// Bounding box of all prototiles.
    pub fn prototile_bbox(&self) -> BBox {
        self.prototiles.iter().skip(1).fold(self.prototiles[0].shape.bbox(), |b, p| b.union(&p.shape.bbox()))
    }

    /// Parses a family and checks every type-H condition.
    pub fn load(text: &str) -> Result<Self> {
        let fam = parse_family(text)?;
        for rule in &fam.rules {
            if rule.branches.iter().any(|b| b.scale != rule.theta) {
                return Err(Error::NonUniformScaling { rule: rule.id.clone() });
            }
            if !(rule.theta > 0.0 && rule.theta < 1.0) {
                return Err(Error::ThetaOutOfRange { rule: rule.id.clone(), theta: rule.theta });
            }
        }
        let report = validate_type_h(&fam, 2);
        if !report.passed() {
            let failed: Vec<String> = report.checks.iter().filter(|c| !c.passed).map(|c| format!("{}: {}", c.name, c.witness)).collect();
            return Err(Error::Invalid(failed.join("; ")));
        }
        Ok(fam)
    }

    pub fn to_toml(&self) -> String {
        let mut s = String::new();
        let num = |x: f64| format!("{x:?}");
        let _ = writeln!(s, "name = {}\n", toml_str(&self.name));
        for p in &self.prototiles {
            let _ = writeln!(s, "[[prototile]]\nid = {}\ndim = {}", toml_str(&p.id), self.dim);
            match &p.shape {
                TileShape::Interval { lo, hi } => {
                    let _ = writeln!(s, "interval = [{}, {}]", num(*lo), num(*hi));
                }
                TileShape::Polygon(v) => {
                    let pts: Vec<String> = v.iter().map(|q| format!("[{}, {}]", num(q.x), num(q.y))).collect();
                    let _ = writeln!(s, "polygon = [{}]", pts.join(", "));
                }
            }
            s.push('\n');
        }
        for r in &self.rules {
            let _ = writeln!(s, "[[rule]]\nid = {}\ntheta = {}\n", toml_str(&r.id), num(r.theta));
            for b in &r.branches {
                let off = b.offset.coords(self.dim).into_iter().map(num).collect::<Vec<_>>().join(", ");
                let _ = writeln!(
                    s,
                    "[[rule.branch]]\nsource = {}\ntarget = {}\noffset = [{}]",
                    toml_str(&self.prototiles[b.source].id),
                    toml_str(&self.prototiles[b.target].id),
                    off
                );
                if b.scale != r.theta {
                    let _ = writeln!(s, "theta = {}", num(b.scale));
                }
                s.push('\n');
            }
        }
        s
    }
}

fn toml_str(s: &str) -> String {
    toml::Value::String(s.to_string()).to_string()
}

/// Transition matrix of a rule: entry `(child, parent)` counts the branches
/// placing a `child` tile inside `parent`; columns are indexed by the parent.
pub fn transition_matrix(family: &TypeHFamily, rule: usize) -> IntMatrix {
    let mut m = IntMatrix::zeros(family.m(), family.m());
    for b in &family.rules[rule].branches {
        m.add_to(b.source, b.target, 1);
    }
    m
}

#[derive(Deserialize)]
#[serde(untagged)]
enum Num {
    Int(i64),
    Float(f64),
    Expr(String),
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawFamily {
    name: String,
    #[serde(default)]
    constants: BTreeMap<String, Num>,
    prototile: Vec<RawPrototile>,
    rule: Vec<RawRule>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPrototile {
    id: toml::Spanned<String>,
    dim: usize,
    interval: Option<Vec<Num>>,
    polygon: Option<Vec<Vec<Num>>>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRule {
    id: String,
    theta: Num,
    #[serde(default)]
    branch: Vec<RawBranch>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawBranch {
    source: toml::Spanned<String>,
    target: toml::Spanned<String>,
    offset: Vec<Num>,
    theta: Option<Num>,
}

fn line_of(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].bytes().filter(|&b| b == b'\n').count() + 1
}

/// Structural parse: resolves names and evaluates numbers but performs none of
/// the type-H checks (see [`validate_type_h`]).
pub fn parse_family(text: &str) -> Result<TypeHFamily> {
    let raw: RawFamily = toml::from_str(text).map_err(|e| Error::Parse {
        line: e.span().map(|s| line_of(text, s.start)).unwrap_or(0),
        message: e.message().to_string(),
    })?;
    let parse_err = |message: String| Error::Parse { line: 0, message };
    let mut consts_raw = BTreeMap::new();
    let mut consts = BTreeMap::new();
    for (k, v) in raw.constants {
        match v {
            Num::Int(i) => {
                consts.insert(k, i as f64);
            }
            Num::Float(f) => {
                consts.insert(k, f);
            }
            Num::Expr(s) => {
                consts_raw.insert(k, s);
            }
        }
    }
    for (k, v) in &consts {
        consts_raw.entry(k.clone()).or_insert_with(|| format!("{v:?}"));
    }
    let consts = expr::eval_constants(&consts_raw).map_err(parse_err)?;
    let num = |n: &Num| -> Result<f64> {
        match n {
            Num::Int(i) => Ok(*i as f64),
            Num::Float(f) => Ok(*f),
            Num::Expr(s) => expr::eval(s, &consts).map_err(parse_err),
        }
    };

    let dim = raw.prototile.first().map(|p| p.dim).ok_or_else(|| parse_err("no prototiles".into()))?;
    if dim != 1 && dim != 2 {
        return Err(Error::UnsupportedDimension(dim));
    }
    let mut prototiles = Vec::new();
    for p in &raw.prototile {
        if p.dim != dim {
            return Err(Error::DimensionMismatch { expected: dim, found: p.dim });
        }
        let shape = match (&p.interval, &p.polygon) {
            (Some(iv), None) if dim == 1 && iv.len() == 2 => TileShape::interval(num(&iv[0])?, num(&iv[1])?)?,
            (None, Some(pg)) if dim == 2 => {
                let mut v = Vec::new();
                for q in pg {
                    if q.len() != 2 {
                        return Err(Error::DimensionMismatch { expected: 2, found: q.len() });
                    }
                    v.push(Vector::new(num(&q[0])?, num(&q[1])?));
                }
                TileShape::polygon(v)?
            }
            _ => {
                return Err(Error::Parse {
                    line: line_of(text, p.id.span().start),
                    message: format!("prototile `{}` needs `interval` (dim 1) or `polygon` (dim 2)", p.id.get_ref()),
                })
            }
        };
        if prototiles.iter().any(|q: &Prototile| &q.id == p.id.get_ref()) {
            return Err(Error::Parse { line: line_of(text, p.id.span().start), message: format!("duplicate prototile `{}`", p.id.get_ref()) });
        }
        prototiles.push(Prototile { id: p.id.get_ref().clone(), shape });
    }
    let lookup = |s: &toml::Spanned<String>| -> Result<usize> {
        prototiles
            .iter()
            .position(|p| &p.id == s.get_ref())
            .ok_or_else(|| Error::UnknownPrototile { id: s.get_ref().clone(), line: line_of(text, s.span().start) })
    };
    let mut rules = Vec::new();
    for r in &raw.rule {
        let theta = num(&r.theta)?;
        let mut branches = Vec::new();
        for b in &r.branch {
            let offset = b.offset.iter().map(&num).collect::<Result<Vec<f64>>>()?;
            if offset.len() != dim {
                return Err(Error::DimensionMismatch { expected: dim, found: offset.len() });
            }
            let scale = match &b.theta {
                Some(t) => num(t)?,
                None => theta,
            };
            branches.push(Branch { source: lookup(&b.source)?, target: lookup(&b.target)?, scale, offset: Vector::from_slice(&offset)? });
        }
        rules.push(SubstitutionRule { id: r.id.clone(), theta, branches });
    }
    if rules.is_empty() {
        return Err(parse_err("no rules".into()));
    }
    Ok(TypeHFamily { name: raw.name, dim, prototiles, rules })
}

#[derive(Clone, Debug, Serialize)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub witness: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct ValidationReport {
    pub family: String,
    pub checks: Vec<Check>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }
}

pub const CHECK_CONTRACTING: &str = "contracting";
pub const CHECK_UNIFORM: &str = "uniform scaling";
pub const CHECK_ATTRACTOR: &str = "shared attractor";
pub const CHECK_COMPATIBILITY: &str = "compatibility";

/// Runs the four type-H checks. Compatibility is examined on the level-`depth`
/// approximants of every prototile under every word of that length.
pub fn validate_type_h(family: &TypeHFamily, depth: usize) -> ValidationReport {
    let mut checks = Vec::new();

    let bad: Vec<String> = family
        .rules
        .iter()
        .flat_map(|r| r.branches.iter().enumerate().map(move |(k, b)| (r, k, b)))
        .filter(|(_, _, b)| !(b.scale > 0.0 && b.scale < 1.0))
        .map(|(r, k, b)| format!("rule {} branch {k}: scale {}", r.id, b.scale))
        .collect();
    checks.push(Check { name: CHECK_CONTRACTING, passed: bad.is_empty(), witness: bad.join("; ") });

    let bad: Vec<String> = family
        .rules
        .iter()
        .filter_map(|r| {
            let k = r.branches.iter().position(|b| b.scale != r.theta)?;
            Some(format!("rule {} branch {k}: scale {} vs theta {}", r.id, r.branches[k].scale, r.theta))
        })
        .collect();
    checks.push(Check { name: CHECK_UNIFORM, passed: bad.is_empty(), witness: bad.join("; ") });

    checks.push(attractor_check(family));
    checks.push(compatibility_check(family, depth));
    ValidationReport { family: family.name.clone(), checks }
}

fn attractor_check(family: &TypeHFamily) -> Check {
    let mut bad = Vec::new();
    for p in &family.prototiles {
        let depth = p.shape.depth(Vector::ZERO);
        if depth <= EPS {
            bad.push(format!("origin not interior to prototile {} (depth {depth:.3e})", p.id));
        }
    }
    for r in &family.rules {
        for (j, p) in family.prototiles.iter().enumerate() {
            let mut vol = 0.0;
            for k in r.branches_into(j) {
                let b = &r.branches[k];
                let img = family.shape(b.source).transformed(b.scale, b.offset);
                vol += img.volume();
                if p.shape.boundary_gap(&img) < -EPS {
                    bad.push(format!("rule {} branch {k}: image leaves prototile {}", r.id, p.id));
                }
            }
            let target = p.shape.volume();
            if ((vol - target) / target).abs() > 1e-6 {
                bad.push(format!("rule {} target {}: image volume {vol} vs {target}", r.id, p.id));
            }
        }
    }
    Check { name: CHECK_ATTRACTOR, passed: bad.is_empty(), witness: bad.join("; ") }
}

fn compatibility_check(family: &TypeHFamily, depth: usize) -> Check {
    let n = family.n_rules();
    let depth = depth.max(1);
    let words = n.pow(depth as u32);
    for w in 0..words {
        let word: Vec<usize> = (0..depth).map(|i| (w / n.pow(i as u32)) % n).collect();
        for top in 0..family.m() {
            let leaves = expand_leaves(family, &word, top);
            if let Some(witness) = first_overlap(family, &leaves) {
                let label: Vec<&str> = word.iter().map(|&r| family.rules[r].id.as_str()).collect();
                return Check {
                    name: CHECK_COMPATIBILITY,
                    passed: false,
                    witness: format!("word {} prototile {}: {witness}", label.join(","), family.prototiles[top].id),
                };
            }
        }
    }
    Check { name: CHECK_COMPATIBILITY, passed: true, witness: String::new() }
}

struct Leaf {
    proto: usize,
    t: Vector,
    branches: Vec<usize>,
}

/// Level-`word.len()` supertile of type `top` in unit-tile coordinates.
fn expand_leaves(family: &TypeHFamily, word: &[usize], top: usize) -> Vec<Leaf> {
    let mut scale = 1.0;
    let mut scales = vec![1.0];
    for &r in word {
        scale /= family.rules[r].theta;
        scales.push(scale);
    }
    let mut out = Vec::new();
    let mut stack = vec![(word.len(), top, Vector::ZERO, Vec::new())];
    while let Some((level, proto, t, path)) = stack.pop() {
        if level == 0 {
            out.push(Leaf { proto, t, branches: path });
            continue;
        }
        let rule = &family.rules[word[level - 1]];
        for k in rule.branches_into(proto) {
            let b = &rule.branches[k];
            let mut p = path.clone();
            p.push(k);
            stack.push((level - 1, b.source, t + scales[level] * b.offset, p));
        }
    }
    out
}

fn first_overlap(family: &TypeHFamily, leaves: &[Leaf]) -> Option<String> {
    let shapes: Vec<TileShape> = leaves.iter().map(|l| family.shape(l.proto).translated(l.t)).collect();
    let mut order: Vec<usize> = (0..leaves.len()).collect();
    let boxes: Vec<BBox> = shapes.iter().map(|s| s.bbox()).collect();
    order.sort_by(|&a, &b| boxes[a].lo.x.total_cmp(&boxes[b].lo.x));
    for (ii, &i) in order.iter().enumerate() {
        for &j in &order[ii + 1..] {
            if boxes[j].lo.x > boxes[i].hi.x + EPS {
                break;
            }
            if intersection_dimension(&shapes[i], &shapes[j], EPS).ok()? == family.dim as i32 {
                let v = overlap_volume(&shapes[i], &shapes[j]);
                return Some(format!("branch chains {:?} and {:?} overlap with volume {v:.6}", leaves[i].branches, leaves[j].branches));
            }
        }
    }
    None
}

/// Cartesian product of two one-dimensional families with matching rule counts and scales.
pub fn product_family_2d(f: &TypeHFamily, g: &TypeHFamily) -> Result<TypeHFamily> {
    if f.dim != 1 || g.dim != 1 {
        return Err(Error::DimensionMismatch { expected: 1, found: f.dim.max(g.dim) });
    }
    if f.n_rules() != g.n_rules() {
        return Err(Error::Invalid(format!("rule counts differ: {} vs {}", f.n_rules(), g.n_rules())));
    }
    let interval = |s: &TileShape| match s {
        TileShape::Interval { lo, hi } => (*lo, *hi),
        TileShape::Polygon(_) => unreachable!(),
    };
    let mut prototiles = Vec::new();
    for p in &f.prototiles {
        for q in &g.prototiles {
            let (x0, x1) = interval(&p.shape);
            let (y0, y1) = interval(&q.shape);
            prototiles.push(Prototile { id: format!("{}.{}", p.id, q.id), shape: TileShape::rectangle(x0, x1, y0, y1)? });
        }
    }
    let mg = g.m();
    let mut rules = Vec::new();
    for (k, (rf, rg)) in f.rules.iter().zip(&g.rules).enumerate() {
        if (rf.theta - rg.theta).abs() > 1e-12 * rf.theta {
            return Err(Error::ThetaMismatch { rule: k, left: rf.theta, right: rg.theta });
        }
        let mut branches = Vec::new();
        for bf in &rf.branches {
            for bg in &rg.branches {
                branches.push(Branch {
                    source: bf.source * mg + bg.source,
                    target: bf.target * mg + bg.target,
                    scale: rf.theta,
                    offset: Vector::new(bf.offset.x, bg.offset.x),
                });
            }
        }
        rules.push(SubstitutionRule { id: format!("{}x{}", rf.id, rg.id), theta: rf.theta, branches });
    }
    Ok(TypeHFamily { name: format!("{}x{}", f.name, g.name), dim: 2, prototiles, rules })
}
