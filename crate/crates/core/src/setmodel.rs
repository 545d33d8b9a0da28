//! Set descriptors: one-variable cells, level boxes, presented cells,
//! products and unions, with exact membership and combinatorial dimension.

use std::collections::HashSet;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{ToPrimitive, Zero};

use crate::atlas::{IsoPipeline, IsoStep};
use crate::error::{Error, Result};
use crate::hensel::{in_level, in_power_level, nth_power_residues, vp};
use crate::padic::{pow_p, Context, PAdic, Valuation};

pub type Point = Vec<PAdic>;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Cmp {
    Lt,
    Le,
}

impl Cmp {
    pub fn holds(self, a: Valuation, b: Valuation) -> bool {
        match self {
            Cmp::Lt => a < b,
            Cmp::Le => a <= b,
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            Cmp::Lt => "<",
            Cmp::Le => "<=",
        }
    }
}

/// `{x : v(a1) □1 v(x−c) □2 v(a2), x−c ∈ λ·P_n^(level)}`; `λ = 0` is `{c}`.
/// `level = 0` means no level refinement.
#[derive(Clone, Debug, PartialEq)]
pub struct Cell1D {
    pub lower: Option<(PAdic, Cmp)>,
    pub upper: Option<(Cmp, PAdic)>,
    pub c: PAdic,
    pub lambda: PAdic,
    pub n: u64,
    pub level: u32,
}

impl Cell1D {
    pub fn new(
        lower: Option<(PAdic, Cmp)>,
        upper: Option<(Cmp, PAdic)>,
        c: PAdic,
        lambda: PAdic,
        n: u64,
        level: u32,
    ) -> Result<Self> {
        let cell = Cell1D {
            lower,
            upper,
            c,
            lambda,
            n,
            level,
        };
        cell.validate()?;
        Ok(cell)
    }

    /// `{x : v(a1) ≤ v(x), x ∈ λ P_n^(level)}` with `a1 = π^lo`.
    pub fn lower_bounded(ctx: &Context, lo: i64, lambda: PAdic, n: u64, level: u32) -> Self {
        Cell1D {
            lower: Some((ctx.pi_pow(lo), Cmp::Le)),
            upper: None,
            c: ctx.zero(),
            lambda,
            n,
            level,
        }
    }

    /// `{x : lo ≤ v(x) ≤ hi, x ∈ λ P_n^(level)}`.
    pub fn window(ctx: &Context, lo: i64, hi: i64, lambda: PAdic, n: u64, level: u32) -> Self {
        Cell1D {
            lower: Some((ctx.pi_pow(lo), Cmp::Le)),
            upper: Some((Cmp::Le, ctx.pi_pow(hi))),
            c: ctx.zero(),
            lambda,
            n,
            level,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let all = [Some(&self.c), Some(&self.lambda)]
            .into_iter()
            .chain([self.lower.as_ref().map(|l| &l.0), self.upper.as_ref().map(|u| &u.1)])
            .flatten();
        for v in all {
            if !v.is_exact() {
                return Err(Error::Descriptor(format!("cell data {v} must be exact")));
            }
        }
        if self.lower.as_ref().is_some_and(|(a, _)| a.is_zero())
            || self.upper.as_ref().is_some_and(|(_, a)| a.is_zero())
        {
            return Err(Error::Descriptor("cell bounds must be nonzero".into()));
        }
        if self.n == 0 {
            return Err(Error::Descriptor("cell exponent n must be at least 1".into()));
        }
        Ok(())
    }

    pub fn is_singleton(&self) -> bool {
        self.lambda.is_zero()
    }

    /// Inclusive bounds on `v(x − c)` after resolving strict comparisons.
    pub fn valuation_window(&self) -> (Option<i64>, Option<i64>) {
        let lo = self.lower.as_ref().map(|(a, cmp)| {
            let v = a.v().expect("nonzero bound");
            if *cmp == Cmp::Lt {
                v + 1
            } else {
                v
            }
        });
        let hi = self.upper.as_ref().map(|(cmp, a)| {
            let v = a.v().expect("nonzero bound");
            if *cmp == Cmp::Lt {
                v - 1
            } else {
                v
            }
        });
        (lo, hi)
    }

    /// Valuations `v(x − c)` attained inside the window: `v(λ) + n·Z`.
    pub fn admits_valuation(&self, v: i64) -> bool {
        if self.lambda.is_zero() {
            return false;
        }
        let (lo, hi) = self.valuation_window();
        let lv = self.lambda.v().expect("nonzero lambda");
        lo.is_none_or(|lo| v >= lo) && hi.is_none_or(|hi| v <= hi) && (v - lv).rem_euclid(self.n as i64) == 0
    }

    pub fn is_empty(&self) -> bool {
        if self.lambda.is_zero() {
            return false;
        }
        let (lo, hi) = self.valuation_window();
        match (lo, hi) {
            (Some(lo), Some(hi)) => !(lo..=hi).any(|v| self.admits_valuation(v)),
            _ => false,
        }
    }

    pub fn member(&self, x: &PAdic) -> Result<bool> {
        if self.lambda.is_zero() {
            return coord_equals(x, &self.c);
        }
        let d = x.sub(&self.c).map_err(|e| match e {
            Error::PrecisionExhausted(a) => Error::Indeterminate(format!("x − c vanishes to p^{a}")),
            other => other,
        })?;
        if d.is_zero() {
            return Ok(false);
        }
        let vd = d.val();
        if let Some((a, cmp)) = &self.lower {
            if !cmp.holds(a.val(), vd) {
                return Ok(false);
            }
        }
        if let Some((cmp, a)) = &self.upper {
            if !cmp.holds(vd, a.val()) {
                return Ok(false);
            }
        }
        in_power_level(&d.div(&self.lambda)?, self.n, self.level)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Side {
    /// `v(x_j) □ v(β ∏ x_i^{e_i})`
    Upper,
    /// `v(β ∏ x_i^{e_i}) □ v(x_j)`
    Lower,
}

/// A monomial valuation bound on coordinate `coord`.
#[derive(Clone, Debug, PartialEq)]
pub struct MonomialBound {
    pub coord: usize,
    pub side: Side,
    pub cmp: Cmp,
    pub beta: PAdic,
    pub exps: Vec<i64>,
}

/// `x_coord ∈ γ · P_n^(level)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Coset {
    pub coord: usize,
    pub gamma: PAdic,
    pub n: u64,
    pub level: u32,
}

/// `Σ a_i v(x_i) ≤ b`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct LinearConstraint {
    pub a: Vec<i64>,
    pub b: i64,
}

impl LinearConstraint {
    pub fn holds(&self, t: &[i64]) -> bool {
        self.a.iter().zip(t).map(|(a, t)| a * t).sum::<i64>() <= self.b
    }
}

/// A subset of `∏_{i=1}^l R^(k)` cut out by monomial valuation bounds and
/// coset conditions.
#[derive(Clone, Debug, PartialEq)]
pub struct PresentedCell {
    pub l: usize,
    pub k: u32,
    pub bounds: Vec<MonomialBound>,
    pub cosets: Vec<Coset>,
}

impl PresentedCell {
    pub fn validate(&self) -> Result<()> {
        if self.l == 0 {
            return Err(Error::Descriptor("presented cell needs l ≥ 1".into()));
        }
        for b in &self.bounds {
            if b.coord >= self.l || b.exps.len() != self.l {
                return Err(Error::Descriptor("bound refers to a missing coordinate".into()));
            }
            if b.exps[b.coord] != 0 {
                return Err(Error::Descriptor(
                    "bound exponent on the bounded coordinate must be 0".into(),
                ));
            }
            if b.beta.is_zero() || !b.beta.is_exact() {
                return Err(Error::Descriptor("bound constant must be exact and nonzero".into()));
            }
        }
        for c in &self.cosets {
            if c.coord >= self.l || c.gamma.is_zero() || !c.gamma.is_exact() || c.n == 0 {
                return Err(Error::Descriptor("invalid coset condition".into()));
            }
        }
        Ok(())
    }

    /// The bounds as linear inequalities on the valuation vector.
    pub fn constraints(&self) -> Vec<LinearConstraint> {
        self.bounds
            .iter()
            .map(|bd| {
                let vb = bd.beta.v().expect("nonzero beta");
                let strict = if bd.cmp == Cmp::Lt { 1 } else { 0 };
                let mut a = vec![0; self.l];
                match bd.side {
                    Side::Upper => {
                        for (i, e) in bd.exps.iter().enumerate() {
                            a[i] = -e;
                        }
                        a[bd.coord] = 1;
                        LinearConstraint { a, b: vb - strict }
                    }
                    Side::Lower => {
                        a.clone_from(&bd.exps);
                        a[bd.coord] = -1;
                        LinearConstraint { a, b: -vb - strict }
                    }
                }
            })
            .collect()
    }

    pub fn member(&self, x: &[PAdic]) -> Result<bool> {
        if x.len() != self.l {
            return Ok(false);
        }
        let mut t = Vec::with_capacity(self.l);
        for xi in x {
            match xi.val() {
                Valuation::Finite(v) if v >= 0 => t.push(v),
                _ => return Ok(false),
            }
            if !in_level(xi, self.k)? {
                return Ok(false);
            }
        }
        if !self.constraints().iter().all(|c| c.holds(&t)) {
            return Ok(false);
        }
        for c in &self.cosets {
            if !in_power_level(&x[c.coord].div(&c.gamma)?, c.n, c.level)? {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// Residue classes of unit parts allowed on a coordinate, as a test
    /// over `(Z/p^M)^×`.
    fn unit_feasible(&self, p: u32, coord: usize) -> Result<bool> {
        let cs: Vec<&Coset> = self.cosets.iter().filter(|c| c.coord == coord).collect();
        let mut m = self.k.max(1);
        for c in &cs {
            m = m.max(c.level).max(2 * vp(p, c.n) + 1);
        }
        let modulus = (p as u64)
            .checked_pow(m)
            .filter(|&x| x <= 1 << 22)
            .ok_or_else(|| Error::Descriptor("coset data too fine to decide".into()))?;
        let mb = BigInt::from(modulus);
        let one_mod_k = pow_p(p, self.k);
        'units: for u in 1..modulus {
            if u % p as u64 == 0 {
                continue;
            }
            let ub = BigInt::from(u);
            if self.k > 0 && !(&ub - 1u32).mod_floor(&one_mod_k).is_zero() {
                continue;
            }
            for c in &cs {
                let g = c.gamma.unit_residue(m)?;
                let q = (&ub * crate::padic::mod_inverse(&g, &mb)).mod_floor(&mb);
                if c.level > 0 && !(&q - 1u32).mod_floor(&pow_p(p, c.level)).is_zero() {
                    continue 'units;
                }
                if c.n > 1 {
                    let table = nth_power_residues(p, c.n)?;
                    let r = q.mod_floor(&pow_p(p, 2 * vp(p, c.n) + 1));
                    if !table[r.to_usize().expect("small")] {
                        continue 'units;
                    }
                }
            }
            return Ok(true);
        }
        Ok(false)
    }

    /// Nonemptiness: unit feasibility per coordinate plus a bounded search
    /// for a valuation vector satisfying every bound and congruence.
    pub fn is_nonempty(&self, p: u32) -> Result<bool> {
        for i in 0..self.l {
            if !self.unit_feasible(p, i)? {
                return Ok(false);
            }
        }
        let cons = self.constraints();
        let mut congr: Vec<Vec<(i64, i64)>> = vec![Vec::new(); self.l];
        for c in &self.cosets {
            congr[c.coord].push((c.n as i64, c.gamma.v()?));
        }
        let scale = cons
            .iter()
            .map(|c| c.b.abs() + c.a.iter().map(|a| a.abs()).sum::<i64>())
            .max()
            .unwrap_or(0);
        let nmax = self.cosets.iter().map(|c| c.n as i64).max().unwrap_or(1);
        let mut bound = 2 * (scale + 1) * nmax + 2;
        while (bound as f64 + 1.0).powi(self.l as i32) > 4.0e6 && bound > 4 {
            bound -= 1;
        }
        let mut t = vec![0i64; self.l];
        Ok(search(&mut t, 0, bound, &cons, &congr))
    }
}

fn search(t: &mut Vec<i64>, i: usize, bound: i64, cons: &[LinearConstraint], congr: &[Vec<(i64, i64)>]) -> bool {
    if i == t.len() {
        return cons.iter().all(|c| c.holds(t));
    }
    for v in 0..=bound {
        if congr[i].iter().any(|(n, r)| (v - r).rem_euclid(*n) != 0) {
            continue;
        }
        t[i] = v;
        if search(t, i + 1, bound, cons, congr) {
            return true;
        }
    }
    false
}

/// A function on a set known through its valuation:
/// `v(b(x)) = v(β ∏ (x_i − c_i)^{μ_i}) / e`, with `c` the centres of the set.
#[derive(Clone, Debug, PartialEq)]
pub struct MonomialForm {
    pub e: u64,
    pub beta: PAdic,
    pub mu: Vec<i64>,
}

impl MonomialForm {
    pub fn validate(&self, arity: usize) -> Result<()> {
        if self.e == 0 || !self.beta.is_exact() || self.mu.len() != arity {
            return Err(Error::Descriptor(format!(
                "form needs e ≥ 1, exact β and {arity} exponents"
            )));
        }
        Ok(())
    }

    /// The form's valuation at `x`.
    pub fn valuation(&self, x: &[PAdic], centers: &[PAdic]) -> Result<Valuation> {
        if x.len() != self.mu.len() || centers.len() != x.len() {
            return Err(Error::Shape("form arity".into()));
        }
        let mut total = self.beta.val();
        for ((xi, ci), &m) in x.iter().zip(centers).zip(&self.mu) {
            if m == 0 {
                continue;
            }
            let d = xi.sub(ci).map_err(|e| match e {
                Error::PrecisionExhausted(a) => Error::Indeterminate(format!("x − c vanishes to p^{a}")),
                other => other,
            })?;
            match d.val() {
                Valuation::Infinity if m < 0 => return Err(Error::NonIntegralForm("form has a pole".into())),
                Valuation::Infinity => total = Valuation::Infinity,
                Valuation::Finite(v) => {
                    if let Valuation::Finite(t) = total {
                        total = Valuation::Finite(t + m * v);
                    }
                }
            }
        }
        match total {
            Valuation::Finite(t) if t.rem_euclid(self.e as i64) != 0 => Err(Error::NonIntegralForm(format!(
                "valuation {t} not divisible by e = {}",
                self.e
            ))),
            Valuation::Finite(t) => Ok(Valuation::Finite(t / self.e as i64)),
            Valuation::Infinity => Ok(Valuation::Infinity),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum SetDescriptor {
    Empty {
        arity: usize,
    },
    Point(Point),
    Cell(Cell1D),
    /// `∏_{i=1}^l R^(k)`; `l = 0` is the one-point space `K^0`.
    LevelBox {
        l: usize,
        k: u32,
    },
    Presented(PresentedCell),
    /// `K^d`.
    Space(usize),
    Product(Box<SetDescriptor>, Box<SetDescriptor>),
    /// Disjoint union of sets of the same arity.
    Union(Vec<SetDescriptor>),
    /// `⋃ {t} × S_t`, the tag stored as the first coordinate.
    Tagged(Vec<(i64, SetDescriptor)>),
    /// `base ∖ points`.
    Excluding {
        base: Box<SetDescriptor>,
        points: Vec<Point>,
    },
    /// Forward image of a pipeline's source.
    Image(Box<IsoPipeline>),
}

/// Exact equality of coordinates; truncated values agreeing on all known
/// digits with the other value are undecidable.
pub fn coord_equals(x: &PAdic, y: &PAdic) -> Result<bool> {
    if x.is_exact() && y.is_exact() {
        return Ok(x == y);
    }
    if x.agrees_with(y)? {
        Err(Error::Indeterminate(format!("{x} vs {y}")))
    } else {
        Ok(false)
    }
}

pub fn points_equal(x: &[PAdic], y: &[PAdic]) -> Result<bool> {
    if x.len() != y.len() {
        return Ok(false);
    }
    let mut undecided = None;
    for (a, b) in x.iter().zip(y) {
        match coord_equals(a, b) {
            Ok(false) => return Ok(false),
            Ok(true) => {}
            Err(e) => undecided = Some(e),
        }
    }
    match undecided {
        Some(e) => Err(e),
        None => Ok(true),
    }
}

impl SetDescriptor {
    /// `R = {v ≥ 0}`, as `{0} ∪ (R ∖ {0})`.
    pub fn valuation_ring(ctx: &Context) -> Self {
        SetDescriptor::Union(vec![
            SetDescriptor::Point(vec![ctx.zero()]),
            SetDescriptor::nonzero_ring(ctx),
        ])
    }

    /// `R ∖ {0}`.
    pub fn nonzero_ring(ctx: &Context) -> Self {
        SetDescriptor::Cell(Cell1D::lower_bounded(ctx, 0, ctx.one(), 1, 0))
    }

    /// `R^(k)` as a one-variable set.
    pub fn level_ring(k: u32) -> Self {
        SetDescriptor::LevelBox { l: 1, k }
    }

    pub fn product(a: SetDescriptor, b: SetDescriptor) -> Self {
        SetDescriptor::Product(Box::new(a), Box::new(b))
    }

    pub fn product_of(parts: Vec<SetDescriptor>) -> Self {
        let mut it = parts.into_iter().rev();
        let Some(mut acc) = it.next() else {
            return SetDescriptor::Space(0);
        };
        for d in it {
            acc = SetDescriptor::product(d, acc);
        }
        acc
    }

    pub fn arity(&self) -> Option<usize> {
        match self {
            SetDescriptor::Empty { arity } => Some(*arity),
            SetDescriptor::Point(x) => Some(x.len()),
            SetDescriptor::Cell(_) => Some(1),
            SetDescriptor::LevelBox { l, .. } => Some(*l),
            SetDescriptor::Presented(c) => Some(c.l),
            SetDescriptor::Space(d) => Some(*d),
            SetDescriptor::Product(a, b) => Some(a.arity()? + b.arity()?),
            SetDescriptor::Union(parts) => {
                let first = parts.first()?.arity()?;
                parts.iter().all(|s| s.arity() == Some(first)).then_some(first)
            }
            SetDescriptor::Tagged(parts) => {
                let first = parts.first()?.1.arity()?;
                parts.iter().all(|(_, s)| s.arity() == Some(first)).then_some(first + 1)
            }
            SetDescriptor::Excluding { base, .. } => base.arity(),
            SetDescriptor::Image(pl) => pl.target_arity(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            SetDescriptor::Point(x) => {
                if x.iter().any(|c| !c.is_exact()) {
                    return Err(Error::Descriptor("point coordinates must be exact".into()));
                }
                Ok(())
            }
            SetDescriptor::Cell(c) => c.validate(),
            SetDescriptor::Presented(c) => c.validate(),
            SetDescriptor::Product(a, b) => {
                a.validate()?;
                b.validate()?;
                if a.arity().is_none() {
                    return Err(Error::Descriptor("product factor needs a fixed arity".into()));
                }
                Ok(())
            }
            SetDescriptor::Union(parts) => {
                for s in parts {
                    s.validate()?;
                }
                if !parts.is_empty() && self.arity().is_none() {
                    return Err(Error::Descriptor("union parts must share an arity".into()));
                }
                Ok(())
            }
            SetDescriptor::Tagged(parts) => {
                let mut seen = HashSet::new();
                for (t, s) in parts {
                    if !seen.insert(*t) {
                        return Err(Error::Descriptor(format!("duplicate tag {t}")));
                    }
                    s.validate()?;
                }
                Ok(())
            }
            SetDescriptor::Excluding { base, .. } => base.validate(),
            _ => Ok(()),
        }
    }

    /// Exact membership; truncated coordinates raise `Indeterminate` when a
    /// condition depends on digits that are not known.
    pub fn member(&self, x: &[PAdic]) -> Result<bool> {
        match self {
            SetDescriptor::Empty { .. } => Ok(false),
            SetDescriptor::Point(y) => points_equal(x, y),
            SetDescriptor::Cell(c) => {
                if x.len() != 1 {
                    return Ok(false);
                }
                c.member(&x[0])
            }
            SetDescriptor::LevelBox { l, k } => {
                if x.len() != *l {
                    return Ok(false);
                }
                for xi in x {
                    if xi.val() < Valuation::Finite(0) || !in_level(xi, *k)? {
                        return Ok(false);
                    }
                }
                Ok(true)
            }
            SetDescriptor::Presented(c) => c.member(x),
            SetDescriptor::Space(d) => Ok(x.len() == *d),
            SetDescriptor::Product(a, b) => {
                let na = a.arity().ok_or_else(|| Error::Descriptor("product arity".into()))?;
                if x.len() < na {
                    return Ok(false);
                }
                Ok(a.member(&x[..na])? && b.member(&x[na..])?)
            }
            SetDescriptor::Union(parts) => {
                let mut undecided = None;
                for s in parts {
                    match s.member(x) {
                        Ok(true) => return Ok(true),
                        Ok(false) => {}
                        Err(e) if e.is_precision() => undecided = Some(e),
                        Err(e) => return Err(e),
                    }
                }
                match undecided {
                    Some(e) => Err(e),
                    None => Ok(false),
                }
            }
            SetDescriptor::Tagged(parts) => {
                let Some(tag) = x.first() else {
                    return Ok(false);
                };
                let Some(t) = tag.is_exact().then(|| tag.to_i64()).flatten() else {
                    return Ok(false);
                };
                match parts.iter().find(|(tt, _)| *tt == t) {
                    Some((_, s)) => s.member(&x[1..]),
                    None => Ok(false),
                }
            }
            SetDescriptor::Excluding { base, points } => {
                if !base.member(x)? {
                    return Ok(false);
                }
                for q in points {
                    if points_equal(x, q)? {
                        return Ok(false);
                    }
                }
                Ok(true)
            }
            SetDescriptor::Image(pl) => pl.image_member(x),
        }
    }

    /// Combinatorial dimension; `-1` for the empty set.
    pub fn dimension(&self, ctx: &Context) -> Result<i64> {
        Ok(match self {
            SetDescriptor::Empty { .. } => -1,
            SetDescriptor::Point(_) => 0,
            SetDescriptor::Cell(c) => {
                if c.is_singleton() {
                    0
                } else if c.is_empty() {
                    -1
                } else {
                    1
                }
            }
            SetDescriptor::LevelBox { l, .. } => *l as i64,
            SetDescriptor::Presented(c) => {
                if c.is_nonempty(ctx.p())? {
                    c.l as i64
                } else {
                    -1
                }
            }
            SetDescriptor::Space(d) => *d as i64,
            SetDescriptor::Product(a, b) => {
                let (da, db) = (a.dimension(ctx)?, b.dimension(ctx)?);
                if da < 0 || db < 0 {
                    -1
                } else {
                    da + db
                }
            }
            SetDescriptor::Union(parts) => parts
                .iter()
                .map(|s| s.dimension(ctx))
                .collect::<Result<Vec<_>>>()?
                .into_iter()
                .max()
                .unwrap_or(-1),
            SetDescriptor::Tagged(parts) => parts
                .iter()
                .map(|(_, s)| s.dimension(ctx))
                .collect::<Result<Vec<_>>>()?
                .into_iter()
                .max()
                .unwrap_or(-1),
            SetDescriptor::Excluding { base, points } => {
                let d = base.dimension(ctx)?;
                if d == 0 {
                    let pts = base.finite_points(ctx)?;
                    let mut left = 0;
                    for q in &pts {
                        let mut removed = false;
                        for r in points {
                            removed |= points_equal(q, r)?;
                        }
                        if !removed {
                            left += 1;
                        }
                    }
                    if left == 0 {
                        -1
                    } else {
                        0
                    }
                } else {
                    d
                }
            }
            SetDescriptor::Image(pl) => pl.source.dimension(ctx)?,
        })
    }

    /// All points of a zero-dimensional set.
    pub fn finite_points(&self, ctx: &Context) -> Result<Vec<Point>> {
        match self {
            SetDescriptor::Empty { .. } => Ok(vec![]),
            SetDescriptor::Point(x) => Ok(vec![x.clone()]),
            SetDescriptor::Cell(c) if c.is_singleton() => Ok(vec![vec![c.c.clone()]]),
            SetDescriptor::Cell(c) if c.is_empty() => Ok(vec![]),
            SetDescriptor::LevelBox { l: 0, .. } | SetDescriptor::Space(0) => Ok(vec![vec![]]),
            SetDescriptor::Presented(c) if !c.is_nonempty(ctx.p())? => Ok(vec![]),
            SetDescriptor::Product(a, b) => {
                let pa = a.finite_points(ctx)?;
                let pb = b.finite_points(ctx)?;
                let mut out = Vec::new();
                for x in &pa {
                    for y in &pb {
                        let mut z = x.clone();
                        z.extend(y.iter().cloned());
                        out.push(z);
                    }
                }
                Ok(out)
            }
            SetDescriptor::Union(parts) => {
                let mut out = Vec::new();
                for s in parts {
                    out.extend(s.finite_points(ctx)?);
                }
                Ok(out)
            }
            SetDescriptor::Tagged(parts) => {
                let mut out = Vec::new();
                for (t, s) in parts {
                    for x in s.finite_points(ctx)? {
                        let mut z = vec![ctx.int(*t)];
                        z.extend(x);
                        out.push(z);
                    }
                }
                Ok(out)
            }
            SetDescriptor::Excluding { base, points } => {
                let mut out = Vec::new();
                for q in base.finite_points(ctx)? {
                    let mut removed = false;
                    for r in points {
                        removed |= points_equal(&q, r)?;
                    }
                    if !removed {
                        out.push(q);
                    }
                }
                Ok(out)
            }
            SetDescriptor::Image(pl) => pl.source.finite_points(ctx)?.iter().map(|x| pl.forward(x)).collect(),
            _ => Err(Error::Descriptor("set is infinite".into())),
        }
    }

    pub fn is_finite(&self, ctx: &Context) -> Result<bool> {
        Ok(self.dimension(ctx)? <= 0)
    }
}

/// Centres of the coordinates in which forms on a set are written:
/// `c` for a one-variable cell, the tag for a tag coordinate, 0 otherwise.
pub fn centers(s: &SetDescriptor, ctx: &Context) -> Result<Vec<PAdic>> {
    Ok(match s {
        SetDescriptor::Cell(c) => vec![c.c.clone()],
        SetDescriptor::Product(a, b) => {
            let mut v = centers(a, ctx)?;
            v.extend(centers(b, ctx)?);
            v
        }
        other => vec![ctx.zero(); other.arity().ok_or_else(|| Error::Shape("no fixed arity".into()))?],
    })
}

/// Unit residues mod `p^M`, `M = max(k, 2v(n)+1)`, picking one
/// representative per class of `(Z/p^M)^× / (units of P_n^(k))`.
pub fn unit_class_reps(p: u32, n: u64, k: u32) -> Result<(u32, Vec<u64>)> {
    let m = k.max(2 * vp(p, n) + 1).max(1);
    let modulus = (p as u64)
        .checked_pow(m)
        .filter(|&x| x <= 1 << 22)
        .ok_or_else(|| Error::InvalidValue("coset modulus too large".into()))?;
    let table = nth_power_residues(p, n)?;
    let tm = table.len() as u64;
    let km = (p as u64).pow(k);
    let subgroup: Vec<u64> = (1..modulus)
        .filter(|u| u % p as u64 != 0 && (u % km == 1 % km) && table[(u % tm) as usize])
        .collect();
    let mut covered = vec![false; modulus as usize];
    let mut reps = Vec::new();
    for w in 1..modulus {
        if w % p as u64 == 0 || covered[w as usize] {
            continue;
        }
        reps.push(w);
        for h in &subgroup {
            covered[((w as u128 * *h as u128) % modulus as u128) as usize] = true;
        }
    }
    Ok((m, reps))
}

/// Coset representatives `π^r·w` of `K^× / P_n^(k)` with `0 ≤ r < n`.
pub fn coset_reps(ctx: &Context, n: u64, k: u32) -> Result<Vec<PAdic>> {
    let (_, units) = unit_class_reps(ctx.p(), n, k)?;
    let mut out = Vec::new();
    for r in 0..n as i64 {
        for &w in &units {
            out.push(ctx.int(w as i64).mul_pi_pow(r));
        }
    }
    Ok(out)
}

/// Partition of a cell (with `c = 0`) or a one-variable level box into
/// pieces `S ∩ γ P_n^(k')`. The coset condition of `S` must be coarser
/// than the split: `S.n | n`, `S.level ≤ k'`.
pub fn coset_split(ctx: &Context, s: &SetDescriptor, n: u64, k: u32) -> Result<Vec<(PAdic, SetDescriptor)>> {
    let cell = match s {
        SetDescriptor::Cell(c) => c.clone(),
        SetDescriptor::LevelBox { l: 1, k: lk } => Cell1D::lower_bounded(ctx, 0, ctx.one(), 1, *lk),
        _ => return Err(Error::Descriptor("coset_split needs a cell or R^(k)".into())),
    };
    if !cell.c.is_zero() || cell.is_singleton() {
        return Err(Error::Descriptor("coset_split needs a centred cell with λ ≠ 0".into()));
    }
    if n % cell.n != 0 || cell.level > k {
        return Err(Error::Descriptor(format!(
            "split by P_{n}^({k}) does not refine P_{}^({})",
            cell.n, cell.level
        )));
    }
    let mut out = Vec::new();
    for gamma in coset_reps(ctx, n, k)? {
        let q = gamma.div(&cell.lambda)?;
        if !in_power_level(&q, cell.n, cell.level)? {
            continue;
        }
        let piece = Cell1D {
            lambda: gamma.clone(),
            n,
            level: k,
            ..cell.clone()
        };
        if piece.is_empty() {
            continue;
        }
        out.push((gamma, SetDescriptor::Cell(piece)));
    }
    Ok(out)
}

/// A cell in the normal form `v(a1) ≤ v(x) □ v(a2)`, `c = 0`, together with
/// the pipeline carrying it onto the corresponding piece of the input.
pub fn normalize_cell(ctx: &Context, c: &Cell1D) -> Result<Vec<(Cell1D, IsoPipeline)>> {
    if c.is_singleton() {
        return Err(Error::Descriptor("λ = 0: the cell is a point".into()));
    }
    c.validate()?;
    let (lo, hi) = c.valuation_window();
    let mut pieces: Vec<(Option<i64>, Option<i64>)> = Vec::new();
    match (lo, hi) {
        (None, None) => {
            pieces.push((Some(0), None));
            pieces.push((None, Some(-1)));
        }
        other => pieces.push(other),
    }
    let mut out = Vec::new();
    for (lo, hi) in pieces {
        // Piece of the original cell (before translation) as a descriptor.
        let piece = Cell1D {
            lower: lo.map(|v| (ctx.pi_pow(v), Cmp::Le)),
            upper: hi.map(|v| (Cmp::Le, ctx.pi_pow(v))),
            ..c.clone()
        };
        if piece.is_empty() {
            continue;
        }
        let mut steps = Vec::new();
        let normalized = match lo {
            Some(lo) => Cell1D {
                lower: Some((ctx.pi_pow(lo), Cmp::Le)),
                upper: hi.map(|v| (Cmp::Le, ctx.pi_pow(v))),
                c: ctx.zero(),
                lambda: c.lambda.clone(),
                n: c.n,
                level: c.level,
            },
            None => {
                let hi = hi.expect("one bound present");
                steps.push(IsoStep::Invert);
                Cell1D {
                    lower: Some((ctx.pi_pow(-hi), Cmp::Le)),
                    upper: None,
                    c: ctx.zero(),
                    lambda: c.lambda.inv()?,
                    n: c.n,
                    level: c.level,
                }
            }
        };
        if !c.c.is_zero() {
            steps.push(IsoStep::Translate(c.c.clone()));
        }
        let pl = IsoPipeline::new(
            SetDescriptor::Cell(normalized.clone()),
            SetDescriptor::Cell(piece),
            steps,
        );
        out.push((normalized, pl));
    }
    Ok(out)
}
