//! Atomic invertible maps, pipelines built from them, and the standard
//! witnesses: `R ≅ R∖{0}`, `K ≅ R∖{0}`, `R^(k) ≅ R∖{0}`, finite unions of
//! copies of a valuation-saturated set, and disjoint realization of two sets.

use crate::error::{Error, Result};
use crate::hensel::{in_level, nth_root_in_level, vp};
use crate::padic::{Context, PAdic, Valuation, DEFAULT_PRECISION};
use crate::setmodel::{coord_equals, coset_reps, Cell1D, Point, SetDescriptor};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Direction {
    Forward,
    Backward,
}

impl Direction {
    pub fn flip(self) -> Self {
        match self {
            Direction::Forward => Direction::Backward,
            Direction::Backward => Direction::Forward,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum IsoStep {
    /// `x ↦ x + c`
    Translate(PAdic),
    /// `x ↦ a·x`
    Scale(PAdic),
    /// `x ↦ 1/x`
    Invert,
    /// `x ↦ γ·x^n` on `K^(k)`, `k > v(n)`.
    PowerCoset { gamma: PAdic, n: u64, k: u32 },
    /// `x_j ↦ α·x_j·∏_{i≠j} x_i^{η_i}`, other coordinates fixed.
    MonomialTwist { coord: usize, alpha: PAdic, exps: Vec<i64> },
    /// `(t, x, …) ↦ (x·π^{v(x)+t}, …)` for `t ∈ {0,1}`, `x ≠ 0`.
    ValuationInterleave,
    /// On `R`: `0 ↦ 1`, `π^n ↦ π^{n+1}`, identity elsewhere.
    HotelShift,
    /// `(0, x) ↦ x` on `R`, `(1, x) ↦ 1/(πx)` on `R∖{0}`.
    PairToK,
    /// Inserts a constant coordinate at `pos`.
    InsertConst { pos: usize, value: PAdic },
    /// `y_i = x_{perm[i]}`.
    Permute(Vec<usize>),
    /// Consecutive coordinate blocks `(width, steps)`, each mapped separately.
    CoordinateMap(Vec<(usize, Vec<IsoStep>)>),
    /// Disjoint branches; a point is sent through the branch whose source
    /// contains it.
    CaseSplit(Vec<IsoPipeline>),
    /// The inverse of a step.
    Inverse(Box<IsoStep>),
}

fn single(x: &[PAdic], step: &str) -> Result<PAdic> {
    match x {
        [a] => Ok(a.clone()),
        _ => Err(Error::Shape(format!("{step} acts on one coordinate, got {}", x.len()))),
    }
}

fn tag_of(t: &PAdic, step: &str) -> Result<i64> {
    match (t.is_exact(), t.to_i64()) {
        (true, Some(v)) => Ok(v),
        _ => Err(Error::domain(step, format!("tag {t} is not an exact integer"))),
    }
}

/// Whether `x = π^n` for some `n`.
fn is_pi_power(x: &PAdic) -> Result<bool> {
    if x.is_zero() {
        return Ok(false);
    }
    if x.is_exact() {
        return Ok(x.unit_part()? == PAdic::from_i64(x.p(), 1));
    }
    let prec = x.relative_precision().unwrap_or(0);
    if x.unit_residue(prec)? == 1.into() {
        Err(Error::Indeterminate(format!(
            "{x} agrees with a power of π on every known digit"
        )))
    } else {
        Ok(false)
    }
}

impl IsoStep {
    pub fn name(&self) -> &'static str {
        match self {
            IsoStep::Translate(_) => "translate",
            IsoStep::Scale(_) => "scale",
            IsoStep::Invert => "invert",
            IsoStep::PowerCoset { .. } => "power",
            IsoStep::MonomialTwist { .. } => "twist",
            IsoStep::ValuationInterleave => "interleave",
            IsoStep::HotelShift => "hotel",
            IsoStep::PairToK => "pair_to_k",
            IsoStep::InsertConst { .. } => "insert",
            IsoStep::Permute(_) => "permute",
            IsoStep::CoordinateMap(_) => "coords",
            IsoStep::CaseSplit(_) => "cases",
            IsoStep::Inverse(_) => "inverse",
        }
    }

    /// Output arity minus input arity.
    pub fn arity_delta(&self) -> i64 {
        match self {
            IsoStep::ValuationInterleave | IsoStep::PairToK => -1,
            IsoStep::InsertConst { .. } => 1,
            IsoStep::CoordinateMap(blocks) => blocks
                .iter()
                .flat_map(|(_, s)| s.iter())
                .map(IsoStep::arity_delta)
                .sum(),
            IsoStep::CaseSplit(branches) => branches
                .first()
                .map(|b| b.steps.iter().map(IsoStep::arity_delta).sum())
                .unwrap_or(0),
            IsoStep::Inverse(s) => -s.arity_delta(),
            _ => 0,
        }
    }

    pub fn inverse(&self) -> IsoStep {
        match self {
            IsoStep::Inverse(s) => (**s).clone(),
            IsoStep::Invert => IsoStep::Invert,
            other => IsoStep::Inverse(Box::new(other.clone())),
        }
    }

    pub fn apply(&self, dir: Direction, x: &[PAdic]) -> Result<Point> {
        match dir {
            Direction::Forward => self.forward(x),
            Direction::Backward => self.backward(x),
        }
    }

    pub fn forward(&self, x: &[PAdic]) -> Result<Point> {
        match self {
            IsoStep::Translate(c) => Ok(vec![single(x, "translate")?.add(c)?]),
            IsoStep::Scale(a) => Ok(vec![single(x, "scale")?.mul(a)?]),
            IsoStep::Invert => {
                let a = single(x, "invert")?;
                if a.is_zero() {
                    return Err(Error::domain("invert", "0 has no inverse"));
                }
                Ok(vec![a.inv()?])
            }
            IsoStep::PowerCoset { gamma, n, k } => {
                let a = single(x, "power")?;
                if !in_level(&a, *k)? {
                    return Err(Error::domain("power", format!("{a} is not in K^({k})")));
                }
                Ok(vec![gamma.mul(&a.pow(*n as i64)?)?])
            }
            IsoStep::MonomialTwist { coord, alpha, exps } => {
                let m = twist_factor(x, *coord, alpha, exps)?;
                let mut y = x.to_vec();
                y[*coord] = x[*coord].mul(&m)?;
                Ok(y)
            }
            IsoStep::ValuationInterleave => {
                if x.len() < 2 {
                    return Err(Error::Shape("interleave needs a tag and a coordinate".into()));
                }
                let t = tag_of(&x[0], "interleave")?;
                if !(t == 0 || t == 1) {
                    return Err(Error::domain("interleave", format!("tag {t} not in {{0,1}}")));
                }
                let v = x[1].v().map_err(|_| Error::domain("interleave", "coordinate is 0"))?;
                let mut y = vec![x[1].mul_pi_pow(v + t)];
                y.extend_from_slice(&x[2..]);
                Ok(y)
            }
            IsoStep::HotelShift => {
                let a = single(x, "hotel")?;
                if a.val() < Valuation::Finite(0) {
                    return Err(Error::domain("hotel", format!("{a} is not in R")));
                }
                if a.is_zero() {
                    return Ok(vec![PAdic::from_i64(a.p(), 1)]);
                }
                if is_pi_power(&a)? {
                    return Ok(vec![a.mul_pi_pow(1)]);
                }
                Ok(vec![a])
            }
            IsoStep::PairToK => {
                let [t, a] = x else {
                    return Err(Error::Shape("pair_to_k acts on (tag, x)".into()));
                };
                if a.val() < Valuation::Finite(0) {
                    return Err(Error::domain("pair_to_k", format!("{a} is not in R")));
                }
                match tag_of(t, "pair_to_k")? {
                    0 => Ok(vec![a.clone()]),
                    1 if !a.is_zero() => Ok(vec![a.mul_pi_pow(1).inv()?]),
                    1 => Err(Error::domain("pair_to_k", "tag 1 needs x ≠ 0")),
                    t => Err(Error::domain("pair_to_k", format!("tag {t} not in {{0,1}}"))),
                }
            }
            IsoStep::InsertConst { pos, value } => {
                if *pos > x.len() {
                    return Err(Error::Shape(format!("insert position {pos} beyond {}", x.len())));
                }
                let mut y = x.to_vec();
                y.insert(*pos, value.clone());
                Ok(y)
            }
            IsoStep::Permute(perm) => {
                check_perm(perm, x.len())?;
                Ok(perm.iter().map(|&i| x[i].clone()).collect())
            }
            IsoStep::CoordinateMap(blocks) => {
                let widths: Vec<usize> = blocks.iter().map(|b| b.0).collect();
                map_blocks(x, &widths, blocks, Direction::Forward)
            }
            IsoStep::CaseSplit(branches) => {
                let mut undecided = None;
                for b in branches {
                    match b.source.member(x) {
                        Ok(true) => return b.forward(x),
                        Ok(false) => {}
                        Err(e) if e.is_precision() => undecided = Some(e),
                        Err(e) => return Err(e),
                    }
                }
                Err(undecided.unwrap_or_else(|| Error::domain("cases", "no branch contains the point")))
            }
            IsoStep::Inverse(s) => s.backward(x),
        }
    }

    pub fn backward(&self, y: &[PAdic]) -> Result<Point> {
        match self {
            IsoStep::Translate(c) => Ok(vec![single(y, "translate")?.sub(c)?]),
            IsoStep::Scale(a) => Ok(vec![single(y, "scale")?.div(a)?]),
            IsoStep::Invert => self.forward(y),
            IsoStep::PowerCoset { gamma, n, k } => {
                let b = single(y, "power")?.div(gamma)?;
                let ctx = Context::new(b.p(), DEFAULT_PRECISION)?;
                nth_root_in_level(&ctx, &b, *n, *k).map_err(|e| match e {
                    Error::NotInLevelSet(d) => Error::domain("power", d),
                    other => other,
                })
            }
            .map(|r| vec![r]),
            IsoStep::MonomialTwist { coord, alpha, exps } => {
                let m = twist_factor(y, *coord, alpha, exps)?;
                let mut x = y.to_vec();
                x[*coord] = y[*coord].div(&m)?;
                Ok(x)
            }
            IsoStep::ValuationInterleave => {
                let Some(b) = y.first() else {
                    return Err(Error::Shape("interleave needs a coordinate".into()));
                };
                let w = b.v().map_err(|_| Error::domain("interleave", "coordinate is 0"))?;
                let t = w.rem_euclid(2);
                let v = (w - t) / 2;
                let mut x = vec![PAdic::from_i64(b.p(), t), b.mul_pi_pow(-(v + t))];
                x.extend_from_slice(&y[1..]);
                Ok(x)
            }
            IsoStep::HotelShift => {
                let b = single(y, "hotel")?;
                if b.is_zero() || b.val() < Valuation::Finite(0) {
                    return Err(Error::domain("hotel", format!("{b} is not in R∖{{0}}")));
                }
                if is_pi_power(&b)? {
                    if b.val() == Valuation::Finite(0) {
                        return Ok(vec![PAdic::zero(b.p())]);
                    }
                    return Ok(vec![b.mul_pi_pow(-1)]);
                }
                Ok(vec![b])
            }
            IsoStep::PairToK => {
                let b = single(y, "pair_to_k")?;
                let p = b.p();
                if b.val() >= Valuation::Finite(0) {
                    Ok(vec![PAdic::zero(p), b])
                } else {
                    Ok(vec![PAdic::from_i64(p, 1), b.mul_pi_pow(1).inv()?])
                }
            }
            IsoStep::InsertConst { pos, value } => {
                if *pos >= y.len() {
                    return Err(Error::Shape(format!("no coordinate {pos} to remove")));
                }
                if !coord_equals(&y[*pos], value)? {
                    return Err(Error::domain(
                        "insert",
                        format!("coordinate {pos} is {}, expected {value}", y[*pos]),
                    ));
                }
                let mut x = y.to_vec();
                x.remove(*pos);
                Ok(x)
            }
            IsoStep::Permute(perm) => {
                check_perm(perm, y.len())?;
                let mut x = y.to_vec();
                for (i, &j) in perm.iter().enumerate() {
                    x[j] = y[i].clone();
                }
                Ok(x)
            }
            IsoStep::CoordinateMap(blocks) => {
                let widths: Vec<usize> = blocks
                    .iter()
                    .map(|(w, s)| (*w as i64 + s.iter().map(IsoStep::arity_delta).sum::<i64>()) as usize)
                    .collect();
                map_blocks(y, &widths, blocks, Direction::Backward)
            }
            IsoStep::CaseSplit(branches) => {
                let mut undecided = None;
                for b in branches {
                    match b.preimage_in_source(y) {
                        Ok(Some(x)) => return Ok(x),
                        Ok(None) => {}
                        Err(e) if e.is_precision() => undecided = Some(e),
                        Err(e) => return Err(e),
                    }
                }
                Err(undecided.unwrap_or_else(|| Error::domain("cases", "no branch image contains the point")))
            }
            IsoStep::Inverse(s) => s.forward(y),
        }
    }
}

fn twist_factor(x: &[PAdic], coord: usize, alpha: &PAdic, exps: &[i64]) -> Result<PAdic> {
    if exps.len() != x.len() || coord >= x.len() {
        return Err(Error::Shape(format!("twist exponents for {} coordinates", exps.len())));
    }
    let mut m = alpha.clone();
    for (i, (xi, e)) in x.iter().zip(exps).enumerate() {
        if i == coord || *e == 0 {
            continue;
        }
        if xi.is_zero() {
            return Err(Error::domain("twist", format!("coordinate {i} is 0")));
        }
        m = m.mul(&xi.pow(*e)?)?;
    }
    Ok(m)
}

fn check_perm(perm: &[usize], len: usize) -> Result<()> {
    let mut seen = vec![false; len];
    if perm.len() != len {
        return Err(Error::Shape(format!(
            "permutation of {} applied to {len} coordinates",
            perm.len()
        )));
    }
    for &i in perm {
        if i >= len || std::mem::replace(&mut seen[i], true) {
            return Err(Error::Shape("not a permutation".into()));
        }
    }
    Ok(())
}

fn map_blocks(x: &[PAdic], widths: &[usize], blocks: &[(usize, Vec<IsoStep>)], dir: Direction) -> Result<Point> {
    if widths.iter().sum::<usize>() != x.len() {
        return Err(Error::Shape(format!(
            "coordinate blocks cover {} of {}",
            widths.iter().sum::<usize>(),
            x.len()
        )));
    }
    let mut out = Vec::new();
    let mut at = 0;
    for ((_, steps), w) in blocks.iter().zip(widths) {
        let part = run_steps(steps, dir, &x[at..at + w])?;
        out.extend(part);
        at += w;
    }
    Ok(out)
}

fn run_steps(steps: &[IsoStep], dir: Direction, x: &[PAdic]) -> Result<Point> {
    let mut cur = x.to_vec();
    match dir {
        Direction::Forward => {
            for (i, s) in steps.iter().enumerate() {
                cur = s.forward(&cur).map_err(|e| e.at_step(i))?;
            }
        }
        Direction::Backward => {
            for (i, s) in steps.iter().enumerate().rev() {
                cur = s.backward(&cur).map_err(|e| e.at_step(i))?;
            }
        }
    }
    Ok(cur)
}

/// A composite map from `source` onto `target`.
#[derive(Clone, Debug, PartialEq)]
pub struct IsoPipeline {
    pub source: SetDescriptor,
    pub target: SetDescriptor,
    pub steps: Vec<IsoStep>,
}

impl IsoPipeline {
    pub fn new(source: SetDescriptor, target: SetDescriptor, steps: Vec<IsoStep>) -> Self {
        IsoPipeline { source, target, steps }
    }

    pub fn identity(s: SetDescriptor) -> Self {
        IsoPipeline::new(s.clone(), s, vec![])
    }

    /// A pipeline whose target is described as the image of its source.
    pub fn onto_image(source: SetDescriptor, steps: Vec<IsoStep>) -> Self {
        let mut pl = IsoPipeline::new(source, SetDescriptor::Space(0), steps);
        pl.target = SetDescriptor::Image(Box::new(pl.clone()));
        pl
    }

    pub fn apply(&self, dir: Direction, x: &[PAdic]) -> Result<Point> {
        run_steps(&self.steps, dir, x)
    }

    pub fn forward(&self, x: &[PAdic]) -> Result<Point> {
        self.apply(Direction::Forward, x)
    }

    pub fn backward(&self, y: &[PAdic]) -> Result<Point> {
        self.apply(Direction::Backward, y)
    }

    pub fn inverse(&self) -> IsoPipeline {
        IsoPipeline::new(
            self.target.clone(),
            self.source.clone(),
            self.steps.iter().rev().map(IsoStep::inverse).collect(),
        )
    }

    /// `next ∘ self`.
    pub fn then(&self, next: &IsoPipeline) -> IsoPipeline {
        let mut steps = self.steps.clone();
        steps.extend(next.steps.iter().cloned());
        IsoPipeline::new(self.source.clone(), next.target.clone(), steps)
    }

    pub fn arity_delta(&self) -> i64 {
        self.steps.iter().map(IsoStep::arity_delta).sum()
    }

    pub fn target_arity(&self) -> Option<usize> {
        let a = self.source.arity()? as i64 + self.arity_delta();
        usize::try_from(a).ok()
    }

    /// The source point mapping to `y`, if `y` lies in the image.
    pub fn preimage_in_source(&self, y: &[PAdic]) -> Result<Option<Point>> {
        let x = match self.backward(y) {
            Ok(x) => x,
            Err(e) if e.is_precision() => return Err(e),
            Err(_) => return Ok(None),
        };
        // Every step's backward map rejects points outside its image, so a
        // successful backward run needs no forward confirmation.
        if !self.source.member(&x)? {
            return Ok(None);
        }
        Ok(Some(x))
    }

    pub fn image_member(&self, y: &[PAdic]) -> Result<bool> {
        Ok(self.preimage_in_source(y)?.is_some())
    }
}

/// `R ≅ R∖{0}`.
pub fn hotel_pipeline(ctx: &Context) -> IsoPipeline {
    IsoPipeline::new(
        SetDescriptor::valuation_ring(ctx),
        SetDescriptor::nonzero_ring(ctx),
        vec![IsoStep::HotelShift],
    )
}

/// `{0}×R ∪ {1}×(R∖{0}) ≅ K`.
pub fn pair_to_k_pipeline(ctx: &Context) -> IsoPipeline {
    IsoPipeline::new(
        SetDescriptor::Tagged(vec![
            (0, SetDescriptor::valuation_ring(ctx)),
            (1, SetDescriptor::nonzero_ring(ctx)),
        ]),
        SetDescriptor::Space(1),
        vec![IsoStep::PairToK],
    )
}

/// `{v(x) ≤ −1}`.
pub fn outside_ring(ctx: &Context) -> SetDescriptor {
    SetDescriptor::Cell(Cell1D {
        lower: None,
        upper: Some((crate::setmodel::Cmp::Le, ctx.pi_pow(-1))),
        c: ctx.zero(),
        lambda: ctx.one(),
        n: 1,
        level: 0,
    })
}

/// `K ≅ R∖{0}`: `R` goes through the hotel shift and lands on even
/// valuations, `K∖R` goes through `y ↦ 1/(πy)` and lands on odd ones.
pub fn k_iso_pipeline(ctx: &Context) -> IsoPipeline {
    let tag = |t: i64| IsoStep::InsertConst {
        pos: 0,
        value: ctx.int(t),
    };
    let inside = IsoPipeline::onto_image(
        SetDescriptor::valuation_ring(ctx),
        vec![IsoStep::HotelShift, tag(0), IsoStep::ValuationInterleave],
    );
    let outside = IsoPipeline::onto_image(
        outside_ring(ctx),
        vec![
            IsoStep::Scale(ctx.uniformizer()),
            IsoStep::Invert,
            tag(1),
            IsoStep::ValuationInterleave,
        ],
    );
    IsoPipeline::new(
        SetDescriptor::Space(1),
        SetDescriptor::nonzero_ring(ctx),
        vec![IsoStep::CaseSplit(vec![inside, outside])],
    )
}

/// Whether `x ↦ x·π^j` preserves the set for every `j ≥ 0` and every point
/// has finite valuation, so that [`IsoStep::ValuationInterleave`] maps
/// `{0,1} × S` onto `S`.
pub fn is_valuation_saturated(s: &SetDescriptor) -> bool {
    match s {
        SetDescriptor::LevelBox { l: 1, .. } => true,
        SetDescriptor::Cell(c) => {
            c.c.is_zero()
                && c.n == 1
                && c.upper.is_none()
                && c.lower
                    .as_ref()
                    .is_some_and(|(a, cmp)| a.val() == Valuation::Finite(0) && *cmp == crate::setmodel::Cmp::Le)
                && c.lambda.is_exact()
                && c.lambda.val() == Valuation::Finite(0)
        }
        _ => false,
    }
}

/// `⋃_{i<count} {i} × S ≅ S` by a balanced tree of valuation interleaves.
/// Copy `i` lands on valuations `≡ i mod 2^depth` when `count` is a power
/// of two.
pub fn merge_copies(ctx: &Context, count: usize, shape: &SetDescriptor) -> Result<IsoPipeline> {
    if count == 0 {
        return Err(Error::Empty("no copies to merge".into()));
    }
    if count > 1 && !is_valuation_saturated(shape) {
        return Err(Error::Shape(format!("{shape:?} is not valuation-saturated")));
    }
    let tags: Vec<i64> = (0..count as i64).collect();
    let steps = merge_tree(ctx, &tags, shape);
    let source = SetDescriptor::Tagged(tags.iter().map(|&t| (t, shape.clone())).collect());
    Ok(IsoPipeline::new(source, shape.clone(), steps))
}

fn merge_tree(ctx: &Context, tags: &[i64], shape: &SetDescriptor) -> Vec<IsoStep> {
    if let [t] = tags {
        return vec![IsoStep::Inverse(Box::new(IsoStep::InsertConst {
            pos: 0,
            value: ctx.int(*t),
        }))];
    }
    let halves: [Vec<i64>; 2] = [
        tags.iter().step_by(2).copied().collect(),
        tags.iter().skip(1).step_by(2).copied().collect(),
    ];
    let branches = halves
        .iter()
        .enumerate()
        .map(|(side, h)| {
            let mut steps = merge_tree(ctx, h, shape);
            steps.push(IsoStep::InsertConst {
                pos: 0,
                value: ctx.int(side as i64),
            });
            let source = SetDescriptor::Tagged(h.iter().map(|&t| (t, shape.clone())).collect());
            IsoPipeline::onto_image(source, steps)
        })
        .collect();
    vec![IsoStep::CaseSplit(branches), IsoStep::ValuationInterleave]
}

/// Tagged union of parts, each carried onto the common valuation-saturated
/// `shape` by its pipeline, merged onto `shape`.
pub fn union_merge(ctx: &Context, parts: &[IsoPipeline], shape: &SetDescriptor) -> Result<IsoPipeline> {
    for (i, part) in parts.iter().enumerate() {
        if part.target != *shape {
            return Err(Error::Shape(format!("part {i} does not land on the common shape")));
        }
    }
    let merge = merge_copies(ctx, parts.len(), shape)?;
    if parts.len() == 1 {
        return Ok(parts[0].clone());
    }
    let width = shape.arity().unwrap_or(1);
    let branches = parts
        .iter()
        .enumerate()
        .map(|(i, part)| {
            let w = part.source.arity().unwrap_or(width);
            let source = SetDescriptor::Tagged(vec![(i as i64, part.source.clone())]);
            let target = SetDescriptor::Tagged(vec![(i as i64, shape.clone())]);
            IsoPipeline::new(
                source,
                target,
                vec![IsoStep::CoordinateMap(vec![(1, vec![]), (w, part.steps.clone())])],
            )
        })
        .collect();
    let source = SetDescriptor::Tagged(
        parts
            .iter()
            .enumerate()
            .map(|(i, p)| (i as i64, p.source.clone()))
            .collect(),
    );
    let mut steps = vec![IsoStep::CaseSplit(branches)];
    steps.extend(merge.steps);
    Ok(IsoPipeline::new(source, shape.clone(), steps))
}

/// `R^(k) ≅ R∖{0}`: `R∖{0}` is the disjoint union of the cosets `α·R^(k)`
/// over unit representatives `α`, merged onto one copy of `R^(k)`.
pub fn level_to_nonzero(ctx: &Context, k: u32) -> Result<IsoPipeline> {
    let shape = SetDescriptor::level_ring(k);
    if k == 0 {
        return Ok(IsoPipeline::new(shape, SetDescriptor::nonzero_ring(ctx), vec![]));
    }
    let alphas = coset_reps(ctx, 1, k)?;
    let merge = merge_copies(ctx, alphas.len(), &shape)?.inverse();
    let branches = alphas
        .iter()
        .enumerate()
        .map(|(i, a)| {
            let source = SetDescriptor::Tagged(vec![(i as i64, shape.clone())]);
            IsoPipeline::onto_image(
                source,
                vec![
                    IsoStep::Inverse(Box::new(IsoStep::InsertConst {
                        pos: 0,
                        value: ctx.int(i as i64),
                    })),
                    IsoStep::Scale(a.clone()),
                ],
            )
        })
        .collect();
    let mut steps = merge.steps;
    steps.push(IsoStep::CaseSplit(branches));
    Ok(IsoPipeline::new(shape, SetDescriptor::nonzero_ring(ctx), steps))
}

/// `R^(k) ≅ K`.
pub fn level_to_k(ctx: &Context, k: u32) -> Result<IsoPipeline> {
    let a = level_to_nonzero(ctx, k)?;
    Ok(a.then(&k_iso_pipeline(ctx).inverse()))
}

/// Realizes `X ⊂ K^m` and `Y ⊂ K^n` as disjoint subsets of `K^max(m,n,1)`:
/// pad with zeros, squeeze the first coordinate into `R∖{0}`, then
/// interleave with tag 0 for `X` and tag 1 for `Y`.
pub fn disjoint_union_realize(
    ctx: &Context,
    x: &SetDescriptor,
    y: &SetDescriptor,
) -> Result<(IsoPipeline, IsoPipeline)> {
    let m = x.arity().ok_or_else(|| Error::Shape("X has no fixed arity".into()))?;
    let n = y.arity().ok_or_else(|| Error::Shape("Y has no fixed arity".into()))?;
    let d = m.max(n).max(1);
    let realize = |s: &SetDescriptor, a: usize, tag: i64| {
        let mut steps: Vec<IsoStep> = (a..d)
            .map(|pos| IsoStep::InsertConst { pos, value: ctx.zero() })
            .collect();
        let mut head = k_iso_pipeline(ctx).steps;
        head.push(IsoStep::InsertConst {
            pos: 0,
            value: ctx.int(tag),
        });
        head.push(IsoStep::ValuationInterleave);
        let mut blocks = vec![(1, head)];
        if d > 1 {
            blocks.push((d - 1, vec![]));
        }
        steps.push(IsoStep::CoordinateMap(blocks));
        IsoPipeline::onto_image(s.clone(), steps)
    };
    Ok((realize(x, m, 0), realize(y, n, 1)))
}

/// Level of `R^(k)` guaranteeing `x ↦ x^n` is injective with exact roots.
pub fn power_level(p: u32, n: u64) -> u32 {
    vp(p, n) + 1
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ctx(p: u32) -> Context {
        Context::with_default_precision(p).unwrap()
    }

    #[test]
    fn step_examples() {
        let k = ctx(5);
        assert_eq!(
            IsoStep::Translate(k.int(3)).forward(&[k.int(2)]).unwrap(),
            vec![k.int(5)]
        );
        assert_eq!(
            IsoStep::PairToK.forward(&[k.int(1), k.int(2)]).unwrap(),
            vec![k.rational(1, 10).unwrap()]
        );
        let vi = IsoStep::ValuationInterleave;
        assert_eq!(vi.forward(&[k.int(1), k.int(2)]).unwrap(), vec![k.int(10)]);
        assert_eq!(vi.backward(&[k.int(50)]).unwrap(), vec![k.int(0), k.int(10)]);
        assert_eq!(vi.forward(&[k.int(0), k.int(10)]).unwrap(), vec![k.int(50)]);
    }

    #[test]
    fn pipeline_examples() {
        let k = ctx(5);
        let id = IsoPipeline::identity(SetDescriptor::Space(1));
        assert_eq!(id.forward(&[k.int(7)]).unwrap(), vec![k.int(7)]);
        let pl = IsoPipeline::new(
            SetDescriptor::Space(1),
            SetDescriptor::Space(1),
            vec![IsoStep::Translate(k.int(3)), IsoStep::Invert],
        );
        let y = pl.forward(&[k.int(2)]).unwrap();
        assert_eq!(y, vec![k.rational(1, 5).unwrap()]);
        assert_eq!(pl.backward(&y).unwrap(), vec![k.int(2)]);
        let err = pl.forward(&[k.int(-3)]).unwrap_err();
        assert!(matches!(err, Error::AtStep { index: 1, .. }));
    }

    #[test]
    fn hotel_examples() {
        let k = ctx(5);
        let h = IsoStep::HotelShift;
        assert_eq!(h.forward(&[k.int(0)]).unwrap(), vec![k.int(1)]);
        assert_eq!(h.forward(&[k.int(25)]).unwrap(), vec![k.int(125)]);
        assert_eq!(h.forward(&[k.int(2)]).unwrap(), vec![k.int(2)]);
        assert_eq!(h.backward(&[k.int(1)]).unwrap(), vec![k.int(0)]);
        let t = k.from_digits(&[1, 0, 0], 2).unwrap();
        assert!(matches!(h.forward(&[t]), Err(Error::Indeterminate(_))));
    }

    #[test]
    fn k_iso_examples() {
        let k = ctx(5);
        let pl = k_iso_pipeline(&k);
        for (y, want) in [
            (k.int(1), k.int(25)),
            (k.rational(1, 5).unwrap(), k.int(5)),
            (k.int(3), k.int(3)),
        ] {
            let z = pl.forward(&[y.clone()]).unwrap();
            assert_eq!(z, vec![want]);
            assert_eq!(pl.backward(&z).unwrap(), vec![y]);
        }
    }

    #[test]
    fn merge_four_copies_stratifies_valuations() {
        let k = ctx(5);
        let shape = SetDescriptor::level_ring(1);
        let pl = merge_copies(&k, 4, &shape).unwrap();
        for t in 0..4 {
            for x in [1i64, 6, 30, 31 * 25] {
                let y = pl.forward(&[k.int(t), k.int(x)]).unwrap();
                assert_eq!(y[0].v().unwrap().rem_euclid(4), t);
                assert!(shape.member(&y).unwrap());
                assert_eq!(pl.backward(&y).unwrap(), vec![k.int(t), k.int(x)]);
            }
        }
    }

    #[test]
    fn level_to_k_round_trips() {
        let k = ctx(3);
        let pl = level_to_k(&k, 2).unwrap();
        for x in [1i64, 10, 19, 9 * 28, 81] {
            let y = pl.forward(&[k.int(x)]).unwrap();
            assert_eq!(pl.backward(&y).unwrap(), vec![k.int(x)]);
        }
        for y in [k.int(0), k.int(2), k.rational(-7, 9).unwrap()] {
            let x = pl.backward(&[y.clone()]).unwrap();
            assert!(SetDescriptor::level_ring(2).member(&x).unwrap());
            assert_eq!(pl.forward(&x).unwrap(), vec![y]);
        }
    }

    #[test]
    fn disjoint_realization_pads_and_separates() {
        let k = ctx(5);
        let x = SetDescriptor::Space(2);
        let y = SetDescriptor::Point(vec![k.int(0)]);
        let (px, py) = disjoint_union_realize(&k, &x, &y).unwrap();
        let b = py.forward(&[k.int(0)]).unwrap();
        assert_eq!(b.len(), 2);
        assert_eq!(b[1], k.int(0));
        assert_eq!(b[0].v().unwrap() % 2, 1);
        assert!(!px.target.member(&b).unwrap());
        assert!(py.target.member(&b).unwrap());
    }
}
