//! Bijections `X → K^d`, `d = dim X`, or the point list of a finite `X`.

use std::collections::BTreeMap;

use crate::atlas::{k_iso_pipeline, level_to_k, outside_ring, IsoPipeline, IsoStep};
use crate::error::{Error, Result};
use crate::padic::{Context, PAdic};
use crate::rectilinear::{rectilinearize, RectPart};
use crate::setmodel::{Point, SetDescriptor};

#[derive(Clone, Debug, PartialEq)]
pub enum Classified {
    FinitePoints(Vec<Point>),
    Bijection(IsoPipeline),
}

impl Classified {
    pub fn dimension(&self) -> i64 {
        match self {
            Classified::FinitePoints(_) => 0,
            Classified::Bijection(pl) => pl.target.arity().map_or(0, |a| a as i64),
        }
    }
}

fn blocks(parts: Vec<(usize, Vec<IsoStep>)>) -> Vec<IsoStep> {
    let parts: Vec<_> = parts.into_iter().filter(|(w, _)| *w > 0).collect();
    if parts.iter().all(|(_, s)| s.is_empty()) {
        vec![]
    } else {
        vec![IsoStep::CoordinateMap(parts)]
    }
}

/// `∏ R^(k) → K^l`, coordinatewise.
pub fn box_to_k(ctx: &Context, l: usize, k: u32) -> Result<Vec<IsoStep>> {
    let one = level_to_k(ctx, k)?.steps;
    Ok(blocks((0..l).map(|_| (1, one.clone())).collect()))
}

/// `part → K^l`.
pub fn part_to_k(ctx: &Context, part: &RectPart) -> Result<IsoPipeline> {
    let mut steps = part.pipeline.inverse().steps;
    steps.extend(box_to_k(ctx, part.l, part.k)?);
    Ok(IsoPipeline::new(part.part.clone(), SetDescriptor::Space(part.l), steps))
}

/// `{side} × K → K`, onto the half with valuation parity `side` after
/// squeezing `K` into `R∖{0}`.
fn interleave_level(ctx: &Context, side: i64) -> Vec<IsoStep> {
    let iso = k_iso_pipeline(ctx);
    let mut steps = iso.steps.clone();
    steps.push(IsoStep::InsertConst {
        pos: 0,
        value: ctx.int(side),
    });
    steps.push(IsoStep::ValuationInterleave);
    steps.extend(iso.inverse().steps);
    steps
}

/// Copy `q` of `count` copies of `K` into one, following the balanced
/// interleave tree.
fn interleave_path(ctx: &Context, q: usize, count: usize) -> Vec<IsoStep> {
    if count <= 1 {
        return vec![];
    }
    let side = q % 2;
    let sub = if side == 0 { count.div_ceil(2) } else { count / 2 };
    let mut steps = interleave_path(ctx, q / 2, sub);
    steps.extend(interleave_level(ctx, side as i64));
    steps
}

fn zeros(ctx: &Context, n: usize) -> Point {
    vec![ctx.zero(); n]
}

fn nonzero_k(ctx: &Context) -> SetDescriptor {
    SetDescriptor::Excluding {
        base: Box::new(SetDescriptor::Space(1)),
        points: vec![vec![ctx.zero()]],
    }
}

/// `K^l × (R∖{0}) × {0}^{m−l−1}`.
fn line(ctx: &Context, l: usize, m: usize) -> SetDescriptor {
    let mut f = Vec::new();
    if l > 0 {
        f.push(SetDescriptor::Space(l));
    }
    f.push(SetDescriptor::nonzero_ring(ctx));
    if m > l + 1 {
        f.push(SetDescriptor::Point(zeros(ctx, m - l - 1)));
    }
    SetDescriptor::product_of(f)
}

/// `K^m` minus the lines at the given positions, split by the last nonzero
/// coordinate.
fn off_lines(ctx: &Context, ls: &[usize], m: usize) -> SetDescriptor {
    let mut parts = vec![SetDescriptor::Point(zeros(ctx, m))];
    for q in 0..m {
        let mut f = Vec::new();
        if q > 0 {
            f.push(SetDescriptor::Space(q));
        }
        f.push(if ls.contains(&q) {
            outside_ring(ctx)
        } else {
            nonzero_k(ctx)
        });
        if m > q + 1 {
            f.push(SetDescriptor::Point(zeros(ctx, m - q - 1)));
        }
        parts.push(SetDescriptor::product_of(f));
    }
    SetDescriptor::Union(parts)
}

fn space_dim(pl: &IsoPipeline) -> Result<usize> {
    match pl.target {
        SetDescriptor::Space(d) => Ok(d),
        _ => Err(Error::Shape("part pipeline must end at a space K^l".into())),
    }
}

/// One bijection from the disjoint union of the parts' sources onto `K^m`,
/// `m` the largest part dimension.
///
/// Parts of dimension `m` are interleaved on their first coordinate. The
/// `j`-th part of dimension `l < m` goes to `(x, π^j, 0, …, 0)`, and the
/// line `K^l × (R∖{0}) × 0` is shifted along its `l`-th coordinate by as
/// many hotel steps as there are such parts.
pub fn assemble(ctx: &Context, source: SetDescriptor, parts: &[IsoPipeline]) -> Result<IsoPipeline> {
    if parts.is_empty() {
        return Err(Error::Empty("nothing to assemble".into()));
    }
    let dims: Vec<usize> = parts.iter().map(space_dim).collect::<Result<_>>()?;
    let m = *dims.iter().max().expect("nonempty");
    let top: Vec<usize> = (0..parts.len()).filter(|&i| dims[i] == m).collect();
    if m == 0 && parts.len() > 1 {
        return Err(Error::Shape("several points do not make a copy of K^0".into()));
    }
    let mut lower: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (i, &d) in dims.iter().enumerate() {
        if d < m {
            lower.entry(d).or_default().push(i);
        }
    }

    let top_branches: Vec<IsoPipeline> = top
        .iter()
        .enumerate()
        .map(|(q, &i)| {
            let mut steps = parts[i].steps.clone();
            steps.extend(blocks(vec![
                (1, interleave_path(ctx, q, top.len())),
                (m.saturating_sub(1), vec![]),
            ]));
            IsoPipeline::onto_image(parts[i].source.clone(), steps)
        })
        .collect();
    let mut top_steps = if top_branches.len() == 1 {
        top_branches[0].steps.clone()
    } else {
        vec![IsoStep::CaseSplit(top_branches)]
    };

    if lower.is_empty() {
        return Ok(IsoPipeline::new(source, SetDescriptor::Space(m), top_steps));
    }

    let ls: Vec<usize> = lower.keys().copied().collect();
    let mut shifts: Vec<IsoPipeline> = lower
        .iter()
        .map(|(&l, group)| {
            let steps = blocks(vec![
                (l, vec![]),
                (1, vec![IsoStep::HotelShift; group.len()]),
                (m - l - 1, vec![]),
            ]);
            IsoPipeline::onto_image(line(ctx, l, m), steps)
        })
        .collect();
    let rest = off_lines(ctx, &ls, m);
    shifts.push(IsoPipeline::identity(rest));
    top_steps.push(IsoStep::CaseSplit(shifts));

    let mut branches = vec![IsoPipeline::onto_image(
        SetDescriptor::Union(top.iter().map(|&i| parts[i].source.clone()).collect()),
        top_steps,
    )];
    for (&l, group) in &lower {
        for (j, &i) in group.iter().enumerate() {
            let mut steps = parts[i].steps.clone();
            steps.push(IsoStep::InsertConst {
                pos: l,
                value: ctx.pi_pow(j as i64),
            });
            for pos in l + 1..m {
                steps.push(IsoStep::InsertConst { pos, value: ctx.zero() });
            }
            branches.push(IsoPipeline::onto_image(parts[i].source.clone(), steps));
        }
    }
    Ok(IsoPipeline::new(
        source,
        SetDescriptor::Space(m),
        vec![IsoStep::CaseSplit(branches)],
    ))
}

/// `A ∪ B ≅ K^m` from `A ≅ K^l`, `B ≅ K^m`, `l ≤ m`, `A ∩ B = ∅`.
pub fn merge_parts(ctx: &Context, a: &IsoPipeline, b: &IsoPipeline) -> Result<IsoPipeline> {
    let (l, m) = (space_dim(a)?, space_dim(b)?);
    if l > m {
        return Err(Error::Shape(format!("merge needs dim A ≤ dim B, got {l} > {m}")));
    }
    if a.source == b.source {
        return Err(Error::Overlap("A and B are the same set".into()));
    }
    if a.source.is_finite(ctx)? {
        for x in a.source.finite_points(ctx)? {
            if b.source.member(&x)? {
                return Err(Error::Overlap(format!("{x:?} lies in both sets")));
            }
        }
    }
    let source = SetDescriptor::Union(vec![b.source.clone(), a.source.clone()]);
    assemble(ctx, source, &[b.clone(), a.clone()])
}

/// Finite `X` as its points, otherwise a bijection onto `K^dim X`.
pub fn classify_to_kd(ctx: &Context, x: &SetDescriptor) -> Result<Classified> {
    x.validate()?;
    if x.is_finite(ctx)? {
        let pts = x.finite_points(ctx)?;
        if pts.is_empty() {
            return Err(Error::Empty("the set is empty".into()));
        }
        return Ok(Classified::FinitePoints(pts));
    }
    let parts = rectilinearize(ctx, x, &[])?;
    if parts.is_empty() {
        return Err(Error::Empty("the set is empty".into()));
    }
    let pipes: Vec<IsoPipeline> = parts.iter().map(|p| part_to_k(ctx, p)).collect::<Result<_>>()?;
    let pl = assemble(ctx, x.clone(), &pipes)?;
    let d = x.dimension(ctx)?;
    if pl.target != SetDescriptor::Space(d as usize) {
        return Err(Error::Shape(format!(
            "assembled target {:?} disagrees with dimension {d}",
            pl.target
        )));
    }
    Ok(Classified::Bijection(pl))
}

/// `X → Y` for infinite sets of equal dimension.
pub fn compose_classified(ctx: &Context, x: &SetDescriptor, y: &SetDescriptor) -> Result<IsoPipeline> {
    let (Classified::Bijection(fx), Classified::Bijection(fy)) = (classify_to_kd(ctx, x)?, classify_to_kd(ctx, y)?)
    else {
        return Err(Error::Shape("both sets must be infinite".into()));
    };
    if fx.target != fy.target {
        return Err(Error::Shape(format!(
            "dimensions differ: {:?} vs {:?}",
            fx.target, fy.target
        )));
    }
    Ok(fx.then(&fy.inverse()))
}

/// The image of `0` under the hotel line `r ↦ (r, 0, …, 0)`.
pub fn absorbed_point(ctx: &Context, l: usize, m: usize) -> Point {
    let mut p: Point = zeros(ctx, m);
    p[l] = PAdic::from_i64(ctx.p(), 1);
    p
}
