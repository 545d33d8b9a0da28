//! Partition of a set into parts, each the image of a box `∏ R^(k)` under an
//! explicit pipeline, with every attached form monomial in the box
//! coordinates.

use num_integer::Integer;

use crate::atlas::{IsoPipeline, IsoStep};
use crate::error::{Error, Result};
use crate::hensel::{in_level, in_power_level, vp};
use crate::padic::{Context, PAdic, Valuation};
use crate::setmodel::{
    centers, coset_reps, coset_split, normalize_cell, Cell1D, Cmp, MonomialForm, PresentedCell, SetDescriptor, Side,
};

/// `c + Σ a_j t_j` on box valuations `t`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Affine {
    pub c: i64,
    pub a: Vec<i64>,
}

impl Affine {
    pub fn constant(c: i64, l: usize) -> Self {
        Affine { c, a: vec![0; l] }
    }

    pub fn var(j: usize, l: usize) -> Self {
        let mut a = vec![0; l];
        a[j] = 1;
        Affine { c: 0, a }
    }

    pub fn eval(&self, t: &[i64]) -> i64 {
        self.c + self.a.iter().zip(t).map(|(a, t)| a * t).sum::<i64>()
    }

    fn add(&self, o: &Affine) -> Affine {
        Affine {
            c: self.c + o.c,
            a: self.a.iter().zip(&o.a).map(|(x, y)| x + y).collect(),
        }
    }

    fn scaled(&self, f: i64) -> Affine {
        Affine {
            c: self.c * f,
            a: self.a.iter().map(|x| x * f).collect(),
        }
    }

    /// Substitutes `t_j = inner[j]`.
    pub fn compose(&self, inner: &[Option<Affine>], width: usize) -> Result<Option<Affine>> {
        let mut out = Affine::constant(self.c, width);
        let mut infinite = false;
        for (j, &aj) in self.a.iter().enumerate() {
            if aj == 0 {
                continue;
            }
            match &inner[j] {
                Some(f) => out = out.add(&f.scaled(aj)),
                None if aj > 0 => infinite = true,
                None => return Err(Error::NonIntegralForm("valuation has a pole on a part".into())),
            }
        }
        Ok((!infinite).then_some(out))
    }

    fn padded(&self, offset: usize, width: usize) -> Affine {
        let mut a = vec![0; width];
        a[offset..offset + self.a.len()].copy_from_slice(&self.a);
        Affine { c: self.c, a }
    }
}

/// A box `∏ R^(levels_j)` with steps carrying it into a set, and the
/// valuations of the set's coordinates as affine functions of the box
/// valuations; `None` marks a coordinate equal to its centre.
#[derive(Clone, Debug, PartialEq)]
pub struct Piece {
    pub levels: Vec<u32>,
    pub steps: Vec<IsoStep>,
    pub vals: Vec<Option<Affine>>,
}

/// A substitution from coordinates `u` to coordinates `x`.
#[derive(Clone, Debug, PartialEq)]
pub struct Map {
    pub steps: Vec<IsoStep>,
    pub vals: Vec<Option<Affine>>,
}

impl Piece {
    pub fn dim(&self) -> usize {
        self.levels.len()
    }

    pub fn identity_box(levels: Vec<u32>) -> Self {
        let l = levels.len();
        Piece {
            levels,
            steps: vec![],
            vals: (0..l).map(|j| Some(Affine::var(j, l))).collect(),
        }
    }

    /// `self` followed by `map`.
    pub fn then(&self, map: &Map) -> Result<Piece> {
        let l = self.dim();
        let vals = map
            .vals
            .iter()
            .map(|v| match v {
                Some(f) => f.compose(&self.vals, l),
                None => Ok(None),
            })
            .collect::<Result<_>>()?;
        let mut steps = self.steps.clone();
        steps.extend(map.steps.iter().cloned());
        Ok(Piece {
            levels: self.levels.clone(),
            steps,
            vals,
        })
    }
}

/// Box coordinates side by side, each factor mapped separately.
pub fn product_piece(factors: &[&Piece]) -> Piece {
    let width: usize = factors.iter().map(|f| f.dim()).sum();
    let mut levels = Vec::new();
    let mut vals = Vec::new();
    let mut blocks = Vec::new();
    let mut offset = 0;
    for f in factors {
        levels.extend(f.levels.iter().copied());
        vals.extend(f.vals.iter().map(|v| v.as_ref().map(|a| a.padded(offset, width))));
        blocks.push((f.dim(), f.steps.clone()));
        offset += f.dim();
    }
    let steps = if blocks.iter().all(|(_, s)| s.is_empty()) {
        vec![]
    } else {
        vec![IsoStep::CoordinateMap(blocks)]
    };
    Piece { levels, steps, vals }
}

fn product_all(lists: &[Vec<Piece>]) -> Vec<Piece> {
    let mut acc: Vec<Vec<&Piece>> = vec![vec![]];
    for list in lists {
        let mut next = Vec::with_capacity(acc.len() * list.len());
        for prefix in &acc {
            for p in list {
                let mut v = prefix.clone();
                v.push(p);
                next.push(v);
            }
        }
        acc = next;
    }
    acc.iter().map(|fs| product_piece(fs)).collect()
}

/// Units mod `p^to` congruent to 1 mod `p^from`.
pub fn level_alphas(ctx: &Context, from: u32, to: u32) -> Vec<PAdic> {
    let p = ctx.p() as i64;
    let modulus = p.pow(to);
    let step = p.pow(from.max(1));
    let mut out = Vec::new();
    if from == 0 {
        for u in 1..modulus {
            if u % p != 0 {
                out.push(ctx.int(u));
            }
        }
    } else {
        let mut u = 1;
        while u < modulus {
            out.push(ctx.int(u));
            u += step;
        }
    }
    out
}

/// Refines every box coordinate to level `k`: `R^(k_j) = ⋃ α R^(k)`.
pub fn harmonize(ctx: &Context, piece: &Piece, k: u32) -> Vec<Piece> {
    if piece.levels.iter().all(|&l| l == k) {
        return vec![piece.clone()];
    }
    let per: Vec<Vec<Option<PAdic>>> = piece
        .levels
        .iter()
        .map(|&l| {
            if l >= k {
                vec![None]
            } else {
                level_alphas(ctx, l, k).into_iter().map(Some).collect()
            }
        })
        .collect();
    let mut out = Vec::new();
    for combo in cartesian(&per) {
        let blocks: Vec<(usize, Vec<IsoStep>)> = combo
            .iter()
            .map(|a| (1, a.iter().map(|a| IsoStep::Scale(a.clone())).collect()))
            .collect();
        let mut steps = vec![IsoStep::CoordinateMap(blocks)];
        steps.extend(piece.steps.iter().cloned());
        out.push(Piece {
            levels: piece.levels.iter().map(|&l| l.max(k)).collect(),
            steps,
            vals: piece.vals.clone(),
        });
    }
    out
}

fn cartesian<T: Clone>(lists: &[Vec<T>]) -> Vec<Vec<T>> {
    let mut acc: Vec<Vec<T>> = vec![vec![]];
    for list in lists {
        acc = acc
            .iter()
            .flat_map(|prefix| {
                list.iter().map(move |x| {
                    let mut v = prefix.clone();
                    v.push(x.clone());
                    v
                })
            })
            .collect();
    }
    acc
}

fn pi(ctx: &Context, e: i64) -> PAdic {
    ctx.pi_pow(e)
}

/// Pieces of a one-variable cell; the valuation tracked is `v(x − c)`.
pub fn cell_pieces(ctx: &Context, cell: &Cell1D) -> Result<Vec<Piece>> {
    if cell.is_singleton() {
        return Ok(vec![Piece {
            levels: vec![],
            steps: vec![IsoStep::InsertConst {
                pos: 0,
                value: cell.c.clone(),
            }],
            vals: vec![None],
        }]);
    }
    if cell.is_empty() {
        return Ok(vec![]);
    }
    let mut out = Vec::new();
    for (norm, pl) in normalize_cell(ctx, cell)? {
        let sign = if pl.steps.contains(&IsoStep::Invert) { -1 } else { 1 };
        let map = Map {
            steps: pl.steps.clone(),
            vals: vec![Some(Affine { c: 0, a: vec![sign] })],
        };
        let inner = if norm.upper.is_some() {
            bounded_cell_pieces(ctx, &norm)?
        } else {
            unbounded_cell_pieces(ctx, &norm)?
        };
        for p in inner {
            out.push(p.then(&map)?);
        }
    }
    Ok(out)
}

/// `v(a1) ≤ v(x) ≤ v(a2)`: balls `y + π^s R`, each a point and `p − 1`
/// copies of `R^(1)`.
fn bounded_cell_pieces(ctx: &Context, cell: &Cell1D) -> Result<Vec<Piece>> {
    let (Some(lo), Some(hi)) = cell.valuation_window() else {
        return Err(Error::Descriptor("bounded case needs both bounds".into()));
    };
    if lo > hi {
        return Ok(vec![]);
    }
    let p = ctx.p() as i64;
    let depth = cell.level.max(2 * vp(ctx.p(), cell.n) + 1).max(1) as i64;
    let s = hi + depth;
    let span = u32::try_from(s - lo).map_err(|_| Error::Descriptor("window too wide".into()))?;
    let count = (p as u64)
        .checked_pow(span)
        .filter(|&c| c <= 1 << 22)
        .ok_or_else(|| Error::Descriptor(format!("{p}^{span} balls is too many")))?;
    let top = num_traits::pow(num_bigint::BigInt::from(p), (hi - lo + 1) as usize);
    let mut out = Vec::new();
    for r in 1..count as i64 {
        if (num_bigint::BigInt::from(r) % &top) == 0.into() {
            continue;
        }
        let y = ctx.int(r).mul_pi_pow(lo);
        if !cell.member(&y)? {
            continue;
        }
        let vy = y.v()?;
        out.push(Piece {
            levels: vec![],
            steps: vec![IsoStep::InsertConst {
                pos: 0,
                value: y.clone(),
            }],
            vals: vec![Some(Affine::constant(vy, 0))],
        });
        for g in 1..p {
            out.push(Piece {
                levels: vec![1],
                steps: vec![IsoStep::Scale(ctx.int(g).mul_pi_pow(s)), IsoStep::Translate(y.clone())],
                vals: vec![Some(Affine::constant(vy, 1))],
            });
        }
    }
    Ok(out)
}

/// `v(a1) ≤ v(x)`, `x ∈ λ P_n^(level)`: `x = a1·γ·z^n` with `z ∈ R^(k)`.
fn unbounded_cell_pieces(ctx: &Context, cell: &Cell1D) -> Result<Vec<Piece>> {
    let (Some(lo), None) = cell.valuation_window() else {
        return Err(Error::Descriptor("unbounded case needs only a lower bound".into()));
    };
    let e = vp(ctx.p(), cell.n);
    let k = (e + 1).max(cell.level.saturating_sub(e));
    let base = Cell1D::lower_bounded(ctx, 0, cell.lambda.mul_pi_pow(-lo), cell.n, cell.level);
    let mut out = Vec::new();
    for (gamma, _) in coset_split(ctx, &SetDescriptor::Cell(base), cell.n, k + e)? {
        let vg = gamma.v()?;
        out.push(Piece {
            levels: vec![k],
            steps: vec![IsoStep::PowerCoset { gamma, n: cell.n, k }, IsoStep::Scale(pi(ctx, lo))],
            vals: vec![Some(Affine {
                c: lo + vg,
                a: vec![cell.n as i64],
            })],
        });
    }
    Ok(out)
}

/// `{(y, z) ∈ ∏_{i=1}^{d+1} R^(k) : v(z) ≤ C + Σ a_i v(y_i)}`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ECell {
    pub k: u32,
    pub c: i64,
    pub a: Vec<i64>,
}

impl ECell {
    pub fn dim(&self) -> usize {
        self.a.len() + 1
    }

    pub fn to_presented(&self, ctx: &Context) -> PresentedCell {
        let d = self.a.len();
        let mut exps = self.a.clone();
        exps.push(0);
        PresentedCell {
            l: d + 1,
            k: self.k,
            bounds: vec![crate::setmodel::MonomialBound {
                coord: d,
                side: Side::Upper,
                cmp: Cmp::Le,
                beta: ctx.pi_pow(self.c),
                exps,
            }],
            cosets: vec![],
        }
    }

    pub fn pieces(&self, ctx: &Context) -> Result<Vec<Piece>> {
        if self.a.iter().all(|&a| a <= 0) {
            return self.split_nonpositive(ctx);
        }
        let i = self
            .a
            .iter()
            .position(|&a| a == 1)
            .or_else(|| self.a.iter().position(|&a| a > 0))
            .expect("a positive exponent");
        if self.a[i] == 1 {
            let (e1, e2) = self.split_e1_e2(ctx, i)?;
            let mut out = e1;
            out.push(e2);
            return Ok(out);
        }
        let mut out = Vec::new();
        for (cell, map) in self.reduce_leading_exponent(ctx, i)? {
            for p in cell.pieces(ctx)? {
                out.push(p.then(&map)?);
            }
        }
        Ok(out)
    }

    /// All exponents `≤ 0`: the coordinates with a negative exponent and
    /// `z` take finitely many valuations; fibre over them.
    pub fn split_nonpositive(&self, ctx: &Context) -> Result<Vec<Piece>> {
        if self.a.iter().any(|&a| a > 0) {
            return Err(Error::Descriptor("fibering needs exponents ≤ 0".into()));
        }
        let d = self.a.len();
        let bounded: Vec<usize> = (0..d).filter(|&i| self.a[i] < 0).collect();
        let mut out = Vec::new();
        let mut fixed = vec![0i64; bounded.len()];
        self.fibres(ctx, &bounded, 0, self.c, &mut fixed, &mut out)?;
        Ok(out)
    }

    fn fibres(
        &self,
        ctx: &Context,
        bounded: &[usize],
        at: usize,
        budget: i64,
        fixed: &mut Vec<i64>,
        out: &mut Vec<Piece>,
    ) -> Result<()> {
        if budget < 0 {
            return Ok(());
        }
        if at < bounded.len() {
            let w = -self.a[bounded[at]];
            for t in 0..=budget / w {
                fixed[at] = t;
                self.fibres(ctx, bounded, at + 1, budget - w * t, fixed, out)?;
            }
            return Ok(());
        }
        let d = self.a.len();
        for sz in 0..=budget {
            let mut lists = Vec::with_capacity(d + 1);
            for i in 0..d {
                match bounded.iter().position(|&b| b == i) {
                    Some(pos) => lists.push(annulus(ctx, self.k, fixed[pos])?),
                    None => lists.push(vec![Piece::identity_box(vec![self.k])]),
                }
            }
            lists.push(annulus(ctx, self.k, sz)?);
            out.extend(product_all(&lists));
        }
        Ok(())
    }

    /// `a_i = 1`: `E1 = R^(k) × {v(z) < M}` with `M = C + Σ_{j≠i} a_j v(y_j)`,
    /// and `E2 = {M ≤ v(z)} ≅ ∏ R^(k)`. When `M ≥ 0` throughout, `y_i = u·w`
    /// and `z = π^C ∏_{j≠i} y_j^{a_j}·w`; when `M ≤ 0` throughout, `z` is free
    /// and `y_i = u·z / (π^C ∏_{j≠i} y_j^{a_j})`.
    pub fn split_e1_e2(&self, ctx: &Context, i: usize) -> Result<(Vec<Piece>, Piece)> {
        if self.a.get(i) != Some(&1) {
            return Err(Error::Descriptor(format!("exponent {i} is not 1")));
        }
        let d = self.a.len();
        let mut rest = self.a.clone();
        rest.remove(i);
        let e1_cell = ECell {
            k: self.k,
            c: self.c - 1,
            a: rest,
        };
        // (y_{−i}, z, u) ↦ (y, z) with y_i = u.
        let perm: Vec<usize> = (0..=d)
            .map(|j| match j.cmp(&i) {
                _ if j == d => d - 1,
                std::cmp::Ordering::Less => j,
                std::cmp::Ordering::Equal => d,
                std::cmp::Ordering::Greater => j - 1,
            })
            .collect();
        let free = Piece::identity_box(vec![self.k]);
        let mut e1 = Vec::new();
        for p in e1_cell.pieces(ctx)? {
            let prod = product_piece(&[&p, &free]);
            let vals = perm.iter().map(|&j| prod.vals[j].clone()).collect();
            let mut steps = prod.steps;
            steps.push(IsoStep::Permute(perm.clone()));
            e1.push(Piece {
                levels: prod.levels,
                steps,
                vals,
            });
        }
        let w = d;
        let l = d + 1;
        let others = || (0..d).filter(|&j| j != i).map(|j| self.a[j]);
        let mut exps = self.a.clone();
        exps[i] = 0;
        exps.push(0);
        let mut vals: Vec<Option<Affine>> = (0..l).map(|j| Some(Affine::var(j, l))).collect();
        let steps = if self.c >= 0 && others().all(|a| a >= 0) {
            let mut ez = vec![0; l];
            ez[w] = 1;
            vals[i] = Some(Affine::var(i, l).add(&Affine::var(w, l)));
            vals[w] = Some(Affine {
                c: self.c,
                a: exps
                    .iter()
                    .enumerate()
                    .map(|(j, &e)| if j == w { 1 } else { e })
                    .collect(),
            });
            vec![
                IsoStep::MonomialTwist {
                    coord: i,
                    alpha: ctx.one(),
                    exps: ez,
                },
                IsoStep::MonomialTwist {
                    coord: w,
                    alpha: pi(ctx, self.c),
                    exps,
                },
            ]
        } else if self.c <= 0 && others().all(|a| a <= 0) {
            let mut inv: Vec<i64> = exps.iter().map(|e| -e).collect();
            inv[w] = 1;
            vals[i] = Some(Affine {
                c: -self.c,
                a: inv
                    .iter()
                    .enumerate()
                    .map(|(j, &e)| if j == i { 1 } else { e })
                    .collect(),
            });
            vec![IsoStep::MonomialTwist {
                coord: i,
                alpha: pi(ctx, -self.c),
                exps: inv,
            }]
        } else {
            return Err(Error::Descriptor(
                "monomial bound changes sign over a part; split the input".into(),
            ));
        };
        let e2 = Piece {
            levels: vec![self.k; l],
            steps,
            vals,
        };
        Ok((e1, e2))
    }

    /// `a_i = ν > 1`: split by `y_i ∈ α_i R^(k̃)` and `y_j, z ∈ α_j P_ν^(k̃')`
    /// and substitute `y_j = α_j u_j^ν`, giving cells with `a_i = 1`.
    pub fn reduce_leading_exponent(&self, ctx: &Context, i: usize) -> Result<Vec<(ECell, Map)>> {
        let nu = self.a[i];
        if nu <= 1 {
            return Err(Error::Descriptor(format!("exponent {i} is not > 1")));
        }
        let e = vp(ctx.p(), nu as u64);
        let kt = self.k.max(e + 1);
        let ktp = kt + e;
        let d = self.a.len();
        let mut powered = Vec::new();
        for g in coset_reps(ctx, nu as u64, ktp)? {
            if in_level(&g, self.k)? {
                powered.push(g);
            }
        }
        let lists: Vec<Vec<PAdic>> = (0..=d)
            .map(|j| {
                if j == i {
                    level_alphas(ctx, self.k, kt)
                } else {
                    powered.clone()
                }
            })
            .collect();
        let mut out = Vec::new();
        for alpha in cartesian(&lists) {
            let va: Vec<i64> = alpha.iter().map(|a| a.v()).collect::<Result<_>>()?;
            let mut num = self.c - va[d];
            for j in 0..d {
                if j != i {
                    num += self.a[j] * va[j];
                }
            }
            let cell = ECell {
                k: kt,
                c: num.div_euclid(nu),
                a: (0..d).map(|j| if j == i { 1 } else { self.a[j] }).collect(),
            };
            let l = d + 1;
            let blocks = alpha
                .iter()
                .enumerate()
                .map(|(j, a)| {
                    let step = if j == i {
                        IsoStep::Scale(a.clone())
                    } else {
                        IsoStep::PowerCoset {
                            gamma: a.clone(),
                            n: nu as u64,
                            k: kt,
                        }
                    };
                    (1, vec![step])
                })
                .collect();
            let vals = (0..l)
                .map(|j| {
                    Some(if j == i {
                        Affine::var(j, l)
                    } else {
                        Affine {
                            c: va[j],
                            a: Affine::var(j, l).scaled(nu).a,
                        }
                    })
                })
                .collect();
            out.push((
                cell,
                Map {
                    steps: vec![IsoStep::CoordinateMap(blocks)],
                    vals,
                },
            ));
        }
        Ok(out)
    }
}

/// `{x ∈ R^(k) : v(x) = s}`.
fn annulus(ctx: &Context, k: u32, s: i64) -> Result<Vec<Piece>> {
    bounded_cell_pieces(ctx, &Cell1D::window(ctx, s, s, ctx.one(), 1, k))
}

/// Upper/lower bound on one coordinate: `C + Σ_i coeff_i t_i`.
#[derive(Clone, Debug, Default)]
struct CoordBounds {
    upper: Option<Affine>,
    lower: Option<Affine>,
}

fn triangular_bounds(cell: &PresentedCell) -> Result<Vec<CoordBounds>> {
    let mut out = vec![CoordBounds::default(); cell.l];
    for b in &cell.bounds {
        if b.exps.iter().skip(b.coord).any(|&e| e != 0) {
            return Err(Error::Descriptor(format!(
                "bound on x{} involves a later coordinate; order coordinates so bounds refer to earlier ones",
                b.coord + 1
            )));
        }
        let vb = b.beta.v()?;
        let strict = i64::from(b.cmp == Cmp::Lt);
        let slot = &mut out[b.coord];
        let (target, c) = match b.side {
            Side::Upper => (&mut slot.upper, vb - strict),
            Side::Lower => (&mut slot.lower, vb + strict),
        };
        if target.is_some() {
            return Err(Error::Descriptor(format!(
                "more than one {:?} bound on x{}",
                b.side,
                b.coord + 1
            )));
        }
        *target = Some(Affine { c, a: b.exps.clone() });
    }
    Ok(out)
}

/// Pieces of a presented cell whose bounds are triangular.
pub fn presented_pieces(ctx: &Context, cell: &PresentedCell) -> Result<Vec<Piece>> {
    cell.validate()?;
    let bounds = triangular_bounds(cell)?;
    let l = cell.l;
    if cell.cosets.is_empty() {
        return triangular_pieces(ctx, cell.k, &bounds);
    }
    let n = cell.cosets.iter().fold(1u64, |acc, c| acc.lcm(&c.n));
    let e = vp(ctx.p(), n);
    let top = cell.cosets.iter().map(|c| c.level).max().unwrap_or(0).max(cell.k);
    let kz = (e + 1).max(top.saturating_sub(e));
    let reps = coset_reps(ctx, n, kz + e)?;
    let mut lists = Vec::with_capacity(l);
    for i in 0..l {
        let mut ok = Vec::new();
        'rep: for g in &reps {
            if !in_level(g, cell.k)? {
                continue;
            }
            for c in cell.cosets.iter().filter(|c| c.coord == i) {
                if !in_power_level(&g.div(&c.gamma)?, c.n, c.level)? {
                    continue 'rep;
                }
            }
            ok.push(g.clone());
        }
        lists.push(ok);
    }
    let ni = n as i64;
    let mut out = Vec::new();
    for gammas in cartesian(&lists) {
        let vg: Vec<i64> = gammas.iter().map(|g| g.v()).collect::<Result<_>>()?;
        let shift = |aff: &Affine, j: usize, floor: bool| {
            let num = aff.c + aff.a.iter().zip(&vg).map(|(a, g)| a * g).sum::<i64>() - vg[j];
            Affine {
                c: if floor {
                    num.div_euclid(ni)
                } else {
                    -(-num).div_euclid(ni)
                },
                a: aff.a.clone(),
            }
        };
        let zb: Vec<CoordBounds> = bounds
            .iter()
            .enumerate()
            .map(|(j, b)| CoordBounds {
                upper: b.upper.as_ref().map(|u| shift(u, j, true)),
                lower: b.lower.as_ref().map(|u| shift(u, j, false)),
            })
            .collect();
        let map = Map {
            steps: vec![IsoStep::CoordinateMap(
                gammas
                    .iter()
                    .map(|g| {
                        (
                            1,
                            vec![IsoStep::PowerCoset {
                                gamma: g.clone(),
                                n,
                                k: kz,
                            }],
                        )
                    })
                    .collect(),
            )],
            vals: (0..l)
                .map(|j| {
                    Some(Affine {
                        c: vg[j],
                        a: Affine::var(j, l).scaled(ni).a,
                    })
                })
                .collect(),
        };
        for p in triangular_pieces(ctx, kz, &zb)? {
            out.push(p.then(&map)?);
        }
    }
    Ok(out)
}

/// Coordinate by coordinate: over each piece of the first `j` coordinates,
/// the next one is bounded by monomials in the box and handled as an
/// [`ECell`] after absorbing the lower bound by a twist.
fn triangular_pieces(ctx: &Context, k: u32, bounds: &[CoordBounds]) -> Result<Vec<Piece>> {
    let mut parts = vec![Piece::identity_box(vec![])];
    for b in bounds {
        let mut next = Vec::new();
        for part in &parts {
            let l = part.dim();
            let lift = |aff: &Option<Affine>| -> Result<Option<Affine>> {
                match aff {
                    None => Ok(None),
                    Some(a) => {
                        let trimmed = Affine {
                            c: a.c,
                            a: a.a[..part.vals.len()].to_vec(),
                        };
                        trimmed
                            .compose(&part.vals, l)?
                            .ok_or_else(|| Error::Descriptor("bound through a zero coordinate".into()))
                            .map(Some)
                    }
                }
            };
            let upper = lift(&b.upper)?;
            let mut lower = lift(&b.lower)?;
            if let Some(lw) = &lower {
                let nonpos = lw.c <= 0 && lw.a.iter().all(|&a| a <= 0);
                let nonneg = lw.c >= 0 && lw.a.iter().all(|&a| a >= 0);
                if nonpos {
                    lower = None;
                } else if !nonneg {
                    return Err(Error::Descriptor(
                        "lower bound changes sign over a part; split the input".into(),
                    ));
                }
            }
            let top = part.levels.iter().copied().max().unwrap_or(k).max(k);
            for base in harmonize(ctx, part, top) {
                for alpha in level_alphas(ctx, k, top) {
                    let low = lower.clone().unwrap_or_else(|| Affine::constant(0, l));
                    let fibre = match &upper {
                        None => vec![Piece::identity_box(vec![top; l + 1])],
                        Some(up) => {
                            let diff = up.add(&low.scaled(-1));
                            ECell {
                                k: top,
                                c: diff.c,
                                a: diff.a,
                            }
                            .pieces(ctx)?
                        }
                    };
                    let mut steps = Vec::new();
                    if lower.is_some() {
                        let mut exps = low.a.clone();
                        exps.push(0);
                        steps.push(IsoStep::MonomialTwist {
                            coord: l,
                            alpha: pi(ctx, low.c),
                            exps,
                        });
                    }
                    let zsteps = if alpha == ctx.one() {
                        vec![]
                    } else {
                        vec![IsoStep::Scale(alpha.clone())]
                    };
                    if !base.steps.is_empty() || !zsteps.is_empty() {
                        steps.push(IsoStep::CoordinateMap(vec![(l, base.steps.clone()), (1, zsteps)]));
                    }
                    let mut vals: Vec<Option<Affine>> = base
                        .vals
                        .iter()
                        .map(|v| v.as_ref().map(|a| a.padded(0, l + 1)))
                        .collect();
                    let mut last = low.padded(0, l + 1);
                    last.a[l] = 1;
                    vals.push(Some(last));
                    let map = Map { steps, vals };
                    for f in fibre {
                        next.push(f.then(&map)?);
                    }
                }
            }
        }
        parts = next;
    }
    Ok(parts)
}

/// Pieces of a descriptor together with the centres of its coordinates.
pub fn descriptor_pieces(ctx: &Context, x: &SetDescriptor) -> Result<Vec<(Piece, Vec<PAdic>)>> {
    x.validate()?;
    let zeros = |n: usize| vec![ctx.zero(); n];
    Ok(match x {
        SetDescriptor::Empty { .. } => vec![],
        SetDescriptor::Point(pt) => {
            let steps = pt
                .iter()
                .enumerate()
                .map(|(i, v)| IsoStep::InsertConst {
                    pos: i,
                    value: v.clone(),
                })
                .collect();
            let vals = pt
                .iter()
                .map(|v| v.val().finite().map(|c| Affine::constant(c, 0)))
                .collect();
            vec![(
                Piece {
                    levels: vec![],
                    steps,
                    vals,
                },
                zeros(pt.len()),
            )]
        }
        SetDescriptor::Cell(c) => cell_pieces(ctx, c)?
            .into_iter()
            .map(|p| (p, vec![c.c.clone()]))
            .collect(),
        SetDescriptor::LevelBox { l, k } => vec![(Piece::identity_box(vec![*k; *l]), zeros(*l))],
        SetDescriptor::Presented(c) => presented_pieces(ctx, c)?.into_iter().map(|p| (p, zeros(c.l))).collect(),
        SetDescriptor::Space(d) => {
            let line = SetDescriptor::Cell(Cell1D {
                lower: None,
                upper: None,
                c: ctx.zero(),
                lambda: ctx.one(),
                n: 1,
                level: 0,
            });
            let axis = SetDescriptor::Union(vec![SetDescriptor::Point(vec![ctx.zero()]), line]);
            descriptor_pieces(ctx, &SetDescriptor::product_of(vec![axis; *d]))?
        }
        SetDescriptor::Product(a, b) => {
            let pa = descriptor_pieces(ctx, a)?;
            let pb = descriptor_pieces(ctx, b)?;
            let mut out = Vec::with_capacity(pa.len() * pb.len());
            for (x, cx) in &pa {
                for (y, cy) in &pb {
                    let mut c = cx.clone();
                    c.extend(cy.iter().cloned());
                    out.push((product_piece(&[x, y]), c));
                }
            }
            out
        }
        SetDescriptor::Union(parts) => {
            let mut out = Vec::new();
            for s in parts {
                out.extend(descriptor_pieces(ctx, s)?);
            }
            out
        }
        SetDescriptor::Tagged(parts) => {
            let mut out = Vec::new();
            for (t, s) in parts {
                for (mut p, c) in descriptor_pieces(ctx, s)? {
                    p.steps.push(IsoStep::InsertConst {
                        pos: 0,
                        value: ctx.int(*t),
                    });
                    p.vals.insert(0, None);
                    let mut cc = vec![ctx.int(*t)];
                    cc.extend(c);
                    out.push((p, cc));
                }
            }
            out
        }
        SetDescriptor::Excluding { .. } | SetDescriptor::Image(_) => {
            return Err(Error::Descriptor(
                "rectilinearization takes cells, boxes, presented cells, products and unions".into(),
            ))
        }
    })
}

/// One part of a rectilinearization.
#[derive(Clone, Debug, PartialEq)]
pub struct RectPart {
    pub part: SetDescriptor,
    pub l: usize,
    pub k: u32,
    /// `LevelBox(l, k) → part`.
    pub pipeline: IsoPipeline,
    /// Forms on the box, each with `e = 1`.
    pub forms: Vec<MonomialForm>,
    /// The input forms, in the input coordinates.
    pub source_forms: Vec<MonomialForm>,
    /// Centres of the input coordinates the input forms refer to.
    pub centers: Vec<PAdic>,
}

impl RectPart {
    pub fn box_descriptor(&self) -> SetDescriptor {
        SetDescriptor::LevelBox { l: self.l, k: self.k }
    }
}

/// Splits every box coordinate into `γ_j (R ∩ P_N^(k'))` and substitutes
/// `y_j = γ_j w_j^N`.
fn power_refine(ctx: &Context, piece: &Piece, n: u64) -> Result<Vec<Piece>> {
    let l = piece.dim();
    let k = piece.levels.first().copied().unwrap_or(1);
    let e = vp(ctx.p(), n);
    let k2 = (e + 1).max(k.saturating_sub(e));
    let mut reps = Vec::new();
    for g in coset_reps(ctx, n, k2 + e)? {
        if in_level(&g, k)? {
            reps.push(g);
        }
    }
    let mut out = Vec::new();
    for gammas in cartesian(&vec![reps; l]) {
        let blocks = gammas
            .iter()
            .map(|g| {
                (
                    1,
                    vec![IsoStep::PowerCoset {
                        gamma: g.clone(),
                        n,
                        k: k2,
                    }],
                )
            })
            .collect();
        let vals = gammas
            .iter()
            .enumerate()
            .map(|(j, g)| {
                Ok(Some(Affine {
                    c: g.v()?,
                    a: Affine::var(j, l).scaled(n as i64).a,
                }))
            })
            .collect::<Result<_>>()?;
        let refine = Piece {
            levels: vec![k2; l],
            steps: vec![IsoStep::CoordinateMap(blocks)],
            vals,
        };
        let map = Map {
            steps: piece.steps.clone(),
            vals: piece.vals.clone(),
        };
        out.push(refine.then(&map)?);
    }
    Ok(out)
}

/// Numerator of a form composed onto a piece: `None` when infinite.
fn form_numerator(form: &MonomialForm, piece: &Piece) -> Result<Option<Affine>> {
    let vb = match form.beta.val() {
        Valuation::Infinity => return Ok(None),
        Valuation::Finite(v) => v,
    };
    Affine {
        c: vb,
        a: form.mu.clone(),
    }
    .compose(&piece.vals, piece.dim())
}

fn finalize(ctx: &Context, piece: Piece, centers: Vec<PAdic>, forms: &[MonomialForm]) -> Result<Vec<RectPart>> {
    let k = piece.levels.iter().copied().max().unwrap_or(1);
    let mut out = Vec::new();
    for p in harmonize(ctx, &piece, k) {
        let mut refine = 1u64;
        for f in forms {
            if let Some(num) = form_numerator(f, &p)? {
                let g = num.a.iter().fold(0i64, |acc, &x| acc.gcd(&x));
                let e = f.e as i64;
                refine = refine.lcm(&((e / e.gcd(&g)) as u64));
            }
        }
        let refined = if refine > 1 && p.dim() > 0 {
            power_refine(ctx, &p, refine)?
        } else {
            vec![p]
        };
        for q in refined {
            let mut out_forms = Vec::with_capacity(forms.len());
            for f in forms {
                let l = q.dim();
                out_forms.push(match form_numerator(f, &q)? {
                    None => MonomialForm {
                        e: 1,
                        beta: ctx.zero(),
                        mu: vec![0; l],
                    },
                    Some(num) => {
                        let e = f.e as i64;
                        if num.c % e != 0 || num.a.iter().any(|a| a % e != 0) {
                            return Err(Error::NonIntegralForm(format!(
                                "valuation ({} + …)/{e} is not an integer on a part",
                                num.c
                            )));
                        }
                        MonomialForm {
                            e: 1,
                            beta: ctx.pi_pow(num.c / e),
                            mu: num.a.iter().map(|a| a / e).collect(),
                        }
                    }
                });
            }
            let l = q.dim();
            let k = q.levels.first().copied().unwrap_or(1);
            let pipeline = IsoPipeline::onto_image(SetDescriptor::LevelBox { l, k }, q.steps);
            out.push(RectPart {
                part: pipeline.target.clone(),
                l,
                k,
                pipeline,
                forms: out_forms,
                source_forms: forms.to_vec(),
                centers: centers.clone(),
            });
        }
    }
    Ok(out)
}

/// Rectilinearization of a one-variable cell with forms in `x − c`.
pub fn rectilinearize_1d(ctx: &Context, cell: &Cell1D, forms: &[MonomialForm]) -> Result<Vec<RectPart>> {
    rectilinearize(ctx, &SetDescriptor::Cell(cell.clone()), forms)
}

/// Partition of `x` into images of boxes, with the forms made monomial and
/// `e = 1` on every part.
pub fn rectilinearize(ctx: &Context, x: &SetDescriptor, forms: &[MonomialForm]) -> Result<Vec<RectPart>> {
    let arity = x
        .arity()
        .ok_or_else(|| Error::Shape("rectilinearization needs a fixed arity".into()))?;
    for f in forms {
        f.validate(arity)?;
    }
    let _ = centers(x, ctx)?;
    let mut out = Vec::new();
    for (piece, c) in descriptor_pieces(ctx, x)? {
        out.extend(finalize(ctx, piece, c, forms)?);
    }
    Ok(out)
}
