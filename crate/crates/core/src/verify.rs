//! Residue enumeration, random sampling and the checks run against every
//! constructed partition and pipeline.

use std::fmt;

use num_bigint::BigInt;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::atlas::IsoPipeline;
use crate::error::{Error, Result};
use crate::hensel::vp;
use crate::padic::{Context, PAdic, Valuation};
use crate::rectilinear::RectPart;
use crate::setmodel::{Cell1D, Point, SetDescriptor};

/// Relative digits a truncated round-trip result must carry.
pub const MIN_DIGITS: u32 = 12;

/// Residues mod `p^m` per coordinate, restricted to valuations in
/// `[s_min, s_max]`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ResidueWindow {
    pub m: u32,
    pub s_min: i64,
    pub s_max: i64,
}

impl ResidueWindow {
    pub fn new(m: u32, s_min: i64, s_max: i64) -> Result<Self> {
        if s_min < 0 || s_min > s_max || s_max >= m as i64 {
            return Err(Error::WindowTooSmall {
                condition: format!("valuations {s_min}..={s_max}"),
                required: s_max + 1,
            });
        }
        Ok(ResidueWindow { m, s_min, s_max })
    }

    /// The widest window whose membership conditions for `s` are decided
    /// mod `p^m`.
    pub fn fit(p: u32, s: &SetDescriptor, m: u32) -> Result<Self> {
        let margin = decidability_margin(p, s) as i64;
        let s_max = m as i64 - margin.max(1);
        if s_max < 0 {
            return Err(Error::WindowTooSmall {
                condition: format!("margin {margin}"),
                required: margin.max(1),
            });
        }
        ResidueWindow::new(m, 0, s_max)
    }

    /// Residues `r` with `s_min ≤ v(r) ≤ s_max`, ascending.
    pub fn coordinate_residues(&self, p: u32) -> Vec<u64> {
        let modulus = (p as u64).pow(self.m);
        let lo = (p as u64).pow(self.s_min as u32);
        let hi = (p as u64).pow(self.s_max as u32 + 1);
        (1..modulus).filter(|r| r % lo == 0 && r % hi != 0).collect()
    }
}

/// Digits beyond `v(x)` a membership test of `s` reads.
pub fn decidability_margin(p: u32, s: &SetDescriptor) -> u32 {
    let power = |n: u64| if n > 1 { 2 * vp(p, n) + 1 } else { 0 };
    match s {
        SetDescriptor::Cell(c) => power(c.n).max(c.level),
        SetDescriptor::LevelBox { k, .. } => *k,
        SetDescriptor::Presented(c) => c
            .cosets
            .iter()
            .map(|q| power(q.n).max(q.level))
            .max()
            .unwrap_or(0)
            .max(c.k),
        SetDescriptor::Product(a, b) => decidability_margin(p, a).max(decidability_margin(p, b)),
        SetDescriptor::Union(parts) => parts.iter().map(|s| decidability_margin(p, s)).max().unwrap_or(0),
        SetDescriptor::Tagged(parts) => parts.iter().map(|(_, s)| decidability_margin(p, s)).max().unwrap_or(0),
        SetDescriptor::Excluding { base, .. } => decidability_margin(p, base),
        SetDescriptor::Image(pl) => decidability_margin(p, &pl.source),
        _ => 0,
    }
}

fn tuples(ctx: &Context, w: &ResidueWindow, arity: usize) -> Result<Vec<Vec<u64>>> {
    let coords = w.coordinate_residues(ctx.p());
    let total = (coords.len() as u128).pow(arity as u32);
    if total > 4_000_000 {
        return Err(Error::Verification(format!("{total} residue tuples is too many")));
    }
    let mut out: Vec<Vec<u64>> = vec![vec![]];
    for _ in 0..arity {
        out = out
            .into_iter()
            .flat_map(|t| {
                coords.iter().map(move |&r| {
                    let mut t = t.clone();
                    t.push(r);
                    t
                })
            })
            .collect();
    }
    Ok(out)
}

fn arity_of(s: &SetDescriptor) -> Result<usize> {
    s.arity().ok_or_else(|| Error::Shape("set has no fixed arity".into()))
}

/// Residue tuples whose whole ball `r + p^m R^l` lies in `s`; a ball
/// meeting both `s` and its complement is an error.
pub fn enumerate_residues(ctx: &Context, s: &SetDescriptor, w: &ResidueWindow) -> Result<Vec<Vec<u64>>> {
    let all = tuples(ctx, w, arity_of(s)?)?;
    let decided: Vec<Result<bool>> = all
        .par_iter()
        .map(|t| {
            let x: Point = t
                .iter()
                .map(|&r| ctx.int(r as i64).truncate_absolute(w.m as i64))
                .collect::<Result<_>>()?;
            s.member(&x).map_err(|e| {
                if e.is_precision() {
                    Error::WindowTooSmall {
                        condition: format!("membership of {t:?} mod p^{} ({e})", w.m),
                        required: w.m as i64 + 1,
                    }
                } else {
                    e
                }
            })
        })
        .collect();
    let mut out = Vec::new();
    for (t, d) in all.into_iter().zip(decided) {
        if d? {
            out.push(t);
        }
    }
    Ok(out)
}

/// Residue tuples whose least nonnegative lift lies in `s`.
pub fn enumerate_lifts(ctx: &Context, s: &SetDescriptor, w: &ResidueWindow) -> Result<Vec<Vec<u64>>> {
    let all = tuples(ctx, w, arity_of(s)?)?;
    let decided: Vec<Result<bool>> = all
        .par_iter()
        .map(|t| s.member(&t.iter().map(|&r| ctx.int(r as i64)).collect::<Vec<_>>()))
        .collect();
    let mut out = Vec::new();
    for (t, d) in all.into_iter().zip(decided) {
        if d? {
            out.push(t);
        }
    }
    Ok(out)
}

/// Outcome of one check, printed as a single line.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Report {
    pub check: String,
    pub passed: bool,
    pub checked: usize,
    pub counterexample: Option<String>,
}

impl Report {
    fn from_failures(check: impl Into<String>, checked: usize, failures: Vec<Option<String>>) -> Report {
        let counterexample = failures.into_iter().flatten().next();
        Report {
            check: check.into(),
            passed: counterexample.is_none(),
            checked,
            counterexample,
        }
    }

    pub fn into_result(self) -> Result<Report> {
        if self.passed {
            Ok(self)
        } else {
            Err(Error::Verification(self.to_string()))
        }
    }
}

impl fmt::Display for Report {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let status = if self.passed { "PASS" } else { "FAIL" };
        write!(f, "{status} {} ({} checked)", self.check, self.checked)?;
        if let Some(c) = &self.counterexample {
            write!(f, ": {c}")?;
        }
        Ok(())
    }
}

pub fn show_point(x: &[PAdic]) -> String {
    let parts: Vec<String> = x.iter().map(|c| c.to_string()).collect();
    format!("({})", parts.join(", "))
}

/// Every tested lift of every residue in the window lies in exactly as many
/// parts as it lies in `x` (zero or one). Each residue is tested at its
/// least lift and at `extra` seeded random lifts.
pub fn check_partition(
    ctx: &Context,
    x: &SetDescriptor,
    parts: &[SetDescriptor],
    w: &ResidueWindow,
    extra: usize,
    seed: u64,
) -> Result<Report> {
    let all = tuples(ctx, w, arity_of(x)?)?;
    let modulus = BigInt::from(ctx.p()).pow(w.m);
    let failures: Vec<Option<String>> = all
        .par_iter()
        .enumerate()
        .map(|(i, t)| {
            let mut rng = stream(seed, i as u64);
            for j in 0..=extra {
                let pt: Point = t
                    .iter()
                    .map(|&r| {
                        let lift = if j == 0 { 0 } else { rng.gen_range(0..1u64 << 20) };
                        ctx.bigint(&(BigInt::from(r) + &modulus * lift))
                    })
                    .collect();
                let outcome = (|| -> Result<Option<String>> {
                    let inside = x.member(&pt)?;
                    let mut hits = Vec::new();
                    for (k, part) in parts.iter().enumerate() {
                        if part.member(&pt)? {
                            hits.push(k);
                        }
                    }
                    Ok(match (inside, hits.len()) {
                        (true, 1) | (false, 0) => None,
                        (true, 0) => Some(format!("{} is in no part", show_point(&pt))),
                        (false, _) => Some(format!(
                            "{} lies outside the set but in parts {hits:?}",
                            show_point(&pt)
                        )),
                        (true, _) => Some(format!("{} lies in parts {hits:?}", show_point(&pt))),
                    })
                })();
                match outcome {
                    Ok(None) => {}
                    Ok(Some(msg)) => return Some(msg),
                    Err(e) => return Some(format!("{}: {e}", show_point(&pt))),
                }
            }
            None
        })
        .collect();
    Ok(Report::from_failures(
        format!("partition mod p^{}", w.m),
        all.len() * (extra + 1),
        failures,
    ))
}

/// Independent random stream for sample `i`.
pub fn stream(seed: u64, i: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(i);
    rng
}

/// Random sampler for descriptors: valuations follow a geometric law with
/// ratio 1/2 truncated at `cap` steps from the nearest bound, the leading
/// digit is uniform among the allowed ones, and `digits − 1` further digits
/// are uniform.
#[derive(Clone, Copy, Debug)]
pub struct Sampler {
    pub digits: u32,
    pub cap: i64,
    pub attempts: usize,
}

impl Default for Sampler {
    fn default() -> Self {
        Sampler {
            digits: 12,
            cap: 8,
            attempts: 400,
        }
    }
}

impl Sampler {
    fn geometric(&self, rng: &mut ChaCha8Rng) -> i64 {
        let mut g = 0;
        while g < self.cap && rng.gen_bool(0.5) {
            g += 1;
        }
        g
    }

    /// A unit `≡ 1 mod p^k` for `k ≥ 1`, any unit for `k = 0`.
    fn unit(&self, ctx: &Context, level: u32, rng: &mut ChaCha8Rng) -> PAdic {
        let p = BigInt::from(ctx.p());
        let mut tail = BigInt::from(0);
        let free = self.digits.saturating_sub(level.max(1));
        for _ in 0..free {
            tail = tail * &p + rng.gen_range(0..ctx.p());
        }
        let u = if level == 0 {
            BigInt::from(rng.gen_range(1..ctx.p())) + &p * tail
        } else {
            BigInt::from(1) + p.pow(level) * tail
        };
        ctx.bigint(&u)
    }

    fn cell(&self, ctx: &Context, c: &Cell1D, rng: &mut ChaCha8Rng) -> Result<PAdic> {
        if c.is_singleton() {
            return Ok(c.c.clone());
        }
        if c.is_empty() {
            return Err(Error::Sampling("empty cell".into()));
        }
        let vl = c.lambda.v()?;
        let n = c.n as i64;
        let (lo, hi) = c.valuation_window();
        let zlo = lo.map(|lo| (lo - vl).div_euclid(n) + i64::from((lo - vl).rem_euclid(n) != 0));
        let zhi = hi.map(|hi| (hi - vl).div_euclid(n));
        let zlevel = c.level.saturating_sub(vp(ctx.p(), c.n));
        for _ in 0..self.attempts {
            let g = self.geometric(rng);
            let vz = match (zlo, zhi) {
                (Some(a), Some(b)) if a > b => return Err(Error::Sampling("empty valuation window".into())),
                (Some(a), Some(b)) => a + g.min(b - a),
                (Some(a), None) => a + g,
                (None, Some(b)) => b - g,
                (None, None) => {
                    if rng.gen_bool(0.5) {
                        g
                    } else {
                        -g
                    }
                }
            };
            let z = self.unit(ctx, zlevel, rng).mul_pi_pow(vz);
            let x = c.c.add(&c.lambda.mul(&z.pow(n)?)?)?;
            if c.member(&x)? {
                return Ok(x);
            }
        }
        Err(Error::Sampling(format!(
            "no member found in {} attempts",
            self.attempts
        )))
    }

    pub fn sample(&self, ctx: &Context, s: &SetDescriptor, rng: &mut ChaCha8Rng) -> Result<Point> {
        match s {
            SetDescriptor::Empty { .. } => Err(Error::Sampling("empty set".into())),
            SetDescriptor::Point(x) => Ok(x.clone()),
            SetDescriptor::Cell(c) => Ok(vec![self.cell(ctx, c, rng)?]),
            SetDescriptor::LevelBox { l, k } => Ok((0..*l)
                .map(|_| {
                    let v = self.geometric(rng);
                    self.unit(ctx, *k, rng).mul_pi_pow(v)
                })
                .collect()),
            SetDescriptor::Space(d) => Ok((0..*d)
                .map(|_| {
                    if rng.gen_ratio(1, 16) {
                        return ctx.zero();
                    }
                    let g = self.geometric(rng);
                    let v = if rng.gen_bool(0.5) { g } else { -g };
                    self.unit(ctx, 0, rng).mul_pi_pow(v)
                })
                .collect()),
            SetDescriptor::Presented(c) => {
                let cons = c.constraints();
                for _ in 0..self.attempts * 4 {
                    let t: Vec<i64> = (0..c.l).map(|_| rng.gen_range(0..=self.cap)).collect();
                    if !cons.iter().all(|q| q.holds(&t)) {
                        continue;
                    }
                    let x: Point = t.iter().map(|&v| self.unit(ctx, c.k, rng).mul_pi_pow(v)).collect();
                    if c.member(&x)? {
                        return Ok(x);
                    }
                }
                Err(Error::Sampling("no member of the presented cell found".into()))
            }
            SetDescriptor::Product(a, b) => {
                let mut x = self.sample(ctx, a, rng)?;
                x.extend(self.sample(ctx, b, rng)?);
                Ok(x)
            }
            SetDescriptor::Union(parts) => self.pick(ctx, parts.iter().map(|s| (None, s)).collect(), rng),
            SetDescriptor::Tagged(parts) => self.pick(ctx, parts.iter().map(|(t, s)| (Some(*t), s)).collect(), rng),
            SetDescriptor::Excluding { base, points } => {
                for _ in 0..self.attempts {
                    let x = self.sample(ctx, base, rng)?;
                    if !points.iter().any(|q| q == &x) {
                        return Ok(x);
                    }
                }
                Err(Error::Sampling("only excluded points were drawn".into()))
            }
            SetDescriptor::Image(pl) => pl.forward(&self.sample(ctx, &pl.source, rng)?),
        }
    }

    fn pick(&self, ctx: &Context, options: Vec<(Option<i64>, &SetDescriptor)>, rng: &mut ChaCha8Rng) -> Result<Point> {
        if options.is_empty() {
            return Err(Error::Sampling("empty union".into()));
        }
        let start = rng.gen_range(0..options.len());
        let mut last = None;
        for k in 0..options.len() {
            let (tag, s) = options[(start + k) % options.len()];
            match self.sample(ctx, s, rng) {
                Ok(mut x) => {
                    if let Some(t) = tag {
                        x.insert(0, ctx.int(t));
                    }
                    return Ok(x);
                }
                Err(e @ Error::Sampling(_)) => last = Some(e),
                Err(e) => return Err(e),
            }
        }
        Err(last.expect("some option was tried"))
    }
}

/// Exact agreement, or agreement on every known digit with at least
/// [`MIN_DIGITS`] relative digits known.
pub fn close(a: &[PAdic], b: &[PAdic]) -> Result<bool> {
    if a.len() != b.len() {
        return Ok(false);
    }
    for (x, y) in a.iter().zip(b) {
        if x.is_exact() && y.is_exact() {
            if x != y {
                return Ok(false);
            }
            continue;
        }
        if !x.agrees_with(y)? {
            return Ok(false);
        }
        let short = [x, y]
            .iter()
            .filter_map(|c| c.relative_precision())
            .any(|r| r < MIN_DIGITS);
        if short {
            return Ok(false);
        }
    }
    Ok(true)
}

fn one_way(
    ctx: &Context,
    pl: &IsoPipeline,
    forward: bool,
    sampler: &Sampler,
    rng: &mut ChaCha8Rng,
) -> std::result::Result<(), String> {
    let (from, to) = if forward {
        (&pl.source, &pl.target)
    } else {
        (&pl.target, &pl.source)
    };
    let go = |x: &[PAdic], fwd: bool| if fwd { pl.forward(x) } else { pl.backward(x) };
    let x = sampler.sample(ctx, from, rng).map_err(|e| format!("sampling: {e}"))?;
    let y = go(&x, forward).map_err(|e| format!("{} at {}", e, show_point(&x)))?;
    match to.member(&y) {
        Ok(true) => {}
        Ok(false) => return Err(format!("{} ↦ {} lands outside", show_point(&x), show_point(&y))),
        Err(e) => return Err(format!("membership of {}: {e}", show_point(&y))),
    }
    let back = go(&y, !forward).map_err(|e| format!("{} at {}", e, show_point(&y)))?;
    match close(&back, &x) {
        Ok(true) => Ok(()),
        Ok(false) => Err(format!(
            "{} ↦ {} ↦ {}",
            show_point(&x),
            show_point(&y),
            show_point(&back)
        )),
        Err(e) => Err(format!("comparing at {}: {e}", show_point(&x))),
    }
}

/// Round trips and membership transport on `samples` points drawn from the
/// source and `samples` drawn from the target.
pub fn check_bijection(ctx: &Context, pl: &IsoPipeline, samples: usize, seed: u64) -> Report {
    check_bijection_with(ctx, pl, samples, seed, &Sampler::default())
}

pub fn check_bijection_with(ctx: &Context, pl: &IsoPipeline, samples: usize, seed: u64, sampler: &Sampler) -> Report {
    let failures: Vec<Option<String>> = (0..2 * samples)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream(seed, i as u64);
            let forward = i < samples;
            one_way(ctx, pl, forward, sampler, &mut rng)
                .err()
                .map(|e| format!("{}: {e}", if forward { "forward" } else { "backward" }))
        })
        .collect();
    Report::from_failures("bijection", 2 * samples, failures)
}

/// Forward images of `samples` source points lie in `set`. Catches parts
/// reaching outside the window a residue enumeration covers.
pub fn check_containment(ctx: &Context, pl: &IsoPipeline, set: &SetDescriptor, samples: usize, seed: u64) -> Report {
    let sampler = Sampler::default();
    let failures: Vec<Option<String>> = (0..samples)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream(seed, i as u64);
            let mut run = || -> Result<Option<String>> {
                let y = sampler.sample(ctx, &pl.source, &mut rng)?;
                let x = pl.forward(&y)?;
                Ok((!set.member(&x)?).then(|| format!("{} ↦ {} is outside", show_point(&y), show_point(&x))))
            };
            run().unwrap_or_else(|e| Some(e.to_string()))
        })
        .collect();
    Report::from_failures("containment", samples, failures)
}

/// `v(b(x)) = v(β' ∏ y_i^{μ'_i})` for `x` the image of box samples `y`.
pub fn check_valuation_law(ctx: &Context, part: &RectPart, samples: usize, seed: u64) -> Report {
    if let Some(f) = part.forms.iter().find(|f| f.e != 1) {
        return Report {
            check: "valuation law".into(),
            passed: false,
            checked: 0,
            counterexample: Some(format!("form with e = {}", f.e)),
        };
    }
    let sampler = Sampler::default();
    let bx = part.box_descriptor();
    let zeros = vec![ctx.zero(); part.l];
    let failures: Vec<Option<String>> = (0..samples)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream(seed, i as u64);
            let mut run = || -> Result<Option<String>> {
                let y = sampler.sample(ctx, &bx, &mut rng)?;
                let x = part.pipeline.forward(&y)?;
                for (j, (orig, new)) in part.source_forms.iter().zip(&part.forms).enumerate() {
                    let lhs = orig.valuation(&x, &part.centers)?;
                    let rhs = new.valuation(&y, &zeros)?;
                    if lhs != rhs {
                        return Ok(Some(format!(
                            "form {j} at {}: {} vs {}",
                            show_point(&y),
                            show_val(lhs),
                            show_val(rhs)
                        )));
                    }
                }
                Ok(None)
            };
            run().unwrap_or_else(|e| Some(e.to_string()))
        })
        .collect();
    Report::from_failures("valuation law", samples * part.forms.len(), failures)
}

fn show_val(v: Valuation) -> String {
    match v {
        Valuation::Infinity => "∞".into(),
        Valuation::Finite(n) => n.to_string(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::atlas::{k_iso_pipeline, IsoStep};
    use crate::rectilinear::rectilinearize_1d;
    use crate::setmodel::MonomialForm;

    fn ctx(p: u32) -> Context {
        Context::with_default_precision(p).unwrap()
    }

    #[test]
    fn unit_residues_mod_25() {
        let k = ctx(5);
        let units = SetDescriptor::Cell(Cell1D::window(&k, 0, 0, k.one(), 1, 0));
        let w = ResidueWindow::new(2, 0, 1).unwrap();
        assert_eq!(enumerate_residues(&k, &units, &w).unwrap().len(), 20);
        let empty = SetDescriptor::Empty { arity: 1 };
        assert!(enumerate_residues(&k, &empty, &w).unwrap().is_empty());
    }

    #[test]
    fn square_units_mod_125() {
        let k = ctx(5);
        let sq = SetDescriptor::Cell(Cell1D::window(&k, 0, 0, k.one(), 2, 0));
        let w = ResidueWindow::new(3, 0, 0).unwrap();
        let got = enumerate_residues(&k, &sq, &w).unwrap();
        // Oracle: squares of units mod 125.
        let mut want: Vec<u64> = (1..125u64).filter(|r| r % 5 != 0).map(|r| r * r % 125).collect();
        want.sort();
        want.dedup();
        assert_eq!(want.len(), 50);
        assert_eq!(got, want.into_iter().map(|r| vec![r]).collect::<Vec<_>>());
    }

    #[test]
    fn window_refuses_undecided() {
        let k = ctx(2);
        let sq = SetDescriptor::Cell(Cell1D::lower_bounded(&k, 0, k.one(), 2, 0));
        let w = ResidueWindow::new(2, 0, 1).unwrap();
        assert!(matches!(
            enumerate_residues(&k, &sq, &w),
            Err(Error::WindowTooSmall { .. })
        ));
    }

    #[test]
    fn partition_checks() {
        let k = ctx(5);
        let units = Cell1D::window(&k, 0, 0, k.one(), 1, 0);
        let x = SetDescriptor::Cell(units.clone());
        let parts: Vec<SetDescriptor> = rectilinearize_1d(&k, &units, &[])
            .unwrap()
            .into_iter()
            .map(|p| p.part)
            .collect();
        let w = ResidueWindow::new(3, 0, 2).unwrap();
        assert!(check_partition(&k, &x, &parts, &w, 1, 7).unwrap().passed);
        let mut doubled = parts.clone();
        doubled.push(parts[5].clone());
        let r = check_partition(&k, &x, &doubled, &w, 0, 7).unwrap();
        assert!(!r.passed && r.counterexample.unwrap().contains("parts"));
        let r = check_partition(&k, &x, &parts[1..], &w, 0, 7).unwrap();
        assert!(!r.passed && r.counterexample.unwrap().contains("no part"));
    }

    #[test]
    fn bijection_checks() {
        let k = ctx(5);
        let id = IsoPipeline::identity(SetDescriptor::valuation_ring(&k));
        assert!(check_bijection(&k, &id, 200, 1).passed);
        assert!(check_bijection(&k, &k_iso_pipeline(&k), 500, 2).passed);
        // Not injective: every point goes to 0.
        let bad = IsoPipeline::new(
            SetDescriptor::Space(1),
            SetDescriptor::Space(1),
            vec![IsoStep::Scale(k.zero())],
        );
        let r = check_bijection(&k, &bad, 50, 3);
        assert!(!r.passed && r.counterexample.is_some());
    }

    #[test]
    fn valuation_law_checks() {
        let k = ctx(5);
        let c = Cell1D::window(&k, 0, 1, k.one(), 1, 0);
        let form = MonomialForm {
            e: 1,
            beta: k.int(5),
            mu: vec![2],
        };
        let parts = rectilinearize_1d(&k, &c, std::slice::from_ref(&form)).unwrap();
        for p in &parts {
            assert!(check_valuation_law(&k, p, 20, 4).passed);
        }
        let mut bad = parts.iter().find(|p| p.l == 1).unwrap().clone();
        bad.forms[0].beta = k.int(25);
        assert!(!check_valuation_law(&k, &bad, 20, 4).passed);
    }

    #[test]
    fn reports_are_deterministic() {
        let k = ctx(3);
        let a = check_bijection(&k, &k_iso_pipeline(&k), 300, 11).to_string();
        let b = check_bijection(&k, &k_iso_pipeline(&k), 300, 11).to_string();
        assert_eq!(a, b);
    }
}
