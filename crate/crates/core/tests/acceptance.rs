//! The acceptance suite. Each criterion prints one line; reports exclude
//! timings so that reruns can be compared byte for byte.

mod common;

use std::collections::BTreeSet;
use std::time::{Duration, Instant};

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, ToPrimitive, Zero};
use rand::Rng;

use common::{residue, Entry, FINITE, INFINITE};
use padiso::atlas::{hotel_pipeline, k_iso_pipeline, merge_copies, pair_to_k_pipeline, IsoPipeline, IsoStep};
use padiso::classify::{classify_to_kd, compose_classified, Classified};
use padiso::hensel::{hensel_lift, in_power_level, nth_root_in_level, vp, Polynomial};
use padiso::rectilinear::rectilinearize;
use padiso::setmodel::{Point, SetDescriptor};
use padiso::text::parse_descriptor;
use padiso::verify::{
    check_bijection, check_containment, check_partition, check_valuation_law, close, show_point, stream, Report,
    ResidueWindow,
};
use padiso::{Context, PAdic};

const SEED: u64 = 20_240_601;

#[derive(Default)]
struct Outcome {
    lines: Vec<String>,
    failures: Vec<String>,
    checked: usize,
}

impl Outcome {
    fn record(&mut self, label: &str, r: Report) {
        self.checked += r.checked;
        let line = format!("{label}: {r}");
        if !r.passed {
            self.failures.push(line.clone());
        }
        self.lines.push(line);
    }

    fn expect(&mut self, label: impl Into<String>, ok: bool, detail: impl FnOnce() -> String) {
        let label = label.into();
        self.checked += 1;
        if ok {
            self.lines.push(format!("{label}: ok"));
        } else {
            let line = format!("{label}: {}", detail());
            self.failures.push(line.clone());
            self.lines.push(line);
        }
    }
}

fn ctx(p: u32) -> Context {
    Context::with_default_precision(p).unwrap()
}

fn big_pow(p: u32, e: u32) -> BigInt {
    BigInt::from(p).pow(e)
}

// ---------------------------------------------------------------- Hensel

fn poly_mul(a: &[BigInt], b: &[BigInt]) -> Vec<BigInt> {
    let mut out = vec![BigInt::zero(); a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

fn poly_add(a: &[BigInt], b: &[BigInt]) -> Vec<BigInt> {
    let n = a.len().max(b.len());
    (0..n)
        .map(|i| a.get(i).cloned().unwrap_or_default() + b.get(i).cloned().unwrap_or_default())
        .collect()
}

fn eval_mod(f: &[BigInt], x: &BigInt, m: &BigInt) -> BigInt {
    f.iter().rev().fold(BigInt::zero(), |acc, c| (acc * x + c).mod_floor(m))
}

/// `f = (x − r)(p^e a + (x − r) g) + p^{2e+1} c`, so that `α = r` meets
/// the lifting hypotheses with `v(f'(α)) = e` exactly.
fn hensel_instance(p: u32, i: u64) -> (Vec<BigInt>, BigInt, u32) {
    let mut rng = stream(SEED, i);
    let e = rng.gen_range(0..3u32);
    let r = BigInt::from(rng.gen_range(0..p.pow(e + 4)));
    let a = BigInt::from(rng.gen_range(1..p)) + BigInt::from(p) * rng.gen_range(0..5);
    let g: Vec<BigInt> = (0..rng.gen_range(1..3))
        .map(|_| BigInt::from(rng.gen_range(-9..10)))
        .collect();
    let c = BigInt::from(rng.gen_range(-20..21));
    let lin = vec![-r.clone(), BigInt::one()];
    let inner = poly_add(&[big_pow(p, e) * a], &poly_mul(&lin, &g));
    let f = poly_add(&poly_mul(&lin, &inner), &[big_pow(p, 2 * e + 1) * c]);
    (f, r, e)
}

fn hensel_suite() -> Outcome {
    let mut out = Outcome::default();
    let mut idx = 0;
    for p in [2u32, 3, 5, 7] {
        let k = ctx(p);
        for _ in 0..15 {
            idx += 1;
            let (f, r, e) = hensel_instance(p, idx);
            let label = format!("p={p} e={e} f={f:?} alpha={r}");
            let m = e + 4;
            let pm = big_pow(p, m);
            let fine = big_pow(p, 2 * e + 4);
            let ball = big_pow(p, e + 1);
            // Residues mod p^{e+4} in α + p^{e+1}R whose value is 0 mod p^{2e+4};
            // exactly the residue of the unique root.
            let mut oracle = Vec::new();
            let mut x = r.mod_floor(&ball);
            while x < pm {
                if eval_mod(&f, &x, &fine).is_zero() {
                    oracle.push(x.clone());
                }
                x += &ball;
            }
            let poly = Polynomial::new(f.iter().map(|c| k.bigint(c)).collect()).unwrap();
            let root = hensel_lift(&poly, &k.bigint(&r), e, 20);
            let got = root.as_ref().ok().and_then(|x| residue(x, m));
            out.expect(label, oracle.len() == 1 && got.as_ref() == oracle.first(), || {
                format!("oracle {oracle:?}, lifted {root:?}")
            });
        }
    }
    out
}

// ------------------------------------------------------- Power maps

fn power_map_suite() -> Outcome {
    let mut out = Outcome::default();
    for p in [2u32, 3, 5] {
        let k = ctx(p);
        for n in [2u64, 3, 4] {
            let e = vp(p, n);
            let lvl = e + 1;
            let lvl2 = lvl + e;
            let m = 2 * e + lvl + 3;
            let pm = big_pow(p, m);
            let pm2 = big_pow(p, m + e);
            let step = big_pow(p, lvl);
            // Units ≡ 1 mod p^k, mod p^M, and their n-th powers mod p^{M+v(n)}.
            let mut images = BTreeSet::new();
            let mut count = 0usize;
            let mut roots_ok = true;
            let mut x = BigInt::one();
            while x < pm {
                count += 1;
                let y = x.modpow(&BigInt::from(n), &pm2);
                images.insert(y.clone());
                let root = nth_root_in_level(&k, &k.bigint(&y), n, lvl).ok();
                if root.and_then(|r| residue(&r, m)).as_ref() != Some(&x) {
                    roots_ok = false;
                }
                x += &step;
            }
            // P_n^(k') residues: units ≡ 1 mod p^{k'} that are n-th powers of
            // units mod p^{2v(n)+1}.
            let small = big_pow(p, 2 * e + 1);
            let powers: BTreeSet<BigInt> = (1..p.pow(2 * e + 1))
                .filter(|a| a % p != 0)
                .map(|a| BigInt::from(a).modpow(&BigInt::from(n), &small))
                .collect();
            let one_mod = big_pow(p, lvl2);
            let mut expected = BTreeSet::new();
            let mut transport_ok = true;
            let mut y = BigInt::one();
            while y < pm2 {
                if !(&y % p).is_zero() {
                    let inside = (&y - 1u32).mod_floor(&one_mod).is_zero() && powers.contains(&y.mod_floor(&small));
                    if inside {
                        expected.insert(y.clone());
                    }
                    if in_power_level(&k.bigint(&y), n, lvl2).ok() != Some(inside) {
                        transport_ok = false;
                    }
                }
                y += 1;
            }
            out.expect(
                format!("p={p} n={n} injective mod p^{m}"),
                images.len() == count,
                || format!("{count} residues, {} images", images.len()),
            );
            out.expect(format!("p={p} n={n} image is P_n^({lvl2})"), images == expected, || {
                format!("{} images, {} expected", images.len(), expected.len())
            });
            out.expect(format!("p={p} n={n} membership"), transport_ok, || {
                "in_power_level disagrees".into()
            });
            out.expect(format!("p={p} n={n} roots"), roots_ok, || {
                "a root has the wrong residue".into()
            });
            out.record(&format!("p={p} n={n} sampled roots"), root_samples(&k, n, lvl, 1000));
        }
    }
    out
}

/// `x ∈ K^(k)` with random valuation and 24 digits, exact or truncated;
/// the root of `x^n` must agree with `x` on at least 12 digits.
fn root_samples(k: &Context, n: u64, lvl: u32, samples: usize) -> Report {
    let p = k.p();
    let mut failures = Vec::new();
    for i in 0..samples {
        let mut rng = stream(SEED ^ n, i as u64);
        let mut digits = vec![1u32];
        digits.extend((1..lvl).map(|_| 0));
        digits.extend((lvl..24).map(|_| rng.gen_range(0..p)));
        let v = rng.gen_range(-3..4i64);
        let x = if i % 2 == 0 {
            PAdic::from_digits(p, &digits, v).unwrap()
        } else {
            let u = digits.iter().rev().fold(BigInt::zero(), |acc, &d| acc * p + d);
            k.bigint(&u).mul_pi_pow(v)
        };
        let y = x.pow(n as i64).unwrap();
        let ok = nth_root_in_level(k, &y, n, lvl)
            .ok()
            .is_some_and(|r| r.agrees_with(&x).unwrap_or(false) && r.relative_precision().is_none_or(|d| d >= 12));
        if !ok {
            failures.push(format!("x = {x}"));
        }
    }
    Report {
        check: format!("roots of x^{n}"),
        passed: failures.is_empty(),
        checked: samples,
        counterexample: failures.into_iter().next(),
    }
}

// ------------------------------------------------------------------ Atlas

fn pipeline(p: u32, source: &str, target: Option<&str>, steps: Vec<IsoStep>) -> IsoPipeline {
    let s = parse_descriptor(source, p).unwrap();
    match target {
        Some(t) => IsoPipeline::new(s, parse_descriptor(t, p).unwrap(), steps),
        None => IsoPipeline::onto_image(s, steps),
    }
}

/// Every point of `[0, p^m)^arity`, optionally preceded by a tag in `tags`.
fn lifts(k: &Context, m: u32, arity: usize, tags: &[i64]) -> Vec<Point> {
    let pm = k.p().pow(m) as i64;
    let mut pts: Vec<Point> = vec![vec![]];
    for _ in 0..arity {
        pts = pts
            .into_iter()
            .flat_map(|pt| {
                (0..pm).map(move |r| {
                    let mut q = pt.clone();
                    q.push(k.int(r));
                    q
                })
            })
            .collect();
    }
    if tags.is_empty() {
        return pts;
    }
    tags.iter()
        .flat_map(|&t| {
            pts.iter().map(move |pt| {
                let mut q = vec![k.int(t)];
                q.extend(pt.iter().cloned());
                q
            })
        })
        .collect()
}

/// Points of the source go into the target and back, points of the target
/// come back into the source, over a full residue enumeration.
fn transport(pl: &IsoPipeline, src: &[Point], tgt: &[Point]) -> Report {
    let mut checked = 0;
    let mut bad = None;
    for x in src {
        if !pl.source.member(x).unwrap_or(false) {
            continue;
        }
        checked += 1;
        let ok = pl.forward(x).is_ok_and(|y| {
            pl.target.member(&y).unwrap_or(false) && pl.backward(&y).is_ok_and(|b| close(&b, x).unwrap_or(false))
        });
        if !ok && bad.is_none() {
            bad = Some(format!("forward at {}", show_point(x)));
        }
    }
    for y in tgt {
        if !pl.target.member(y).unwrap_or(false) {
            continue;
        }
        checked += 1;
        let ok = pl.backward(y).is_ok_and(|x| {
            pl.source.member(&x).unwrap_or(false) && pl.forward(&x).is_ok_and(|f| close(&f, y).unwrap_or(false))
        });
        if !ok && bad.is_none() {
            bad = Some(format!("backward at {}", show_point(y)));
        }
    }
    Report {
        check: "membership transport".into(),
        passed: bad.is_none() && checked > 0,
        checked,
        counterexample: bad,
    }
}

fn atlas_suite() -> Outcome {
    let mut out = Outcome::default();
    let k5 = ctx(5);
    let k3 = ctx(3);
    let k2 = ctx(2);
    let power5 = pipeline(
        5,
        "box(l=1, k=1)",
        Some("cell(v(1) <= v(x), x in 2*P_2 level 1)"),
        vec![IsoStep::PowerCoset {
            gamma: k5.int(2),
            n: 2,
            k: 1,
        }],
    );
    let power2 = pipeline(
        2,
        "box(l=1, k=2)",
        Some("cell(v(1) <= v(x), x in 3*P_2 level 3)"),
        vec![IsoStep::PowerCoset {
            gamma: k2.int(3),
            n: 2,
            k: 2,
        }],
    );
    let twist = pipeline(
        5,
        "box(l=2, k=1)",
        None,
        vec![IsoStep::MonomialTwist {
            coord: 1,
            alpha: k5.int(5),
            exps: vec![2, 0],
        }],
    );
    let interleave = pipeline(
        5,
        "tagged(0: box(l=1, k=1), 1: box(l=1, k=1))",
        Some("box(l=1, k=1)"),
        vec![IsoStep::ValuationInterleave],
    );
    let cases: Vec<(&str, u32, IsoPipeline, Option<(u32, usize, Vec<i64>)>)> = vec![
        (
            "translate",
            5,
            pipeline(
                5,
                "space(1)",
                Some("space(1)"),
                vec![IsoStep::Translate(k5.rational(3, 5).unwrap())],
            ),
            None,
        ),
        (
            "scale",
            3,
            pipeline(
                3,
                "space(1)",
                Some("space(1)"),
                vec![IsoStep::Scale(k3.rational(-2, 9).unwrap())],
            ),
            None,
        ),
        (
            "invert",
            5,
            pipeline(
                5,
                "exclude(space(1), (0))",
                Some("exclude(space(1), (0))"),
                vec![IsoStep::Invert],
            ),
            None,
        ),
        ("power p5", 5, power5, Some((4, 1, vec![]))),
        ("power p2", 2, power2, Some((8, 1, vec![]))),
        ("twist", 5, twist, Some((3, 2, vec![]))),
        ("interleave", 5, interleave.clone(), Some((4, 1, vec![0, 1]))),
        ("hotel", 3, hotel_pipeline(&k3), Some((5, 1, vec![]))),
        ("pair_to_k", 5, pair_to_k_pipeline(&k5), None),
        (
            "insert",
            5,
            pipeline(
                5,
                "space(1)",
                Some("space(1) * point(3)"),
                vec![IsoStep::InsertConst {
                    pos: 1,
                    value: k5.int(3),
                }],
            ),
            None,
        ),
        (
            "permute",
            3,
            pipeline(
                3,
                "box(l=1, k=1) * space(2)",
                None,
                vec![IsoStep::Permute(vec![2, 0, 1])],
            ),
            None,
        ),
        (
            "coords",
            5,
            pipeline(
                5,
                "space(2)",
                Some("space(2)"),
                vec![IsoStep::CoordinateMap(vec![
                    (1, vec![IsoStep::Scale(k5.int(5))]),
                    (1, vec![IsoStep::Translate(k5.int(1))]),
                ])],
            ),
            None,
        ),
        ("cases", 5, k_iso_pipeline(&k5), None),
        ("inverse", 3, k_iso_pipeline(&k3).inverse(), None),
    ];
    for (name, p, pl, bounded) in &cases {
        let k = ctx(*p);
        out.record(&format!("{name} round trip"), check_bijection(&k, pl, 10_000, SEED));
        if let Some((m, arity, tags)) = bounded {
            let src = lifts(&k, *m, *arity, tags);
            let tgt = lifts(&k, *m, pl.target.arity().unwrap_or(*arity), &[]);
            out.record(&format!("{name} transport mod p^{m}"), transport(pl, &src, &tgt));
        }
    }
    // Tag images of the interleave, and of a four-way merge, partition the
    // target: each residue has exactly one tagged preimage.
    for (label, count, m) in [("interleave", 2usize, 4u32), ("merge of four", 4, 5)] {
        let shape = SetDescriptor::LevelBox { l: 1, k: 1 };
        let merge = merge_copies(&k5, count, &shape).unwrap();
        let branches: Vec<IsoPipeline> = (0..count as i64)
            .map(|t| IsoPipeline::onto_image(SetDescriptor::Tagged(vec![(t, shape.clone())]), merge.steps.clone()))
            .collect();
        let mut bad = None;
        let pm = 5i64.pow(m);
        for y in 1..pm {
            let y = vec![k5.int(y)];
            let hits = branches.iter().filter(|b| b.image_member(&y).unwrap_or(false)).count();
            let want = usize::from(shape.member(&y).unwrap());
            if hits != want && bad.is_none() {
                bad = Some(format!("{} has {hits} tagged preimages", show_point(&y)));
            }
        }
        out.record(
            &format!("{label} tag images mod p^{m}"),
            Report {
                check: "partition".into(),
                passed: bad.is_none(),
                checked: (pm - 1) as usize,
                counterexample: bad,
            },
        );
    }
    out
}

// ------------------------------------------------------- Rectilinearization

fn rectilinear_suite() -> Outcome {
    let mut out = Outcome::default();
    for (i, entry) in INFINITE.iter().enumerate() {
        let (k, x, forms) = entry.load();
        let seed = SEED + i as u64;
        let parts = match rectilinearize(&k, &x, &forms) {
            Ok(p) => p,
            Err(e) => {
                out.expect(entry.name, false, || format!("rectilinearize: {e}"));
                continue;
            }
        };
        let descs: Vec<SetDescriptor> = parts.iter().map(|p| p.part.clone()).collect();
        match ResidueWindow::fit(k.p(), &x, entry.modulus).and_then(|w| check_partition(&k, &x, &descs, &w, 1, seed)) {
            Ok(r) => out.record(&format!("{} ({} parts)", entry.name, parts.len()), r),
            Err(e) => out.expect(entry.name, false, || format!("partition: {e}")),
        }
        let mut bij = Vec::new();
        let mut law = Vec::new();
        let mut inside = Vec::new();
        for (j, part) in parts.iter().enumerate() {
            let s = seed.wrapping_mul(1_000).wrapping_add(j as u64);
            bij.push(check_bijection(&k, &part.pipeline, 1_000, s));
            law.push(check_valuation_law(&k, part, 1_000, s));
            inside.push(check_containment(&k, &part.pipeline, &x, 1_000, s));
        }
        for (what, reports) in [("bijection", bij), ("valuation law", law), ("containment", inside)] {
            let first_bad = reports.iter().position(|r| !r.passed);
            out.record(
                &format!("{} {what}", entry.name),
                Report {
                    check: format!("{what} on every part"),
                    passed: first_bad.is_none(),
                    checked: reports.iter().map(|r| r.checked).sum(),
                    counterexample: first_bad.map(|j| format!("part {j}: {}", reports[j])),
                },
            );
        }
        let all_e1 = parts
            .iter()
            .all(|p| p.forms.iter().all(|f| f.e == 1) && p.forms.len() == forms.len());
        out.expect(format!("{} forms have e = 1", entry.name), all_e1, || {
            "a form kept e > 1".into()
        });
    }
    out
}

// ---------------------------------------------------------- Onto K^d

/// Canonical lifts in `[0, p^m)^arity` lying in the set, by brute force.
fn brute_force_points(k: &Context, x: &SetDescriptor, m: u32) -> BTreeSet<Vec<i64>> {
    let arity = x.arity().unwrap();
    let tags: Vec<i64> = match x {
        SetDescriptor::Tagged(parts) => parts.iter().map(|(t, _)| *t).collect(),
        _ => vec![],
    };
    let width = if tags.is_empty() { arity } else { arity - 1 };
    lifts(k, m, width, &tags)
        .into_iter()
        .filter(|pt| x.member(pt).unwrap())
        .map(|pt| pt.iter().map(|c| c.to_i64().unwrap()).collect())
        .collect()
}

fn onto_kd_suite() -> Outcome {
    let mut out = Outcome::default();
    for (i, entry) in INFINITE.iter().enumerate() {
        let (k, x, _) = entry.load();
        let dim = x.dimension(&k).unwrap();
        match classify_to_kd(&k, &x) {
            Ok(Classified::Bijection(pl)) => {
                out.expect(
                    format!("{} targets K^{dim}", entry.name),
                    pl.target == SetDescriptor::Space(dim as usize),
                    || format!("target {}", pl.target),
                );
                out.record(entry.name, check_bijection(&k, &pl, 10_000, SEED + i as u64));
            }
            other => out.expect(entry.name, false, || {
                format!("classification {:?}", other.map(|c| c.dimension()))
            }),
        }
    }
    for entry in FINITE {
        let (k, x, _) = entry.load();
        let want = brute_force_points(&k, &x, entry.modulus);
        match classify_to_kd(&k, &x) {
            Ok(Classified::FinitePoints(pts)) => {
                let got: BTreeSet<Vec<i64>> = pts
                    .iter()
                    .map(|pt| {
                        pt.iter()
                            .map(|c| c.to_integer().and_then(|n| n.to_i64()).unwrap_or(-1))
                            .collect()
                    })
                    .collect();
                out.expect(
                    format!("{} lists {} points", entry.name, want.len()),
                    got == want && pts.len() == want.len(),
                    || format!("listed {got:?}, enumerated {want:?}"),
                );
            }
            other => out.expect(entry.name, false, || {
                format!("classification {:?}", other.map(|c| c.dimension()))
            }),
        }
    }
    out
}

// ------------------------------------------------------- Composition

fn entry(name: &str) -> &'static Entry {
    INFINITE
        .iter()
        .chain(FINITE)
        .find(|e| e.name == name)
        .unwrap_or_else(|| panic!("no corpus entry {name}"))
}

fn composition_suite() -> Outcome {
    let mut out = Outcome::default();
    let equal = [
        ("units p5", "ring p5"),
        ("squares p5", "outside p5"),
        ("box p5", "exponent one p5"),
        ("line p3", "cubes p3"),
        ("fibred p3", "twisted p3"),
        ("product p3", "exponent two p3"),
    ];
    for (i, (a, b)) in equal.iter().enumerate() {
        let (k, x, _) = entry(a).load();
        let (_, y, _) = entry(b).load();
        let dx = x.dimension(&k).unwrap();
        let dy = y.dimension(&k).unwrap();
        out.expect(format!("dim {a} = dim {b} = {dx}"), dx == dy, || {
            format!("{dx} vs {dy}")
        });
        match compose_classified(&k, &x, &y) {
            Ok(pl) => out.record(&format!("{a} -> {b}"), check_bijection(&k, &pl, 1_000, SEED + i as u64)),
            Err(e) => out.expect(format!("{a} -> {b}"), false, || e.to_string()),
        }
    }
    let unequal = [
        ("units p5", "box p5"),
        ("point p5", "ring p5"),
        ("tagged p3", "fibred p3"),
        ("line p3", "product p3"),
    ];
    for (a, b) in unequal {
        let (k, x, _) = entry(a).load();
        let (_, y, _) = entry(b).load();
        let dx = x.dimension(&k).unwrap();
        let dy = y.dimension(&k).unwrap();
        out.expect(format!("dim {a} = {dx} differs from dim {b} = {dy}"), dx != dy, || {
            "equal".into()
        });
        out.expect(
            format!("{a} -> {b} refused"),
            compose_classified(&k, &x, &y).is_err(),
            || "composed".into(),
        );
    }
    out
}

// ------------------------------------------------------------------ Runner

type Suite = fn() -> Outcome;

const SUITES: [(u32, &str, Suite, u64); 6] = [
    (1, "Hensel lifting", hensel_suite, 5),
    (2, "power maps on level sets", power_map_suite, 10),
    (3, "atlas steps", atlas_suite, 30),
    (4, "rectilinearization", rectilinear_suite, 120),
    (5, "classification onto K^d", onto_kd_suite, 120),
    (6, "equal and unequal dimensions", composition_suite, 60),
];

#[test]
fn acceptance() {
    let mut failed = Vec::new();
    let mut reports = Vec::new();
    for (n, name, suite, limit) in SUITES {
        let start = Instant::now();
        let out = suite();
        let elapsed = start.elapsed();
        let in_time = elapsed < Duration::from_secs(limit);
        let ok = out.failures.is_empty() && in_time;
        println!(
            "criterion {n} ({name}): {} {} checks in {:.1}s (limit {limit}s){}",
            if ok { "PASS" } else { "FAIL" },
            out.checked,
            elapsed.as_secs_f64(),
            out.failures.first().map(|f| format!("; {f}")).unwrap_or_default()
        );
        if !ok {
            failed.push(n);
        }
        reports.push(out.lines.join("\n"));
    }
    // Determinism: every suite again with the same seed.
    let mut differs = Vec::new();
    for ((n, _, suite, _), first) in SUITES.iter().zip(&reports) {
        if suite().lines.join("\n") != *first {
            differs.push(*n);
        }
    }
    println!(
        "criterion 7 (determinism): {} {} suites rerun{}",
        if differs.is_empty() { "PASS" } else { "FAIL" },
        SUITES.len(),
        if differs.is_empty() {
            String::new()
        } else {
            format!("; reports differ for {differs:?}")
        }
    );
    if !differs.is_empty() {
        failed.push(7);
    }
    assert!(failed.is_empty(), "failed criteria {failed:?}");
}
