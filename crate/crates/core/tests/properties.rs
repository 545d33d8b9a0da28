mod common;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use proptest::prelude::*;

use padiso::atlas::{hotel_pipeline, k_iso_pipeline, IsoPipeline, IsoStep};
use padiso::dsl::parse_dsl;
use padiso::hensel::{is_nth_power, vp};
use padiso::text::parse_descriptor;
use padiso::verify::close;
use padiso::{Context, PAdic};

fn ctx(p: u32) -> Context {
    Context::with_default_precision(p).unwrap()
}

fn prime() -> impl Strategy<Value = u32> {
    prop::sample::select(vec![2u32, 3, 5, 7])
}

fn rational() -> impl Strategy<Value = BigRational> {
    (-2000i64..2000, 1i64..300).prop_map(|(n, d)| BigRational::new(n.into(), d.into()))
}

fn nonzero_rational() -> impl Strategy<Value = BigRational> {
    rational().prop_filter("nonzero", |r| !r.is_zero())
}

/// `v_p(r)` and the p-free part of a nonzero rational.
fn split(r: &BigRational, p: u32) -> (i64, BigRational) {
    let p = BigInt::from(p);
    let (mut n, mut d) = (r.numer().clone(), r.denom().clone());
    let mut v = 0;
    while (&n % &p).is_zero() {
        n /= &p;
        v += 1;
    }
    while (&d % &p).is_zero() {
        d /= &p;
        v -= 1;
    }
    (v, BigRational::new(n, d))
}

/// A p-free rational reduced mod `p^m`.
fn unit_mod(u: &BigRational, p: u32, m: u32) -> BigInt {
    let pm = BigInt::from(p).pow(m);
    let inv = u.denom().extended_gcd(&pm).x;
    (u.numer() * inv).mod_floor(&pm)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn arithmetic_matches_rationals(p in prime(), a in rational(), b in nonzero_rational()) {
        let k = ctx(p);
        let (x, y) = (k.ratio(&a), k.ratio(&b));
        prop_assert_eq!(x.add(&y).unwrap().to_rational().unwrap(), &a + &b);
        prop_assert_eq!(x.sub(&y).unwrap().to_rational().unwrap(), &a - &b);
        prop_assert_eq!(x.mul(&y).unwrap().to_rational().unwrap(), &a * &b);
        prop_assert_eq!(x.div(&y).unwrap().to_rational().unwrap(), &a / &b);
        prop_assert_eq!(x.div(&y).unwrap().mul(&y).unwrap(), x);
    }

    #[test]
    fn valuation_laws(p in prime(), a in nonzero_rational(), b in nonzero_rational()) {
        let k = ctx(p);
        let (x, y) = (k.ratio(&a), k.ratio(&b));
        let (va, vb) = (split(&a, p).0, split(&b, p).0);
        prop_assert_eq!(x.v().unwrap(), va);
        prop_assert_eq!(x.mul(&y).unwrap().v().unwrap(), va + vb);
        let s = x.add(&y).unwrap();
        if va != vb {
            prop_assert_eq!(s.v().unwrap(), va.min(vb));
        } else if !s.is_zero() {
            prop_assert!(s.v().unwrap() >= va);
        }
    }

    #[test]
    fn digits_round_trip(p in prime(), a in nonzero_rational(), n in 1u32..30) {
        let k = ctx(p);
        let x = k.ratio(&a);
        let digits = x.expand_digits(n).unwrap();
        prop_assert_eq!(digits.len(), n as usize);
        prop_assert!(digits[0] != 0);
        prop_assert!(digits.iter().all(|&d| d < p));
        let back = PAdic::from_digits(p, &digits, x.v().unwrap()).unwrap();
        prop_assert!(back.eq_upto(&x, n).unwrap());
        // The digits spell the unit part mod p^n.
        let spelled = digits.iter().rev().fold(BigInt::zero(), |acc, &d| acc * p + d);
        prop_assert_eq!(spelled, unit_mod(&split(&a, p).1, p, n));
    }

    #[test]
    fn recorded_precision_is_sound(p in prime(), a in nonzero_rational(), b in nonzero_rational(), n in 1u32..20) {
        let k = ctx(p);
        let (x, y) = (k.ratio(&a).truncate(n).unwrap(), k.ratio(&b));
        if x.eq_upto(&y, n.min(x.relative_precision().unwrap())).unwrap() {
            let (va, ua) = split(&a, p);
            let (vb, ub) = split(&b, p);
            prop_assert_eq!(va, vb);
            prop_assert_eq!(unit_mod(&ua, p, n), unit_mod(&ub, p, n));
        }
    }

    #[test]
    fn nth_powers_match_brute_force(p in prime(), n in 2u64..5, v in 0u32..3, u in 1u64..10_000) {
        prop_assume!(u % p as u64 != 0);
        let e = vp(p, n);
        let m = v + 2 * e + 1;
        let pm = (p as u64).pow(m);
        let x = (u * (p as u64).pow(v)) % pm;
        prop_assume!(x != 0 && x / (p as u64).pow(v) % p as u64 != 0);
        let brute = (0..pm).any(|y| {
            let mut acc = 1u128;
            for _ in 0..n {
                acc = acc * y as u128 % pm as u128;
            }
            acc == x as u128
        });
        prop_assert_eq!(is_nth_power(&ctx(p).int(x as i64), n).unwrap(), brute);
    }

    #[test]
    fn cell_membership_matches_definition(
        p in prime(),
        x in rational(),
        c in -20i64..20,
        lambda in 1i64..30,
        lo in -2i64..3,
        width in 0i64..4,
        n in 1u64..4,
        level in 0u32..3,
    ) {
        prop_assume!(lambda % p as i64 != 0 || p > 5);
        let hi = lo + width;
        let k = ctx(p);
        let src = format!(
            "cell(v({}) <= v(x - {c}) <= v({}), x - {c} in {lambda}*P_{n} level {level})",
            pow_text(p, lo), pow_text(p, hi)
        );
        let cell = parse_descriptor(&src, p).unwrap();
        let got = cell.member(&[k.ratio(&x)]).unwrap();
        let d = &x - BigRational::from_integer(c.into());
        let want = !d.is_zero() && {
            let w = &d / BigRational::from_integer(lambda.into());
            let (vd, _) = split(&d, p);
            let (vw, uw) = split(&w, p);
            let one_level = level == 0 || unit_mod(&uw, p, level).is_one();
            let e = vp(p, n);
            let r = unit_mod(&uw, p, 2 * e + 1);
            let pm = BigInt::from(p).pow(2 * e + 1);
            let power = vw.rem_euclid(n as i64) == 0
                && (1..pm.to_u64().unwrap()).any(|a| BigInt::from(a).modpow(&BigInt::from(n), &pm) == r);
            (lo..=hi).contains(&vd) && one_level && power
        };
        prop_assert_eq!(got, want);
    }

    /// Whenever a backward map accepts an exact point, the forward map
    /// sends the result back to it.
    #[test]
    fn backward_is_a_checked_inverse(
        which in 0usize..8,
        a in nonzero_rational(),
        b in nonzero_rational(),
    ) {
        let (p, pl) = step_pipeline(which);
        let k = ctx(p);
        let arity = pl.target_arity().unwrap_or(1);
        let y: Vec<PAdic> = [&a, &b][..arity].iter().map(|r| k.ratio(r)).collect();
        if let Ok(x) = pl.backward(&y) {
            let again = pl.forward(&x).unwrap();
            prop_assert!(close(&again, &y).unwrap(), "{:?} -> {:?} -> {:?}", y, x, again);
            if pl.target.member(&y).unwrap_or(false) {
                prop_assert!(pl.source.member(&x).unwrap_or(true));
            }
        }
    }

    #[test]
    fn forward_then_backward_is_identity(
        which in 0usize..8,
        a in nonzero_rational(),
        b in nonzero_rational(),
    ) {
        let (p, pl) = step_pipeline(which);
        let k = ctx(p);
        let arity = pl.source.arity().unwrap_or(1);
        let x: Vec<PAdic> = [&a, &b][..arity].iter().map(|r| k.ratio(r)).collect();
        if pl.source.member(&x).unwrap_or(false) {
            let y = pl.forward(&x).unwrap();
            prop_assert!(pl.target.member(&y).unwrap_or(true));
            prop_assert!(close(&pl.backward(&y).unwrap(), &x).unwrap());
        }
    }
}

fn pow_text(p: u32, e: i64) -> String {
    if e >= 0 {
        format!("{}", (p as i64).pow(e as u32))
    } else {
        format!("1/{}", (p as i64).pow((-e) as u32))
    }
}

fn step_pipeline(which: usize) -> (u32, IsoPipeline) {
    let k5 = ctx(5);
    let k3 = ctx(3);
    let d = |s: &str, p| parse_descriptor(s, p).unwrap();
    match which {
        0 => (
            5,
            IsoPipeline::new(
                d("space(1)", 5),
                d("space(1)", 5),
                vec![IsoStep::Translate(k5.rational(2, 5).unwrap())],
            ),
        ),
        1 => (
            3,
            IsoPipeline::new(
                d("exclude(space(1), (0))", 3),
                d("exclude(space(1), (0))", 3),
                vec![IsoStep::Invert],
            ),
        ),
        2 => (
            5,
            IsoPipeline::new(
                d("box(l=1, k=1)", 5),
                d("cell(v(1) <= v(x), x in 2*P_2 level 1)", 5),
                vec![IsoStep::PowerCoset {
                    gamma: k5.int(2),
                    n: 2,
                    k: 1,
                }],
            ),
        ),
        3 => (
            3,
            IsoPipeline::onto_image(
                d("space(2)", 3),
                vec![IsoStep::MonomialTwist {
                    coord: 1,
                    alpha: k3.int(3),
                    exps: vec![-1, 0],
                }],
            ),
        ),
        4 => (
            5,
            IsoPipeline::new(
                d("tagged(0: box(l=1, k=1), 1: box(l=1, k=1))", 5),
                d("box(l=1, k=1)", 5),
                vec![IsoStep::ValuationInterleave],
            ),
        ),
        5 => (3, hotel_pipeline(&k3)),
        6 => (5, k_iso_pipeline(&k5)),
        _ => (3, k_iso_pipeline(&k3).inverse()),
    }
}

/// Printing a parsed script and parsing it again gives the same script.
#[test]
fn scripts_survive_printing() {
    for entry in common::INFINITE.iter().chain(common::FINITE) {
        let mut src = format!("prime {}; set X = {};", entry.p, entry.set);
        for (i, f) in entry.forms.iter().enumerate() {
            src.push_str(&format!(" form f{i} = {f};"));
        }
        src.push_str(" dim X; classify X; rectilinearize X with [f0]; verify X samples=10 seed=3 modulus=2;");
        if entry.forms.is_empty() {
            src = src.replace(" with [f0]", "");
        }
        let script = parse_dsl(&src, None).unwrap_or_else(|e| panic!("{}: {e}", entry.name));
        let printed = script.to_string();
        let again = parse_dsl(&printed, None).unwrap_or_else(|e| panic!("{}: {e}\n{printed}", entry.name));
        assert_eq!(script, again, "{printed}");
    }
}
