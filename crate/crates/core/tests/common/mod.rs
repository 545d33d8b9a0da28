#![allow(dead_code)]

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{Signed, Zero};
use padiso::dsl::parse_dsl;
use padiso::setmodel::{MonomialForm, SetDescriptor};
use padiso::{Context, PAdic};

/// A corpus descriptor with the forms to carry and the residue modulus
/// exponent used by the partition oracle.
pub struct Entry {
    pub name: &'static str,
    pub p: u32,
    pub set: &'static str,
    pub forms: &'static [&'static str],
    pub modulus: u32,
}

impl Entry {
    pub fn load(&self) -> (Context, SetDescriptor, Vec<MonomialForm>) {
        let mut src = format!("prime {}; set X = {};", self.p, self.set);
        for (i, f) in self.forms.iter().enumerate() {
            src.push_str(&format!(" form f{i} = {f};"));
        }
        let script = parse_dsl(&src, None).unwrap_or_else(|e| panic!("{}: {e}", self.name));
        let ctx = Context::with_default_precision(self.p).unwrap();
        let forms = script.forms.iter().map(|(_, f)| f.clone()).collect();
        (ctx, script.set("X").unwrap().clone(), forms)
    }
}

const fn e(name: &'static str, p: u32, set: &'static str, forms: &'static [&'static str], modulus: u32) -> Entry {
    Entry {
        name,
        p,
        set,
        forms,
        modulus,
    }
}

/// Infinite sets covering bounded and unbounded cells, non-positive
/// exponents, exponent one and larger leading exponents.
pub const INFINITE: &[Entry] = &[
    e("units p5", 5, "cell(v(1) <= v(x) <= v(1), x in 1*P_1)", &[], 4),
    e(
        "window p3",
        3,
        "cell(v(1) <= v(x - 2) <= v(9), x - 2 in 1*P_1)",
        &["(e=1, beta=3, mu=[2])"],
        5,
    ),
    e(
        "bounded squares p5",
        5,
        "cell(v(1) <= v(x) < v(25), x in 1*P_2)",
        &["(e=2, beta=1, mu=[1])"],
        4,
    ),
    e(
        "bounded squares p2",
        2,
        "cell(v(1) <= v(x) <= v(4), x in 1*P_2)",
        &[],
        8,
    ),
    e(
        "shifted cubes p7",
        7,
        "cell(v(1) <= v(x - 3) <= v(7), x - 3 in 2*P_3)",
        &[],
        4,
    ),
    e(
        "ring p5",
        5,
        "cell(v(1) <= v(x), x in 1*P_1)",
        &["(e=1, beta=1, mu=[1])"],
        4,
    ),
    e(
        "squares p5",
        5,
        "cell(v(1) <= v(x), x in 1*P_2)",
        &["(e=2, beta=1, mu=[1])"],
        5,
    ),
    e(
        "level squares p3",
        3,
        "cell(v(3) <= v(x + 1), x + 1 in 2*P_2 level 1)",
        &[],
        5,
    ),
    e(
        "cubes p3",
        3,
        "cell(v(1) <= v(x - 1), x - 1 in 1*P_3)",
        &["(e=3, beta=1, mu=[1])"],
        6,
    ),
    e("squares p2", 2, "cell(v(1) <= v(x), x in 3*P_2)", &[], 8),
    e("outside p5", 5, "cell(v(x) < v(1), x in 1*P_1)", &[], 3),
    e("line p3", 3, "space(1)", &[], 4),
    e("box p5", 5, "box(l=2, k=1)", &["(e=1, beta=5, mu=[1, 2])"], 3),
    e("fibred p3", 3, "presented(l=2, k=1: v(x2) <= v(9 * x1^-1))", &[], 4),
    e(
        "fibred constant p3",
        3,
        "presented(l=2, k=1: v(x2) <= v(9))",
        &["(e=1, beta=1, mu=[1, 1])"],
        4,
    ),
    e(
        "exponent one p5",
        5,
        "presented(l=2, k=1: v(x2) <= v(1 * x1))",
        &["(e=1, beta=1, mu=[0, 1])"],
        3,
    ),
    e("exponent one p3", 3, "presented(l=2, k=1: v(x2) <= v(3 * x1))", &[], 4),
    e(
        "exponent two p3",
        3,
        "presented(l=2, k=1: v(x2) <= v(1 * x1^2))",
        &["(e=2, beta=1, mu=[0, 2])"],
        4,
    ),
    e(
        "exponent two p5",
        5,
        "presented(l=2, k=1: v(x2) <= v(5 * x1^2))",
        &[],
        3,
    ),
    e(
        "exponent two p2",
        2,
        "presented(l=2, k=1: v(x2) <= v(1 * x1^2))",
        &[],
        6,
    ),
    e(
        "twisted p3",
        3,
        "presented(l=2, k=1: v(1 * x1) < v(x2), v(x2) <= v(9 * x1))",
        &[],
        4,
    ),
    e(
        "coset p5",
        5,
        "presented(l=2, k=1: v(x2) <= v(5 * x1^2), x1 in 1*P_3)",
        &[],
        3,
    ),
    e(
        "product p3",
        3,
        "cell(v(1) <= v(x), x in 1*P_2) * box(l=1, k=1)",
        &[],
        4,
    ),
    e(
        "union p5",
        5,
        "union(point(1/5), cell(v(1) <= v(x), x in 1*P_1))",
        &[],
        4,
    ),
    e(
        "tagged p3",
        3,
        "cell(v(x) <= v(3), x in 1*P_1) | point(1/3) | box(l=1, k=2)",
        &[],
        4,
    ),
];

/// Finite sets with their residue modulus exponent.
pub const FINITE: &[Entry] = &[
    e("point p5", 5, "point(3, 7)", &[], 2),
    e("points p3", 3, "union(point(1), point(4), point(26))", &[], 3),
    e("singleton cell p7", 7, "cell(v(1) <= v(x - 5), x - 5 in 0*P_1)", &[], 2),
    e("tagged points p5", 5, "point(2) | point(11)", &[], 2),
];

/// `x mod p^m` as a nonnegative integer, if `x ∈ R` is known that far.
pub fn residue(x: &PAdic, m: u32) -> Option<BigInt> {
    let p = BigInt::from(x.p());
    let pm = p.pow(m);
    if x.is_zero() {
        return Some(BigInt::zero());
    }
    if let Some(r) = x.to_rational() {
        let d = r.denom();
        if (d % &p).is_zero() {
            return None;
        }
        let inv = d.extended_gcd(&pm).x;
        return Some((r.numer() * inv).mod_floor(&pm));
    }
    let v = x.v().ok()?;
    if v < 0 {
        return None;
    }
    if v >= m as i64 {
        return Some(BigInt::zero());
    }
    let u = x.unit_residue(m - v as u32).ok()?;
    Some((u * p.pow(v as u32)).mod_floor(&pm))
}

pub fn is_unit(r: &BigInt, p: u32) -> bool {
    !(r % p).is_zero() && !r.is_negative()
}
