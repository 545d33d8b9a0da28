//! Elements of `Q_p` in two representations.
//!
//! An *exact* value is a rational `p^v · a/b` with `p ∤ a`, `p ∤ b`. A
//! *truncated* value is `p^v · u` where only `u mod p^N` is known; `N` is its
//! relative precision. Arithmetic on truncated operands propagates a
//! precision that never claims more digits than are actually determined.

use std::cmp::Ordering;
use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};

use crate::error::{Error, Result};

pub const MAX_PRIME: u32 = 97;
pub const MIN_PRECISION: u32 = 12;
pub const DEFAULT_PRECISION: u32 = 24;

/// The prime together with the number of digits carried by inexact values.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Context {
    p: u32,
    precision: u32,
}

impl Context {
    pub fn new(p: u32, precision: u32) -> Result<Self> {
        if !(2..=MAX_PRIME).contains(&p) || !is_prime(p) {
            return Err(Error::InvalidPrime(p as u64));
        }
        if precision < MIN_PRECISION {
            return Err(Error::InvalidPrecision(precision));
        }
        Ok(Context { p, precision })
    }

    pub fn with_default_precision(p: u32) -> Result<Self> {
        Self::new(p, DEFAULT_PRECISION)
    }

    pub fn p(&self) -> u32 {
        self.p
    }

    pub fn precision(&self) -> u32 {
        self.precision
    }

    /// The uniformizer. Over `Q_p` this is `p` itself.
    pub fn uniformizer(&self) -> PAdic {
        self.pi_pow(1)
    }

    /// `π^e` for any integer `e`.
    pub fn pi_pow(&self, e: i64) -> PAdic {
        PAdic::exact_unit(self.p, e, BigRational::one())
    }

    pub fn zero(&self) -> PAdic {
        PAdic::zero(self.p)
    }

    pub fn one(&self) -> PAdic {
        self.int(1)
    }

    pub fn int(&self, n: i64) -> PAdic {
        PAdic::from_rational(self.p, &BigRational::from_integer(BigInt::from(n)))
    }

    pub fn bigint(&self, n: &BigInt) -> PAdic {
        PAdic::from_rational(self.p, &BigRational::from_integer(n.clone()))
    }

    pub fn rational(&self, num: i64, den: i64) -> Result<PAdic> {
        if den == 0 {
            return Err(Error::DivisionByZero);
        }
        Ok(PAdic::from_rational(
            self.p,
            &BigRational::new(BigInt::from(num), BigInt::from(den)),
        ))
    }

    pub fn ratio(&self, r: &BigRational) -> PAdic {
        PAdic::from_rational(self.p, r)
    }

    /// Truncated value `Σ digits[i] p^(val+i)`; the first digit must be nonzero.
    pub fn from_digits(&self, digits: &[u32], val: i64) -> Result<PAdic> {
        PAdic::from_digits(self.p, digits, val)
    }
}

pub fn is_prime(n: u32) -> bool {
    if n < 2 {
        return false;
    }
    let mut d = 2;
    while d * d <= n {
        if n % d == 0 {
            return false;
        }
        d += 1;
    }
    true
}

/// `v(x) ∈ Z ∪ {+∞}`; `Infinity` exactly for zero.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Valuation {
    Finite(i64),
    Infinity,
}

impl Valuation {
    pub fn finite(self) -> Option<i64> {
        match self {
            Valuation::Finite(v) => Some(v),
            Valuation::Infinity => None,
        }
    }

    pub fn is_infinite(self) -> bool {
        self == Valuation::Infinity
    }
}

impl fmt::Display for Valuation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Valuation::Finite(v) => write!(f, "{v}"),
            Valuation::Infinity => write!(f, "inf"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
enum Repr {
    Zero,
    /// `p^val · unit`, numerator and denominator of `unit` prime to `p`.
    Exact {
        val: i64,
        unit: BigRational,
    },
    /// `p^val · unit` with `unit ∈ [0, p^prec)`, `p ∤ unit`, `prec ≥ 1`.
    Approx {
        val: i64,
        unit: BigInt,
        prec: u32,
    },
}

/// An element of `Q_p`. Equality is representational: two truncated values
/// are equal only if they carry the same digits at the same precision; use
/// [`PAdic::eq_upto`] for precision-aware comparison.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct PAdic {
    p: u32,
    repr: Repr,
}

pub(crate) fn pow_p(p: u32, e: u32) -> BigInt {
    num_traits::pow(BigInt::from(p), e as usize)
}

/// Splits `n ≠ 0` as `p^k · m` with `p ∤ m`.
fn split_p(n: &BigInt, p: u32) -> (i64, BigInt) {
    let pb = BigInt::from(p);
    let mut k = 0;
    let mut m = n.clone();
    loop {
        let (q, r) = m.div_rem(&pb);
        if !r.is_zero() {
            break;
        }
        m = q;
        k += 1;
    }
    (k, m)
}

/// `n/d` for coprime `n`, `d` with `d > 0`; skips the gcd.
fn coprime_ratio(n: BigInt, d: BigInt) -> BigRational {
    if d.is_one() {
        BigRational::from_integer(n)
    } else {
        BigRational::new_raw(n, d)
    }
}

fn ratio_mul(a: &BigRational, b: &BigRational) -> BigRational {
    if a.is_integer() && b.is_integer() {
        BigRational::from_integer(a.numer() * b.numer())
    } else {
        a * b
    }
}

fn ratio_add(a: &BigRational, b: &BigRational) -> BigRational {
    if a.is_integer() && b.is_integer() {
        BigRational::from_integer(a.numer() + b.numer())
    } else {
        a + b
    }
}

/// Inverse of `a` modulo `m`; `a` must be a unit mod `m`.
pub(crate) fn mod_inverse(a: &BigInt, m: &BigInt) -> BigInt {
    let e = a.mod_floor(m).extended_gcd(m);
    debug_assert!(e.gcd.is_one());
    e.x.mod_floor(m)
}

impl PAdic {
    pub fn zero(p: u32) -> Self {
        PAdic { p, repr: Repr::Zero }
    }

    fn exact_unit(p: u32, val: i64, unit: BigRational) -> Self {
        PAdic {
            p,
            repr: Repr::Exact { val, unit },
        }
    }

    pub fn from_rational(p: u32, r: &BigRational) -> Self {
        if r.is_zero() {
            return PAdic::zero(p);
        }
        let (vn, n) = split_p(r.numer(), p);
        let (vd, d) = split_p(r.denom(), p);
        PAdic::exact_unit(p, vn - vd, coprime_ratio(n, d))
    }

    pub fn from_i64(p: u32, n: i64) -> Self {
        PAdic::from_rational(p, &BigRational::from_integer(n.into()))
    }

    pub fn from_digits(p: u32, digits: &[u32], val: i64) -> Result<Self> {
        if digits.is_empty() {
            return Err(Error::InvalidValue("empty digit list".into()));
        }
        if digits[0] == 0 {
            return Err(Error::InvalidValue("leading digit must be nonzero".into()));
        }
        if let Some(d) = digits.iter().find(|&&d| d >= p) {
            return Err(Error::InvalidValue(format!("digit {d} out of range for p={p}")));
        }
        let mut unit = BigInt::zero();
        for &d in digits.iter().rev() {
            unit = unit * p + d;
        }
        Ok(PAdic {
            p,
            repr: Repr::Approx {
                val,
                unit,
                prec: digits.len() as u32,
            },
        })
    }

    /// Truncated value `p^val · unit` where `unit` is known modulo `p^prec`.
    pub(crate) fn approx(p: u32, val: i64, unit: BigInt, prec: u32) -> Result<Self> {
        if prec == 0 {
            return Err(Error::PrecisionExhausted(val));
        }
        let m = pow_p(p, prec);
        let unit = unit.mod_floor(&m);
        if (&unit % p).is_zero() {
            return Err(Error::InvalidValue("unit part divisible by p".into()));
        }
        Ok(PAdic {
            p,
            repr: Repr::Approx { val, unit, prec },
        })
    }

    pub fn p(&self) -> u32 {
        self.p
    }

    pub fn is_zero(&self) -> bool {
        matches!(self.repr, Repr::Zero)
    }

    pub fn is_exact(&self) -> bool {
        !matches!(self.repr, Repr::Approx { .. })
    }

    pub fn val(&self) -> Valuation {
        match &self.repr {
            Repr::Zero => Valuation::Infinity,
            Repr::Exact { val, .. } | Repr::Approx { val, .. } => Valuation::Finite(*val),
        }
    }

    /// Valuation of a value known to be nonzero.
    pub fn v(&self) -> Result<i64> {
        self.val().finite().ok_or(Error::ZeroInput("valuation of zero"))
    }

    /// Number of known digits after the leading one, `None` for exact values.
    pub fn relative_precision(&self) -> Option<u32> {
        match &self.repr {
            Repr::Approx { prec, .. } => Some(*prec),
            _ => None,
        }
    }

    /// The exponent `A` such that the value is known modulo `p^A`.
    pub fn absolute_precision(&self) -> Option<i64> {
        match &self.repr {
            Repr::Approx { val, prec, .. } => Some(val + *prec as i64),
            _ => None,
        }
    }

    pub fn to_rational(&self) -> Option<BigRational> {
        match &self.repr {
            Repr::Zero => Some(BigRational::zero()),
            Repr::Exact { val, unit } => {
                let m = pow_p(self.p, val.unsigned_abs() as u32);
                Some(if *val >= 0 {
                    coprime_ratio(unit.numer() * m, unit.denom().clone())
                } else {
                    coprime_ratio(unit.numer().clone(), unit.denom() * m)
                })
            }
            Repr::Approx { .. } => None,
        }
    }

    /// Integer value of an exact integral rational, if it is one.
    pub fn to_integer(&self) -> Option<BigInt> {
        let r = self.to_rational()?;
        r.is_integer().then(|| r.to_integer())
    }

    /// Small integer tags used by tagged unions.
    pub fn to_i64(&self) -> Option<i64> {
        self.to_integer()?.to_i64()
    }

    /// Unit part `π^{-v(x)} x` modulo `p^k`.
    pub fn unit_residue(&self, k: u32) -> Result<BigInt> {
        let m = pow_p(self.p, k);
        match &self.repr {
            Repr::Zero => Err(Error::ZeroInput("unit part of zero")),
            Repr::Exact { unit, .. } => Ok((unit.numer() * mod_inverse(unit.denom(), &m)).mod_floor(&m)),
            Repr::Approx { unit, prec, .. } => {
                if k > *prec {
                    Err(Error::PrecisionExceeded {
                        requested: k,
                        available: *prec,
                    })
                } else {
                    Ok(unit.mod_floor(&m))
                }
            }
        }
    }

    /// Leading digit `a_{v(x)}`.
    pub fn ac(&self) -> Result<u32> {
        Ok(self.unit_residue(1)?.to_u32().expect("digit fits"))
    }

    /// Digits `a_{v(x)}, …, a_{v(x)+count-1}`.
    pub fn expand_digits(&self, count: u32) -> Result<Vec<u32>> {
        if self.is_zero() {
            return Ok(vec![0; count as usize]);
        }
        let mut u = self.unit_residue(count)?;
        let pb = BigInt::from(self.p);
        let mut out = Vec::with_capacity(count as usize);
        for _ in 0..count {
            let (q, r) = u.div_rem(&pb);
            out.push(r.to_u32().expect("digit fits"));
            u = q;
        }
        Ok(out)
    }

    /// The unit part `π^{-v(x)} x` as a value of valuation 0.
    pub fn unit_part(&self) -> Result<PAdic> {
        let v = self.v()?;
        Ok(self.mul_pi_pow(-v))
    }

    /// Multiplication by `π^e`, which only shifts the valuation.
    pub fn mul_pi_pow(&self, e: i64) -> PAdic {
        let repr = match &self.repr {
            Repr::Zero => Repr::Zero,
            Repr::Exact { val, unit } => Repr::Exact {
                val: val + e,
                unit: unit.clone(),
            },
            Repr::Approx { val, unit, prec } => Repr::Approx {
                val: val + e,
                unit: unit.clone(),
                prec: *prec,
            },
        };
        PAdic { p: self.p, repr }
    }

    /// Converts to a truncated value carrying `prec` relative digits.
    /// Truncated inputs keep the smaller of the two precisions.
    pub fn truncate(&self, prec: u32) -> Result<PAdic> {
        match &self.repr {
            Repr::Zero => Err(Error::PrecisionExhausted(i64::MAX)),
            Repr::Exact { val, .. } => {
                let u = self.unit_residue(prec)?;
                PAdic::approx(self.p, *val, u, prec)
            }
            Repr::Approx { val, unit, prec: have } => {
                let k = prec.min(*have);
                PAdic::approx(self.p, *val, unit.clone(), k)
            }
        }
    }

    /// Truncation to absolute precision `A` (known modulo `p^A`).
    pub fn truncate_absolute(&self, abs: i64) -> Result<PAdic> {
        let v = match self.val() {
            Valuation::Infinity => return Err(Error::PrecisionExhausted(abs)),
            Valuation::Finite(v) => v,
        };
        if abs <= v {
            return Err(Error::PrecisionExhausted(abs));
        }
        self.truncate((abs - v) as u32)
    }

    fn check_same(&self, other: &PAdic) -> Result<()> {
        if self.p != other.p {
            Err(Error::PrimeMismatch(self.p, other.p))
        } else {
            Ok(())
        }
    }

    pub fn neg(&self) -> PAdic {
        let repr = match &self.repr {
            Repr::Zero => Repr::Zero,
            Repr::Exact { val, unit } => Repr::Exact { val: *val, unit: -unit },
            Repr::Approx { val, unit, prec } => {
                let m = pow_p(self.p, *prec);
                Repr::Approx {
                    val: *val,
                    unit: (-unit).mod_floor(&m),
                    prec: *prec,
                }
            }
        };
        PAdic { p: self.p, repr }
    }

    pub fn add(&self, other: &PAdic) -> Result<PAdic> {
        self.check_same(other)?;
        if self.is_zero() {
            return Ok(other.clone());
        }
        if other.is_zero() {
            return Ok(self.clone());
        }
        if let (Repr::Exact { val: va, unit: u }, Repr::Exact { val: vb, unit: w }) = (&self.repr, &other.repr) {
            let (lo, ulo, hi, uhi) = if va <= vb { (*va, u, *vb, w) } else { (*vb, w, *va, u) };
            if lo < hi {
                // The lower-valuation unit keeps the sum a unit.
                let shifted = ratio_mul(uhi, &BigRational::from_integer(pow_p(self.p, (hi - lo) as u32)));
                return Ok(PAdic::exact_unit(self.p, lo, ratio_add(ulo, &shifted)));
            }
            let s = ratio_add(u, w);
            if s.is_zero() {
                return Ok(PAdic::zero(self.p));
            }
            let (k, n) = split_p(s.numer(), self.p);
            return Ok(PAdic::exact_unit(self.p, lo + k, coprime_ratio(n, s.denom().clone())));
        }
        // Absolute precision of the sum is the smaller of the two.
        let abs = match (self.absolute_precision(), other.absolute_precision()) {
            (Some(a), Some(b)) => a.min(b),
            (Some(a), None) | (None, Some(a)) => a,
            (None, None) => unreachable!(),
        };
        let (va, vb) = (self.v()?, other.v()?);
        let base = va.min(vb);
        if abs <= base {
            return Err(Error::PrecisionExhausted(abs));
        }
        let width = (abs - base) as u32;
        let m = pow_p(self.p, width);
        let ua = self.unit_residue(((abs - va).max(0)) as u32)?;
        let ub = other.unit_residue(((abs - vb).max(0)) as u32)?;
        let sa = ua * pow_p(self.p, (va - base) as u32);
        let sb = ub * pow_p(self.p, (vb - base) as u32);
        let s = (sa + sb).mod_floor(&m);
        if s.is_zero() {
            return Err(Error::PrecisionExhausted(abs));
        }
        let (k, u) = split_p(&s, self.p);
        PAdic::approx(self.p, base + k, u, width - k as u32)
    }

    pub fn sub(&self, other: &PAdic) -> Result<PAdic> {
        self.add(&other.neg())
    }

    pub fn mul(&self, other: &PAdic) -> Result<PAdic> {
        self.check_same(other)?;
        if self.is_zero() || other.is_zero() {
            return Ok(PAdic::zero(self.p));
        }
        match (&self.repr, &other.repr) {
            (Repr::Exact { val: a, unit: u }, Repr::Exact { val: b, unit: w }) => {
                Ok(PAdic::exact_unit(self.p, a + b, ratio_mul(u, w)))
            }
            _ => {
                let prec = self
                    .relative_precision()
                    .into_iter()
                    .chain(other.relative_precision())
                    .min()
                    .expect("one operand is truncated");
                let u = self.unit_residue(prec)? * other.unit_residue(prec)?;
                PAdic::approx(self.p, self.v()? + other.v()?, u, prec)
            }
        }
    }

    pub fn inv(&self) -> Result<PAdic> {
        match &self.repr {
            Repr::Zero => Err(Error::DivisionByZero),
            Repr::Exact { val, unit } => Ok(PAdic::exact_unit(self.p, -val, unit.recip())),
            Repr::Approx { val, unit, prec } => {
                let m = pow_p(self.p, *prec);
                PAdic::approx(self.p, -val, mod_inverse(unit, &m), *prec)
            }
        }
    }

    pub fn div(&self, other: &PAdic) -> Result<PAdic> {
        self.mul(&other.inv()?)
    }

    /// Integer power; negative exponents invert first.
    pub fn pow(&self, e: i64) -> Result<PAdic> {
        if e < 0 {
            return self.inv()?.pow(-e);
        }
        if self.is_zero() {
            return Ok(if e == 0 {
                PAdic::from_rational(self.p, &BigRational::one())
            } else {
                self.clone()
            });
        }
        match &self.repr {
            Repr::Exact { val, unit } => Ok(PAdic::exact_unit(
                self.p,
                val * e,
                coprime_ratio(
                    num_traits::pow(unit.numer().clone(), e as usize),
                    num_traits::pow(unit.denom().clone(), e as usize),
                ),
            )),
            Repr::Approx { val, unit, prec } => {
                let m = pow_p(self.p, *prec);
                let u = unit.modpow(&BigInt::from(e), &m);
                PAdic::approx(self.p, val * e, u, *prec)
            }
            Repr::Zero => unreachable!(),
        }
    }

    /// Decides `v(x − y) ≥ min(v(x), v(y)) + k`.
    pub fn eq_upto(&self, other: &PAdic, k: u32) -> Result<bool> {
        self.check_same(other)?;
        let floor = self.val().min(other.val());
        let needed = match floor {
            Valuation::Infinity => return Ok(true),
            Valuation::Finite(f) => f + k as i64,
        };
        match self.sub(other) {
            Ok(d) => match d.val() {
                Valuation::Infinity => Ok(true),
                Valuation::Finite(vd) => {
                    if vd >= needed {
                        Ok(true)
                    } else {
                        // A truncated difference still has its valuation determined.
                        Ok(false)
                    }
                }
            },
            Err(Error::PrecisionExhausted(abs)) => {
                if abs >= needed {
                    Ok(true)
                } else {
                    Err(Error::Indeterminate(format!(
                        "equality to {k} digits needs modulus p^{needed}, known to p^{abs}"
                    )))
                }
            }
            Err(e) => Err(e),
        }
    }

    /// Comparison of valuations as used by cell conditions.
    pub fn cmp_val(&self, other: &PAdic) -> Ordering {
        self.val().cmp(&other.val())
    }

    /// Agreement with another value to every digit either of them knows.
    /// Exact pairs compare exactly.
    pub fn agrees_with(&self, other: &PAdic) -> Result<bool> {
        if self.is_exact() && other.is_exact() {
            return Ok(self == other);
        }
        let abs = [self.absolute_precision(), other.absolute_precision()]
            .into_iter()
            .flatten()
            .min()
            .expect("one operand is truncated");
        match self.sub(other) {
            Ok(d) => Ok(d.val() >= Valuation::Finite(abs)),
            Err(Error::PrecisionExhausted(_)) => Ok(true),
            Err(e) => Err(e),
        }
    }
}

impl fmt::Display for PAdic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.repr {
            Repr::Zero => write!(f, "0"),
            Repr::Exact { .. } => {
                let r = self.to_rational().expect("exact");
                if r.is_integer() {
                    write!(f, "{}", r.numer())
                } else {
                    write!(f, "{}/{}", r.numer(), r.denom())
                }
            }
            Repr::Approx { val, prec, .. } => {
                let digits = self.expand_digits(*prec).map_err(|_| fmt::Error)?;
                let body: Vec<String> = digits.iter().map(|d| d.to_string()).collect();
                write!(f, "[{}]@{}", body.join(","), val)
            }
        }
    }
}
