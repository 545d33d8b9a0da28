//! Hensel lifting, n-th power residues, level sets and n-th roots.

use std::collections::HashMap;
use std::sync::{Arc, OnceLock, RwLock};

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::padic::{mod_inverse, pow_p, Context, PAdic, Valuation};

/// `v_p(n)` for a positive integer.
pub fn vp(p: u32, n: u64) -> u32 {
    assert!(n > 0, "v_p(0) is infinite");
    let mut n = n;
    let mut k = 0;
    while n % p as u64 == 0 {
        n /= p as u64;
        k += 1;
    }
    k
}

/// A one-variable polynomial with exact integral coefficients, constant term first.
#[derive(Clone, Debug, PartialEq)]
pub struct Polynomial {
    coeffs: Vec<PAdic>,
}

impl Polynomial {
    pub fn new(coeffs: Vec<PAdic>) -> Result<Self> {
        let mut coeffs = coeffs;
        while coeffs.last().is_some_and(PAdic::is_zero) {
            coeffs.pop();
        }
        if coeffs.len() < 2 {
            return Err(Error::InvalidValue("polynomial must have degree at least 1".into()));
        }
        for c in &coeffs {
            if !c.is_exact() {
                return Err(Error::InvalidValue("coefficients must be exact".into()));
            }
            if c.val() < Valuation::Finite(0) {
                return Err(Error::InvalidValue(format!("coefficient {c} is not integral")));
            }
        }
        Ok(Polynomial { coeffs })
    }

    pub fn from_ints(ctx: &Context, coeffs: &[i64]) -> Result<Self> {
        Self::new(coeffs.iter().map(|&c| ctx.int(c)).collect())
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeffs(&self) -> &[PAdic] {
        &self.coeffs
    }

    pub fn eval(&self, x: &PAdic) -> Result<PAdic> {
        let mut acc = PAdic::zero(x.p());
        for c in self.coeffs.iter().rev() {
            acc = acc.mul(x)?.add(c)?;
        }
        Ok(acc)
    }

    pub fn eval_derivative(&self, x: &PAdic) -> Result<PAdic> {
        let p = x.p();
        let mut acc = PAdic::zero(p);
        for (i, c) in self.coeffs.iter().enumerate().skip(1).rev() {
            let ci = c.mul(&PAdic::from_rational(p, &BigRational::from_integer(i.into())))?;
            acc = acc.mul(x)?.add(&ci)?;
        }
        Ok(acc)
    }

    /// Integer residues of the coefficients modulo `p^k`.
    fn residues(&self, p: u32, k: u32) -> Result<Vec<BigInt>> {
        let m = pow_p(p, k);
        self.coeffs.iter().map(|c| residue_of(c, p, k, &m)).collect()
    }
}

/// Residue modulo `p^k` of an integral value known to at least `p^k`.
fn residue_of(c: &PAdic, p: u32, k: u32, m: &BigInt) -> Result<BigInt> {
    match c.val() {
        Valuation::Infinity => Ok(BigInt::zero()),
        Valuation::Finite(v) if v >= k as i64 => Ok(BigInt::zero()),
        Valuation::Finite(v) if v < 0 => Err(Error::InvalidValue(format!("{c} is not integral"))),
        Valuation::Finite(v) => {
            let u = c.unit_residue(k - v as u32)?;
            Ok((u * pow_p(p, v as u32)).mod_floor(m))
        }
    }
}

fn eval_mod(coeffs: &[BigInt], a: &BigInt, m: &BigInt) -> BigInt {
    let mut acc = BigInt::zero();
    for c in coeffs.iter().rev() {
        acc = (acc * a + c).mod_floor(m);
    }
    acc
}

fn eval_derivative_mod(coeffs: &[BigInt], a: &BigInt, m: &BigInt) -> BigInt {
    let mut acc = BigInt::zero();
    for (i, c) in coeffs.iter().enumerate().skip(1).rev() {
        acc = (acc * a + c * BigInt::from(i)).mod_floor(m);
    }
    acc
}

fn vp_big(p: u32, n: &BigInt) -> u32 {
    debug_assert!(!n.is_zero());
    let pb = BigInt::from(p);
    let mut n = n.clone();
    let mut k = 0;
    while (&n % &pb).is_zero() {
        n /= &pb;
        k += 1;
    }
    k
}

/// Newton iteration over `Z/p^(work+e)` starting from `start`, which must
/// satisfy the Hensel hypotheses with derivative valuation at most `e`.
/// Returns `a` with `f(a) ≡ 0 mod p^work`.
fn newton_mod(p: u32, coeffs: &[BigInt], start: &BigInt, work: u32, e: u32) -> Result<BigInt> {
    let m = pow_p(p, work + e);
    let target = pow_p(p, work);
    let mut a = start.mod_floor(&m);
    for _ in 0..256 {
        let f = eval_mod(coeffs, &a, &m);
        if (&f % &target).is_zero() {
            return Ok(a);
        }
        let d = eval_derivative_mod(coeffs, &a, &m);
        if d.is_zero() {
            return Err(Error::Hypothesis("derivative vanished during lifting".into()));
        }
        let vd = vp_big(p, &d);
        if vd > e || vp_big(p, &f) <= vd {
            return Err(Error::Hypothesis("iteration left the Hensel region".into()));
        }
        let scale = pow_p(p, vd);
        let reduced = pow_p(p, work + e - vd);
        let q = (&f / &scale) * mod_inverse(&(&d / &scale), &reduced);
        a = (a - q).mod_floor(&m);
    }
    Err(Error::Hypothesis("Newton iteration did not converge".into()))
}

/// Builds a value from a residue `r` known modulo `p^abs`; exact candidates
/// are tried first via `is_root`.
fn value_from_residue(
    p: u32,
    r: &BigInt,
    abs: u32,
    modulus_work: &BigInt,
    is_root: impl Fn(&PAdic) -> Result<bool>,
) -> Result<PAdic> {
    for cand in [r.clone(), r - modulus_work] {
        let c = PAdic::from_rational(p, &BigRational::from_integer(cand));
        if is_root(&c)? {
            return Ok(c);
        }
    }
    let m = pow_p(p, abs);
    let r = r.mod_floor(&m);
    if r.is_zero() {
        return Err(Error::PrecisionExhausted(abs as i64));
    }
    let k = vp_big(p, &r);
    let unit = &r / pow_p(p, k);
    PAdic::approx(p, k as i64, unit, abs - k)
}

/// The unique root `ᾱ ≡ α mod p^(e+1)` of `f`, known to `target_digits`
/// absolute digits, or exactly when an integer root is detected.
pub fn hensel_lift(f: &Polynomial, alpha: &PAdic, e: u32, target_digits: u32) -> Result<PAdic> {
    let p = alpha.p();
    if !alpha.is_exact() {
        return Err(Error::InvalidValue("starting point must be exact".into()));
    }
    if alpha.val() < Valuation::Finite(0) {
        return Err(Error::Hypothesis(format!("alpha = {alpha} is not in R")));
    }
    let fa = f.eval(alpha)?;
    if fa.val() < Valuation::Finite(2 * e as i64 + 1) {
        return Err(Error::Hypothesis(format!(
            "v(f(alpha)) = {} < 2e+1 = {}",
            fa.val(),
            2 * e + 1
        )));
    }
    let da = f.eval_derivative(alpha)?;
    if da.val() > Valuation::Finite(e as i64) {
        return Err(Error::Hypothesis(format!("v(f'(alpha)) = {} > e = {e}", da.val())));
    }
    if fa.is_zero() {
        return Ok(alpha.clone());
    }
    let work = target_digits.max(e + 1) + e + 2;
    let coeffs = f.residues(p, work + e)?;
    let start = residue_of(alpha, p, work + e, &pow_p(p, work + e))?;
    let root = newton_mod(p, &coeffs, &start, work, e)?;
    let mw = pow_p(p, work + e);
    value_from_residue(p, &root, target_digits, &mw, |c| Ok(f.eval(c)?.is_zero()))
}

type ResidueTable = Arc<Vec<bool>>;

fn power_cache() -> &'static RwLock<HashMap<(u32, u64), ResidueTable>> {
    static CACHE: OnceLock<RwLock<HashMap<(u32, u64), ResidueTable>>> = OnceLock::new();
    CACHE.get_or_init(|| RwLock::new(HashMap::new()))
}

/// Largest modulus enumerated when tabulating n-th power residues.
const MAX_TABLE: u64 = 1 << 24;

/// Table over residues mod `p^(2v(n)+1)` marking n-th powers of units.
/// Built once per `(p, n)` and shared read-only afterwards.
pub fn nth_power_residues(p: u32, n: u64) -> Result<ResidueTable> {
    if let Some(t) = power_cache().read().expect("cache lock").get(&(p, n)) {
        return Ok(t.clone());
    }
    let m = (p as u64)
        .checked_pow(2 * vp(p, n) + 1)
        .filter(|&m| m <= MAX_TABLE)
        .ok_or_else(|| Error::InvalidValue(format!("n = {n} too large for residue table at p = {p}")))?;
    let mut table = vec![false; m as usize];
    for a in 1..m {
        if a % p as u64 == 0 {
            continue;
        }
        let r = BigInt::from(a).modpow(&BigInt::from(n), &BigInt::from(m));
        table[r.to_usize().expect("residue fits")] = true;
    }
    let table = Arc::new(table);
    power_cache()
        .write()
        .expect("cache lock")
        .entry((p, n))
        .or_insert_with(|| table.clone());
    Ok(table)
}

/// Membership in `P_n`, the nonzero n-th powers.
pub fn is_nth_power(x: &PAdic, n: u64) -> Result<bool> {
    if n == 0 {
        return Err(Error::InvalidValue("n must be at least 1".into()));
    }
    let v = x.v().map_err(|_| Error::ZeroInput("P_n membership of zero"))?;
    if n == 1 {
        return Ok(true);
    }
    if v.rem_euclid(n as i64) != 0 {
        return Ok(false);
    }
    let p = x.p();
    let k = 2 * vp(p, n) + 1;
    let u = x.unit_residue(k).map_err(|e| match e {
        Error::PrecisionExceeded { requested, available } => Error::Indeterminate(format!(
            "P_{n} membership needs {requested} unit digits, {available} known"
        )),
        other => other,
    })?;
    let table = nth_power_residues(p, n)?;
    Ok(table[u.to_usize().expect("residue fits")])
}

/// `x ≠ 0` with leading digit 1 followed by `k−1` zero digits.
pub fn in_level(x: &PAdic, k: u32) -> Result<bool> {
    if x.is_zero() {
        return Ok(false);
    }
    if k == 0 {
        return Ok(true);
    }
    match x.unit_residue(k) {
        Ok(u) => Ok(u.is_one()),
        Err(Error::PrecisionExceeded { available, .. }) => {
            // Known digits already differ from 1, 0, 0, …?
            let u = x.unit_residue(available)?;
            if u.is_one() {
                Err(Error::Indeterminate(format!(
                    "level-{k} membership needs {k} digits, {available} known"
                )))
            } else {
                Ok(false)
            }
        }
        Err(e) => Err(e),
    }
}

/// Membership in `P_n^(k) = P_n ∩ K^(k)`.
pub fn in_power_level(x: &PAdic, n: u64, k: u32) -> Result<bool> {
    if x.is_zero() {
        return Ok(false);
    }
    if !in_level(x, k)? {
        return Ok(false);
    }
    is_nth_power(x, n)
}

/// `x ∈ base^(k)`: membership in the base set and in the level-`k` set.
pub fn in_level_set(x: &PAdic, k: u32, base: &crate::setmodel::SetDescriptor) -> Result<bool> {
    if !in_level(x, k)? {
        return Ok(false);
    }
    base.member(std::slice::from_ref(x))
}

/// Exact integer n-th root, if `a ≥ 0` is a perfect n-th power.
fn exact_int_root(a: &BigInt, n: u32) -> Option<BigInt> {
    if a.is_negative() {
        return None;
    }
    let r = a.nth_root(n);
    (num_traits::pow(r.clone(), n as usize) == *a).then_some(r)
}

/// The unique `x ∈ K^(k)` with `x^n = y`, for `y ∈ P_n^(k+v(n))` and `k > v(n)`.
/// Rational roots are returned exactly; otherwise the root carries the
/// context precision minus `v(n)` digits.
pub fn nth_root_in_level(ctx: &Context, y: &PAdic, n: u64, k: u32) -> Result<PAdic> {
    let p = ctx.p();
    let e = vp(p, n);
    if k <= e {
        return Err(Error::InvalidValue(format!("level {k} must exceed v(n) = {e}")));
    }
    let kk = k + e;
    let vy = y
        .v()
        .map_err(|_| Error::NotInLevelSet("zero has no root in a level set".into()))?;
    if vy.rem_euclid(n as i64) != 0 {
        return Err(Error::NotInLevelSet(format!("v(y) = {vy} not divisible by {n}")));
    }
    if !in_level(y, kk)? {
        return Err(Error::NotInLevelSet(format!("{y} is not in level {kk}")));
    }
    let t = vy / n as i64;
    let unit = y.unit_part()?;
    if n == 1 {
        return Ok(y.clone());
    }
    let n32 = u32::try_from(n).map_err(|_| Error::InvalidValue("exponent too large".into()))?;
    if let Some(r) = unit.to_rational() {
        let sign_num = r.numer().is_negative();
        if let (Some(a), Some(b)) = (exact_int_root(&r.numer().abs(), n32), exact_int_root(r.denom(), n32)) {
            let base = BigRational::new(a, b);
            let candidates: Vec<BigRational> = if sign_num {
                if n % 2 == 1 {
                    vec![-base]
                } else {
                    vec![]
                }
            } else if n % 2 == 0 {
                vec![base.clone(), -base]
            } else {
                vec![base]
            };
            for c in candidates {
                let w = PAdic::from_rational(p, &c);
                if in_level(&w, k)? {
                    return Ok(w.mul_pi_pow(t));
                }
            }
        }
    }
    // Irrational root: Newton on t^n − u from 1.
    let known = match unit.relative_precision() {
        Some(prec) => prec,
        None => ctx.precision() + e,
    };
    let m = pow_p(p, known + e);
    let u = unit.unit_residue(known)?;
    let mut coeffs = vec![BigInt::zero(); n as usize + 1];
    coeffs[0] = (-u).mod_floor(&m);
    coeffs[n as usize] = BigInt::one();
    let root = newton_mod(p, &coeffs, &BigInt::one(), known, e)?;
    let abs = known - e;
    let w = PAdic::approx(p, 0, root.mod_floor(&pow_p(p, abs)), abs)?;
    Ok(w.mul_pi_pow(t))
}
