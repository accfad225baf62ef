//! Arithmetic in GF(2^m) in polynomial basis.
//!
//! A [`FieldContext`] fixes the degree and the reduction polynomial and carries
//! log/antilog tables. Hot paths use the raw `u32` methods on the context;
//! [`FieldElem`] is the checked, context-carrying wrapper.

use std::fmt;

use thiserror::Error;

/// Largest supported extension degree.
pub const MAX_M: u32 = 16;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FieldError {
    #[error("extension degree {0} is outside 1..=16")]
    Degree(u32),
    #[error("{poly:#x} is not an irreducible polynomial of degree {m}")]
    NotIrreducible { m: u32, poly: u32 },
    #[error("operands belong to different fields")]
    ContextMismatch,
    #[error("value {value:#x} is not an element of GF(2^{m})")]
    OutOfRange { m: u32, value: u32 },
    #[error("zero has no multiplicative inverse")]
    ZeroInverse,
}

/// Degree of a nonzero GF(2)[x] polynomial.
fn degree(p: u64) -> u32 {
    63 - p.leading_zeros()
}

/// Remainder of `a` modulo `b` in GF(2)[x].
fn poly_rem(mut a: u64, b: u64) -> u64 {
    let db = degree(b);
    while a != 0 && degree(a) >= db {
        a ^= b << (degree(a) - db);
    }
    a
}

/// Trial division by every polynomial of degree 1..=m/2.
pub fn is_irreducible(poly: u32, m: u32) -> bool {
    if m == 0 || m > MAX_M || poly >> m != 1 {
        return false;
    }
    let p = poly as u64;
    for d in 1..=m / 2 {
        for low in 0..(1u64 << d) {
            if poly_rem(p, (1u64 << d) | low) == 0 {
                return false;
            }
        }
    }
    true
}

/// Lowest-weight irreducible polynomial of degree `m` with nonzero constant
/// term; among equal weights the numerically smallest one.
pub fn default_poly(m: u32) -> Result<u32, FieldError> {
    if m == 0 || m > MAX_M {
        return Err(FieldError::Degree(m));
    }
    let top = 1u32 << m;
    for weight in 2..=m + 1 {
        // middle terms x^1..x^{m-1}; the top and constant terms are fixed
        let middle = weight - 2;
        let mut best: Option<u32> = None;
        for mask in 0..(1u32 << (m - 1)) {
            if mask.count_ones() != middle {
                continue;
            }
            let cand = top | (mask << 1) | 1;
            if is_irreducible(cand, m) {
                best = Some(best.map_or(cand, |b| b.min(cand)));
            }
        }
        if let Some(b) = best {
            return Ok(b);
        }
    }
    unreachable!("an irreducible polynomial exists for every degree")
}

/// Carry-less multiply followed by reduction; the reference product.
pub fn clmul_reduce(a: u32, b: u32, m: u32, poly: u32) -> u32 {
    let mut acc: u64 = 0;
    let mut bb = b as u64;
    let mut aa = a as u64;
    while bb != 0 {
        if bb & 1 == 1 {
            acc ^= aa;
        }
        bb >>= 1;
        aa <<= 1;
    }
    let p = poly as u64;
    let mut deg = if acc == 0 { 0 } else { degree(acc) };
    while acc != 0 && deg >= m {
        acc ^= p << (deg - m);
        deg = if acc == 0 { 0 } else { degree(acc) };
    }
    acc as u32
}

/// An immutable description of GF(2^m) with precomputed tables.
#[derive(Clone)]
pub struct FieldContext {
    m: u32,
    poly: u32,
    // exp has 2*(q-1) entries so that log sums need no reduction
    exp: Vec<u32>,
    log: Vec<u32>,
}

impl fmt::Debug for FieldContext {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "GF(2^{}) mod {:#x}", self.m, self.poly)
    }
}

impl PartialEq for FieldContext {
    fn eq(&self, other: &Self) -> bool {
        self.m == other.m && self.poly == other.poly
    }
}
impl Eq for FieldContext {}

impl FieldContext {
    pub fn new(m: u32, poly: u32) -> Result<Self, FieldError> {
        if m == 0 || m > MAX_M {
            return Err(FieldError::Degree(m));
        }
        if !is_irreducible(poly, m) {
            return Err(FieldError::NotIrreducible { m, poly });
        }
        let q = 1u32 << m;
        let order = q - 1;
        // find a generator of the multiplicative group
        let mut gen = None;
        'search: for g in 1..q {
            let mut x = 1u32;
            for k in 1..=order {
                x = clmul_reduce(x, g, m, poly);
                if x == 1 {
                    if k == order {
                        gen = Some(g);
                        break 'search;
                    }
                    break;
                }
            }
        }
        let g = gen.expect("multiplicative group of a finite field is cyclic");
        let mut exp = vec![0u32; 2 * order as usize];
        let mut log = vec![0u32; q as usize];
        let mut x = 1u32;
        for k in 0..order {
            exp[k as usize] = x;
            exp[(k + order) as usize] = x;
            log[x as usize] = k;
            x = clmul_reduce(x, g, m, poly);
        }
        Ok(Self { m, poly, exp, log })
    }

    /// The field with the default polynomial for `m`.
    pub fn with_default_poly(m: u32) -> Result<Self, FieldError> {
        Self::new(m, default_poly(m)?)
    }

    pub fn m(&self) -> u32 {
        self.m
    }

    pub fn poly(&self) -> u32 {
        self.poly
    }

    pub fn size(&self) -> u32 {
        1 << self.m
    }

    #[inline]
    pub fn mul(&self, a: u32, b: u32) -> u32 {
        if a == 0 || b == 0 {
            return 0;
        }
        self.exp[(self.log[a as usize] + self.log[b as usize]) as usize]
    }

    #[inline]
    pub fn inv(&self, a: u32) -> Option<u32> {
        if a == 0 {
            return None;
        }
        let order = self.size() - 1;
        Some(self.exp[((order - self.log[a as usize]) % order) as usize])
    }

    #[inline]
    pub fn div(&self, a: u32, b: u32) -> Option<u32> {
        self.inv(b).map(|ib| self.mul(a, ib))
    }

    /// `a^k` with `0^0 = 1`.
    pub fn pow(&self, a: u32, k: u32) -> u32 {
        if k == 0 {
            return 1;
        }
        if a == 0 {
            return 0;
        }
        let order = (self.size() - 1) as u64;
        let e = (self.log[a as usize] as u64 * k as u64) % order;
        self.exp[e as usize]
    }

    /// The unique square root (squaring is a bijection in characteristic 2).
    pub fn sqrt(&self, a: u32) -> u32 {
        if a == 0 {
            return 0;
        }
        let order = self.size() - 1;
        let l = self.log[a as usize];
        // l even: l/2; l odd: (l + order)/2, order is odd
        let half = if l % 2 == 0 { l / 2 } else { (l + order) / 2 };
        self.exp[half as usize]
    }

    pub fn elem(&self, value: u32) -> Result<FieldElem<'_>, FieldError> {
        if value >= self.size() {
            return Err(FieldError::OutOfRange { m: self.m, value });
        }
        Ok(FieldElem { value, ctx: self })
    }

    /// All elements: zero first, then ascending values.
    pub fn enumerate(&self) -> Vec<FieldElem<'_>> {
        (0..self.size()).map(|value| FieldElem { value, ctx: self }).collect()
    }
}

/// A field element tied to its context.
#[derive(Clone, Copy)]
pub struct FieldElem<'a> {
    value: u32,
    ctx: &'a FieldContext,
}

impl fmt::Debug for FieldElem<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:#x}", self.value)
    }
}

impl PartialEq for FieldElem<'_> {
    fn eq(&self, other: &Self) -> bool {
        self.value == other.value && self.ctx == other.ctx
    }
}

impl<'a> FieldElem<'a> {
    pub fn value(&self) -> u32 {
        self.value
    }

    pub fn context(&self) -> &'a FieldContext {
        self.ctx
    }

    fn check(&self, other: &FieldElem<'_>) -> Result<(), FieldError> {
        if self.ctx == other.ctx {
            Ok(())
        } else {
            Err(FieldError::ContextMismatch)
        }
    }

    pub fn add(&self, other: &FieldElem<'_>) -> Result<FieldElem<'a>, FieldError> {
        self.check(other)?;
        Ok(FieldElem { value: self.value ^ other.value, ctx: self.ctx })
    }

    pub fn mul(&self, other: &FieldElem<'_>) -> Result<FieldElem<'a>, FieldError> {
        self.check(other)?;
        Ok(FieldElem { value: self.ctx.mul(self.value, other.value), ctx: self.ctx })
    }

    pub fn pow(&self, k: u32) -> FieldElem<'a> {
        FieldElem { value: self.ctx.pow(self.value, k), ctx: self.ctx }
    }

    pub fn inv(&self) -> Result<FieldElem<'a>, FieldError> {
        let value = self.ctx.inv(self.value).ok_or(FieldError::ZeroInverse)?;
        Ok(FieldElem { value, ctx: self.ctx })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_polys() {
        assert_eq!(default_poly(1).unwrap(), 0b11);
        assert_eq!(default_poly(2).unwrap(), 0b111);
        assert_eq!(default_poly(4).unwrap(), 0x13);
        for m in 1..=MAX_M {
            let p = default_poly(m).unwrap();
            assert!(is_irreducible(p, m), "m={m}");
        }
        assert!(!is_irreducible(0x15, 4)); // (x^2+x+1)^2
    }

    #[test]
    fn small_examples() {
        let f2 = FieldContext::new(2, 0b111).unwrap();
        assert_eq!(f2.mul(0b10, 0b10), 0b11);
        assert_eq!(f2.pow(0b10, 3), 1);
        assert_eq!(f2.pow(0, 0), 1);
        assert_eq!(f2.pow(0, 2), 0);
        let f3 = FieldContext::with_default_poly(3).unwrap();
        let a = f3.elem(0b101).unwrap();
        assert_eq!(a.add(&a).unwrap().value(), 0);
        let f4 = FieldContext::with_default_poly(4).unwrap();
        let x = f4.elem(0b1001).unwrap();
        let y = f4.elem(0b0110).unwrap();
        assert_eq!(x.add(&y).unwrap().value(), 0b1111);
        assert_eq!(x.add(&a), Err(FieldError::ContextMismatch));
    }

    #[test]
    fn enumerate_order() {
        for m in [1, 2, 4] {
            let f = FieldContext::with_default_poly(m).unwrap();
            let vals: Vec<u32> = f.enumerate().iter().map(|e| e.value()).collect();
            assert_eq!(vals, (0..1u32 << m).collect::<Vec<_>>());
        }
    }

    #[test]
    fn table_product_matches_clmul() {
        for m in 1..=10 {
            let f = FieldContext::with_default_poly(m).unwrap();
            let q = f.size();
            let step = if m > 8 { 7 } else { 1 };
            for a in (0..q).step_by(step) {
                for b in 0..q {
                    assert_eq!(f.mul(a, b), clmul_reduce(a, b, m, f.poly()));
                }
            }
        }
    }

    #[test]
    fn sqrt_is_inverse_of_square() {
        let f = FieldContext::with_default_poly(7).unwrap();
        for a in 0..f.size() {
            assert_eq!(f.mul(f.sqrt(a), f.sqrt(a)), a);
        }
    }
}
