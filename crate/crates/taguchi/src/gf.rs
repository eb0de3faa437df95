//! Finite field GF(q) arithmetic for orthogonal array construction.
//!
//! Elements of GF(p^n) are encoded as integers 0..q whose base-p digits are
//! the coefficients of a polynomial over GF(p), reduced modulo the first
//! (lowest coefficient encoding) monic irreducible polynomial of degree n.
//! For GF(4) that polynomial is x^2 + x + 1.

use crate::error::{Error, Result};

/// Decompose q as p^n with p prime, n >= 1.
pub fn prime_power(q: u32) -> Option<(u32, u32)> {
    if q < 2 {
        return None;
    }
    let mut p = 2;
    while p * p <= q {
        if q.is_multiple_of(p) {
            let mut rest = q;
            let mut n = 0;
            while rest.is_multiple_of(p) {
                rest /= p;
                n += 1;
            }
            return if rest == 1 { Some((p, n)) } else { None };
        }
        p += 1;
    }
    Some((q, 1))
}

/// Addition and multiplication tables for GF(q).
#[derive(Debug, Clone)]
pub struct GfTable {
    q: u32,
    add: Vec<u32>,
    mul: Vec<u32>,
}

impl GfTable {
    pub fn new(q: u32) -> Result<Self> {
        let (p, n) = prime_power(q).ok_or(Error::NotPrimePower { levels: q })?;
        let qs = q as usize;
        let mut add = vec![0u32; qs * qs];
        let mut mul = vec![0u32; qs * qs];
        if n == 1 {
            for a in 0..q {
                for b in 0..q {
                    add[(a * q + b) as usize] = (a + b) % q;
                    mul[(a * q + b) as usize] = (a * b) % q;
                }
            }
        } else {
            let modulus = first_irreducible(p, n);
            for a in 0..q {
                let pa = digits(a, p, n);
                for b in 0..q {
                    let pb = digits(b, p, n);
                    let sum: Vec<u32> = pa.iter().zip(&pb).map(|(x, y)| (x + y) % p).collect();
                    add[(a * q + b) as usize] = undigits(&sum, p);
                    let prod = poly_mod(&poly_mul(&pa, &pb, p), &modulus, p);
                    mul[(a * q + b) as usize] = undigits(&prod, p);
                }
            }
        }
        Ok(GfTable { q, add, mul })
    }

    pub fn order(&self) -> u32 {
        self.q
    }

    pub fn add(&self, a: u32, b: u32) -> u32 {
        self.add[(a * self.q + b) as usize]
    }

    pub fn mul(&self, a: u32, b: u32) -> u32 {
        self.mul[(a * self.q + b) as usize]
    }
}

/// Coefficients of element `e` in base p, lowest degree first, padded to n.
fn digits(e: u32, p: u32, n: u32) -> Vec<u32> {
    let mut out = Vec::with_capacity(n as usize);
    let mut rest = e;
    for _ in 0..n {
        out.push(rest % p);
        rest /= p;
    }
    out
}

fn undigits(coeffs: &[u32], p: u32) -> u32 {
    coeffs.iter().rev().fold(0, |acc, &c| acc * p + c)
}

fn poly_mul(a: &[u32], b: &[u32], p: u32) -> Vec<u32> {
    let mut out = vec![0u32; a.len() + b.len() - 1];
    for (i, &x) in a.iter().enumerate() {
        for (j, &y) in b.iter().enumerate() {
            out[i + j] = (out[i + j] + x * y) % p;
        }
    }
    out
}

fn poly_deg(a: &[u32]) -> Option<usize> {
    a.iter().rposition(|&c| c != 0)
}

/// Remainder of a modulo the monic polynomial m, over GF(p).
fn poly_mod(a: &[u32], m: &[u32], p: u32) -> Vec<u32> {
    let mut rem = a.to_vec();
    let md = poly_deg(m).expect("modulus is non-zero");
    while let Some(d) = poly_deg(&rem) {
        if d < md {
            break;
        }
        let lead = rem[d];
        for (i, &mc) in m.iter().enumerate().take(md + 1) {
            let idx = d - md + i;
            rem[idx] = (rem[idx] + p * p - (lead * mc) % p) % p;
        }
    }
    rem.truncate(md);
    rem.resize(md, 0);
    rem
}

/// First monic irreducible polynomial of degree n over GF(p), scanning
/// lower-coefficient encodings in increasing order. Deterministic, so the
/// field representation (and every constructed array) is reproducible.
fn first_irreducible(p: u32, n: u32) -> Vec<u32> {
    let count = p.pow(n);
    for enc in 0..count {
        let mut poly = digits(enc, p, n);
        poly.push(1); // monic x^n term
        if is_irreducible(&poly, p) {
            return poly;
        }
    }
    unreachable!("an irreducible polynomial of degree {n} exists over GF({p})")
}

/// Trial division by all monic polynomials of degree 1..=deg/2.
fn is_irreducible(poly: &[u32], p: u32) -> bool {
    let deg = poly_deg(poly).unwrap_or(0);
    if deg == 0 {
        return false;
    }
    for d in 1..=deg / 2 {
        for enc in 0..p.pow(d as u32) {
            let mut divisor = digits(enc, p, d as u32);
            divisor.push(1);
            if poly_deg(&poly_mod(poly, &divisor, p)).is_none() {
                return false;
            }
        }
    }
    true
}
