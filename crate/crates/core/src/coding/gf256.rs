//! GF(2^8) with reduction polynomial `x^8 + x^4 + x^3 + x + 1` (0x11B).
//!
//! Multiplication and inversion go through log/antilog tables built at
//! compile time from the generator `0x03`.

use std::fmt;
use std::ops::{Add, AddAssign, Div, Mul, MulAssign, Neg, Sub};

use num_traits::{One, Zero};
use rand::Rng;

pub const POLY: u16 = 0x11B;
pub const GENERATOR: u8 = 0x03;

struct Tables {
    exp: [u8; 512],
    log: [u8; 256],
}

const fn build() -> Tables {
    let mut exp = [0u8; 512];
    let mut log = [0u8; 256];
    let mut x: u16 = 1;
    let mut i = 0;
    while i < 255 {
        exp[i] = x as u8;
        log[x as usize] = i as u8;
        let mut x2 = x << 1;
        if x2 & 0x100 != 0 {
            x2 ^= POLY;
        }
        x = x2 ^ x;
        i += 1;
    }
    while i < 512 {
        exp[i] = exp[i - 255];
        i += 1;
    }
    Tables { exp, log }
}

static TABLES: Tables = build();

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[repr(transparent)]
pub struct Gf256(pub u8);

impl Gf256 {
    /// `GENERATOR^i`.
    pub fn exp(i: usize) -> Gf256 {
        Gf256(TABLES.exp[i % 255])
    }

    /// Discrete log base [`GENERATOR`]; `None` for zero.
    pub fn log(self) -> Option<u8> {
        (self.0 != 0).then(|| TABLES.log[self.0 as usize])
    }

    pub fn inv(self) -> Option<Gf256> {
        self.log().map(|l| Gf256(TABLES.exp[255 - l as usize]))
    }

    pub fn pow(self, e: u32) -> Gf256 {
        match self.log() {
            None if e == 0 => Gf256(1),
            None => Gf256(0),
            Some(l) => Gf256::exp((l as usize * (e as usize % 255)) % 255),
        }
    }

    pub fn random<R: Rng + ?Sized>(rng: &mut R) -> Gf256 {
        Gf256(rng.random())
    }
}

#[inline]
pub fn mul(a: u8, b: u8) -> u8 {
    if a == 0 || b == 0 {
        0
    } else {
        TABLES.exp[TABLES.log[a as usize] as usize + TABLES.log[b as usize] as usize]
    }
}

/// `dst += c * src`, elementwise.
pub fn mul_add_into(dst: &mut [u8], src: &[u8], c: Gf256) {
    if c.0 == 0 {
        return;
    }
    let lc = TABLES.log[c.0 as usize] as usize;
    for (d, &s) in dst.iter_mut().zip(src) {
        if s != 0 {
            *d ^= TABLES.exp[lc + TABLES.log[s as usize] as usize];
        }
    }
}

/// `row *= c`, elementwise.
pub fn scale(row: &mut [u8], c: Gf256) {
    for x in row {
        *x = mul(*x, c.0);
    }
}

impl fmt::Display for Gf256 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:#04x}", self.0)
    }
}

impl Add for Gf256 {
    type Output = Gf256;
    #[allow(clippy::suspicious_arithmetic_impl)]
    fn add(self, rhs: Gf256) -> Gf256 {
        Gf256(self.0 ^ rhs.0)
    }
}

impl AddAssign for Gf256 {
    fn add_assign(&mut self, rhs: Gf256) {
        *self = *self + rhs;
    }
}

impl Sub for Gf256 {
    type Output = Gf256;
    #[allow(clippy::suspicious_arithmetic_impl)]
    fn sub(self, rhs: Gf256) -> Gf256 {
        Gf256(self.0 ^ rhs.0)
    }
}

impl Neg for Gf256 {
    type Output = Gf256;
    fn neg(self) -> Gf256 {
        self
    }
}

impl Mul for Gf256 {
    type Output = Gf256;
    fn mul(self, rhs: Gf256) -> Gf256 {
        Gf256(mul(self.0, rhs.0))
    }
}

impl MulAssign for Gf256 {
    fn mul_assign(&mut self, rhs: Gf256) {
        *self = *self * rhs;
    }
}

impl Div for Gf256 {
    type Output = Gf256;
    /// Panics on division by zero.
    #[allow(clippy::suspicious_arithmetic_impl)]
    fn div(self, rhs: Gf256) -> Gf256 {
        self * rhs.inv().expect("division by zero in GF(256)")
    }
}

impl Zero for Gf256 {
    fn zero() -> Self {
        Gf256(0)
    }

    fn is_zero(&self) -> bool {
        self.0 == 0
    }
}

impl One for Gf256 {
    fn one() -> Self {
        Gf256(1)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Shift-and-add multiplication, independent of the tables.
    fn slow_mul(mut a: u8, mut b: u8) -> u8 {
        let mut p = 0u8;
        while b != 0 {
            if b & 1 != 0 {
                p ^= a;
            }
            let hi = a & 0x80 != 0;
            a <<= 1;
            if hi {
                a ^= 0x1B;
            }
            b >>= 1;
        }
        p
    }

    #[test]
    fn tables_match_shift_and_add() {
        for a in 0..=255u8 {
            for b in 0..=255u8 {
                assert_eq!(mul(a, b), slow_mul(a, b), "{a} * {b}");
            }
        }
    }

    #[test]
    fn every_nonzero_element_has_an_inverse() {
        assert_eq!(Gf256(0).inv(), None);
        for a in 1..=255u8 {
            assert_eq!(Gf256(a) * Gf256(a).inv().unwrap(), Gf256(1));
        }
    }

    #[test]
    fn generator_has_full_order() {
        let mut seen = std::collections::HashSet::new();
        for i in 0..255 {
            seen.insert(Gf256::exp(i));
        }
        assert_eq!(seen.len(), 255);
        assert_eq!(Gf256(GENERATOR).pow(255), Gf256(1));
    }

    #[test]
    fn addition_is_xor() {
        assert_eq!(Gf256(0x0F) + Gf256(0xF0), Gf256(0xFF));
        assert_eq!(Gf256(0x57) - Gf256(0x57), Gf256::zero());
    }

    #[test]
    fn known_product() {
        assert_eq!(Gf256(0x57) * Gf256(0x83), Gf256(0xC1));
    }
}
