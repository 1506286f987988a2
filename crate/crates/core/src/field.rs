//! Prime-field contexts and element arithmetic.
//!
//! A [`FieldCtx`] is a validated prime modulus q.  Elements are plain `u64`
//! values kept canonical in [0, q−1]; products go through `u128` so any
//! supported modulus is overflow-safe.  The context is tiny and `Copy`, so
//! it travels by value next to the coefficient vectors it interprets.

use rand::Rng;

use crate::error::Error;
use crate::Result;

/// Largest accepted modulus.  Primality is checked by trial division, so the
/// bound keeps construction at ≤ 2^20 divisions; arithmetic itself would be
/// safe for any u64 modulus via u128 intermediates.
pub const MAX_MODULUS: u64 = 1 << 40;

/// A prime field F_q, q prime, q ≤ 2^40.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct FieldCtx {
    q: u64,
}

/// Trial division over 2, 3, and 6k±1 up to √q.
fn is_prime(q: u64) -> bool {
    if q < 2 {
        return false;
    }
    if q % 2 == 0 {
        return q == 2;
    }
    if q % 3 == 0 {
        return q == 3;
    }
    let mut p = 5u64;
    while p.checked_mul(p).is_some_and(|pp| pp <= q) {
        if q % p == 0 || q % (p + 2) == 0 {
            return false;
        }
        p += 6;
    }
    true
}

impl FieldCtx {
    /// Build a field context, validating the modulus.
    pub fn new(q: u64) -> Result<Self> {
        if q > MAX_MODULUS {
            return Err(Error::TooLarge(q));
        }
        if !is_prime(q) {
            return Err(Error::NotPrime(q));
        }
        Ok(FieldCtx { q })
    }

    #[inline]
    pub fn q(&self) -> u64 {
        self.q
    }

    /// Number of elements as f64, for rate formulas (1/|F| etc.).
    #[inline]
    pub fn qf(&self) -> f64 {
        self.q as f64
    }

    #[inline]
    pub fn is_canonical(&self, a: u64) -> bool {
        a < self.q
    }

    #[inline]
    pub fn add(&self, a: u64, b: u64) -> u64 {
        debug_assert!(a < self.q && b < self.q);
        let s = a + b; // q ≤ 2^40, no overflow
        if s >= self.q {
            s - self.q
        } else {
            s
        }
    }

    #[inline]
    pub fn sub(&self, a: u64, b: u64) -> u64 {
        debug_assert!(a < self.q && b < self.q);
        if a >= b {
            a - b
        } else {
            a + self.q - b
        }
    }

    #[inline]
    pub fn neg(&self, a: u64) -> u64 {
        debug_assert!(a < self.q);
        if a == 0 {
            0
        } else {
            self.q - a
        }
    }

    #[inline]
    pub fn mul(&self, a: u64, b: u64) -> u64 {
        debug_assert!(a < self.q && b < self.q);
        ((a as u128 * b as u128) % self.q as u128) as u64
    }

    /// a^e by square-and-multiply.
    pub fn pow(&self, mut a: u64, mut e: u64) -> u64 {
        debug_assert!(a < self.q);
        let mut acc = 1 % self.q;
        while e > 0 {
            if e & 1 == 1 {
                acc = self.mul(acc, a);
            }
            a = self.mul(a, a);
            e >>= 1;
        }
        acc
    }

    /// Multiplicative inverse via Fermat (a^(q−2)); errors on zero.
    pub fn inv(&self, a: u64) -> Result<u64> {
        if a == 0 {
            return Err(Error::ZeroInverse);
        }
        Ok(self.pow(a, self.q - 2))
    }

    /// Uniform element, rejection-free: a 128-bit draw reduced mod q has
    /// bias below q/2^128 ≤ 2^-64 per residue.
    pub fn sample_uniform<R: Rng + ?Sized>(&self, rng: &mut R) -> u64 {
        let wide = ((rng.next_u64() as u128) << 64) | rng.next_u64() as u128;
        (wide % self.q as u128) as u64
    }

    /// Uniform nonzero element, rejection-free (1 + wide draw mod q−1).
    pub fn sample_nonzero<R: Rng + ?Sized>(&self, rng: &mut R) -> u64 {
        debug_assert!(self.q > 1);
        let wide = ((rng.next_u64() as u128) << 64) | rng.next_u64() as u128;
        1 + (wide % (self.q as u128 - 1)) as u64
    }

    /// Solve the square system M·x = b over F_q by Gaussian elimination
    /// with partial (first-nonzero) pivoting.  Returns None when M is
    /// singular.  `rows` holds k rows of length k; consumed by value since
    /// callers build fresh rows per attempt.
    pub fn solve_square_system(&self, mut rows: Vec<Vec<u64>>, mut b: Vec<u64>) -> Option<Vec<u64>> {
        let k = rows.len();
        debug_assert!(rows.iter().all(|r| r.len() == k) && b.len() == k);
        for col in 0..k {
            let pivot = (col..k).find(|&r| rows[r][col] != 0)?;
            rows.swap(col, pivot);
            b.swap(col, pivot);
            let inv = self.inv(rows[col][col]).expect("pivot is nonzero");
            for j in col..k {
                rows[col][j] = self.mul(rows[col][j], inv);
            }
            b[col] = self.mul(b[col], inv);
            for r in 0..k {
                if r != col && rows[r][col] != 0 {
                    let factor = rows[r][col];
                    for j in col..k {
                        let t = self.mul(factor, rows[col][j]);
                        rows[r][j] = self.sub(rows[r][j], t);
                    }
                    let t = self.mul(factor, b[col]);
                    b[r] = self.sub(b[r], t);
                }
            }
        }
        Some(b)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::rngs::StdRng;
    use rand::SeedableRng;

    #[test]
    fn accepts_primes_rejects_composites() {
        for q in [2u64, 3, 5, 7, 11, 13, 65537] {
            assert!(FieldCtx::new(q).is_ok(), "q={q} should be accepted");
        }
        for q in [0u64, 1, 4, 91, 65536] {
            assert_eq!(FieldCtx::new(q), Err(Error::NotPrime(q)), "q={q}");
        }
        let big = MAX_MODULUS + 1;
        assert_eq!(FieldCtx::new(big), Err(Error::TooLarge(big)));
    }

    #[test]
    fn inverse_examples() {
        let f5 = FieldCtx::new(5).unwrap();
        assert_eq!(f5.inv(3).unwrap(), 2); // 3·2 = 6 = 1 mod 5
        let f7 = FieldCtx::new(7).unwrap();
        assert_eq!(f7.inv(4).unwrap(), 2); // 4·2 = 8 = 1 mod 7
        assert_eq!(f7.inv(0), Err(Error::ZeroInverse));
    }

    /// Exhaustive field-axiom check for every prime q ≤ 13: associativity,
    /// commutativity, distributivity, identities, inverses.
    #[test]
    fn field_axioms_exhaustive_small_q() {
        for q in [2u64, 3, 5, 7, 11, 13] {
            let f = FieldCtx::new(q).unwrap();
            for a in 0..q {
                assert_eq!(f.add(a, 0), a);
                assert_eq!(f.mul(a, 1 % q), a);
                assert_eq!(f.add(a, f.neg(a)), 0);
                if a != 0 {
                    assert_eq!(f.mul(a, f.inv(a).unwrap()), 1 % q);
                    // inv ∘ inv = id
                    assert_eq!(f.inv(f.inv(a).unwrap()).unwrap(), a);
                }
                for b in 0..q {
                    assert_eq!(f.add(a, b), f.add(b, a));
                    assert_eq!(f.mul(a, b), f.mul(b, a));
                    assert_eq!(f.sub(a, b), f.add(a, f.neg(b)));
                    for c in 0..q {
                        assert_eq!(f.add(f.add(a, b), c), f.add(a, f.add(b, c)));
                        assert_eq!(f.mul(f.mul(a, b), c), f.mul(a, f.mul(b, c)));
                        assert_eq!(
                            f.mul(a, f.add(b, c)),
                            f.add(f.mul(a, b), f.mul(a, c))
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn pow_matches_repeated_multiplication() {
        let f = FieldCtx::new(11).unwrap();
        for a in 0..11 {
            let mut acc = 1u64;
            for e in 0..8 {
                assert_eq!(f.pow(a, e), acc);
                acc = f.mul(acc, a);
            }
        }
    }

    #[test]
    fn uniform_sampling_frequencies_q5() {
        let f = FieldCtx::new(5).unwrap();
        let mut rng = StdRng::seed_from_u64(0x5eed);
        let mut counts = [0u64; 5];
        let draws = 100_000;
        for _ in 0..draws {
            counts[f.sample_uniform(&mut rng) as usize] += 1;
        }
        for (v, &c) in counts.iter().enumerate() {
            let freq = c as f64 / draws as f64;
            assert!((freq - 0.2).abs() < 0.01, "residue {v}: freq {freq}");
        }
    }

    #[test]
    fn nonzero_sampling_never_zero_and_uniform() {
        let f = FieldCtx::new(7).unwrap();
        let mut rng = StdRng::seed_from_u64(0x7007);
        let mut counts = [0u64; 7];
        let draws = 60_000;
        for _ in 0..draws {
            counts[f.sample_nonzero(&mut rng) as usize] += 1;
        }
        assert_eq!(counts[0], 0);
        for &c in &counts[1..] {
            let freq = c as f64 / draws as f64;
            assert!((freq - 1.0 / 6.0).abs() < 0.01, "freq {freq}");
        }
    }

    #[test]
    fn gaussian_solver_roundtrip_and_singular() {
        let f = FieldCtx::new(5).unwrap();
        let mut rng = StdRng::seed_from_u64(99);
        for _ in 0..200 {
            let k: usize = rng.gen_range(1..=5);
            let x: Vec<u64> = (0..k).map(|_| f.sample_uniform(&mut rng)).collect();
            let rows: Vec<Vec<u64>> = (0..k)
                .map(|_| (0..k).map(|_| f.sample_uniform(&mut rng)).collect())
                .collect();
            let b: Vec<u64> = rows
                .iter()
                .map(|r| {
                    r.iter()
                        .zip(&x)
                        .fold(0, |acc, (&m, &xi)| f.add(acc, f.mul(m, xi)))
                })
                .collect();
            if let Some(sol) = f.solve_square_system(rows.clone(), b.clone()) {
                // Solution must reproduce b even if the system was singular
                // with multiple solutions (then sol may differ from x).
                for (r, &bi) in rows.iter().zip(&b) {
                    let got = r
                        .iter()
                        .zip(&sol)
                        .fold(0, |acc, (&m, &s)| f.add(acc, f.mul(m, s)));
                    assert_eq!(got, bi);
                }
            }
        }
        // A visibly singular system: two equal rows, inconsistent rhs.
        let rows = vec![vec![1, 2], vec![1, 2]];
        assert!(f.solve_square_system(rows, vec![0, 1]).is_none());
    }
}
