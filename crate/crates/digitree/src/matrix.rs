//! Symmetric 2x2 matrices and the closed-form SPD square root.

use crate::error::{Error, Result};
use serde::Serialize;

/// Symmetric 2x2 matrix `[[a, b], [b, c]]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CovMatrix2 {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl CovMatrix2 {
    pub fn new(a: f64, b: f64, c: f64) -> Self {
        CovMatrix2 { a, b, c }
    }

    pub fn identity() -> Self {
        CovMatrix2::new(1.0, 0.0, 1.0)
    }

    pub fn det(&self) -> f64 {
        self.a * self.c - self.b * self.b
    }

    pub fn is_positive_definite(&self) -> bool {
        self.a > 0.0 && self.det() > 0.0
    }

    /// Matrix product of two symmetric matrices (not symmetric in general;
    /// returned as the full 2x2 array, row major).
    pub fn mul(&self, rhs: &CovMatrix2) -> [[f64; 2]; 2] {
        [
            [
                self.a * rhs.a + self.b * rhs.b,
                self.a * rhs.b + self.b * rhs.c,
            ],
            [
                self.b * rhs.a + self.c * rhs.b,
                self.b * rhs.b + self.c * rhs.c,
            ],
        ]
    }

    /// Apply to a column vector.
    pub fn apply(&self, v: [f64; 2]) -> [f64; 2] {
        [self.a * v[0] + self.b * v[1], self.b * v[0] + self.c * v[1]]
    }
}

/// An SPD matrix with its unique positive-definite square root and inverse
/// square root.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct WhiteningMatrix {
    pub matrix: CovMatrix2,
    pub sqrt: CovMatrix2,
    pub inv_sqrt: CovMatrix2,
}

/// Closed-form square root of an SPD 2x2 matrix: with `s = sqrt(det)` and
/// `t = sqrt(a + c + 2 s)`,
///
/// ```text
/// M^(1/2)  = [[a + s, b], [b, c + s]] / t
/// M^(-1/2) = [[c + s, -b], [-b, a + s]] / (s t)
/// ```
pub fn sqrt_spd_2x2(m: &CovMatrix2) -> Result<WhiteningMatrix> {
    if !m.is_positive_definite() {
        return Err(Error::NotPositiveDefinite);
    }
    let s = m.det().sqrt();
    let t = (m.a + m.c + 2.0 * s).sqrt();
    let sqrt = CovMatrix2::new((m.a + s) / t, m.b / t, (m.c + s) / t);
    let st = s * t;
    let inv_sqrt = CovMatrix2::new((m.c + s) / st, -m.b / st, (m.a + s) / st);
    Ok(WhiteningMatrix {
        matrix: *m,
        sqrt,
        inv_sqrt,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn max_abs(m: &[[f64; 2]; 2]) -> f64 {
        m.iter()
            .flatten()
            .fold(0.0f64, |acc, x| acc.max(x.abs()))
    }

    fn sub(lhs: [[f64; 2]; 2], rhs: [[f64; 2]; 2]) -> [[f64; 2]; 2] {
        [
            [lhs[0][0] - rhs[0][0], lhs[0][1] - rhs[0][1]],
            [lhs[1][0] - rhs[1][0], lhs[1][1] - rhs[1][1]],
        ]
    }

    #[test]
    fn identity_and_diagonal() {
        let w = sqrt_spd_2x2(&CovMatrix2::identity()).unwrap();
        assert_eq!(w.sqrt, CovMatrix2::identity());
        assert_eq!(w.inv_sqrt, CovMatrix2::identity());
        let w = sqrt_spd_2x2(&CovMatrix2::new(4.0, 0.0, 9.0)).unwrap();
        assert!((w.sqrt.a - 2.0).abs() < 1e-15);
        assert!((w.sqrt.c - 3.0).abs() < 1e-15);
        assert_eq!(w.sqrt.b, 0.0);
    }

    #[test]
    fn hand_algebra_case() {
        // [[2,1],[1,2]]: det = 3, trace + 2 sqrt(3) = 4 + 2 sqrt(3), and
        // sqrt(4 + 2 sqrt(3)) = 1 + sqrt(3), so the root is
        // [[(sqrt3+1)/2, (sqrt3-1)/2], [(sqrt3-1)/2, (sqrt3+1)/2]].
        let m = CovMatrix2::new(2.0, 1.0, 2.0);
        let w = sqrt_spd_2x2(&m).unwrap();
        let s3 = 3.0f64.sqrt();
        assert!((w.sqrt.a - (s3 + 1.0) / 2.0).abs() < 1e-14);
        assert!((w.sqrt.b - (s3 - 1.0) / 2.0).abs() < 1e-14);
        // squaring oracle
        let sq = w.sqrt.mul(&w.sqrt);
        let diff = sub(sq, [[2.0, 1.0], [1.0, 2.0]]);
        assert!(max_abs(&diff) < 1e-14);
    }

    #[test]
    fn rejects_non_spd() {
        assert!(matches!(
            sqrt_spd_2x2(&CovMatrix2::new(1.0, 2.0, 1.0)),
            Err(Error::NotPositiveDefinite)
        ));
        assert!(matches!(
            sqrt_spd_2x2(&CovMatrix2::new(0.0, 0.0, 1.0)),
            Err(Error::NotPositiveDefinite)
        ));
        assert!(matches!(
            sqrt_spd_2x2(&CovMatrix2::new(-1.0, 0.0, -2.0)),
            Err(Error::NotPositiveDefinite)
        ));
    }

    #[test]
    fn random_spd_round_trips() {
        // documented generator: a = 0.1 + u1 * 10, c = 0.1 + u2 * 10,
        // b = (2 u3 - 1) * 0.99 * sqrt(a c), with u from SplitMix64 floats
        let mut state = 0xD1B5_4A32_D192_ED03u64;
        let mut next = move || {
            state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
            let mut z = state;
            z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
            z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
            z ^= z >> 31;
            (z >> 11) as f64 / (1u64 << 53) as f64
        };
        for _ in 0..1000 {
            let a = 0.1 + next() * 10.0;
            let c = 0.1 + next() * 10.0;
            let b = (2.0 * next() - 1.0) * 0.99 * (a * c).sqrt();
            let m = CovMatrix2::new(a, b, c);
            let w = sqrt_spd_2x2(&m).unwrap();
            let norm = a.abs().max(b.abs()).max(c.abs());
            let sq_err = sub(w.sqrt.mul(&w.sqrt), [[a, b], [b, c]]);
            assert!(max_abs(&sq_err) / norm < 1e-12);
            let id_err = sub(w.inv_sqrt.mul(&w.sqrt), [[1.0, 0.0], [0.0, 1.0]]);
            assert!(max_abs(&id_err) < 1e-12);
            assert!(w.sqrt.is_positive_definite());
            assert!(w.inv_sqrt.is_positive_definite());
        }
    }
}
