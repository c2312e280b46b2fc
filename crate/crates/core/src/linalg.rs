//! Exact linear algebra over arbitrary-precision rationals.
//!
//! The matrices here are tiny ((n+1) x (n+1) with n the projective
//! dimension), so plain Gaussian elimination over `BigRational` is both
//! exact and fast enough.

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

pub type Rat = BigRational;
pub type RatMatrix = Vec<Vec<Rat>>;

pub fn rat_from_i64(v: i64) -> Rat {
    Rat::from_integer(BigInt::from(v))
}

pub fn int_matrix_to_rat(m: &[Vec<i64>]) -> RatMatrix {
    m.iter()
        .map(|row| row.iter().map(|&e| rat_from_i64(e)).collect())
        .collect()
}

pub fn identity(n: usize) -> RatMatrix {
    (0..n)
        .map(|i| (0..n).map(|j| if i == j { Rat::one() } else { Rat::zero() }).collect())
        .collect()
}

pub fn mat_mul(a: &RatMatrix, b: &RatMatrix) -> RatMatrix {
    let rows = a.len();
    let inner = b.len();
    let cols = b[0].len();
    let mut out = vec![vec![Rat::zero(); cols]; rows];
    for i in 0..rows {
        for k in 0..inner {
            if a[i][k].is_zero() {
                continue;
            }
            for j in 0..cols {
                let t = &a[i][k] * &b[k][j];
                out[i][j] += t;
            }
        }
    }
    out
}

pub fn transpose(a: &RatMatrix) -> RatMatrix {
    let rows = a.len();
    let cols = a[0].len();
    (0..cols).map(|j| (0..rows).map(|i| a[i][j].clone()).collect()).collect()
}

/// T^t A T for a square A and a (possibly rectangular) T whose columns
/// are the new basis vectors.
pub fn congruence(a: &RatMatrix, t: &RatMatrix) -> RatMatrix {
    mat_mul(&mat_mul(&transpose(t), a), t)
}

pub fn mat_vec(a: &RatMatrix, v: &[Rat]) -> Vec<Rat> {
    a.iter()
        .map(|row| {
            let mut acc = Rat::zero();
            for (e, x) in row.iter().zip(v) {
                acc += e * x;
            }
            acc
        })
        .collect()
}

/// Row-reduce `m` in place to row echelon form; returns the pivot
/// columns. Deterministic: always picks the first nonzero entry.
fn row_echelon(m: &mut RatMatrix) -> Vec<usize> {
    let rows = m.len();
    if rows == 0 {
        return vec![];
    }
    let cols = m[0].len();
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..cols {
        if r == rows {
            break;
        }
        let Some(p) = (r..rows).find(|&i| !m[i][c].is_zero()) else {
            continue;
        };
        m.swap(r, p);
        let inv = m[r][c].clone();
        for j in c..cols {
            m[r][j] = &m[r][j] / &inv;
        }
        for i in 0..rows {
            if i != r && !m[i][c].is_zero() {
                let f = m[i][c].clone();
                for j in c..cols {
                    let t = &f * &m[r][j];
                    m[i][j] -= t;
                }
            }
        }
        pivots.push(c);
        r += 1;
    }
    pivots
}

pub fn rank(m: &RatMatrix) -> usize {
    let mut work = m.clone();
    row_echelon(&mut work).len()
}

/// Basis of the right null space of `m`, from the reduced echelon form.
/// Free variables are set to 1 one at a time, in increasing column
/// order, so the output is deterministic.
pub fn nullspace(m: &RatMatrix) -> Vec<Vec<Rat>> {
    if m.is_empty() {
        return vec![];
    }
    let cols = m[0].len();
    let mut work = m.clone();
    let pivots = row_echelon(&mut work);
    let free: Vec<usize> = (0..cols).filter(|c| !pivots.contains(c)).collect();
    let mut basis = Vec::new();
    for &f in &free {
        let mut v = vec![Rat::zero(); cols];
        v[f] = Rat::one();
        for (row, &p) in pivots.iter().enumerate() {
            v[p] = -work[row][f].clone();
        }
        basis.push(v);
    }
    basis
}

pub fn invert(m: &RatMatrix) -> Option<RatMatrix> {
    let n = m.len();
    let mut work: RatMatrix = m
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let mut r = row.clone();
            r.extend((0..n).map(|j| if i == j { Rat::one() } else { Rat::zero() }));
            r
        })
        .collect();
    let pivots = row_echelon(&mut work);
    // Invertible iff every original column is a pivot (pivots in the
    // augmented half mean a rank drop on the left).
    if pivots.iter().take_while(|&&c| c < n).count() < n {
        return None;
    }
    Some(work.into_iter().map(|row| row[n..].to_vec()).collect())
}

pub fn det(m: &RatMatrix) -> Rat {
    let n = m.len();
    let mut work = m.clone();
    let mut d = Rat::one();
    for c in 0..n {
        let Some(p) = (c..n).find(|&i| !work[i][c].is_zero()) else {
            return Rat::zero();
        };
        if p != c {
            work.swap(c, p);
            d = -d;
        }
        d *= work[c][c].clone();
        let inv = work[c][c].clone();
        for i in (c + 1)..n {
            if work[i][c].is_zero() {
                continue;
            }
            let f = &work[i][c] / &inv;
            for j in c..n {
                let t = &f * &work[c][j];
                work[i][j] -= t;
            }
        }
    }
    d
}

/// Clear denominators and common content: the smallest integer vector
/// proportional to `v` with positive leading sign left untouched.
pub fn rat_vec_to_primitive_int(v: &[Rat]) -> Vec<BigInt> {
    let mut lcm = BigInt::one();
    for x in v {
        lcm = lcm.lcm(x.denom());
    }
    let ints: Vec<BigInt> = v.iter().map(|x| x.numer() * (&lcm / x.denom())).collect();
    let mut g = BigInt::zero();
    for x in &ints {
        g = g.gcd(x);
    }
    if g.is_zero() {
        return ints;
    }
    ints.into_iter().map(|x| x / &g).collect()
}

pub fn rat_to_f64(r: &Rat) -> f64 {
    let n = bigint_to_f64(r.numer());
    let d = bigint_to_f64(r.denom());
    n / d
}

fn bigint_to_f64(b: &BigInt) -> f64 {
    // Good enough for the magnitudes that occur here; exact for |b| < 2^53.
    let s = b.to_string();
    s.parse::<f64>().unwrap_or(if b.is_negative() { f64::NEG_INFINITY } else { f64::INFINITY })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(rows: &[&[i64]]) -> RatMatrix {
        rows.iter().map(|r| r.iter().map(|&e| rat_from_i64(e)).collect()).collect()
    }

    #[test]
    fn rank_and_nullspace() {
        let a = m(&[&[1, 1, 0], &[1, 1, 0], &[0, 0, 0]]);
        assert_eq!(rank(&a), 1);
        let ns = nullspace(&a);
        assert_eq!(ns.len(), 2);
        for v in &ns {
            let image = mat_vec(&a, v);
            assert!(image.iter().all(|x| x.is_zero()));
        }
    }

    #[test]
    fn invert_round_trip() {
        let a = m(&[&[2, 1], &[1, 1]]);
        let inv = invert(&a).unwrap();
        assert_eq!(mat_mul(&a, &inv), identity(2));
        assert!(invert(&m(&[&[1, 2], &[2, 4]])).is_none());
    }

    #[test]
    fn det_matches_cofactor() {
        let a = m(&[&[3, 1], &[4, 2]]);
        assert_eq!(det(&a), rat_from_i64(2));
        assert_eq!(det(&m(&[&[0, 1], &[1, 0]])), rat_from_i64(-1));
    }

    #[test]
    fn primitive_int_scaling() {
        let v = vec![
            Rat::new(BigInt::from(1), BigInt::from(2)),
            Rat::new(BigInt::from(-3), BigInt::from(4)),
        ];
        let ints = rat_vec_to_primitive_int(&v);
        assert_eq!(ints, vec![BigInt::from(2), BigInt::from(-3)]);
    }
}
