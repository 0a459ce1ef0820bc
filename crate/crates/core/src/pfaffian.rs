//! Antisymmetric matrices and their Pfaffians.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::matchings::enumerate_matchings;
pub use crate::matchings::MatchingTerm;

/// Largest dimension accepted by [`pfaffian_combinatorial`].
pub const COMBINATORIAL_CAP: usize = 16;

/// Even-dimensional real antisymmetric matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SkewMatrix {
    m: DMatrix<f64>,
}

impl SkewMatrix {
    pub fn zeros(dim: usize) -> Result<Self> {
        check_even(dim)?;
        Ok(Self { m: DMatrix::zeros(dim, dim) })
    }

    /// Validates antisymmetry to `1e−13` relative to the largest entry, then
    /// replaces the matrix by its exact antisymmetric part.
    pub fn new(m: DMatrix<f64>) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::DimensionMismatch { expected: m.nrows(), got: m.ncols() });
        }
        check_even(m.nrows())?;
        let scale = m.amax().max(1.0);
        let drift = (&m + m.transpose()).amax();
        if drift > 1e-13 * scale {
            return Err(Error::InvalidArgument(format!("matrix is not antisymmetric (drift {drift:e})")));
        }
        Ok(Self::skew_part(m))
    }

    /// Builds from the strict upper triangle `f(i, j)`, `i < j`.
    pub fn from_upper<F: FnMut(usize, usize) -> f64>(dim: usize, mut f: F) -> Result<Self> {
        let mut s = Self::zeros(dim)?;
        for i in 0..dim {
            for j in i + 1..dim {
                s.set(i, j, f(i, j));
            }
        }
        Ok(s)
    }

    fn skew_part(m: DMatrix<f64>) -> Self {
        let n = m.nrows();
        let mut out = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in i + 1..n {
                let v = 0.5 * (m[(i, j)] - m[(j, i)]);
                out[(i, j)] = v;
                out[(j, i)] = -v;
            }
        }
        Self { m: out }
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.m[(i, j)]
    }

    /// Sets `(i, j)` to `v` and `(j, i)` to `−v`.
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        if i == j {
            return;
        }
        self.m[(i, j)] = v;
        self.m[(j, i)] = -v;
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.m
    }

    /// Principal submatrix on `start..start + size`.
    pub fn block(&self, start: usize, size: usize) -> Result<Self> {
        check_even(size)?;
        if start + size > self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), got: start + size });
        }
        Ok(Self { m: self.m.view((start, start), (size, size)).into_owned() })
    }

    /// Principal submatrix on an arbitrary index set.
    pub fn select(&self, idx: &[usize]) -> Result<Self> {
        check_even(idx.len())?;
        let k = idx.len();
        let mut m = DMatrix::zeros(k, k);
        for (a, &i) in idx.iter().enumerate() {
            for (b, &j) in idx.iter().enumerate() {
                m[(a, b)] = self.m[(i, j)];
            }
        }
        Ok(Self { m })
    }
}

fn check_even(dim: usize) -> Result<()> {
    if dim == 0 || dim % 2 == 1 {
        return Err(Error::InvalidArgument(format!("skew matrix dimension {dim} must be even and positive")));
    }
    Ok(())
}

/// Σ_σ sgn(σ) ∏ m(σ_{2i−1}, σ_{2i}) over all perfect matchings.
pub fn pfaffian_combinatorial(m: &SkewMatrix) -> Result<f64> {
    let dim = m.dim();
    if dim > COMBINATORIAL_CAP {
        return Err(Error::InvalidArgument(format!("dimension {dim} exceeds enumeration cap")));
    }
    let mut sum = 0.0;
    for t in enumerate_matchings(dim)? {
        let prod: f64 = t.pairs.iter().map(|&(i, j)| m.get(i, j)).product();
        sum += f64::from(t.sign) * prod;
    }
    Ok(sum)
}

/// Pfaffian by skew-symmetric Gaussian elimination with greatest-magnitude
/// pivoting; O(dim³).
pub fn pfaffian_numeric(m: &SkewMatrix) -> f64 {
    let n = m.dim();
    let mut a = m.as_matrix().clone();
    let mut pf = 1.0;
    let mut k = 0;
    while k + 1 < n {
        let mut kp = k + 1;
        let mut best = a[(k, k + 1)].abs();
        for j in k + 2..n {
            let v = a[(k, j)].abs();
            if v > best {
                best = v;
                kp = j;
            }
        }
        if best < 1e-300 {
            return 0.0;
        }
        if kp != k + 1 {
            a.swap_rows(k + 1, kp);
            a.swap_columns(k + 1, kp);
            pf = -pf;
        }
        let piv = a[(k, k + 1)];
        pf *= piv;
        if k + 2 < n {
            let tau: Vec<f64> = (k + 2..n).map(|i| a[(k, i)] / piv).collect();
            let row: Vec<f64> = (k + 2..n).map(|j| a[(k + 1, j)]).collect();
            for (ii, i) in (k + 2..n).enumerate() {
                for (jj, j) in (k + 2..n).enumerate() {
                    a[(i, j)] += tau[jj] * row[ii] - tau[ii] * row[jj];
                }
            }
        }
        k += 2;
    }
    pf
}

/// `AᵀMA`. `Pf(AᵀMA) = det(A)·Pf(M)`.
pub fn congruence_transform(m: &SkewMatrix, a: &DMatrix<f64>) -> Result<SkewMatrix> {
    let n = m.dim();
    if a.nrows() != n || a.ncols() != n {
        return Err(Error::DimensionMismatch { expected: n, got: a.nrows().max(a.ncols()) });
    }
    let r = a.transpose() * m.as_matrix() * a;
    let scale = (a.amax().powi(2) * m.as_matrix().amax() * n as f64).max(1.0);
    let drift = (&r + r.transpose()).amax();
    if drift > 1e-13 * scale {
        return Err(Error::InvalidArgument(format!("congruence lost antisymmetry (drift {drift:e})")));
    }
    Ok(SkewMatrix::skew_part(r))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn four(m: [f64; 6]) -> SkewMatrix {
        let [a, b, c, d, e, f] = m;
        SkewMatrix::from_upper(4, |i, j| match (i, j) {
            (0, 1) => a,
            (0, 2) => b,
            (0, 3) => c,
            (1, 2) => d,
            (1, 3) => e,
            _ => f,
        })
        .unwrap()
    }

    #[test]
    fn two_by_two() {
        let s = SkewMatrix::from_upper(2, |_, _| 3.5).unwrap();
        assert_eq!(pfaffian_combinatorial(&s).unwrap(), 3.5);
        assert_eq!(pfaffian_numeric(&s), 3.5);
    }

    #[test]
    fn four_by_four_expansion() {
        let s = four([1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
        let expect = 1.0 * 6.0 - 2.0 * 5.0 + 3.0 * 4.0;
        assert_eq!(pfaffian_combinatorial(&s).unwrap(), expect);
        assert_relative_eq!(pfaffian_numeric(&s), expect, max_relative = 1e-14);
    }

    #[test]
    fn zero_and_odd() {
        let z = SkewMatrix::zeros(6).unwrap();
        assert_eq!(pfaffian_numeric(&z), 0.0);
        assert_eq!(pfaffian_combinatorial(&z).unwrap(), 0.0);
        assert!(SkewMatrix::zeros(3).is_err());
    }

    #[test]
    fn rejects_symmetric_input() {
        let m = DMatrix::from_element(2, 2, 1.0);
        assert!(SkewMatrix::new(m).is_err());
    }

    #[test]
    fn pivoting_handles_zero_leading_entry() {
        let s = four([0.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
        assert_relative_eq!(pfaffian_numeric(&s), -2.0 * 5.0 + 3.0 * 4.0, max_relative = 1e-14);
    }

    #[test]
    fn identity_congruence() {
        let s = four([1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
        let t = congruence_transform(&s, &DMatrix::identity(4, 4)).unwrap();
        assert_eq!(s, t);
        assert!(congruence_transform(&s, &DMatrix::identity(3, 3)).is_err());
    }
}
