//! Boolean matrices under the (OR, AND) semiring and detection of the
//! transient and period of the power sequence `A, A^2, A^3, ...`.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MatrixError {
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },
    #[error("power exponent must be positive")]
    ZeroExponent,
    #[error("row {row}: {reason}")]
    Parse { row: usize, reason: String },
}

const WORD: usize = 64;

/// Square Boolean matrix; each row is a packed bit vector.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct BoolMatrix {
    n: usize,
    words: usize,
    bits: Vec<u64>,
}

impl BoolMatrix {
    pub fn zeros(n: usize) -> Self {
        let words = n.div_ceil(WORD).max(1);
        BoolMatrix {
            n,
            words,
            bits: vec![0; n * words],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m.set(i, i, true);
        }
        m
    }

    pub fn from_rows(rows: &[Vec<bool>]) -> Result<Self, MatrixError> {
        let n = rows.len();
        let mut m = Self::zeros(n);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != n {
                return Err(MatrixError::Parse {
                    row: i + 1,
                    reason: format!("expected {n} entries, got {}", row.len()),
                });
            }
            for (j, &b) in row.iter().enumerate() {
                m.set(i, j, b);
            }
        }
        Ok(m)
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> bool {
        (self.row(i)[j / WORD] >> (j % WORD)) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, value: bool) {
        let w = i * self.words + j / WORD;
        let bit = 1u64 << (j % WORD);
        if value {
            self.bits[w] |= bit;
        } else {
            self.bits[w] &= !bit;
        }
    }

    fn row(&self, i: usize) -> &[u64] {
        &self.bits[i * self.words..(i + 1) * self.words]
    }

    pub fn row_is_zero(&self, i: usize) -> bool {
        self.row(i).iter().all(|&w| w == 0)
    }

    pub fn rows_nonzero(&self) -> bool {
        (0..self.n).all(|i| !self.row_is_zero(i))
    }

    /// Column indices set in row `i`.
    pub fn row_entries(&self, i: usize) -> impl Iterator<Item = usize> + '_ {
        (0..self.n).filter(move |&j| self.get(i, j))
    }

    /// `(A ⊗ B)_ij = OR_k (A_ik AND B_kj)`; row `i` of the product is the
    /// union of the rows `k` of `B` selected by row `i` of `A`.
    pub fn otimes(&self, other: &BoolMatrix) -> Result<BoolMatrix, MatrixError> {
        if self.n != other.n {
            return Err(MatrixError::DimensionMismatch {
                left: self.n,
                right: other.n,
            });
        }
        let mut out = BoolMatrix::zeros(self.n);
        for i in 0..self.n {
            let dst = i * self.words;
            for k in self.row_entries(i) {
                for (w, &src) in other.row(k).iter().enumerate() {
                    out.bits[dst + w] |= src;
                }
            }
        }
        Ok(out)
    }

    /// `A^s` by repeated squaring.
    pub fn power(&self, s: u64) -> Result<BoolMatrix, MatrixError> {
        if s == 0 {
            return Err(MatrixError::ZeroExponent);
        }
        let mut base = self.clone();
        let mut acc: Option<BoolMatrix> = None;
        let mut e = s;
        loop {
            if e & 1 == 1 {
                acc = Some(match acc {
                    None => base.clone(),
                    Some(a) => a.otimes(&base)?,
                });
            }
            e >>= 1;
            if e == 0 {
                break;
            }
            base = base.otimes(&base)?;
        }
        Ok(acc.expect("s >= 1"))
    }

    /// Smallest `transient >= 1` and `period >= 1` with
    /// `A^(transient + period) = A^transient`.
    pub fn power_trajectory(&self) -> PowerTrajectory {
        let mut seen: HashMap<BoolMatrix, u64> = HashMap::new();
        let mut current = self.clone();
        let mut s = 1u64;
        loop {
            if let Some(&first) = seen.get(&current) {
                return PowerTrajectory {
                    transient: first,
                    period: s - first,
                    witness: current,
                };
            }
            let next = current.otimes(self).expect("same dimension");
            seen.insert(current, s);
            current = next;
            s += 1;
        }
    }
}

/// The eventually periodic tail of the power sequence of a matrix.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PowerTrajectory {
    pub transient: u64,
    pub period: u64,
    /// `A^transient`.
    pub witness: BoolMatrix,
}

impl fmt::Display for BoolMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..self.n {
            for j in 0..self.n {
                f.write_str(if self.get(i, j) { "1" } else { "0" })?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

impl FromStr for BoolMatrix {
    type Err = MatrixError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let rows = s
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty())
            .enumerate()
            .map(|(i, l)| {
                l.chars()
                    .map(|c| match c {
                        '0' => Ok(false),
                        '1' => Ok(true),
                        other => Err(MatrixError::Parse {
                            row: i + 1,
                            reason: format!("invalid character `{other}`"),
                        }),
                    })
                    .collect::<Result<Vec<_>, _>>()
            })
            .collect::<Result<Vec<_>, _>>()?;
        BoolMatrix::from_rows(&rows)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::BooleanNetwork;
    use proptest::prelude::*;

    fn swap2() -> BoolMatrix {
        "01\n10".parse().unwrap()
    }

    fn three_components() -> BoolMatrix {
        BooleanNetwork::parse("6 AND\n1: 2 3\n2: 1\n3: 2\n4: 3 4\n5: 1 6\n6: 3 4 5")
            .unwrap()
            .dependency_graph()
    }

    /// Entry-by-entry triple loop, independent of the packed row union.
    fn naive_product(a: &BoolMatrix, b: &BoolMatrix) -> BoolMatrix {
        let n = a.dim();
        let mut out = BoolMatrix::zeros(n);
        for i in 0..n {
            for j in 0..n {
                out.set(i, j, (0..n).any(|k| a.get(i, k) && b.get(k, j)));
            }
        }
        out
    }

    #[test]
    fn identity_is_neutral() {
        let a = three_components();
        assert_eq!(BoolMatrix::identity(6).otimes(&a).unwrap(), a);
        assert_eq!(a.otimes(&BoolMatrix::identity(6)).unwrap(), a);
    }

    #[test]
    fn swap_squares_to_identity() {
        assert_eq!(swap2().otimes(&swap2()).unwrap(), BoolMatrix::identity(2));
        assert_eq!(swap2().power(2).unwrap(), BoolMatrix::identity(2));
        assert_eq!(swap2().power(1).unwrap(), swap2());
    }

    #[test]
    fn three_component_square_is_adjacency_of_f_squared() {
        // f^2 = (x1x2, x2x3, x1, x2x3x4, x2x3x4x5, x1x2x3x4x6)
        let expected: BoolMatrix = "110000\n011000\n100000\n011100\n011110\n111101"
            .parse()
            .unwrap();
        assert_eq!(
            three_components().otimes(&three_components()).unwrap(),
            expected
        );
    }

    #[test]
    fn dimension_mismatch() {
        assert_eq!(
            BoolMatrix::identity(2).otimes(&BoolMatrix::identity(3)),
            Err(MatrixError::DimensionMismatch { left: 2, right: 3 })
        );
        assert_eq!(swap2().power(0), Err(MatrixError::ZeroExponent));
    }

    #[test]
    fn trajectories() {
        let t = BoolMatrix::identity(4).power_trajectory();
        assert_eq!((t.transient, t.period), (1, 1));
        let t = swap2().power_trajectory();
        assert_eq!((t.transient, t.period), (1, 2));
        let a = three_components();
        let t = a.power_trajectory();
        assert_eq!(t.period, 2);
        assert_eq!(
            a.power(t.transient + t.period).unwrap(),
            a.power(t.transient).unwrap()
        );
        assert_eq!(t.witness, a.power(t.transient).unwrap());
    }

    #[test]
    fn wide_matrices_span_words() {
        let n = 70;
        let mut cyc = BoolMatrix::zeros(n);
        for i in 0..n {
            cyc.set(i, (i + 1) % n, true);
        }
        assert_eq!(cyc.power(70).unwrap(), BoolMatrix::identity(n));
        assert_ne!(cyc.power(35).unwrap(), BoolMatrix::identity(n));
        let t = cyc.power_trajectory();
        assert_eq!((t.transient, t.period), (1, 70));
    }

    fn arb_matrix(n: usize) -> impl Strategy<Value = BoolMatrix> {
        proptest::collection::vec(proptest::collection::vec(any::<bool>(), n), n)
            .prop_map(|rows| BoolMatrix::from_rows(&rows).unwrap())
    }

    proptest! {
        #[test]
        fn otimes_matches_naive((a, b) in (1usize..10).prop_flat_map(|n| (arb_matrix(n), arb_matrix(n)))) {
            prop_assert_eq!(a.otimes(&b).unwrap(), naive_product(&a, &b));
        }

        #[test]
        fn otimes_is_associative((a, b, c) in (1usize..8).prop_flat_map(|n| (arb_matrix(n), arb_matrix(n), arb_matrix(n)))) {
            let left = a.otimes(&b).unwrap().otimes(&c).unwrap();
            let right = a.otimes(&b.otimes(&c).unwrap()).unwrap();
            prop_assert_eq!(left, right);
        }

        #[test]
        fn power_matches_iterated_product(a in (1usize..8).prop_flat_map(arb_matrix), s in 1u64..12) {
            let mut it = a.clone();
            for _ in 1..s {
                it = it.otimes(&a).unwrap();
            }
            prop_assert_eq!(a.power(s).unwrap(), it);
        }

        #[test]
        fn text_round_trip(a in (1usize..8).prop_flat_map(arb_matrix)) {
            prop_assert_eq!(a.to_string().parse::<BoolMatrix>().unwrap(), a);
        }
    }
}
