//! The 3-universal XOR hash family `H_xor(n, m)` with prefix slicing.
//!
//! A hash maps `{0,1}^n → {0,1}^m`; bit `i` of the image is
//! `a_{i,0} ⊕ (⊕_k a_{i,k}·y[k])` for coefficient bits drawn independently
//! and uniformly. One base hash of `|S|−1` rows is drawn per counter-core
//! invocation and *sliced*: the `m`-th prefix-slice keeps the first `m`
//! rows and target bits, so cells are nested as `m` grows. Rows are never
//! redrawn for different `m` within a core invocation.

use rand::Rng as _;
use thiserror::Error;

use crate::bits::BitVec;
use crate::formula::{SamplingSet, XorClause};
use crate::rng::Rng;

/// One row of a hash: constant bit `a_{i,0}` plus a coefficient vector.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HashRow {
    pub constant: bool,
    pub coeffs: BitVec,
}

/// A drawn member of `H_xor(n, m)` together with its target vector α.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct XorHash {
    n: usize,
    rows: Vec<HashRow>,
    target: BitVec,
}

/// A prefix-slice `(h^{(m)}, α^{(m)})` of a base hash.
#[derive(Debug, Clone, Copy)]
pub struct CellId<'a> {
    hash: &'a XorHash,
    slice_len: usize,
}

/// Error for a slice length exceeding the hash's row count.
#[derive(Debug, Error, PartialEq, Eq)]
#[error("slice length {requested} out of range (hash has {rows} rows)")]
pub struct SliceOutOfRange {
    pub requested: usize,
    pub rows: usize,
}

impl XorHash {
    pub fn domain_width(&self) -> usize {
        self.n
    }

    pub fn rows(&self) -> usize {
        self.rows.len()
    }

    pub fn row(&self, i: usize) -> &HashRow {
        &self.rows[i]
    }

    pub fn target_bit(&self, i: usize) -> bool {
        self.target.get(i)
    }

    /// The prefix-slice of length `m`.
    pub fn prefix(&self, m: usize) -> Result<CellId<'_>, SliceOutOfRange> {
        if m > self.rows.len() {
            return Err(SliceOutOfRange {
                requested: m,
                rows: self.rows.len(),
            });
        }
        Ok(CellId {
            hash: self,
            slice_len: m,
        })
    }
}

/// Draws a hash with `m` rows over domain width `n`, all coefficient and
/// target bits i.i.d. uniform. Deterministic for a given rng state.
pub fn draw_hash(n: usize, m: usize, rng: &mut Rng) -> XorHash {
    assert!(n >= 1, "domain width must be at least 1");
    let words = n.div_ceil(64);
    let mut rows = Vec::with_capacity(m);
    for _ in 0..m {
        let constant = rng.random::<bool>();
        let coeffs = BitVec::from_words(n, (0..words).map(|_| rng.random::<u64>()).collect());
        rows.push(HashRow { constant, coeffs });
    }
    let target = BitVec::from_words(m, (0..m.div_ceil(64)).map(|_| rng.random::<u64>()).collect());
    XorHash { n, rows, target }
}

impl<'a> CellId<'a> {
    pub fn hash(&self) -> &'a XorHash {
        self.hash
    }

    pub fn slice_len(&self) -> usize {
        self.slice_len
    }

    /// Hash image of `y` under the slice, and membership in the cell
    /// (image equal to the sliced target).
    pub fn eval(&self, y: &BitVec) -> (bool, BitVec) {
        assert_eq!(y.len(), self.hash.n, "input width mismatch");
        let mut image = BitVec::zeros(self.slice_len);
        let mut member = true;
        for i in 0..self.slice_len {
            let row = &self.hash.rows[i];
            let bit = row.constant ^ row.coeffs.and_parity(y);
            image.set(i, bit);
            member &= bit == self.hash.target.get(i);
        }
        (member, image)
    }

    pub fn contains(&self, y: &BitVec) -> bool {
        self.eval(y).0
    }

    /// Renders the slice as XOR constraints over the sampling set.
    ///
    /// Domain bit `k` maps to the `k`-th variable of `s` in order. Row `i`
    /// becomes the constraint `⊕{s[k] : a_{i,k}=1} = α[i] ⊕ a_{i,0}`. A row
    /// with no variables and parity 1 is an explicit contradiction marker;
    /// vacuous rows (no variables, parity 0) are dropped.
    pub fn to_xor_clauses(&self, s: &SamplingSet) -> Vec<XorClause> {
        assert_eq!(s.len(), self.hash.n, "sampling set width mismatch");
        let mut out = Vec::with_capacity(self.slice_len);
        for i in 0..self.slice_len {
            let row = &self.hash.rows[i];
            let vars: Vec<_> = row.coeffs.iter_ones().map(|k| s.vars()[k]).collect();
            let parity = self.hash.target.get(i) ^ row.constant;
            let x = XorClause::new(vars, parity);
            if x.vars().is_empty() && !x.parity() {
                continue;
            }
            out.push(x);
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formula::{Assignment, Var};
    use crate::rng::rng_from_seed;

    fn bv(bits: &[u8]) -> BitVec {
        BitVec::from_bools(&bits.iter().map(|&b| b == 1).collect::<Vec<_>>())
    }

    /// Membership of an assignment's sampling-set projection, for cross
    /// checking against the XOR clause rendering.
    fn member_of(cell: &CellId<'_>, s: &SamplingSet, a: &Assignment) -> bool {
        let y = BitVec::from_bools(
            &s.vars()
                .iter()
                .map(|&v| a.value(v).unwrap())
                .collect::<Vec<_>>(),
        );
        cell.contains(&y)
    }

    #[test]
    fn shape_and_reproducibility() {
        let mut rng = rng_from_seed(5);
        let h = draw_hash(5, 4, &mut rng);
        assert_eq!(h.domain_width(), 5);
        assert_eq!(h.rows(), 4);

        let h2 = draw_hash(5, 4, &mut rng_from_seed(5));
        assert_eq!(h, h2);
    }

    #[test]
    fn prefix_bounds() {
        let h = draw_hash(4, 3, &mut rng_from_seed(1));
        assert!(h.prefix(0).is_ok());
        assert!(h.prefix(3).is_ok());
        let e = h.prefix(4).unwrap_err();
        assert_eq!(
            e,
            SliceOutOfRange {
                requested: 4,
                rows: 3
            }
        );
    }

    #[test]
    fn eval_known_rows() {
        // all-zero coefficients, a_{i,0}=0, α=0 → every y is a member
        let h = XorHash {
            n: 3,
            rows: vec![HashRow {
                constant: false,
                coeffs: bv(&[0, 0, 0]),
            }],
            target: bv(&[0]),
        };
        let c = h.prefix(1).unwrap();
        for bits in 0..8u8 {
            let y = bv(&[bits & 1, bits >> 1 & 1, bits >> 2 & 1]);
            assert!(c.contains(&y));
        }

        // n=2, one row: a₀=0, coeffs=(1,1), α=(0): y=(1,1) → image 0, member
        let h = XorHash {
            n: 2,
            rows: vec![HashRow {
                constant: false,
                coeffs: bv(&[1, 1]),
            }],
            target: bv(&[0]),
        };
        let c = h.prefix(1).unwrap();
        let (member, image) = c.eval(&bv(&[1, 1]));
        assert!(member);
        assert!(!image.get(0));

        // n=3, row (a₀=1, coeffs 101), y=110 → bit = 1⊕1⊕0 = 0
        let h = XorHash {
            n: 3,
            rows: vec![HashRow {
                constant: true,
                coeffs: bv(&[1, 0, 1]),
            }],
            target: bv(&[0]),
        };
        let (_, image) = h.prefix(1).unwrap().eval(&bv(&[1, 1, 0]));
        assert!(!image.get(0));
    }

    #[test]
    fn prefix_consistency_exhaustive() {
        // For all m ≤ m′, the image under prefix m is the m-bit prefix of the
        // image under prefix m′; exhaustive over the domain for n ≤ 8.
        for n in 1..=8usize {
            let mut rng = rng_from_seed(n as u64);
            let m = n.saturating_sub(1).max(1);
            let h = draw_hash(n, m, &mut rng);
            for bits in 0..1u32 << n {
                let y = BitVec::from_bools(&(0..n).map(|i| bits >> i & 1 == 1).collect::<Vec<_>>());
                let full = h.prefix(m).unwrap().eval(&y).1;
                for k in 0..=m {
                    let img = h.prefix(k).unwrap().eval(&y).1;
                    assert!(img.prefix_eq(&full, k));
                }
            }
        }
    }

    #[test]
    fn xor_clauses_examples() {
        // row coeffs (1,1,0), a₀=0, α bit 1, S=(x₁,x₂,x₃) → xor({x₁,x₂}, 1)
        let s = SamplingSet::new(vec![Var::new(1), Var::new(2), Var::new(3)]);
        let h = XorHash {
            n: 3,
            rows: vec![HashRow {
                constant: false,
                coeffs: bv(&[1, 1, 0]),
            }],
            target: bv(&[1]),
        };
        let xs = h.prefix(1).unwrap().to_xor_clauses(&s);
        assert_eq!(xs.len(), 1);
        assert_eq!(xs[0].vars(), &[Var::new(1), Var::new(2)]);
        assert!(xs[0].parity());

        // row coeffs (1,0), a₀=1, α bit 1 → xor({x₁}, 0), i.e. unit ¬x₁
        let s = SamplingSet::new(vec![Var::new(1), Var::new(2)]);
        let h = XorHash {
            n: 2,
            rows: vec![HashRow {
                constant: true,
                coeffs: bv(&[1, 0]),
            }],
            target: bv(&[1]),
        };
        let xs = h.prefix(1).unwrap().to_xor_clauses(&s);
        assert_eq!(xs[0].vars(), &[Var::new(1)]);
        assert!(!xs[0].parity());

        // all-zero row with a₀=0, α bit 1 → contradiction marker
        let h = XorHash {
            n: 2,
            rows: vec![HashRow {
                constant: false,
                coeffs: bv(&[0, 0]),
            }],
            target: bv(&[1]),
        };
        let xs = h.prefix(1).unwrap().to_xor_clauses(&s);
        assert_eq!(xs.len(), 1);
        assert!(xs[0].is_contradiction());
    }

    #[test]
    fn xor_clauses_agree_with_eval_exhaustive() {
        // y satisfies the emitted constraints iff eval reports membership,
        // exhaustively for n ≤ 6.
        for n in 1..=6usize {
            let mut rng = rng_from_seed(100 + n as u64);
            let s = SamplingSet::new((1..=n as u32).map(Var::new).collect());
            let h = draw_hash(n, n, &mut rng);
            for m in 0..=n {
                let cell = h.prefix(m).unwrap();
                let xs = cell.to_xor_clauses(&s);
                for bits in 0..1u32 << n {
                    let values: Vec<bool> = (0..n).map(|i| bits >> i & 1 == 1).collect();
                    let a = Assignment::from_values(&values);
                    let sat = xs.iter().all(|x| {
                        let mut acc = false;
                        for &v in x.vars() {
                            acc ^= a.value(v).unwrap();
                        }
                        acc == x.parity()
                    });
                    assert_eq!(sat, member_of(&cell, &s, &a));
                }
            }
        }
    }

    #[test]
    fn empirical_single_point_uniformity() {
        // Pr[h(y)=α] over 10⁴ draws from H_xor(10,1) is 0.5 within 3σ.
        let mut rng = rng_from_seed(77);
        let y = BitVec::from_bools(&[true; 10]);
        let draws = 10_000;
        let mut hits = 0;
        for _ in 0..draws {
            let h = draw_hash(10, 1, &mut rng);
            if h.prefix(1).unwrap().contains(&y) {
                hits += 1;
            }
        }
        let p = hits as f64 / draws as f64;
        let sigma = (0.25f64 / draws as f64).sqrt();
        assert!((p - 0.5).abs() <= 3.0 * sigma, "p = {p}");
    }
}
