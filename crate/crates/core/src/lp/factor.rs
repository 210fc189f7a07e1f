//! Basis factorization for the revised simplex.
//!
//! Basis columns with a single nonzero on a row no other singleton claims
//! form a diagonal block; the remaining columns restricted to the remaining
//! rows form a small square kernel factorized by dense LU with partial
//! pivoting. After permutation the basis is block upper triangular:
//!
//! ```text
//!     B ~ [ D  K_s ]
//!         [ 0  K_k ]
//! ```
//!
//! Pivots between refactorizations are kept as eta columns.

/// Compressed sparse column.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SparseCol {
    pub rows: Vec<usize>,
    pub vals: Vec<f64>,
}

impl SparseCol {
    pub fn new(entries: impl IntoIterator<Item = (usize, f64)>) -> Self {
        let (rows, vals) = entries.into_iter().filter(|&(_, v)| v != 0.0).unzip();
        SparseCol { rows, vals }
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.rows.iter().copied().zip(self.vals.iter().copied())
    }

    pub fn dot(&self, dense: &[f64]) -> f64 {
        self.iter().map(|(r, v)| v * dense[r]).sum()
    }
}

#[derive(Debug)]
pub struct SingularBasis;

/// Row-major dense LU with partial pivoting, `P A = L U`.
#[derive(Debug, Clone)]
struct DenseLu {
    n: usize,
    lu: Vec<f64>,
    perm: Vec<usize>,
}

impl DenseLu {
    fn factorize(n: usize, mut a: Vec<f64>) -> Result<Self, SingularBasis> {
        let mut perm: Vec<usize> = (0..n).collect();
        for col in 0..n {
            let (piv, best) = (col..n)
                .map(|r| (r, a[r * n + col].abs()))
                .fold((col, -1.0), |acc, x| if x.1 > acc.1 { x } else { acc });
            if best < 1e-11 {
                return Err(SingularBasis);
            }
            if piv != col {
                for c in 0..n {
                    a.swap(col * n + c, piv * n + c);
                }
                perm.swap(col, piv);
            }
            let d = a[col * n + col];
            for r in col + 1..n {
                let f = a[r * n + col] / d;
                if f != 0.0 {
                    a[r * n + col] = f;
                    for c in col + 1..n {
                        a[r * n + c] -= f * a[col * n + c];
                    }
                } else {
                    a[r * n + col] = 0.0;
                }
            }
        }
        Ok(DenseLu { n, lu: a, perm })
    }

    /// Solves `A z = b` in place.
    fn solve(&self, b: &mut [f64]) {
        let n = self.n;
        let mut z: Vec<f64> = self.perm.iter().map(|&p| b[p]).collect();
        for r in 0..n {
            let s: f64 = (0..r).map(|c| self.lu[r * n + c] * z[c]).sum();
            z[r] -= s;
        }
        for r in (0..n).rev() {
            let s: f64 = (r + 1..n).map(|c| self.lu[r * n + c] * z[c]).sum();
            z[r] = (z[r] - s) / self.lu[r * n + r];
        }
        b.copy_from_slice(&z);
    }

    /// Solves `Aᵀ z = b` in place.
    fn solve_transpose(&self, b: &mut [f64]) {
        let n = self.n;
        // Uᵀ w = b
        let mut w = b.to_vec();
        for r in 0..n {
            let s: f64 = (0..r).map(|c| self.lu[c * n + r] * w[c]).sum();
            w[r] = (w[r] - s) / self.lu[r * n + r];
        }
        // Lᵀ v = w
        for r in (0..n).rev() {
            let s: f64 = (r + 1..n).map(|c| self.lu[c * n + r] * w[c]).sum();
            w[r] -= s;
        }
        for (i, &p) in self.perm.iter().enumerate() {
            b[p] = w[i];
        }
    }
}

#[derive(Debug, Clone)]
struct Eta {
    pos: usize,
    pivot: f64,
    /// Off-pivot entries of the entering column in basis coordinates.
    entries: Vec<(usize, f64)>,
}

#[derive(Debug, Clone)]
pub struct BasisFactor {
    num_rows: usize,
    single_pos: Vec<usize>,
    single_row: Vec<usize>,
    single_val: Vec<f64>,
    kern_pos: Vec<usize>,
    kern_rows: Vec<usize>,
    /// Entries of each kernel column on singleton rows.
    kern_off: Vec<Vec<(usize, f64)>>,
    lu: DenseLu,
    etas: Vec<Eta>,
}

impl BasisFactor {
    /// Factorizes the basis whose column at position `p` is `cols[p]`.
    pub fn new(num_rows: usize, cols: &[&SparseCol]) -> Result<Self, SingularBasis> {
        assert_eq!(cols.len(), num_rows);
        let mut claimed = vec![false; num_rows];
        let (mut single_pos, mut single_row, mut single_val) = (vec![], vec![], vec![]);
        let mut kern_pos = vec![];
        for (p, col) in cols.iter().enumerate() {
            if col.rows.len() == 1 && !claimed[col.rows[0]] {
                claimed[col.rows[0]] = true;
                single_pos.push(p);
                single_row.push(col.rows[0]);
                single_val.push(col.vals[0]);
            } else {
                kern_pos.push(p);
            }
        }
        let kern_rows: Vec<usize> = (0..num_rows).filter(|&r| !claimed[r]).collect();
        let b = kern_rows.len();
        debug_assert_eq!(b, kern_pos.len());
        let mut row_index = vec![usize::MAX; num_rows];
        for (i, &r) in kern_rows.iter().enumerate() {
            row_index[r] = i;
        }
        let mut dense = vec![0.0; b * b];
        let mut kern_off = Vec::with_capacity(b);
        for (q, &p) in kern_pos.iter().enumerate() {
            let mut off = Vec::new();
            for (r, v) in cols[p].iter() {
                match row_index[r] {
                    usize::MAX => off.push((r, v)),
                    i => dense[i * b + q] = v,
                }
            }
            kern_off.push(off);
        }
        Ok(BasisFactor {
            num_rows,
            single_pos,
            single_row,
            single_val,
            kern_pos,
            kern_rows,
            kern_off,
            lu: DenseLu::factorize(b, dense)?,
            etas: Vec::new(),
        })
    }

    pub fn kernel_size(&self) -> usize {
        self.kern_rows.len()
    }

    pub fn num_etas(&self) -> usize {
        self.etas.len()
    }

    /// `B⁻¹ v`; `v` is indexed by row, the result by basis position.
    pub fn ftran(&self, v: &[f64]) -> Vec<f64> {
        let mut acc = v.to_vec();
        let mut zk: Vec<f64> = self.kern_rows.iter().map(|&r| acc[r]).collect();
        self.lu.solve(&mut zk);
        let mut out = vec![0.0; self.num_rows];
        for (q, &z) in zk.iter().enumerate() {
            out[self.kern_pos[q]] = z;
            if z != 0.0 {
                for &(r, val) in &self.kern_off[q] {
                    acc[r] -= val * z;
                }
            }
        }
        for s in 0..self.single_pos.len() {
            out[self.single_pos[s]] = acc[self.single_row[s]] / self.single_val[s];
        }
        for eta in &self.etas {
            let zp = out[eta.pos] / eta.pivot;
            out[eta.pos] = zp;
            if zp != 0.0 {
                for &(i, w) in &eta.entries {
                    out[i] -= w * zp;
                }
            }
        }
        out
    }

    /// `B⁻ᵀ c`; `c` is indexed by basis position, the result by row.
    pub fn btran(&self, c: &[f64]) -> Vec<f64> {
        let mut c = c.to_vec();
        for eta in self.etas.iter().rev() {
            let s: f64 = eta.entries.iter().map(|&(i, w)| w * c[i]).sum();
            c[eta.pos] = (c[eta.pos] - s) / eta.pivot;
        }
        let mut y = vec![0.0; self.num_rows];
        for s in 0..self.single_pos.len() {
            y[self.single_row[s]] = c[self.single_pos[s]] / self.single_val[s];
        }
        let mut rhs: Vec<f64> = self
            .kern_pos
            .iter()
            .zip(&self.kern_off)
            .map(|(&p, off)| c[p] - off.iter().map(|&(r, v)| v * y[r]).sum::<f64>())
            .collect();
        self.lu.solve_transpose(&mut rhs);
        for (i, &r) in self.kern_rows.iter().enumerate() {
            y[r] = rhs[i];
        }
        y
    }

    /// Records that the column at basis position `pos` was replaced by a
    /// column whose FTRAN image is `w`.
    pub fn push_eta(&mut self, pos: usize, w: &[f64]) {
        let entries = w
            .iter()
            .enumerate()
            .filter(|&(i, &v)| i != pos && v.abs() > 1e-14)
            .map(|(i, &v)| (i, v))
            .collect();
        self.etas.push(Eta { pos, pivot: w[pos], entries });
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dense_mul(cols: &[SparseCol], z: &[f64], m: usize) -> Vec<f64> {
        let mut out = vec![0.0; m];
        for (p, col) in cols.iter().enumerate() {
            for (r, v) in col.iter() {
                out[r] += v * z[p];
            }
        }
        out
    }

    fn sample_basis() -> Vec<SparseCol> {
        vec![
            SparseCol::new([(0, 1.0)]),
            SparseCol::new([(0, -1.0), (1, -1.0), (3, 1.0)]),
            SparseCol::new([(2, 2.0)]),
            SparseCol::new([(1, 1.0), (2, -1.0), (3, 1.0)]),
        ]
    }

    #[test]
    fn ftran_and_btran_invert_the_basis() {
        let cols = sample_basis();
        let refs: Vec<&SparseCol> = cols.iter().collect();
        let f = BasisFactor::new(4, &refs).unwrap();
        assert_eq!(f.kernel_size(), 2);
        let v = [1.0, -2.0, 0.5, 3.0];
        let z = f.ftran(&v);
        let back = dense_mul(&cols, &z, 4);
        for (a, b) in back.iter().zip(v) {
            assert!((a - b).abs() < 1e-12);
        }
        let c = [0.3, -1.0, 2.0, 0.7];
        let y = f.btran(&c);
        for (p, col) in cols.iter().enumerate() {
            assert!((col.dot(&y) - c[p]).abs() < 1e-12);
        }
    }

    #[test]
    fn eta_updates_track_column_replacement() {
        let mut cols = sample_basis();
        let refs: Vec<&SparseCol> = cols.iter().collect();
        let mut f = BasisFactor::new(4, &refs).unwrap();
        let entering = SparseCol::new([(0, 1.0), (2, 1.0), (3, 1.0)]);
        let mut dense = vec![0.0; 4];
        for (r, v) in entering.iter() {
            dense[r] = v;
        }
        let w = f.ftran(&dense);
        f.push_eta(2, &w);
        cols[2] = entering;
        let v = [0.5, 1.0, -1.0, 2.0];
        let z = f.ftran(&v);
        let back = dense_mul(&cols, &z, 4);
        for (a, b) in back.iter().zip(v) {
            assert!((a - b).abs() < 1e-12);
        }
        let c = [1.0, 2.0, 3.0, 4.0];
        let y = f.btran(&c);
        for (p, col) in cols.iter().enumerate() {
            assert!((col.dot(&y) - c[p]).abs() < 1e-12);
        }
    }

    #[test]
    fn singular_basis_is_detected() {
        let cols = [SparseCol::new([(0, 1.0), (1, 1.0)]), SparseCol::new([(0, 2.0), (1, 2.0)])];
        let refs: Vec<&SparseCol> = cols.iter().collect();
        assert!(BasisFactor::new(2, &refs).is_err());
    }
}
