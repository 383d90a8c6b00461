//! Sparse LU factorization of a simplex basis with product-form updates.
//!
//! Columns are eliminated left-looking in order of increasing nonzero count.
//! Each column is reduced by the previous `L` steps with a sparse triangular
//! solve (a binary heap visits only reachable pivots), then pivots on the
//! candidate row of smallest basis row count whose magnitude is within
//! `threshold` of the largest. Portfolio LPs have a few dense columns
//! (weights, benchmark scale) and many two-entry columns; this ordering
//! eliminates the sparse ones first and keeps fill to the dense border.
//!
//! Basis changes between refactorizations are kept as eta vectors.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

const NONE: usize = usize::MAX;

/// Pivot magnitudes below this, relative to the column's largest original
/// entry, mark the column as dependent.
const SINGULAR_TOL: f64 = 1e-11;

struct Eta {
    pos: usize,
    pivot: f64,
    entries: Vec<(usize, f64)>,
}

pub(crate) struct LuFactor {
    m: usize,
    pivot_row: Vec<usize>,
    pivot_pos: Vec<usize>,
    l_cols: Vec<Vec<(usize, f64)>>,
    u_cols: Vec<Vec<(usize, f64)>>,
    u_diag: Vec<f64>,
    etas: Vec<Eta>,
}

/// Basis positions that could not be pivoted, paired with rows left without
/// a pivot. Replacing each position's column by the unit column of its row
/// makes the basis nonsingular.
pub(crate) struct Singular {
    pub positions: Vec<usize>,
    pub rows: Vec<usize>,
}

impl LuFactor {
    pub fn factor(m: usize, columns: &[&[(usize, f64)]], threshold: f64) -> Result<Self, Singular> {
        debug_assert_eq!(columns.len(), m);
        let mut row_count = vec![0usize; m];
        for col in columns {
            for &(i, _) in col.iter() {
                row_count[i] += 1;
            }
        }
        let mut order: Vec<usize> = (0..m).collect();
        order.sort_by_key(|&p| (columns[p].len(), p));

        let mut step_of_row = vec![NONE; m];
        let mut f = LuFactor {
            m,
            pivot_row: Vec::with_capacity(m),
            pivot_pos: Vec::with_capacity(m),
            l_cols: Vec::with_capacity(m),
            u_cols: Vec::with_capacity(m),
            u_diag: Vec::with_capacity(m),
            etas: Vec::new(),
        };

        let mut work = vec![0.0; m];
        let mut touched = vec![false; m];
        let mut queued = vec![false; m];
        let mut nz: Vec<usize> = Vec::new();
        let mut heap: BinaryHeap<Reverse<usize>> = BinaryHeap::new();
        let mut dependent = Vec::new();

        for &pos in &order {
            nz.clear();
            let col_scale = columns[pos].iter().fold(0.0_f64, |m, e| m.max(e.1.abs()));
            for &(i, a) in columns[pos].iter() {
                work[i] += a;
                if !touched[i] {
                    touched[i] = true;
                    nz.push(i);
                }
            }
            for &i in &nz {
                let s = step_of_row[i];
                if s != NONE && !queued[i] {
                    queued[i] = true;
                    heap.push(Reverse(s));
                }
            }
            while let Some(Reverse(k)) = heap.pop() {
                let r = f.pivot_row[k];
                queued[r] = false;
                let v = work[r];
                if v == 0.0 {
                    continue;
                }
                for &(i, l) in &f.l_cols[k] {
                    work[i] -= l * v;
                    if !touched[i] {
                        touched[i] = true;
                        nz.push(i);
                    }
                    let s = step_of_row[i];
                    if s != NONE && !queued[i] {
                        queued[i] = true;
                        heap.push(Reverse(s));
                    }
                }
            }

            let mut u_col = Vec::new();
            let mut amax: f64 = 0.0;
            for &i in &nz {
                let v = work[i];
                if step_of_row[i] != NONE {
                    if v != 0.0 {
                        u_col.push((step_of_row[i], v));
                    }
                } else {
                    amax = amax.max(v.abs());
                }
            }
            if amax <= SINGULAR_TOL * col_scale {
                dependent.push(pos);
                for &i in &nz {
                    work[i] = 0.0;
                    touched[i] = false;
                }
                continue;
            }

            let mut pivot = NONE;
            for &i in &nz {
                if step_of_row[i] != NONE {
                    continue;
                }
                let v = work[i].abs();
                if v < threshold * amax {
                    continue;
                }
                let better = pivot == NONE
                    || row_count[i] < row_count[pivot]
                    || (row_count[i] == row_count[pivot]
                        && (v > work[pivot].abs() || (v == work[pivot].abs() && i < pivot)));
                if better {
                    pivot = i;
                }
            }
            let piv = work[pivot];
            let mut l_col = Vec::new();
            for &i in &nz {
                if i != pivot && step_of_row[i] == NONE && work[i] != 0.0 {
                    l_col.push((i, work[i] / piv));
                }
            }
            l_col.sort_unstable_by_key(|e| e.0);
            u_col.sort_unstable_by_key(|e| e.0);

            step_of_row[pivot] = f.pivot_row.len();
            f.pivot_row.push(pivot);
            f.pivot_pos.push(pos);
            f.l_cols.push(l_col);
            f.u_cols.push(u_col);
            f.u_diag.push(piv);

            for &i in &nz {
                work[i] = 0.0;
                touched[i] = false;
            }
        }

        if dependent.is_empty() {
            Ok(f)
        } else {
            let rows = (0..m).filter(|&i| step_of_row[i] == NONE).collect();
            Err(Singular {
                positions: dependent,
                rows,
            })
        }
    }

    pub fn n_etas(&self) -> usize {
        self.etas.len()
    }

    /// Records the basis change replacing position `pos` by a column whose
    /// FTRAN image is `alpha`.
    pub fn push_eta(&mut self, pos: usize, alpha: &[f64]) {
        let entries = alpha
            .iter()
            .enumerate()
            .filter(|&(i, &a)| i != pos && a != 0.0)
            .map(|(i, &a)| (i, a))
            .collect();
        self.etas.push(Eta {
            pos,
            pivot: alpha[pos],
            entries,
        });
    }

    /// Solves `B y = a` for a sparse `a`; `y` is indexed by basis position.
    pub fn ftran(&self, a: &[(usize, f64)], out: &mut Vec<f64>) {
        let mut w = vec![0.0; self.m];
        for &(i, v) in a {
            w[i] += v;
        }
        self.ftran_dense(w, out);
    }

    pub fn ftran_dense(&self, mut w: Vec<f64>, out: &mut Vec<f64>) {
        for (k, l_col) in self.l_cols.iter().enumerate() {
            let v = w[self.pivot_row[k]];
            if v != 0.0 {
                for &(i, l) in l_col {
                    w[i] -= l * v;
                }
            }
        }
        out.clear();
        out.resize(self.m, 0.0);
        for k in (0..self.u_diag.len()).rev() {
            let z = w[self.pivot_row[k]] / self.u_diag[k];
            out[self.pivot_pos[k]] = z;
            if z != 0.0 {
                for &(j, u) in &self.u_cols[k] {
                    w[self.pivot_row[j]] -= u * z;
                }
            }
        }
        for eta in &self.etas {
            let yp = out[eta.pos] / eta.pivot;
            out[eta.pos] = yp;
            if yp != 0.0 {
                for &(i, a) in &eta.entries {
                    out[i] -= a * yp;
                }
            }
        }
    }

    /// Solves `Bᵀ y = c` with `c` indexed by basis position; `y` by row.
    pub fn btran(&self, c: &[f64], out: &mut Vec<f64>) {
        let mut c = c.to_vec();
        for eta in self.etas.iter().rev() {
            let mut acc = c[eta.pos];
            for &(i, a) in &eta.entries {
                acc -= a * c[i];
            }
            c[eta.pos] = acc / eta.pivot;
        }
        let steps = self.u_diag.len();
        let mut v = vec![0.0; steps];
        for k in 0..steps {
            let mut acc = c[self.pivot_pos[k]];
            for &(j, u) in &self.u_cols[k] {
                acc -= u * v[j];
            }
            v[k] = acc / self.u_diag[k];
        }
        out.clear();
        out.resize(self.m, 0.0);
        for k in 0..steps {
            out[self.pivot_row[k]] = v[k];
        }
        for k in (0..steps).rev() {
            let mut acc = out[self.pivot_row[k]];
            for &(i, l) in &self.l_cols[k] {
                acc -= l * out[i];
            }
            out[self.pivot_row[k]] = acc;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dense_to_cols(a: &[Vec<f64>]) -> Vec<Vec<(usize, f64)>> {
        let m = a.len();
        (0..m)
            .map(|j| (0..m).filter(|&i| a[i][j] != 0.0).map(|i| (i, a[i][j])).collect())
            .collect()
    }

    fn matvec(a: &[Vec<f64>], x: &[f64]) -> Vec<f64> {
        a.iter().map(|r| r.iter().zip(x).map(|(p, q)| p * q).sum()).collect()
    }

    fn sample() -> Vec<Vec<f64>> {
        vec![
            vec![2.0, 0.0, 1.0, 0.0],
            vec![0.0, 1.0, 3.0, 0.5],
            vec![1.0, 0.0, 0.0, 4.0],
            vec![0.0, 2.0, 1.0, 1.0],
        ]
    }

    #[test]
    fn ftran_btran_solve() {
        let a = sample();
        let cols = dense_to_cols(&a);
        let refs: Vec<&[(usize, f64)]> = cols.iter().map(|c| c.as_slice()).collect();
        let lu = LuFactor::factor(4, &refs, 0.1).ok().unwrap();
        let rhs = [(0, 1.0), (1, -2.0), (3, 0.5)];
        let mut y = Vec::new();
        lu.ftran(&rhs, &mut y);
        let back = matvec(&a, &y);
        for (b, want) in back.iter().zip([1.0, -2.0, 0.0, 0.5]) {
            assert!((b - want).abs() < 1e-12);
        }
        let c = [1.0, 2.0, 3.0, 4.0];
        lu.btran(&c, &mut y);
        let at: Vec<Vec<f64>> = (0..4).map(|j| (0..4).map(|i| a[i][j]).collect()).collect();
        for (b, want) in matvec(&at, &y).iter().zip(c) {
            assert!((b - want).abs() < 1e-12);
        }
    }

    #[test]
    fn eta_update_matches_refactor() {
        let mut a = sample();
        let cols = dense_to_cols(&a);
        let refs: Vec<&[(usize, f64)]> = cols.iter().map(|c| c.as_slice()).collect();
        let mut lu = LuFactor::factor(4, &refs, 0.1).ok().unwrap();
        let entering = [(0, 1.0), (2, -1.0), (3, 2.0)];
        let mut alpha = Vec::new();
        lu.ftran(&entering, &mut alpha);
        lu.push_eta(1, &alpha);
        for row in a.iter_mut() {
            row[1] = 0.0;
        }
        for &(i, v) in &entering {
            a[i][1] = v;
        }
        let mut y = Vec::new();
        lu.ftran(&[(1, 1.0), (2, 1.0)], &mut y);
        for (b, want) in matvec(&a, &y).iter().zip([0.0, 1.0, 1.0, 0.0]) {
            assert!((b - want).abs() < 1e-12);
        }
        let c = [0.5, -1.0, 2.0, 1.0];
        lu.btran(&c, &mut y);
        let at: Vec<Vec<f64>> = (0..4).map(|j| (0..4).map(|i| a[i][j]).collect()).collect();
        for (b, want) in matvec(&at, &y).iter().zip(c) {
            assert!((b - want).abs() < 1e-12);
        }
    }

    #[test]
    fn singular_basis_reported() {
        let a = vec![vec![1.0, 2.0, 0.0], vec![2.0, 4.0, 0.0], vec![0.0, 0.0, 1.0]];
        let cols = dense_to_cols(&a);
        let refs: Vec<&[(usize, f64)]> = cols.iter().map(|c| c.as_slice()).collect();
        match LuFactor::factor(3, &refs, 0.1) {
            Err(s) => {
                assert_eq!(s.positions.len(), 1);
                assert_eq!(s.rows.len(), 1);
            }
            Ok(_) => panic!("expected singular"),
        }
    }
}
