//! Sparse LU factorization of simplex bases with product-form updates.
//!
//! `B` is square; its columns are indexed by basis position and its rows by
//! constraint row. Pivots are chosen column-singleton first, then
//! row-singleton, then by Markowitz cost under threshold partial pivoting.

use alloc::vec;
use alloc::vec::Vec;

const DROP_TOL: f64 = 1e-14;
const SINGULAR_TOL: f64 = 1e-11;
const THRESHOLD: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) struct Singular;

#[derive(Debug, Clone, Default)]
pub(crate) struct LuFactor {
    m: usize,
    pivot_row: Vec<usize>,
    pivot_col: Vec<usize>,
    pivot_val: Vec<f64>,
    l_start: Vec<usize>,
    l_row: Vec<usize>,
    l_val: Vec<f64>,
    u_start: Vec<usize>,
    u_col: Vec<usize>,
    u_val: Vec<f64>,
}

impl LuFactor {
    /// Factorizes the `m x m` matrix whose column `p` is `columns[p]`,
    /// given as `(row, value)` pairs.
    pub(crate) fn factorize(m: usize, columns: &[Vec<(usize, f64)>]) -> Result<Self, Singular> {
        debug_assert_eq!(columns.len(), m);
        let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); m];
        let mut cols: Vec<Vec<usize>> = vec![Vec::new(); m];
        for (c, col) in columns.iter().enumerate() {
            for &(r, v) in col {
                if v != 0.0 {
                    rows[r].push((c, v));
                    cols[c].push(r);
                }
            }
        }
        let mut row_done = vec![false; m];
        let mut col_done = vec![false; m];
        let mut col_singletons: Vec<usize> = (0..m).rev().filter(|&c| cols[c].len() == 1).collect();
        let mut row_singletons: Vec<usize> = (0..m).rev().filter(|&r| rows[r].len() == 1).collect();
        let mut slot = vec![usize::MAX; m];

        let mut f = LuFactor {
            m,
            ..Default::default()
        };
        f.l_start.push(0);
        f.u_start.push(0);

        for _ in 0..m {
            let (r, c) = Self::choose_pivot(
                &rows,
                &cols,
                &col_done,
                &mut col_singletons,
                &mut row_singletons,
            )?;
            let piv = rows[r]
                .iter()
                .find(|e| e.0 == c)
                .map(|e| e.1)
                .ok_or(Singular)?;
            if piv.abs() < SINGULAR_TOL {
                return Err(Singular);
            }

            // The pivot row becomes a row of U.
            for &(j, v) in &rows[r] {
                if j != c {
                    f.u_col.push(j);
                    f.u_val.push(v);
                }
            }
            f.u_start.push(f.u_col.len());

            // Drop row r from every column it touches.
            for &(j, _) in &rows[r] {
                let list = &mut cols[j];
                if let Some(k) = list.iter().position(|&i| i == r) {
                    list.swap_remove(k);
                }
                if j != c && !col_done[j] && list.len() == 1 {
                    col_singletons.push(j);
                }
            }

            let pivot_row_entries = core::mem::take(&mut rows[r]);
            let others = core::mem::take(&mut cols[c]);
            for &i in &others {
                let row = &mut rows[i];
                let pos = row.iter().position(|e| e.0 == c).ok_or(Singular)?;
                let l = row[pos].1 / piv;
                row.swap_remove(pos);
                f.l_row.push(i);
                f.l_val.push(l);
                if pivot_row_entries.len() > 1 {
                    for (k, &(j, _)) in row.iter().enumerate() {
                        slot[j] = k;
                    }
                    let mut removed = false;
                    for &(j, u) in &pivot_row_entries {
                        if j == c {
                            continue;
                        }
                        let k = slot[j];
                        if k != usize::MAX {
                            row[k].1 -= l * u;
                            if row[k].1.abs() < DROP_TOL {
                                row[k].1 = 0.0;
                                removed = true;
                            }
                        } else {
                            row.push((j, -l * u));
                            cols[j].push(i);
                        }
                    }
                    for &(j, _) in row.iter() {
                        slot[j] = usize::MAX;
                    }
                    if removed {
                        row.retain(|e| e.1 != 0.0);
                        // Columns that lost row i through cancellation.
                        for &(j, _) in &pivot_row_entries {
                            if j != c && !row.iter().any(|e| e.0 == j) {
                                let list = &mut cols[j];
                                if let Some(k) = list.iter().position(|&x| x == i) {
                                    list.swap_remove(k);
                                    if list.len() == 1 {
                                        col_singletons.push(j);
                                    }
                                }
                            }
                        }
                    }
                }
                if rows[i].len() == 1 {
                    row_singletons.push(i);
                }
            }
            f.l_start.push(f.l_row.len());

            row_done[r] = true;
            col_done[c] = true;
            f.pivot_row.push(r);
            f.pivot_col.push(c);
            f.pivot_val.push(piv);
        }
        debug_assert!(row_done.iter().all(|&d| d));
        Ok(f)
    }

    fn choose_pivot(
        rows: &[Vec<(usize, f64)>],
        cols: &[Vec<usize>],
        col_done: &[bool],
        col_singletons: &mut Vec<usize>,
        row_singletons: &mut Vec<usize>,
    ) -> Result<(usize, usize), Singular> {
        while let Some(c) = col_singletons.pop() {
            if !col_done[c] && cols[c].len() == 1 {
                let r = cols[c][0];
                let v = rows[r].iter().find(|e| e.0 == c).map_or(0.0, |e| e.1);
                if v.abs() >= SINGULAR_TOL {
                    return Ok((r, c));
                }
            }
        }
        while let Some(r) = row_singletons.pop() {
            if rows[r].len() == 1 {
                let (c, v) = rows[r][0];
                if col_done[c] {
                    continue;
                }
                let col_max = cols[c]
                    .iter()
                    .map(|&i| entry(rows, i, c).abs())
                    .fold(0.0, f64::max);
                if v.abs() >= THRESHOLD * col_max && v.abs() >= SINGULAR_TOL {
                    return Ok((r, c));
                }
            }
        }
        // Markowitz search over the sparsest active columns.
        let mut best: Option<(usize, f64, usize, usize)> = None;
        let mut min_count = usize::MAX;
        for (c, list) in cols.iter().enumerate() {
            if !col_done[c] && !list.is_empty() && list.len() < min_count {
                min_count = list.len();
            }
        }
        if min_count == usize::MAX {
            return Err(Singular);
        }
        let mut examined = 0;
        for count in min_count..=min_count + 2 {
            for (c, list) in cols.iter().enumerate() {
                if col_done[c] || list.len() != count {
                    continue;
                }
                let col_max = list
                    .iter()
                    .map(|&i| entry(rows, i, c).abs())
                    .fold(0.0, f64::max);
                if col_max < SINGULAR_TOL {
                    continue;
                }
                for &i in list {
                    let v = entry(rows, i, c).abs();
                    if v < THRESHOLD * col_max {
                        continue;
                    }
                    let cost = (rows[i].len() - 1) * (count - 1);
                    let better = match best {
                        None => true,
                        Some((bc, bv, br, bcol)) => {
                            cost < bc
                                || (cost == bc && v > bv)
                                || (cost == bc && v == bv && (i, c) < (br, bcol))
                        }
                    };
                    if better {
                        best = Some((cost, v, i, c));
                    }
                }
                examined += 1;
                if examined >= 8 {
                    break;
                }
            }
            if best.is_some() {
                break;
            }
        }
        best.map(|(_, _, r, c)| (r, c)).ok_or(Singular)
    }

    /// Solves `B x = b`; `b` is indexed by row and is consumed, `x` by position.
    pub(crate) fn solve(&self, b: &mut [f64], x: &mut [f64]) {
        for k in 0..self.m {
            let br = b[self.pivot_row[k]];
            if br != 0.0 {
                for e in self.l_start[k]..self.l_start[k + 1] {
                    b[self.l_row[e]] -= self.l_val[e] * br;
                }
            }
        }
        for k in (0..self.m).rev() {
            let mut s = b[self.pivot_row[k]];
            for e in self.u_start[k]..self.u_start[k + 1] {
                s -= self.u_val[e] * x[self.u_col[e]];
            }
            x[self.pivot_col[k]] = s / self.pivot_val[k];
        }
    }

    /// Solves `B^T y = c`; `c` is indexed by position and is consumed, `y` by row.
    pub(crate) fn solve_transpose(&self, c: &mut [f64], y: &mut [f64]) {
        for k in 0..self.m {
            let z = c[self.pivot_col[k]] / self.pivot_val[k];
            y[self.pivot_row[k]] = z;
            if z != 0.0 {
                for e in self.u_start[k]..self.u_start[k + 1] {
                    c[self.u_col[e]] -= self.u_val[e] * z;
                }
            }
        }
        for k in (0..self.m).rev() {
            let mut s = 0.0;
            for e in self.l_start[k]..self.l_start[k + 1] {
                s += self.l_val[e] * y[self.l_row[e]];
            }
            y[self.pivot_row[k]] -= s;
        }
    }
}

fn entry(rows: &[Vec<(usize, f64)>], i: usize, c: usize) -> f64 {
    rows[i].iter().find(|e| e.0 == c).map_or(0.0, |e| e.1)
}

/// Column eta from one basis change: position `pos` now holds a column whose
/// representation in the previous basis was `alpha`.
#[derive(Debug, Clone)]
struct Eta {
    pos: usize,
    pivot: f64,
    entries: Vec<(usize, f64)>,
}

/// `B^{-1}` as an LU factorization followed by a sequence of etas.
#[derive(Debug, Clone, Default)]
pub(crate) struct BasisFactor {
    lu: LuFactor,
    etas: Vec<Eta>,
}

impl BasisFactor {
    pub(crate) fn new(m: usize, columns: &[Vec<(usize, f64)>]) -> Result<Self, Singular> {
        Ok(Self {
            lu: LuFactor::factorize(m, columns)?,
            etas: Vec::new(),
        })
    }

    pub(crate) fn updates(&self) -> usize {
        self.etas.len()
    }

    /// `x = B^{-1} b` with `b` indexed by row (consumed) and `x` by position.
    pub(crate) fn ftran(&self, b: &mut [f64], x: &mut [f64]) {
        self.lu.solve(b, x);
        for eta in &self.etas {
            let xr = x[eta.pos];
            if xr == 0.0 {
                continue;
            }
            let xr = xr / eta.pivot;
            x[eta.pos] = xr;
            for &(i, a) in &eta.entries {
                x[i] -= a * xr;
            }
        }
    }

    /// `y = B^{-T} c` with `c` indexed by position (consumed) and `y` by row.
    pub(crate) fn btran(&self, c: &mut [f64], y: &mut [f64]) {
        for eta in self.etas.iter().rev() {
            let mut s = c[eta.pos];
            for &(i, a) in &eta.entries {
                s -= a * c[i];
            }
            c[eta.pos] = s / eta.pivot;
        }
        self.lu.solve_transpose(c, y);
    }

    /// Records that position `pos` was replaced by a column with
    /// representation `alpha` in the current basis.
    pub(crate) fn update(&mut self, pos: usize, alpha: &[f64]) {
        let entries = alpha
            .iter()
            .enumerate()
            .filter(|&(i, &a)| i != pos && a.abs() > DROP_TOL)
            .map(|(i, &a)| (i, a))
            .collect();
        self.etas.push(Eta {
            pos,
            pivot: alpha[pos],
            entries,
        });
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dense_mul(cols: &[Vec<(usize, f64)>], x: &[f64], m: usize) -> Vec<f64> {
        let mut out = vec![0.0; m];
        for (p, col) in cols.iter().enumerate() {
            for &(r, v) in col {
                out[r] += v * x[p];
            }
        }
        out
    }

    fn sample() -> Vec<Vec<(usize, f64)>> {
        vec![
            vec![(0, 2.0), (2, 1.0)],
            vec![(1, 1.0)],
            vec![(0, 1.0), (1, 3.0), (2, 4.0), (3, 1.0)],
            vec![(2, -1.0), (3, 2.0)],
        ]
    }

    #[test]
    fn solve_and_transpose_round_trip() {
        let cols = sample();
        let lu = LuFactor::factorize(4, &cols).unwrap();
        let want = [1.0, -2.0, 0.5, 3.0];
        let mut b = dense_mul(&cols, &want, 4);
        let mut x = vec![0.0; 4];
        lu.solve(&mut b, &mut x);
        for (a, e) in x.iter().zip(want) {
            assert!((a - e).abs() < 1e-12);
        }
        // B^T y = c: check c_p = col_p . y
        let y_want = [0.25, 1.0, -1.0, 2.0];
        let mut c: Vec<f64> = cols
            .iter()
            .map(|col| col.iter().map(|&(r, v)| v * y_want[r]).sum())
            .collect();
        let mut y = vec![0.0; 4];
        lu.solve_transpose(&mut c, &mut y);
        for (a, e) in y.iter().zip(y_want) {
            assert!((a - e).abs() < 1e-12);
        }
    }

    #[test]
    fn singular_matrix_is_rejected() {
        let cols = vec![vec![(0, 1.0), (1, 1.0)], vec![(0, 2.0), (1, 2.0)]];
        assert_eq!(LuFactor::factorize(2, &cols).unwrap_err(), Singular);
    }

    #[test]
    fn eta_update_matches_refactorization() {
        let mut cols = sample();
        let mut bf = BasisFactor::new(4, &cols).unwrap();
        let entering = vec![(1, 1.0), (3, -1.0)];
        let mut b = vec![0.0; 4];
        for &(r, v) in &entering {
            b[r] = v;
        }
        let mut alpha = vec![0.0; 4];
        bf.ftran(&mut b, &mut alpha);
        bf.update(1, &alpha);
        cols[1] = entering;
        let want = [0.3, 1.5, -2.0, 0.75];
        let mut rhs = dense_mul(&cols, &want, 4);
        let mut x = vec![0.0; 4];
        bf.ftran(&mut rhs, &mut x);
        for (a, e) in x.iter().zip(want) {
            assert!((a - e).abs() < 1e-12);
        }
        let y_want = [1.0, 2.0, 3.0, -4.0];
        let mut c: Vec<f64> = cols
            .iter()
            .map(|col| col.iter().map(|&(r, v)| v * y_want[r]).sum())
            .collect();
        let mut y = vec![0.0; 4];
        bf.btran(&mut c, &mut y);
        for (a, e) in y.iter().zip(y_want) {
            assert!((a - e).abs() < 1e-12);
        }
    }
}
