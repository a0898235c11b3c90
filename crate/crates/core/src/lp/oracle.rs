//! Brute-force optimum by vertex enumeration, for checking the simplex on
//! small instances.
//!
//! Every constraint row and every finite variable bound is a hyperplane. Each
//! subset of `n` hyperplanes with a nonsingular system defines a candidate
//! point; the feasible candidates are exactly the vertices. Unboundedness is
//! decided by enumerating extreme rays of the recession cone the same way
//! with subsets of size `n - 1`.

use alloc::vec;
use alloc::vec::Vec;

use super::{LpError, LpProblem, LpSolution, LpStatus, Relation};

/// Upper limit on `C(hyperplanes, n)` accepted by the oracle.
pub const MAX_ORACLE_SUBSETS: u128 = 20_000_000;

const SOLVE_TOL: f64 = 1e-10;
const FEAS_TOL: f64 = 1e-9;

#[derive(Clone, Copy)]
enum Sense {
    Le,
    Ge,
    Eq,
}

struct Hyperplane {
    coef: Vec<f64>,
    rhs: f64,
    sense: Sense,
}

fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
    }
    acc
}

fn hyperplanes(problem: &LpProblem) -> Vec<Hyperplane> {
    let n = problem.num_vars();
    let mut out = Vec::new();
    for c in problem.constraints() {
        let mut coef = vec![0.0; n];
        for &(v, a) in &c.terms {
            coef[v.0] += a;
        }
        let sense = match c.relation {
            Relation::Le => Sense::Le,
            Relation::Ge => Sense::Ge,
            Relation::Eq => Sense::Eq,
        };
        out.push(Hyperplane {
            coef,
            rhs: c.rhs,
            sense,
        });
    }
    for (j, v) in problem.variables().iter().enumerate() {
        let unit = |j: usize| {
            let mut e = vec![0.0; n];
            e[j] = 1.0;
            e
        };
        if v.lower == v.upper {
            out.push(Hyperplane {
                coef: unit(j),
                rhs: v.lower,
                sense: Sense::Eq,
            });
            continue;
        }
        if v.lower.is_finite() {
            out.push(Hyperplane {
                coef: unit(j),
                rhs: v.lower,
                sense: Sense::Ge,
            });
        }
        if v.upper.is_finite() {
            out.push(Hyperplane {
                coef: unit(j),
                rhs: v.upper,
                sense: Sense::Le,
            });
        }
    }
    out
}

fn satisfied(h: &Hyperplane, x: &[f64], rhs: f64) -> bool {
    let lhs: f64 = h.coef.iter().zip(x).map(|(a, b)| a * b).sum();
    let tol = FEAS_TOL * (1.0 + rhs.abs());
    match h.sense {
        Sense::Le => lhs <= rhs + tol,
        Sense::Ge => lhs >= rhs - tol,
        Sense::Eq => (lhs - rhs).abs() <= tol,
    }
}

/// Gaussian elimination with partial pivoting on a square system.
fn solve_square(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &k| a[i][col].abs().total_cmp(&a[k][col].abs()))?;
        if a[piv][col].abs() < SOLVE_TOL {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for r in col + 1..n {
            let f = a[r][col] / a[col][col];
            if f != 0.0 {
                for c in col..n {
                    a[r][c] -= f * a[col][c];
                }
                b[r] -= f * b[col];
            }
        }
    }
    let mut x = vec![0.0; n];
    for r in (0..n).rev() {
        let s: f64 = (r + 1..n).map(|c| a[r][c] * x[c]).sum();
        x[r] = (b[r] - s) / a[r][r];
    }
    Some(x)
}

/// Rank of a set of rows and, when the rank is `n - 1`, a null vector.
fn rank_and_null(rows: &[&[f64]], n: usize) -> (usize, Option<Vec<f64>>) {
    let mut a: Vec<Vec<f64>> = rows.iter().map(|r| r.to_vec()).collect();
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..n {
        if r >= a.len() {
            break;
        }
        let Some(p) = (r..a.len()).max_by(|&i, &k| a[i][c].abs().total_cmp(&a[k][c].abs()))
        else {
            break;
        };
        if a[p][c].abs() < SOLVE_TOL {
            continue;
        }
        a.swap(r, p);
        let pv = a[r][c];
        for v in a[r].iter_mut() {
            *v /= pv;
        }
        for i in 0..a.len() {
            if i != r {
                let f = a[i][c];
                if f != 0.0 {
                    for k in 0..n {
                        a[i][k] -= f * a[r][k];
                    }
                }
            }
        }
        pivots.push(c);
        r += 1;
    }
    let rank = pivots.len();
    if rank + 1 != n {
        return (rank, None);
    }
    let free = (0..n).find(|c| !pivots.contains(c)).expect("one free column");
    let mut d = vec![0.0; n];
    d[free] = 1.0;
    for (i, &pc) in pivots.iter().enumerate() {
        d[pc] = -a[i][free];
    }
    (rank, Some(d))
}

/// Calls `f` with every `k`-subset of `0..n` in lexicographic order; stops
/// early when `f` returns `true`.
fn for_each_subset(n: usize, k: usize, mut f: impl FnMut(&[usize]) -> bool) {
    if k > n {
        return;
    }
    let mut idx: Vec<usize> = (0..k).collect();
    'outer: loop {
        if f(&idx) {
            return;
        }
        let mut i = k;
        while i > 0 {
            i -= 1;
            if idx[i] < n - k + i {
                idx[i] += 1;
                for j in i + 1..k {
                    idx[j] = idx[j - 1] + 1;
                }
                continue 'outer;
            }
        }
        return;
    }
}

/// Exact optimum of a small problem by enumerating all vertices.
pub fn enumerate_vertices_oracle(problem: &LpProblem) -> Result<LpSolution, LpError> {
    let n = problem.num_vars();
    let planes = hyperplanes(problem);
    let h = planes.len();
    let subsets = binomial(h, n) + if n > 0 { binomial(h, n - 1) } else { 0 };
    if subsets > MAX_ORACLE_SUBSETS {
        return Err(LpError::OracleTooLarge { subsets });
    }
    let costs: Vec<f64> = problem.variables().iter().map(|v| v.cost).collect();

    if n == 0 {
        let ok = planes.iter().all(|p| satisfied(p, &[], p.rhs));
        return Ok(if ok {
            LpSolution {
                status: LpStatus::Optimal,
                values: Vec::new(),
                objective: 0.0,
                iterations: 0,
            }
        } else {
            LpSolution::infeasible(0)
        });
    }

    let all_rows: Vec<&[f64]> = planes.iter().map(|p| p.coef.as_slice()).collect();
    let (rank, _) = rank_and_null(&all_rows, n);

    let mut best: Option<(f64, Vec<f64>)> = None;
    for_each_subset(h, n, |set| {
        let a: Vec<Vec<f64>> = set.iter().map(|&i| planes[i].coef.clone()).collect();
        let b: Vec<f64> = set.iter().map(|&i| planes[i].rhs).collect();
        if let Some(x) = solve_square(a, b)
            && planes.iter().all(|p| satisfied(p, &x, p.rhs)) {
                let obj: f64 = costs.iter().zip(&x).map(|(c, v)| c * v).sum();
                if best.as_ref().is_none_or(|(o, _)| obj < *o - 1e-12) {
                    best = Some((obj, x));
                }
            }
        false
    });

    let Some((objective, values)) = best else {
        if rank < n {
            return Err(LpError::OracleNotPointed);
        }
        return Ok(LpSolution::infeasible(0));
    };

    // Improving extreme ray of the recession cone?
    let mut unbounded = false;
    for_each_subset(h, n - 1, |set| {
        let rows: Vec<&[f64]> = set.iter().map(|&i| planes[i].coef.as_slice()).collect();
        if let (_, Some(d)) = rank_and_null(&rows, n) {
            for sign in [1.0, -1.0] {
                let d: Vec<f64> = d.iter().map(|v| v * sign).collect();
                let slope: f64 = costs.iter().zip(&d).map(|(c, v)| c * v).sum();
                if slope < -1e-9 && planes.iter().all(|p| satisfied(p, &d, 0.0)) {
                    unbounded = true;
                    return true;
                }
            }
        }
        false
    });
    if unbounded {
        return Ok(LpSolution::unbounded(0));
    }
    if rank < n {
        return Err(LpError::OracleNotPointed);
    }
    Ok(LpSolution {
        status: LpStatus::Optimal,
        values,
        objective,
        iterations: 0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn subsets_are_enumerated_in_order() {
        let mut seen = Vec::new();
        for_each_subset(4, 2, |s| {
            seen.push((s[0], s[1]));
            false
        });
        assert_eq!(seen, [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)]);
        let mut empty = 0;
        for_each_subset(3, 0, |_| {
            empty += 1;
            false
        });
        assert_eq!(empty, 1);
    }

    #[test]
    fn binomial_values() {
        assert_eq!(binomial(20, 6), 38_760);
        assert_eq!(binomial(5, 0), 1);
        assert_eq!(binomial(3, 4), 0);
    }

    #[test]
    fn lower_bound_row_instance() {
        let mut p = LpProblem::new();
        let x = p.add_var("x", 0.0, 10.0, 1.0).unwrap();
        p.add_constraint("c", [(x, 1.0)], Relation::Ge, 3.0).unwrap();
        let s = enumerate_vertices_oracle(&p).unwrap();
        assert_eq!(s.status, LpStatus::Optimal);
        assert!((s.objective - 3.0).abs() < 1e-12);
        assert!((s.values[0] - 3.0).abs() < 1e-12);
    }

    #[test]
    fn detects_unbounded_ray() {
        let mut p = LpProblem::new();
        let x = p.add_var("x", 0.0, f64::INFINITY, -1.0).unwrap();
        let y = p.add_var("y", 0.0, f64::INFINITY, 0.0).unwrap();
        p.add_constraint("c", [(x, 1.0), (y, -1.0)], Relation::Le, 1.0)
            .unwrap();
        assert_eq!(
            enumerate_vertices_oracle(&p).unwrap().status,
            LpStatus::Unbounded
        );
    }

    #[test]
    fn detects_infeasibility() {
        let mut p = LpProblem::new();
        let x = p.add_var("x", 0.0, 10.0, 0.0).unwrap();
        p.add_constraint("a", [(x, 1.0)], Relation::Ge, 2.0).unwrap();
        p.add_constraint("b", [(x, 1.0)], Relation::Le, 1.0).unwrap();
        assert_eq!(
            enumerate_vertices_oracle(&p).unwrap().status,
            LpStatus::Infeasible
        );
    }

    #[test]
    fn rejects_large_instances() {
        let mut p = LpProblem::new();
        for i in 0..40 {
            p.add_var(alloc::format!("x{i}"), 0.0, 1.0, 1.0).unwrap();
        }
        assert!(matches!(
            enumerate_vertices_oracle(&p),
            Err(LpError::OracleTooLarge { .. })
        ));
    }

    #[test]
    fn free_variable_without_rows_is_not_pointed() {
        let mut p = LpProblem::new();
        let x = p.add_var("x", f64::NEG_INFINITY, f64::INFINITY, 0.0).unwrap();
        let y = p.add_var("y", 0.0, 1.0, 1.0).unwrap();
        p.add_constraint("c", [(y, 1.0)], Relation::Le, 1.0).unwrap();
        let _ = x;
        assert_eq!(
            enumerate_vertices_oracle(&p).unwrap_err(),
            LpError::OracleNotPointed
        );
    }
}
