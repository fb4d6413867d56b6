//! LU factorization for power-flow Jacobians.
//!
//! Jacobians have a structurally symmetric pattern with a nonzero diagonal,
//! so a fill-reducing ordering plus a symbolic elimination gives the exact
//! fill pattern up front and the numeric phase runs without pivoting. A
//! tiny pivot sends the system to dense partial-pivoting LU instead.

use std::collections::BTreeSet;

/// Pivots smaller than this relative to the largest entry abandon the
/// sparse path.
const SPARSE_PIVOT_REL: f64 = 1e-8;
/// Dense pivots smaller than this relative to the largest entry are singular.
const SINGULAR_REL: f64 = 1e-11;

/// Minimum-degree elimination order of an undirected graph, ties to the
/// lowest node.
pub fn min_degree_order(adj: &[Vec<usize>]) -> Vec<usize> {
    let n = adj.len();
    let mut g: Vec<BTreeSet<usize>> = adj
        .iter()
        .enumerate()
        .map(|(i, a)| a.iter().copied().filter(|&j| j != i).collect())
        .collect();
    let mut alive = vec![true; n];
    let mut order = Vec::with_capacity(n);
    for _ in 0..n {
        let v = (0..n)
            .filter(|&i| alive[i])
            .min_by_key(|&i| (g[i].len(), i))
            .expect("node remains");
        alive[v] = false;
        let nb: Vec<usize> = std::mem::take(&mut g[v]).into_iter().collect();
        for &a in &nb {
            g[a].remove(&v);
            for &b in &nb {
                if a != b {
                    g[a].insert(b);
                }
            }
        }
        order.push(v);
    }
    order
}

/// Filled upper pattern of a structurally symmetric matrix whose variables
/// are already in elimination order.
#[derive(Debug, Clone)]
pub struct SymbolicLu {
    pub m: usize,
    /// `upper[k]`: columns `j > k` with a nonzero in row `k` after fill,
    /// ascending. By symmetry also the rows below `k` in column `k`.
    pub upper: Vec<Vec<usize>>,
}

impl SymbolicLu {
    pub fn new(adj: &[Vec<usize>]) -> SymbolicLu {
        let m = adj.len();
        let mut upper: Vec<BTreeSet<usize>> = adj
            .iter()
            .enumerate()
            .map(|(k, a)| a.iter().copied().filter(|&j| j > k).collect())
            .collect();
        for k in 0..m {
            if let Some(&parent) = upper[k].iter().next() {
                let rest: Vec<usize> = upper[k].iter().copied().skip(1).collect();
                upper[parent].extend(rest);
            }
        }
        SymbolicLu {
            m,
            upper: upper.into_iter().map(|s| s.into_iter().collect()).collect(),
        }
    }

    pub fn fill_nonzeros(&self) -> usize {
        self.m + 2 * self.upper.iter().map(Vec::len).sum::<usize>()
    }
}

/// Column index of the pivot that failed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SingularPivot(pub usize);

/// Solves `A x = b` for `A` given as triplets (duplicates are summed).
pub fn solve(sym: &SymbolicLu, triplets: &[(usize, usize, f64)], b: &[f64]) -> Result<Vec<f64>, SingularPivot> {
    let m = sym.m;
    let mut a = vec![0.0; m * m];
    let mut amax = 0.0f64;
    for &(i, j, v) in triplets {
        a[i * m + j] += v;
    }
    for &(i, j, _) in triplets {
        amax = amax.max(a[i * m + j].abs());
    }
    if amax == 0.0 {
        return Err(SingularPivot(0));
    }
    if let Some(x) = sparse_factor_solve(sym, &mut a, b, amax) {
        return Ok(x);
    }
    a.iter_mut().for_each(|v| *v = 0.0);
    for &(i, j, v) in triplets {
        a[i * m + j] += v;
    }
    dense_solve(m, a, b, amax)
}

fn sparse_factor_solve(sym: &SymbolicLu, a: &mut [f64], b: &[f64], amax: f64) -> Option<Vec<f64>> {
    let m = sym.m;
    for k in 0..m {
        let p = a[k * m + k];
        if !(p.abs() > SPARSE_PIVOT_REL * amax) {
            return None;
        }
        let up = &sym.upper[k];
        for &i in up {
            let l = a[i * m + k] / p;
            a[i * m + k] = l;
            if l != 0.0 {
                for &j in up {
                    a[i * m + j] -= l * a[k * m + j];
                }
            }
        }
    }
    let mut x = b.to_vec();
    for k in 0..m {
        let xk = x[k];
        if xk != 0.0 {
            for &i in &sym.upper[k] {
                x[i] -= a[i * m + k] * xk;
            }
        }
    }
    for k in (0..m).rev() {
        let mut s = x[k];
        for &j in &sym.upper[k] {
            s -= a[k * m + j] * x[j];
        }
        x[k] = s / a[k * m + k];
    }
    x.iter().all(|v| v.is_finite()).then_some(x)
}

fn dense_solve(m: usize, mut a: Vec<f64>, b: &[f64], amax: f64) -> Result<Vec<f64>, SingularPivot> {
    let mut x = b.to_vec();
    for k in 0..m {
        let (mut piv, mut best) = (k, a[k * m + k].abs());
        for i in k + 1..m {
            let v = a[i * m + k].abs();
            if v > best {
                piv = i;
                best = v;
            }
        }
        if !(best > SINGULAR_REL * amax) {
            return Err(SingularPivot(k));
        }
        if piv != k {
            for j in 0..m {
                a.swap(k * m + j, piv * m + j);
            }
            x.swap(k, piv);
        }
        let p = a[k * m + k];
        for i in k + 1..m {
            let l = a[i * m + k] / p;
            if l != 0.0 {
                a[i * m + k] = 0.0;
                for j in k + 1..m {
                    a[i * m + j] -= l * a[k * m + j];
                }
                x[i] -= l * x[k];
            }
        }
    }
    for k in (0..m).rev() {
        let mut s = x[k];
        for j in k + 1..m {
            s -= a[k * m + j] * x[j];
        }
        x[k] = s / a[k * m + k];
    }
    Ok(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn tridiag(m: usize) -> Vec<Vec<usize>> {
        (0..m)
            .map(|i| {
                let mut v = vec![i];
                if i > 0 {
                    v.push(i - 1);
                }
                if i + 1 < m {
                    v.push(i + 1);
                }
                v
            })
            .collect()
    }

    #[test]
    fn star_graph_orders_leaves_first() {
        let adj = vec![vec![1, 2, 3], vec![0], vec![0], vec![0]];
        assert_eq!(min_degree_order(&adj), vec![1, 2, 0, 3]);
    }

    #[test]
    fn arrow_fill_is_captured() {
        // Hub first: eliminating it fills the whole trailing block.
        let adj = vec![vec![1, 2, 3], vec![0], vec![0], vec![0]];
        let s = SymbolicLu::new(&adj);
        assert_eq!(s.upper[0], vec![1, 2, 3]);
        assert_eq!(s.upper[1], vec![2, 3]);
        assert_eq!(s.upper[2], vec![3]);
    }

    #[test]
    fn zero_pivot_falls_back_to_dense() {
        // [[0, 1], [1, 0]] has a zero leading pivot but is nonsingular.
        let s = SymbolicLu::new(&tridiag(2));
        let x = solve(&s, &[(0, 1, 1.0), (1, 0, 1.0)], &[3.0, 4.0]).unwrap();
        assert_eq!(x, vec![4.0, 3.0]);
    }

    #[test]
    fn singular_is_reported() {
        let s = SymbolicLu::new(&tridiag(2));
        let t = [(0, 0, 1.0), (0, 1, 2.0), (1, 0, 2.0), (1, 1, 4.0)];
        assert_eq!(solve(&s, &t, &[1.0, 1.0]), Err(SingularPivot(1)));
    }

    proptest! {
        #[test]
        fn matches_dense_on_random_tridiagonal(
            diag in proptest::collection::vec(5.0f64..10.0, 8),
            off in proptest::collection::vec(-2.0f64..2.0, 14),
            b in proptest::collection::vec(-1.0f64..1.0, 8),
        ) {
            let s = SymbolicLu::new(&tridiag(8));
            let mut t = Vec::new();
            for i in 0..8 {
                t.push((i, i, diag[i]));
                if i + 1 < 8 {
                    t.push((i, i + 1, off[2 * i]));
                    t.push((i + 1, i, off[2 * i + 1]));
                }
            }
            let x = solve(&s, &t, &b).unwrap();
            let mut r = b.clone();
            for &(i, j, v) in &t {
                r[i] -= v * x[j];
            }
            prop_assert!(r.iter().all(|v| v.abs() < 1e-12));
        }
    }
}
