//! The cosimplicial module with M_n free on e_0..e_n and M(f)(e_i) = e_f(i), together with
//! its homotopy h : M -> Hom(Delta[1], M) and the induced contraction.

use super::CosimplicialMap;
use serde::Serialize;

/// alpha^n_j : [n] -> [1], with alpha(i) = 0 exactly when i < j (0 <= j <= n + 1).
pub fn alpha(n: usize, j: usize) -> Vec<usize> {
    (0..=n).map(|i| usize::from(i >= j)).collect()
}

/// The index j of a monotone map beta : [n] -> [1] written as alpha^n_j.
pub fn alpha_index(beta: &[usize]) -> usize {
    beta.iter().filter(|&&b| b == 0).count()
}

/// h_n(e_i)(alpha^n_j): e_i when i < j, zero otherwise.
pub fn h(i: usize, j: usize) -> Option<usize> {
    (i < j).then_some(i)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct HomotopyReport {
    pub max_level: usize,
    pub maps_checked: usize,
    pub cosimplicial: bool,
    pub ev0_zero: bool,
    pub ev1_identity: bool,
    pub contraction: bool,
    pub pass: bool,
}

/// d^n : C^n -> C^{n+1}, d(e_i) = sum_k (-1)^k e_{delta^k(i)}, as integer columns.
pub fn differential(n: usize) -> Vec<Vec<i64>> {
    let mut m = vec![vec![0i64; n + 1]; n + 2];
    for k in 0..=n + 1 {
        let d = CosimplicialMap::coface(n, k).expect("valid position");
        let s = if k % 2 == 0 { 1 } else { -1 };
        for i in 0..=n {
            m[d.f[i]][i] += s;
        }
    }
    m
}

/// s : C^{n+1} -> C^n, s(e_i) = -sum_{j=i}^{n} (-1)^j e_i and s(e_{n+1}) = 0.
pub fn contraction(n: usize) -> Vec<Vec<i64>> {
    let mut m = vec![vec![0i64; n + 2]; n + 1];
    for i in 0..=n {
        m[i][i] = -(i..=n).map(|j| if j % 2 == 0 { 1 } else { -1 }).sum::<i64>();
    }
    m
}

fn mat_mul(a: &[Vec<i64>], b: &[Vec<i64>]) -> Vec<Vec<i64>> {
    let inner = b.len();
    let cols = b.first().map_or(0, |r| r.len());
    a.iter().map(|row| (0..cols).map(|j| (0..inner).map(|k| row[k] * b[k][j]).sum()).collect()).collect()
}

/// Checks on all levels n, m <= max_level: h is cosimplicial, ev_0 h = 0, ev_1 h = id (ev_0
/// evaluates at the constant map to 1, which is alpha_0; ev_1 at alpha_{n+1}), and ds + sd = id
/// on C^n for n < max_level.
pub fn homotopy_check(max_level: usize) -> HomotopyReport {
    let mut maps_checked = 0;
    let mut cosimplicial = true;
    for n in 0..=max_level {
        for m in 0..=max_level {
            for f in CosimplicialMap::all(n, m) {
                maps_checked += 1;
                for i in 0..=n {
                    for j in 0..=m + 1 {
                        let pulled = alpha_index(&f.f.iter().map(|&x| alpha(m, j)[x]).collect::<Vec<_>>());
                        let lhs = h(f.f[i], j);
                        let rhs = h(i, pulled).map(|x| f.f[x]);
                        cosimplicial &= lhs == rhs;
                    }
                }
            }
        }
    }
    let ev0_zero = (0..=max_level).all(|n| (0..=n).all(|i| h(i, 0).is_none()));
    let ev1_identity = (0..=max_level).all(|n| (0..=n).all(|i| h(i, n + 1) == Some(i)));
    let mut contraction_ok = true;
    for n in 0..max_level {
        let mut sum = mat_mul(&contraction(n), &differential(n));
        if n > 0 {
            let other = mat_mul(&differential(n - 1), &contraction(n - 1));
            for (a, b) in sum.iter_mut().zip(other) {
                for (x, y) in a.iter_mut().zip(b) {
                    *x += y;
                }
            }
        }
        contraction_ok &= (0..=n).all(|i| (0..=n).all(|j| sum[i][j] == i64::from(i == j)));
    }
    let pass = cosimplicial && ev0_zero && ev1_identity && contraction_ok;
    HomotopyReport { max_level, maps_checked, cosimplicial, ev0_zero, ev1_identity, contraction: contraction_ok, pass }
}
