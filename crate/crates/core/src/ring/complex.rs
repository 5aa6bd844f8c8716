use super::howell::Howell;
use super::mat::{svec_from_dense, svec_to_dense, Mat, SVec, SpMat};
use super::snf::{snf_dense, SnfDense, Want};
use super::zpe::Zpe;
use rayon::prelude::*;
use serde::Serialize;
use std::collections::{BTreeMap, BTreeSet};
use std::ops::RangeInclusive;
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ComplexError {
    #[error("differential {0} has shape {1}x{2}, expected {3}x{4}")]
    Shape(usize, usize, usize, usize, usize),
    #[error("d o d does not vanish after differential {0}")]
    NotComplex(usize),
    #[error("differential {0} does not preserve relations")]
    Relations(usize),
    #[error("derived reduction needs 1 <= e' < e (got e'={0}, e={1})")]
    Precision(u32, u32),
}

/// A finitely presented Z/p^e-module (Z/p^e)^rank / span(rels), with optional weights
/// on the generators.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Term {
    pub rank: usize,
    pub rels: Vec<SVec>,
    pub weights: Option<Vec<u32>>,
}

impl Term {
    pub fn free(rank: usize) -> Term {
        Term { rank, rels: Vec::new(), weights: None }
    }
    pub fn weighted(weights: Vec<u32>, rels: Vec<SVec>) -> Term {
        Term { rank: weights.len(), rels, weights: Some(weights) }
    }
}

/// Bounded cochain complex; `diffs[k]` maps `terms[k]` to `terms[k+1]`, and `terms[0]`
/// sits in degree `lo`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CochainComplex {
    pub ring: Zpe,
    pub lo: i32,
    pub terms: Vec<Term>,
    pub diffs: Vec<SpMat>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Summand {
    /// The summand is Z/p^exponent.
    pub exponent: u32,
    pub weight: Option<u32>,
    pub rep: SVec,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CohomologyTable {
    pub p: u64,
    pub e: u32,
    pub degrees: BTreeMap<i32, Vec<Summand>>,
}

impl CohomologyTable {
    pub fn empty(ring: Zpe) -> CohomologyTable {
        CohomologyTable { p: ring.p(), e: ring.e(), degrees: BTreeMap::new() }
    }

    pub fn summands(&self, deg: i32) -> &[Summand] {
        self.degrees.get(&deg).map(|v| v.as_slice()).unwrap_or(&[])
    }

    /// Sorted exponents a_j of H^deg = (+) Z/p^a_j.
    pub fn divisors(&self, deg: i32) -> Vec<u32> {
        let mut v: Vec<u32> = self.summands(deg).iter().map(|s| s.exponent).collect();
        v.sort_unstable();
        v
    }

    /// Exponents restricted to summands of weight <= wmax.
    pub fn divisors_upto(&self, deg: i32, wmax: u32) -> Vec<u32> {
        let mut v: Vec<u32> = self
            .summands(deg)
            .iter()
            .filter(|s| s.weight.is_none_or(|w| w <= wmax))
            .map(|s| s.exponent)
            .collect();
        v.sort_unstable();
        v
    }

    /// Exponents per weight, for summands of weight <= wmax.
    pub fn by_weight(&self, deg: i32, wmax: u32) -> BTreeMap<u32, Vec<u32>> {
        let mut m: BTreeMap<u32, Vec<u32>> = BTreeMap::new();
        for s in self.summands(deg) {
            if let Some(w) = s.weight {
                if w <= wmax {
                    m.entry(w).or_default().push(s.exponent);
                }
            }
        }
        for v in m.values_mut() {
            v.sort_unstable();
        }
        m
    }

    pub fn is_zero(&self, deg: i32) -> bool {
        self.summands(deg).is_empty()
    }

    /// log_p of the order of H^deg.
    pub fn length(&self, deg: i32) -> u32 {
        self.summands(deg).iter().map(|s| s.exponent).sum()
    }

    pub fn nonzero_degrees(&self) -> Vec<i32> {
        self.degrees.iter().filter(|(_, v)| !v.is_empty()).map(|(&k, _)| k).collect()
    }
}

impl CochainComplex {
    pub fn new(ring: Zpe, lo: i32, terms: Vec<Term>, diffs: Vec<SpMat>) -> Result<Self, ComplexError> {
        let c = CochainComplex { ring, lo, terms, diffs };
        c.validate()?;
        Ok(c)
    }

    /// Builds without the d o d check; used internally where it holds by construction.
    pub fn new_unchecked(ring: Zpe, lo: i32, terms: Vec<Term>, diffs: Vec<SpMat>) -> Self {
        CochainComplex { ring, lo, terms, diffs }
    }

    pub fn hi(&self) -> i32 {
        self.lo + self.terms.len() as i32 - 1
    }

    pub fn term(&self, deg: i32) -> Option<&Term> {
        if deg < self.lo {
            return None;
        }
        self.terms.get((deg - self.lo) as usize)
    }

    pub fn rank(&self, deg: i32) -> usize {
        self.term(deg).map_or(0, |t| t.rank)
    }

    pub fn validate(&self) -> Result<(), ComplexError> {
        if self.terms.is_empty() {
            return Ok(());
        }
        if self.diffs.len() + 1 != self.terms.len() {
            return Err(ComplexError::Shape(self.diffs.len(), 0, 0, self.terms.len(), 0));
        }
        for (k, d) in self.diffs.iter().enumerate() {
            let (r, c) = (self.terms[k + 1].rank, self.terms[k].rank);
            if d.rows != r || d.cols != c {
                return Err(ComplexError::Shape(k, d.rows, d.cols, r, c));
            }
        }
        let howells: Vec<Howell> = self
            .terms
            .iter()
            .map(|t| Howell::new(self.ring, t.rank, t.rels.clone()))
            .collect();
        for (k, d) in self.diffs.iter().enumerate() {
            for rel in &self.terms[k].rels {
                if !howells[k + 1].contains(d.mul_svec(rel)) {
                    return Err(ComplexError::Relations(k));
                }
            }
        }
        for k in 0..self.diffs.len().saturating_sub(1) {
            let dd = self.diffs[k + 1].mul(&self.diffs[k]);
            for col in dd.col_vecs() {
                if !col.is_empty() && !howells[k + 2].contains(col) {
                    return Err(ComplexError::NotComplex(k));
                }
            }
        }
        Ok(())
    }

    fn homogeneous(&self) -> bool {
        if self.terms.iter().any(|t| t.weights.is_none()) {
            return false;
        }
        let w = |k: usize, i: usize| self.terms[k].weights.as_ref().unwrap()[i];
        for (k, d) in self.diffs.iter().enumerate() {
            for &(i, j) in d.entries.keys() {
                if w(k + 1, i) != w(k, j) {
                    return false;
                }
            }
        }
        for (k, t) in self.terms.iter().enumerate() {
            for r in &t.rels {
                if r.iter().any(|&(i, _)| w(k, i) != w(k, r[0].0)) {
                    return false;
                }
            }
        }
        true
    }

    /// The weight-w part of a homogeneous complex, with index maps back to the full terms.
    fn weight_block(&self, w: u32) -> (CochainComplex, Vec<Vec<usize>>) {
        let mut maps = Vec::new();
        let mut terms = Vec::new();
        for t in &self.terms {
            let ws = t.weights.as_ref().unwrap();
            let idx: Vec<usize> = (0..t.rank).filter(|&i| ws[i] == w).collect();
            let mut inv = vec![usize::MAX; t.rank];
            for (a, &i) in idx.iter().enumerate() {
                inv[i] = a;
            }
            let rels = t
                .rels
                .iter()
                .filter(|r| ws[r[0].0] == w)
                .map(|r| r.iter().map(|&(i, x)| (inv[i], x)).collect())
                .collect();
            terms.push(Term { rank: idx.len(), rels, weights: Some(vec![w; idx.len()]) });
            maps.push((idx, inv));
        }
        let mut diffs = Vec::new();
        for (k, d) in self.diffs.iter().enumerate() {
            let mut m = SpMat::new(self.ring, terms[k + 1].rank, terms[k].rank);
            for (&(i, j), &x) in &d.entries {
                let (a, b) = (maps[k + 1].1[i], maps[k].1[j]);
                if a != usize::MAX && b != usize::MAX {
                    m.entries.insert((a, b), x);
                }
            }
            diffs.push(m);
        }
        (
            CochainComplex { ring: self.ring, lo: self.lo, terms, diffs },
            maps.into_iter().map(|m| m.0).collect(),
        )
    }

    fn weights_present(&self) -> BTreeSet<u32> {
        self.terms.iter().flat_map(|t| t.weights.as_ref().unwrap().iter().copied()).collect()
    }

    /// H^i for every degree, split by weight when the complex is homogeneous.
    pub fn cohomology(&self) -> CohomologyTable {
        self.cohomology_in(self.lo..=self.hi(), None)
    }

    /// H^i for i in `degs` only; with `wmax`, weight blocks above it are skipped.
    pub fn cohomology_in(&self, degs: RangeInclusive<i32>, wmax: Option<u32>) -> CohomologyTable {
        let mut table = CohomologyTable::empty(self.ring);
        let ks: Vec<usize> = (0..self.terms.len()).filter(|&k| degs.contains(&(self.lo + k as i32))).collect();
        if ks.is_empty() {
            return table;
        }
        for &k in &ks {
            table.degrees.insert(self.lo + k as i32, Vec::new());
        }
        if self.homogeneous() {
            let ws: Vec<u32> = self.weights_present().into_iter().filter(|&w| wmax.is_none_or(|m| w <= m)).collect();
            let parts: Vec<(u32, Vec<Vec<Summand>>, Vec<Vec<usize>>)> = ws
                .par_iter()
                .map(|&w| {
                    let (blk, maps) = self.weight_block(w);
                    (w, ks.iter().map(|&k| blk.cohomology_at(k)).collect(), maps)
                })
                .collect();
            for (w, per_deg, maps) in parts {
                for (&k, list) in ks.iter().zip(per_deg) {
                    let ent = table.degrees.get_mut(&(self.lo + k as i32)).unwrap();
                    for s in list {
                        let rep = s.rep.iter().map(|&(i, x)| (maps[k][i], x)).collect();
                        ent.push(Summand { exponent: s.exponent, weight: Some(w), rep });
                    }
                }
            }
        } else {
            for &k in &ks {
                table.degrees.insert(self.lo + k as i32, self.cohomology_at(k));
            }
        }
        table
    }

    fn cohomology_at(&self, k: usize) -> Vec<Summand> {
        let r = self.ring;
        let e = r.e();
        let n = self.terms[k].rank;
        if n == 0 {
            return Vec::new();
        }
        let next = self.terms.get(k + 1);
        let rnext = next.map_or(0, |t| t.rels.len());
        let nrows = next.map_or(0, |t| t.rank);
        // M = [A | G_next]
        let mut m = Mat::zeros(r, nrows, n + rnext);
        if k < self.diffs.len() {
            for (&(i, j), &x) in &self.diffs[k].entries {
                m.set(i, j, x);
            }
        }
        if let Some(t) = next {
            for (l, rel) in t.rels.iter().enumerate() {
                for &(i, x) in rel {
                    m.set(i, n + l, x);
                }
            }
        }
        let sm = snf_dense(m, Want { u: false, uinv: false, v: true, vinv: true });
        let ncol = n + rnext;
        let kgens: Vec<(usize, u32)> =
            (0..ncol).map(|j| (j, sm.val_at(j))).filter(|&(_, b)| b >= 1).collect();
        if kgens.is_empty() {
            return Vec::new();
        }
        let vmat = sm.v.as_ref().unwrap();
        let vinv = sm.vinv.as_ref().unwrap();
        // W' generators in R^{n + rnext}
        let mut wgens: Vec<Vec<u64>> = Vec::new();
        let mut wsmall: Vec<SVec> = Vec::new();
        let solver = (rnext > 0).then(|| RelSolver::new(r, nrows, &next.unwrap().rels));
        let push_w = |w: SVec, wgens: &mut Vec<Vec<u64>>| {
            let mut full = svec_to_dense(&w, n);
            if let Some(s) = solver.as_ref() {
                let aw = if k < self.diffs.len() { self.diffs[k].mul_svec(&w) } else { Vec::new() };
                let t: Vec<u64> = svec_to_dense(&aw, nrows).iter().map(|&x| r.neg(x)).collect();
                let sol = s.solve(&t).expect("differential does not preserve relations");
                full.extend(sol);
            }
            wgens.push(full);
        };
        if k > 0 {
            for col in self.diffs[k - 1].col_vecs() {
                if !col.is_empty() {
                    wsmall.push(col.clone());
                    push_w(col, &mut wgens);
                }
            }
        }
        for rel in &self.terms[k].rels {
            wsmall.push(rel.clone());
            push_w(rel.clone(), &mut wgens);
        }
        if let Some(s) = solver.as_ref() {
            for g in s.kernel() {
                let mut full = vec![0; n];
                full.extend(g);
                wgens.push(full);
            }
        }
        let kk = kgens.len();
        let mut rel = Mat::zeros(r, kk, kk + wgens.len());
        for (a, &(_, b)) in kgens.iter().enumerate() {
            rel.set(a, a, r.p_pow(b));
        }
        for (c, w) in wgens.iter().enumerate() {
            let y = vinv.mul_vec(w);
            for (a, &(j, b)) in kgens.iter().enumerate() {
                let sh = e - b;
                let yj = y[j];
                debug_assert!(r.val(yj) >= sh, "coboundary outside the kernel");
                rel.set(a, kk + c, r.div_p_pow(yj, sh) % r.q());
            }
        }
        let sr = snf_dense(rel, Want { u: false, uinv: true, v: false, vinv: false });
        let uinv = sr.uinv.as_ref().unwrap();
        let howell = Howell::new(r, n, wsmall);
        let mut out = Vec::new();
        for a in 0..kk {
            let ex = sr.val_at(a);
            if ex == 0 {
                continue;
            }
            let mut z = vec![0u64; n];
            for (l, &(j, b)) in kgens.iter().enumerate() {
                let coef = r.mul(uinv.get(l, a), r.p_pow(e - b));
                if coef == 0 {
                    continue;
                }
                for i in 0..n {
                    let vij = vmat.get(i, j);
                    if vij != 0 {
                        z[i] = r.add(z[i], r.mul(coef, vij));
                    }
                }
            }
            let rep = howell.reduce(svec_from_dense(&z));
            out.push(Summand { exponent: ex, weight: None, rep });
        }
        out.sort_by_key(|s| s.exponent);
        out
    }

    /// Total derived reduction c (x)^L_{Z/p^e} Z/p^e2, via the periodic free resolution of
    /// Z/p^e2; degrees lo-1 ..= hi are reported.
    pub fn derived_mod(&self, e2: u32) -> Result<CohomologyTable, ComplexError> {
        let r = self.ring;
        let e = r.e();
        if e2 == 0 || e2 >= e {
            return Err(ComplexError::Precision(e2, e));
        }
        let lo = self.lo;
        let hi = self.hi();
        let tlo = lo - 2;
        // Tot^t = (+)_{k>=0} c^{t+k} (x) P_{-k}
        let parts = |t: i32| -> Vec<(i32, usize)> {
            (0..)
                .map(|k: i32| (t + k, k as usize))
                .take_while(|&(i, _)| i <= hi)
                .filter(|&(i, _)| i >= lo)
                .collect()
        };
        let mut terms = Vec::new();
        let mut offsets: Vec<BTreeMap<(i32, usize), usize>> = Vec::new();
        for t in tlo..=hi {
            let mut off = BTreeMap::new();
            let mut rank = 0;
            let mut rels = Vec::new();
            let mut weights = Vec::new();
            let mut all_w = true;
            for (i, k) in parts(t) {
                let ct = self.term(i).unwrap();
                off.insert((i, k), rank);
                for rl in &ct.rels {
                    rels.push(rl.iter().map(|&(a, x)| (a + rank, x)).collect());
                }
                match &ct.weights {
                    Some(w) => weights.extend_from_slice(w),
                    None => all_w = false,
                }
                rank += ct.rank;
            }
            terms.push(Term { rank, rels, weights: all_w.then_some(weights) });
            offsets.push(off);
        }
        let mut diffs = Vec::new();
        for t in tlo..hi {
            let ti = (t - tlo) as usize;
            let mut m = SpMat::new(r, terms[ti + 1].rank, terms[ti].rank);
            for (&(i, k), &src) in &offsets[ti] {
                // d_c (x) 1
                if i < hi {
                    if let Some(&dst) = offsets[ti + 1].get(&(i + 1, k)) {
                        let d = &self.diffs[(i - lo) as usize];
                        for (&(a, b), &x) in &d.entries {
                            m.add_to(dst + a, src + b, x);
                        }
                    }
                }
                // (-1)^i 1 (x) d_P
                if k >= 1 {
                    if let Some(&dst) = offsets[ti + 1].get(&(i, k - 1)) {
                        let f = if k % 2 == 1 { r.p_pow(e2) } else { r.p_pow(e - e2) };
                        let f = if i.rem_euclid(2) == 1 { r.neg(f) } else { f };
                        if f != 0 {
                            for a in 0..self.term(i).unwrap().rank {
                                m.add_to(dst + a, src + a, f);
                            }
                        }
                    }
                }
            }
            diffs.push(m);
        }
        let tot = CochainComplex { ring: r, lo: tlo, terms, diffs };
        let mut table = tot.cohomology();
        table.degrees.remove(&tlo);
        Ok(table)
    }

    /// c (x)^L_{Z/p^e} Z/p.
    pub fn derived_mod_p(&self) -> Result<CohomologyTable, ComplexError> {
        self.derived_mod(1)
    }

    /// The same complex read over Z/p^e2 for e2 <= e (coefficients reduced).
    pub fn reduce_precision(&self, e2: u32) -> CochainComplex {
        let r2 = self.ring.with_e(e2);
        let red = |v: &SVec| -> SVec {
            v.iter().map(|&(i, x)| (i, x % r2.q())).filter(|x| x.1 != 0).collect()
        };
        let terms = self
            .terms
            .iter()
            .map(|t| Term {
                rank: t.rank,
                rels: t.rels.iter().map(red).filter(|v| !v.is_empty()).collect(),
                weights: t.weights.clone(),
            })
            .collect();
        let diffs = self
            .diffs
            .iter()
            .map(|d| {
                let mut m = SpMat::new(r2, d.rows, d.cols);
                for (&(i, j), &x) in &d.entries {
                    m.set(i, j, x % r2.q());
                }
                m
            })
            .collect();
        CochainComplex { ring: r2, lo: self.lo, terms, diffs }
    }

    /// log_p of the order of the degree-deg term.
    pub fn term_length(&self, deg: i32) -> u32 {
        let Some(t) = self.term(deg) else { return 0 };
        let mut m = Mat::zeros(self.ring, t.rank, t.rels.len());
        for (j, rel) in t.rels.iter().enumerate() {
            for &(i, x) in rel {
                m.set(i, j, x);
            }
        }
        let s = snf_dense(m, Want::NONE);
        (0..t.rank).map(|i| s.val_at(i)).sum()
    }

    /// Mapping cone of f: self -> b, with cone^k = self^{k+1} (+) b^k and
    /// d(a, x) = (-d a, f a + d x). `f[k]` maps the terms in degree `lo + k`.
    pub fn cone(&self, b: &CochainComplex, f: &[SpMat]) -> CochainComplex {
        assert_eq!(self.lo, b.lo, "cone needs aligned complexes");
        let r = self.ring;
        let lo = self.lo - 1;
        let hi = self.hi().max(b.hi());
        let empty = Term::weighted(Vec::new(), Vec::new());
        let part = |c: &CochainComplex, deg: i32| c.term(deg).cloned().unwrap_or_else(|| empty.clone());
        let mut terms = Vec::new();
        for deg in lo..=hi {
            let (ta, tb) = (part(self, deg + 1), part(b, deg));
            let n = ta.rank;
            let mut rels = ta.rels.clone();
            rels.extend(tb.rels.iter().map(|v| v.iter().map(|&(i, x)| (i + n, x)).collect()));
            let weights = match (&ta.weights, &tb.weights) {
                (Some(x), Some(y)) => Some(x.iter().chain(y).copied().collect()),
                _ if ta.rank + tb.rank == 0 => Some(Vec::new()),
                _ => None,
            };
            terms.push(Term { rank: n + tb.rank, rels, weights });
        }
        fn diff_of(c: &CochainComplex, deg: i32) -> Option<&SpMat> {
            if deg < c.lo || deg >= c.hi() {
                None
            } else {
                c.diffs.get((deg - c.lo) as usize)
            }
        }
        let mut diffs = Vec::new();
        for deg in lo..hi {
            let k = (deg - lo) as usize;
            let (src, dst) = (&terms[k], &terms[k + 1]);
            let na = part(self, deg + 1).rank;
            let na2 = part(self, deg + 2).rank;
            let mut m = SpMat::new(r, dst.rank, src.rank);
            if let Some(da) = diff_of(self, deg + 1) {
                for (&(i, j), &x) in &da.entries {
                    m.set(i, j, r.neg(x));
                }
            }
            if deg + 1 >= self.lo {
                if let Some(fk) = f.get((deg + 1 - self.lo) as usize) {
                    for (&(i, j), &x) in &fk.entries {
                        if na2 + i < dst.rank {
                            m.set(na2 + i, j, x);
                        }
                    }
                }
            }
            if let Some(db) = diff_of(b, deg) {
                for (&(i, j), &x) in &db.entries {
                    m.set(na2 + i, na + j, x);
                }
            }
            diffs.push(m);
        }
        CochainComplex { ring: r, lo, terms, diffs }
    }

    /// Matrix dump of every differential, each preceded by "# d<degree>".
    pub fn dump(&self) -> String {
        let mut s = String::new();
        for (k, d) in self.diffs.iter().enumerate() {
            s.push_str(&format!("# d{}\n", self.lo + k as i32));
            s.push_str(&d.dump());
        }
        s
    }
}

/// Solves G s = t for G given by columns, over Z/p^e.
pub struct RelSolver {
    ring: Zpe,
    snf: SnfDense,
    ncols: usize,
}

impl RelSolver {
    pub fn new(ring: Zpe, rows: usize, cols: &[SVec]) -> RelSolver {
        let mut m = Mat::zeros(ring, rows, cols.len());
        for (j, c) in cols.iter().enumerate() {
            for &(i, x) in c {
                m.set(i, j, x);
            }
        }
        let snf = snf_dense(m, Want { u: true, uinv: false, v: true, vinv: false });
        RelSolver { ring, snf, ncols: cols.len() }
    }

    pub fn solve(&self, t: &[u64]) -> Option<Vec<u64>> {
        let r = self.ring;
        let ut = self.snf.u.as_ref().unwrap().mul_vec(t);
        let mut y = vec![0u64; self.ncols];
        for (i, &x) in ut.iter().enumerate() {
            let b = if i < self.ncols { self.snf.val_at(i) } else { r.e() };
            if x == 0 {
                continue;
            }
            if r.val(x) < b {
                return None;
            }
            if i < self.ncols {
                y[i] = r.div_p_pow(x, b) % r.q();
            }
        }
        Some(self.snf.v.as_ref().unwrap().mul_vec(&y))
    }

    pub fn kernel(&self) -> Vec<Vec<u64>> {
        let r = self.ring;
        let v = self.snf.v.as_ref().unwrap();
        (0..self.ncols)
            .filter_map(|j| {
                let b = self.snf.val_at(j);
                (b >= 1).then(|| v.col(j).iter().map(|&x| r.mul(x, r.p_pow(r.e() - b))).collect())
            })
            .collect()
    }
}

/// Generators of the kernel of a dense matrix.
pub fn kernel_gens(m: &Mat) -> Vec<Vec<u64>> {
    let r = m.ring;
    let s = snf_dense(m.clone(), Want { u: false, uinv: false, v: true, vinv: false });
    let v = s.v.as_ref().unwrap();
    (0..m.cols)
        .filter_map(|j| {
            let b = s.val_at(j);
            (b >= 1).then(|| v.col(j).iter().map(|&x| r.mul(x, r.p_pow(r.e() - b))).collect())
        })
        .collect()
}

/// Structure and representatives of the subquotient span(a) / span(b), with b inside span(a).
pub fn subquotient(ring: Zpe, n: usize, a: &[SVec], b: &[SVec]) -> Vec<Summand> {
    // present span(a) as R^k / syz(a) and express b in those generators
    let r = ring;
    if a.is_empty() {
        return Vec::new();
    }
    let amat = {
        let mut m = Mat::zeros(r, n, a.len());
        for (j, c) in a.iter().enumerate() {
            for &(i, x) in c {
                m.set(i, j, x);
            }
        }
        m
    };
    let solver = RelSolver::new(r, n, a);
    let syz = kernel_gens(&amat);
    let mut cols: Vec<Vec<u64>> = syz;
    for w in b {
        let t = svec_to_dense(w, n);
        cols.push(solver.solve(&t).expect("b is not inside span(a)"));
    }
    let k = a.len();
    let mut rel = Mat::zeros(r, k, cols.len());
    for (j, c) in cols.iter().enumerate() {
        for i in 0..k {
            rel.set(i, j, c[i]);
        }
    }
    let sr = snf_dense(rel, Want { u: false, uinv: true, v: false, vinv: false });
    let uinv = sr.uinv.as_ref().unwrap();
    let howell = Howell::new(r, n, b.to_vec());
    let mut out = Vec::new();
    for j in 0..k {
        let ex = sr.val_at(j);
        if ex == 0 {
            continue;
        }
        let coef: Vec<u64> = (0..k).map(|l| uinv.get(l, j)).collect();
        let z = amat.mul_vec(&coef);
        let rep = howell.reduce(svec_from_dense(&z));
        if rep.is_empty() && ex == r.e() {
            continue;
        }
        out.push(Summand { exponent: ex, weight: None, rep });
    }
    out.sort_by_key(|s| s.exponent);
    out
}
