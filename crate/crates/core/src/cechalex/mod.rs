//! Cech-Alexander levels D(n), their cosimplicial structure, the rows M(n) (x) Omega^i with
//! an explicit contraction for i >= 1, and the double complex with its totalization.

pub mod gadget;

pub use gadget::{homotopy_check, HomotopyReport};

use crate::crystal::derham::{collect_cols, sort_signed};
use crate::crystal::{taylor_transport, CheckReport, Connection, CrystalData, CrystalError, FormSpace, Frame, Lifting, Matrix};
use crate::envelope::{EnvelopeError, EnvelopePresentation};
use crate::pdpoly::{Elem, PdError, PdMap};
use crate::ring::{CochainComplex, CohomologyTable, Reducer, SVec, SpMat, Term, Zpe};
use rayon::prelude::*;
use serde::Serialize;
use std::collections::BTreeMap;
use std::sync::Arc;
use thiserror::Error;

/// Highest level D(n) that may be built.
pub const MAX_LEVEL: usize = 4;

#[derive(Debug, Error)]
pub enum CechError {
    #[error("level {0} exceeds the cap {MAX_LEVEL}")]
    Level(usize),
    #[error("position {1} out of range at level {0}")]
    Position(usize, usize),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error(transparent)]
    Envelope(#[from] EnvelopeError),
    #[error(transparent)]
    Crystal(#[from] CrystalError),
    #[error(transparent)]
    Pd(#[from] PdError),
}

/// A monotone map [source] -> [target], stored as its values.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct CosimplicialMap {
    pub source: usize,
    pub target: usize,
    pub f: Vec<usize>,
}

impl CosimplicialMap {
    pub fn new(source: usize, target: usize, f: Vec<usize>) -> Option<Self> {
        let ok = f.len() == source + 1 && f.iter().all(|&x| x <= target) && f.windows(2).all(|w| w[0] <= w[1]);
        ok.then_some(CosimplicialMap { source, target, f })
    }

    pub fn identity(n: usize) -> Self {
        CosimplicialMap { source: n, target: n, f: (0..=n).collect() }
    }

    /// delta^k : [n] -> [n+1], the injection skipping k.
    pub fn coface(n: usize, k: usize) -> Result<Self, CechError> {
        if k > n + 1 {
            return Err(CechError::Position(n, k));
        }
        Ok(CosimplicialMap { source: n, target: n + 1, f: (0..=n).map(|i| if i < k { i } else { i + 1 }).collect() })
    }

    /// sigma^k : [n] -> [n-1], the surjection repeating k.
    pub fn codegeneracy(n: usize, k: usize) -> Result<Self, CechError> {
        if n == 0 || k >= n {
            return Err(CechError::Position(n, k));
        }
        Ok(CosimplicialMap { source: n, target: n - 1, f: (0..=n).map(|i| if i <= k { i } else { i - 1 }).collect() })
    }

    /// self after inner.
    pub fn compose(&self, inner: &CosimplicialMap) -> CosimplicialMap {
        assert_eq!(inner.target, self.source);
        CosimplicialMap { source: inner.source, target: self.target, f: inner.f.iter().map(|&i| self.f[i]).collect() }
    }

    /// All monotone maps [n] -> [m].
    pub fn all(n: usize, m: usize) -> Vec<CosimplicialMap> {
        let mut out = Vec::new();
        let mut cur = vec![0usize; n + 1];
        fn go(i: usize, lo: usize, m: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
            if i == cur.len() {
                out.push(cur.clone());
                return;
            }
            for v in lo..=m {
                cur[i] = v;
                go(i + 1, v, m, cur, out);
            }
        }
        let mut vals = Vec::new();
        go(0, 0, m, &mut cur, &mut vals);
        out.extend(vals.into_iter().map(|f| CosimplicialMap { source: n, target: m, f }));
        out
    }
}

/// D(n) = D<xi_v(1..n)> for a base envelope D without extension variables.
pub fn build_level(base: &Arc<EnvelopePresentation>, n: usize) -> Result<Arc<EnvelopePresentation>, CechError> {
    if n > MAX_LEVEL {
        return Err(CechError::Level(n));
    }
    if base.next != 0 {
        return Err(CechError::Unsupported("the base envelope already has extension variables".into()));
    }
    if n == 0 {
        return Ok(base.clone());
    }
    let names: Vec<String> = (1..=n)
        .flat_map(|e| base.ambient.base.iter().map(move |v| format!("xi{e}_{}", v.name)))
        .collect();
    Ok(Arc::new(base.regular(&names)?))
}

/// The Cech-Alexander tower of a crystal: levels, coface and codegeneracy maps, rows, columns.
pub struct Cech {
    pub crystal: CrystalData,
    pub levels: Vec<Arc<EnvelopePresentation>>,
    /// `transports[m][k]`: transport from x -> x + xi(k) to x -> x on D(m); None means identity.
    transports: Vec<Vec<Option<Matrix>>>,
}

impl Cech {
    pub fn new(crystal: &CrystalData, max_level: usize) -> Result<Cech, CechError> {
        let base = &crystal.env;
        let levels = (0..=max_level).map(|n| build_level(base, n)).collect::<Result<Vec<_>, _>>()?;
        let mut cech = Cech { crystal: crystal.clone(), levels, transports: Vec::new() };
        let constant = crystal.gamma.iter().all(|g| g.iter().flatten().all(|x| x.is_zero()));
        cech.transports = (0..=max_level)
            .map(|m| {
                (0..=m)
                    .map(|k| {
                        if k == 0 || constant {
                            return Ok(None);
                        }
                        let target = cech.levels[m].clone();
                        let moved = Lifting::new(base.clone(), target.clone(), cech.shifted(m, k))?;
                        let fixed = Lifting::canonical(base.clone(), target)?;
                        Ok(Some(taylor_transport(crystal, &moved, &fixed)?))
                    })
                    .collect::<Result<Vec<_>, CrystalError>>()
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(cech)
    }

    pub fn ring(&self) -> Zpe {
        self.crystal.env.ring
    }

    pub fn max_level(&self) -> usize {
        self.levels.len() - 1
    }

    pub fn nbase(&self) -> usize {
        self.crystal.env.nbase()
    }

    /// Number of differentials dx_v(e) of D(n).
    pub fn ndiff(&self, n: usize) -> usize {
        self.nbase() * (n + 1)
    }

    fn check_level(&self, n: usize) -> Result<(), CechError> {
        if n > self.max_level() {
            Err(CechError::Level(n))
        } else {
            Ok(())
        }
    }

    /// xi_v(e) in D(m), zero for e = 0.
    pub fn xi(&self, m: usize, e: usize, v: usize) -> Elem {
        let a = &self.levels[m].ambient;
        if e == 0 {
            return Elem::zero(a);
        }
        let nb = self.nbase();
        Elem::var(a, nb + self.crystal.env.ncore + (e - 1) * nb + v)
    }

    /// x_v(e) = x_v + xi_v(e) in D(m).
    pub fn slot_var(&self, m: usize, e: usize, v: usize) -> Elem {
        &Elem::var(&self.levels[m].ambient, v) + &self.xi(m, e, v)
    }

    fn shifted(&self, m: usize, e: usize) -> Vec<Elem> {
        (0..self.nbase()).map(|v| self.slot_var(m, e, v)).collect()
    }

    /// The PD ring map D(n) -> D(m) induced by x_v(e) -> x_v(f(e)).
    pub fn ring_map(&self, f: &CosimplicialMap) -> Result<PdMap, CechError> {
        self.check_level(f.source.max(f.target))?;
        let base = &self.crystal.env;
        let dst = &self.levels[f.target];
        let a = &dst.ambient;
        let nb = self.nbase();
        let f0 = f.f[0];
        let shifted = self.shifted(f.target, f0);
        let mut images = shifted.clone();
        for t in 0..base.ncore {
            let g = &base.gens[t];
            let mut moved = Elem::one(a);
            let mut plain = a.unit_mono();
            for v in 0..nb {
                moved = &moved * &shifted[v].pow(g[v]);
                plain[v] = g[v];
            }
            let y = Elem::var(a, nb + t);
            images.push(dst.normal_form(&(&(&y + &moved) - &Elem::term(a, plain, 1))));
        }
        for e in 1..=f.source {
            for v in 0..nb {
                images.push(&self.xi(f.target, f.f[e], v) - &self.xi(f.target, f0, v));
            }
        }
        Ok(PdMap::new(&self.levels[f.source].ambient, a, images)?)
    }

    pub fn apply(&self, f: &CosimplicialMap, a: &Elem) -> Result<Elem, CechError> {
        Ok(self.levels[f.target].normal_form(&self.ring_map(f)?.apply(a)))
    }

    /// The connection of M(n) = M (x) D(n) in the slot frame: Gamma acts on dx_v(0) only.
    pub fn connection(&self, n: usize) -> Connection {
        let env = self.levels[n].clone();
        let nb = self.nbase();
        let mut gamma = vec![Vec::new(); self.ndiff(n)];
        for (v, g) in self.crystal.gamma.iter().enumerate() {
            if g.iter().flatten().any(|x| !x.is_zero()) {
                gamma[v * (n + 1)] = g.iter().map(|row| row.iter().map(|x| x.rebase_pad(&env.ambient)).collect()).collect();
            }
        }
        Connection { env, rank: self.crystal.rank, frame: Frame::Slots { nb, n }, gamma }
    }

    /// Basis of M(n) (x) Omega^k.
    pub fn space(&self, n: usize, k: usize) -> FormSpace {
        FormSpace::new(&self.levels[n], self.crystal.rank, self.ndiff(n), k)
    }

    /// Matrix of c_f (x) Omega^k(f) : M(n) (x) Omega^k -> M(m) (x) Omega^k, restricted to the
    /// forms accepted by `keep`.
    pub fn cosimplicial_matrix(
        &self,
        f: &CosimplicialMap,
        k: usize,
        keep: &(dyn Fn(&[usize]) -> bool + Sync),
    ) -> Result<SpMat, CechError> {
        let (n, m) = (f.source, f.target);
        let map = self.ring_map(f)?;
        let (se, de) = (&self.levels[n], &self.levels[m]);
        let r = se.ring;
        let src = self.space(n, k);
        let dst = self.space(m, k);
        let imgs: Vec<Option<Elem>> = (0..se.basis.len())
            .into_par_iter()
            .map(|b| (se.basis[b].weight + k as u32 <= se.degree).then(|| de.normal_form(&map.apply(&se.basis_elem(b)))))
            .collect();
        let subs: Vec<Option<(bool, usize)>> = src
            .subsets
            .iter()
            .map(|s| {
                if !keep(s) {
                    return None;
                }
                let moved: Vec<usize> = s.iter().map(|&i| (i / (n + 1)) * (m + 1) + f.f[i % (n + 1)]).collect();
                sort_signed(moved).and_then(|(neg, t)| dst.subset_id(&t).map(|id| (neg, id)))
            })
            .collect();
        let t = self.transports[m][f.f[0]].as_ref();
        let rank = self.crystal.rank;
        let cols: Vec<Vec<(usize, u64)>> = src
            .entries
            .par_iter()
            .map(|&(s, j, b)| {
                let mut out = Vec::new();
                let (Some((neg, ts)), Some(a)) = (subs[s], imgs[b].as_ref()) else { return out };
                let sign = if neg { r.neg(1) } else { 1 };
                match t {
                    None => dst.push(de, &mut out, ts, j, a, sign),
                    Some(t) => {
                        for kk in 0..rank {
                            if !t[kk][j].is_zero() {
                                dst.push(de, &mut out, ts, kk, &de.mul(a, &t[kk][j]), sign);
                            }
                        }
                    }
                }
                out
            })
            .collect();
        Ok(collect_cols(r, dst.len(), cols))
    }

    /// Alternating sum of the coface maps M(n) (x) Omega^k -> M(n+1) (x) Omega^k.
    pub fn horizontal(&self, n: usize, k: usize) -> Result<SpMat, CechError> {
        let r = self.ring();
        let mut acc: Option<SpMat> = None;
        for j in 0..=n + 1 {
            let m = self.cosimplicial_matrix(&CosimplicialMap::coface(n, j)?, k, &|_| true)?;
            let m = if j % 2 == 1 { m.scale(r.neg(1)) } else { m };
            acc = Some(match acc {
                None => m,
                Some(a) => a.add(&m),
            });
        }
        Ok(acc.expect("at least two cofaces"))
    }

    /// The contraction M(n+1) (x) Omega^k -> M(n) (x) Omega^k for k >= 1:
    /// s(m w) = -sum_{j = emax(w)}^{n} (-1)^j sigma^j(m w), where emax(w) is the largest slot
    /// of w (s vanishes when that slot is n+1).
    pub fn contraction(&self, n: usize, k: usize) -> Result<SpMat, CechError> {
        if k == 0 {
            return Err(CechError::Unsupported("the contraction needs form degree >= 1".into()));
        }
        let r = self.ring();
        let src = self.space(n + 1, k);
        let dst = self.space(n, k);
        let mut acc = SpMat::new(r, dst.len(), src.len());
        for j in 0..=n {
            let keep = move |s: &[usize]| s.iter().map(|&i| i % (n + 2)).max().unwrap_or(0) <= j;
            let m = self.cosimplicial_matrix(&CosimplicialMap::codegeneracy(n + 1, j)?, k, &keep)?;
            let c = if j % 2 == 0 { r.neg(1) } else { 1 };
            acc = acc.add(&m.scale(c));
        }
        Ok(acc)
    }

    fn term(&self, n: usize, k: usize) -> Term {
        self.space(n, k).term(&self.levels[n])
    }

    /// The row M(0) (x) Omega^k -> ... -> M(levels) (x) Omega^k; k = 0 is the Cech-Alexander
    /// complex.
    pub fn row(&self, k: usize, levels: usize) -> Result<CochainComplex, CechError> {
        self.check_level(levels)?;
        let terms = (0..=levels).map(|n| self.term(n, k)).collect();
        let diffs = (0..levels).map(|n| self.horizontal(n, k)).collect::<Result<_, _>>()?;
        Ok(CochainComplex::new_unchecked(self.ring(), 0, terms, diffs))
    }

    /// The de Rham complex of M(n), forms of degree <= kmax.
    pub fn column(&self, n: usize, kmax: usize) -> Result<CochainComplex, CechError> {
        self.check_level(n)?;
        Ok(self.connection(n).de_rham(kmax).0)
    }

    /// The row for form degree k >= 1 with its contraction, verified on levels below `levels`.
    pub fn omega_row(&self, k: usize, levels: usize) -> Result<OmegaRow, CechError> {
        let complex = self.row(k, levels)?;
        let contraction: Vec<SpMat> = (0..levels).map(|n| self.contraction(n, k)).collect::<Result<_, _>>()?;
        Ok(OmegaRow { form_degree: k, complex, contraction })
    }

    /// Entries (n, m) with n <= levels and n + m <= total.
    pub fn double_complex(&self, levels: usize, total: usize) -> Result<DoubleComplex, CechError> {
        self.check_level(levels)?;
        let r = self.ring();
        let mut terms = Vec::new();
        let mut vertical = Vec::new();
        for n in 0..=levels {
            let kmax = (total - n.min(total)).min(self.ndiff(n));
            let col = self.column(n, kmax)?;
            terms.push(col.terms);
            vertical.push(col.diffs);
        }
        let mut horizontal = Vec::new();
        for n in 0..levels {
            let ms = terms[n].len().min(terms[n + 1].len());
            horizontal.push((0..ms).map(|m| self.horizontal(n, m)).collect::<Result<Vec<_>, _>>()?);
        }
        Ok(DoubleComplex { ring: r, levels, total, terms, horizontal, vertical })
    }

    /// Column n -> column n + 1 under the horizontal differential, with full columns.
    pub fn column_map(&self, n: usize) -> Result<(CochainComplex, CochainComplex, Vec<SpMat>), CechError> {
        self.check_level(n + 1)?;
        let a = self.column(n, self.ndiff(n))?;
        let b = self.column(n + 1, self.ndiff(n + 1))?;
        let f = (0..a.terms.len()).map(|m| self.horizontal(n, m)).collect::<Result<_, _>>()?;
        Ok((a, b, f))
    }
}

/// A row M(.) (x) Omega^k with maps s_n : C^{n+1} -> C^n.
pub struct OmegaRow {
    pub form_degree: usize,
    pub complex: CochainComplex,
    pub contraction: Vec<SpMat>,
}

/// True when every column of m lies in the span of the relations.
pub fn zero_mod(m: &SpMat, rels: &[SVec]) -> bool {
    let red = Reducer::new(m.ring, m.rows, rels.to_vec());
    m.col_vecs().into_iter().all(|c| c.is_empty() || red.contains(c))
}

fn sub(a: &SpMat, b: &SpMat) -> SpMat {
    a.add(&b.scale(a.ring.neg(1)))
}

impl OmegaRow {
    /// d s + s d = id on C^n for every n with a contraction out of C^{n+1}.
    pub fn check_contraction(&self) -> CheckReport {
        let c = &self.complex;
        let r = c.ring;
        for n in 0..self.contraction.len() {
            let t = &c.terms[n];
            let mut h = self.contraction[n].mul(&c.diffs[n]);
            if n > 0 {
                h = h.add(&c.diffs[n - 1].mul(&self.contraction[n - 1]));
            }
            let defect = sub(&h, &SpMat::identity(r, t.rank));
            if !zero_mod(&defect, &t.rels) {
                let (i, j) = *defect.entries.keys().next().expect("nonzero defect");
                return CheckReport { pass: false, witness: Some(format!("ds + sd - id at level {n}: entry ({i},{j})")) };
            }
        }
        CheckReport { pass: true, witness: None }
    }
}

/// First-quadrant double complex M^{n,m} = M(n) (x) Omega^m.
#[derive(Clone, Debug)]
pub struct DoubleComplex {
    pub ring: Zpe,
    pub levels: usize,
    pub total: usize,
    /// `terms[n][m]`.
    pub terms: Vec<Vec<Term>>,
    /// `horizontal[n][m]` : (n, m) -> (n + 1, m).
    pub horizontal: Vec<Vec<SpMat>>,
    /// `vertical[n][m]` : (n, m) -> (n, m + 1).
    pub vertical: Vec<Vec<SpMat>>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct DoubleComplexCheck {
    pub horizontal_squares_to_zero: bool,
    pub vertical_squares_to_zero: bool,
    pub squares_commute: bool,
}

impl DoubleComplexCheck {
    pub fn pass(&self) -> bool {
        self.horizontal_squares_to_zero && self.vertical_squares_to_zero && self.squares_commute
    }
}

impl DoubleComplex {
    fn has(&self, n: usize, m: usize) -> bool {
        n < self.terms.len() && m < self.terms[n].len()
    }

    pub fn check(&self) -> DoubleComplexCheck {
        let mut hz = true;
        let mut vz = true;
        let mut cm = true;
        for n in 0..self.terms.len() {
            for m in 0..self.terms[n].len() {
                if n + 2 <= self.levels && m < self.horizontal[n].len() && m < self.horizontal[n + 1].len() {
                    hz &= zero_mod(&self.horizontal[n + 1][m].mul(&self.horizontal[n][m]), &self.terms[n + 2][m].rels);
                }
                if m + 2 < self.terms[n].len() {
                    vz &= zero_mod(&self.vertical[n][m + 1].mul(&self.vertical[n][m]), &self.terms[n][m + 2].rels);
                }
                if n < self.levels && self.has(n + 1, m + 1) && m + 1 < self.horizontal[n].len() {
                    let a = self.vertical[n + 1][m].mul(&self.horizontal[n][m]);
                    let b = self.horizontal[n][m + 1].mul(&self.vertical[n][m]);
                    cm &= zero_mod(&sub(&a, &b), &self.terms[n + 1][m + 1].rels);
                }
            }
        }
        DoubleComplexCheck { horizontal_squares_to_zero: hz, vertical_squares_to_zero: vz, squares_commute: cm }
    }

    /// Blocks (n, k - n) of total degree k with their offsets.
    fn blocks(&self, k: usize) -> Vec<(usize, usize, usize)> {
        let mut out = Vec::new();
        let mut off = 0;
        for n in 0..=k.min(self.levels) {
            if self.has(n, k - n) {
                out.push((n, k - n, off));
                off += self.terms[n][k - n].rank;
            }
        }
        out
    }

    /// Total complex in degrees 0..=total, differential horizontal + (-1)^n vertical.
    pub fn totalize(&self) -> CochainComplex {
        let r = self.ring;
        let mut terms = Vec::new();
        for k in 0..=self.total {
            let mut weights = Vec::new();
            let mut rels = Vec::new();
            for (n, m, off) in self.blocks(k) {
                let t = &self.terms[n][m];
                weights.extend(t.weights.clone().expect("weighted terms"));
                rels.extend(t.rels.iter().map(|v| v.iter().map(|&(i, x)| (i + off, x)).collect::<SVec>()));
            }
            terms.push(Term::weighted(weights, rels));
        }
        let mut diffs = Vec::new();
        for k in 0..self.total {
            let dst = self.blocks(k + 1);
            let at = |n: usize, m: usize| dst.iter().find(|b| b.0 == n && b.1 == m).map(|b| b.2);
            let mut d = SpMat::new(r, terms[k + 1].rank, terms[k].rank);
            for (n, m, off) in self.blocks(k) {
                if let (Some(h), Some(o2)) = (self.horizontal.get(n).and_then(|row| row.get(m)), at(n + 1, m)) {
                    for (&(i, j), &x) in &h.entries {
                        d.set(o2 + i, off + j, x);
                    }
                }
                if let (Some(v), Some(o2)) = (self.vertical[n].get(m), at(n, m + 1)) {
                    for (&(i, j), &x) in &v.entries {
                        d.set(o2 + i, off + j, if n % 2 == 1 { r.neg(x) } else { x });
                    }
                }
            }
            diffs.push(d);
        }
        CochainComplex::new_unchecked(r, 0, terms, diffs)
    }

    /// Column n as a complex.
    pub fn column(&self, n: usize) -> CochainComplex {
        CochainComplex::new_unchecked(self.ring, 0, self.terms[n].clone(), self.vertical[n].clone())
    }

    /// Row m as a complex (levels while the entries exist).
    pub fn row(&self, m: usize) -> CochainComplex {
        let n_max = (0..self.terms.len()).take_while(|&n| self.has(n, m)).count();
        let terms = (0..n_max).map(|n| self.terms[n][m].clone()).collect();
        let diffs = (0..n_max.saturating_sub(1)).map(|n| self.horizontal[n][m].clone()).collect();
        CochainComplex::new_unchecked(self.ring, 0, terms, diffs)
    }

    fn projection(&self, target: &CochainComplex, pick: impl Fn(usize) -> (usize, usize)) -> Vec<SpMat> {
        (0..=self.total)
            .map(|k| {
                let blocks = self.blocks(k);
                let cols: usize = blocks.iter().map(|b| self.terms[b.0][b.1].rank).sum();
                let rows = target.rank(k as i32);
                let mut m = SpMat::new(self.ring, rows, cols);
                let (n0, m0) = pick(k);
                if let Some(&(_, _, off)) = blocks.iter().find(|b| b.0 == n0 && b.1 == m0) {
                    for i in 0..rows {
                        m.set(i, off + i, 1);
                    }
                }
                m
            })
            .collect()
    }

    /// Tot -> column 0 (the columns n >= 1 form a subcomplex).
    pub fn project_to_column0(&self) -> (CochainComplex, Vec<SpMat>) {
        let c = self.column(0);
        let p = self.projection(&c, |k| (0, k));
        (c, p)
    }

    /// Tot -> row 0 (the rows m >= 1 form a subcomplex).
    pub fn project_to_row0(&self) -> (CochainComplex, Vec<SpMat>) {
        let c = self.row(0);
        let p = self.projection(&c, |k| (k, 0));
        (c, p)
    }

    /// Text dump: each differential block preceded by "# h n m" or "# v n m".
    pub fn dump(&self) -> String {
        let mut s = String::new();
        for (n, row) in self.horizontal.iter().enumerate() {
            for (m, h) in row.iter().enumerate() {
                s.push_str(&format!("# h {n} {m}\n{}", h.dump()));
            }
        }
        for (n, col) in self.vertical.iter().enumerate() {
            for (m, v) in col.iter().enumerate() {
                s.push_str(&format!("# v {n} {m}\n{}", v.dump()));
            }
        }
        s
    }
}

/// Effect of a chain map on H^k, measured by lengths (log_p of orders).
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct InducedMap {
    pub degree: i32,
    pub source_length: u32,
    pub target_length: u32,
    pub image_length: u32,
}

impl InducedMap {
    pub fn is_zero(&self) -> bool {
        self.image_length == 0
    }

    pub fn is_iso(&self) -> bool {
        self.image_length == self.source_length && self.image_length == self.target_length
    }
}

/// log_p of the order of the weight <= wmax part of H^k.
pub fn length_upto(t: &CohomologyTable, k: i32, wmax: Option<u32>) -> u32 {
    t.summands(k).iter().filter(|s| wmax.is_none_or(|w| s.weight.is_none_or(|x| x <= w))).map(|s| s.exponent).sum()
}

/// Image lengths of H^k(f) for k <= kmax from the long exact sequence of the cone:
/// len H^k(cone) = len H^k(B) - r_k + len H^{k+1}(A) - r_{k+1}.
/// With `wmax`, only weights <= wmax are counted (f must preserve weights).
pub fn induced_maps(a: &CochainComplex, b: &CochainComplex, f: &[SpMat], kmax: i32, wmax: Option<u32>) -> Vec<InducedMap> {
    let kmax = kmax.min(a.hi());
    let cone = a.cone(b, f);
    let ha = a.cohomology_in(a.lo..=kmax, wmax);
    let hb = b.cohomology_in(a.lo - 1..=kmax, wmax);
    let hc = cone.cohomology_in(a.lo - 1..=kmax - 1, wmax);
    let len = |t: &CohomologyTable, k: i32| length_upto(t, k, wmax);
    let mut out = Vec::new();
    let mut prev = 0i64;
    for k in a.lo..=kmax {
        let r = len(&hb, k - 1) as i64 + len(&ha, k) as i64 - len(&hc, k - 1) as i64 - prev;
        out.push(InducedMap {
            degree: k,
            source_length: len(&ha, k),
            target_length: len(&hb, k),
            image_length: r.max(0) as u32,
        });
        prev = r;
    }
    out
}

/// D(n) -> Omega^1_{D(n)/D} -> ..., the forms in the xi-differentials only.
pub fn relative_de_rham(base: &Arc<EnvelopePresentation>, n: usize) -> Result<CochainComplex, CechError> {
    let env = build_level(base, n)?;
    let nb = base.nbase();
    let conn = Connection { env, rank: 1, frame: Frame::Relative { nb }, gamma: Vec::new() };
    Ok(conn.de_rham(nb * n).0)
}

/// Elementary divisors per weight of D itself, up to weight wmax.
pub fn structure_by_weight(env: &EnvelopePresentation, wmax: u32) -> BTreeMap<u32, Vec<u32>> {
    let weights = env.basis.iter().map(|b| b.weight).collect();
    let c = CochainComplex::new_unchecked(env.ring, 0, vec![Term::weighted(weights, env.torsion_relations())], Vec::new());
    c.cohomology().by_weight(0, wmax)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct PoincareReport {
    pub level: usize,
    pub stable_weight: u32,
    pub h0: BTreeMap<u32, Vec<u32>>,
    pub expected_h0: BTreeMap<u32, Vec<u32>>,
    /// Degrees >= 1 with a nonzero class of weight <= stable_weight.
    pub nonzero_higher: Vec<i32>,
    pub pass: bool,
}

/// H^0 = D and H^{>=1} = 0 for the relative de Rham complex of D(n) over D, in weights
/// <= d - w_max.
pub fn poincare_check(base: &Arc<EnvelopePresentation>, n: usize) -> Result<PoincareReport, CechError> {
    let c = relative_de_rham(base, n)?;
    let table: CohomologyTable = c.cohomology();
    let stable = base.degree.saturating_sub(base.max_weight());
    let h0 = table.by_weight(0, stable);
    let expected_h0 = structure_by_weight(base, stable);
    let nonzero_higher: Vec<i32> =
        (1..=c.hi()).filter(|&k| !table.divisors_upto(k, stable).is_empty()).collect();
    let pass = h0 == expected_h0 && nonzero_higher.is_empty();
    Ok(PoincareReport { level: n, stable_weight: stable, h0, expected_h0, nonzero_higher, pass })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct DiagonalReport {
    pub rank: usize,
    pub conormal_free: bool,
    pub gamma2_vanishes: bool,
    pub products_vanish: bool,
    pub matches_differentials: bool,
    pub pass: bool,
}

/// Class of a in I/I^[2] for the diagonal ideal I of D(1): coefficients of xi_v, or None when
/// a has a term outside I.
pub fn conormal_class(cech: &Cech, a: &Elem) -> Option<Vec<Elem>> {
    let d1 = &cech.levels[1];
    let nb = cech.nbase();
    let start = nb + cech.crystal.env.ncore;
    let mut out = vec![Elem::zero(&d1.ambient); nb];
    for (m, &c) in d1.normal_form(a).terms() {
        let deg: u32 = m[start..start + nb].iter().sum();
        match deg {
            0 => return None,
            1 => {
                let v = (0..nb).find(|&v| m[start + v] == 1).expect("degree one");
                let mut mm = m.clone();
                mm[start + v] = 0;
                out[v].add_term(mm, c);
            }
            _ => {}
        }
    }
    Some(out.iter().map(|x| d1.normal_form(x)).collect())
}

/// I/I^[2] for the diagonal of D(1) is free on the xi_v, and a(x + xi) - a(x) has class
/// sum_v d_v(a) xi_v.
pub fn diagonal_omega_check(base: &Arc<EnvelopePresentation>) -> Result<DiagonalReport, CechError> {
    let cech = Cech::new(&CrystalData::constant(base.clone()), 1)?;
    let d1 = &cech.levels[1];
    let nb = cech.nbase();
    let start = nb + base.ncore;
    let xi_deg = |m: &[u32]| -> u32 { m[start..start + nb].iter().sum() };
    let top = base.degree.saturating_sub(1);
    let slice: Vec<usize> = (0..d1.basis.len()).filter(|&i| xi_deg(&d1.basis[i].mono) == 1).collect();
    let mut in_slice = vec![false; d1.basis.len()];
    for &i in &slice {
        in_slice[i] = true;
    }
    let rels: Vec<SVec> =
        d1.torsion_relations().into_iter().filter(|r| r.iter().all(|&(i, _)| in_slice[i])).collect();
    let mut pos = vec![usize::MAX; d1.basis.len()];
    for (a, &i) in slice.iter().enumerate() {
        pos[i] = a;
    }
    let weights = slice.iter().map(|&i| d1.basis[i].weight - 1).collect();
    let rels = rels.iter().map(|r| r.iter().map(|&(i, x)| (pos[i], x)).collect()).collect();
    let got = CochainComplex::new_unchecked(base.ring, 0, vec![Term::weighted(weights, rels)], Vec::new())
        .cohomology()
        .by_weight(0, top);
    let mut want = structure_by_weight(base, top);
    for v in want.values_mut() {
        *v = v.iter().flat_map(|&x| std::iter::repeat_n(x, nb)).collect();
        v.sort_unstable();
    }
    let conormal_free = got == want;

    let zero = |c: &Option<Vec<Elem>>| c.as_ref().is_some_and(|v| v.iter().all(|x| x.is_zero()));
    let gamma2_vanishes = (0..nb).all(|v| {
        let g = d1.gamma(&cech.xi(1, 1, v), 2).expect("xi is a PD variable");
        base.degree < 2 || zero(&conormal_class(&cech, &g))
    });
    let products_vanish = (0..nb).all(|v| {
        (v + 1..nb).all(|w| zero(&conormal_class(&cech, &d1.mul(&cech.xi(1, 1, v), &cech.xi(1, 1, w)))))
    });
    let d0 = CosimplicialMap::coface(0, 0)?;
    let d1m = CosimplicialMap::coface(0, 1)?;
    let map0 = cech.ring_map(&d0)?;
    let map1 = cech.ring_map(&d1m)?;
    let matches_differentials = (0..base.basis.len()).into_par_iter().all(|b| {
        if base.basis[b].weight > top + 1 || base.basis[b].weight == 0 {
            return true;
        }
        let a = base.basis_elem(b);
        let diff = d1.normal_form(&(&map0.apply(&a) - &map1.apply(&a)));
        let Some(class) = conormal_class(&cech, &diff) else { return false };
        let da = base.d(&a);
        (0..nb).all(|v| class[v] == d1.normal_form(&da[v].rebase_pad(&d1.ambient)))
    });
    let pass = conormal_free && gamma2_vanishes && products_vanish && matches_differentials;
    Ok(DiagonalReport { rank: nb, conormal_free, gamma2_vanishes, products_vanish, matches_differentials, pass })
}
