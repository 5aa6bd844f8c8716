//! Free modules with connection over an envelope and their truncated de Rham complexes.

use crate::envelope::EnvelopePresentation;
use crate::pdpoly::Elem;
use crate::ring::{CochainComplex, SVec, SpMat, Term};
use rayon::prelude::*;
use std::collections::HashMap;
use std::sync::Arc;

/// r x r matrix of elements, indexed `[row][col]`.
pub type Matrix = Vec<Vec<Elem>>;

/// Coordinates used for differentials.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Frame {
    /// dx_1..dx_b then the extension variables, as in `EnvelopePresentation::d`.
    Native,
    /// For D(n) = D<xi(1..n)>: dx_v(e) with x_v(e) = x_v + xi_v(e), indexed v * (n + 1) + e.
    Slots { nb: usize, n: usize },
    /// Only the extension-variable differentials: forms relative to the base.
    Relative { nb: usize },
}

/// A free module D^rank with a connection whose matrices act on the listed differentials.
#[derive(Clone, Debug)]
pub struct Connection {
    pub env: Arc<EnvelopePresentation>,
    pub rank: usize,
    pub frame: Frame,
    /// `gamma[v]` is the matrix of the component along differential v; empty means zero.
    pub gamma: Vec<Matrix>,
}

/// Sorted k-subsets of 0..n in lexicographic order.
pub fn subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn go(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            go(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    go(0, n, k, &mut Vec::new(), &mut out);
    out
}

/// Basis of (D^rank) (x) Omega^k truncated at total weight <= degree: triples
/// (subset, component, basis index of D).
#[derive(Clone, Debug)]
pub struct FormSpace {
    pub k: usize,
    pub rank: usize,
    pub subsets: Vec<Vec<usize>>,
    subset_index: HashMap<Vec<usize>, usize>,
    pub entries: Vec<(usize, usize, usize)>,
    index: HashMap<(usize, usize, usize), usize>,
    pub weights: Vec<u32>,
}

impl FormSpace {
    pub fn new(env: &EnvelopePresentation, rank: usize, ndiff: usize, k: usize) -> FormSpace {
        let subs = subsets(ndiff, k);
        let subset_index = subs.iter().enumerate().map(|(i, s)| (s.clone(), i)).collect();
        let mut entries = Vec::new();
        let mut weights = Vec::new();
        for s in 0..subs.len() {
            for j in 0..rank {
                for (b, bm) in env.basis.iter().enumerate() {
                    if bm.weight + k as u32 <= env.degree {
                        entries.push((s, j, b));
                        weights.push(bm.weight + k as u32);
                    }
                }
            }
        }
        let index = entries.iter().enumerate().map(|(i, &t)| (t, i)).collect();
        FormSpace { k, rank, subsets: subs, subset_index, entries, index, weights }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn subset_id(&self, s: &[usize]) -> Option<usize> {
        self.subset_index.get(s).copied()
    }

    pub fn index(&self, s: usize, j: usize, b: usize) -> Option<usize> {
        self.index.get(&(s, j, b)).copied()
    }

    /// Relations: the torsion of D in every (subset, component) slot.
    pub fn term(&self, env: &EnvelopePresentation) -> Term {
        let mut rels = Vec::new();
        let trel = env.torsion_relations();
        for s in 0..self.subsets.len() {
            for j in 0..self.rank {
                for row in &trel {
                    let mapped: Option<SVec> = row.iter().map(|&(b, c)| self.index(s, j, b).map(|i| (i, c))).collect();
                    if let Some(mut v) = mapped {
                        v.sort_unstable();
                        rels.push(v);
                    }
                }
            }
        }
        Term::weighted(self.weights.clone(), rels)
    }

    /// Adds c * (a e_j) omega_s to a coordinate vector, dropping what lies above the truncation.
    pub fn push(&self, env: &EnvelopePresentation, out: &mut Vec<(usize, u64)>, s: usize, j: usize, a: &Elem, c: u64) {
        let r = env.ring;
        for (b, x) in env.coords(a) {
            if let Some(i) = self.index(s, j, b) {
                out.push((i, r.mul(c, x)));
            }
        }
    }

    /// The element-valued components (subset, j) -> element of a coordinate vector.
    pub fn unpack(&self, env: &EnvelopePresentation, v: &SVec) -> Vec<(usize, usize, Elem)> {
        let mut groups: std::collections::BTreeMap<(usize, usize), SVec> = Default::default();
        for &(i, c) in v {
            let (s, j, b) = self.entries[i];
            groups.entry((s, j)).or_default().push((b, c));
        }
        groups.into_iter().map(|((s, j), coords)| (s, j, env.elem_of_coords(&coords))).collect()
    }
}

/// Sign and sorted result of inserting v into the sorted subset s, or None if v is in s.
pub fn wedge_insert(v: usize, s: &[usize]) -> Option<(bool, Vec<usize>)> {
    match s.binary_search(&v) {
        Ok(_) => None,
        Err(pos) => {
            let mut t = s.to_vec();
            t.insert(pos, v);
            Some((pos % 2 == 1, t))
        }
    }
}

/// Sorts a list of distinct indices, returning the sign of the permutation, or None on a repeat.
pub fn sort_signed(mut v: Vec<usize>) -> Option<(bool, Vec<usize>)> {
    let mut neg = false;
    for i in 1..v.len() {
        let mut j = i;
        while j > 0 && v[j - 1] > v[j] {
            v.swap(j - 1, j);
            neg = !neg;
            j -= 1;
        }
        if j > 0 && v[j - 1] == v[j] {
            return None;
        }
    }
    Some((neg, v))
}

fn sum_into(r: crate::ring::Zpe, raw: Vec<(usize, u64)>) -> SVec {
    let mut m: std::collections::BTreeMap<usize, u64> = Default::default();
    for (i, x) in raw {
        let e = m.entry(i).or_insert(0);
        *e = r.add(*e, x);
    }
    m.into_iter().filter(|x| x.1 != 0).collect()
}

pub(crate) fn collect_cols(r: crate::ring::Zpe, rows: usize, cols: Vec<Vec<(usize, u64)>>) -> SpMat {
    let cols: Vec<SVec> = cols.into_iter().map(|c| sum_into(r, c)).collect();
    SpMat::from_cols(r, rows, &cols)
}

impl Connection {
    pub fn ndiff(&self) -> usize {
        match self.frame {
            Frame::Native => self.env.ndiff(),
            Frame::Slots { nb, n } => nb * (n + 1),
            Frame::Relative { nb } => self.env.ndiff() - nb,
        }
    }

    pub fn is_constant(&self) -> bool {
        self.gamma.iter().all(|g| g.iter().all(|row| row.iter().all(|x| x.is_zero())))
    }

    /// Components of da along the frame's differentials.
    pub fn deriv(&self, a: &Elem) -> Vec<Elem> {
        let raw = self.env.d(a);
        match self.frame {
            Frame::Native => raw,
            Frame::Slots { nb, n } => {
                let mut out = Vec::with_capacity(nb * (n + 1));
                for v in 0..nb {
                    let mut c0 = raw[v].clone();
                    for e in 1..=n {
                        c0 = &c0 - &raw[nb + (e - 1) * nb + v];
                    }
                    out.push(self.env.normal_form(&c0));
                    for e in 1..=n {
                        out.push(raw[nb + (e - 1) * nb + v].clone());
                    }
                }
                out
            }
            Frame::Relative { nb } => raw[nb..].to_vec(),
        }
    }

    /// nabla(v) as `[differential][component]`.
    pub fn nabla(&self, v: &[Elem]) -> Vec<Vec<Elem>> {
        let nd = self.ndiff();
        let mut out: Vec<Vec<Elem>> = vec![vec![Elem::zero(&self.env.ambient); self.rank]; nd];
        for (j, a) in v.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (dv, da) in self.deriv(a).into_iter().enumerate() {
                out[dv][j] = &out[dv][j] + &da;
            }
            for (dv, g) in self.gamma.iter().enumerate() {
                if g.is_empty() {
                    continue;
                }
                for k in 0..self.rank {
                    if !g[k][j].is_zero() {
                        out[dv][k] = &out[dv][k] + &self.env.mul(a, &g[k][j]);
                    }
                }
            }
        }
        for row in &mut out {
            for x in row.iter_mut() {
                *x = self.env.normal_form(x);
            }
        }
        out
    }

    /// nabla along a single differential.
    pub fn nabla_dir(&self, dv: usize, v: &[Elem]) -> Vec<Elem> {
        let mut out: Vec<Elem> = vec![Elem::zero(&self.env.ambient); self.rank];
        for (j, a) in v.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            out[j] = &out[j] + &self.deriv(a)[dv];
            if let Some(g) = self.gamma.get(dv).filter(|g| !g.is_empty()) {
                for k in 0..self.rank {
                    if !g[k][j].is_zero() {
                        out[k] = &out[k] + &self.env.mul(a, &g[k][j]);
                    }
                }
            }
        }
        out.iter().map(|x| self.env.normal_form(x)).collect()
    }

    pub fn spaces(&self, kmax: usize) -> Vec<FormSpace> {
        let nd = self.ndiff();
        (0..=kmax.min(nd)).map(|k| FormSpace::new(&self.env, self.rank, nd, k)).collect()
    }

    /// Matrix of nabla : M (x) Omega^k -> M (x) Omega^{k+1} between truncated form spaces.
    pub fn differential(&self, src: &FormSpace, dst: &FormSpace) -> SpMat {
        let env = &self.env;
        let r = env.ring;
        let nd = self.ndiff();
        let derivs: Vec<Vec<Elem>> = (0..env.basis.len())
            .into_par_iter()
            .map(|b| if env.basis[b].weight + src.k as u32 <= env.degree { self.deriv(&env.basis_elem(b)) } else { Vec::new() })
            .collect();
        let cols: Vec<Vec<(usize, u64)>> = src
            .entries
            .par_iter()
            .map(|&(s, j, b)| {
                let mut out = Vec::new();
                let a = env.basis_elem(b);
                for v in 0..nd {
                    let Some((neg, t)) = wedge_insert(v, &src.subsets[s]) else { continue };
                    let Some(ts) = dst.subset_id(&t) else { continue };
                    let sign = if neg { r.neg(1) } else { 1 };
                    dst.push(env, &mut out, ts, j, &derivs[b][v], sign);
                    if let Some(g) = self.gamma.get(v).filter(|g| !g.is_empty()) {
                        for k in 0..self.rank {
                            if !g[k][j].is_zero() {
                                dst.push(env, &mut out, ts, k, &env.mul(&a, &g[k][j]), sign);
                            }
                        }
                    }
                }
                out
            })
            .collect();
        collect_cols(r, dst.len(), cols)
    }

    /// M -> M (x) Omega^1 -> ... -> M (x) Omega^kmax, truncated at the envelope degree.
    pub fn de_rham(&self, kmax: usize) -> (CochainComplex, Vec<FormSpace>) {
        let spaces = self.spaces(kmax);
        let terms = spaces.iter().map(|s| s.term(&self.env)).collect();
        let diffs = spaces.windows(2).map(|w| self.differential(&w[0], &w[1])).collect();
        (CochainComplex::new_unchecked(self.env.ring, 0, terms, diffs), spaces)
    }
}
