//! Presented, degree-truncated PD envelopes.

use crate::pdpoly::{Elem, Mono, PdAlgebra, PdError, Var};
use crate::ring::{Reducer, SVec, Zpe};
use serde::Serialize;
use smallvec::SmallVec;
use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;
use std::sync::Arc;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum EnvelopeError {
    #[error("generator {0} is not a monomial modulo p")]
    NonMonomial(String),
    #[error("flat lift expects no generators beyond p, got {0}")]
    NotFlat(usize),
    #[error("inconsistent presentation: 1 = 0 in the envelope")]
    Inconsistent,
    #[error("nilpotency N={0} must satisfy 1 <= N <= e={1}")]
    Nilpotency(u32, u32),
    #[error("generator {0:?}: {1}")]
    Generator(String, PdError),
    #[error(transparent)]
    Pd(#[from] PdError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum EnvelopeKind {
    FlatLift,
    RegularPDPolynomial,
    MonomialIdeal,
}

/// A = P / (p^N, f_1, ..., f_r) with P = Z_p[x_1..x_n].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SchemePresentation {
    pub p: u64,
    pub nilpotency: u32,
    pub vars: Vec<String>,
    pub gens: Vec<String>,
}

impl SchemePresentation {
    pub fn new(p: u64, nilpotency: u32, vars: &[&str], gens: &[&str]) -> SchemePresentation {
        SchemePresentation {
            p,
            nilpotency,
            vars: vars.iter().map(|s| s.to_string()).collect(),
            gens: gens.iter().map(|s| s.to_string()).collect(),
        }
    }

    /// Generators of J + (p) other than p, as base exponent vectors (monomials mod p).
    pub fn monomial_generators(&self, ring: Zpe) -> Result<Vec<Mono>, EnvelopeError> {
        let base: Vec<Var> = self.vars.iter().map(|v| Var::new(v, 1)).collect();
        let alg = PdAlgebra::new(ring, base, vec![], 1 << 16)?;
        let mut out: Vec<Mono> = Vec::new();
        for g in &self.gens {
            let f = Elem::parse(&alg, g).map_err(|e| EnvelopeError::Generator(g.clone(), e))?;
            let units: Vec<(&Mono, &u64)> = f.terms().iter().filter(|(_, &c)| ring.is_unit(c)).collect();
            match units.len() {
                0 => {}
                1 => {
                    let m = units[0].0.clone();
                    if m.iter().all(|&k| k == 0) {
                        return Err(EnvelopeError::Inconsistent);
                    }
                    if !out.contains(&m) {
                        out.push(m);
                    }
                }
                _ => return Err(EnvelopeError::NonMonomial(g.clone())),
            }
        }
        Ok(out)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct BasisMono {
    #[serde(skip)]
    pub mono: Mono,
    pub name: String,
    pub weight: u32,
    /// Valuation of the relation pivoting on this coordinate (e when none).
    pub order: u32,
}

/// Relations of one weight among core monomials, in pivot order.
#[derive(Clone, Debug)]
struct Slice {
    monos: Vec<Mono>,
    index: HashMap<Mono, usize>,
    howell: Reducer,
}

#[derive(Clone, Debug)]
pub struct EnvelopePresentation {
    pub kind: EnvelopeKind,
    pub ring: Zpe,
    pub nilpotency: u32,
    pub degree: u32,
    /// Base variables, then core PD variables y_t, then extension PD variables.
    pub ambient: Arc<PdAlgebra>,
    pub ncore: usize,
    pub next: usize,
    /// f_t as base exponent vectors.
    pub gens: Vec<Mono>,
    /// Generators of the relation ideal K (before taking multiples).
    pub relations: Vec<Elem>,
    slices: Vec<Slice>,
    pub basis: Vec<BasisMono>,
    index: HashMap<Mono, usize>,
    by_weight: Vec<Vec<usize>>,
}

impl PartialEq for EnvelopePresentation {
    fn eq(&self, o: &Self) -> bool {
        self.dump() == o.dump()
    }
}

fn mono_lex_desc(a: &Mono, b: &Mono) -> std::cmp::Ordering {
    b.cmp(a)
}

fn lcm(a: &[u32], b: &[u32]) -> Mono {
    a.iter().zip(b).map(|(&x, &y)| x.max(y)).collect()
}

impl EnvelopePresentation {
    /// D = P/p^e with the canonical divided powers on (p).
    pub fn flat(pres: &SchemePresentation, e: u32, degree: u32) -> Result<Self, EnvelopeError> {
        let ring = Zpe::new(pres.p, e);
        let gens = pres.monomial_generators(ring)?;
        if !gens.is_empty() {
            return Err(EnvelopeError::NotFlat(gens.len()));
        }
        Self::build(pres, e, degree, vec![], EnvelopeKind::FlatLift)
    }

    /// Envelope of (p, f_1..f_r) for monomials f_t; a flat lift when r = 0.
    pub fn monomial(pres: &SchemePresentation, e: u32, degree: u32) -> Result<Self, EnvelopeError> {
        let ring = Zpe::new(pres.p, e);
        let gens = pres.monomial_generators(ring)?;
        let kind = if gens.is_empty() { EnvelopeKind::FlatLift } else { EnvelopeKind::MonomialIdeal };
        Self::build(pres, e, degree, gens, kind)
    }

    fn build(
        pres: &SchemePresentation,
        e: u32,
        degree: u32,
        gens: Vec<Mono>,
        kind: EnvelopeKind,
    ) -> Result<Self, EnvelopeError> {
        let ring = Zpe::new(pres.p, e);
        if pres.nilpotency == 0 || pres.nilpotency > e {
            return Err(EnvelopeError::Nilpotency(pres.nilpotency, e));
        }
        let base: Vec<Var> = pres.vars.iter().map(|v| Var::new(v, 1)).collect();
        let core: Vec<Var> = gens
            .iter()
            .enumerate()
            .map(|(t, m)| Var::new(&format!("y{}", t + 1), m.iter().sum()))
            .collect();
        let ambient = PdAlgebra::new(ring, base, core, degree)?;
        let nb = ambient.nbase();
        let ncore = gens.len();
        let mut relations = Vec::new();
        let pad = |m: &Mono| -> Mono {
            let mut v = m.clone();
            v.resize(nb + ncore, 0);
            v
        };
        for (t, f) in gens.iter().enumerate() {
            let y = Elem::var(&ambient, nb + t);
            relations.push(&y - &Elem::term(&ambient, pad(f), 1));
        }
        for t in 0..ncore {
            for u in t + 1..ncore {
                let l = lcm(&gens[t], &gens[u]);
                let qt: Mono = l.iter().zip(&gens[t]).map(|(a, b)| a - b).collect();
                let qu: Mono = l.iter().zip(&gens[u]).map(|(a, b)| a - b).collect();
                let s = &(&Elem::term(&ambient, pad(&qt), 1) * &Elem::var(&ambient, nb + t))
                    - &(&Elem::term(&ambient, pad(&qu), 1) * &Elem::var(&ambient, nb + u));
                let ws = l.iter().sum::<u32>();
                if ws == 0 {
                    continue;
                }
                for n in 1..=degree / ws {
                    let g = s.gamma(n)?;
                    if !g.is_zero() {
                        relations.push(g);
                    }
                }
            }
        }
        let mut env = EnvelopePresentation {
            kind,
            ring,
            nilpotency: pres.nilpotency,
            degree,
            ambient,
            ncore,
            next: 0,
            gens,
            relations,
            slices: Vec::new(),
            basis: Vec::new(),
            index: HashMap::new(),
            by_weight: Vec::new(),
        };
        env.build_slices();
        env.build_basis();
        if env.normal_form(&Elem::one(&env.ambient)).is_zero() {
            return Err(EnvelopeError::Inconsistent);
        }
        Ok(env)
    }

    fn core_len(&self) -> usize {
        self.ambient.nbase() + self.ncore
    }

    fn build_slices(&mut self) {
        let cl = self.core_len();
        let core_alg = PdAlgebra::new(
            self.ring,
            self.ambient.base.clone(),
            self.ambient.pd[..self.ncore].to_vec(),
            self.degree,
        )
        .unwrap();
        let rels: Vec<Elem> = self.relations.iter().map(|r| r.rebase_prefix(&core_alg)).collect();
        let mut slices = Vec::new();
        for w in 0..=self.degree {
            let mut monos = core_alg.monomials_of_weight(w);
            monos.sort_by(mono_lex_desc);
            let index: HashMap<Mono, usize> = monos.iter().enumerate().map(|(i, m)| (m.clone(), i)).collect();
            let mut rows: Vec<SVec> = Vec::new();
            for rel in &rels {
                let wr = rel.max_weight();
                if wr > w {
                    continue;
                }
                for mu in core_alg.monomials_of_weight(w - wr) {
                    let prod = &Elem::term(&core_alg, mu, 1) * rel;
                    let mut v: SVec = prod.terms().iter().map(|(m, &c)| (index[m], c)).collect();
                    v.sort_unstable();
                    if !v.is_empty() {
                        rows.push(v);
                    }
                }
            }
            let howell = Reducer::new(self.ring, monos.len(), rows);
            debug_assert!(monos.iter().all(|m| m.len() == cl));
            slices.push(Slice { monos, index, howell });
        }
        self.slices = slices;
    }

    fn build_basis(&mut self) {
        let nb = self.ambient.nbase();
        let cl = self.core_len();
        let mut basis = Vec::new();
        let mut by_weight = vec![Vec::new(); self.degree as usize + 1];
        let ext_alg = PdAlgebra::new(
            self.ring,
            vec![],
            self.ambient.pd[self.ncore..].to_vec(),
            self.degree,
        )
        .unwrap();
        for w in 0..=self.degree {
            for w1 in (0..=w).rev() {
                let w2 = w - w1;
                let ext = ext_alg.monomials_of_weight(w2);
                let sl = &self.slices[w1 as usize];
                for (c, ord) in sl.howell.free_coords() {
                    for xm in &ext {
                        let mut m: Mono = sl.monos[c].clone();
                        m.extend_from_slice(xm);
                        debug_assert_eq!(m.len(), cl + self.next);
                        let name = self.ambient.mono_string(&m);
                        by_weight[w as usize].push(basis.len());
                        basis.push(BasisMono { mono: m, name, weight: w, order: ord });
                    }
                }
            }
        }
        let _ = nb;
        self.index = basis.iter().enumerate().map(|(i, b)| (b.mono.clone(), i)).collect();
        self.basis = basis;
        self.by_weight = by_weight;
    }

    /// D<xi_1..xi_k>: adds free PD variables of weight 1.
    pub fn regular(&self, names: &[String]) -> Result<Self, EnvelopeError> {
        if names.is_empty() {
            return Ok(self.clone());
        }
        let mut pd = self.ambient.pd.clone();
        pd.extend(names.iter().map(|n| Var::new(n, 1)));
        let ambient = PdAlgebra::new(self.ring, self.ambient.base.clone(), pd, self.degree)?;
        let relations = self.relations.iter().map(|r| r.rebase_pad(&ambient)).collect();
        let mut env = EnvelopePresentation {
            kind: EnvelopeKind::RegularPDPolynomial,
            ambient,
            next: self.next + names.len(),
            relations,
            basis: Vec::new(),
            index: HashMap::new(),
            by_weight: Vec::new(),
            ..self.clone()
        };
        env.build_basis();
        Ok(env)
    }

    pub fn nbase(&self) -> usize {
        self.ambient.nbase()
    }

    /// Number of differentials dx_i and dxi_k.
    pub fn ndiff(&self) -> usize {
        self.nbase() + self.next
    }

    /// Largest generator weight (1 for a flat lift).
    pub fn max_weight(&self) -> u32 {
        self.ambient.pd[..self.ncore].iter().map(|v| v.weight).max().unwrap_or(1).max(1)
    }

    /// Canonical representative: terms on basis monomials only, torsion coordinates reduced.
    pub fn normal_form(&self, a: &Elem) -> Elem {
        let cl = self.core_len();
        let mut groups: BTreeMap<(SmallVec<[u32; 8]>, u32), SVec> = BTreeMap::new();
        for (m, &c) in a.terms() {
            let core: Mono = m[..cl].into();
            let ext: SmallVec<[u32; 8]> = m[cl..].into();
            let w = self.ambient.weight(m) - ext.iter().sum::<u32>();
            let sl = &self.slices[w as usize];
            groups.entry((ext, w)).or_default().push((sl.index[&core], c));
        }
        let mut out = Elem::zero(&self.ambient).with_lossy(a.lossy());
        for ((ext, w), mut v) in groups {
            v.sort_unstable();
            let sl = &self.slices[w as usize];
            for (i, c) in sl.howell.reduce(v) {
                let mut m = sl.monos[i].clone();
                m.extend_from_slice(&ext);
                out.add_term(m, c);
            }
        }
        out
    }

    pub fn is_zero(&self, a: &Elem) -> bool {
        self.normal_form(a).is_zero()
    }

    pub fn basis_index(&self, m: &[u32]) -> Option<usize> {
        self.index.get(m).copied()
    }

    /// Coordinates of the normal form in the basis.
    pub fn coords(&self, a: &Elem) -> SVec {
        let nf = self.normal_form(a);
        let mut v: SVec = nf.terms().iter().map(|(m, &c)| (self.index[m], c)).collect();
        v.sort_unstable();
        v
    }

    pub fn elem_of_coords(&self, v: &SVec) -> Elem {
        let mut out = Elem::zero(&self.ambient);
        for &(i, c) in v {
            out.add_term(self.basis[i].mono.clone(), c);
        }
        out
    }

    pub fn basis_elem(&self, i: usize) -> Elem {
        Elem::term(&self.ambient, self.basis[i].mono.clone(), 1)
    }

    /// Basis indices of weight w.
    pub fn basis_of_weight(&self, w: u32) -> &[usize] {
        self.by_weight.get(w as usize).map(|v| v.as_slice()).unwrap_or(&[])
    }

    /// Relations among basis coordinates (rows in global basis indices): the torsion of D.
    pub fn torsion_relations(&self) -> Vec<SVec> {
        let cl = self.core_len();
        let ext_alg = PdAlgebra::new(self.ring, vec![], self.ambient.pd[self.ncore..].to_vec(), self.degree).unwrap();
        let mut out = Vec::new();
        for (w1, sl) in self.slices.iter().enumerate() {
            let rows = sl.howell.torsion_rows();
            if rows.is_empty() {
                continue;
            }
            for w2 in 0..=self.degree - w1 as u32 {
                for xm in ext_alg.monomials_of_weight(w2) {
                    for row in &rows {
                        let mut v: SVec = row
                            .iter()
                            .map(|&(i, c)| {
                                let mut m = sl.monos[i].clone();
                                m.extend_from_slice(&xm);
                                (self.index[&m], c)
                            })
                            .collect();
                        v.sort_unstable();
                        out.push(v);
                    }
                }
            }
        }
        let _ = cl;
        out
    }

    pub fn is_free(&self) -> bool {
        self.basis.iter().all(|b| b.order == self.ring.e())
    }

    pub fn mul(&self, a: &Elem, b: &Elem) -> Elem {
        self.normal_form(&(a * b))
    }

    /// gamma_n in D; a must lie in the PD ideal of D.
    pub fn gamma(&self, a: &Elem, n: u32) -> Result<Elem, PdError> {
        Ok(self.normal_form(&self.normal_form(a).gamma(n)?))
    }

    pub fn in_pd_ideal(&self, a: &Elem) -> bool {
        self.normal_form(a).in_pd_ideal()
    }

    pub fn parse(&self, s: &str) -> Result<Elem, PdError> {
        Ok(self.normal_form(&Elem::parse(&self.ambient, s)?))
    }

    /// d : D -> Omega^1_D, components on dx_1..dx_n, dxi_1..dxi_k, normalized.
    pub fn d(&self, a: &Elem) -> Vec<Elem> {
        let nb = self.nbase();
        let raw = a.pd_d();
        let mut out: Vec<Elem> = raw[..nb].to_vec();
        for t in 0..self.ncore {
            let dy = &raw[nb + t];
            if dy.is_zero() {
                continue;
            }
            let mut f = self.gens[t].clone();
            f.resize(self.ambient.nvars(), 0);
            let fe = Elem::term(&self.ambient, f, 1);
            for (i, o) in out.iter_mut().enumerate() {
                let df = fe.partial(i);
                if !df.is_zero() {
                    *o = &*o + &(dy * &df);
                }
            }
        }
        out.extend(raw[nb + self.ncore..].iter().cloned());
        out.iter().map(|c| self.normal_form(c)).collect()
    }

    /// Text dump: basis monomials with orders, then the normal form of every eliminated
    /// core monomial.
    pub fn dump(&self) -> String {
        let mut s = String::new();
        writeln!(s, "envelope p={} e={} degree={}", self.ring.p(), self.ring.e(), self.degree).unwrap();
        let names: Vec<String> =
            self.ambient.base.iter().chain(&self.ambient.pd).map(|v| format!("{}:{}", v.name, v.weight)).collect();
        writeln!(s, "variables {}", names.join(" ")).unwrap();
        writeln!(s, "basis {}", self.basis.len()).unwrap();
        for b in &self.basis {
            writeln!(s, "{} {} {}", b.weight, b.name, b.order).unwrap();
        }
        writeln!(s, "normal_form").unwrap();
        let core_alg = PdAlgebra::new(self.ring, self.ambient.base.clone(), self.ambient.pd[..self.ncore].to_vec(), self.degree)
            .unwrap();
        for sl in &self.slices {
            for (i, m) in sl.monos.iter().enumerate() {
                let red = sl.howell.reduce(vec![(i, 1)]);
                if red == vec![(i, 1)] {
                    continue;
                }
                let mut e = Elem::zero(&core_alg);
                for (j, c) in red {
                    e.add_term(sl.monos[j].clone(), c);
                }
                writeln!(s, "{} -> {}", core_alg.mono_string(m), e).unwrap();
            }
        }
        s
    }
}

impl Elem {
    /// Keeps the leading variables of a wider algebra (the rest must be absent).
    pub fn rebase_prefix(&self, alg: &Arc<PdAlgebra>) -> Elem {
        let n = alg.nvars();
        let mut out = Elem::zero(alg);
        for (m, &c) in self.terms() {
            debug_assert!(m[n..].iter().all(|&k| k == 0));
            out.add_term(m[..n].into(), c);
        }
        out
    }

    /// Pads exponent vectors with zeros for a wider algebra.
    pub fn rebase_pad(&self, alg: &Arc<PdAlgebra>) -> Elem {
        let n = alg.nvars();
        let mut out = Elem::zero(alg);
        for (m, &c) in self.terms() {
            let mut mm = m.clone();
            mm.resize(n, 0);
            out.add_term(mm, c);
        }
        out
    }
}
