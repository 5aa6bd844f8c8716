//! Degree-truncated divided-power polynomial algebras (Z/p^e)[x]<y>.

mod parse;

pub use parse::{parse_elem, ParseError};

use crate::ring::{Factorials, Zpe};
use serde::Serialize;
use smallvec::SmallVec;
use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::sync::Arc;
use thiserror::Error;

/// Exponents: base variables first, then PD variables (beta_t meaning gamma_{beta_t}(y_t)).
pub type Mono = SmallVec<[u32; 8]>;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PdError {
    #[error("operands live in different algebras")]
    MixedAlgebra,
    #[error("{0} is not in the PD ideal")]
    NotInPdIdeal(String),
    #[error("{0}")]
    Parse(#[from] ParseError),
    #[error("bad algebra: {0}")]
    BadAlgebra(String),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Var {
    pub name: String,
    pub weight: u32,
}

impl Var {
    pub fn new(name: &str, weight: u32) -> Var {
        Var { name: name.to_string(), weight }
    }
}

pub struct PdAlgebra {
    pub ring: Zpe,
    pub base: Vec<Var>,
    pub pd: Vec<Var>,
    /// Truncation: monomials of weighted degree > degree are dropped.
    pub degree: u32,
    facts: Factorials,
}

impl PartialEq for PdAlgebra {
    fn eq(&self, o: &Self) -> bool {
        self.ring == o.ring && self.base == o.base && self.pd == o.pd && self.degree == o.degree
    }
}

impl Eq for PdAlgebra {}

impl fmt::Debug for PdAlgebra {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PdAlgebra")
            .field("ring", &self.ring)
            .field("base", &self.base)
            .field("pd", &self.pd)
            .field("degree", &self.degree)
            .finish()
    }
}

fn valid_name(s: &str) -> bool {
    let mut c = s.chars();
    matches!(c.next(), Some(ch) if ch.is_ascii_alphabetic() || ch == '_')
        && c.all(|ch| ch.is_ascii_alphanumeric() || ch == '_')
        && s != "g"
}

impl PdAlgebra {
    pub fn new(ring: Zpe, base: Vec<Var>, pd: Vec<Var>, degree: u32) -> Result<Arc<PdAlgebra>, PdError> {
        let mut seen = std::collections::BTreeSet::new();
        for v in base.iter().chain(&pd) {
            if !valid_name(&v.name) {
                return Err(PdError::BadAlgebra(format!("invalid variable name {:?}", v.name)));
            }
            if v.weight == 0 {
                return Err(PdError::BadAlgebra(format!("variable {} has weight 0", v.name)));
            }
            if !seen.insert(v.name.clone()) {
                return Err(PdError::BadAlgebra(format!("duplicate variable {}", v.name)));
            }
        }
        let facts = Factorials::new(ring, (degree as usize).max(64) + 1);
        Ok(Arc::new(PdAlgebra { ring, base, pd, degree, facts }))
    }

    pub fn nvars(&self) -> usize {
        self.base.len() + self.pd.len()
    }

    pub fn nbase(&self) -> usize {
        self.base.len()
    }

    pub fn weight(&self, m: &[u32]) -> u32 {
        self.base.iter().chain(&self.pd).zip(m).map(|(v, &k)| v.weight * k).sum()
    }

    pub fn var_weight(&self, k: usize) -> u32 {
        if k < self.base.len() {
            self.base[k].weight
        } else {
            self.pd[k - self.base.len()].weight
        }
    }

    pub fn unit_mono(&self) -> Mono {
        SmallVec::from_elem(0, self.nvars())
    }

    pub fn facts(&self) -> &Factorials {
        &self.facts
    }

    /// True if the monomial involves some PD variable.
    pub fn is_pd_mono(&self, m: &[u32]) -> bool {
        m[self.base.len()..].iter().any(|&b| b > 0)
    }

    /// All monomials of weight exactly w, in increasing lexicographic order of exponents.
    pub fn monomials_of_weight(&self, w: u32) -> Vec<Mono> {
        let n = self.nvars();
        let mut out = Vec::new();
        let mut cur = self.unit_mono();
        fn go(a: &PdAlgebra, k: usize, left: u32, cur: &mut Mono, out: &mut Vec<Mono>, n: usize) {
            if k == n {
                if left == 0 {
                    out.push(cur.clone());
                }
                return;
            }
            let wt = a.var_weight(k);
            for x in 0..=left / wt {
                cur[k] = x;
                go(a, k + 1, left - x * wt, cur, out, n);
            }
            cur[k] = 0;
        }
        go(self, 0, w, &mut cur, &mut out, n);
        out
    }

    pub fn mono_string(&self, m: &[u32]) -> String {
        let mut parts = Vec::new();
        for (i, v) in self.base.iter().enumerate() {
            match m[i] {
                0 => {}
                1 => parts.push(v.name.clone()),
                k => parts.push(format!("{}^{}", v.name, k)),
            }
        }
        for (t, v) in self.pd.iter().enumerate() {
            match m[self.base.len() + t] {
                0 => {}
                1 => parts.push(v.name.clone()),
                k => parts.push(format!("g({},{})", v.name, k)),
            }
        }
        if parts.is_empty() {
            "1".into()
        } else {
            parts.join("*")
        }
    }

    /// Index of a variable by name: base variables first.
    pub fn var_index(&self, name: &str) -> Option<usize> {
        self.base.iter().chain(&self.pd).position(|v| v.name == name)
    }
}

/// p^n / n! for any n.
pub fn p_divided(r: Zpe, n: u64) -> u64 {
    let p = r.p();
    let mut v: u64 = 0;
    let mut k = n;
    while k > 0 {
        k /= p;
        v += k;
    }
    let ex = n - v;
    if ex >= r.e() as u64 {
        return 0;
    }
    let mut unit = 1 % r.q();
    for i in 1..=n {
        let mut j = i;
        while j % p == 0 {
            j /= p;
        }
        unit = r.mul(unit, j % r.q());
    }
    r.mul(r.p_pow(ex as u32), r.inv_unit(unit))
}

#[derive(Clone)]
pub struct Elem {
    alg: Arc<PdAlgebra>,
    terms: BTreeMap<Mono, u64>,
    lossy: bool,
}

impl PartialEq for Elem {
    fn eq(&self, o: &Self) -> bool {
        same_alg(&self.alg, &o.alg) && self.terms == o.terms
    }
}

impl Eq for Elem {}

impl fmt::Debug for Elem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Elem({})", self)
    }
}

fn same_alg(a: &Arc<PdAlgebra>, b: &Arc<PdAlgebra>) -> bool {
    Arc::ptr_eq(a, b) || **a == **b
}

impl Elem {
    pub fn zero(alg: &Arc<PdAlgebra>) -> Elem {
        Elem { alg: alg.clone(), terms: BTreeMap::new(), lossy: false }
    }

    pub fn constant(alg: &Arc<PdAlgebra>, c: i64) -> Elem {
        let mut e = Elem::zero(alg);
        e.add_term(alg.unit_mono(), alg.ring.from_i64(c));
        e
    }

    pub fn one(alg: &Arc<PdAlgebra>) -> Elem {
        Elem::constant(alg, 1)
    }

    /// c * monomial, dropped (lossy) if over degree.
    pub fn term(alg: &Arc<PdAlgebra>, m: Mono, c: u64) -> Elem {
        let mut e = Elem::zero(alg);
        if alg.weight(&m) > alg.degree {
            e.lossy = !c.is_multiple_of(alg.ring.q());
        } else {
            e.add_term(m, c % alg.ring.q());
        }
        e
    }

    /// The variable with index k (base variables first; a PD variable means gamma_1).
    pub fn var(alg: &Arc<PdAlgebra>, k: usize) -> Elem {
        Elem::gamma_var(alg, k, 1)
    }

    /// x_k^n for a base variable, gamma_n(y) for a PD variable.
    pub fn gamma_var(alg: &Arc<PdAlgebra>, k: usize, n: u32) -> Elem {
        let mut m = alg.unit_mono();
        m[k] = n;
        Elem::term(alg, m, 1)
    }

    pub fn algebra(&self) -> &Arc<PdAlgebra> {
        &self.alg
    }

    pub fn ring(&self) -> Zpe {
        self.alg.ring
    }

    pub fn terms(&self) -> &BTreeMap<Mono, u64> {
        &self.terms
    }

    pub fn into_terms(self) -> BTreeMap<Mono, u64> {
        self.terms
    }

    pub fn coeff(&self, m: &[u32]) -> u64 {
        self.terms.get(m).copied().unwrap_or(0)
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Set iff some over-degree term was dropped while computing this element.
    pub fn lossy(&self) -> bool {
        self.lossy
    }

    pub fn with_lossy(mut self, l: bool) -> Elem {
        self.lossy |= l;
        self
    }

    pub fn add_term(&mut self, m: Mono, c: u64) {
        let r = self.alg.ring;
        if c == 0 {
            return;
        }
        let ent = self.terms.entry(m);
        match ent {
            std::collections::btree_map::Entry::Vacant(v) => {
                v.insert(c);
            }
            std::collections::btree_map::Entry::Occupied(mut o) => {
                let s = r.add(*o.get(), c);
                if s == 0 {
                    o.remove();
                } else {
                    *o.get_mut() = s;
                }
            }
        }
    }

    fn check(&self, o: &Elem) -> Result<(), PdError> {
        if same_alg(&self.alg, &o.alg) {
            Ok(())
        } else {
            Err(PdError::MixedAlgebra)
        }
    }

    pub fn try_add(&self, o: &Elem) -> Result<Elem, PdError> {
        self.check(o)?;
        let mut out = self.clone();
        for (m, &c) in &o.terms {
            out.add_term(m.clone(), c);
        }
        out.lossy |= o.lossy;
        Ok(out)
    }

    pub fn scale(&self, c: u64) -> Elem {
        let r = self.alg.ring;
        let mut out = Elem::zero(&self.alg);
        out.lossy = self.lossy;
        for (m, &x) in &self.terms {
            let v = r.mul(x, c % r.q());
            if v != 0 {
                out.terms.insert(m.clone(), v);
            }
        }
        out
    }

    pub fn neg(&self) -> Elem {
        self.scale(self.alg.ring.q() - 1)
    }

    pub fn try_sub(&self, o: &Elem) -> Result<Elem, PdError> {
        self.try_add(&o.neg())
    }

    /// Product of two monomials: coefficient and monomial, or None if over degree / zero.
    pub fn mono_mul(alg: &PdAlgebra, a: &[u32], b: &[u32]) -> (u64, Mono) {
        let nb = alg.nbase();
        let r = alg.ring;
        let mut m: Mono = a.iter().zip(b).map(|(x, y)| x + y).collect();
        let mut c = 1 % r.q();
        for t in nb..m.len() {
            if a[t] > 0 && b[t] > 0 {
                c = r.mul(c, binom(alg, m[t] as usize, b[t] as usize));
            }
        }
        if c == 0 {
            m = alg.unit_mono();
        }
        (c, m)
    }

    pub fn try_mul(&self, o: &Elem) -> Result<Elem, PdError> {
        self.check(o)?;
        let alg = &self.alg;
        let r = alg.ring;
        let mut out = Elem::zero(alg);
        out.lossy = self.lossy || o.lossy;
        for (a, &x) in &self.terms {
            let wa = alg.weight(a);
            for (b, &y) in &o.terms {
                if wa + alg.weight(b) > alg.degree {
                    out.lossy = true;
                    continue;
                }
                let (c, m) = Elem::mono_mul(alg, a, b);
                let v = r.mul(r.mul(x, y), c);
                out.add_term(m, v);
            }
        }
        Ok(out)
    }

    pub fn pow(&self, n: u32) -> Elem {
        let mut acc = Elem::one(&self.alg);
        for _ in 0..n {
            acc = &acc * self;
        }
        acc
    }

    /// Whether the element lies in the PD ideal: every term is a PD monomial or has
    /// coefficient divisible by p.
    pub fn in_pd_ideal(&self) -> bool {
        self.offending_term().is_none()
    }

    fn offending_term(&self) -> Option<String> {
        let r = self.alg.ring;
        self.terms
            .iter()
            .find(|(m, &c)| !self.alg.is_pd_mono(m) && r.val(c) == 0)
            .map(|(m, &c)| {
                if c == 1 {
                    self.alg.mono_string(m)
                } else {
                    format!("{}*{}", c, self.alg.mono_string(m))
                }
            })
    }

    /// gamma_n of a single term c * m.
    fn gamma_term(alg: &Arc<PdAlgebra>, m: &Mono, c: u64, n: u32) -> Elem {
        let r = alg.ring;
        if n == 0 {
            return Elem::one(alg);
        }
        if n == 1 {
            return Elem::term(alg, m.clone(), c);
        }
        let w = alg.weight(m) as u64 * n as u64;
        if w > alg.degree as u64 {
            return Elem::zero(alg).with_lossy(true);
        }
        let nb = alg.nbase();
        let nn = n as usize;
        if alg.is_pd_mono(m) {
            let t0 = (nb..m.len()).find(|&t| m[t] > 0).unwrap();
            let mut coef = r.pow(c, n as u64);
            let mut out: Mono = m.iter().map(|&k| k * n).collect();
            for t in nb..m.len() {
                let b = m[t] as usize;
                if b == 0 {
                    continue;
                }
                let k = if t == t0 { gamma_compose(alg, nn, b) } else { gamma_power(alg, nn, b) };
                coef = r.mul(coef, k);
            }
            if coef == 0 {
                out = alg.unit_mono();
            }
            Elem::term(alg, out, coef)
        } else {
            let v = r.val(c);
            debug_assert!(v >= 1);
            let u = r.div_p_pow(c, v) % r.q();
            let mut coef = r.mul(r.pow(u, n as u64), p_divided(r, n as u64));
            coef = r.mul(coef, r.pow(r.p_pow(v - 1), n as u64));
            let out: Mono = m.iter().map(|&k| k * n).collect();
            Elem::term(alg, out, coef)
        }
    }

    /// gamma_n(self); the element must lie in the PD ideal.
    pub fn gamma(&self, n: u32) -> Result<Elem, PdError> {
        if let Some(bad) = self.offending_term() {
            return Err(PdError::NotInPdIdeal(bad));
        }
        let alg = &self.alg;
        // table[k] = gamma_k of the partial sum
        let mut table: Vec<Elem> = (0..=n).map(|k| if k == 0 { Elem::one(alg) } else { Elem::zero(alg) }).collect();
        for (m, &c) in &self.terms {
            let g: Vec<Elem> = (0..=n).map(|k| Elem::gamma_term(alg, m, c, k)).collect();
            let mut next = Vec::with_capacity(table.len());
            for k in 0..=n as usize {
                let mut acc = Elem::zero(alg);
                for i in 0..=k {
                    if table[i].is_zero() && !table[i].lossy || g[k - i].is_zero() && !g[k - i].lossy {
                        continue;
                    }
                    acc = &acc + &(&table[i] * &g[k - i]);
                }
                next.push(acc);
            }
            table = next;
        }
        let out = table.pop().unwrap();
        Ok(out.with_lossy(self.lossy))
    }

    /// Components along dx_i (base) then dy_t (PD), by the Leibniz rule.
    pub fn pd_d(&self) -> Vec<Elem> {
        let alg = &self.alg;
        let r = alg.ring;
        let mut out: Vec<Elem> = (0..alg.nvars()).map(|_| Elem::zero(alg)).collect();
        for (m, &c) in &self.terms {
            for k in 0..m.len() {
                if m[k] == 0 {
                    continue;
                }
                let mut mm = m.clone();
                mm[k] -= 1;
                let coef = if k < alg.nbase() { r.mul(c, m[k] as u64 % r.q()) } else { c };
                out[k].add_term(mm, coef);
            }
        }
        for o in &mut out {
            o.lossy = self.lossy;
        }
        out
    }

    /// The dx_i component of pd_d, i a base index.
    pub fn partial(&self, i: usize) -> Elem {
        let alg = &self.alg;
        let r = alg.ring;
        let mut out = Elem::zero(alg);
        for (m, &c) in &self.terms {
            if m[i] == 0 {
                continue;
            }
            let mut mm = m.clone();
            mm[i] -= 1;
            out.add_term(mm, r.mul(c, m[i] as u64 % r.q()));
        }
        out.lossy = self.lossy;
        out
    }

    /// Largest weight of a term (0 for zero).
    pub fn max_weight(&self) -> u32 {
        self.terms.keys().map(|m| self.alg.weight(m)).max().unwrap_or(0)
    }

    /// Same terms viewed in another algebra with the same variable layout.
    pub fn rebase(&self, alg: &Arc<PdAlgebra>) -> Elem {
        assert_eq!(alg.nvars(), self.alg.nvars());
        let r = alg.ring;
        let mut out = Elem::zero(alg);
        for (m, &c) in &self.terms {
            if alg.weight(m) <= alg.degree {
                out.add_term(m.clone(), c % r.q());
            } else {
                out.lossy = true;
            }
        }
        out
    }

    pub fn parse(alg: &Arc<PdAlgebra>, s: &str) -> Result<Elem, PdError> {
        parse_elem(alg, s)
    }
}

fn binom(alg: &PdAlgebra, n: usize, k: usize) -> u64 {
    if n < alg.facts.len() {
        alg.facts.binom(n, k)
    } else {
        Factorials::new(alg.ring, n).binom(n, k)
    }
}

fn gamma_compose(alg: &PdAlgebra, n: usize, m: usize) -> u64 {
    if n * m < alg.facts.len() {
        alg.facts.gamma_compose(n, m)
    } else {
        Factorials::new(alg.ring, n * m).gamma_compose(n, m)
    }
}

fn gamma_power(alg: &PdAlgebra, n: usize, m: usize) -> u64 {
    if n * m < alg.facts.len() {
        alg.facts.gamma_power(n, m)
    } else {
        Factorials::new(alg.ring, n * m).gamma_power(n, m)
    }
}

impl std::ops::Add for &Elem {
    type Output = Elem;
    fn add(self, o: &Elem) -> Elem {
        self.try_add(o).expect("mixed algebras")
    }
}

impl std::ops::Sub for &Elem {
    type Output = Elem;
    fn sub(self, o: &Elem) -> Elem {
        self.try_sub(o).expect("mixed algebras")
    }
}

impl std::ops::Mul for &Elem {
    type Output = Elem;
    fn mul(self, o: &Elem) -> Elem {
        self.try_mul(o).expect("mixed algebras")
    }
}

impl std::ops::Neg for &Elem {
    type Output = Elem;
    fn neg(self) -> Elem {
        Elem::neg(self)
    }
}

impl fmt::Display for Elem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let alg = &self.alg;
        let mut first = true;
        let mut items: Vec<(&Mono, &u64)> = self.terms.iter().collect();
        items.sort_by(|a, b| alg.weight(b.0).cmp(&alg.weight(a.0)).then(b.0.cmp(a.0)));
        for (m, &c) in items {
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            let ms = alg.mono_string(m);
            if ms == "1" {
                write!(f, "{c}")?;
            } else if c == 1 {
                write!(f, "{ms}")?;
            } else {
                write!(f, "{c}*{ms}")?;
            }
        }
        Ok(())
    }
}

/// A PD ring map between truncated algebras, given by images of all variables.
/// PD variables must go to elements of the target's PD ideal.
#[derive(Clone, Debug)]
pub struct PdMap {
    pub source: Arc<PdAlgebra>,
    pub target: Arc<PdAlgebra>,
    pub images: Vec<Elem>,
}

impl PdMap {
    pub fn new(source: &Arc<PdAlgebra>, target: &Arc<PdAlgebra>, images: Vec<Elem>) -> Result<PdMap, PdError> {
        if images.len() != source.nvars() {
            return Err(PdError::BadAlgebra("wrong number of images".into()));
        }
        for (k, im) in images.iter().enumerate() {
            if !same_alg(im.algebra(), target) {
                return Err(PdError::MixedAlgebra);
            }
            if k >= source.nbase() {
                if let Some(bad) = im.offending_term() {
                    return Err(PdError::NotInPdIdeal(bad));
                }
            }
        }
        Ok(PdMap { source: source.clone(), target: target.clone(), images })
    }

    pub fn apply(&self, a: &Elem) -> Elem {
        let mut cache: HashMap<(usize, u32), Elem> = HashMap::new();
        let mut out = Elem::zero(&self.target).with_lossy(a.lossy);
        for (m, &c) in a.terms() {
            let img = self.apply_mono_cached(m, &mut cache);
            out = &out + &img.scale(c);
        }
        out
    }

    pub fn apply_mono(&self, m: &[u32]) -> Elem {
        let mut cache = HashMap::new();
        self.apply_mono_cached(m, &mut cache)
    }

    fn apply_mono_cached(&self, m: &[u32], cache: &mut HashMap<(usize, u32), Elem>) -> Elem {
        let mut acc = Elem::one(&self.target);
        for (k, &x) in m.iter().enumerate() {
            if x == 0 {
                continue;
            }
            let f = cache
                .entry((k, x))
                .or_insert_with(|| {
                    if k < self.source.nbase() {
                        self.images[k].pow(x)
                    } else {
                        self.images[k].gamma(x).expect("checked at construction")
                    }
                })
                .clone();
            acc = &acc * &f;
            if acc.is_zero() && !acc.lossy {
                break;
            }
        }
        acc
    }

    /// self after other: x -> self(other(x)).
    pub fn compose(&self, other: &PdMap) -> PdMap {
        assert!(same_alg(&other.target, &self.source));
        let images = other.images.iter().map(|e| self.apply(e)).collect();
        PdMap { source: other.source.clone(), target: self.target.clone(), images }
    }
}
