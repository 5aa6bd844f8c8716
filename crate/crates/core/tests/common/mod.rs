#![allow(dead_code)]

pub mod snf;

use pdcris::pdpoly::{Elem, Mono, PdAlgebra, Var};
use pdcris::ring::Zpe;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use std::sync::Arc;

/// Two base variables, two PD variables (weights 1 and 2), roomy truncation.
pub fn test_algebra(p: u64, e: u32, degree: u32) -> Arc<PdAlgebra> {
    PdAlgebra::new(
        Zpe::new(p, e),
        vec![Var::new("x", 1), Var::new("z", 1)],
        vec![Var::new("y", 1), Var::new("w", 2)],
        degree,
    )
    .unwrap()
}

/// A random element of the PD ideal with terms of weight <= maxw.
pub fn random_pd_elem(rng: &mut ChaCha8Rng, alg: &Arc<PdAlgebra>, maxw: u32) -> Elem {
    let r = alg.ring;
    let mut out = Elem::zero(alg);
    for _ in 0..rng.gen_range(1..=3) {
        let mut m: Mono = alg.unit_mono();
        let w = rng.gen_range(0..=maxw);
        let monos = alg.monomials_of_weight(w);
        m.clone_from(&monos[rng.gen_range(0..monos.len())]);
        let mut c = rng.gen_range(1..r.q());
        if !alg.is_pd_mono(&m) {
            c = r.mul(c, r.p());
        }
        out.add_term(m, c);
    }
    out
}

/// Checks the four divided-power axioms on z, w; returns a description of the first failure.
pub fn check_pd_axioms(rng: &mut ChaCha8Rng, alg: &Arc<PdAlgebra>, z: &Elem, w: &Elem) -> Result<(), String> {
    let r = alg.ring;
    let f = alg.facts();
    let m = rng.gen_range(0..=3u32);
    let n = rng.gen_range(0..=3u32);
    let g = |x: &Elem, k: u32| x.gamma(k).unwrap();
    // multiplication
    let lhs = &g(z, m) * &g(z, n);
    let rhs = g(z, m + n).scale(f.binom((m + n) as usize, n as usize));
    if lhs != rhs || lhs.lossy() {
        return Err(format!("mul: {z} m={m} n={n}"));
    }
    // addition
    let mut sum = Elem::zero(alg);
    for i in 0..=n {
        sum = &sum + &(&g(z, i) * &g(w, n - i));
    }
    if g(&(z + w), n) != sum {
        return Err(format!("add: {z} | {w} n={n}"));
    }
    // scalar
    let c = rng.gen_range(0..r.q());
    if g(&z.scale(c), n) != g(z, n).scale(r.pow(c, n as u64)) {
        return Err(format!("scalar: {z} c={c} n={n}"));
    }
    // composition
    let k = if m == 0 { 1 } else { m };
    let lhs = g(&g(z, k), n);
    let rhs = g(z, n * k).scale(f.gamma_compose(n as usize, k as usize));
    if lhs != rhs {
        return Err(format!("compose: {z} n={n} m={k}"));
    }
    Ok(())
}

use pdcris::crystal::{CrystalData, Lifting};
use pdcris::envelope::{EnvelopePresentation, SchemePresentation};

pub fn flat_env(p: u64, e: u32, vars: &[&str], d: u32) -> Arc<EnvelopePresentation> {
    Arc::new(EnvelopePresentation::flat(&SchemePresentation::new(p, 1, vars, &[]), e, d).unwrap())
}

/// Random element of an envelope whose terms have weights in lo..=hi; terms outside the PD
/// ideal get coefficients divisible by p when `pd` is set.
pub fn random_env_elem(rng: &mut ChaCha8Rng, env: &EnvelopePresentation, lo: u32, hi: u32, pd: bool) -> Elem {
    let r = env.ring;
    let mut out = Elem::zero(&env.ambient);
    for _ in 0..rng.gen_range(1..=3) {
        let w = rng.gen_range(lo..=hi.min(env.degree));
        let idx = env.basis_of_weight(w);
        if idx.is_empty() {
            continue;
        }
        let m = env.basis[idx[rng.gen_range(0..idx.len())]].mono.clone();
        let mut c = rng.gen_range(1..r.q());
        if pd && !env.ambient.is_pd_mono(&m) {
            c = r.mul(c, r.p());
        }
        out.add_term(m, c);
    }
    env.normal_form(&out)
}

/// nabla = d + N + pG on D^rank: N strictly upper triangular, entries of weight <= 2.
pub fn random_crystal(rng: &mut ChaCha8Rng, env: &Arc<EnvelopePresentation>, rank: usize) -> CrystalData {
    let r = env.ring;
    let gamma = (0..env.nbase())
        .map(|_| {
            (0..rank)
                .map(|k| {
                    (0..rank)
                        .map(|j| {
                            let a = random_env_elem(rng, env, 0, 2, false);
                            if k < j {
                                a
                            } else {
                                a.scale(r.p())
                            }
                        })
                        .collect()
                })
                .collect()
        })
        .collect();
    CrystalData::new(env.clone(), rank, gamma).unwrap()
}

/// x_i -> x_i + h_i with h_i a random element of positive weight in the PD ideal of B.
pub fn random_lifting(rng: &mut ChaCha8Rng, d: &Arc<EnvelopePresentation>, b: &Arc<EnvelopePresentation>) -> Lifting {
    let imgs = (0..d.nbase())
        .map(|i| &Elem::var(&b.ambient, i) + &random_env_elem(rng, b, 1, 3, true))
        .collect();
    Lifting::new(d.clone(), b.clone(), imgs).unwrap()
}
