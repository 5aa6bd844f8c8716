mod common;

use common::*;
use num::{BigInt, BigRational, One, ToPrimitive, Zero};
use pdcris::pdpoly::{p_divided, Elem, Mono, PdAlgebra, PdError, PdMap, Var};
use pdcris::ring::Zpe;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeMap;
use std::sync::Arc;

fn one_var(p: u64, e: u32, d: u32) -> Arc<PdAlgebra> {
    PdAlgebra::new(Zpe::new(p, e), vec![Var::new("x", 1)], vec![Var::new("y", 1)], d).unwrap()
}

fn el(a: &Arc<PdAlgebra>, s: &str) -> Elem {
    Elem::parse(a, s).unwrap()
}

#[test]
fn multiplication_examples() {
    let a = one_var(2, 5, 10);
    assert_eq!(&el(&a, "g(y,2)") * &el(&a, "g(y,3)"), el(&a, "10*g(y,5)"));
    let xg = &el(&a, "x") * &el(&a, "g(y,2)");
    assert_eq!(xg.to_string(), "x*g(y,2)");
    let a4 = one_var(2, 5, 4);
    let prod = &el(&a4, "g(y,3)") * &el(&a4, "g(y,2)");
    assert!(prod.is_zero());
    assert!(prod.lossy());
    assert!(!el(&a4, "g(y,2)").lossy());
}

#[test]
fn gamma_examples() {
    let a = PdAlgebra::new(Zpe::new(3, 2), vec![], vec![Var::new("y1", 1), Var::new("y2", 1)], 6).unwrap();
    assert_eq!(el(&a, "y1 + y2").gamma(2).unwrap(), el(&a, "g(y1,2) + y1*y2 + g(y2,2)"));

    let b = one_var(2, 3, 6);
    assert_eq!(el(&b, "2").gamma(3).unwrap(), el(&b, "4"));
    // 6 * gamma_3(2) = 8 = 0
    assert!(el(&b, "2").gamma(3).unwrap().scale(6).is_zero());
    match el(&b, "x").gamma(2) {
        Err(PdError::NotInPdIdeal(m)) => assert_eq!(m, "x"),
        other => panic!("{other:?}"),
    }
    assert_eq!(el(&b, "2*x").gamma(0).unwrap(), el(&b, "1"));
    assert_eq!(el(&b, "2*x").gamma(1).unwrap(), el(&b, "2*x"));
}

#[test]
fn differential_examples() {
    let a = one_var(2, 3, 8);
    let d = el(&a, "g(y,2)").pd_d();
    assert!(d[0].is_zero());
    assert_eq!(d[1], el(&a, "y"));
    assert!(el(&a, "5").pd_d().iter().all(|c| c.is_zero()));
    let d = el(&a, "x*g(y,2)").pd_d();
    assert_eq!(d[0], el(&a, "g(y,2)"));
    assert_eq!(d[1], el(&a, "x*y"));
    assert_eq!(el(&a, "x^2").partial(0), el(&a, "2*x"));
    assert!(el(&a, "g(y,2)").partial(0).is_zero());
}

#[test]
fn gamma_of_p_matches_legendre() {
    for &(p, e) in &[(2u64, 3u32), (3, 3), (5, 2), (2, 5)] {
        let a = one_var(p, e, 4);
        let r = a.ring;
        for n in 0..40u32 {
            // p^n/n! by Legendre: v = n - sum floor(n/p^k)
            let mut v = n as i64;
            let mut k = p;
            while k <= n as u64 {
                v -= (n as u64 / k) as i64;
                k *= p;
            }
            let want = p_divided(r, n as u64);
            if v >= e as i64 {
                assert_eq!(want, 0);
            } else {
                assert_eq!(r.val(want), v as u32);
            }
            assert_eq!(Elem::constant(&a, p as i64).gamma(n).unwrap(), Elem::constant(&a, want as i64));
        }
    }
}

#[test]
fn iterated_partials_vanish() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let a = test_algebra(3, 2, 6);
    for _ in 0..20 {
        let mut z = random_pd_elem(&mut rng, &a, 6);
        for _ in 0..=a.degree {
            z = z.partial(0);
        }
        assert!(z.is_zero());
    }
}

#[test]
fn parse_errors_carry_positions() {
    let a = one_var(2, 2, 4);
    let err = |s: &str| match Elem::parse(&a, s) {
        Err(PdError::Parse(e)) => e,
        other => panic!("{s}: {other:?}"),
    };
    assert_eq!(err("x^").pos, 2);
    assert_eq!(err("3*q").pos, 2);
    assert_eq!(err("x + ").pos, 4);
    assert_eq!(err("g(x,2)").pos, 0);
    assert_eq!(err("x)").pos, 1);
}

// Rational oracle: gamma_k(y) = y^k / k! inside Q[x, y].

type QPoly = BTreeMap<Vec<u32>, BigRational>;

fn fact(n: u32) -> BigInt {
    (1..=n).fold(BigInt::one(), |a, k| a * BigInt::from(k))
}

fn to_q(z: &Elem) -> QPoly {
    let nb = z.algebra().nbase();
    let mut out = QPoly::new();
    for (m, &c) in z.terms() {
        let mut den = BigInt::one();
        for &b in &m[nb..] {
            den *= fact(b);
        }
        out.insert(m.to_vec(), BigRational::new(BigInt::from(c), den));
    }
    out
}

fn qmul(a: &QPoly, b: &QPoly) -> QPoly {
    let mut out = QPoly::new();
    for (ma, ca) in a {
        for (mb, cb) in b {
            let m: Vec<u32> = ma.iter().zip(mb).map(|(x, y)| x + y).collect();
            let e = out.entry(m).or_insert_with(BigRational::zero);
            *e += ca * cb;
        }
    }
    out.retain(|_, v| !v.is_zero());
    out
}

fn from_q(alg: &Arc<PdAlgebra>, q: &QPoly) -> Elem {
    let r = alg.ring;
    let nb = alg.nbase();
    let modulus = BigInt::from(r.q());
    let mut out = Elem::zero(alg);
    for (m, c) in q {
        if alg.weight(m) > alg.degree {
            continue;
        }
        let mut scaled = c.clone();
        for &b in &m[nb..] {
            scaled *= BigRational::from_integer(fact(b));
        }
        let num = scaled.numer().clone();
        let mut den = scaled.denom().clone();
        let mut num = num;
        let p = BigInt::from(r.p());
        while (&den % &p).is_zero() {
            assert!((&num % &p).is_zero(), "not p-integral");
            num /= &p;
            den /= &p;
        }
        let nm = ((num % &modulus + &modulus) % &modulus).to_u64().unwrap();
        let dm = ((den % &modulus + &modulus) % &modulus).to_u64().unwrap();
        let v = r.mul(nm, r.inv_unit(dm));
        out.add_term(Mono::from_slice(m), v);
    }
    out
}

fn oracle_gamma(z: &Elem, n: u32) -> Elem {
    let q = to_q(z);
    let mut acc: QPoly = [(vec![0; z.algebra().nvars()], BigRational::one())].into_iter().collect();
    for _ in 0..n {
        acc = qmul(&acc, &q);
    }
    let inv = BigRational::new(BigInt::one(), fact(n));
    for v in acc.values_mut() {
        *v *= &inv;
    }
    from_q(z.algebra(), &acc)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn gamma_matches_rational_oracle(seed in any::<u64>(), pi in 0usize..3, e in 1u32..=3, n in 0u32..=4) {
        let p = [2u64, 3, 5][pi];
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = test_algebra(p, e, 8);
        let z = random_pd_elem(&mut rng, &a, 2);
        prop_assert_eq!(z.gamma(n).unwrap(), oracle_gamma(&z, n));
    }

    #[test]
    fn pd_axioms_hold(seed in any::<u64>(), pi in 0usize..3, e in 1u32..=3) {
        let p = [2u64, 3, 5][pi];
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = test_algebra(p, e, 20);
        let z = random_pd_elem(&mut rng, &a, 2);
        let w = random_pd_elem(&mut rng, &a, 2);
        prop_assert_eq!(check_pd_axioms(&mut rng, &a, &z, &w), Ok(()));
    }

    #[test]
    fn partials_commute_and_d_squared_vanishes(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = test_algebra(2, 3, 8);
        let z = &random_pd_elem(&mut rng, &a, 6) + &Elem::var(&a, 0).pow(rng.gen_range(0..4));
        let d = z.pd_d();
        let dd: Vec<Vec<Elem>> = d.iter().map(|c| c.pd_d()).collect();
        for k in 0..a.nvars() {
            for l in 0..a.nvars() {
                prop_assert_eq!(&dd[k][l], &dd[l][k]);
            }
        }
        prop_assert_eq!(z.partial(0).partial(1), z.partial(1).partial(0));
    }

    #[test]
    fn print_parse_round_trip(seed in any::<u64>(), pi in 0usize..3) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = test_algebra([2u64, 3, 5][pi], 3, 8);
        let z = &random_pd_elem(&mut rng, &a, 5) + &Elem::constant(&a, rng.gen_range(0..50));
        let s = z.to_string();
        prop_assert_eq!(Elem::parse(&a, &s).unwrap(), z);
    }

    #[test]
    fn multiplication_is_associative(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = test_algebra(3, 2, 12);
        let (x, y, z) = (random_pd_elem(&mut rng, &a, 4), random_pd_elem(&mut rng, &a, 4), random_pd_elem(&mut rng, &a, 4));
        prop_assert_eq!(&(&x * &y) * &z, &x * &(&y * &z));
        prop_assert_eq!(&x * &y, &y * &x);
    }
}

#[test]
fn mixed_algebras_are_rejected() {
    let a = one_var(2, 2, 4);
    let b = one_var(3, 2, 4);
    assert_eq!(Elem::one(&a).try_mul(&Elem::one(&b)), Err(PdError::MixedAlgebra));
    assert_eq!(Elem::one(&a).try_add(&Elem::one(&b)), Err(PdError::MixedAlgebra));
}

#[test]
fn pd_maps_substitute_and_compose() {
    let a = one_var(2, 3, 6);
    // x -> x + y, y -> 2y
    let f = PdMap::new(&a, &a, vec![el(&a, "x + y"), el(&a, "2*y")]).unwrap();
    assert_eq!(f.apply(&el(&a, "x^2")), el(&a, "x^2 + 2*x*y + 2*g(y,2)"));
    // gamma_2(2y) = 4 gamma_2(y)
    assert_eq!(f.apply(&el(&a, "g(y,2)")), el(&a, "4*g(y,2)"));
    let ff = f.compose(&f);
    let z = el(&a, "x*g(y,2) + 3*x^3");
    assert_eq!(ff.apply(&z), f.apply(&f.apply(&z)));
    assert!(PdMap::new(&a, &a, vec![el(&a, "x"), el(&a, "x")]).is_err());
}
