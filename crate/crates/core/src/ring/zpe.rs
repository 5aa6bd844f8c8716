use serde::{Deserialize, Serialize};
use std::fmt;

/// The coefficient ring Z/p^e.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Zpe {
    p: u64,
    e: u32,
    q: u64,
}

impl Zpe {
    pub fn new(p: u64, e: u32) -> Zpe {
        assert!(is_prime(p), "{p} is not prime");
        assert!(e >= 1, "precision must be at least 1");
        let q = p.checked_pow(e).expect("p^e overflows");
        assert!(q < (1 << 31), "p^e too large");
        Zpe { p, e, q }
    }

    pub fn try_new(p: u64, e: u32) -> Option<Zpe> {
        if !is_prime(p) || e == 0 {
            return None;
        }
        match p.checked_pow(e) {
            Some(q) if q < (1 << 31) => Some(Zpe { p, e, q }),
            _ => None,
        }
    }

    #[inline]
    pub fn p(&self) -> u64 {
        self.p
    }
    #[inline]
    pub fn e(&self) -> u32 {
        self.e
    }
    #[inline]
    pub fn q(&self) -> u64 {
        self.q
    }

    #[inline]
    pub fn from_i64(&self, x: i64) -> u64 {
        x.rem_euclid(self.q as i64) as u64
    }

    #[inline]
    pub fn from_i128(&self, x: i128) -> u64 {
        x.rem_euclid(self.q as i128) as u64
    }

    #[inline]
    pub fn add(&self, a: u64, b: u64) -> u64 {
        let s = a + b;
        if s >= self.q {
            s - self.q
        } else {
            s
        }
    }

    #[inline]
    pub fn sub(&self, a: u64, b: u64) -> u64 {
        if a >= b {
            a - b
        } else {
            a + self.q - b
        }
    }

    #[inline]
    pub fn neg(&self, a: u64) -> u64 {
        if a == 0 {
            0
        } else {
            self.q - a
        }
    }

    #[inline]
    pub fn mul(&self, a: u64, b: u64) -> u64 {
        a * b % self.q
    }

    /// a - c*b
    #[inline]
    pub fn sub_mul(&self, a: u64, c: u64, b: u64) -> u64 {
        self.sub(a, c * b % self.q)
    }

    pub fn pow(&self, a: u64, mut n: u64) -> u64 {
        let mut base = a % self.q;
        let mut acc = 1 % self.q;
        while n > 0 {
            if n & 1 == 1 {
                acc = self.mul(acc, base);
            }
            base = self.mul(base, base);
            n >>= 1;
        }
        acc
    }

    /// p-adic valuation, with val(0) = e.
    pub fn val(&self, a: u64) -> u32 {
        let mut a = a % self.q;
        if a == 0 {
            return self.e;
        }
        let mut v = 0;
        while a.is_multiple_of(self.p) {
            a /= self.p;
            v += 1;
        }
        v
    }

    /// a / p^val(a) as an integer representative; a unit of Z/p^e.
    pub fn unit_part(&self, a: u64) -> u64 {
        let mut a = a % self.q;
        assert!(a != 0);
        while a.is_multiple_of(self.p) {
            a /= self.p;
        }
        a
    }

    pub fn inv(&self, a: u64) -> Option<u64> {
        let (g, x, _) = egcd(a as i64 % self.q as i64, self.q as i64);
        if g != 1 {
            return None;
        }
        Some(self.from_i64(x))
    }

    pub fn inv_unit(&self, a: u64) -> u64 {
        self.inv(a).expect("not a unit")
    }

    /// p^k, zero once k >= e.
    pub fn p_pow(&self, k: u32) -> u64 {
        if k >= self.e {
            0
        } else {
            self.p.pow(k)
        }
    }

    /// a / p^k for val(a) >= k; the quotient is only determined modulo p^(e-k).
    #[inline]
    pub fn div_p_pow(&self, a: u64, k: u32) -> u64 {
        let d = self.p.pow(k);
        debug_assert!(a.is_multiple_of(d));
        a / d
    }

    pub fn is_unit(&self, a: u64) -> bool {
        !a.is_multiple_of(self.p)
    }

    /// The same prime at another precision.
    pub fn with_e(&self, e: u32) -> Zpe {
        Zpe::new(self.p, e)
    }
}

impl fmt::Display for Zpe {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Z/{}^{}", self.p, self.e)
    }
}

fn egcd(a: i64, b: i64) -> (i64, i64, i64) {
    if b == 0 {
        (a.abs(), a.signum(), 0)
    } else {
        let (g, x, y) = egcd(b, a % b);
        (g, y, x - (a / b) * y)
    }
}

pub fn is_prime(p: u64) -> bool {
    if p < 2 {
        return false;
    }
    let mut i = 2;
    while i * i <= p {
        if p.is_multiple_of(i) {
            return false;
        }
        i += 1;
    }
    true
}

/// An element of Z/p^e carrying its ring.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Scalar {
    pub value: u64,
    pub ring: Zpe,
}

impl Scalar {
    pub fn new(ring: Zpe, value: i64) -> Scalar {
        Scalar { value: ring.from_i64(value), ring }
    }
    pub fn val(&self) -> u32 {
        self.ring.val(self.value)
    }
    pub fn is_zero(&self) -> bool {
        self.value == 0
    }
}

impl std::ops::Add for Scalar {
    type Output = Scalar;
    fn add(self, o: Scalar) -> Scalar {
        assert_eq!(self.ring, o.ring);
        Scalar { value: self.ring.add(self.value, o.value), ring: self.ring }
    }
}

impl std::ops::Sub for Scalar {
    type Output = Scalar;
    fn sub(self, o: Scalar) -> Scalar {
        assert_eq!(self.ring, o.ring);
        Scalar { value: self.ring.sub(self.value, o.value), ring: self.ring }
    }
}

impl std::ops::Mul for Scalar {
    type Output = Scalar;
    fn mul(self, o: Scalar) -> Scalar {
        assert_eq!(self.ring, o.ring);
        Scalar { value: self.ring.mul(self.value, o.value), ring: self.ring }
    }
}

impl std::ops::Neg for Scalar {
    type Output = Scalar;
    fn neg(self) -> Scalar {
        Scalar { value: self.ring.neg(self.value), ring: self.ring }
    }
}

impl fmt::Display for Scalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.value)
    }
}

/// Factorials split as p^v * unit, for binomials and divided-power constants mod p^e.
#[derive(Clone, Debug)]
pub struct Factorials {
    r: Zpe,
    val: Vec<u32>,
    unit: Vec<u64>,
    unit_inv: Vec<u64>,
}

impl Factorials {
    pub fn new(r: Zpe, n: usize) -> Factorials {
        let mut val = vec![0u32; n + 1];
        let mut unit = vec![1 % r.q(); n + 1];
        for i in 1..=n {
            let mut k = i as u64;
            let mut v = 0;
            while k.is_multiple_of(r.p()) {
                k /= r.p();
                v += 1;
            }
            val[i] = val[i - 1] + v;
            unit[i] = r.mul(unit[i - 1], k % r.q());
        }
        let unit_inv = unit.iter().map(|&u| r.inv_unit(u)).collect();
        Factorials { r, val, unit, unit_inv }
    }

    pub fn ring(&self) -> Zpe {
        self.r
    }

    pub fn len(&self) -> usize {
        self.val.len()
    }

    pub fn is_empty(&self) -> bool {
        self.val.is_empty()
    }

    fn check(&self, n: usize) {
        assert!(n < self.val.len(), "factorial table too small for {n}");
    }

    /// v_p(n!)
    pub fn v(&self, n: usize) -> u32 {
        self.check(n);
        self.val[n]
    }

    fn from_parts(&self, v: i64, u: u64) -> u64 {
        assert!(v >= 0);
        self.r.mul(self.r.p_pow(v.min(self.r.e() as i64) as u32), u)
    }

    pub fn binom(&self, n: usize, k: usize) -> u64 {
        if k > n {
            return 0;
        }
        self.check(n);
        let v = self.val[n] as i64 - self.val[k] as i64 - self.val[n - k] as i64;
        let u = self.r.mul(self.unit[n], self.r.mul(self.unit_inv[k], self.unit_inv[n - k]));
        self.from_parts(v, u)
    }

    /// (n m)! / (n! (m!)^n): the constant in gamma_n(gamma_m(y)).
    pub fn gamma_compose(&self, n: usize, m: usize) -> u64 {
        self.check(n * m);
        let v = self.val[n * m] as i64 - self.val[n] as i64 - n as i64 * self.val[m] as i64;
        let u = self.r.mul(
            self.unit[n * m],
            self.r.mul(self.unit_inv[n], self.r.pow(self.unit_inv[m], n as u64)),
        );
        self.from_parts(v, u)
    }

    /// (n m)! / (m!)^n: the constant in gamma_m(y)^n.
    pub fn gamma_power(&self, n: usize, m: usize) -> u64 {
        self.check(n * m);
        let v = self.val[n * m] as i64 - n as i64 * self.val[m] as i64;
        let u = self.r.mul(self.unit[n * m], self.r.pow(self.unit_inv[m], n as u64));
        self.from_parts(v, u)
    }

    /// p^n / n!
    pub fn p_divided(&self, n: usize) -> u64 {
        self.check(n);
        let v = n as i64 - self.val[n] as i64;
        self.from_parts(v, self.unit_inv[n])
    }

    /// n! itself.
    pub fn fact(&self, n: usize) -> u64 {
        self.check(n);
        self.from_parts(self.val[n] as i64, self.unit[n])
    }
}
