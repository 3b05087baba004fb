//! Dirichlet characters, exact cyclotomic numbers and the classical values
//! attached to them: Gauss sums, generalized Bernoulli numbers, L-values and
//! cyclotomic units with both their complex and p-adic images.

use std::collections::BTreeMap;
use std::sync::Arc;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Zero};
use serde_json::{json, Value};

use crate::arith::{cyclotomic_poly, euler_phi, factor, inv_mod_u64, mult_order, pow_mod_u64};
use crate::cyclofield::{FiniteOrderCharacter, LocalElem, LocalRing};
use crate::error::{Error, Result};
use crate::hpfloat::{Complex, Real};
use crate::padic::PadicValue;

fn rat(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

/// Σ c_k ζ_n^k with rational c_k and ζ_n = e^{2πi/n}; not reduced modulo Φ_n.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Cyclo {
    n: u64,
    c: Vec<BigRational>,
}

impl Cyclo {
    pub fn zero(n: u64) -> Self {
        Cyclo { n, c: vec![BigRational::zero(); n as usize] }
    }
    pub fn from_rational(q: BigRational) -> Self {
        Cyclo { n: 1, c: vec![q] }
    }
    pub fn from_int(k: i64) -> Self {
        Self::from_rational(rat(k, 1))
    }
    /// ζ_n^k.
    pub fn root(n: u64, k: i64) -> Self {
        let mut z = Self::zero(n);
        z.c[k.rem_euclid(n as i64) as usize] = BigRational::one();
        z
    }
    pub fn order(&self) -> u64 {
        self.n
    }
    /// Nonzero terms (k, c_k).
    pub fn terms(&self) -> impl Iterator<Item = (u64, &BigRational)> {
        self.c
            .iter()
            .enumerate()
            .filter(|(_, q)| !q.is_zero())
            .map(|(k, q)| (k as u64, q))
    }

    /// Same number written over ζ_m, n | m.
    pub fn lift(&self, m: u64) -> Self {
        assert_eq!(m % self.n, 0, "lift target must be a multiple");
        if m == self.n {
            return self.clone();
        }
        let s = m / self.n;
        let mut out = Self::zero(m);
        for (k, q) in self.terms() {
            out.c[(k * s) as usize] = q.clone();
        }
        out
    }

    fn common(&self, o: &Self) -> (Self, Self) {
        let m = self.n.lcm(&o.n);
        (self.lift(m), o.lift(m))
    }

    pub fn add(&self, o: &Self) -> Self {
        let (mut a, b) = self.common(o);
        for (x, y) in a.c.iter_mut().zip(b.c) {
            *x += y;
        }
        a
    }
    pub fn neg(&self) -> Self {
        Cyclo { n: self.n, c: self.c.iter().map(|q| -q).collect() }
    }
    pub fn sub(&self, o: &Self) -> Self {
        self.add(&o.neg())
    }
    pub fn scale(&self, q: &BigRational) -> Self {
        Cyclo { n: self.n, c: self.c.iter().map(|x| x * q).collect() }
    }
    pub fn mul(&self, o: &Self) -> Self {
        let (a, b) = self.common(o);
        let n = a.n;
        let mut out = Self::zero(n);
        let bt: Vec<_> = b.terms().map(|(k, q)| (k, q.clone())).collect();
        for (i, x) in a.terms() {
            for (j, y) in &bt {
                out.c[((i + j) % n) as usize] += x * y;
            }
        }
        out
    }
    pub fn pow(&self, e: u64) -> Self {
        let mut acc = Self::from_int(1);
        for _ in 0..e {
            acc = acc.mul(self);
        }
        acc
    }
    /// σ_a: ζ ↦ ζ^a.
    pub fn galois(&self, a: i64) -> Self {
        let n = self.n as i64;
        let mut out = Self::zero(self.n);
        for (k, q) in self.terms() {
            out.c[(k as i64 * a).rem_euclid(n) as usize] += q;
        }
        out
    }
    pub fn conj(&self) -> Self {
        self.galois(-1)
    }

    /// Canonical representative: remainder modulo Φ_n, as coefficients of ζ_n^k, k < φ(n).
    pub fn reduced(&self) -> Vec<BigRational> {
        let phi = cyclotomic_poly(self.n);
        let deg = phi.len() - 1;
        let mut a = self.c.clone();
        for top in (deg..a.len()).rev() {
            let lead = a[top].clone();
            if lead.is_zero() {
                continue;
            }
            for (i, ci) in phi.iter().enumerate() {
                a[top - deg + i] -= &lead * BigRational::from_integer(ci.clone());
            }
        }
        a.truncate(deg);
        a
    }
    pub fn is_zero(&self) -> bool {
        self.reduced().iter().all(|q| q.is_zero())
    }
    pub fn equals(&self, o: &Self) -> bool {
        self.sub(o).is_zero()
    }
    /// The value when it is rational.
    pub fn as_rational(&self) -> Option<BigRational> {
        let r = self.reduced();
        if r.iter().skip(1).all(|q| q.is_zero()) {
            Some(r.first().cloned().unwrap_or_else(BigRational::zero))
        } else {
            None
        }
    }

    /// Image under ι_∞ (ζ_n ↦ e^{2πi/n}).
    pub fn to_complex(&self, bits: u32) -> Complex {
        let mut acc = Complex::zero(bits);
        for (k, q) in self.terms() {
            let z = Complex::root_of_unity(k as i64, self.n, bits);
            acc = acc.add(&z.mul_rational(q));
        }
        acc
    }

    /// Image under ι_p in R(D, N): write n = n'p^r, then ζ_{n'} ↦ ζ_D^{D/n'} and
    /// ζ_{p^r} ↦ ζ_{p^N}^{p^{N-r}}.
    pub fn to_local(&self, ring: &Arc<LocalRing>) -> Result<LocalElem> {
        let p = ring.p();
        let mut np = self.n;
        let mut r = 0u32;
        while np.is_multiple_of(p) {
            np /= p;
            r += 1;
        }
        let d = ring.d();
        if !d.is_multiple_of(np) || r > ring.level() {
            return Err(Error::DomainError(format!(
                "ζ_{} does not embed in R({}, {})",
                self.n,
                d,
                ring.level()
            )));
        }
        let pr = p.pow(r);
        let inv_pr = if np == 1 { 0 } else { inv_mod_u64(pr % np, np).unwrap() };
        let inv_np = if pr == 1 { 0 } else { inv_mod_u64(np % pr, pr).unwrap() };
        let prec = ring.precision() as i64;
        let up = p.pow(ring.level() - r);
        let mut acc = ring.zero();
        for (k, q) in self.terms() {
            let a = (k % np.max(1)) * inv_pr % np.max(1);
            let b = (k % pr) * inv_np % pr.max(1);
            let z = ring.zeta_d(a * (d / np)).mul_zeta_power(b * up);
            let c = ring.from_padic(&PadicValue::from_rational(p, q, prec));
            acc = acc.add(&z.mul(&c));
        }
        Ok(acc)
    }

    pub fn to_json(&self) -> Value {
        let terms: Vec<Value> = self.terms().map(|(k, q)| json!([k, q.to_string()])).collect();
        json!({ "order": self.n, "terms": terms })
    }

    pub fn from_json(v: &Value) -> Result<Self> {
        let n = v["order"].as_u64().ok_or_else(|| Error::Parse("order".into()))?;
        let mut out = Self::zero(n.max(1));
        for t in v["terms"].as_array().ok_or_else(|| Error::Parse("terms".into()))? {
            let k = t[0].as_u64().ok_or_else(|| Error::Parse("term index".into()))?;
            let q: BigRational = t[1]
                .as_str()
                .ok_or_else(|| Error::Parse("term value".into()))?
                .parse()
                .map_err(|_| Error::Parse("rational".into()))?;
            out.c[(k % n) as usize] += q;
        }
        Ok(out)
    }
}

/// Generators of (Z/m)^× with their orders: one per odd prime power (smallest
/// primitive root, lifted by CRT), and -1, 5 for the power of 2.
pub fn unit_generators(m: u64) -> Vec<(u64, u64)> {
    let mut out = Vec::new();
    for (q, k) in factor(m) {
        let qk = q.pow(k);
        let rest = m / qk;
        let lift = |g: u64| -> u64 {
            if rest == 1 {
                return g % m;
            }
            // x ≡ g mod q^k, x ≡ 1 mod rest
            let t = inv_mod_u64(rest % qk, qk).unwrap();
            
            (1 + (((g + qk - 1) % qk) * t % qk) * rest) % m
        };
        if q == 2 {
            if k >= 2 {
                out.push((lift(qk - 1), 2));
            }
            if k >= 3 {
                out.push((lift(5), qk / 4));
            }
        } else {
            let phi = euler_phi(qk);
            let g = (2..qk)
                .find(|&g| g % q != 0 && mult_order(g, qk) == phi)
                .unwrap();
            out.push((lift(g), phi));
        }
    }
    out
}

/// A Dirichlet character mod m with values in μ_order, stored by its images
/// on `unit_generators(m)`: χ(g_i) = ζ_order^{images[i]}.
#[derive(Clone, Debug)]
pub struct DirichletData {
    modulus: u64,
    order: u64,
    images: Vec<u64>,
    label: String,
    table: Vec<Option<u64>>,
}

impl PartialEq for DirichletData {
    fn eq(&self, o: &Self) -> bool {
        self.modulus == o.modulus && self.order == o.order && self.images == o.images
    }
}

impl DirichletData {
    pub fn new(modulus: u64, order: u64, images: Vec<u64>, label: &str) -> Result<Self> {
        if modulus == 0 || order == 0 {
            return Err(Error::DomainError("modulus and order must be positive".into()));
        }
        let gens = unit_generators(modulus);
        if gens.len() != images.len() {
            return Err(Error::DomainError(format!(
                "modulus {modulus} has {} generators, got {} images",
                gens.len(),
                images.len()
            )));
        }
        for ((_, og), &e) in gens.iter().zip(&images) {
            if !(e as u128 * *og as u128).is_multiple_of(order as u128) {
                return Err(Error::DomainError("image order does not divide generator order".into()));
            }
        }
        let images: Vec<u64> = images.iter().map(|e| e % order).collect();
        let mut table = vec![None; modulus as usize];
        table[1 % modulus as usize] = Some(0);
        let mut elems = vec![(1 % modulus, 0u64)];
        for ((g, og), &e) in gens.iter().zip(&images) {
            let mut next = Vec::with_capacity(elems.len() * *og as usize);
            for &(x, ex) in &elems {
                let mut y = x;
                let mut ey = ex;
                for _ in 0..*og {
                    next.push((y, ey));
                    y = y * g % modulus;
                    ey = (ey + e) % order;
                }
            }
            elems = next;
        }
        for (x, e) in elems {
            table[x as usize] = Some(e);
        }
        let mut chi = DirichletData { modulus, order, images, label: label.to_string(), table };
        chi.normalize_order();
        Ok(chi)
    }

    /// Character given by its exponent function on residues.
    pub fn from_fn(modulus: u64, order: u64, label: &str, f: impl Fn(u64) -> u64) -> Result<Self> {
        let images = unit_generators(modulus).iter().map(|(g, _)| f(*g) % order).collect();
        Self::new(modulus, order, images, label)
    }

    pub fn trivial() -> Self {
        Self::new(1, 1, vec![], "trivial").unwrap()
    }

    /// Built-in characters by name.
    pub fn builtin(name: &str) -> Result<Self> {
        match name {
            "mod12_quadratic" => Self::new(12, 2, vec![1, 1], name),
            "mod5_quadratic" => Self::new(5, 2, vec![1], name),
            "mod3_odd" => Self::new(3, 2, vec![1], name),
            "mod11_odd" => Self::new(11, 2, vec![1], name),
            "mod4_odd" => Self::new(4, 2, vec![1], name),
            "mod8_even" => Self::new(8, 2, vec![0, 1], name),
            _ => Err(Error::Parse(format!("unknown character {name}"))),
        }
    }

    pub fn builtin_names() -> &'static [&'static str] {
        &["mod12_quadratic", "mod5_quadratic", "mod3_odd", "mod11_odd", "mod4_odd", "mod8_even"]
    }

    /// η as a character mod p^n with values in μ_{p^{n-1}}.
    pub fn from_eta(eta: &FiniteOrderCharacter) -> Self {
        if eta.is_trivial() {
            return Self::trivial();
        }
        let p = eta.prime();
        let n = eta.conductor_exponent();
        let pn = p.pow(n);
        Self::from_fn(pn, pn / p, "eta", |a| eta.dirichlet_exponent(a) / p).unwrap()
    }

    /// The Teichmüller character mod p, pinned to the embedding fixed by `ring`:
    /// ι_p(ω(a)) ≡ a mod p. Needs (p-1) | d(ring).
    pub fn teichmuller(ring: &Arc<LocalRing>) -> Result<Self> {
        let p = ring.p();
        let d = ring.d();
        if !d.is_multiple_of(p - 1) {
            return Err(Error::DomainError(format!("R({d},·) does not contain μ_{}", p - 1)));
        }
        let base = LocalRing::new(ring.base(), 0);
        let gens = unit_generators(p);
        let g = gens.first().map(|x| x.0).unwrap_or(1);
        let step = d / (p - 1);
        let k = (0..p - 1)
            .find(|&k| {
                let z = base.zeta_d(k * step).sub(&base.from_int(&BigInt::from(g)));
                z.valuation_floor().is_none_or(|v| v >= 1)
            })
            .ok_or_else(|| Error::DomainError("no Teichmüller match".into()))?;
        Self::new(p, p - 1, if p == 2 { vec![] } else { vec![k] }, "omega")
    }

    fn normalize_order(&mut self) {
        let mut g = self.order;
        for &e in &self.images {
            g = g.gcd(&e);
        }
        if g > 1 {
            let s = g;
            self.order /= s;
            for e in self.images.iter_mut() {
                *e /= s;
            }
            for e in self.table.iter_mut().flatten() {
                *e /= s;
            }
        }
    }

    pub fn modulus(&self) -> u64 {
        self.modulus
    }
    pub fn order(&self) -> u64 {
        self.order
    }
    pub fn images(&self) -> &[u64] {
        &self.images
    }
    pub fn label(&self) -> &str {
        &self.label
    }
    pub fn with_label(mut self, label: &str) -> Self {
        self.label = label.to_string();
        self
    }
    pub fn is_trivial(&self) -> bool {
        self.order == 1
    }

    /// Exponent e with χ(a) = ζ_order^e, or None when gcd(a, m) > 1.
    pub fn value_exp(&self, a: i64) -> Option<u64> {
        let r = a.rem_euclid(self.modulus as i64) as usize;
        self.table[r]
    }
    pub fn value(&self, a: i64) -> Cyclo {
        match self.value_exp(a) {
            Some(e) => Cyclo::root(self.order, e as i64),
            None => Cyclo::zero(1),
        }
    }
    pub fn is_even(&self) -> bool {
        self.value_exp(-1) == Some(0)
    }
    /// +1 or -1.
    pub fn parity(&self) -> i64 {
        if self.is_even() {
            1
        } else {
            -1
        }
    }

    pub fn conductor(&self) -> u64 {
        let m = self.modulus;
        let mut divisors: Vec<u64> = (1..=m).filter(|f| m.is_multiple_of(*f)).collect();
        divisors.sort_unstable();
        for f in divisors {
            let ok = (0..m / f).all(|t| {
                let a = 1 + t * f;
                match self.table[(a % m) as usize] {
                    Some(e) => e == 0,
                    None => true,
                }
            });
            if ok {
                return f;
            }
        }
        m
    }

    pub fn is_primitive(&self) -> bool {
        self.conductor() == self.modulus
    }

    /// The primitive character inducing this one.
    pub fn primitive(&self) -> Self {
        let f = self.conductor();
        if f == self.modulus {
            return self.clone();
        }
        let m = self.modulus;
        let look = |b: u64| -> u64 {
            let mut a = b;
            loop {
                if let Some(e) = self.table[(a % m) as usize] {
                    return e;
                }
                a += f;
            }
        };
        Self::from_fn(f, self.order, &self.label, look).unwrap()
    }

    /// The character mod a multiple M of the modulus induced by this one.
    pub fn induce(&self, big_m: u64) -> Result<Self> {
        if !big_m.is_multiple_of(self.modulus) {
            return Err(Error::DomainError("induction needs a multiple of the modulus".into()));
        }
        Self::from_fn(big_m, self.order, &self.label, |a| self.value_exp(a as i64).unwrap_or(0))
    }

    pub fn inverse(&self) -> Self {
        let o = self.order;
        let images = self.images.iter().map(|e| (o - e) % o).collect();
        Self::new(self.modulus, o, images, &format!("{}^-1", self.label)).unwrap()
    }

    /// Product character on the lcm of the moduli.
    pub fn mul(&self, o: &Self) -> Self {
        let m = self.modulus.lcm(&o.modulus);
        let ord = self.order.lcm(&o.order);
        let (s1, s2) = (ord / self.order, ord / o.order);
        Self::from_fn(m, ord, &format!("{}*{}", self.label, o.label), |a| {
            let e1 = self.value_exp(a as i64).unwrap_or(0);
            let e2 = o.value_exp(a as i64).unwrap_or(0);
            (e1 * s1 + e2 * s2) % ord
        })
        .unwrap()
    }

    pub fn pow(&self, k: i64) -> Self {
        let o = self.order as i64;
        let images = self.images.iter().map(|&e| (e as i64 * k).rem_euclid(o) as u64).collect();
        Self::new(self.modulus, self.order, images, &format!("{}^{k}", self.label)).unwrap()
    }

    pub fn to_json(&self) -> Value {
        json!({
            "modulus": self.modulus,
            "order": self.order,
            "generator_images": self.images,
            "label": self.label,
        })
    }

    pub fn from_json(v: &Value) -> Result<Self> {
        let m = v["modulus"].as_u64().ok_or_else(|| Error::Parse("modulus".into()))?;
        let o = v["order"].as_u64().ok_or_else(|| Error::Parse("order".into()))?;
        let imgs = v["generator_images"]
            .as_array()
            .ok_or_else(|| Error::Parse("generator_images".into()))?
            .iter()
            .map(|x| x.as_u64().ok_or_else(|| Error::Parse("image".into())))
            .collect::<Result<Vec<_>>>()?;
        let label = v["label"].as_str().unwrap_or("chi");
        Self::new(m, o, imgs, label)
    }
}

/// g(χ) = Σ_a χ(a) ζ_m^a for primitive χ mod m.
pub fn gauss_sum_global(chi: &DirichletData) -> Result<Cyclo> {
    if !chi.is_primitive() {
        return Err(Error::NotPrimitive);
    }
    let m = chi.modulus;
    let o = chi.order;
    let l = m.lcm(&o);
    let mut out = Cyclo::zero(l);
    for a in 0..m {
        if let Some(e) = chi.value_exp(a as i64) {
            let k = (e * (l / o) + a * (l / m)) % l;
            out.c[k as usize] += BigRational::one();
        }
    }
    Ok(out)
}

/// Galois-Gauss sum τ(χ) = g(χ^{-1}).
pub fn tau(chi: &DirichletData) -> Result<Cyclo> {
    gauss_sum_global(&chi.inverse())
}

/// A direct sum of Dirichlet characters, none trivial.
#[derive(Clone, Debug)]
pub struct ArtinAbelian {
    summands: Vec<DirichletData>,
}

impl ArtinAbelian {
    pub fn new(summands: Vec<DirichletData>) -> Result<Self> {
        if summands.is_empty() {
            return Err(Error::DomainError("empty representation".into()));
        }
        if summands.iter().any(|c| c.is_trivial()) {
            return Err(Error::TrivialCharacter);
        }
        Ok(ArtinAbelian { summands: summands.iter().map(|c| c.primitive()).collect() })
    }
    pub fn summands(&self) -> &[DirichletData] {
        &self.summands
    }
    pub fn dim(&self) -> usize {
        self.summands.len()
    }
    pub fn d_plus(&self) -> usize {
        self.summands.iter().filter(|c| c.is_even()).count()
    }
    pub fn d_minus(&self) -> usize {
        self.dim() - self.d_plus()
    }
    /// Artin conductor: product of the summands' conductors.
    pub fn conductor(&self) -> u64 {
        self.summands.iter().map(|c| c.modulus).product()
    }
    pub fn is_unramified_at(&self, p: u64) -> bool {
        !self.conductor().is_multiple_of(p)
    }
    /// Exponents of σ_p on the standard eigenbasis: χ_i(p) as ζ_{order_i}^{e_i}.
    pub fn sigma_p(&self, p: u64) -> Vec<Cyclo> {
        self.summands.iter().map(|c| c.value(p as i64)).collect()
    }
    /// σ_∞ eigenvalues: the parities.
    pub fn sigma_inf(&self) -> Vec<i64> {
        self.summands.iter().map(|c| c.parity()).collect()
    }
    pub fn det(&self) -> DirichletData {
        let mut acc = DirichletData::trivial();
        for c in &self.summands {
            acc = acc.mul(c);
        }
        acc.primitive()
    }
    pub fn tau(&self) -> Result<Cyclo> {
        let mut acc = Cyclo::from_int(1);
        for c in &self.summands {
            acc = acc.mul(&tau(c)?);
        }
        Ok(acc)
    }
}

/// τ(ρ⊗η) = τ(ρ) g(η^{-1})^d det(ρ)^{-1}(σ_p^n) η^{-1}(N), for η of conductor p^n.
pub fn galois_gauss_sum(rho: &ArtinAbelian, eta: &DirichletData, p: u64) -> Result<Cyclo> {
    if !rho.is_unramified_at(p) {
        return Err(Error::RamifiedAtP);
    }
    let t = rho.tau()?;
    if eta.is_trivial() {
        return Ok(t);
    }
    let pn = eta.conductor();
    let mut n = 0u32;
    let mut q = pn;
    while q.is_multiple_of(p) {
        q /= p;
        n += 1;
    }
    if q != 1 {
        return Err(Error::DomainError("η must have p-power conductor".into()));
    }
    let g = gauss_sum_global(&eta.primitive().inverse())?;
    let det = rho.det();
    let det_val = det.inverse().value(pow_mod_u64(p, n as u64, det.modulus) as i64);
    let eta_n = eta.inverse().value(rho.conductor() as i64);
    Ok(t.mul(&g.pow(rho.dim() as u64)).mul(&det_val).mul(&eta_n))
}

/// Bernoulli numbers B_0..B_n with B_1 = -1/2.
pub fn bernoulli_numbers(n: usize) -> Vec<BigRational> {
    let mut b = vec![BigRational::one()];
    for k in 1..=n {
        // Σ_{j<k+1} C(k+1, j) B_j = 0
        let mut s = BigRational::zero();
        let mut c = BigInt::one();
        for (j, bj) in b.iter().enumerate() {
            s += BigRational::from_integer(c.clone()) * bj;
            c = c * BigInt::from(k + 1 - j) / BigInt::from(j + 1);
        }
        b.push(-s / BigRational::from_integer(BigInt::from(k + 1)));
    }
    b
}

/// B_{n,χ} = f^{n-1} Σ_{a=1}^{f} χ(a) B_n(a/f) for the primitive character
/// attached to χ, with f its conductor.
pub fn bernoulli_general(n: u32, chi: &DirichletData) -> Cyclo {
    assert!(n >= 1);
    let chi = chi.primitive();
    let f = chi.modulus;
    let b = bernoulli_numbers(n as usize);
    let binom: Vec<BigInt> = (0..=n as u64).map(|k| crate::arith::binomial(n as u64, k)).collect();
    let fb = BigInt::from(f);
    let mut out = Cyclo::zero(chi.order);
    for a in 1..=f {
        let Some(e) = chi.value_exp(a as i64) else { continue };
        // f^{n-1} B_n(a/f) = Σ_k C(n,k) B_k a^{n-k} f^{k-1}
        let ab = BigInt::from(a);
        let mut s = BigRational::zero();
        for k in 0..=n as usize {
            let num = &binom[k] * num_traits::pow(ab.clone(), n as usize - k);
            let t = if k == 0 {
                BigRational::new(num, fb.clone())
            } else {
                BigRational::from_integer(num * num_traits::pow(fb.clone(), k - 1))
            };
            s += t * &b[k];
        }
        out.c[e as usize] += s;
    }
    out
}

/// L(χ, 1-n) = -B_{n,χ}/n.
pub fn l_value_nonpositive(chi: &DirichletData, n: u32) -> Result<Cyclo> {
    if chi.is_trivial() {
        return Err(Error::TrivialCharacter);
    }
    Ok(bernoulli_general(n, chi).scale(&rat(-1, n as i64)))
}

/// log|1 - e^{2πi a/f}| = log(2 sin(π a/f)) for 0 < a < f.
pub fn log_abs_one_minus_zeta(a: u64, f: u64, bits: u32) -> Result<Real> {
    let w = bits + 16;
    let x = Real::pi(w).mul_int(&BigInt::from(a)).div_int(&BigInt::from(f));
    let (s, _) = x.sin_cos();
    Ok(s.ldexp(1).ln()?.with_bits(bits))
}

/// L(χ, 1) for primitive nontrivial χ of conductor f:
/// even: -(g(χ)/f) Σ χ̄(a) log|1 - ζ^a|; odd: (πi g(χ)/f²) Σ χ̄(a) a.
pub fn l_value_at_one(chi: &DirichletData, bits: u32) -> Result<Complex> {
    if chi.is_trivial() {
        return Err(Error::TrivialCharacter);
    }
    let chi = chi.primitive();
    let f = chi.modulus;
    let g = gauss_sum_global(&chi)?.to_complex(bits);
    let inv = chi.inverse();
    let mut acc = Complex::zero(bits);
    if chi.is_even() {
        for a in 1..f {
            if let Some(e) = inv.value_exp(a as i64) {
                let z = Complex::root_of_unity(e as i64, inv.order, bits);
                acc = acc.add(&z.scale(&log_abs_one_minus_zeta(a, f, bits)?));
            }
        }
        Ok(g.mul(&acc).mul_rational(&rat(-1, f as i64)))
    } else {
        let mut s = Cyclo::zero(inv.order);
        for a in 1..f {
            if let Some(e) = inv.value_exp(a as i64) {
                s.c[e as usize] += rat(a as i64, 1);
            }
        }
        let pi_i = Complex::new(Real::zero(bits), Real::pi(bits));
        Ok(pi_i.mul(&g).mul(&s.to_complex(bits)).mul_rational(&rat(1, (f * f) as i64)))
    }
}

/// Leading term L*(χ̄, 0) from the functional equation, with τ(χ) = g(χ̄):
/// τ(χ) L(χ,1)/2 for χ even, τ(χ) L(χ,1)/(iπ) for χ odd.
pub fn l_leading_at_zero(chi: &DirichletData, bits: u32) -> Result<Complex> {
    let chi = chi.primitive();
    let t = tau(&chi)?.to_complex(bits);
    let l1 = l_value_at_one(&chi, bits)?;
    let v = t.mul(&l1);
    if chi.is_even() {
        Ok(v.mul_rational(&rat(1, 2)))
    } else {
        let i_pi = Complex::new(Real::zero(bits), Real::pi(bits));
        v.div(&i_pi)
    }
}

/// One term c ⊗ u of a unit vector, with the data of u that the regulators need.
#[derive(Clone, Debug)]
pub struct UnitTerm {
    pub coeff: Cyclo,
    /// log|ι_∞(u)|.
    pub log_abs: Real,
    /// log_p(ι_p(u)) (Iwasawa branch).
    pub log_p: LocalElem,
    /// ord_p(ι_p(u)).
    pub valuation: BigRational,
    pub tag: String,
}

impl UnitTerm {
    /// The term for u·u' with the same coefficient.
    pub fn times(&self, o: &UnitTerm) -> UnitTerm {
        UnitTerm {
            coeff: self.coeff.clone(),
            log_abs: self.log_abs.add(&o.log_abs),
            log_p: self.log_p.add(&o.log_p),
            valuation: &self.valuation + &o.valuation,
            tag: format!("{}*{}", self.tag, o.tag),
        }
    }
}

/// A formal sum Σ c_a ⊗ u_a in E ⊗ O[1/p]^×.
#[derive(Clone, Debug)]
pub struct UnitVector {
    pub terms: Vec<UnitTerm>,
}

impl UnitVector {
    pub fn new(terms: Vec<UnitTerm>) -> Self {
        UnitVector { terms }
    }
    pub fn zero() -> Self {
        UnitVector { terms: vec![] }
    }
    pub fn add(&self, o: &Self) -> Self {
        let mut terms = self.terms.clone();
        terms.extend(o.terms.iter().cloned());
        UnitVector { terms }
    }
    pub fn scale(&self, c: &Cyclo) -> Self {
        UnitVector {
            terms: self
                .terms
                .iter()
                .map(|t| UnitTerm { coeff: t.coeff.mul(c), ..t.clone() })
                .collect(),
        }
    }

    /// log_∞(Σ c ⊗ u) = -Σ c log|u|.
    pub fn log_inf(&self, bits: u32) -> Complex {
        let mut acc = Complex::zero(bits);
        for t in &self.terms {
            acc = acc.sub(&t.coeff.to_complex(bits).scale(&t.log_abs));
        }
        acc
    }

    /// log_p(Σ c ⊗ u) = Σ ι_p(c) log_p(u) in `ring`.
    pub fn log_p(&self, ring: &Arc<LocalRing>) -> Result<LocalElem> {
        let mut acc = ring.zero();
        for t in &self.terms {
            let lp = lift_to(&t.log_p, ring)?;
            acc = acc.add(&t.coeff.to_local(ring)?.mul(&lp));
        }
        Ok(acc)
    }

    /// ord_p(Σ c ⊗ u) = Σ ι_p(c) ord_p(u).
    pub fn ord_p(&self, ring: &Arc<LocalRing>) -> Result<LocalElem> {
        let mut acc = ring.zero();
        for t in &self.terms {
            acc = acc.add(&t.coeff.scale(&t.valuation).to_local(ring)?);
        }
        Ok(acc)
    }

    pub fn ord_exact(&self) -> Cyclo {
        let mut acc = Cyclo::from_int(0);
        for t in &self.terms {
            acc = acc.add(&t.coeff.scale(&t.valuation));
        }
        acc
    }

    pub fn to_json(&self) -> Value {
        let terms: Vec<Value> = self
            .terms
            .iter()
            .map(|t| {
                json!({
                    "coeff": t.coeff.to_json(),
                    "complex_log": t.log_abs.to_decimal(30),
                    "padic_poly": t.log_p.to_string(),
                    "valuation": t.valuation.to_string(),
                    "tag": t.tag,
                })
            })
            .collect();
        json!({ "terms": terms })
    }
}

/// Moves x from R(d, n) into `ring` = R(d, n') with n ≤ n' along the standard inclusions.
pub fn lift_to(x: &LocalElem, ring: &Arc<LocalRing>) -> Result<LocalElem> {
    if !Arc::ptr_eq(x.ring().base(), ring.base()) {
        return Err(Error::DomainError("elements over different base rings".into()));
    }
    if x.ring().level() > ring.level() {
        return Err(Error::LevelMismatch { expected: ring.level(), found: x.ring().level() });
    }
    let mut y = x.clone();
    while y.ring().level() < ring.level() {
        let up = LocalRing::new(ring.base(), y.ring().level() + 1);
        y = y.embed_up(&up);
    }
    Ok(y)
}

/// The χη-part of the cyclotomic units: Σ_a (χη)^{-1}(a) ⊗ (ζ_m^a - 1) with m the
/// conductor. The ring must contain ζ_m (d(ring) divisible by the prime-to-p part
/// of m and level at least its p-part).
pub fn cyclotomic_unit(chi: &DirichletData, ring: &Arc<LocalRing>, bits: u32) -> Result<UnitVector> {
    if chi.is_trivial() {
        return Err(Error::TrivialCharacter);
    }
    if !chi.is_even() {
        return Err(Error::OddCharacter);
    }
    let chi = chi.primitive();
    let m = chi.modulus;
    let p = ring.p();
    let inv = chi.inverse();
    let fs = factor(m);
    let valuation = if fs.len() == 1 && fs[0].0 == p {
        rat(1, euler_phi(m) as i64)
    } else {
        BigRational::zero()
    };
    let mut cache: BTreeMap<u64, (Real, LocalElem)> = BTreeMap::new();
    let mut terms = Vec::new();
    for a in 1..m {
        let Some(e) = inv.value_exp(a as i64) else { continue };
        // ζ^{-a} - 1 = -ζ^{-a}(ζ^a - 1) has the same logs
        let key = a.min(m - a);
        if let std::collections::btree_map::Entry::Vacant(e) = cache.entry(key) {
            let la = log_abs_one_minus_zeta(key, m, bits)?;
            let z = Cyclo::root(m, key as i64).to_local(ring)?.sub(&ring.one());
            e.insert((la, z.log_iw()?));
        }
        let (la, lp) = cache[&key].clone();
        terms.push(UnitTerm {
            coeff: Cyclo::root(inv.order, e as i64),
            log_abs: la,
            log_p: lp,
            valuation: valuation.clone(),
            tag: format!("zeta_{m}^{a}-1"),
        });
    }
    Ok(UnitVector { terms })
}

/// Complex value of χ(a) as a root of unity.
pub fn value_complex(chi: &DirichletData, a: i64, bits: u32) -> Complex {
    match chi.value_exp(a) {
        Some(e) => Complex::root_of_unity(e as i64, chi.order, bits),
        None => Complex::zero(bits),
    }
}
