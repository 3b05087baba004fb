//! Deligne-Ribet measures of even characters χ̃ = χ_0 ω^t with p ∤ cond(χ_0),
//! built from c-regularized Stickelberger sums, the odd-case measure, and the
//! harnesses comparing them with exact special values.
//!
//! The measure ν stored here is the pushforward along a ↦ ⟨a⟩ of
//! -χ_0 ω^{t-1}(a) dE_{1,c}(a) on (Z/d_0 p^{m+1})^×, so that for s ∈ Z_p
//!
//!   ηκ^s(θ) = ν(ηκ^{s-1}) / (1 - χ̃(c) η(⟨c⟩) ⟨c⟩^s).

use std::sync::Arc;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};

use crate::arith::{gcd_u64, inv_mod_u64};
use crate::characters::{
    cyclotomic_unit, gauss_sum_global, l_value_nonpositive, Cyclo, DirichletData,
};
use crate::cyclofield::{FiniteOrderCharacter, LocalElem, LocalRing};
use crate::error::{Error, Result};
use crate::measures::{Certified, IwasawaMeasure};
use crate::padic::PadicValue;
use crate::report::Check;
use crate::stark::{euler_factor, l_invariant, PStabilization, ProjectedUnit};

#[derive(Clone, Debug)]
pub struct DeligneRibetMeasure {
    chi0: DirichletData,
    t: u64,
    omega: DirichletData,
    c: u64,
    /// χ̃(c) in R(D, 0).
    reg: LocalElem,
    /// ⟨c⟩ = c ω(c)^{-1}.
    c_angle: PadicValue,
    /// ⟨c⟩ = γ_0^{c_index} in Γ / Γ^{p^m}.
    c_index: u64,
    nu: IwasawaMeasure,
}

/// Exponent of χ_0 ω^k(a) as a power of ζ_D.
fn twisted_exp(chi0: &DirichletData, omega: &DirichletData, k: i64, a: i64, d: u64) -> Option<u64> {
    let e0 = chi0.value_exp(a)?;
    let ew = omega.value_exp(a)?;
    let (o0, ow) = (chi0.order(), omega.order());
    let kw = k.rem_euclid(ow as i64) as u64;
    Some((e0 * (d / o0) + (ew * kw % ow) * (d / ow)) % d)
}

/// exp(s log x) for x ∈ 1 + pZ_p.
fn angle_pow(x: &PadicValue, s: &PadicValue) -> Result<PadicValue> {
    if s.valuation().is_none() {
        return Ok(PadicValue::one(x.prime(), x.precision()));
    }
    s.try_mul(&x.log_iw()?)?.exp_p()
}

/// Solves (1 - a δ_h) x = y in O[Γ_m], using that δ_h has finite order there.
fn divide_one_minus_shift(y: &IwasawaMeasure, a: &LocalElem, h: u64) -> Result<IwasawaMeasure> {
    let ys = y.coeffs();
    let n = ys.len();
    let h = (h as usize) % n;
    let g = if h == 0 { n } else { gcd_u64(h as u64, n as u64) as usize };
    let len = n / g;
    let ring = y.ring();
    let one = ring.one();
    let al = a.pow(len as u64);
    let denom = one.sub(&al).inv()?;
    let mut x = vec![ring.zero(); n];
    for start in 0..g {
        let mut acc = ring.zero();
        let mut ak = ring.one();
        for k in 0..len {
            let idx = (start + n * len - (k * h) % n) % n;
            acc = acc.add(&ak.mul(&ys[idx]));
            ak = ak.mul(a);
        }
        let mut cur = acc.mul(&denom);
        x[start] = cur.clone();
        let mut j = start;
        for _ in 1..len {
            j = (j + h) % n;
            cur = ys[j].add(&a.mul(&cur));
            x[j] = cur.clone();
        }
    }
    Ok(IwasawaMeasure::new(ring, y.m_max(), x)?.with_precision(y.precision()))
}

impl DeligneRibetMeasure {
    /// θ^DR for an even nontrivial χ with p ∤ cond(χ).
    pub fn new(chi: &DirichletData, ring: &Arc<LocalRing>, m: u32, c: Option<u64>) -> Result<Self> {
        if !chi.is_even() {
            return Err(Error::OddCharacter);
        }
        Self::build(chi, 0, ring, m, c)
    }

    /// θ^DR for χ̃ = χ_0 ω^t. `ring` must be R(D, ·) with ord(χ_0) | D and (p-1) | D.
    pub fn build(chi0: &DirichletData, t: u64, ring: &Arc<LocalRing>, m: u32, c: Option<u64>) -> Result<Self> {
        let p = ring.p();
        let chi0 = chi0.primitive();
        let d0 = chi0.modulus();
        if d0.is_multiple_of(p) {
            return Err(Error::RamifiedAtP);
        }
        let t = t % (p - 1);
        if chi0.parity() * if t.is_multiple_of(2) { 1 } else { -1 } != 1 {
            return Err(Error::OddCharacter);
        }
        if chi0.is_trivial() && t == 0 {
            return Err(Error::TrivialCharacter);
        }
        let base = LocalRing::new(ring.base(), 0);
        let big_d = base.d();
        if !big_d.is_multiple_of(chi0.order()) {
            return Err(Error::DomainError(format!("R({big_d},·) does not contain the values of χ")));
        }
        let omega = DirichletData::teichmuller(&base)?;
        let reg_exp = |c: u64| twisted_exp(&chi0, &omega, t as i64, c as i64, big_d);
        let c = match c {
            Some(c) => {
                if gcd_u64(c, d0 * p) != 1 || reg_exp(c) == Some(0) {
                    return Err(Error::DegenerateRegularizer(c));
                }
                c
            }
            None => (2..)
                .find(|&c| gcd_u64(c, d0 * p) == 1 && reg_exp(c) != Some(0))
                .unwrap(),
        };
        let wp = ring.precision() as i64;
        let reg = base.zeta_d(reg_exp(c).unwrap());
        let teich_c = PadicValue::teichmuller(p, &BigInt::from(c), wp)?;
        let c_angle = PadicValue::from_i64(p, c as i64, wp).try_div(&teich_c)?;
        let c_index = crate::cyclofield::gamma_log(p, c, m + 1);
        let nu = stickelberger(&chi0, &omega, t, c, m, &base)?;
        Ok(DeligneRibetMeasure { chi0, t, omega, c, reg, c_angle, c_index, nu })
    }

    pub fn regularizer(&self) -> u64 {
        self.c
    }
    pub fn teichmuller_power(&self) -> u64 {
        self.t
    }
    pub fn character(&self) -> &DirichletData {
        &self.chi0
    }
    pub fn omega(&self) -> &DirichletData {
        &self.omega
    }
    pub fn ring(&self) -> &Arc<LocalRing> {
        self.nu.ring()
    }
    pub fn m_max(&self) -> u32 {
        self.nu.m_max()
    }
    /// The regularized Stickelberger measure ν.
    pub fn stickelberger_measure(&self) -> &IwasawaMeasure {
        &self.nu
    }

    /// ηκ^s(θ^DR) for s ∈ Z_p. Certified to p^{m+1+v(s-1)}.
    pub fn eval_s(&self, eta: &FiniteOrderCharacter, s: &PadicValue) -> Result<Certified> {
        let p = self.nu.prime();
        let wp = self.ring().precision() as i64;
        let sm1 = s.try_sub(&PadicValue::from_i64(p, 1, wp))?;
        let num = self.nu.eval_kappa(eta, &sm1)?;
        let target = num.value.ring().clone();
        let cs = target.from_padic(&angle_pow(&self.c_angle, s)?);
        let reg = lift(&self.reg, &target);
        let denom = target.one().sub(&reg.mul(&eta.value_at(&target, self.c)).mul(&cs));
        let value = num.value.div(&denom)?.truncate(num.certificate);
        Ok(Certified { value, certificate: num.certificate })
    }

    /// ηκ^n(θ^DR).
    pub fn eval(&self, eta: &FiniteOrderCharacter, n: i64) -> Result<Certified> {
        let wp = self.ring().precision() as i64;
        let s = if n == 0 {
            PadicValue::exact_zero(self.nu.prime())
        } else {
            PadicValue::from_i64(self.nu.prime(), n, wp)
        };
        self.eval_s(eta, &s)
    }

    /// L_p(χ̃, s) = κ^{1-s}(θ^DR).
    pub fn lp_eval(&self, s: &PadicValue) -> Result<Certified> {
        let p = self.nu.prime();
        let one = PadicValue::from_i64(p, 1, self.ring().precision() as i64);
        self.eval_s(&FiniteOrderCharacter::trivial(p), &one.try_sub(s)?)
    }

    /// θ^DR itself in O[Γ_m]: Tw_{-1}(ν)·(1 - χ̃(c) δ_{⟨c⟩})^{-1}, exact modulo p^{m+1}.
    pub fn theta(&self) -> Result<IwasawaMeasure> {
        divide_one_minus_shift(&self.nu.twist(-1), &self.reg, self.c_index)
    }

    /// The character χ_0 ω^{t-n} η whose L-value ηκ^n(θ^DR) interpolates.
    pub fn twisted_character(&self, eta: &FiniteOrderCharacter, n: i64) -> DirichletData {
        self.chi0
            .mul(&self.omega.pow(self.t as i64 - n))
            .mul(&DirichletData::from_eta(eta))
            .primitive()
    }
}

fn lift(x: &LocalElem, ring: &Arc<LocalRing>) -> LocalElem {
    crate::characters::lift_to(x, ring).expect("same base ring")
}

/// -Σ over a ∈ (Z/d_0 p^{m+1})^× of χ_0 ω^{t-1}(a) E_{1,c}(a) δ_{⟨a⟩}, with
/// E_{1,c}(a) = {a/M} - c{c^{-1}a/M} + (c-1)/2 and M = d_0 p^{m+1}.
fn stickelberger(
    chi0: &DirichletData,
    omega: &DirichletData,
    t: u64,
    c: u64,
    m: u32,
    base: &Arc<LocalRing>,
) -> Result<IwasawaMeasure> {
    let p = base.p();
    let big_d = base.d();
    let d0 = chi0.modulus();
    let pm1 = p.pow(m + 1);
    let pm = p.pow(m);
    let big_m = d0 * pm1;
    let cinv = inv_mod_u64(c % big_m, big_m).ok_or(Error::DegenerateRegularizer(c))?;

    // a mod p^{m+1} ↦ j with ⟨a⟩ = (1+p)^j
    let mut index = vec![u32::MAX; pm1 as usize];
    let mut g = 1u64;
    for j in 0..pm {
        index[g as usize] = j as u32;
        g = g * (1 + p) % pm1;
    }
    let teich_inv: Vec<u64> = (0..p)
        .map(|r| {
            if r == 0 {
                return 0;
            }
            let w = PadicValue::teichmuller(p, &BigInt::from(r), m as i64 + 1).unwrap();
            let w: u64 = w.residue(m + 1).unwrap().try_into().unwrap();
            inv_mod_u64(w, pm1).unwrap()
        })
        .collect();
    let weight: Vec<Option<u64>> = (0..d0 * p)
        .map(|a| twisted_exp(chi0, omega, t as i64 - 1, a as i64, big_d))
        .collect();

    let dd = big_d as usize;
    let mut sums = vec![0i64; pm as usize * dd];
    let (bm, cc) = (big_m as i128, c as i128);
    for a in 1..big_m {
        let Some(w) = weight[(a % (d0 * p)) as usize] else { continue };
        let s = (a as u128 * cinv as u128 % big_m as u128) as i128;
        // -2 E_{1,c}(a), an integer
        let e2 = -2 * ((a as i128 - cc * s) / bm) - (cc - 1);
        let ap = a % pm1;
        let angle = (ap as u128 * teich_inv[(a % p) as usize] as u128 % pm1 as u128) as usize;
        let j = index[angle] as usize;
        debug_assert!(j < pm as usize);
        sums[j * dd + w as usize] += e2 as i64;
    }

    let zetas: Vec<Vec<BigInt>> = (0..big_d).map(|w| base.zeta_d(w).coeffs().to_vec()).collect();
    let f = base.f();
    let wp = base.precision() as i64;
    let half = base.from_padic(&PadicValue::from_rational(
        p,
        &BigRational::new(BigInt::one(), BigInt::from(2)),
        wp,
    ));
    let mut coeffs = Vec::with_capacity(pm as usize);
    for j in 0..pm as usize {
        let mut b = vec![BigInt::zero(); f];
        for (w, z) in zetas.iter().enumerate() {
            let s = sums[j * dd + w];
            if s != 0 {
                for (bi, zi) in b.iter_mut().zip(z) {
                    *bi += zi * s;
                }
            }
        }
        coeffs.push(base.from_base(&b).mul(&half));
    }
    IwasawaMeasure::new(base, m, coeffs)
}

/// -(1 - ψ(p) p^{n-1}) B_{n,ψ}/n = L_{{p}}(ψ, 1-n), for ψ primitive and n ≥ 1.
pub fn interpolation_value(psi: &DirichletData, n: u32, p: u64) -> Result<Cyclo> {
    if n == 0 {
        return Err(Error::DomainError("n must be positive".into()));
    }
    let psi = psi.primitive();
    let b = l_value_nonpositive(&psi, n)?;
    let euler = match psi.value_exp(p as i64) {
        None => Cyclo::from_int(1),
        Some(e) => {
            let pp = BigRational::from_integer(num_traits::pow(BigInt::from(p), n as usize - 1));
            Cyclo::from_int(1).sub(&Cyclo::root(psi.order(), e as i64).scale(&pp))
        }
    };
    Ok(euler.mul(&b))
}

fn eta_name(eta: &FiniteOrderCharacter) -> String {
    if eta.is_trivial() {
        "1".into()
    } else {
        format!("eta(p^{},k={})", eta.conductor_exponent(), eta.generator_exponent())
    }
}

fn residual(a: &LocalElem, b: &LocalElem) -> i64 {
    a.residual_valuation(b)
}

/// ηκ^n(θ^DR) against the exact Bernoulli value, one check per (η, n).
pub fn verify_interpolation(
    dr: &DeligneRibetMeasure,
    etas: &[FiniteOrderCharacter],
    ns: &[i64],
) -> Result<Vec<Check>> {
    let p = dr.nu.prime();
    let mut out = vec![];
    for eta in etas {
        for &n in ns {
            let got = dr.eval(eta, n)?;
            let psi = dr.twisted_character(eta, n);
            let want = interpolation_value(&psi, n as u32, p)?.to_local(got.value.ring())?;
            out.push(Check::new(
                format!("interpolation[{}, n={n}]", eta_name(eta)),
                &got.value,
                &want,
                residual(&got.value, &want),
                got.certificate,
            ));
        }
    }
    Ok(out)
}

/// Normalization constants tried between η(θ^DR) and the EX right side.
pub const EX_CONSTANTS: [(i64, i64); 4] = [(-2, 1), (2, 1), (-1, 2), (1, 2)];

#[derive(Clone, Debug)]
pub struct ExReport {
    pub checks: Vec<Check>,
    /// The constant c with η(θ^DR) = c·RHS for every η, if one matched.
    pub matched_constant: Option<String>,
}

/// The even case of EX and Leopoldt's formula for ρ = χ (t = 0). For each η:
///   leopoldt: η(θ^DR) = -E·(g(χη)/f) Σ (χη)^{-1}(a) log_p(ζ_f^a - 1)
///   ex:       η(θ^DR) = c·E·log_p(ε^{χη}_cyc) / (2 g((χη)^{-1})), c ∈ {±2^{±1}}
/// with E the Euler factor of the stabilization at η = 𝟙 and 1 otherwise.
pub fn verify_ex(
    dr: &DeligneRibetMeasure,
    stab: &PStabilization,
    etas: &[FiniteOrderCharacter],
    bits: u32,
) -> Result<ExReport> {
    if dr.t != 0 {
        return Err(Error::DomainError("EX harness needs t = 0".into()));
    }
    let p = dr.nu.prime();
    let chi = &dr.chi0;
    let mut checks = vec![];
    let expected = [chi.value(p as i64)];
    let stab_ok = stab.dim() == 1
        && stab.d_plus() == 1
        && stab.eigenvalues().iter().zip(&expected).all(|(a, b)| a.equals(b));
    checks.push(Check::flag(
        "stabilization eigenvalues match sigma_p",
        stab_ok,
        format!("{} eigenvalue(s)", stab.dim()),
    ));
    let d0 = chi.modulus();
    if !dr.ring().d().is_multiple_of(d0) {
        return Err(Error::DomainError(format!("the base ring must contain μ_{d0}")));
    }
    let mut residual_by_const = vec![i64::MAX; EX_CONSTANTS.len()];
    let mut all_certified = true;
    for eta in etas {
        let lhs = dr.eval(eta, 0)?;
        let ring = lhs.value.ring().clone();
        let psi = chi.mul(&DirichletData::from_eta(eta)).primitive();
        let f = psi.modulus();
        let k = eta.conductor_exponent();
        let g = gauss_sum_global(&psi)?.to_local(&ring)?;
        let dinv = ring.from_padic(&PadicValue::from_rational(
            p,
            &BigRational::new(BigInt::from(psi.parity()), BigInt::from(f / p.pow(k))),
            ring.precision() as i64,
        ));
        // 1/g(ψ^{-1}) = ψ(-1) g(ψ)/f
        let inv_g = g.mul(&dinv).div_p_power(k);
        let logu = cyclotomic_unit(&psi, &ring, bits)?.log_p(&ring)?;
        let e = if eta.is_trivial() {
            if stab_ok {
                euler_factor(stab, &ring)?
            } else {
                ring.zero()
            }
        } else {
            ring.one()
        };
        let leop = e.mul(&inv_g).mul(&logu).neg();
        let name = eta_name(eta);
        checks.push(Check::new(
            format!("leopoldt[{name}]"),
            &lhs.value,
            &leop,
            residual(&lhs.value, &leop),
            lhs.certificate,
        ));
        let half = ring.from_padic(&PadicValue::from_rational(
            p,
            &BigRational::new(BigInt::one(), BigInt::from(2)),
            ring.precision() as i64,
        ));
        let rhs = e.mul(&logu).mul(&inv_g).mul(&half);
        let mut best = (i64::MIN, 0usize);
        for (i, &(a, b)) in EX_CONSTANTS.iter().enumerate() {
            let q = ring.from_padic(&PadicValue::from_rational(
                p,
                &BigRational::new(a.into(), b.into()),
                ring.precision() as i64,
            ));
            let r = residual(&lhs.value, &rhs.mul(&q));
            residual_by_const[i] = residual_by_const[i].min(r);
            if r > best.0 {
                best = (r, i);
            }
        }
        let (a, b) = EX_CONSTANTS[best.1];
        all_certified &= best.0 >= lhs.certificate;
        checks.push(Check::new(
            format!("ex[{name}] constant {}", const_label(a, b)),
            &lhs.value,
            &rhs,
            best.0,
            lhs.certificate,
        ));
    }
    let matched_constant = if all_certified && !etas.is_empty() {
        let (i, _) = residual_by_const
            .iter()
            .enumerate()
            .max_by_key(|(_, r)| **r)
            .unwrap();
        Some(const_label(EX_CONSTANTS[i].0, EX_CONSTANTS[i].1))
    } else {
        None
    };
    Ok(ExReport { checks, matched_constant })
}

fn const_label(a: i64, b: i64) -> String {
    if b == 1 {
        format!("{a}")
    } else {
        format!("{a}/{b}")
    }
}

/// θ = Tw_{-1}(θ^{DR,ι}_{χ̃}) for an odd χ with p ∤ cond(χ), where χ̃ = χ^{-1}ω.
#[derive(Clone, Debug)]
pub struct OddTheta {
    chi: DirichletData,
    dr: DeligneRibetMeasure,
}

impl OddTheta {
    pub fn new(chi: &DirichletData, ring: &Arc<LocalRing>, m: u32, c: Option<u64>) -> Result<Self> {
        if chi.is_even() {
            return Err(Error::DomainError("odd_theta needs an odd character".into()));
        }
        let dr = DeligneRibetMeasure::build(&chi.inverse(), 1, ring, m, c)?;
        Ok(OddTheta { chi: chi.primitive(), dr })
    }

    pub fn character(&self) -> &DirichletData {
        &self.chi
    }
    pub fn even_measure(&self) -> &DeligneRibetMeasure {
        &self.dr
    }

    /// θ in O[Γ_m]: ν^ι·(1 - χ̃(c)⟨c⟩ δ_{⟨c⟩^{-1}})^{-1}. No twist is involved,
    /// so the projection is exact to the working precision.
    pub fn measure(&self) -> Result<IwasawaMeasure> {
        let nu = &self.dr.nu;
        let n = nu.coeffs().len() as u64;
        let a = self.dr.reg.mul(&nu.ring().from_padic(&self.dr.c_angle));
        let h = (n - self.dr.c_index % n) % n;
        divide_one_minus_shift(&nu.involution(), &a, h)
    }

    /// κ^s(θ) = L_p(χ^{-1}ω, s).
    pub fn lp_eval(&self, s: &PadicValue) -> Result<Certified> {
        self.dr.lp_eval(s)
    }
}

/// The weak Gross-Stark identity (1/e!) d^e/ds^e κ^s(θ)|_{s=0} = (-1)^e 𝓛 E L(χ^{-1}, 0)
/// for odd χ, with 𝓛 computed from the supplied p-unit projection. When e = 0 it
/// checks θ(𝟙) = E·L(χ^{-1}, 0) instead.
pub fn verify_ezc_gross(
    theta: &OddTheta,
    unit: Option<&ProjectedUnit>,
    ring: &Arc<LocalRing>,
) -> Result<Vec<Check>> {
    let chi = &theta.chi;
    let p = ring.p();
    let stab = PStabilization::pure(vec![chi.value(p as i64)], vec![])?;
    let e = stab.e();
    let mu = theta.measure()?;
    let euler = euler_factor(&stab, ring)?;
    let lval = l_value_nonpositive(&chi.inverse(), 1)?.to_local(ring)?;
    let mut out = vec![];
    let mass = mu.total_mass();
    if e == 0 {
        let rhs = euler.mul(&lval);
        out.push(Check::new("value at 1", &mass, &rhs, residual(&mass, &rhs), mass.precision()));
        return Ok(out);
    }
    let unit = unit.ok_or_else(|| Error::MissingUnitData("p-unit for the trivial zero".into()))?;
    if unit.unit.terms.is_empty() {
        return Err(Error::MissingUnitData("empty p-unit".into()));
    }
    out.push(Check::new(
        "trivial zero at 1",
        &mass,
        "0",
        mass.valuation_floor().unwrap_or(mass.precision()).min(mass.precision()),
        mass.precision(),
    ));
    let vo = mu.vanishing_order(e as u32);
    out.push(Check::flag(
        format!("exact order of vanishing {e}"),
        vo.certain && vo.order as usize == e,
        format!("order {} certain={}", vo.order, vo.certain),
    ));
    let linv = l_invariant(&stab, &[], &[vec![unit.unit.clone()]], ring)?;
    let der = mu.derivative_at_trivial(e as u32)?;
    let sign = if e % 2 == 0 { ring.one() } else { ring.one().neg() };
    let rhs = sign.mul(&linv.value).mul(&euler).mul(&lval);
    out.push(Check::new(
        format!("derivative order {e} vs L-invariant"),
        &der.value,
        &rhs,
        residual(&der.value, &rhs),
        der.certificate,
    ));
    Ok(out)
}

/// Characters η of conductor p^k for k in `exponents`; k = 0 gives 𝟙 and k = 1 nothing.
pub fn etas_with_conductors(p: u64, exponents: &[u32]) -> Vec<FiniteOrderCharacter> {
    let mut out = vec![];
    for &k in exponents {
        if k == 0 {
            out.push(FiniteOrderCharacter::trivial(p));
        } else if k >= 2 {
            for j in (1..p.pow(k - 1)).filter(|j| j % p != 0) {
                out.push(FiniteOrderCharacter::new(p, k, j).expect("primitive"));
            }
        }
    }
    out
}
