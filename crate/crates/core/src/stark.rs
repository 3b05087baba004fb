//! p-stabilizations of abelian Artin representations, Stark regulators on the
//! complex and p-adic sides, Euler factors and 𝓛-invariants.
//!
//! Eigenbasis indices are fixed in the order of the summands of the
//! representation; wedges are always taken in increasing index order.

use std::collections::BTreeMap;
use std::sync::Arc;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use serde_json::{json, Value};

use crate::arith::inv_mod_u64;
use crate::characters::{ArtinAbelian, Cyclo, DirichletData, UnitTerm, UnitVector};
use crate::cyclofield::{LocalElem, LocalRing};
use crate::error::{Error, Result};
use crate::hpfloat::{Complex, Real};
use crate::linalg::{det_local, permutations};
use crate::measures::FractionalMeasure;
use crate::padic::PadicValue;

/// W_p^+ given by ω_p^+ = Σ c_α t_α, t_α the wedge of eigenvectors indexed by α.
#[derive(Clone, Debug)]
pub struct PStabilization {
    eigenvalues: Vec<Cyclo>,
    terms: Vec<(Vec<usize>, BigRational)>,
}

impl PStabilization {
    pub fn new(eigenvalues: Vec<Cyclo>, terms: Vec<(Vec<usize>, BigRational)>) -> Result<Self> {
        let d = eigenvalues.len();
        let terms: Vec<_> = terms.into_iter().filter(|(_, c)| !c.is_zero()).collect();
        if terms.is_empty() {
            return Err(Error::DomainError("ω_p^+ has no terms".into()));
        }
        let dp = terms[0].0.len();
        for (alpha, _) in &terms {
            if alpha.len() != dp {
                return Err(Error::DomainError("wedges of different lengths".into()));
            }
            if alpha.windows(2).any(|w| w[0] >= w[1]) || alpha.iter().any(|&i| i >= d) {
                return Err(Error::DomainError(format!("bad index set {alpha:?}")));
            }
        }
        let first: Vec<Cyclo> = terms[0].0.iter().map(|&i| eigenvalues[i].clone()).collect();
        for (alpha, _) in &terms[1..] {
            let other: Vec<Cyclo> = alpha.iter().map(|&i| eigenvalues[i].clone()).collect();
            if !same_multiset(&first, &other) {
                return Err(Error::EigenvalueListMismatch);
            }
        }
        Ok(PStabilization { eigenvalues, terms })
    }

    /// The stabilization spanned by the eigenvectors in `alpha`.
    pub fn pure(eigenvalues: Vec<Cyclo>, alpha: Vec<usize>) -> Result<Self> {
        Self::new(eigenvalues, vec![(alpha, BigRational::one())])
    }

    /// Eigenvalues χ_i(p) of σ_p on the summands of ρ.
    pub fn from_artin(rho: &ArtinAbelian, p: u64, alpha: Vec<usize>) -> Result<Self> {
        if !rho.is_unramified_at(p) {
            return Err(Error::RamifiedAtP);
        }
        Self::pure(rho.sigma_p(p), alpha)
    }

    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }
    pub fn d_plus(&self) -> usize {
        self.terms[0].0.len()
    }
    pub fn eigenvalues(&self) -> &[Cyclo] {
        &self.eigenvalues
    }
    pub fn terms(&self) -> &[(Vec<usize>, BigRational)] {
        &self.terms
    }
    pub fn is_pure(&self) -> bool {
        self.terms.len() == 1
    }

    /// Indices of the first wedge; all wedges share their eigenvalue list.
    pub fn plus_indices(&self) -> &[usize] {
        &self.terms[0].0
    }

    pub fn minus_indices(&self) -> Vec<usize> {
        let plus = self.plus_indices();
        (0..self.dim()).filter(|i| !plus.contains(i)).collect()
    }

    /// Indices spanning W_p^{-,0}: eigenvalue 1 outside W_p^+.
    pub fn minus_zero_indices(&self) -> Vec<usize> {
        self.minus_indices()
            .into_iter()
            .filter(|&i| is_one(&self.eigenvalues[i]))
            .collect()
    }

    /// e = dim H^0(Q_p, W^-).
    pub fn e(&self) -> usize {
        self.minus_zero_indices().len()
    }

    /// f = dim H^0(Q_p, W).
    pub fn f(&self) -> usize {
        self.eigenvalues.iter().filter(|b| is_one(b)).count()
    }

    pub fn to_json(&self) -> Value {
        json!({
            "eigenvalues": self.eigenvalues.iter().map(|c| c.to_json()).collect::<Vec<_>>(),
            "terms": self.terms.iter().map(|(a, c)| json!({
                "indices": a,
                "coeff": c.to_string(),
            })).collect::<Vec<_>>(),
        })
    }

    pub fn from_json(v: &Value) -> Result<Self> {
        let bad = |s: &str| Error::Parse(format!("stabilization: {s}"));
        let eig = v["eigenvalues"]
            .as_array()
            .ok_or_else(|| bad("eigenvalues"))?
            .iter()
            .map(Cyclo::from_json)
            .collect::<Result<Vec<_>>>()?;
        let mut terms = vec![];
        for t in v["terms"].as_array().ok_or_else(|| bad("terms"))? {
            let idx = t["indices"]
                .as_array()
                .ok_or_else(|| bad("indices"))?
                .iter()
                .map(|x| x.as_u64().map(|k| k as usize).ok_or_else(|| bad("index")))
                .collect::<Result<Vec<_>>>()?;
            let c: BigRational = t["coeff"]
                .as_str()
                .unwrap_or("1")
                .parse()
                .map_err(|_| bad("coeff"))?;
            terms.push((idx, c));
        }
        Self::new(eig, terms)
    }
}

fn is_one(c: &Cyclo) -> bool {
    c.as_rational().is_some_and(|q| q.is_one())
}

fn same_multiset(a: &[Cyclo], b: &[Cyclo]) -> bool {
    if a.len() != b.len() {
        return false;
    }
    let mut used = vec![false; b.len()];
    a.iter().all(|x| {
        match (0..b.len()).find(|&k| !used[k] && b[k].equals(x)) {
            Some(k) => {
                used[k] = true;
                true
            }
            None => false,
        }
    })
}

/// det(1 - σ_p/p | W^+) · det(1 - σ_p^{-1} | W^- / W^{-,0}).
pub fn euler_factor(stab: &PStabilization, ring: &Arc<LocalRing>) -> Result<LocalElem> {
    let one = ring.one();
    let mut acc = ring.one();
    for &i in stab.plus_indices() {
        let b = stab.eigenvalues[i].to_local(ring)?;
        acc = acc.mul(&one.sub(&b.div_p_power(1)));
    }
    for i in stab.minus_indices() {
        let b = &stab.eigenvalues[i];
        if is_one(b) {
            continue;
        }
        let binv = b.to_local(ring)?.inv()?;
        acc = acc.mul(&one.sub(&binv));
    }
    Ok(acc)
}

/// Rational structures paired against the units: ω_∞^+ as Σ c_β t_β, and the
/// columns ψ_j evaluated on the eigenbasis, `columns[j][i] = ψ_j(t_i)`.
#[derive(Clone, Debug)]
pub struct RegulatorInput {
    pub omega_inf: Vec<(Vec<usize>, BigRational)>,
    pub columns: Vec<Vec<UnitVector>>,
}

impl RegulatorInput {
    fn check(&self, d_plus: usize) -> Result<usize> {
        if self.columns.len() != d_plus {
            return Err(Error::DomainError(format!(
                "expected {d_plus} columns, got {}",
                self.columns.len()
            )));
        }
        let d = self.columns.first().map(|c| c.len()).unwrap_or(0);
        if self.columns.iter().any(|c| c.len() != d) {
            return Err(Error::DomainError("columns of different lengths".into()));
        }
        Ok(d)
    }
}

fn det_complex(m: &[Vec<Complex>], bits: u32) -> Complex {
    let n = m.len();
    let mut acc = Complex::zero(bits);
    for (perm, sign) in permutations(n) {
        let mut t = Complex::one(bits);
        for (i, &j) in perm.iter().enumerate() {
            t = t.mul(&m[i][j]);
        }
        acc = if sign > 0 { acc.add(&t) } else { acc.sub(&t) };
    }
    acc
}

/// Σ_β c_β det(log_∞ ψ_j(t_i))_{i∈β}. Fails if the result cannot be told from 0.
pub fn complex_regulator(input: &RegulatorInput, bits: u32) -> Result<Complex> {
    let dp = input.omega_inf.first().map(|t| t.0.len()).unwrap_or(0);
    if dp == 0 {
        return Err(Error::DomainError("d+ must be positive".into()));
    }
    input.check(dp)?;
    let logs: Vec<Vec<Complex>> = input
        .columns
        .iter()
        .map(|col| col.iter().map(|u| u.log_inf(bits)).collect())
        .collect();
    let mut acc = Complex::zero(bits);
    for (beta, c) in &input.omega_inf {
        let m: Vec<Vec<Complex>> = beta
            .iter()
            .map(|&i| (0..dp).map(|j| logs[j][i].clone()).collect())
            .collect();
        acc = acc.add(&det_complex(&m, bits).mul_rational(c));
    }
    if acc.contains_zero() {
        return Err(Error::SingularWithinBound);
    }
    Ok(acc)
}

fn log_matrix(
    cols: &[Vec<UnitVector>],
    rows: &[usize],
    ring: &Arc<LocalRing>,
) -> Result<Vec<Vec<LocalElem>>> {
    rows.iter()
        .map(|&i| cols.iter().map(|c| c[i].log_p(ring)).collect())
        .collect()
}

fn ord_matrix(
    cols: &[Vec<UnitVector>],
    rows: &[usize],
    ring: &Arc<LocalRing>,
) -> Result<Vec<Vec<LocalElem>>> {
    rows.iter()
        .map(|&i| cols.iter().map(|c| c[i].ord_p(ring)).collect())
        .collect()
}

fn det_or_one(m: &[Vec<LocalElem>], ring: &Arc<LocalRing>) -> Result<LocalElem> {
    if m.is_empty() {
        Ok(ring.one())
    } else {
        det_local(m)
    }
}

/// Σ_α c_α det(log_p ψ_j(t_i))_{i∈α}.
pub fn padic_regulator(
    stab: &PStabilization,
    input: &RegulatorInput,
    ring: &Arc<LocalRing>,
) -> Result<LocalElem> {
    input.check(stab.d_plus())?;
    let mut acc = ring.zero();
    for (alpha, c) in stab.terms() {
        let m = log_matrix(&input.columns, alpha, ring)?;
        let q = ring.from_padic(&PadicValue::from_rational(ring.p(), c, ring.precision() as i64));
        acc = acc.add(&det_or_one(&m, ring)?.mul(&q));
    }
    Ok(acc)
}

/// Numerics can prove admissibility but never its failure.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Admissibility {
    Admissible { valuation: i64 },
    /// The regulator is zero modulo p^`zero_at`.
    Unknown { zero_at: i64 },
}

pub fn is_admissible(stab: &PStabilization, input: &RegulatorInput, ring: &Arc<LocalRing>) -> Admissibility {
    match padic_regulator(stab, input, ring) {
        Ok(r) => match r.valuation_floor() {
            Some(v) if v < r.precision() => Admissibility::Admissible { valuation: v },
            _ => Admissibility::Unknown { zero_at: r.precision() },
        },
        Err(_) => Admissibility::Unknown { zero_at: 0 },
    }
}

/// The matrices of the 𝓛-invariant together with its value.
#[derive(Clone, Debug)]
pub struct LInvariant {
    pub value: LocalElem,
    pub a_plus: Vec<Vec<LocalElem>>,
    pub a_minus: Vec<Vec<LocalElem>>,
    pub b_plus: Vec<Vec<LocalElem>>,
    pub b_minus: Vec<Vec<LocalElem>>,
    pub o_minus: Vec<Vec<LocalElem>>,
}

impl LInvariant {
    pub fn to_json(&self) -> Value {
        let mat = |m: &Vec<Vec<LocalElem>>| -> Value {
            m.iter()
                .map(|r| r.iter().map(|x| x.to_string()).collect::<Vec<_>>())
                .collect::<Vec<_>>()
                .into()
        };
        json!({
            "value": self.value.to_string(),
            "precision": self.value.precision(),
            "A_plus": mat(&self.a_plus),
            "A_minus": mat(&self.a_minus),
            "B_plus": mat(&self.b_plus),
            "B_minus": mat(&self.b_minus),
            "O_minus": mat(&self.o_minus),
        })
    }
}

/// det[[A⁺,B⁺],[A⁻,B⁻]] / (det A⁺ · det O⁻). A⁺ is d⁺×d⁺, B⁻ and O⁻ are e×e.
pub fn l_invariant_from_matrices(
    a_plus: &[Vec<LocalElem>],
    a_minus: &[Vec<LocalElem>],
    b_plus: &[Vec<LocalElem>],
    b_minus: &[Vec<LocalElem>],
    o_minus: &[Vec<LocalElem>],
    ring: &Arc<LocalRing>,
) -> Result<LocalElem> {
    let dp = a_plus.len();
    let e = o_minus.len();
    if b_minus.len() != e || a_minus.len() != e || b_plus.len() != dp {
        return Err(Error::DomainError("block sizes do not match".into()));
    }
    let mut big: Vec<Vec<LocalElem>> = Vec::with_capacity(dp + e);
    for i in 0..dp {
        let mut r = a_plus[i].clone();
        r.extend(b_plus[i].iter().cloned());
        big.push(r);
    }
    for i in 0..e {
        let mut r = a_minus[i].clone();
        r.extend(b_minus[i].iter().cloned());
        big.push(r);
    }
    let num = det_or_one(&big, ring)?;
    let da = det_or_one(a_plus, ring)?;
    if da.is_zero_at_precision() {
        return Err(Error::InadmissibleStabilization);
    }
    let dn = det_or_one(o_minus, ring)?;
    if dn.is_zero_at_precision() {
        return Err(Error::SingularOMinus);
    }
    num.div(&da.mul(&dn))
}

/// 𝓛(ρ, ρ⁺) from the columns ψ_1..ψ_{d⁺} (global units) and ψ'_1..ψ'_e
/// (p-units in the kernel of ord_p on W⁺ ∩ W^0). Needs a pure stabilization.
pub fn l_invariant(
    stab: &PStabilization,
    psi: &[Vec<UnitVector>],
    psi_prime: &[Vec<UnitVector>],
    ring: &Arc<LocalRing>,
) -> Result<LInvariant> {
    if !stab.is_pure() {
        return Err(Error::DomainError("𝓛 needs an eigenbasis stabilization".into()));
    }
    let plus = stab.plus_indices().to_vec();
    let mz = stab.minus_zero_indices();
    if psi.len() != stab.d_plus() || psi_prime.len() != mz.len() {
        return Err(Error::DomainError("need d+ columns ψ and e columns ψ'".into()));
    }
    let a_plus = log_matrix(psi, &plus, ring)?;
    let a_minus = log_matrix(psi, &mz, ring)?;
    let b_plus = log_matrix(psi_prime, &plus, ring)?;
    let b_minus = log_matrix(psi_prime, &mz, ring)?;
    let o_minus = ord_matrix(psi_prime, &mz, ring)?;
    let value = l_invariant_from_matrices(&a_plus, &a_minus, &b_plus, &b_minus, &o_minus, ring)?;
    Ok(LInvariant { value, a_plus, a_minus, b_plus, b_minus, o_minus })
}

/// The expansion ω_p^+ = Σ c_α ω_{p,α}^+ in the wedge basis.
pub fn stabilization_decompose(stab: &PStabilization) -> Vec<(Vec<usize>, BigRational)> {
    let mut out: BTreeMap<Vec<usize>, BigRational> = BTreeMap::new();
    for (a, c) in stab.terms() {
        *out.entry(a.clone()).or_insert_with(BigRational::zero) += c;
    }
    out.into_iter().filter(|(_, c)| !c.is_zero()).collect()
}

/// Σ c_α θ_α.
pub fn combine_theta(thetas: &[FractionalMeasure], coeffs: &[BigRational]) -> Result<FractionalMeasure> {
    if thetas.is_empty() || thetas.len() != coeffs.len() {
        return Err(Error::DomainError("need one coefficient per measure".into()));
    }
    let ring = thetas[0].numerator.ring().clone();
    let wp = ring.precision() as i64;
    let mut acc: Option<FractionalMeasure> = None;
    for (t, c) in thetas.iter().zip(coeffs) {
        let s = t.scale(&ring.from_padic(&PadicValue::from_rational(ring.p(), c, wp)));
        acc = Some(match acc {
            None => s,
            Some(a) => a.add(&s),
        });
    }
    Ok(acc.unwrap())
}

/// u_χ = Σ_{g ∈ group} χ(g) ⊗ g^{-1}(u) in additive notation, together with its
/// complex-conjugate companion Σ χ(g) ⊗ (c g^{-1})(u). `conjugates[a]` holds σ_a(u)
/// for a mod the modulus of χ.
#[derive(Clone, Debug)]
pub struct ProjectedUnit {
    pub unit: UnitVector,
    pub companion: UnitVector,
}

pub fn monomial_unit_projection(
    chi: &DirichletData,
    group: &[u64],
    conjugates: &BTreeMap<u64, UnitTerm>,
) -> Result<ProjectedUnit> {
    if chi.is_trivial() {
        return Err(Error::TrivialCharacter);
    }
    let m = chi.modulus();
    let mut unit = vec![];
    let mut companion = vec![];
    for &g in group {
        let Some(e) = chi.value_exp(g as i64) else {
            return Err(Error::DomainError(format!("{g} is not a unit mod {m}")));
        };
        let ginv = inv_mod_u64(g % m, m).ok_or(Error::IncompleteOrbit)?;
        let c = Cyclo::root(chi.order(), e as i64);
        let u = conjugates.get(&ginv).ok_or(Error::IncompleteOrbit)?;
        let cu = conjugates.get(&((m - ginv) % m)).ok_or(Error::IncompleteOrbit)?;
        unit.push(UnitTerm { coeff: c.mul(&u.coeff), ..u.clone() });
        companion.push(UnitTerm { coeff: c.mul(&cu.coeff), ..cu.clone() });
    }
    Ok(ProjectedUnit {
        unit: UnitVector::new(unit),
        companion: UnitVector::new(companion),
    })
}

/// α = (a + b√D)/den in a quadratic field, with ι_p fixed by √D ≡ `sqrt_residue` mod p.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct QuadraticElement {
    pub disc: i64,
    pub a: i64,
    pub b: i64,
    pub den: i64,
    pub p: u64,
    pub sqrt_residue: u64,
}

impl QuadraticElement {
    pub fn from_json(v: &Value) -> Result<Self> {
        let g = |k: &str| -> Result<i64> {
            v[k].as_i64().ok_or_else(|| Error::MissingUnitData(k.to_string()))
        };
        Ok(QuadraticElement {
            disc: g("disc")?,
            a: g("a")?,
            b: g("b")?,
            den: g("den")?,
            p: g("p")? as u64,
            sqrt_residue: g("sqrt_residue")? as u64,
        })
    }

    pub fn to_json(&self) -> Value {
        json!({
            "disc": self.disc, "a": self.a, "b": self.b, "den": self.den,
            "p": self.p, "sqrt_residue": self.sqrt_residue,
        })
    }

    fn sqrt_p(&self, prec: i64) -> Result<PadicValue> {
        let f = [BigInt::from(-self.disc), BigInt::zero(), BigInt::one()];
        PadicValue::hensel_lift(self.p, &f, &BigInt::from(self.sqrt_residue), prec)
    }

    /// ι_p of α and of its conjugate.
    pub fn padic_pair(&self, prec: i64) -> Result<(PadicValue, PadicValue)> {
        let s = self.sqrt_p(prec + 2)?;
        let p = self.p;
        let a = PadicValue::from_i64(p, self.a, prec + 2);
        let bs = s.scale(&BigInt::from(self.b));
        let den = PadicValue::from_i64(p, self.den, prec + 2);
        Ok((a.try_add(&bs)?.try_div(&den)?, a.try_sub(&bs)?.try_div(&den)?))
    }

    /// log|ι_∞(α)| and log|ι_∞(ᾱ)|, with √D taken positive (or i√|D|).
    pub fn log_abs_pair(&self, bits: u32) -> Result<(Real, Real)> {
        let a = Real::from_i64(self.a, bits);
        let den = Real::from_i64(self.den, bits);
        if self.disc < 0 {
            // |α|² = (a² + b²|D|)/den² for both conjugates
            let n = Real::from_i64(self.a * self.a - self.b * self.b * self.disc, bits);
            let l = n.ln()?.ldexp(-1).sub(&den.abs().ln()?);
            return Ok((l.clone(), l));
        }
        let s = Real::from_i64(self.disc, bits).sqrt()?.mul_int(&BigInt::from(self.b));
        let x = a.add(&s).div(&den)?.abs().ln()?;
        let y = a.sub(&s).div(&den)?.abs().ln()?;
        Ok((x, y))
    }

    /// Unit terms for α and ᾱ with coefficient 1.
    pub fn terms(&self, ring: &Arc<LocalRing>, bits: u32) -> Result<(UnitTerm, UnitTerm)> {
        if ring.p() != self.p {
            return Err(Error::PrimeMismatch(ring.p(), self.p));
        }
        let prec = ring.precision() as i64;
        let (x, y) = self.padic_pair(prec)?;
        let (lx, ly) = self.log_abs_pair(bits)?;
        let mk = |v: &PadicValue, la: Real, tag: &str| -> Result<UnitTerm> {
            Ok(UnitTerm {
                coeff: Cyclo::from_int(1),
                log_abs: la,
                log_p: ring.from_padic(&v.log_iw()?),
                valuation: BigRational::from_integer(BigInt::from(
                    v.valuation().ok_or(Error::PrecisionExhausted(prec))?,
                )),
                tag: tag.to_string(),
            })
        };
        Ok((mk(&x, lx, "alpha")?, mk(&y, ly, "alpha_bar")?))
    }

    /// Orbit data σ_a(α) for the quadratic field cut out by χ: α when χ(a) = 1, ᾱ otherwise.
    pub fn orbit(
        &self,
        chi: &DirichletData,
        ring: &Arc<LocalRing>,
        bits: u32,
    ) -> Result<BTreeMap<u64, UnitTerm>> {
        let (x, y) = self.terms(ring, bits)?;
        let mut out = BTreeMap::new();
        for a in 1..chi.modulus() {
            if let Some(e) = chi.value_exp(a as i64) {
                out.insert(a, if e == 0 { x.clone() } else { y.clone() });
            }
        }
        Ok(out)
    }
}
