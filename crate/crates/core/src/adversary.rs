//! Rate-limited side-channel adversaries and the leakage quantities built on
//! them: exact mutual information, its divergence bound, the type-conditioned
//! divergences `zeta` and their counting bound `upsilon`.

use std::collections::HashMap;

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::cipher::{for_each_sequence, CipherSystem};
use crate::error::{check_budget, Error, Result};
use crate::ffield::{same_len, sample_affine_encoder, AffineEncoder, FieldSpec};
use crate::probsim::{entropy_of, CompensatedSum, JointPmf};
use crate::rng::{splitmix64, stream, stream_rng};
use crate::types_method::{
    binomial, class_members, class_probability, enumerate_joint_types, enumerate_types, rational_to_f64,
    type_class_size, Counts, JointTypeVector, TypeIndex,
};
use crate::Symbol;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AdversaryScheme {
    /// Radix index of the longest prefix that fits.
    Truncate,
    /// Lexicographic index of the empirical type.
    TypeBin,
    /// Seeded hash of the whole sequence.
    RandomHash,
}

impl AdversaryScheme {
    pub const ALL: [AdversaryScheme; 3] = [Self::Truncate, Self::TypeBin, Self::RandomHash];

    pub fn name(self) -> &'static str {
        match self {
            Self::Truncate => "truncate",
            Self::TypeBin => "type_bin",
            Self::RandomHash => "random_hash",
        }
    }
}

/// `phi_A : Z^n -> {0, .., message_count - 1}`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AdversaryEncoder {
    pub scheme: AdversaryScheme,
    pub n: usize,
    pub z_alphabet: usize,
    pub rate_ra: f64,
    pub message_count: u64,
    pub seed: u64,
    /// Prefix length used by `Truncate`.
    prefix: usize,
}

/// `max(1, floor(e^{n r}))`, saturating. The relative slack absorbs
/// rounding in `exp` when `e^{n r}` is an integer.
pub fn message_count(n: usize, rate: f64) -> u64 {
    let v = (n as f64 * rate).exp() * (1.0 + 1e-12);
    (v.floor() as u64).max(1)
}

impl AdversaryEncoder {
    pub fn new(scheme: AdversaryScheme, n: usize, z_alphabet: usize, rate_ra: f64, seed: u64) -> Result<Self> {
        if n == 0 || z_alphabet == 0 {
            return Err(Error::InvalidParameter("adversary needs n >= 1 and a nonempty alphabet".into()));
        }
        if !(rate_ra >= 0.0) || !rate_ra.is_finite() {
            return Err(Error::InvalidParameter(format!("adversary rate must be finite and >= 0, got {rate_ra}")));
        }
        let mc = message_count(n, rate_ra);
        let mut prefix = 0;
        let mut span: u128 = 1;
        while prefix < n && span * z_alphabet as u128 <= mc as u128 {
            span *= z_alphabet as u128;
            prefix += 1;
        }
        Ok(AdversaryEncoder {
            scheme,
            n,
            z_alphabet,
            rate_ra,
            message_count: mc,
            seed,
            prefix,
        })
    }

    /// `(1/n) log message_count`.
    pub fn effective_rate(&self) -> f64 {
        (self.message_count as f64).ln() / self.n as f64
    }

    pub fn encode(&self, z: &[Symbol]) -> Result<u64> {
        adversary_encode(self, z)
    }
}

fn radix_index(base: usize, seq: &[Symbol]) -> u64 {
    seq.iter().fold(0u64, |acc, &s| acc.wrapping_mul(base as u64).wrapping_add(s as u64))
}

/// Position of `counts` in the lexicographic enumeration of compositions of
/// `n` into `counts.len()` parts.
fn composition_rank(counts: &[u32]) -> BigUint {
    let mut remaining: u64 = counts.iter().map(|&c| c as u64).sum();
    let mut rank = BigUint::zero();
    for (i, &c) in counts.iter().enumerate() {
        let parts = (counts.len() - i - 1) as u64;
        if parts == 0 {
            break;
        }
        for smaller in 0..c as u64 {
            rank += binomial(remaining - smaller + parts - 1, parts - 1);
        }
        remaining -= c as u64;
    }
    rank
}

pub fn adversary_encode(adv: &AdversaryEncoder, z: &[Symbol]) -> Result<u64> {
    same_len("adversary_encode", adv.n, z.len())?;
    if let Some(&s) = z.iter().find(|&&s| s as usize >= adv.z_alphabet) {
        return Err(Error::SymbolOutOfRange {
            symbol: s as usize,
            size: adv.z_alphabet,
        });
    }
    let mc = adv.message_count;
    Ok(match adv.scheme {
        AdversaryScheme::Truncate => radix_index(adv.z_alphabet, &z[..adv.prefix]),
        AdversaryScheme::TypeBin => {
            let mut counts = vec![0u32; adv.z_alphabet];
            z.iter().for_each(|&s| counts[s as usize] += 1);
            (composition_rank(&counts) % BigUint::from(mc)).to_u64().expect("below message_count")
        }
        AdversaryScheme::RandomHash => {
            let h = z
                .iter()
                .fold(splitmix64(adv.seed ^ 0x6a09_e667_f3bc_c908), |h, &s| splitmix64(h ^ (s as u64 + 1)));
            h % mc
        }
    })
}

fn pair_joint(sys: &CipherSystem) -> Result<JointPmf> {
    JointPmf::from_input_and_channel(&sys.p_k, &sys.w)
}

fn check_adversary(sys: &CipherSystem, adv: &AdversaryEncoder) -> Result<()> {
    same_len("adversary block length", sys.n, adv.n)?;
    same_len("adversary alphabet", sys.z_size(), adv.z_alphabet)
}

/// Splits a sequence over the pair alphabet `X x Z` into `(k, z)`.
fn split_pairs(pairs: &[Symbol], z_size: usize, k: &mut Vec<Symbol>, z: &mut Vec<Symbol>) {
    k.clear();
    z.clear();
    for &s in pairs {
        k.push(s / z_size as Symbol);
        z.push(s % z_size as Symbol);
    }
}

/// `nu(t, a) = Pr{varphi(K^n) = t, phi_A(Z^n) = a}`: rows are the `q^m`
/// values of `t` in radix order, columns the distinct messages in order of
/// first appearance.
#[derive(Debug, Clone)]
struct KeyMessageLaw {
    q_m: usize,
    messages: usize,
    probs: Vec<f64>,
}

impl KeyMessageLaw {
    fn new(sys: &CipherSystem, adv: &AdversaryEncoder) -> Result<Self> {
        check_adversary(sys, adv)?;
        let (q, zs, n) = (sys.field.size(), sys.z_size(), sys.n);
        check_budget("key/message law", (q as f64 * zs as f64).powi(n as i32), sys.budget)?;
        let q_m = sys.field.pow_f64(sys.m);
        check_budget("key/message law", q_m, sys.budget)?;
        let q_m = q_m as usize;
        let joint = pair_joint(sys)?;
        let pair_p = joint.probs();
        let mut ids: HashMap<u64, usize> = HashMap::new();
        let mut acc: Vec<CompensatedSum> = Vec::new();
        let (mut k, mut z) = (Vec::with_capacity(n), Vec::with_capacity(n));
        let mut failure = None;
        for_each_sequence(q * zs, n, |pairs| {
            let w: f64 = pairs.iter().map(|&s| pair_p[s as usize]).product();
            if w == 0.0 || failure.is_some() {
                return;
            }
            split_pairs(pairs, zs, &mut k, &mut z);
            let (t, a) = match (sys.encoder.affine(&k), adv.encode(&z)) {
                (Ok(t), Ok(a)) => (radix_index(q, &t) as usize, a),
                (Err(e), _) | (_, Err(e)) => {
                    failure = Some(e);
                    return;
                }
            };
            let next = ids.len();
            let col = *ids.entry(a).or_insert(next);
            if col == acc.len() / q_m {
                acc.resize(acc.len() + q_m, CompensatedSum::new());
            }
            acc[col * q_m + t].add(w);
        });
        if let Some(e) = failure {
            return Err(e);
        }
        let messages = ids.len();
        check_budget("key/message law", (q_m * q_m * messages) as f64, sys.budget)?;
        // Stored column-major during accumulation; transpose to row-major t.
        let mut probs = vec![0.0; q_m * messages];
        for col in 0..messages {
            for t in 0..q_m {
                probs[t * messages + col] = acc[col * q_m + t].value();
            }
        }
        Ok(KeyMessageLaw { q_m, messages, probs })
    }

    fn message_marginal(&self) -> Vec<f64> {
        (0..self.messages)
            .map(|a| (0..self.q_m).map(|t| self.probs[t * self.messages + a]).collect::<CompensatedSum>().value())
            .collect()
    }
}

/// Distribution of `xA` over `GF(q)^m` (radix order) under the i.i.d. source.
fn linear_image_law(sys: &CipherSystem) -> Result<Vec<f64>> {
    let (q, n) = (sys.field.size(), sys.n);
    check_budget("source image law", sys.field.pow_f64(n), sys.budget)?;
    let mut acc = vec![CompensatedSum::new(); sys.field.pow_f64(sys.m) as usize];
    let mut failure = None;
    for_each_sequence(q, n, |x| match sys.encoder.linear(x) {
        Ok(s) => acc[radix_index(q, &s) as usize].add(sys.p_x.sequence_prob(x)),
        Err(e) => {
            failure.get_or_insert(e);
        }
    });
    match failure {
        Some(e) => Err(e),
        None => Ok(acc.iter().map(CompensatedSum::value).collect()),
    }
}

fn radix_digits(mut idx: usize, q: usize, m: usize) -> Vec<Symbol> {
    let mut out = vec![0; m];
    for slot in out.iter_mut().rev() {
        *slot = (idx % q) as Symbol;
        idx /= q;
    }
    out
}

fn exact_leakage_from(sys: &CipherSystem, nu: &KeyMessageLaw) -> Result<f64> {
    let (q, m) = (sys.field.size(), sys.m);
    let rho = linear_image_law(sys)?;
    let digits: Vec<Vec<Symbol>> = (0..nu.q_m).map(|i| radix_digits(i, q, m)).collect();
    let mut mixture = vec![CompensatedSum::new(); nu.q_m * nu.messages];
    for (s, &ps) in rho.iter().enumerate() {
        if ps == 0.0 {
            continue;
        }
        for (t, dt) in digits.iter().enumerate() {
            let c = radix_index(q, &sys.field.vec_add(dt, &digits[s])?) as usize;
            for a in 0..nu.messages {
                let v = nu.probs[t * nu.messages + a];
                if v > 0.0 {
                    mixture[c * nu.messages + a].add(ps * v);
                }
            }
        }
    }
    let mixture: Vec<f64> = mixture.iter().map(CompensatedSum::value).collect();
    Ok((entropy_of(&mixture) - entropy_of(&nu.probs)).max(0.0))
}

fn divergence_bound_from(nu: &KeyMessageLaw) -> f64 {
    let pa = nu.message_marginal();
    let ln_qm = (nu.q_m as f64).ln();
    let mut s = CompensatedSum::new();
    for t in 0..nu.q_m {
        for (a, &p_a) in pa.iter().enumerate() {
            let v = nu.probs[t * nu.messages + a];
            if v > 0.0 {
                s.add(v * ((v / p_a).ln() + ln_qm));
            }
        }
    }
    s.value().max(0.0)
}

/// `I(X^n; C~^m, M_A)` by exhaustive enumeration, as `H(mixture) - H(nu)`.
pub fn exact_leakage(sys: &CipherSystem, adv: &AdversaryEncoder) -> Result<f64> {
    exact_leakage_from(sys, &KeyMessageLaw::new(sys, adv)?)
}

/// `D(p_{K~|M_A} || uniform | p_{M_A}) = m log q - H(K~ | M_A)`.
pub fn leakage_divergence_bound(sys: &CipherSystem, adv: &AdversaryEncoder) -> Result<f64> {
    Ok(divergence_bound_from(&KeyMessageLaw::new(sys, adv)?))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LeakageReport {
    pub n: usize,
    pub m: usize,
    pub scheme: AdversaryScheme,
    pub rate_ra: f64,
    pub message_count: u64,
    pub exact_mi: f64,
    pub divergence_bound: f64,
    /// `sum_jt Pr{M = jt} zeta(jt)`, when requested.
    pub type_chain_bound: Option<f64>,
}

impl LeakageReport {
    pub fn margin(&self) -> f64 {
        self.divergence_bound - self.exact_mi
    }
}

pub fn leakage_report(sys: &CipherSystem, adv: &AdversaryEncoder, with_chain: bool) -> Result<LeakageReport> {
    let nu = KeyMessageLaw::new(sys, adv)?;
    Ok(LeakageReport {
        n: sys.n,
        m: sys.m,
        scheme: adv.scheme,
        rate_ra: adv.rate_ra,
        message_count: adv.message_count,
        exact_mi: exact_leakage_from(sys, &nu)?,
        divergence_bound: divergence_bound_from(&nu),
        type_chain_bound: if with_chain { Some(type_chain_bound(sys, adv)?) } else { None },
    })
}

/// Divergence from uniform on `q^m` points of the conditional law of `t`
/// given `a`, from joint counts `c(t, a)` with total `total`.
fn zeta_from_counts(counts: &HashMap<(u64, u64), u64>, total: u64, ln_qm: f64) -> f64 {
    let mut per_a: HashMap<u64, u64> = HashMap::new();
    for (&(_, a), &c) in counts {
        *per_a.entry(a).or_default() += c;
    }
    let mut keys: Vec<_> = counts.iter().collect();
    keys.sort_unstable();
    let tot = total as f64;
    let mut s = CompensatedSum::new();
    for (&(_, a), &c) in keys {
        let c = c as f64;
        s.add(c / tot * ((c / per_a[&a] as f64).ln() + ln_qm));
    }
    s.value().max(0.0)
}

/// Members of one joint type class with their adversary messages; reusable
/// across encoders.
#[derive(Debug, Clone)]
pub struct ZetaClass {
    keys: Vec<Vec<Symbol>>,
    messages: Vec<u64>,
}

impl ZetaClass {
    pub fn new(adv: &AdversaryEncoder, jt: &JointTypeVector, budget: u64) -> Result<Self> {
        same_len("ZetaClass block length", adv.n, jt.n())?;
        same_len("ZetaClass alphabet", adv.z_alphabet, jt.sizes().1)?;
        let size = type_class_size(jt).to_f64().unwrap_or(f64::INFINITY);
        check_budget("zeta_divergence", size, budget)?;
        let zs = jt.sizes().1;
        let (mut keys, mut messages) = (Vec::new(), Vec::new());
        let (mut k, mut z) = (Vec::new(), Vec::new());
        for pairs in class_members(jt.counts()) {
            split_pairs(&pairs, zs, &mut k, &mut z);
            messages.push(adv.encode(&z)?);
            keys.push(k.clone());
        }
        Ok(ZetaClass { keys, messages })
    }

    pub fn zeta(&self, enc: &AffineEncoder) -> Result<f64> {
        let q = enc.field().size();
        let mut counts: HashMap<(u64, u64), u64> = HashMap::new();
        for (k, &a) in self.keys.iter().zip(&self.messages) {
            let t = radix_index(q, &enc.affine(k)?);
            *counts.entry((t, a)).or_default() += 1;
        }
        Ok(zeta_from_counts(&counts, self.keys.len() as u64, enc.m() as f64 * (q as f64).ln()))
    }
}

/// `zeta(varphi, phi_A | jt)`: divergence from uniform of `varphi(K^n)` given
/// `M_A`, with `(K^n, Z^n)` uniform on the joint type class.
pub fn zeta_divergence(enc: &AffineEncoder, adv: &AdversaryEncoder, jt: &JointTypeVector, budget: u64) -> Result<f64> {
    same_len("zeta_divergence", enc.n(), jt.n())?;
    same_len("zeta_divergence alphabet", enc.field().size(), jt.sizes().0)?;
    ZetaClass::new(adv, jt, budget)?.zeta(enc)
}

/// `sum_jt Pr{M = jt} zeta(jt)` in a single pass over `(X x Z)^n`.
pub fn type_chain_bound(sys: &CipherSystem, adv: &AdversaryEncoder) -> Result<f64> {
    check_adversary(sys, adv)?;
    let (q, zs, n) = (sys.field.size(), sys.z_size(), sys.n);
    check_budget("type_chain_bound", (q as f64 * zs as f64).powi(n as i32), sys.budget)?;
    let family = enumerate_joint_types(n, (q, zs))?;
    let index = TypeIndex::new(&family);
    let mut per_type: Vec<HashMap<(u64, u64), u64>> = vec![HashMap::new(); family.len()];
    let (mut k, mut z) = (Vec::with_capacity(n), Vec::with_capacity(n));
    let mut counts = vec![0u32; q * zs];
    let mut failure = None;
    for_each_sequence(q * zs, n, |pairs| {
        if failure.is_some() {
            return;
        }
        counts.iter_mut().for_each(|c| *c = 0);
        pairs.iter().for_each(|&s| counts[s as usize] += 1);
        split_pairs(pairs, zs, &mut k, &mut z);
        match (sys.encoder.affine(&k), adv.encode(&z)) {
            (Ok(t), Ok(a)) => {
                let j = index.position(&counts).expect("enumerated family");
                *per_type[j].entry((radix_index(q, &t), a)).or_default() += 1;
            }
            (Err(e), _) | (_, Err(e)) => failure = Some(e),
        }
    });
    if let Some(e) = failure {
        return Err(e);
    }
    let joint = pair_joint(sys)?;
    let ln_qm = sys.m as f64 * (q as f64).ln();
    let mut s = CompensatedSum::new();
    for (jt, table) in family.iter().zip(&per_type) {
        let pr = rational_to_f64(&class_probability(jt, joint.probs())?);
        if pr > 0.0 {
            let total = table.values().sum();
            s.add(pr * zeta_from_counts(table, total, ln_qm));
        }
    }
    Ok(s.value())
}

/// Sample mean and standard deviation of `zeta(jt)` over `samples` affine
/// encoders drawn independently from the stream `(seed, i)`.
pub fn sampled_zeta_stats(
    n: usize,
    m: usize,
    field: FieldSpec,
    adv: &AdversaryEncoder,
    jt: &JointTypeVector,
    samples: usize,
    seed: u64,
    budget: u64,
) -> Result<(f64, f64)> {
    if samples < 2 {
        return Err(Error::InvalidParameter("need at least two sampled encoders".into()));
    }
    let class = ZetaClass::new(adv, jt, budget)?;
    let values = (0..samples as u64)
        .map(|i| class.zeta(&sample_affine_encoder(n, m, field, &mut stream_rng(seed, stream::ENCODER, i))?))
        .collect::<Result<Vec<f64>>>()?;
    let mean = values.iter().copied().collect::<CompensatedSum>().value() / samples as f64;
    let var = values.iter().map(|v| (v - mean).powi(2)).collect::<CompensatedSum>().value() / (samples - 1) as f64;
    Ok((mean, var.sqrt()))
}

/// Counting profile of one joint type: for every `(a, k^n)` with
/// `N(a, k) > 0` the pair `(N(a, k), N_Z(a))`, grouped with multiplicity.
#[derive(Debug, Clone)]
struct UpsilonProfile {
    class_kz: BigUint,
    class_k: BigUint,
    class_z: BigUint,
    groups: Vec<(u64, u64, u64)>,
}

/// Which class size sits in the numerator of the inner ratio.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Normalization {
    Verbatim,
    Conditional,
}

impl UpsilonProfile {
    fn evaluate(&self, n: usize, rate: f64, norm: Normalization) -> f64 {
        let gain = (n as f64 * rate).exp_m1();
        let numer_class = match norm {
            Normalization::Verbatim => &self.class_k,
            Normalization::Conditional => &self.class_z,
        };
        let kz = BigInt::from(self.class_kz.clone());
        let mut s = CompensatedSum::new();
        for &(n_ak, n_za, mult) in &self.groups {
            let weight = BigRational::new(BigInt::from(n_ak) * BigInt::from(mult), kz.clone());
            let ratio = BigRational::new(
                BigInt::from(n_ak) * BigInt::from(numer_class.clone()),
                BigInt::from(n_za) * kz.clone(),
            );
            s.add(rational_to_f64(&weight) * (gain * rational_to_f64(&ratio)).ln_1p());
        }
        s.value()
    }
}

fn group_profile(
    jt: &JointTypeVector,
    n_ak: &HashMap<(u64, u64), u64>,
    n_z: &dyn Fn(u64) -> u64,
) -> UpsilonProfile {
    let mut groups: HashMap<(u64, u64), u64> = HashMap::new();
    for (&(a, _), &c) in n_ak {
        *groups.entry((c, n_z(a))).or_default() += 1;
    }
    let mut groups: Vec<(u64, u64, u64)> = groups.into_iter().map(|((c, nz), m)| (c, nz, m)).collect();
    groups.sort_unstable();
    UpsilonProfile {
        class_kz: type_class_size(jt),
        class_k: type_class_size(&jt.k_marginal()),
        class_z: type_class_size(&jt.z_marginal()),
        groups,
    }
}

fn upsilon_profile(adv: &AdversaryEncoder, jt: &JointTypeVector, budget: u64) -> Result<UpsilonProfile> {
    same_len("upsilon block length", adv.n, jt.n())?;
    let (xs, zs) = jt.sizes();
    same_len("upsilon alphabet", adv.z_alphabet, zs)?;
    check_budget("upsilon", type_class_size(jt).to_f64().unwrap_or(f64::INFINITY), budget)?;
    let mut n_ak: HashMap<(u64, u64), u64> = HashMap::new();
    let (mut k, mut z) = (Vec::new(), Vec::new());
    for pairs in class_members(jt.counts()) {
        split_pairs(&pairs, zs, &mut k, &mut z);
        *n_ak.entry((adv.encode(&z)?, radix_index(xs, &k))).or_default() += 1;
    }
    let mut n_z: HashMap<u64, u64> = HashMap::new();
    for z in class_members(jt.z_marginal().counts()) {
        *n_z.entry(adv.encode(&z)?).or_default() += 1;
    }
    Ok(group_profile(jt, &n_ak, &|a| n_z[&a]))
}

/// `Upsilon(R, phi_A | jt)`, with class-size ratios held as exact rationals
/// until the final logarithm.
pub fn upsilon(rate: f64, adv: &AdversaryEncoder, jt: &JointTypeVector, budget: u64) -> Result<f64> {
    check_rate(rate)?;
    Ok(upsilon_profile(adv, jt, budget)?.evaluate(jt.n(), rate, Normalization::Verbatim))
}

/// As [`upsilon`] but with `|T_Z|` in place of `|T_K|` in the inner ratio,
/// which makes that ratio the conditional probability of `k^n` given `a`
/// under the uniform law on the joint class.
pub fn upsilon_conditional(rate: f64, adv: &AdversaryEncoder, jt: &JointTypeVector, budget: u64) -> Result<f64> {
    check_rate(rate)?;
    Ok(upsilon_profile(adv, jt, budget)?.evaluate(jt.n(), rate, Normalization::Conditional))
}

fn check_rate(rate: f64) -> Result<()> {
    if !(rate >= 0.0) || !rate.is_finite() {
        return Err(Error::InvalidParameter(format!("rate must be finite and >= 0, got {rate}")));
    }
    Ok(())
}

/// Upsilon profiles for every joint type of one adversary, built from a
/// single pass over `(X x Z)^n`.
#[derive(Debug, Clone)]
pub struct UpsilonTable {
    n: usize,
    sizes: (usize, usize),
    family: Vec<JointTypeVector>,
    profiles: Vec<UpsilonProfile>,
}

impl UpsilonTable {
    pub fn new(adv: &AdversaryEncoder, x_size: usize, budget: u64) -> Result<Self> {
        let (n, zs) = (adv.n, adv.z_alphabet);
        check_budget("UpsilonTable", (x_size as f64 * zs as f64).powi(n as i32), budget)?;
        let family = enumerate_joint_types(n, (x_size, zs))?;
        let index = TypeIndex::new(&family);
        let z_family = enumerate_types(n, zs)?;
        let z_index = TypeIndex::new(&z_family);

        let mut n_z: HashMap<(usize, u64), u64> = HashMap::new();
        let mut zc = vec![0u32; zs];
        let mut failure = None;
        for_each_sequence(zs, n, |z| {
            zc.iter_mut().for_each(|c| *c = 0);
            z.iter().for_each(|&s| zc[s as usize] += 1);
            match adv.encode(z) {
                Ok(a) => *n_z.entry((z_index.position(&zc).expect("family"), a)).or_default() += 1,
                Err(e) => {
                    failure.get_or_insert(e);
                }
            }
        });
        if let Some(e) = failure {
            return Err(e);
        }

        let mut n_ak: Vec<HashMap<(u64, u64), u64>> = vec![HashMap::new(); family.len()];
        let (mut k, mut z) = (Vec::with_capacity(n), Vec::with_capacity(n));
        let mut counts = vec![0u32; x_size * zs];
        for_each_sequence(x_size * zs, n, |pairs| {
            counts.iter_mut().for_each(|c| *c = 0);
            pairs.iter().for_each(|&s| counts[s as usize] += 1);
            split_pairs(pairs, zs, &mut k, &mut z);
            let a = adv.encode(&z).expect("validated above");
            let j = index.position(&counts).expect("family");
            *n_ak[j].entry((a, radix_index(x_size, &k))).or_default() += 1;
        });

        let profiles = family
            .iter()
            .zip(&n_ak)
            .map(|(jt, table)| {
                let zt = z_index.position(jt.z_marginal().counts()).expect("family");
                group_profile(jt, table, &|a| n_z[&(zt, a)])
            })
            .collect();
        Ok(UpsilonTable {
            n,
            sizes: (x_size, zs),
            family,
            profiles,
        })
    }

    pub fn family(&self) -> &[JointTypeVector] {
        &self.family
    }

    pub fn upsilon(&self, rate: f64, index: usize) -> f64 {
        self.profiles[index].evaluate(self.n, rate, Normalization::Verbatim)
    }

    pub fn upsilon_conditional(&self, rate: f64, index: usize) -> f64 {
        self.profiles[index].evaluate(self.n, rate, Normalization::Conditional)
    }

    /// `sum_jt Pr{M = jt} Upsilon(R | jt)` for `(K^n, Z^n)` i.i.d. `p_joint`.
    pub fn upsilon_iid(&self, rate: f64, p_joint: &JointPmf) -> Result<f64> {
        check_rate(rate)?;
        if p_joint.dims() != [self.sizes.0, self.sizes.1] {
            return Err(Error::DimensionMismatch {
                op: "upsilon_iid",
                expected: self.sizes.0 * self.sizes.1,
                got: p_joint.probs().len(),
            });
        }
        let mut s = CompensatedSum::new();
        for (i, jt) in self.family.iter().enumerate() {
            let pr = rational_to_f64(&class_probability(jt, p_joint.probs())?);
            if pr > 0.0 {
                s.add(pr * self.upsilon(rate, i));
            }
        }
        Ok(s.value())
    }
}

/// `Upsilon(R, phi_A | p^n)`: expectation of `upsilon` over the joint type
/// of `n` i.i.d. draws from `p_joint`.
pub fn upsilon_iid(rate: f64, adv: &AdversaryEncoder, p_joint: &JointPmf, n: usize, budget: u64) -> Result<f64> {
    same_len("upsilon_iid block length", adv.n, n)?;
    if p_joint.dims().len() != 2 {
        return Err(Error::InvalidParameter("upsilon_iid needs a 2-D joint".into()));
    }
    UpsilonTable::new(adv, p_joint.dims()[0], budget)?.upsilon_iid(rate, p_joint)
}

/// The joint type as an i.i.d. law on `X x Z`.
pub fn type_as_joint(jt: &JointTypeVector) -> JointPmf {
    let (x, z) = jt.sizes();
    JointPmf::new(vec![x, z], jt.frequencies()).expect("frequencies of a type")
}

/// `(n + 1)^{|X||Z|}`.
pub fn type_count_factor(n: usize, sizes: (usize, usize)) -> f64 {
    ((n + 1) as f64).powi((sizes.0 * sizes.1) as i32)
}
