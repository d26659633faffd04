//! Encryption, affine compression of the ciphertext, sink-side recovery and
//! minimum-empirical-entropy decoding.
//!
//! The decoder never looks at the source statistics: given `y = xA` it returns
//! the member of the coset `{x : xA = y}` whose empirical type has the
//! smallest entropy, breaking ties by the lexicographically smallest sequence.

use std::cmp::Ordering;
use std::collections::HashMap;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{check_budget, Error, Result};
use crate::ffield::{same_len, sample_affine_encoder, AffineEncoder, FieldSpec, LinearSolver, PackedSolver};
use crate::probsim::{sample_iid, Channel, CompensatedSum, Pmf};
use crate::rng::{stream, stream_rng, SimRng};
use crate::Symbol;

/// One simulated cipher instance.
#[derive(Debug, Clone)]
pub struct CipherSystem {
    pub n: usize,
    pub m: usize,
    pub field: FieldSpec,
    pub p_x: Pmf,
    pub p_k: Pmf,
    pub w: Channel,
    pub encoder: AffineEncoder,
    pub budget: u64,
}

impl CipherSystem {
    pub fn new(p_x: Pmf, p_k: Pmf, w: Channel, encoder: AffineEncoder, budget: u64) -> Result<Self> {
        let field = encoder.field();
        let q = field.size();
        same_len("CipherSystem: |X| vs q", q, p_x.len())?;
        same_len("CipherSystem: |K| vs q", q, p_k.len())?;
        same_len("CipherSystem: channel inputs vs q", q, w.in_size())?;
        Ok(CipherSystem {
            n: encoder.n(),
            m: encoder.m(),
            field,
            p_x,
            p_k,
            w,
            encoder,
            budget,
        })
    }

    /// The security guarantees assume a uniform key; other keys are allowed
    /// for simulation but flagged here.
    pub fn key_is_uniform(&self) -> bool {
        self.p_k.is_uniform()
    }

    /// `(m / n) log q` in nats.
    pub fn rate(&self) -> f64 {
        self.m as f64 / self.n as f64 * (self.field.q() as f64).ln()
    }

    pub fn z_size(&self) -> usize {
        self.w.out_size()
    }

    pub fn with_encoder(&self, encoder: AffineEncoder) -> Result<Self> {
        Self::new(self.p_x.clone(), self.p_k.clone(), self.w.clone(), encoder, self.budget)
    }
}

/// Largest `m` with `(m / n) log q <= rate`, clamped to `[1, n]`.
pub fn compressed_length(n: usize, rate: f64, field: FieldSpec) -> usize {
    let m = (n as f64 * rate / (field.q() as f64).ln() + 1e-12).floor() as usize;
    m.clamp(1, n)
}

/// `c = x + k`.
pub fn encrypt(field: FieldSpec, x: &[Symbol], k: &[Symbol]) -> Result<Vec<Symbol>> {
    check_symbols(field, x)?;
    check_symbols(field, k)?;
    field.vec_add(x, k)
}

/// `x = c - k`.
pub fn decrypt(field: FieldSpec, c: &[Symbol], k: &[Symbol]) -> Result<Vec<Symbol>> {
    check_symbols(field, c)?;
    check_symbols(field, k)?;
    field.vec_sub(c, k)
}

fn check_symbols(field: FieldSpec, xs: &[Symbol]) -> Result<()> {
    match xs.iter().find(|&&s| !field.contains(s)) {
        Some(&s) => Err(Error::SymbolOutOfRange {
            symbol: s as usize,
            size: field.size(),
        }),
        None => Ok(()),
    }
}

/// The published compressed ciphertext `cA + b`.
pub fn encode_ciphertext(enc: &AffineEncoder, c: &[Symbol]) -> Result<Vec<Symbol>> {
    enc.affine(c)
}

/// Sink-side step: strips the encoded key from the compressed ciphertext,
/// leaving `xA`.
pub fn strip_key(enc: &AffineEncoder, c_tilde: &[Symbol], k: &[Symbol]) -> Result<Vec<Symbol>> {
    enc.field().vec_sub(c_tilde, &enc.affine(k)?)
}

/// Entropy of a count vector with the counts sorted first, so that
/// permutations of the same counts give bit-identical results.
fn entropy_of_counts(counts: &mut [u32], n: usize) -> f64 {
    counts.sort_unstable_by(|a, b| b.cmp(a));
    let nf = n as f64;
    let s: f64 = counts.iter().filter(|&&c| c > 0).map(|&c| c as f64 * (c as f64).ln()).sum();
    (nf.ln() - s / nf).max(0.0)
}

fn sequence_entropy(x: &[Symbol], q: usize) -> f64 {
    let mut counts = vec![0u32; q];
    x.iter().for_each(|&s| counts[s as usize] += 1);
    entropy_of_counts(&mut counts, x.len())
}

/// Ordering used by the decoder: smaller entropy first, then lexicographic.
fn decoder_order(a: (f64, &[Symbol]), b: (f64, &[Symbol])) -> Ordering {
    a.0.partial_cmp(&b.0).unwrap_or(Ordering::Equal).then_with(|| a.1.cmp(b.1))
}

/// Minimum-empirical-entropy coset decoder with precomputed elimination.
#[derive(Debug, Clone)]
pub struct UniversalDecoder {
    field: FieldSpec,
    solver: LinearSolver,
    packed: Option<PackedSolver>,
    /// Entropy of a binary sequence by its number of ones.
    weight_entropy: Vec<f64>,
    budget: u64,
}

impl UniversalDecoder {
    pub fn new(enc: &AffineEncoder, budget: u64) -> Result<Self> {
        let solver = LinearSolver::new(enc.matrix());
        check_budget("universal_decode", solver.coset_size(), budget)?;
        let n = enc.n();
        let packed = solver.packed();
        let weight_entropy = if packed.is_some() {
            (0..=n as u32).map(|w| entropy_of_counts(&mut [w, n as u32 - w], n)).collect()
        } else {
            Vec::new()
        };
        Ok(UniversalDecoder {
            field: enc.field(),
            solver,
            packed,
            weight_entropy,
            budget,
        })
    }

    pub fn decode(&self, y: &[Symbol]) -> Result<Vec<Symbol>> {
        let mut best: Option<(f64, Vec<Symbol>)> = None;
        for x in self.solver.coset(y, self.budget)? {
            let h = sequence_entropy(&x, self.field.size());
            let better = match &best {
                None => true,
                Some((bh, bx)) => decoder_order((h, &x), (*bh, bx)) == Ordering::Less,
            };
            if better {
                best = Some((h, x));
            }
        }
        best.map(|(_, x)| x).ok_or(Error::NotInImage("universal_decode"))
    }

    /// Packed binary decoding; `None` when the field is not binary or too long.
    #[inline]
    pub fn decode_packed(&self, y: u64) -> Option<Result<u64>> {
        let ps = self.packed.as_ref()?;
        let Some(anchor) = ps.anchor(y) else {
            return Some(Err(Error::NotInImage("universal_decode")));
        };
        let mut best = anchor;
        let mut best_h = self.weight_entropy[anchor.count_ones() as usize];
        ps.for_each_member(anchor, |x| {
            let h = self.weight_entropy[x.count_ones() as usize];
            if h < best_h || (h == best_h && x < best) {
                best = x;
                best_h = h;
            }
        });
        Some(Ok(best))
    }

    pub fn is_packed(&self) -> bool {
        self.packed.is_some()
    }
}

/// `argmin` of empirical entropy over `{x : xA = y}`, lexicographic ties.
pub fn universal_decode(enc: &AffineEncoder, x_tilde: &[Symbol], budget: u64) -> Result<Vec<Symbol>> {
    UniversalDecoder::new(enc, budget)?.decode(x_tilde)
}

/// Calls `visit(index, x)` for every `x` in `GF(q)^n` in lexicographic order.
pub(crate) fn for_each_sequence(q: usize, n: usize, mut visit: impl FnMut(&[Symbol])) {
    let mut x = vec![0 as Symbol; n];
    loop {
        visit(&x);
        let mut pos = n;
        loop {
            if pos == 0 {
                return;
            }
            pos -= 1;
            if (x[pos] as usize) + 1 < q {
                x[pos] += 1;
                break;
            }
            x[pos] = 0;
        }
    }
}

/// Exact `Pr[decode(xA) != x]` under the i.i.d. source `p_x`.
pub fn exact_error_probability(sys: &CipherSystem) -> Result<f64> {
    error_probability_of(&sys.encoder, &sys.p_x, sys.budget)
}

/// Exact decoding error probability of `enc` for the source `p_x`.
pub fn error_probability_of(enc: &AffineEncoder, p_x: &Pmf, budget: u64) -> Result<f64> {
    let f = enc.field();
    let (n, q) = (enc.n(), f.size());
    same_len("error_probability_of", q, p_x.len())?;
    check_budget("exact_error_probability", f.pow_f64(n), budget)?;
    if let Some(packed) = enc.packed() {
        return Ok(packed_error_probability(packed, n, enc.m(), p_x));
    }
    // Pass 1: winner of every coset. Lexicographic visiting order means the
    // first sequence seen at the minimal entropy is the tie-break winner.
    let mut winners: HashMap<Vec<Symbol>, (f64, Vec<Symbol>)> = HashMap::new();
    let mut failure = None;
    for_each_sequence(q, n, |x| {
        let y = match enc.linear(x) {
            Ok(y) => y,
            Err(e) => {
                failure.get_or_insert(e);
                return;
            }
        };
        let h = sequence_entropy(x, q);
        match winners.get_mut(&y) {
            Some(best) if h < best.0 => *best = (h, x.to_vec()),
            Some(_) => {}
            None => {
                winners.insert(y, (h, x.to_vec()));
            }
        }
    });
    if let Some(e) = failure {
        return Err(e);
    }
    // Pass 2: mass of the losers.
    let mut err = CompensatedSum::new();
    for_each_sequence(q, n, |x| {
        let y = enc.linear(x).expect("checked in pass 1");
        if winners[&y].1 != x {
            err.add(p_x.sequence_prob(x));
        }
    });
    Ok(err.value())
}

fn packed_error_probability(packed: &crate::ffield::PackedBinary, n: usize, m: usize, p_x: &Pmf) -> f64 {
    let weight_entropy: Vec<f64> = (0..=n as u32).map(|w| entropy_of_counts(&mut [w, n as u32 - w], n)).collect();
    let weight_prob: Vec<f64> = (0..=n as i32).map(|w| p_x.p(1).powi(w) * p_x.p(0).powi(n as i32 - w)).collect();
    let mut best = vec![u64::MAX; 1usize << m];
    let total = 1u64 << n;
    // Gray-code walk: y changes by one row of A per step.
    let walk = |mut visit: Box<dyn FnMut(u64, u64) + '_>| {
        let (mut x, mut y) = (0u64, 0u64);
        visit(x, y);
        for step in 1..total {
            let bit = step.trailing_zeros() as usize;
            x ^= 1 << bit;
            y ^= packed.row(n - 1 - bit);
            visit(x, y);
        }
    };
    walk(Box::new(|x, y| {
        let slot = &mut best[y as usize];
        if *slot == u64::MAX {
            *slot = x;
            return;
        }
        let (h, bh) = (weight_entropy[x.count_ones() as usize], weight_entropy[slot.count_ones() as usize]);
        if h < bh || (h == bh && x < *slot) {
            *slot = x;
        }
    }));
    let mut err = CompensatedSum::new();
    walk(Box::new(|x, y| {
        if best[y as usize] != x {
            err.add(weight_prob[x.count_ones() as usize]);
        }
    }));
    err.value()
}

/// Monte Carlo estimate with a 95% Wilson interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct McEstimate {
    pub trials: u64,
    pub errors: u64,
    pub estimate: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

impl McEstimate {
    pub fn from_counts(errors: u64, trials: u64) -> Self {
        let (low, high) = wilson_interval(errors, trials, 1.959_963_984_540_054);
        McEstimate {
            trials,
            errors,
            estimate: errors as f64 / trials as f64,
            ci_low: low,
            ci_high: high,
        }
    }

    /// Half the width of the interval.
    pub fn ci95(&self) -> f64 {
        (self.ci_high - self.ci_low) / 2.0
    }

    pub fn contains(&self, p: f64) -> bool {
        self.ci_low <= p && p <= self.ci_high
    }
}

pub fn wilson_interval(successes: u64, trials: u64, z: f64) -> (f64, f64) {
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    ((center - half).max(0.0), (center + half).min(1.0))
}

/// Runs the full encrypt/compress/strip/decode path once; true on error.
fn simulate_trial(sys: &CipherSystem, decoder: &UniversalDecoder, rng: &mut SimRng) -> Result<bool> {
    let x = sample_iid(&sys.p_x, sys.n, rng);
    let k = sample_iid(&sys.p_k, sys.n, rng);
    if let (Some(packed), true) = (sys.encoder.packed(), decoder.is_packed()) {
        let (xb, kb) = (crate::ffield::pack_bits(&x), crate::ffield::pack_bits(&k));
        let c_tilde = packed.affine(xb ^ kb);
        let x_tilde = c_tilde ^ packed.affine(kb);
        let x_hat = decoder.decode_packed(x_tilde).expect("packed decoder")?;
        return Ok(x_hat != xb);
    }
    let c = encrypt(sys.field, &x, &k)?;
    let c_tilde = encode_ciphertext(&sys.encoder, &c)?;
    let x_tilde = strip_key(&sys.encoder, &c_tilde, &k)?;
    Ok(decoder.decode(&x_tilde)? != x)
}

/// Monte Carlo decoding error rate. Trial `t` uses its own generator seeded
/// from `(seed, t)`, so the estimate does not depend on the thread count.
pub fn monte_carlo_error(sys: &CipherSystem, trials: u64, seed: u64) -> Result<McEstimate> {
    if trials == 0 {
        return Err(Error::InvalidParameter("trials must be at least 1".into()));
    }
    let decoder = UniversalDecoder::new(&sys.encoder, sys.budget)?;
    let errors = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = stream_rng(seed, stream::MC_TRIAL, t);
            simulate_trial(sys, &decoder, &mut rng).map(u64::from)
        })
        .try_reduce(|| 0, |a, b| Ok(a + b))?;
    Ok(McEstimate::from_counts(errors, trials))
}

/// How a candidate encoder was scored in [`best_of_sampled`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SelectionScore {
    Exact,
    Pilot,
}

/// Best of `count` sampled encoders by decoding error probability: exact when
/// `q^n` fits in the budget, otherwise a Monte Carlo pilot of `pilot_trials`.
/// Candidate `i` is sampled from the stream `(seed, i)`; ties keep the
/// earliest candidate.
pub fn best_of_sampled(
    template: &CipherSystem,
    count: usize,
    seed: u64,
    pilot_trials: u64,
) -> Result<(AffineEncoder, f64, SelectionScore)> {
    if count == 0 {
        return Err(Error::InvalidParameter("need at least one candidate encoder".into()));
    }
    let exact = template.field.pow_f64(template.n) <= template.budget as f64;
    let scored: Vec<(AffineEncoder, f64)> = (0..count as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream_rng(seed, stream::ENCODER, i);
            let enc = sample_affine_encoder(template.n, template.m, template.field, &mut rng)?;
            let score = if exact {
                error_probability_of(&enc, &template.p_x, template.budget)?
            } else {
                let sys = template.with_encoder(enc.clone())?;
                monte_carlo_error(&sys, pilot_trials, crate::rng::derive_seed(seed, stream::MC_TRIAL, i))?.estimate
            };
            Ok((enc, score))
        })
        .collect::<Result<_>>()?;
    let (enc, score) = scored
        .into_iter()
        .reduce(|best, cand| if cand.1 < best.1 { cand } else { best })
        .expect("count > 0");
    Ok((enc, score, if exact { SelectionScore::Exact } else { SelectionScore::Pilot }))
}
