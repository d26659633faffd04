//! Prime-field arithmetic, affine encoders and coset enumeration.
//!
//! Elements of GF(q) are plain [`Symbol`]s in `[0, q)`. Vectors are slices of
//! symbols and are multiplied on the left of a matrix (`y = xA`), matching the
//! row-vector convention of the encoders.
//!
//! For q = 2 with `n, m <= 64` an [`AffineEncoder`] also carries a bit-packed
//! copy of its matrix ([`PackedBinary`]) so that the hot loops in the cipher
//! simulator reduce to XORs of machine words. Packed sequences store the first
//! symbol in the most significant used bit, so integer order equals
//! lexicographic order of the sequences.

use rand::Rng;

use crate::error::{check_budget, Error, Result};
use crate::Symbol;

/// A prime field GF(q) with `2 <= q < 2^16`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct FieldSpec {
    q: Symbol,
}

fn is_prime(q: u32) -> bool {
    if q < 2 {
        return false;
    }
    let mut d = 2u32;
    while d * d <= q {
        if q % d == 0 {
            return false;
        }
        d += 1;
    }
    true
}

impl FieldSpec {
    pub fn new(q: u32) -> Result<Self> {
        if !(2..(1 << 16)).contains(&q) {
            return Err(Error::Domain(format!("modulus {q} outside [2, 2^16)")));
        }
        if !is_prime(q) {
            return Err(Error::Domain(format!("modulus {q} is not prime")));
        }
        Ok(FieldSpec { q: q as Symbol })
    }

    pub fn binary() -> Self {
        FieldSpec { q: 2 }
    }

    #[inline]
    pub fn q(&self) -> Symbol {
        self.q
    }

    #[inline]
    pub fn size(&self) -> usize {
        self.q as usize
    }

    #[inline]
    pub fn contains(&self, a: Symbol) -> bool {
        a < self.q
    }

    #[inline]
    pub fn add(&self, a: Symbol, b: Symbol) -> Symbol {
        ((a as u32 + b as u32) % self.q as u32) as Symbol
    }

    #[inline]
    pub fn sub(&self, a: Symbol, b: Symbol) -> Symbol {
        ((a as u32 + self.q as u32 - b as u32) % self.q as u32) as Symbol
    }

    #[inline]
    pub fn neg(&self, a: Symbol) -> Symbol {
        self.sub(0, a)
    }

    #[inline]
    pub fn mul(&self, a: Symbol, b: Symbol) -> Symbol {
        ((a as u32 * b as u32) % self.q as u32) as Symbol
    }

    /// Multiplicative inverse by the extended Euclidean algorithm.
    pub fn inv(&self, a: Symbol) -> Result<Symbol> {
        if a % self.q == 0 {
            return Err(Error::Domain("inverse of zero".into()));
        }
        let (mut r0, mut r1) = (self.q as i64, (a % self.q) as i64);
        let (mut t0, mut t1) = (0i64, 1i64);
        while r1 != 0 {
            let quot = r0 / r1;
            (r0, r1) = (r1, r0 - quot * r1);
            (t0, t1) = (t1, t0 - quot * t1);
        }
        Ok(t0.rem_euclid(self.q as i64) as Symbol)
    }

    fn check(&self, a: Symbol) -> Result<()> {
        if self.contains(a) {
            Ok(())
        } else {
            Err(Error::SymbolOutOfRange {
                symbol: a as usize,
                size: self.size(),
            })
        }
    }

    fn check_all(&self, xs: &[Symbol]) -> Result<()> {
        xs.iter().try_for_each(|&a| self.check(a))
    }

    /// `x + y` componentwise.
    pub fn vec_add(&self, x: &[Symbol], y: &[Symbol]) -> Result<Vec<Symbol>> {
        same_len("vec_add", x.len(), y.len())?;
        Ok(x.iter().zip(y).map(|(&a, &b)| self.add(a, b)).collect())
    }

    /// `x - y` componentwise.
    pub fn vec_sub(&self, x: &[Symbol], y: &[Symbol]) -> Result<Vec<Symbol>> {
        same_len("vec_sub", x.len(), y.len())?;
        Ok(x.iter().zip(y).map(|(&a, &b)| self.sub(a, b)).collect())
    }

    /// `q^exp` as a float, for budget checks.
    pub fn pow_f64(&self, exp: usize) -> f64 {
        (self.q as f64).powi(exp as i32)
    }
}

pub(crate) fn same_len(op: &'static str, expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { op, expected, got })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FieldOp {
    Add,
    Sub,
    Mul,
    Inv,
}

/// Single field operation with range checking. `b` is ignored for `Inv`.
pub fn field_arith(spec: FieldSpec, op: FieldOp, a: Symbol, b: Symbol) -> Result<Symbol> {
    spec.check(a)?;
    match op {
        FieldOp::Inv => spec.inv(a),
        _ => {
            spec.check(b)?;
            Ok(match op {
                FieldOp::Add => spec.add(a, b),
                FieldOp::Sub => spec.sub(a, b),
                FieldOp::Mul => spec.mul(a, b),
                FieldOp::Inv => unreachable!(),
            })
        }
    }
}

/// Dense row-major matrix over GF(q).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FieldMatrix {
    field: FieldSpec,
    rows: usize,
    cols: usize,
    entries: Vec<Symbol>,
}

impl FieldMatrix {
    pub fn new(field: FieldSpec, rows: usize, cols: usize, entries: Vec<Symbol>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::InvalidParameter("matrix dimensions must be positive".into()));
        }
        same_len("FieldMatrix::new", rows * cols, entries.len())?;
        field.check_all(&entries)?;
        Ok(FieldMatrix {
            field,
            rows,
            cols,
            entries,
        })
    }

    pub fn from_rows(field: FieldSpec, rows: &[Vec<Symbol>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::InvalidParameter("ragged matrix rows".into()));
        }
        Self::new(field, rows.len(), cols, rows.concat())
    }

    pub fn zeros(field: FieldSpec, rows: usize, cols: usize) -> Result<Self> {
        Self::new(field, rows, cols, vec![0; rows * cols])
    }

    pub fn identity(field: FieldSpec, n: usize) -> Result<Self> {
        let mut m = Self::zeros(field, n, n)?;
        for i in 0..n {
            m.entries[i * n + i] = 1;
        }
        Ok(m)
    }

    pub fn field(&self) -> FieldSpec {
        self.field
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> Symbol {
        self.entries[r * self.cols + c]
    }

    pub fn row(&self, r: usize) -> &[Symbol] {
        &self.entries[r * self.cols..(r + 1) * self.cols]
    }

    pub fn entries(&self) -> &[Symbol] {
        &self.entries
    }
}

/// `y = xA` over GF(q).
pub fn vec_mat_mul(x: &[Symbol], a: &FieldMatrix) -> Result<Vec<Symbol>> {
    same_len("vec_mat_mul", a.rows, x.len())?;
    let f = a.field;
    f.check_all(x)?;
    let q = f.q as u64;
    let mut acc = vec![0u64; a.cols];
    for (i, &xi) in x.iter().enumerate() {
        if xi == 0 {
            continue;
        }
        for (j, &aij) in a.row(i).iter().enumerate() {
            acc[j] += xi as u64 * aij as u64;
        }
        // Keep accumulators bounded for large n.
        if i % 1024 == 1023 {
            acc.iter_mut().for_each(|v| *v %= q);
        }
    }
    Ok(acc.into_iter().map(|v| (v % q) as Symbol).collect())
}

/// Bit-packed copy of a binary encoder.
///
/// Sequence `x` of length `n` packs as `sum_i x_i 2^(n-1-i)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PackedBinary {
    n: usize,
    m: usize,
    rows: Vec<u64>,
    offset: u64,
}

impl PackedBinary {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.m
    }

    /// `xA` on packed operands.
    #[inline]
    pub fn linear(&self, x: u64) -> u64 {
        let mut y = 0u64;
        let mut bits = x;
        while bits != 0 {
            let b = 63 - bits.leading_zeros() as usize;
            y ^= self.rows[self.n - 1 - b];
            bits &= !(1u64 << b);
        }
        y
    }

    /// `kA + b` on packed operands.
    #[inline]
    pub fn affine(&self, k: u64) -> u64 {
        self.linear(k) ^ self.offset
    }

    /// Packed row `i` of `A`.
    pub fn row(&self, i: usize) -> u64 {
        self.rows[i]
    }
}

pub fn pack_bits(x: &[Symbol]) -> u64 {
    debug_assert!(x.len() <= 64);
    x.iter().fold(0u64, |acc, &b| (acc << 1) | (b as u64 & 1))
}

pub fn unpack_bits(bits: u64, len: usize) -> Vec<Symbol> {
    (0..len).map(|i| ((bits >> (len - 1 - i)) & 1) as Symbol).collect()
}

/// The pair `(A, b)`: linear map `x -> xA` and affine map `k -> kA + b`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AffineEncoder {
    a: FieldMatrix,
    b: Vec<Symbol>,
    packed: Option<PackedBinary>,
}

impl AffineEncoder {
    pub fn new(a: FieldMatrix, b: Vec<Symbol>) -> Result<Self> {
        if a.cols > a.rows {
            return Err(Error::InvalidParameter(format!(
                "encoder output length {} exceeds block length {}",
                a.cols, a.rows
            )));
        }
        same_len("AffineEncoder::new", a.cols, b.len())?;
        a.field.check_all(&b)?;
        let packed = (a.field.q == 2 && a.rows <= 64 && a.cols <= 64).then(|| PackedBinary {
            n: a.rows,
            m: a.cols,
            rows: (0..a.rows).map(|i| pack_bits(a.row(i))).collect(),
            offset: pack_bits(&b),
        });
        Ok(AffineEncoder { a, b, packed })
    }

    /// Linear encoder with zero offset.
    pub fn linear_only(a: FieldMatrix) -> Result<Self> {
        let m = a.cols;
        Self::new(a, vec![0; m])
    }

    pub fn n(&self) -> usize {
        self.a.rows
    }

    pub fn m(&self) -> usize {
        self.a.cols
    }

    pub fn field(&self) -> FieldSpec {
        self.a.field
    }

    pub fn matrix(&self) -> &FieldMatrix {
        &self.a
    }

    pub fn offset(&self) -> &[Symbol] {
        &self.b
    }

    pub fn packed(&self) -> Option<&PackedBinary> {
        self.packed.as_ref()
    }

    /// The same matrix with a different offset.
    pub fn with_offset(&self, b: Vec<Symbol>) -> Result<Self> {
        Self::new(self.a.clone(), b)
    }

    /// `xA`.
    pub fn linear(&self, x: &[Symbol]) -> Result<Vec<Symbol>> {
        vec_mat_mul(x, &self.a)
    }

    /// `kA + b`.
    pub fn affine(&self, k: &[Symbol]) -> Result<Vec<Symbol>> {
        let y = vec_mat_mul(k, &self.a)?;
        self.a.field.vec_add(&y, &self.b)
    }
}

/// Draws `A` (row-major) and then `b` with i.i.d. uniform entries.
pub fn sample_affine_encoder<R: Rng + ?Sized>(
    n: usize,
    m: usize,
    field: FieldSpec,
    rng: &mut R,
) -> Result<AffineEncoder> {
    if m == 0 || m > n {
        return Err(Error::InvalidParameter(format!("need 1 <= m <= n, got n={n}, m={m}")));
    }
    let q = field.q;
    let entries: Vec<Symbol> = (0..n * m).map(|_| rng.gen_range(0..q)).collect();
    let b: Vec<Symbol> = (0..m).map(|_| rng.gen_range(0..q)).collect();
    AffineEncoder::new(FieldMatrix::new(field, n, m, entries)?, b)
}

/// Gaussian elimination of `A^T`, prepared for repeated preimage queries.
///
/// Solving `xA = y` is the column system `A^T x^T = y^T`. The reduced row
/// echelon form `R = E A^T` is computed with leftmost-first pivots, which
/// fixes the anchor solution (free coordinates zero) for every `y`.
#[derive(Debug, Clone)]
pub struct LinearSolver {
    field: FieldSpec,
    n: usize,
    m: usize,
    rank: usize,
    pivot_cols: Vec<usize>,
    rref: Vec<Vec<Symbol>>,
    transform: Vec<Vec<Symbol>>,
    kernel: Vec<Vec<Symbol>>,
}

impl LinearSolver {
    pub fn new(a: &FieldMatrix) -> Self {
        let f = a.field;
        let (n, m) = (a.rows, a.cols);
        let mut rows: Vec<Vec<Symbol>> = (0..m).map(|j| (0..n).map(|i| a.get(i, j)).collect()).collect();
        let mut transform: Vec<Vec<Symbol>> = (0..m)
            .map(|j| (0..m).map(|c| Symbol::from(c == j)).collect())
            .collect();
        let mut pivot_cols = Vec::new();
        let mut r = 0;
        for col in 0..n {
            if r == m {
                break;
            }
            let Some(p) = (r..m).find(|&i| rows[i][col] != 0) else {
                continue;
            };
            rows.swap(r, p);
            transform.swap(r, p);
            let inv = f.inv(rows[r][col]).expect("pivot is nonzero");
            scale_row(f, &mut rows[r], inv);
            scale_row(f, &mut transform[r], inv);
            for i in 0..m {
                if i != r && rows[i][col] != 0 {
                    let factor = rows[i][col];
                    let (pivot_row, pivot_t) = (rows[r].clone(), transform[r].clone());
                    axpy(f, &mut rows[i], factor, &pivot_row);
                    axpy(f, &mut transform[i], factor, &pivot_t);
                }
            }
            pivot_cols.push(col);
            r += 1;
        }
        let rank = r;
        let mut is_pivot = vec![false; n];
        pivot_cols.iter().for_each(|&c| is_pivot[c] = true);
        let kernel = (0..n)
            .filter(|&c| !is_pivot[c])
            .map(|free| {
                let mut v = vec![0; n];
                v[free] = 1;
                for (i, &pc) in pivot_cols.iter().enumerate() {
                    v[pc] = f.neg(rows[i][free]);
                }
                v
            })
            .collect();
        LinearSolver {
            field: f,
            n,
            m,
            rank,
            pivot_cols,
            rref: rows,
            transform,
            kernel,
        }
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn kernel_basis(&self) -> &[Vec<Symbol>] {
        &self.kernel
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of preimages of any `y` in the image, as a float.
    pub fn coset_size(&self) -> f64 {
        self.field.pow_f64(self.n - self.rank)
    }

    /// Deterministic particular solution of `xA = y`, or `None` when `y` is
    /// not in the image.
    pub fn anchor(&self, y: &[Symbol]) -> Result<Option<Vec<Symbol>>> {
        same_len("LinearSolver::anchor", self.m, y.len())?;
        self.field.check_all(y)?;
        let f = self.field;
        let e: Vec<Symbol> = self
            .transform
            .iter()
            .map(|row| row.iter().zip(y).fold(0, |acc, (&t, &yj)| f.add(acc, f.mul(t, yj))))
            .collect();
        if e[self.rank..].iter().any(|&v| v != 0) {
            return Ok(None);
        }
        let mut x = vec![0; self.n];
        for (i, &pc) in self.pivot_cols.iter().enumerate() {
            x[pc] = e[i];
        }
        Ok(Some(x))
    }

    /// Iterator over `{x : xA = y}`.
    pub fn coset(&self, y: &[Symbol], budget: u64) -> Result<Coset> {
        check_budget("preimage_coset", self.coset_size(), budget)?;
        let anchor = self.anchor(y)?;
        Ok(Coset {
            field: self.field,
            kernel: self.kernel.clone(),
            coeffs: vec![0; self.kernel.len()],
            next: anchor,
        })
    }

    #[allow(dead_code)]
    pub(crate) fn rref(&self) -> &[Vec<Symbol>] {
        &self.rref
    }

    /// Packed variant for binary fields with `n, m <= 64`.
    pub fn packed(&self) -> Option<PackedSolver> {
        if self.field.q != 2 || self.n > 64 || self.m > 64 {
            return None;
        }
        let n = self.n;
        let m = self.m;
        // anchor(y) is linear in y: column j of the transform, routed to pivot coordinates.
        let anchor_gen = (0..m)
            .map(|j| {
                self.pivot_cols
                    .iter()
                    .enumerate()
                    .filter(|&(i, _)| self.transform[i][j] != 0)
                    .fold(0u64, |acc, (_, &pc)| acc | (1u64 << (n - 1 - pc)))
            })
            .collect();
        let consistency = self.transform[self.rank..].iter().map(|row| pack_bits(row)).collect();
        let kernel = self.kernel.iter().map(|v| pack_bits(v)).collect();
        Some(PackedSolver {
            m,
            anchor_gen,
            consistency,
            kernel,
        })
    }
}

fn scale_row(f: FieldSpec, row: &mut [Symbol], s: Symbol) {
    row.iter_mut().for_each(|v| *v = f.mul(*v, s));
}

/// `row -= factor * pivot`.
fn axpy(f: FieldSpec, row: &mut [Symbol], factor: Symbol, pivot: &[Symbol]) {
    for (v, &p) in row.iter_mut().zip(pivot) {
        *v = f.sub(*v, f.mul(factor, p));
    }
}

/// Binary preimage solver on packed words.
#[derive(Debug, Clone)]
pub struct PackedSolver {
    m: usize,
    anchor_gen: Vec<u64>,
    consistency: Vec<u64>,
    kernel: Vec<u64>,
}

impl PackedSolver {
    #[inline]
    pub fn anchor(&self, y: u64) -> Option<u64> {
        if self.consistency.iter().any(|&mask| (mask & y).count_ones() & 1 == 1) {
            return None;
        }
        let mut x = 0u64;
        for (j, &g) in self.anchor_gen.iter().enumerate() {
            if (y >> (self.m - 1 - j)) & 1 == 1 {
                x ^= g;
            }
        }
        Some(x)
    }

    pub fn kernel(&self) -> &[u64] {
        &self.kernel
    }

    /// Visits every member of the coset of `anchor` in Gray-code order.
    #[inline]
    pub fn for_each_member(&self, anchor: u64, mut visit: impl FnMut(u64)) {
        let mut x = anchor;
        visit(x);
        let d = self.kernel.len();
        for step in 1u64..(1u64 << d) {
            x ^= self.kernel[step.trailing_zeros() as usize];
            visit(x);
        }
    }
}

/// Rank of `x -> xA` and a basis of `{v : vA = 0}`.
pub fn rank_and_kernel(a: &FieldMatrix) -> (usize, Vec<Vec<Symbol>>) {
    let s = LinearSolver::new(a);
    (s.rank, s.kernel)
}

/// All `x` with `xA = y`: the anchor solution plus the kernel span, in
/// lexicographic order of the kernel coefficients.
pub fn preimage_coset(a: &FieldMatrix, y: &[Symbol], budget: u64) -> Result<Coset> {
    LinearSolver::new(a).coset(y, budget)
}

/// Iterator returned by [`preimage_coset`]. Empty when `y` is not in the image.
#[derive(Debug, Clone)]
pub struct Coset {
    field: FieldSpec,
    kernel: Vec<Vec<Symbol>>,
    coeffs: Vec<Symbol>,
    next: Option<Vec<Symbol>>,
}

impl Iterator for Coset {
    type Item = Vec<Symbol>;

    fn next(&mut self) -> Option<Vec<Symbol>> {
        let current = self.next.take()?;
        // Odometer on the coefficients, last coefficient fastest. Adding the
        // new coefficient difference to the running vector keeps each step
        // O(n * changed digits).
        let f = self.field;
        let mut x = current.clone();
        let mut pos = self.coeffs.len();
        loop {
            if pos == 0 {
                return Some(current);
            }
            pos -= 1;
            let c = self.coeffs[pos];
            if c + 1 < f.q {
                self.coeffs[pos] = c + 1;
                for (xi, &vi) in x.iter_mut().zip(&self.kernel[pos]) {
                    *xi = f.add(*xi, vi);
                }
                break;
            }
            // Wrap this digit back to zero: subtract (q-1) * v.
            self.coeffs[pos] = 0;
            for (xi, &vi) in x.iter_mut().zip(&self.kernel[pos]) {
                *xi = f.sub(*xi, f.mul(c, vi));
            }
        }
        self.next = Some(x);
        Some(current)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};

    fn gf(q: u32) -> FieldSpec {
        FieldSpec::new(q).unwrap()
    }

    #[test]
    fn arithmetic_examples() {
        assert_eq!(field_arith(gf(2), FieldOp::Add, 1, 1).unwrap(), 0);
        assert_eq!(field_arith(gf(3), FieldOp::Sub, 0, 1).unwrap(), 2);
        assert_eq!(field_arith(gf(5), FieldOp::Inv, 3, 0).unwrap(), 2);
        assert!(matches!(field_arith(gf(5), FieldOp::Inv, 0, 0), Err(Error::Domain(_))));
        assert!(field_arith(gf(5), FieldOp::Add, 5, 0).is_err());
    }

    #[test]
    fn rejects_composite_and_out_of_range_moduli() {
        assert!(FieldSpec::new(4).is_err());
        assert!(FieldSpec::new(1).is_err());
        assert!(FieldSpec::new(65536).is_err());
        assert!(FieldSpec::new(65521).is_ok());
    }

    #[test]
    fn inverse_is_exhaustively_correct_for_small_primes() {
        for q in (2..=257).filter(|&q| is_prime(q)) {
            let f = gf(q);
            for a in 1..q as Symbol {
                assert_eq!(f.mul(a, f.inv(a).unwrap()), 1, "q={q} a={a}");
            }
        }
    }

    #[test]
    fn vec_mat_mul_examples() {
        let a = FieldMatrix::from_rows(gf(2), &[vec![1, 0], vec![1, 1]]).unwrap();
        assert_eq!(vec_mat_mul(&[1, 1], &a).unwrap(), vec![0, 1]);
        assert_eq!(vec_mat_mul(&[0, 0], &a).unwrap(), vec![0, 0]);
        let a3 = FieldMatrix::from_rows(gf(3), &[vec![2], vec![2]]).unwrap();
        assert_eq!(vec_mat_mul(&[1, 2], &a3).unwrap(), vec![0]);
        assert!(vec_mat_mul(&[1, 2, 0], &a3).is_err());
    }

    #[test]
    fn sampling_is_deterministic_and_full_support() {
        let mk = |seed| sample_affine_encoder(4, 2, gf(2), &mut crate::rng::rng_from_seed(seed)).unwrap();
        assert_eq!(mk(11), mk(11));
        let mut seen = [[false; 2]; 2];
        for s in 0..64 {
            let e = sample_affine_encoder(1, 1, gf(2), &mut crate::rng::rng_from_seed(s)).unwrap();
            seen[e.matrix().get(0, 0) as usize][e.offset()[0] as usize] = true;
        }
        assert!(seen.iter().flatten().all(|&b| b));
    }

    #[test]
    fn sampled_entries_are_uniform() {
        // Chi-square of 10^5 entries over GF(5) against uniform; 4 dof,
        // 99.9% quantile is 18.47.
        let f = gf(5);
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(3);
        let mut counts = [0u64; 5];
        let mut total = 0u64;
        while total < 100_000 {
            let e = sample_affine_encoder(10, 10, f, &mut rng).unwrap();
            for &v in e.matrix().entries().iter().chain(e.offset()) {
                counts[v as usize] += 1;
                total += 1;
            }
        }
        let expected = total as f64 / 5.0;
        let chi2: f64 = counts.iter().map(|&c| (c as f64 - expected).powi(2) / expected).sum();
        assert!(chi2 < 18.47, "chi2={chi2}");
    }

    #[test]
    fn rank_and_kernel_examples() {
        let a = FieldMatrix::from_rows(gf(2), &[vec![1], vec![1]]).unwrap();
        assert_eq!(rank_and_kernel(&a), (1, vec![vec![1, 1]]));
        let id = FieldMatrix::identity(gf(3), 4).unwrap();
        assert_eq!(rank_and_kernel(&id), (4, vec![]));
        let z = FieldMatrix::zeros(gf(5), 3, 2).unwrap();
        let (r, k) = rank_and_kernel(&z);
        assert_eq!(r, 0);
        assert_eq!(k, vec![vec![1, 0, 0], vec![0, 1, 0], vec![0, 0, 1]]);
    }

    #[test]
    fn preimage_examples() {
        let a = FieldMatrix::from_rows(gf(2), &[vec![1], vec![1]]).unwrap();
        let c: Vec<_> = preimage_coset(&a, &[1], 1 << 10).unwrap().collect();
        assert_eq!(c, vec![vec![1, 0], vec![0, 1]]);
        let c: Vec<_> = preimage_coset(&a, &[0], 1 << 10).unwrap().collect();
        assert_eq!(c, vec![vec![0, 0], vec![1, 1]]);
        let id = FieldMatrix::identity(gf(3), 3).unwrap();
        let c: Vec<_> = preimage_coset(&id, &[2, 0, 1], 1).unwrap().collect();
        assert_eq!(c, vec![vec![2, 0, 1]]);
    }

    #[test]
    fn preimage_outside_image_is_empty_and_budget_is_enforced() {
        let z = FieldMatrix::zeros(gf(2), 3, 1).unwrap();
        assert_eq!(preimage_coset(&z, &[1], 1 << 10).unwrap().count(), 0);
        assert_eq!(preimage_coset(&z, &[0], 1 << 10).unwrap().count(), 8);
        assert!(preimage_coset(&z, &[0], 7).unwrap_err().is_budget());
    }

    #[test]
    fn cosets_partition_the_space() {
        let f = gf(3);
        let a = sample_affine_encoder(4, 2, f, &mut crate::rng::rng_from_seed(5)).unwrap();
        let solver = LinearSolver::new(a.matrix());
        let mut all = Vec::new();
        for y0 in 0..3 {
            for y1 in 0..3 {
                let members: Vec<_> = solver.coset(&[y0, y1], 1 << 10).unwrap().collect();
                for x in &members {
                    assert_eq!(a.linear(x).unwrap(), vec![y0, y1]);
                }
                all.extend(members);
            }
        }
        all.sort();
        all.dedup();
        assert_eq!(all.len(), 81);
    }

    #[test]
    fn packed_paths_match_generic() {
        let f = FieldSpec::binary();
        for seed in 0..20 {
            let enc = sample_affine_encoder(9, 5, f, &mut crate::rng::rng_from_seed(seed)).unwrap();
            let p = enc.packed().unwrap();
            let solver = LinearSolver::new(enc.matrix());
            let ps = solver.packed().unwrap();
            for xb in 0..(1u64 << 9) {
                let x = unpack_bits(xb, 9);
                assert_eq!(p.linear(xb), pack_bits(&enc.linear(&x).unwrap()));
                assert_eq!(p.affine(xb), pack_bits(&enc.affine(&x).unwrap()));
            }
            for yb in 0..(1u64 << 5) {
                let y = unpack_bits(yb, 5);
                let generic = solver.anchor(&y).unwrap().map(|v| pack_bits(&v));
                assert_eq!(ps.anchor(yb), generic);
                if let Some(anchor) = generic {
                    let mut packed: Vec<u64> = Vec::new();
                    ps.for_each_member(anchor, |x| packed.push(x));
                    packed.sort();
                    let mut generic: Vec<u64> =
                        solver.coset(&y, 1 << 20).unwrap().map(|v| pack_bits(&v)).collect();
                    generic.sort();
                    assert_eq!(packed, generic);
                }
            }
        }
    }

    proptest! {
        #[test]
        fn affine_homomorphism(
            q in prop::sample::select(vec![2u32, 3, 5, 7, 11]),
            n in 1usize..8,
            m_frac in 0.0f64..1.0,
            seed in any::<u64>(),
        ) {
            let f = gf(q);
            let m = 1 + ((n - 1) as f64 * m_frac) as usize;
            let mut rng = crate::rng::rng_from_seed(seed);
            let enc = sample_affine_encoder(n, m, f, &mut rng).unwrap();
            let x: Vec<Symbol> = (0..n).map(|_| rng.gen_range(0..f.q())).collect();
            let k: Vec<Symbol> = (0..n).map(|_| rng.gen_range(0..f.q())).collect();
            let lhs = enc.affine(&f.vec_add(&x, &k).unwrap()).unwrap();
            let rhs = f.vec_add(&enc.linear(&x).unwrap(), &enc.affine(&k).unwrap()).unwrap();
            prop_assert_eq!(lhs, rhs);
        }

        #[test]
        fn kernel_vectors_annihilate_and_count_matches_rank(
            q in prop::sample::select(vec![2u32, 3, 5]),
            n in 1usize..7,
            m in 1usize..7,
            seed in any::<u64>(),
        ) {
            let f = gf(q);
            let mut rng = crate::rng::rng_from_seed(seed);
            let entries = (0..n * m).map(|_| rng.gen_range(0..f.q())).collect();
            let a = FieldMatrix::new(f, n, m, entries).unwrap();
            let (rank, basis) = rank_and_kernel(&a);
            prop_assert_eq!(basis.len(), n - rank);
            prop_assert!(rank <= n.min(m));
            for v in &basis {
                prop_assert!(vec_mat_mul(v, &a).unwrap().iter().all(|&c| c == 0));
            }
        }
    }
}
