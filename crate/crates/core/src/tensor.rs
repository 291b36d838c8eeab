//! Dense complex linear algebra over small Hilbert spaces.
//!
//! Everything here works on square matrices of modest size (the largest
//! object in this crate is 64×64), stored row-major. The computational
//! product basis is ordered lexicographically with `|+⟩ ↦ 0` and
//! `|−⟩ ↦ 1`; the first particle is the most significant digit.

use std::fmt;
use std::ops::{Index, IndexMut};

use num_complex::Complex64;
use thiserror::Error;

/// Sweep budget for the cyclic Jacobi eigensolver.
pub const MAX_JACOBI_SWEEPS: usize = 100;

/// Relative off-diagonal Frobenius threshold at which Jacobi stops.
pub const JACOBI_THRESHOLD: f64 = 1e-12;

/// Default absolute tolerance used to group eigenvalues into clusters.
pub const DEFAULT_CLUSTER_TOL: f64 = 1e-8;

/// Tolerance used by [`measure_project`] for the projector check and for
/// deciding that an outcome has zero probability.
pub const PROJECTOR_TOL: f64 = 1e-10;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LinalgError {
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },
    #[error("matrix data has {len} entries, which is not {dim}x{dim}")]
    BadShape { dim: usize, len: usize },
    #[error("dimension must be at least 1")]
    EmptyDimension,
    #[error("non-finite entry at index {index}")]
    NonFinite { index: usize },
    #[error("matrix is not Hermitian (deviation {deviation:e})")]
    NotHermitian { deviation: f64 },
    #[error("matrix is not a projector (deviation {deviation:e})")]
    NotProjector { deviation: f64 },
    #[error("Jacobi iteration did not converge within {sweeps} sweeps (off-diagonal {off:e})")]
    NoConvergence { sweeps: usize, off: f64 },
    #[error("operators {first} and {second} do not commute (commutator norm {norm:e})")]
    NonCommuting {
        first: usize,
        second: usize,
        norm: f64,
    },
    #[error("{ops} operators but {targets} targets")]
    TargetCountMismatch { ops: usize, targets: usize },
    #[error("state dimension {dim} is not divisible by {left}")]
    NotDivisible { dim: usize, left: usize },
    #[error("cannot normalize a zero vector")]
    ZeroVector,
}

fn check_finite(data: &[Complex64]) -> Result<(), LinalgError> {
    match data
        .iter()
        .position(|z| !z.re.is_finite() || !z.im.is_finite())
    {
        Some(index) => Err(LinalgError::NonFinite { index }),
        None => Ok(()),
    }
}

/// Square dense complex matrix, row-major.
#[derive(Clone, PartialEq)]
pub struct ComplexMatrix {
    dim: usize,
    data: Vec<Complex64>,
}

impl ComplexMatrix {
    pub fn new(dim: usize, data: Vec<Complex64>) -> Result<Self, LinalgError> {
        if dim == 0 {
            return Err(LinalgError::EmptyDimension);
        }
        if data.len() != dim * dim {
            return Err(LinalgError::BadShape {
                dim,
                len: data.len(),
            });
        }
        check_finite(&data)?;
        Ok(Self { dim, data })
    }

    /// Builds a matrix from real row-major entries.
    pub fn from_real(dim: usize, data: &[f64]) -> Result<Self, LinalgError> {
        Self::new(dim, data.iter().map(|&x| Complex64::new(x, 0.0)).collect())
    }

    pub fn zeros(dim: usize) -> Self {
        assert!(dim > 0, "matrix dimension must be positive");
        Self {
            dim,
            data: vec![ZERO; dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m[(i, i)] = ONE;
        }
        m
    }

    pub fn from_diagonal(diag: &[f64]) -> Self {
        let mut m = Self::zeros(diag.len());
        for (i, &d) in diag.iter().enumerate() {
            m[(i, i)] = Complex64::new(d, 0.0);
        }
        m
    }

    /// The rank-one operator `|v⟩⟨v|`.
    pub fn projector_onto(v: &StateVector) -> Self {
        let n = v.dim();
        let mut m = Self::zeros(n);
        for i in 0..n {
            for j in 0..n {
                m[(i, j)] = v[i] * v[j].conj();
            }
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn entries(&self) -> &[Complex64] {
        &self.data
    }

    pub fn dagger(&self) -> Self {
        let n = self.dim;
        let mut out = Self::zeros(n);
        for i in 0..n {
            for j in 0..n {
                out[(j, i)] = self[(i, j)].conj();
            }
        }
        out
    }

    pub fn scale(&self, factor: Complex64) -> Self {
        Self {
            dim: self.dim,
            data: self.data.iter().map(|z| z * factor).collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Result<Self, LinalgError> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Result<Self, LinalgError> {
        self.zip_with(other, |a, b| a - b)
    }

    fn zip_with(
        &self,
        other: &Self,
        f: impl Fn(Complex64, Complex64) -> Complex64,
    ) -> Result<Self, LinalgError> {
        same_dim(self.dim, other.dim)?;
        Ok(Self {
            dim: self.dim,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        })
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.dim).map(|i| self[(i, i)]).sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Largest entry modulus.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Largest entry-wise modulus of `self - other`.
    pub fn max_abs_diff(&self, other: &Self) -> Result<f64, LinalgError> {
        Ok(self.sub(other)?.max_abs())
    }

    pub fn hermitian_deviation(&self) -> f64 {
        let n = self.dim;
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for j in i..n {
                worst = worst.max((self[(i, j)] - self[(j, i)].conj()).norm());
            }
        }
        worst
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.hermitian_deviation() <= tol
    }

    fn projector_deviation(&self) -> f64 {
        let square = matmul_unchecked(self, self);
        let idem = square
            .data
            .iter()
            .zip(&self.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max);
        idem.max(self.hermitian_deviation())
    }

    /// `P·P ≈ P` and `P† ≈ P`, both in max-entry norm.
    pub fn is_projector(&self, tol: f64) -> bool {
        self.projector_deviation() <= tol
    }
}

impl Index<(usize, usize)> for ComplexMatrix {
    type Output = Complex64;

    fn index(&self, (r, c): (usize, usize)) -> &Complex64 {
        &self.data[r * self.dim + c]
    }
}

impl IndexMut<(usize, usize)> for ComplexMatrix {
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut Complex64 {
        &mut self.data[r * self.dim + c]
    }
}

impl fmt::Debug for ComplexMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "ComplexMatrix({}x{})", self.dim, self.dim)?;
        for r in 0..self.dim {
            let row: Vec<String> = (0..self.dim)
                .map(|c| {
                    let z = self[(r, c)];
                    format!("{:+.4}{:+.4}i", z.re, z.im)
                })
                .collect();
            writeln!(f, "  [{}]", row.join(", "))?;
        }
        Ok(())
    }
}

/// Complex amplitude vector. Not necessarily normalized; see [`StateVector::normalize`].
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    amps: Vec<Complex64>,
}

impl StateVector {
    pub fn new(amps: Vec<Complex64>) -> Result<Self, LinalgError> {
        if amps.is_empty() {
            return Err(LinalgError::EmptyDimension);
        }
        check_finite(&amps)?;
        Ok(Self { amps })
    }

    pub fn from_real(amps: &[f64]) -> Result<Self, LinalgError> {
        Self::new(amps.iter().map(|&x| Complex64::new(x, 0.0)).collect())
    }

    /// The `index`-th computational basis vector of dimension `dim`.
    pub fn basis(dim: usize, index: usize) -> Self {
        assert!(index < dim, "basis index {index} out of range for dim {dim}");
        let mut amps = vec![ZERO; dim];
        amps[index] = ONE;
        Self { amps }
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn norm(&self) -> f64 {
        self.amps.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn normalize(&self) -> Result<Self, LinalgError> {
        let n = self.norm();
        if n == 0.0 {
            return Err(LinalgError::ZeroVector);
        }
        Ok(Self {
            amps: self.amps.iter().map(|z| z / n).collect(),
        })
    }

    /// `⟨self|other⟩`, conjugate-linear in `self`.
    pub fn inner(&self, other: &Self) -> Result<Complex64, LinalgError> {
        same_dim(self.dim(), other.dim())?;
        Ok(self
            .amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| a.conj() * b)
            .sum())
    }

    pub fn scale(&self, factor: Complex64) -> Self {
        Self {
            amps: self.amps.iter().map(|z| z * factor).collect(),
        }
    }

    pub fn sub(&self, other: &Self) -> Result<Self, LinalgError> {
        same_dim(self.dim(), other.dim())?;
        Ok(Self {
            amps: self
                .amps
                .iter()
                .zip(&other.amps)
                .map(|(a, b)| a - b)
                .collect(),
        })
    }

    pub fn kron(&self, other: &Self) -> Self {
        let mut amps = Vec::with_capacity(self.dim() * other.dim());
        for a in &self.amps {
            for b in &other.amps {
                amps.push(a * b);
            }
        }
        Self { amps }
    }

    /// Multiplies by a global phase so the first component with modulus
    /// above `1e-12` is real and positive.
    pub fn with_canonical_phase(&self) -> Self {
        match self.amps.iter().find(|z| z.norm() > 1e-12) {
            Some(lead) => {
                let phase = lead.conj() / lead.norm();
                self.scale(phase)
            }
            None => self.clone(),
        }
    }
}

impl Index<usize> for StateVector {
    type Output = Complex64;

    fn index(&self, i: usize) -> &Complex64 {
        &self.amps[i]
    }
}

/// Eigenvalues in ascending order with matching orthonormal eigenvectors.
#[derive(Debug, Clone)]
pub struct EigenDecomposition {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: Vec<StateVector>,
}

impl EigenDecomposition {
    /// `Σ λ_k |v_k⟩⟨v_k|`.
    pub fn reconstruct(&self) -> ComplexMatrix {
        let n = self.eigenvectors[0].dim();
        let mut m = ComplexMatrix::zeros(n);
        for (&lambda, v) in self.eigenvalues.iter().zip(&self.eigenvectors) {
            for i in 0..n {
                for j in 0..n {
                    m[(i, j)] += v[i] * v[j].conj() * lambda;
                }
            }
        }
        m
    }
}

/// Eigenvalue clusters with multiplicities, ascending.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumMultiset {
    pub values: Vec<(f64, usize)>,
}

impl SpectrumMultiset {
    pub fn total_multiplicity(&self) -> usize {
        self.values.iter().map(|&(_, m)| m).sum()
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        self.values.iter().map(|&(v, _)| v).collect()
    }

    /// For each cluster, the nearest member of `allowed` (NaN when `allowed` is empty).
    pub fn nearest_in(&self, allowed: &[f64]) -> Vec<f64> {
        self.values
            .iter()
            .map(|&(v, _)| {
                allowed
                    .iter()
                    .copied()
                    .min_by(|a, b| (a - v).abs().total_cmp(&(b - v).abs()))
                    .unwrap_or(f64::NAN)
            })
            .collect()
    }

    pub fn is_subset_of(&self, allowed: &[f64], tol: f64) -> bool {
        self.values
            .iter()
            .zip(self.nearest_in(allowed))
            .all(|(&(v, _), near)| (v - near).abs() <= tol)
    }
}

fn same_dim(expected: usize, actual: usize) -> Result<(), LinalgError> {
    if expected == actual {
        Ok(())
    } else {
        Err(LinalgError::DimensionMismatch { expected, actual })
    }
}

/// Kronecker product: entry `(i·b.dim + k, j·b.dim + l)` is `a(i,j)·b(k,l)`.
pub fn kron(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    let (na, nb) = (a.dim, b.dim);
    let n = na * nb;
    let mut out = ComplexMatrix::zeros(n);
    for i in 0..na {
        for j in 0..na {
            let aij = a[(i, j)];
            if aij == ZERO {
                continue;
            }
            for k in 0..nb {
                for l in 0..nb {
                    out[(i * nb + k, j * nb + l)] = aij * b[(k, l)];
                }
            }
        }
    }
    out
}

/// Kronecker product of a non-empty sequence, left to right.
pub fn kron_all<'a>(factors: impl IntoIterator<Item = &'a ComplexMatrix>) -> Option<ComplexMatrix> {
    factors.into_iter().fold(None, |acc, m| match acc {
        None => Some(m.clone()),
        Some(prev) => Some(kron(&prev, m)),
    })
}

fn matmul_unchecked(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    let n = a.dim;
    let mut out = ComplexMatrix::zeros(n);
    for i in 0..n {
        for k in 0..n {
            let aik = a[(i, k)];
            if aik == ZERO {
                continue;
            }
            let row = &b.data[k * n..(k + 1) * n];
            let dst = &mut out.data[i * n..(i + 1) * n];
            for (d, &bkj) in dst.iter_mut().zip(row) {
                *d += aik * bkj;
            }
        }
    }
    out
}

pub fn matmul(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<ComplexMatrix, LinalgError> {
    same_dim(a.dim, b.dim)?;
    Ok(matmul_unchecked(a, b))
}

/// Ordered product `m₀·m₁·…`; `None` for an empty sequence.
pub fn matmul_all<'a>(
    factors: impl IntoIterator<Item = &'a ComplexMatrix>,
) -> Result<Option<ComplexMatrix>, LinalgError> {
    let mut acc: Option<ComplexMatrix> = None;
    for m in factors {
        acc = Some(match acc {
            None => m.clone(),
            Some(prev) => matmul(&prev, m)?,
        });
    }
    Ok(acc)
}

/// Max-entry modulus of `ab − ba`.
pub fn commutator_norm(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<f64, LinalgError> {
    let ab = matmul(a, b)?;
    let ba = matmul_unchecked(b, a);
    ab.max_abs_diff(&ba)
}

pub fn apply(m: &ComplexMatrix, s: &StateVector) -> Result<StateVector, LinalgError> {
    same_dim(m.dim, s.dim())?;
    let n = m.dim;
    let amps = (0..n)
        .map(|i| (0..n).map(|j| m[(i, j)] * s[j]).sum())
        .collect();
    Ok(StateVector { amps })
}

/// Applies the unitary Jacobi step on the `(p, q)` plane: `h ← g† h g`, `v ← v g`,
/// where `g = [[c, s], [−s·e^{−iφ}, c·e^{−iφ}]]`.
fn rotate(h: &mut ComplexMatrix, v: &mut ComplexMatrix, p: usize, q: usize, c: f64, s: f64, phase: Complex64) {
    let n = h.dim;
    let g_pp = Complex64::new(c, 0.0);
    let g_pq = Complex64::new(s, 0.0);
    let g_qp = phase * (-s);
    let g_qq = phase * c;

    // columns: h ← h g, v ← v g
    for m in [&mut *h, &mut *v] {
        for r in 0..n {
            let hp = m[(r, p)];
            let hq = m[(r, q)];
            m[(r, p)] = hp * g_pp + hq * g_qp;
            m[(r, q)] = hp * g_pq + hq * g_qq;
        }
    }
    // rows: h ← g† h
    for col in 0..n {
        let hp = h[(p, col)];
        let hq = h[(q, col)];
        h[(p, col)] = g_pp.conj() * hp + g_qp.conj() * hq;
        h[(q, col)] = g_pq.conj() * hp + g_qq.conj() * hq;
    }
}

fn off_diagonal_norm(h: &ComplexMatrix) -> f64 {
    let n = h.dim;
    let mut sum = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                sum += h[(i, j)].norm_sqr();
            }
        }
    }
    sum.sqrt()
}

/// Eigendecomposition of a Hermitian matrix by cyclic complex Jacobi rotations.
///
/// Each eigenvector carries the canonical phase (first significant component
/// real and positive). Vectors belonging to a degenerate eigenvalue are an
/// arbitrary, but deterministic, orthonormal basis of that eigenspace.
pub fn hermitian_eig(m: &ComplexMatrix, tol: f64) -> Result<EigenDecomposition, LinalgError> {
    let deviation = m.hermitian_deviation();
    if deviation > tol {
        return Err(LinalgError::NotHermitian { deviation });
    }
    let n = m.dim;
    let mut h = m.clone();
    // symmetrize away the tolerated deviation so the diagonal is exactly real
    for i in 0..n {
        h[(i, i)] = Complex64::new(h[(i, i)].re, 0.0);
        for j in (i + 1)..n {
            let avg = (h[(i, j)] + h[(j, i)].conj()) * 0.5;
            h[(i, j)] = avg;
            h[(j, i)] = avg.conj();
        }
    }
    let mut v = ComplexMatrix::identity(n);
    let threshold = JACOBI_THRESHOLD * m.frobenius_norm();

    let mut sweeps = 0;
    loop {
        let off = off_diagonal_norm(&h);
        if off <= threshold {
            break;
        }
        if sweeps == MAX_JACOBI_SWEEPS {
            return Err(LinalgError::NoConvergence { sweeps, off });
        }
        sweeps += 1;
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = h[(p, q)];
                let r = apq.norm();
                if r == 0.0 {
                    continue;
                }
                let phase = (apq / r).conj();
                let app = h[(p, p)].re;
                let aqq = h[(q, q)].re;
                let theta = (aqq - app) / (2.0 * r);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                rotate(&mut h, &mut v, p, q, c, s, phase);
                h[(p, q)] = ZERO;
                h[(q, p)] = ZERO;
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| h[(a, a)].re.total_cmp(&h[(b, b)].re));
    let eigenvalues = order.iter().map(|&k| h[(k, k)].re).collect();
    let eigenvectors = order
        .iter()
        .map(|&k| {
            let col = (0..n).map(|r| v[(r, k)]).collect();
            StateVector { amps: col }.with_canonical_phase()
        })
        .collect();
    Ok(EigenDecomposition {
        eigenvalues,
        eigenvectors,
    })
}

fn cluster(sorted: &[f64], cluster_tol: f64) -> Vec<(f64, usize)> {
    let mut out: Vec<(f64, usize)> = Vec::new();
    let mut start = 0;
    for i in 1..=sorted.len() {
        if i == sorted.len() || sorted[i] - sorted[start] > cluster_tol {
            let group = &sorted[start..i];
            let mean = group.iter().sum::<f64>() / group.len() as f64;
            out.push((mean, group.len()));
            start = i;
        }
    }
    out
}

/// Eigenvalues grouped so that each group's spread is at most `cluster_tol`.
pub fn spectrum(m: &ComplexMatrix, cluster_tol: f64) -> Result<SpectrumMultiset, LinalgError> {
    let eig = hermitian_eig(m, hermitian_tol_for(m))?;
    Ok(SpectrumMultiset {
        values: cluster(&eig.eigenvalues, cluster_tol),
    })
}

/// Hermiticity tolerance for internally computed operators.
fn hermitian_tol_for(m: &ComplexMatrix) -> f64 {
    1e-12 * m.max_abs().max(1.0)
}

/// Orthonormal basis of `{v : ops[k]·v = targets[k]·v for every k}`.
///
/// Works by iterated refinement: restrict `ops[0]` to the current subspace,
/// keep its `targets[0]` eigenvectors, and continue with the next operator
/// on the smaller subspace. `tol` is the commutation pre-check threshold;
/// eigenvalue matching uses [`DEFAULT_CLUSTER_TOL`] relative to the target.
pub fn joint_eigenspace(
    ops: &[ComplexMatrix],
    targets: &[f64],
    tol: f64,
) -> Result<Vec<StateVector>, LinalgError> {
    if ops.len() != targets.len() {
        return Err(LinalgError::TargetCountMismatch {
            ops: ops.len(),
            targets: targets.len(),
        });
    }
    let Some(first) = ops.first() else {
        return Ok(Vec::new());
    };
    let n = first.dim;
    for (i, a) in ops.iter().enumerate() {
        same_dim(n, a.dim)?;
        for (j, b) in ops.iter().enumerate().skip(i + 1) {
            let norm = commutator_norm(a, b)?;
            if norm > tol {
                return Err(LinalgError::NonCommuting {
                    first: i,
                    second: j,
                    norm,
                });
            }
        }
    }

    // columns of the current subspace basis
    let mut basis: Vec<StateVector> = (0..n).map(|i| StateVector::basis(n, i)).collect();
    for (op, &target) in ops.iter().zip(targets) {
        let d = basis.len();
        let images: Vec<StateVector> = basis
            .iter()
            .map(|b| apply(op, b))
            .collect::<Result<_, _>>()?;
        let mut restricted = ComplexMatrix::zeros(d);
        for i in 0..d {
            for j in 0..d {
                restricted[(i, j)] = basis[i].inner(&images[j])?;
            }
        }
        let eig = hermitian_eig(&restricted, hermitian_tol_for(op) * n as f64)?;
        let match_tol = DEFAULT_CLUSTER_TOL * target.abs().max(1.0);
        basis = eig
            .eigenvalues
            .iter()
            .zip(&eig.eigenvectors)
            .filter(|(&lambda, _)| (lambda - target).abs() <= match_tol)
            .map(|(_, w)| {
                let mut amps = vec![ZERO; n];
                for (coef, b) in w.amps.iter().zip(&basis) {
                    for (a, bi) in amps.iter_mut().zip(&b.amps) {
                        *a += coef * bi;
                    }
                }
                StateVector { amps }
            })
            .collect();
        if basis.is_empty() {
            break;
        }
    }
    Ok(basis.into_iter().map(|b| b.with_canonical_phase()).collect())
}

/// Outcome of a projective measurement on a pure state.
#[derive(Debug, Clone)]
pub struct Projection {
    pub probability: f64,
    /// `p|s⟩` normalized; absent when the probability does not exceed [`PROJECTOR_TOL`].
    pub post_state: Option<StateVector>,
}

pub fn measure_project(s: &StateVector, p: &ComplexMatrix) -> Result<Projection, LinalgError> {
    same_dim(p.dim, s.dim())?;
    let deviation = p.projector_deviation();
    if deviation > PROJECTOR_TOL {
        return Err(LinalgError::NotProjector { deviation });
    }
    let projected = apply(p, s)?;
    let probability = s.inner(&projected)?.re.clamp(0.0, 1.0);
    let post_state = if probability > PROJECTOR_TOL {
        Some(projected.normalize()?)
    } else {
        None
    };
    Ok(Projection {
        probability,
        post_state,
    })
}

/// Entanglement entropy in bits across the cut after the first `left_dims` basis digits.
///
/// The state is reshaped into a `left_dims × (dim / left_dims)` coefficient
/// matrix `C`; the squared Schmidt coefficients are the eigenvalues of `C·C†`.
pub fn schmidt_entropy(s: &StateVector, left_dims: usize) -> Result<f64, LinalgError> {
    let dim = s.dim();
    if left_dims == 0 || !dim.is_multiple_of(left_dims) {
        return Err(LinalgError::NotDivisible {
            dim,
            left: left_dims,
        });
    }
    let s = s.normalize()?;
    let right = dim / left_dims;
    let mut rho = ComplexMatrix::zeros(left_dims);
    for i in 0..left_dims {
        for j in 0..left_dims {
            rho[(i, j)] = (0..right)
                .map(|k| s[i * right + k] * s[j * right + k].conj())
                .sum();
        }
    }
    let eig = hermitian_eig(&rho, 1e-12)?;
    Ok(eig
        .eigenvalues
        .iter()
        .filter(|&&p| p > 1e-15)
        .map(|&p| -p * p.log2())
        .sum::<f64>()
        .max(0.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn kron_of_identities_is_identity() {
        let i2 = ComplexMatrix::identity(2);
        assert_eq!(kron(&i2, &i2), ComplexMatrix::identity(4));
    }

    #[test]
    fn kron_entry_layout() {
        let a = ComplexMatrix::from_real(2, &[1.0, 2.0, 3.0, 4.0]).unwrap();
        let b = ComplexMatrix::from_real(2, &[0.0, 5.0, 6.0, 7.0]).unwrap();
        let k = kron(&a, &b);
        assert_eq!(k.dim(), 4);
        // a(1,0)·b(0,1) lands at (1·2+0, 0·2+1)
        assert_eq!(k[(2, 1)], c(15.0, 0.0));
        assert_eq!(k[(3, 3)], c(28.0, 0.0));
    }

    #[test]
    fn kron_diag_spectrum_is_pairwise_products() {
        let d = ComplexMatrix::from_diagonal(&[2.0, 1.0, -1.0, -2.0]);
        let k = kron(&d, &d);
        let mut oracle = Vec::new();
        for x in [2.0, 1.0, -1.0, -2.0] {
            for y in [2.0, 1.0, -1.0, -2.0] {
                oracle.push(x * y);
            }
        }
        oracle.sort_by(f64::total_cmp);
        let eig = hermitian_eig(&k, 1e-12).unwrap();
        for (got, want) in eig.eigenvalues.iter().zip(&oracle) {
            assert!((got - want).abs() < 1e-12);
        }
        let spec = spectrum(&k, DEFAULT_CLUSTER_TOL).unwrap();
        assert_eq!(
            spec.values,
            vec![(-4.0, 2), (-2.0, 4), (-1.0, 2), (1.0, 2), (2.0, 4), (4.0, 2)]
        );
    }

    #[test]
    fn matmul_rejects_mismatched_dims() {
        let err = matmul(&ComplexMatrix::identity(2), &ComplexMatrix::identity(4)).unwrap_err();
        assert_eq!(
            err,
            LinalgError::DimensionMismatch {
                expected: 2,
                actual: 4
            }
        );
        assert!(commutator_norm(&ComplexMatrix::identity(2), &ComplexMatrix::identity(3)).is_err());
    }

    #[test]
    fn matmul_identity_and_projector() {
        let m = ComplexMatrix::new(2, vec![c(1.0, 2.0), c(0.0, -1.0), c(3.0, 0.5), c(-2.0, 0.0)]).unwrap();
        assert_eq!(matmul(&ComplexMatrix::identity(2), &m).unwrap(), m);
        let v = StateVector::new(vec![c(0.6, 0.0), c(0.0, 0.8)]).unwrap();
        let p = ComplexMatrix::projector_onto(&v);
        assert!(matmul(&p, &p).unwrap().max_abs_diff(&p).unwrap() < 1e-15);
        assert!(p.is_projector(1e-12));
        assert!(!m.is_projector(1e-3));
    }

    #[test]
    fn rejects_non_finite_entries() {
        let err = ComplexMatrix::new(1, vec![c(f64::NAN, 0.0)]).unwrap_err();
        assert_eq!(err, LinalgError::NonFinite { index: 0 });
        assert!(StateVector::new(vec![c(0.0, f64::INFINITY)]).is_err());
        assert!(StateVector::new(vec![]).is_err());
    }

    #[test]
    fn eig_of_diagonal() {
        let eig = hermitian_eig(&ComplexMatrix::from_diagonal(&[3.0, 1.0]), 1e-12).unwrap();
        assert_eq!(eig.eigenvalues, vec![1.0, 3.0]);
        assert_eq!(eig.eigenvectors[0], StateVector::basis(2, 1));
    }

    #[test]
    fn eig_of_complex_hermitian() {
        // [[2, i], [-i, 2]] has eigenvalues 1 and 3
        let m = ComplexMatrix::new(2, vec![c(2.0, 0.0), c(0.0, 1.0), c(0.0, -1.0), c(2.0, 0.0)]).unwrap();
        let eig = hermitian_eig(&m, 1e-12).unwrap();
        assert!((eig.eigenvalues[0] - 1.0).abs() < 1e-14);
        assert!((eig.eigenvalues[1] - 3.0).abs() < 1e-14);
        for (lambda, v) in eig.eigenvalues.iter().zip(&eig.eigenvectors) {
            let r = apply(&m, v).unwrap().sub(&v.scale(c(*lambda, 0.0))).unwrap();
            assert!(r.norm() < 1e-13);
            assert!(v[0].im.abs() < 1e-15 && v[0].re > 0.0);
        }
        assert!(eig.reconstruct().max_abs_diff(&m).unwrap() < 1e-13);
    }

    #[test]
    fn eig_rejects_non_hermitian() {
        let m = ComplexMatrix::from_real(2, &[0.0, 1.0, 0.0, 0.0]).unwrap();
        assert!(matches!(
            hermitian_eig(&m, 1e-10),
            Err(LinalgError::NotHermitian { .. })
        ));
    }

    #[test]
    fn spectrum_of_identity() {
        let s = spectrum(&ComplexMatrix::identity(4), DEFAULT_CLUSTER_TOL).unwrap();
        assert_eq!(s.values, vec![(1.0, 4)]);
        assert_eq!(s.total_multiplicity(), 4);
    }

    #[test]
    fn joint_eigenspace_trivial_and_errors() {
        let basis = joint_eigenspace(&[ComplexMatrix::identity(2)], &[1.0], 1e-10).unwrap();
        assert_eq!(basis.len(), 2);
        assert!(joint_eigenspace(&[ComplexMatrix::identity(2)], &[-1.0], 1e-10)
            .unwrap()
            .is_empty());

        let x = ComplexMatrix::from_real(2, &[0.0, 1.0, 1.0, 0.0]).unwrap();
        let z = ComplexMatrix::from_diagonal(&[1.0, -1.0]);
        assert!(matches!(
            joint_eigenspace(&[x.clone(), z], &[1.0, 1.0], 1e-10),
            Err(LinalgError::NonCommuting { first: 0, second: 1, .. })
        ));
        assert!(matches!(
            joint_eigenspace(&[x], &[], 1e-10),
            Err(LinalgError::TargetCountMismatch { .. })
        ));
    }

    #[test]
    fn joint_eigenspace_of_commuting_pair() {
        // Z⊗Z and X⊗X share the Bell basis; (+1, +1) selects φ⁺ only.
        let x = ComplexMatrix::from_real(2, &[0.0, 1.0, 1.0, 0.0]).unwrap();
        let z = ComplexMatrix::from_diagonal(&[1.0, -1.0]);
        let ops = [kron(&z, &z), kron(&x, &x)];
        let basis = joint_eigenspace(&ops, &[1.0, 1.0], 1e-10).unwrap();
        assert_eq!(basis.len(), 1);
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let phi_plus = StateVector::from_real(&[h, 0.0, 0.0, h]).unwrap();
        assert!((basis[0].inner(&phi_plus).unwrap().norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn apply_identity() {
        let s = StateVector::new(vec![c(0.0, 1.0), c(2.0, 0.0)]).unwrap();
        assert_eq!(apply(&ComplexMatrix::identity(2), &s).unwrap(), s);
        assert!(apply(&ComplexMatrix::identity(4), &s).is_err());
    }

    #[test]
    fn measure_onto_self_and_orthogonal() {
        let s = StateVector::new(vec![c(0.6, 0.0), c(0.0, 0.8)]).unwrap();
        let out = measure_project(&s, &ComplexMatrix::projector_onto(&s)).unwrap();
        assert!((out.probability - 1.0).abs() < 1e-15);
        let post = out.post_state.unwrap();
        assert!(post.sub(&s).unwrap().norm() < 1e-15);

        let perp = StateVector::new(vec![c(0.0, 0.8), c(0.6, 0.0)]).unwrap();
        let out = measure_project(&s, &ComplexMatrix::projector_onto(&perp)).unwrap();
        assert!(out.probability < 1e-15);
        assert!(out.post_state.is_none());
    }

    #[test]
    fn measure_rejects_non_projector() {
        let s = StateVector::basis(2, 0);
        let m = ComplexMatrix::from_diagonal(&[2.0, 0.0]);
        assert!(matches!(
            measure_project(&s, &m),
            Err(LinalgError::NotProjector { .. })
        ));
    }

    #[test]
    fn schmidt_entropy_product_and_singlet() {
        let plus_minus = StateVector::basis(2, 0).kron(&StateVector::basis(2, 1));
        assert!(schmidt_entropy(&plus_minus, 2).unwrap().abs() < 1e-12);
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let singlet = StateVector::from_real(&[0.0, h, -h, 0.0]).unwrap();
        assert!((schmidt_entropy(&singlet, 2).unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(
            schmidt_entropy(&singlet, 3).unwrap_err(),
            LinalgError::NotDivisible { dim: 4, left: 3 }
        );
    }

    #[test]
    fn normalize_zero_vector_fails() {
        let z = StateVector::from_real(&[0.0, 0.0]).unwrap();
        assert_eq!(z.normalize().unwrap_err(), LinalgError::ZeroVector);
    }
}
