//! Brute-force `S(T, c)` for small dense matrices.
//!
//! In finite dimensions `S(T, c)` is the sum of the generalized eigenspaces for
//! eigenvalues with `|λ| < c`, plus the true eigenvectors for `|λ| = c`. It is
//! computed as the kernel of a real polynomial in `T` that annihilates
//! everything else.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};

pub const MAX_DIM: usize = 12;

/// Eigenvalue moduli within this relative distance of `c` count as on the threshold.
pub const MODULUS_TOLERANCE: f64 = 1e-8;

/// Subspace comparisons.
pub const SUBSPACE_TOLERANCE: f64 = 1e-9;

/// Invariance of a user-supplied subspace.
pub const INVARIANCE_TOLERANCE: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq)]
pub struct SmallOperator {
    matrix: DMatrix<f64>,
}

impl SmallOperator {
    pub fn new(matrix: DMatrix<f64>) -> Result<Self> {
        if !matrix.is_square() {
            return Err(Error::Precondition(format!(
                "operator must be square, got {}x{}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        if matrix.nrows() > MAX_DIM {
            return Err(Error::Precondition(format!(
                "dimension {} exceeds {MAX_DIM}",
                matrix.nrows()
            )));
        }
        if matrix.iter().any(|x| !x.is_finite()) {
            return Err(Error::Precondition("operator has non-finite entries".into()));
        }
        Ok(SmallOperator { matrix })
    }

    pub fn from_row_slice(n: usize, entries: &[f64]) -> Result<Self> {
        if entries.len() != n * n {
            return Err(Error::Precondition(format!("expected {} entries, got {}", n * n, entries.len())));
        }
        Self::new(DMatrix::from_row_slice(n, n, entries))
    }

    pub fn diagonal(d: &[f64]) -> Result<Self> {
        Self::new(DMatrix::from_diagonal(&DVector::from_column_slice(d)))
    }

    pub fn identity(n: usize) -> Result<Self> {
        Self::new(DMatrix::identity(n, n))
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    /// `T1 ⊕ T2`, block diagonal.
    pub fn direct_sum(&self, other: &SmallOperator) -> Result<SmallOperator> {
        let (a, b) = (self.dim(), other.dim());
        let mut m = DMatrix::zeros(a + b, a + b);
        m.view_mut((0, 0), (a, a)).copy_from(&self.matrix);
        m.view_mut((a, a), (b, b)).copy_from(&other.matrix);
        Self::new(m)
    }

    /// Eigenvalues as `(re, im)`.
    pub fn eigenvalues(&self) -> Vec<(f64, f64)> {
        if self.dim() == 0 {
            return Vec::new();
        }
        let n = self.dim();
        let m = &self.matrix;
        if (0..n).all(|j| (j + 1..n).all(|i| m[(i, j)] == 0.0)) {
            return (0..n).map(|i| (m[(i, i)], 0.0)).collect();
        }
        // The unbounded QR iteration can stall on degenerate input; shift and retry instead.
        let scale = m.amax().max(1.0);
        for shift in [0.0, 0.5 * scale, -1.25 * scale, 2.5 * scale] {
            let shifted = m + DMatrix::identity(n, n) * shift;
            if let Some(schur) = shifted.try_schur(f64::EPSILON, 10_000) {
                return schur
                    .complex_eigenvalues()
                    .iter()
                    .map(|z| (z.re - shift, z.im))
                    .collect();
            }
        }
        panic!("Schur iteration failed to converge for every shift");
    }

    pub fn spectral_radius(&self) -> f64 {
        self.eigenvalues()
            .iter()
            .map(|&(re, im)| re.hypot(im))
            .fold(0.0, f64::max)
    }
}

/// Orthonormal columns spanning a subspace of `R^n`.
#[derive(Clone, Debug, PartialEq)]
pub struct SubspaceBasis {
    basis: DMatrix<f64>,
}

impl SubspaceBasis {
    pub fn zero(n: usize) -> Self {
        SubspaceBasis {
            basis: DMatrix::zeros(n, 0),
        }
    }

    pub fn full(n: usize) -> Self {
        SubspaceBasis {
            basis: DMatrix::identity(n, n),
        }
    }

    /// Orthonormal basis of the column span, dropping directions below `rank_tol`.
    pub fn from_spanning(columns: &DMatrix<f64>, rank_tol: f64) -> Self {
        let n = columns.nrows();
        if columns.ncols() == 0 {
            return Self::zero(n);
        }
        let svd = checked_svd(columns, true, false);
        let u = svd.u.expect("left singular vectors requested");
        let smax = svd.singular_values.max();
        let rank = svd
            .singular_values
            .iter()
            .filter(|&&s| s > rank_tol * smax.max(1.0))
            .count();
        SubspaceBasis {
            basis: u.columns(0, rank).into_owned(),
        }
    }

    pub fn basis(&self) -> &DMatrix<f64> {
        &self.basis
    }

    pub fn dim(&self) -> usize {
        self.basis.ncols()
    }

    pub fn ambient_dim(&self) -> usize {
        self.basis.nrows()
    }

    pub fn projector(&self) -> DMatrix<f64> {
        &self.basis * self.basis.transpose()
    }

    /// `‖(I − P) v‖`
    pub fn distance(&self, v: &DVector<f64>) -> f64 {
        (v - self.projector() * v).norm()
    }

    /// Largest distance of a column of `other` from `self`.
    pub fn containment_residual(&self, other: &SubspaceBasis) -> f64 {
        let r = other.basis.clone() - self.projector() * &other.basis;
        r.column_iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    /// `‖QᵀQ − I‖`
    pub fn orthonormality_defect(&self) -> f64 {
        let g = self.basis.transpose() * &self.basis - DMatrix::identity(self.dim(), self.dim());
        g.amax()
    }

    /// `B1 ⊕ B2` in `R^{n1 + n2}`.
    pub fn direct_sum(&self, other: &SubspaceBasis) -> SubspaceBasis {
        let (n1, n2) = (self.ambient_dim(), other.ambient_dim());
        let (k1, k2) = (self.dim(), other.dim());
        let mut m = DMatrix::zeros(n1 + n2, k1 + k2);
        m.view_mut((0, 0), (n1, k1)).copy_from(&self.basis);
        m.view_mut((n1, k1), (n2, k2)).copy_from(&other.basis);
        SubspaceBasis { basis: m }
    }
}

/// Monic real factor with root `(re, ±im)`, scaled to unit Frobenius norm.
fn factor(t: &DMatrix<f64>, re: f64, im: f64) -> DMatrix<f64> {
    let n = t.nrows();
    let id = DMatrix::<f64>::identity(n, n);
    let f = if im == 0.0 {
        t - &id * re
    } else {
        t * t - t * (2.0 * re) + &id * (re * re + im * im)
    };
    let s = f.norm();
    if s > 0.0 {
        f / s
    } else {
        f
    }
}

fn is_real(re: f64, im: f64) -> bool {
    im.abs() <= 1e-14 * re.hypot(im).max(1e-300)
}

/// Eigenvalues with one representative per conjugate pair.
fn real_roots(eigs: &[(f64, f64)]) -> Vec<(f64, f64)> {
    eigs.iter()
        .filter_map(|&(re, im)| {
            if is_real(re, im) {
                Some((re, 0.0))
            } else if im > 0.0 {
                Some((re, im))
            } else {
                None
            }
        })
        .collect()
}

fn checked_svd(m: &DMatrix<f64>, u: bool, v: bool) -> nalgebra::SVD<f64, nalgebra::Dyn, nalgebra::Dyn> {
    m.clone()
        .try_svd(u, v, f64::EPSILON, 100_000)
        .expect("SVD failed to converge on a small matrix")
}

fn kernel(m: &DMatrix<f64>, dim: Option<usize>, tol: f64) -> DMatrix<f64> {
    let n = m.ncols();
    let svd = checked_svd(m, false, true);
    let v_t = svd.v_t.expect("right singular vectors requested");
    let smax = svd.singular_values.max().max(1.0);
    let k = dim.unwrap_or_else(|| svd.singular_values.iter().filter(|&&s| s <= tol * smax).count());
    v_t.rows(n - k, k).transpose()
}

/// Largest `‖T^N x‖ / c^N` over `N` in `range`.
pub fn orbit_ratio_max(t: &SmallOperator, x: &DVector<f64>, c: f64, range: std::ops::RangeInclusive<u32>) -> f64 {
    let mut y = x.clone();
    let mut best = 0.0f64;
    for n in 0..=*range.end() {
        if n >= *range.start() {
            best = best.max(y.norm());
        }
        y = t.matrix() * y / c;
    }
    best
}

/// Linear growth doubles the orbit between the two halves of the scan.
fn grows(t: &SmallOperator, x: &DVector<f64>, c: f64) -> bool {
    let early = orbit_ratio_max(t, x, c, 0..=100);
    let late = orbit_ratio_max(t, x, c, 100..=200);
    late > 1.5 * early
}

/// `S(T, c)` with the default threshold tolerance.
pub fn s_subspace(t: &SmallOperator, c: f64) -> Result<SubspaceBasis> {
    s_subspace_with_tolerance(t, c, MODULUS_TOLERANCE)
}

pub fn s_subspace_with_tolerance(t: &SmallOperator, c: f64, tol: f64) -> Result<SubspaceBasis> {
    if c.is_nan() || c <= 0.0 {
        return Err(Error::Precondition(format!("rate must be positive, got {c}")));
    }
    let n = t.dim();
    if n == 0 {
        return Ok(SubspaceBasis::zero(0));
    }
    let eigs = t.eigenvalues();
    let band = tol * c.max(1.0);
    let modulus = |&(re, im): &(f64, f64)| re.hypot(im);
    let on_threshold: Vec<(f64, f64)> = eigs.iter().copied().filter(|e| (modulus(e) - c).abs() <= band).collect();
    let inside: Vec<(f64, f64)> = eigs.iter().copied().filter(|e| modulus(e) < c - band).collect();

    let mut q = DMatrix::<f64>::identity(n, n);
    for (re, im) in real_roots(&inside) {
        q = factor(t.matrix(), re, im) * q;
    }
    if on_threshold.is_empty() {
        let k = kernel(&q, Some(inside.len()), 0.0);
        return Ok(SubspaceBasis::from_spanning(&k, 1e-12));
    }

    // Threshold eigenvalues contribute their eigenvectors, not their generalized spaces.
    let mut distinct: Vec<(f64, f64)> = Vec::new();
    let mut q_generalized = q.clone();
    for (re, im) in real_roots(&on_threshold) {
        q_generalized = factor(t.matrix(), re, im) * q_generalized;
        if !distinct.iter().any(|&(a, b)| (a - re).hypot(b - im) <= 1e-6 * c.max(1.0)) {
            distinct.push((re, im));
        }
    }
    for &(re, im) in &distinct {
        q = factor(t.matrix(), re, im) * q;
    }
    let s = SubspaceBasis::from_spanning(&kernel(&q, None, 1e-8), 1e-12);
    let generalized = SubspaceBasis::from_spanning(
        &kernel(&q_generalized, Some(inside.len() + on_threshold.len()), 0.0),
        1e-12,
    );

    let inconsistent = s.basis().column_iter().any(|x| grows(t, &x.into_owned(), c))
        || complement_in(&generalized, &s)
            .column_iter()
            .any(|x| !grows(t, &x.into_owned(), c));
    if inconsistent {
        return Err(Error::Ambiguous { c, tol });
    }
    Ok(s)
}

/// Orthonormal basis of `outer ⊖ inner`.
fn complement_in(outer: &SubspaceBasis, inner: &SubspaceBasis) -> DMatrix<f64> {
    let r = outer.basis().clone() - inner.projector() * outer.basis();
    SubspaceBasis::from_spanning(&r, 1e-8).basis().clone()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct R12Report {
    pub sum_dim: usize,
    pub parts_dim: usize,
    /// Largest distance of either basis from the other subspace.
    pub max_residual: f64,
    pub pass: bool,
}

/// `S(T1 ⊕ T2, c) = S(T1, c) ⊕ S(T2, c)`.
pub fn check_r1_2(t1: &SmallOperator, t2: &SmallOperator, c: f64) -> Result<R12Report> {
    for t in [t1, t2] {
        for (re, im) in t.eigenvalues() {
            if (re.hypot(im) - c).abs() <= MODULUS_TOLERANCE * c.max(1.0) {
                return Err(Error::Ambiguous { c, tol: MODULUS_TOLERANCE });
            }
        }
    }
    let lhs = s_subspace(&t1.direct_sum(t2)?, c)?;
    let rhs = s_subspace(t1, c)?.direct_sum(&s_subspace(t2, c)?);
    let max_residual = lhs.containment_residual(&rhs).max(rhs.containment_residual(&lhs));
    Ok(R12Report {
        sum_dim: lhs.dim(),
        parts_dim: rhs.dim(),
        max_residual,
        pass: lhs.dim() == rhs.dim() && max_residual <= SUBSPACE_TOLERANCE,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct R11Report {
    /// `r(T|L)`
    pub restricted_spectral_radius: f64,
    /// Whether `r(T|L) <= c`, so containment is claimed.
    pub applicable: bool,
    /// Largest distance of a column of `L` from `S(T, c + ε)`.
    pub max_residual: f64,
    pub pass: bool,
}

/// `r(T|L) <= c` implies `L ⊂ S(T, c + ε)` for a `T`-invariant `L`.
pub fn check_r1_1(t: &SmallOperator, l: &SubspaceBasis, c: f64, eps: f64) -> Result<R11Report> {
    if eps.is_nan() || eps <= 0.0 {
        return Err(Error::Precondition(format!("eps must be positive, got {eps}")));
    }
    if l.ambient_dim() != t.dim() {
        return Err(Error::Precondition("subspace and operator dimensions differ".into()));
    }
    if l.dim() == 0 {
        return Ok(R11Report {
            restricted_spectral_radius: 0.0,
            applicable: true,
            max_residual: 0.0,
            pass: true,
        });
    }
    let q = l.basis();
    let tq = t.matrix() * q;
    let leak = (tq.clone() - l.projector() * &tq).amax();
    if leak > INVARIANCE_TOLERANCE * t.matrix().amax().max(1.0) {
        return Err(Error::Precondition(format!("subspace is not invariant (leak {leak:e})")));
    }
    let restricted = SmallOperator::new(q.transpose() * tq)?;
    let r = restricted.spectral_radius();
    if r > c {
        return Ok(R11Report {
            restricted_spectral_radius: r,
            applicable: false,
            max_residual: f64::NAN,
            pass: true,
        });
    }
    let s = s_subspace(t, c + eps)?;
    let max_residual = s.containment_residual(l);
    Ok(R11Report {
        restricted_spectral_radius: r,
        applicable: true,
        max_residual,
        pass: max_residual <= SUBSPACE_TOLERANCE,
    })
}

/// Orthogonal factor of the QR decomposition of a random matrix.
pub fn random_orthogonal<R: Rng>(rng: &mut R, n: usize) -> DMatrix<f64> {
    let a = DMatrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
    a.qr().q()
}

/// A real block upper-triangular `U` whose diagonal blocks are the given
/// eigenvalues: real entries as 1x1 blocks, `(ρ, θ)` as `ρ·rot(θ)`.
pub fn quasi_triangular<R: Rng>(rng: &mut R, blocks: &[Block], coupling: f64) -> DMatrix<f64> {
    let n: usize = blocks.iter().map(|b| b.size()).sum();
    let mut u = DMatrix::zeros(n, n);
    let mut at = 0;
    for b in blocks {
        match *b {
            Block::Real(l) => u[(at, at)] = l,
            Block::Rotation { modulus, angle } => {
                let (s, c) = angle.sin_cos();
                u[(at, at)] = modulus * c;
                u[(at, at + 1)] = -modulus * s;
                u[(at + 1, at)] = modulus * s;
                u[(at + 1, at + 1)] = modulus * c;
            }
        }
        for j in at + b.size()..n {
            for i in at..at + b.size() {
                u[(i, j)] = coupling * rng.gen_range(-1.0..1.0);
            }
        }
        at += b.size();
    }
    u
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Block {
    Real(f64),
    Rotation { modulus: f64, angle: f64 },
}

impl Block {
    pub fn size(&self) -> usize {
        match self {
            Block::Real(_) => 1,
            Block::Rotation { .. } => 2,
        }
    }

    pub fn modulus(&self) -> f64 {
        match *self {
            Block::Real(l) => l.abs(),
            Block::Rotation { modulus, .. } => modulus,
        }
    }
}

/// `Q U Qᵀ` together with the invariant subspace spanned by the first `leading` columns of `Q`.
pub fn schur_operator(q: &DMatrix<f64>, u: &DMatrix<f64>, leading: usize) -> Result<(SmallOperator, SubspaceBasis)> {
    let t = SmallOperator::new(q * u * q.transpose())?;
    let l = SubspaceBasis {
        basis: q.columns(0, leading).into_owned(),
    };
    Ok((t, l))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn diagonal_example() {
        let t = SmallOperator::diagonal(&[0.5, 3.0]).unwrap();
        let s = s_subspace(&t, 1.0).unwrap();
        assert_eq!(s.dim(), 1);
        assert!(s.distance(&DVector::from_column_slice(&[1.0, 0.0])) < 1e-12);
    }

    #[test]
    fn identity_is_full() {
        let s = s_subspace(&SmallOperator::identity(4).unwrap(), 1.0).unwrap();
        assert_eq!(s.dim(), 4);
    }

    #[test]
    fn jordan_block_keeps_eigenvector() {
        let t = SmallOperator::from_row_slice(2, &[1.0, 1.0, 0.0, 1.0]).unwrap();
        let s = s_subspace(&t, 1.0).unwrap();
        assert_eq!(s.dim(), 1);
        assert!(s.distance(&DVector::from_column_slice(&[1.0, 0.0])) < 1e-12);
    }

    #[test]
    fn rotation_at_threshold_is_bounded() {
        let (sn, cs) = 0.7f64.sin_cos();
        let t = SmallOperator::from_row_slice(3, &[cs, -sn, 0.0, sn, cs, 0.0, 0.0, 0.0, 5.0]).unwrap();
        let s = s_subspace(&t, 1.0).unwrap();
        assert_eq!(s.dim(), 2);
    }

    #[test]
    fn construction_errors() {
        assert!(SmallOperator::new(DMatrix::zeros(2, 3)).is_err());
        assert!(SmallOperator::new(DMatrix::zeros(13, 13)).is_err());
        assert!(SmallOperator::from_row_slice(1, &[f64::NAN]).is_err());
        assert!(s_subspace(&SmallOperator::identity(2).unwrap(), 0.0).is_err());
    }

    #[test]
    fn r1_2_examples() {
        let r = check_r1_2(
            &SmallOperator::diagonal(&[0.5]).unwrap(),
            &SmallOperator::diagonal(&[3.0]).unwrap(),
            1.0,
        )
        .unwrap();
        assert!(r.pass && r.sum_dim == 1);
        let z = SmallOperator::new(DMatrix::zeros(2, 2)).unwrap();
        let r = check_r1_2(&z, &z, 1.0).unwrap();
        assert!(r.pass && r.sum_dim == 4);
        assert!(check_r1_2(&SmallOperator::identity(1).unwrap(), &z, 1.0).is_err());
    }

    #[test]
    fn r1_1_examples() {
        let t = SmallOperator::diagonal(&[0.5, 3.0]).unwrap();
        let l = SubspaceBasis::from_spanning(&DMatrix::from_column_slice(2, 1, &[1.0, 0.0]), 1e-12);
        assert!(check_r1_1(&t, &l, 1.0, 0.1).unwrap().pass);
        assert!(check_r1_1(&t, &SubspaceBasis::zero(2), 1.0, 0.1).unwrap().pass);
        let bad = SubspaceBasis::from_spanning(&DMatrix::from_column_slice(2, 1, &[1.0, 1.0]), 1e-12);
        assert!(check_r1_1(&t, &bad, 1.0, 0.1).is_err());
    }
}
