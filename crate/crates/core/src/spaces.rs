//! Finite-dimensional spaces of quadratic differentials on a union of
//! collars: Gram matrices, L^2-unitary bases, the subspace `W` of elements
//! with vanishing principal part on every collar, and orthogonal projection
//! onto `W`.
//!
//! Inner products are conjugate-linear in the first argument and are taken
//! over the union of the full collars.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::collar::CollarParams;
use crate::error::{Error, Result};
use crate::laurent::{LaurentQD, LinfThin, SubCollar};

/// Smallest admissible eigenvalue of the equilibrated Gram matrix, relative
/// to its largest.
pub const DEFAULT_RANK_TOL: f64 = 1e-12;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// One differential per collar of a shared collar list.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiCollarQD {
    parts: Vec<LaurentQD>,
}

impl MultiCollarQD {
    pub fn new(parts: Vec<LaurentQD>) -> Result<Self> {
        if parts.is_empty() {
            return Err(Error::Input(
                "a multi-collar differential needs at least one collar".into(),
            ));
        }
        Ok(MultiCollarQD { parts })
    }

    pub fn zero(collars: &[CollarParams], n_max: u32) -> Self {
        MultiCollarQD {
            parts: collars.iter().map(|c| LaurentQD::zero(*c, n_max)).collect(),
        }
    }

    pub fn parts(&self) -> &[LaurentQD] {
        &self.parts
    }

    pub fn collar_count(&self) -> usize {
        self.parts.len()
    }

    fn check_compatible(&self, other: &MultiCollarQD) -> Result<()> {
        let same = self.parts.len() == other.parts.len()
            && self
                .parts
                .iter()
                .zip(&other.parts)
                .all(|(a, b)| a.collar() == b.collar());
        if same {
            Ok(())
        } else {
            Err(Error::Input("differentials live on different collar models".into()))
        }
    }

    /// `b_0^j` for each collar `j`.
    pub fn principal_parts(&self) -> Vec<Complex64> {
        self.parts.iter().map(LaurentQD::principal_part).collect()
    }

    /// `<self, other>` over the union of the full collars.
    pub fn inner(&self, other: &MultiCollarQD) -> Result<Complex64> {
        self.check_compatible(other)?;
        self.parts
            .iter()
            .zip(&other.parts)
            .map(|(a, b)| a.inner(b, SubCollar::full(a.collar())))
            .sum()
    }

    pub fn l2_norm(&self) -> f64 {
        self.parts
            .iter()
            .map(|p| p.l2_norm_sq(SubCollar::full(p.collar())))
            .sum::<f64>()
            .sqrt()
    }

    pub fn scale(&self, factor: Complex64) -> Self {
        MultiCollarQD {
            parts: self.parts.iter().map(|p| p.scale(factor)).collect(),
        }
    }

    pub fn add_scaled(&self, factor: Complex64, other: &MultiCollarQD) -> Result<Self> {
        self.check_compatible(other)?;
        let parts = self
            .parts
            .iter()
            .zip(&other.parts)
            .map(|(a, b)| a.add_scaled(factor, b))
            .collect::<Result<_>>()?;
        Ok(MultiCollarQD { parts })
    }

    /// Sets every principal part to exactly zero.
    pub fn remove_principal(&self) -> Self {
        MultiCollarQD {
            parts: self.parts.iter().map(LaurentQD::remove_principal).collect(),
        }
    }

    /// Supremum of the pointwise norm over the union of the delta-thin parts.
    pub fn linf_thin(&self, delta: f64) -> Result<LinfThin> {
        let mut best: Option<LinfThin> = None;
        for part in &self.parts {
            let r = part.linf_thin(delta)?;
            best = Some(match best {
                None => r,
                Some(b) => LinfThin {
                    value: b.value.max(r.value),
                    envelope: b.envelope.max(r.envelope),
                    empty: b.empty && r.empty,
                    ..if r.value > b.value { r } else { b }
                },
            });
        }
        Ok(best.expect("at least one collar"))
    }
}

/// Linear combination `sum_a coeffs[a] basis[a]`.
fn combine(
    collars: &[CollarParams],
    n_max: u32,
    basis: &[MultiCollarQD],
    coeffs: impl IntoIterator<Item = Complex64>,
) -> Result<MultiCollarQD> {
    let mut acc = MultiCollarQD::zero(collars, n_max);
    for (alpha, v) in coeffs.into_iter().zip(basis) {
        if alpha != ZERO {
            acc = acc.add_scaled(alpha, v)?;
        }
    }
    Ok(acc)
}

/// The span of a list of multi-collar differentials.
#[derive(Debug, Clone)]
pub struct QDSpace {
    collars: Vec<CollarParams>,
    basis: Vec<MultiCollarQD>,
    gram: DMatrix<Complex64>,
    rank_tol: f64,
}

/// One row of [`QDSpace::w_decay_report`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WDecayRow {
    pub delta: f64,
    /// Largest sampled `||w||_{L^inf(thin)} / ||w||_{L^2}`.
    pub ratio: f64,
    /// `ratio * delta^2 e^{pi / delta}`.
    pub normalized: f64,
    /// Every collar has an empty delta-thin part.
    pub empty: bool,
}

impl QDSpace {
    pub fn new(collars: Vec<CollarParams>, basis: Vec<MultiCollarQD>) -> Result<Self> {
        if collars.is_empty() {
            return Err(Error::Input("a space needs at least one collar".into()));
        }
        for (a, v) in basis.iter().enumerate() {
            let ok = v.parts.len() == collars.len() && v.parts.iter().zip(&collars).all(|(p, c)| p.collar() == c);
            if !ok {
                return Err(Error::Input(format!(
                    "basis element {a} does not match the {} collars of the space",
                    collars.len()
                )));
            }
        }
        let d = basis.len();
        let mut gram = DMatrix::from_element(d, d, ZERO);
        for a in 0..d {
            for b in a..d {
                let g = basis[a].inner(&basis[b])?;
                gram[(a, b)] = g;
                gram[(b, a)] = g.conj();
            }
            gram[(a, a)] = Complex64::new(gram[(a, a)].re, 0.0);
        }
        Ok(QDSpace {
            collars,
            basis,
            gram,
            rank_tol: DEFAULT_RANK_TOL,
        })
    }

    pub fn with_rank_tol(mut self, rank_tol: f64) -> Self {
        self.rank_tol = rank_tol;
        self
    }

    pub fn collars(&self) -> &[CollarParams] {
        &self.collars
    }

    pub fn basis(&self) -> &[MultiCollarQD] {
        &self.basis
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    fn n_max(&self) -> u32 {
        self.basis
            .iter()
            .flat_map(|v| v.parts.iter().map(LaurentQD::n_max))
            .max()
            .unwrap_or(0)
    }

    /// `G[a][b] = <basis_a, basis_b>`.
    pub fn gram_matrix(&self) -> &DMatrix<Complex64> {
        &self.gram
    }

    /// Coefficients `C` with `basis * C` L^2-unitary: `C = D^{-1/2} L^{-*}` where
    /// `L L^* = D^{-1/2} G D^{-1/2}` and `D = diag(G)`.
    fn orthonormalizer(gram: &DMatrix<Complex64>, rank_tol: f64) -> Result<DMatrix<Complex64>> {
        let d = gram.nrows();
        let diag: Vec<f64> = (0..d).map(|a| gram[(a, a)].re).collect();
        if let Some(&bad) = diag.iter().find(|&&g| !(g > 0.0 && g.is_finite())) {
            return Err(Error::RankDeficient {
                eigenvalue: bad,
                largest: diag.iter().cloned().fold(0.0, f64::max),
            });
        }
        let inv_sqrt: Vec<f64> = diag.iter().map(|g| 1.0 / g.sqrt()).collect();
        let equilibrated = DMatrix::from_fn(d, d, |a, b| gram[(a, b)] * inv_sqrt[a] * inv_sqrt[b]);
        let eigen = equilibrated.clone().symmetric_eigen();
        let largest = eigen.eigenvalues.iter().cloned().fold(f64::MIN, f64::max);
        let smallest = eigen.eigenvalues.iter().cloned().fold(f64::MAX, f64::min);
        if smallest < rank_tol * largest {
            return Err(Error::RankDeficient {
                eigenvalue: smallest,
                largest,
            });
        }
        let chol = equilibrated.cholesky().ok_or(Error::RankDeficient {
            eigenvalue: smallest,
            largest,
        })?;
        let l_adjoint = chol.l().adjoint();
        let inv = l_adjoint.try_inverse().ok_or(Error::RankDeficient {
            eigenvalue: smallest,
            largest,
        })?;
        Ok(DMatrix::from_fn(d, d, |a, b| inv[(a, b)] * inv_sqrt[a]))
    }

    fn apply(&self, basis: &[MultiCollarQD], coeffs: &DMatrix<Complex64>) -> Result<Vec<MultiCollarQD>> {
        let n_max = self.n_max();
        (0..coeffs.ncols())
            .map(|col| combine(&self.collars, n_max, basis, coeffs.column(col).iter().copied()))
            .collect()
    }

    /// An L^2-unitary basis of the same span (Cholesky of the Gram matrix, applied twice).
    pub fn unitary_basis(&self) -> Result<Vec<MultiCollarQD>> {
        if self.basis.is_empty() {
            return Ok(Vec::new());
        }
        let first = self.apply(&self.basis, &Self::orthonormalizer(&self.gram, self.rank_tol)?)?;
        let again = QDSpace::new(self.collars.clone(), first)?;
        again.apply(&again.basis, &Self::orthonormalizer(&again.gram, self.rank_tol)?)
    }

    /// Change-of-basis matrix `C` with `unitary = basis * C` (first pass only).
    pub fn orthonormalizing_matrix(&self) -> Result<DMatrix<Complex64>> {
        Self::orthonormalizer(&self.gram, self.rank_tol)
    }

    /// `k x d` matrix of principal parts `b_0^j(basis_a)`.
    pub fn principal_functionals(&self) -> DMatrix<Complex64> {
        DMatrix::from_fn(self.collars.len(), self.dim(), |j, a| {
            self.basis[a].parts[j].principal_part()
        })
    }

    /// Null space of the principal functionals by Gauss-Jordan elimination
    /// with complete pivoting; columns are coefficient vectors in the basis.
    fn principal_kernel(&self) -> (usize, Vec<DVector<Complex64>>) {
        let mut m = self.principal_functionals();
        let (rows, cols) = m.shape();
        let scale = m.iter().map(|z| z.norm()).fold(0.0, f64::max);
        let threshold = self.rank_tol * scale;
        let mut col_order: Vec<usize> = (0..cols).collect();
        let mut rank = 0;
        while rank < rows.min(cols) {
            let mut pivot = (rank, rank, 0.0);
            for r in rank..rows {
                for c in rank..cols {
                    let v = m[(r, c)].norm();
                    if v > pivot.2 {
                        pivot = (r, c, v);
                    }
                }
            }
            if pivot.2 <= threshold || pivot.2 == 0.0 {
                break;
            }
            m.swap_rows(rank, pivot.0);
            m.swap_columns(rank, pivot.1);
            col_order.swap(rank, pivot.1);
            let p = m[(rank, rank)];
            for c in 0..cols {
                m[(rank, c)] /= p;
            }
            for r in 0..rows {
                if r != rank {
                    let f = m[(r, rank)];
                    if f != ZERO {
                        for c in 0..cols {
                            let v = m[(rank, c)];
                            m[(r, c)] -= f * v;
                        }
                    }
                }
            }
            rank += 1;
        }
        let kernel = (rank..cols)
            .map(|free| {
                let mut v = DVector::from_element(cols, ZERO);
                v[col_order[free]] = Complex64::new(1.0, 0.0);
                for r in 0..rank {
                    v[col_order[r]] = -m[(r, free)];
                }
                v
            })
            .collect();
        (rank, kernel)
    }

    /// Rank of the `k x d` principal-functional matrix.
    pub fn principal_rank(&self) -> usize {
        self.principal_kernel().0
    }

    /// The subspace of the span with `b_0^j = 0` on every collar, returned
    /// with an L^2-unitary basis. Principal parts of the result are exactly zero.
    pub fn w_subspace(&self) -> Result<QDSpace> {
        let (_, kernel) = self.principal_kernel();
        let n_max = self.n_max();
        let raw = kernel
            .iter()
            .map(|v| combine(&self.collars, n_max, &self.basis, v.iter().copied()).map(|w| w.remove_principal()))
            .collect::<Result<Vec<_>>>()?;
        let kernel_space = QDSpace::new(self.collars.clone(), raw)?.with_rank_tol(self.rank_tol);
        let unitary = kernel_space.unitary_basis()?;
        Ok(QDSpace::new(self.collars.clone(), unitary)?.with_rank_tol(self.rank_tol))
    }

    /// Orthogonal projection `sum_j <Theta^j, psi> Theta^j` onto `W`.
    pub fn project_onto_w(&self, psi: &MultiCollarQD) -> Result<MultiCollarQD> {
        let w = self.w_subspace()?;
        w.project_onto_span(psi)
    }

    /// Orthogonal projection onto the whole span.
    pub fn project_onto_span(&self, psi: &MultiCollarQD) -> Result<MultiCollarQD> {
        let unitary = self.unitary_basis()?;
        let n_max = self
            .n_max()
            .max(psi.parts.iter().map(LaurentQD::n_max).max().unwrap_or(0));
        let coeffs = unitary.iter().map(|t| t.inner(psi)).collect::<Result<Vec<_>>>()?;
        combine(&self.collars, n_max, &unitary, coeffs)
    }

    /// For each `delta`, the largest `L^inf(thin) / L^2` ratio over the
    /// unitary `W` basis and `samples` random unit vectors of `W`.
    pub fn w_decay_report(&self, deltas: &[f64], samples: usize, seed: u64) -> Result<Vec<WDecayRow>> {
        let w = self.w_subspace()?;
        if w.dim() == 0 {
            return Ok(Vec::new());
        }
        let unitary = w.basis.clone();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut probes = unitary.clone();
        let n_max = w.n_max();
        for _ in 0..samples {
            let mut alpha: Vec<Complex64> = (0..unitary.len())
                .map(|_| {
                    let re: f64 = StandardNormal.sample(&mut rng);
                    let im: f64 = StandardNormal.sample(&mut rng);
                    Complex64::new(re, im)
                })
                .collect();
            let norm = alpha.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            if norm == 0.0 {
                continue;
            }
            alpha.iter_mut().for_each(|z| *z /= norm);
            probes.push(combine(&self.collars, n_max, &unitary, alpha)?);
        }
        deltas
            .iter()
            .map(|&delta| {
                let mut ratio: f64 = 0.0;
                let mut empty = true;
                for v in &probes {
                    let sup = v.linf_thin(delta)?;
                    empty &= sup.empty;
                    let l2 = v.l2_norm();
                    if l2 > 0.0 {
                        ratio = ratio.max(sup.value / l2);
                    }
                }
                Ok(WDecayRow {
                    delta,
                    ratio,
                    normalized: ratio * delta * delta * (std::f64::consts::PI / delta).exp(),
                    empty,
                })
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn single(collar: CollarParams, coeffs: &[(i32, Complex64)]) -> MultiCollarQD {
        MultiCollarQD::new(vec![LaurentQD::from_coeffs(collar, 4, coeffs.iter().copied()).unwrap()]).unwrap()
    }

    fn max_dev_from_identity(m: &DMatrix<Complex64>) -> f64 {
        let d = m.nrows();
        (0..d)
            .flat_map(|a| (0..d).map(move |b| (a, b)))
            .map(|(a, b)| {
                let target = if a == b { 1.0 } else { 0.0 };
                (m[(a, b)] - c(target, 0.0)).norm()
            })
            .fold(0.0, f64::max)
    }

    #[test]
    fn distinct_modes_have_diagonal_gram() {
        let k = CollarParams::new(0.5).unwrap();
        let basis = vec![
            single(k, &[(0, c(1.0, 0.0))]),
            single(k, &[(1, c(0.0, 1.0))]),
            single(k, &[(-2, c(2.0, 0.0))]),
        ];
        let space = QDSpace::new(vec![k], basis).unwrap();
        let g = space.gram_matrix();
        for a in 0..3 {
            for b in 0..3 {
                if a != b {
                    assert_eq!(g[(a, b)], ZERO);
                }
            }
        }
    }

    #[test]
    fn one_element_gram_is_norm_squared() {
        let k = CollarParams::new(0.5).unwrap();
        let q = single(k, &[(0, c(1.0, 0.5)), (1, c(-0.2, 0.0))]);
        let space = QDSpace::new(vec![k], vec![q.clone()]).unwrap();
        assert_relative_eq!(
            space.gram_matrix()[(0, 0)].re,
            q.l2_norm().powi(2),
            max_relative = 1e-14
        );
    }

    #[test]
    fn unitary_basis_normalises_orthogonal_input() {
        let k = CollarParams::new(0.5).unwrap();
        let e1 = single(k, &[(1, c(1.0, 0.0))]);
        let e2 = single(k, &[(-1, c(1.0, 0.0))]);
        let e1 = e1.scale(c(1.0 / e1.l2_norm(), 0.0));
        let e2 = e2.scale(c(1.0 / e2.l2_norm(), 0.0));
        let space = QDSpace::new(vec![k], vec![e1.scale(c(2.0, 0.0)), e2]).unwrap();
        let u = QDSpace::new(vec![k], space.unitary_basis().unwrap()).unwrap();
        assert!(max_dev_from_identity(u.gram_matrix()) < 1e-12);
    }

    #[test]
    fn rank_deficiency_is_reported() {
        let k = CollarParams::new(0.5).unwrap();
        let q = single(k, &[(1, c(1.0, 0.0)), (2, c(0.5, 0.0))]);
        let space = QDSpace::new(vec![k], vec![q.clone(), q.scale(c(0.0, 3.0))]).unwrap();
        assert!(matches!(space.unitary_basis(), Err(Error::RankDeficient { .. })));
    }

    #[test]
    fn w_of_three_modes_drops_principal() {
        let k = CollarParams::new(0.5).unwrap();
        let basis = vec![
            single(k, &[(0, c(1.0, 0.0))]),
            single(k, &[(1, c(1.0, 0.0))]),
            single(k, &[(-1, c(1.0, 0.0))]),
        ];
        let space = QDSpace::new(vec![k], basis).unwrap();
        let w = space.w_subspace().unwrap();
        assert_eq!(w.dim(), 2);
        for v in w.basis() {
            assert_eq!(v.principal_parts(), vec![ZERO]);
        }
        let psi = single(k, &[(0, c(1.0, 0.0))]);
        let p = space.project_onto_w(&psi).unwrap();
        assert!(p.l2_norm() < 1e-12 * psi.l2_norm());
    }

    #[test]
    fn w_is_everything_without_principal_parts() {
        let k = CollarParams::new(0.5).unwrap();
        let basis = vec![
            single(k, &[(1, c(1.0, 0.0))]),
            single(k, &[(2, c(0.0, 1.0)), (-1, c(1.0, 0.0))]),
        ];
        let space = QDSpace::new(vec![k], basis).unwrap();
        assert_eq!(space.w_subspace().unwrap().dim(), 2);
        let psi = &space.basis()[1];
        let p = space.project_onto_w(psi).unwrap();
        let diff = p.add_scaled(c(-1.0, 0.0), psi).unwrap();
        assert!(diff.l2_norm() <= 1e-10 * psi.l2_norm());
    }

    #[test]
    fn empty_w_gives_empty_report() {
        let k = CollarParams::new(0.05).unwrap();
        let space = QDSpace::new(vec![k], vec![single(k, &[(0, c(1.0, 0.0))])]).unwrap();
        assert!(space.w_decay_report(&[0.1, 0.2], 4, 1).unwrap().is_empty());
    }

    #[test]
    fn single_mode_w_report_matches_closed_form() {
        let ell = 0.05;
        let k = CollarParams::new(ell).unwrap();
        let basis = vec![MultiCollarQD::new(vec![LaurentQD::from_scaled(k, 4, [(1, c(1.0, 0.0))]).unwrap()]).unwrap()];
        let space = QDSpace::new(vec![k], basis).unwrap();
        let delta = 0.2;
        let rows = space.w_decay_report(&[delta], 5, 7).unwrap();
        let unit = LaurentQD::from_scaled(k, 4, [(1, c(1.0, 0.0))]).unwrap();
        let full = unit.l2_norm(SubCollar::full(&k));
        let x = k.half_length();
        let xd = k.thin_boundary(delta).unwrap().x_delta;
        let r = (ell / 2.0).sinh() / delta.sinh();
        let expected = (xd - x).exp() * 8.0 * std::f64::consts::PI.powi(2) / (ell * ell) * r * r / full;
        assert_relative_eq!(rows[0].ratio, expected, max_relative = 1e-9);
    }
}
