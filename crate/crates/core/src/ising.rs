//! One-dimensional Ising chain with field: transfer matrix, partition function,
//! and the block-spin renormalization map for blocks of two spins.
//!
//! Couplings are dimensionless, `K0 = βh` and `K1 = βJ`, with Boltzmann weight
//! `exp(K0 Σ S_i + K1 Σ S_i S_{i+1})` on a periodic chain. The transfer matrix
//! is
//!
//! ```text
//! T = | e^{K1+K0}  e^{-K1}   |
//!     | e^{-K1}    e^{K1-K0} |
//! ```
//!
//! and `Z_N = Tr T^N = λ₊^N + λ₋^N`. Decimating every other spin squares the
//! matrix, and `T² = c · T(K')` defines the renormalized couplings `K'` and the
//! rescaling constant `c`. In the variables `V_i = e^{-K_i}` the map has a
//! closed form ([`rg_step_closed`]); [`rg_step_oracle`] solves the matrix
//! equation directly and is the reference the closed form is checked against.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Largest accepted `|K0|` or `|K1|`.
pub const COUPLING_CAP: f64 = 300.0;

/// Largest chain enumerated by [`partition_function_bruteforce`].
pub const BRUTEFORCE_MAX_SITES: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CouplingVector<T> {
    /// Field coupling `βh`.
    pub k0: T,
    /// Nearest-neighbour coupling `βJ`.
    pub k1: T,
}

impl<T: Scalar> CouplingVector<T> {
    pub fn new(k0: T, k1: T) -> Result<Self> {
        if !(k0.is_finite() && k1.is_finite()) {
            return Err(Error::InvalidParameter("couplings must be finite".into()));
        }
        Ok(Self { k0, k1 })
    }

    pub fn to_v(self) -> VVector<T> {
        VVector {
            v0: (-self.k0).exp(),
            v1: (-self.k1).exp(),
        }
    }

    fn check_cap(&self) -> Result<()> {
        let cap = T::lit(COUPLING_CAP);
        if self.k0.abs() > cap || self.k1.abs() > cap {
            Err(Error::CouplingOverflow)
        } else {
            Ok(())
        }
    }
}

/// `V_i = e^{-K_i}`. Components above 1 correspond to negative couplings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VVector<T> {
    pub v0: T,
    pub v1: T,
}

impl<T: Scalar> VVector<T> {
    pub fn new(v0: T, v1: T) -> Result<Self> {
        if !(v0 > T::zero() && v1 > T::zero() && v0.is_finite() && v1.is_finite()) {
            return Err(Error::InvalidParameter("V components must be positive and finite".into()));
        }
        Ok(Self { v0, v1 })
    }

    pub fn to_k(self) -> CouplingVector<T> {
        CouplingVector {
            k0: -self.v0.ln(),
            k1: -self.v1.ln(),
        }
    }

    /// Both couplings nonnegative, i.e. both components in `(0, 1]`.
    pub fn is_physical(&self) -> bool {
        self.v0 <= T::one() && self.v1 <= T::one()
    }

    pub fn max_abs_diff(&self, other: &Self) -> T {
        (self.v0 - other.v0).abs().max((self.v1 - other.v1).abs())
    }

    fn is_valid(&self) -> bool {
        self.v0 > T::zero() && self.v1 > T::zero() && self.v0.is_finite() && self.v1.is_finite()
    }
}

/// A symmetric 2×2 matrix with positive entries.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransferMatrix<T>(pub [[T; 2]; 2]);

impl<T: Scalar> TransferMatrix<T> {
    pub fn entries(&self) -> [[T; 2]; 2] {
        self.0
    }

    pub fn mul(&self, other: &Self) -> Self {
        let (a, b) = (self.0, other.0);
        let mut out = [[T::zero(); 2]; 2];
        for (i, row) in out.iter_mut().enumerate() {
            for (j, cell) in row.iter_mut().enumerate() {
                *cell = a[i][0] * b[0][j] + a[i][1] * b[1][j];
            }
        }
        Self(out)
    }

    pub fn square(&self) -> Self {
        self.mul(self)
    }

    pub fn scale(&self, c: T) -> Self {
        Self(self.0.map(|row| row.map(|x| x * c)))
    }

    pub fn trace(&self) -> T {
        self.0[0][0] + self.0[1][1]
    }

    pub fn max_abs(&self) -> T {
        self.0.iter().flatten().fold(T::zero(), |m, x| m.max(x.abs()))
    }

    /// `max |self - other| / max |other|`.
    pub fn relative_residual(&self, other: &Self) -> T {
        let diff = self
            .0
            .iter()
            .flatten()
            .zip(other.0.iter().flatten())
            .fold(T::zero(), |m, (x, y)| m.max((*x - *y).abs()));
        diff / other.max_abs()
    }
}

pub fn transfer_matrix<T: Scalar>(k: CouplingVector<T>) -> Result<TransferMatrix<T>> {
    k.check_cap()?;
    let off = (-k.k1).exp();
    Ok(TransferMatrix([
        [(k.k1 + k.k0).exp(), off],
        [off, (k.k1 - k.k0).exp()],
    ]))
}

/// `λ± = e^{K1} [cosh K0 ± √(sinh² K0 + e^{-4K1})]`, with `λ₊ ≥ λ₋`.
///
/// `λ₋` is evaluated as `e^{K1}(1 - e^{-4K1}) / (cosh K0 + √…)`, which is the
/// same quantity without the cancellation. It is negative for `K1 < 0`.
pub fn eigenvalues<T: Scalar>(k: CouplingVector<T>) -> Result<(T, T)> {
    k.check_cap()?;
    let four = T::lit(4.0);
    let ch = k.k0.cosh();
    let root = (k.k0.sinh().powi(2) + (-four * k.k1).exp()).sqrt();
    let e = k.k1.exp();
    let plus = e * (ch + root);
    let minus = e * -(-four * k.k1).exp_m1() / (ch + root);
    Ok((plus, minus))
}

/// `Z_N = λ₊^N + λ₋^N` for a periodic chain of `n ≥ 1` spins.
pub fn partition_function<T: Scalar>(k: CouplingVector<T>, n: usize) -> Result<T> {
    check_sites(n)?;
    let (plus, minus) = eigenvalues(k)?;
    let z = powu(plus, n) + powu(minus, n);
    if z.is_finite() {
        Ok(z)
    } else {
        Err(Error::Overflow("partition function; use log_partition_function"))
    }
}

/// `ln Z_N`, finite for every chain length the couplings allow.
pub fn log_partition_function<T: Scalar>(k: CouplingVector<T>, n: usize) -> Result<T> {
    check_sites(n)?;
    let (plus, minus) = eigenvalues(k)?;
    let ratio = powu(minus / plus, n);
    Ok(T::count(n) * plus.ln() + ratio.ln_1p())
}

fn powu<T: Scalar>(x: T, n: usize) -> T {
    match i32::try_from(n) {
        Ok(n) => x.powi(n),
        Err(_) => x.powf(T::count(n)),
    }
}

fn check_sites(n: usize) -> Result<()> {
    if n == 0 {
        Err(Error::InvalidParameter("chain needs at least one site".into()))
    } else {
        Ok(())
    }
}

/// `K0 Σ S_i + K1 Σ S_i S_{i+1}` for the periodic chain whose spin `i` is up
/// iff bit `i` of `config` is set.
pub fn config_exponent<T: Scalar>(k: CouplingVector<T>, config: u64, n: usize) -> T {
    let spin = |i: usize| if (config >> i) & 1 == 1 { 1i64 } else { -1i64 };
    let magnetization: i64 = (0..n).map(spin).sum();
    let bonds: i64 = (0..n).map(|i| spin(i) * spin((i + 1) % n)).sum();
    k.k0 * T::from_i64(magnetization).expect("small integer") + k.k1 * T::from_i64(bonds).expect("small integer")
}

/// `Σ exp(K0 Σ S_i + K1 Σ S_i S_{i+1})` over all `2^n` configurations.
pub fn partition_function_bruteforce<T: Scalar>(k: CouplingVector<T>, n: usize) -> Result<T> {
    check_sites(n)?;
    if n > BRUTEFORCE_MAX_SITES {
        return Err(Error::ResourceCap {
            what: "brute-force configurations",
            needed: 1u128 << n,
            cap: 1u128 << BRUTEFORCE_MAX_SITES,
        });
    }
    k.check_cap()?;
    let z: T = (0..1u64 << n).map(|c| config_exponent(k, c, n).exp()).sum();
    if z.is_finite() {
        Ok(z)
    } else {
        Err(Error::Overflow("brute-force partition function"))
    }
}

/// Couplings and rescaling constant with `m = c · T(K)`, for a symmetric
/// positive matrix `m`. Also returns the reconstruction residual.
pub fn fit_transfer_matrix<T: Scalar>(m: &TransferMatrix<T>) -> Result<OracleStep<T>> {
    let [[a, b], [b2, d]] = m.0;
    if !(a > T::zero() && b > T::zero() && d > T::zero()) || b != b2 {
        return Err(Error::InvalidParameter("matrix must be symmetric with positive entries".into()));
    }
    // c e^{K1+K0} = a, c e^{K1-K0} = d, c e^{-K1} = b
    let two = T::lit(2.0);
    let four = T::lit(4.0);
    let k0 = (a.ln() - d.ln()) / two;
    let k1 = (a.ln() + d.ln() - two * b.ln()) / four;
    let c = ((a.ln() + d.ln() + two * b.ln()) / four).exp();
    let k = CouplingVector::new(k0, k1)?;
    let residual = transfer_matrix(k)?.scale(c).relative_residual(m);
    Ok(OracleStep { k, c, residual })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OracleStep<T> {
    pub k: CouplingVector<T>,
    pub c: T,
    /// `max |c·T(K') - T²| / max |T²|`.
    pub residual: T,
}

/// One decimation step by squaring the transfer matrix and refitting it.
pub fn rg_step_oracle<T: Scalar>(k: CouplingVector<T>) -> Result<OracleStep<T>> {
    fit_transfer_matrix(&transfer_matrix(k)?.square())
}

/// The closed-form decimation map on `V`:
///
/// ```text
/// V0' = √(V1⁴ + V0²) / √(V1⁴ + V0⁻²)
/// V1' = (V0 + V0⁻¹)^{1/2} / (V1⁴ + V1⁻⁴ + V0² + V0⁻²)^{1/4}
/// c   = (V0 + V0⁻¹)^{1/2} · (V1⁴ + V1⁻⁴ + V0² + V0⁻²)^{1/4}
/// ```
pub fn rg_step_closed<T: Scalar>(v: VVector<T>) -> Result<RgStep<T>> {
    if !v.is_valid() {
        return Err(Error::InvalidParameter("V components must be positive and finite".into()));
    }
    let (v0, v1) = (v.v0, v.v1);
    let v1_4 = v1.powi(4);
    let v0_2 = v0 * v0;
    let inv_v0_2 = v0_2.recip();
    let v0p = ((v1_4 + v0_2) / (v1_4 + inv_v0_2)).sqrt();
    let bond_sum = v1_4 + v1_4.recip() + v0_2 + inv_v0_2;
    let field_sum = (v0 + v0.recip()).sqrt();
    let quarter = bond_sum.sqrt().sqrt();
    let v1p = field_sum / quarter;
    let c = field_sum * quarter;
    let next = VVector { v0: v0p, v1: v1p };
    if !next.is_valid() || !c.is_finite() {
        return Err(Error::Overflow("renormalization step"));
    }
    Ok(RgStep { v: next, c })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RgStep<T> {
    pub v: VVector<T>,
    pub c: T,
}

/// Forward zero-field decimation `K1' = ½ ln cosh 2K1`.
pub fn rg_step_zero_field<T: Scalar>(k1: T) -> T {
    let two = T::lit(2.0);
    (two * k1).cosh().ln() / two
}

/// Inverse of [`rg_step_zero_field`]: `K1 = ½ arccosh(e^{2K1'})` for `K1' > 0`.
pub fn inverse_rg_step_zero_field<T: Scalar>(k1_renormalized: T) -> Result<T> {
    if !(k1_renormalized > T::zero() && k1_renormalized.is_finite()) {
        return Err(Error::InvalidParameter("renormalized coupling must be positive".into()));
    }
    let two = T::lit(2.0);
    // arccosh(1 + y) = ln(1 + y + √(y(2 + y))), y = e^{2K'} - 1
    let y = (two * k1_renormalized).exp_m1();
    let k1 = (y + (y * (two + y)).sqrt()).ln_1p() / two;
    if k1.is_finite() {
        Ok(k1)
    } else {
        Err(Error::Overflow("inverse renormalization step"))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RgTrajectory<T> {
    pub start: VVector<T>,
    /// `(V_n, c_n)` for `n = 1, 2, …`; `c_n` is the constant of the step producing `V_n`.
    pub steps: Vec<RgStep<T>>,
    pub converged_to: Option<VVector<T>>,
    /// Index of the first iterate found stationary, or the number of steps taken.
    pub steps_used: usize,
    /// The map left the domain `V > 0` (or overflowed); `steps` ends at the last valid iterate.
    pub diverged: bool,
}

impl<T: Scalar> RgTrajectory<T> {
    pub fn last(&self) -> VVector<T> {
        self.steps.last().map_or(self.start, |s| s.v)
    }
}

/// Iterates [`rg_step_closed`] until `‖V_{n+1} - V_n‖∞ < tol` or `max_steps`.
pub fn rg_trajectory<T: Scalar>(start: VVector<T>, max_steps: usize, tol: T) -> Result<RgTrajectory<T>> {
    if !start.is_valid() {
        return Err(Error::InvalidParameter("V components must be positive and finite".into()));
    }
    if !(tol > T::zero()) {
        return Err(Error::InvalidParameter("tolerance must be positive".into()));
    }
    let mut steps = Vec::new();
    let mut v = start;
    let mut converged_to = None;
    let mut diverged = false;
    let mut steps_used = max_steps;
    for n in 0..max_steps {
        let Ok(step) = rg_step_closed(v) else {
            diverged = true;
            steps_used = n;
            break;
        };
        steps.push(step);
        if step.v.max_abs_diff(&v) < tol {
            steps_used = n;
            let fixed = match rg_step_closed(step.v) {
                Ok(next) => next.v.max_abs_diff(&step.v) < T::lit(10.0) * tol,
                Err(_) => false,
            };
            if fixed {
                converged_to = Some(step.v);
            }
            break;
        }
        v = step.v;
    }
    Ok(RgTrajectory {
        start,
        steps,
        converged_to,
        steps_used,
        diverged,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use nalgebra::{Matrix2, SymmetricEigen};

    fn k(k0: f64, k1: f64) -> CouplingVector<f64> {
        CouplingVector::new(k0, k1).unwrap()
    }

    fn ln2() -> f64 {
        std::f64::consts::LN_2
    }

    #[test]
    fn transfer_matrix_examples() {
        assert_eq!(transfer_matrix(k(0.0, 0.0)).unwrap().0, [[1.0, 1.0], [1.0, 1.0]]);
        let t = transfer_matrix(k(0.0, ln2())).unwrap().0;
        assert_relative_eq!(t[0][0], 2.0, max_relative = 1e-15);
        assert_relative_eq!(t[1][1], 2.0, max_relative = 1e-15);
        assert_relative_eq!(t[0][1], 0.5, max_relative = 1e-15);
        let t = transfer_matrix(k(0.5, 0.3)).unwrap().0;
        assert_eq!(t, [[0.8f64.exp(), (-0.3f64).exp()], [(-0.3f64).exp(), (-0.2f64).exp()]]);
        assert_eq!(transfer_matrix(k(301.0, 0.0)).unwrap_err(), Error::CouplingOverflow);
    }

    #[test]
    fn eigenvalue_examples() {
        let (p, m) = eigenvalues(k(0.0, ln2())).unwrap();
        assert_relative_eq!(p, 2.5, max_relative = 1e-15);
        assert_relative_eq!(m, 1.5, max_relative = 1e-15);
        assert_eq!(eigenvalues(k(0.0, 0.0)).unwrap(), (2.0, 0.0));
        // values from numpy.linalg.eigvalsh on T(0.5, 0.3)
        let (p, m) = eigenvalues(k(0.5, 0.3)).unwrap();
        assert!((p - 2.543_698_54).abs() < 1e-8 && (m - 0.500_573_14).abs() < 1e-8);
    }

    #[test]
    fn eigenvalues_match_generic_solver() {
        for i in 0..200 {
            let kv = k(-2.0 + 0.02 * i as f64, 2.0 - 0.019 * i as f64);
            let t = transfer_matrix(kv).unwrap().0;
            let eig = SymmetricEigen::new(Matrix2::new(t[0][0], t[0][1], t[1][0], t[1][1])).eigenvalues;
            let (hi, lo) = (eig[0].max(eig[1]), eig[0].min(eig[1]));
            let (p, m) = eigenvalues(kv).unwrap();
            assert_relative_eq!(p, hi, max_relative = 1e-12);
            assert!((m - lo).abs() <= 1e-12 * hi);
        }
    }

    #[test]
    fn partition_function_examples() {
        assert_relative_eq!(partition_function(k(0.0, ln2()), 2).unwrap(), 8.5, max_relative = 1e-15);
        assert_relative_eq!(partition_function_bruteforce(k(0.0, ln2()), 2).unwrap(), 8.5, max_relative = 1e-15);
        assert_eq!(partition_function(k(0.0, 0.0), 4).unwrap(), 16.0);
        assert_eq!(partition_function_bruteforce(k(0.0, 0.0), 4).unwrap(), 16.0);
        assert!(partition_function_bruteforce(k(0.0, 0.0), 21).is_err());
        assert!(partition_function(k(0.0, 0.0), 0).is_err());
    }

    #[test]
    fn log_partition_function_survives_overflow() {
        let kv = k(1.0, 2.0);
        assert!(matches!(partition_function(kv, 5000), Err(Error::Overflow(_))));
        let log_z = log_partition_function(kv, 5000).unwrap();
        let (p, _) = eigenvalues(kv).unwrap();
        assert_relative_eq!(log_z, 5000.0 * p.ln(), max_relative = 1e-14);
        assert_relative_eq!(
            log_partition_function(kv, 6).unwrap(),
            partition_function(kv, 6).unwrap().ln(),
            max_relative = 1e-14
        );
    }

    #[test]
    fn closed_step_examples() {
        let s = rg_step_closed(VVector::new(0.3f64, 1.0).unwrap()).unwrap();
        assert!((s.v.v0 - 0.3).abs() < 1e-15 && (s.v.v1 - 1.0).abs() < 1e-15);

        let s = rg_step_closed(VVector::new(1.0, 1.0).unwrap()).unwrap();
        assert_eq!((s.v.v0, s.v.v1), (1.0, 1.0));
        assert_relative_eq!(s.c, 2.0, max_relative = 1e-15);

        // zero-field decimation: V1' = (cosh 2K)^{-1/2} with K = ln 2
        let s = rg_step_closed(VVector::new(1.0, 0.5).unwrap()).unwrap();
        assert_eq!(s.v.v0, 1.0);
        assert_relative_eq!(s.v.v1, 2.125f64.powf(-0.5), max_relative = 1e-15);
        assert!((s.v.v1 - 0.685_994).abs() < 1e-6);

        assert!(rg_step_closed(VVector { v0: 0.0, v1: 1.0 }).is_err());
    }

    #[test]
    fn oracle_step_examples() {
        let o = rg_step_oracle(k(0.0, 0.0)).unwrap();
        assert_eq!((o.k.k0, o.k.k1), (0.0, 0.0));
        assert_relative_eq!(o.c, 2.0, max_relative = 1e-15);

        let o = rg_step_oracle(k(0.0, ln2())).unwrap();
        assert_eq!(o.k.k0, 0.0);
        assert_relative_eq!(o.k.k1, 0.5 * 2.125f64.ln(), max_relative = 1e-14);
        assert!(o.residual < 1e-15);
    }

    #[test]
    fn trajectory_examples() {
        let t = rg_trajectory(VVector::new(0.7f64, 0.9).unwrap(), 60, 1e-10).unwrap();
        let end = t.converged_to.expect("converges");
        assert!((end.v1 - 1.0).abs() < 1e-8);
        assert!(!t.diverged);

        let t = rg_trajectory(VVector::new(0.4, 1.0).unwrap(), 60, 1e-10).unwrap();
        assert_eq!(t.steps_used, 0);
        assert_eq!(t.converged_to, Some(VVector { v0: 0.4, v1: 1.0 }));

        let t = rg_trajectory(VVector::new(1.0, 1e-6).unwrap(), 5, 1e-10).unwrap();
        assert!(t.steps[0].v.v1 > 1e-6);
        assert!(t.steps.windows(2).all(|w| w[1].v.v1 > w[0].v.v1));
    }

    #[test]
    fn trajectory_reports_divergence() {
        // V1⁻⁴ overflows, the step leaves the domain and the trajectory stops
        let t = rg_trajectory(VVector::new(1.0, 1e-80).unwrap(), 10, 1e-10).unwrap();
        assert!(t.diverged);
        assert!(t.steps.is_empty());
        assert_eq!(t.last().v1, 1e-80);
    }

    #[test]
    fn zero_field_inverse() {
        let k1 = inverse_rg_step_zero_field(0.5 * 2.125f64.ln()).unwrap();
        assert_relative_eq!(k1, ln2(), max_relative = 1e-14);
        let small = inverse_rg_step_zero_field(1e-12).unwrap();
        assert!(small > 0.0 && small < 1e-5);
        assert!(inverse_rg_step_zero_field(0.0).is_err());
        assert!(inverse_rg_step_zero_field(-1.0).is_err());
        for x in [0.01, 0.3, 2.0, 10.0] {
            assert_relative_eq!(rg_step_zero_field(inverse_rg_step_zero_field(x).unwrap()), x, max_relative = 1e-12);
        }
    }

    #[test]
    fn inverse_iteration_grows_coupling() {
        // 30 inverse steps from K1' = 0.1: an independent mpmath iteration of
        // ½ acosh(e^{2K}) gives K1 = 10.32604345709…, V1 = 3.2768e-5
        let mut kk: f64 = 0.1;
        for _ in 0..30 {
            let next = inverse_rg_step_zero_field(kk).unwrap();
            assert!(next > kk);
            kk = next;
        }
        assert!((kk - 10.326_043_457_091_83).abs() < 1e-9);
    }

    #[test]
    fn works_in_single_precision() {
        let kv = CouplingVector::<f32>::new(0.0, std::f32::consts::LN_2).unwrap();
        assert!((partition_function(kv, 2).unwrap() - 8.5).abs() < 1e-4);
    }
}
