//! Axial normal modes of a linear Coulomb crystal with mixed masses.
//!
//! Every ion sits in the same electrostatic curvature κ = m_i ν_i², so a crystal
//! is specified by its masses and one reference (mass, frequency) pair. The
//! potential matrix is A_ii = ½m_iν_i² + k_e Σ_{k≠i} |R_k − R_i|⁻³,
//! A_ij = −k_e |R_j − R_i|⁻³ with k_e = e²/4πε₀, and the mass-weighted
//! B_ij = A_ij/√(m_i m_j) has eigenvalues β_k = Ω_k²/2.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::constants::{E0, EPSILON0, HBAR};
use crate::species::SpeciesData;

/// Relative agreement required between the two-ion closed form and the numeric solve.
pub const CLOSED_FORM_TOLERANCE: f64 = 1e-10;

const NEWTON_TOLERANCE: f64 = 1e-12;
const NEWTON_MAX_ITER: usize = 200;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModesError {
    #[error("crystal has no ions")]
    Empty,
    #[error("invalid {what}: {value}")]
    Invalid { what: &'static str, value: f64 },
    #[error("equilibrium solve did not converge after {0} iterations")]
    NoConvergence(usize),
    #[error("eigensolver returned a non-positive eigenvalue {0}")]
    Unstable(f64),
    #[error("two-ion closed form disagrees with numeric solve by {0:e}")]
    ClosedFormMismatch(f64),
}

fn coulomb_constant() -> f64 {
    E0 * E0 / (4.0 * PI * EPSILON0)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CrystalConfig {
    /// Ion masses in chain order, kg.
    pub masses: Vec<f64>,
    /// Axial curvature m_i ν_i², identical for every ion, J/m².
    pub curvature: f64,
}

impl CrystalConfig {
    /// Crystal whose curvature is fixed by a reference ion of mass `reference_mass`
    /// (kg) having axial frequency `reference_frequency` (rad/s) on its own.
    pub fn new(masses: Vec<f64>, reference_mass: f64, reference_frequency: f64) -> Result<Self, ModesError> {
        if masses.is_empty() {
            return Err(ModesError::Empty);
        }
        for &m in &masses {
            if !(m.is_finite() && m > 0.0) {
                return Err(ModesError::Invalid { what: "mass", value: m });
            }
        }
        if !(reference_mass.is_finite() && reference_mass > 0.0) {
            return Err(ModesError::Invalid {
                what: "reference mass",
                value: reference_mass,
            });
        }
        if !(reference_frequency.is_finite() && reference_frequency > 0.0) {
            return Err(ModesError::Invalid {
                what: "reference frequency",
                value: reference_frequency,
            });
        }
        Ok(CrystalConfig {
            masses,
            curvature: reference_mass * reference_frequency * reference_frequency,
        })
    }

    pub fn from_species(
        ions: &[&SpeciesData],
        reference: &SpeciesData,
        reference_frequency: f64,
    ) -> Result<Self, ModesError> {
        Self::new(
            ions.iter().map(|s| s.mass_kg()).collect(),
            reference.mass_kg(),
            reference_frequency,
        )
    }

    pub fn len(&self) -> usize {
        self.masses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.masses.is_empty()
    }

    /// ν_i of ion `i` alone in the trap, rad/s.
    pub fn single_ion_frequency(&self, i: usize) -> f64 {
        (self.curvature / self.masses[i]).sqrt()
    }

    /// Natural length (k_e/κ)^{1/3} of the chain, m.
    pub fn length_scale(&self) -> f64 {
        (coulomb_constant() / self.curvature).cbrt()
    }
}

/// Two-ion separation R₂ − R₁ = (e²/(2πε₀ m ν²))^{1/3}, m.
pub fn equilibrium_spacing(c: &CrystalConfig) -> f64 {
    (E0 * E0 / (2.0 * PI * EPSILON0 * c.curvature)).cbrt()
}

/// Dimensionless equilibrium positions (units of `length_scale`), ascending and centred.
fn dimensionless_positions(n: usize) -> Result<Vec<f64>, ModesError> {
    match n {
        1 => return Ok(vec![0.0]),
        2 => {
            let h = 0.5 * 2f64.cbrt();
            return Ok(vec![-h, h]);
        }
        _ => {}
    }
    let spacing = 2.0 * (n as f64).powf(-0.56);
    let mut u = DVector::from_fn(n, |i, _| (i as f64 - (n as f64 - 1.0) / 2.0) * spacing);
    for _ in 0..NEWTON_MAX_ITER {
        let mut g = DVector::zeros(n);
        let mut jac = DMatrix::zeros(n, n);
        for i in 0..n {
            g[i] = u[i];
            jac[(i, i)] = 1.0;
            for j in 0..n {
                if j == i {
                    continue;
                }
                let d = u[i] - u[j];
                let inv2 = 1.0 / (d * d);
                g[i] -= inv2 * d.signum();
                let c = 2.0 * inv2 / d.abs();
                jac[(i, i)] += c;
                jac[(i, j)] -= c;
            }
        }
        let step = jac.lu().solve(&g).ok_or(ModesError::NoConvergence(0))?;
        u -= &step;
        if step.amax() < NEWTON_TOLERANCE {
            return Ok(u.iter().copied().collect());
        }
    }
    Err(ModesError::NoConvergence(NEWTON_MAX_ITER))
}

/// Equilibrium positions R_i, m, centred on the trap.
pub fn equilibrium_positions(c: &CrystalConfig) -> Result<Vec<f64>, ModesError> {
    if c.is_empty() {
        return Err(ModesError::Empty);
    }
    let scale = c.length_scale();
    Ok(dimensionless_positions(c.len())?
        .into_iter()
        .map(|u| u * scale)
        .collect())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModeSolution {
    /// Ω_k, rad/s, ascending.
    pub frequencies: Vec<f64>,
    /// `eigenvectors[k][i]` = b_ki; unit norm, first component positive.
    pub eigenvectors: Vec<Vec<f64>>,
    /// R_i, m.
    pub equilibrium_positions: Vec<f64>,
}

impl ModeSolution {
    /// β_k = Ω_k²/2.
    pub fn eigenvalue(&self, k: usize) -> f64 {
        0.5 * self.frequencies[k] * self.frequencies[k]
    }

    /// Ground-state extent √(ħ/(2 m_i Ω_k)), m.
    pub fn zero_point_spread(&self, c: &CrystalConfig, k: usize, i: usize) -> f64 {
        (HBAR / (2.0 * c.masses[i] * self.frequencies[k])).sqrt()
    }
}

/// The potential matrix A and mass-weighted B for the given positions.
pub fn mass_weighted_matrix(c: &CrystalConfig, positions: &[f64]) -> DMatrix<f64> {
    let n = c.len();
    let ke = coulomb_constant();
    let mut a = DMatrix::zeros(n, n);
    for i in 0..n {
        a[(i, i)] = 0.5 * c.curvature;
        for j in 0..n {
            if j != i {
                let coupling = ke / (positions[j] - positions[i]).abs().powi(3);
                a[(i, i)] += coupling;
                a[(i, j)] = -coupling;
            }
        }
    }
    DMatrix::from_fn(n, n, |i, j| a[(i, j)] / (c.masses[i] * c.masses[j]).sqrt())
}

/// Closed-form two-ion modes for mass ratio μ = m₂/m₁ and ion-1 frequency ν₁:
/// (Ω₁, Ω₂, b₀), with b₁ = (b₀, √(1−b₀²)) and b₂ = (√(1−b₀²), −b₀).
pub fn two_ion_closed_form(mu: f64, nu1: f64) -> (f64, f64, f64) {
    let root = (1.0 - mu + mu * mu).sqrt();
    let beta1 = (1.0 + mu - root) * nu1 * nu1 / (2.0 * mu);
    let beta2 = (1.0 + mu + root) * nu1 * nu1 / (2.0 * mu);
    let t = 1.0 - mu + root;
    let b0 = t / (mu + t * t).sqrt();
    ((2.0 * beta1).sqrt(), (2.0 * beta2).sqrt(), b0)
}

fn check_two_ion(c: &CrystalConfig, sol: &ModeSolution) -> Result<(), ModesError> {
    let mu = c.masses[1] / c.masses[0];
    let (w1, w2, b0) = two_ion_closed_form(mu, c.single_ion_frequency(0));
    let b0c = (1.0 - b0 * b0).sqrt();
    let deviations = [
        (sol.frequencies[0] - w1).abs() / w1,
        (sol.frequencies[1] - w2).abs() / w2,
        (sol.eigenvectors[0][0] - b0).abs(),
        (sol.eigenvectors[0][1] - b0c).abs(),
        (sol.eigenvectors[1][0] - b0c).abs(),
        (sol.eigenvectors[1][1] + b0).abs(),
    ];
    let worst = deviations.iter().fold(0.0f64, |a, &b| a.max(b));
    if worst > CLOSED_FORM_TOLERANCE {
        return Err(ModesError::ClosedFormMismatch(worst));
    }
    Ok(())
}

/// Full axial mode decomposition. Two-ion crystals are cross-checked against
/// the closed form.
pub fn normal_modes(c: &CrystalConfig) -> Result<ModeSolution, ModesError> {
    let positions = equilibrium_positions(c)?;
    let b = mass_weighted_matrix(c, &positions);
    let eig = SymmetricEigen::new(b);
    let mut order: Vec<usize> = (0..c.len()).collect();
    order.sort_by(|&x, &y| eig.eigenvalues[x].total_cmp(&eig.eigenvalues[y]));
    let mut frequencies = Vec::with_capacity(c.len());
    let mut eigenvectors = Vec::with_capacity(c.len());
    for k in order {
        let beta = eig.eigenvalues[k];
        if !(beta > 0.0) {
            return Err(ModesError::Unstable(beta));
        }
        frequencies.push((2.0 * beta).sqrt());
        let col = eig.eigenvectors.column(k);
        let norm = col.norm();
        let lead = col.iter().copied().find(|v| v.abs() > 1e-14).unwrap_or(1.0);
        let sign = if lead < 0.0 { -1.0 } else { 1.0 };
        eigenvectors.push(col.iter().map(|v| sign * v / norm).collect());
    }
    let sol = ModeSolution {
        frequencies,
        eigenvectors,
        equilibrium_positions: positions,
    };
    if c.len() == 2 {
        check_two_ion(c, &sol)?;
    }
    Ok(sol)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LambDickeSet {
    /// `eta[k][j]` for mode k, ion j.
    pub eta: Vec<Vec<f64>>,
}

/// η_kj = 2k_Δ b_kj √(ħ/(2 m_j Ω_k)), where `k_delta_axial` is the axial
/// component of ½(k₁ − k₂), rad/m.
pub fn lamb_dicke(m: &ModeSolution, c: &CrystalConfig, k_delta_axial: f64) -> LambDickeSet {
    let eta = (0..m.frequencies.len())
        .map(|k| {
            (0..c.len())
                .map(|j| 2.0 * k_delta_axial * m.eigenvectors[k][j] * m.zero_point_spread(c, k, j))
                .collect()
        })
        .collect();
    LambDickeSet { eta }
}
