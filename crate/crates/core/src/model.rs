//! Single-excitation Frenkel exciton models.
//!
//! A [`SiteModel`] holds site energies `ε_m` and couplings `J_mn` in cm⁻¹.
//! The single-excitation Hamiltonian is `H = Σ ε_m |m⟩⟨m| − Σ J_mn |m⟩⟨n|`,
//! so off-diagonal matrix elements carry `−J_mn`. Diagonalizing it gives an
//! [`ExcitonBasis`] of exciton energies `ε_α` (ascending) and amplitudes
//! `c_m(α)`.

use alloc::{format, string::String, vec::Vec};
use core::fmt;

use nalgebra::DMatrix;
use thiserror::Error;

/// Gaps below this magnitude (cm⁻¹) count as degenerate.
pub const DEGENERACY_TOLERANCE: f64 = 1e-9;

/// Names accepted by [`preset`].
pub const PRESET_NAMES: [&str; 3] = ["fmo2", "fmo3", "fmo4"];

/// Errors raised while building or diagonalizing a model.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    /// The site data violates a model invariant.
    #[error("invalid model: {0}")]
    InvalidModel(String),
    /// Unknown preset name.
    #[error("unknown preset `{name}`; available presets: {available}")]
    UnknownPreset {
        /// Requested name.
        name: String,
        /// Comma separated list of shipped presets.
        available: String,
    },
    /// Two exciton energies coincide.
    #[error(
        "degenerate exciton energies: excitons {0} and {1} are within {DEGENERACY_TOLERANCE} cm^-1"
    )]
    Degenerate(usize, usize),
    /// Exciton index outside the basis.
    #[error("exciton index {index} out of range for {len} excitons")]
    IndexOutOfRange {
        /// Offending index.
        index: usize,
        /// Number of excitons.
        len: usize,
    },
}

/// Site energies and electronic couplings of a single-excitation model.
#[derive(Debug, Clone, PartialEq)]
pub struct SiteModel {
    energies: Vec<f64>,
    couplings: DMatrix<f64>,
    labels: Option<Vec<String>>,
    preset: Option<&'static str>,
}

impl SiteModel {
    /// Builds a model from site energies and a symmetric coupling matrix with
    /// zero diagonal.
    pub fn new(
        energies: Vec<f64>,
        couplings: DMatrix<f64>,
        labels: Option<Vec<String>>,
    ) -> Result<Self, ModelError> {
        let n = energies.len();
        if n < 2 {
            return Err(ModelError::InvalidModel(format!(
                "at least 2 sites required, got {n}"
            )));
        }
        if couplings.nrows() != n || couplings.ncols() != n {
            return Err(ModelError::InvalidModel(format!(
                "coupling matrix is {}x{}, expected {n}x{n}",
                couplings.nrows(),
                couplings.ncols()
            )));
        }
        if let Some(i) = energies.iter().position(|e| !e.is_finite()) {
            return Err(ModelError::InvalidModel(format!(
                "site energy {i} is not finite"
            )));
        }
        for i in 0..n {
            if couplings[(i, i)] != 0.0 {
                return Err(ModelError::InvalidModel(format!(
                    "coupling diagonal entry ({i},{i}) must be zero"
                )));
            }
            for j in 0..i {
                let (a, b) = (couplings[(i, j)], couplings[(j, i)]);
                if !a.is_finite() || !b.is_finite() {
                    return Err(ModelError::InvalidModel(format!(
                        "coupling ({i},{j}) is not finite"
                    )));
                }
                if (a - b).abs() > 1e-12 * a.abs().max(b.abs()).max(1.0) {
                    return Err(ModelError::InvalidModel(format!(
                        "coupling matrix is not symmetric at ({i},{j}): {a} vs {b}"
                    )));
                }
            }
        }
        if let Some(labels) = &labels {
            if labels.len() != n {
                return Err(ModelError::InvalidModel(format!(
                    "{} labels for {n} sites",
                    labels.len()
                )));
            }
        }
        Ok(Self {
            energies,
            couplings,
            labels,
            preset: None,
        })
    }

    /// Builds a model from an upper-triangle list of `(i, j, J_ij)` couplings.
    pub fn from_pairs(
        energies: Vec<f64>,
        pairs: &[(usize, usize, f64)],
    ) -> Result<Self, ModelError> {
        let n = energies.len();
        let mut couplings = DMatrix::zeros(n, n);
        for &(i, j, value) in pairs {
            if i >= n || j >= n || i == j {
                return Err(ModelError::InvalidModel(format!(
                    "bad coupling pair ({i},{j}) for {n} sites"
                )));
            }
            couplings[(i, j)] = value;
            couplings[(j, i)] = value;
        }
        Self::new(energies, couplings, None)
    }

    /// Number of sites.
    pub fn n_sites(&self) -> usize {
        self.energies.len()
    }

    /// Site energies in cm⁻¹.
    pub fn energies(&self) -> &[f64] {
        &self.energies
    }

    /// Coupling matrix `J` in cm⁻¹.
    pub fn couplings(&self) -> &DMatrix<f64> {
        &self.couplings
    }

    /// Optional site names.
    pub fn labels(&self) -> Option<&[String]> {
        self.labels.as_deref()
    }

    /// Name of the compiled-in preset this model came from, if any.
    pub fn preset_name(&self) -> Option<&'static str> {
        self.preset
    }

    /// Label of site `m`, defaulting to its one-based index.
    pub fn site_label(&self, m: usize) -> String {
        match &self.labels {
            Some(l) => l[m].clone(),
            None => format!("{}", m + 1),
        }
    }

    /// Single-excitation Hamiltonian `H_mn = ε_m δ_mn − J_mn`.
    pub fn hamiltonian(&self) -> DMatrix<f64> {
        let mut h = -&self.couplings;
        for (i, e) in self.energies.iter().enumerate() {
            h[(i, i)] = *e;
        }
        h
    }
}

/// Exciton energies and amplitudes of a diagonalized [`SiteModel`].
#[derive(Debug, Clone, PartialEq)]
pub struct ExcitonBasis {
    energies: Vec<f64>,
    amplitudes: DMatrix<f64>,
}

impl ExcitonBasis {
    /// Wraps precomputed exciton data. Columns of `amplitudes` are the
    /// exciton states in the site basis; `energies` must be ascending.
    pub fn from_parts(energies: Vec<f64>, amplitudes: DMatrix<f64>) -> Result<Self, ModelError> {
        if amplitudes.ncols() != energies.len() || amplitudes.nrows() != energies.len() {
            return Err(ModelError::InvalidModel(String::from(
                "amplitude matrix must be square with one column per exciton",
            )));
        }
        if energies.windows(2).any(|w| w[1] < w[0]) {
            return Err(ModelError::InvalidModel(String::from(
                "exciton energies must be ascending",
            )));
        }
        Ok(Self {
            energies,
            amplitudes,
        })
    }

    /// Number of excitons (equals the number of sites).
    pub fn n_excitons(&self) -> usize {
        self.energies.len()
    }

    /// Number of sites.
    pub fn n_sites(&self) -> usize {
        self.amplitudes.nrows()
    }

    /// Exciton energies `ε_α`, ascending.
    pub fn energies(&self) -> &[f64] {
        &self.energies
    }

    /// Amplitude matrix; column `α` holds `c_m(α)`.
    pub fn amplitudes(&self) -> &DMatrix<f64> {
        &self.amplitudes
    }

    /// Amplitude `c_m(α)`.
    pub fn amplitude(&self, site: usize, alpha: usize) -> f64 {
        self.amplitudes[(site, alpha)]
    }

    /// Site carrying the largest `|c_m(α)|`.
    pub fn dominant_site(&self, alpha: usize) -> usize {
        let col = self.amplitudes.column(alpha);
        let mut best = 0;
        for m in 1..col.len() {
            if col[m].abs() > col[best].abs() {
                best = m;
            }
        }
        best
    }

    /// Exciton whose dominant site is `site`, if exactly one exists.
    pub fn exciton_of_site(&self, site: usize) -> Option<usize> {
        let mut found = None;
        for alpha in 0..self.n_excitons() {
            if self.dominant_site(alpha) == site {
                if found.is_some() {
                    return None;
                }
                found = Some(alpha);
            }
        }
        found
    }

    /// All ordered gaps `(from, to, ε_to − ε_from)` with `from ≠ to`.
    pub fn gaps(&self) -> Vec<(usize, usize, f64)> {
        let n = self.n_excitons();
        let mut out = Vec::with_capacity(n * (n - 1));
        for from in 0..n {
            for to in 0..n {
                if from != to {
                    out.push((from, to, self.energies[to] - self.energies[from]));
                }
            }
        }
        out
    }

    /// `A · diag(ε) · Aᵀ`, which reproduces the site Hamiltonian.
    pub fn reconstruct_hamiltonian(&self) -> DMatrix<f64> {
        let n = self.n_excitons();
        let mut d = DMatrix::zeros(n, n);
        for (i, e) in self.energies.iter().enumerate() {
            d[(i, i)] = *e;
        }
        &self.amplitudes * d * self.amplitudes.transpose()
    }

    /// `I(α, α') = Σ_m |c_m(α)|² |c_m(α')|²`.
    pub fn intensity_factor(&self, alpha: usize, alpha_prime: usize) -> Result<f64, ModelError> {
        let n = self.n_excitons();
        for index in [alpha, alpha_prime] {
            if index >= n {
                return Err(ModelError::IndexOutOfRange { index, len: n });
            }
        }
        Ok((0..self.n_sites())
            .map(|m| {
                let a = self.amplitudes[(m, alpha)];
                let b = self.amplitudes[(m, alpha_prime)];
                a * a * b * b
            })
            .sum())
    }

    /// Interference weights `c_m(α) c_m(α')`, one per site.
    pub fn site_weights(&self, alpha: usize, alpha_prime: usize) -> Vec<f64> {
        (0..self.n_sites())
            .map(|m| self.amplitudes[(m, alpha)] * self.amplitudes[(m, alpha_prime)])
            .collect()
    }

    /// Pairs of excitons with degenerate energies.
    pub fn degenerate_pairs(&self) -> Vec<(usize, usize)> {
        let e = &self.energies;
        let mut out = Vec::new();
        for i in 0..e.len() {
            for j in i + 1..e.len() {
                if (e[j] - e[i]).abs() < DEGENERACY_TOLERANCE {
                    out.push((i, j));
                }
            }
        }
        out
    }
}

impl fmt::Display for ExcitonBasis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (alpha, e) in self.energies.iter().enumerate() {
            writeln!(
                f,
                "a{}: {:>10.4} cm^-1  (site {})",
                alpha + 1,
                e,
                self.dominant_site(alpha) + 1
            )?;
        }
        Ok(())
    }
}

/// Diagonalizes the single-excitation Hamiltonian of `model`.
///
/// Exciton energies come out ascending and each amplitude column is signed so
/// that its largest-magnitude entry is positive. Degenerate exciton energies
/// are an error for presets and a logged warning for user models.
pub fn diagonalize(model: &SiteModel) -> Result<ExcitonBasis, ModelError> {
    let n = model.n_sites();
    let eig = model.hamiltonian().symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));

    let energies: Vec<f64> = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let mut amplitudes = DMatrix::zeros(n, n);
    for (alpha, &k) in order.iter().enumerate() {
        let col = eig.eigenvectors.column(k);
        let mut pivot = 0;
        for m in 1..n {
            if col[m].abs() > col[pivot].abs() {
                pivot = m;
            }
        }
        let sign = if col[pivot] < 0.0 { -1.0 } else { 1.0 };
        let norm = col.norm();
        for m in 0..n {
            amplitudes[(m, alpha)] = sign * col[m] / norm;
        }
    }
    let basis = ExcitonBasis {
        energies,
        amplitudes,
    };

    if let Some(&(i, j)) = basis.degenerate_pairs().first() {
        if model.preset_name().is_some() {
            return Err(ModelError::Degenerate(i, j));
        }
        log::warn!("excitons {i} and {j} are degenerate; secular channel grouping may fail");
    }
    Ok(basis)
}

/// `I(α, α')` of `basis`; see [`ExcitonBasis::intensity_factor`].
pub fn intensity_factor(
    basis: &ExcitonBasis,
    alpha: usize,
    alpha_prime: usize,
) -> Result<f64, ModelError> {
    basis.intensity_factor(alpha, alpha_prime)
}

/// FMO sub-models: sites 1–2, 1–3 or 1–4 of the complex.
pub fn preset(name: &str) -> Result<SiteModel, ModelError> {
    let n = match name {
        "fmo2" => 2,
        "fmo3" => 3,
        "fmo4" => 4,
        _ => {
            return Err(ModelError::UnknownPreset {
                name: String::from(name),
                available: PRESET_NAMES.join(", "),
            })
        }
    };
    const ENERGIES: [f64; 4] = [200.0, 320.0, 0.0, 110.0];
    const PAIRS: [(usize, usize, f64); 6] = [
        (0, 1, -87.7),
        (0, 2, 5.5),
        (1, 2, 30.8),
        (0, 3, -5.9),
        (1, 3, 8.2),
        (2, 3, -53.5),
    ];
    let pairs: Vec<_> = PAIRS.iter().copied().filter(|p| p.1 < n).collect();
    let labels = (1..=n).map(|m| format!("{m}")).collect();
    let mut model = SiteModel::from_pairs(ENERGIES[..n].to_vec(), &pairs)?;
    model.labels = Some(labels);
    model.preset = Some(PRESET_NAMES[n - 2]);
    Ok(model)
}

/// Couplings as nested rows, mainly for serialization.
pub fn couplings_to_rows(model: &SiteModel) -> Vec<Vec<f64>> {
    let n = model.n_sites();
    (0..n)
        .map(|i| (0..n).map(|j| model.couplings()[(i, j)]).collect())
        .collect()
}

/// Coupling matrix from nested rows.
pub fn couplings_from_rows(rows: &[Vec<f64>]) -> Result<DMatrix<f64>, ModelError> {
    let n = rows.len();
    if rows.iter().any(|r| r.len() != n) {
        return Err(ModelError::InvalidModel(String::from(
            "coupling matrix must be square",
        )));
    }
    let mut m = DMatrix::zeros(n, n);
    for (i, row) in rows.iter().enumerate() {
        for (j, v) in row.iter().enumerate() {
            m[(i, j)] = *v;
        }
    }
    Ok(m)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn max_abs(m: &DMatrix<f64>) -> f64 {
        m.iter().fold(0.0, |acc, v| acc.max(v.abs()))
    }

    #[test]
    fn dimer_gap_matches_closed_form() {
        let basis = diagonalize(&preset("fmo2").unwrap()).unwrap();
        let gap = basis.energies()[1] - basis.energies()[0];
        let expected = libm::sqrt(120.0f64 * 120.0 + 4.0 * 87.7 * 87.7);
        assert!((gap - expected).abs() < 1e-10, "{gap} vs {expected}");
        // quoted to two decimals as 212.49; the exact root is 212.52
        assert!((gap - 212.49).abs() < 0.05);
    }

    #[test]
    fn uncoupled_sites_stay_localized() {
        let model = SiteModel::from_pairs(vec![50.0, -10.0, 300.0], &[]).unwrap();
        let basis = diagonalize(&model).unwrap();
        assert_eq!(basis.energies(), &[-10.0, 50.0, 300.0]);
        // ascending order permutes the sites
        let expected = [1, 0, 2];
        for (alpha, &site) in expected.iter().enumerate() {
            for m in 0..3 {
                let want = if m == site { 1.0 } else { 0.0 };
                assert_eq!(basis.amplitude(m, alpha), want);
            }
        }
        assert_eq!(basis.intensity_factor(0, 1).unwrap(), 0.0);
        assert_eq!(basis.intensity_factor(2, 2).unwrap(), 1.0);
    }

    #[test]
    fn trimer_trace_is_520() {
        let basis = diagonalize(&preset("fmo3").unwrap()).unwrap();
        let sum: f64 = basis.energies().iter().sum();
        assert!((sum - 520.0).abs() < 1e-10);
    }

    #[test]
    fn dimer_intensity_factor_from_mixing_angle() {
        let basis = diagonalize(&preset("fmo2").unwrap()).unwrap();
        // sin²(2θ)/2 with tan 2θ = 2J/Δ
        let two_j = 2.0 * 87.7;
        let delta = 120.0;
        let sin2 = two_j * two_j / (two_j * two_j + delta * delta);
        let expected = sin2 / 2.0;
        let got = basis.intensity_factor(0, 1).unwrap();
        assert!((got - expected).abs() < 1e-12);
        assert!((got - 0.3407).abs() < 2e-4);
    }

    #[test]
    fn intensity_index_out_of_range() {
        let basis = diagonalize(&preset("fmo2").unwrap()).unwrap();
        assert_eq!(
            basis.intensity_factor(0, 2),
            Err(ModelError::IndexOutOfRange { index: 2, len: 2 })
        );
    }

    #[test]
    fn preset_values() {
        let m = preset("fmo2").unwrap();
        assert_eq!(m.energies(), &[200.0, 320.0]);
        assert_eq!(m.couplings()[(0, 1)], -87.7);

        let m = preset("fmo4").unwrap();
        assert_eq!(m.energies(), &[200.0, 320.0, 0.0, 110.0]);
        let j = m.couplings();
        assert_eq!(
            [
                j[(0, 1)],
                j[(0, 2)],
                j[(1, 2)],
                j[(0, 3)],
                j[(1, 3)],
                j[(2, 3)]
            ],
            [-87.7, 5.5, 30.8, -5.9, 8.2, -53.5]
        );
        assert_eq!(j[(3, 2)], -53.5);
        assert_eq!(m.preset_name(), Some("fmo4"));
    }

    #[test]
    fn unknown_preset_lists_available() {
        let err = preset("fmo7").unwrap_err();
        assert!(matches!(err, ModelError::UnknownPreset { .. }));
        assert!(format!("{err}").contains("fmo2, fmo3, fmo4"));
    }

    #[test]
    fn rejects_asymmetric_couplings() {
        let mut j = DMatrix::zeros(2, 2);
        j[(0, 1)] = 1.0;
        j[(1, 0)] = 2.0;
        let err = SiteModel::new(vec![0.0, 1.0], j, None).unwrap_err();
        assert!(matches!(err, ModelError::InvalidModel(_)));
    }

    #[test]
    fn rejects_single_site_and_nonzero_diagonal() {
        assert!(SiteModel::new(vec![0.0], DMatrix::zeros(1, 1), None).is_err());
        let mut j = DMatrix::zeros(2, 2);
        j[(0, 0)] = 1.0;
        assert!(SiteModel::new(vec![0.0, 1.0], j, None).is_err());
    }

    #[test]
    fn hamiltonian_uses_minus_j() {
        let h = preset("fmo2").unwrap().hamiltonian();
        assert_eq!(h[(0, 1)], 87.7);
        assert_eq!(h[(0, 0)], 200.0);
    }

    #[test]
    fn presets_reconstruct_and_are_orthonormal() {
        for name in PRESET_NAMES {
            let model = preset(name).unwrap();
            let basis = diagonalize(&model).unwrap();
            let a = basis.amplitudes();
            let n = basis.n_excitons();
            let gram = a.transpose() * a - DMatrix::<f64>::identity(n, n);
            assert!(max_abs(&gram) < 1e-10, "{name}");
            let diff = basis.reconstruct_hamiltonian() - model.hamiltonian();
            assert!(max_abs(&diff) < 1e-8, "{name}");
            for alpha in 0..n {
                let col = a.column(alpha);
                let pivot = col.iamax();
                assert!(col[pivot] > 0.0);
            }
        }
    }

    #[test]
    fn fmo3_excitons_are_site_assignable() {
        let basis = diagonalize(&preset("fmo3").unwrap()).unwrap();
        // lowest exciton lives on site 3, then sites 1 and 2
        assert_eq!(basis.dominant_site(0), 2);
        assert_eq!(basis.dominant_site(1), 0);
        assert_eq!(basis.dominant_site(2), 1);
        assert_eq!(basis.exciton_of_site(1), Some(2));
    }

    #[test]
    fn degenerate_user_model_warns_but_preset_path_errors() {
        let model = SiteModel::from_pairs(vec![10.0, 10.0], &[]).unwrap();
        let basis = diagonalize(&model).unwrap();
        assert_eq!(basis.degenerate_pairs(), vec![(0, 1)]);
        let mut flagged = model.clone();
        flagged.preset = Some("fmo2");
        assert_eq!(diagonalize(&flagged), Err(ModelError::Degenerate(0, 1)));
    }
}
