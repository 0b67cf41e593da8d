//! Secular Lindblad generator, jump channels and the `s`-tilted generator.
//!
//! Every ordered exciton pair `(α → α')` is one transport channel with jump
//! operators `A_m = c_m(α) c_m(α') |α'⟩⟨α|` (one per site `m`, independent
//! identical baths) and rate `γ(ε_α' − ε_α) · I(α, α')`. Pure dephasing uses
//! `A_m(0) = Σ_α c_m(α)² |α⟩⟨α|` with `γ(0)`. Counted transport channels
//! carry `e^{−s}` on their sandwich term `A σ A†` only.
//!
//! Density operators are vectorized by column stacking: `σ_ij` sits at
//! index `i + N j`, so `vec(A σ B) = (Bᵀ ⊗ A) vec(σ)`.

use alloc::{format, string::String, vec, vec::Vec};
use core::fmt;
use core::str::FromStr;

use nalgebra::{DMatrix, DVector, Matrix2};
use num_complex::Complex64;
use thiserror::Error;

use crate::bath::BathSpec;
use crate::model::{ExcitonBasis, DEGENERACY_TOLERANCE};

/// Errors raised while enumerating channels or assembling generators.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeneratorError {
    /// Two transitions share a gap, which breaks the secular grouping.
    #[error("degenerate transition gaps: {0}")]
    DegenerateGaps(String),
    /// No channel is counted.
    #[error("counted channel set is empty")]
    EmptyCountedSet,
    /// A selector does not resolve to a transport channel.
    #[error("channel selector `{selector}` does not match any transport channel: {reason}")]
    UnresolvedSelector {
        /// Selector text.
        selector: String,
        /// Why it failed.
        reason: String,
    },
    /// Selector text could not be parsed.
    #[error("cannot parse channel selector `{0}`; expected down:aI->aJ, up:aI->aJ, pair:aI<->aJ or all-down")]
    BadSelector(String),
    /// Rates of the classical two-state model must be positive.
    #[error("two-state rates must be positive and finite (kappa = {kappa}, gamma = {gamma})")]
    NonPositiveRate {
        /// Upward rate.
        kappa: f64,
        /// Downward rate.
        gamma: f64,
    },
}

/// One dissipative transition between exciton states.
///
/// Transport channels have `from ≠ to`; the pure-dephasing group is stored as
/// one entry per exciton with `from == to` and `omega == 0`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct JumpChannel {
    /// Initial exciton.
    pub from: usize,
    /// Final exciton.
    pub to: usize,
    /// `ε_to − ε_from` in cm⁻¹ (bath sign convention).
    pub omega: f64,
    /// Bath factor `γ(ω)`, cm⁻¹.
    pub bath_factor: f64,
    /// Intensity factor `I(from, to)`.
    pub intensity: f64,
    /// `γ(ω) · I(from, to)`, cm⁻¹.
    pub rate: f64,
    /// Exciton interference `c_m(from) c_m(to)` per site.
    pub site_weights: Vec<f64>,
    /// Whether jumps through this channel are counted.
    pub counted: bool,
}

impl JumpChannel {
    /// Bare population-transfer channel with a given rate, used by toy
    /// rate models that have no microscopic origin.
    pub fn classical(from: usize, to: usize, rate: f64, counted: bool) -> Self {
        Self {
            from,
            to,
            omega: 0.0,
            bath_factor: rate,
            intensity: 1.0,
            rate,
            site_weights: Vec::new(),
            counted,
        }
    }

    /// Pure-dephasing entry (`from == to`).
    pub fn is_dephasing(&self) -> bool {
        self.from == self.to
    }

    /// Transport towards a lower exciton.
    pub fn is_downward(&self) -> bool {
        !self.is_dephasing() && self.to < self.from
    }

    /// Selector text naming this channel, e.g. `down:a3->a2`.
    pub fn label(&self) -> String {
        let dir = if self.is_downward() { "down" } else { "up" };
        format!("{dir}:a{}->a{}", self.from + 1, self.to + 1)
    }
}

/// Chooses which transport channels are counted.
///
/// Exciton indices are one-based in text form (`a1` is the lowest exciton).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ChannelSelector {
    /// One directed channel `from → to` (zero-based).
    Directed {
        /// Initial exciton.
        from: usize,
        /// Final exciton.
        to: usize,
    },
    /// Both directions between two excitons (zero-based).
    Pair(usize, usize),
    /// Every downward transport channel.
    AllDown,
}

impl ChannelSelector {
    /// Downward channel between one-based exciton labels.
    pub fn down(from_label: usize, to_label: usize) -> Self {
        Self::Directed {
            from: from_label - 1,
            to: to_label - 1,
        }
    }

    /// Indices into `channels` selected by `self`.
    pub fn resolve(&self, channels: &[JumpChannel]) -> Result<Vec<usize>, GeneratorError> {
        let fail = |reason: &str| GeneratorError::UnresolvedSelector {
            selector: format!("{self}"),
            reason: String::from(reason),
        };
        let hits: Vec<usize> = channels
            .iter()
            .enumerate()
            .filter(|(_, c)| !c.is_dephasing())
            .filter(|(_, c)| match *self {
                Self::Directed { from, to } => c.from == from && c.to == to,
                Self::Pair(a, b) => (c.from == a && c.to == b) || (c.from == b && c.to == a),
                Self::AllDown => c.is_downward(),
            })
            .map(|(i, _)| i)
            .collect();
        match *self {
            Self::Directed { from, to } if from == to => {
                Err(fail("dephasing channels are not countable"))
            }
            Self::Pair(a, b) if a == b => Err(fail("dephasing channels are not countable")),
            _ if hits.is_empty() => Err(fail("no such exciton pair")),
            _ => Ok(hits),
        }
    }
}

impl fmt::Display for ChannelSelector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Self::Directed { from, to } => {
                let dir = if to < from { "down" } else { "up" };
                write!(f, "{dir}:a{}->a{}", from + 1, to + 1)
            }
            Self::Pair(a, b) => write!(f, "pair:a{}<->a{}", a + 1, b + 1),
            Self::AllDown => f.write_str("all-down"),
        }
    }
}

fn parse_exciton(token: &str) -> Option<usize> {
    let t = token.trim();
    let t = t
        .strip_prefix('a')
        .or_else(|| t.strip_prefix('α'))
        .unwrap_or(t);
    match t.parse::<usize>() {
        Ok(k) if k >= 1 => Some(k - 1),
        _ => None,
    }
}

impl FromStr for ChannelSelector {
    type Err = GeneratorError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || GeneratorError::BadSelector(String::from(s));
        let text = s.trim();
        if text == "all-down" {
            return Ok(Self::AllDown);
        }
        let (kind, rest) = text.split_once(':').ok_or_else(bad)?;
        match kind {
            "down" | "up" => {
                let (a, b) = rest.split_once("->").ok_or_else(bad)?;
                let from = parse_exciton(a).ok_or_else(bad)?;
                let to = parse_exciton(b).ok_or_else(bad)?;
                let downward = to < from;
                if from == to || downward != (kind == "down") {
                    return Err(bad());
                }
                Ok(Self::Directed { from, to })
            }
            "pair" => {
                let (a, b) = rest.split_once("<->").ok_or_else(bad)?;
                let a = parse_exciton(a).ok_or_else(bad)?;
                let b = parse_exciton(b).ok_or_else(bad)?;
                if a == b {
                    return Err(bad());
                }
                Ok(Self::Pair(a.min(b), a.max(b)))
            }
            _ => Err(bad()),
        }
    }
}

/// Transport channels for every ordered exciton pair followed by one
/// dephasing entry per exciton. Nothing is counted yet.
pub fn enumerate_channels(
    basis: &ExcitonBasis,
    bath: &BathSpec,
) -> Result<Vec<JumpChannel>, GeneratorError> {
    let gaps = basis.gaps();
    let mut collisions = Vec::new();
    for (i, &(f1, t1, w1)) in gaps.iter().enumerate() {
        if w1.abs() < DEGENERACY_TOLERANCE {
            collisions.push(format!("a{}->a{} has zero gap", f1 + 1, t1 + 1));
        }
        for &(f2, t2, w2) in &gaps[i + 1..] {
            if (w1 - w2).abs() < DEGENERACY_TOLERANCE {
                collisions.push(format!(
                    "a{}->a{} and a{}->a{} share gap {w1:.6}",
                    f1 + 1,
                    t1 + 1,
                    f2 + 1,
                    t2 + 1
                ));
            }
        }
    }
    if !collisions.is_empty() {
        return Err(GeneratorError::DegenerateGaps(collisions.join("; ")));
    }

    let n = basis.n_excitons();
    let mut channels = Vec::with_capacity(n * n);
    for (from, to, omega) in gaps {
        let bath_factor = bath.gamma(omega);
        let intensity = basis
            .intensity_factor(from, to)
            .expect("gap indices are in range");
        channels.push(JumpChannel {
            from,
            to,
            omega,
            bath_factor,
            intensity,
            rate: bath_factor * intensity,
            site_weights: basis.site_weights(from, to),
            counted: false,
        });
    }
    let g0 = bath.gamma_zero();
    for alpha in 0..n {
        let intensity = basis.intensity_factor(alpha, alpha).expect("in range");
        channels.push(JumpChannel {
            from: alpha,
            to: alpha,
            omega: 0.0,
            bath_factor: g0,
            intensity,
            rate: g0 * intensity,
            site_weights: basis.site_weights(alpha, alpha),
            counted: false,
        });
    }
    Ok(channels)
}

/// Anything with a tilted classical rate matrix over exciton populations.
///
/// Column `j` of [`population_block`](Self::population_block) holds the
/// rates out of state `j`; counted off-diagonal entries carry `e^{−s}`.
pub trait CountingGenerator {
    /// Number of population states.
    fn n_states(&self) -> usize;
    /// Tilted rate matrix at `s`.
    fn population_block(&self, s: f64) -> DMatrix<f64>;
    /// Entrywise `∂/∂s` of [`population_block`](Self::population_block).
    fn population_block_derivative(&self, s: f64) -> DMatrix<f64> {
        let mut d = self.population_block(s);
        let counted = self.counted_mask();
        for j in 0..d.ncols() {
            for i in 0..d.nrows() {
                d[(i, j)] = if counted[(i, j)] { -d[(i, j)] } else { 0.0 };
            }
        }
        d
    }
    /// `true` where the block entry `(to, from)` belongs to a counted channel.
    fn counted_mask(&self) -> DMatrix<bool>;
}

/// Counted secular Lindblad generator `W_s` for one exciton model and bath.
#[derive(Debug, Clone, PartialEq)]
pub struct TiltedGenerator {
    energies: Vec<f64>,
    channels: Vec<JumpChannel>,
    temperature: f64,
}

impl TiltedGenerator {
    /// Enumerates channels of `basis` under `bath` and marks those picked by
    /// `counted`.
    pub fn new(
        basis: &ExcitonBasis,
        bath: &BathSpec,
        counted: &[ChannelSelector],
    ) -> Result<Self, GeneratorError> {
        let mut channels = enumerate_channels(basis, bath)?;
        if counted.is_empty() {
            return Err(GeneratorError::EmptyCountedSet);
        }
        for sel in counted {
            for idx in sel.resolve(&channels)? {
                channels[idx].counted = true;
            }
        }
        Ok(Self {
            energies: basis.energies().to_vec(),
            channels,
            temperature: bath.temperature(),
        })
    }

    /// Number of excitons `N`.
    pub fn n_excitons(&self) -> usize {
        self.energies.len()
    }

    /// Dimension `N²` of the vectorized density-operator space.
    pub fn dimension(&self) -> usize {
        self.n_excitons() * self.n_excitons()
    }

    /// Exciton energies.
    pub fn energies(&self) -> &[f64] {
        &self.energies
    }

    /// Bath temperature in K.
    pub fn temperature(&self) -> f64 {
        self.temperature
    }

    /// All channels, transport first then dephasing.
    pub fn channels(&self) -> &[JumpChannel] {
        &self.channels
    }

    /// Counted channels.
    pub fn counted_channels(&self) -> impl Iterator<Item = &JumpChannel> {
        self.channels.iter().filter(|c| c.counted)
    }

    /// Transport channel `from → to`.
    pub fn channel(&self, from: usize, to: usize) -> Option<&JumpChannel> {
        self.channels
            .iter()
            .find(|c| !c.is_dephasing() && c.from == from && c.to == to)
    }

    /// Full `W_s` on the `N²`-dimensional column-stacked space.
    pub fn assemble(&self, s: f64) -> DMatrix<Complex64> {
        self.assemble_with_weight(libm::exp(-s))
    }

    /// `W_s` with the counted sandwich terms scaled by `weight` instead of
    /// `e^{−s}`; `weight = 0` deletes them.
    pub fn assemble_with_weight(&self, weight: f64) -> DMatrix<Complex64> {
        let n = self.n_excitons();
        let d = n * n;
        let mut l = DMatrix::from_element(d, d, Complex64::new(0.0, 0.0));
        let idx = |i: usize, j: usize| i + n * j;

        // −i[H, σ] with H diagonal in the exciton basis
        for i in 0..n {
            for j in 0..n {
                let k = idx(i, j);
                l[(k, k)] += Complex64::new(0.0, -(self.energies[i] - self.energies[j]));
            }
        }

        let n_sites = self
            .channels
            .iter()
            .map(|c| c.site_weights.len())
            .max()
            .unwrap_or(0);
        let mut op = DMatrix::<f64>::zeros(n, n);
        for c in self.channels.iter().filter(|c| !c.is_dephasing()) {
            let sandwich = if c.counted { weight } else { 1.0 };
            for &w in &c.site_weights {
                op.fill(0.0);
                op[(c.to, c.from)] = w;
                add_dissipator(&mut l, &op, c.bath_factor, sandwich);
            }
            if c.site_weights.is_empty() {
                op.fill(0.0);
                op[(c.to, c.from)] = 1.0;
                add_dissipator(&mut l, &op, c.rate, sandwich);
            }
        }
        // A_m(0) = Σ_α c_m(α)² |α⟩⟨α| shares one γ(0) across excitons
        for m in 0..n_sites {
            op.fill(0.0);
            let mut g0 = 0.0;
            for c in self.channels.iter().filter(|c| c.is_dephasing()) {
                op[(c.from, c.from)] = c.site_weights[m];
                g0 = c.bath_factor;
            }
            add_dissipator(&mut l, &op, g0, 1.0);
        }
        l
    }

    /// Max-norm of `⟨⟨1| W_s`, the trace functional applied from the left.
    pub fn trace_residual(&self, s: f64) -> f64 {
        let n = self.n_excitons();
        let l = self.assemble(s);
        (0..l.ncols())
            .map(|col| {
                let sum: Complex64 = (0..n).map(|i| l[(i + n * i, col)]).sum();
                sum.norm()
            })
            .fold(0.0, f64::max)
    }

    /// Stationary density operator of `W_0`, solved as a linear system with
    /// one equation replaced by `Tr σ = 1`.
    pub fn stationary_density(&self) -> Option<DMatrix<Complex64>> {
        let n = self.n_excitons();
        let mut l = self.assemble(0.0);
        let d = n * n;
        let row = 0;
        for col in 0..d {
            l[(row, col)] = Complex64::new(0.0, 0.0);
        }
        for i in 0..n {
            l[(row, i + n * i)] = Complex64::new(1.0, 0.0);
        }
        let mut rhs = DVector::from_element(d, Complex64::new(0.0, 0.0));
        rhs[row] = Complex64::new(1.0, 0.0);
        let v = l.lu().solve(&rhs)?;
        Some(DMatrix::from_fn(n, n, |i, j| v[i + n * j]))
    }

    /// Boltzmann populations `e^{−βε_α}/Z`.
    pub fn boltzmann_populations(&self) -> Vec<f64> {
        let beta = 1.0 / (crate::units::BOLTZMANN_CM1_PER_K * self.temperature);
        let e0 = self.energies[0];
        let w: Vec<f64> = self
            .energies
            .iter()
            .map(|e| libm::exp(-beta * (e - e0)))
            .collect();
        let z: f64 = w.iter().sum();
        w.into_iter().map(|x| x / z).collect()
    }
}

// L += rate · [weight · A ⊗ A − ½(I ⊗ AᵀA + (AᵀA)ᵀ ⊗ I)] for real A
fn add_dissipator(l: &mut DMatrix<Complex64>, a: &DMatrix<f64>, rate: f64, weight: f64) {
    let n = a.nrows();
    let idx = |i: usize, j: usize| i + n * j;
    let nz: Vec<(usize, usize, f64)> = (0..n)
        .flat_map(|j| (0..n).map(move |i| (i, j)))
        .filter_map(|(i, j)| {
            let v = a[(i, j)];
            (v != 0.0).then_some((i, j, v))
        })
        .collect();
    if nz.is_empty() || rate == 0.0 {
        return;
    }
    // vec(A σ Aᵀ)_{ab} = Σ_{cd} A_ac A_bd σ_cd
    if weight != 0.0 {
        for &(a_row, c, v1) in &nz {
            for &(b_row, dcol, v2) in &nz {
                l[(idx(a_row, b_row), idx(c, dcol))] +=
                    Complex64::new(rate * weight * v1 * v2, 0.0);
            }
        }
    }
    let ata = a.transpose() * a;
    for x in 0..n {
        for y in 0..n {
            let v = ata[(x, y)];
            if v == 0.0 {
                continue;
            }
            let h = Complex64::new(-0.5 * rate * v, 0.0);
            // (AᵀA σ)_{x b} ← σ_{y b}
            for b in 0..n {
                l[(idx(x, b), idx(y, b))] += h;
            }
            // (σ AᵀA)_{a y} ← σ_{a x}
            for a_row in 0..n {
                l[(idx(a_row, y), idx(a_row, x))] += h;
            }
        }
    }
}

impl CountingGenerator for TiltedGenerator {
    fn n_states(&self) -> usize {
        self.n_excitons()
    }

    fn population_block(&self, s: f64) -> DMatrix<f64> {
        let n = self.n_excitons();
        let tilt = libm::exp(-s);
        let mut w = DMatrix::zeros(n, n);
        for c in self.channels.iter().filter(|c| !c.is_dephasing()) {
            w[(c.to, c.from)] += if c.counted { c.rate * tilt } else { c.rate };
            w[(c.from, c.from)] -= c.rate;
        }
        w
    }

    fn counted_mask(&self) -> DMatrix<bool> {
        let n = self.n_excitons();
        let mut m = DMatrix::from_element(n, n, false);
        for c in self.counted_channels() {
            m[(c.to, c.from)] = true;
        }
        m
    }
}

/// Full tilted generator `W_s` for `basis`, `bath` and the counted set.
pub fn build_tilted(
    basis: &ExcitonBasis,
    bath: &BathSpec,
    counted: &[ChannelSelector],
    s: f64,
) -> Result<DMatrix<Complex64>, GeneratorError> {
    Ok(TiltedGenerator::new(basis, bath, counted)?.assemble(s))
}

/// Tilted classical rate matrix over exciton populations.
pub fn population_block(
    basis: &ExcitonBasis,
    bath: &BathSpec,
    counted: &[ChannelSelector],
    s: f64,
) -> Result<DMatrix<f64>, GeneratorError> {
    Ok(TiltedGenerator::new(basis, bath, counted)?.population_block(s))
}

/// Two-state rate model with upward rate `κ` and counted downward rate `Γ`:
/// `W(s) = [[−κ, Γe^{−s}], [κ, −Γ]]` over (lower, upper).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassicalTwoState {
    kappa: f64,
    gamma: f64,
}

impl ClassicalTwoState {
    /// `kappa` up, `gamma` down; both positive.
    pub fn new(kappa: f64, gamma: f64) -> Result<Self, GeneratorError> {
        if !(kappa > 0.0 && gamma > 0.0 && kappa.is_finite() && gamma.is_finite()) {
            return Err(GeneratorError::NonPositiveRate { kappa, gamma });
        }
        Ok(Self { kappa, gamma })
    }

    /// Rates read off the `lower ↔ upper` channels of a generator.
    pub fn from_generator(
        generator: &TiltedGenerator,
        lower: usize,
        upper: usize,
    ) -> Result<Self, GeneratorError> {
        let missing = |f: usize, t: usize| GeneratorError::UnresolvedSelector {
            selector: format!("a{}->a{}", f + 1, t + 1),
            reason: String::from("no such channel"),
        };
        let up = generator
            .channel(lower, upper)
            .ok_or_else(|| missing(lower, upper))?;
        let down = generator
            .channel(upper, lower)
            .ok_or_else(|| missing(upper, lower))?;
        Self::new(up.rate, down.rate)
    }

    /// Upward rate `κ`.
    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    /// Downward rate `Γ`.
    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    /// `W_class(s)`.
    pub fn matrix(&self, s: f64) -> Matrix2<f64> {
        let (k, g) = (self.kappa, self.gamma);
        Matrix2::new(-k, g * libm::exp(-s), k, -g)
    }

    /// Closed-form largest eigenvalue of [`matrix`](Self::matrix).
    pub fn theta(&self, s: f64) -> f64 {
        let (k, g) = (self.kappa, self.gamma);
        let disc = (k - g) * (k - g) + 4.0 * k * g * libm::exp(-s);
        0.5 * (-(k + g) + libm::sqrt(disc))
    }

    /// `Q(s) = −2κΓe^{−s} / [(κ+Γ)² − 4κΓ(1 − e^{−s})]`.
    pub fn mandel(&self, s: f64) -> f64 {
        let (k, g) = (self.kappa, self.gamma);
        let e = libm::exp(-s);
        -2.0 * k * g * e / ((k + g) * (k + g) - 4.0 * k * g * (1.0 - e))
    }

    /// Up and counted-down channels for the trajectory simulator.
    pub fn channels(&self) -> Vec<JumpChannel> {
        vec![
            JumpChannel::classical(0, 1, self.kappa, false),
            JumpChannel::classical(1, 0, self.gamma, true),
        ]
    }
}

impl CountingGenerator for ClassicalTwoState {
    fn n_states(&self) -> usize {
        2
    }

    fn population_block(&self, s: f64) -> DMatrix<f64> {
        let m = self.matrix(s);
        DMatrix::from_fn(2, 2, |i, j| m[(i, j)])
    }

    fn counted_mask(&self) -> DMatrix<bool> {
        DMatrix::from_row_slice(2, 2, &[false, true, false, false])
    }
}

/// `W_class(s)` for rates `kappa` (up) and `gamma` (down, counted).
pub fn classical_two_state(kappa: f64, gamma: f64, s: f64) -> Result<Matrix2<f64>, GeneratorError> {
    Ok(ClassicalTwoState::new(kappa, gamma)?.matrix(s))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{diagonalize, preset, SiteModel};

    fn generator(name: &str, t: f64, sel: &str) -> TiltedGenerator {
        let basis = diagonalize(&preset(name).unwrap()).unwrap();
        let bath = BathSpec::fmo(t).unwrap();
        TiltedGenerator::new(&basis, &bath, &[sel.parse().unwrap()]).unwrap()
    }

    #[test]
    fn selector_round_trip_and_errors() {
        for text in ["down:a2->a1", "up:a1->a3", "pair:a1<->a2", "all-down"] {
            let sel: ChannelSelector = text.parse().unwrap();
            assert_eq!(format!("{sel}"), text);
        }
        assert_eq!(
            "down:α3->α2".parse::<ChannelSelector>().unwrap(),
            ChannelSelector::down(3, 2)
        );
        for bad in [
            "down:a1->a2",
            "up:a2->a1",
            "pair:a1<->a1",
            "sideways:a1->a2",
            "down:a0->a1",
            "",
        ] {
            assert!(bad.parse::<ChannelSelector>().is_err(), "{bad}");
        }
    }

    #[test]
    fn dimer_channels_compose_bath_and_intensity() {
        let basis = diagonalize(&preset("fmo2").unwrap()).unwrap();
        let bath = BathSpec::fmo(300.0).unwrap();
        let channels = enumerate_channels(&basis, &bath).unwrap();
        let transport: Vec<_> = channels.iter().filter(|c| !c.is_dephasing()).collect();
        assert_eq!(transport.len(), 2);
        let gap = basis.energies()[1] - basis.energies()[0];
        let i12 = basis.intensity_factor(0, 1).unwrap();
        let down = transport.iter().find(|c| c.is_downward()).unwrap();
        let up = transport.iter().find(|c| !c.is_downward()).unwrap();
        assert!((down.rate - bath.gamma(-gap) * i12).abs() < 1e-12 * down.rate);
        assert!((up.rate - down.rate * libm::exp(-gap * bath.beta())).abs() < 1e-12 * up.rate);
    }

    #[test]
    fn uncoupled_model_has_zero_transport_rates() {
        let model = SiteModel::from_pairs(vec![0.0, 100.0, 250.0], &[]).unwrap();
        let basis = diagonalize(&model).unwrap();
        let channels = enumerate_channels(&basis, &BathSpec::fmo(300.0).unwrap()).unwrap();
        assert!(channels
            .iter()
            .filter(|c| !c.is_dephasing())
            .all(|c| c.rate == 0.0));
    }

    #[test]
    fn degenerate_gaps_are_rejected() {
        let model = SiteModel::from_pairs(vec![0.0, 100.0, 200.0], &[]).unwrap();
        let basis = diagonalize(&model).unwrap();
        let err = enumerate_channels(&basis, &BathSpec::fmo(300.0).unwrap()).unwrap_err();
        match err {
            GeneratorError::DegenerateGaps(msg) => assert!(msg.contains("a1->a2"), "{msg}"),
            e => panic!("{e:?}"),
        }
    }

    // brute force over all exciton pairs of the trimer
    #[test]
    fn trimer_largest_intensity_is_site_one_two_pair() {
        let basis = diagonalize(&preset("fmo3").unwrap()).unwrap();
        let channels = enumerate_channels(&basis, &BathSpec::fmo(300.0).unwrap()).unwrap();
        assert_eq!(channels.iter().filter(|c| !c.is_dephasing()).count(), 6);
        let mut best = (0, 0, -1.0);
        for a in 0..3 {
            for b in 0..3 {
                if a != b {
                    let i = basis.intensity_factor(a, b).unwrap();
                    if i > best.2 {
                        best = (a, b, i);
                    }
                }
            }
        }
        let mut sites = [basis.dominant_site(best.0), basis.dominant_site(best.1)];
        sites.sort();
        assert_eq!(sites, [0, 1]);
    }

    #[test]
    fn empty_counted_set_is_an_error() {
        let basis = diagonalize(&preset("fmo2").unwrap()).unwrap();
        let bath = BathSpec::fmo(300.0).unwrap();
        assert_eq!(
            TiltedGenerator::new(&basis, &bath, &[]).unwrap_err(),
            GeneratorError::EmptyCountedSet
        );
        let err = TiltedGenerator::new(&basis, &bath, &[ChannelSelector::down(3, 1)]).unwrap_err();
        assert!(matches!(err, GeneratorError::UnresolvedSelector { .. }));
    }

    #[test]
    fn tilt_at_zero_is_untilted_generator() {
        let g = generator("fmo3", 300.0, "down:a3->a2");
        let basis = diagonalize(&preset("fmo3").unwrap()).unwrap();
        let bath = BathSpec::fmo(300.0).unwrap();
        let other = TiltedGenerator::new(&basis, &bath, &[ChannelSelector::AllDown]).unwrap();
        assert_eq!(g.assemble(0.0), other.assemble(0.0));
        assert!(g.trace_residual(0.0) < 1e-10);
    }

    #[test]
    fn tilt_touches_only_counted_sandwich_entries() {
        let g = generator("fmo3", 300.0, "down:a3->a2");
        let n = 3;
        let diff = g.assemble(0.7) - g.assemble(0.0);
        let c = g.channel(2, 1).unwrap();
        for col in 0..n * n {
            for row in 0..n * n {
                let v = diff[(row, col)].norm();
                if row == 1 + n && col == 2 + n * 2 {
                    let want = c.rate * (libm::exp(-0.7) - 1.0);
                    assert!((diff[(row, col)].re - want).abs() < 1e-12);
                } else {
                    assert_eq!(v, 0.0, "({row},{col})");
                }
            }
        }
    }

    #[test]
    fn population_block_is_stochastic_at_zero() {
        let g = generator("fmo4", 150.0, "all-down");
        let w = g.population_block(0.0);
        for j in 0..4 {
            let sum: f64 = w.column(j).iter().sum();
            assert!(sum.abs() < 1e-12);
        }
    }

    #[test]
    fn dimer_block_matches_two_state_matrix() {
        let g = generator("fmo2", 300.0, "down:a2->a1");
        let two = ClassicalTwoState::from_generator(&g, 0, 1).unwrap();
        for s in [-2.0, 0.0, 1.3, 12.0] {
            let w = g.population_block(s);
            let m = two.matrix(s);
            for i in 0..2 {
                for j in 0..2 {
                    assert!((w[(i, j)] - m[(i, j)]).abs() < 1e-13);
                }
            }
        }
        // eigenvalues {0, −(κ+Γ)} at s = 0 from trace and determinant
        let w = g.population_block(0.0);
        let tr = w.trace();
        let det = w.determinant();
        assert!((tr + two.kappa() + two.gamma()).abs() < 1e-12);
        assert!(det.abs() < 1e-10);
    }

    #[test]
    fn two_state_matrix_and_errors() {
        let m = classical_two_state(2.0, 3.0, 0.0).unwrap();
        assert_eq!(m, Matrix2::new(-2.0, 3.0, 2.0, -3.0));
        assert_eq!(m[(0, 0)] + m[(1, 0)], 0.0);
        assert!(classical_two_state(0.0, 1.0, 0.0).is_err());
        assert!(classical_two_state(1.0, -1.0, 0.0).is_err());
    }

    #[test]
    fn two_state_closed_forms() {
        let k = 1.7;
        let two = ClassicalTwoState::new(k, k).unwrap();
        for s in [-1.0, 0.0, 1.0, 3.0] {
            assert!((two.theta(s) - (-k + k * libm::exp(-s / 2.0))).abs() < 1e-14);
        }
        assert!((two.mandel(0.0) + 0.5).abs() < 1e-15);
    }

    #[test]
    fn stationary_density_is_boltzmann_and_diagonal() {
        let g = generator("fmo3", 150.0, "down:a3->a2");
        let rho = g.stationary_density().unwrap();
        let p = g.boltzmann_populations();
        for i in 0..3 {
            assert!((rho[(i, i)].re - p[i]).abs() < 1e-8);
            for j in 0..3 {
                if i != j {
                    assert!(rho[(i, j)].norm() < 1e-8);
                }
            }
        }
    }
}
