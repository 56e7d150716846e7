//! Sensitivity and cost measures for RQPE circuits.

use std::f64::consts::PI;
use std::fmt::Write as _;

use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive};
use rayon::prelude::*;
use serde::Serialize;

use crate::circuit::Circuit;
use crate::error::{Error, Result};
use crate::exactmath::Rational;
use crate::simulator::{outcome_distribution, OutcomeDistribution, Theta};

/// Outcome probabilities below this make the finite-difference CFI unstable.
pub const MIN_CFI_PROBABILITY: f64 = 1e-6;

/// `sqrt(½ Σ_k (P_a(k) − P_b(k))²)`, in `[0, 1]`.
pub fn distance_between(a: &OutcomeDistribution, b: &OutcomeDistribution) -> f64 {
    let sum: f64 = a
        .probabilities
        .iter()
        .zip(&b.probabilities)
        .map(|(p, q)| (p - q) * (p - q))
        .sum();
    (0.5 * sum).sqrt()
}

/// Distance between the outcome distributions at two phases.
pub fn distance(circuit: &Circuit, theta_a: &Theta, theta_b: &Theta) -> Result<f64> {
    let a = outcome_distribution(circuit, theta_a)?;
    let b = outcome_distribution(circuit, theta_b)?;
    Ok(distance_between(&a, &b))
}

/// Pairwise distances on `θ_i = 2πi/N`.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceGrid {
    pub thetas: Vec<f64>,
    /// Row-major `N × N`.
    pub values: Vec<f64>,
}

impl DistanceGrid {
    pub fn size(&self) -> usize {
        self.thetas.len()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.size() + j]
    }

    /// First row and column hold the phases in radians.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("theta");
        for t in &self.thetas {
            let _ = write!(out, ",{t:.12}");
        }
        out.push('\n');
        for (i, t) in self.thetas.iter().enumerate() {
            let _ = write!(out, "{t:.12}");
            for j in 0..self.size() {
                let _ = write!(out, ",{:.12}", self.get(i, j));
            }
            out.push('\n');
        }
        out
    }
}

/// Distance matrix on `grid_points` phases evenly covering `[0, 2π)`.
/// Grid phases are exact multiples of π, so in-scope phases land on nodes.
pub fn distance_grid(circuit: &Circuit, grid_points: usize) -> Result<DistanceGrid> {
    if grid_points < 2 {
        return Err(Error::InvalidArgument(
            "grid_points must be at least 2".into(),
        ));
    }
    let n = grid_points as i64;
    let dists = (0..n)
        .into_par_iter()
        .map(|i| outcome_distribution(circuit, &Theta::PiMultiple(Rational::new(2 * i, n))))
        .collect::<Result<Vec<_>>>()?;
    let values: Vec<f64> = (0..grid_points * grid_points)
        .into_par_iter()
        .map(|idx| {
            let (i, j) = (idx / grid_points, idx % grid_points);
            let (i, j) = (i.min(j), i.max(j));
            if i == j {
                0.0
            } else {
                distance_between(&dists[i], &dists[j])
            }
        })
        .collect();
    Ok(DistanceGrid {
        thetas: dists.iter().map(|d| d.theta).collect(),
        values,
    })
}

/// `Σ_j u_j²` over the lines present in the circuit.
pub fn cfi_closed_form(circuit: &Circuit) -> f64 {
    circuit.lines().iter().map(|l| l.u.to_f64().powi(2)).sum()
}

/// `Σ_k (∂_θ P_k)² / P_k` by central differences of width `step`.
pub fn cfi_numeric(circuit: &Circuit, theta: f64, step: f64) -> Result<f64> {
    if !(step > 0.0 && step <= 1e-3) {
        return Err(Error::InvalidArgument(format!(
            "step must lie in (0, 1e-3], got {step}"
        )));
    }
    let at = outcome_distribution(circuit, &Theta::Radians(theta))?;
    if let Some(&p) = at.probabilities.iter().find(|&&p| p < MIN_CFI_PROBABILITY) {
        return Err(Error::NearZeroProbability(p));
    }
    let plus = outcome_distribution(circuit, &Theta::Radians(theta + step))?;
    let minus = outcome_distribution(circuit, &Theta::Radians(theta - step))?;
    Ok(at
        .probabilities
        .iter()
        .zip(plus.probabilities.iter().zip(&minus.probabilities))
        .map(|(p, (hi, lo))| {
            let deriv = (hi - lo) / (2.0 * step);
            deriv * deriv / p
        })
        .sum())
}

/// How the Cramér–Rao bound is written.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CrbForm {
    /// `1 / (R I)`, the variance bound.
    #[default]
    Variance,
    /// `1 / (√R √I)`.
    RootProduct,
}

/// Variance bound `1/(R I)` after `runs` repetitions.
pub fn crb_variance(runs: u64, cfi: f64) -> f64 {
    crb(runs, cfi, CrbForm::Variance)
}

pub fn crb(runs: u64, cfi: f64, form: CrbForm) -> f64 {
    let r = runs as f64;
    match form {
        CrbForm::Variance => 1.0 / (r * cfi),
        CrbForm::RootProduct => 1.0 / (r.sqrt() * cfi.sqrt()),
    }
}

/// `2π / min_j u_j`, the period of the outcome distributions when every
/// `u_j` is a multiple of the smallest.
pub fn repeated_range(circuit: &Circuit) -> f64 {
    let min = circuit
        .lines()
        .iter()
        .map(|l| &l.u)
        .min()
        .map(Rational::to_f64)
        .unwrap_or(f64::INFINITY);
    2.0 * PI / min
}

/// Costs of reaching precision `1/p` over phases up to `h·π`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResourceReport {
    pub precision: f64,
    pub range: Rational,
    /// `⌈(p h)²⌉` Ramsey runs.
    pub ri_runs: u64,
    /// `ri_runs / h` unitary applications.
    pub ri_total_unitaries: Rational,
    /// Upper bound `4p` on QPE unitary applications.
    pub qpe_unitaries: Rational,
    /// `⌈log₂ p⌉ + 1`.
    pub qpe_qubits: u32,
    /// `4/p < h`.
    pub qpe_better: bool,
    /// Bins `k = ⌊p h⌋` for the binned RQPE construction.
    pub rqpe_bins: u64,
    /// `p (2 − 2^{−⌊log₂(k+1)⌋})`.
    pub rqpe_unitaries: Rational,
    /// `ri_total_unitaries < rqpe_unitaries`.
    pub ri_beats_rqpe: bool,
}

impl ResourceReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

pub fn resource_comparison(precision: f64, range: &Rational) -> Result<ResourceReport> {
    let p = Rational::from_f64_exact(precision)
        .filter(|p| *p >= Rational::one())
        .ok_or_else(|| {
            Error::InvalidArgument(format!("precision must be at least 1, got {precision}"))
        })?;
    if !range.numer().is_positive() || *range > Rational::from(2) {
        return Err(Error::InvalidArgument(format!(
            "range must lie in (0, 2], got {range}"
        )));
    }
    let ph = &p * range;
    let too_big = || Error::InvalidArgument("precision too large".into());
    let ri_runs = (&ph * &ph).ceil().to_u64().ok_or_else(too_big)?;
    let ri_total_unitaries = Rational::from_integer(ri_runs) / range;
    let qpe_unitaries = &p * Rational::from(4);
    let qpe_qubits = ceil_log2_rational(&p) + 1;
    let qpe_better = Rational::from(4) / &p < *range;
    let k = ph.floor().to_u64().ok_or_else(too_big)?;
    let levels = 63 - (k + 1).leading_zeros();
    let rqpe_unitaries = &p * (Rational::from(2) - Rational::new(1, BigInt::one() << levels));
    let ri_beats_rqpe = ri_total_unitaries < rqpe_unitaries;
    Ok(ResourceReport {
        precision,
        range: range.clone(),
        ri_runs,
        ri_total_unitaries,
        qpe_unitaries,
        qpe_qubits,
        qpe_better,
        rqpe_bins: k,
        rqpe_unitaries,
        ri_beats_rqpe,
    })
}

/// Smallest `e` with `2^e ≥ p`, for `p ≥ 1`.
fn ceil_log2_rational(p: &Rational) -> u32 {
    let mut e = 0u32;
    let mut pow = Rational::one();
    while pow < *p {
        pow = pow * Rational::from(2);
        e += 1;
    }
    e
}
