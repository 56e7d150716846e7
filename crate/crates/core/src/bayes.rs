//! Grid-based Bayesian phase reconstruction from repeated circuit runs.

use std::f64::consts::TAU;
use std::fmt::Write as _;

use rayon::prelude::*;

use crate::circuit::{unitary_count, Circuit};
use crate::error::{Error, Result};
use crate::simulator::{index_from_bits, outcome_distribution, sample_run, Theta};

pub const DEFAULT_GRID_POINTS: usize = 4096;
pub const MIN_GRID_POINTS: usize = 100;

/// Where the flat prior lives.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PriorSupport {
    /// `[0, 2π)`, sampled on the half-open grid `2πi/N`.
    FullCircle,
    /// Closed `[lo, hi]` in radians, sampled with both endpoints.
    Interval { lo: f64, hi: f64 },
}

impl PriorSupport {
    pub fn grid(&self, points: usize) -> Vec<f64> {
        match *self {
            PriorSupport::FullCircle => (0..points)
                .map(|i| TAU * i as f64 / points as f64)
                .collect(),
            PriorSupport::Interval { lo, hi } => {
                let step = (hi - lo) / (points - 1) as f64;
                (0..points).map(|i| lo + step * i as f64).collect()
            }
        }
    }

    fn validate(&self) -> Result<()> {
        if let PriorSupport::Interval { lo, hi } = *self {
            if !(lo.is_finite() && hi.is_finite() && 0.0 <= lo && lo < hi && hi <= TAU) {
                return Err(Error::InvalidArgument(format!(
                    "prior [{lo}, {hi}] must lie in [0, 2π]"
                )));
            }
        }
        Ok(())
    }
}

/// Posterior weights on a fixed grid of phases.
#[derive(Debug, Clone, PartialEq)]
pub struct PosteriorGrid {
    pub support: PriorSupport,
    pub grid: Vec<f64>,
    pub weights: Vec<f64>,
    pub runs_completed: u64,
    /// `(r·R, variance)` after each run.
    pub variance_trace: Vec<(f64, f64)>,
    /// Most probable grid phase after each run.
    pub map_trace: Vec<f64>,
}

impl PosteriorGrid {
    /// Flat prior on `support`.
    pub fn flat(support: PriorSupport, points: usize) -> Result<Self> {
        support.validate()?;
        if points < 2 {
            return Err(Error::InvalidArgument("need at least 2 grid points".into()));
        }
        let w = 1.0 / points as f64;
        Ok(Self {
            support,
            grid: support.grid(points),
            weights: vec![w; points],
            runs_completed: 0,
            variance_trace: Vec::new(),
            map_trace: Vec::new(),
        })
    }

    /// Prior given explicitly on the grid of `support`; normalized here.
    pub fn with_weights(support: PriorSupport, weights: Vec<f64>) -> Result<Self> {
        let mut p = Self::flat(support, weights.len())?;
        let total: f64 = weights.iter().sum();
        if !(total > 0.0) || weights.iter().any(|w| !(*w >= 0.0)) {
            return Err(Error::InvalidArgument(
                "prior weights must be non-negative with positive sum".into(),
            ));
        }
        p.weights = weights.into_iter().map(|w| w / total).collect();
        Ok(p)
    }

    /// Multiplies in one likelihood per grid point and renormalizes.
    pub fn update(&mut self, likelihood: impl IntoIterator<Item = f64>) -> Result<()> {
        let mut next: Vec<f64> = self
            .weights
            .iter()
            .zip(likelihood)
            .map(|(w, l)| w * l)
            .collect();
        if next.len() != self.weights.len() {
            return Err(Error::LengthMismatch {
                expected: self.weights.len(),
                got: next.len(),
            });
        }
        let total: f64 = next.iter().sum();
        if !(total > 0.0) {
            return Err(Error::ImpossibleOutcome);
        }
        next.iter_mut().for_each(|w| *w /= total);
        self.weights = next;
        self.runs_completed += 1;
        Ok(())
    }

    pub fn mean(&self) -> f64 {
        self.grid
            .iter()
            .zip(&self.weights)
            .map(|(t, w)| t * w)
            .sum()
    }

    /// Variance over the grid coordinates as laid out (no circular wrap).
    pub fn variance(&self) -> f64 {
        let mean = self.mean();
        self.grid
            .iter()
            .zip(&self.weights)
            .map(|(t, w)| w * (t - mean).powi(2))
            .sum()
    }

    pub fn map_estimate(&self) -> f64 {
        let (i, _) =
            self.weights
                .iter()
                .enumerate()
                .fold((0, f64::NEG_INFINITY), |best, (i, &w)| {
                    if w > best.1 {
                        (i, w)
                    } else {
                        best
                    }
                });
        self.grid[i]
    }

    /// Splits the posterior at local minima into peaks whose height is at
    /// least `relative_height` of the tallest. Wraps on the full circle.
    pub fn peaks(&self, relative_height: f64) -> Vec<Peak> {
        let n = self.weights.len();
        let circular = matches!(self.support, PriorSupport::FullCircle);
        let w = &self.weights;
        let max = w.iter().copied().fold(0.0, f64::max);
        if max <= 0.0 {
            return Vec::new();
        }
        let at = |i: isize| -> Option<f64> {
            if circular {
                Some(w[i.rem_euclid(n as isize) as usize])
            } else if (0..n as isize).contains(&i) {
                Some(w[i as usize])
            } else {
                None
            }
        };
        let maxima: Vec<usize> = (0..n)
            .filter(|&i| {
                let c = w[i];
                let left = at(i as isize - 1).unwrap_or(f64::NEG_INFINITY);
                let right = at(i as isize + 1).unwrap_or(f64::NEG_INFINITY);
                c >= relative_height * max && c > left && c >= right
            })
            .collect();

        maxima
            .iter()
            .map(|&top| {
                // Walk downhill both ways to the basin edges.
                let mut members = vec![top];
                for dir in [-1isize, 1] {
                    let mut i = top as isize;
                    let mut steps = 0;
                    while let Some(next) = at(i + dir) {
                        let cur = at(i).unwrap();
                        if next > cur || next == 0.0 && cur == 0.0 || steps + 1 >= n {
                            break;
                        }
                        i += dir;
                        steps += 1;
                        let idx = i.rem_euclid(n as isize) as usize;
                        if maxima.contains(&idx) {
                            break;
                        }
                        members.push(idx);
                    }
                }
                self.summarize_peak(top, &members)
            })
            .collect()
    }

    fn summarize_peak(&self, top: usize, members: &[usize]) -> Peak {
        let circular = matches!(self.support, PriorSupport::FullCircle);
        let center = self.grid[top];
        // Offsets relative to the apex so a peak straddling 0 stays contiguous.
        let offset = |i: usize| {
            let d = self.grid[i] - center;
            if circular {
                (d + TAU / 2.0).rem_euclid(TAU) - TAU / 2.0
            } else {
                d
            }
        };
        let mass: f64 = members.iter().map(|&i| self.weights[i]).sum();
        let shift: f64 = members
            .iter()
            .map(|&i| self.weights[i] * offset(i))
            .sum::<f64>()
            / mass;
        let variance = members
            .iter()
            .map(|&i| self.weights[i] * (offset(i) - shift).powi(2))
            .sum::<f64>()
            / mass;
        let mut mean = center + shift;
        if circular {
            mean = mean.rem_euclid(TAU);
        }
        Peak {
            apex: center,
            height: self.weights[top],
            mass,
            mean,
            variance,
        }
    }

    /// `theta,weight` rows.
    pub fn posterior_csv(&self) -> String {
        let mut out = String::from("theta,weight\n");
        for (t, w) in self.grid.iter().zip(&self.weights) {
            let _ = writeln!(out, "{t:.12},{w:.12e}");
        }
        out
    }

    /// `rR,variance,map_theta` rows, one per run.
    pub fn experiment_csv(&self) -> String {
        let mut out = String::from("rR,variance,map_theta\n");
        for ((rr, v), m) in self.variance_trace.iter().zip(&self.map_trace) {
            let _ = writeln!(out, "{rr},{v:.12e},{m:.12}");
        }
        out
    }
}

/// One mode of a posterior.
#[derive(Debug, Clone, PartialEq)]
pub struct Peak {
    pub apex: f64,
    pub height: f64,
    pub mass: f64,
    pub mean: f64,
    /// Variance within the peak's basin.
    pub variance: f64,
}

/// `P(k | θ_i)` for every grid phase and outcome index.
#[derive(Debug, Clone)]
pub struct LikelihoodTable {
    outcomes: usize,
    /// Row-major: grid index, then outcome index.
    values: Vec<f64>,
}

impl LikelihoodTable {
    pub fn new(circuit: &Circuit, grid: &[f64]) -> Result<Self> {
        let rows = grid
            .par_iter()
            .map(|&t| outcome_distribution(circuit, &Theta::Radians(t)).map(|d| d.probabilities))
            .collect::<Result<Vec<_>>>()?;
        let outcomes = 1usize << circuit.num_lines();
        Ok(Self {
            outcomes,
            values: rows.concat(),
        })
    }

    pub fn column(&self, outcome: usize) -> impl Iterator<Item = f64> + '_ {
        self.values
            .iter()
            .skip(outcome)
            .step_by(self.outcomes)
            .copied()
    }
}

/// One Bayes step with likelihoods computed directly from the circuit.
pub fn posterior_update(
    posterior: &PosteriorGrid,
    circuit: &Circuit,
    outcome: &[bool],
) -> Result<PosteriorGrid> {
    if outcome.len() != circuit.num_lines() {
        return Err(Error::LengthMismatch {
            expected: circuit.num_lines(),
            got: outcome.len(),
        });
    }
    let k = index_from_bits(outcome);
    let likelihood = posterior
        .grid
        .iter()
        .map(|&t| outcome_distribution(circuit, &Theta::Radians(t)).map(|d| d.probabilities[k]))
        .collect::<Result<Vec<_>>>()?;
    let mut next = posterior.clone();
    next.update(likelihood)?;
    Ok(next)
}

/// Settings for [`run_experiment`].
#[derive(Debug, Clone, PartialEq)]
pub struct Experiment {
    pub theta_true: Theta,
    pub runs: u64,
    pub support: PriorSupport,
    pub grid_points: usize,
    pub seed: u64,
}

/// Samples `runs` outcomes at the true phase and folds each into a flat
/// prior, recording variance and MAP after every run.
pub fn run_experiment(circuit: &Circuit, exp: &Experiment) -> Result<PosteriorGrid> {
    if exp.grid_points < MIN_GRID_POINTS {
        return Err(Error::InvalidArgument(format!(
            "grid_points must be at least {MIN_GRID_POINTS}"
        )));
    }
    let mut posterior = PosteriorGrid::flat(exp.support, exp.grid_points)?;
    let table = LikelihoodTable::new(circuit, &posterior.grid)?;
    let r = unitary_count(circuit).to_f64();
    for run in 0..exp.runs {
        let bits = sample_run(circuit, &exp.theta_true, exp.seed, run);
        posterior.update(table.column(index_from_bits(&bits)))?;
        posterior
            .variance_trace
            .push((r * (run + 1) as f64, posterior.variance()));
        posterior.map_trace.push(posterior.map_estimate());
    }
    Ok(posterior)
}

/// Least-squares slope of `ln variance` against `ln R` over runs
/// `R ∈ [from, to]`.
pub fn convergence_slope(posterior: &PosteriorGrid, from: u64, to: u64) -> Result<f64> {
    let pts: Vec<(f64, f64)> = posterior
        .variance_trace
        .iter()
        .enumerate()
        .map(|(i, &(_, v))| (i as u64 + 1, v))
        .filter(|&(runs, v)| (from..=to).contains(&runs) && v > 0.0)
        .map(|(runs, v)| ((runs as f64).ln(), v.ln()))
        .collect();
    if pts.len() < 2 {
        return Err(Error::InvalidArgument(
            "not enough points to fit a slope".into(),
        ));
    }
    let n = pts.len() as f64;
    let (mx, my) = pts
        .iter()
        .fold((0.0, 0.0), |(a, b), (x, y)| (a + x / n, b + y / n));
    let (sxy, sxx) = pts.iter().fold((0.0, 0.0), |(sxy, sxx), (x, y)| {
        (sxy + (x - mx) * (y - my), sxx + (x - mx).powi(2))
    });
    Ok(sxy / sxx)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::{build_circuit, remove_phantoms};
    use crate::reduction::{reduce, PhaseSet};
    use std::f64::consts::PI;

    fn from_set(d: i64, xs: &[i64]) -> Circuit {
        let ps = PhaseSet::from_ints(d, xs).unwrap();
        remove_phantoms(&build_circuit(&reduce(&ps), &ps).unwrap())
    }

    fn ri7() -> Circuit {
        from_set(7, &[0, 1])
    }

    fn six_phase() -> Circuit {
        from_set(64, &[21, 22, 64, 65, 107, 108])
    }

    #[test]
    fn grids() {
        let full = PriorSupport::FullCircle.grid(4);
        assert_eq!(full, vec![0.0, PI / 2.0, PI, 3.0 * PI / 2.0]);
        let closed = PriorSupport::Interval { lo: 1.0, hi: 2.0 }.grid(3);
        assert_eq!(closed, vec![1.0, 1.5, 2.0]);
        assert!(PosteriorGrid::flat(PriorSupport::Interval { lo: 2.0, hi: 1.0 }, 10).is_err());
    }

    #[test]
    fn update_concentrates_on_true_phase() {
        let c = six_phase();
        let prior = PosteriorGrid::flat(PriorSupport::FullCircle, 128).unwrap();
        let post = posterior_update(&prior, &c, &[true, false, false]).unwrap();
        assert!((post.weights.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        // Repeated range π/8: every 21π/64 + kπ/8 ties for the maximum.
        let max = post.weights.iter().copied().fold(0.0, f64::max);
        assert_eq!(post.weights[21], max);
        assert_eq!(post.weights.iter().filter(|&&w| w == max).count(), 16);
        assert!(posterior_update(&prior, &c, &[true]).is_err());
    }

    #[test]
    fn point_mass_prior_is_stable() {
        let mut w = vec![0.0; 128];
        w[21] = 1.0;
        let prior = PosteriorGrid::with_weights(PriorSupport::FullCircle, w).unwrap();
        let post = posterior_update(&prior, &six_phase(), &[true, false, false]).unwrap();
        assert_eq!(post.weights, prior.weights);
    }

    #[test]
    fn impossible_outcome_errors() {
        let mut w = vec![0.0; 128];
        w[0] = 1.0;
        let prior = PosteriorGrid::with_weights(PriorSupport::FullCircle, w).unwrap();
        assert_eq!(
            posterior_update(&prior, &ri7(), &[true]).unwrap_err(),
            Error::ImpossibleOutcome
        );
    }

    #[test]
    fn sequential_updates_match_joint() {
        let c = from_set(6, &[0, 1, 6, 7]);
        let prior = PosteriorGrid::flat(PriorSupport::FullCircle, 200).unwrap();
        let a = posterior_update(&prior, &c, &[true, false]).unwrap();
        let ab = posterior_update(&a, &c, &[false, true]).unwrap();
        let ba = posterior_update(
            &posterior_update(&prior, &c, &[false, true]).unwrap(),
            &c,
            &[true, false],
        )
        .unwrap();
        for (x, y) in ab.weights.iter().zip(&ba.weights) {
            assert!((x - y).abs() < 1e-15);
        }
    }

    #[test]
    fn experiment_reproducible_and_normalized() {
        let exp = Experiment {
            theta_true: Theta::pi_multiple(13, 12),
            runs: 50,
            support: PriorSupport::Interval {
                lo: PI,
                hi: 7.0 * PI / 6.0,
            },
            grid_points: 512,
            seed: 7,
        };
        let a = run_experiment(&ri7(), &exp).unwrap();
        let b = run_experiment(&ri7(), &exp).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.runs_completed, 50);
        assert!((a.weights.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert_eq!(a.variance_trace[0].0, 7.0);
        assert_eq!(
            a.experiment_csv().lines().next(),
            Some("rR,variance,map_theta")
        );
        assert_eq!(a.posterior_csv().lines().count(), 513);
        let small = Experiment {
            grid_points: 50,
            ..exp
        };
        assert!(run_experiment(&ri7(), &small).is_err());
    }

    #[test]
    fn peak_decomposition_wraps() {
        let mut w = vec![0.0; 100];
        w[99] = 2.0;
        w[0] = 3.0;
        w[1] = 2.0;
        w[50] = 1.0;
        let p = PosteriorGrid::with_weights(PriorSupport::FullCircle, w).unwrap();
        let peaks = p.peaks(0.1);
        assert_eq!(peaks.len(), 2);
        assert!((peaks[0].mass - 0.875).abs() < 1e-12);
        assert!(peaks[0].mean.abs() < 1e-12);
    }

    #[test]
    fn slope_of_inverse_law() {
        let mut p = PosteriorGrid::flat(PriorSupport::FullCircle, 4).unwrap();
        p.variance_trace = (1..=1000).map(|r| (r as f64, 3.0 / r as f64)).collect();
        assert!((convergence_slope(&p, 100, 1000).unwrap() + 1.0).abs() < 1e-12);
    }
}
