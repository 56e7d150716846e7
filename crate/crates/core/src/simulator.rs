//! Noiseless simulation of RQPE circuits.
//!
//! Lines are run one after another; line `j` sees the measured bits of the
//! earlier lines as classical controls. Measuring `|1>` has probability
//! `sin²(φ/2)` with `φ = u θ + π (Σ p over controls that read 1) + π Σ z`.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt;

use num_bigint::BigInt;
use num_complex::Complex64;
use num_traits::ToPrimitive;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::circuit::{cis_pi, estimate_theta, Circuit, CircuitLine, MAX_DENSE_QUBITS};
use crate::error::{Error, Result};
use crate::exactmath::Rational;
use crate::reduction::PhaseSet;

/// Largest line count for which a dense outcome distribution is built.
pub const MAX_OUTCOME_LINES: usize = 24;

/// A phase to simulate at.
#[derive(Debug, Clone, PartialEq)]
pub enum Theta {
    /// Exact rational multiple of π. Deterministic cases stay exact.
    PiMultiple(Rational),
    Radians(f64),
}

impl Theta {
    pub fn pi_multiple(numer: i64, denom: i64) -> Self {
        Theta::PiMultiple(Rational::new(numer, denom))
    }

    pub fn radians(&self) -> f64 {
        match self {
            Theta::PiMultiple(r) => PI * r.to_f64(),
            Theta::Radians(x) => *x,
        }
    }
}

impl From<f64> for Theta {
    fn from(x: f64) -> Self {
        Theta::Radians(x)
    }
}

impl From<Rational> for Theta {
    fn from(r: Rational) -> Self {
        Theta::PiMultiple(r)
    }
}

/// Accumulated phase on a line.
#[derive(Debug, Clone, PartialEq)]
pub enum LinePhase {
    /// Units of π, reduced to `[0, 2)`.
    Exact(Rational),
    Radians(f64),
}

impl LinePhase {
    pub fn radians(&self) -> f64 {
        match self {
            LinePhase::Exact(r) => PI * r.to_f64(),
            LinePhase::Radians(x) => *x,
        }
    }

    /// `sin²(φ/2)`; exactly 0, ½ or 1 at exact multiples of π/2.
    pub fn prob_one(&self) -> f64 {
        if let LinePhase::Exact(r) = self {
            let twice = r * Rational::from(2);
            if twice.is_integer() {
                return match twice.numer().to_u8() {
                    Some(0) => 0.0,
                    Some(2) => 1.0,
                    _ => 0.5,
                };
            }
        }
        let s = (self.radians() / 2.0).sin();
        s * s
    }

    pub fn prob_zero(&self) -> f64 {
        1.0 - self.prob_one()
    }
}

/// Phase of `line` given earlier outcomes. `prior_bits` is indexed by trace
/// line index and must cover every control of the line.
pub fn line_phase(line: &CircuitLine, theta: &Theta, prior_bits: &[bool]) -> LinePhase {
    let mut extra: Rational = line
        .cz_terms
        .iter()
        .filter(|t| prior_bits[t.control])
        .map(|t| &t.exponent)
        .sum();
    extra = extra + line.z_terms.iter().sum::<Rational>();
    let two = Rational::from(2);
    match theta {
        Theta::PiMultiple(t) => LinePhase::Exact((&line.u * t + extra).rem_euclid(&two)),
        Theta::Radians(x) => {
            let fixed = PI * extra.rem_euclid(&two).to_f64();
            LinePhase::Radians(line.u.to_f64() * x + fixed)
        }
    }
}

/// Joint distribution over the measured strings of a circuit.
///
/// Index `k` encodes `m₀ … m_{n-1}` with `m₀` as the most significant bit.
#[derive(Debug, Clone, PartialEq)]
pub struct OutcomeDistribution {
    pub theta: f64,
    pub num_lines: usize,
    pub probabilities: Vec<f64>,
}

impl OutcomeDistribution {
    pub fn bitstring(&self, k: usize) -> String {
        format_bits(k, self.num_lines)
    }

    pub fn total(&self) -> f64 {
        self.probabilities.iter().sum()
    }

    /// Most likely outcome and its probability.
    pub fn argmax(&self) -> (usize, f64) {
        self.probabilities.iter().copied().enumerate().fold(
            (0, f64::NEG_INFINITY),
            |best, (k, p)| if p > best.1 { (k, p) } else { best },
        )
    }

    /// Half the ℓ₁ distance to another distribution over the same strings.
    pub fn total_variation(&self, other: &OutcomeDistribution) -> f64 {
        0.5 * self
            .probabilities
            .iter()
            .zip(&other.probabilities)
            .map(|(a, b)| (a - b).abs())
            .sum::<f64>()
    }

    /// Outcomes with non-negligible probability, most likely first.
    pub fn support(&self, threshold: f64) -> Vec<(String, f64)> {
        let mut v: Vec<(String, f64)> = self
            .probabilities
            .iter()
            .enumerate()
            .filter(|(_, &p)| p > threshold)
            .map(|(k, &p)| (self.bitstring(k), p))
            .collect();
        v.sort_by(|a, b| b.1.total_cmp(&a.1));
        v
    }
}

pub fn format_bits(k: usize, n: usize) -> String {
    if n == 0 {
        String::new()
    } else {
        format!("{k:0n$b}")
    }
}

pub fn bits_from_index(k: usize, n: usize) -> Vec<bool> {
    (0..n).map(|j| k >> (n - 1 - j) & 1 == 1).collect()
}

pub fn index_from_bits(bits: &[bool]) -> usize {
    bits.iter().fold(0, |acc, &b| acc << 1 | usize::from(b))
}

/// `P(m₀…m_{n-1} | θ)` as a product of per-line conditionals. Branches
/// with probability exactly zero are not expanded.
pub fn outcome_distribution(circuit: &Circuit, theta: &Theta) -> Result<OutcomeDistribution> {
    let n = circuit.num_lines();
    if n > MAX_OUTCOME_LINES {
        return Err(Error::TooManyQubits(n, MAX_OUTCOME_LINES));
    }
    let mut probabilities = vec![0.0; 1 << n];
    let mut bits = vec![false; circuit.num_trace_lines()];
    descend(
        circuit.lines(),
        theta,
        0,
        0,
        1.0,
        &mut bits,
        &mut probabilities,
    );
    Ok(OutcomeDistribution {
        theta: theta.radians(),
        num_lines: n,
        probabilities,
    })
}

fn descend(
    lines: &[CircuitLine],
    theta: &Theta,
    depth: usize,
    prefix: usize,
    weight: f64,
    bits: &mut [bool],
    out: &mut [f64],
) {
    if depth == lines.len() {
        out[prefix] = weight;
        return;
    }
    let line = &lines[depth];
    let p1 = line_phase(line, theta, bits).prob_one();
    for (bit, p) in [(false, 1.0 - p1), (true, p1)] {
        if p == 0.0 {
            continue;
        }
        bits[line.index] = bit;
        descend(
            lines,
            theta,
            depth + 1,
            prefix << 1 | usize::from(bit),
            weight * p,
            bits,
            out,
        );
    }
    bits[line.index] = false;
}

/// Full statevector simulation with quantum controls, for cross-checking
/// the sequential model.
pub fn statevector_distribution(circuit: &Circuit, theta: &Theta) -> Result<OutcomeDistribution> {
    let n = circuit.num_lines();
    if n > MAX_DENSE_QUBITS {
        return Err(Error::TooManyQubits(n, MAX_DENSE_QUBITS));
    }
    let dim = 1usize << n;
    let lines = circuit.lines();
    // Qubit q sits at bit n-1-q, so the amplitude index is the outcome index.
    let mask = |q: usize| 1usize << (n - 1 - q);
    let position = |index: usize| {
        lines
            .iter()
            .position(|l| l.index == index)
            .expect("control present")
    };
    let phase = |units_of_pi: &Rational, radians: f64| -> Complex64 {
        match theta {
            Theta::PiMultiple(_) => cis_pi(units_of_pi),
            Theta::Radians(_) => Complex64::from_polar(1.0, radians),
        }
    };

    let mut state = vec![Complex64::new((dim as f64).sqrt().recip(), 0.0); dim];
    for (q, line) in lines.iter().enumerate() {
        let (exact, radians) = match theta {
            Theta::PiMultiple(t) => {
                let z: Rational = line.z_terms.iter().sum();
                (&line.u * t + z, 0.0)
            }
            Theta::Radians(x) => {
                let z: Rational = line.z_terms.iter().sum();
                (Rational::zero(), line.u.to_f64() * x + PI * z.to_f64())
            }
        };
        let factor = phase(&exact, radians);
        for (k, amp) in state.iter_mut().enumerate() {
            if k & mask(q) != 0 {
                *amp *= factor;
            }
        }
    }
    for (q, line) in lines.iter().enumerate() {
        for term in &line.cz_terms {
            let c = position(term.control);
            let factor = phase(&term.exponent, PI * term.exponent.to_f64());
            for (k, amp) in state.iter_mut().enumerate() {
                if k & mask(q) != 0 && k & mask(c) != 0 {
                    *amp *= factor;
                }
            }
        }
        apply_hadamard(&mut state, mask(q));
    }
    Ok(OutcomeDistribution {
        theta: theta.radians(),
        num_lines: n,
        probabilities: state.iter().map(|a| a.norm_sqr()).collect(),
    })
}

fn apply_hadamard(state: &mut [Complex64], bit: usize) {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    for k in 0..state.len() {
        if k & bit == 0 {
            let (a, b) = (state[k], state[k | bit]);
            state[k] = (a + b) * h;
            state[k | bit] = (a - b) * h;
        }
    }
}

/// Samples one run. Line `j` of run `r` consumes the `j`-th `f64` of the
/// ChaCha8 stream `r` under `seed`, so runs are independent of order.
pub fn sample_run(circuit: &Circuit, theta: &Theta, seed: u64, run_index: u64) -> Vec<bool> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(run_index);
    let mut prior = vec![false; circuit.num_trace_lines()];
    circuit
        .lines()
        .iter()
        .map(|line| {
            let p1 = line_phase(line, theta, &prior).prob_one();
            let bit = rng.random::<f64>() < p1;
            prior[line.index] = bit;
            bit
        })
        .collect()
}

/// Why a circuit fails to tell a phase set apart.
#[derive(Debug, Clone, PartialEq)]
pub struct DistinguishabilityFailure {
    /// Phases with no point-mass outcome, with their leading outcomes.
    pub not_deterministic: Vec<(BigInt, Vec<(String, f64)>)>,
    /// Pairs of phases mapped to the same string.
    pub collisions: Vec<(BigInt, BigInt, String)>,
    /// Phases whose string decodes to a different phase.
    pub wrong_estimates: Vec<(BigInt, Rational)>,
}

impl fmt::Display for DistinguishabilityFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "circuit does not perfectly distinguish the phase set")?;
        for (x, top) in &self.not_deterministic {
            let shown: Vec<String> = top
                .iter()
                .take(4)
                .map(|(s, p)| format!("{s}:{p:.6}"))
                .collect();
            writeln!(f, "  x={x}: no point mass ({})", shown.join(", "))?;
        }
        for (a, b, s) in &self.collisions {
            writeln!(f, "  x={a} and x={b} both give {s}")?;
        }
        for (x, est) in &self.wrong_estimates {
            writeln!(f, "  x={x}: estimate {est}·π")?;
        }
        Ok(())
    }
}

impl std::error::Error for DistinguishabilityFailure {}

/// Checks that every phase in `phases` gives one outcome with probability
/// above `1 - 1e-9`, that the outcomes are distinct, and that each decodes
/// back to its phase. Returns numerator → measured string.
pub fn verify_perfect_distinguishability(
    circuit: &Circuit,
    phases: &PhaseSet,
) -> std::result::Result<BTreeMap<BigInt, String>, DistinguishabilityFailure> {
    let mut failure = DistinguishabilityFailure {
        not_deterministic: Vec::new(),
        collisions: Vec::new(),
        wrong_estimates: Vec::new(),
    };
    let mut assignment = BTreeMap::new();
    let mut seen: BTreeMap<String, BigInt> = BTreeMap::new();
    let two = Rational::from(2);
    for x in phases.numerators() {
        let phase = phases.phase(x);
        let dist = match outcome_distribution(circuit, &Theta::PiMultiple(phase.clone())) {
            Ok(d) => d,
            Err(_) => {
                failure.not_deterministic.push((x.clone(), Vec::new()));
                continue;
            }
        };
        let (k, p) = dist.argmax();
        if p <= 1.0 - 1e-9 {
            failure
                .not_deterministic
                .push((x.clone(), dist.support(1e-9)));
            continue;
        }
        let s = dist.bitstring(k);
        if let Some(prev) = seen.get(&s) {
            failure
                .collisions
                .push((prev.clone(), x.clone(), s.clone()));
        }
        let bits = bits_from_index(k, dist.num_lines);
        if let Ok(est) = estimate_theta(circuit, &bits) {
            if est != phase.rem_euclid(&two) {
                failure.wrong_estimates.push((x.clone(), est));
            }
        }
        seen.insert(s.clone(), x.clone());
        assignment.insert(x.clone(), s);
    }
    if failure.not_deterministic.is_empty()
        && failure.collisions.is_empty()
        && failure.wrong_estimates.is_empty()
    {
        Ok(assignment)
    } else {
        Err(failure)
    }
}

/// Outcome probabilities on `θ = 2πi/N`, one CSV row per grid point.
pub fn probability_map_csv(circuit: &Circuit, grid_points: usize) -> Result<String> {
    if grid_points < 1 {
        return Err(Error::InvalidArgument(
            "grid_points must be at least 1".into(),
        ));
    }
    let n = circuit.num_lines();
    if n > MAX_DENSE_QUBITS {
        return Err(Error::TooManyQubits(n, MAX_DENSE_QUBITS));
    }
    let mut out = String::from("theta");
    for k in 0..1usize << n {
        out.push_str(",M_");
        out.push_str(&format_bits(k, n));
    }
    out.push('\n');
    for i in 0..grid_points {
        let theta = Theta::PiMultiple(Rational::new(2 * i as i64, grid_points as i64));
        let dist = outcome_distribution(circuit, &theta)?;
        out.push_str(&format!("{:.12}", dist.theta));
        for p in &dist.probabilities {
            out.push_str(&format!(",{p:.12}"));
        }
        out.push('\n');
    }
    Ok(out)
}
