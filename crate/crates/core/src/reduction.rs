//! The GCD/mode reduction that turns a set of rational phase hypotheses into
//! the per-line divisors `G_i` and additions `A_i` of an RQPE circuit.
//!
//! One iteration per circuit line:
//!
//! 1. `G_i = gcd(S_i)`
//! 2. `Q_i = S_i / G_i`
//! 3. `A_i` = the most frequent difference `y_even - y_odd` over `Q_i`
//!    (or `-min(Q_i)` when `Q_i` has no even element)
//! 4. `S_{i+1}` = `Q_i` with `A_i` added to its odd elements
//!
//! until `S_{i+1} = {0}`.
//!
//! Two passes are tried in order. The first reduces every `S_{i+1}` into
//! `[0, M_i)` with the stage modulus `M_i = 2d / gcd(2d, G_0 ... G_i)` and
//! ranks differences modulo `M_i`; the second runs the iteration on plain
//! integers. A pass is accepted only if an exact replay of the resulting line
//! phases shows every hypothesis produces a distinct deterministic bit string
//! and the measured line count respects `floor(log2 h) + 1`. Otherwise the
//! default ladder `G = [1, 2, 2, ...]`, `A = [-1, -1, ...]` is returned.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exactmath::{cmp_abs_then_sign, gcd_set, Rational};

/// The hypothesis set Θ = { π x / d : x ∈ S₀ }.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct PhaseSet {
    d: BigInt,
    numerators: Vec<BigInt>,
}

impl PhaseSet {
    /// Validates `0 <= x < 2d` for every numerator. Duplicates are dropped
    /// and the numerators are kept sorted.
    pub fn new(d: impl Into<BigInt>, numerators: impl IntoIterator<Item = BigInt>) -> Result<Self> {
        let d = d.into();
        if !d.is_positive() {
            return Err(Error::InvalidPhaseSet(format!(
                "denominator must be positive, got {d}"
            )));
        }
        let two_d = &d * 2;
        let set: BTreeSet<BigInt> = numerators.into_iter().collect();
        if set.is_empty() {
            return Err(Error::EmptyInput);
        }
        if let Some(bad) = set.iter().find(|x| x.is_negative() || *x >= &two_d) {
            return Err(Error::InvalidPhaseSet(format!(
                "numerator {bad} outside [0, {two_d})"
            )));
        }
        Ok(Self {
            d,
            numerators: set.into_iter().collect(),
        })
    }

    /// Convenience constructor from machine integers.
    pub fn from_ints(d: i64, numerators: &[i64]) -> Result<Self> {
        Self::new(d, numerators.iter().map(|&x| BigInt::from(x)))
    }

    pub fn denominator(&self) -> &BigInt {
        &self.d
    }

    pub fn numerators(&self) -> &[BigInt] {
        &self.numerators
    }

    /// Number of hypotheses, `m = |Θ|`.
    pub fn len(&self) -> usize {
        self.numerators.len()
    }

    pub fn is_empty(&self) -> bool {
        self.numerators.is_empty()
    }

    /// Largest numerator `h`.
    pub fn max_numerator(&self) -> &BigInt {
        self.numerators.last().expect("phase set is never empty")
    }

    /// Phase `x / d` in units of π.
    pub fn phase(&self, x: &BigInt) -> Rational {
        Rational::new(x.clone(), self.d.clone())
    }

    pub fn phases(&self) -> impl Iterator<Item = Rational> + '_ {
        self.numerators.iter().map(|x| self.phase(x))
    }
}

impl fmt::Debug for PhaseSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "PhaseSet(d={}, {{", self.d)?;
        for (i, x) in self.numerators.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{x}")?;
        }
        write!(f, "}})")
    }
}

/// Which construction produced a trace.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Strategy {
    /// Single hypothesis: nothing to distinguish, zero lines.
    Trivial,
    /// Reduction with stage-modulus wrapping.
    StageModulus,
    /// Reduction on plain integers.
    Literal,
    /// `G = [1, 2, 2, ...]`, `A = [-1, -1, ...]`.
    DefaultLadder,
}

/// One reduction step, i.e. one circuit line.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Iteration {
    /// `S_i`, sorted.
    pub set: Vec<BigInt>,
    /// `G_i`
    pub gcd: BigInt,
    /// `Q_i = S_i / G_i`, sorted.
    pub quotients: Vec<BigInt>,
    /// `A_i`, always odd.
    pub add: BigInt,
    /// Stage modulus of `Q_i` and `S_{i+1}`: `2d / gcd(2d, G_0 ... G_i)`.
    pub modulus: BigInt,
    /// `Q_i` has no even element, so the line always measures 1.
    pub phantom: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReductionTrace {
    pub iterations: Vec<Iteration>,
    /// Set left after the last iteration (`{0}` for the reducing passes).
    pub final_set: Vec<BigInt>,
    pub terminated: bool,
    pub fallback_used: bool,
    pub strategy: Strategy,
}

impl ReductionTrace {
    pub fn gcds(&self) -> Vec<BigInt> {
        self.iterations.iter().map(|it| it.gcd.clone()).collect()
    }

    pub fn adds(&self) -> Vec<BigInt> {
        self.iterations.iter().map(|it| it.add.clone()).collect()
    }

    pub fn phantoms(&self) -> Vec<bool> {
        self.iterations.iter().map(|it| it.phantom).collect()
    }

    pub fn len(&self) -> usize {
        self.iterations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.iterations.is_empty()
    }

    /// Lines that survive phantom removal.
    pub fn measured_lines(&self) -> usize {
        self.iterations.iter().filter(|it| !it.phantom).count()
    }

    /// `true` when the measured line count exceeds `m - 1`. The bound is
    /// reported rather than enforced.
    pub fn exceeds_m_minus_one_bound(&self, phases: &PhaseSet) -> bool {
        self.measured_lines() + 1 > phases.len().max(1)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&TraceJson::from(self)).expect("trace serializes")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let raw: TraceJson = serde_json::from_str(s).map_err(|e| Error::Parse(e.to_string()))?;
        raw.try_into()
    }
}

#[derive(Serialize, Deserialize)]
struct TraceJson {
    sets: Vec<Vec<String>>,
    gcds: Vec<String>,
    adds: Vec<String>,
    moduli: Vec<String>,
    phantoms: Vec<bool>,
    fallback_used: bool,
    #[serde(default = "default_strategy")]
    strategy: Strategy,
}

fn default_strategy() -> Strategy {
    Strategy::StageModulus
}

impl From<&ReductionTrace> for TraceJson {
    fn from(t: &ReductionTrace) -> Self {
        let strs = |v: &[BigInt]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>();
        let mut sets: Vec<Vec<String>> = t.iterations.iter().map(|it| strs(&it.set)).collect();
        sets.push(strs(&t.final_set));
        TraceJson {
            sets,
            gcds: strs(&t.gcds()),
            adds: strs(&t.adds()),
            moduli: t
                .iterations
                .iter()
                .map(|it| it.modulus.to_string())
                .collect(),
            phantoms: t.phantoms(),
            fallback_used: t.fallback_used,
            strategy: t.strategy,
        }
    }
}

impl TryFrom<TraceJson> for ReductionTrace {
    type Error = Error;

    fn try_from(raw: TraceJson) -> Result<Self> {
        let int = |s: &String| -> Result<BigInt> {
            s.trim()
                .parse()
                .map_err(|_| Error::Parse(format!("not an integer: {s:?}")))
        };
        let ints = |v: &[String]| v.iter().map(int).collect::<Result<Vec<_>>>();
        let n = raw.gcds.len();
        if raw.adds.len() != n
            || raw.moduli.len() != n
            || raw.phantoms.len() != n
            || raw.sets.len() != n + 1
        {
            return Err(Error::Parse(
                "trace arrays have inconsistent lengths".into(),
            ));
        }
        let mut iterations = Vec::with_capacity(n);
        for i in 0..n {
            let set = ints(&raw.sets[i])?;
            let gcd = int(&raw.gcds[i])?;
            if gcd.is_zero() {
                return Err(Error::Parse("zero gcd in trace".into()));
            }
            let quotients = set.iter().map(|x| x / &gcd).collect();
            iterations.push(Iteration {
                set,
                gcd,
                quotients,
                add: int(&raw.adds[i])?,
                modulus: int(&raw.moduli[i])?,
                phantom: raw.phantoms[i],
            });
        }
        Ok(ReductionTrace {
            iterations,
            final_set: ints(&raw.sets[n])?,
            terminated: true,
            fallback_used: raw.fallback_used,
            strategy: raw.strategy,
        })
    }
}

/// `floor(log2 h)` for `h >= 1`; 0 for `h = 0`.
pub fn floor_log2(h: &BigInt) -> usize {
    if h.is_positive() {
        (h.bits() - 1) as usize
    } else {
        0
    }
}

/// `ceil(log2 m)` for `m >= 1`.
pub fn ceil_log2(m: usize) -> usize {
    if m <= 1 {
        0
    } else {
        (usize::BITS - (m - 1).leading_zeros()) as usize
    }
}

/// The addition `A` for one reduction step.
///
/// With evens and odds present, returns the even-minus-odd difference hit by
/// the most pairs. When `modulus` is given, differences are counted by
/// residue class modulo it and each class is represented by its actual
/// difference of smallest magnitude. Ties go to the smallest `|v|`, then to
/// the negative value. Without evens, returns `-min(Q)`.
pub fn mode_difference(q: &[BigInt], modulus: Option<&BigInt>) -> Result<BigInt> {
    let (evens, odds): (Vec<&BigInt>, Vec<&BigInt>) = q.iter().partition(|y| y.is_even());
    if odds.is_empty() {
        return Err(Error::NoOddElement);
    }
    if evens.is_empty() {
        let min = odds.iter().min().expect("nonempty");
        return Ok(-(*min).clone());
    }
    // class -> (count, representative)
    let mut classes: BTreeMap<BigInt, (usize, BigInt)> = BTreeMap::new();
    for e in &evens {
        for o in &odds {
            let v = *e - *o;
            let key = match modulus {
                Some(m) => v.mod_floor(m),
                None => v.clone(),
            };
            classes
                .entry(key)
                .and_modify(|(count, rep)| {
                    *count += 1;
                    if cmp_abs_then_sign(&v, rep).is_lt() {
                        *rep = v.clone();
                    }
                })
                .or_insert((1, v));
        }
    }
    let (_, rep) = classes
        .into_values()
        .min_by(|(ca, ra), (cb, rb)| cb.cmp(ca).then_with(|| cmp_abs_then_sign(ra, rb)))
        .expect("at least one pair");
    Ok(rep)
}

/// Smallest positive `M` with `π · M · product / d ≡ 0 (mod 2π)`.
pub fn stage_modulus(d: &BigInt, gcd_product: &BigInt) -> BigInt {
    let two_d: BigInt = d * 2;
    let g = two_d.gcd(gcd_product);
    two_d / g
}

/// Lower and upper bounds on the number of lines:
/// `(ceil(log2 m), min(m - 1, floor(log2 h) + 1))`.
pub fn qubit_bounds(m: usize, h: &BigInt) -> (usize, usize) {
    let lower = ceil_log2(m);
    let upper = m.saturating_sub(1).min(floor_log2(h) + 1);
    (lower, upper)
}

/// Runs the reduction, falling back to [`default_ladder`] when neither
/// reducing pass yields a verified circuit within the qubit cap.
pub fn reduce(phases: &PhaseSet) -> ReductionTrace {
    if phases.len() <= 1 {
        return ReductionTrace {
            iterations: Vec::new(),
            final_set: phases.numerators().to_vec(),
            terminated: true,
            fallback_used: false,
            strategy: Strategy::Trivial,
        };
    }
    let cap = floor_log2(phases.max_numerator()) + 1;
    for strategy in [Strategy::StageModulus, Strategy::Literal] {
        let Some(trace) = reduction_pass(phases, strategy) else {
            continue;
        };
        if trace.measured_lines() > cap {
            continue;
        }
        if exact_replay(
            phases.denominator(),
            &trace.gcds(),
            &trace.adds(),
            &trace.phantoms(),
            phases.numerators(),
        )
        .is_ok()
        {
            return trace;
        }
    }
    default_ladder(phases)
}

/// One reducing pass without the acceptance checks of [`reduce`]. Returns
/// `None` when the iteration guard `floor(log2 h) + 2` is exceeded.
pub fn reduction_pass(phases: &PhaseSet, strategy: Strategy) -> Option<ReductionTrace> {
    let wrap = match strategy {
        Strategy::StageModulus => true,
        Strategy::Literal => false,
        Strategy::Trivial | Strategy::DefaultLadder => return None,
    };
    let d = phases.denominator();
    let guard = floor_log2(phases.max_numerator()) + 2;
    let zero_set = BTreeSet::from([BigInt::zero()]);

    let mut set: BTreeSet<BigInt> = phases.numerators().iter().cloned().collect();
    let mut product = BigInt::one();
    let mut iterations = Vec::new();
    while set != zero_set {
        if iterations.len() >= guard {
            return None;
        }
        let gcd = gcd_set(&set).ok()?;
        product *= &gcd;
        let modulus = stage_modulus(d, &product);
        let quotients: Vec<BigInt> = set.iter().map(|x| x / &gcd).collect();
        let add = mode_difference(&quotients, wrap.then_some(&modulus)).ok()?;
        let phantom = quotients.iter().all(|y| y.is_odd());
        let next: BTreeSet<BigInt> = quotients
            .iter()
            .map(|y| {
                let v = if y.is_odd() { y + &add } else { y.clone() };
                if wrap {
                    v.mod_floor(&modulus)
                } else {
                    v
                }
            })
            .collect();
        iterations.push(Iteration {
            set: set.into_iter().collect(),
            gcd,
            quotients: quotients
                .into_iter()
                .collect::<BTreeSet<_>>()
                .into_iter()
                .collect(),
            add,
            modulus,
            phantom,
        });
        set = next;
    }
    Some(ReductionTrace {
        iterations,
        final_set: set.into_iter().collect(),
        terminated: true,
        fallback_used: false,
        strategy,
    })
}

/// The fallback construction with `floor(log2 h) + 1` lines,
/// `G = [1, 2, 2, ...]` and `A = [-1, -1, ...]`; it separates every integer
/// numerator below `2^n` by its binary digits.
pub fn default_ladder(phases: &PhaseSet) -> ReductionTrace {
    let n = floor_log2(phases.max_numerator()) + 1;
    let d = phases.denominator();
    let minus_one = BigInt::from(-1);
    let mut set: BTreeSet<BigInt> = phases.numerators().iter().cloned().collect();
    let mut product = BigInt::one();
    let mut iterations = Vec::with_capacity(n);
    for i in 0..n {
        let gcd = if i == 0 {
            BigInt::one()
        } else {
            BigInt::from(2)
        };
        product *= &gcd;
        let quotients: Vec<BigInt> = set.iter().map(|x| x / &gcd).collect();
        let phantom = quotients.iter().all(|y| y.is_odd());
        let next = quotients
            .iter()
            .map(|y| {
                if y.is_odd() {
                    y + &minus_one
                } else {
                    y.clone()
                }
            })
            .collect();
        iterations.push(Iteration {
            set: set.into_iter().collect(),
            gcd,
            quotients,
            add: minus_one.clone(),
            modulus: stage_modulus(d, &product),
            phantom,
        });
        set = next;
    }
    ReductionTrace {
        iterations,
        final_set: set.into_iter().collect(),
        terminated: true,
        fallback_used: true,
        strategy: Strategy::DefaultLadder,
    }
}

/// Why an exact replay rejected a set of circuit parameters.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ReplayFailure {
    /// Line phase of numerator `x` on line `line` is not an integer multiple
    /// of π, so its outcome is random.
    NotDeterministic { x: BigInt, line: usize },
    /// A line flagged phantom measured 0 for `x`.
    PhantomMeasuredZero { x: BigInt, line: usize },
    /// Two hypotheses share a bit string.
    Collision { a: BigInt, b: BigInt },
    /// The bit string of `x` does not estimate `x` modulo `2d`.
    WrongEstimate { x: BigInt },
}

/// Replays the line phases of the circuit built from `(gcds, adds)` for every
/// numerator exactly.
///
/// On line `j` the phase is `π q_j` with `q_0 = x / G_0` and
/// `q_j = (q_{j-1} + m_{j-1} A_{j-1}) / G_j`; the outcome is deterministic iff
/// `q_j` is an integer, and `m_j` is its parity. Returns the measured
/// (non-phantom) bit string of each numerator, in input order.
pub fn exact_replay(
    d: &BigInt,
    gcds: &[BigInt],
    adds: &[BigInt],
    phantoms: &[bool],
    numerators: &[BigInt],
) -> std::result::Result<Vec<Vec<bool>>, ReplayFailure> {
    let two_d: BigInt = d * 2;
    let mut seen: HashSet<Vec<bool>> = HashSet::new();
    let mut owner: BTreeMap<Vec<bool>, BigInt> = BTreeMap::new();
    let mut out = Vec::with_capacity(numerators.len());
    for x in numerators {
        let mut w = x.clone();
        let mut product = BigInt::one();
        let mut bits = Vec::new();
        for (line, (g, a)) in gcds.iter().zip(adds).enumerate() {
            let (q, r) = w.div_rem(g);
            if !r.is_zero() {
                return Err(ReplayFailure::NotDeterministic { x: x.clone(), line });
            }
            let bit = q.is_odd();
            let phantom = phantoms.get(line).copied().unwrap_or(false);
            if phantom {
                if !bit {
                    return Err(ReplayFailure::PhantomMeasuredZero { x: x.clone(), line });
                }
            } else {
                bits.push(bit);
            }
            w = if bit { q + a } else { q };
            product *= g;
        }
        if !(product * &w).mod_floor(&two_d).is_zero() {
            return Err(ReplayFailure::WrongEstimate { x: x.clone() });
        }
        if !seen.insert(bits.clone()) {
            return Err(ReplayFailure::Collision {
                a: owner[&bits].clone(),
                b: x.clone(),
            });
        }
        owner.insert(bits.clone(), x.clone());
        out.push(bits);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ints(v: &[i64]) -> Vec<BigInt> {
        v.iter().map(|&x| BigInt::from(x)).collect()
    }

    /// Independent oracle: counts plain integer differences by brute force.
    fn brute_mode_counts(q: &[i64]) -> BTreeMap<i64, usize> {
        let mut counts = BTreeMap::new();
        for &e in q.iter().filter(|y| *y % 2 == 0) {
            for &o in q.iter().filter(|y| y.rem_euclid(2) == 1) {
                *counts.entry(e - o).or_insert(0) += 1;
            }
        }
        counts
    }

    #[test]
    fn mode_difference_examples() {
        let m128 = BigInt::from(128);
        let six_phase = ints(&[21, 22, 64, 65, 107, 108]);
        assert_eq!(
            mode_difference(&six_phase, Some(&m128)).unwrap(),
            BigInt::from(43)
        );
        // Without wrapping, 43 and 1 both have two pairs; 1 wins on magnitude.
        let counts = brute_mode_counts(&[21, 22, 64, 65, 107, 108]);
        assert_eq!(counts[&43], 2);
        assert_eq!(counts[&1], 2);
        assert_eq!(mode_difference(&six_phase, None).unwrap(), BigInt::from(1));

        assert_eq!(
            mode_difference(&ints(&[0, 1]), None).unwrap(),
            BigInt::from(-1)
        );
        assert_eq!(
            mode_difference(&ints(&[11, 18, 23]), None).unwrap(),
            BigInt::from(-5)
        );
        assert_eq!(
            mode_difference(&ints(&[11, 18, 23]), Some(&BigInt::from(64))).unwrap(),
            BigInt::from(-5)
        );
        assert_eq!(
            mode_difference(&ints(&[1, 3]), None).unwrap(),
            BigInt::from(-1)
        );
    }

    #[test]
    fn mode_difference_needs_an_odd() {
        assert_eq!(
            mode_difference(&ints(&[2, 4]), None),
            Err(Error::NoOddElement)
        );
    }

    #[test]
    fn mode_difference_is_odd() {
        for q in [
            &[0, 1, 2, 3, 4, 5, 6, 7][..],
            &[3, 10, 17, 40],
            &[5, 9, 13],
            &[0, 9, 30, 31],
        ] {
            let a = mode_difference(&ints(q), None).unwrap();
            assert!(a.is_odd(), "{q:?} -> {a}");
        }
    }

    #[test]
    fn stage_modulus_examples() {
        let sm = |d: i64, p: i64| stage_modulus(&BigInt::from(d), &BigInt::from(p));
        assert_eq!(sm(64, 64), BigInt::from(2));
        assert_eq!(sm(70, 3), BigInt::from(140));
        assert_eq!(sm(70, 36), BigInt::from(35));
    }

    #[test]
    fn reduce_six_phase() {
        let ps = PhaseSet::from_ints(64, &[21, 22, 64, 65, 107, 108]).unwrap();
        let t = reduce(&ps);
        assert_eq!(t.strategy, Strategy::StageModulus);
        assert!(!t.fallback_used);
        assert_eq!(t.gcds(), ints(&[1, 2, 2, 16]));
        assert_eq!(t.adds(), ints(&[43, 21, -11, -1]));
        assert_eq!(t.phantoms(), vec![false, false, false, true]);
        assert_eq!(t.final_set, ints(&[0]));
        assert_eq!(t.iterations[1].set, ints(&[22, 64, 108]));
    }

    #[test]
    fn reduce_five_phase() {
        let ps = PhaseSet::from_ints(70, &[66, 93, 108, 123, 138]).unwrap();
        let t = reduce(&ps);
        assert_eq!(t.gcds(), ints(&[3, 2, 6, 2]));
        assert_eq!(t.adds(), ints(&[5, -5, -1, -1]));
        assert_eq!(t.phantoms(), vec![false, false, true, false]);
        let moduli: Vec<BigInt> = t.iterations.iter().map(|it| it.modulus.clone()).collect();
        assert_eq!(moduli, ints(&[140, 70, 35, 35]));
    }

    #[test]
    fn reduce_qpe_and_ri() {
        let qpe = PhaseSet::from_ints(4, &[0, 1, 2, 3, 4, 5, 6, 7]).unwrap();
        let t = reduce(&qpe);
        assert_eq!(t.gcds(), ints(&[1, 2, 2]));
        assert_eq!(t.adds(), ints(&[-1, -1, -1]));

        let ri = PhaseSet::from_ints(7, &[0, 1]).unwrap();
        let t = reduce(&ri);
        assert_eq!(t.gcds(), ints(&[1]));
        assert_eq!(t.adds(), ints(&[-1]));
    }

    #[test]
    fn reduce_single_hypothesis_is_empty() {
        let ps = PhaseSet::from_ints(5, &[3]).unwrap();
        let t = reduce(&ps);
        assert!(t.is_empty());
        assert_eq!(t.strategy, Strategy::Trivial);
    }

    #[test]
    fn qubit_bounds_examples() {
        assert_eq!(qubit_bounds(6, &BigInt::from(108)), (3, 5));
        assert_eq!(qubit_bounds(2, &BigInt::from(1)), (1, 1));
        assert_eq!(qubit_bounds(8, &BigInt::from(7)), (3, 3));
    }

    #[test]
    fn default_ladder_examples() {
        let t = default_ladder(&PhaseSet::from_ints(4, &[0, 7]).unwrap());
        assert_eq!(t.gcds(), ints(&[1, 2, 2]));
        assert_eq!(t.adds(), ints(&[-1, -1, -1]));
        assert!(t.fallback_used);

        let t = default_ladder(&PhaseSet::from_ints(1, &[0, 1]).unwrap());
        assert_eq!(t.gcds(), ints(&[1]));

        let t = default_ladder(&PhaseSet::from_ints(64, &[21, 108]).unwrap());
        assert_eq!(t.gcds(), ints(&[1, 2, 2, 2, 2, 2, 2]));
        assert_eq!(t.final_set, ints(&[0]));
    }

    #[test]
    fn ladder_separates_every_integer_below_power_of_two() {
        let all: Vec<i64> = (0..32).collect();
        let ps = PhaseSet::from_ints(17, &all).unwrap();
        let t = default_ladder(&ps);
        let bits = exact_replay(
            ps.denominator(),
            &t.gcds(),
            &t.adds(),
            &t.phantoms(),
            ps.numerators(),
        );
        assert!(bits.is_ok());
    }

    #[test]
    fn stage_modulus_pass_can_be_rejected() {
        // The wrapped pass produces a trace whose exact replay collides.
        let ps =
            PhaseSet::from_ints(138, &[14, 32, 48, 60, 107, 130, 194, 230, 241, 249, 253]).unwrap();
        let wrapped = reduction_pass(&ps, Strategy::StageModulus).unwrap();
        assert!(exact_replay(
            ps.denominator(),
            &wrapped.gcds(),
            &wrapped.adds(),
            &wrapped.phantoms(),
            ps.numerators()
        )
        .is_err());
        let t = reduce(&ps);
        assert_ne!(t.strategy, Strategy::StageModulus);
        assert!(exact_replay(
            ps.denominator(),
            &t.gcds(),
            &t.adds(),
            &t.phantoms(),
            ps.numerators()
        )
        .is_ok());
    }

    #[test]
    fn trace_json_round_trip() {
        let ps = PhaseSet::from_ints(70, &[66, 93, 108, 123, 138]).unwrap();
        let t = reduce(&ps);
        let json = t.to_json();
        assert!(json.contains("\"gcds\""));
        assert!(json.contains("\"-5\""));
        let back = ReductionTrace::from_json(&json).unwrap();
        assert_eq!(back.gcds(), t.gcds());
        assert_eq!(back.adds(), t.adds());
        assert_eq!(back.phantoms(), t.phantoms());
        assert_eq!(back.iterations[0].set, t.iterations[0].set);
    }

    #[test]
    fn phase_set_validation() {
        assert!(PhaseSet::from_ints(4, &[8]).is_err());
        assert!(PhaseSet::from_ints(4, &[-1]).is_err());
        assert!(PhaseSet::from_ints(0, &[0]).is_err());
        assert_eq!(
            PhaseSet::from_ints(4, &[3, 1, 3]).unwrap().numerators(),
            &ints(&[1, 3])[..]
        );
    }

    #[test]
    fn log2_helpers() {
        assert_eq!(floor_log2(&BigInt::from(1)), 0);
        assert_eq!(floor_log2(&BigInt::from(108)), 6);
        assert_eq!(floor_log2(&BigInt::from(128)), 7);
        assert_eq!(ceil_log2(1), 0);
        assert_eq!(ceil_log2(6), 3);
        assert_eq!(ceil_log2(8), 3);
        assert_eq!(ceil_log2(9), 4);
    }
}
