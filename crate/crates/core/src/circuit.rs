//! Concrete RQPE circuits.
//!
//! Line `j` of a circuit applies
//!
//! ```text
//! H_j · Π_{k<j} CZ_{j,k}^{A_k / (G_{k+1} ... G_j)} · U_j^{d / (G_0 ... G_j)} · H_j
//! ```
//!
//! to `|0>`, where `U = exp(-i θ Z / 2)` and `CZ^p` puts the phase `e^{iπp}`
//! on `|11>`. Measuring 1 on line `j` contributes the bit value
//! `b_j = -A_j (G_0 ... G_j) / d` (units of π) to the phase estimate.

use std::fmt::Write as _;

use num_bigint::BigInt;
use num_complex::Complex64;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exactmath::{gcd_set, lcm, Rational};
use crate::reduction::{PhaseSet, ReductionTrace};

/// Largest line count for which dense 2ⁿ × 2ⁿ objects are built.
pub const MAX_DENSE_QUBITS: usize = 12;

/// Controlled-Z power acting on a line.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CzTerm {
    /// Index of the controlling line.
    pub control: usize,
    /// `p` in `CZ^p`, units of π.
    pub exponent: Rational,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CircuitLine {
    /// Position in the generating trace; kept when phantom lines are removed.
    pub index: usize,
    /// Power of the encoding unitary on this line.
    pub u: Rational,
    #[serde(rename = "cz")]
    pub cz_terms: Vec<CzTerm>,
    /// Uncontrolled `Z^p` powers left behind by removed phantom controls.
    #[serde(rename = "z")]
    pub z_terms: Vec<Rational>,
    pub phantom: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Circuit {
    d: BigInt,
    gcds: Vec<BigInt>,
    adds: Vec<BigInt>,
    lines: Vec<CircuitLine>,
    bit_values: Vec<Rational>,
    source_phases: PhaseSet,
    phantoms_removed: bool,
}

impl Circuit {
    /// Builds the circuit for explicit `(G, A)` parameters. `phantoms[j]`
    /// flags line `j`; lines are retained.
    pub fn from_parameters(
        d: BigInt,
        gcds: Vec<BigInt>,
        adds: Vec<BigInt>,
        phantoms: &[bool],
        source_phases: PhaseSet,
    ) -> Result<Self> {
        if gcds.len() != adds.len() {
            return Err(Error::InvalidArgument(
                "gcds and adds differ in length".into(),
            ));
        }
        if gcds.iter().any(|g| !g.is_positive()) {
            return Err(Error::InvalidArgument("gcds must be positive".into()));
        }
        if !d.is_positive() {
            return Err(Error::InvalidArgument(
                "denominator must be positive".into(),
            ));
        }
        let n = gcds.len();
        let d_rat = Rational::from_integer(d.clone());
        let mut lines = Vec::with_capacity(n);
        let mut prefix = BigInt::one();
        for j in 0..n {
            prefix *= &gcds[j];
            let u = &d_rat / Rational::from_integer(prefix.clone());
            let cz_terms = (0..j)
                .map(|k| {
                    let tail: BigInt = gcds[k + 1..=j].iter().product();
                    CzTerm {
                        control: k,
                        exponent: Rational::new(adds[k].clone(), tail),
                    }
                })
                .collect();
            lines.push(CircuitLine {
                index: j,
                u,
                cz_terms,
                z_terms: Vec::new(),
                phantom: phantoms.get(j).copied().unwrap_or(false),
            });
        }
        let bit_values = compute_bit_values(&d, &gcds, &adds);
        Ok(Self {
            d,
            gcds,
            adds,
            lines,
            bit_values,
            source_phases,
            phantoms_removed: false,
        })
    }

    pub fn denominator(&self) -> &BigInt {
        &self.d
    }

    pub fn gcds(&self) -> &[BigInt] {
        &self.gcds
    }

    pub fn adds(&self) -> &[BigInt] {
        &self.adds
    }

    /// Lines present in the circuit; each is measured.
    pub fn lines(&self) -> &[CircuitLine] {
        &self.lines
    }

    /// Number of lines present (and measured).
    pub fn num_lines(&self) -> usize {
        self.lines.len()
    }

    /// Number of lines in the generating trace, phantoms included.
    pub fn num_trace_lines(&self) -> usize {
        self.gcds.len()
    }

    /// Bit values `b_j` for every trace line, units of π.
    pub fn bit_values(&self) -> &[Rational] {
        &self.bit_values
    }

    pub fn source_phases(&self) -> &PhaseSet {
        &self.source_phases
    }

    pub fn phantoms_removed(&self) -> bool {
        self.phantoms_removed
    }

    /// Trace indices of phantom lines, removed or not.
    pub fn phantom_indices(&self) -> Vec<usize> {
        let present: Vec<usize> = self.lines.iter().map(|l| l.index).collect();
        (0..self.gcds.len())
            .filter(|j| {
                !present.contains(j) || self.lines.iter().any(|l| l.index == *j && l.phantom)
            })
            .collect()
    }

    /// `u` of every present line.
    pub fn unitary_powers(&self) -> Vec<Rational> {
        self.lines.iter().map(|l| l.u.clone()).collect()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&CircuitJson::from(self)).expect("circuit serializes")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let raw: CircuitJson = serde_json::from_str(s).map_err(|e| Error::Parse(e.to_string()))?;
        raw.try_into()
    }

    /// OpenQASM 3 text with `theta` as an input parameter.
    pub fn to_qasm(&self) -> String {
        let n = self.lines.len();
        let pos = |index: usize| self.lines.iter().position(|l| l.index == index);
        let mut out = String::new();
        out.push_str("OPENQASM 3.0;\n");
        out.push_str("include \"stdgates.inc\";\n\n");
        out.push_str("input float[64] theta;\n");
        if n > 0 {
            let _ = writeln!(out, "qubit[{n}] q;");
            let _ = writeln!(out, "bit[{n}] c;");
        }
        out.push('\n');
        for (q, _) in self.lines.iter().enumerate() {
            let _ = writeln!(out, "h q[{q}];");
        }
        for (q, line) in self.lines.iter().enumerate() {
            let _ = writeln!(out, "rz({}*theta) q[{q}];", qasm_factor(&line.u));
        }
        for (q, line) in self.lines.iter().enumerate() {
            for term in &line.cz_terms {
                let Some(c) = pos(term.control) else { continue };
                let _ = writeln!(
                    out,
                    "ctrl @ p(pi*{}) q[{c}], q[{q}];",
                    qasm_factor(&term.exponent)
                );
            }
            for z in &line.z_terms {
                let _ = writeln!(out, "p(pi*{}) q[{q}];", qasm_factor(z));
            }
            let _ = writeln!(out, "h q[{q}];");
            let _ = writeln!(out, "c[{q}] = measure q[{q}];");
        }
        out
    }
}

fn qasm_factor(r: &Rational) -> String {
    if r.denom().is_one() && !r.is_negative() {
        r.to_string()
    } else {
        format!("({r})")
    }
}

fn compute_bit_values(d: &BigInt, gcds: &[BigInt], adds: &[BigInt]) -> Vec<Rational> {
    let mut prefix = BigInt::one();
    gcds.iter()
        .zip(adds)
        .map(|(g, a)| {
            prefix *= g;
            Rational::new(-(a * &prefix), d.clone())
        })
        .collect()
}

/// Circuit for a terminated trace. Phantom lines are flagged but kept.
pub fn build_circuit(trace: &ReductionTrace, phases: &PhaseSet) -> Result<Circuit> {
    if !trace.terminated {
        return Err(Error::InvalidArgument("trace did not terminate".into()));
    }
    Circuit::from_parameters(
        phases.denominator().clone(),
        trace.gcds(),
        trace.adds(),
        &trace.phantoms(),
        phases.clone(),
    )
}

/// Deletes phantom lines. Controlled-Z powers driven by a phantom become
/// uncontrolled Z powers on the same target, since a phantom always reads 1.
pub fn remove_phantoms(circuit: &Circuit) -> Circuit {
    let phantom: Vec<usize> = circuit
        .lines
        .iter()
        .filter(|l| l.phantom)
        .map(|l| l.index)
        .collect();
    if phantom.is_empty() {
        return circuit.clone();
    }
    let lines = circuit
        .lines
        .iter()
        .filter(|l| !l.phantom)
        .map(|l| {
            let mut line = l.clone();
            let (moved, kept): (Vec<CzTerm>, Vec<CzTerm>) = l
                .cz_terms
                .iter()
                .cloned()
                .partition(|t| phantom.contains(&t.control));
            line.cz_terms = kept;
            line.z_terms.extend(moved.into_iter().map(|t| t.exponent));
            line
        })
        .collect();
    Circuit {
        lines,
        phantoms_removed: true,
        ..circuit.clone()
    }
}

/// `b_j = -A_j (G_0 ... G_j) / d` for every trace line, units of π.
pub fn bit_values(circuit: &Circuit) -> Vec<Rational> {
    compute_bit_values(&circuit.d, &circuit.gcds, &circuit.adds)
}

/// Phase estimate, units of π in `[0, 2)`, from one bit per present line.
/// Phantom lines count as measuring 1 whether or not they are present.
/// A circuit with no lines built for a single phase returns that phase.
pub fn estimate_theta(circuit: &Circuit, measured_bits: &[bool]) -> Result<Rational> {
    if measured_bits.len() != circuit.lines.len() {
        return Err(Error::LengthMismatch {
            expected: circuit.lines.len(),
            got: measured_bits.len(),
        });
    }
    if circuit.gcds.is_empty() && circuit.source_phases.len() == 1 {
        return Ok(circuit
            .source_phases
            .phase(&circuit.source_phases.numerators()[0]));
    }
    let mut on = vec![false; circuit.gcds.len()];
    for j in circuit.phantom_indices() {
        on[j] = true;
    }
    for (line, &bit) in circuit.lines.iter().zip(measured_bits) {
        if !line.phantom {
            on[line.index] = bit;
        }
    }
    let sum: Rational = circuit
        .bit_values
        .iter()
        .zip(&on)
        .filter(|(_, &m)| m)
        .map(|(b, _)| b)
        .sum();
    Ok(sum.rem_euclid(&Rational::from(2)))
}

/// Parameters recovered from bit values.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BitValueParameters {
    pub d: BigInt,
    pub gcds: Vec<BigInt>,
    pub adds: Vec<BigInt>,
}

impl BitValueParameters {
    /// Every subset sum of the bit values, as a phase set over `d`.
    pub fn subset_sum_phases(&self) -> Result<PhaseSet> {
        let n = self.gcds.len();
        if n > 24 {
            return Err(Error::TooManyQubits(n, 24));
        }
        let bits = compute_bit_values(&self.d, &self.gcds, &self.adds);
        let two = Rational::from(2);
        let d_rat = Rational::from_integer(self.d.clone());
        let mut xs = Vec::with_capacity(1 << n);
        for mask in 0u32..(1u32 << n) {
            let s: Rational = (0..n)
                .filter(|i| mask >> i & 1 == 1)
                .map(|i| &bits[i])
                .sum();
            let x = s.rem_euclid(&two) * &d_rat;
            xs.push(x.numer().clone());
        }
        PhaseSet::new(self.d.clone(), xs)
    }
}

/// Recovers `(d, G, A)` from bit values (units of π).
///
/// `d` is the common denominator and `S_j = b_j d`. Then
/// `G_i = gcd(S_j / (G_0...G_{i-1}) : j >= i)` and
/// `A_i = -S_i / (G_0...G_i)`. Rejected unless every `A_i` is odd and every
/// `G_i` past the first is even.
pub fn circuit_from_bit_values(bits: &[Rational]) -> Result<BitValueParameters> {
    if bits.is_empty() {
        return Err(Error::EmptyInput);
    }
    let d = bits
        .iter()
        .fold(BigInt::one(), |acc, b| lcm(&acc, b.denom()));
    let d_rat = Rational::from_integer(d.clone());
    let numerators: Vec<BigInt> = bits.iter().map(|b| (b * &d_rat).numer().clone()).collect();

    let mut gcds = Vec::with_capacity(bits.len());
    let mut adds = Vec::with_capacity(bits.len());
    let mut prefix = BigInt::one();
    for i in 0..bits.len() {
        let rest: Vec<BigInt> = numerators[i..].iter().map(|s| s / &prefix).collect();
        let g = gcd_set(&rest).map_err(|_| {
            Error::UnrealizableBitValues(format!("bit values from position {i} on are all zero"))
        })?;
        prefix *= &g;
        let (a, r) = (-&numerators[i]).div_rem(&prefix);
        debug_assert!(r.is_zero());
        if a.is_even() {
            return Err(Error::UnrealizableBitValues(format!("A_{i} = {a} is even")));
        }
        if i > 0 && g.is_odd() {
            return Err(Error::UnrealizableBitValues(format!("G_{i} = {g} is odd")));
        }
        gcds.push(g);
        adds.push(a);
    }
    Ok(BitValueParameters { d, gcds, adds })
}

/// Qubit ordering of the gate matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GateOrdering {
    /// Trailing SWAPs included: row index pairs with the reversed powers
    /// `ũ_i = u_{n-1-i}`, as in the QFT convention.
    Swapped,
    /// No trailing SWAPs: rows pair with `u` directly, matching the
    /// circuit as drawn.
    Unswapped,
}

/// Dense square complex matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct GateMatrix {
    dim: usize,
    data: Vec<Complex64>,
}

impl GateMatrix {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        self.data[row * self.dim + col]
    }

    /// `M† v`.
    pub fn adjoint_apply(&self, v: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(v.len(), self.dim);
        (0..self.dim)
            .map(|col| {
                (0..self.dim)
                    .map(|row| self.get(row, col).conj() * v[row])
                    .sum()
            })
            .collect()
    }

    /// Largest entry of `|M† M - I|`.
    pub fn unitarity_defect(&self) -> f64 {
        let mut worst = 0.0f64;
        for a in 0..self.dim {
            for b in a..self.dim {
                let dot: Complex64 = (0..self.dim)
                    .map(|r| self.get(r, a).conj() * self.get(r, b))
                    .sum();
                let target = if a == b { 1.0 } else { 0.0 };
                worst = worst.max((dot - target).norm());
            }
        }
        worst
    }
}

/// `exp(iπ r)`, exact at multiples of π/2.
pub(crate) fn cis_pi(r: &Rational) -> Complex64 {
    let r = r.rem_euclid(&Rational::from(2));
    let twice = &r * Rational::from(2);
    if twice.is_integer() {
        return match twice.numer().to_u8() {
            Some(0) => Complex64::new(1.0, 0.0),
            Some(1) => Complex64::new(0.0, 1.0),
            Some(2) => Complex64::new(-1.0, 0.0),
            _ => Complex64::new(0.0, -1.0),
        };
    }
    Complex64::from_polar(1.0, std::f64::consts::PI * r.to_f64())
}

/// The RQPE gate: entry `(k, j) = 2^{-n/2} exp[i (b·j)(u'·k)]` with `j_i`,
/// `k_i` the `i`-th bits (least significant first), `b` the bit values in
/// radians and `u'` the unitary powers, reversed for
/// [`GateOrdering::Swapped`]. Uses every present line.
pub fn rqpe_gate_matrix(circuit: &Circuit, ordering: GateOrdering) -> Result<GateMatrix> {
    let n = circuit.lines.len();
    if n > MAX_DENSE_QUBITS {
        return Err(Error::TooManyQubits(n, MAX_DENSE_QUBITS));
    }
    let dim = 1usize << n;
    let b: Vec<Rational> = circuit
        .lines
        .iter()
        .map(|l| circuit.bit_values[l.index].clone())
        .collect();
    let mut u: Vec<Rational> = circuit.lines.iter().map(|l| l.u.clone()).collect();
    if ordering == GateOrdering::Swapped {
        u.reverse();
    }
    let subset = |v: &[Rational], mask: usize| -> Rational {
        (0..n).filter(|i| mask >> i & 1 == 1).map(|i| &v[i]).sum()
    };
    let b_sums: Vec<Rational> = (0..dim).map(|j| subset(&b, j)).collect();
    let u_sums: Vec<Rational> = (0..dim).map(|k| subset(&u, k)).collect();
    let norm = if n.is_multiple_of(2) {
        1.0
    } else {
        std::f64::consts::FRAC_1_SQRT_2
    } * 0.5f64.powi((n / 2) as i32);
    let mut data = Vec::with_capacity(dim * dim);
    for uk in &u_sums {
        for bj in &b_sums {
            data.push(cis_pi(&(bj * uk)) * norm);
        }
    }
    Ok(GateMatrix { dim, data })
}

/// Total unitary applications per run, `r = Σ u_j` over present lines.
pub fn unitary_count(circuit: &Circuit) -> Rational {
    circuit.lines.iter().map(|l| &l.u).sum()
}

#[derive(Serialize, Deserialize)]
struct CircuitJson {
    #[serde(with = "crate::exactmath::int_string")]
    denominator: BigInt,
    #[serde(with = "crate::exactmath::int_string::vec")]
    gcds: Vec<BigInt>,
    #[serde(with = "crate::exactmath::int_string::vec")]
    adds: Vec<BigInt>,
    #[serde(with = "crate::exactmath::int_string::vec")]
    phase_numerators: Vec<BigInt>,
    lines: Vec<CircuitLine>,
    bit_values_pi: Vec<Rational>,
}

impl From<&Circuit> for CircuitJson {
    fn from(c: &Circuit) -> Self {
        CircuitJson {
            denominator: c.d.clone(),
            gcds: c.gcds.clone(),
            adds: c.adds.clone(),
            phase_numerators: c.source_phases.numerators().to_vec(),
            lines: c.lines.clone(),
            bit_values_pi: c.bit_values.clone(),
        }
    }
}

impl TryFrom<CircuitJson> for Circuit {
    type Error = Error;

    fn try_from(raw: CircuitJson) -> Result<Self> {
        let n = raw.gcds.len();
        if raw.adds.len() != n || raw.bit_values_pi.len() != n || raw.lines.len() > n {
            return Err(Error::Parse(
                "circuit arrays have inconsistent lengths".into(),
            ));
        }
        for (pos, line) in raw.lines.iter().enumerate() {
            if line.index >= n || (pos > 0 && raw.lines[pos - 1].index >= line.index) {
                return Err(Error::Parse(format!("bad line index {}", line.index)));
            }
            if line.cz_terms.iter().any(|t| t.control >= line.index) {
                return Err(Error::Parse(format!(
                    "line {} has a control that is not earlier",
                    line.index
                )));
            }
        }
        if raw.gcds.iter().any(|g| !g.is_positive()) {
            return Err(Error::Parse("gcds must be positive".into()));
        }
        let expected = compute_bit_values(&raw.denominator, &raw.gcds, &raw.adds);
        if expected != raw.bit_values_pi {
            return Err(Error::Parse(
                "bit_values_pi inconsistent with gcds/adds".into(),
            ));
        }
        let source_phases = PhaseSet::new(raw.denominator.clone(), raw.phase_numerators)?;
        Ok(Circuit {
            phantoms_removed: raw.lines.len() < n,
            d: raw.denominator,
            gcds: raw.gcds,
            adds: raw.adds,
            lines: raw.lines,
            bit_values: raw.bit_values_pi,
            source_phases,
        })
    }
}
