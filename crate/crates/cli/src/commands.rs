use std::fmt::Write as _;
use std::path::Path;

use rqpe_core::bayes::{
    convergence_slope, run_experiment, Experiment, PosteriorGrid, PriorSupport,
};
use rqpe_core::circuit::{circuit_from_bit_values, estimate_theta, unitary_count};
use rqpe_core::metrics::{
    cfi_closed_form, cfi_numeric, crb, crb_variance, distance_grid, repeated_range,
    resource_comparison, CrbForm,
};
use rqpe_core::reduction::{qubit_bounds, ReductionTrace};
use rqpe_core::simulator::{
    outcome_distribution, probability_map_csv, sample_run, statevector_distribution,
    verify_perfect_distinguishability,
};
use rqpe_core::{
    build_circuit, normalize_phase_set, reduce, remove_phantoms, Circuit, Error, PhaseSet,
    Rational, Strategy, Theta,
};

use crate::error::CliError;
use crate::output::{emit, read, write_atomic};
use crate::parse::{self, format_pi};
use crate::{
    BayesArgs, CompareArgs, DistanceArgs, EstimateArgs, ExportArgs, ExportFormat, FisherArgs,
    GenerateArgs, ProbmapArgs, ReproArgs, SimulateArgs,
};

fn load_circuit(path: &Path) -> Result<Circuit, CliError> {
    Ok(Circuit::from_json(&read(path)?)?)
}

fn strategy_name(s: Strategy) -> &'static str {
    match s {
        Strategy::Trivial => "trivial",
        Strategy::StageModulus => "stage-modulus",
        Strategy::Literal => "literal",
        Strategy::DefaultLadder => "default-ladder",
    }
}

fn join<T: ToString>(items: impl IntoIterator<Item = T>) -> String {
    items
        .into_iter()
        .map(|x| x.to_string())
        .collect::<Vec<_>>()
        .join(", ")
}

fn verify(circuit: &Circuit, phases: &PhaseSet) -> Result<usize, CliError> {
    verify_perfect_distinguishability(circuit, phases)
        .map(|m| m.len())
        .map_err(|f| CliError::Verification(f.to_string()))
}

/// Text rendering, one row per line.
fn diagram(circuit: &Circuit) -> String {
    let mut out = String::new();
    for line in circuit.lines() {
        let _ = write!(out, "q{}: H -- U^{}", line.index, line.u);
        for t in &line.cz_terms {
            let _ = write!(out, " -- CZ^{}[q{}]", t.exponent, t.control);
        }
        for z in &line.z_terms {
            let _ = write!(out, " -- Z^{z}");
        }
        let tag = if line.phantom { "  (phantom)" } else { "" };
        let _ = writeln!(out, " -- H -- M{tag}");
    }
    out
}

fn summary(circuit: &Circuit, phases: &PhaseSet, trace: Option<&ReductionTrace>) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        "phases: {} over d = {}",
        phases.len(),
        phases.denominator()
    );
    if let Some(t) = trace {
        let _ = writeln!(
            s,
            "strategy: {} (fallback: {})",
            strategy_name(t.strategy),
            if t.fallback_used { "yes" } else { "no" }
        );
    }
    let phantoms = circuit.phantom_indices();
    let _ = writeln!(
        s,
        "lines: {} in trace, {} in circuit, phantom: [{}]",
        circuit.num_trace_lines(),
        circuit.num_lines(),
        join(&phantoms)
    );
    let _ = writeln!(s, "G = [{}]", join(circuit.gcds()));
    let _ = writeln!(s, "A = [{}]", join(circuit.adds()));
    let _ = writeln!(s, "u = [{}]", join(circuit.unitary_powers()));
    let _ = writeln!(
        s,
        "bit values = [{}]",
        join(circuit.bit_values().iter().map(format_pi))
    );
    let _ = writeln!(s, "unitary applications r = {}", unitary_count(circuit));
    let cfi: Rational = circuit.lines().iter().map(|l| &l.u * &l.u).sum();
    let _ = writeln!(s, "CFI = {cfi}");
    if let Some(min) = circuit.lines().iter().map(|l| &l.u).min() {
        let range = Rational::from(2) / min;
        let _ = writeln!(
            s,
            "repeated range = {} ({:.6} rad)",
            format_pi(&range),
            repeated_range(circuit)
        );
    }
    if !phases.is_empty() {
        let measured = circuit.num_trace_lines() - phantoms.len();
        let (lower, upper) = qubit_bounds(phases.len(), phases.max_numerator());
        let verdict = if lower <= measured && measured <= upper {
            "within"
        } else {
            "outside"
        };
        let _ = writeln!(
            s,
            "qubit bounds: {lower} <= {measured} <= {upper}: {verdict}"
        );
    }
    s
}

pub fn generate(a: GenerateArgs) -> Result<(), CliError> {
    if !(a.tolerance > 0.0) {
        return Err(Error::BadTolerance(a.tolerance).into());
    }
    let (circuit, phases, trace) = if let Some(text) = &a.bit_values {
        let bits = parse::list(text, a.tolerance)?;
        let params = circuit_from_bit_values(&bits)?;
        let phases = params.subset_sum_phases()?;
        let circuit =
            Circuit::from_parameters(params.d, params.gcds, params.adds, &[], phases.clone())?;
        (circuit, phases, None)
    } else {
        let text = match (&a.phases, &a.phases_file) {
            (Some(t), _) => t.clone(),
            (None, Some(p)) => read(p)?,
            (None, None) => unreachable!("clap requires a source"),
        };
        let phases = normalize_phase_set(&parse::list(&text, a.tolerance)?)?;
        let trace = reduce(&phases);
        let full = build_circuit(&trace, &phases)?;
        let circuit = if a.keep_phantoms {
            full
        } else {
            remove_phantoms(&full)
        };
        (circuit, phases, Some(trace))
    };

    print!("{}", summary(&circuit, &phases, trace.as_ref()));
    print!("{}", diagram(&circuit));
    let verified = verify(&circuit, &phases)?;
    println!("verified: {verified} phases give distinct certain outcomes");

    if let Some(p) = &a.out {
        write_atomic(p, &circuit.to_json())?;
    }
    if let (Some(p), Some(t)) = (&a.trace_out, &trace) {
        write_atomic(p, &t.to_json())?;
    }
    Ok(())
}

pub fn simulate(a: SimulateArgs) -> Result<(), CliError> {
    let circuit = load_circuit(&a.circuit)?;
    let theta = parse::theta(&a.theta)?;
    let dist = if a.statevector {
        statevector_distribution(&circuit, &theta)?
    } else {
        outcome_distribution(&circuit, &theta)?
    };
    let mut counts = vec![0u64; dist.probabilities.len()];
    for run in 0..a.samples {
        let bits = sample_run(&circuit, &theta, a.seed, run);
        counts[rqpe_core::simulator::index_from_bits(&bits)] += 1;
    }
    let mut csv = String::from(if a.samples > 0 {
        "bitstring,probability,count\n"
    } else {
        "bitstring,probability\n"
    });
    for (k, p) in dist.probabilities.iter().enumerate() {
        let _ = write!(csv, "{},{p:.12}", dist.bitstring(k));
        if a.samples > 0 {
            let _ = write!(csv, ",{}", counts[k]);
        }
        csv.push('\n');
    }
    emit(a.out.as_deref(), &csv)
}

pub fn probmap(a: ProbmapArgs) -> Result<(), CliError> {
    let circuit = load_circuit(&a.circuit)?;
    emit(a.out.as_deref(), &probability_map_csv(&circuit, a.grid)?)
}

pub fn distance(a: DistanceArgs) -> Result<(), CliError> {
    let circuit = load_circuit(&a.circuit)?;
    if let (Some(ta), Some(tb)) = (&a.theta_a, &a.theta_b) {
        let d = rqpe_core::metrics::distance(&circuit, &parse::theta(ta)?, &parse::theta(tb)?)?;
        println!("{d:.12}");
        return Ok(());
    }
    emit(a.out.as_deref(), &distance_grid(&circuit, a.grid)?.to_csv())
}

pub fn fisher(a: FisherArgs) -> Result<(), CliError> {
    let circuit = load_circuit(&a.circuit)?;
    let closed = cfi_closed_form(&circuit);
    println!("closed-form CFI: {closed}");
    let candidates: Vec<f64> = match a.theta {
        Some(t) => vec![t],
        None => (0..32).map(|i| 0.3 + 0.173 * i as f64).collect(),
    };
    let mut numeric = None;
    for t in &candidates {
        match cfi_numeric(&circuit, *t, a.step) {
            Ok(v) => {
                numeric = Some((*t, v));
                break;
            }
            Err(Error::NearZeroProbability(_)) if a.theta.is_none() => continue,
            Err(e) => return Err(e.into()),
        }
    }
    let (t, v) = numeric
        .ok_or_else(|| CliError::Input("no generic phase found for the numerical check".into()))?;
    println!("numeric CFI at θ = {t:.6} rad: {v:.9}");
    println!("relative difference: {:.3e}", (v - closed).abs() / closed);
    println!(
        "CRB variance 1/(R·I), R = {}: {:.6e}",
        a.runs,
        crb_variance(a.runs, closed)
    );
    println!(
        "CRB 1/(√R·√I), R = {}: {:.6e}",
        a.runs,
        crb(a.runs, closed, CrbForm::RootProduct)
    );
    Ok(())
}

pub fn estimate(a: EstimateArgs) -> Result<(), CliError> {
    let circuit = load_circuit(&a.circuit)?;
    let bits = parse::bits(&a.bits)?;
    let est = estimate_theta(&circuit, &bits)?;
    println!(
        "{} ({:.12} rad)",
        format_pi(&est),
        Theta::PiMultiple(est.clone()).radians()
    );
    Ok(())
}

fn bayes_report(name: &str, circuit: &Circuit, post: &PosteriorGrid) -> String {
    let mut s = String::new();
    let var = post.variance();
    let bound = crb_variance(post.runs_completed, cfi_closed_form(circuit));
    let _ = write!(
        s,
        "{name}: runs {}, variance {var:.6e}, CRB {bound:.6e}, ratio {:.3}",
        post.runs_completed,
        var / bound
    );
    if post.runs_completed >= 200 {
        if let Ok(slope) = convergence_slope(post, 100, post.runs_completed.min(1000)) {
            let _ = write!(s, ", slope {slope:.3}");
        }
    }
    let _ = write!(s, ", MAP {:.6}", post.map_estimate());
    if post.support == PriorSupport::FullCircle {
        let peaks = post.peaks(0.05);
        let _ = write!(s, ", peaks {}", peaks.len());
        if let Some(main) = peaks.iter().max_by(|a, b| a.height.total_cmp(&b.height)) {
            let _ = write!(
                s,
                " (tallest at {:.6}, height {:.4}, mass {:.4}, peak variance {:.6e})",
                main.mean, main.height, main.mass, main.variance
            );
        }
    }
    s.push('\n');
    s
}

pub fn bayes(a: BayesArgs) -> Result<(), CliError> {
    let circuit = load_circuit(&a.circuit)?;
    let exp = Experiment {
        theta_true: parse::theta(&a.theta)?,
        runs: a.runs,
        support: parse::prior(&a.prior)?,
        grid_points: a.grid,
        seed: a.seed,
    };
    let post = run_experiment(&circuit, &exp)?;
    print!("{}", bayes_report("posterior", &circuit, &post));
    if let Some(dir) = &a.out_dir {
        write_atomic(&dir.join("experiment.csv"), &post.experiment_csv())?;
        write_atomic(&dir.join("posterior.csv"), &post.posterior_csv())?;
    }
    Ok(())
}

pub fn compare(a: CompareArgs) -> Result<(), CliError> {
    let range = parse::rational(&a.range, 1e-12)?;
    let report = resource_comparison(a.precision, &range)?;
    emit(a.out.as_deref(), &(report.to_json() + "\n"))
}

pub fn export(a: ExportArgs) -> Result<(), CliError> {
    let circuit = load_circuit(&a.circuit)?;
    let text = match a.format {
        ExportFormat::Qasm => circuit.to_qasm(),
        ExportFormat::Json => circuit.to_json() + "\n",
    };
    emit(a.out.as_deref(), &text)
}

fn reference_circuits() -> Result<Vec<(&'static str, Circuit, PhaseSet)>, CliError> {
    let sets: [(&str, i64, Vec<i64>); 5] = [
        ("six_phase", 64, vec![21, 22, 64, 65, 107, 108]),
        ("five_phase", 70, vec![66, 93, 108, 123, 138]),
        ("ri7", 7, vec![0, 1]),
        ("qpe3", 4, (0..8).collect()),
        ("rqpe61", 6, vec![0, 1, 6, 7]),
    ];
    sets.into_iter()
        .map(|(name, d, xs)| {
            let ps = PhaseSet::from_ints(d, &xs)?;
            let c = remove_phantoms(&build_circuit(&reduce(&ps), &ps)?);
            verify(&c, &ps)?;
            Ok((name, c, ps))
        })
        .collect()
}

pub fn repro(a: ReproArgs) -> Result<(), CliError> {
    let dir = &a.out_dir;
    let circuits = reference_circuits()?;
    for (name, c, _) in &circuits {
        write_atomic(
            &dir.join("circuits").join(format!("{name}.json")),
            &(c.to_json() + "\n"),
        )?;
        write_atomic(
            &dir.join("circuits").join(format!("{name}.qasm")),
            &c.to_qasm(),
        )?;
    }

    let mut fisher =
        String::from("circuit,u,cfi_closed,cfi_numeric,repeated_range,unitary_count\n");
    let mut summary = String::new();
    for (name, c, _) in circuits
        .iter()
        .filter(|(n, _, _)| ["ri7", "qpe3", "rqpe61"].contains(n))
    {
        write_atomic(
            &dir.join("probmap").join(format!("{name}.csv")),
            &probability_map_csv(c, 512)?,
        )?;
        write_atomic(
            &dir.join("distance").join(format!("{name}.csv")),
            &distance_grid(c, 256)?.to_csv(),
        )?;
        let numeric = cfi_numeric(c, 0.4, 1e-5)?;
        let _ = writeln!(
            fisher,
            "{name},{},{},{numeric:.9},{:.12},{}",
            c.unitary_powers()
                .iter()
                .map(|u| u.to_string())
                .collect::<Vec<_>>()
                .join(" "),
            cfi_closed_form(c),
            repeated_range(c),
            unitary_count(c)
        );
        let pi = std::f64::consts::PI;
        for (label, support) in [
            (
                "narrow",
                PriorSupport::Interval {
                    lo: pi,
                    hi: 7.0 * pi / 6.0,
                },
            ),
            ("full", PriorSupport::FullCircle),
        ] {
            let exp = Experiment {
                theta_true: Theta::pi_multiple(13, 12),
                runs: a.runs,
                support,
                grid_points: a.grid,
                seed: a.seed,
            };
            let post = run_experiment(c, &exp)?;
            let base = dir.join("bayes").join(label);
            write_atomic(
                &base.join(format!("{name}_experiment.csv")),
                &post.experiment_csv(),
            )?;
            write_atomic(
                &base.join(format!("{name}_posterior.csv")),
                &post.posterior_csv(),
            )?;
            summary.push_str(&bayes_report(&format!("{label} {name}"), c, &post));
        }
    }
    write_atomic(&dir.join("fisher.csv"), &fisher)?;
    write_atomic(&dir.join("bayes").join("summary.txt"), &summary)?;
    print!("{summary}");
    println!("wrote reference data under {}", dir.display());
    Ok(())
}
