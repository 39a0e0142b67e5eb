//! Subcommand implementations. Each returns the report text and, for
//! negative answers, the error to signal after the report is written.

use std::collections::BTreeSet;

use ballistic_core::dynamics::{path_predictions, predicted_spectrum, ComponentPrediction};
use ballistic_core::hilbert::Topology;
use ballistic_core::isometry::{power_profile, PowerResidual};
use ballistic_core::qtm::{bit_rotation_stable_basis, split_path_stable_basis};
use ballistic_core::{
    decide_ballistic, decompose, evolve, extract_paths, feynman_hamiltonian, hermitian_eigen, hw_tower,
    path_support_profile, spectrum, verify_spectrum, BallisticVerdict, DecompositionSummary, ExampleMachine,
    Hamiltonian, LatticeShape, MachineVerdict, SpectrumKind, ToleranceContext,
};
use serde::Serialize;

use crate::args::{Command, ExamplesAction, MachineArgs};
use crate::config::Settings;
use crate::error::{CliError, CliResult};
use crate::inputs::{
    load_machine, parse_complex_arg, parse_state, parse_times, resolve_basis, resolve_target, Target,
};
use crate::machine_file::render_machine;
use crate::output;

/// Report text plus an optional negative outcome.
#[derive(Debug)]
pub struct Outcome {
    pub body: String,
    pub failure: Option<CliError>,
}

impl Outcome {
    fn ok(body: String) -> Self {
        Self { body, failure: None }
    }
}

#[derive(Debug, Serialize)]
pub struct Lattice {
    pub heads: usize,
    pub length: usize,
    pub topology: Topology,
    pub dim: usize,
}

impl From<&LatticeShape> for Lattice {
    fn from(s: &LatticeShape) -> Self {
        Self {
            heads: s.n_head,
            length: s.length,
            topology: s.topology,
            dim: s.dim(),
        }
    }
}

#[derive(Debug, Serialize)]
pub struct AnalyzeReport {
    pub report: &'static str,
    pub machine: String,
    pub lattice: Lattice,
    pub basis: String,
    #[serde(flatten)]
    pub verdict: MachineVerdict,
}

#[derive(Debug, Serialize)]
pub struct DecideReport {
    pub report: &'static str,
    pub machine: String,
    pub basis: String,
    pub verdict: BallisticVerdict,
    pub evidence: Vec<String>,
    pub stable_chains: usize,
}

#[derive(Debug, Serialize)]
pub struct DecomposeReport {
    pub report: &'static str,
    pub target: String,
    #[serde(flatten)]
    pub summary: DecompositionSummary,
}

#[derive(Debug, Serialize)]
pub struct Complex {
    pub re: f64,
    pub im: f64,
}

#[derive(Debug, Serialize)]
pub struct CounterexampleReport {
    pub report: &'static str,
    pub tower: usize,
    pub a: Complex,
    pub dim: usize,
    pub first_failing_power: Option<usize>,
    pub powers: Vec<PowerResidual>,
}

pub fn run(command: &Command, settings: &Settings) -> CliResult<Outcome> {
    let tol = &settings.tol;
    match command {
        Command::Analyze(m) => analyze(m, tol),
        Command::Decide(m) => decide(m, tol),
        Command::Decompose { target, a } => decompose_target(target, a, tol),
        Command::Spectrum {
            target,
            predict,
            component,
            basis,
            a,
            ..
        } => spectrum_csv(
            target,
            a,
            basis.as_deref(),
            predict.as_deref(),
            *component,
            settings,
        ),
        Command::Evolve {
            target,
            state,
            times,
            basis,
            a,
            ..
        } => evolve_csv(target, a, basis.as_deref(), state, times, settings),
        Command::Counterexample { tower, a, powers } => counterexample(*tower, a, *powers, tol),
        Command::Examples { action } => examples(action, tol),
    }
}

fn basis_label(spec: Option<&str>) -> String {
    spec.unwrap_or("computational").to_string()
}

fn machine_verdict(m: &MachineArgs, tol: &ToleranceContext) -> CliResult<(Target, MachineVerdict)> {
    let machine = load_machine(&m.machine, tol)?;
    let target = Target::Machine(machine);
    let Target::Machine(machine) = &target else {
        unreachable!()
    };
    let basis = match &m.basis {
        Some(_) => Some(resolve_basis(
            m.basis.as_deref(),
            &target,
            machine.shape.dim(),
            tol,
        )?),
        None => None,
    };
    let verdict = decide_ballistic(&machine.rules, &machine.shape, basis.as_ref(), tol)?;
    Ok((target, verdict))
}

fn analyze(m: &MachineArgs, tol: &ToleranceContext) -> CliResult<Outcome> {
    let (target, verdict) = machine_verdict(m, tol)?;
    let Target::Machine(machine) = target else {
        unreachable!()
    };
    let report = AnalyzeReport {
        report: "analyze",
        machine: machine.name,
        lattice: Lattice::from(&machine.shape),
        basis: basis_label(m.basis.as_deref()),
        verdict,
    };
    Ok(Outcome::ok(output::json(&report)?))
}

fn decide(m: &MachineArgs, tol: &ToleranceContext) -> CliResult<Outcome> {
    let (target, verdict) = machine_verdict(m, tol)?;
    let report = DecideReport {
        report: "decide",
        machine: target.label().to_string(),
        basis: basis_label(m.basis.as_deref()),
        verdict: verdict.ballistic,
        evidence: verdict.evidence,
        stable_chains: verdict.stable_chains,
    };
    let failure = (report.verdict == BallisticVerdict::NotBallistic)
        .then(|| CliError::verdict(format!("{} is not ballistic", report.machine)));
    Ok(Outcome {
        body: output::json(&report)?,
        failure,
    })
}

fn decompose_target(spec: &str, a: &str, tol: &ToleranceContext) -> CliResult<Outcome> {
    let target = resolve_target(spec, a, tol)?;
    let t = target.operator()?;
    let d = decompose(&t, tol)?;
    let report = DecomposeReport {
        report: "decompose",
        target: target.label().to_string(),
        summary: d.summary(),
    };
    Ok(Outcome::ok(output::json(&report)?))
}

fn hamiltonian_in_basis(h: &Hamiltonian, basis: &ballistic_core::Basis) -> CliResult<Hamiltonian> {
    Ok(Hamiltonian {
        matrix: basis.conjugate(&h.matrix)?,
        k: h.k,
    })
}

fn spectrum_csv(
    spec: &str,
    a: &str,
    basis: Option<&str>,
    predict: Option<&str>,
    component: Option<usize>,
    settings: &Settings,
) -> CliResult<Outcome> {
    let tol = &settings.tol;
    let target = resolve_target(spec, a, tol)?;
    let t = target.operator()?;
    let h = feynman_hamiltonian(&t, settings.k)?;

    if predict.is_none() && component.is_none() {
        let header = ["index".to_string(), "energy".to_string()];
        let rows: Vec<Vec<String>> = spectrum(&h, tol)?
            .values
            .iter()
            .enumerate()
            .map(|(i, e)| vec![i.to_string(), output::float(*e)])
            .collect();
        return Ok(Outcome::ok(output::csv_table(&header, &rows)?));
    }

    let b = resolve_basis(basis, &target, t.dim(), tol)?;
    let hb = hamiltonian_in_basis(&h, &b)?;
    let kind = predict.map(SpectrumKind::parse).transpose()?;
    let prediction = match component {
        Some(c) => {
            let paths = extract_paths(&t, &b, tol)?;
            let mut all = path_predictions(&paths);
            if c >= all.len() {
                return Err(CliError::input(format!(
                    "component {c} out of range ({} paths)",
                    all.len()
                )));
            }
            let mut p = all.swap_remove(c);
            if let Some(kind) = kind {
                p.kind = kind;
            }
            p
        }
        None => ComponentPrediction {
            indices: (0..t.dim()).collect(),
            kind: kind.expect("predict is set"),
        },
    };
    if prediction.indices.len() != prediction.kind.size() {
        return Err(CliError::input(format!(
            "prediction covers {} states but the block has {}; pick a path with --component",
            prediction.kind.size(),
            prediction.indices.len()
        )));
    }
    let report = verify_spectrum(&hb, std::slice::from_ref(&prediction), tol)?;
    let exact = hermitian_eigen(&hb.matrix.restrict(&prediction.indices)?, tol)?.values;
    let mut predicted = predicted_spectrum(prediction.kind, settings.k).energies;
    predicted.sort_by(f64::total_cmp);

    let header = ["index", "energy", "predicted", "residual"].map(String::from);
    let rows: Vec<Vec<String>> = exact
        .iter()
        .zip(&predicted)
        .enumerate()
        .map(|(i, (e, p))| {
            vec![
                i.to_string(),
                output::float(*e),
                output::float(*p),
                output::float((e - p).abs()),
            ]
        })
        .collect();
    let check = &report.components[0];
    let failure = (!report.passed).then(|| {
        CliError::verdict(format!(
            "spectrum does not match {:?}: max energy error {:e} at level {}, min overlap {}, leakage {:e}",
            prediction.kind, check.max_energy_error, check.worst_level, check.min_overlap, check.leakage
        ))
    });
    Ok(Outcome {
        body: output::csv_table(&header, &rows)?,
        failure,
    })
}

fn evolve_csv(
    spec: &str,
    a: &str,
    basis: Option<&str>,
    state: &str,
    times: &str,
    settings: &Settings,
) -> CliResult<Outcome> {
    let tol = &settings.tol;
    let target = resolve_target(spec, a, tol)?;
    let t = target.operator()?;
    let h = feynman_hamiltonian(&t, settings.k)?;
    let b = resolve_basis(basis, &target, t.dim(), tol)?;
    let paths = extract_paths(&t, &b, tol)?;
    let psi0 = parse_state(state, target.shape(), t.dim())?;
    let times = parse_times(times)?;

    let coords = b.coordinates(&psi0)?;
    let origin: Vec<usize> = coords
        .iter()
        .enumerate()
        .filter(|(_, z)| z.norm() > tol.eps_zero)
        .filter_map(|(i, _)| paths.chain_of(i))
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();

    let mut header = vec!["t".to_string()];
    header.extend(origin.iter().map(|c| format!("chain_{c}")));
    header.extend(["leakage".to_string(), "norm".to_string()]);
    let states = evolve(&h, &psi0, &times, tol)?;
    let mut rows = Vec::with_capacity(times.len());
    for (time, psi) in times.iter().zip(&states) {
        let profile = path_support_profile(psi, &paths, &b, &origin)?;
        let mut row = vec![output::float(*time)];
        row.extend(
            origin
                .iter()
                .map(|&c| output::float(profile.chain_probabilities[c])),
        );
        row.push(output::float(profile.leakage));
        row.push(output::float(profile.norm));
        rows.push(row);
    }
    Ok(Outcome::ok(output::csv_table(&header, &rows)?))
}

fn counterexample(
    tower: usize,
    a: &str,
    powers: Option<usize>,
    tol: &ToleranceContext,
) -> CliResult<Outcome> {
    let a = parse_complex_arg("a", a)?;
    let u = hw_tower(tower, a)?;
    let table = power_profile(&u, powers.unwrap_or(tower + 1), tol);
    let report = CounterexampleReport {
        report: "counterexample",
        tower,
        a: Complex { re: a.re, im: a.im },
        dim: u.dim(),
        first_failing_power: table.iter().find(|p| !p.partial_isometry).map(|p| p.power),
        powers: table,
    };
    Ok(Outcome::ok(output::json(&report)?))
}

fn description(m: &ExampleMachine) -> &'static str {
    match m {
        ExampleMachine::ZeroMotion => "head moves right over 0 bits, leaving them alone",
        ExampleMachine::BitRotation(_) => "head moves right over 0 bits, rotating each one",
        ExampleMachine::Turnaround(_) => "rotates 0s moving right, turns at a 1, flips 1s moving left",
        ExampleMachine::SplitPath(_) => "five rules; one rotation step splits the path in two",
        ExampleMachine::Erasure => "moves right resetting every bit to 0",
    }
}

fn builtin(name: &str) -> CliResult<ExampleMachine> {
    ExampleMachine::from_name(name).ok_or_else(|| {
        CliError::input(format!(
            "no built-in machine {name:?} ({})",
            ExampleMachine::NAMES.join(", ")
        ))
    })
}

fn examples(action: &ExamplesAction, tol: &ToleranceContext) -> CliResult<Outcome> {
    let body = match action {
        ExamplesAction::List => {
            let mut s = String::new();
            for name in ExampleMachine::NAMES {
                let m = builtin(name)?;
                s.push_str(&format!("{name:<14}{}\n", description(&m)));
            }
            s
        }
        ExamplesAction::Emit { name } => {
            let m = builtin(name)?;
            render_machine(m.name(), Some(description(&m)), &m.rules(), &m.default_shape())
        }
        ExamplesAction::Basis { name } => {
            let m = builtin(name)?;
            let shape = m.default_shape();
            let basis = match &m {
                ExampleMachine::BitRotation(v) => bit_rotation_stable_basis(v, &shape, tol)?,
                ExampleMachine::SplitPath(v) => split_path_stable_basis(v, &shape, tol)?,
                _ => {
                    return Err(CliError::input(format!(
                        "{name} has no built-in basis construction"
                    )))
                }
            };
            let rows: Vec<Vec<String>> = basis
                .matrix()
                .triplets()
                .map(|(r, c, v)| vec![r.to_string(), c.to_string(), output::complex(v)])
                .collect();
            output::csv_table(&["row", "col", "value"].map(String::from), &rows)?
        }
    };
    Ok(Outcome::ok(body))
}
