//! Resolution of command-line operands: machines, operator targets, bases,
//! initial states and time grids.

use std::path::Path;

use ballistic_core::hilbert::{head_shift, LatticeShape, Topology};
use ballistic_core::qtm::{bit_rotation_stable_basis, split_path_stable_basis};
use ballistic_core::{
    build_step_operator, hw_direct_sum, hw_tower, Basis, ComplexOperator, ExampleMachine, Rule, RuleTable,
    ToleranceContext, C64,
};
use nalgebra::DMatrix;

use crate::error::{CliError, CliResult};
use crate::machine_file::{parse_complex, parse_machine_file};

#[derive(Debug, Clone)]
pub struct LoadedMachine {
    pub name: String,
    pub rules: RuleTable,
    pub shape: LatticeShape,
}

impl LoadedMachine {
    pub fn step_operator(&self) -> CliResult<ComplexOperator> {
        Ok(build_step_operator(&self.rules, &self.shape)?)
    }
}

/// A machine file path, else a built-in name.
pub fn load_machine(spec: &str, tol: &ToleranceContext) -> CliResult<LoadedMachine> {
    let path = Path::new(spec);
    if path.is_file() {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::input(format!("cannot read {}: {e}", path.display())))?;
        let file = parse_machine_file(&text).map_err(|e| CliError::from(e).context(spec))?;
        return Ok(LoadedMachine {
            name: file.name().to_string(),
            rules: file.rule_table(tol),
            shape: file.shape(),
        });
    }
    match ExampleMachine::from_name(spec) {
        Some(m) => Ok(LoadedMachine {
            name: m.name().to_string(),
            rules: m.rules(),
            shape: m.default_shape(),
        }),
        None => Err(CliError::input(format!(
            "{spec:?} is neither a readable file nor a built-in machine ({})",
            ExampleMachine::NAMES.join(", ")
        ))),
    }
}

/// What an analysis runs on.
#[derive(Debug, Clone)]
pub enum Target {
    Machine(LoadedMachine),
    Operator { label: String, op: ComplexOperator },
}

impl Target {
    pub fn label(&self) -> &str {
        match self {
            Target::Machine(m) => &m.name,
            Target::Operator { label, .. } => label,
        }
    }

    pub fn operator(&self) -> CliResult<ComplexOperator> {
        match self {
            Target::Machine(m) => m.step_operator(),
            Target::Operator { op, .. } => Ok(op.clone()),
        }
    }

    pub fn shape(&self) -> Option<&LatticeShape> {
        match self {
            Target::Machine(m) => Some(&m.shape),
            Target::Operator { .. } => None,
        }
    }
}

pub fn parse_complex_arg(name: &str, text: &str) -> CliResult<C64> {
    parse_complex(text.trim())
        .ok_or_else(|| CliError::input(format!("--{name}: invalid complex number {text:?}")))
}

fn parse_count(kind: &str, text: &str) -> CliResult<usize> {
    text.parse()
        .map_err(|_| CliError::input(format!("{kind}: expected a non-negative integer, found {text:?}")))
}

/// `shift:N`, `cycle:N`, `tower:N`, `sum:BITS`, `matrix:CSV`, else a machine.
pub fn resolve_target(spec: &str, a: &str, tol: &ToleranceContext) -> CliResult<Target> {
    let Some((kind, param)) = spec.split_once(':') else {
        return Ok(Target::Machine(load_machine(spec, tol)?));
    };
    let lattice = |topology| -> CliResult<ComplexOperator> {
        let n = parse_count(kind, param)?;
        Ok(head_shift(&LatticeShape::new(1, n, topology, false)?))
    };
    let op = match kind {
        "shift" => lattice(Topology::Open)?,
        "cycle" => lattice(Topology::Cyclic)?,
        "tower" => hw_tower(parse_count(kind, param)?, parse_complex_arg("a", a)?)?,
        "sum" => {
            let bits = param
                .chars()
                .map(|c| match c {
                    '0' => Ok(false),
                    '1' => Ok(true),
                    _ => Err(CliError::input(format!(
                        "sum: expected a 0/1 string, found {param:?}"
                    ))),
                })
                .collect::<CliResult<Vec<bool>>>()?;
            hw_direct_sum(&bits, parse_complex_arg("a", a)?)?
        }
        "matrix" => ComplexOperator::from_dense(&read_matrix_csv(Path::new(param))?)?,
        _ => return Ok(Target::Machine(load_machine(spec, tol)?)),
    };
    Ok(Target::Operator {
        label: spec.to_string(),
        op,
    })
}

/// Reads a square complex matrix.
///
/// Two layouts are accepted: a dense table with one header row (one column
/// per matrix column), or sparse triplets under the header `row,col,value`.
pub fn read_matrix_csv(path: &Path) -> CliResult<DMatrix<C64>> {
    let fail = |msg: String| CliError::input(format!("{}: {msg}", path.display()));
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| fail(e.to_string()))?;
    let headers = reader.headers().map_err(|e| fail(e.to_string()))?.clone();
    let records = reader
        .records()
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| fail(e.to_string()))?;
    let cell = |text: &str, line: usize| {
        parse_complex(text).ok_or_else(|| fail(format!("line {line}: invalid complex entry {text:?}")))
    };

    if headers.iter().eq(["row", "col", "value"]) {
        let mut entries = Vec::with_capacity(records.len());
        let mut dim = 0;
        for (k, r) in records.iter().enumerate() {
            let line = k + 2;
            let index = |i: usize| {
                r[i].parse::<usize>()
                    .map_err(|_| fail(format!("line {line}: invalid index {:?}", &r[i])))
            };
            let (row, col) = (index(0)?, index(1)?);
            dim = dim.max(row + 1).max(col + 1);
            entries.push((row, col, cell(&r[2], line)?));
        }
        let mut m = DMatrix::zeros(dim, dim);
        for (row, col, v) in entries {
            m[(row, col)] += v;
        }
        return Ok(m);
    }

    let n = headers.len();
    if records.len() != n {
        return Err(fail(format!(
            "expected {n} rows for {n} columns, found {}",
            records.len()
        )));
    }
    let mut m = DMatrix::zeros(n, n);
    for (i, r) in records.iter().enumerate() {
        for (j, text) in r.iter().enumerate() {
            m[(i, j)] = cell(text, i + 2)?;
        }
    }
    Ok(m)
}

fn sorted(rules: &[Rule]) -> Vec<Rule> {
    let mut out = rules.to_vec();
    out.sort_by_key(|r| (r.l, r.s));
    out
}

/// Resolves `--basis`. `@NAME` constructions require the machine's rules to
/// be exactly those of the named family, with the gate read off the table.
pub fn resolve_basis(
    spec: Option<&str>,
    target: &Target,
    dim: usize,
    tol: &ToleranceContext,
) -> CliResult<Basis> {
    let Some(spec) = spec else {
        return Ok(Basis::computational(dim));
    };
    let Some(name) = spec.strip_prefix('@') else {
        return Ok(Basis::from_dense(&read_matrix_csv(Path::new(spec))?, tol)?);
    };
    let Target::Machine(m) = target else {
        return Err(CliError::input(format!(
            "--basis {spec} needs a machine, not an operator target"
        )));
    };
    let gate_of = |l: usize, s: u8| m.rules.rules.iter().find(|r| r.l == l && r.s == s).map(|r| r.v);
    let (candidate, build): (Option<ExampleMachine>, fn(_, _, _) -> _) = match name {
        "bit_rotation" => (
            gate_of(0, 0).map(ExampleMachine::BitRotation),
            bit_rotation_stable_basis,
        ),
        "split_path" => (
            gate_of(0, 1).map(ExampleMachine::SplitPath),
            split_path_stable_basis,
        ),
        _ => {
            return Err(CliError::input(format!(
                "unknown basis construction {spec:?} (use @bit_rotation or @split_path)"
            )))
        }
    };
    let Some(family) = candidate.filter(|c| sorted(&c.rules().rules) == sorted(&m.rules.rules)) else {
        return Err(CliError::input(format!(
            "machine {:?} does not have the rules of {name}",
            m.name
        )));
    };
    let v = match family {
        ExampleMachine::BitRotation(v) | ExampleMachine::SplitPath(v) => v,
        _ => unreachable!("only gate families are matched"),
    };
    Ok(build(&v, &m.shape, tol)?)
}

/// `+`-joined terms, each `h:j:BITS` or a basis index, equally weighted.
pub fn parse_state(spec: &str, shape: Option<&LatticeShape>, dim: usize) -> CliResult<Vec<C64>> {
    let mut indices = Vec::new();
    for term in spec.split('+').map(str::trim) {
        let index = if let Ok(i) = term.parse::<usize>() {
            i
        } else {
            let parts: Vec<&str> = term.split(':').collect();
            let [h, j, bits] = parts[..] else {
                return Err(CliError::input(format!(
                    "state term {term:?}: expected h:j:BITS or an index"
                )));
            };
            let shape = shape.ok_or_else(|| CliError::input("h:j:BITS states need a machine target"))?;
            let bits = bits
                .chars()
                .map(|c| match c {
                    '0' => Ok(0u8),
                    '1' => Ok(1u8),
                    _ => Err(CliError::input(format!("state term {term:?}: bits must be 0/1"))),
                })
                .collect::<CliResult<Vec<u8>>>()?;
            if bits.len() != shape.length {
                return Err(CliError::input(format!(
                    "state term {term:?}: {} bits for a lattice of {} sites",
                    bits.len(),
                    shape.length
                )));
            }
            shape.encode(
                parse_count("head state", h)?,
                parse_count("site", j)?,
                LatticeShape::sigma_from_bits(&bits),
            )?
        };
        if index >= dim {
            return Err(CliError::input(format!(
                "state index {index} out of range (dimension {dim})"
            )));
        }
        if indices.contains(&index) {
            return Err(CliError::input(format!("state index {index} repeated")));
        }
        indices.push(index);
    }
    let weight = C64::new(1.0 / (indices.len() as f64).sqrt(), 0.0);
    let mut psi = vec![C64::new(0.0, 0.0); dim];
    for i in indices {
        psi[i] = weight;
    }
    Ok(psi)
}

/// Comma-separated list, or `START:STOP:COUNT` with both ends included.
pub fn parse_times(spec: &str) -> CliResult<Vec<f64>> {
    let bad = || {
        CliError::input(format!(
            "--times {spec:?}: expected t1,t2,... or START:STOP:COUNT"
        ))
    };
    let number = |s: &str| {
        s.trim()
            .parse::<f64>()
            .ok()
            .filter(|x| x.is_finite())
            .ok_or_else(bad)
    };
    let times = if let [start, stop, count] = spec.split(':').collect::<Vec<_>>()[..] {
        let (start, stop) = (number(start)?, number(stop)?);
        let count: usize = count.trim().parse().map_err(|_| bad())?;
        match count {
            0 => return Err(bad()),
            1 => vec![start],
            _ => (0..count)
                .map(|k| start + (stop - start) * k as f64 / (count - 1) as f64)
                .collect(),
        }
    } else {
        spec.split(',').map(number).collect::<CliResult<Vec<f64>>>()?
    };
    Ok(times)
}
