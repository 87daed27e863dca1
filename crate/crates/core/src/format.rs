//! On-disk formats: TOML problem files and the per-iteration trace CSV.
//!
//! A problem file names either one operator under `[operator]` or a split
//! pair under `[a]` and `[b]`. Operators are tables with a `kind` key; sums
//! nest their summands under `[*.left]` and `[*.right]`. Matrices are arrays
//! of rows. Box bounds may be `inf` / `-inf`.
//!
//! ```toml
//! name = "composite"
//! dimension = 2
//! known_solution = [0.5, 0.0]
//!
//! [a]
//! kind = "quadratic_gradient"
//! gamma = 1.0
//! matrix = [[1.0, 0.0], [0.0, 1.0]]
//! shift = [1.0, 0.25]
//!
//! [b]
//! kind = "abs_subdifferential"
//! weight = 0.5
//! ```

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::diagnostics::TraceRecord;
use crate::error::{HpeError, Result};
use crate::operators::{OperatorKind, OperatorSpec};
use crate::problems::{ProblemInstance, ProblemOperator};
use crate::space::{Matrix, Vector};

pub const TRACE_HEADER: &str = "k,step_sq,gap_sq,v_sq,eps,r_norm,slack,phi,mu";

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OperatorDesc {
    pub kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weight: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub matrix: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shift: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lower: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub upper: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub left: Option<Box<OperatorDesc>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub right: Option<Box<OperatorDesc>>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemFile {
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dimension: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub start: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub known_solution: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub params: BTreeMap<String, f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub operator: Option<OperatorDesc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a: Option<OperatorDesc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub b: Option<OperatorDesc>,
}

fn parse_err(msg: impl Into<String>) -> HpeError {
    HpeError::Parse(msg.into())
}

fn matrix_rows(m: &Matrix) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

fn rows_matrix(rows: &[Vec<f64>]) -> Result<Matrix> {
    let n = rows.len();
    let width = rows.first().map_or(0, Vec::len);
    if n == 0 || width == 0 {
        return Err(parse_err("matrix must be non-empty"));
    }
    if let Some(i) = rows.iter().position(|r| r.len() != width) {
        return Err(parse_err(format!("matrix row {i} has {} entries, expected {width}", rows[i].len())));
    }
    if rows.iter().flatten().any(|v| !v.is_finite()) {
        return Err(parse_err("matrix entries must be finite"));
    }
    Ok(Matrix::from_fn(n, width, |i, j| rows[i][j]))
}

fn finite_vector(v: &[f64], what: &str) -> Result<Vector> {
    if v.iter().any(|x| !x.is_finite()) {
        return Err(parse_err(format!("{what} entries must be finite")));
    }
    Ok(Vector::from_column_slice(v))
}

impl OperatorDesc {
    pub fn from_spec(op: &OperatorSpec) -> Self {
        let mut d = OperatorDesc { gamma: op.gamma(), beta: op.beta(), ..Default::default() };
        match op.kind() {
            OperatorKind::LinearPsd(m) => {
                d.kind = "linear_psd".into();
                d.matrix = Some(matrix_rows(m));
            }
            OperatorKind::Skew(m) => {
                d.kind = "skew".into();
                d.matrix = Some(matrix_rows(m));
            }
            OperatorKind::ScaledIdentity(l) => {
                d.kind = "scaled_identity".into();
                d.lambda = Some(*l);
            }
            OperatorKind::AbsSubdifferential { weight } => {
                d.kind = "abs_subdifferential".into();
                d.weight = Some(*weight);
            }
            OperatorKind::BoxNormalCone { lower, upper } => {
                d.kind = "box_normal_cone".into();
                d.lower = Some(lower.iter().copied().collect());
                d.upper = Some(upper.iter().copied().collect());
            }
            OperatorKind::AffineMonotone { matrix, shift } => {
                d.kind = "affine_monotone".into();
                d.matrix = Some(matrix_rows(matrix));
                d.shift = Some(shift.iter().copied().collect());
            }
            OperatorKind::QuadraticGradient { matrix, shift } => {
                d.kind = "quadratic_gradient".into();
                d.matrix = Some(matrix_rows(matrix));
                d.shift = Some(shift.iter().copied().collect());
            }
            OperatorKind::Sum(l, r) => {
                d.kind = "sum".into();
                d.left = Some(Box::new(OperatorDesc::from_spec(l)));
                d.right = Some(Box::new(OperatorDesc::from_spec(r)));
            }
        }
        d
    }

    fn check_fields(&self, allowed: &[&str]) -> Result<()> {
        let present = [
            ("lambda", self.lambda.is_some()),
            ("weight", self.weight.is_some()),
            ("matrix", self.matrix.is_some()),
            ("shift", self.shift.is_some()),
            ("lower", self.lower.is_some()),
            ("upper", self.upper.is_some()),
            ("left", self.left.is_some()),
            ("right", self.right.is_some()),
        ];
        for (name, set) in present {
            if set && !allowed.contains(&name) {
                return Err(parse_err(format!("field '{name}' does not apply to kind '{}'", self.kind)));
            }
        }
        Ok(())
    }

    fn required<'a, T>(&self, field: &'a Option<T>, name: &str) -> Result<&'a T> {
        field.as_ref().ok_or_else(|| parse_err(format!("kind '{}' needs field '{name}'", self.kind)))
    }

    pub fn to_spec(&self) -> Result<OperatorSpec> {
        let op = match self.kind.as_str() {
            "linear_psd" => {
                self.check_fields(&["matrix"])?;
                OperatorSpec::linear_psd(rows_matrix(self.required(&self.matrix, "matrix")?)?)?
            }
            "skew" => {
                self.check_fields(&["matrix"])?;
                OperatorSpec::skew(rows_matrix(self.required(&self.matrix, "matrix")?)?)?
            }
            "scaled_identity" => {
                self.check_fields(&["lambda"])?;
                OperatorSpec::scaled_identity(*self.required(&self.lambda, "lambda")?)?
            }
            "abs_subdifferential" => {
                self.check_fields(&["weight"])?;
                OperatorSpec::abs_subdifferential(self.weight.unwrap_or(1.0))?
            }
            "box_normal_cone" => {
                self.check_fields(&["lower", "upper"])?;
                let lower = Vector::from_column_slice(self.required(&self.lower, "lower")?);
                let upper = Vector::from_column_slice(self.required(&self.upper, "upper")?);
                OperatorSpec::box_normal_cone(lower, upper)?
            }
            "affine_monotone" | "quadratic_gradient" => {
                self.check_fields(&["matrix", "shift"])?;
                let m = rows_matrix(self.required(&self.matrix, "matrix")?)?;
                let shift = match &self.shift {
                    Some(s) => finite_vector(s, "shift")?,
                    None => Vector::zeros(m.nrows()),
                };
                if self.kind == "affine_monotone" {
                    OperatorSpec::affine_monotone(m, shift)?
                } else {
                    OperatorSpec::quadratic_gradient(m, shift)?
                }
            }
            "sum" => {
                self.check_fields(&["left", "right"])?;
                let l = self.required(&self.left, "left")?.to_spec()?;
                let r = self.required(&self.right, "right")?.to_spec()?;
                OperatorSpec::sum(l, r)?
            }
            other => return Err(parse_err(format!("unknown operator kind '{other}'"))),
        };
        let op = match self.gamma {
            Some(g) => op.with_gamma(g)?,
            None => op,
        };
        match self.beta {
            Some(b) => op.with_beta(b),
            None => Ok(op),
        }
    }
}

impl ProblemFile {
    pub fn from_instance(p: &ProblemInstance) -> Self {
        let mut file = ProblemFile {
            name: p.metadata.name.clone(),
            dimension: Some(p.metadata.dimension),
            seed: p.metadata.seed,
            start: Some(p.start.iter().copied().collect()),
            known_solution: p.known_solution.as_ref().map(|z| z.iter().copied().collect()),
            params: p.metadata.params.clone(),
            ..Default::default()
        };
        match &p.operator {
            ProblemOperator::Single(t) => file.operator = Some(OperatorDesc::from_spec(t)),
            ProblemOperator::Split { a, b } => {
                file.a = Some(OperatorDesc::from_spec(a));
                file.b = Some(OperatorDesc::from_spec(b));
            }
        }
        file
    }

    pub fn to_instance(&self) -> Result<ProblemInstance> {
        let operator = match (&self.operator, &self.a, &self.b) {
            (Some(t), None, None) => ProblemOperator::Single(t.to_spec()?),
            (None, Some(a), Some(b)) => {
                let a = a.to_spec()?;
                if !a.is_single_valued() {
                    return Err(parse_err("operator [a] must be single-valued"));
                }
                ProblemOperator::Split { a, b: b.to_spec()? }
            }
            _ => return Err(parse_err("give either [operator] or both [a] and [b]")),
        };
        let known = self.known_solution.as_deref().map(|z| finite_vector(z, "known_solution")).transpose()?;
        let start = self.start.as_deref().map(|s| finite_vector(s, "start")).transpose()?;
        let mut instance = ProblemInstance::new(&self.name, operator, known, start)?;
        if let Some(n) = self.dimension {
            if n != instance.metadata.dimension {
                return Err(HpeError::DimensionMismatch { expected: n, found: instance.metadata.dimension });
            }
        }
        instance.metadata.seed = self.seed;
        instance.metadata.params = self.params.clone();
        Ok(instance)
    }
}

pub fn problem_to_toml(p: &ProblemInstance) -> Result<String> {
    toml::to_string(&ProblemFile::from_instance(p)).map_err(|e| parse_err(e.to_string()))
}

pub fn problem_from_toml(text: &str) -> Result<ProblemInstance> {
    let file: ProblemFile = toml::from_str(text).map_err(|e| parse_err(e.to_string()))?;
    file.to_instance()
}

pub fn read_problem(path: &Path) -> Result<ProblemInstance> {
    let text = std::fs::read_to_string(path)?;
    problem_from_toml(&text).map_err(|e| match e {
        HpeError::Parse(msg) => HpeError::Parse(format!("{}: {msg}", path.display())),
        other => other,
    })
}

pub fn write_problem(path: &Path, p: &ProblemInstance) -> Result<()> {
    std::fs::write(path, problem_to_toml(p)?)?;
    Ok(())
}

fn push_float(line: &mut String, v: Option<f64>) {
    line.push(',');
    if let Some(v) = v {
        line.push_str(&format!("{v:.16e}"));
    }
}

/// One CSV line per record, 17 significant digits, empty `phi`/`mu` when absent.
pub fn write_trace_csv<W: Write>(mut out: W, trace: &[TraceRecord]) -> Result<()> {
    writeln!(out, "{TRACE_HEADER}")?;
    let mut line = String::new();
    for r in trace {
        line.clear();
        line.push_str(&r.k.to_string());
        for v in [r.step_sq, r.gap_sq, r.v_sq, r.eps, r.r_norm, r.slack] {
            push_float(&mut line, Some(v));
        }
        push_float(&mut line, r.phi);
        push_float(&mut line, r.mu);
        writeln!(out, "{line}")?;
    }
    out.flush()?;
    Ok(())
}

pub fn trace_csv_string(trace: &[TraceRecord]) -> String {
    let mut buf = Vec::new();
    write_trace_csv(&mut buf, trace).expect("writing to a Vec cannot fail");
    String::from_utf8(buf).expect("trace CSV is ASCII")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::{gen_composite, gen_quadratic, gen_saddle_with, SaddleOptions};

    fn assert_same(a: &ProblemInstance, b: &ProblemInstance) {
        assert_eq!(ProblemFile::from_instance(a), ProblemFile::from_instance(b));
    }

    #[test]
    fn generated_problems_round_trip() {
        let cases = [
            gen_quadratic(5, 30.0, 4).unwrap(),
            gen_composite(6, 0.5, 2).unwrap(),
            gen_saddle_with(4, 9, SaddleOptions { box_radius: Some(0.5), ..Default::default() }).unwrap(),
        ];
        for p in cases {
            let text = problem_to_toml(&p).unwrap();
            let back = problem_from_toml(&text).unwrap();
            assert_same(&p, &back);
        }
    }

    #[test]
    fn infinite_bounds_round_trip() {
        let op = OperatorSpec::box_normal_cone(
            Vector::from_column_slice(&[0.0, f64::NEG_INFINITY]),
            Vector::from_column_slice(&[f64::INFINITY, 1.0]),
        )
        .unwrap();
        let p = ProblemInstance::new("box", ProblemOperator::Single(op), None, None).unwrap();
        let text = problem_to_toml(&p).unwrap();
        assert!(text.contains("inf"));
        assert_same(&p, &problem_from_toml(&text).unwrap());
    }

    #[test]
    fn module_doc_example_parses() {
        let text = r#"
name = "composite"
dimension = 2
known_solution = [0.5, 0.0]

[a]
kind = "quadratic_gradient"
gamma = 1.0
matrix = [[1.0, 0.0], [0.0, 1.0]]
shift = [1.0, 0.25]

[b]
kind = "abs_subdifferential"
weight = 0.5
"#;
        let p = problem_from_toml(text).unwrap();
        assert_eq!(p.metadata.dimension, 2);
        assert_eq!(p.start, Vector::zeros(2));
    }

    #[test]
    fn malformed_files_are_parse_errors() {
        let bad = [
            "name = 3",
            "name = \"x\"\n[operator]\nkind = \"cubic\"",
            "name = \"x\"\n[operator]\nkind = \"skew\"",
            "name = \"x\"\n[operator]\nkind = \"scaled_identity\"\nlambda = 1.0\nmatrix = [[1.0]]",
            "name = \"x\"\n[operator]\nkind = \"linear_psd\"\nmatrix = [[1.0, 2.0], [1.0]]",
            "name = \"x\"\nbogus = 1\n[operator]\nkind = \"scaled_identity\"\nlambda = 1.0",
            "name = \"x\"\n[a]\nkind = \"scaled_identity\"\nlambda = 1.0",
        ];
        for text in bad {
            assert!(matches!(problem_from_toml(text), Err(HpeError::Parse(_))), "{text}");
        }
    }

    #[test]
    fn wrong_gamma_is_rejected() {
        let text =
            "name = \"q\"\n[operator]\nkind = \"quadratic_gradient\"\ngamma = 3.0\nmatrix = [[1.0]]\nshift = [1.0]";
        assert!(matches!(problem_from_toml(text), Err(HpeError::InvalidArgument(_))));
    }

    #[test]
    fn trace_csv_layout() {
        let rec = TraceRecord {
            k: 2,
            step_sq: 0.25,
            gap_sq: 1.0 / 3.0,
            v_sq: 0.0,
            eps: 0.0,
            r_norm: 1e-17,
            slack: -0.0,
            rhs: 0.0,
            c: 1.0,
            alpha: 0.1,
            phi: None,
            mu: Some(2.0),
            identity_gap: 0.0,
        };
        let csv = trace_csv_string(&[rec]);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], TRACE_HEADER);
        let fields: Vec<&str> = lines[1].split(',').collect();
        assert_eq!(fields.len(), 9);
        assert_eq!(fields[0], "2");
        assert_eq!(fields[2], "3.3333333333333331e-1");
        assert_eq!(fields[2].parse::<f64>().unwrap(), 1.0 / 3.0);
        assert_eq!(fields[7], "");
        assert_eq!(fields[8], "2.0000000000000000e0");
    }
}
