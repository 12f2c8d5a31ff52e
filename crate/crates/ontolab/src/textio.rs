//! Structured text import and export.
//!
//! Line-oriented formats with one record per line. Floating-point values are
//! written with 17 significant digits, which round-trips every finite f64
//! exactly through decimal.

use std::sync::Arc;

use num_complex::Complex64;
use thiserror::Error;

use crate::configspace::{ConfigLabel, ConfigSpace, MacroPartition, SpaceError};
use crate::dynamics::{DynamicsError, HamiltonianMatrix};
use crate::state::{GaugeState, StateError, StateVector};

#[derive(Debug, Error)]
pub enum TextError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error(transparent)]
    Space(#[from] SpaceError),
    #[error(transparent)]
    State(#[from] StateError),
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
}

fn parse_err(line: usize, message: impl Into<String>) -> TextError {
    TextError::Parse {
        line,
        message: message.into(),
    }
}

/// 17-significant-digit rendering; exact decimal round trip for every finite
/// f64.
pub fn format_f64(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn parse_f64(s: &str, line: usize) -> Result<f64, TextError> {
    s.parse()
        .map_err(|_| parse_err(line, format!("invalid float `{s}`")))
}

fn format_label(label: &ConfigLabel) -> String {
    let (body, gauge) = match label {
        ConfigLabel::Opaque { id, gauge } => (format!("opaque:{id}"), gauge),
        ConfigLabel::Field { values, gauge } => (
            format!(
                "field:{}",
                values
                    .iter()
                    .map(|v| format_f64(*v))
                    .collect::<Vec<_>>()
                    .join(",")
            ),
            gauge,
        ),
    };
    match gauge {
        Some(g) => format!("{body};gauge={}", format_f64(*g)),
        None => body,
    }
}

fn parse_label(token: &str, line: usize) -> Result<ConfigLabel, TextError> {
    let (body, gauge) = match token.split_once(";gauge=") {
        Some((body, g)) => (body, Some(parse_f64(g, line)?)),
        None => (token, None),
    };
    let label = if let Some(id) = body.strip_prefix("opaque:") {
        ConfigLabel::Opaque {
            id: id
                .parse()
                .map_err(|_| parse_err(line, format!("invalid opaque id `{id}`")))?,
            gauge,
        }
    } else if let Some(values) = body.strip_prefix("field:") {
        let values = values
            .split(',')
            .map(|v| parse_f64(v, line))
            .collect::<Result<Vec<_>, _>>()?;
        ConfigLabel::Field { values, gauge }
    } else {
        return Err(parse_err(line, format!("unknown label kind in `{token}`")));
    };
    Ok(label)
}

fn expect_kv<'a>(token: &'a str, key: &str, line: usize) -> Result<&'a str, TextError> {
    token
        .strip_prefix(key)
        .and_then(|rest| rest.strip_prefix('='))
        .ok_or_else(|| parse_err(line, format!("expected `{key}=...`, got `{token}`")))
}

/// Serializes a space, optionally with a macrostate assignment.
pub fn write_space(space: &ConfigSpace, partition: Option<&MacroPartition>) -> String {
    let mut out = String::from("configspace v1\n");
    out.push_str(&format!("atoms {}\n", space.len()));
    for i in 0..space.len() {
        out.push_str(&format!(
            "atom {i} weight={} label={}",
            format_f64(space.weight(i)),
            format_label(space.label(i)),
        ));
        if let Some(p) = partition {
            out.push_str(&format!(" macro={}", p.id_of(i)));
        }
        out.push('\n');
    }
    out
}

/// Parses [`write_space`] output. The macro assignment must cover all atoms
/// or none.
pub fn read_space(text: &str) -> Result<(Arc<ConfigSpace>, Option<MacroPartition>), TextError> {
    let mut lines = numbered_lines(text);
    let (n, header_line) = read_header(&mut lines, "configspace v1")?;
    let mut labels = Vec::with_capacity(n);
    let mut weights = Vec::with_capacity(n);
    let mut macros: Vec<String> = Vec::new();
    for want in 0..n {
        let (lineno, line) = lines.next().ok_or_else(|| {
            parse_err(header_line, format!("expected {n} atom lines, got {want}"))
        })?;
        let mut tokens = line.split_whitespace();
        let tag = tokens.next().unwrap_or_default();
        if tag != "atom" {
            return Err(parse_err(lineno, format!("expected `atom`, got `{tag}`")));
        }
        let idx: usize = tokens
            .next()
            .and_then(|t| t.parse().ok())
            .ok_or_else(|| parse_err(lineno, "missing atom index"))?;
        if idx != want {
            return Err(parse_err(
                lineno,
                format!("atom index {idx}, expected {want}"),
            ));
        }
        let weight_tok = tokens
            .next()
            .ok_or_else(|| parse_err(lineno, "missing weight"))?;
        weights.push(parse_f64(expect_kv(weight_tok, "weight", lineno)?, lineno)?);
        let label_tok = tokens
            .next()
            .ok_or_else(|| parse_err(lineno, "missing label"))?;
        labels.push(parse_label(expect_kv(label_tok, "label", lineno)?, lineno)?);
        if let Some(macro_tok) = tokens.next() {
            macros.push(expect_kv(macro_tok, "macro", lineno)?.to_string());
        }
    }
    if !macros.is_empty() && macros.len() != n {
        return Err(parse_err(
            0,
            format!("macro assignment covers {} of {} atoms", macros.len(), n),
        ));
    }
    let space = ConfigSpace::new(labels, weights)?;
    let partition = if macros.is_empty() {
        None
    } else {
        Some(MacroPartition::define_from(&space, macros)?)
    };
    Ok((space, partition))
}

/// Serializes a state: per-atom label and amplitude.
pub fn write_state(psi: &StateVector) -> String {
    let space = psi.space();
    let mut out = String::from("state v1\n");
    out.push_str(&format!("atoms {}\n", psi.len()));
    for i in 0..psi.len() {
        let a = psi.amplitude(i);
        out.push_str(&format!(
            "amp {i} label={} re={} im={}\n",
            format_label(space.label(i)),
            format_f64(a.re),
            format_f64(a.im),
        ));
    }
    out
}

/// Parses [`write_state`] output against a known space; labels must match
/// atom for atom.
pub fn read_state(space: &Arc<ConfigSpace>, text: &str) -> Result<StateVector, TextError> {
    let mut lines = numbered_lines(text);
    let (n, header_line) = read_header(&mut lines, "state v1")?;
    if n != space.len() {
        return Err(parse_err(
            header_line,
            format!("state has {n} atoms, space has {}", space.len()),
        ));
    }
    let mut amplitudes = Vec::with_capacity(n);
    for want in 0..n {
        let (lineno, line) = lines
            .next()
            .ok_or_else(|| parse_err(header_line, format!("expected {n} amp lines, got {want}")))?;
        let mut tokens = line.split_whitespace();
        if tokens.next() != Some("amp") {
            return Err(parse_err(lineno, "expected `amp`"));
        }
        let idx: usize = tokens
            .next()
            .and_then(|t| t.parse().ok())
            .ok_or_else(|| parse_err(lineno, "missing amp index"))?;
        if idx != want {
            return Err(parse_err(
                lineno,
                format!("amp index {idx}, expected {want}"),
            ));
        }
        let label_tok = tokens
            .next()
            .ok_or_else(|| parse_err(lineno, "missing label"))?;
        let label = parse_label(expect_kv(label_tok, "label", lineno)?, lineno)?;
        if &label != space.label(want) {
            return Err(parse_err(
                lineno,
                format!("label of atom {want} does not match space"),
            ));
        }
        let re_tok = tokens
            .next()
            .ok_or_else(|| parse_err(lineno, "missing re"))?;
        let im_tok = tokens
            .next()
            .ok_or_else(|| parse_err(lineno, "missing im"))?;
        amplitudes.push(Complex64::new(
            parse_f64(expect_kv(re_tok, "re", lineno)?, lineno)?,
            parse_f64(expect_kv(im_tok, "im", lineno)?, lineno)?,
        ));
    }
    Ok(StateVector::from_amplitudes(space, amplitudes)?)
}

/// Serializes a gauge state: tilde label plus radial, angle, and probability
/// weight per atom.
pub fn write_gauge(g: &GaugeState) -> String {
    let tilde = g.space_tilde();
    let mut out = String::from("gauge v1\n");
    out.push_str(&format!("atoms {}\n", tilde.len()));
    for i in 0..tilde.len() {
        out.push_str(&format!(
            "row {i} label={} radial={} angle={} prob={}\n",
            format_label(tilde.label(i)),
            format_f64(g.radial()[i]),
            format_f64(tilde.label(i).gauge().unwrap_or(0.0)),
            format_f64(g.probability_weights()[i]),
        ));
    }
    out
}

/// Coordinate-list text for a Hamiltonian: `row col re im` per entry.
pub fn write_hamiltonian_coo(h: &HamiltonianMatrix) -> String {
    let mut out = String::from("hamiltonian v1\n");
    out.push_str(&format!("dim {}\n", h.dim()));
    out.push_str(&format!("nnz {}\n", h.entries().len()));
    for &(r, c, v) in h.entries() {
        out.push_str(&format!(
            "{r} {c} {} {}\n",
            format_f64(v.re),
            format_f64(v.im)
        ));
    }
    out
}

/// Parses [`write_hamiltonian_coo`] output.
pub fn read_hamiltonian_coo(text: &str) -> Result<HamiltonianMatrix, TextError> {
    let mut lines = numbered_lines(text);
    let (lineno, first) = lines.next().ok_or_else(|| parse_err(1, "empty document"))?;
    if first.trim() != "hamiltonian v1" {
        return Err(parse_err(lineno, "expected `hamiltonian v1` header"));
    }
    let dim = read_count(&mut lines, "dim")?;
    let nnz = read_count(&mut lines, "nnz")?;
    let mut entries = Vec::with_capacity(nnz);
    for _ in 0..nnz {
        let (lineno, line) = lines
            .next()
            .ok_or_else(|| parse_err(0, format!("expected {nnz} entries")))?;
        let tokens: Vec<&str> = line.split_whitespace().collect();
        if tokens.len() != 4 {
            return Err(parse_err(lineno, "expected `row col re im`"));
        }
        let r: usize = tokens[0]
            .parse()
            .map_err(|_| parse_err(lineno, "invalid row"))?;
        let c: usize = tokens[1]
            .parse()
            .map_err(|_| parse_err(lineno, "invalid col"))?;
        entries.push((
            r,
            c,
            Complex64::new(parse_f64(tokens[2], lineno)?, parse_f64(tokens[3], lineno)?),
        ));
    }
    Ok(HamiltonianMatrix::from_coo(dim, entries)?)
}

fn numbered_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l))
        .filter(|(_, l)| !l.trim().is_empty() && !l.trim_start().starts_with('#'))
}

fn read_header<'a>(
    lines: &mut impl Iterator<Item = (usize, &'a str)>,
    magic: &str,
) -> Result<(usize, usize), TextError> {
    let (lineno, first) = lines.next().ok_or_else(|| parse_err(1, "empty document"))?;
    if first.trim() != magic {
        return Err(parse_err(lineno, format!("expected `{magic}` header")));
    }
    let n = read_count(lines, "atoms")?;
    Ok((n, lineno))
}

fn read_count<'a>(
    lines: &mut impl Iterator<Item = (usize, &'a str)>,
    key: &str,
) -> Result<usize, TextError> {
    let (lineno, line) = lines
        .next()
        .ok_or_else(|| parse_err(0, format!("missing `{key}` line")))?;
    let mut tokens = line.split_whitespace();
    if tokens.next() != Some(key) {
        return Err(parse_err(lineno, format!("expected `{key} <count>`")));
    }
    tokens
        .next()
        .and_then(|t| t.parse().ok())
        .ok_or_else(|| parse_err(lineno, format!("invalid `{key}` count")))
}
