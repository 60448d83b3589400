//! The `edges`, `profile` and `figure1` commands.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::csv::{self, fmt_f64, fmt_opt, CsvBuf};
use crate::error::{Error, Result};
use crate::theory::{self, ModelParams};

/// Reference parameters for the `figure1` profile.
pub const FIGURE1_RHO: f64 = 1e-4;
pub const FIGURE1_BETA: f64 = 1e-13;
/// Grid size for the plot; `[L†, L*]` split into 1800 cells puts a node on 0.
pub const FIGURE1_POINTS: usize = 1801;

pub fn figure1_params() -> ModelParams {
    ModelParams::new(FIGURE1_RHO, FIGURE1_BETA).expect("valid constants")
}

/// Aligned two-column table of the edges and regime diagnostics.
pub fn cmd_edges(params: &ModelParams) -> String {
    let e = theory::edges(params);
    let d = params.diagnostics();
    let rows = [
        ("rho", params.rho()),
        ("beta", params.beta()),
        ("L_star", e.l_star),
        ("L_dagger", e.l_dagger),
        ("L_right", e.l_right),
        ("L_bar", e.l_bar),
        ("rho3_over_beta", d.rho3_over_beta),
        ("rho_over_cbrt_beta", d.rho_over_cbrt_beta),
    ];
    let mut out = String::new();
    let _ = writeln!(out, "{:<20} value", "quantity");
    for (name, v) in rows {
        let _ = writeln!(out, "{name:<20} {}", fmt_f64(v));
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProfileColumn {
    F,
    FAiry,
    FGauss,
}

impl ProfileColumn {
    pub const ALL: [ProfileColumn; 3] = [ProfileColumn::F, ProfileColumn::FAiry, ProfileColumn::FGauss];

    pub fn header(self) -> &'static str {
        match self {
            ProfileColumn::F => "f",
            ProfileColumn::FAiry => "f_airy",
            ProfileColumn::FGauss => "f_gauss",
        }
    }

    fn eval(self, params: &ModelParams, y: f64) -> Option<f64> {
        match self {
            ProfileColumn::F => Some(theory::profile_f(params, y)),
            ProfileColumn::FAiry => theory::profile_airy(params, y).ok(),
            ProfileColumn::FGauss => Some(theory::profile_gauss(params, y)),
        }
    }
}

/// A uniform grid and the profiles to tabulate on it.
#[derive(Debug, Clone, PartialEq)]
pub struct ProfileSpec {
    pub lo: f64,
    pub hi: f64,
    pub points: usize,
    pub columns: Vec<ProfileColumn>,
}

impl ProfileSpec {
    /// `[L†, L*]` with every column.
    pub fn edges_to_edges(params: &ModelParams, points: usize) -> Self {
        Self {
            lo: params.l_dagger(),
            hi: params.l_star(),
            points,
            columns: ProfileColumn::ALL.to_vec(),
        }
    }
}

/// Profiles sampled on a grid; `None` marks a point outside a formula's
/// domain.
#[derive(Debug, Clone, PartialEq)]
pub struct ProfileTable {
    pub y: Vec<f64>,
    pub columns: Vec<(ProfileColumn, Vec<Option<f64>>)>,
}

impl ProfileTable {
    pub fn column(&self, c: ProfileColumn) -> Option<&[Option<f64>]> {
        self.columns.iter().find(|(k, _)| *k == c).map(|(_, v)| v.as_slice())
    }

    pub fn to_csv(&self) -> String {
        let mut header = vec!["y"];
        header.extend(self.columns.iter().map(|(c, _)| c.header()));
        let mut buf = CsvBuf::new(&header);
        for (i, &y) in self.y.iter().enumerate() {
            let mut row = vec![fmt_f64(y)];
            row.extend(self.columns.iter().map(|(_, v)| fmt_opt(v[i])));
            buf.row(row);
        }
        buf.into_string()
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let (header, rows) = csv::parse(text)?;
        if header.first().map(String::as_str) != Some("y") {
            return Err(Error::MissingData("profile CSV must start with a y column".into()));
        }
        let mut kinds = Vec::new();
        for h in &header[1..] {
            let k = ProfileColumn::ALL
                .into_iter()
                .find(|c| c.header() == h)
                .ok_or_else(|| Error::MissingData(format!("unknown profile column {h}")))?;
            kinds.push(k);
        }
        let mut y = Vec::with_capacity(rows.len());
        let mut cols: Vec<Vec<Option<f64>>> = vec![Vec::with_capacity(rows.len()); kinds.len()];
        for row in &rows {
            if row.len() != header.len() {
                return Err(Error::MissingData("ragged profile CSV".into()));
            }
            y.push(csv::parse_cell(&row[0]).ok_or_else(|| Error::MissingData("missing y".into()))?);
            for (j, cell) in row[1..].iter().enumerate() {
                cols[j].push(csv::parse_cell(cell));
            }
        }
        Ok(Self {
            y,
            columns: kinds.into_iter().zip(cols).collect(),
        })
    }
}

pub fn profile_table(params: &ModelParams, spec: &ProfileSpec) -> Result<ProfileTable> {
    if spec.columns.is_empty() {
        return Err(Error::Argument("no profile columns requested".into()));
    }
    let mut columns = spec.columns.clone();
    columns.sort();
    columns.dedup();
    let y = theory::uniform_grid(spec.lo, spec.hi, spec.points)?;
    let columns = columns
        .into_iter()
        .map(|c| (c, y.iter().map(|&v| c.eval(params, v)).collect()))
        .collect();
    Ok(ProfileTable { y, columns })
}

/// CSV with `y` followed by the requested profile columns.
pub fn cmd_profile(params: &ModelParams, spec: &ProfileSpec) -> Result<String> {
    Ok(profile_table(params, spec)?.to_csv())
}

/// The profile at the reference parameters over `[L†, L*]`.
pub fn cmd_figure1() -> Result<String> {
    let p = figure1_params();
    cmd_profile(&p, &ProfileSpec::edges_to_edges(&p, FIGURE1_POINTS))
}

/// Nondecreasing then nonincreasing.
pub fn is_unimodal(values: &[f64]) -> bool {
    let mut falling = false;
    for w in values.windows(2) {
        if w[1] < w[0] {
            falling = true;
        } else if w[1] > w[0] && falling {
            return false;
        }
    }
    true
}

/// Shape checks on a tabulated profile.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ShapeReport {
    /// Cells that are empty or not finite, over all columns.
    pub bad_cells: usize,
    /// Columns that are not unimodal.
    pub non_unimodal: usize,
    /// Grid index of the largest `f`.
    pub f_argmax: Option<usize>,
    /// `max |f / f^A - 1|` over rows with `(2β)^{1/3}(L* - y) >= min_arg`,
    /// with the number of such rows.
    pub max_ratio_dev: Option<f64>,
    pub ratio_rows: usize,
}

pub fn shape_report(params: &ModelParams, table: &ProfileTable, min_arg: f64) -> ShapeReport {
    let mut bad_cells = 0;
    let mut non_unimodal = 0;
    for (_, col) in &table.columns {
        bad_cells += col.iter().filter(|v| !v.is_some_and(f64::is_finite)).count();
        let vals: Vec<f64> = col.iter().flatten().copied().collect();
        if !is_unimodal(&vals) {
            non_unimodal += 1;
        }
    }
    let f_argmax = table.column(ProfileColumn::F).and_then(|f| {
        f.iter()
            .enumerate()
            .filter_map(|(i, v)| v.map(|v| (i, v)))
            .max_by(|a, b| a.1.total_cmp(&b.1))
            .map(|(i, _)| i)
    });
    let mut max_dev: Option<f64> = None;
    let mut rows = 0;
    if let (Some(f), Some(fa)) = (table.column(ProfileColumn::F), table.column(ProfileColumn::FAiry)) {
        let k = params.edge_scale();
        for (i, &y) in table.y.iter().enumerate() {
            if k * (params.l_star() - y) < min_arg {
                continue;
            }
            if let (Some(a), Some(b)) = (f[i], fa[i]) {
                rows += 1;
                let dev = (a / b - 1.0).abs();
                max_dev = Some(max_dev.map_or(dev, |m| m.max(dev)));
            }
        }
    }
    ShapeReport {
        bad_cells,
        non_unimodal,
        f_argmax,
        max_ratio_dev: max_dev,
        ratio_rows: rows,
    }
}
