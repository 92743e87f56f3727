//! Branch files (JSON) and plot exports (CSV).
//!
//! Branch file layout:
//!
//! ```text
//! { "schema_version": 1, "m": 0, "ell": 0, "nx": 8, "nt": 64,
//!   "failure": null,
//!   "points": [ { "s", "lambda", "u_modes": [[...nt] x nx], "h_coeffs": [...nx],
//!                 "residual_interior", "residual_neumann", "newton_iters" } ] }
//! ```
//!
//! `u_modes[k][j]` is mode `k` at the `j`-th positive `t`-node (descending
//! from `pi_m`). Floats are written in shortest round-trip form, so a
//! write/read cycle is bit-exact.

use std::fs;
use std::io::Write;
use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::continuation::{Branch, BranchPoint};
use crate::domain::{BoundaryProfile, CollocationGrid, StripField, StripParams};
use crate::error::{Error, Result};
use crate::verify::{pushforward_solution, RescaledSolution};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct BranchFile {
    schema_version: u32,
    m: u32,
    ell: u32,
    nx: usize,
    nt: usize,
    #[serde(default)]
    failure: Option<String>,
    points: Vec<PointRecord>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PointRecord {
    s: f64,
    lambda: f64,
    u_modes: Vec<Vec<f64>>,
    h_coeffs: Vec<f64>,
    residual_interior: f64,
    residual_neumann: f64,
    newton_iters: usize,
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Serialize a branch to a JSON string.
pub fn branch_to_json(branch: &Branch) -> Result<String> {
    if branch.points.is_empty() {
        return Err(Error::Parameter("cannot export an empty branch".into()));
    }
    let file = BranchFile {
        schema_version: SCHEMA_VERSION,
        m: branch.params.m(),
        ell: branch.params.ell(),
        nx: branch.nx,
        nt: branch.nt,
        failure: branch.failure.clone(),
        points: branch
            .points
            .iter()
            .map(|p| PointRecord {
                s: p.s,
                lambda: p.lambda,
                u_modes: (0..p.u.nx()).map(|k| p.u.mode_slice(k)).collect(),
                h_coeffs: p.h.coeffs().to_vec(),
                residual_interior: p.residual_interior,
                residual_neumann: p.residual_neumann,
                newton_iters: p.newton_iters,
            })
            .collect(),
    };
    serde_json::to_string_pretty(&file)
        .map_err(|e| Error::Parameter(format!("branch is not serializable: {e}")))
}

pub fn export_branch(branch: &Branch, path: &Path) -> Result<()> {
    let text = branch_to_json(branch)?;
    fs::write(path, text).map_err(io_err(path))
}

pub fn import_branch(path: &Path) -> Result<Branch> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    branch_from_json(&text, path)
}

/// Parse a branch from JSON; `path` is used for error context only.
pub fn branch_from_json(text: &str, path: &Path) -> Result<Branch> {
    let file: BranchFile = serde_json::from_str(text).map_err(|e| Error::Parse {
        path: path.to_path_buf(),
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    let schema = |field: String, message: String| Error::Schema {
        path: path.to_path_buf(),
        field,
        message,
    };
    if file.schema_version != SCHEMA_VERSION {
        return Err(schema(
            "schema_version".into(),
            format!("unsupported version {}", file.schema_version),
        ));
    }
    let params = StripParams::new(file.m, file.ell).map_err(|e| schema("ell".into(), e.to_string()))?;
    CollocationGrid::new(params, file.nx, file.nt).map_err(|e| schema("nx/nt".into(), e.to_string()))?;
    if file.points.is_empty() {
        return Err(schema("points".into(), "no points".into()));
    }
    let mut points = Vec::with_capacity(file.points.len());
    for (i, rec) in file.points.into_iter().enumerate() {
        let at = |f: &str| format!("points[{i}].{f}");
        if rec.u_modes.len() != file.nx {
            return Err(schema(
                at("u_modes"),
                format!("{} rows, expected nx = {}", rec.u_modes.len(), file.nx),
            ));
        }
        if let Some((k, row)) = rec.u_modes.iter().enumerate().find(|(_, r)| r.len() != file.nt) {
            return Err(schema(
                format!("{}[{k}]", at("u_modes")),
                format!("{} values, expected nt = {}", row.len(), file.nt),
            ));
        }
        if rec.h_coeffs.len() != file.nx {
            return Err(schema(
                at("h_coeffs"),
                format!("{} values, expected nx = {}", rec.h_coeffs.len(), file.nx),
            ));
        }
        let modes = DMatrix::from_fn(file.nx, file.nt, |k, j| rec.u_modes[k][j]);
        let u = StripField::from_modes(modes, true).map_err(|e| schema(at("u_modes"), e.to_string()))?;
        points.push(BranchPoint {
            s: rec.s,
            lambda: rec.lambda,
            u,
            h: BoundaryProfile::new(rec.h_coeffs),
            residual_interior: rec.residual_interior,
            residual_neumann: rec.residual_neumann,
            newton_iters: rec.newton_iters,
        });
    }
    Ok(Branch {
        params,
        nx: file.nx,
        nt: file.nt,
        points,
        failure: file.failure,
    })
}

/// Header of the domain export.
pub const DOMAIN_HEADER: &str = "kind,x,t,u";

/// Write the boundary curves `t = +-pi_m / (1 + h(x))` and a field sample
/// grid as CSV rows `kind,x,t,u` with `kind` one of `top`, `bottom`, `field`.
pub fn export_domain(grid: &CollocationGrid, point: &BranchPoint, samples: usize, path: &Path) -> Result<()> {
    if samples < 2 {
        return Err(Error::Parameter(format!("samples = {samples} < 2")));
    }
    let sol = pushforward_solution(grid, point)?;
    let mut out = String::from(DOMAIN_HEADER);
    out.push('\n');
    let xs: Vec<f64> = (0..samples)
        .map(|i| -std::f64::consts::PI + 2.0 * std::f64::consts::PI * i as f64 / (samples - 1) as f64)
        .collect();
    for (kind, side) in [("top", 1.0), ("bottom", -1.0)] {
        for &x in &xs {
            let t = side * sol.top(x);
            out.push_str(&format!("{kind},{x},{t},{}\n", sol.value(x, t)));
        }
    }
    for &x in &xs {
        let top = sol.top(x);
        for i in 0..samples {
            let t = -top + 2.0 * top * i as f64 / (samples - 1) as f64;
            out.push_str(&format!("field,{x},{t},{}\n", sol.value(x, t)));
        }
    }
    write_file(path, &out)
}

/// Write rescaled samples as CSV rows `kind,y,zeta,w`.
pub fn export_rescaled(rescaled: &RescaledSolution, path: &Path) -> Result<()> {
    let mut out = String::from("kind,y,zeta,w\n");
    for [y, z] in &rescaled.top_boundary {
        out.push_str(&format!("top,{y},{z},0\n"));
    }
    for [y, z, w] in &rescaled.samples {
        out.push_str(&format!("field,{y},{z},{w}\n"));
    }
    write_file(path, &out)
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    let mut f = fs::File::create(path).map_err(io_err(path))?;
    f.write_all(text.as_bytes()).map_err(io_err(path))
}
