use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::Context;
use serde::Serialize;

use homctl_core::control::IterationRecord;
use homctl_core::io::{write_field_binary, write_field_csv};
use homctl_core::{Mesh, SpaceTimeField, TimeAxis};

use crate::config::Format;
use crate::CliError;

pub struct Output {
    dir: PathBuf,
    formats: Vec<Format>,
    quiet: bool,
}

impl Output {
    pub fn new(dir: &Path, formats: &[Format], quiet: bool) -> Result<Self, CliError> {
        fs::create_dir_all(dir)
            .with_context(|| format!("creating output directory {}", dir.display()))?;
        Ok(Self {
            dir: dir.to_path_buf(),
            formats: formats.to_vec(),
            quiet,
        })
    }

    pub fn note(&self, msg: &str) {
        if !self.quiet {
            eprintln!("{msg}");
        }
    }

    pub fn field(
        &self,
        name: &str,
        mesh: &Mesh,
        time: &TimeAxis,
        field: &SpaceTimeField,
    ) -> Result<(), CliError> {
        for fmt in &self.formats {
            match fmt {
                Format::Csv => {
                    write_field_csv(&self.dir, name, mesh, time, field)?;
                }
                Format::Binary => {
                    write_field_binary(&self.dir, name, mesh, time, field)?;
                }
            }
        }
        Ok(())
    }

    pub fn summary<T: Serialize>(&self, summary: &T) -> Result<(), CliError> {
        let mut text = serde_json::to_string_pretty(summary).context("serialising summary")?;
        text.push('\n');
        let path = self.dir.join("summary.json");
        fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;
        self.note(&format!("wrote {}", path.display()));
        Ok(())
    }

    pub fn table(&self, file: &str, header: &[&str], rows: &[Vec<f64>]) -> Result<(), CliError> {
        let path = self.dir.join(file);
        fs::write(&path, csv_table(header, rows))
            .with_context(|| format!("writing {}", path.display()))?;
        Ok(())
    }

    pub fn iterations(&self, history: &[IterationRecord]) -> Result<(), CliError> {
        let rows: Vec<Vec<f64>> = history
            .iter()
            .map(|r| {
                vec![
                    r.iteration as f64,
                    r.cost.term_grad,
                    r.cost.term_final,
                    r.cost.term_control,
                    r.cost.term_strange_final,
                    r.cost.term_strange_rate,
                    r.cost.total,
                    r.gradient_norm,
                    r.step,
                ]
            })
            .collect();
        self.table(
            "iterations.csv",
            &[
                "iteration",
                "term_grad",
                "term_final",
                "term_control",
                "term_strange_final",
                "term_strange_rate",
                "total",
                "gradient_norm",
                "step",
            ],
            &rows,
        )
    }
}

/// Integers print as integers, everything else with 17 significant digits.
pub fn csv_table(header: &[&str], rows: &[Vec<f64>]) -> String {
    let mut out = header.join(",");
    out.push('\n');
    for row in rows {
        let cells: Vec<String> = row.iter().map(|&x| fmt_cell(x)).collect();
        let _ = writeln!(out, "{}", cells.join(","));
    }
    out
}

fn fmt_cell(x: f64) -> String {
    if x.fract() == 0.0 && x.abs() < 1e15 {
        format!("{x:.0}")
    } else {
        format!("{x:.16e}")
    }
}
