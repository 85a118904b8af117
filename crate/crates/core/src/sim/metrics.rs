//! Per-round metrics and their CSV persistence.
//!
//! The CSV schema is fixed: 8 run-level columns, four per-client blocks
//! (backlog, CPU frequency, mining frequency, total energy), then loss,
//! accuracy, and inner iterations. Floats are written as shortest round-trip
//! decimals, so re-reading a file reproduces the values bit for bit.

use serde::{Deserialize, Serialize};
use std::fmt::Write as _;
use std::path::Path;

/// One client's slice of a round.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClientRound {
    pub d_cp: f64,
    pub d_up: f64,
    pub e_cp: f64,
    pub e_up: f64,
    pub e_bloc: f64,
    /// Virtual queue backlog after this round's update.
    pub backlog: f64,
    pub cpu_freq: f64,
    pub mining_freq: f64,
}

impl ClientRound {
    pub fn total_energy(&self) -> f64 {
        self.e_up + self.e_cp + self.e_bloc
    }

    pub fn total_delay(&self) -> f64 {
        self.d_up + self.d_cp
    }
}

/// Everything recorded about one communication round.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundMetrics {
    pub round: usize,
    pub selected: Vec<usize>,
    pub clients: Vec<ClientRound>,
    pub d_bloc: f64,
    pub round_delay: f64,
    /// Running mean of the round delay up to and including this round.
    pub cum_avg_delay: f64,
    /// Per client: cumulative energy over the rounds it trained, divided by
    /// the number of such rounds (zero until first selected). This is the
    /// quantity that converges to the energy budget.
    pub cum_avg_active_energy: Vec<f64>,
    /// Global training loss of the aggregated model.
    pub loss: f64,
    /// Held-out test accuracy of the aggregated model.
    pub accuracy: f64,
    pub inner_iters: usize,
}

/// Identifies a run inside a shared CSV file.
#[derive(Debug, Clone, PartialEq)]
pub struct RunLabel {
    pub scheduler: String,
    pub seed: u64,
    pub v: f64,
}

pub fn csv_header(num_clients: usize) -> String {
    let mut header = String::from(
        "round,scheduler,seed,v,selected_count,round_delay_s,cum_avg_delay_s,d_bloc_s",
    );
    for field in ["z", "f", "f_bloc", "e_total"] {
        for i in 0..num_clients {
            match field {
                "z" => write!(header, ",z_{i}").unwrap(),
                "f" => write!(header, ",f_{i}_hz").unwrap(),
                "f_bloc" => write!(header, ",f_bloc_{i}_hz").unwrap(),
                _ => write!(header, ",e_total_{i}_j").unwrap(),
            }
        }
    }
    header.push_str(",loss,accuracy,inner_iters");
    header
}

/// Renders metrics rows under one label. The column count is
/// `11 + 4 * num_clients`.
pub fn metrics_csv_string(
    metrics: &[RoundMetrics],
    label: &RunLabel,
    num_clients: usize,
) -> String {
    let mut out = csv_header(num_clients);
    out.push('\n');
    for m in metrics {
        assert_eq!(m.clients.len(), num_clients, "metrics row width mismatch");
        write!(
            out,
            "{},{},{},{},{},{},{},{}",
            m.round,
            label.scheduler,
            label.seed,
            label.v,
            m.selected.len(),
            m.round_delay,
            m.cum_avg_delay,
            m.d_bloc
        )
        .unwrap();
        for c in &m.clients {
            write!(out, ",{}", c.backlog).unwrap();
        }
        for c in &m.clients {
            write!(out, ",{}", c.cpu_freq).unwrap();
        }
        for c in &m.clients {
            write!(out, ",{}", c.mining_freq).unwrap();
        }
        for c in &m.clients {
            write!(out, ",{}", c.total_energy()).unwrap();
        }
        writeln!(out, ",{},{},{}", m.loss, m.accuracy, m.inner_iters).unwrap();
    }
    out
}

/// Writes the CSV to `path`, creating parent directories as needed.
pub fn emit_metrics(
    metrics: &[RoundMetrics],
    label: &RunLabel,
    num_clients: usize,
    path: &Path,
) -> Result<(), super::SimError> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent).map_err(|e| super::SimError::Io {
                path: parent.display().to_string(),
                source: e,
            })?;
        }
    }
    std::fs::write(path, metrics_csv_string(metrics, label, num_clients)).map_err(|e| {
        super::SimError::Io {
            path: path.display().to_string(),
            source: e,
        }
    })
}

/// One parsed CSV row; the per-client blocks keep their column order.
#[derive(Debug, Clone, PartialEq)]
pub struct CsvRow {
    pub round: usize,
    pub scheduler: String,
    pub seed: u64,
    pub v: f64,
    pub selected_count: usize,
    pub round_delay_s: f64,
    pub cum_avg_delay_s: f64,
    pub d_bloc_s: f64,
    pub backlog: Vec<f64>,
    pub cpu_freq: Vec<f64>,
    pub mining_freq: Vec<f64>,
    pub e_total: Vec<f64>,
    pub loss: f64,
    pub accuracy: f64,
    pub inner_iters: usize,
}

/// Parses a metrics CSV produced by [`metrics_csv_string`].
pub fn parse_metrics_csv(text: &str) -> Result<Vec<CsvRow>, super::SimError> {
    let mut lines = text.lines().enumerate();
    let Some((_, header)) = lines.next() else {
        return Err(super::SimError::CsvParse {
            line: 0,
            message: "empty file".into(),
        });
    };
    let columns = header.split(',').count();
    if columns < 11 || (columns - 11) % 4 != 0 {
        return Err(super::SimError::CsvParse {
            line: 1,
            message: format!("unexpected column count {columns}"),
        });
    }
    let num_clients = (columns - 11) / 4;

    let mut rows = Vec::new();
    for (idx, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != columns {
            return Err(super::SimError::CsvParse {
                line: idx + 1,
                message: format!("expected {columns} fields, found {}", fields.len()),
            });
        }
        let err = |message: String| super::SimError::CsvParse {
            line: idx + 1,
            message,
        };
        let f = |s: &str| s.parse::<f64>().map_err(|e| err(format!("{s:?}: {e}")));
        let n = |s: &str| s.parse::<usize>().map_err(|e| err(format!("{s:?}: {e}")));
        let block = |offset: usize| -> Result<Vec<f64>, super::SimError> {
            fields[offset..offset + num_clients]
                .iter()
                .map(|s| f(s))
                .collect()
        };
        rows.push(CsvRow {
            round: n(fields[0])?,
            scheduler: fields[1].to_string(),
            seed: fields[2].parse().map_err(|e| err(format!("seed: {e}")))?,
            v: f(fields[3])?,
            selected_count: n(fields[4])?,
            round_delay_s: f(fields[5])?,
            cum_avg_delay_s: f(fields[6])?,
            d_bloc_s: f(fields[7])?,
            backlog: block(8)?,
            cpu_freq: block(8 + num_clients)?,
            mining_freq: block(8 + 2 * num_clients)?,
            e_total: block(8 + 3 * num_clients)?,
            loss: f(fields[8 + 4 * num_clients])?,
            accuracy: f(fields[9 + 4 * num_clients])?,
            inner_iters: n(fields[10 + 4 * num_clients])?,
        });
    }
    Ok(rows)
}
