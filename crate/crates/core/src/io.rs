//! Graph files and CSV/JSON artifacts.
//!
//! Graph files are plain text: a header line `n m` followed by `m` lines
//! `u v` of 0-based endpoints. Blank lines and lines starting with `#` are
//! skipped.

use std::fs;
use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::harness::{SweepRow, SweepTable};
use crate::optimizer::OptimizationTrace;
use crate::qaoa::VertexDistribution;
use crate::qubo::{bits_to_string, index_to_bits};
use crate::spin::EnergyTable;

pub const BUILTIN_EXAMPLE: &str = "builtin:paper6";

pub fn parse_graph(text: &str) -> Result<Graph> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));

    let pair = |line: usize, l: &str| -> Result<(usize, usize)> {
        let fields: Vec<&str> = l.split_whitespace().collect();
        let parse = |s: &str| {
            s.parse::<usize>().map_err(|_| Error::Parse {
                line,
                msg: format!("expected a non-negative integer, found {s:?}"),
            })
        };
        match fields.as_slice() {
            [a, b] => Ok((parse(a)?, parse(b)?)),
            _ => Err(Error::Parse {
                line,
                msg: format!("expected two fields, found {}", fields.len()),
            }),
        }
    };

    let (line, header) = lines.next().ok_or(Error::Parse {
        line: 0,
        msg: "missing `n m` header".into(),
    })?;
    let (n, m) = pair(line, header)?;
    let mut edges = Vec::with_capacity(m);
    for (line, l) in lines {
        edges.push(pair(line, l)?);
    }
    if edges.len() != m {
        return Err(Error::Parse {
            line,
            msg: format!("header declares {m} edges, file lists {}", edges.len()),
        });
    }
    Graph::new(n, edges)
}

pub fn format_graph(g: &Graph) -> String {
    let mut s = format!("{} {}\n", g.n_vertices(), g.n_edges());
    for (u, v) in g.edges() {
        s.push_str(&format!("{u} {v}\n"));
    }
    s
}

/// Loads `builtin:paper6` or a graph file.
pub fn load_graph(source: &str) -> Result<Graph> {
    if source == BUILTIN_EXAMPLE {
        return Ok(Graph::six_vertex_example());
    }
    if let Some(name) = source.strip_prefix("builtin:") {
        return Err(Error::domain(format!("unknown builtin graph {name:?}")));
    }
    parse_graph(&fs::read_to_string(source)?)
}

/// `bits,probability,count`, most probable first.
pub fn write_distribution_csv<W: Write>(out: W, dist: &VertexDistribution, counts: &[u64]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["bits", "probability", "count"])?;
    let mut order: Vec<usize> = (0..dist.probs().len()).collect();
    order.sort_by(|&a, &b| dist.probs()[b].total_cmp(&dist.probs()[a]).then(a.cmp(&b)));
    for k in order {
        let count = counts.get(k).copied().unwrap_or(0);
        w.write_record([dist.label(k), dist.probs()[k].to_string(), count.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

/// `evaluation_index,value`.
pub fn write_trace_csv<W: Write>(out: W, trace: &OptimizationTrace) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["evaluation_index", "value"])?;
    for (i, e) in trace.evaluations.iter().enumerate() {
        w.write_record([i.to_string(), e.value.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

/// `index,bits,energy`.
pub fn write_energy_table_csv<W: Write>(out: W, table: &EnergyTable) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["index", "bits", "energy"])?;
    for (k, e) in table.energies().iter().enumerate() {
        let bits = bits_to_string(&index_to_bits(k as u64, table.n_vars()));
        w.write_record([k.to_string(), bits, e.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

const SWEEP_HEADER: [&str; 13] = [
    "q", "P", "maxiter", "seed", "z_star", "is_tds", "is_min_tds", "correct_prob", "optimal_prob",
    "final_cost", "evals", "runtime_ms", "error",
];

fn row_record(r: &SweepRow) -> Vec<String> {
    vec![
        r.q.to_string(),
        format_penalty(r.penalty),
        r.maxiter.to_string(),
        r.seed.to_string(),
        r.z_star.clone(),
        r.is_tds.to_string(),
        r.is_min_tds.to_string(),
        r.correct_prob.to_string(),
        r.optimal_prob.to_string(),
        r.final_cost.to_string(),
        r.evals.to_string(),
        r.runtime_ms.to_string(),
        r.error.clone().unwrap_or_default(),
    ]
}

/// Penalties like `0.8 * 6` print as `4.8` rather than `4.800000000000001`.
pub fn format_penalty(p: f64) -> String {
    let rounded = (p * 1e9).round() / 1e9;
    rounded.to_string()
}

pub fn write_sweep_csv<W: Write>(out: W, table: &SweepTable) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(SWEEP_HEADER)?;
    for r in &table.rows {
        w.write_record(row_record(r))?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_summary_csv<W: Write>(out: W, table: &SweepTable) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "q", "P", "maxiter", "runs", "failures", "tds_runs", "min_tds_runs", "median_correct_prob",
        "median_optimal_prob", "median_final_cost",
    ])?;
    for s in &table.summaries {
        w.write_record([
            s.q.to_string(),
            format_penalty(s.penalty),
            s.maxiter.to_string(),
            s.runs.to_string(),
            s.failures.to_string(),
            s.tds_runs.to_string(),
            s.min_tds_runs.to_string(),
            s.median_correct_prob.to_string(),
            s.median_optimal_prob.to_string(),
            s.median_final_cost.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<()> {
    let file = fs::File::create(path)?;
    serde_json::to_writer_pretty(std::io::BufWriter::new(file), value)?;
    Ok(())
}
