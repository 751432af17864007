//! Best-algorithm heatmaps built from a sweep dataset.
//!
//! Rows are block sizes, columns are process counts in ascending order. A cell
//! won by a classical algorithm gets that algorithm's color; a cell won by
//! Sparbit is shaded grey, darker for a larger improvement over the runner-up.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::{self, Write as _};
use std::path::Path;

use allgather_core::AlgorithmId;

use crate::sweep::SweepRow;
use crate::{write_file, BenchError, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct HeatmapCell {
    pub p: usize,
    pub block_size: u64,
    pub winner: AlgorithmId,
    /// `(second - best) / second * 100`; zero when only one algorithm ran.
    pub improvement_pct: f64,
    pub times: BTreeMap<&'static str, f64>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MissingCell {
    pub p: usize,
    pub block_size: u64,
    pub algorithm: AlgorithmId,
}

impl fmt::Display for MissingCell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "p={} block_size={} algorithm={}",
            self.p, self.block_size, self.algorithm
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Heatmap {
    /// Algorithms present in the dataset, in name order.
    pub algorithms: Vec<AlgorithmId>,
    pub procs: Vec<usize>,
    pub sizes: Vec<u64>,
    pub cells: Vec<HeatmapCell>,
}

/// Picks a winner per (p, block size). Every algorithm present in the dataset
/// must have a row for each cell whose p it supports.
pub fn build_heatmap(rows: &[SweepRow]) -> Result<Heatmap> {
    let mut algorithms: Vec<AlgorithmId> = rows
        .iter()
        .map(|r| r.algorithm)
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    algorithms.sort_by_key(|a| a.name());
    let procs: Vec<usize> = rows
        .iter()
        .map(|r| r.p)
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let sizes: Vec<u64> = rows
        .iter()
        .map(|r| r.block_size)
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let times: BTreeMap<(usize, u64, &'static str), f64> = rows
        .iter()
        .map(|r| ((r.p, r.block_size, r.algorithm.name()), r.modeled_time))
        .collect();

    let mut missing = Vec::new();
    let mut cells = Vec::new();
    for &p in &procs {
        for &block_size in &sizes {
            let mut cell_times = BTreeMap::new();
            for &algorithm in algorithms.iter().filter(|a| a.supports(p)) {
                match times.get(&(p, block_size, algorithm.name())) {
                    Some(&t) => {
                        cell_times.insert(algorithm.name(), t);
                    }
                    None => missing.push(MissingCell {
                        p,
                        block_size,
                        algorithm,
                    }),
                }
            }
            if cell_times.is_empty() {
                continue;
            }
            // Name order breaks ties: only a strictly smaller time displaces the leader.
            let mut ranked: Vec<(&'static str, f64)> =
                cell_times.iter().map(|(k, v)| (*k, *v)).collect();
            ranked.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(b.0)));
            let (winner, best) = ranked[0];
            let improvement_pct = match ranked.get(1) {
                Some(&(_, second)) if second > 0.0 => (second - best) / second * 100.0,
                _ => 0.0,
            };
            cells.push(HeatmapCell {
                p,
                block_size,
                winner: winner.parse().expect("names round-trip"),
                improvement_pct,
                times: cell_times,
            });
        }
    }
    if !missing.is_empty() {
        return Err(BenchError::IncompleteGrid(missing));
    }
    Ok(Heatmap {
        algorithms,
        procs,
        sizes,
        cells,
    })
}

impl Heatmap {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("p,block_size,winner,improvement_pct");
        for a in &self.algorithms {
            write!(out, ",{}", a.name()).unwrap();
        }
        out.push('\n');
        for cell in &self.cells {
            write!(
                out,
                "{},{},{},{}",
                cell.p, cell.block_size, cell.winner, cell.improvement_pct
            )
            .unwrap();
            for a in &self.algorithms {
                match cell.times.get(a.name()) {
                    Some(t) => write!(out, ",{t}").unwrap(),
                    None => out.push(','),
                }
            }
            out.push('\n');
        }
        out
    }

    pub fn to_svg(&self) -> String {
        const CELL: usize = 14;
        const LEFT: usize = 90;
        const TOP: usize = 40;
        let width = LEFT + CELL * self.procs.len() + 220;
        let height = TOP + CELL * self.sizes.len() + 60;
        let column: BTreeMap<usize, usize> = self
            .procs
            .iter()
            .enumerate()
            .map(|(i, &p)| (p, i))
            .collect();
        let row: BTreeMap<u64, usize> = self
            .sizes
            .iter()
            .enumerate()
            .map(|(i, &s)| (s, i))
            .collect();

        let mut svg = String::new();
        writeln!(
            svg,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" font-family="sans-serif" font-size="10">"#
        )
        .unwrap();
        writeln!(
            svg,
            r#"<text x="{LEFT}" y="16" font-size="13">Best modeled Allgather per cell</text>"#
        )
        .unwrap();
        for cell in &self.cells {
            let x = LEFT + CELL * column[&cell.p];
            let y = TOP + CELL * row[&cell.block_size];
            writeln!(
                svg,
                r#"<rect x="{x}" y="{y}" width="{CELL}" height="{CELL}" fill="{}"><title>p={} block={} {} +{:.2}%</title></rect>"#,
                fill(cell.winner, cell.improvement_pct),
                cell.p,
                cell.block_size,
                cell.winner,
                cell.improvement_pct
            )
            .unwrap();
        }
        for (&size, &i) in &row {
            let y = TOP + CELL * i + CELL - 3;
            writeln!(
                svg,
                r#"<text x="{}" y="{y}" text-anchor="end">{}</text>"#,
                LEFT - 4,
                size_label(size)
            )
            .unwrap();
        }
        for (&p, &i) in &column {
            let x = LEFT + CELL * i + CELL - 3;
            let y = TOP + CELL * self.sizes.len() + 4;
            writeln!(
                svg,
                r#"<text transform="translate({x},{y}) rotate(90)">{p}</text>"#
            )
            .unwrap();
        }

        let legend_x = LEFT + CELL * self.procs.len() + 20;
        let mut y = TOP;
        for a in AlgorithmId::ALLGATHER
            .into_iter()
            .filter(|a| *a != AlgorithmId::Sparbit)
        {
            writeln!(
                svg,
                r#"<rect x="{legend_x}" y="{y}" width="{CELL}" height="{CELL}" fill="{}"/>"#,
                color(a)
            )
            .unwrap();
            writeln!(
                svg,
                r#"<text x="{}" y="{}">{a}</text>"#,
                legend_x + CELL + 6,
                y + CELL - 3
            )
            .unwrap();
            y += CELL + 6;
        }
        for pct in [0.0, 10.0, 25.0, 50.0] {
            writeln!(
                svg,
                r#"<rect x="{legend_x}" y="{y}" width="{CELL}" height="{CELL}" fill="{}"/>"#,
                fill(AlgorithmId::Sparbit, pct)
            )
            .unwrap();
            writeln!(
                svg,
                r#"<text x="{}" y="{}">sparbit +{pct}%</text>"#,
                legend_x + CELL + 6,
                y + CELL - 3
            )
            .unwrap();
            y += CELL + 6;
        }
        svg.push_str("</svg>\n");
        svg
    }

    /// Writes `heatmap.csv` and `heatmap.svg` into `dir`.
    pub fn write(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(|source| BenchError::Io {
            path: dir.to_path_buf(),
            source,
        })?;
        write_file(&dir.join("heatmap.csv"), &self.to_csv())?;
        write_file(&dir.join("heatmap.svg"), &self.to_svg())
    }
}

fn color(algorithm: AlgorithmId) -> &'static str {
    match algorithm {
        AlgorithmId::Bruck => "#1f77b4",
        AlgorithmId::NeighborExchange => "#ff7f0e",
        AlgorithmId::RecursiveDoubling => "#2ca02c",
        AlgorithmId::Ring => "#d62728",
        AlgorithmId::Sparbit | AlgorithmId::BinomialBroadcast => "#808080",
    }
}

fn fill(winner: AlgorithmId, improvement_pct: f64) -> String {
    if winner != AlgorithmId::Sparbit {
        return color(winner).to_string();
    }
    // 0% is light grey, 50% and above near black.
    let level = (improvement_pct.clamp(0.0, 50.0) / 50.0 * 200.0).round() as u8;
    let v = 230 - level;
    format!("#{v:02x}{v:02x}{v:02x}")
}

fn size_label(bytes: u64) -> String {
    match bytes {
        b if b >= 1 << 20 && b % (1 << 20) == 0 => format!("{}MiB", b >> 20),
        b if b >= 1 << 10 && b % (1 << 10) == 0 => format!("{}KiB", b >> 10),
        b => format!("{b}B"),
    }
}
