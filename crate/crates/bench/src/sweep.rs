//! The (p × block size × algorithm) sweep.

use std::collections::BTreeMap;
use std::path::Path;
use std::time::Instant;

use allgather_core::executor::{execute_concurrent, verify};
use allgather_core::netmodel::{make_mapping, CostOptions, CostProfile};
use allgather_core::schedules::{sparbit_schedule_with, SparbitOptions};
use allgather_core::{AlgorithmId, CommSchedule, ProcessGroup};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::SweepSpec;
use crate::{write_file, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub p: usize,
    pub block_size: u64,
    pub algorithm: AlgorithmId,
    pub steps: usize,
    pub blocks_per_rank: usize,
    pub modeled_time: f64,
    pub core_bytes: u64,
    pub correct: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SkipRecord {
    pub p: usize,
    pub algorithm: AlgorithmId,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimingRow {
    pub p: usize,
    pub block_size: u64,
    pub algorithm: AlgorithmId,
    pub repetitions: usize,
    pub mean_micros: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SweepOutput {
    pub rows: Vec<SweepRow>,
    pub skips: Vec<SkipRecord>,
    pub timings: Vec<TimingRow>,
}

impl SweepOutput {
    pub fn all_correct(&self) -> bool {
        self.rows.iter().all(|r| r.correct)
    }

    pub fn rows_csv(&self) -> Result<String> {
        to_csv(&self.rows)
    }

    pub fn skips_csv(&self) -> Result<String> {
        to_csv(&self.skips)
    }

    pub fn timings_csv(&self) -> Result<String> {
        to_csv(&self.timings)
    }

    /// Writes `sweep.csv`, `skips.csv` and, if timing ran, `timings.csv` into `dir`.
    pub fn write(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(|source| crate::BenchError::Io {
            path: dir.to_path_buf(),
            source,
        })?;
        write_file(&dir.join("sweep.csv"), &self.rows_csv()?)?;
        write_file(&dir.join("skips.csv"), &self.skips_csv()?)?;
        if !self.timings.is_empty() {
            write_file(&dir.join("timings.csv"), &self.timings_csv()?)?;
        }
        Ok(())
    }
}

pub(crate) fn to_csv<T: Serialize>(records: &[T]) -> Result<String> {
    let mut writer = csv::WriterBuilder::new()
        .has_headers(true)
        .from_writer(Vec::new());
    for record in records {
        writer.serialize(record)?;
    }
    let bytes = writer
        .into_inner()
        .map_err(|e| csv::Error::from(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

/// Reads a sweep dataset written by [`SweepOutput::write`].
pub fn read_rows(text: &str) -> Result<Vec<SweepRow>> {
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    Ok(reader.deserialize().collect::<Result<_, _>>()?)
}

pub(crate) fn build_schedule(
    spec: &SweepSpec,
    algorithm: AlgorithmId,
    group: &ProcessGroup,
) -> Result<CommSchedule> {
    Ok(match algorithm {
        AlgorithmId::Sparbit => sparbit_schedule_with(
            group,
            SparbitOptions {
                force_no_ignore: spec.force_no_ignore,
            },
        ),
        other => other.build(group)?,
    })
}

struct Job {
    p: usize,
    algorithm: AlgorithmId,
}

/// Runs every applicable (p, algorithm) pair over all block sizes.
///
/// Pairs are independent and evaluated in parallel; the output is sorted by
/// p, block size and algorithm name whatever the completion order.
pub fn run_sweep(spec: &SweepSpec) -> Result<SweepOutput> {
    spec.validate()?;
    let topology = spec.topology.resolve(spec.max_p());
    let mut jobs = Vec::new();
    let mut skips = Vec::new();
    for &p in &spec.procs {
        for algorithm in spec.sorted_algorithms() {
            match algorithm.check_applicable(p) {
                Ok(()) => jobs.push(Job { p, algorithm }),
                Err(e) => skips.push(SkipRecord {
                    p,
                    algorithm,
                    reason: e.to_string(),
                }),
            }
        }
    }

    let results: Vec<Result<(Vec<SweepRow>, Vec<TimingRow>)>> = jobs
        .par_iter()
        .map(|job| {
            let group = ProcessGroup::new(job.p, 1)?.with_seed(spec.seed);
            let schedule = build_schedule(spec, job.algorithm, &group)?;
            let mapping = make_mapping(spec.mapping.clone(), job.p, &topology)?;
            let profile = CostProfile::new(&schedule, &topology, &mapping)?;
            let options = CostOptions {
                local_copy_beta: spec.local_copy_beta,
            };
            let blocks_per_rank = group
                .ranks()
                .map(|r| schedule.blocks_sent_by(r))
                .max()
                .unwrap_or(0);

            // Verdicts per verified payload size; sizes above the cap share one run.
            let mut verdicts: BTreeMap<u64, bool> = BTreeMap::new();
            let mut rows = Vec::with_capacity(spec.sizes.len());
            let mut timings = Vec::new();
            for &block_size in &spec.sizes {
                let correct = if spec.check_correctness {
                    let size = block_size.min(spec.verify_block_cap);
                    match verdicts.get(&size) {
                        Some(&v) => v,
                        None => {
                            let v = check(spec, job.algorithm, job.p, size)?;
                            verdicts.insert(size, v);
                            v
                        }
                    }
                } else {
                    true
                };
                let report = profile.report(block_size * job.p as u64, &options)?;
                rows.push(SweepRow {
                    p: job.p,
                    block_size,
                    algorithm: job.algorithm,
                    steps: schedule.num_steps(),
                    blocks_per_rank,
                    modeled_time: report.total_time.to_f64(),
                    core_bytes: report.core_bytes(),
                    correct,
                });
                if spec.repetitions > 0 {
                    timings.push(time_concurrent(spec, job.algorithm, job.p, block_size)?);
                }
            }
            Ok((rows, timings))
        })
        .collect();

    let mut out = SweepOutput {
        skips,
        ..Default::default()
    };
    for result in results {
        let (rows, timings) = result?;
        out.rows.extend(rows);
        out.timings.extend(timings);
    }
    out.rows.sort_by(|a, b| {
        (a.p, a.block_size, a.algorithm.name()).cmp(&(b.p, b.block_size, b.algorithm.name()))
    });
    out.timings.sort_by(|a, b| {
        (a.p, a.block_size, a.algorithm.name()).cmp(&(b.p, b.block_size, b.algorithm.name()))
    });
    Ok(out)
}

fn check(spec: &SweepSpec, algorithm: AlgorithmId, p: usize, block_size: u64) -> Result<bool> {
    let group = ProcessGroup::new(p, block_size as usize)?.with_seed(spec.seed);
    let outcome = verify(&build_schedule(spec, algorithm, &group)?);
    Ok(outcome.passed() && (spec.force_no_ignore || outcome.double_writes == 0))
}

/// Mean wall-clock time of the threaded executor. Not a model of any network.
fn time_concurrent(
    spec: &SweepSpec,
    algorithm: AlgorithmId,
    p: usize,
    block_size: u64,
) -> Result<TimingRow> {
    let group = ProcessGroup::new(p, block_size as usize)?.with_seed(spec.seed);
    let schedule = build_schedule(spec, algorithm, &group)?;
    let start = Instant::now();
    for _ in 0..spec.repetitions {
        // A failed run still took time; correctness is reported elsewhere.
        let _ = execute_concurrent(&schedule);
    }
    let mean_micros = start.elapsed().as_secs_f64() * 1e6 / spec.repetitions as f64;
    Ok(TimingRow {
        p,
        block_size,
        algorithm,
        repetitions: spec.repetitions,
        mean_micros,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(procs: Vec<usize>, sizes: Vec<u64>) -> SweepSpec {
        SweepSpec {
            procs,
            sizes,
            ..Default::default()
        }
    }

    #[test]
    fn single_cell_has_five_correct_rows() {
        let out = run_sweep(&small(vec![8], vec![1024])).unwrap();
        assert_eq!(out.rows.len(), 5);
        assert!(out.all_correct());
        assert!(out.skips.is_empty());
        let names: Vec<_> = out.rows.iter().map(|r| r.algorithm.name()).collect();
        assert_eq!(
            names,
            [
                "bruck",
                "neighbor_exchange",
                "recursive_doubling",
                "ring",
                "sparbit"
            ]
        );
    }

    #[test]
    fn restricted_algorithms_are_skipped_with_a_record() {
        let out = run_sweep(&small(vec![5], vec![4])).unwrap();
        let skipped: Vec<_> = out.skips.iter().map(|s| s.algorithm).collect();
        assert_eq!(
            skipped,
            vec![
                AlgorithmId::NeighborExchange,
                AlgorithmId::RecursiveDoubling
            ]
        );
        assert_eq!(out.rows.len(), 3);
    }

    #[test]
    fn csv_round_trip() {
        let out = run_sweep(&small(vec![4, 3], vec![2, 1])).unwrap();
        let text = out.rows_csv().unwrap();
        assert!(text.starts_with(
            "p,block_size,algorithm,steps,blocks_per_rank,modeled_time,core_bytes,correct\n"
        ));
        assert_eq!(read_rows(&text).unwrap(), out.rows);
        assert_eq!(out.rows[0].p, 3);
        assert_eq!(out.rows[0].block_size, 1);
    }

    #[test]
    fn timing_mode_adds_rows() {
        let spec = SweepSpec {
            repetitions: 2,
            ..small(vec![4], vec![8])
        };
        let out = run_sweep(&spec).unwrap();
        assert_eq!(out.timings.len(), 5);
        assert!(out.timings.iter().all(|t| t.mean_micros > 0.0));
    }
}
