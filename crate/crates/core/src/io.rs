//! Versioned file formats: JSON policy/value files for reuse by the
//! simulation side, and tidy CSV exports. Files are always written in `f64`
//! regardless of the in-memory scalar; machine CSV floats carry 17
//! significant digits so they round-trip exactly.

use std::io::{BufWriter, Write};
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::game::{AdversaryPolicy, GameSolution, PriceGrid, ValueFunction};
use crate::moment::FiniteLaw;
use crate::simulate::LossRecord;
use crate::stochastic::DiscretePath;
use crate::verify::SweepTable;

pub const SCHEMA_VERSION: u32 = 1;

/// `{:.16e}` gives 17 significant digits: exact round-trips for f64.
pub fn fmt_machine(x: f64) -> String {
    format!("{x:.16e}")
}

#[derive(Debug, Serialize, Deserialize)]
pub struct GridFile {
    pub log_step: f64,
    pub zero_pos: usize,
    pub len: usize,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct LawFile {
    /// Atom pairs `(t, p)` sorted by `t`.
    pub atoms: Vec<(f64, f64)>,
}

/// On-disk form of a solved game: the optimal transition laws plus,
/// optionally, every stage value surface.
#[derive(Debug, Serialize, Deserialize)]
pub struct PolicyFile {
    pub schema_version: u32,
    pub n: usize,
    pub c: f64,
    pub zeta: f64,
    pub v: f64,
    pub value: f64,
    pub grid: GridFile,
    /// `stages[m - 1][node]`.
    pub stages: Vec<Vec<LawFile>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stage_values: Option<Vec<Vec<f64>>>,
}

impl PolicyFile {
    pub fn from_solution(solution: &GameSolution<f64>, include_values: bool) -> Self {
        let policy = &solution.policy;
        PolicyFile {
            schema_version: SCHEMA_VERSION,
            n: policy.n,
            c: policy.c,
            zeta: policy.zeta,
            v: policy.v,
            value: solution.value,
            grid: GridFile {
                log_step: policy.grid.log_step,
                zero_pos: policy.grid.zero_pos,
                len: policy.grid.len(),
            },
            stages: policy
                .stages
                .iter()
                .map(|stage| {
                    stage
                        .iter()
                        .map(|law| LawFile {
                            atoms: law.atoms.clone(),
                        })
                        .collect()
                })
                .collect(),
            stage_values: include_values
                .then(|| solution.stages.iter().map(|vf| vf.values.clone()).collect()),
        }
    }

    fn rebuild_grid(&self) -> Arc<PriceGrid<f64>> {
        let nodes = (0..self.grid.len)
            .map(|j| ((j as f64 - self.grid.zero_pos as f64) * self.grid.log_step).exp())
            .collect();
        Arc::new(PriceGrid {
            log_step: self.grid.log_step,
            zero_pos: self.grid.zero_pos,
            nodes,
        })
    }

    pub fn to_policy(&self) -> Result<AdversaryPolicy<f64>> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(Error::Parse(format!(
                "policy file schema_version {} is not supported (expected {SCHEMA_VERSION})",
                self.schema_version
            )));
        }
        if self.stages.len() != self.n {
            return Err(Error::Parse(format!(
                "policy file carries {} stages for n = {}",
                self.stages.len(),
                self.n
            )));
        }
        let grid = self.rebuild_grid();
        let stages = self
            .stages
            .iter()
            .map(|stage| {
                if stage.len() != self.grid.len {
                    return Err(Error::Parse(
                        "policy stage does not cover the price grid".into(),
                    ));
                }
                Ok(stage
                    .iter()
                    .map(|law| FiniteLaw {
                        atoms: law.atoms.clone(),
                        zeta: self.zeta,
                        v: self.v,
                    })
                    .collect())
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(AdversaryPolicy {
            grid,
            n: self.n,
            c: self.c,
            zeta: self.zeta,
            v: self.v,
            stages,
        })
    }

    /// Rebuild the per-stage value surfaces, when the file carries them.
    pub fn to_value_functions(&self) -> Option<Vec<ValueFunction<f64>>> {
        let values = self.stage_values.as_ref()?;
        let grid = self.rebuild_grid();
        Some(
            values
                .iter()
                .enumerate()
                .map(|(stage, vals)| ValueFunction {
                    stage,
                    grid: Arc::clone(&grid),
                    values: vals.clone(),
                })
                .collect(),
        )
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let file = std::fs::File::create(path)?;
        serde_json::to_writer(BufWriter::new(file), self)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let file = std::fs::File::open(path)?;
        let parsed: PolicyFile = serde_json::from_reader(std::io::BufReader::new(file))?;
        if parsed.schema_version != SCHEMA_VERSION {
            return Err(Error::Parse(format!(
                "policy file schema_version {} is not supported (expected {SCHEMA_VERSION})",
                parsed.schema_version
            )));
        }
        Ok(parsed)
    }
}

/// `stage,node,price,value` rows for every stage surface.
pub fn write_values_csv(path: impl AsRef<Path>, stages: &[ValueFunction<f64>]) -> Result<()> {
    let file = std::fs::File::create(path)?;
    let mut w = BufWriter::new(file);
    writeln!(w, "stage,node,price,value")?;
    for vf in stages {
        for (j, (&s, &val)) in vf.grid.nodes.iter().zip(&vf.values).enumerate() {
            writeln!(
                w,
                "{},{},{},{}",
                vf.stage,
                j,
                fmt_machine(s),
                fmt_machine(val)
            )?;
        }
    }
    Ok(())
}

/// One row per path: `path,S_0,...,S_n`.
pub fn write_paths_csv(path: impl AsRef<Path>, paths: &[DiscretePath<f64>]) -> Result<()> {
    let file = std::fs::File::create(path)?;
    let mut w = BufWriter::new(file);
    let n = paths.first().map(|p| p.n_steps()).unwrap_or(0);
    let header: Vec<String> = (0..=n).map(|m| format!("S_{m}")).collect();
    writeln!(w, "path,{}", header.join(","))?;
    for (i, p) in paths.iter().enumerate() {
        let row: Vec<String> = p.values.iter().map(|&s| fmt_machine(s)).collect();
        writeln!(w, "{},{}", i, row.join(","))?;
    }
    Ok(())
}

/// Per-path loss decomposition rows.
pub fn write_losses_csv(
    path: impl AsRef<Path>,
    seed: u64,
    records: &[LossRecord<f64>],
) -> Result<()> {
    let file = std::fs::File::create(path)?;
    let mut w = BufWriter::new(file);
    writeln!(w, "seed,path,terminal_price,payoff,trading_gain,loss")?;
    for (i, r) in records.iter().enumerate() {
        writeln!(
            w,
            "{},{},{},{},{},{}",
            seed,
            i,
            fmt_machine(r.terminal),
            fmt_machine(r.payoff),
            fmt_machine(r.trading_gain),
            fmt_machine(r.loss)
        )?;
    }
    Ok(())
}

/// Tidy sweep table: one `(n, zeta, feasible, value, beta, gap)` row per n.
pub fn write_sweep_csv(path: impl AsRef<Path>, table: &SweepTable) -> Result<()> {
    let file = std::fs::File::create(path)?;
    let mut w = BufWriter::new(file);
    writeln!(w, "n,zeta,feasible,value,beta,gap")?;
    for row in &table.rows {
        writeln!(
            w,
            "{},{},{},{},{},{}",
            row.n,
            fmt_machine(row.zeta),
            row.feasible,
            row.value.map(fmt_machine).unwrap_or_default(),
            fmt_machine(row.beta),
            row.gap.map(fmt_machine).unwrap_or_default()
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::{solve_game, GameConfig, ZetaRule};
    use crate::payoff::PayoffSpec;
    use crate::simulate::sample_adversary_paths;

    #[test]
    fn policy_file_round_trips() {
        let mut cfg = GameConfig::new(4, 0.04, ZetaRule::Power { delta: 0.25 });
        cfg.grid_size = 129;
        cfg.moment_grid_size = 65;
        let sol = solve_game(&cfg, &PayoffSpec::call(1.0).unwrap()).unwrap();

        let dir = std::env::temp_dir().join("robust_pricing_io_test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("policy.json");
        PolicyFile::from_solution(&sol, true).save(&path).unwrap();

        let loaded = PolicyFile::load(&path).unwrap();
        assert_eq!(loaded.schema_version, SCHEMA_VERSION);
        assert_eq!(loaded.value, sol.value);
        let policy = loaded.to_policy().unwrap();
        assert_eq!(policy.n, 4);
        assert_eq!(policy.grid.nodes, sol.policy.grid.nodes);
        for (a, b) in policy.stages.iter().zip(&sol.policy.stages) {
            assert_eq!(a, b);
        }
        let stages = loaded.to_value_functions().unwrap();
        assert_eq!(stages.len(), 5);
        assert_eq!(stages[0].values, sol.stages[0].values);

        // sampling from the reloaded policy matches the original bit for bit
        let a = sample_adversary_paths(&sol.policy, 16, 9).unwrap();
        let b = sample_adversary_paths(&policy, 16, 9).unwrap();
        assert_eq!(a, b);
        std::fs::remove_dir_all(&dir).ok();
    }

    #[test]
    fn machine_floats_round_trip() {
        for &x in &[0.1, 1.0 / 3.0, 0.079655674554057962931, 1e-45, 6.02e23] {
            let s = fmt_machine(x);
            let back: f64 = s.parse().unwrap();
            assert_eq!(back.to_bits(), x.to_bits(), "{s}");
        }
    }

    #[test]
    fn wrong_schema_version_is_rejected() {
        let dir = std::env::temp_dir().join("robust_pricing_io_schema");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("bad.json");
        std::fs::write(
            &path,
            r#"{"schema_version":999,"n":1,"c":0.04,"zeta":0.5,"v":0.04,"value":0.1,
               "grid":{"log_step":0.01,"zero_pos":0,"len":2},"stages":[[{"atoms":[]},{"atoms":[]}]]}"#,
        )
        .unwrap();
        assert!(PolicyFile::load(&path).is_err());
        std::fs::remove_dir_all(&dir).ok();
    }
}
