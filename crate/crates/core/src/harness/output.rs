//! Writing run artifacts to disk.

use std::fmt::Write as _;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use crate::ensemble::fmt17;
use crate::error::{Error, Result};

use super::config::ExperimentConfig;
use super::experiment::{run_stability_experiment, simulate_single, RunArtifacts};

/// What the caller needs after a run has been written.
#[derive(Clone, Debug, PartialEq)]
pub struct RunSummary {
    pub passed: bool,
    pub lines: Vec<String>,
    pub output_dir: PathBuf,
}

fn create(dir: &Path, name: &str) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(dir.join(name))?))
}

fn opt17(x: Option<f64>) -> String {
    x.map(fmt17).unwrap_or_else(|| "nan".into())
}

/// Human-readable summary; the only artifact that carries the wall time.
pub fn report_text<const D: usize>(art: &RunArtifacts<D>, cfg: &ExperimentConfig) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "magvlasov stability report");
    let _ = writeln!(s, "version = {}", art.version);
    let _ = writeln!(s, "config_hash = {}", art.config_hash);
    let _ = writeln!(s, "wall_time_seconds = {:.3}", art.wall_time.as_secs_f64());
    let _ = writeln!(s, "dimension = {D}");
    let _ = writeln!(s, "particles = {}", cfg.run.particles);
    let _ = writeln!(
        s,
        "dt = {}, horizon = {}, steps = {}",
        cfg.run.dt,
        cfg.run.horizon,
        cfg.steps()
    );
    let _ = writeln!(s, "interaction = {}", art.interaction_label);
    let _ = writeln!(s, "magnetic = {}", art.field_label);
    let _ = writeln!(s, "distance = {}", art.distance_method);
    let _ = writeln!(
        s,
        "constants: c_d = {}, C_d = {}, c0 = {} (placeholder)",
        cfg.bounds.c_d, cfg.bounds.c_upper, cfg.bounds.c0
    );
    let _ = writeln!(s, "W1(0) = {}", fmt17(art.w1[0]));
    let _ = writeln!(s, "W2(0) = {}", fmt17(art.w2[0]));
    let _ = writeln!(s, "W1(T) = {}", fmt17(*art.w1.last().unwrap()));
    for b in &art.bounds {
        let _ = writeln!(s, "{}", b.summary());
    }
    for n in &art.notes {
        let _ = writeln!(s, "note: {n}");
    }
    let _ = writeln!(
        s,
        "verdict = {}",
        if art.passed() { "PASS" } else { "FAIL" }
    );
    s
}

pub fn write_artifacts<const D: usize>(
    art: &RunArtifacts<D>,
    cfg: &ExperimentConfig,
    dir: &Path,
) -> Result<()> {
    fs::create_dir_all(dir)?;
    for (k, traj) in art.trajectories.iter().enumerate() {
        let mut out = create(dir, &format!("trajectory_{}.csv", k + 1))?;
        traj.write_csv(&mut out)?;
        out.flush()?;
    }
    let mut out = create(dir, "distances.csv")?;
    writeln!(out, "# method = {}", art.distance_method)?;
    writeln!(out, "t,w1,w2")?;
    for ((t, a), b) in art.samples.iter().zip(&art.w1).zip(&art.w2) {
        writeln!(out, "{},{},{}", fmt17(*t), fmt17(*a), fmt17(*b))?;
    }
    out.flush()?;
    let mut out = create(dir, "functionals.csv")?;
    writeln!(out, "t,dobrushin,loeper,kinetic_q,renormalized")?;
    for r in &art.functionals {
        writeln!(
            out,
            "{},{},{},{},{}",
            fmt17(r.t),
            fmt17(r.dobrushin),
            fmt17(r.loeper),
            fmt17(r.kinetic_q),
            opt17(r.renormalized)
        )?;
    }
    out.flush()?;
    for b in &art.bounds {
        let mut out = create(dir, &format!("bounds_{}.csv", b.label))?;
        b.write_csv(&mut out)?;
        out.flush()?;
    }
    if let Some(ds) = &art.density {
        let mut out = create(dir, "density_series.csv")?;
        writeln!(out, "t,a,rho2_sup,j,j_integral")?;
        for k in 0..ds.a.len() {
            writeln!(
                out,
                "{},{},{},{},{}",
                fmt17(ds.a.times()[k]),
                fmt17(ds.a.values()[k]),
                fmt17(ds.rho2_sup.values()[k]),
                fmt17(ds.j.j.values()[k]),
                fmt17(ds.j.integral[k])
            )?;
        }
        out.flush()?;
    }
    fs::write(dir.join("report.txt"), report_text(art, cfg))?;
    Ok(())
}

fn output_dir(cfg: &ExperimentConfig, dir: Option<&Path>) -> Result<PathBuf> {
    dir.map(Path::to_path_buf)
        .or_else(|| cfg.run.output.clone())
        .ok_or_else(|| Error::Config("no output directory given".into()))
}

fn finish<const D: usize>(
    art: RunArtifacts<D>,
    cfg: &ExperimentConfig,
    dir: PathBuf,
) -> Result<RunSummary> {
    write_artifacts(&art, cfg, &dir)?;
    let mut lines: Vec<String> = art.bounds.iter().map(|b| b.summary()).collect();
    lines.extend(art.notes.iter().map(|n| format!("note: {n}")));
    Ok(RunSummary {
        passed: art.passed(),
        lines,
        output_dir: dir,
    })
}

/// Runs the experiment in the configured dimension and writes every artifact.
pub fn run_and_write(cfg: &ExperimentConfig, dir: Option<&Path>) -> Result<RunSummary> {
    let dir = output_dir(cfg, dir)?;
    match cfg.run.dimension {
        2 => finish(run_stability_experiment::<2>(cfg)?, cfg, dir),
        3 => finish(run_stability_experiment::<3>(cfg)?, cfg, dir),
        d => Err(Error::Config(format!("dimension must be 2 or 3, got {d}"))),
    }
}

/// Single-ensemble run; writes `trajectory.csv` and returns its path.
pub fn simulate_and_write(cfg: &ExperimentConfig, dir: Option<&Path>) -> Result<PathBuf> {
    let dir = output_dir(cfg, dir)?;
    fs::create_dir_all(&dir)?;
    let path = dir.join("trajectory.csv");
    let mut out = BufWriter::new(File::create(&path)?);
    match cfg.run.dimension {
        2 => simulate_single::<2>(cfg)?.write_csv(&mut out)?,
        3 => simulate_single::<3>(cfg)?.write_csv(&mut out)?,
        d => return Err(Error::Config(format!("dimension must be 2 or 3, got {d}"))),
    }
    out.flush()?;
    Ok(path)
}
