//! Sweep driver: synthesis, noisy sampling, correlation-matrix assembly,
//! mitigation and analysis for every (mu, state) point of a config.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::analysis::{energy_from_correlation, fidelity_witness, site_correlation_profile};
use crate::bogoliubov::{diagonalize, Occupation};
use crate::error::{Error, Result};
use crate::hamiltonian::{kitaev_chain, KitaevParams, QuadraticHamiltonian};
use crate::measure::{assemble_correlation_matrix, measurement_settings, CorrelationMatrix, MeasurementSetting};
use crate::mitigate::{
    mcweeny_purify, parity_postselect, readout_mitigate_with_radius, resample_counts, ConfusionModel,
    DiscardedMass, Interval, PurificationReport, QuasiDistribution,
};
use crate::simulate::{correlation_from_statevector, run_noisy_stream, NoiseModel, ShotCounts, StateVector};

pub const SCHEMA_VERSION: u32 = 1;

const PURIFY_TOL: f64 = 1e-10;
const PURIFY_MAX_ITER: usize = 50;

/// Named presets bundled with the crate.
pub const PRESETS: [(&str, &str); 3] = [
    ("paper6", include_str!("../presets/paper6.toml")),
    ("paper7", include_str!("../presets/paper7.toml")),
    ("smoke", include_str!("../presets/smoke.toml")),
];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct MitigationToggles {
    pub readout: bool,
    pub postselect: bool,
    pub purify: bool,
}

impl Default for MitigationToggles {
    fn default() -> Self {
        Self { readout: true, postselect: true, purify: true }
    }
}

fn default_true() -> bool {
    true
}

fn default_output() -> PathBuf {
    PathBuf::from("results")
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub n: usize,
    pub t: f64,
    pub delta: f64,
    pub mu_values: Vec<f64>,
    /// Bitstrings over the Bogoliubov modes, `"ground"`, or `"six-state"`.
    pub states: Vec<String>,
    pub shots: u64,
    #[serde(default)]
    pub noise: NoiseModel,
    #[serde(default)]
    pub mitigation: MitigationToggles,
    #[serde(default = "default_true")]
    pub idle_noise_on: bool,
    pub seed: u64,
    /// Bootstrap replicates per point. Zero disables the intervals.
    #[serde(default)]
    pub bootstrap: usize,
    /// Hamming radius of the readout inversion. `None` inverts exactly.
    #[serde(default)]
    pub readout_radius: Option<usize>,
    #[serde(default = "default_output", skip_serializing)]
    pub output: PathBuf,
}

/// Ground state, first and second excitations, and the three states at the
/// top of the spectrum obtained by complementing them.
pub fn six_state_preset(n: usize) -> Vec<Occupation> {
    let low = [Occupation::vacuum(n), Occupation::single(n, 0), Occupation::single(n, 1.min(n - 1))];
    let high: Vec<Occupation> = low.iter().map(Occupation::complement).collect();
    low.into_iter().chain(high).collect()
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml_str(&fs::read_to_string(path)?)
    }

    pub fn preset(name: &str) -> Result<Self> {
        let (_, text) = PRESETS
            .iter()
            .find(|(p, _)| *p == name)
            .ok_or_else(|| Error::Config(format!("unknown preset {name:?}")))?;
        Self::from_toml_str(text)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::Config("n must be positive".into()));
        }
        if self.shots == 0 {
            return Err(Error::Config("shots must be positive".into()));
        }
        if self.mu_values.is_empty() {
            return Err(Error::Config("mu_values is empty".into()));
        }
        if self.states.is_empty() {
            return Err(Error::Config("states is empty".into()));
        }
        let params = std::iter::once(self.t).chain([self.delta]).chain(self.mu_values.iter().copied());
        if params.into_iter().any(|x| !x.is_finite()) {
            return Err(Error::Config("Hamiltonian parameters must be finite".into()));
        }
        self.noise.validate(self.n).map_err(|e| Error::Config(e.to_string()))?;
        self.occupations()?;
        Ok(())
    }

    /// The requested states in order, with duplicates removed.
    pub fn occupations(&self) -> Result<Vec<Occupation>> {
        let n = self.n;
        let mut out: Vec<Occupation> = Vec::new();
        for s in &self.states {
            let expanded = match s.as_str() {
                "six-state" => six_state_preset(n),
                "ground" => vec![Occupation::vacuum(n)],
                bits => {
                    let occ: Occupation = bits.parse().map_err(|e: Error| Error::Config(e.to_string()))?;
                    if occ.len() != n {
                        return Err(Error::Config(format!("state {bits:?} has length {}, expected {n}", occ.len())));
                    }
                    vec![occ]
                }
            };
            for occ in expanded {
                if !out.contains(&occ) {
                    out.push(occ);
                }
            }
        }
        Ok(out)
    }

    /// Noise actually simulated: idle faults are dropped unless enabled.
    pub fn effective_noise(&self) -> NoiseModel {
        let mut noise = self.noise.clone();
        if !self.idle_noise_on {
            noise.p_idle = 0.0;
        }
        noise
    }

    /// SHA-256 of the canonical JSON form. The output path is not part of it.
    pub fn hash(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("config serializes");
        Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Raw,
    Readout,
    Postselect,
    Purify,
}

impl Stage {
    pub fn name(self) -> &'static str {
        match self {
            Stage::Raw => "raw",
            Stage::Readout => "readout",
            Stage::Postselect => "postselect",
            Stage::Purify => "purify",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StageResult {
    pub stage: Stage,
    pub energy: f64,
    pub witness: f64,
    pub site_correlation: Vec<f64>,
}

/// A scalar with its exact value, the unmitigated estimate, the fully
/// mitigated estimate and a bootstrap band around the latter.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Observable {
    pub ideal: f64,
    pub raw: f64,
    pub mitigated: f64,
    pub interval: Option<Interval>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PointParameters {
    pub n: usize,
    pub t: f64,
    pub delta: f64,
    pub mu: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CircuitStats {
    pub gates: usize,
    pub givens: usize,
    pub depth: usize,
    pub settings: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PointResult {
    pub schema_version: u32,
    pub job: usize,
    pub parameters: PointParameters,
    pub occupation: Occupation,
    pub error: Option<String>,
    pub circuit: Option<CircuitStats>,
    pub ideal_site_correlation: Vec<f64>,
    pub energy: Option<Observable>,
    pub excitation: Option<Observable>,
    pub witness: Option<Observable>,
    pub stages: Vec<StageResult>,
    pub discarded_mass: Option<DiscardedMass>,
    pub purification: Option<PurificationReport>,
    pub gamma: Option<CorrelationMatrix>,
    #[serde(skip)]
    replicate_energies: Vec<f64>,
}

impl PointResult {
    pub fn succeeded(&self) -> bool {
        self.error.is_none()
    }

    fn stage(&self, stage: Stage) -> Option<&StageResult> {
        self.stages.iter().find(|s| s.stage == stage)
    }
}

/// Output of the mitigation chain for one set of shot counts.
struct Processed {
    stages: Vec<StageResult>,
    discarded: Option<DiscardedMass>,
    purification: Option<PurificationReport>,
    gamma: CorrelationMatrix,
    error: Option<Error>,
}

struct PointContext<'a> {
    h: QuadraticHamiltonian,
    settings: Vec<MeasurementSetting>,
    target: CorrelationMatrix,
    confusion: ConfusionModel,
    cfg: &'a ExperimentConfig,
}

impl PointContext<'_> {
    fn observe(&self, stage: Stage, gamma: &CorrelationMatrix, profile: bool) -> Result<StageResult> {
        Ok(StageResult {
            stage,
            energy: energy_from_correlation(&self.h, gamma)?,
            witness: fidelity_witness(&self.target, gamma)?,
            site_correlation: if profile { site_correlation_profile(gamma)? } else { Vec::new() },
        })
    }

    fn process(&self, counts: &[ShotCounts], profile: bool) -> Result<Processed> {
        let cfg = self.cfg;
        let n = cfg.n;
        let raw: Vec<QuasiDistribution> = counts.iter().map(QuasiDistribution::from_counts).collect();
        let mut gamma = assemble_correlation_matrix(&self.settings, &raw)?;
        let mut out = Processed {
            stages: vec![self.observe(Stage::Raw, &gamma, profile)?],
            discarded: None,
            purification: None,
            gamma: gamma.clone(),
            error: None,
        };

        let mut dists = raw;
        if cfg.mitigation.readout {
            let radius = cfg.readout_radius.unwrap_or(n);
            dists = counts
                .iter()
                .map(|c| readout_mitigate_with_radius(c, &self.confusion, radius))
                .collect::<Result<_>>()?;
            gamma = assemble_correlation_matrix(&self.settings, &dists)?;
            out.stages.push(self.observe(Stage::Readout, &gamma, profile)?);
        }
        if cfg.mitigation.postselect {
            let mut kept = Vec::with_capacity(dists.len());
            let mut total = DiscardedMass { signed: 0.0, absolute: 0.0 };
            for (setting, dist) in self.settings.iter().zip(&dists) {
                let (d, mass) = parity_postselect(dist, setting.expected_parity())?;
                total.signed += mass.signed;
                total.absolute += mass.absolute;
                kept.push(d);
            }
            let k = self.settings.len() as f64;
            out.discarded = Some(DiscardedMass { signed: total.signed / k, absolute: total.absolute / k });
            gamma = assemble_correlation_matrix(&self.settings, &kept)?;
            out.stages.push(self.observe(Stage::Postselect, &gamma, profile)?);
        }
        if cfg.mitigation.purify {
            match mcweeny_purify(&gamma, PURIFY_TOL, PURIFY_MAX_ITER) {
                Ok((g, report)) => {
                    gamma = g;
                    out.purification = Some(report);
                    out.stages.push(self.observe(Stage::Purify, &gamma, profile)?);
                }
                Err(e) => out.error = Some(e),
            }
        }
        out.gamma = gamma;
        Ok(out)
    }
}

fn stream_id(job: usize, replicate: usize, setting: usize) -> u64 {
    ((job as u64) << 32) | ((replicate as u64) << 12) | setting as u64
}

struct Job {
    index: usize,
    mu_index: usize,
    mu: f64,
    occupation: Occupation,
}

fn run_point(cfg: &ExperimentConfig, job: &Job) -> PointResult {
    let mut result = PointResult {
        schema_version: SCHEMA_VERSION,
        job: job.index,
        parameters: PointParameters { n: cfg.n, t: cfg.t, delta: cfg.delta, mu: job.mu },
        occupation: job.occupation.clone(),
        error: None,
        circuit: None,
        ideal_site_correlation: Vec::new(),
        energy: None,
        excitation: None,
        witness: None,
        stages: Vec::new(),
        discarded_mass: None,
        purification: None,
        gamma: None,
        replicate_energies: Vec::new(),
    };
    if let Err(e) = fill_point(cfg, job, &mut result) {
        result.error = Some(e.to_string());
    }
    result
}

fn fill_point(cfg: &ExperimentConfig, job: &Job, result: &mut PointResult) -> Result<()> {
    let h = kitaev_chain(&KitaevParams::new(cfg.n, cfg.t, cfg.delta, job.mu))?;
    let bt = diagonalize(&h)?;
    let occ = &job.occupation;
    let settings = match measurement_settings(&bt, occ, h.is_real()) {
        Ok(s) => s,
        Err(Error::InvalidParameter(_)) if h.is_real() => measurement_settings(&bt, occ, false)?,
        Err(e) => return Err(e),
    };
    let base = &settings[0].circuit;
    result.circuit = Some(CircuitStats {
        gates: base.gates().len(),
        givens: base.givens_count(),
        depth: base.depth(),
        settings: settings.len(),
    });
    let target = correlation_from_statevector(&StateVector::zero(cfg.n).evolved(base)?)?;
    result.ideal_site_correlation = site_correlation_profile(&target)?;
    let ideal_energy = bt.eigenstate_energy(occ)?;

    let noise = cfg.effective_noise();
    let ctx = PointContext {
        h,
        confusion: ConfusionModel::from_noise(&noise, cfg.n)?,
        target,
        settings,
        cfg,
    };
    let shots = usize::try_from(cfg.shots).map_err(|_| Error::Config("shots too large".into()))?;
    let counts: Vec<ShotCounts> = ctx
        .settings
        .iter()
        .enumerate()
        .map(|(k, s)| run_noisy_stream(&s.circuit, shots, &noise, cfg.seed, stream_id(job.index, 0, k)))
        .collect::<Result<_>>()?;

    let processed = ctx.process(&counts, true)?;
    result.stages = processed.stages;
    result.discarded_mass = processed.discarded;
    result.purification = processed.purification;
    result.gamma = Some(processed.gamma);
    if let Some(e) = processed.error {
        return Err(e);
    }

    let mut energies = Vec::with_capacity(cfg.bootstrap);
    let mut witnesses = Vec::with_capacity(cfg.bootstrap);
    for b in 1..=cfg.bootstrap {
        let resampled: Vec<ShotCounts> = counts
            .iter()
            .enumerate()
            .map(|(k, c)| resample_counts(c, cfg.seed, stream_id(job.index, b, k)))
            .collect::<Result<_>>()?;
        let rep = ctx.process(&resampled, false)?;
        if let Some(e) = rep.error {
            return Err(e);
        }
        let last = rep.stages.last().expect("raw stage present");
        energies.push(last.energy);
        witnesses.push(last.witness);
    }

    let raw = &result.stages[0];
    let last = result.stages.last().expect("raw stage present");
    result.energy = Some(Observable {
        ideal: ideal_energy,
        raw: raw.energy,
        mitigated: last.energy,
        interval: Interval::from_samples(&energies),
    });
    result.witness = Some(Observable {
        ideal: 1.0,
        raw: raw.witness,
        mitigated: last.witness,
        interval: Interval::from_samples(&witnesses),
    });
    result.replicate_energies = energies;
    Ok(())
}

/// Fill in `E - E_ground` for every point whose mu also has a successful
/// ground-state point. Bootstrap replicates are paired by index.
fn attach_excitations(results: &mut [PointResult]) {
    let grounds: BTreeMap<u64, (Observable, Vec<f64>)> = results
        .iter()
        .filter(|r| r.occupation.weight() == 0)
        .filter_map(|r| Some((r.parameters.mu.to_bits(), (r.energy?, r.replicate_energies.clone()))))
        .collect();
    for r in results.iter_mut() {
        let (Some(e), Some((g, g_reps))) = (r.energy, grounds.get(&r.parameters.mu.to_bits())) else {
            continue;
        };
        let diffs: Vec<f64> = r.replicate_energies.iter().zip(g_reps).map(|(a, b)| a - b).collect();
        r.excitation = Some(Observable {
            ideal: e.ideal - g.ideal,
            raw: e.raw - g.raw,
            mitigated: e.mitigated - g.mitigated,
            interval: Interval::from_samples(&diffs),
        });
    }
}

/// Run the full sweep and write per-point JSON, tables and a manifest into
/// `out`. Points run on a pool of `jobs` threads (`None` uses all cores).
pub fn run_experiment(cfg: &ExperimentConfig, out: &Path, jobs: Option<usize>) -> Result<Vec<PointResult>> {
    cfg.validate()?;
    let occupations = cfg.occupations()?;
    let mut job_list = Vec::new();
    for (mu_index, &mu) in cfg.mu_values.iter().enumerate() {
        for occ in &occupations {
            job_list.push(Job { index: job_list.len(), mu_index, mu, occupation: occ.clone() });
        }
    }
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(j) = jobs {
        builder = builder.num_threads(j.max(1));
    }
    let pool = builder.build().map_err(|e| Error::Config(e.to_string()))?;
    let mut results: Vec<PointResult> = pool.install(|| job_list.par_iter().map(|j| run_point(cfg, j)).collect());
    attach_excitations(&mut results);

    let points = out.join("points");
    fs::create_dir_all(&points)?;
    for (r, job) in results.iter().zip(&job_list) {
        let name = format!("mu{}_{}.json", job.mu_index, r.occupation);
        fs::write(points.join(name), serde_json::to_string_pretty(r)? + "\n")?;
    }
    report_tables(&results, out)?;
    let manifest = Manifest {
        schema_version: SCHEMA_VERSION,
        version: env!("CARGO_PKG_VERSION").to_string(),
        config_hash: cfg.hash(),
        config: cfg.clone(),
        points: results.len(),
        failed: results.iter().filter(|r| !r.succeeded()).count(),
    };
    fs::write(out.join("manifest.json"), serde_json::to_string_pretty(&manifest)? + "\n")?;
    Ok(results)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub schema_version: u32,
    pub version: String,
    pub config_hash: String,
    pub config: ExperimentConfig,
    pub points: usize,
    pub failed: usize,
}

/// Read every point JSON written by [`run_experiment`] under `dir`.
pub fn load_results(dir: &Path) -> Result<Vec<PointResult>> {
    let mut paths: Vec<PathBuf> = fs::read_dir(dir.join("points"))?
        .map(|e| e.map(|e| e.path()))
        .collect::<std::io::Result<_>>()?;
    paths.retain(|p| p.extension().is_some_and(|x| x == "json"));
    let mut results: Vec<PointResult> = paths
        .iter()
        .map(|p| Ok(serde_json::from_str(&fs::read_to_string(p)?)?))
        .collect::<Result<_>>()?;
    results.sort_by_key(|r| (r.parameters.n, r.job));
    Ok(results)
}

/// Shortest round-trip form, in exponent notation for tiny magnitudes.
fn num(v: f64) -> String {
    if v != 0.0 && v.abs() < 1e-4 {
        format!("{v:e}")
    } else {
        v.to_string()
    }
}

fn fmt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

fn write_csv(path: &Path, header: &[String], rows: &[Vec<String>]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| Error::Io(e.into()))?;
    w.write_record(header).map_err(|e| Error::Io(e.into()))?;
    for row in rows {
        w.write_record(row).map_err(|e| Error::Io(e.into()))?;
    }
    w.flush()?;
    Ok(())
}

fn strings(xs: &[&str]) -> Vec<String> {
    xs.iter().map(|s| s.to_string()).collect()
}

/// Aggregate tables: energies, excitations, fidelity witness per stage,
/// site-correlation profiles (one file per system size) and the discarded
/// postselection mass per system size.
pub fn report_tables(results: &[PointResult], dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    let interval = |o: &Option<Observable>| -> [String; 2] {
        let i = o.and_then(|o| o.interval);
        [fmt(i.map(|i| i.lower)), fmt(i.map(|i| i.upper))]
    };

    let mut rows = Vec::new();
    for r in results {
        let e = r.energy;
        let [lo, hi] = interval(&r.energy);
        rows.push(vec![
            r.parameters.n.to_string(),
            r.parameters.mu.to_string(),
            r.occupation.to_string(),
            fmt(e.map(|e| e.ideal)),
            fmt(e.map(|e| e.raw)),
            fmt(e.map(|e| e.mitigated)),
            lo,
            hi,
        ]);
    }
    let header = strings(&["n", "mu", "state", "ideal", "raw", "mitigated", "lower", "upper"]);
    write_csv(&dir.join("energies.csv"), &header, &rows)?;

    let rows: Vec<Vec<String>> = results
        .iter()
        .map(|r| {
            let x = r.excitation;
            let [lo, hi] = interval(&r.excitation);
            vec![
                r.parameters.n.to_string(),
                r.parameters.mu.to_string(),
                r.occupation.to_string(),
                fmt(x.map(|e| e.ideal)),
                fmt(x.map(|e| e.raw)),
                fmt(x.map(|e| e.mitigated)),
                lo,
                hi,
            ]
        })
        .collect();
    write_csv(&dir.join("excitations.csv"), &header, &rows)?;

    let stages = [Stage::Raw, Stage::Readout, Stage::Postselect, Stage::Purify];
    let rows: Vec<Vec<String>> = results
        .iter()
        .map(|r| {
            let mut row = vec![r.parameters.n.to_string(), r.parameters.mu.to_string(), r.occupation.to_string()];
            row.extend(stages.iter().map(|&s| fmt(r.stage(s).map(|s| s.witness))));
            row.extend(interval(&r.witness));
            row
        })
        .collect();
    let mut header = strings(&["n", "mu", "state"]);
    header.extend(stages.iter().map(|s| s.name().to_string()));
    header.extend(strings(&["lower", "upper"]));
    write_csv(&dir.join("witness.csv"), &header, &rows)?;

    let mut by_size: BTreeMap<usize, Vec<&PointResult>> = BTreeMap::new();
    for r in results {
        by_size.entry(r.parameters.n).or_default().push(r);
    }
    for (&n, group) in &by_size {
        let mut header = strings(&["mu", "state", "kind"]);
        header.extend((2..=2 * n).map(|j| format!("j{j}")));
        let mut rows = Vec::new();
        for r in group {
            let mut push = |kind: &str, values: &[f64]| {
                if values.is_empty() {
                    return;
                }
                let mut row = vec![r.parameters.mu.to_string(), r.occupation.to_string(), kind.to_string()];
                row.extend(values.iter().map(|&v| num(v)));
                rows.push(row);
            };
            push("ideal", &r.ideal_site_correlation);
            if let Some(s) = r.stages.first() {
                push("raw", &s.site_correlation);
            }
            if let Some(s) = r.stages.last().filter(|s| s.stage != Stage::Raw) {
                push("mitigated", &s.site_correlation);
            }
        }
        write_csv(&dir.join(format!("site_correlations_n{n}.csv")), &header, &rows)?;
    }

    // Mean absolute discarded mass, split by whether the prepared state is
    // the Bogoliubov vacuum.
    let rows: Vec<Vec<String>> = by_size
        .iter()
        .map(|(&n, group)| {
            let mean = |vacuum: bool| {
                let v: Vec<f64> = group
                    .iter()
                    .filter(|r| (r.occupation.weight() == 0) == vacuum)
                    .filter_map(|r| r.discarded_mass.map(|d| d.absolute))
                    .collect();
                (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
            };
            vec![n.to_string(), fmt(mean(true)), fmt(mean(false))]
        })
        .collect();
    write_csv(&dir.join("discarded_mass.csv"), &strings(&["system_size", "vacuum", "occupied"]), &rows)?;
    Ok(())
}
