//! The five experiment drivers.

use std::path::PathBuf;
use std::sync::Arc;

use serde_json::{json, Value};

use crate::cache::{content_key, Cache, LevelMatrix};
use crate::entropy::{
    epsilon_entropy_bounds_grid, epsilon_entropy_bounds_separated, exponential_growth_test,
    scaled_entropy_eval, scaling_exponent_fit, HEntry, ScalingFamily,
};
use crate::error::Result;
use crate::filtration::{cylinder_hamming, dyadic_bernoulli, iterate_semimetric, profile_from};
use crate::groups::{meeting_diagnostic, sample_increments, GroupSpec};
use crate::mmspace::{DiscreteMeasure, SemimetricMatrix};
use crate::numeric::derive_seed;
use crate::treewalk::{
    exponential_entropy_estimate, iid_word_measure, orbit_partition, orbit_quotient, BaseMetric,
    QUOTIENT_MAX_POINTS,
};
use crate::walksim::{
    ball_measure_estimate, mean_distance_profile, sampled_space, WalkPoint, STREAM_CENTER,
    STREAM_MEETING,
};

use super::config::{Config, ExperimentKind, WalkSection};
use super::output::{num, write_table, Header, Table};

/// Where and how an experiment runs.
#[derive(Debug, Clone)]
pub struct RunOptions {
    pub out_dir: PathBuf,
    pub cache: Option<Cache>,
    pub verbose: bool,
}

/// Files written by a run and its JSON summary.
#[derive(Debug, Clone)]
pub struct RunReport {
    pub files: Vec<PathBuf>,
    pub summary: Value,
}

macro_rules! note {
    ($opts:expr, $($arg:tt)*) => {
        if $opts.verbose {
            eprintln!("[filtlab] {}", format!($($arg)*));
        }
    };
}

/// Runs a validated config. `stem` names the output files.
pub fn execute(config: &Config, stem: &str, opts: &RunOptions) -> Result<RunReport> {
    let header = Header {
        experiment: config.experiment.as_str(),
        config_sha256: content_key(config)?,
        seed: config.seeds.as_ref().map(|s| s.master),
    };
    let ctx = Ctx {
        config,
        stem,
        opts,
        header,
    };
    match config.experiment {
        ExperimentKind::Standardness if config.dyadic.is_some() => ctx.dyadic_standardness(),
        ExperimentKind::Standardness => ctx.walk_standardness(),
        ExperimentKind::BallMeasure => ctx.ball_measure(),
        ExperimentKind::ScalingFit => ctx.scaling_fit(),
        ExperimentKind::OrbitEntropy => ctx.orbit_entropy(),
        ExperimentKind::MeetingDiagnostic => ctx.meeting(),
    }
}

struct Ctx<'a> {
    config: &'a Config,
    stem: &'a str,
    opts: &'a RunOptions,
    header: Header,
}

impl Ctx<'_> {
    // Validation has already checked that the sections used below exist.
    fn group(&self) -> &GroupSpec {
        self.config.group.as_ref().expect("validated group")
    }

    fn walk(&self) -> &WalkSection {
        self.config.walk.as_ref().expect("validated walk")
    }

    fn seed(&self) -> u64 {
        self.header.seed.expect("validated seed")
    }

    fn write(&self, suffix: &str, table: &Table, summary: Value) -> Result<Vec<PathBuf>> {
        let stem = format!("{}{suffix}", self.stem);
        let files = write_table(&self.opts.out_dir, &stem, &self.header, table, summary)?;
        note!(self.opts, "wrote {}", files[0].display());
        Ok(files)
    }

    fn walk_standardness(&self) -> Result<RunReport> {
        let (spec, walk) = (self.group(), self.walk());
        let n_max = walk.n_max.expect("validated n_max");
        let m = walk.m.unwrap_or(n_max);
        note!(
            self.opts,
            "{} mean distance profile, n <= {n_max}, {} pairs",
            spec.name(),
            walk.samples
        );
        let rows = mean_distance_profile(spec, n_max, m, walk.samples, self.seed(), walk.leaf_cap)?;
        let mut t = Table::new(&["n", "c_n", "ci_low", "ci_high"]);
        for r in &rows {
            t.push(vec![
                r.n.to_string(),
                num(r.estimate.value),
                num(r.estimate.ci_low),
                num(r.estimate.ci_high),
            ]);
        }
        let c: Vec<f64> = rows.iter().map(|r| r.estimate.value).collect();
        let summary = json!({
            "group": spec.name(),
            "m": m,
            "pairs": walk.samples,
            "strictly_decreasing": c.windows(2).all(|w| w[1] < w[0]),
            "terminal_ratio_heuristic": c.last().zip(c.first()).map(|(l, f)| l / f),
        });
        let files = self.write("", &t, summary.clone())?;
        Ok(RunReport { files, summary })
    }

    fn dyadic_standardness(&self) -> Result<RunReport> {
        let d = self.config.dyadic.as_ref().expect("validated dyadic");
        let order = d.order.unwrap_or(d.bits);
        let depth = d.depth.unwrap_or(d.bits - 1);
        let (mu, chain) = dyadic_bernoulli(d.bits, depth)?;
        let rho0 = cylinder_hamming(d.bits, order)?;
        note!(self.opts, "dyadic model on 2^{} points, depth {depth}", d.bits);
        let it = iterate_semimetric(&rho0, &mu, &chain, depth as usize)?;
        if let Some(cache) = &self.opts.cache {
            for level in it.levels() {
                let key = content_key(&("dyadic-level", d.bits, order, level.level()))?;
                cache.store_grid(&key, &LevelMatrix::new(level.level() as u64, &level.point_matrix()?))?;
            }
        }
        let profile = profile_from(it.mean_distances())?;
        let mut t = Table::new(&["n", "c_n", "ci_low", "ci_high"]);
        for (n, &c) in profile.c.iter().enumerate() {
            t.push(vec![n.to_string(), num(c), num(c), num(c)]);
        }
        let summary = json!({
            "model": "dyadic",
            "bits": d.bits,
            "order": order,
            "strictly_decreasing": profile.strictly_decreasing,
            "terminal_ratio_heuristic": profile.terminal_ratio,
        });
        let files = self.write("", &t, summary.clone())?;
        Ok(RunReport { files, summary })
    }

    fn ball_measure(&self) -> Result<RunReport> {
        let (spec, walk) = (self.group(), self.walk());
        let ball = self.config.ball.as_ref().expect("validated ball");
        let mut t = Table::new(&["n", "epsilon", "hits", "samples", "p", "ci_low", "ci_high"]);
        let mut estimates = Vec::new();
        for &n in &ball.ns {
            let m = walk.m.unwrap_or(n);
            let center = WalkPoint::sampled(spec, m, self.seed(), STREAM_CENTER, ball.center);
            note!(self.opts, "{} ball measure at n = {n}", spec.name());
            let b = ball_measure_estimate(
                &center,
                spec,
                n,
                ball.epsilon,
                walk.samples,
                self.seed(),
                walk.leaf_cap,
            )?;
            t.push(vec![
                n.to_string(),
                num(ball.epsilon),
                b.hits.to_string(),
                b.samples.to_string(),
                num(b.estimate.value),
                num(b.estimate.ci_low),
                num(b.estimate.ci_high),
            ]);
            estimates.push(b.estimate);
        }
        let nonincreasing = estimates
            .windows(2)
            .all(|w| w[1].value <= w[0].value || w[1].overlaps(&w[0]));
        let summary = json!({
            "group": spec.name(),
            "epsilon": ball.epsilon,
            "nonincreasing_within_ci": nonincreasing,
        });
        let files = self.write("", &t, summary.clone())?;
        Ok(RunReport { files, summary })
    }

    fn space(&self, n: usize) -> Result<(SemimetricMatrix, DiscreteMeasure)> {
        let (spec, walk) = (self.group(), self.walk());
        let m = walk.m.unwrap_or(n);
        let key = content_key(&(
            "sampled-space",
            spec,
            n,
            m,
            walk.samples,
            self.seed(),
            walk.leaf_cap,
        ))?;
        if let Some(cache) = &self.opts.cache {
            if let Some(hit) = cache.load_grid(&key) {
                note!(self.opts, "cache hit for the n = {n} space");
                return Ok((hit.matrix()?, DiscreteMeasure::uniform(walk.samples)));
            }
        }
        let (d, mu) = sampled_space(spec, n, m, walk.samples, self.seed(), walk.leaf_cap)?;
        if let Some(cache) = &self.opts.cache {
            cache.store_grid(&key, &LevelMatrix::new(n as u64, &d))?;
        }
        Ok((d, mu))
    }

    fn scaling_fit(&self) -> Result<RunReport> {
        let grid = self.config.entropy.as_ref().expect("validated entropy");
        let ns = grid.ns.as_ref().expect("validated ns");
        let mut table = Vec::new();
        let mut methods = Vec::new();
        for &n in ns {
            note!(
                self.opts,
                "{} space at n = {n} with {} points",
                self.group().name(),
                self.walk().samples
            );
            let (d, mu) = self.space(n)?;
            for b in epsilon_entropy_bounds_grid(&d, &mu, &grid.epsilons)? {
                table.push(HEntry {
                    n,
                    epsilon: b.epsilon,
                    lower: b.lower,
                    upper: b.upper,
                });
                methods.push(b.method);
            }
        }
        let mut t = Table::new(&["n", "epsilon", "H_lower", "H_upper", "method", "seed"]);
        for (e, m) in table.iter().zip(&methods) {
            t.push(vec![
                e.n.to_string(),
                num(e.epsilon),
                num(e.lower),
                num(e.upper),
                m.to_string(),
                self.seed().to_string(),
            ]);
        }
        let summary = fit_summary(&table, grid_eps(&table), ns, self.config.scaling.as_ref());
        let mut files = self.write("", &t, summary.clone())?;
        files.extend(self.write("_fit", &fit_table(&summary), summary.clone())?);
        Ok(RunReport { files, summary })
    }

    fn orbit_entropy(&self) -> Result<RunReport> {
        let o = self.config.orbit.as_ref().expect("validated orbit");
        let grid = self.config.entropy.as_ref().expect("validated entropy");
        let letter = DiscreteMeasure::normalized(&o.letters)?;
        let k = o.letters.len();
        let mut t = Table::new(&["n", "orbit_count", "H_bits", "h_normalized"]);
        let mut h_table = Table::new(&["n", "epsilon", "H_lower", "H_upper", "method", "seed"]);
        let mut entropies = Vec::new();
        let mut cells = Vec::new();
        let mut leaves = 1usize;
        for n in 1..=o.depth {
            leaves *= o.radix;
            let radices = vec![o.radix; n];
            note!(self.opts, "orbits of {k}^{leaves} leaf words at n = {n}");
            let mu = iid_word_measure(&letter, leaves)?;
            let orbits = orbit_partition(&radices, k, &mu)?;
            t.push(vec![
                n.to_string(),
                orbits.orbit_count.to_string(),
                num(orbits.entropy_bits),
                num(orbits.entropy_bits / leaves as f64),
            ]);
            entropies.push(orbits.entropy_bits);
            let bounds = if orbits.orbit_count <= QUOTIENT_MAX_POINTS {
                let base = Arc::new(BaseMetric::Matrix(SemimetricMatrix::discrete(k)));
                let (d, q) = orbit_quotient(&radices, k, &mu, &orbits, base, QUOTIENT_MAX_POINTS)?;
                epsilon_entropy_bounds_grid(&d, &q, &grid.epsilons)?
            } else {
                // distinct orbits differ at one leaf at least, by a discrete letter
                let masses = orbits.partition.masses(&mu);
                let separation = 1.0 / leaves as f64;
                grid.epsilons
                    .iter()
                    .map(|&eps| epsilon_entropy_bounds_separated(&masses, separation, eps))
                    .collect::<Result<Vec<_>>>()?
            };
            for b in bounds {
                h_table.push(vec![
                    n.to_string(),
                    num(b.epsilon),
                    num(b.lower),
                    num(b.upper),
                    b.method.to_string(),
                    String::new(),
                ]);
                cells.push(HEntry {
                    n,
                    epsilon: b.epsilon,
                    lower: b.lower,
                    upper: b.upper,
                });
            }
        }
        let exp = exponential_entropy_estimate(&entropies, &vec![o.radix; o.depth])?;
        let family = ScalingFamily::Exponential {
            radices: vec![o.radix],
        };
        let scaled = scaled_entropy_eval(&cells, &family).ok();
        let relative = scaled
            .as_ref()
            .map(|s| (s.h - exp.estimate).abs() / exp.estimate.abs().max(f64::MIN_POSITIVE));
        let summary = json!({
            "radix": o.radix,
            "letters": o.letters,
            "exponential_entropy": exp,
            "scaled_entropy": scaled.as_ref().map(|s| json!({"h": s.h, "profile": s.profile})),
            "relative_difference": relative,
        });
        let mut files = self.write("", &t, summary.clone())?;
        files.extend(self.write("_htable", &h_table, summary.clone())?);
        Ok(RunReport { files, summary })
    }

    fn meeting(&self) -> Result<RunReport> {
        let spec = self.group();
        let m = self.config.meeting.as_ref().expect("validated meeting");
        let len = (m.h as u128).pow(5).min(m.max_length as u128) as usize;
        let mut t = Table::new(&["trial", "h", "c", "length", "meeting_n"]);
        let mut met = 0usize;
        for trial in 0..m.trials {
            let seed = derive_seed(self.seed(), STREAM_MEETING, trial as u64);
            let u = sample_increments(spec, len, seed, 0);
            let v = sample_increments(spec, len, seed, 1);
            let hit = meeting_diagnostic(spec, &u, &v, m.h, m.c)?;
            met += hit.is_some() as usize;
            t.push(vec![
                trial.to_string(),
                m.h.to_string(),
                num(m.c),
                len.to_string(),
                hit.map_or(String::new(), |n| n.to_string()),
            ]);
        }
        let summary = json!({
            "group": spec.name(),
            "trials": m.trials,
            "met": met,
        });
        let files = self.write("", &t, summary.clone())?;
        Ok(RunReport { files, summary })
    }
}

fn grid_eps(table: &[HEntry]) -> Vec<f64> {
    let mut eps: Vec<f64> = table.iter().map(|e| e.epsilon).collect();
    eps.sort_by(f64::total_cmp);
    eps.dedup();
    eps
}

/// Exponent fit, per-eps growth verdicts and the optional scaled entropy.
/// Statistics that cannot be computed are reported with their reason.
pub(crate) fn fit_summary(
    table: &[HEntry],
    eps: Vec<f64>,
    ns: &[usize],
    family: Option<&ScalingFamily>,
) -> Value {
    let fit = match scaling_exponent_fit(table) {
        Ok(f) => json!(f),
        Err(e) => json!({"error": e.to_string()}),
    };
    let growth: Vec<Value> = eps
        .iter()
        .map(|&e| {
            let hs: Vec<f64> = ns
                .iter()
                .map(|&n| {
                    table
                        .iter()
                        .find(|c| c.n == n && c.epsilon == e)
                        .map_or(0.0, |c| c.upper)
                })
                .collect();
            match exponential_growth_test(ns, &hs) {
                Ok(v) => json!({"epsilon": e, "result": v}),
                Err(err) => json!({"epsilon": e, "error": err.to_string()}),
            }
        })
        .collect();
    let scaled = family.map(|f| match scaled_entropy_eval(table, f) {
        Ok(s) => json!({"h": s.h, "profile": s.profile}),
        Err(e) => json!({"error": e.to_string()}),
    });
    json!({"fit": fit, "growth": growth, "scaled_entropy": scaled})
}

/// Long-format table of the fit summary.
fn fit_table(summary: &Value) -> Table {
    let mut t = Table::new(&[
        "quantity",
        "epsilon",
        "value",
        "stderr",
        "r_squared",
        "points",
        "verdict",
        "note",
    ]);
    let s = |v: &Value| match v {
        Value::Null => String::new(),
        Value::String(x) => x.clone(),
        other => other.to_string(),
    };
    let fit = &summary["fit"];
    t.push(vec![
        "beta".into(),
        String::new(),
        s(&fit["beta"]),
        s(&fit["stderr"]),
        s(&fit["r_squared"]),
        s(&fit["points"]),
        String::new(),
        s(&fit["error"]),
    ]);
    for g in summary["growth"].as_array().into_iter().flatten() {
        let r = &g["result"];
        t.push(vec![
            "growth_rate".into(),
            s(&g["epsilon"]),
            s(&r["rate"]),
            String::new(),
            s(&r["r_squared"]),
            String::new(),
            s(&r["verdict"]),
            s(&g["error"]),
        ]);
    }
    if let Some(sc) = summary.get("scaled_entropy").filter(|v| !v.is_null()) {
        t.push(vec![
            "scaled_entropy".into(),
            String::new(),
            s(&sc["h"]),
            String::new(),
            String::new(),
            String::new(),
            String::new(),
            s(&sc["error"]),
        ]);
    }
    t
}
