//! Hit & Run + DEA: every DMU walks inside its own uncertainty set, and at
//! each iteration all DMUs are re-evaluated against the frontier of that
//! iteration's sampled observations.
//!
//! Walks are sequential per DMU and continue across iterations. Every walk
//! step draws from its own stream `(seed, dmu, step)`, and each iteration's
//! LPs depend only on that iteration's points, so the result does not
//! depend on how work is split across threads.

use std::io::{BufRead, BufReader, Read, Write};

use rayon::prelude::*;
use thiserror::Error;

use crate::dataset::{DataSet, Direction};
use crate::dea::{solve_points, DeaError, DeaModel, DeaOptions};
use crate::geometry::UncertaintySet;
use crate::sampler::{
    walk_step, ChordRule, DirectionLaw, RandomDraws, RngStream, SamplerError, WalkState, XiLaw,
};

/// Sampled values are floored here before entering an LP, so proportional
/// directions never see an exact zero.
pub const MIN_SAMPLED_VALUE: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("invalid pipeline input: {0}")]
    Validation(String),
    #[error(transparent)]
    Dea(#[from] DeaError),
    #[error("DMU '{dmu}': {source}")]
    Sampler { dmu: String, source: SamplerError },
    #[error("distance matrix line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub direction: Direction,
    pub model: DeaModel,
    /// Number of recorded iterations.
    pub t: usize,
    pub seed: u64,
    pub dea: DeaOptions,
    pub rule: ChordRule,
    pub direction_law: DirectionLaw,
    /// Per-DMU fraction law; empty means uniform for every DMU.
    pub xi_laws: Vec<XiLaw>,
    /// Walk steps discarded before iteration 1.
    pub burn_in: usize,
    /// Walk steps per recorded iteration.
    pub thin: usize,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            direction: Direction::Proportional,
            model: DeaModel::Directional,
            t: 5000,
            seed: 0,
            dea: DeaOptions::distance_only(),
            rule: ChordRule::Full,
            direction_law: DirectionLaw::Coordinatewise,
            xi_laws: Vec::new(),
            burn_in: 0,
            thin: 1,
        }
    }
}

impl PipelineConfig {
    /// `key=value` pairs recorded in artifact headers.
    pub fn describe(&self) -> Vec<(String, String)> {
        let model = match self.model {
            DeaModel::Directional => "directional",
            DeaModel::WeakDisposability => "weak-disposability",
        };
        let rule = match self.rule {
            ChordRule::Full => "full",
            ChordRule::Forward => "forward",
        };
        let law = match self.direction_law {
            DirectionLaw::Coordinatewise => "coordinatewise",
            DirectionLaw::Sphere => "sphere",
        };
        vec![
            ("seed".into(), self.seed.to_string()),
            ("t".into(), self.t.to_string()),
            ("direction".into(), self.direction.to_string()),
            ("model".into(), model.into()),
            ("epsilon".into(), self.dea.epsilon.to_string()),
            ("chord_rule".into(), rule.into()),
            ("direction_law".into(), law.into()),
            ("burn_in".into(), self.burn_in.to_string()),
            ("thin".into(), self.thin.to_string()),
        ]
    }
}

/// Sampled distances `E[j][ℓ]` for iterations `ℓ = 1..t`, plus the
/// distances `d0` of the set centers.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceMatrix {
    pub ids: Vec<String>,
    pub d0: Vec<f64>,
    pub e: Vec<Vec<f64>>,
    /// Header entries: configuration, seed, and set descriptors.
    pub metadata: Vec<(String, String)>,
}

impl DistanceMatrix {
    pub fn n(&self) -> usize {
        self.e.len()
    }

    pub fn t(&self) -> usize {
        self.e.first().map_or(0, Vec::len)
    }

    pub fn row(&self, j: usize) -> &[f64] {
        &self.e[j]
    }

    pub fn column(&self, l: usize) -> Vec<f64> {
        self.e.iter().map(|r| r[l]).collect()
    }

    pub fn meta(&self, key: &str) -> Option<&str> {
        self.metadata
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }

    pub fn seed(&self) -> Option<u64> {
        self.meta("seed")?.parse().ok()
    }

    pub fn max_value(&self) -> f64 {
        self.e.iter().flatten().cloned().fold(0.0, f64::max)
    }

    /// Comment header (`# key=value`), then `dmu,d0,it1,…,itT`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<(), PipelineError> {
        for (k, v) in &self.metadata {
            writeln!(w, "# {k}={v}")?;
        }
        let mut header = vec!["dmu".to_string(), "d0".to_string()];
        header.extend((1..=self.t()).map(|l| format!("it{l}")));
        let mut out = csv::Writer::from_writer(w);
        let to_io = |e: csv::Error| std::io::Error::other(e.to_string());
        out.write_record(&header).map_err(to_io)?;
        for j in 0..self.n() {
            let mut rec = Vec::with_capacity(self.t() + 2);
            rec.push(self.ids[j].clone());
            rec.push(self.d0[j].to_string());
            rec.extend(self.e[j].iter().map(|v| v.to_string()));
            out.write_record(&rec).map_err(to_io)?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(r: R) -> Result<Self, PipelineError> {
        let mut reader = BufReader::new(r);
        let mut metadata = Vec::new();
        let mut body = String::new();
        let mut line_no = 0;
        let mut header_lines = 0;
        let mut line = String::new();
        loop {
            line.clear();
            if reader.read_line(&mut line)? == 0 {
                break;
            }
            line_no += 1;
            if let Some(rest) = line.strip_prefix('#') {
                header_lines = line_no;
                let rest = rest.trim();
                if let Some((k, v)) = rest.split_once('=') {
                    metadata.push((k.trim().to_string(), v.trim().to_string()));
                }
            } else {
                body.push_str(&line);
            }
        }
        let mut rdr = csv::Reader::from_reader(body.as_bytes());
        let parse_err = |line: usize, message: String| PipelineError::Parse { line, message };
        let header = rdr
            .headers()
            .map_err(|e| parse_err(header_lines + 1, e.to_string()))?
            .clone();
        if header.len() < 3 || &header[0] != "dmu" || &header[1] != "d0" {
            return Err(parse_err(
                header_lines + 1,
                "expected header 'dmu,d0,it1,...'".into(),
            ));
        }
        let t = header.len() - 2;
        let (mut ids, mut d0, mut e) = (Vec::new(), Vec::new(), Vec::new());
        for (i, rec) in rdr.records().enumerate() {
            let line = header_lines + 2 + i;
            let rec = rec.map_err(|e| parse_err(line, e.to_string()))?;
            if rec.len() != t + 2 {
                return Err(parse_err(line, format!("expected {} fields", t + 2)));
            }
            let num = |s: &str| -> Result<f64, PipelineError> {
                let v: f64 = s
                    .parse()
                    .map_err(|_| parse_err(line, format!("'{s}' is not a number")))?;
                if !v.is_finite() || v < 0.0 {
                    return Err(parse_err(line, format!("distance {v} is not finite and ≥ 0")));
                }
                Ok(v)
            };
            ids.push(rec[0].to_string());
            d0.push(num(&rec[1])?);
            e.push(rec.iter().skip(2).map(num).collect::<Result<Vec<_>, _>>()?);
        }
        if ids.is_empty() {
            return Err(parse_err(header_lines + 2, "no DMU rows".into()));
        }
        Ok(Self {
            ids,
            d0,
            e,
            metadata,
        })
    }
}

fn validate(
    data: &DataSet,
    sets: &[UncertaintySet],
    cfg: &PipelineConfig,
) -> Result<(), PipelineError> {
    let n = data.n();
    let z = data.dims().total();
    if cfg.t == 0 {
        return Err(PipelineError::Validation("t must be at least 1".into()));
    }
    if cfg.thin == 0 {
        return Err(PipelineError::Validation("thin must be at least 1".into()));
    }
    if sets.len() != n {
        return Err(PipelineError::Validation(format!(
            "{} uncertainty sets for {n} DMUs",
            sets.len()
        )));
    }
    if !cfg.xi_laws.is_empty() && cfg.xi_laws.len() != n {
        return Err(PipelineError::Validation(format!(
            "{} xi laws for {n} DMUs",
            cfg.xi_laws.len()
        )));
    }
    for (j, set) in sets.iter().enumerate() {
        if set.dim() != z {
            return Err(PipelineError::Validation(format!(
                "set of DMU '{}' has dimension {}, expected {z}",
                data.ids()[j],
                set.dim()
            )));
        }
        let active = set.active();
        for l in 0..z {
            if data.is_missing(j, l) && !active[l] {
                return Err(PipelineError::Validation(format!(
                    "DMU '{}' has a missing '{}' but its set is fixed along that variable",
                    data.ids()[j],
                    data.var_names()[l]
                )));
            }
        }
    }
    Ok(())
}

/// All walks: `walks[j][ℓ]` is DMU j's observation at iteration ℓ+1.
fn sample_walks(
    data: &DataSet,
    sets: &[UncertaintySet],
    cfg: &PipelineConfig,
) -> Result<Vec<Vec<Vec<f64>>>, PipelineError> {
    (0..sets.len())
        .into_par_iter()
        .map(|j| {
            let set = &sets[j];
            let xi_law = cfg.xi_laws.get(j).copied().unwrap_or_default();
            let mut state = WalkState::at_center(set);
            let mut out = Vec::with_capacity(cfg.t);
            let step_once = |state: &mut WalkState| -> Result<(), PipelineError> {
                let step = state.step + 1;
                let rng = RngStream::for_step(cfg.seed, j, step);
                let mut draws = RandomDraws::with_laws(rng, cfg.direction_law, xi_law);
                *state = walk_step(set, state, &mut draws, cfg.rule).map_err(|source| {
                    PipelineError::Sampler {
                        dmu: data.ids()[j].clone(),
                        source,
                    }
                })?;
                Ok(())
            };
            for _ in 0..cfg.burn_in {
                step_once(&mut state)?;
            }
            for _ in 0..cfg.t {
                for _ in 0..cfg.thin {
                    step_once(&mut state)?;
                }
                out.push(state.point.clone());
            }
            Ok(out)
        })
        .collect()
}

/// Distances of every point against the frontier of `points`.
pub fn evaluate_all(
    points: &[Vec<f64>],
    data: &DataSet,
    cfg: &PipelineConfig,
) -> Result<Vec<f64>, PipelineError> {
    let dims = data.dims();
    let floored: Vec<Vec<f64>> = points
        .iter()
        .map(|p| p.iter().map(|v| v.max(MIN_SAMPLED_VALUE)).collect())
        .collect();
    (0..floored.len())
        .map(|k| {
            let delta = cfg.direction.resolve(&floored[k], dims).map_err(DeaError::from)?;
            let sol = solve_points(&floored, dims, k, &delta, cfg.model, &cfg.dea)?;
            Ok(sol.distance)
        })
        .collect()
}

pub fn run_hr_dea(
    data: &DataSet,
    sets: &[UncertaintySet],
    cfg: &PipelineConfig,
) -> Result<DistanceMatrix, PipelineError> {
    validate(data, sets, cfg)?;
    let n = data.n();
    let centers: Vec<Vec<f64>> = sets.iter().map(|s| s.center().to_vec()).collect();
    let d0 = evaluate_all(&centers, data, cfg)?;

    let walks = sample_walks(data, sets, cfg)?;
    let columns: Vec<Vec<f64>> = (0..cfg.t)
        .into_par_iter()
        .map(|l| {
            let points: Vec<Vec<f64>> = walks.iter().map(|w| w[l].clone()).collect();
            evaluate_all(&points, data, cfg)
        })
        .collect::<Result<_, _>>()?;

    let mut e = vec![Vec::with_capacity(cfg.t); n];
    for col in &columns {
        for (row, v) in e.iter_mut().zip(col) {
            row.push(*v);
        }
    }
    let mut metadata = cfg.describe();
    metadata.push(("n".into(), n.to_string()));
    for (j, set) in sets.iter().enumerate() {
        metadata.push((format!("set.{}", data.ids()[j]), set.to_string()));
        if let Some(law) = cfg.xi_laws.get(j) {
            if *law != XiLaw::Uniform {
                metadata.push((format!("xi.{}", data.ids()[j]), law.to_string()));
            }
        }
    }
    Ok(DistanceMatrix {
        ids: data.ids().to_vec(),
        d0,
        e,
        metadata,
    })
}

/// Point sets at every DMU's observation.
pub fn degenerate_sets(data: &DataSet) -> Result<Vec<UncertaintySet>, PipelineError> {
    if data.has_missing() {
        return Err(PipelineError::Validation(
            "missing cells need non-degenerate sets".into(),
        ));
    }
    data.points()
        .iter()
        .map(|p| {
            UncertaintySet::point(p.clone())
                .map_err(|e| PipelineError::Validation(e.to_string()))
        })
        .collect()
}
