//! Uncertainty-set specification files.
//!
//! One record per line, as whitespace-separated `key=value` tokens:
//!
//! ```text
//! # comment
//! dmu=A shape=box semi_axes=0.5,1
//! dmu=B shape=ellipsoid center=4,2 semi_axes=1,0.25 xi=triangular
//! dmu=C shape=superellipsoid semi_axes=1,1,2 orders=4,2.5
//! dmu=D shape=polytope constraint=1,1:10 constraint=-1,0:0
//! ```
//!
//! `center` defaults to the DMU's observation. DMUs without a record get a
//! point set at their observation.

use std::collections::HashMap;

use anyhow::{anyhow, bail, Context, Result};
use hrdea::dataset::DataSet;
use hrdea::geometry::UncertaintySet;
use hrdea::sampler::XiLaw;

#[derive(Debug, Clone, PartialEq)]
pub struct SetRecord {
    pub dmu: String,
    pub shape: String,
    pub center: Option<Vec<f64>>,
    pub semi_axes: Option<Vec<f64>>,
    pub orders: Option<(f64, f64)>,
    pub constraints: Vec<(Vec<f64>, f64)>,
    pub xi: XiLaw,
    pub orthant: bool,
    pub line: usize,
}

fn numbers(field: &str, raw: &str, line: usize) -> Result<Vec<f64>> {
    raw.split(',')
        .map(|v| {
            v.trim()
                .parse::<f64>()
                .map_err(|_| anyhow!("line {line}: {field}: '{v}' is not a number"))
        })
        .collect()
}

pub fn parse(text: &str) -> Result<Vec<SetRecord>> {
    let mut records = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let mut rec = SetRecord {
            dmu: String::new(),
            shape: String::new(),
            center: None,
            semi_axes: None,
            orders: None,
            constraints: Vec::new(),
            xi: XiLaw::Uniform,
            orthant: true,
            line,
        };
        for token in content.split_whitespace() {
            let (key, value) = token
                .split_once('=')
                .ok_or_else(|| anyhow!("line {line}: expected key=value, found '{token}'"))?;
            match key {
                "dmu" => rec.dmu = value.to_string(),
                "shape" => rec.shape = value.to_ascii_lowercase(),
                "center" => rec.center = Some(numbers("center", value, line)?),
                "semi_axes" => rec.semi_axes = Some(numbers("semi_axes", value, line)?),
                "orders" => {
                    let o = numbers("orders", value, line)?;
                    if o.len() != 2 {
                        bail!("line {line}: orders needs two values, found {}", o.len());
                    }
                    rec.orders = Some((o[0], o[1]));
                }
                "constraint" => {
                    let (a, b) = value.split_once(':').ok_or_else(|| {
                        anyhow!("line {line}: constraint must look like a1,a2,...:b")
                    })?;
                    let a = numbers("constraint", a, line)?;
                    let b = numbers("constraint", b, line)?;
                    if b.len() != 1 {
                        bail!("line {line}: constraint needs a single right-hand side");
                    }
                    rec.constraints.push((a, b[0]));
                }
                "xi" => {
                    rec.xi = value
                        .parse()
                        .map_err(|e| anyhow!("line {line}: xi: {e}"))?
                }
                "orthant" => {
                    rec.orthant = match value {
                        "on" | "true" => true,
                        "off" | "false" => false,
                        other => bail!("line {line}: orthant must be on or off, found '{other}'"),
                    }
                }
                other => bail!("line {line}: unknown key '{other}'"),
            }
        }
        if rec.dmu.is_empty() {
            bail!("line {line}: missing dmu=");
        }
        if rec.shape.is_empty() {
            bail!("line {line}: missing shape=");
        }
        records.push(rec);
    }
    Ok(records)
}

fn build(rec: &SetRecord, observed: &[f64], has_gaps: bool) -> Result<UncertaintySet> {
    let line = rec.line;
    let center = match &rec.center {
        Some(c) => c.clone(),
        None if has_gaps => bail!(
            "line {line}: DMU '{}' has missing values, so center= is required",
            rec.dmu
        ),
        None => observed.to_vec(),
    };
    let axes = || {
        rec.semi_axes
            .clone()
            .ok_or_else(|| anyhow!("line {line}: shape {} needs semi_axes=", rec.shape))
    };
    let set = match rec.shape.as_str() {
        "point" => UncertaintySet::point(center),
        "box" => UncertaintySet::hyper_box(center, axes()?),
        "ellipsoid" => UncertaintySet::ellipsoid(center, axes()?),
        "rhombus" => UncertaintySet::rhombus(center, axes()?),
        "superellipsoid" => {
            let (o1, o2) = rec
                .orders
                .ok_or_else(|| anyhow!("line {line}: superellipsoid needs orders="))?;
            UncertaintySet::superellipsoid(center, axes()?, o1, o2)
        }
        "polytope" => {
            if rec.constraints.is_empty() {
                bail!("line {line}: polytope needs at least one constraint=");
            }
            let (a, b): (Vec<_>, Vec<_>) = rec.constraints.iter().cloned().unzip();
            UncertaintySet::polytope(a, b, center)
        }
        other => bail!(
            "line {line}: unknown shape '{other}' (point, box, ellipsoid, rhombus, superellipsoid, polytope)"
        ),
    }
    .with_context(|| format!("line {line}: set of DMU '{}'", rec.dmu))?;
    Ok(if rec.orthant { set } else { set.without_orthant() })
}

/// One set and one ξ law per DMU of `data`, in dataset order.
pub fn resolve(records: &[SetRecord], data: &DataSet) -> Result<(Vec<UncertaintySet>, Vec<XiLaw>)> {
    let index: HashMap<&str, usize> = data
        .ids()
        .iter()
        .enumerate()
        .map(|(j, id)| (id.as_str(), j))
        .collect();
    let mut by_dmu: Vec<Option<&SetRecord>> = vec![None; data.n()];
    for rec in records {
        let j = *index
            .get(rec.dmu.as_str())
            .ok_or_else(|| anyhow!("line {}: DMU '{}' is not in the dataset", rec.line, rec.dmu))?;
        if by_dmu[j].is_some() {
            bail!("line {}: DMU '{}' has more than one record", rec.line, rec.dmu);
        }
        by_dmu[j] = Some(rec);
    }
    let z = data.dims().total();
    let mut sets = Vec::with_capacity(data.n());
    let mut laws = Vec::with_capacity(data.n());
    for (j, rec) in by_dmu.into_iter().enumerate() {
        let gaps = (0..z).any(|v| data.is_missing(j, v));
        match rec {
            Some(rec) => {
                sets.push(build(rec, data.point(j), gaps)?);
                laws.push(rec.xi);
            }
            None => {
                if gaps {
                    bail!(
                        "DMU '{}' has missing values but no record in the set file",
                        data.ids()[j]
                    );
                }
                sets.push(UncertaintySet::point(data.point(j).to_vec())?);
                laws.push(XiLaw::Uniform);
            }
        }
    }
    Ok((sets, laws))
}
