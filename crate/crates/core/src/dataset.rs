//! DMU observations: inputs, desirable outputs, and undesirable outputs,
//! with a per-cell mask for imperfectly known entries.
//!
//! Observations are stored DMU-major: `point(j)` is the concatenated
//! `(x, y, u)` vector of length `m + s + v`, the same layout the
//! uncertainty sets and the sampler use.

use std::collections::HashSet;
use std::io::{Read, Write};
use std::path::Path;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum DataError {
    #[error("line {line}: {message}")]
    Parse { line: u64, message: String },
    #[error("line {line}, column '{column}': negative value {value}")]
    Negative {
        line: u64,
        column: String,
        value: f64,
    },
    #[error("invalid dataset: {0}")]
    Validation(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl From<csv::Error> for DataError {
    fn from(err: csv::Error) -> Self {
        let line = err.position().map(|p| p.line()).unwrap_or(0);
        match err.into_kind() {
            csv::ErrorKind::Io(e) => DataError::Io(e),
            kind => DataError::Parse {
                line,
                message: format!("{kind:?}"),
            },
        }
    }
}

/// Role of a variable in the production technology.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Role {
    Input,
    Output,
    Undesirable,
}

/// Variable counts `(m, s, v)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Dims {
    pub inputs: usize,
    pub outputs: usize,
    pub undesirables: usize,
}

impl Dims {
    pub const fn new(inputs: usize, outputs: usize, undesirables: usize) -> Self {
        Self {
            inputs,
            outputs,
            undesirables,
        }
    }

    /// `z = m + s + v`.
    pub const fn total(&self) -> usize {
        self.inputs + self.outputs + self.undesirables
    }

    pub fn role(&self, var: usize) -> Role {
        if var < self.inputs {
            Role::Input
        } else if var < self.inputs + self.outputs {
            Role::Output
        } else {
            Role::Undesirable
        }
    }

    pub fn input_range(&self) -> std::ops::Range<usize> {
        0..self.inputs
    }

    pub fn output_range(&self) -> std::ops::Range<usize> {
        self.inputs..self.inputs + self.outputs
    }

    pub fn undesirable_range(&self) -> std::ops::Range<usize> {
        self.inputs + self.outputs..self.total()
    }
}

/// Maps CSV column names to roles. Columns not named here are ignored.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Schema {
    pub id: String,
    pub inputs: Vec<String>,
    pub outputs: Vec<String>,
    pub undesirables: Vec<String>,
}

impl Schema {
    pub fn new(id: impl Into<String>) -> Self {
        Self {
            id: id.into(),
            ..Self::default()
        }
    }

    pub fn inputs<S: Into<String>>(mut self, cols: impl IntoIterator<Item = S>) -> Self {
        self.inputs = cols.into_iter().map(Into::into).collect();
        self
    }

    pub fn outputs<S: Into<String>>(mut self, cols: impl IntoIterator<Item = S>) -> Self {
        self.outputs = cols.into_iter().map(Into::into).collect();
        self
    }

    pub fn undesirables<S: Into<String>>(mut self, cols: impl IntoIterator<Item = S>) -> Self {
        self.undesirables = cols.into_iter().map(Into::into).collect();
        self
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DataSet {
    ids: Vec<String>,
    var_names: Vec<String>,
    dims: Dims,
    /// `points[j]` is DMU j's `(x, y, u)`; masked cells hold NaN.
    points: Vec<Vec<f64>>,
    missing: Vec<Vec<bool>>,
}

impl DataSet {
    /// Builds a fully observed dataset. `points[j]` is `(x, y, u)` for DMU j.
    pub fn new(ids: Vec<String>, dims: Dims, points: Vec<Vec<f64>>) -> Result<Self, DataError> {
        let missing = points.iter().map(|p| vec![false; p.len()]).collect();
        Self::with_mask(ids, dims, points, missing)
    }

    pub fn with_mask(
        ids: Vec<String>,
        dims: Dims,
        points: Vec<Vec<f64>>,
        missing: Vec<Vec<bool>>,
    ) -> Result<Self, DataError> {
        let var_names = default_var_names(dims);
        let data = Self {
            ids,
            var_names,
            dims,
            points,
            missing,
        };
        data.validate()?;
        Ok(data)
    }

    /// Convenience constructor from unnamed DMUs; ids are `1..=n`.
    pub fn from_points(dims: Dims, points: Vec<Vec<f64>>) -> Result<Self, DataError> {
        let ids = (1..=points.len()).map(|j| j.to_string()).collect();
        Self::new(ids, dims, points)
    }

    pub fn with_var_names(mut self, names: Vec<String>) -> Result<Self, DataError> {
        if names.len() != self.dims.total() {
            return Err(DataError::Validation(format!(
                "{} variable names for {} variables",
                names.len(),
                self.dims.total()
            )));
        }
        self.var_names = names;
        Ok(self)
    }

    fn validate(&self) -> Result<(), DataError> {
        let n = self.points.len();
        let z = self.dims.total();
        if n == 0 {
            return Err(DataError::Validation("dataset has no DMUs".into()));
        }
        if self.dims.inputs == 0 || self.dims.outputs == 0 {
            return Err(DataError::Validation(
                "at least one input and one desirable output are required".into(),
            ));
        }
        if self.ids.len() != n || self.missing.len() != n {
            return Err(DataError::Validation(format!(
                "{} ids and {} mask rows for {n} DMUs",
                self.ids.len(),
                self.missing.len()
            )));
        }
        let mut seen = HashSet::with_capacity(n);
        for (j, (p, mask)) in self.points.iter().zip(&self.missing).enumerate() {
            if p.len() != z || mask.len() != z {
                return Err(DataError::Validation(format!(
                    "DMU '{}' has {} values, expected {z}",
                    self.ids[j],
                    p.len()
                )));
            }
            for (l, (&v, &m)) in p.iter().zip(mask).enumerate() {
                if m {
                    continue;
                }
                if !v.is_finite() || v < 0.0 {
                    return Err(DataError::Validation(format!(
                        "DMU '{}', variable '{}': value {v} is not a finite non-negative number",
                        self.ids[j], self.var_names[l]
                    )));
                }
            }
            if !seen.insert(self.ids[j].as_str()) {
                return Err(DataError::Validation(format!(
                    "duplicate DMU id '{}'",
                    self.ids[j]
                )));
            }
        }
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.points.len()
    }

    pub fn dims(&self) -> Dims {
        self.dims
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn var_names(&self) -> &[String] {
        &self.var_names
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    pub fn point(&self, j: usize) -> &[f64] {
        &self.points[j]
    }

    pub fn value(&self, j: usize, var: usize) -> f64 {
        self.points[j][var]
    }

    pub fn is_missing(&self, j: usize, var: usize) -> bool {
        self.missing[j][var]
    }

    pub fn mask(&self) -> &[Vec<bool>] {
        &self.missing
    }

    pub fn has_missing(&self) -> bool {
        self.missing.iter().flatten().any(|&m| m)
    }

    pub fn missing_count(&self) -> usize {
        self.missing.iter().flatten().filter(|&&m| m).count()
    }

    /// Same DMUs and names with cell `(j, var)` replaced and unmasked.
    pub fn with_value(&self, j: usize, var: usize, value: f64) -> Result<Self, DataError> {
        let mut out = self.clone();
        out.points[j][var] = value;
        out.missing[j][var] = false;
        out.validate()?;
        Ok(out)
    }

    /// Masks cell `(j, var)`, discarding its value.
    pub fn with_masked(&self, j: usize, var: usize) -> Self {
        let mut out = self.clone();
        out.points[j][var] = f64::NAN;
        out.missing[j][var] = true;
        out
    }

    /// Replaces all observations, keeping ids and names.
    pub fn with_points(&self, points: Vec<Vec<f64>>) -> Result<Self, DataError> {
        let missing = points.iter().map(|p| vec![false; p.len()]).collect();
        let out = Self {
            ids: self.ids.clone(),
            var_names: self.var_names.clone(),
            dims: self.dims,
            points,
            missing,
        };
        out.validate()?;
        Ok(out)
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<(), DataError> {
        let mut w = csv::Writer::from_writer(writer);
        let mut header = vec!["id".to_string()];
        header.extend(self.var_names.iter().cloned());
        w.write_record(&header)?;
        for j in 0..self.n() {
            let mut rec = vec![self.ids[j].clone()];
            for l in 0..self.dims.total() {
                rec.push(if self.missing[j][l] {
                    "NA".to_string()
                } else {
                    self.points[j][l].to_string()
                });
            }
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }

    /// Schema matching [`DataSet::write_csv`] output.
    pub fn schema(&self) -> Schema {
        let names = |r: std::ops::Range<usize>| self.var_names[r].to_vec();
        Schema {
            id: "id".into(),
            inputs: names(self.dims.input_range()),
            outputs: names(self.dims.output_range()),
            undesirables: names(self.dims.undesirable_range()),
        }
    }
}

fn default_var_names(dims: Dims) -> Vec<String> {
    let mut names = Vec::with_capacity(dims.total());
    names.extend((1..=dims.inputs).map(|i| format!("x{i}")));
    names.extend((1..=dims.outputs).map(|i| format!("y{i}")));
    names.extend((1..=dims.undesirables).map(|i| format!("u{i}")));
    names
}

fn is_missing_marker(field: &str) -> bool {
    let f = field.trim();
    f.is_empty() || f.eq_ignore_ascii_case("na") || f.eq_ignore_ascii_case("nan")
}

pub fn load_dataset(path: impl AsRef<Path>, schema: &Schema) -> Result<DataSet, DataError> {
    let file = std::fs::File::open(path)?;
    read_dataset(file, schema)
}

/// Parses a headed CSV. Empty, `NA`, and `NaN` cells are marked missing.
/// Variables keep the order in which their columns appear in the file.
pub fn read_dataset<R: Read>(reader: R, schema: &Schema) -> Result<DataSet, DataError> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let header = rdr.headers()?.clone();
    let find = |name: &str| -> Result<usize, DataError> {
        header.iter().position(|h| h == name).ok_or_else(|| {
            DataError::Validation(format!("column '{name}' not found in header"))
        })
    };
    let id_col = find(&schema.id)?;

    let mut roles: Vec<(usize, Role)> = Vec::new();
    for (names, role) in [
        (&schema.inputs, Role::Input),
        (&schema.outputs, Role::Output),
        (&schema.undesirables, Role::Undesirable),
    ] {
        for name in names {
            let col = find(name)?;
            if col == id_col || roles.iter().any(|(c, _)| *c == col) {
                return Err(DataError::Validation(format!(
                    "column '{name}' is assigned more than one role"
                )));
            }
            roles.push((col, role));
        }
    }
    // File order within each role.
    let ordered = |role: Role| {
        let mut cols: Vec<usize> = roles
            .iter()
            .filter(|(_, r)| *r == role)
            .map(|(c, _)| *c)
            .collect();
        cols.sort_unstable();
        cols
    };
    let columns: Vec<usize> = [Role::Input, Role::Output, Role::Undesirable]
        .into_iter()
        .flat_map(ordered)
        .collect();
    let dims = Dims::new(
        schema.inputs.len(),
        schema.outputs.len(),
        schema.undesirables.len(),
    );

    let mut ids = Vec::new();
    let mut points = Vec::new();
    let mut missing = Vec::new();
    for record in rdr.records() {
        let record = record?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        ids.push(record[id_col].to_string());
        let mut p = Vec::with_capacity(columns.len());
        let mut mask = Vec::with_capacity(columns.len());
        for &c in &columns {
            let field = &record[c];
            if is_missing_marker(field) {
                p.push(f64::NAN);
                mask.push(true);
                continue;
            }
            let v: f64 = field.parse().map_err(|_| DataError::Parse {
                line,
                message: format!("column '{}': cannot parse '{field}' as a number", &header[c]),
            })?;
            if !v.is_finite() {
                return Err(DataError::Parse {
                    line,
                    message: format!("column '{}': non-finite value '{field}'", &header[c]),
                });
            }
            if v < 0.0 {
                return Err(DataError::Negative {
                    line,
                    column: header[c].to_string(),
                    value: v,
                });
            }
            p.push(v);
            mask.push(false);
        }
        points.push(p);
        missing.push(mask);
    }
    let names = columns.iter().map(|&c| header[c].to_string()).collect();
    DataSet::with_mask(ids, dims, points, missing)?.with_var_names(names)
}

/// Concatenates datasets column-wise (pooled frontier); ids become
/// `"{id}_{tag}"`.
pub fn pool_panel(datasets: &[DataSet], year_tags: &[String]) -> Result<DataSet, DataError> {
    let first = datasets
        .first()
        .ok_or_else(|| DataError::Validation("no datasets to pool".into()))?;
    if datasets.len() != year_tags.len() {
        return Err(DataError::Validation(format!(
            "{} datasets but {} tags",
            datasets.len(),
            year_tags.len()
        )));
    }
    let unique: HashSet<&String> = year_tags.iter().collect();
    if unique.len() != year_tags.len() {
        return Err(DataError::Validation("year tags must be unique".into()));
    }
    let mut ids = Vec::new();
    let mut points = Vec::new();
    let mut missing = Vec::new();
    for (d, tag) in datasets.iter().zip(year_tags) {
        if d.dims != first.dims {
            return Err(DataError::Validation(format!(
                "dimension mismatch: {:?} vs {:?}",
                d.dims, first.dims
            )));
        }
        ids.extend(d.ids.iter().map(|id| format!("{id}_{tag}")));
        points.extend(d.points.iter().cloned());
        missing.extend(d.missing.iter().cloned());
    }
    DataSet::with_mask(ids, first.dims, points, missing)?.with_var_names(first.var_names.clone())
}

/// Direction of movement towards the frontier. Inputs and undesirable
/// outputs are contracted along `δx`, `δu`; desirable outputs expanded
/// along `δy`.
#[derive(Debug, Clone, PartialEq)]
pub enum Direction {
    /// `(xᵏ, 0, 0)`
    Input,
    /// `(0, yᵏ, 0)`
    Output,
    /// `(xᵏ, yᵏ, uᵏ)`
    Proportional,
    /// `(0, 0, uᵏ)`
    Undesirable,
    /// Fixed `(δx, δy, δu)` for every evaluated DMU.
    Custom(Vec<f64>),
}

impl Direction {
    /// Numeric `δ` for the evaluated observation `point`.
    pub fn resolve(&self, point: &[f64], dims: Dims) -> Result<Vec<f64>, DataError> {
        let z = dims.total();
        if point.len() != z {
            return Err(DataError::Validation(format!(
                "point has {} values, expected {z}",
                point.len()
            )));
        }
        let mut delta = vec![0.0; z];
        let mut copy = |r: std::ops::Range<usize>| {
            for l in r {
                delta[l] = point[l];
            }
        };
        match self {
            Direction::Input => copy(dims.input_range()),
            Direction::Output => copy(dims.output_range()),
            Direction::Proportional => copy(0..z),
            Direction::Undesirable => copy(dims.undesirable_range()),
            Direction::Custom(v) => {
                if v.len() != z {
                    return Err(DataError::Validation(format!(
                        "custom direction has {} components, expected {z}",
                        v.len()
                    )));
                }
                delta.copy_from_slice(v);
            }
        }
        if delta.iter().any(|d| !d.is_finite() || *d < 0.0) {
            return Err(DataError::Validation(
                "direction components must be finite and non-negative".into(),
            ));
        }
        if !delta.iter().any(|d| *d > 0.0) {
            return Err(DataError::Validation(format!(
                "direction {self} has no strictly positive component for this observation"
            )));
        }
        Ok(delta)
    }
}

impl std::fmt::Display for Direction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Direction::Input => f.write_str("input"),
            Direction::Output => f.write_str("output"),
            Direction::Proportional => f.write_str("proportional"),
            Direction::Undesirable => f.write_str("undesirable"),
            Direction::Custom(v) => {
                let parts: Vec<String> = v.iter().map(|x| x.to_string()).collect();
                write!(f, "custom:{}", parts.join(","))
            }
        }
    }
}

impl std::str::FromStr for Direction {
    type Err = DataError;

    /// Accepts `input`, `output`, `proportional`, `undesirable`, or
    /// `custom:d1,d2,...`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        match s.to_ascii_lowercase().as_str() {
            "input" => return Ok(Direction::Input),
            "output" => return Ok(Direction::Output),
            "proportional" => return Ok(Direction::Proportional),
            "undesirable" => return Ok(Direction::Undesirable),
            _ => {}
        }
        if let Some(rest) = s.strip_prefix("custom:") {
            let v = rest
                .split(',')
                .map(|p| p.trim().parse::<f64>())
                .collect::<Result<Vec<_>, _>>()
                .map_err(|e| DataError::Validation(format!("custom direction: {e}")))?;
            return Ok(Direction::Custom(v));
        }
        Err(DataError::Validation(format!(
            "unknown direction '{s}' (expected input, output, proportional, undesirable, custom:...)"
        )))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn schema() -> Schema {
        Schema::new("id").inputs(["x1"]).outputs(["y1"])
    }

    #[test]
    fn parses_simple_csv() {
        let csv = "id,x1,y1\nA,1,1\nB,2,1\nC,3,2\n";
        let d = read_dataset(csv.as_bytes(), &schema()).unwrap();
        assert_eq!(d.n(), 3);
        assert_eq!(d.dims(), Dims::new(1, 1, 0));
        assert!(!d.has_missing());
        assert_eq!(d.point(1), &[2.0, 1.0]);
    }

    #[test]
    fn blank_cell_sets_mask() {
        let csv = "id,x1,y1\nA,1,1\nB,2,\nC,3,2\n";
        let d = read_dataset(csv.as_bytes(), &schema()).unwrap();
        assert_eq!(d.missing_count(), 1);
        assert!(d.is_missing(1, 1));
        for marker in ["NA", "nan", "NaN", "na"] {
            let csv = format!("id,x1,y1\nA,{marker},1\n");
            let d = read_dataset(csv.as_bytes(), &schema()).unwrap();
            assert!(d.is_missing(0, 0), "marker {marker}");
        }
    }

    #[test]
    fn negative_value_is_domain_error() {
        let csv = "id,x1,y1\nA,1,1\nB,-1,1\n";
        let err = read_dataset(csv.as_bytes(), &schema()).unwrap_err();
        assert!(matches!(err, DataError::Negative { line: 3, .. }), "{err}");
    }

    #[test]
    fn malformed_row_reports_line() {
        let csv = "id,x1,y1\nA,1,1\nB,abc,1\n";
        match read_dataset(csv.as_bytes(), &schema()).unwrap_err() {
            DataError::Parse { line, .. } => assert_eq!(line, 3),
            e => panic!("unexpected {e}"),
        }
        let csv = "id,x1,y1\nA,1,1\nB,1\n";
        match read_dataset(csv.as_bytes(), &schema()).unwrap_err() {
            DataError::Parse { line, .. } => assert_eq!(line, 3),
            e => panic!("unexpected {e}"),
        }
    }

    #[test]
    fn duplicate_id_is_rejected() {
        let csv = "id,x1,y1\nA,1,1\nA,2,1\n";
        assert!(matches!(
            read_dataset(csv.as_bytes(), &schema()),
            Err(DataError::Validation(_))
        ));
    }

    #[test]
    fn column_order_follows_file() {
        let csv = "x2,id,y1,x1,u1\n1,A,2,3,4\n";
        let s = Schema::new("id")
            .inputs(["x1", "x2"])
            .outputs(["y1"])
            .undesirables(["u1"]);
        let d = read_dataset(csv.as_bytes(), &s).unwrap();
        assert_eq!(d.var_names(), &["x2", "x1", "y1", "u1"]);
        assert_eq!(d.point(0), &[1.0, 3.0, 2.0, 4.0]);
    }

    #[test]
    fn save_load_round_trip() {
        let csv = "id,x1,y1\nA,1.5,1\nB,2,\nC,3,0.125\n";
        let d = read_dataset(csv.as_bytes(), &schema()).unwrap();
        let mut buf = Vec::new();
        d.write_csv(&mut buf).unwrap();
        let again = read_dataset(buf.as_slice(), &d.schema()).unwrap();
        assert_eq!(d.mask(), again.mask());
        for j in 0..d.n() {
            for l in 0..2 {
                if !d.is_missing(j, l) {
                    assert_eq!(d.value(j, l), again.value(j, l));
                }
            }
        }
    }

    #[test]
    fn pooling_concatenates() {
        let a = DataSet::from_points(Dims::new(1, 1, 0), vec![vec![1.0, 2.0]; 27]).unwrap();
        let tags: Vec<String> = (2013..=2016).map(|y| y.to_string()).collect();
        let pooled = pool_panel(&[a.clone(), a.clone(), a.clone(), a.clone()], &tags).unwrap();
        assert_eq!(pooled.n(), 108);
        assert_eq!(pooled.ids()[0], "1_2013");
        assert_eq!(pooled.ids()[107], "27_2016");

        let single = pool_panel(std::slice::from_ref(&a), &tags[..1]).unwrap();
        assert_eq!(single.points(), a.points());
    }

    #[test]
    fn directions_resolve_per_observation() {
        let dims = Dims::new(2, 1, 1);
        let p = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(Direction::Input.resolve(&p, dims).unwrap(), vec![1.0, 2.0, 0.0, 0.0]);
        assert_eq!(Direction::Output.resolve(&p, dims).unwrap(), vec![0.0, 0.0, 3.0, 0.0]);
        assert_eq!(Direction::Proportional.resolve(&p, dims).unwrap(), p.to_vec());
        assert_eq!(
            Direction::Undesirable.resolve(&p, dims).unwrap(),
            vec![0.0, 0.0, 0.0, 4.0]
        );
        let zero_y = [1.0, 2.0, 0.0, 4.0];
        assert!(Direction::Output.resolve(&zero_y, dims).is_err());
        assert!(Direction::Custom(vec![0.0; 4]).resolve(&p, dims).is_err());
        assert!(Direction::Custom(vec![1.0; 3]).resolve(&p, dims).is_err());
    }

    #[test]
    fn direction_parses_and_displays() {
        for d in [
            Direction::Input,
            Direction::Output,
            Direction::Proportional,
            Direction::Undesirable,
            Direction::Custom(vec![1.0, 0.5]),
        ] {
            assert_eq!(d.to_string().parse::<Direction>().unwrap(), d);
        }
        assert!("sideways".parse::<Direction>().is_err());
    }

    #[test]
    fn pooling_rejects_dimension_mismatch() {
        let a = DataSet::from_points(Dims::new(2, 1, 0), vec![vec![1.0, 2.0, 3.0]]).unwrap();
        let b = DataSet::from_points(Dims::new(3, 1, 0), vec![vec![1.0, 2.0, 3.0, 4.0]]).unwrap();
        assert!(pool_panel(&[a, b], &["a".into(), "b".into()]).is_err());
    }
}
