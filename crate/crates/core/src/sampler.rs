//! Hit & Run random walk inside an [`UncertaintySet`].
//!
//! A step draws a unit direction `d`, measures the chord from the current
//! point to the boundary, and moves a random fraction `ξ` of it.
//!
//! Two chord rules are offered. [`ChordRule::Full`] (the default) first
//! picks `d` or `−d` with probability proportional to the chord length on
//! each side, which makes the move uniform on the whole line through the
//! point and the walk's stationary law uniform on the set.
//! [`ChordRule::Forward`] always moves along `d`; its stationary law piles
//! up near the boundary (arcsine-like in each coordinate).
//!
//! Randomness comes through [`WalkDraws`], so tests can script the exact
//! directions and fractions of a walk.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use thiserror::Error;

use crate::geometry::{GeometryError, Shape, UncertaintySet};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SamplerError {
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error("start point {0:?} lies outside the set")]
    StartOutside(Vec<f64>),
    #[error("{0}")]
    Invalid(String),
}

/// Counter-based random stream: `(seed, stream)` fixes every draw,
/// independently of which thread consumes it or in what order.
#[derive(Debug, Clone)]
pub struct RngStream {
    rng: ChaCha8Rng,
}

impl RngStream {
    pub fn new(seed: u64, stream: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        Self { rng }
    }

    /// Stream used by DMU `dmu` at walk step `step` (1-based).
    pub fn for_step(seed: u64, dmu: usize, step: u64) -> Self {
        Self::new(seed, ((dmu as u64) << 32) | (step & 0xffff_ffff))
    }
}

impl RngCore for RngStream {
    fn next_u32(&mut self) -> u32 {
        self.rng.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.rng.fill_bytes(dst)
    }
}

/// Law of the raw direction before normalization.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash)]
pub enum DirectionLaw {
    /// Independent uniform(−1, 1) components.
    #[default]
    Coordinatewise,
    /// Independent standard normal components (uniform on the sphere).
    Sphere,
}

/// Law of the fraction `ξ` of the chord travelled.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash)]
pub enum XiLaw {
    #[default]
    Uniform,
    /// Symmetric triangular on [0, 1] with mode 1/2.
    Triangular,
}

impl std::str::FromStr for XiLaw {
    type Err = SamplerError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "uniform" => Ok(XiLaw::Uniform),
            "triangular" => Ok(XiLaw::Triangular),
            other => Err(SamplerError::Invalid(format!(
                "unknown xi law '{other}' (expected uniform or triangular)"
            ))),
        }
    }
}

impl std::fmt::Display for XiLaw {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            XiLaw::Uniform => "uniform",
            XiLaw::Triangular => "triangular",
        })
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash)]
pub enum ChordRule {
    #[default]
    Full,
    Forward,
}

/// Source of the random quantities a step consumes.
pub trait WalkDraws {
    /// Unit vector supported on the `active` coordinates.
    fn direction(&mut self, active: &[bool]) -> Vec<f64>;
    /// Fraction of the chord to travel.
    fn xi(&mut self) -> f64;
    /// Uniform(0, 1) used to orient the chord under [`ChordRule::Full`].
    fn orientation(&mut self) -> f64;
    /// Longitude in [−π, π] and latitude in [−π/2, π/2].
    fn angles(&mut self) -> (f64, f64);
}

pub struct RandomDraws<R> {
    pub rng: R,
    pub direction_law: DirectionLaw,
    pub xi_law: XiLaw,
}

impl<R: RngCore> RandomDraws<R> {
    pub fn new(rng: R) -> Self {
        Self {
            rng,
            direction_law: DirectionLaw::default(),
            xi_law: XiLaw::default(),
        }
    }

    pub fn with_laws(rng: R, direction_law: DirectionLaw, xi_law: XiLaw) -> Self {
        Self {
            rng,
            direction_law,
            xi_law,
        }
    }
}

impl<R: RngCore> WalkDraws for RandomDraws<R> {
    fn direction(&mut self, active: &[bool]) -> Vec<f64> {
        let mut d = vec![0.0; active.len()];
        if !active.iter().any(|a| *a) {
            return d;
        }
        loop {
            for (dl, a) in d.iter_mut().zip(active) {
                if *a {
                    *dl = match self.direction_law {
                        DirectionLaw::Coordinatewise => self.rng.random_range(-1.0..1.0),
                        DirectionLaw::Sphere => self.rng.sample(StandardNormal),
                    };
                }
            }
            let norm = d.iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm > 1e-12 {
                d.iter_mut().for_each(|x| *x /= norm);
                return d;
            }
        }
    }

    fn xi(&mut self) -> f64 {
        match self.xi_law {
            XiLaw::Uniform => self.rng.random::<f64>(),
            XiLaw::Triangular => 0.5 * (self.rng.random::<f64>() + self.rng.random::<f64>()),
        }
    }

    fn orientation(&mut self) -> f64 {
        self.rng.random::<f64>()
    }

    fn angles(&mut self) -> (f64, f64) {
        use std::f64::consts::{FRAC_PI_2, PI};
        (
            self.rng.random_range(-PI..PI),
            self.rng.random_range(-FRAC_PI_2..FRAC_PI_2),
        )
    }
}

/// Replays fixed draws in order; orientation always keeps `d`.
#[derive(Debug, Clone, Default)]
pub struct ScriptedDraws {
    directions: std::collections::VecDeque<Vec<f64>>,
    xis: std::collections::VecDeque<f64>,
    angles: std::collections::VecDeque<(f64, f64)>,
}

impl ScriptedDraws {
    pub fn new(directions: Vec<Vec<f64>>, xis: Vec<f64>) -> Self {
        Self {
            directions: directions.into(),
            xis: xis.into(),
            angles: Default::default(),
        }
    }

    pub fn with_angles(mut self, angles: Vec<(f64, f64)>) -> Self {
        self.angles = angles.into();
        self
    }
}

impl WalkDraws for ScriptedDraws {
    fn direction(&mut self, _active: &[bool]) -> Vec<f64> {
        let d = self.directions.pop_front().expect("scripted directions exhausted");
        let norm = d.iter().map(|x| x * x).sum::<f64>().sqrt();
        d.iter().map(|x| x / norm).collect()
    }

    fn xi(&mut self) -> f64 {
        self.xis.pop_front().expect("scripted xi values exhausted")
    }

    fn orientation(&mut self) -> f64 {
        0.0
    }

    fn angles(&mut self) -> (f64, f64) {
        self.angles.pop_front().expect("scripted angles exhausted")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WalkState {
    pub point: Vec<f64>,
    pub step: u64,
}

impl WalkState {
    pub fn new(point: Vec<f64>) -> Self {
        Self { point, step: 0 }
    }

    /// State at the set's center.
    pub fn at_center(set: &UncertaintySet) -> Self {
        Self::new(set.center().to_vec())
    }
}

/// `p + ξ·λ·d`, with `λ` the chord length from `p` along `d`.
pub fn advance(set: &UncertaintySet, p: &[f64], d: &[f64], xi: f64) -> Result<Vec<f64>, SamplerError> {
    let lam = set.chord_length(p, d)?;
    Ok(p.iter().zip(d).map(|(a, b)| a + xi * lam * b).collect())
}

/// One chord-based step. Degenerate sets return the state unchanged.
pub fn hr_step(
    set: &UncertaintySet,
    state: &WalkState,
    draws: &mut dyn WalkDraws,
    rule: ChordRule,
) -> Result<WalkState, SamplerError> {
    if set.is_degenerate() {
        return Ok(WalkState {
            point: state.point.clone(),
            step: state.step + 1,
        });
    }
    let p = &state.point;
    let mut d = draws.direction(&set.active());
    let mut lam = set.chord_length(p, &d)?;
    if rule == ChordRule::Full {
        let back: Vec<f64> = d.iter().map(|x| -x).collect();
        let lam_back = set.chord_length(p, &back)?;
        let total = lam + lam_back;
        if total > 0.0 && draws.orientation() * total >= lam {
            d = back;
            lam = lam_back;
        }
    }
    let xi = draws.xi();
    let mut point: Vec<f64> = p.iter().zip(&d).map(|(a, b)| a + xi * lam * b).collect();
    if set.clips_orthant() {
        // Rounding at an orthant face can produce −1e-17.
        point.iter_mut().for_each(|v| *v = v.max(0.0));
    }
    Ok(WalkState {
        point,
        step: state.step + 1,
    })
}

/// One step of the spherical-angle walk on a superellipsoid: move a
/// fraction `ξ` of the way to a random boundary point, shortened so the
/// move stays in the non-negative orthant.
pub fn superellipsoid_step(
    set: &UncertaintySet,
    state: &WalkState,
    draws: &mut dyn WalkDraws,
) -> Result<WalkState, SamplerError> {
    if !matches!(set.shape(), Shape::Superellipsoid { .. }) {
        return Err(SamplerError::Invalid(format!(
            "superellipsoid step on a {}",
            set.shape().name()
        )));
    }
    let (psi, phi) = draws.angles();
    let hit = set.superellipsoid_boundary_point(psi, phi)?;
    let p = &state.point;
    let grad: Vec<f64> = hit.iter().zip(p).map(|(h, a)| h - a).collect();
    let mut reach = 1.0f64;
    if set.clips_orthant() {
        for (a, g) in p.iter().zip(&grad) {
            if *g < 0.0 {
                reach = reach.min(a / -g);
            }
        }
    }
    let xi = draws.xi();
    let mut point: Vec<f64> = p.iter().zip(&grad).map(|(a, g)| a + xi * reach * g).collect();
    if set.clips_orthant() {
        point.iter_mut().for_each(|v| *v = v.max(0.0));
    }
    Ok(WalkState {
        point,
        step: state.step + 1,
    })
}

/// Dispatches to the superellipsoid walk for superellipsoids and to
/// [`hr_step`] otherwise.
pub fn walk_step(
    set: &UncertaintySet,
    state: &WalkState,
    draws: &mut dyn WalkDraws,
    rule: ChordRule,
) -> Result<WalkState, SamplerError> {
    match set.shape() {
        Shape::Superellipsoid { .. } => superellipsoid_step(set, state, draws),
        _ => hr_step(set, state, draws, rule),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct WalkOptions {
    pub rule: ChordRule,
    /// Steps discarded before the first recorded point.
    pub burn_in: usize,
    /// Record every `thin`-th point.
    pub thin: usize,
}

impl Default for WalkOptions {
    fn default() -> Self {
        Self {
            rule: ChordRule::Full,
            burn_in: 0,
            thin: 1,
        }
    }
}

/// Runs a walk from `start` (the center when `None`) and returns `t` points.
pub fn hr_sample(
    set: &UncertaintySet,
    start: Option<&[f64]>,
    t: usize,
    draws: &mut dyn WalkDraws,
    opts: &WalkOptions,
) -> Result<Vec<Vec<f64>>, SamplerError> {
    if t == 0 {
        return Err(SamplerError::Invalid("t must be at least 1".into()));
    }
    if opts.thin == 0 {
        return Err(SamplerError::Invalid("thinning interval must be at least 1".into()));
    }
    let start = start.unwrap_or(set.center());
    if !set.contains(start) {
        return Err(SamplerError::StartOutside(start.to_vec()));
    }
    let mut state = WalkState::new(start.to_vec());
    for _ in 0..opts.burn_in {
        state = walk_step(set, &state, draws, opts.rule)?;
    }
    let mut out = Vec::with_capacity(t);
    while out.len() < t {
        for _ in 0..opts.thin {
            state = walk_step(set, &state, draws, opts.rule)?;
        }
        out.push(state.point.clone());
    }
    Ok(out)
}
