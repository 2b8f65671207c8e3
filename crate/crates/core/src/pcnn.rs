//! Pulse-coupled neural network over a pixel lattice.
//!
//! One neuron per pixel. The stimulus feeds each neuron directly; firing
//! neighbors raise its linking input through a 3×3 weight matrix; a
//! dynamic threshold decays geometrically until the neuron's modulated
//! activity exceeds it. A neuron fires at most once: after firing its
//! threshold is pinned at +∞. Updates are synchronous (every neuron reads
//! the previous iteration's outputs).

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::image::{reflect, GrayImage};

/// Coverage fraction used to pick the minimum threshold level.
pub const TH_M_COVERAGE: f64 = 0.93;

pub fn default_weights() -> [[f64; 3]; 3] {
    [[0.5, 1.0, 0.5], [1.0, 0.0, 1.0], [0.5, 1.0, 0.5]]
}

#[derive(Clone, Debug, PartialEq)]
pub struct PcnnParams {
    /// Linking strength.
    pub beta: f64,
    /// Linking amplitude.
    pub v_q: f64,
    /// Linking decay.
    pub d_q: f64,
    /// Threshold amplitude.
    pub v_theta: f64,
    /// Threshold decay; sets the height of each firing step.
    pub d_theta: f64,
    pub w: [[f64; 3]; 3],
    /// Initial threshold.
    pub y_e: f64,
    /// Threshold never decays below this level.
    pub th_m: f64,
    pub max_iters: u32,
}

impl Default for PcnnParams {
    fn default() -> Self {
        Self {
            beta: 0.2,
            v_q: 1.0,
            d_q: 0.7,
            v_theta: 20.0,
            d_theta: 0.2,
            w: default_weights(),
            y_e: 1.0,
            th_m: 0.0,
            max_iters: 50,
        }
    }
}

impl PcnnParams {
    pub fn validate(&self) -> Result<()> {
        // beta = 0 is allowed: it switches coupling off entirely
        if !(0.0..1.0).contains(&self.beta) {
            return Err(Error::domain(format!("beta must be in [0, 1), got {}", self.beta)));
        }
        for (name, v) in [
            ("v_q", self.v_q),
            ("d_q", self.d_q),
            ("v_theta", self.v_theta),
            ("d_theta", self.d_theta),
        ] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::domain(format!("{name} must be > 0, got {v}")));
            }
        }
        if self.w.iter().flatten().any(|x| !x.is_finite() || *x < 0.0) {
            return Err(Error::domain("weight matrix entries must be finite and >= 0"));
        }
        if !self.y_e.is_finite() || !self.th_m.is_finite() || self.th_m < 0.0 {
            return Err(Error::domain("initial and minimum thresholds must be finite"));
        }
        if self.max_iters < 1 {
            return Err(Error::domain("max_iters must be >= 1"));
        }
        Ok(())
    }

    /// Copy of `self` with the stimulus-derived thresholds filled in.
    pub fn adapted_to(&self, stimulus: &GrayImage) -> Self {
        Self {
            y_e: stimulus.data().iter().cloned().fold(0.0, f64::max),
            th_m: minimum_threshold(stimulus),
            ..self.clone()
        }
    }
}

/// Default parameters adapted to a stimulus.
pub fn adapt_params(image: &GrayImage) -> PcnnParams {
    PcnnParams::default().adapted_to(image)
}

/// Largest gray level `g` (in 1/255 steps) such that pixels at level `g`
/// or above cover at least 93% of the image.
pub fn minimum_threshold(image: &GrayImage) -> f64 {
    let mut hist = [0usize; 256];
    for &v in image.data() {
        hist[gray_level(v)] += 1;
    }
    let need = TH_M_COVERAGE * image.len() as f64;
    let mut covered = 0usize;
    for g in (0..256).rev() {
        covered += hist[g];
        if covered as f64 >= need {
            return g as f64 / 255.0;
        }
    }
    0.0
}

#[inline]
fn gray_level(v: f64) -> usize {
    // floor keeps every level at or below the intensities it bins
    ((v.clamp(0.0, 1.0) * 255.0).floor() as usize).min(255)
}

/// Full lattice state after `n` iterations.
#[derive(Clone, Debug, PartialEq)]
pub struct PcnnState {
    height: usize,
    width: usize,
    pub f: Vec<f64>,
    pub q: Vec<f64>,
    pub u: Vec<f64>,
    pub theta: Vec<f64>,
    pub y: Vec<u8>,
    pub fired: Vec<bool>,
    pub n: u32,
}

impl PcnnState {
    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn all_fired(&self) -> bool {
        self.fired.iter().all(|f| *f)
    }

    pub fn fired_now(&self) -> usize {
        self.y.iter().filter(|y| **y == 1).count()
    }
}

pub fn init(stimulus: &GrayImage, params: &PcnnParams) -> PcnnState {
    let n = stimulus.len();
    PcnnState {
        height: stimulus.height(),
        width: stimulus.width(),
        f: stimulus.data().to_vec(),
        q: vec![0.0; n],
        u: vec![0.0; n],
        theta: vec![params.y_e; n],
        y: vec![0; n],
        fired: vec![false; n],
        n: 0,
    }
}

/// One synchronous update.
pub fn step(state: &PcnnState, params: &PcnnParams) -> Result<PcnnState> {
    if state.n >= params.max_iters {
        return Err(Error::domain(format!(
            "iteration cap {} already reached",
            params.max_iters
        )));
    }
    let (h, w) = (state.height, state.width);
    let link_decay = (-params.d_q).exp();
    let theta_decay = (-params.d_theta).exp();
    let mut next = state.clone();

    for row in 0..h {
        for col in 0..w {
            let i = row * w + col;
            let mut linked = 0.0;
            for (dy, wrow) in params.w.iter().enumerate() {
                let rr = reflect(row as isize + dy as isize - 1, h);
                for (dx, wt) in wrow.iter().enumerate() {
                    if *wt != 0.0 {
                        let cc = reflect(col as isize + dx as isize - 1, w);
                        linked += wt * state.y[rr * w + cc] as f64;
                    }
                }
            }
            let q = params.v_q * linked + link_decay * state.q[i];
            let u = state.f[i] * (1.0 + params.beta * q);
            let theta = if state.fired[i] {
                f64::INFINITY
            } else {
                (params.v_theta * state.y[i] as f64 + theta_decay * state.theta[i]).max(params.th_m)
            };
            // the floor is inclusive: activity at th_m fires once theta has reached it
            let fires = !state.fired[i] && (u > theta || (theta <= params.th_m && u >= params.th_m && u > 0.0));

            next.q[i] = q;
            next.u[i] = u;
            next.y[i] = fires as u8;
            if fires {
                next.fired[i] = true;
                next.theta[i] = f64::INFINITY;
            } else {
                next.theta[i] = theta;
            }
        }
    }
    next.n = state.n + 1;
    Ok(next)
}

/// Iteration of first firing per pixel; 0 means the neuron never fired.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FireMap {
    height: usize,
    width: usize,
    first_fire: Vec<u32>,
}

impl FireMap {
    pub fn new(height: usize, width: usize, first_fire: Vec<u32>) -> Result<Self> {
        if first_fire.len() != height * width {
            return Err(Error::shape(format!(
                "{} entries for a {height}x{width} fire map",
                first_fire.len()
            )));
        }
        Ok(Self {
            height,
            width,
            first_fire,
        })
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn values(&self) -> &[u32] {
        &self.first_fire
    }

    pub fn get(&self, row: usize, col: usize) -> u32 {
        self.first_fire[row * self.width + col]
    }

    pub fn waves(&self) -> u32 {
        self.first_fire.iter().copied().max().unwrap_or(0)
    }
}

/// Runs to completion and also reports how many neurons fired per iteration.
pub fn run_traced(stimulus: &GrayImage, params: &PcnnParams) -> Result<(FireMap, Vec<usize>)> {
    params.validate()?;
    let mut state = init(stimulus, params);
    let mut first = vec![0u32; stimulus.len()];
    let mut counts = Vec::new();
    while state.n < params.max_iters && !state.all_fired() {
        state = step(&state, params)?;
        for (slot, y) in first.iter_mut().zip(&state.y) {
            if *y == 1 {
                *slot = state.n;
            }
        }
        counts.push(state.fired_now());
    }
    Ok((FireMap::new(stimulus.height(), stimulus.width(), first)?, counts))
}

pub fn run(stimulus: &GrayImage, params: &PcnnParams) -> Result<FireMap> {
    run_traced(stimulus, params).map(|(fm, _)| fm)
}

/// `iter <n>: <count>` per iteration.
pub fn format_trace(counts: &[usize]) -> String {
    let mut out = String::new();
    for (i, c) in counts.iter().enumerate() {
        let _ = writeln!(out, "iter {}: {c}", i + 1);
    }
    out
}
