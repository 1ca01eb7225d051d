//! Illumination fitting.
//!
//! Given a background, a sprite, and a placement, these routines search
//! lighting-parameter space for the rendering whose person region sits
//! closest to the ground-truth background under a masked L1 loss. Two
//! searches are provided: exhaustive evaluation of a parameter lattice,
//! and cyclic coordinate descent with halving steps. Both are exactly
//! deterministic, including their traces.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image::Image;
use crate::mask::Mask;
use crate::mosaic::{paste, PersonSprite, Placement};
use crate::render::{
    apply_lighting, LightingParams, GAIN_RANGE, GAMMA_RANGE, OFFSET_RANGE, RAMP_RANGE,
};

/// Mean absolute per-channel difference between `source` and `target`
/// over the mask pixels. A scaled L1 metric, so it is symmetric and lies
/// in `[0, 1]`.
pub fn illum_loss(source: &Image, target: &Image, mask: &Mask) -> Result<f64> {
    source.ensure_same_size_as(target)?;
    mask.ensure_same_size_as(source)?;
    if mask.is_empty() {
        return Err(Error::EmptySelection("illumination loss needs a nonempty mask".into()));
    }
    let mut sum = 0.0f64;
    for (x, y) in mask.iter_set() {
        let s = source.get(x, y);
        let t = target.get(x, y);
        for c in 0..3 {
            sum += (s[c] as f64 - t[c] as f64).abs();
        }
    }
    Ok(sum / (3 * mask.count_ones()) as f64)
}

/// Contrast-preserving variant: the masked source pixels are compared
/// against the mean target color of the ring `dilate(mask, width)` minus
/// the mask, instead of the occluded pixels themselves. Matching a ring
/// statistic pulls the person toward the surrounding lighting without
/// penalizing person-internal contrast.
pub fn illum_loss_ring(source: &Image, target: &Image, mask: &Mask, width: u32) -> Result<f64> {
    source.ensure_same_size_as(target)?;
    mask.ensure_same_size_as(source)?;
    if width == 0 {
        return Err(Error::InvalidArgument("ring width must be at least 1".into()));
    }
    if mask.is_empty() {
        return Err(Error::EmptySelection("illumination loss needs a nonempty mask".into()));
    }
    let dilated = mask.dilate(width);
    let mut ring_sum = [0.0f64; 3];
    let mut ring_count = 0u64;
    for (x, y) in dilated.iter_set() {
        if !mask.get(x, y) {
            let t = target.get(x, y);
            for c in 0..3 {
                ring_sum[c] += t[c] as f64;
            }
            ring_count += 1;
        }
    }
    if ring_count == 0 {
        return Err(Error::EmptySelection("ring around the mask is empty".into()));
    }
    let reference: [f64; 3] = std::array::from_fn(|c| ring_sum[c] / ring_count as f64);
    let mut sum = 0.0f64;
    for (x, y) in mask.iter_set() {
        let s = source.get(x, y);
        for c in 0..3 {
            sum += (s[c] as f64 - reference[c]).abs();
        }
    }
    Ok(sum / (3 * mask.count_ones()) as f64)
}

/// Which discrepancy the fitting routines minimize.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FitObjective {
    /// Masked L1 against the occluded background pixels.
    Masked,
    /// Masked L1 against the mean of a surrounding ring of the target.
    Ring { width: u32 },
}

impl Default for FitObjective {
    fn default() -> Self {
        Self::Masked
    }
}

/// Renders the candidate and scores it under the objective.
fn scene_loss(
    background: &Image,
    sprite: &PersonSprite,
    placement: &Placement,
    params: &LightingParams,
    objective: FitObjective,
) -> Result<f64> {
    let lit = apply_lighting(sprite, params)?;
    let triplet = paste(background, &lit, placement)?;
    match objective {
        FitObjective::Masked => illum_loss(triplet.source(), triplet.target(), triplet.mask()),
        FitObjective::Ring { width } => {
            illum_loss_ring(triplet.source(), triplet.target(), triplet.mask(), width)
        }
    }
}

/// A lighting parameter addressed by grid axes and descent coordinates.
/// `Gain` drives all three channels together; the per-channel variants
/// move one.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GridParam {
    Gain,
    GainR,
    GainG,
    GainB,
    Offset,
    Gamma,
    Angle,
    RampStrength,
}

impl GridParam {
    fn parse(name: &str) -> Result<Self> {
        Ok(match name {
            "gain" => Self::Gain,
            "gain_r" => Self::GainR,
            "gain_g" => Self::GainG,
            "gain_b" => Self::GainB,
            "offset" => Self::Offset,
            "gamma" => Self::Gamma,
            "angle" => Self::Angle,
            "ramp_strength" => Self::RampStrength,
            other => {
                return Err(Error::InvalidArgument(format!(
                    "unknown grid parameter '{other}' (expected gain, gain_r, gain_g, gain_b, \
                     offset, gamma, angle, or ramp_strength)"
                )))
            }
        })
    }

    fn apply(self, params: &mut LightingParams, value: f64) {
        let v = value as f32;
        match self {
            Self::Gain => params.gain = [v; 3],
            Self::GainR => params.gain[0] = v,
            Self::GainG => params.gain[1] = v,
            Self::GainB => params.gain[2] = v,
            Self::Offset => params.offset = v,
            Self::Gamma => params.gamma = v,
            Self::Angle => params.angle_deg = v,
            Self::RampStrength => params.ramp_strength = v,
        }
    }
}

/// A parameter lattice: a base point plus one value axis per varied
/// parameter. Candidates enumerate row-major over the axes in the order
/// they were added, with the last axis varying fastest; that enumeration
/// order is also the tie-breaking order of [`fit_grid`].
#[derive(Debug, Clone, PartialEq)]
pub struct LightingGrid {
    base: LightingParams,
    axes: Vec<(GridParam, Vec<f64>)>,
}

impl LightingGrid {
    pub fn new(base: LightingParams) -> Result<Self> {
        base.validate()?;
        Ok(Self {
            base,
            axes: Vec::new(),
        })
    }

    /// Adds an axis. Values must be nonempty, and every value must keep
    /// the parameter inside its documented range.
    pub fn with_axis(mut self, param: GridParam, values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidArgument("grid axis has no values".into()));
        }
        if self.axes.iter().any(|(p, _)| *p == param) {
            return Err(Error::InvalidArgument(format!("duplicate grid axis {param:?}")));
        }
        for &v in &values {
            let mut probe = self.base;
            param.apply(&mut probe, v);
            probe.validate()?;
        }
        self.axes.push((param, values));
        Ok(self)
    }

    /// Parses an axis spec of the form `param=lo:hi:steps`. One step
    /// yields the single value `lo`; more steps space values evenly from
    /// `lo` to `hi` inclusive.
    pub fn parse_axis(spec: &str) -> Result<(GridParam, Vec<f64>)> {
        let (name, rest) = spec
            .split_once('=')
            .ok_or_else(|| Error::InvalidArgument(format!("grid spec '{spec}' is not param=lo:hi:steps")))?;
        let parts: Vec<&str> = rest.split(':').collect();
        if parts.len() != 3 {
            return Err(Error::InvalidArgument(format!(
                "grid spec '{spec}' is not param=lo:hi:steps"
            )));
        }
        let lo: f64 = parts[0]
            .parse()
            .map_err(|_| Error::InvalidArgument(format!("grid spec '{spec}': bad low bound")))?;
        let hi: f64 = parts[1]
            .parse()
            .map_err(|_| Error::InvalidArgument(format!("grid spec '{spec}': bad high bound")))?;
        let steps: usize = parts[2]
            .parse()
            .map_err(|_| Error::InvalidArgument(format!("grid spec '{spec}': bad step count")))?;
        if steps == 0 {
            return Err(Error::InvalidArgument(format!("grid spec '{spec}': zero steps")));
        }
        let values = if steps == 1 {
            vec![lo]
        } else {
            (0..steps)
                .map(|i| lo + (hi - lo) * i as f64 / (steps - 1) as f64)
                .collect()
        };
        Ok((GridParam::parse(name)?, values))
    }

    /// Number of lattice points.
    pub fn len(&self) -> usize {
        if self.axes.is_empty() {
            0
        } else {
            self.axes.iter().map(|(_, v)| v.len()).product()
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn candidate(&self, index: usize) -> LightingParams {
        let mut params = self.base;
        let mut rem = index;
        for (param, values) in self.axes.iter().rev() {
            let i = rem % values.len();
            rem /= values.len();
            param.apply(&mut params, values[i]);
        }
        params
    }
}

/// One accepted state of a fit: the parameters and their loss.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TracePoint {
    pub params: LightingParams,
    pub loss: f64,
}

/// Outcome of a fit. The trace lists each successive best state in the
/// order it was accepted, so its losses are non-increasing and end at
/// `loss`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub params: LightingParams,
    pub loss: f64,
    pub evaluations: u64,
    pub trace: Vec<TracePoint>,
}

/// Exhaustive lattice search under the masked L1 objective. Returns the
/// global lattice minimizer; ties break toward the earliest lattice
/// index. Candidates are scored in parallel.
pub fn fit_grid(
    background: &Image,
    sprite: &PersonSprite,
    placement: &Placement,
    grid: &LightingGrid,
) -> Result<FitResult> {
    fit_grid_with_objective(background, sprite, placement, grid, FitObjective::Masked)
}

pub fn fit_grid_with_objective(
    background: &Image,
    sprite: &PersonSprite,
    placement: &Placement,
    grid: &LightingGrid,
    objective: FitObjective,
) -> Result<FitResult> {
    if grid.is_empty() {
        return Err(Error::InvalidArgument("lighting grid has no axes".into()));
    }
    let scored: Vec<(LightingParams, f64)> = (0..grid.len())
        .into_par_iter()
        .map(|i| {
            let params = grid.candidate(i);
            let loss = scene_loss(background, sprite, placement, &params, objective)?;
            Ok((params, loss))
        })
        .collect::<Result<_>>()?;

    let mut trace = Vec::new();
    let mut best: Option<(LightingParams, f64)> = None;
    for &(params, loss) in &scored {
        if best.map_or(true, |(_, best_loss)| loss < best_loss) {
            best = Some((params, loss));
            trace.push(TracePoint { params, loss });
        }
    }
    let (params, loss) = best.expect("grid has at least one candidate");
    Ok(FitResult {
        params,
        loss,
        evaluations: scored.len() as u64,
        trace,
    })
}

/// Cyclic coordinate descent from `init` under the masked L1 objective.
/// Coordinates cycle gamma, gain r/g/b, offset, angle, ramp strength; a
/// cycle without improvement halves every step, and the search stops at
/// `budget` total evaluations (the initial one included) or when all
/// steps fall below 1e-3.
pub fn fit_descent(
    background: &Image,
    sprite: &PersonSprite,
    placement: &Placement,
    init: &LightingParams,
    budget: u64,
) -> Result<FitResult> {
    fit_descent_with_objective(background, sprite, placement, init, budget, FitObjective::Masked)
}

pub fn fit_descent_with_objective(
    background: &Image,
    sprite: &PersonSprite,
    placement: &Placement,
    init: &LightingParams,
    budget: u64,
    objective: FitObjective,
) -> Result<FitResult> {
    init.validate()?;
    if budget == 0 {
        return Err(Error::InvalidArgument("descent budget must be at least 1".into()));
    }

    const COORDS: [GridParam; 7] = [
        GridParam::Gamma,
        GridParam::GainR,
        GridParam::GainG,
        GridParam::GainB,
        GridParam::Offset,
        GridParam::Angle,
        GridParam::RampStrength,
    ];
    const STEP_FLOOR: f64 = 1e-3;
    let mut steps = [0.5, 0.25, 0.25, 0.25, 0.1, 45.0, 0.25];

    let mut best = *init;
    let mut best_loss = scene_loss(background, sprite, placement, &best, objective)?;
    let mut evaluations = 1u64;
    let mut trace = vec![TracePoint {
        params: best,
        loss: best_loss,
    }];

    'search: while evaluations < budget {
        let mut improved = false;
        for (i, param) in COORDS.iter().enumerate() {
            for direction in [1.0, -1.0] {
                if evaluations >= budget {
                    break 'search;
                }
                let candidate = stepped(&best, *param, direction * steps[i]);
                if candidate == best {
                    continue;
                }
                let loss = scene_loss(background, sprite, placement, &candidate, objective)?;
                evaluations += 1;
                if loss < best_loss {
                    best = candidate;
                    best_loss = loss;
                    trace.push(TracePoint {
                        params: best,
                        loss: best_loss,
                    });
                    improved = true;
                    break;
                }
            }
        }
        if !improved {
            for step in &mut steps {
                *step *= 0.5;
            }
            if steps.iter().all(|s| *s < STEP_FLOOR) {
                break;
            }
        }
    }

    Ok(FitResult {
        params: best,
        loss: best_loss,
        evaluations,
        trace,
    })
}

/// Moves one coordinate by `delta`, clamping to the parameter's range;
/// the angle wraps around instead.
fn stepped(params: &LightingParams, param: GridParam, delta: f64) -> LightingParams {
    let mut out = *params;
    match param {
        GridParam::Gamma => {
            out.gamma = ((params.gamma as f64 + delta).clamp(GAMMA_RANGE.0 as f64, GAMMA_RANGE.1 as f64)) as f32
        }
        GridParam::GainR | GridParam::GainG | GridParam::GainB | GridParam::Gain => {
            let clamp = |v: f64| v.clamp(GAIN_RANGE.0 as f64, GAIN_RANGE.1 as f64) as f32;
            match param {
                GridParam::GainR => out.gain[0] = clamp(params.gain[0] as f64 + delta),
                GridParam::GainG => out.gain[1] = clamp(params.gain[1] as f64 + delta),
                GridParam::GainB => out.gain[2] = clamp(params.gain[2] as f64 + delta),
                _ => out.gain = std::array::from_fn(|c| clamp(params.gain[c] as f64 + delta)),
            }
        }
        GridParam::Offset => {
            out.offset = ((params.offset as f64 + delta).clamp(OFFSET_RANGE.0 as f64, OFFSET_RANGE.1 as f64)) as f32
        }
        GridParam::Angle => out.angle_deg = ((params.angle_deg as f64 + delta).rem_euclid(360.0)) as f32,
        GridParam::RampStrength => {
            out.ramp_strength =
                ((params.ramp_strength as f64 + delta).clamp(RAMP_RANGE.0 as f64, RAMP_RANGE.1 as f64)) as f32
        }
    }
    out
}
