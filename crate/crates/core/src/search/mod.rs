//! Alternating grid search over stage parameters.
//!
//! Each occurrence first picks the best LEVEL 1 threshold triple (followed
//! by a presmooth pass), then the best deconvolution. The deconvolution is
//! chosen in two blocks: magnification, length and angle with the default
//! filter settings, then source, amount and noise for that motion. Later
//! rounds revisit the triple (one component at a time on large grids) with
//! the chosen deconvolution in place, then the motion and filter again,
//! until nothing changes. Every arg-min keeps the incumbent as its first candidate, so
//! the objective never increases.

mod objective;

use std::collections::HashSet;
use std::fmt::Write as _;

use rayon::prelude::*;

pub use objective::{contrast_regularizer, objective, ObjectiveBreakdown, CONTRAST_WINDOW};

use crate::codec::{expand, BlockAverageImage};
use crate::deconv::{default_lengths, default_thetas, DeconvSettings, NoiseMode, Source};
use crate::error::{Error, Result};
use crate::interp::{neighbour_differences, ThresholdTriple};
use crate::pipeline::{pad_to_multiple, run_stages, stage_geometry, Level, PipelineSpec, Stage, StageGeometry};
use crate::raster::RasterImage;

#[derive(Clone, Debug, PartialEq)]
pub struct SearchConfig {
    pub lambda: f64,
    /// Stop once the total objective is at or below this value.
    pub threshold: f64,
    pub max_occurrences: usize,
    pub min_relative_improvement: f64,
    pub thresholds: Vec<u8>,
    pub lengths: Vec<u32>,
    pub thetas: Vec<f64>,
    pub sources: Vec<Source>,
    pub amounts: Vec<u32>,
    pub noises: Vec<NoiseMode>,
    /// Magnifications tried in the first occurrence.
    pub first_gammas: Vec<f64>,
    /// Magnifications tried afterwards.
    pub later_gammas: Vec<f64>,
    /// Passes over the triple, motion and filter blocks per occurrence.
    pub rounds: usize,
}

impl Default for SearchConfig {
    fn default() -> Self {
        Self {
            lambda: 0.1,
            threshold: 0.0,
            max_occurrences: 4,
            min_relative_improvement: 1e-3,
            thresholds: threshold_grid(5),
            lengths: default_lengths(),
            thetas: default_thetas(),
            sources: vec![Source::Dvc, Source::Ofc],
            amounts: (0..=12).map(|i| 25 * i).collect(),
            noises: vec![
                NoiseMode::No,
                NoiseMode::Yes,
                NoiseMode::DarkOnly,
                NoiseMode::LightOnly,
                NoiseMode::Auto,
            ],
            first_gammas: vec![1.0, 2.0, 2.25, 3.0, 3.5, 4.0],
            later_gammas: vec![1.0],
            rounds: 3,
        }
    }
}

/// `0, step, 2*step, ...` up to 255, always ending in 255.
pub fn threshold_grid(step: u8) -> Vec<u8> {
    let step = step.max(1);
    let mut grid: Vec<u8> = (0..=255u8).step_by(step as usize).collect();
    if grid.last() != Some(&255) {
        grid.push(255);
    }
    grid
}

impl SearchConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return Err(Error::Search(format!("lambda {} must be finite and >= 0", self.lambda)));
        }
        let empty = [
            ("thresholds", self.thresholds.is_empty()),
            ("lengths", self.lengths.is_empty()),
            ("thetas", self.thetas.is_empty()),
            ("sources", self.sources.is_empty()),
            ("amounts", self.amounts.is_empty()),
            ("noises", self.noises.is_empty()),
            ("first_gammas", self.first_gammas.is_empty()),
            ("later_gammas", self.later_gammas.is_empty()),
        ];
        if let Some((name, _)) = empty.iter().find(|(_, e)| *e) {
            return Err(Error::Search(format!("grid {name} is empty")));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TraceRow {
    pub iteration: usize,
    pub fidelity: f64,
    pub regularizer: f64,
    pub total: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SearchState {
    pub spec: PipelineSpec,
    pub objective: ObjectiveBreakdown,
    /// Completed occurrences.
    pub iteration: usize,
    pub trace: Vec<TraceRow>,
}

impl SearchState {
    pub fn trace_csv(&self) -> String {
        trace_csv(&self.trace)
    }
}

pub fn trace_csv(trace: &[TraceRow]) -> String {
    let mut out = String::from("iteration,fidelity,R,total\n");
    for r in trace {
        writeln!(out, "{},{},{},{}", r.iteration, r.fidelity, r.regularizer, r.total).unwrap();
    }
    out
}

/// Index of the first minimum; NaN never wins.
fn first_min(totals: &[f64]) -> usize {
    let mut best = 0;
    for (i, &t) in totals.iter().enumerate().skip(1) {
        if t < totals[best] {
            best = i;
        }
    }
    best
}

struct Evaluator<'a> {
    reference: &'a RasterImage,
    lambda: f64,
    step: usize,
}

/// A stage list applied to some base image, with its result.
#[derive(Clone)]
struct Outcome {
    stages: Vec<Stage>,
    image: RasterImage,
    objective: ObjectiveBreakdown,
}

impl Evaluator<'_> {
    /// Applies each candidate stage list to `base` and scores it.
    fn score(&self, base: &RasterImage, candidates: Vec<Vec<Stage>>) -> Result<Vec<Outcome>> {
        candidates
            .into_par_iter()
            .map(|stages| {
                let image = run_stages(base, &stages, self.step)?;
                let objective = objective(&image, self.reference, self.lambda)?;
                Ok(Outcome {
                    stages,
                    image,
                    objective,
                })
            })
            .collect()
    }

    /// First minimum of the incumbent followed by `scored`, so the
    /// incumbent wins ties.
    fn pick(incumbent: Outcome, scored: Vec<Outcome>) -> Outcome {
        let totals: Vec<f64> = std::iter::once(incumbent.objective.total)
            .chain(scored.iter().map(|o| o.objective.total))
            .collect();
        match first_min(&totals) {
            0 => incumbent,
            i => scored.into_iter().nth(i - 1).unwrap(),
        }
    }

    /// Scores `candidates` against the incumbent; candidates equal to the
    /// incumbent are dropped.
    fn best(&self, base: &RasterImage, incumbent: Outcome, candidates: Vec<Vec<Stage>>) -> Result<Outcome> {
        let candidates = candidates.into_iter().filter(|c| *c != incumbent.stages).collect();
        Ok(Self::pick(incumbent, self.score(base, candidates)?))
    }
}

fn level1_geometry(step: usize) -> StageGeometry {
    if step == 3 {
        StageGeometry::Step3
    } else {
        StageGeometry::Even
    }
}

fn level1_stage(step: usize, t: ThresholdTriple) -> Stage {
    Stage::CondInterp {
        level: Level::One,
        geometry: level1_geometry(step),
        t,
    }
}

/// Groups thresholds by the LEVEL 1 pass they produce on one image.
struct TripleClasses {
    diffs: [Vec<u8>; 3],
}

impl TripleClasses {
    fn new(image: &RasterImage, step: usize) -> Result<Self> {
        let geometry = stage_geometry(Level::One, level1_geometry(step), step)?;
        let padded = pad_to_multiple(image, geometry.block_size())?;
        Ok(Self {
            diffs: neighbour_differences(&padded, geometry)?,
        })
    }

    /// Number of differences a threshold admits; 0 and "admits none"
    /// coincide.
    fn class(&self, t: ThresholdTriple) -> (usize, usize, usize) {
        let c = |k: usize, p: u8| if p == 0 { 0 } else { self.diffs[k].partition_point(|&d| d <= p) };
        (c(0, t.p2), c(1, t.p3), c(2, t.p4))
    }
}

/// Lexicographically ordered triples, keeping only the first triple of each
/// group that yields an identical pass on `image`.
fn distinct_triples(image: &RasterImage, step: usize, grid: &[u8]) -> Result<Vec<ThresholdTriple>> {
    let classes = TripleClasses::new(image, step)?;
    let mut grid = grid.to_vec();
    grid.sort_unstable();
    grid.dedup();
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for &p2 in &grid {
        for &p3 in &grid {
            for &p4 in &grid {
                let t = ThresholdTriple::new(p2, p3, p4);
                if seen.insert(classes.class(t)) {
                    out.push(t);
                }
            }
        }
    }
    Ok(out)
}

/// Triples that differ from `from` in a single component, one per distinct
/// pass, excluding passes equal to the one `from` gives.
fn axis_triples(image: &RasterImage, step: usize, grid: &[u8], from: ThresholdTriple) -> Result<Vec<ThresholdTriple>> {
    let classes = TripleClasses::new(image, step)?;
    let mut seen = HashSet::from([classes.class(from)]);
    let mut out = Vec::new();
    for axis in 0..3 {
        for &p in grid {
            let mut a = from.as_array();
            a[axis] = p;
            let t = ThresholdTriple::new(a[0], a[1], a[2]);
            if seen.insert(classes.class(t)) {
                out.push(t);
            }
        }
    }
    Ok(out)
}

/// Later rounds re-search every distinct triple when there are at most this
/// many, and one component at a time otherwise.
const FULL_TRIPLE_LIMIT: usize = 64;

/// The stages of one occurrence: an optional interpolation pair followed by
/// an optional magnification and deconvolution.
fn split_occurrence(stages: &[Stage]) -> (Vec<Stage>, Vec<Stage>) {
    let n = stages.iter().take_while(|s| matches!(s, Stage::CondInterp { .. })).count();
    (stages[..n].to_vec(), stages[n..].to_vec())
}

fn join(a: &[Stage], b: &[Stage]) -> Vec<Stage> {
    a.iter().chain(b).cloned().collect()
}

/// One occurrence of the loop, starting from `base`. Blocks are revisited
/// until the chosen stages stop changing or `cfg.rounds` is reached.
fn search_occurrence(
    eval: &Evaluator<'_>,
    cfg: &SearchConfig,
    base: &RasterImage,
    base_objective: ObjectiveBreakdown,
    occurrence: usize,
) -> Result<Outcome> {
    let step = eval.step;
    let presmooth = level1_stage(step, ThresholdTriple::ALWAYS);
    let gammas = if occurrence == 1 { &cfg.first_gammas } else { &cfg.later_gammas };
    let mut best = Outcome {
        stages: Vec::new(),
        image: base.clone(),
        objective: base_objective,
    };
    for round in 0..cfg.rounds.max(1) {
        let before = best.stages.clone();

        // threshold triple, with the current deconvolution kept behind it
        let (interp, deconv) = split_occurrence(&best.stages);
        let mut candidates = Vec::new();
        if round == 0 {
            for t in distinct_triples(base, step, &cfg.thresholds)? {
                candidates.push(join(&[level1_stage(step, t), presmooth], &deconv));
            }
        } else {
            let from = match interp.first() {
                Some(&Stage::CondInterp { t, .. }) => t,
                _ => ThresholdTriple::NEVER,
            };
            candidates.push(deconv.clone());
            let all = distinct_triples(base, step, &cfg.thresholds)?;
            let triples = if all.len() <= FULL_TRIPLE_LIMIT {
                all
            } else {
                axis_triples(base, step, &cfg.thresholds, from)?
            };
            for t in triples {
                candidates.push(join(&[level1_stage(step, t), presmooth], &deconv));
            }
        }
        best = eval.best(base, best, candidates)?;

        // magnification, length and angle under the current filter settings
        let (interp, deconv) = split_occurrence(&best.stages);
        let filter = match deconv.last() {
            Some(&Stage::Deconvolve(s)) => s,
            _ => DeconvSettings::default(),
        };
        let mut candidates = Vec::new();
        for &gamma in gammas {
            for &length in &cfg.lengths {
                for &theta in &cfg.thetas {
                    let mut stages = interp.clone();
                    if gamma != 1.0 {
                        stages.push(Stage::magnify(gamma));
                    }
                    stages.push(Stage::deconvolve(DeconvSettings { length, theta, ..filter }));
                    candidates.push(stages);
                }
            }
        }
        if !deconv.is_empty() {
            candidates.insert(0, interp.clone());
        }
        let candidates: Vec<Vec<Stage>> = candidates.into_iter().filter(|c| *c != best.stages).collect();
        let scored = eval.score(base, candidates)?;
        // the best motion, even if it loses to the incumbent under the
        // current filter settings
        let challenger = scored
            .iter()
            .filter(|o| matches!(o.stages.last(), Some(Stage::Deconvolve(_))))
            .fold(None, |m: Option<&Outcome>, o| match m {
                Some(b) if b.objective.total <= o.objective.total => m,
                _ => Some(o),
            })
            .map(|o| o.stages.clone());
        best = Evaluator::pick(best, scored);

        // source, amount and noise for the chosen motion
        let motion_stages = match best.stages.last() {
            Some(Stage::Deconvolve(_)) => Some(best.stages.clone()),
            _ => challenger,
        };
        if let Some((&Stage::Deconvolve(motion), prefix)) = motion_stages.as_deref().and_then(|s| s.split_last()) {
            let mut candidates = Vec::new();
            for &source in &cfg.sources {
                for &amount in &cfg.amounts {
                    for &noise in &cfg.noises {
                        let s = DeconvSettings { source, amount, noise, ..motion };
                        candidates.push(join(prefix, &[Stage::deconvolve(s)]));
                    }
                }
            }
            best = eval.best(base, best, candidates)?;
        }

        if best.stages == before {
            break;
        }
    }
    Ok(best)
}

/// Runs the search. `progress` sees the state after the initial evaluation
/// and after every committed step.
pub fn optimize_with_progress(
    input: &BlockAverageImage,
    reference: &RasterImage,
    cfg: &SearchConfig,
    mut progress: impl FnMut(&SearchState),
) -> Result<SearchState> {
    cfg.validate()?;
    if reference.width() != input.orig_width()
        || reference.height() != input.orig_height()
        || reference.channels() != input.channels()
    {
        return Err(Error::ShapeMismatch(format!(
            "reference {}x{}x{} does not match input {}x{}x{}",
            reference.width(),
            reference.height(),
            reference.channels(),
            input.orig_width(),
            input.orig_height(),
            input.channels()
        )));
    }
    let step = input.step();
    let eval = Evaluator {
        reference,
        lambda: cfg.lambda,
        step,
    };
    let mut current = expand(input);
    let initial = objective(&current, reference, cfg.lambda)?;
    let mut state = SearchState {
        spec: PipelineSpec::new("search", Vec::new()),
        objective: initial,
        iteration: 0,
        trace: vec![row(0, &initial)],
    };
    progress(&state);

    while state.objective.total > cfg.threshold && state.iteration < cfg.max_occurrences {
        let before = state.objective.total;
        let occurrence = state.iteration + 1;
        let out = search_occurrence(&eval, cfg, &current, state.objective, occurrence)?;
        state.spec.stages.extend(out.stages);
        state.objective = out.objective;
        current = out.image;

        state.iteration = occurrence;
        state.trace.push(row(occurrence, &state.objective));
        progress(&state);

        let after = state.objective.total;
        let improved = if before.is_infinite() {
            after.is_finite()
        } else {
            before - after >= cfg.min_relative_improvement * before.abs()
        };
        if !improved {
            break;
        }
    }

    // closing smoothing: a final triple with presmooth and pixel-scale pass
    if state.objective.total > cfg.threshold {
        let mut candidates = Vec::new();
        for t in distinct_triples(&current, step, &cfg.thresholds)? {
            candidates.push(vec![
                level1_stage(step, t),
                level1_stage(step, ThresholdTriple::ALWAYS),
                Stage::level2(255, 255, 255),
            ]);
        }
        let incumbent = Outcome {
            stages: Vec::new(),
            image: current.clone(),
            objective: state.objective,
        };
        let out = eval.best(&current, incumbent, candidates)?;
        state.spec.stages.extend(out.stages);
        state.objective = out.objective;
    }
    state.trace.push(row(state.iteration + 1, &state.objective));
    progress(&state);
    state.spec.validate()?;
    Ok(state)
}

pub fn optimize(input: &BlockAverageImage, reference: &RasterImage, cfg: &SearchConfig) -> Result<SearchState> {
    optimize_with_progress(input, reference, cfg, |_| {})
}

fn row(iteration: usize, o: &ObjectiveBreakdown) -> TraceRow {
    TraceRow {
        iteration,
        fidelity: o.fidelity,
        regularizer: o.regularizer,
        total: o.total,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codec::compress;

    #[test]
    fn grid_always_reaches_255() {
        assert_eq!(threshold_grid(5).len(), 52);
        assert_eq!(*threshold_grid(5).last().unwrap(), 255);
        assert_eq!(threshold_grid(100), vec![0, 100, 200, 255]);
    }

    #[test]
    fn first_min_prefers_earliest() {
        assert_eq!(first_min(&[3.0, 1.0, 1.0, 2.0]), 1);
        assert_eq!(first_min(&[f64::INFINITY, f64::INFINITY]), 0);
        assert_eq!(first_min(&[1.0, f64::NAN, 0.5]), 2);
    }

    #[test]
    fn distinct_triples_collapse_equivalent_thresholds() {
        // two blocks differing by 10 in every direction that exists
        let b = BlockAverageImage::new(8, 4, 4, vec![vec![100, 110]]).unwrap();
        let img = expand(&b);
        let triples = distinct_triples(&img, 4, &threshold_grid(5)).unwrap();
        // only p2 matters (one right neighbour) and splits at 10
        assert_eq!(triples, vec![ThresholdTriple::new(0, 0, 0), ThresholdTriple::new(10, 0, 0)]);
    }

    #[test]
    fn reachable_reference_needs_no_stages() {
        let img = RasterImage::from_fn(16, 16, 1, |_, x, y| ((x / 4) * 40 + (y / 4) * 20) as u8).unwrap();
        let input = compress(&img, 4).unwrap();
        let reference = expand(&input);
        let state = optimize(&input, &reference, &SearchConfig { lambda: 0.0, ..SearchConfig::default() }).unwrap();
        assert!(state.spec.stages.is_empty());
        assert_eq!(state.objective.fidelity, 0.0);
    }

    #[test]
    fn rejects_mismatched_reference_and_empty_grids() {
        let input = compress(&RasterImage::filled(16, 16, 1, 3).unwrap(), 4).unwrap();
        let wrong = RasterImage::filled(8, 8, 1, 3).unwrap();
        assert!(optimize(&input, &wrong, &SearchConfig::default()).is_err());
        let cfg = SearchConfig { thetas: vec![], ..SearchConfig::default() };
        let right = RasterImage::filled(16, 16, 1, 3).unwrap();
        assert!(optimize(&input, &right, &cfg).is_err());
    }

    #[test]
    fn trace_csv_has_header() {
        let rows = [row(0, &ObjectiveBreakdown { fidelity: 4.0, regularizer: 0.5, regularizer_term: 0.05, total: 4.05 })];
        assert_eq!(trace_csv(&rows), "iteration,fidelity,R,total\n0,4,0.5,4.05\n");
    }
}
