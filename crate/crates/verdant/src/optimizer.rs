//! Constrained search for the accelerator design minimizing the
//! carbon-delay product (CDP).
//!
//! A design point is five discrete choices: PE count, grid aspect,
//! register-file scale, global-buffer scale, and multiplier variant. The
//! objective is `CDP = embodied carbon (g) x inference latency (s)`,
//! subject to a minimum frame rate and a maximum estimated accuracy drop.
//! Two engines share one evaluation context: a genetic algorithm for large
//! spaces and an exhaustive scan that doubles as its oracle on small ones.

use std::cell::RefCell;
use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::accuracy::{accuracy_drop, AccuracyModel};
use crate::approxmul::library::VariantRecord;
use crate::carbon::{embodied_carbon, TechNodeParams};
use crate::error::{BindingConstraint, Error, InfeasibilityReport, Result};
use crate::perf::{
    accelerator_area, aspect_pairs, workload_latency, AcceleratorConfig, AreaParams, LayerShape,
    PerfResult,
};
use crate::scalar::Scalar;

/// Carbon-delay product. Both factors must be finite and positive.
pub fn cdp<F: Scalar>(embodied_g: F, latency_s: F) -> Result<F> {
    if !embodied_g.is_finite() || embodied_g <= F::zero() {
        return Err(Error::InvalidArgument(format!(
            "embodied carbon must be finite and > 0, got {embodied_g}"
        )));
    }
    if !latency_s.is_finite() || latency_s <= F::zero() {
        return Err(Error::InvalidArgument(format!(
            "latency must be finite and > 0, got {latency_s}"
        )));
    }
    Ok(embodied_g * latency_s)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Constraints {
    /// Minimum frames per second (inferences per second).
    pub fps_min: f64,
    /// Maximum tolerated top-1 accuracy drop in percentage points.
    pub drop_max: f64,
}

impl Constraints {
    pub fn validate(&self) -> Result<()> {
        if !(self.fps_min.is_finite() && self.fps_min > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "fps_min must be finite and > 0, got {}",
                self.fps_min
            )));
        }
        if !(self.drop_max.is_finite() && self.drop_max >= 0.0) {
            return Err(Error::InvalidArgument(format!(
                "drop_max must be finite and >= 0, got {}",
                self.drop_max
            )));
        }
        Ok(())
    }
}

/// Discrete architecture axes explored by the optimizer.
#[derive(Debug, Clone, PartialEq)]
pub struct SearchSpace {
    pub pe_sizes: Vec<u64>,
    pub rf_scales: Vec<f64>,
    pub gbuf_scales: Vec<f64>,
    pub max_aspect_ratio: u64,
}

impl SearchSpace {
    pub fn validate(&self) -> Result<()> {
        if self.pe_sizes.is_empty() || self.rf_scales.is_empty() || self.gbuf_scales.is_empty() {
            return Err(Error::Config("search space has an empty axis".into()));
        }
        if self.max_aspect_ratio == 0 {
            return Err(Error::Config("max_aspect_ratio must be >= 1".into()));
        }
        for &pes in &self.pe_sizes {
            if pes == 0 {
                return Err(Error::Config("PE counts must be >= 1".into()));
            }
            if self.aspects(pes).is_empty() {
                return Err(Error::Config(format!(
                    "no grid of {pes} PEs satisfies aspect ratio <= {}",
                    self.max_aspect_ratio
                )));
            }
        }
        for &scale in self.rf_scales.iter().chain(&self.gbuf_scales) {
            if !(scale.is_finite() && scale > 0.0) {
                return Err(Error::Config(format!("memory scale {scale} must be > 0")));
            }
        }
        Ok(())
    }

    pub fn aspects(&self, pes: u64) -> Vec<(u32, u32)> {
        aspect_pairs(pes, self.max_aspect_ratio)
    }

    fn max_aspect_count(&self) -> usize {
        self.pe_sizes.iter().map(|&p| self.aspects(p).len()).max().unwrap_or(0)
    }

    /// Exact number of distinct design points.
    pub fn total_points(&self, n_variants: usize) -> u128 {
        let per_size: u128 = self.pe_sizes.iter().map(|&p| self.aspects(p).len() as u128).sum();
        per_size
            * self.rf_scales.len() as u128
            * self.gbuf_scales.len() as u128
            * n_variants as u128
    }
}

/// Baseline memory provisioning scaled by the search space's scale axes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AcceleratorBase {
    pub regfile_base_bytes_per_pe: u64,
    pub gbuf_base_bytes_per_pe: u64,
    pub dram_bw_bytes_per_cycle: u64,
    pub clock_hz: f64,
}

impl AcceleratorBase {
    pub fn validate(&self) -> Result<()> {
        if self.regfile_base_bytes_per_pe == 0 || self.gbuf_base_bytes_per_pe == 0 {
            return Err(Error::Config("base memory sizes must be >= 1 byte".into()));
        }
        if self.dram_bw_bytes_per_cycle == 0 {
            return Err(Error::Config("DRAM bandwidth must be >= 1 byte/cycle".into()));
        }
        if !(self.clock_hz.is_finite() && self.clock_hz > 0.0) {
            return Err(Error::Config("clock must be a positive frequency".into()));
        }
        Ok(())
    }
}

/// One design point. `aspect_idx` is interpreted modulo the actual aspect
/// count of the selected PE size (the aspect axis is ragged); all other
/// indices must be in range.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Chromosome {
    pub pe_size_idx: usize,
    pub aspect_idx: usize,
    pub rf_idx: usize,
    pub gbuf_idx: usize,
    pub variant_idx: usize,
}

impl Chromosome {
    fn genes(&self) -> [usize; 5] {
        [self.pe_size_idx, self.aspect_idx, self.rf_idx, self.gbuf_idx, self.variant_idx]
    }

    fn from_genes(g: [usize; 5]) -> Self {
        Chromosome {
            pe_size_idx: g[0],
            aspect_idx: g[1],
            rf_idx: g[2],
            gbuf_idx: g[3],
            variant_idx: g[4],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalResult {
    pub area_mm2: f64,
    pub embodied_g: f64,
    /// `None` when no layer tiling fits the memories.
    pub cycles: Option<u64>,
    pub latency_s: f64,
    pub fps: f64,
    pub drop_pct: f64,
    /// `+inf` sentinel for unmappable designs.
    pub cdp: f64,
    pub feasible: bool,
}

/// Memoized mapping results keyed by `(pe_width, pe_height, rf_bytes,
/// gbuf_bytes)`; `None` records an unmappable design. Never iterated, so a
/// hash map does not threaten determinism.
type PerfCache = RefCell<HashMap<(u32, u32, u64, u64), Option<PerfResult>>>;

pub struct EvalContext<'a> {
    pub workload: &'a [LayerShape],
    pub network: &'a str,
    pub tech: &'a TechNodeParams<f64>,
    pub area: &'a AreaParams,
    pub base: AcceleratorBase,
    pub variants: &'a [VariantRecord],
    pub accuracy: &'a AccuracyModel<f64>,
    pub constraints: Constraints,
    pub space: SearchSpace,
    perf_cache: PerfCache,
    eval_cache: RefCell<HashMap<Chromosome, EvalResult>>,
}

impl<'a> EvalContext<'a> {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        workload: &'a [LayerShape],
        network: &'a str,
        tech: &'a TechNodeParams<f64>,
        area: &'a AreaParams,
        base: AcceleratorBase,
        variants: &'a [VariantRecord],
        accuracy: &'a AccuracyModel<f64>,
        constraints: Constraints,
        space: SearchSpace,
    ) -> Result<Self> {
        if workload.is_empty() {
            return Err(Error::Config("workload has no layers".into()));
        }
        if variants.is_empty() {
            return Err(Error::Config("variant set is empty".into()));
        }
        tech.validate()?;
        area.validate()?;
        base.validate()?;
        accuracy.validate()?;
        constraints.validate()?;
        space.validate()?;
        Ok(EvalContext {
            workload,
            network,
            tech,
            area,
            base,
            variants,
            accuracy,
            constraints,
            space,
            perf_cache: RefCell::new(HashMap::new()),
            eval_cache: RefCell::new(HashMap::new()),
        })
    }

    /// Gene-ladder sizes: the exclusive upper bound of each gene.
    pub fn ladders(&self) -> [usize; 5] {
        [
            self.space.pe_sizes.len(),
            self.space.max_aspect_count(),
            self.space.rf_scales.len(),
            self.space.gbuf_scales.len(),
            self.variants.len(),
        ]
    }

    pub fn decode(&self, ch: &Chromosome) -> Result<(AcceleratorConfig, &'a VariantRecord)> {
        let ladders = self.ladders();
        for (gene, ladder) in ch.genes().iter().zip(ladders) {
            if *gene >= ladder {
                return Err(Error::InvalidArgument(format!(
                    "chromosome gene {gene} exceeds ladder {ladder}"
                )));
            }
        }
        let pes = self.space.pe_sizes[ch.pe_size_idx];
        let aspects = self.space.aspects(pes);
        let (pe_width, pe_height) = aspects[ch.aspect_idx % aspects.len()];
        let rf = scale_bytes(self.base.regfile_base_bytes_per_pe, self.space.rf_scales[ch.rf_idx]);
        let gbuf =
            scale_bytes(self.base.gbuf_base_bytes_per_pe * pes, self.space.gbuf_scales[ch.gbuf_idx]);
        let cfg = AcceleratorConfig {
            pe_width,
            pe_height,
            regfile_bytes_per_pe: rf,
            global_buffer_bytes: gbuf,
            dram_bw_bytes_per_cycle: self.base.dram_bw_bytes_per_cycle,
            clock_hz: self.base.clock_hz,
        };
        Ok((cfg, &self.variants[ch.variant_idx]))
    }

    pub fn evaluate(&self, ch: &Chromosome) -> Result<EvalResult> {
        if let Some(&hit) = self.eval_cache.borrow().get(ch) {
            return Ok(hit);
        }
        let (cfg, variant) = self.decode(ch)?;
        let area_mm2 = accelerator_area(&cfg, variant.area, self.area)?;
        let carbon = embodied_carbon(area_mm2, self.tech)?;
        let drop_pct = accuracy_drop(variant, self.network, self.accuracy)?;

        let perf_key =
            (cfg.pe_width, cfg.pe_height, cfg.regfile_bytes_per_pe, cfg.global_buffer_bytes);
        let cached = self.perf_cache.borrow().get(&perf_key).copied();
        let perf = match cached {
            Some(p) => p,
            None => {
                let computed = match workload_latency(self.workload, &cfg) {
                    Ok(p) => Some(p),
                    Err(Error::InfeasibleMapping(_)) => None,
                    Err(e) => return Err(e),
                };
                self.perf_cache.borrow_mut().insert(perf_key, computed);
                computed
            }
        };

        let result = match perf {
            Some(perf) => {
                let cdp_value = cdp(carbon.embodied, perf.latency_s)?;
                let feasible =
                    perf.fps >= self.constraints.fps_min && drop_pct <= self.constraints.drop_max;
                EvalResult {
                    area_mm2,
                    embodied_g: carbon.embodied,
                    cycles: Some(perf.cycles),
                    latency_s: perf.latency_s,
                    fps: perf.fps,
                    drop_pct,
                    cdp: cdp_value,
                    feasible,
                }
            }
            None => EvalResult {
                area_mm2,
                embodied_g: carbon.embodied,
                cycles: None,
                latency_s: f64::INFINITY,
                fps: 0.0,
                drop_pct,
                cdp: f64::INFINITY,
                feasible: false,
            },
        };
        self.eval_cache.borrow_mut().insert(*ch, result);
        Ok(result)
    }

    /// Baseline chromosome for one PE size: squarest grid, unit memory
    /// scales, exact multiplier.
    pub fn baseline(&self, pe_size_idx: usize) -> Result<Chromosome> {
        if pe_size_idx >= self.space.pe_sizes.len() {
            return Err(Error::InvalidArgument(format!("no PE size at index {pe_size_idx}")));
        }
        let aspects = self.space.aspects(self.space.pe_sizes[pe_size_idx]);
        let exact_idx = self
            .variants
            .iter()
            .position(|v| v.is_exact())
            .ok_or_else(|| Error::Config("variant set has no exact multiplier".into()))?;
        Ok(Chromosome {
            pe_size_idx,
            aspect_idx: (aspects.len() - 1) / 2,
            rf_idx: nearest_unit_scale(&self.space.rf_scales),
            gbuf_idx: nearest_unit_scale(&self.space.gbuf_scales),
            variant_idx: exact_idx,
        })
    }
}

fn scale_bytes(base: u64, scale: f64) -> u64 {
    ((base as f64 * scale).round() as u64).max(1)
}

fn nearest_unit_scale(scales: &[f64]) -> usize {
    let mut best = 0;
    for (i, &s) in scales.iter().enumerate() {
        if (s - 1.0).abs() < (scales[best] - 1.0).abs() {
            best = i;
        }
    }
    best
}

/// Strict weak order over search results: feasibility first, then lower
/// CDP, then lexicographically smaller chromosome.
fn better(a: &(Chromosome, EvalResult), b: &(Chromosome, EvalResult)) -> bool {
    match (a.1.feasible, b.1.feasible) {
        (true, false) => return true,
        (false, true) => return false,
        _ => {}
    }
    match a.1.cdp.total_cmp(&b.1.cdp) {
        std::cmp::Ordering::Less => true,
        std::cmp::Ordering::Greater => false,
        std::cmp::Ordering::Equal => a.0 < b.0,
    }
}

/// Accumulates evidence for infeasibility diagnostics.
struct SearchStats {
    evaluated: usize,
    best_fps: f64,
    min_drop: f64,
}

impl SearchStats {
    fn new() -> Self {
        SearchStats { evaluated: 0, best_fps: 0.0, min_drop: f64::INFINITY }
    }

    fn observe(&mut self, ev: &EvalResult) {
        self.evaluated += 1;
        self.best_fps = self.best_fps.max(ev.fps);
        self.min_drop = self.min_drop.min(ev.drop_pct);
    }

    fn infeasibility(&self, c: &Constraints) -> InfeasibilityReport {
        let binding = if self.best_fps == 0.0 {
            BindingConstraint::Mapping
        } else {
            let fps_reachable = self.best_fps >= c.fps_min;
            let drop_reachable = self.min_drop <= c.drop_max;
            match (fps_reachable, drop_reachable) {
                (false, false) => BindingConstraint::Both,
                (false, true) => BindingConstraint::FpsMin,
                (true, false) => BindingConstraint::DropMax,
                (true, true) => BindingConstraint::Joint,
            }
        };
        InfeasibilityReport {
            evaluated: self.evaluated,
            best_fps_seen: self.best_fps,
            min_drop_seen: self.min_drop,
            binding,
        }
    }
}

#[derive(Debug, Clone)]
pub struct GaParams {
    pub population: usize,
    pub generations: usize,
    pub tournament_k: usize,
    pub crossover_p: f64,
    /// Per-gene mutation probability; `None` selects `1 / n_genes`.
    pub mutation_p: Option<f64>,
    pub elitism: usize,
    pub seed: u64,
}

impl Default for GaParams {
    fn default() -> Self {
        GaParams {
            population: 48,
            generations: 40,
            tournament_k: 3,
            crossover_p: 0.9,
            mutation_p: None,
            elitism: 2,
            seed: 0,
        }
    }
}

impl GaParams {
    fn validate(&self) -> Result<()> {
        if self.population < 2 {
            return Err(Error::InvalidArgument("population must be >= 2".into()));
        }
        if self.generations == 0 {
            return Err(Error::InvalidArgument("generations must be >= 1".into()));
        }
        if self.tournament_k == 0 {
            return Err(Error::InvalidArgument("tournament size must be >= 1".into()));
        }
        if self.elitism >= self.population {
            return Err(Error::InvalidArgument("elitism must be < population".into()));
        }
        if !(0.0..=1.0).contains(&self.crossover_p) {
            return Err(Error::InvalidArgument("crossover probability out of [0, 1]".into()));
        }
        if let Some(pm) = self.mutation_p {
            if !(0.0..=1.0).contains(&pm) {
                return Err(Error::InvalidArgument("mutation probability out of [0, 1]".into()));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct OptimizeOutcome {
    pub best: (Chromosome, EvalResult),
    /// Best feasible CDP in the population after each evaluated generation
    /// (index 0 = initial population); `+inf` until the first feasible
    /// individual appears. Non-increasing under elitism.
    pub history: Vec<f64>,
    pub evaluated: usize,
}

/// Genetic search. Initial population: one baseline per PE size (squarest
/// grid, unit scales, exact multiplier), then random chromosomes. Returns
/// the best feasible design ever evaluated, or an `Infeasible` report.
pub fn optimize(ctx: &EvalContext, params: &GaParams) -> Result<OptimizeOutcome> {
    params.validate()?;
    let ladders = ctx.ladders();
    let n_genes = ladders.len();
    let pm = params.mutation_p.unwrap_or(1.0 / n_genes as f64);
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut stats = SearchStats::new();

    let random_chromosome = |rng: &mut ChaCha8Rng| {
        let mut genes = [0usize; 5];
        for (gene, &ladder) in genes.iter_mut().zip(&ladders) {
            *gene = rng.random_range(0..ladder);
        }
        Chromosome::from_genes(genes)
    };

    let mut pop: Vec<Chromosome> = Vec::with_capacity(params.population);
    for i in 0..ctx.space.pe_sizes.len() {
        if pop.len() < params.population {
            pop.push(ctx.baseline(i)?);
        }
    }
    while pop.len() < params.population {
        pop.push(random_chromosome(&mut rng));
    }

    let mut evals: Vec<EvalResult> = Vec::with_capacity(pop.len());
    for ch in &pop {
        let ev = ctx.evaluate(ch)?;
        stats.observe(&ev);
        evals.push(ev);
    }

    let mut best: Option<(Chromosome, EvalResult)> = None;
    let mut history = Vec::with_capacity(params.generations);
    let note_generation =
        |pop: &[Chromosome], evals: &[EvalResult], best: &mut Option<(Chromosome, EvalResult)>| {
            let mut gen_best = f64::INFINITY;
            for (ch, ev) in pop.iter().zip(evals) {
                if ev.feasible {
                    gen_best = gen_best.min(ev.cdp);
                    let cand = (*ch, *ev);
                    if best.as_ref().is_none_or(|b| better(&cand, b)) {
                        *best = Some(cand);
                    }
                }
            }
            gen_best
        };
    history.push(note_generation(&pop, &evals, &mut best));

    for _gen in 1..params.generations {
        let mut order: Vec<usize> = (0..pop.len()).collect();
        order.sort_by(|&a, &b| {
            if better(&(pop[a], evals[a]), &(pop[b], evals[b])) {
                std::cmp::Ordering::Less
            } else if better(&(pop[b], evals[b]), &(pop[a], evals[a])) {
                std::cmp::Ordering::Greater
            } else {
                std::cmp::Ordering::Equal
            }
        });

        let tournament = |rng: &mut ChaCha8Rng| -> usize {
            let mut winner = rng.random_range(0..pop.len());
            for _ in 1..params.tournament_k {
                let challenger = rng.random_range(0..pop.len());
                if better(&(pop[challenger], evals[challenger]), &(pop[winner], evals[winner])) {
                    winner = challenger;
                }
            }
            winner
        };

        let mut next: Vec<Chromosome> =
            order.iter().take(params.elitism).map(|&i| pop[i]).collect();
        while next.len() < params.population {
            let p1 = tournament(&mut rng);
            let p2 = tournament(&mut rng);
            let mut genes = pop[p1].genes();
            if rng.random::<f64>() < params.crossover_p {
                let other = pop[p2].genes();
                for (gene, theirs) in genes.iter_mut().zip(other) {
                    if rng.random::<bool>() {
                        *gene = theirs;
                    }
                }
            }
            for (gene, &ladder) in genes.iter_mut().zip(&ladders) {
                if rng.random::<f64>() < pm {
                    *gene = rng.random_range(0..ladder);
                }
            }
            next.push(Chromosome::from_genes(genes));
        }

        pop = next;
        evals.clear();
        for ch in &pop {
            let ev = ctx.evaluate(ch)?;
            stats.observe(&ev);
            evals.push(ev);
        }
        history.push(note_generation(&pop, &evals, &mut best));
    }

    match best {
        Some(best) => Ok(OptimizeOutcome { best, history, evaluated: stats.evaluated }),
        None => Err(Error::Infeasible(stats.infeasibility(&ctx.constraints))),
    }
}

/// Default evaluation budget for `exhaustive_search`.
pub const EXHAUSTIVE_BUDGET: u128 = 100_000;

/// Scans every design point in deterministic lexicographic order. Errors
/// with `Budget` when the space exceeds `budget` points.
pub fn exhaustive_search(
    ctx: &EvalContext,
    budget: u128,
) -> Result<(Chromosome, EvalResult)> {
    let total = ctx.space.total_points(ctx.variants.len());
    if total > budget {
        return Err(Error::Budget(format!(
            "search space has {total} points, exceeding the exhaustive budget of {budget}"
        )));
    }
    let mut stats = SearchStats::new();
    let mut best: Option<(Chromosome, EvalResult)> = None;
    for pe_size_idx in 0..ctx.space.pe_sizes.len() {
        let n_aspects = ctx.space.aspects(ctx.space.pe_sizes[pe_size_idx]).len();
        for aspect_idx in 0..n_aspects {
            for rf_idx in 0..ctx.space.rf_scales.len() {
                for gbuf_idx in 0..ctx.space.gbuf_scales.len() {
                    for variant_idx in 0..ctx.variants.len() {
                        let ch = Chromosome {
                            pe_size_idx,
                            aspect_idx,
                            rf_idx,
                            gbuf_idx,
                            variant_idx,
                        };
                        let ev = ctx.evaluate(&ch)?;
                        stats.observe(&ev);
                        if ev.feasible {
                            let cand = (ch, ev);
                            if best.as_ref().is_none_or(|b| better(&cand, b)) {
                                best = Some(cand);
                            }
                        }
                    }
                }
            }
        }
    }
    best.ok_or_else(|| Error::Infeasible(stats.infeasibility(&ctx.constraints)))
}
