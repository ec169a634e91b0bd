//! NSGA-II search over pruning and precision-scaling choices, minimizing
//! (multiplier area, MRED) simultaneously.
//!
//! A genome carries one ternary gene per base gate (keep / tie-0 / tie-1)
//! plus one precision-scale gene. Decoding applies `prune` first and
//! `precision_scale` on the result. Evaluation is memoized because converged
//! populations re-propose the same genomes constantly, and every evaluation
//! is an exhaustive characterization.

use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::approxmul::metrics::{error_metrics, ErrorMetrics};
use crate::approxmul::netlist::{GateAreaTable, NetId, Netlist};
use crate::approxmul::transform::{precision_scale, prune, Cut};
use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct SearchParams {
    pub population: usize,
    pub generations: usize,
    pub crossover_p: f64,
    /// Per-gene mutation probability; `None` selects `2 / genome_len`.
    pub mutation_p: Option<f64>,
    pub seed: u64,
}

impl Default for SearchParams {
    fn default() -> Self {
        SearchParams {
            population: 64,
            generations: 50,
            crossover_p: 0.9,
            mutation_p: None,
            seed: 0,
        }
    }
}

/// How a variant was derived from the exact base multiplier.
#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct Provenance {
    /// (base gate id, tied value) pairs, ascending by gate id.
    pub cuts: Vec<(NetId, bool)>,
    pub precision_scale_k: u32,
}

impl Provenance {
    pub fn exact() -> Self {
        Provenance { cuts: Vec::new(), precision_scale_k: 0 }
    }
}

#[derive(Debug, Clone)]
pub struct MultiplierVariant {
    pub netlist: Netlist,
    pub area: f64,
    pub error: ErrorMetrics,
    pub provenance: Provenance,
}

impl MultiplierVariant {
    pub fn is_exact(&self) -> bool {
        self.error.is_exact()
    }
}

/// Gene values: 0 keep, 1 tie to 0, 2 tie to 1. Last slot is the scale k.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
struct Genome {
    cuts: Vec<u8>,
    k: u8,
}

impl Genome {
    fn exact(n_gates: usize) -> Self {
        Genome { cuts: vec![0; n_gates], k: 0 }
    }

    fn to_provenance(&self, gate_ids: &[NetId]) -> Provenance {
        let cuts = self
            .cuts
            .iter()
            .zip(gate_ids)
            .filter(|(&gene, _)| gene != 0)
            .map(|(&gene, &id)| (id, gene == 2))
            .collect();
        Provenance { cuts, precision_scale_k: self.k as u32 }
    }
}

struct Evaluator<'a> {
    base: &'a Netlist,
    gate_ids: Vec<NetId>,
    table: &'a GateAreaTable,
    cache: HashMap<Genome, (f64, ErrorMetrics)>,
}

impl<'a> Evaluator<'a> {
    fn new(base: &'a Netlist, table: &'a GateAreaTable) -> Self {
        let gate_ids = base.gates().iter().map(|g| g.id).collect();
        Evaluator { base, gate_ids, table, cache: HashMap::new() }
    }

    fn decode(&self, genome: &Genome) -> Result<Netlist> {
        let cuts: Vec<Cut> = genome
            .cuts
            .iter()
            .zip(&self.gate_ids)
            .filter(|(&gene, _)| gene != 0)
            .map(|(&gene, &gate_id)| Cut { gate_id, value: gene == 2 })
            .collect();
        let pruned = prune(self.base, &cuts)?;
        precision_scale(&pruned, genome.k as u32)
    }

    fn eval(&mut self, genome: &Genome) -> Result<(f64, ErrorMetrics)> {
        if let Some(&hit) = self.cache.get(genome) {
            return Ok(hit);
        }
        let netlist = self.decode(genome)?;
        let area = netlist.area(self.table);
        let metrics = error_metrics(&netlist)?;
        self.cache.insert(genome.clone(), (area, metrics));
        Ok((area, metrics))
    }
}

/// `a` dominates `b` when it is no worse in both objectives and strictly
/// better in at least one.
fn dominates(a: (f64, f64), b: (f64, f64)) -> bool {
    a.0 <= b.0 && a.1 <= b.1 && (a.0 < b.0 || a.1 < b.1)
}

/// Fast non-dominated sort; returns per-individual front rank (0 = Pareto).
fn front_ranks(objs: &[(f64, f64)]) -> Vec<usize> {
    let n = objs.len();
    let mut dominated_by = vec![0usize; n];
    let mut dominates_list: Vec<Vec<usize>> = vec![Vec::new(); n];
    for i in 0..n {
        for j in (i + 1)..n {
            if dominates(objs[i], objs[j]) {
                dominates_list[i].push(j);
                dominated_by[j] += 1;
            } else if dominates(objs[j], objs[i]) {
                dominates_list[j].push(i);
                dominated_by[i] += 1;
            }
        }
    }
    let mut rank = vec![0usize; n];
    let mut current: Vec<usize> = (0..n).filter(|&i| dominated_by[i] == 0).collect();
    let mut level = 0;
    while !current.is_empty() {
        let mut next = Vec::new();
        for &i in &current {
            rank[i] = level;
            for &j in &dominates_list[i] {
                dominated_by[j] -= 1;
                if dominated_by[j] == 0 {
                    next.push(j);
                }
            }
        }
        current = next;
        level += 1;
    }
    rank
}

/// Crowding distance within one front (indices into `objs`).
fn crowding(objs: &[(f64, f64)], front: &[usize]) -> HashMap<usize, f64> {
    let mut dist: HashMap<usize, f64> = front.iter().map(|&i| (i, 0.0)).collect();
    if front.len() <= 2 {
        for d in dist.values_mut() {
            *d = f64::INFINITY;
        }
        return dist;
    }
    for obj in 0..2 {
        let get = |i: usize| if obj == 0 { objs[i].0 } else { objs[i].1 };
        let mut sorted: Vec<usize> = front.to_vec();
        sorted.sort_by(|&a, &b| get(a).total_cmp(&get(b)).then(a.cmp(&b)));
        let lo = get(sorted[0]);
        let hi = get(*sorted.last().unwrap());
        *dist.get_mut(&sorted[0]).unwrap() = f64::INFINITY;
        *dist.get_mut(sorted.last().unwrap()).unwrap() = f64::INFINITY;
        if hi > lo {
            for w in sorted.windows(3) {
                let d = (get(w[2]) - get(w[0])) / (hi - lo);
                *dist.get_mut(&w[1]).unwrap() += d;
            }
        }
    }
    dist
}

/// Multi-objective search for approximate multiplier variants. Returns the
/// final non-dominated front, deduplicated by objective values, always
/// containing the exact multiplier, sorted by descending area.
pub fn pareto_search(
    base: &Netlist,
    table: &GateAreaTable,
    params: &SearchParams,
) -> Result<Vec<MultiplierVariant>> {
    if params.population < 2 {
        return Err(Error::InvalidArgument(format!(
            "population must be >= 2, got {}",
            params.population
        )));
    }
    if params.generations == 0 {
        return Err(Error::InvalidArgument("generations must be >= 1".into()));
    }
    if !(0.0..=1.0).contains(&params.crossover_p) {
        return Err(Error::InvalidArgument(format!(
            "crossover probability must be in [0, 1], got {}",
            params.crossover_p
        )));
    }
    let base_metrics = error_metrics(base)?;
    if !base_metrics.is_exact() {
        return Err(Error::InvalidArgument(
            "search base netlist must implement the exact product".into(),
        ));
    }

    let mut evaluator = Evaluator::new(base, table);
    let n_genes = base.gates().len() + 1;
    let width = base.bitwidth() as u8;
    let pm = params.mutation_p.unwrap_or(2.0 / n_genes as f64);
    if !(0.0..=1.0).contains(&pm) {
        return Err(Error::InvalidArgument(format!("mutation probability {pm} out of range")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);

    // Seed: the exact design, each pure precision-scale step, random rest.
    let mut pop: Vec<Genome> = Vec::with_capacity(params.population);
    pop.push(Genome::exact(base.gates().len()));
    for k in 1..=width {
        if pop.len() < params.population {
            pop.push(Genome { cuts: vec![0; base.gates().len()], k });
        }
    }
    while pop.len() < params.population {
        let cuts = (0..base.gates().len())
            .map(|_| {
                // Mostly-keep initialization: dense random cutting is
                // almost always far off the front.
                if rng.random::<f64>() < 0.05 {
                    rng.random_range(1..=2u8)
                } else {
                    0
                }
            })
            .collect();
        let k = rng.random_range(0..=width / 2);
        pop.push(Genome { cuts, k });
    }

    let mut objs: Vec<(f64, f64)> = Vec::with_capacity(pop.len());
    for genome in &pop {
        let (area, m) = evaluator.eval(genome)?;
        objs.push((area, m.mred));
    }

    for _gen in 1..params.generations {
        let ranks = front_ranks(&objs);
        let mut fronts: HashMap<usize, Vec<usize>> = HashMap::new();
        for (i, &r) in ranks.iter().enumerate() {
            fronts.entry(r).or_default().push(i);
        }
        let mut crowd = vec![0.0f64; pop.len()];
        for front in fronts.values() {
            for (&i, &d) in crowding(&objs, front).iter() {
                crowd[i] = d;
            }
        }

        let tournament = |rng: &mut ChaCha8Rng| -> usize {
            let i = rng.random_range(0..pop.len());
            let j = rng.random_range(0..pop.len());
            let key = |x: usize| (ranks[x], std::cmp::Reverse(TotalF64(crowd[x])));
            if key(i) <= key(j) {
                i
            } else {
                j
            }
        };

        let mut offspring: Vec<Genome> = Vec::with_capacity(params.population);
        while offspring.len() < params.population {
            let p1 = tournament(&mut rng);
            let p2 = tournament(&mut rng);
            let mut child = pop[p1].clone();
            if rng.random::<f64>() < params.crossover_p {
                for (gene, other) in child.cuts.iter_mut().zip(&pop[p2].cuts) {
                    if rng.random::<bool>() {
                        *gene = *other;
                    }
                }
                if rng.random::<bool>() {
                    child.k = pop[p2].k;
                }
            }
            for gene in child.cuts.iter_mut() {
                if rng.random::<f64>() < pm {
                    *gene = rng.random_range(0..=2u8);
                }
            }
            if rng.random::<f64>() < pm {
                child.k = rng.random_range(0..=width);
            }
            offspring.push(child);
        }

        // Environmental selection over parents and offspring.
        let mut union = pop.clone();
        union.extend(offspring);
        let mut union_objs = objs.clone();
        for genome in &union[objs.len()..] {
            let (area, m) = evaluator.eval(genome)?;
            union_objs.push((area, m.mred));
        }
        let union_ranks = front_ranks(&union_objs);
        let mut by_front: HashMap<usize, Vec<usize>> = HashMap::new();
        for (i, &r) in union_ranks.iter().enumerate() {
            by_front.entry(r).or_default().push(i);
        }
        let mut selected: Vec<usize> = Vec::with_capacity(params.population);
        let mut level = 0;
        while selected.len() < params.population {
            let front = by_front.get(&level).cloned().unwrap_or_default();
            level += 1;
            if front.is_empty() {
                continue;
            }
            if selected.len() + front.len() <= params.population {
                selected.extend(front);
            } else {
                let crowd = crowding(&union_objs, &front);
                let mut rest = front;
                rest.sort_by(|&a, &b| {
                    TotalF64(crowd[&b]).cmp(&TotalF64(crowd[&a])).then(a.cmp(&b))
                });
                rest.truncate(params.population - selected.len());
                selected.extend(rest);
            }
        }
        pop = selected.iter().map(|&i| union[i].clone()).collect();
        objs = selected.iter().map(|&i| union_objs[i]).collect();
    }

    // Extract the final Pareto front, dropping duplicate objective points.
    let ranks = front_ranks(&objs);
    let mut picks: Vec<usize> = (0..pop.len()).filter(|&i| ranks[i] == 0).collect();
    picks.sort_by(|&a, &b| {
        objs[a]
            .0
            .total_cmp(&objs[b].0)
            .then(objs[a].1.total_cmp(&objs[b].1))
            .then(pop[a].cuts.cmp(&pop[b].cuts))
            .then(pop[a].k.cmp(&pop[b].k))
    });
    picks.dedup_by(|&mut a, &mut b| objs[a] == objs[b]);

    let mut genomes: Vec<Genome> = picks.into_iter().map(|i| pop[i].clone()).collect();
    if !genomes.iter().any(|g| {
        let (_, m) = evaluator.cache[g];
        m.is_exact()
    }) {
        genomes.push(Genome::exact(base.gates().len()));
    }

    let mut variants = Vec::with_capacity(genomes.len());
    for genome in &genomes {
        let netlist = evaluator.decode(genome)?;
        let (area, error) = evaluator.eval(genome)?;
        variants.push(MultiplierVariant {
            netlist,
            area,
            error,
            provenance: genome.to_provenance(&evaluator.gate_ids),
        });
    }
    variants.sort_by(|a, b| {
        b.area
            .total_cmp(&a.area)
            .then(a.error.mred.total_cmp(&b.error.mred))
    });
    Ok(variants)
}

/// Total-order wrapper so f64 keys can participate in `Ord` comparisons.
#[derive(Debug, Clone, Copy, PartialEq)]
struct TotalF64(f64);

impl Eq for TotalF64 {}

impl PartialOrd for TotalF64 {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for TotalF64 {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.0.total_cmp(&other.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::approxmul::netlist::build_exact_multiplier;

    fn quick_params(seed: u64) -> SearchParams {
        SearchParams { population: 16, generations: 8, crossover_p: 0.9, mutation_p: None, seed }
    }

    #[test]
    fn front_is_mutually_non_dominated_and_contains_exact() {
        let base = build_exact_multiplier(6).unwrap();
        let table = GateAreaTable::default();
        let front = pareto_search(&base, &table, &quick_params(7)).unwrap();
        assert!(front.iter().any(|v| v.is_exact()));
        for (i, a) in front.iter().enumerate() {
            assert!(a.area >= 0.0 && a.error.mred >= 0.0);
            for (j, b) in front.iter().enumerate() {
                if i != j {
                    assert!(
                        !dominates((a.area, a.error.mred), (b.area, b.error.mred)),
                        "variant {i} dominates {j}"
                    );
                }
            }
        }
    }

    #[test]
    fn front_is_sorted_by_descending_area() {
        let base = build_exact_multiplier(6).unwrap();
        let table = GateAreaTable::default();
        let front = pareto_search(&base, &table, &quick_params(3)).unwrap();
        for w in front.windows(2) {
            assert!(w[0].area >= w[1].area);
        }
        // Exact variant is the largest: anything cheaper must err.
        assert!(front[0].is_exact());
    }

    #[test]
    fn same_seed_reproduces_front_exactly() {
        let base = build_exact_multiplier(6).unwrap();
        let table = GateAreaTable::default();
        let a = pareto_search(&base, &table, &quick_params(11)).unwrap();
        let b = pareto_search(&base, &table, &quick_params(11)).unwrap();
        assert_eq!(a.len(), b.len());
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(x.area.to_bits(), y.area.to_bits());
            assert_eq!(x.error.mred.to_bits(), y.error.mred.to_bits());
            assert_eq!(x.provenance, y.provenance);
        }
    }

    #[test]
    fn trivial_budget_with_exact_only_population() {
        // One generation, population of two (exact + one k-seed): the front
        // must still include the exact design with zero error.
        let base = build_exact_multiplier(4).unwrap();
        let table = GateAreaTable::default();
        let params = SearchParams {
            population: 2,
            generations: 1,
            crossover_p: 0.9,
            mutation_p: Some(0.0),
            seed: 0,
        };
        let front = pareto_search(&base, &table, &params).unwrap();
        assert!(front.iter().any(|v| v.is_exact()));
        let exact = front.iter().find(|v| v.is_exact()).unwrap();
        assert_eq!(exact.area, base.area(&table));
    }

    #[test]
    fn rejects_inexact_base() {
        let base = build_exact_multiplier(4).unwrap();
        let broken = crate::approxmul::transform::precision_scale(&base, 2).unwrap();
        let table = GateAreaTable::default();
        assert!(pareto_search(&broken, &table, &quick_params(0)).is_err());
    }

    #[test]
    fn provenance_replays_to_same_variant() {
        let base = build_exact_multiplier(6).unwrap();
        let table = GateAreaTable::default();
        let front = pareto_search(&base, &table, &quick_params(5)).unwrap();
        for variant in &front {
            let cuts: Vec<Cut> = variant
                .provenance
                .cuts
                .iter()
                .map(|&(gate_id, value)| Cut { gate_id, value })
                .collect();
            let replay = precision_scale(
                &prune(&base, &cuts).unwrap(),
                variant.provenance.precision_scale_k,
            )
            .unwrap();
            assert_eq!(replay, variant.netlist);
        }
    }
}
