//! Stratified budgets and per-cell subset selection.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BinaryHeap, HashSet};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::backends::cosine;
use crate::corpus::{ClaimRecord, Label};
use crate::par;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SelectError {
    #[error("budget {total} exceeds pool size {pool}")]
    BudgetExceedsPool { total: usize, pool: usize },
    #[error("budget must be at least 2, got {0}")]
    BudgetTooSmall(usize),
    #[error("record {0} has no label")]
    Unlabeled(String),
    #[error("k = {k} exceeds cell size {n}")]
    KExceedsCell { k: usize, n: usize },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CellBudget {
    pub label: Label,
    pub source: String,
    pub population: usize,
    pub budget: usize,
}

/// Per-(label, source) quotas, ordered by label then source name.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SelectionBudget {
    pub total: usize,
    pub cells: Vec<CellBudget>,
}

impl SelectionBudget {
    pub fn label_total(&self, label: Label) -> usize {
        self.cells.iter().filter(|c| c.label == label).map(|c| c.budget).sum()
    }

    pub fn get(&self, label: Label, source: &str) -> Option<usize> {
        self.cells
            .iter()
            .find(|c| c.label == label && c.source == source)
            .map(|c| c.budget)
    }
}

/// Splits `budget` over cells in proportion to `weights`, never exceeding a
/// cell's population. Caps are water-filled; the rounding residue goes to the
/// largest fractional parts, ties to the earlier cell.
pub fn proportional_split(budget: usize, weights: &[f64], populations: &[usize]) -> Vec<usize> {
    let n = weights.len();
    let mut out = vec![0usize; n];
    let mut capped = vec![false; n];
    let mut remaining = budget.min(populations.iter().sum());
    loop {
        let w: f64 = (0..n).filter(|&i| !capped[i]).map(|i| weights[i]).sum();
        if w <= 0.0 {
            break;
        }
        let mut newly = false;
        for i in 0..n {
            if !capped[i] && remaining as f64 * weights[i] / w >= populations[i] as f64 {
                capped[i] = true;
                out[i] = populations[i];
                remaining -= populations[i];
                newly = true;
            }
        }
        if newly {
            continue;
        }
        let quotas: Vec<f64> = (0..n)
            .map(|i| {
                if capped[i] {
                    0.0
                } else {
                    remaining as f64 * weights[i] / w
                }
            })
            .collect();
        let mut given = 0;
        for i in (0..n).filter(|&i| !capped[i]) {
            out[i] = quotas[i].floor() as usize;
            given += out[i];
        }
        let mut order: Vec<usize> = (0..n).filter(|&i| !capped[i]).collect();
        order.sort_by(|&a, &b| {
            let fa = quotas[a] - quotas[a].floor();
            let fb = quotas[b] - quotas[b].floor();
            fb.total_cmp(&fa).then(a.cmp(&b))
        });
        for &i in order.iter().take(remaining - given) {
            out[i] += 1;
        }
        break;
    }
    out
}

/// Halves the total by label (Supported takes the odd unit), then splits each
/// half over sources in proportion to the square root of the cell size.
/// A half larger than its label's population spills into the other half.
pub fn allocate_budgets(pool: &[ClaimRecord], total: usize) -> Result<SelectionBudget, SelectError> {
    if total < 2 {
        return Err(SelectError::BudgetTooSmall(total));
    }
    if total > pool.len() {
        return Err(SelectError::BudgetExceedsPool {
            total,
            pool: pool.len(),
        });
    }
    let mut cells: BTreeMap<(Label, &str), usize> = BTreeMap::new();
    for r in pool {
        let label = r.label.ok_or_else(|| SelectError::Unlabeled(r.id.clone()))?;
        *cells.entry((label, r.source.as_str())).or_default() += 1;
    }
    let label_pop = |l: Label| {
        cells
            .iter()
            .filter(|((k, _), _)| *k == l)
            .map(|(_, n)| *n)
            .sum::<usize>()
    };
    let (pop_s, pop_r) = (label_pop(Label::Supported), label_pop(Label::Refuted));
    let mut half_s = total.div_ceil(2);
    let mut half_r = total / 2;
    if half_s > pop_s {
        half_r += half_s - pop_s;
        half_s = pop_s;
    } else if half_r > pop_r {
        half_s += half_r - pop_r;
        half_r = pop_r;
    }

    let mut out = Vec::new();
    for (label, half) in [(Label::Supported, half_s), (Label::Refuted, half_r)] {
        let members: Vec<(&str, usize)> = cells
            .iter()
            .filter(|((l, _), _)| *l == label)
            .map(|((_, s), n)| (*s, *n))
            .collect();
        let weights: Vec<f64> = members.iter().map(|(_, n)| (*n as f64).sqrt()).collect();
        let pops: Vec<usize> = members.iter().map(|(_, n)| *n).collect();
        let split = proportional_split(half, &weights, &pops);
        for ((source, population), budget) in members.into_iter().zip(split) {
            out.push(CellBudget {
                label,
                source: source.to_string(),
                population,
                budget,
            });
        }
    }
    Ok(SelectionBudget { total, cells: out })
}

/// Pairwise cosine matrix over unit vectors.
pub fn similarity_matrix(vectors: &[&[f64]]) -> Vec<Vec<f64>> {
    par::map_indexed(vectors.len(), |i| {
        vectors.iter().map(|v| cosine(vectors[i], v)).collect()
    })
}

/// f(S) = Σ_i max(0, max_{j∈S} sim[i][j]).
pub fn facility_value(sim: &[Vec<f64>], selected: &[usize]) -> f64 {
    sim.iter()
        .map(|row| selected.iter().map(|&j| row[j]).fold(0.0, f64::max))
        .sum()
}

fn gain(sim: &[Vec<f64>], cover: &[f64], j: usize) -> f64 {
    sim.iter().zip(cover).map(|(row, c)| (row[j] - c).max(0.0)).sum()
}

fn absorb(sim: &[Vec<f64>], cover: &mut [f64], j: usize) {
    for (row, c) in sim.iter().zip(cover.iter_mut()) {
        if row[j] > *c {
            *c = row[j];
        }
    }
}

/// Rank of each element under the tie rule (ascending id).
fn id_ranks(ids: &[&str]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..ids.len()).collect();
    order.sort_by(|&a, &b| ids[a].cmp(ids[b]).then(a.cmp(&b)));
    let mut rank = vec![0; ids.len()];
    for (r, i) in order.into_iter().enumerate() {
        rank[i] = r;
    }
    rank
}

fn check_k(k: usize, n: usize) -> Result<(), SelectError> {
    if k > n {
        Err(SelectError::KExceedsCell { k, n })
    } else {
        Ok(())
    }
}

/// Plain greedy: every round rescans every candidate. Equal gains go to the
/// lowest id. Returns indices in selection order.
pub fn facility_location_naive(sim: &[Vec<f64>], ids: &[&str], k: usize) -> Result<Vec<usize>, SelectError> {
    let n = sim.len();
    check_k(k, n)?;
    let rank = id_ranks(ids);
    let mut cover = vec![0.0; n];
    let mut taken = vec![false; n];
    let mut out = Vec::with_capacity(k);
    for _ in 0..k {
        let gains = par::map_indexed(n, |j| {
            if taken[j] {
                f64::NEG_INFINITY
            } else {
                gain(sim, &cover, j)
            }
        });
        let best = (0..n)
            .filter(|&j| !taken[j])
            .max_by(|&a, &b| gains[a].total_cmp(&gains[b]).then(rank[b].cmp(&rank[a])))
            .expect("k <= n");
        taken[best] = true;
        absorb(sim, &mut cover, best);
        out.push(best);
    }
    Ok(out)
}

#[derive(Debug, PartialEq)]
struct Bound {
    value: f64,
    rank: usize,
    idx: usize,
    round: usize,
}

impl Eq for Bound {}

impl Ord for Bound {
    fn cmp(&self, other: &Self) -> Ordering {
        self.value.total_cmp(&other.value).then(other.rank.cmp(&self.rank))
    }
}

impl PartialOrd for Bound {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Lazy greedy over stale upper bounds. Each term max(0, s - c) is monotone
/// in c under floating point, so a stale gain never underestimates the fresh
/// one and the output matches [`facility_location_naive`] exactly.
pub fn facility_location_lazy(sim: &[Vec<f64>], ids: &[&str], k: usize) -> Result<Vec<usize>, SelectError> {
    let n = sim.len();
    check_k(k, n)?;
    let rank = id_ranks(ids);
    let mut cover = vec![0.0; n];
    let initial = par::map_indexed(n, |j| gain(sim, &cover, j));
    let mut heap: BinaryHeap<Bound> = initial
        .into_iter()
        .enumerate()
        .map(|(idx, value)| Bound {
            value,
            rank: rank[idx],
            idx,
            round: 0,
        })
        .collect();
    let mut out = Vec::with_capacity(k);
    while out.len() < k {
        let mut top = heap.pop().expect("k <= n");
        if top.round == out.len() {
            absorb(sim, &mut cover, top.idx);
            out.push(top.idx);
        } else {
            top.value = gain(sim, &cover, top.idx);
            top.round = out.len();
            heap.push(top);
        }
    }
    Ok(out)
}

/// MaxMin on cosine distance. The point with maximal total similarity seeds
/// the distance field; it is emitted only if later picked on its own merit.
pub fn farthest_point(sim: &[Vec<f64>], ids: &[&str], k: usize) -> Result<Vec<usize>, SelectError> {
    let n = sim.len();
    check_k(k, n)?;
    if k == 0 {
        return Ok(Vec::new());
    }
    let rank = id_ranks(ids);
    let totals: Vec<f64> = sim.iter().map(|row| row.iter().sum()).collect();
    let medoid = (0..n)
        .max_by(|&a, &b| totals[a].total_cmp(&totals[b]).then(rank[b].cmp(&rank[a])))
        .expect("k >= 1");
    let mut dist: Vec<f64> = (0..n).map(|i| 1.0 - sim[i][medoid]).collect();
    let mut taken = vec![false; n];
    let mut out = Vec::with_capacity(k);
    for _ in 0..k {
        let best = (0..n)
            .filter(|&j| !taken[j])
            .max_by(|&a, &b| dist[a].total_cmp(&dist[b]).then(rank[b].cmp(&rank[a])))
            .expect("k <= n");
        taken[best] = true;
        out.push(best);
        for i in 0..n {
            dist[i] = dist[i].min(1.0 - sim[i][best]);
        }
    }
    Ok(out)
}

/// Seeded uniform sample without replacement, in draw order.
pub fn random_select(n: usize, k: usize, seed: u64) -> Result<Vec<usize>, SelectError> {
    check_k(k, n)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(rand::seq::index::sample(&mut rng, n, k).into_vec())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Selector {
    #[default]
    FacilityLocation,
    FarthestPoint,
    Random,
}

impl Selector {
    pub fn name(self) -> &'static str {
        match self {
            Selector::FacilityLocation => "facility_location",
            Selector::FarthestPoint => "farthest_point",
            Selector::Random => "random",
        }
    }
}

/// Selects `k` members of one cell. `vectors` are unit claim embeddings.
pub fn select_cell(
    selector: Selector,
    ids: &[&str],
    vectors: &[&[f64]],
    k: usize,
    seed: u64,
) -> Result<Vec<usize>, SelectError> {
    match selector {
        Selector::Random => random_select(ids.len(), k, seed),
        Selector::FacilityLocation => facility_location_lazy(&similarity_matrix(vectors), ids, k),
        Selector::FarthestPoint => farthest_point(&similarity_matrix(vectors), ids, k),
    }
}

/// Runs the selector in every budget cell. `cell_seed` maps (label, source)
/// to that cell's seed. Returns pool indices in ascending order.
pub fn select_pool(
    pool: &[ClaimRecord],
    vectors: &[&[f64]],
    budget: &SelectionBudget,
    selector: Selector,
    cell_seed: impl Fn(Label, &str) -> u64,
) -> Result<Vec<usize>, SelectError> {
    let mut chosen = Vec::with_capacity(budget.total);
    for cell in &budget.cells {
        let members: Vec<usize> = (0..pool.len())
            .filter(|&i| pool[i].label == Some(cell.label) && pool[i].source == cell.source)
            .collect();
        let ids: Vec<&str> = members.iter().map(|&i| pool[i].id.as_str()).collect();
        let vecs: Vec<&[f64]> = members.iter().map(|&i| vectors[i]).collect();
        let picked = select_cell(selector, &ids, &vecs, cell.budget, cell_seed(cell.label, &cell.source))?;
        chosen.extend(picked.into_iter().map(|p| members[p]));
    }
    chosen.sort_unstable();
    Ok(chosen)
}

/// Pool indices not in `selected` whose evidence has at least `min_tokens`
/// tokens, in pool order.
pub fn long_evidence_augment(pool: &[ClaimRecord], selected: &[usize], min_tokens: usize) -> Vec<usize> {
    let taken: HashSet<usize> = selected.iter().copied().collect();
    let counts = par::map(pool, |r| r.evidence_tokens());
    (0..pool.len())
        .filter(|i| !taken.contains(i) && counts[*i] >= min_tokens)
        .collect()
}
