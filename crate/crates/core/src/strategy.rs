//! Surrogate substitution as a two-state Markov chain.
//!
//! Within a chain the first mention always draws a fresh surrogate. Every
//! later mention draws fresh with probability `p_new` and otherwise repeats
//! the previous surrogate. Fresh draws are uniform over the pool with
//! replacement. After assignment the chain's surrogates are shuffled over
//! its mention positions so runs of one value do not stay adjacent.
//!
//! Consistent (`p_new = 0`), Random (`p_new = 1`) and Markov (`p_new = 0.5`)
//! are fixed parameterizations; Custom takes any `p_new` in [0, 1].

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::hash::Hash;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::brat::DocumentBundle;
use crate::error::{Error, Result};
use crate::report::{EventKind, Warning};
use crate::seed::{derive_seed, rng_from};
use crate::surrogate::{OffsetPolicy, Surrogates, SurrogatePool, DEFAULT_POOL_SIZE};

/// Chain key used for every mention when the surface text is unknown.
pub const NO_TEXT: &str = "⊥";

// Fresh draws that render to the original are redrawn up to this many times.
const EXCLUDE_ATTEMPTS: usize = 32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StrategyKind {
    Consistent,
    Random,
    Markov,
    Custom,
}

impl StrategyKind {
    pub const ALL: [StrategyKind; 3] = [StrategyKind::Consistent, StrategyKind::Random, StrategyKind::Markov];

    /// The fixed transition probability, `None` for Custom.
    pub fn fixed_p_new(self) -> Option<f64> {
        match self {
            StrategyKind::Consistent => Some(0.0),
            StrategyKind::Random => Some(1.0),
            StrategyKind::Markov => Some(0.5),
            StrategyKind::Custom => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            StrategyKind::Consistent => "consistent",
            StrategyKind::Random => "random",
            StrategyKind::Markov => "markov",
            StrategyKind::Custom => "custom",
        }
    }
}

impl fmt::Display for StrategyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for StrategyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "consistent" => Ok(StrategyKind::Consistent),
            "random" => Ok(StrategyKind::Random),
            "markov" => Ok(StrategyKind::Markov),
            "custom" => Ok(StrategyKind::Custom),
            other => Err(Error::Config(format!("unknown strategy {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StrategyConfig {
    pub kind: StrategyKind,
    pub p_new: f64,
    pub pool_size: usize,
    pub seed: u64,
}

impl StrategyConfig {
    /// `p_new` may be omitted for the fixed kinds; if given it must agree.
    pub fn new(kind: StrategyKind, p_new: Option<f64>, pool_size: usize, seed: u64) -> Result<Self> {
        let p = match (kind.fixed_p_new(), p_new) {
            (Some(fixed), None) => fixed,
            (Some(fixed), Some(p)) if p == fixed => fixed,
            (Some(fixed), Some(p)) => {
                return Err(Error::Config(format!("{kind} strategy has p_new = {fixed}, got {p}")))
            }
            (None, Some(p)) if (0.0..=1.0).contains(&p) => p,
            (None, Some(p)) => return Err(Error::Config(format!("p_new must lie in [0, 1], got {p}"))),
            (None, None) => return Err(Error::Config("custom strategy requires p_new".into())),
        };
        if pool_size == 0 {
            return Err(Error::Config("pool size must be at least 1".into()));
        }
        Ok(StrategyConfig {
            kind,
            p_new: p,
            pool_size,
            seed,
        })
    }

    pub fn of(kind: StrategyKind, seed: u64) -> Self {
        StrategyConfig::new(kind, None, DEFAULT_POOL_SIZE, seed).expect("fixed kinds are valid")
    }

    pub fn custom(p_new: f64, pool_size: usize, seed: u64) -> Result<Self> {
        StrategyConfig::new(StrategyKind::Custom, Some(p_new), pool_size, seed)
    }

    /// Label used in output tables: the kind, or `custom(p)`.
    pub fn label(&self) -> String {
        match self.kind {
            StrategyKind::Custom => format!("custom({})", self.p_new),
            k => k.to_string(),
        }
    }
}

fn fresh<R: Rng + ?Sized>(k: usize, rng: &mut R, exclude: &mut impl FnMut(usize) -> bool) -> (usize, bool) {
    let mut idx = rng.random_range(0..k);
    for _ in 1..EXCLUDE_ATTEMPTS {
        if !exclude(idx) {
            return (idx, true);
        }
        idx = rng.random_range(0..k);
    }
    let ok = !exclude(idx);
    (idx, ok)
}

#[inline]
fn step_new<R: Rng + ?Sized>(p_new: f64, rng: &mut R) -> bool {
    if p_new <= 0.0 {
        false
    } else if p_new >= 1.0 {
        true
    } else {
        rng.random_bool(p_new)
    }
}

/// Pool indices for an `n`-mention chain. `exclude` rejects fresh indices
/// (up to a bounded number of redraws); the flag reports whether every fresh
/// draw avoided an excluded index.
pub fn chain_indices<R: Rng + ?Sized>(
    n: usize,
    p_new: f64,
    k: usize,
    rng: &mut R,
    mut exclude: impl FnMut(usize) -> bool,
) -> (Vec<usize>, bool) {
    let mut out = Vec::with_capacity(n);
    let mut all_ok = true;
    for i in 0..n {
        if i == 0 || step_new(p_new, rng) {
            let (idx, ok) = fresh(k, rng, &mut exclude);
            all_ok &= ok;
            out.push(idx);
        } else {
            out.push(out[i - 1]);
        }
    }
    (out, all_ok)
}

/// Surrogates for `n` mentions of one chain, before dispersal.
pub fn chain_assign<R: Rng + ?Sized>(
    n: usize,
    config: &StrategyConfig,
    pool: &SurrogatePool,
    rng: &mut R,
) -> Result<Vec<String>> {
    if pool.is_empty() {
        return Err(Error::EmptyPool);
    }
    let (idx, _) = chain_indices(n, config.p_new, pool.len(), rng, |_| false);
    Ok(idx.into_iter().map(|i| pool.get(i).to_string()).collect())
}

/// Largest multiplicity of any value; 0 for an empty list.
pub fn max_repeat_size<T: Hash + Eq>(items: &[T]) -> usize {
    let mut counts: HashMap<&T, usize> = HashMap::with_capacity(items.len());
    let mut best = 0;
    for it in items {
        let c = counts.entry(it).or_insert(0);
        *c += 1;
        best = best.max(*c);
    }
    best
}

/// Uniform random permutation.
pub fn disperse<T, R: Rng + ?Sized>(mut items: Vec<T>, rng: &mut R) -> Vec<T> {
    items.shuffle(rng);
    items
}

/// Mean length of maximal runs of equal adjacent values; 0 for empty input.
pub fn mean_run_length<T: PartialEq>(items: &[T]) -> f64 {
    if items.is_empty() {
        return 0.0;
    }
    let runs = 1 + items.windows(2).filter(|w| w[0] != w[1]).count();
    items.len() as f64 / runs as f64
}

/// Reusable scratch space for computing a chain's maximum repeat size
/// without materializing surrogate strings.
#[derive(Debug, Clone)]
pub struct ChainSampler {
    counts: Vec<u32>,
    touched: Vec<usize>,
}

impl ChainSampler {
    pub fn new(k: usize) -> Self {
        ChainSampler {
            counts: vec![0; k.max(1)],
            touched: Vec::new(),
        }
    }

    pub fn pool_size(&self) -> usize {
        self.counts.len()
    }

    /// Maximum repeat size of one `n`-mention chain. With `stop_at`, sampling
    /// ends as soon as the running maximum reaches that value.
    pub fn max_repeat<R: Rng + ?Sized>(&mut self, n: usize, p_new: f64, rng: &mut R, stop_at: Option<usize>) -> usize {
        if n == 0 {
            return 0;
        }
        if p_new <= 0.0 {
            return n;
        }
        let k = self.counts.len();
        let stop = stop_at.unwrap_or(usize::MAX);
        let mut best = 0usize;
        let mut prev = 0usize;
        for i in 0..n {
            let idx = if i == 0 || step_new(p_new, rng) {
                rng.random_range(0..k)
            } else {
                prev
            };
            if self.counts[idx] == 0 {
                self.touched.push(idx);
            }
            self.counts[idx] += 1;
            best = best.max(self.counts[idx] as usize);
            prev = idx;
            if best >= stop {
                break;
            }
        }
        for &t in &self.touched {
            self.counts[t] = 0;
        }
        self.touched.clear();
        best
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ChainKey {
    pub doc_id: String,
    pub category: String,
    pub normalized_original: String,
}

impl ChainKey {
    pub fn new(doc_id: &str, category: &str, surface: Option<&str>) -> Self {
        ChainKey {
            doc_id: doc_id.to_string(),
            category: category.to_string(),
            normalized_original: normalize_surface(surface),
        }
    }
}

/// Case-folded, whitespace-collapsed surface, or [`NO_TEXT`].
pub fn normalize_surface(surface: Option<&str>) -> String {
    match surface {
        Some(s) => s.split_whitespace().collect::<Vec<_>>().join(" ").to_lowercase(),
        None => NO_TEXT.to_string(),
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Assignment {
    /// Index into the bundle's annotation list.
    pub mention: usize,
    pub id: String,
    pub key: ChainKey,
    pub surrogate: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ReplacementPlan {
    pub doc_id: String,
    /// In mention order.
    pub assignments: Vec<Assignment>,
    pub max_repeat_by_key: BTreeMap<ChainKey, usize>,
    pub warnings: Vec<Warning>,
}

impl ReplacementPlan {
    fn finish(doc_id: String, mut assignments: Vec<Assignment>, warnings: Vec<Warning>) -> Self {
        assignments.sort_by_key(|a| a.mention);
        let mut counts: HashMap<(&ChainKey, &str), usize> = HashMap::new();
        let mut max_repeat_by_key = BTreeMap::new();
        for a in &assignments {
            let c = counts.entry((&a.key, a.surrogate.as_str())).or_insert(0);
            *c += 1;
            let m = max_repeat_by_key.entry(a.key.clone()).or_insert(0);
            *m = (*m).max(*c);
        }
        ReplacementPlan {
            doc_id,
            assignments,
            max_repeat_by_key,
            warnings,
        }
    }
}

/// One pool per pool-backed category, shared by every document of a corpus.
#[derive(Debug, Clone, Default)]
pub struct PoolSet {
    pools: BTreeMap<String, SurrogatePool>,
}

impl PoolSet {
    /// Builds a pool for every registered pool-backed category, clamping `k`
    /// to each generator's capacity.
    pub fn build(surrogates: &Surrogates, k: usize, seed: u64) -> Result<Self> {
        let mut pools = BTreeMap::new();
        for spec in surrogates.registry().iter().filter(|s| !s.kind.is_offset()) {
            let cap = surrogates.capacity(spec);
            if cap == 0 {
                continue;
            }
            let size = (k as u64).min(cap) as usize;
            let pool = surrogates.build_pool(spec, size, derive_seed(seed, &format!("pool/{}", spec.category)))?;
            pools.insert(spec.category.clone(), pool);
        }
        Ok(PoolSet { pools })
    }

    pub fn insert(&mut self, pool: SurrogatePool) {
        self.pools.insert(pool.category().to_string(), pool);
    }

    pub fn get(&self, category: &str) -> Option<&SurrogatePool> {
        self.pools.get(category)
    }

    pub fn len(&self) -> usize {
        self.pools.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pools.is_empty()
    }
}

/// Date/time/age offsets for a document under the given scope.
pub fn scope_policy(bundle: &DocumentBundle, template: &OffsetPolicyTemplate, seed: u64) -> OffsetPolicy {
    use crate::surrogate::OffsetScope;
    let label = match template.scope {
        OffsetScope::Corpus => "offset/corpus".to_string(),
        OffsetScope::Patient => format!("offset/patient/{}", bundle.patient_key()),
        OffsetScope::Document => format!("offset/document/{}", bundle.doc_id),
    };
    OffsetPolicy::draw(&mut rng_from(derive_seed(seed, &label)), template.scope, template.date_order)
}

/// Scope and date reading from which per-document offsets are drawn.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct OffsetPolicyTemplate {
    pub scope: crate::surrogate::OffsetScope,
    pub date_order: crate::surrogate::DateOrder,
}

fn non_empty(value: String, category: &str) -> String {
    if value.is_empty() {
        format!("[{category}]")
    } else {
        value
    }
}

/// Assigns a surrogate to every annotation of `bundle`.
///
/// Pool-backed mentions are grouped into chains by [`ChainKey`] in order of
/// first appearance; each chain is sampled and then dispersed. Offset
/// categories are shifted directly. Unknown labels become `[LABEL]`.
pub fn plan_document<R: Rng + ?Sized>(
    bundle: &DocumentBundle,
    config: &StrategyConfig,
    surrogates: &Surrogates,
    pools: &PoolSet,
    policy: &OffsetPolicy,
    rng: &mut R,
) -> Result<ReplacementPlan> {
    let doc = bundle.doc_id.as_str();
    let mut assignments = Vec::with_capacity(bundle.annotations.len());
    let mut warnings = Vec::new();
    let mut chains: Vec<(ChainKey, Vec<usize>)> = Vec::new();
    let mut chain_of: HashMap<ChainKey, usize> = HashMap::new();

    for (i, rec) in bundle.annotations.iter().enumerate() {
        let surface = rec.surface.as_deref();
        let key = ChainKey::new(doc, &rec.category, surface);
        let Some(spec) = surrogates.spec(&rec.category) else {
            warnings.push(Warning::new(
                doc,
                EventKind::UnknownCategory,
                format!("{}: no generator registered for {}", rec.id, rec.category),
            ));
            assignments.push(Assignment {
                mention: i,
                id: rec.id.clone(),
                key,
                surrogate: format!("[{}]", rec.category),
            });
            continue;
        };
        if spec.kind.is_offset() {
            let g = surrogates.shift(spec, surface, policy, rng);
            if let Some((event, detail)) = g.event {
                warnings.push(Warning::new(doc, event, format!("{}: {detail}", rec.id)));
            }
            assignments.push(Assignment {
                mention: i,
                id: rec.id.clone(),
                key,
                surrogate: non_empty(g.value, &rec.category),
            });
            continue;
        }
        match chain_of.get(&key) {
            Some(&c) => chains[c].1.push(i),
            None => {
                chain_of.insert(key.clone(), chains.len());
                chains.push((key, vec![i]));
            }
        }
    }

    for (key, mentions) in chains {
        let spec = surrogates.spec(&key.category).expect("chained categories are registered");
        let pool = pools.get(&key.category).ok_or_else(|| Error::PlanMismatch {
            doc_id: doc.to_string(),
            message: format!("no surrogate pool for {}", key.category),
        })?;
        let original = bundle.annotations[mentions[0]].surface.as_deref();
        let exclude = |idx: usize| match original {
            Some(o) => surrogates.render(spec, pool.get(idx), Some(o)).eq_ignore_ascii_case(o.trim()),
            None => false,
        };
        let (idx, ok) = chain_indices(mentions.len(), config.p_new, pool.len(), rng, exclude);
        if !ok {
            warnings.push(Warning::new(
                doc,
                EventKind::OriginalNotExcluded,
                format!("{}: pool for {} could not avoid the original value", bundle.annotations[mentions[0]].id, key.category),
            ));
        }
        let idx = disperse(idx, rng);
        for (&m, pool_idx) in mentions.iter().zip(idx) {
            let rec = &bundle.annotations[m];
            assignments.push(Assignment {
                mention: m,
                id: rec.id.clone(),
                key: key.clone(),
                surrogate: non_empty(surrogates.render(spec, pool.get(pool_idx), rec.surface.as_deref()), &rec.category),
            });
        }
    }

    Ok(ReplacementPlan::finish(doc.to_string(), assignments, warnings))
}
