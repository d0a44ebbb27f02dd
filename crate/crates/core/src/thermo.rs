//! Thermodynamic formalism for locally constant potentials on a subshift of
//! finite type.
//!
//! A potential of depth `k` is recoded onto the graph of admissible
//! `m`-blocks, `m = max(1, k - 1)`, where it becomes a function of edges. The
//! pressure is the log Perron root of the edge-weighted adjacency matrix and
//! the equilibrium state is the Markov chain obtained by stochasticizing that
//! matrix with its right eigenvector.

use crate::error::{Error, Result};
use crate::linalg::{perron, solve, Square};
use crate::sft::{depth_for, Symbol, SymbolicPoint, TransitionSystem};

const MAX_TABLE: u128 = 1 << 24;

/// Default number of cylinders `verify_gibbs` may enumerate.
pub const DEFAULT_CYLINDER_BUDGET: u128 = 10_000_000;

fn table_len(alphabet: usize, depth: usize) -> Result<usize> {
    if depth == 0 {
        return Err(Error::ZeroDepth);
    }
    let entries = (alphabet as u128).checked_pow(depth as u32).unwrap_or(u128::MAX);
    if entries > MAX_TABLE {
        return Err(Error::DepthTooLarge { depth, entries });
    }
    Ok(entries as usize)
}

/// A real function of the first `depth` symbols, tabulated on admissible words.
#[derive(Debug, Clone, PartialEq)]
pub struct LocallyConstantFunction {
    alphabet: usize,
    depth: usize,
    // dense over all words of length `depth`; NaN on inadmissible ones
    values: Vec<f64>,
}

impl LocallyConstantFunction {
    pub fn from_fn(sys: &TransitionSystem, depth: usize, f: impl Fn(&[Symbol]) -> f64) -> Result<Self> {
        let len = table_len(sys.size(), depth)?;
        let mut values = vec![f64::NAN; len];
        for word in sys.admissible_words(depth) {
            let v = f(&word);
            if !v.is_finite() {
                return Err(Error::InvalidParameter(format!("non-finite value {v} at word {word:?}")));
            }
            values[index_of(sys.size(), &word)] = v;
        }
        Ok(Self { alphabet: sys.size(), depth, values })
    }

    /// Builds the table from `(word, value)` pairs, which must cover every
    /// admissible word of length `depth` and nothing else.
    pub fn from_entries(sys: &TransitionSystem, depth: usize, entries: &[(Vec<Symbol>, f64)]) -> Result<Self> {
        let len = table_len(sys.size(), depth)?;
        let mut values = vec![f64::NAN; len];
        for (word, value) in entries {
            if word.len() != depth || !sys.is_admissible(word) {
                return Err(Error::InvalidWord(word.clone()));
            }
            if !value.is_finite() {
                return Err(Error::InvalidParameter(format!("non-finite value {value} at word {word:?}")));
            }
            values[index_of(sys.size(), word)] = *value;
        }
        for word in sys.admissible_words(depth) {
            if values[index_of(sys.size(), &word)].is_nan() {
                return Err(Error::IncompleteTable(word));
            }
        }
        Ok(Self { alphabet: sys.size(), depth, values })
    }

    pub fn constant(sys: &TransitionSystem, value: f64) -> Self {
        Self::from_fn(sys, 1, |_| value).expect("depth-1 tables always fit")
    }

    /// Indicator of the cylinder `[word]`.
    pub fn indicator(sys: &TransitionSystem, word: &[Symbol]) -> Result<Self> {
        sys.check_word(word)?;
        Self::from_fn(sys, word.len().max(1), |w| if w.starts_with(word) { 1.0 } else { 0.0 })
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn alphabet(&self) -> usize {
        self.alphabet
    }

    /// Value on an admissible word of length `depth`.
    pub fn value(&self, word: &[Symbol]) -> Result<f64> {
        if word.len() != self.depth || word.iter().any(|&s| s as usize >= self.alphabet) {
            return Err(Error::InvalidWord(word.to_vec()));
        }
        let v = self.values[index_of(self.alphabet, word)];
        if v.is_nan() {
            Err(Error::InvalidWord(word.to_vec()))
        } else {
            Ok(v)
        }
    }

    /// Value on the first `depth` symbols of `word`, which may be longer.
    #[inline]
    pub(crate) fn value_prefix(&self, word: &[Symbol]) -> f64 {
        self.values[index_of(self.alphabet, &word[..self.depth])]
    }

    /// Value at `σ^shift(x)`.
    #[inline]
    pub fn eval_at(&self, x: &SymbolicPoint, shift: usize) -> f64 {
        let mut index = 0;
        for i in 0..self.depth {
            index = index * self.alphabet + x.symbol_at(shift + i) as usize;
        }
        self.values[index]
    }

    /// The same function viewed as one of `depth` symbols.
    pub fn lift(&self, depth: usize) -> Result<Self> {
        if depth < self.depth {
            return Err(Error::InvalidParameter(format!("cannot lift depth {} to {depth}", self.depth)));
        }
        let len = table_len(self.alphabet, depth)?;
        let stride = len / self.values.len();
        let values = (0..len).map(|i| self.values[i / stride]).collect();
        Ok(Self { alphabet: self.alphabet, depth, values })
    }

    /// Pointwise combination at the larger of the two depths.
    pub fn combine(&self, other: &Self, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        if self.alphabet != other.alphabet {
            return Err(Error::InvalidParameter("functions over different alphabets".into()));
        }
        let depth = self.depth.max(other.depth);
        let a = self.lift(depth)?;
        let b = other.lift(depth)?;
        let values = a.values.iter().zip(&b.values).map(|(&x, &y)| f(x, y)).collect();
        Ok(Self { alphabet: self.alphabet, depth, values })
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self { alphabet: self.alphabet, depth: self.depth, values: self.values.iter().map(|&v| f(v)).collect() }
    }

    /// `self + scale * other`.
    pub fn add_scaled(&self, other: &Self, scale: f64) -> Result<Self> {
        self.combine(other, |a, b| a + scale * b)
    }

    pub fn min(&self) -> f64 {
        self.values.iter().filter(|v| !v.is_nan()).cloned().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().filter(|v| !v.is_nan()).cloned().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Admissible words with their values, in lexicographic order.
    pub fn entries(&self) -> Vec<(Vec<Symbol>, f64)> {
        (0..self.values.len())
            .filter(|&i| !self.values[i].is_nan())
            .map(|i| (word_of(self.alphabet, self.depth, i), self.values[i]))
            .collect()
    }
}

#[inline]
fn index_of(alphabet: usize, word: &[Symbol]) -> usize {
    word.iter().fold(0, |acc, &s| acc * alphabet + s as usize)
}

fn word_of(alphabet: usize, depth: usize, mut index: usize) -> Vec<Symbol> {
    let mut word = vec![0; depth];
    for slot in word.iter_mut().rev() {
        *slot = (index % alphabet) as Symbol;
        index /= alphabet;
    }
    word
}

/// Graph whose vertices are admissible `m`-words and whose edges are
/// admissible `(m + 1)`-words.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct BlockGraph {
    pub depth: usize,
    pub alphabet: usize,
    pub states: Vec<Vec<Symbol>>,
    lookup: Vec<usize>,
    pub successors: Vec<Vec<usize>>,
}

impl BlockGraph {
    pub fn new(sys: &TransitionSystem, depth: usize) -> Result<Self> {
        let len = table_len(sys.size(), depth)?;
        let states = sys.admissible_words(depth);
        let mut lookup = vec![usize::MAX; len];
        for (i, s) in states.iter().enumerate() {
            lookup[index_of(sys.size(), s)] = i;
        }
        let successors = states
            .iter()
            .map(|s| {
                sys.successors(*s.last().expect("depth >= 1"))
                    .iter()
                    .map(|&c| {
                        let mut next = s[1..].to_vec();
                        next.push(c);
                        lookup[index_of(sys.size(), &next)]
                    })
                    .collect()
            })
            .collect();
        Ok(Self { depth, alphabet: sys.size(), states, lookup, successors })
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn state(&self, word: &[Symbol]) -> Option<usize> {
        if word.len() != self.depth || word.iter().any(|&s| s as usize >= self.alphabet) {
            return None;
        }
        let i = self.lookup[index_of(self.alphabet, word)];
        (i != usize::MAX).then_some(i)
    }

    pub fn edge_word(&self, from: usize, to: usize) -> Vec<Symbol> {
        let mut w = self.states[from].clone();
        w.push(*self.states[to].last().expect("depth >= 1"));
        w
    }

    /// Matrix `exp(u(edge) - shift)` on edges, zero elsewhere, with `shift`
    /// the maximum of `u`.
    pub fn weighted(&self, u: &LocallyConstantFunction) -> (Square, f64) {
        let shift = u.max();
        let mut m = Square::zeros(self.len());
        for v in 0..self.len() {
            for &w in &self.successors[v] {
                m.set(v, w, (u.value_prefix(&self.edge_word(v, w)) - shift).exp());
            }
        }
        (m, shift)
    }
}

fn block_depth_for(depth: usize) -> usize {
    depth.saturating_sub(1).max(1)
}

/// Topological pressure of a locally constant potential.
pub fn pressure(sys: &TransitionSystem, u: &LocallyConstantFunction) -> Result<f64> {
    check_alphabet(sys, u)?;
    let graph = BlockGraph::new(sys, block_depth_for(u.depth()))?;
    let (m, shift) = graph.weighted(u);
    Ok(perron(&m)?.value.ln() + shift)
}

fn check_alphabet(sys: &TransitionSystem, u: &LocallyConstantFunction) -> Result<()> {
    if u.alphabet() != sys.size() {
        return Err(Error::InvalidParameter(format!(
            "function over {} symbols used on a system of {}",
            u.alphabet(),
            sys.size()
        )));
    }
    Ok(())
}

/// Stationary Markov chain on the block graph, with the Perron data it was
/// built from.
#[derive(Debug, Clone, PartialEq)]
pub struct MarkovMeasure {
    graph: BlockGraph,
    transitions: Square,
    stationary: Vec<f64>,
    log_perron: f64,
    left: Vec<f64>,
    right: Vec<f64>,
}

/// The equilibrium state of `u`.
pub fn equilibrium_markov(sys: &TransitionSystem, u: &LocallyConstantFunction) -> Result<MarkovMeasure> {
    check_alphabet(sys, u)?;
    let graph = BlockGraph::new(sys, block_depth_for(u.depth()))?;
    let (m, shift) = graph.weighted(u);
    let p = perron(&m)?;
    let n = graph.len();
    let mut transitions = Square::zeros(n);
    for v in 0..n {
        for &w in &graph.successors[v] {
            transitions.set(v, w, m.get(v, w) * p.right[w] / (p.value * p.right[v]));
        }
    }
    let weights: Vec<f64> = p.left.iter().zip(&p.right).map(|(l, r)| l * r).collect();
    let total: f64 = weights.iter().sum();
    let stationary = weights.iter().map(|w| w / total).collect();
    Ok(MarkovMeasure {
        graph,
        transitions,
        stationary,
        log_perron: p.value.ln() + shift,
        left: p.left,
        right: p.right,
    })
}

impl MarkovMeasure {
    /// A chain on `block_depth`-words from an explicit stochastic matrix
    /// indexed by the admissible blocks in lexicographic order.
    pub fn from_transition_matrix(sys: &TransitionSystem, block_depth: usize, rows: &[Vec<f64>]) -> Result<Self> {
        let graph = BlockGraph::new(sys, block_depth)?;
        let n = graph.len();
        if rows.len() != n {
            return Err(Error::InvalidParameter(format!("{} rows for {n} blocks", rows.len())));
        }
        let mut transitions = Square::zeros(n);
        for (v, row) in rows.iter().enumerate() {
            if row.len() != n {
                return Err(Error::NotSquare { row: v, len: row.len(), expected: n });
            }
            let mut total = 0.0;
            for (w, &p) in row.iter().enumerate() {
                let allowed = graph.successors[v].contains(&w);
                if !(p >= 0.0) || (!allowed && p != 0.0) {
                    return Err(Error::NotStochastic { row: v });
                }
                total += p;
                transitions.set(v, w, p);
            }
            if (total - 1.0).abs() > 1e-12 {
                return Err(Error::NotStochastic { row: v });
            }
        }
        let stationary = stationary_of(&transitions).ok_or(Error::NotStochastic { row: 0 })?;
        Ok(Self {
            graph,
            transitions,
            stationary: stationary.clone(),
            log_perron: 0.0,
            left: stationary,
            right: vec![1.0; n],
        })
    }

    pub fn block_depth(&self) -> usize {
        self.graph.depth
    }

    /// Admissible blocks indexing the chain, in lexicographic order.
    pub fn states(&self) -> &[Vec<Symbol>] {
        &self.graph.states
    }

    pub fn transition(&self, from: usize, to: usize) -> f64 {
        self.transitions.get(from, to)
    }

    pub fn transition_rows(&self) -> Vec<Vec<f64>> {
        (0..self.graph.len()).map(|v| self.transitions.row(v).to_vec()).collect()
    }

    pub fn successors(&self, state: usize) -> &[usize] {
        &self.graph.successors[state]
    }

    pub fn stationary(&self) -> &[f64] {
        &self.stationary
    }

    pub fn log_perron(&self) -> f64 {
        self.log_perron
    }

    pub fn left_vector(&self) -> &[f64] {
        &self.left
    }

    pub fn right_vector(&self) -> &[f64] {
        &self.right
    }

    pub(crate) fn graph(&self) -> &BlockGraph {
        &self.graph
    }

    /// Entropy rate `-Σ π_v P_vw log P_vw`.
    pub fn entropy(&self) -> f64 {
        let mut h = 0.0;
        for v in 0..self.graph.len() {
            for &w in &self.graph.successors[v] {
                let p = self.transitions.get(v, w);
                if p > 0.0 {
                    h -= self.stationary[v] * p * p.ln();
                }
            }
        }
        h
    }

    /// `∫ g dμ` for `g` of depth at most `block_depth + 1`.
    pub fn integral(&self, g: &LocallyConstantFunction) -> Result<f64> {
        if g.depth() > self.graph.depth + 1 || g.alphabet() != self.graph.alphabet {
            return Err(Error::DepthMismatch { function: g.depth(), measure: self.graph.depth });
        }
        let mut total = 0.0;
        for v in 0..self.graph.len() {
            for &w in &self.graph.successors[v] {
                let p = self.transitions.get(v, w);
                total += self.stationary[v] * p * g.value_prefix(&self.graph.edge_word(v, w));
            }
        }
        Ok(total)
    }

    /// Measure of the cylinder `[word]`; zero for inadmissible words.
    pub fn cylinder_mass(&self, word: &[Symbol]) -> f64 {
        let m = self.graph.depth;
        if word.len() < m {
            return self
                .graph
                .states
                .iter()
                .zip(&self.stationary)
                .filter(|(s, _)| s.starts_with(word))
                .map(|(_, p)| p)
                .sum();
        }
        let Some(mut state) = self.graph.state(&word[..m]) else {
            return 0.0;
        };
        let mut mass = self.stationary[state];
        for end in m + 1..=word.len() {
            let Some(next) = self.graph.state(&word[end - m..end]) else {
                return 0.0;
            };
            mass *= self.transitions.get(state, next);
            state = next;
        }
        mass
    }
}

fn stationary_of(p: &Square) -> Option<Vec<f64>> {
    // (P^T - I) π = 0 with the last equation replaced by Σ π = 1
    let n = p.dim();
    let mut a = Square::zeros(n);
    for i in 0..n {
        for j in 0..n {
            let delta = if i == j { 1.0 } else { 0.0 };
            a.set(i, j, p.get(j, i) - delta);
        }
    }
    for j in 0..n {
        a.set(n - 1, j, 1.0);
    }
    let mut b = vec![0.0; n];
    b[n - 1] = 1.0;
    let pi = solve(a, b)?;
    pi.iter().all(|&x| x > -1e-14).then(|| pi.iter().map(|x| x.max(0.0)).collect())
}

/// `(entropy, ∫ g dμ)`.
pub fn measure_stats(measure: &MarkovMeasure, g: &LocallyConstantFunction) -> Result<(f64, f64)> {
    Ok((measure.entropy(), measure.integral(g)?))
}

/// Extreme Gibbs ratios for one cylinder length.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GibbsRow {
    pub length: usize,
    pub k_min: f64,
    pub k_max: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GibbsReport {
    pub pressure_constant: f64,
    pub rows: Vec<GibbsRow>,
    /// True when `log K(n) / n` is numerically heading to zero.
    pub growth_flag: bool,
}

impl GibbsReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("n,K_min,K_max\n");
        for r in &self.rows {
            out.push_str(&format!("{},{},{}\n", r.length, r.k_min, r.k_max));
        }
        out
    }
}

/// Tail slope of `log K(n)` above which growth is declared exponential.
pub const GIBBS_GROWTH_TOLERANCE: f64 = 1e-3;

/// Checks the Gibbs inequality on every cylinder of length up to `n_max`.
///
/// For each length `n` the ratio `μ[w] / exp(S_n u(x) - nP)` is evaluated for
/// every admissible `(n + k - 1)`-word, which fixes `S_n u` on the cylinder,
/// so the recorded extremes are exact over all points.
pub fn verify_gibbs(
    sys: &TransitionSystem,
    measure: &MarkovMeasure,
    u: &LocallyConstantFunction,
    pressure_constant: f64,
    n_max: usize,
) -> Result<GibbsReport> {
    verify_gibbs_with_budget(sys, measure, u, pressure_constant, n_max, DEFAULT_CYLINDER_BUDGET)
}

pub fn verify_gibbs_with_budget(
    sys: &TransitionSystem,
    measure: &MarkovMeasure,
    u: &LocallyConstantFunction,
    pressure_constant: f64,
    n_max: usize,
    budget: u128,
) -> Result<GibbsReport> {
    if n_max == 0 {
        return Err(Error::InvalidLength(0));
    }
    check_alphabet(sys, u)?;
    let k = u.depth();
    let needed = (1..=n_max).fold(0u128, |acc, n| acc.saturating_add(sys.count_words(n + k - 1)));
    if needed > budget {
        return Err(Error::BudgetExceeded { needed, budget });
    }
    let mut rows = Vec::with_capacity(n_max);
    for n in 1..=n_max {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        let mut word = Vec::with_capacity(n + k - 1);
        visit_words(sys, n + k - 1, &mut word, &mut |w| {
            let birkhoff: f64 = (0..n).map(|j| u.value_prefix(&w[j..])).sum();
            let log_ratio = measure.cylinder_mass(&w[..n]).ln() - (birkhoff - n as f64 * pressure_constant);
            lo = lo.min(log_ratio);
            hi = hi.max(log_ratio);
        });
        rows.push(GibbsRow { length: n, k_min: lo.exp(), k_max: hi.exp() });
    }
    let growth_flag = subexponential(&rows);
    Ok(GibbsReport { pressure_constant, rows, growth_flag })
}

fn visit_words(sys: &TransitionSystem, length: usize, word: &mut Vec<Symbol>, f: &mut impl FnMut(&[Symbol])) {
    if word.len() == length {
        f(word);
        return;
    }
    let choices: Vec<Symbol> = match word.last() {
        None => (0..sys.size()).map(|s| s as Symbol).collect(),
        Some(&last) => sys.successors(last).to_vec(),
    };
    for s in choices {
        word.push(s);
        visit_words(sys, length, word, f);
        word.pop();
    }
}

// log K(n) / n must be non-increasing on the tail and log K(n) must stop
// growing linearly there.
fn subexponential(rows: &[GibbsRow]) -> bool {
    let log_k: Vec<f64> = rows.iter().map(|r| r.k_max.ln().abs().max(r.k_min.ln().abs())).collect();
    let start = rows.len() / 2;
    let tail = &log_k[start..];
    let per_length: Vec<f64> = tail.iter().enumerate().map(|(i, g)| g / (start + i + 1) as f64).collect();
    let decreasing = per_length.windows(2).all(|w| w[1] <= w[0] + 1e-12);
    let slope = if tail.len() >= 2 {
        let xs: Vec<f64> = (0..tail.len()).map(|i| i as f64).collect();
        crate::stats::least_squares(&xs, tail).map(|f| f.slope).unwrap_or(0.0)
    } else {
        0.0
    };
    decreasing && slope <= GIBBS_GROWTH_TOLERANCE
}

/// Size of a maximal `(n, ε)`-separated set: one point per admissible word of
/// length `n - 1 + N_ε`. Saturates at `u128::MAX`.
pub fn separated_count(sys: &TransitionSystem, n: usize, epsilon: f64) -> Result<u128> {
    if n == 0 {
        return Err(Error::InvalidLength(0));
    }
    Ok(sys.count_words(n - 1 + depth_for(epsilon)?))
}
