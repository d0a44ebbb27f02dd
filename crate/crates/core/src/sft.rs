//! One-sided subshifts of finite type.
//!
//! Points of the shift space are eventually periodic sequences stored as a
//! preperiod word followed by a repeating cycle. Every quantity computed in
//! this crate evaluates exactly on such points, and they are closed under the
//! shift map.

use std::collections::VecDeque;
use std::fmt;

use crate::error::{Error, Result};

/// A symbol of the alphabet, as a 0-based index.
pub type Symbol = u8;

const MAX_ALPHABET: usize = 256;

/// Alphabet plus transition matrix, with the connection times precomputed.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionSystem {
    size: usize,
    allowed: Vec<bool>,
    successors: Vec<Vec<Symbol>>,
    // shortest path length allowing the empty path (0 on the diagonal)
    reach: Vec<usize>,
    // shortest path length of at least one step
    connect: Vec<usize>,
    max_connect: usize,
    labels: Vec<String>,
}

impl TransitionSystem {
    /// Builds the system from a boolean matrix, rejecting degenerate and
    /// reducible ones.
    pub fn new(matrix: &[Vec<bool>]) -> Result<Self> {
        let size = matrix.len();
        if size == 0 {
            return Err(Error::EmptyAlphabet);
        }
        if size > MAX_ALPHABET {
            return Err(Error::TooManySymbols(size));
        }
        for (row, entries) in matrix.iter().enumerate() {
            if entries.len() != size {
                return Err(Error::NotSquare { row, len: entries.len(), expected: size });
            }
        }
        let allowed: Vec<bool> = matrix.iter().flatten().copied().collect();
        for i in 0..size {
            if !(0..size).any(|j| allowed[i * size + j]) {
                return Err(Error::ZeroRow(i));
            }
        }
        for j in 0..size {
            if !(0..size).any(|i| allowed[i * size + j]) {
                return Err(Error::ZeroColumn(j));
            }
        }
        let successors: Vec<Vec<Symbol>> = (0..size)
            .map(|i| (0..size).filter(|&j| allowed[i * size + j]).map(|j| j as Symbol).collect())
            .collect();

        let mut reach = vec![usize::MAX; size * size];
        for source in 0..size {
            let row = &mut reach[source * size..(source + 1) * size];
            row[source] = 0;
            let mut queue = VecDeque::from([source]);
            while let Some(v) = queue.pop_front() {
                for &w in &successors[v] {
                    let w = w as usize;
                    if row[w] == usize::MAX {
                        row[w] = row[v] + 1;
                        queue.push_back(w);
                    }
                }
            }
        }
        for i in 0..size {
            for j in 0..size {
                if reach[i * size + j] == usize::MAX {
                    return Err(Error::NotTransitive { from: i, to: j });
                }
            }
        }
        let mut connect = vec![0; size * size];
        for i in 0..size {
            for j in 0..size {
                connect[i * size + j] = 1 + successors[i]
                    .iter()
                    .map(|&k| reach[k as usize * size + j])
                    .min()
                    .expect("rows are nonempty");
            }
        }
        let max_connect = *connect.iter().max().expect("alphabet is nonempty");
        Ok(Self {
            size,
            allowed,
            successors,
            reach,
            connect,
            max_connect,
            labels: (0..size).map(|i| i.to_string()).collect(),
        })
    }

    /// Builds the system from rows of 0/1 integers.
    pub fn from_rows(rows: &[Vec<i64>]) -> Result<Self> {
        let mut matrix = Vec::with_capacity(rows.len());
        for (row, entries) in rows.iter().enumerate() {
            let mut out = Vec::with_capacity(entries.len());
            for (col, &value) in entries.iter().enumerate() {
                match value {
                    0 => out.push(false),
                    1 => out.push(true),
                    _ => return Err(Error::NotBoolean { row, col, value }),
                }
            }
            matrix.push(out);
        }
        Self::new(&matrix)
    }

    /// Full shift on `size` symbols.
    pub fn full_shift(size: usize) -> Result<Self> {
        Self::new(&vec![vec![true; size]; size])
    }

    /// Replaces the default index labels. Labels must be distinct and nonempty.
    pub fn with_labels(mut self, labels: Vec<String>) -> Result<Self> {
        if labels.len() != self.size {
            return Err(Error::InvalidParameter(format!(
                "{} labels supplied for {} symbols",
                labels.len(),
                self.size
            )));
        }
        for (i, label) in labels.iter().enumerate() {
            if label.is_empty() || label.chars().any(char::is_whitespace) {
                return Err(Error::InvalidParameter(format!("label {i} is empty or has whitespace")));
            }
            if labels[..i].contains(label) {
                return Err(Error::InvalidParameter(format!("duplicate label {label:?}")));
            }
        }
        self.labels = labels;
        Ok(self)
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn allows(&self, from: Symbol, to: Symbol) -> bool {
        self.allowed[from as usize * self.size + to as usize]
    }

    pub fn successors(&self, symbol: Symbol) -> &[Symbol] {
        &self.successors[symbol as usize]
    }

    /// Minimal `n >= 1` such that a path of length `n` leads from `from` to `to`.
    pub fn connect_time(&self, from: Symbol, to: Symbol) -> usize {
        self.connect[from as usize * self.size + to as usize]
    }

    /// Maximum connection time over all symbol pairs.
    pub fn max_connect_time(&self) -> usize {
        self.max_connect
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn label(&self, symbol: Symbol) -> &str {
        &self.labels[symbol as usize]
    }

    /// The lexicographically smallest path of length `connect_time(from, to)`,
    /// returned with both endpoints included.
    pub fn shortest_path(&self, from: Symbol, to: Symbol) -> Vec<Symbol> {
        let size = self.size;
        let target = to as usize;
        let length = self.connect_time(from, to);
        let mut path = Vec::with_capacity(length + 1);
        path.push(from);
        let mut current = from;
        for remaining in (0..length).rev() {
            current = *self
                .successors(current)
                .iter()
                .find(|&&k| self.reach[k as usize * size + target] == remaining)
                .expect("distances are consistent");
            path.push(current);
        }
        path
    }

    /// The fixed cycle used to close finite words into points: the smallest
    /// shortest loop through symbol 0.
    pub fn reference_cycle(&self) -> Vec<Symbol> {
        let mut cycle = self.shortest_path(0, 0);
        cycle.pop();
        cycle
    }

    pub fn check_symbol(&self, symbol: Symbol) -> Result<()> {
        if (symbol as usize) < self.size {
            Ok(())
        } else {
            Err(Error::SymbolOutOfRange { symbol, size: self.size })
        }
    }

    /// Checks symbols and every adjacent transition of `word`.
    pub fn check_word(&self, word: &[Symbol]) -> Result<()> {
        for &s in word {
            self.check_symbol(s)?;
        }
        for (position, pair) in word.windows(2).enumerate() {
            if !self.allows(pair[0], pair[1]) {
                return Err(Error::ForbiddenTransition { from: pair[0], to: pair[1], position });
            }
        }
        Ok(())
    }

    pub fn is_admissible(&self, word: &[Symbol]) -> bool {
        self.check_word(word).is_ok()
    }

    /// All admissible words of the given length in lexicographic order.
    pub fn admissible_words(&self, length: usize) -> Vec<Vec<Symbol>> {
        let mut words: Vec<Vec<Symbol>> = vec![Vec::new()];
        for step in 0..length {
            let mut next = Vec::new();
            for word in &words {
                let choices: Vec<Symbol> = if step == 0 {
                    (0..self.size).map(|s| s as Symbol).collect()
                } else {
                    self.successors(*word.last().expect("nonempty after first step")).to_vec()
                };
                for s in choices {
                    let mut w = word.clone();
                    w.push(s);
                    next.push(w);
                }
            }
            words = next;
        }
        words
    }

    /// Number of admissible words of the given length, saturating at `u128::MAX`.
    pub fn count_words(&self, length: usize) -> u128 {
        if length == 0 {
            return 1;
        }
        let mut ending = vec![1u128; self.size];
        for _ in 1..length {
            let mut next = vec![0u128; self.size];
            for (i, &count) in ending.iter().enumerate() {
                for &j in &self.successors[i] {
                    next[j as usize] = next[j as usize].saturating_add(count);
                }
            }
            ending = next;
        }
        ending.iter().fold(0u128, |acc, &c| acc.saturating_add(c))
    }

    /// Parses a word. Tokens are separated by whitespace when any is present;
    /// otherwise every character is one token. Tokens are matched against the
    /// labels.
    pub fn parse_word(&self, text: &str) -> Result<Vec<Symbol>> {
        let tokens: Vec<String> = if text.trim().chars().any(char::is_whitespace) {
            text.split_whitespace().map(str::to_owned).collect()
        } else {
            text.trim().chars().map(|c| c.to_string()).collect()
        };
        tokens
            .iter()
            .map(|token| {
                self.labels
                    .iter()
                    .position(|l| l == token)
                    .map(|i| i as Symbol)
                    .ok_or_else(|| Error::InvalidParameter(format!("unknown symbol {token:?}")))
            })
            .collect()
    }

    /// Renders a word with the labels, space separated unless every label is
    /// a single character.
    pub fn render_word(&self, word: &[Symbol]) -> String {
        let compact = self.labels.iter().all(|l| l.chars().count() == 1);
        let parts: Vec<&str> = word.iter().map(|&s| self.label(s)).collect();
        if compact {
            parts.concat()
        } else {
            parts.join(" ")
        }
    }

    /// Closes a finite admissible word into a point by walking the shortest
    /// path to the reference cycle and repeating it.
    pub fn close_word(&self, word: &[Symbol]) -> Result<SymbolicPoint> {
        self.check_word(word)?;
        let cycle = self.reference_cycle();
        let mut preperiod = word.to_vec();
        if let Some(&last) = word.last() {
            let path = self.shortest_path(last, cycle[0]);
            preperiod.extend_from_slice(&path[1..path.len() - 1]);
        }
        SymbolicPoint::new(self, preperiod, cycle)
    }
}

/// An eventually periodic admissible sequence `preperiod · cycle^∞` in
/// canonical form: the cycle is primitive and the preperiod is as short as
/// possible, so structural equality is equality of sequences.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SymbolicPoint {
    preperiod: Vec<Symbol>,
    cycle: Vec<Symbol>,
}

impl SymbolicPoint {
    pub fn new(sys: &TransitionSystem, preperiod: Vec<Symbol>, cycle: Vec<Symbol>) -> Result<Self> {
        if cycle.is_empty() {
            return Err(Error::EmptyCycle);
        }
        let mut whole = preperiod.clone();
        whole.extend_from_slice(&cycle);
        whole.push(cycle[0]);
        sys.check_word(&whole)?;
        Ok(Self::canonical(preperiod, cycle))
    }

    /// The purely periodic point `cycle^∞`.
    pub fn periodic(sys: &TransitionSystem, cycle: Vec<Symbol>) -> Result<Self> {
        Self::new(sys, Vec::new(), cycle)
    }

    fn canonical(mut preperiod: Vec<Symbol>, mut cycle: Vec<Symbol>) -> Self {
        let len = cycle.len();
        if let Some(period) =
            (1..len).find(|&p| len.is_multiple_of(p) && (p..len).all(|i| cycle[i] == cycle[i - p]))
        {
            cycle.truncate(period);
        }
        while let Some(&last) = preperiod.last() {
            if last != *cycle.last().expect("cycle nonempty") {
                break;
            }
            preperiod.pop();
            cycle.rotate_right(1);
        }
        Self { preperiod, cycle }
    }

    pub fn preperiod(&self) -> &[Symbol] {
        &self.preperiod
    }

    pub fn cycle(&self) -> &[Symbol] {
        &self.cycle
    }

    /// The symbol at position `index` of the sequence.
    #[inline]
    pub fn symbol_at(&self, index: usize) -> Symbol {
        let pre = self.preperiod.len();
        if index < pre {
            self.preperiod[index]
        } else {
            self.cycle[(index - pre) % self.cycle.len()]
        }
    }

    pub fn prefix(&self, length: usize) -> Vec<Symbol> {
        (0..length).map(|i| self.symbol_at(i)).collect()
    }

    /// The image under the left shift.
    pub fn shift(&self) -> Self {
        if self.preperiod.is_empty() {
            let mut cycle = self.cycle.clone();
            cycle.rotate_left(1);
            Self { preperiod: Vec::new(), cycle }
        } else {
            Self { preperiod: self.preperiod[1..].to_vec(), cycle: self.cycle.clone() }
        }
    }

    /// The image under `n` iterates of the shift.
    pub fn shift_by(&self, n: usize) -> Self {
        let pre = self.preperiod.len();
        if n <= pre {
            Self { preperiod: self.preperiod[n..].to_vec(), cycle: self.cycle.clone() }
        } else {
            let mut cycle = self.cycle.clone();
            let len = cycle.len();
            cycle.rotate_left((n - pre) % len);
            Self { preperiod: Vec::new(), cycle }
        }
    }

    /// First index where `σ^a self` and `σ^b other` disagree, or `None` when
    /// the two sequences are identical.
    pub fn first_disagreement(&self, a: usize, other: &Self, b: usize) -> Option<usize> {
        let tail = self.preperiod.len().saturating_sub(a).max(other.preperiod.len().saturating_sub(b));
        let span = tail + lcm(self.cycle.len(), other.cycle.len());
        (0..span).find(|&i| self.symbol_at(a + i) != other.symbol_at(b + i))
    }

    /// The shift metric between `σ^a self` and `σ^b other`.
    pub fn distance_shifted(&self, a: usize, other: &Self, b: usize) -> f64 {
        match self.first_disagreement(a, other, b) {
            None => 0.0,
            Some(n) => pow2_neg(n),
        }
    }

    /// Renders the point as `preperiod(cycle)`.
    pub fn render(&self, sys: &TransitionSystem) -> String {
        format!("{}({})", sys.render_word(&self.preperiod), sys.render_word(&self.cycle))
    }
}

impl fmt::Display for SymbolicPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let join = |w: &[Symbol]| w.iter().map(|s| s.to_string()).collect::<Vec<_>>().join(" ");
        write!(f, "[{}]({})", join(&self.preperiod), join(&self.cycle))
    }
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

fn lcm(a: usize, b: usize) -> usize {
    a / gcd(a, b) * b
}

pub(crate) fn pow2_neg(n: usize) -> f64 {
    if n > 1074 {
        0.0
    } else {
        (-(n as f64)).exp2()
    }
}

/// Drops the first symbol of `x`.
pub fn shift(x: &SymbolicPoint) -> SymbolicPoint {
    x.shift()
}

/// `2^{-N}` with `N` the first index where the sequences differ; 0 when equal.
pub fn symbol_distance(x: &SymbolicPoint, y: &SymbolicPoint) -> f64 {
    x.distance_shifted(0, y, 0)
}

/// Smallest `N >= 0` with `2^{-N} < epsilon`, so that `d(x, y) < epsilon`
/// exactly when `x` and `y` agree on their first `N` symbols.
pub fn depth_for(epsilon: f64) -> Result<usize> {
    if !(epsilon > 0.0) || !epsilon.is_finite() {
        return Err(Error::NonPositiveEpsilon(epsilon));
    }
    let mut n = 0;
    while pow2_neg(n) >= epsilon {
        n += 1;
    }
    Ok(n)
}

/// A finite admissible word, standing for the cylinder of its extensions.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct CylinderWord {
    symbols: Vec<Symbol>,
}

impl CylinderWord {
    pub fn new(sys: &TransitionSystem, symbols: Vec<Symbol>) -> Result<Self> {
        sys.check_word(&symbols)?;
        Ok(Self { symbols })
    }

    pub fn symbols(&self) -> &[Symbol] {
        &self.symbols
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    pub fn contains(&self, point: &SymbolicPoint) -> bool {
        self.symbols.iter().enumerate().all(|(i, &s)| point.symbol_at(i) == s)
    }
}

/// The cylinder equal to the Bowen ball `B(x, n, epsilon)`: the prefix of
/// length `n - 1 + N_epsilon`, empty when `N_epsilon = 0`.
pub fn bowen_cylinder(
    sys: &TransitionSystem,
    x: &SymbolicPoint,
    n: usize,
    epsilon: f64,
) -> Result<CylinderWord> {
    if n == 0 {
        return Err(Error::InvalidLength(n));
    }
    let depth = depth_for(epsilon)?;
    if depth == 0 {
        // ε > 1 constrains nothing
        return CylinderWord::new(sys, Vec::new());
    }
    CylinderWord::new(sys, x.prefix(n - 1 + depth))
}
