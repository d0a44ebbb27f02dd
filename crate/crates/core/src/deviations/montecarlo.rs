//! Seeded Monte Carlo estimates of deviation probabilities under the flow
//! measure induced by a Markov measure on the base.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg::CompensatedSum;
use crate::sft::{depth_for, Symbol};
use crate::stats::least_squares;
use crate::suspension::{birkhoff_flow_integral, FlowObservable, SuspensionPoint, SuspensionSystem};
use crate::thermo::{LocallyConstantFunction, MarkovMeasure};

/// Smallest hit count for a time to enter the slope fit.
pub const MIN_FIT_COUNT: u64 = 30;

const CHUNK: usize = 4096;
const HORIZON_MARGIN: usize = 2;

/// Independent generator for sample `sample` of experiment row `row`.
pub fn stream(seed: u64, row: u32, sample: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream((u64::from(row) << 40) | sample);
    rng
}

/// Draws words from a stationary Markov measure, biased by the roof.
pub(crate) struct Sampler<'a> {
    sys: &'a SuspensionSystem,
    block: usize,
    states: Vec<Vec<Symbol>>,
    start: Vec<f64>,
    // per state: (next state, cumulative probability, appended symbol)
    rows: Vec<Vec<(usize, f64, Symbol)>>,
}

impl<'a> Sampler<'a> {
    pub fn new(sys: &'a SuspensionSystem, mu: &MarkovMeasure) -> Result<Self> {
        let states = mu.states().to_vec();
        if states.iter().flatten().any(|&s| s as usize >= sys.base().size()) || mu.graph().alphabet != sys.base().size() {
            return Err(Error::InvalidParameter("measure and system use different alphabets".into()));
        }
        let start = cumulative(mu.stationary());
        let rows = (0..states.len())
            .map(|v| {
                let succ = mu.successors(v);
                let probs: Vec<f64> = succ.iter().map(|&w| mu.transition(v, w)).collect();
                let cum = cumulative(&probs);
                succ.iter()
                    .zip(cum)
                    .map(|(&w, c)| (w, c, *states[w].last().expect("block >= 1")))
                    .collect()
            })
            .collect();
        Ok(Self { sys, block: mu.block_depth(), states, start, rows })
    }

    /// Fills `word` with `length` symbols whose law is the roof-biased
    /// stationary measure, and returns a uniform height in the first fiber.
    pub fn draw(&self, rng: &mut impl Rng, length: usize, word: &mut Vec<Symbol>) -> f64 {
        let k = self.sys.roof().depth();
        let head = k.max(self.block).min(length.max(k));
        loop {
            word.clear();
            let mut state = pick(&self.start, rng.random());
            word.extend_from_slice(&self.states[state]);
            while word.len() < head {
                state = self.step(state, rng);
                word.push(*self.states[state].last().expect("block >= 1"));
            }
            let roof = self.sys.roof().value_prefix(word);
            if rng.random::<f64>() * self.sys.roof_max() < roof {
                while word.len() < length {
                    state = self.step(state, rng);
                    word.push(*self.states[state].last().expect("block >= 1"));
                }
                return rng.random::<f64>() * roof;
            }
        }
    }

    fn step(&self, state: usize, rng: &mut impl Rng) -> usize {
        let row = &self.rows[state];
        let u: f64 = rng.random();
        row.iter().find(|(_, c, _)| u < *c).unwrap_or_else(|| row.last().expect("nonempty row")).0
    }
}

fn cumulative(probs: &[f64]) -> Vec<f64> {
    let mut acc = 0.0;
    probs
        .iter()
        .map(|p| {
            acc += p;
            acc
        })
        .collect()
}

fn pick(cum: &[f64], u: f64) -> usize {
    cum.iter().position(|&c| u < c).unwrap_or(cum.len() - 1)
}

/// Draws a point of the suspension from the flow measure induced by `mu`:
/// a base word of `horizon` symbols closed into a point, with a uniform
/// height.
pub fn sample_suspension(
    sys: &SuspensionSystem,
    mu: &MarkovMeasure,
    horizon: usize,
    rng: &mut impl Rng,
) -> Result<SuspensionPoint> {
    let sampler = Sampler::new(sys, mu)?;
    let mut word = Vec::with_capacity(horizon);
    let height = sampler.draw(rng, horizon, &mut word);
    let x = sys.base().close_word(&word)?;
    SuspensionPoint::new(sys, x, height)
}

/// `∫_0^t g(X_u(x, h)) du` for each `g`, reading only `word`.
pub(crate) fn flow_integrals(
    sys: &SuspensionSystem,
    observables: &[&LocallyConstantFunction],
    word: &[Symbol],
    height: f64,
    t: f64,
    out: &mut [f64],
) -> Result<()> {
    let reach = observables.iter().map(|g| g.depth()).chain([sys.roof().depth()]).max().unwrap_or(1);
    let mut sums: Vec<CompensatedSum> = vec![CompensatedSum::default(); observables.len()];
    let mut remaining = CompensatedSum::default();
    remaining.add(height);
    remaining.add(t);
    let mut lower = height;
    let mut j = 0;
    loop {
        if j + reach > word.len() {
            return Err(Error::HorizonTooShort { needed: j + reach, horizon: word.len() });
        }
        let window = &word[j..];
        let roof = sys.roof().value_prefix(window);
        let left = remaining.value();
        let upper = if left < roof { left } else { roof };
        for (sum, g) in sums.iter_mut().zip(observables) {
            sum.add(g.value_prefix(window) * (upper - lower));
        }
        if left < roof {
            break;
        }
        remaining.add(-roof);
        lower = 0.0;
        j += 1;
    }
    for (o, s) in out.iter_mut().zip(&sums) {
        *o = s.value();
    }
    Ok(())
}

/// Base symbols needed to integrate up to time `t` from any height.
fn horizon_for(sys: &SuspensionSystem, t: f64, reach: usize) -> usize {
    (t / sys.roof_min()).ceil() as usize + reach + HORIZON_MARGIN
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecayExperiment {
    pub times: Vec<f64>,
    pub samples: usize,
    pub seed: u64,
    /// Worker threads; `None` uses the global pool.
    pub workers: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalDecay {
    pub times: Vec<f64>,
    pub counts: Vec<u64>,
    pub samples: usize,
    pub frequency: Vec<f64>,
    pub log_frequency: Vec<f64>,
    pub in_fit: Vec<bool>,
    pub slope: Option<f64>,
    pub slope_se: Option<f64>,
    pub intercept: Option<f64>,
    /// Times at which no sample hit the event.
    pub empty: Vec<f64>,
    pub seed: u64,
}

impl EmpiricalDecay {
    fn from_counts(times: &[f64], counts: Vec<u64>, samples: usize, seed: u64) -> Self {
        let frequency: Vec<f64> = counts.iter().map(|&c| c as f64 / samples as f64).collect();
        let log_frequency: Vec<f64> = frequency.iter().map(|f| f.ln()).collect();
        let in_fit: Vec<bool> = counts.iter().map(|&c| c >= MIN_FIT_COUNT).collect();
        let (xs, ys): (Vec<f64>, Vec<f64>) =
            (0..times.len()).filter(|&i| in_fit[i]).map(|i| (times[i], log_frequency[i])).unzip();
        let fit = least_squares(&xs, &ys);
        let empty = times.iter().zip(&counts).filter(|(_, &c)| c == 0).map(|(&t, _)| t).collect();
        Self {
            times: times.to_vec(),
            samples,
            frequency,
            log_frequency,
            in_fit,
            slope: fit.map(|f| f.slope),
            slope_se: fit.map(|f| f.slope_se).filter(|se| se.is_finite()),
            intercept: fit.map(|f| f.intercept),
            empty,
            seed,
            counts,
        }
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,count,freq,log_freq\n");
        for i in 0..self.times.len() {
            out.push_str(&format!(
                "{},{},{},{}\n",
                self.times[i], self.counts[i], self.frequency[i], self.log_frequency[i]
            ));
        }
        out
    }
}

fn run_pool<T: Send>(workers: Option<usize>, job: impl FnOnce() -> T + Send) -> Result<T> {
    match workers {
        None => Ok(job()),
        Some(0) => Err(Error::InvalidParameter("worker count must be positive".into())),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map(|pool| pool.install(job))
            .map_err(|e| Error::InvalidParameter(format!("cannot start worker pool: {e}"))),
    }
}

fn count_events(
    sys: &SuspensionSystem,
    mu: &MarkovMeasure,
    observables: &[&LocallyConstantFunction],
    experiment: &DecayExperiment,
    event: impl Fn(&[f64]) -> bool + Sync,
) -> Result<EmpiricalDecay> {
    if experiment.samples == 0 {
        return Err(Error::InvalidParameter("at least one sample is required".into()));
    }
    if experiment.times.iter().any(|&t| !(t > 0.0) || !t.is_finite()) {
        return Err(Error::InvalidParameter("sampling times must be positive".into()));
    }
    let sampler = Sampler::new(sys, mu)?;
    let reach = observables.iter().map(|g| g.depth()).chain([sys.roof().depth()]).max().unwrap_or(1);
    let counts = run_pool(experiment.workers, || {
        experiment
            .times
            .iter()
            .enumerate()
            .map(|(row, &t)| {
                let horizon = horizon_for(sys, t, reach);
                let chunks = experiment.samples.div_ceil(CHUNK);
                (0..chunks)
                    .into_par_iter()
                    .map(|chunk| -> Result<u64> {
                        let mut word = Vec::with_capacity(horizon);
                        let mut integrals = vec![0.0; observables.len()];
                        let mut hits = 0;
                        let end = ((chunk + 1) * CHUNK).min(experiment.samples);
                        for sample in chunk * CHUNK..end {
                            let mut rng = stream(experiment.seed, row as u32, sample as u64);
                            let height = sampler.draw(&mut rng, horizon, &mut word);
                            flow_integrals(sys, observables, &word, height, t, &mut integrals)?;
                            integrals.iter_mut().for_each(|v| *v /= t);
                            if event(&integrals) {
                                hits += 1;
                            }
                        }
                        Ok(hits)
                    })
                    .collect::<Result<Vec<u64>>>()
                    .map(|v| v.iter().sum())
            })
            .collect::<Result<Vec<u64>>>()
    })??;
    Ok(EmpiricalDecay::from_counts(&experiment.times, counts, experiment.samples, experiment.seed))
}

/// Frequency of `(1/t) ∫_0^t ψ ∈ [a, b]` at each time.
pub fn estimate_deviation_level1(
    sys: &SuspensionSystem,
    mu: &MarkovMeasure,
    psi: &FlowObservable,
    interval: (f64, f64),
    experiment: &DecayExperiment,
) -> Result<EmpiricalDecay> {
    let (a, b) = interval;
    if !(a <= b) {
        return Err(Error::InvalidParameter(format!("empty interval [{a}, {b}]")));
    }
    count_events(sys, mu, &[psi.profile()], experiment, |avg| avg[0] >= a && avg[0] <= b)
}

/// Finite family of observables with weights `2^{-i}` defining a truncated
/// distance between empirical measures.
#[derive(Debug, Clone, PartialEq)]
pub struct TestBasis {
    observables: Vec<FlowObservable>,
    weights: Vec<f64>,
}

impl TestBasis {
    pub fn new(observables: Vec<FlowObservable>) -> Result<Self> {
        if observables.is_empty() {
            return Err(Error::InvalidParameter("test basis must not be empty".into()));
        }
        for (i, g) in observables.iter().enumerate() {
            let sup = g.profile().max().abs().max(g.profile().min().abs());
            if sup > 1.0 {
                return Err(Error::InvalidParameter(format!("basis observable {i} has sup norm {sup} > 1")));
            }
        }
        let weights = (1..=observables.len()).map(|i| 0.5f64.powi(i as i32)).collect();
        Ok(Self { observables, weights })
    }

    pub fn len(&self) -> usize {
        self.observables.len()
    }

    pub fn is_empty(&self) -> bool {
        self.observables.is_empty()
    }

    pub fn observables(&self) -> &[FlowObservable] {
        &self.observables
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// `Σ 2^{-i} |a_i - b_i|`.
    pub fn distance(&self, a: &[f64], b: &[f64]) -> f64 {
        self.weights.iter().zip(a.iter().zip(b)).map(|(w, (x, y))| w * (x - y).abs()).sum()
    }
}

/// Frequency of empirical averages within `radius` of `center` in the
/// truncated distance.
pub fn estimate_deviation_level2(
    sys: &SuspensionSystem,
    mu: &MarkovMeasure,
    basis: &TestBasis,
    center: &[f64],
    radius: f64,
    experiment: &DecayExperiment,
) -> Result<EmpiricalDecay> {
    if center.len() != basis.len() {
        return Err(Error::InvalidParameter(format!(
            "center has {} coordinates for a basis of {}",
            center.len(),
            basis.len()
        )));
    }
    let observables: Vec<&LocallyConstantFunction> = basis.observables.iter().map(|g| g.profile()).collect();
    count_events(sys, mu, &observables, experiment, |avg| basis.distance(avg, center) < radius)
}

/// For each `t`, the largest sampled `|∫_0^t ψ(X_u p_x) du - ∫_0^t ψ(X_u p_y) du|`
/// over pairs with `p_y` in the Bowen ball of `p_x` of radius `delta` and
/// length `max(t_grid)`, divided by `t`.
pub fn tempered_variation_profile(
    sys: &SuspensionSystem,
    mu: &MarkovMeasure,
    psi: &FlowObservable,
    delta: f64,
    t_grid: &[f64],
    pairs: usize,
    seed: u64,
) -> Result<Vec<(f64, f64)>> {
    if t_grid.iter().any(|&t| !(t > 0.0) || !t.is_finite()) {
        return Err(Error::InvalidParameter("profile times must be positive".into()));
    }
    let half = depth_for(delta / 2.0)?;
    let t_max = t_grid.iter().cloned().fold(0.0, f64::max);
    let reach = psi.profile().depth().max(sys.roof().depth());
    let agree = horizon_for(sys, t_max, reach) + half;
    let sampler = Sampler::new(sys, mu)?;
    let per_pair = (0..pairs)
        .into_par_iter()
        .map(|i| -> Result<Vec<f64>> {
            let mut rng = stream(seed, u32::MAX >> 8, i as u64);
            let mut word = Vec::new();
            let height = sampler.draw(&mut rng, agree + reach, &mut word);
            let x = sys.base().close_word(&word)?;
            let y = sys.base().close_word(&word[..agree])?;
            let shift = 0.5 * delta * rng.random::<f64>();
            let roof = sys.roof_at(&x, 0);
            let other = if height + shift < roof { height + shift } else { (height - shift).max(0.0) };
            let px = SuspensionPoint::new(sys, x, height)?;
            let py = SuspensionPoint::new(sys, y, other)?;
            t_grid
                .iter()
                .map(|&t| {
                    Ok((birkhoff_flow_integral(sys, &px, t, psi)? - birkhoff_flow_integral(sys, &py, t, psi)?).abs())
                })
                .collect()
        })
        .collect::<Result<Vec<Vec<f64>>>>()?;
    Ok(t_grid
        .iter()
        .enumerate()
        .map(|(j, &t)| (t, per_pair.iter().map(|d| d[j]).fold(0.0, f64::max) / t))
        .collect())
}
