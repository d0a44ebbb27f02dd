//! Direct minimization of the rate-function variational problem over
//! stationary Markov chains, independent of the free-energy path.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::rate::FlowProblem;
use crate::error::{Error, Result};
use crate::suspension::{FlowObservable, SuspensionSystem};
use crate::thermo::{equilibrium_markov, LocallyConstantFunction, MarkovMeasure};

/// Largest number of free transition logits the optimizer accepts.
pub const ORACLE_MAX_PARAMETERS: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleOptions {
    pub starts: usize,
    pub seed: u64,
}

impl Default for OracleOptions {
    fn default() -> Self {
        Self { starts: 6, seed: 0x5eed }
    }
}

/// `inf { P - (h_η + ∫φ̄ dη) / ∫ρ dη : ∫ψ̄ dη / ∫ρ dη = s }` over Markov
/// chains on the block graph, accurate to about `resolution`.
pub fn rate_function_oracle(
    sys: &SuspensionSystem,
    phi: &FlowObservable,
    psi: &FlowObservable,
    s: f64,
    resolution: f64,
) -> Result<f64> {
    rate_function_oracle_with(sys, phi, psi, s, resolution, OracleOptions::default())
}

pub fn rate_function_oracle_with(
    sys: &SuspensionSystem,
    phi: &FlowObservable,
    psi: &FlowObservable,
    s: f64,
    resolution: f64,
    options: OracleOptions,
) -> Result<f64> {
    let problem = FlowProblem::new(sys, phi, psi)?;
    let objective = Objective::new(&problem, s)?;
    let dim = objective.dimension();
    if dim > ORACLE_MAX_PARAMETERS {
        return Err(Error::BudgetExceeded { needed: dim as u128, budget: ORACLE_MAX_PARAMETERS as u128 });
    }
    let tolerance = (resolution * 1e-3).min(1e-8);
    let mut rng = ChaCha8Rng::seed_from_u64(options.seed);
    let mut best: Option<(f64, Vec<f64>)> = None;
    for start in 0..options.starts.max(1) {
        let theta0: Vec<f64> =
            (0..dim).map(|_| if start == 0 { 0.0 } else { rng.random_range(-2.0..2.0) }).collect();
        let Some(theta) = augmented_lagrangian(&objective, theta0) else { continue };
        let Some((value, violation)) = objective.evaluate(&theta) else { continue };
        if violation.abs() > tolerance {
            continue;
        }
        if best.as_ref().is_none_or(|(v, _)| value < *v) {
            best = Some((value, theta));
        }
    }
    let (value, theta) = best.ok_or(Error::BracketNotFound)?;
    Ok(refine(&objective, theta, value, tolerance))
}

struct Objective {
    sys: SuspensionSystem,
    block: usize,
    successors: Vec<Vec<usize>>,
    phi_bar: LocallyConstantFunction,
    psi_bar: LocallyConstantFunction,
    flow_pressure: f64,
    target: f64,
}

impl Objective {
    fn new(problem: &FlowProblem, target: f64) -> Result<Self> {
        let sys = problem.system().clone();
        let depth = problem.phi_bar().depth().max(problem.psi_bar().depth()).max(sys.roof().depth());
        let block = depth.saturating_sub(1).max(1);
        let flat = LocallyConstantFunction::from_fn(sys.base(), block + 1, |_| 0.0)?;
        let template = equilibrium_markov(sys.base(), &flat)?;
        let successors = (0..template.states().len()).map(|v| template.successors(v).to_vec()).collect();
        let flow_pressure = problem.free_energy(0.0)?;
        Ok(Self {
            sys,
            block,
            successors,
            phi_bar: problem.phi_bar().clone(),
            psi_bar: problem.psi_bar().clone(),
            flow_pressure,
            target,
        })
    }

    fn dimension(&self) -> usize {
        self.successors.iter().map(|k| k.len() - 1).sum()
    }

    fn chain(&self, theta: &[f64]) -> Option<MarkovMeasure> {
        let states = self.successors.len();
        let mut rows = vec![vec![0.0; states]; states];
        let mut offset = 0;
        for (row, succ) in rows.iter_mut().zip(&self.successors) {
            let mut logits = vec![0.0];
            logits.extend_from_slice(&theta[offset..offset + succ.len() - 1]);
            offset += succ.len() - 1;
            let top = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let weights: Vec<f64> = logits.iter().map(|l| (l - top).exp()).collect();
            let total: f64 = weights.iter().sum();
            for (&w, &p) in succ.iter().zip(&weights) {
                row[w] = p / total;
            }
        }
        MarkovMeasure::from_transition_matrix(self.sys.base(), self.block, &rows).ok()
    }

    /// Objective value and constraint violation.
    fn evaluate(&self, theta: &[f64]) -> Option<(f64, f64)> {
        let eta = self.chain(theta)?;
        let roof = eta.integral(self.sys.roof()).ok()?;
        let value = self.flow_pressure - (eta.entropy() + eta.integral(&self.phi_bar).ok()?) / roof;
        let violation = eta.integral(&self.psi_bar).ok()? / roof - self.target;
        (value.is_finite() && violation.is_finite()).then_some((value, violation))
    }
}

fn augmented_lagrangian(objective: &Objective, mut theta: Vec<f64>) -> Option<Vec<f64>> {
    let mut multiplier = 0.0;
    let mut penalty = 10.0;
    let mut last_violation = f64::INFINITY;
    for _ in 0..40 {
        let (l, mu) = (multiplier, penalty);
        let merit = |t: &[f64]| objective.evaluate(t).map(|(f, g)| f + l * g + 0.5 * mu * g * g);
        theta = bfgs(&merit, theta)?;
        let (_, g) = objective.evaluate(&theta)?;
        if g.abs() < 1e-12 {
            break;
        }
        multiplier += penalty * g;
        if g.abs() > 0.25 * last_violation {
            penalty *= 10.0;
        }
        last_violation = g.abs();
        if penalty > 1e12 {
            break;
        }
    }
    Some(theta)
}

fn gradient(f: &impl Fn(&[f64]) -> Option<f64>, x: &[f64]) -> Option<Vec<f64>> {
    let mut probe = x.to_vec();
    (0..x.len())
        .map(|i| {
            let h = 1e-6 * (1.0 + x[i].abs());
            probe[i] = x[i] + h;
            let up = f(&probe)?;
            probe[i] = x[i] - h;
            let down = f(&probe)?;
            probe[i] = x[i];
            Some((up - down) / (2.0 * h))
        })
        .collect()
}

fn bfgs(f: &impl Fn(&[f64]) -> Option<f64>, mut x: Vec<f64>) -> Option<Vec<f64>> {
    let n = x.len();
    if n == 0 {
        return Some(x);
    }
    let mut h = vec![vec![0.0; n]; n];
    for (i, row) in h.iter_mut().enumerate() {
        row[i] = 1.0;
    }
    let mut fx = f(&x)?;
    let mut g = gradient(f, &x)?;
    for _ in 0..500 {
        if g.iter().map(|v| v.abs()).fold(0.0, f64::max) < 1e-10 {
            break;
        }
        let dir: Vec<f64> = (0..n).map(|i| -(0..n).map(|j| h[i][j] * g[j]).sum::<f64>()).collect();
        let slope: f64 = dir.iter().zip(&g).map(|(d, g)| d * g).sum();
        let (dir, slope) = if slope < 0.0 {
            (dir, slope)
        } else {
            for (i, row) in h.iter_mut().enumerate() {
                row.iter_mut().enumerate().for_each(|(j, v)| *v = if i == j { 1.0 } else { 0.0 });
            }
            let d: Vec<f64> = g.iter().map(|v| -v).collect();
            let s = -g.iter().map(|v| v * v).sum::<f64>();
            (d, s)
        };
        let mut step = 1.0;
        let mut accepted = None;
        for _ in 0..60 {
            let trial: Vec<f64> = x.iter().zip(&dir).map(|(a, d)| a + step * d).collect();
            if let Some(ft) = f(&trial) {
                if ft <= fx + 1e-4 * step * slope {
                    accepted = Some((trial, ft));
                    break;
                }
            }
            step *= 0.5;
        }
        let Some((next, fnext)) = accepted else { break };
        let gnext = gradient(f, &next)?;
        let s: Vec<f64> = next.iter().zip(&x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = gnext.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy: f64 = s.iter().zip(&y).map(|(a, b)| a * b).sum();
        if sy > 1e-16 {
            let hy: Vec<f64> = (0..n).map(|i| (0..n).map(|j| h[i][j] * y[j]).sum()).collect();
            let yhy: f64 = y.iter().zip(&hy).map(|(a, b)| a * b).sum();
            for i in 0..n {
                for j in 0..n {
                    h[i][j] += (1.0 + yhy / sy) * s[i] * s[j] / sy - (hy[i] * s[j] + s[i] * hy[j]) / sy;
                }
            }
        }
        let improvement = fx - fnext;
        x = next;
        fx = fnext;
        g = gnext;
        if improvement.abs() < 1e-15 * (1.0 + fx.abs()) {
            break;
        }
    }
    Some(x)
}

// coordinate pattern search on the objective among points that keep the
// constraint within tolerance
fn refine(objective: &Objective, mut theta: Vec<f64>, mut value: f64, tolerance: f64) -> f64 {
    let mut step = 0.1;
    while step > 1e-9 {
        let mut improved = false;
        for i in 0..theta.len() {
            for sign in [1.0, -1.0] {
                let mut trial = theta.clone();
                trial[i] += sign * step;
                if let Some((v, g)) = objective.evaluate(&trial) {
                    if g.abs() <= tolerance && v < value {
                        theta = trial;
                        value = v;
                        improved = true;
                    }
                }
            }
        }
        if !improved {
            step *= 0.5;
        }
    }
    value
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::deviations::rate::rate_function;
    use crate::sft::TransitionSystem;
    use std::f64::consts::LN_2;

    fn bernoulli() -> (SuspensionSystem, FlowObservable, FlowObservable) {
        let base = TransitionSystem::full_shift(2).unwrap();
        let sys = SuspensionSystem::new(base.clone(), LocallyConstantFunction::constant(&base, 1.0)).unwrap();
        let phi = FlowObservable::new(LocallyConstantFunction::constant(&base, -LN_2));
        let psi = FlowObservable::new(LocallyConstantFunction::indicator(&base, &[0]).unwrap());
        (sys, phi, psi)
    }

    #[test]
    fn oracle_matches_closed_form() {
        let (sys, phi, psi) = bernoulli();
        let i = rate_function_oracle(&sys, &phi, &psi, 0.3, 1e-6).unwrap();
        assert!((i - 0.082282).abs() < 1e-5, "{i}");
        let i = rate_function_oracle(&sys, &phi, &psi, 0.5, 1e-6).unwrap();
        assert!(i.abs() < 1e-6);
    }

    #[test]
    fn oracle_agrees_with_legendre_on_depth_two_data() {
        let base = TransitionSystem::from_rows(&[vec![1, 1, 0], vec![1, 0, 1], vec![1, 1, 1]]).unwrap();
        let roof = LocallyConstantFunction::from_fn(&base, 2, |w| 0.8 + 0.3 * w[0] as f64 + 0.2 * w[1] as f64).unwrap();
        let sys = SuspensionSystem::new(base.clone(), roof).unwrap();
        let phi = FlowObservable::new(LocallyConstantFunction::from_fn(&base, 1, |w| 0.1 * w[0] as f64).unwrap());
        let psi = FlowObservable::new(LocallyConstantFunction::indicator(&base, &[2]).unwrap());
        let problem = FlowProblem::new(&sys, &phi, &psi).unwrap();
        let mean = problem.derivative(0.0).unwrap();
        for s in [mean - 0.05, mean + 0.08] {
            let (legendre, _) = rate_function(&sys, &phi, &psi, s).unwrap();
            let oracle = rate_function_oracle(&sys, &phi, &psi, s, 1e-6).unwrap();
            assert!((legendre - oracle).abs() < 1e-5, "s={s}: {legendre} vs {oracle}");
        }
    }
}
