//! Flow free energy and its Legendre transform.

use crate::error::{Error, Result};
use crate::suspension::{reduced_observable, FlowObservable, SuspensionSystem};
use crate::thermo::{equilibrium_markov, pressure, LocallyConstantFunction, MarkovMeasure};

const BISECTION_WIDTH: f64 = 1e-6;
const NEWTON_STEPS: usize = 20;
const PRESSURE_TOLERANCE: f64 = 1e-11;
const MAX_TILT: f64 = 50.0;
const ENDPOINT_MARGIN: f64 = 1e-9;

/// Reduced potential and observable of a flow problem, lifted to the roof's
/// alphabet so that tilts are cheap to form.
#[derive(Debug, Clone)]
pub struct FlowProblem {
    sys: SuspensionSystem,
    phi_bar: LocallyConstantFunction,
    psi_bar: LocallyConstantFunction,
}

impl FlowProblem {
    pub fn new(sys: &SuspensionSystem, phi: &FlowObservable, psi: &FlowObservable) -> Result<Self> {
        Ok(Self { sys: sys.clone(), phi_bar: reduced_observable(sys, phi)?, psi_bar: reduced_observable(sys, psi)? })
    }

    pub fn system(&self) -> &SuspensionSystem {
        &self.sys
    }

    pub fn phi_bar(&self) -> &LocallyConstantFunction {
        &self.phi_bar
    }

    pub fn psi_bar(&self) -> &LocallyConstantFunction {
        &self.psi_bar
    }

    /// `φ̄ + q ψ̄ - c ρ`.
    pub fn tilt(&self, q: f64, c: f64) -> Result<LocallyConstantFunction> {
        self.phi_bar.add_scaled(&self.psi_bar, q)?.add_scaled(self.sys.roof(), -c)
    }

    fn pressure_at(&self, q: f64, c: f64) -> Result<f64> {
        pressure(self.sys.base(), &self.tilt(q, c)?)
    }

    /// The root `c(q)` of `c ↦ P(φ̄ + q ψ̄ - c ρ)` with the equilibrium state
    /// at the root.
    pub fn solve(&self, q: f64) -> Result<(f64, MarkovMeasure)> {
        let base = self.phi_bar.add_scaled(&self.psi_bar, q)?;
        let entropy = pressure(self.sys.base(), &LocallyConstantFunction::constant(self.sys.base(), 0.0))?;
        let (rmin, rmax) = (self.sys.roof_min(), self.sys.roof_max());
        let mut lo = base.min() / rmax - 1.0;
        let mut hi = base.max() / rmin + entropy + 1.0;
        let mut width = hi - lo;
        let mut expansions = 0;
        while self.pressure_at(q, lo)? < 0.0 {
            lo -= width;
            width *= 2.0;
            expansions += 1;
            if expansions > 60 {
                return Err(Error::BracketNotFound);
            }
        }
        while self.pressure_at(q, hi)? > 0.0 {
            hi += width;
            width *= 2.0;
            expansions += 1;
            if expansions > 60 {
                return Err(Error::BracketNotFound);
            }
        }
        while hi - lo > BISECTION_WIDTH {
            let mid = 0.5 * (lo + hi);
            if self.pressure_at(q, mid)? > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let mut c = 0.5 * (lo + hi);
        let mut measure = equilibrium_markov(self.sys.base(), &self.tilt(q, c)?)?;
        for _ in 0..NEWTON_STEPS {
            let p = measure.log_perron();
            if p.abs() <= PRESSURE_TOLERANCE {
                break;
            }
            // dP/dc = -∫ρ dη_c
            let slope = measure.integral(self.sys.roof())?;
            c += p / slope;
            measure = equilibrium_markov(self.sys.base(), &self.tilt(q, c)?)?;
        }
        Ok((c, measure))
    }

    pub fn free_energy(&self, q: f64) -> Result<f64> {
        Ok(self.solve(q)?.0)
    }

    /// `Λ'(q) = ∫ψ̄ dη_q / ∫ρ dη_q`.
    pub fn derivative(&self, q: f64) -> Result<f64> {
        let (_, eta) = self.solve(q)?;
        Ok(eta.integral(&self.psi_bar)? / eta.integral(self.sys.roof())?)
    }

    /// Closure of the set of values `∫ψ̄ dη / ∫ρ dη` over invariant `η`: the
    /// extreme cycle ratios of `ψ̄` against `ρ`.
    pub fn feasible_range(&self) -> Result<(f64, f64)> {
        let depth = self.psi_bar.depth().max(self.sys.roof().depth());
        let block = depth.saturating_sub(1).max(1);
        let edges = self.sys.base().admissible_words(block + 1);
        let graph = RatioGraph::new(self.sys.base(), block, &edges, &self.psi_bar, self.sys.roof());
        Ok((-graph.max_ratio(-1.0), graph.max_ratio(1.0)))
    }

    /// `I(s) = sup_q [q s - Λ(q)]` and the maximizing `q`.
    pub fn rate(&self, s: f64) -> Result<(f64, f64)> {
        let (min, max) = self.feasible_range()?;
        if !(s > min + ENDPOINT_MARGIN && s < max - ENDPOINT_MARGIN) {
            return Err(Error::OutsideFeasibleRange { s, min, max });
        }
        let c0 = self.free_energy(0.0)?;
        let mean = self.derivative(0.0)?;
        let q = if s == mean {
            0.0
        } else {
            let dir = if s > mean { 1.0 } else { -1.0 };
            let (mut inner, mut outer) = (0.0, dir);
            while dir * (self.derivative(outer)? - s) < 0.0 {
                inner = outer;
                outer *= 2.0;
                if outer.abs() > MAX_TILT {
                    if dir * (self.derivative(dir * MAX_TILT)? - s) < 0.0 {
                        return Err(Error::BracketNotFound);
                    }
                    outer = dir * MAX_TILT;
                    break;
                }
            }
            for _ in 0..200 {
                let mid = 0.5 * (inner + outer);
                if mid == inner || mid == outer || (outer - inner).abs() <= 1e-13 * (1.0 + mid.abs()) {
                    break;
                }
                if dir * (self.derivative(mid)? - s) < 0.0 {
                    inner = mid;
                } else {
                    outer = mid;
                }
            }
            0.5 * (inner + outer)
        };
        let lambda = self.free_energy(q)? - c0;
        Ok(((q * s - lambda).max(0.0), q))
    }
}

/// Edge-weighted block graph for extreme cycle ratios.
struct RatioGraph {
    nodes: usize,
    edges: Vec<(usize, usize, f64, f64)>,
}

impl RatioGraph {
    fn new(
        sys: &crate::sft::TransitionSystem,
        block: usize,
        words: &[Vec<crate::sft::Symbol>],
        num: &LocallyConstantFunction,
        den: &LocallyConstantFunction,
    ) -> Self {
        let states = sys.admissible_words(block);
        let index = |w: &[crate::sft::Symbol]| states.iter().position(|s| s.as_slice() == w).expect("admissible");
        let edges = words
            .iter()
            .map(|w| (index(&w[..block]), index(&w[1..]), num.value_prefix(w), den.value_prefix(w)))
            .collect();
        Self { nodes: states.len(), edges }
    }

    /// Karp's maximum cycle mean of `w - λ d` with weights scaled by `sign`.
    fn max_cycle_mean(&self, sign: f64, lambda: f64) -> f64 {
        let n = self.nodes;
        let mut table = vec![vec![f64::NEG_INFINITY; n]; n + 1];
        table[0].iter_mut().for_each(|v| *v = 0.0);
        for k in 1..=n {
            for &(from, to, w, d) in &self.edges {
                let candidate = table[k - 1][from] + sign * w - lambda * d;
                if candidate > table[k][to] {
                    table[k][to] = candidate;
                }
            }
        }
        (0..n)
            .filter(|&v| table[n][v] > f64::NEG_INFINITY)
            .map(|v| {
                (0..n)
                    .filter(|&k| table[k][v] > f64::NEG_INFINITY)
                    .map(|k| (table[n][v] - table[k][v]) / (n - k) as f64)
                    .fold(f64::INFINITY, f64::min)
            })
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Largest cycle ratio of `sign · w` against `d > 0`.
    fn max_ratio(&self, sign: f64) -> f64 {
        let ratios = self.edges.iter().map(|&(_, _, w, d)| sign * w / d);
        let mut lo = ratios.clone().fold(f64::INFINITY, f64::min);
        let mut hi = ratios.fold(f64::NEG_INFINITY, f64::max);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.max_cycle_mean(sign, mid) >= 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        lo
    }
}

/// `c(q)`: the root of `P(φ̄ + q ψ̄ - c ρ) = 0`.
pub fn flow_free_energy(sys: &SuspensionSystem, phi: &FlowObservable, psi: &FlowObservable, q: f64) -> Result<f64> {
    FlowProblem::new(sys, phi, psi)?.free_energy(q)
}

/// `(I(s), q*)`.
pub fn rate_function(sys: &SuspensionSystem, phi: &FlowObservable, psi: &FlowObservable, s: f64) -> Result<(f64, f64)> {
    FlowProblem::new(sys, phi, psi)?.rate(s)
}

/// Flow pressure of `φ` and the base measure inducing its equilibrium state.
pub fn flow_equilibrium(sys: &SuspensionSystem, phi: &FlowObservable) -> Result<(f64, MarkovMeasure)> {
    let zero = FlowObservable::new(LocallyConstantFunction::constant(sys.base(), 0.0));
    FlowProblem::new(sys, phi, &zero)?.solve(0.0)
}

#[derive(Debug, Clone, PartialEq)]
pub struct FreeEnergyCurve {
    pub q: Vec<f64>,
    pub c: Vec<f64>,
    /// `Λ(q) = c(q) - c(0)`.
    pub lambda: Vec<f64>,
    pub derivative: Vec<f64>,
}

pub fn free_energy_curve(
    sys: &SuspensionSystem,
    phi: &FlowObservable,
    psi: &FlowObservable,
    qs: &[f64],
) -> Result<FreeEnergyCurve> {
    let problem = FlowProblem::new(sys, phi, psi)?;
    let c0 = problem.free_energy(0.0)?;
    let mut curve = FreeEnergyCurve { q: qs.to_vec(), c: vec![], lambda: vec![], derivative: vec![] };
    for &q in qs {
        let (c, eta) = problem.solve(q)?;
        curve.c.push(c);
        curve.lambda.push(c - c0);
        curve.derivative.push(eta.integral(problem.psi_bar())? / eta.integral(sys.roof())?);
    }
    Ok(curve)
}

#[derive(Debug, Clone, PartialEq)]
pub struct RateFunctionProfile {
    pub s: Vec<f64>,
    /// `+∞` outside the feasible range.
    pub rate: Vec<f64>,
    /// NaN outside the feasible range.
    pub q_star: Vec<f64>,
    pub feasible_min: f64,
    pub feasible_max: f64,
}

impl RateFunctionProfile {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("s,I,q_star\n");
        for i in 0..self.s.len() {
            out.push_str(&format!("{},{},{}\n", self.s[i], self.rate[i], self.q_star[i]));
        }
        out
    }
}

pub fn rate_function_profile(
    sys: &SuspensionSystem,
    phi: &FlowObservable,
    psi: &FlowObservable,
    ss: &[f64],
) -> Result<RateFunctionProfile> {
    let problem = FlowProblem::new(sys, phi, psi)?;
    let (feasible_min, feasible_max) = problem.feasible_range()?;
    let mut profile = RateFunctionProfile { s: ss.to_vec(), rate: vec![], q_star: vec![], feasible_min, feasible_max };
    for &s in ss {
        match problem.rate(s) {
            Ok((i, q)) => {
                profile.rate.push(i);
                profile.q_star.push(q);
            }
            Err(Error::OutsideFeasibleRange { .. }) => {
                profile.rate.push(f64::INFINITY);
                profile.q_star.push(f64::NAN);
            }
            Err(e) => return Err(e),
        }
    }
    Ok(profile)
}
