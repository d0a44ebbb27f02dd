//! Suspension semiflows over a subshift of finite type with a locally
//! constant roof.

use crate::error::{Error, Result};
use crate::linalg::CompensatedSum;
use crate::sft::{SymbolicPoint, TransitionSystem};
use crate::thermo::{LocallyConstantFunction, MarkovMeasure};

#[derive(Debug, Clone, PartialEq)]
pub struct SuspensionSystem {
    base: TransitionSystem,
    roof: LocallyConstantFunction,
    roof_min: f64,
    roof_max: f64,
}

impl SuspensionSystem {
    pub fn new(base: TransitionSystem, roof: LocallyConstantFunction) -> Result<Self> {
        if roof.alphabet() != base.size() {
            return Err(Error::InvalidParameter("roof is defined over a different alphabet".into()));
        }
        let roof_min = roof.min();
        if !(roof_min > 0.0) {
            return Err(Error::NonPositiveRoof(roof_min));
        }
        let roof_max = roof.max();
        Ok(Self { base, roof, roof_min, roof_max })
    }

    pub fn base(&self) -> &TransitionSystem {
        &self.base
    }

    pub fn roof(&self) -> &LocallyConstantFunction {
        &self.roof
    }

    pub fn roof_min(&self) -> f64 {
        self.roof_min
    }

    pub fn roof_max(&self) -> f64 {
        self.roof_max
    }

    /// `ρ(σ^j x)`.
    #[inline]
    pub fn roof_at(&self, x: &SymbolicPoint, j: usize) -> f64 {
        self.roof.eval_at(x, j)
    }

    /// `S_n ρ(x)`, summed with compensation.
    pub fn roof_sum(&self, x: &SymbolicPoint, n: usize) -> f64 {
        let mut sum = CompensatedSum::default();
        for j in 0..n {
            sum.add(self.roof_at(x, j));
        }
        sum.value()
    }
}

/// A point `(x, s)` of the suspension space with `0 ≤ s < ρ(x)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SuspensionPoint {
    base: SymbolicPoint,
    height: f64,
}

impl SuspensionPoint {
    pub fn new(sys: &SuspensionSystem, base: SymbolicPoint, height: f64) -> Result<Self> {
        let roof = sys.roof_at(&base, 0);
        if !(height >= 0.0 && height < roof) {
            return Err(Error::InvalidHeight { height, roof });
        }
        Ok(Self { base, height })
    }

    pub fn base(&self) -> &SymbolicPoint {
        &self.base
    }

    pub fn height(&self) -> f64 {
        self.height
    }
}

/// Observable constant along each fiber: `ψ(x, s) = u(x)`.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowObservable {
    profile: LocallyConstantFunction,
}

impl FlowObservable {
    pub fn new(profile: LocallyConstantFunction) -> Self {
        Self { profile }
    }

    pub fn profile(&self) -> &LocallyConstantFunction {
        &self.profile
    }
}

/// The number `n` of fibers completed by time `t` from `(x, s)` and the
/// height `s + t - S_n ρ(x)` reached in fiber `n`.
pub fn lap_number(sys: &SuspensionSystem, x: &SymbolicPoint, s: f64, t: f64) -> Result<(usize, f64)> {
    if !(t >= 0.0) || !t.is_finite() {
        return Err(Error::NegativeTime(t));
    }
    let roof = sys.roof_at(x, 0);
    if !(s >= 0.0 && s < roof) {
        return Err(Error::InvalidHeight { height: s, roof });
    }
    let mut remaining = CompensatedSum::default();
    remaining.add(s);
    remaining.add(t);
    let mut n = 0;
    loop {
        let r = sys.roof_at(x, n);
        if remaining.value() < r {
            return Ok((n, remaining.value().max(0.0)));
        }
        remaining.add(-r);
        n += 1;
    }
}

/// `X_t(p)`.
pub fn flow(sys: &SuspensionSystem, p: &SuspensionPoint, t: f64) -> Result<SuspensionPoint> {
    let (n, height) = lap_number(sys, &p.base, p.height, t)?;
    Ok(SuspensionPoint { base: p.base.shift_by(n), height })
}

/// The pseudo-distance: the smallest of the same-fiber comparison and the two
/// comparisons across one fiber boundary.
pub fn d_pi(sys: &SuspensionSystem, p1: &SuspensionPoint, p2: &SuspensionPoint) -> f64 {
    let (x, s) = (&p1.base, p1.height);
    let (y, t) = (&p2.base, p2.height);
    let same = x.distance_shifted(0, y, 0) + (s - t).abs();
    let forward = x.distance_shifted(1, y, 0) + sys.roof_at(x, 0) - s + t;
    let backward = x.distance_shifted(0, y, 1) + sys.roof_at(y, 0) - t + s;
    same.min(forward).min(backward)
}

/// `ψ̄ = u ρ`, the integral of `ψ` over one fiber.
pub fn reduced_observable(sys: &SuspensionSystem, psi: &FlowObservable) -> Result<LocallyConstantFunction> {
    psi.profile.combine(&sys.roof, |u, r| u * r)
}

/// `∫_0^t ψ(X_u(p)) du`, exact for fiberwise-constant `ψ`.
pub fn birkhoff_flow_integral(sys: &SuspensionSystem, p: &SuspensionPoint, t: f64, psi: &FlowObservable) -> Result<f64> {
    let (n, partial) = lap_number(sys, &p.base, p.height, t)?;
    let x = &p.base;
    let u = &psi.profile;
    if n == 0 {
        return Ok(u.eval_at(x, 0) * t);
    }
    let mut total = CompensatedSum::default();
    total.add(u.eval_at(x, 0) * (sys.roof_at(x, 0) - p.height));
    for j in 1..n {
        total.add(u.eval_at(x, j) * sys.roof_at(x, j));
    }
    total.add(u.eval_at(x, n) * partial);
    Ok(total.value())
}

/// Flow entropy, flow integral and mean roof of the flow-invariant measure
/// induced by `η`.
pub fn abramov(sys: &SuspensionSystem, eta: &MarkovMeasure, phi_bar: &LocallyConstantFunction) -> Result<(f64, f64, f64)> {
    let mean_roof = eta.integral(&sys.roof)?;
    let integral = eta.integral(phi_bar)?;
    Ok((eta.entropy() / mean_roof, integral / mean_roof, mean_roof))
}
