//! Constructive gluing of orbit segments, for the shift and for suspension
//! flows over it, with sampled verification of the flow construction.

use std::fmt;

use crate::error::{Error, Result};
use crate::linalg::CompensatedSum;
use crate::sft::{depth_for, pow2_neg, SymbolicPoint, TransitionSystem};
use crate::suspension::{d_pi, lap_number, SuspensionPoint, SuspensionSystem};

/// Default multiple of `ε` that sampled `d_π` values may reach.
pub const DEFAULT_SHADOW_THRESHOLD: f64 = 3.0;

/// A point whose orbit shadows a list of orbit segments.
#[derive(Debug, Clone, PartialEq)]
pub struct GluedOrbit {
    pub point: SymbolicPoint,
    /// `p_i`: steps between the last shadowed iterate of segment `i` and the
    /// first of segment `i + 1`.
    pub gaps: Vec<usize>,
    /// Iterate of `point` at which each segment is shadowed.
    pub offsets: Vec<usize>,
    pub bound: usize,
    pub epsilon: f64,
}

/// Sup of `|S_n ρ(x) - S_n ρ(y)|` over `y` in Bowen balls of radius `xi`:
/// zero once `xi` forces agreement on every symbol the roof reads.
pub fn distortion_constant(sys: &SuspensionSystem, xi: f64) -> Result<f64> {
    if !(xi > 0.0) || !xi.is_finite() {
        return Err(Error::NonPositiveEpsilon(xi));
    }
    let threshold = pow2_neg(sys.roof().depth() - 1);
    if xi > threshold {
        return Err(Error::ScaleTooCoarse { xi, threshold });
    }
    Ok(0.0)
}

/// `N(ε)`: the largest connection time plus `N_ε`.
pub fn discrete_gluing_bound(sys: &TransitionSystem, epsilon: f64) -> Result<usize> {
    Ok(sys.max_connect_time() + depth_for(epsilon)?)
}

/// Concatenates the Bowen-cylinder prefixes of the segments, joined by
/// shortest connecting paths, and closes the word into an eventually periodic
/// point.
pub fn glue_discrete(sys: &TransitionSystem, segments: &[(SymbolicPoint, usize)], epsilon: f64) -> Result<GluedOrbit> {
    if segments.is_empty() {
        return Err(Error::EmptySegments);
    }
    let depth = depth_for(epsilon)?;
    let mut word = Vec::new();
    let mut offsets = Vec::with_capacity(segments.len());
    for (x, n) in segments {
        if *n == 0 {
            return Err(Error::InvalidLength(0));
        }
        sys.check_word(&x.prefix(1))?;
        let prefix = x.prefix(n - 1 + depth);
        if let (Some(&last), Some(&first)) = (word.last(), prefix.first()) {
            let path = sys.shortest_path(last, first);
            word.extend_from_slice(&path[1..path.len() - 1]);
        }
        offsets.push(word.len());
        word.extend_from_slice(&prefix);
    }
    let gaps = offsets
        .windows(2)
        .zip(segments)
        .map(|(o, (_, n))| o[1] - o[0] - (n - 1))
        .collect();
    Ok(GluedOrbit {
        point: sys.close_word(&word)?,
        gaps,
        offsets,
        bound: discrete_gluing_bound(sys, epsilon)?,
        epsilon,
    })
}

/// Checks `d(σ^{offset_i + j} x, σ^j x_i) < ε` for every segment and every
/// `0 ≤ j < n_i`.
pub fn verify_discrete(glued: &GluedOrbit, segments: &[(SymbolicPoint, usize)]) -> bool {
    glued.offsets.len() == segments.len()
        && segments.iter().zip(&glued.offsets).all(|((x, n), &offset)| {
            (0..*n).all(|j| glued.point.distance_shifted(offset + j, x, j) < glued.epsilon)
        })
}

/// Internal scale `ξ` and gap bound `T(ε)` of the flow construction.
pub fn flow_gluing_scale(sys: &SuspensionSystem, epsilon: f64) -> Result<(f64, f64)> {
    if !(epsilon > 0.0) || !epsilon.is_finite() {
        return Err(Error::NonPositiveEpsilon(epsilon));
    }
    let xi = (epsilon / 4.0).min(pow2_neg(sys.roof().depth() - 1));
    let bound = (discrete_gluing_bound(sys.base(), xi)? + 2) as f64 * sys.roof_max();
    Ok((xi, bound))
}

/// Relation between the lap reached by the glued orbit at the end of a
/// segment and the lap the segment itself ends in.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LapAlignment {
    Aligned,
    Ahead,
    Behind,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct JunctionCase {
    pub alignment: LapAlignment,
    /// Whether the next starting height fits under the roof of the fiber
    /// the glued orbit enters it in.
    pub within_fiber: bool,
}

impl fmt::Display for JunctionCase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let case = match self.alignment {
            LapAlignment::Aligned => "i",
            LapAlignment::Ahead => "ii",
            LapAlignment::Behind => "iii",
        };
        let sub = if self.within_fiber { "a" } else { "b" };
        write!(f, "{case}{sub}")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FlowGluedOrbit {
    pub start: SuspensionPoint,
    /// `p_i`: flow time between the end of segment `i` and the start of
    /// segment `i + 1`.
    pub gaps: Vec<f64>,
    pub bound: f64,
    pub xi: f64,
    pub cases: Vec<JunctionCase>,
    /// Lap number of each segment.
    pub laps: Vec<usize>,
    pub discrete: GluedOrbit,
}

impl FlowGluedOrbit {
    /// Flow time at which each segment starts, rebuilt from the gaps.
    pub fn segment_starts(&self, segments: &[(SuspensionPoint, f64)]) -> Vec<f64> {
        let mut starts = Vec::with_capacity(segments.len());
        let mut tau = CompensatedSum::default();
        for (i, (_, t)) in segments.iter().enumerate() {
            starts.push(tau.value());
            tau.add(*t);
            if let Some(p) = self.gaps.get(i) {
                tau.add(*p);
            }
        }
        starts
    }
}

/// Glues flow segments `(x_i, s_i)` run for times `t_i`.
///
/// The base orbits are glued at scale `ξ` with one extra iterate per segment,
/// so the roof sums of the glued point and of each `x_i` agree over the whole
/// segment and every junction is in the aligned case.
pub fn glue_flow(sys: &SuspensionSystem, segments: &[(SuspensionPoint, f64)], epsilon: f64) -> Result<FlowGluedOrbit> {
    if segments.is_empty() {
        return Err(Error::EmptySegments);
    }
    let (xi, bound) = flow_gluing_scale(sys, epsilon)?;
    distortion_constant(sys, xi)?;
    let laps = segments
        .iter()
        .map(|(p, t)| lap_number(sys, p.base(), p.height(), *t).map(|(n, _)| n))
        .collect::<Result<Vec<_>>>()?;
    let base_segments: Vec<(SymbolicPoint, usize)> =
        segments.iter().zip(&laps).map(|((p, _), &n)| (p.base().clone(), n + 1)).collect();
    let discrete = glue_discrete(sys.base(), &base_segments, xi)?;
    let x = &discrete.point;
    let s1 = segments[0].0.height();
    let start = SuspensionPoint::new(sys, x.clone(), s1)?;

    let last_offset = *discrete.offsets.last().expect("nonempty");
    let mut clock = Clock::new(sys, x, s1);
    clock.extend_to_lap(last_offset + laps.last().expect("nonempty") + 1);
    // τ_i = S_{o_i} ρ(x) + s_i - s_1
    let starts: Vec<f64> = discrete
        .offsets
        .iter()
        .zip(segments)
        .map(|(&o, (p, _))| clock.roof_sum(o) + p.height() - s1)
        .collect();

    let mut gaps = Vec::with_capacity(segments.len() - 1);
    let mut cases = Vec::with_capacity(segments.len() - 1);
    for i in 0..segments.len() - 1 {
        let t = segments[i].1;
        gaps.push(starts[i + 1] - starts[i] - t);
        let (lap, _) = clock.locate(starts[i] + t);
        let expected = discrete.offsets[i] + laps[i];
        let alignment = match lap as i64 - expected as i64 {
            0 => LapAlignment::Aligned,
            1 => LapAlignment::Ahead,
            -1 => LapAlignment::Behind,
            other => return Err(Error::LapMisaligned(other)),
        };
        let next_lap = discrete.offsets[i + 1];
        let within_fiber = segments[i + 1].0.height() < sys.roof_at(x, next_lap);
        cases.push(JunctionCase { alignment, within_fiber });
    }
    Ok(FlowGluedOrbit { start, gaps, bound, xi, cases, laps, discrete })
}

/// Lazily extended prefix sums of the roof along one orbit.
struct Clock<'a> {
    sys: &'a SuspensionSystem,
    x: &'a SymbolicPoint,
    height: f64,
    sums: Vec<f64>,
    running: CompensatedSum,
}

impl<'a> Clock<'a> {
    fn new(sys: &'a SuspensionSystem, x: &'a SymbolicPoint, height: f64) -> Self {
        Self { sys, x, height, sums: vec![0.0], running: CompensatedSum::default() }
    }

    fn extend_to_lap(&mut self, lap: usize) {
        while self.sums.len() <= lap {
            self.running.add(self.sys.roof_at(self.x, self.sums.len() - 1));
            self.sums.push(self.running.value());
        }
    }

    fn roof_sum(&mut self, n: usize) -> f64 {
        self.extend_to_lap(n);
        self.sums[n]
    }

    /// Lap and height reached at flow time `t`.
    fn locate(&mut self, t: f64) -> (usize, f64) {
        let total = self.height + t;
        while *self.sums.last().expect("nonempty") <= total {
            let next = self.sums.len();
            self.extend_to_lap(next);
        }
        let n = self.sums.partition_point(|&s| s <= total) - 1;
        (n, (total - self.sums[n]).max(0.0))
    }

    fn point_at(&mut self, t: f64) -> SuspensionPoint {
        let (n, h) = self.locate(t);
        let base = self.x.shift_by(n);
        let roof = self.sys.roof_at(&base, 0);
        SuspensionPoint::new(self.sys, base, h.min(roof * (1.0 - f64::EPSILON))).expect("height clamped into fiber")
    }

    /// Times in `[from, to]` at which the orbit crosses a fiber boundary,
    /// relative to `from`.
    fn crossings(&mut self, from: f64, to: f64) -> Vec<f64> {
        self.locate(to);
        self.sums
            .iter()
            .map(|s| s - self.height - from)
            .filter(|&t| t >= 0.0 && t <= to - from)
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShadowSample {
    pub segment: usize,
    pub time: f64,
    pub distance: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ShadowReport {
    pub samples: Vec<ShadowSample>,
    /// Largest sampled `d_π` for each segment.
    pub max_distance: Vec<f64>,
    pub step: f64,
    pub epsilon: f64,
    pub threshold: f64,
    pub pass: bool,
}

impl ShadowReport {
    pub fn overall_max(&self) -> f64 {
        self.max_distance.iter().cloned().fold(0.0, f64::max)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("segment,t,d_pi\n");
        for s in &self.samples {
            out.push_str(&format!("{},{},{}\n", s.segment, s.time, s.distance));
        }
        out
    }
}

/// Samples `d_π(X_{τ_i + t}(start), X_t(x_i, s_i))` for `t ∈ [0, t_i]` on a
/// grid of the given step and at every fiber crossing of either orbit.
pub fn verify_flow_shadowing(
    sys: &SuspensionSystem,
    glued: &FlowGluedOrbit,
    segments: &[(SuspensionPoint, f64)],
    epsilon: f64,
    step: f64,
    threshold: f64,
) -> Result<ShadowReport> {
    if !(step > 0.0) || !step.is_finite() {
        return Err(Error::InvalidParameter(format!("sampling step must be positive, got {step}")));
    }
    if glued.gaps.len() + 1 != segments.len() {
        return Err(Error::InvalidParameter("gap count does not match segment count".into()));
    }
    let starts = glued.segment_starts(segments);
    let mut main = Clock::new(sys, glued.start.base(), glued.start.height());
    let mut samples = Vec::new();
    let mut max_distance = Vec::with_capacity(segments.len());
    for (i, ((p, t_i), &tau)) in segments.iter().zip(&starts).enumerate() {
        let mut seg = Clock::new(sys, p.base(), p.height());
        let mut times: Vec<f64> = (0..)
            .map(|j| j as f64 * step)
            .take_while(|&t| t < *t_i)
            .chain(std::iter::once(*t_i))
            .collect();
        times.extend(main.crossings(tau, tau + t_i));
        times.extend(seg.crossings(0.0, *t_i));
        times.sort_by(f64::total_cmp);
        times.dedup();
        let mut worst: f64 = 0.0;
        for t in times {
            let d = d_pi(sys, &main.point_at(tau + t), &seg.point_at(t));
            worst = worst.max(d);
            samples.push(ShadowSample { segment: i, time: t, distance: d });
        }
        max_distance.push(worst);
    }
    let pass = max_distance.iter().all(|&m| m <= threshold * epsilon);
    Ok(ShadowReport { samples, max_distance, step, epsilon, threshold, pass })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::thermo::LocallyConstantFunction;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn golden() -> TransitionSystem {
        TransitionSystem::from_rows(&[vec![1, 1], vec![1, 0]]).unwrap()
    }

    fn three() -> TransitionSystem {
        TransitionSystem::from_rows(&[vec![0, 1, 1], vec![1, 0, 1], vec![1, 1, 0]]).unwrap()
    }

    fn roofed(base: TransitionSystem, values: &[f64]) -> SuspensionSystem {
        let roof = LocallyConstantFunction::from_fn(&base, 1, |w| values[w[0] as usize]).unwrap();
        SuspensionSystem::new(base, roof).unwrap()
    }

    #[test]
    fn distortion_scales() {
        let base = golden();
        let depth1 = roofed(base.clone(), &[1.0, 2.0]);
        assert_eq!(distortion_constant(&depth1, 0.5).unwrap(), 0.0);
        let roof3 = LocallyConstantFunction::from_fn(&base, 3, |w| 1.0 + w[2] as f64).unwrap();
        let depth3 = SuspensionSystem::new(base, roof3).unwrap();
        assert_eq!(distortion_constant(&depth3, 0.2).unwrap(), 0.0);
        assert_eq!(distortion_constant(&depth3, 0.3), Err(Error::ScaleTooCoarse { xi: 0.3, threshold: 0.25 }));
    }

    #[test]
    fn discrete_bounds() {
        assert_eq!(discrete_gluing_bound(&TransitionSystem::full_shift(2).unwrap(), 0.2).unwrap(), 4);
        assert_eq!(discrete_gluing_bound(&golden(), 0.5).unwrap(), 4);
        assert_eq!(discrete_gluing_bound(&golden(), 2.0).unwrap(), 2);
    }

    #[test]
    fn golden_mean_two_segments() {
        let sys = golden();
        let a = SymbolicPoint::periodic(&sys, vec![0]).unwrap();
        let ab = SymbolicPoint::periodic(&sys, vec![0, 1]).unwrap();
        let segs = vec![(a, 3), (ab, 3)];
        let glued = glue_discrete(&sys, &segs, 0.5).unwrap();
        assert_eq!(glued.point.prefix(8), vec![0, 0, 0, 0, 0, 1, 0, 1]);
        assert_eq!(glued.offsets, vec![0, 4]);
        assert_eq!(glued.gaps, vec![2]);
        assert_eq!(glued.bound, 4);
        let mut checked = 0;
        for (i, (x, n)) in segs.iter().enumerate() {
            for j in 0..*n {
                assert!(glued.point.distance_shifted(glued.offsets[i] + j, x, j) < 0.5);
                checked += 1;
            }
        }
        assert_eq!(checked, 6);
        assert!(verify_discrete(&glued, &segs));
    }

    #[test]
    fn single_segment_and_errors() {
        let sys = golden();
        let x = SymbolicPoint::new(&sys, vec![1, 0, 0, 1], vec![0]).unwrap();
        let glued = glue_discrete(&sys, &[(x.clone(), 5)], 0.3).unwrap();
        assert!(glued.gaps.is_empty());
        assert!(verify_discrete(&glued, &[(x.clone(), 5)]));
        assert_eq!(glue_discrete(&sys, &[], 0.3), Err(Error::EmptySegments));
        assert_eq!(glue_discrete(&sys, &[(x, 0)], 0.3), Err(Error::InvalidLength(0)));
    }

    #[test]
    fn coarse_scale_gluing() {
        let sys = golden();
        let a = SymbolicPoint::periodic(&sys, vec![0]).unwrap();
        let b = SymbolicPoint::periodic(&sys, vec![1, 0]).unwrap();
        let segs = vec![(a.clone(), 1), (b.clone(), 1), (a, 2)];
        let glued = glue_discrete(&sys, &segs, 2.0).unwrap();
        assert!(verify_discrete(&glued, &segs));
        assert!(glued.gaps.iter().all(|&p| p < glued.bound));
    }

    // smallest gap for which some admissible word starts with the first
    // cylinder and carries the second at position len1 - 1 + gap
    fn oracle_gap(sys: &TransitionSystem, w1: &[u8], n1: usize, w2: &[u8], max_gap: usize) -> Option<usize> {
        (0..=max_gap).find(|&gap| {
            let at = n1 - 1 + gap;
            let total = (at + w2.len()).max(w1.len());
            sys.admissible_words(total)
                .iter()
                .any(|w| w.starts_with(w1) && w[at..].starts_with(w2))
        })
    }

    #[test]
    fn gaps_agree_with_brute_force_search() {
        for sys in [TransitionSystem::full_shift(2).unwrap(), golden(), three()] {
            for &eps in &[1.0, 0.5] {
                let depth = depth_for(eps).unwrap();
                let bound = discrete_gluing_bound(&sys, eps).unwrap();
                for n1 in 1..=3 {
                    for n2 in 1..=3 {
                        for w1 in sys.admissible_words(n1 - 1 + depth) {
                            for w2 in sys.admissible_words(n2 - 1 + depth) {
                                let x1 = sys.close_word(&w1).unwrap();
                                let x2 = sys.close_word(&w2).unwrap();
                                let segs = vec![(x1, n1), (x2, n2)];
                                let glued = glue_discrete(&sys, &segs, eps).unwrap();
                                assert!(verify_discrete(&glued, &segs));
                                let p = glued.gaps[0];
                                assert!(p < bound);
                                let best = oracle_gap(&sys, &w1, n1, &w2, bound).expect("a gluing word exists");
                                assert!(best <= p);
                            }
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn oracle_confirms_gluing_up_to_length_eight() {
        for sys in [golden(), three()] {
            let eps = 0.5;
            let depth = depth_for(eps).unwrap();
            let bound = discrete_gluing_bound(&sys, eps).unwrap();
            for n in [1, 4, 7] {
                let words = sys.admissible_words(n - 1 + depth);
                let first = &words[0];
                for w2 in words.iter().step_by(3) {
                    assert!(oracle_gap(&sys, first, n, w2, bound).is_some(), "n={n}");
                }
            }
        }
    }

    #[test]
    fn flow_scales() {
        let g = roofed(golden(), &[1.0, 1.5]);
        let (xi, t) = flow_gluing_scale(&g, 0.2).unwrap();
        assert_eq!(xi, 0.05);
        assert_eq!(t, 9.0 * 1.5);
        let unit = roofed(TransitionSystem::full_shift(2).unwrap(), &[1.0, 1.0]);
        assert_eq!(flow_gluing_scale(&unit, 0.2).unwrap(), (0.05, 8.0));
        // ξ = 1 needs N_ξ = 1 since 2^0 is not below 1
        assert_eq!(flow_gluing_scale(&g, 4.0).unwrap(), (1.0, (2 + 1 + 2) as f64 * 1.5));
        let mut last = 0.0;
        for eps in [4.0, 1.0, 0.5, 0.2, 0.05, 0.01] {
            let (_, t) = flow_gluing_scale(&g, eps).unwrap();
            assert!(t >= last);
            last = t;
        }
    }

    fn random_point(sys: &SuspensionSystem, rng: &mut ChaCha8Rng) -> SuspensionPoint {
        let base = sys.base();
        let len = rng.random_range(1..10);
        let mut word = vec![rng.random_range(0..base.size()) as u8];
        while word.len() < len {
            let succ = base.successors(*word.last().unwrap());
            word.push(succ[rng.random_range(0..succ.len())]);
        }
        let x = base.close_word(&word).unwrap();
        let h = rng.random::<f64>() * sys.roof_at(&x, 0);
        SuspensionPoint::new(sys, x, h).unwrap()
    }

    #[test]
    fn single_flow_segment_shadows() {
        let sys = roofed(golden(), &[1.0, 1.5]);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let p = random_point(&sys, &mut rng);
        let segs = vec![(p, 17.3)];
        let glued = glue_flow(&sys, &segs, 0.2).unwrap();
        assert!(glued.gaps.is_empty());
        let report = verify_flow_shadowing(&sys, &glued, &segs, 0.2, 0.01, DEFAULT_SHADOW_THRESHOLD).unwrap();
        assert!(report.overall_max() < 0.2);
        assert!(report.pass);
    }

    #[test]
    fn unit_roof_gap_arithmetic() {
        let sys = roofed(TransitionSystem::full_shift(2).unwrap(), &[1.0, 1.0]);
        let x1 = SymbolicPoint::periodic(sys.base(), vec![0]).unwrap();
        let x2 = SymbolicPoint::periodic(sys.base(), vec![1]).unwrap();
        let (s1, t1, s2) = (0.3, 2.5, 0.6);
        let segs = vec![
            (SuspensionPoint::new(&sys, x1, s1).unwrap(), t1),
            (SuspensionPoint::new(&sys, x2, s2).unwrap(), 1.0),
        ];
        let glued = glue_flow(&sys, &segs, 0.2).unwrap();
        let j1 = glued.laps[0];
        assert_eq!(j1, 2);
        let discrete_gap = glued.discrete.gaps[0];
        // prescribed end lap plus the discrete gap, in unit fibers
        let expected = s2 + discrete_gap as f64 - (s1 + t1 - j1 as f64);
        assert!((glued.gaps[0] - expected).abs() < 1e-12);
        assert!(glued.gaps[0] >= 0.0 && glued.gaps[0] <= glued.bound);
        assert_eq!(glued.cases[0].alignment, LapAlignment::Aligned);
    }

    #[test]
    fn random_two_segment_instances_shadow() {
        let sys = roofed(golden(), &[1.0, 1.5]);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..100 {
            let segs: Vec<(SuspensionPoint, f64)> =
                (0..2).map(|_| (random_point(&sys, &mut rng), rng.random_range(0.0..50.0))).collect();
            let glued = glue_flow(&sys, &segs, 0.2).unwrap();
            assert!(glued.gaps.iter().all(|&p| p >= 0.0 && p <= glued.bound));
            assert_eq!(glued.cases.len(), 1);
            let report = verify_flow_shadowing(&sys, &glued, &segs, 0.2, 0.05, DEFAULT_SHADOW_THRESHOLD).unwrap();
            assert!(report.pass, "max {}", report.overall_max());
        }
    }

    #[test]
    fn gap_bounds_on_many_instances() {
        let systems = vec![
            roofed(golden(), &[1.0, 1.5]),
            roofed(three(), &[0.4, 1.0, 2.2]),
            SuspensionSystem::new(
                golden(),
                LocallyConstantFunction::from_fn(&golden(), 2, |w| 0.5 + w[0] as f64 + 0.25 * w[1] as f64).unwrap(),
            )
            .unwrap(),
        ];
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for sys in &systems {
            for _ in 0..1000 {
                let k = rng.random_range(1..5);
                let segs: Vec<(SuspensionPoint, f64)> =
                    (0..k).map(|_| (random_point(sys, &mut rng), rng.random_range(0.0..20.0))).collect();
                let eps = rng.random_range(0.05..2.0);
                let glued = glue_flow(sys, &segs, eps).unwrap();
                assert!(glued.gaps.iter().all(|&p| p >= 0.0 && p <= glued.bound));
                assert_eq!(glue_flow(sys, &segs, eps).unwrap(), glued);
            }
        }
    }

    #[test]
    fn zero_time_segments() {
        let sys = roofed(golden(), &[1.0, 1.5]);
        let x = SymbolicPoint::periodic(sys.base(), vec![0, 1]).unwrap();
        let p = SuspensionPoint::new(&sys, x, 0.4).unwrap();
        let segs = vec![(p.clone(), 0.0), (p.clone(), 0.0), (p, 0.0)];
        let glued = glue_flow(&sys, &segs, 0.3).unwrap();
        let report = verify_flow_shadowing(&sys, &glued, &segs, 0.3, 0.01, DEFAULT_SHADOW_THRESHOLD).unwrap();
        assert!(report.overall_max() <= 0.3);
    }

    #[test]
    fn corrupted_gap_fails_verification() {
        // the phase error roof_min / 2 must exceed the threshold 3ε
        let sys = roofed(golden(), &[1.0, 1.5]);
        let eps = 0.1;
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let segs: Vec<(SuspensionPoint, f64)> =
            (0..2).map(|_| (random_point(&sys, &mut rng), rng.random_range(5.0..20.0))).collect();
        let mut glued = glue_flow(&sys, &segs, eps).unwrap();
        assert!(verify_flow_shadowing(&sys, &glued, &segs, eps, 0.01, DEFAULT_SHADOW_THRESHOLD).unwrap().pass);
        glued.gaps[0] += sys.roof_max();
        let report = verify_flow_shadowing(&sys, &glued, &segs, eps, 0.01, DEFAULT_SHADOW_THRESHOLD).unwrap();
        assert!(!report.pass, "{:?}", report.max_distance);
        assert!(report.max_distance[1] >= sys.roof_min() / 2.0 - 1e-12);
    }
}
