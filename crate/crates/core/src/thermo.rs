//! Matsubara sums for the sphere-sphere free energy and the entropy
//! obtained from it by differentiation in temperature.
//!
//! Units: lengths in a reference unit `L` (the center distance `d` for
//! temperature scans, the radius `R` for distance scans), with
//! `tau = 2 pi k_B T L / (hbar c)` so that the Matsubara frequencies are
//! `xi_n = n tau` in units of `c/L`. Free energies are reported as
//! `F L / (hbar c)` and entropies in units of `k_B`:
//!
//! ```text
//! F L/(hbar c) = (tau / 4 pi) [ f(0) + 2 sum_{n>=1} f(n tau) ]
//! f(xi)        = sum_m g_m Tr ln(1 - M^(m)(xi)),    g_0 = 1, g_m = 2
//! S / k_B      = -2 pi d(F L/hbar c)/d tau
//! ```
//!
//! The `n = 0` term enters once. In single round-trip mode `ln(1 - M)` is
//! replaced by `-M`, which makes the result additive over polarization and
//! multipole channels.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matsubara::sum_positive;
use crate::mie::Material;
use crate::roundtrip::{ChannelTraces, GeometryConfig, RoundTripAssembler};
use crate::sum::CompensatedSum;

/// Default relative tail tolerance of the Matsubara and `m` sums.
pub const DEFAULT_TOLERANCE: f64 = 1e-9;
/// Tolerance used for free energies that are differentiated numerically.
pub const ENTROPY_TOLERANCE: f64 = 1e-14;
/// Default relative step of the temperature derivative.
pub const DEFAULT_STEP: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Mode {
    /// `Tr ln(1 - M)` with all multipoles up to `l_max`.
    FullLogDet,
    /// `-Tr M` with all multipoles up to `l_max`.
    SingleRoundTrip,
    /// `-Tr M` with dipoles only.
    SingleRoundTripDipole,
}

impl Mode {
    pub fn is_single_round_trip(self) -> bool {
        !matches!(self, Mode::FullLogDet)
    }

    pub fn name(self) -> &'static str {
        match self {
            Mode::FullLogDet => "full",
            Mode::SingleRoundTrip => "srt",
            Mode::SingleRoundTripDipole => "dipole",
        }
    }

    pub fn parse(s: &str) -> Option<Mode> {
        match s {
            "full" => Some(Mode::FullLogDet),
            "srt" => Some(Mode::SingleRoundTrip),
            "dipole" => Some(Mode::SingleRoundTripDipole),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThermalConfig {
    pub tau: f64,
    /// Relative tail tolerance `eps_M` for the Matsubara sum and the `m` sum.
    pub tolerance: f64,
    pub mode: Mode,
    pub l_max: usize,
    /// Largest `m` considered; `None` means `l_max`.
    pub m_max: Option<usize>,
}

impl ThermalConfig {
    pub fn new(tau: f64, mode: Mode, l_max: usize) -> Self {
        ThermalConfig { tau, tolerance: DEFAULT_TOLERANCE, mode, l_max, m_max: None }
    }
}

/// Four polarization channels plus their sum.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct ChannelSet {
    pub total: f64,
    pub tm: f64,
    pub te: f64,
    pub mix_tm_te: f64,
    pub mix_te_tm: f64,
}

impl ChannelSet {
    pub fn mixing(&self) -> f64 {
        self.mix_tm_te + self.mix_te_tm
    }

    fn from_traces(t: &ChannelTraces, factor: f64) -> Self {
        ChannelSet {
            total: factor * t.total(),
            tm: factor * t.tm,
            te: factor * t.te,
            mix_tm_te: factor * t.mix_tm_te,
            mix_te_tm: factor * t.mix_te_tm,
        }
    }

    fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        ChannelSet {
            total: f(self.total),
            tm: f(self.tm),
            te: f(self.te),
            mix_tm_te: f(self.mix_tm_te),
            mix_te_tm: f(self.mix_te_tm),
        }
    }

    fn zip(&self, other: &Self, f: impl Fn(f64, f64) -> f64) -> Self {
        ChannelSet {
            total: f(self.total, other.total),
            tm: f(self.tm, other.tm),
            te: f(self.te, other.te),
            mix_tm_te: f(self.mix_tm_te, other.mix_tm_te),
            mix_te_tm: f(self.mix_te_tm, other.mix_te_tm),
        }
    }
}

#[derive(Debug, Clone, Default)]
struct ChannelAccumulator {
    total: CompensatedSum,
    tm: CompensatedSum,
    te: CompensatedSum,
    mix_tm_te: CompensatedSum,
    mix_te_tm: CompensatedSum,
}

impl ChannelAccumulator {
    fn add(&mut self, c: &ChannelSet, w: f64) {
        self.total.add(w * c.total);
        self.tm.add(w * c.tm);
        self.te.add(w * c.te);
        self.mix_tm_te.add(w * c.mix_tm_te);
        self.mix_te_tm.add(w * c.mix_te_tm);
    }

    fn value(&self) -> ChannelSet {
        ChannelSet {
            total: self.total.value(),
            tm: self.tm.value(),
            te: self.te.value(),
            mix_tm_te: self.mix_tm_te.value(),
            mix_te_tm: self.mix_te_tm.value(),
        }
    }
}

/// `f(xi)` for one Matsubara frequency.
#[derive(Debug, Clone, PartialEq)]
pub struct MatsubaraTerm {
    pub xi: f64,
    pub total: f64,
    /// Channel split; single round-trip mode only.
    pub channels: Option<ChannelSet>,
    /// `(l1, l2)` split; single round-trip mode with pair tracking only.
    pub pairs: Option<BTreeMap<(usize, usize), f64>>,
    /// Largest `m` evaluated before the `m` sum was truncated.
    pub m_used: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FreeEnergy {
    pub tau: f64,
    /// `F L / (hbar c)`.
    pub total: f64,
    pub channels: Option<ChannelSet>,
    pub pairs: Option<BTreeMap<(usize, usize), f64>>,
    /// Last Matsubara index summed.
    pub n_max: usize,
    /// Estimated magnitude of the neglected Matsubara tail.
    pub tail_bound: f64,
    pub m_max_used: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Entropy {
    pub tau: f64,
    /// `S / k_B`.
    pub total: f64,
    pub channels: Option<ChannelSet>,
    pub pairs: Option<BTreeMap<(usize, usize), f64>>,
    /// Difference between the Richardson value and the finer stencil.
    pub error_estimate: f64,
    /// Set when the error estimate exceeds `1e-3 |S|`.
    pub richardson_warning: bool,
    /// Free energy at `tau` itself.
    pub free_energy: FreeEnergy,
}

/// High-temperature (zero-frequency) limits of the entropy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HtAsymptotics {
    /// `S_HT / k_B` in the configured mode.
    pub s_ht: f64,
    /// Single round-trip channel values of `S_HT`.
    pub channels: ChannelSet,
    pub tm_share: f64,
    pub te_share: f64,
    pub mixing_share: f64,
    /// `S_HT` of the same geometry with perfectly conducting spheres.
    pub s_ht_pec: f64,
    /// TE part of `s_ht_pec`; the amount a Drude sphere pair lacks.
    pub te_deficit: f64,
}

/// Sphere-sphere system with translation data prepared once.
#[derive(Debug, Clone)]
pub struct SphereSphere {
    assembler: RoundTripAssembler,
    pub mode: Mode,
    pub tolerance: f64,
    pub step: f64,
    /// Track `(l1, l2)` channels in single round-trip mode.
    pub track_pairs: bool,
}

impl SphereSphere {
    pub fn new(geometry: GeometryConfig, material1: Material, material2: Material, mode: Mode, l_max: usize) -> Result<Self> {
        let l_max = if mode == Mode::SingleRoundTripDipole { 1 } else { l_max };
        Ok(SphereSphere {
            assembler: RoundTripAssembler::new(geometry, material1, material2, l_max)?,
            mode,
            tolerance: DEFAULT_TOLERANCE,
            step: DEFAULT_STEP,
            track_pairs: false,
        })
    }

    pub fn from_config(geometry: GeometryConfig, material1: Material, material2: Material, config: &ThermalConfig) -> Result<Self> {
        let l_max = if config.mode == Mode::SingleRoundTripDipole { 1 } else { config.l_max };
        let m_max = config.m_max.unwrap_or(l_max).min(l_max);
        Ok(SphereSphere {
            assembler: RoundTripAssembler::with_m_max(geometry, material1, material2, l_max, m_max)?,
            mode: config.mode,
            tolerance: config.tolerance,
            step: DEFAULT_STEP,
            track_pairs: false,
        })
    }

    pub fn with_tolerance(mut self, tolerance: f64) -> Self {
        self.tolerance = tolerance;
        self
    }

    pub fn with_pairs(mut self, track: bool) -> Self {
        self.track_pairs = track;
        self
    }

    pub fn geometry(&self) -> GeometryConfig {
        self.assembler.geometry
    }

    pub fn l_max(&self) -> usize {
        self.assembler.l_max
    }

    /// `f(xi)`; `xi = 0` selects the analytic zero-frequency blocks.
    pub fn matsubara_term(&self, xi: f64) -> Result<MatsubaraTerm> {
        let asm = &self.assembler;
        let freq = if xi > 0.0 { Some(asm.frequency(xi)?) } else { None };
        let srt = self.mode.is_single_round_trip();
        let mut total = CompensatedSum::new();
        let mut channels = ChannelAccumulator::default();
        let mut pairs: BTreeMap<(usize, usize), CompensatedSum> = BTreeMap::new();
        let mut quiet = 0;
        let mut m_used = 0;
        for m in 0..=asm.m_max() {
            let block = match &freq {
                Some(f) => asm.block(f, m)?,
                None => asm.zero_frequency_block(m)?,
            };
            let g = if m == 0 { 1.0 } else { 2.0 };
            let contribution = if srt {
                let c = ChannelSet::from_traces(&block.channel_traces(), -g);
                channels.add(&c, 1.0);
                if self.track_pairs {
                    for (k, v) in block.l_pair_traces() {
                        pairs.entry(k).or_default().add(-g * v);
                    }
                }
                c.total
            } else {
                g * block.ln_det_one_minus()?
            };
            total.add(contribution);
            m_used = m;
            if m > 0 && contribution.abs() <= self.tolerance * total.value().abs() {
                quiet += 1;
                if quiet >= 2 {
                    break;
                }
            } else {
                quiet = 0;
            }
        }
        Ok(MatsubaraTerm {
            xi,
            total: total.value(),
            channels: srt.then(|| channels.value()),
            pairs: (srt && self.track_pairs).then(|| pairs.into_iter().map(|(k, v)| (k, v.value())).collect()),
            m_used,
        })
    }

    /// Free energy at dimensionless temperature `tau`.
    ///
    /// Terms are reduced in index order, so the result does not depend on
    /// the thread count.
    pub fn free_energy(&self, tau: f64) -> Result<FreeEnergy> {
        if !(tau > 0.0) || !tau.is_finite() {
            return Err(Error::domain(format!("temperature must be positive, got tau = {tau}")));
        }
        let srt = self.mode.is_single_round_trip();
        let mut total = CompensatedSum::new();
        let mut channels = ChannelAccumulator::default();
        let mut pairs: BTreeMap<(usize, usize), CompensatedSum> = BTreeMap::new();
        let mut m_max_used = 0;
        let mut absorb = |t: &MatsubaraTerm, w: f64, total: &mut CompensatedSum| {
            total.add(w * t.total);
            if let Some(c) = &t.channels {
                channels.add(c, w);
            }
            if let Some(p) = &t.pairs {
                for (k, v) in p {
                    pairs.entry(*k).or_default().add(w * v);
                }
            }
            m_max_used = m_max_used.max(t.m_used);
        };

        let zero = self.matsubara_term(0.0).map_err(|e| e.at_matsubara(0))?;
        absorb(&zero, 1.0, &mut total);
        let end = sum_positive(
            |n| self.matsubara_term(n as f64 * tau).map_err(|e| e.at_matsubara(n)),
            |t| {
                absorb(t, 2.0, &mut total);
                (2.0 * t.total, total.value())
            },
            self.tolerance,
        )?;
        let scale = tau / (4.0 * PI);
        Ok(FreeEnergy {
            tau,
            total: scale * total.value(),
            channels: srt.then(|| channels.value().map(|v| scale * v)),
            pairs: (srt && self.track_pairs).then(|| pairs.into_iter().map(|(k, v)| (k, scale * v.value())).collect()),
            n_max: end.n_max,
            tail_bound: scale * end.tail,
            m_max_used,
        })
    }

    /// Entropy by central differences in `tau` with steps `h` and `h/2`,
    /// Richardson-extrapolated.
    pub fn entropy(&self, tau: f64) -> Result<Entropy> {
        if !(tau > 0.0) || !tau.is_finite() {
            return Err(Error::domain(format!("temperature must be positive, got tau = {tau}")));
        }
        let h = self.step.clamp(1e-8, 0.5);
        let f = |x: f64| self.free_energy(tau * x);
        let (fp, fm) = (f(1.0 + h)?, f(1.0 - h)?);
        let (fp2, fm2) = (f(1.0 + 0.5 * h)?, f(1.0 - 0.5 * h)?);
        let center = f(1.0)?;
        let d = |a: f64, b: f64, step: f64| (a - b) / (2.0 * tau * step);
        let extrapolate = |p: f64, m: f64, p2: f64, m2: f64| {
            let coarse = d(p, m, h);
            let fine = d(p2, m2, 0.5 * h);
            let best = (4.0 * fine - coarse) / 3.0;
            (-2.0 * PI * best, 2.0 * PI * (fine - best).abs())
        };
        let (total, error_estimate) = extrapolate(fp.total, fm.total, fp2.total, fm2.total);
        let channels = match (fp.channels, fm.channels, fp2.channels, fm2.channels) {
            (Some(a), Some(b), Some(c), Some(e)) => {
                let coarse = a.zip(&b, |x, y| d(x, y, h));
                let fine = c.zip(&e, |x, y| d(x, y, 0.5 * h));
                Some(fine.zip(&coarse, |fi, co| -2.0 * PI * (4.0 * fi - co) / 3.0))
            }
            _ => None,
        };
        let pairs = match (&fp.pairs, &fm.pairs, &fp2.pairs, &fm2.pairs) {
            (Some(a), Some(b), Some(c), Some(e)) => Some(
                a.keys()
                    .map(|k| {
                        let g = |m: &BTreeMap<(usize, usize), f64>| m.get(k).copied().unwrap_or(0.0);
                        (*k, extrapolate(g(a), g(b), g(c), g(e)).0)
                    })
                    .collect(),
            ),
            _ => None,
        };
        Ok(Entropy {
            tau,
            total,
            channels,
            pairs,
            error_estimate,
            richardson_warning: error_estimate > 1e-3 * total.abs() && error_estimate > 1e-300,
            free_energy: center,
        })
    }

    /// Zero-frequency limits: `S_HT = -f(0)/2`.
    pub fn ht_asymptotics(&self) -> Result<HtAsymptotics> {
        let srt = SphereSphere { mode: Mode::SingleRoundTrip, track_pairs: false, ..self.clone() };
        let zero = srt.matsubara_term(0.0)?;
        let channels = zero.channels.unwrap_or_default().map(|v| -0.5 * v);
        let s_ht = if self.mode.is_single_round_trip() { channels.total } else { -0.5 * self.matsubara_term(0.0)?.total };
        let pec = Material::perfect_conductor();
        let asm = &self.assembler;
        let pec_sys = SphereSphere {
            assembler: RoundTripAssembler::with_m_max(asm.geometry, pec, pec, asm.l_max, asm.m_max())?,
            ..srt.clone()
        };
        let pec_channels = pec_sys.matsubara_term(0.0)?.channels.unwrap_or_default().map(|v| -0.5 * v);
        let s_ht_pec = if self.mode.is_single_round_trip() {
            pec_channels.total
        } else {
            let full = SphereSphere { mode: Mode::FullLogDet, ..pec_sys.clone() };
            -0.5 * full.matsubara_term(0.0)?.total
        };
        Ok(HtAsymptotics {
            s_ht,
            channels,
            tm_share: channels.tm / channels.total,
            te_share: channels.te / channels.total,
            mixing_share: channels.mixing() / channels.total,
            s_ht_pec,
            te_deficit: pec_channels.te,
        })
    }
}

pub fn free_energy(geometry: GeometryConfig, material1: Material, material2: Material, thermal: &ThermalConfig) -> Result<FreeEnergy> {
    SphereSphere::from_config(geometry, material1, material2, thermal)?.free_energy(thermal.tau)
}

pub fn entropy(geometry: GeometryConfig, material1: Material, material2: Material, thermal: &ThermalConfig) -> Result<Entropy> {
    SphereSphere::from_config(geometry, material1, material2, thermal)?.entropy(thermal.tau)
}

pub fn ht_asymptotics(geometry: GeometryConfig, material1: Material, material2: Material, mode: Mode, l_max: usize) -> Result<HtAsymptotics> {
    SphereSphere::new(geometry, material1, material2, mode, l_max)?.ht_asymptotics()
}

/// Entropy of one mode at one distance of a scan.
#[derive(Debug, Clone, PartialEq)]
pub struct DistancePoint {
    /// `d / R`.
    pub ratio: f64,
    pub results: Vec<(Mode, Entropy)>,
}

impl DistancePoint {
    pub fn get(&self, mode: Mode) -> Option<&Entropy> {
        self.results.iter().find(|(m, _)| *m == mode).map(|(_, e)| e)
    }

    /// `(S_a - S_b) / |S_b|`.
    pub fn relative_difference(&self, a: Mode, b: Mode) -> Option<f64> {
        let (sa, sb) = (self.get(a)?.total, self.get(b)?.total);
        Some((sa - sb) / sb.abs())
    }
}

/// Entropy of identical spheres of radius `R = 1` at fixed `tau_R` over a
/// grid of center distances `d / R`. The material must be given in units
/// of `c / R`.
pub fn entropy_distance_scan(
    ratios: &[f64],
    material: Material,
    tau_r: f64,
    modes: &[Mode],
    l_max: usize,
    tolerance: f64,
) -> Result<Vec<DistancePoint>> {
    ratios
        .iter()
        .map(|&ratio| {
            let geometry = GeometryConfig::new(1.0, 1.0, ratio)?;
            let results = modes
                .iter()
                .map(|&mode| {
                    let sys = SphereSphere::new(geometry, material, material, mode, l_max)?.with_tolerance(tolerance);
                    Ok((mode, sys.entropy(tau_r)?))
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(DistancePoint { ratio, results })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pec() -> Material {
        Material::perfect_conductor()
    }

    fn drude(gamma: f64) -> Material {
        Material::drude(2.0 * PI * 400.0, gamma).unwrap()
    }

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    fn dipole(ratio: f64, mat: Material) -> SphereSphere {
        let g = GeometryConfig::symmetric(ratio).unwrap();
        SphereSphere::new(g, mat, mat, Mode::SingleRoundTripDipole, 1).unwrap().with_tolerance(ENTROPY_TOLERANCE)
    }

    #[test]
    fn high_temperature_pec_dipole() {
        let sys = dipole(20.0, pec());
        let scale = 20f64.powi(-6);
        let ht = sys.ht_asymptotics().unwrap();
        assert!(rel(ht.s_ht, 3.75 * scale) < 1e-13);
        assert!(rel(ht.tm_share, 0.8) < 1e-13);
        assert_eq!(ht.mixing_share, 0.0);
        let tau = 200.0;
        let f = sys.free_energy(tau).unwrap();
        assert!(rel(f.total, -tau / (4.0 * PI) * 7.5 * scale) < 1e-9);
        let s = sys.entropy(tau).unwrap();
        assert!(rel(s.total, ht.s_ht) < 1e-8);
    }

    #[test]
    fn drude_high_temperature_ratio_and_deficit() {
        let p = dipole(20.0, pec()).ht_asymptotics().unwrap();
        let d = dipole(20.0, drude(1e-2)).ht_asymptotics().unwrap();
        assert!(rel(d.s_ht / p.s_ht, 0.8) < 1e-13);
        assert_eq!(d.te_share, 0.0);
        assert!(rel(d.s_ht + d.te_deficit, d.s_ht_pec) < 1e-13);
    }

    #[test]
    fn channels_sum_to_total() {
        let g = GeometryConfig::symmetric(5.0).unwrap();
        let sys = SphereSphere::new(g, drude(10.0), drude(10.0), Mode::SingleRoundTrip, 4).unwrap().with_pairs(true);
        let s = sys.entropy(1.0).unwrap();
        let c = s.channels.unwrap();
        assert!(rel(c.tm + c.te + c.mixing(), c.total) < 1e-12);
        assert!(rel(c.total, s.total) < 1e-12);
        let pair_sum: f64 = s.pairs.as_ref().unwrap().values().sum();
        assert!(rel(pair_sum, s.total) < 1e-10);
        let f = s.free_energy.channels.unwrap();
        assert!(rel(f.tm + f.te + f.mixing(), s.free_energy.total) < 1e-12);
        assert!(rel(c.mix_tm_te, c.mix_te_tm) < 1e-10);
    }

    #[test]
    fn free_energy_negative_and_srt_close_to_full_at_large_distance() {
        let g = GeometryConfig::symmetric(20.0).unwrap();
        let full = SphereSphere::new(g, pec(), pec(), Mode::FullLogDet, 6).unwrap().free_energy(1.0).unwrap();
        let srt = SphereSphere::new(g, pec(), pec(), Mode::SingleRoundTrip, 6).unwrap().free_energy(1.0).unwrap();
        assert!(full.total < 0.0 && srt.total < 0.0);
        assert!(rel(srt.total, full.total) < 2e-3);
        assert!(full.channels.is_none());
    }

    #[test]
    fn entropy_vanishes_at_low_temperature() {
        let sys = dipole(20.0, pec());
        let ht = sys.ht_asymptotics().unwrap();
        let s = sys.entropy(1e-2).unwrap();
        assert!(s.total.abs() < 1e-3 * ht.s_ht);
    }

    #[test]
    fn thread_count_does_not_change_results() {
        let sys = dipole(10.0, drude(1.0));
        let run = |threads| {
            let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
            pool.install(|| sys.free_energy(0.3).unwrap().total)
        };
        assert_eq!(run(1).to_bits(), run(4).to_bits());
    }

    #[test]
    fn tolerance_halving_within_tail_bound() {
        let sys = dipole(10.0, pec()).with_tolerance(1e-8);
        let a = sys.free_energy(0.05).unwrap();
        let b = sys.clone().with_tolerance(5e-9).free_energy(0.05).unwrap();
        assert!((a.total - b.total).abs() <= a.tail_bound.max(1e-16 * a.total.abs()));
    }

    #[test]
    fn thermodynamic_consistency() {
        // F(tau*) - F(tau_0) = -(1/2pi) int S dtau on a coarse grid
        let sys = dipole(10.0, pec());
        let (t0, t1, n) = (0.05, 3.0, 60);
        let mut integral = 0.0;
        let step = (t1 - t0) / n as f64;
        for i in 0..=n {
            let w = if i == 0 || i == n { 0.5 } else { 1.0 };
            integral += w * sys.entropy(t0 + i as f64 * step).unwrap().total * step;
        }
        let df = sys.free_energy(t1).unwrap().total - sys.free_energy(t0).unwrap().total;
        assert!(rel(-integral / (2.0 * PI), df) < 0.02);
    }

    #[test]
    fn invalid_temperature() {
        assert!(dipole(10.0, pec()).free_energy(0.0).is_err());
        assert!(dipole(10.0, pec()).entropy(-1.0).is_err());
    }
}
