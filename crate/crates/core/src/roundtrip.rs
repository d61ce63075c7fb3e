//! Round-trip operator `M^(m)(xi) = R1 T12 R2 T21` for two spheres on the z
//! axis, one block per azimuthal index `m`.
//!
//! Blocks are stored as balanced factors. Writing `r_i` for the diagonal of
//! Mie coefficients of sphere `i` and `sigma_i` for their signs,
//!
//! ```text
//! N12 = |r1|^{1/2} A |r2|^{1/2},    N21 = |r2|^{1/2} B |r1|^{1/2},
//! M  ~  diag(sigma1) N12 diag(sigma2) N21
//! ```
//!
//! where `A`, `B` are the phase-folded real translation matrices. All factors
//! of `k` are combined in the exponent before an entry is formed, so entries
//! stay representable for any `l_max` and frequency. The representation is a
//! diagonal similarity transform of the physical operator: traces, channel
//! traces and determinants are unchanged.
//!
//! Rows and columns are indexed by polarization and multipole order, TE
//! first: `index(TE, l) = l - l0`, `index(TM, l) = n + l - l0` with
//! `l0 = max(1, m)` and `n = l_max - l0 + 1`.

use std::collections::BTreeMap;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::logval::SignedLog;
use crate::mie::{mie_table, Material, MaterialKind};
use crate::specfun::ln_k_table;
use crate::sum::CompensatedSum;
use crate::translation::{ElementWeights, Polarization};

/// Two spheres with centers a distance `d` apart. All lengths share one unit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeometryConfig {
    pub r1: f64,
    pub r2: f64,
    pub d: f64,
}

impl GeometryConfig {
    pub fn new(r1: f64, r2: f64, d: f64) -> Result<Self> {
        if !(r1 > 0.0 && r2 > 0.0) {
            return Err(Error::domain(format!("radii must be positive (R1 = {r1}, R2 = {r2})")));
        }
        if !(d > r1 + r2) || !d.is_finite() {
            return Err(Error::domain(format!("spheres overlap: d = {d} <= R1 + R2 = {}", r1 + r2)));
        }
        Ok(GeometryConfig { r1, r2, d })
    }

    /// Identical spheres of radius `R = d / ratio`, with `d = 1`.
    pub fn symmetric(ratio_d_over_r: f64) -> Result<Self> {
        Self::new(1.0 / ratio_d_over_r, 1.0 / ratio_d_over_r, 1.0)
    }
}

const SERIES_NORM: f64 = 0.05;

fn lowest_order(m: usize) -> usize {
    m.max(1)
}

fn ln_double_factorial(n: i64) -> f64 {
    let mut acc = 0.0;
    let mut k = n;
    while k > 1 {
        acc += (k as f64).ln();
        k -= 2;
    }
    acc
}

/// Translation weights for one `m`, for all `l0 <= la <= lb <= l_max`.
#[derive(Debug, Clone)]
struct BlockBasis {
    l0: usize,
    n: usize,
    weights: Vec<ElementWeights>,
}

impl BlockBasis {
    fn new(m: usize, l_max: usize) -> Result<Self> {
        let l0 = lowest_order(m);
        let n = l_max + 1 - l0;
        let mut weights = Vec::with_capacity(n * (n + 1) / 2);
        for la in l0..=l_max {
            for lb in la..=l_max {
                weights.push(ElementWeights::new(la, lb, m as i64)?);
            }
        }
        Ok(BlockBasis { l0, n, weights })
    }

    fn pair(&self, l1: usize, l2: usize) -> &ElementWeights {
        let (a, b) = if l1 <= l2 { (l1 - self.l0, l2 - self.l0) } else { (l2 - self.l0, l1 - self.l0) };
        // row a holds n - a entries
        let offset = a * self.n - a * a.saturating_sub(1) / 2;
        &self.weights[offset + (b - a)]
    }
}

/// Per-frequency data shared by all `m` blocks.
#[derive(Debug, Clone)]
pub struct FrequencyData {
    pub xi: f64,
    ln_kd: f64,
    ln_k: Vec<f64>,
    /// `ratio[j * stride + l] = k_l(kd) / k_j(kd)` for `l <= j`.
    ratio: Vec<f64>,
    stride: usize,
    /// `[TE, TM]` Mie coefficients per order, index `l - 1`.
    mie1: [Vec<SignedLog>; 2],
    mie2: [Vec<SignedLog>; 2],
}

fn pol_index(p: Polarization) -> usize {
    match p {
        Polarization::TE => 0,
        Polarization::TM => 1,
    }
}

const POLS: [Polarization; 2] = [Polarization::TE, Polarization::TM];

/// Traces of a block split by the polarization at each sphere.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct ChannelTraces {
    pub tm: f64,
    pub te: f64,
    /// TM at sphere 1, TE at sphere 2.
    pub mix_tm_te: f64,
    /// TE at sphere 1, TM at sphere 2.
    pub mix_te_tm: f64,
}

impl ChannelTraces {
    pub fn mixing(&self) -> f64 {
        self.mix_tm_te + self.mix_te_tm
    }

    pub fn total(&self) -> f64 {
        compensated(&[self.tm, self.te, self.mix_tm_te, self.mix_te_tm])
    }
}

fn compensated(values: &[f64]) -> f64 {
    let mut s = CompensatedSum::new();
    for &v in values {
        s.add(v);
    }
    s.value()
}

#[derive(Debug, Clone, PartialEq)]
pub struct RoundTripBlock {
    pub m: usize,
    /// Imaginary frequency; `0` for the zero-frequency limit.
    pub xi: f64,
    pub l_min: usize,
    pub l_max: usize,
    pub n12: DMatrix<f64>,
    pub n21: DMatrix<f64>,
    pub sigma1: Vec<f64>,
    pub sigma2: Vec<f64>,
}

impl RoundTripBlock {
    pub fn dim(&self) -> usize {
        self.sigma1.len()
    }

    fn orders(&self) -> usize {
        self.l_max + 1 - self.l_min
    }

    fn split(&self, i: usize) -> (Polarization, usize) {
        let n = self.orders();
        if i < n {
            (Polarization::TE, self.l_min + i)
        } else {
            (Polarization::TM, self.l_min + i - n)
        }
    }

    /// Dense real matrix similar to `M^(m)`.
    pub fn matrix(&self) -> DMatrix<f64> {
        let mut a = self.n12.clone();
        for (j, mut col) in a.column_iter_mut().enumerate() {
            col *= self.sigma2[j];
        }
        for (i, mut row) in a.row_iter_mut().enumerate() {
            row *= self.sigma1[i];
        }
        a * &self.n21
    }

    fn loop_term(&self, i: usize, j: usize) -> f64 {
        self.sigma1[i] * self.n12[(i, j)] * self.sigma2[j] * self.n21[(j, i)]
    }

    pub fn trace(&self) -> f64 {
        let dim = self.dim();
        let mut s = CompensatedSum::new();
        for i in 0..dim {
            for j in 0..dim {
                s.add(self.loop_term(i, j));
            }
        }
        s.value()
    }

    pub fn channel_traces(&self) -> ChannelTraces {
        let dim = self.dim();
        let mut acc = [[CompensatedSum::new(), CompensatedSum::new()], [CompensatedSum::new(), CompensatedSum::new()]];
        for i in 0..dim {
            let p1 = pol_index(self.split(i).0);
            for j in 0..dim {
                let p2 = pol_index(self.split(j).0);
                acc[p1][p2].add(self.loop_term(i, j));
            }
        }
        ChannelTraces {
            te: acc[0][0].value(),
            tm: acc[1][1].value(),
            mix_tm_te: acc[1][0].value(),
            mix_te_tm: acc[0][1].value(),
        }
    }

    /// Partial traces keyed by `(l1, l2)`, the orders of reflection at
    /// sphere 1 and sphere 2, summed over polarizations.
    pub fn l_pair_traces(&self) -> BTreeMap<(usize, usize), f64> {
        let dim = self.dim();
        let mut acc: BTreeMap<(usize, usize), CompensatedSum> = BTreeMap::new();
        for i in 0..dim {
            let l1 = self.split(i).1;
            for j in 0..dim {
                let l2 = self.split(j).1;
                acc.entry((l1, l2)).or_default().add(self.loop_term(i, j));
            }
        }
        acc.into_iter().map(|(k, v)| (k, v.value())).collect()
    }

    /// Max row sum of the round-trip matrix representation.
    pub fn norm_bound(&self) -> f64 {
        let row_max = |a: &DMatrix<f64>| a.row_iter().map(|r| r.iter().map(|v| v.abs()).sum::<f64>()).fold(0.0, f64::max);
        row_max(&self.n12) * row_max(&self.n21)
    }

    /// Spectral radius, computed only when the cheap norm bound exceeds one.
    pub fn check_contraction(&self) -> Result<()> {
        let invalid = |detail: String| Error::Validity { n: 0, m: self.m, detail };
        let bound = self.norm_bound();
        if !bound.is_finite() {
            return Err(invalid("non-finite round-trip entries".into()));
        }
        if bound < 1.0 {
            return Ok(());
        }
        let mat = self.matrix();
        if mat.iter().any(|v| !v.is_finite()) {
            return Err(invalid("non-finite round-trip entries".into()));
        }
        let inf = mat.row_iter().map(|r| r.iter().map(|v| v.abs()).sum::<f64>()).fold(0.0, f64::max);
        if inf < 1.0 {
            return Ok(());
        }
        let radius = mat.complex_eigenvalues().iter().map(|z| z.norm()).fold(0.0, f64::max);
        if radius >= 1.0 || !radius.is_finite() {
            return Err(invalid(format!("spectral radius {radius} >= 1")));
        }
        Ok(())
    }

    /// `ln det(1 - M)`.
    ///
    /// Small operators use the series `-sum_k Tr M^k / k`, since the LU
    /// diagonal of `1 - M` only resolves `M` to absolute precision.
    pub fn ln_det_one_minus(&self) -> Result<f64> {
        let dim = self.dim();
        let mat = self.matrix();
        let norm = mat.row_iter().map(|r| r.iter().map(|v| v.abs()).sum::<f64>()).fold(0.0, f64::max);
        if norm < SERIES_NORM {
            let mut power = mat.clone();
            let mut s = CompensatedSum::new();
            for k in 1..=200 {
                s.add(-power.trace() / k as f64);
                let tail = dim as f64 * norm.powi(k + 1) / ((k + 1) as f64 * (1.0 - norm));
                if tail <= 1e-17 * s.value().abs() || tail == 0.0 {
                    break;
                }
                power = &power * &mat;
            }
            return Ok(s.value());
        }
        let a = DMatrix::<f64>::identity(dim, dim) - mat;
        let lu = a.lu();
        let u = lu.u();
        let mut sign = if lu.p().determinant::<f64>() < 0.0 { -1.0 } else { 1.0 };
        let mut s = CompensatedSum::new();
        for i in 0..dim {
            let d = u[(i, i)];
            if d < 0.0 {
                sign = -sign;
            }
            s.add(d.abs().ln());
        }
        let v = s.value();
        if sign <= 0.0 || !v.is_finite() {
            return Err(Error::Validity { n: 0, m: self.m, detail: "det(1 - M) is not positive".into() });
        }
        Ok(v)
    }
}

/// Builds round-trip blocks for a fixed geometry, materials and `l_max`.
///
/// Translation weights for every `m` are computed once at construction.
#[derive(Debug, Clone)]
pub struct RoundTripAssembler {
    pub geometry: GeometryConfig,
    pub material1: Material,
    pub material2: Material,
    pub l_max: usize,
    bases: Vec<BlockBasis>,
}

impl RoundTripAssembler {
    pub fn new(geometry: GeometryConfig, material1: Material, material2: Material, l_max: usize) -> Result<Self> {
        Self::with_m_max(geometry, material1, material2, l_max, l_max)
    }

    /// Only blocks with `m <= m_max` can be requested afterwards.
    pub fn with_m_max(
        geometry: GeometryConfig,
        material1: Material,
        material2: Material,
        l_max: usize,
        m_max: usize,
    ) -> Result<Self> {
        let geometry = GeometryConfig::new(geometry.r1, geometry.r2, geometry.d)?;
        if l_max < 1 {
            return Err(Error::domain("l_max must be >= 1"));
        }
        if 2 * l_max > crate::specfun::MAX_ORDER {
            return Err(Error::config(format!("l_max = {l_max} exceeds {}", crate::specfun::MAX_ORDER / 2)));
        }
        let bases = (0..=m_max.min(l_max)).map(|m| BlockBasis::new(m, l_max)).collect::<Result<Vec<_>>>()?;
        Ok(RoundTripAssembler { geometry, material1, material2, l_max, bases })
    }

    pub fn m_max(&self) -> usize {
        self.bases.len() - 1
    }

    fn basis(&self, m: usize) -> Result<&BlockBasis> {
        self.bases
            .get(m)
            .ok_or_else(|| Error::domain(format!("m = {m} outside 0..={} for this assembler", self.m_max())))
    }

    /// Mie coefficients and Bessel ratios at imaginary frequency `xi > 0`.
    pub fn frequency(&self, xi: f64) -> Result<FrequencyData> {
        if !(xi > 0.0) {
            return Err(Error::domain(format!("frequency must be positive, got {xi}")));
        }
        let g = &self.geometry;
        let kd = xi * g.d;
        let top = 2 * self.l_max;
        let ln_k = ln_k_table(top, kd)?;
        let stride = top + 1;
        let mut ratio = vec![0.0; stride * stride];
        for j in 0..=top {
            for l in 0..=j {
                ratio[j * stride + l] = (ln_k[l] - ln_k[j]).exp();
            }
        }
        let split = |mat: &Material, r: f64| -> Result<[Vec<SignedLog>; 2]> {
            let t = mie_table(mat, self.l_max, xi, r)?;
            Ok([t.iter().map(|p| p.b).collect(), t.iter().map(|p| p.a).collect()])
        };
        Ok(FrequencyData {
            xi,
            ln_kd: kd.ln(),
            ln_k,
            ratio,
            stride,
            mie1: split(&self.material1, g.r1)?,
            mie2: split(&self.material2, g.r2)?,
        })
    }

    /// Block at a positive frequency, with the contraction check applied.
    pub fn block(&self, freq: &FrequencyData, m: usize) -> Result<RoundTripBlock> {
        let block = self.block_unchecked(freq, m)?;
        block.check_contraction()?;
        Ok(block)
    }

    pub fn block_unchecked(&self, freq: &FrequencyData, m: usize) -> Result<RoundTripBlock> {
        let basis = self.basis(m)?;
        let (l0, n) = (basis.l0, basis.n);
        let dim = 2 * n;
        // relative sums per unordered pair: (ln|S|, sign) for conserved and mixing
        let mut sums = vec![(SignedLog::ZERO, SignedLog::ZERO); n * n];
        for l1 in l0..=self.l_max {
            for l2 in l1..=self.l_max {
                let w = basis.pair(l1, l2);
                let top = w.lp[0];
                let row = &freq.ratio[top * freq.stride..];
                let (mut sc, mut sm) = (CompensatedSum::new(), CompensatedSum::new());
                for (k, &lp) in w.lp.iter().enumerate() {
                    let r = row[lp];
                    sc.add(w.conserved[k] * r);
                    sm.add(w.mixing[k] * r);
                }
                let ln_top = freq.ln_k[top];
                let c = SignedLog::from_value(sc.value());
                let mx = SignedLog::from_value(sm.value());
                let c = SignedLog::from_parts(c.sign, c.ln_abs + ln_top);
                let mx = SignedLog::from_parts(mx.sign, mx.ln_abs + ln_top + freq.ln_kd);
                sums[(l1 - l0) * n + (l2 - l0)] = (c, mx);
                sums[(l2 - l0) * n + (l1 - l0)] = (c, mx);
            }
        }

        let mut n12 = DMatrix::<f64>::zeros(dim, dim);
        let mut n21 = DMatrix::<f64>::zeros(dim, dim);
        let mut sigma1 = vec![0.0; dim];
        let mut sigma2 = vec![0.0; dim];
        let index = |p: Polarization, l: usize| pol_index(p) * n + l - l0;
        for &p in &POLS {
            for l in l0..=self.l_max {
                sigma1[index(p, l)] = freq.mie1[pol_index(p)][l - 1].sign;
                sigma2[index(p, l)] = freq.mie2[pol_index(p)][l - 1].sign;
            }
        }
        let parity = |l: usize| if l % 2 == 0 { 1.0 } else { -1.0 };
        for &pa in &POLS {
            for &pb in &POLS {
                for la in l0..=self.l_max {
                    for lb in l0..=self.l_max {
                        let (c, mx) = sums[(la - l0) * n + (lb - l0)];
                        let (t, leg_sign) = if pa == pb { (c, 1.0) } else { (mx, -1.0) };
                        if t.is_zero() {
                            continue;
                        }
                        // forward leg: sphere 1 order la <- sphere 2 order lb
                        let half1 = 0.5 * freq.mie1[pol_index(pa)][la - 1].ln_abs;
                        let half2 = 0.5 * freq.mie2[pol_index(pb)][lb - 1].ln_abs;
                        n12[(index(pa, la), index(pb, lb))] = t.sign * parity(lb) * (t.ln_abs + half1 + half2).exp();
                        // return leg: sphere 2 order la <- sphere 1 order lb
                        let half2 = 0.5 * freq.mie2[pol_index(pa)][la - 1].ln_abs;
                        let half1 = 0.5 * freq.mie1[pol_index(pb)][lb - 1].ln_abs;
                        n21[(index(pa, la), index(pb, lb))] =
                            leg_sign * t.sign * parity(lb) * (t.ln_abs + half1 + half2).exp();
                    }
                }
            }
        }
        Ok(RoundTripBlock { m, xi: freq.xi, l_min: l0, l_max: self.l_max, n12, n21, sigma1, sigma2 })
    }

    /// Analytic `xi -> 0` limit of the block.
    ///
    /// Mie coefficients behave as `C (kR)^{2l+1}` and translation elements
    /// as `t0 (kd)^{-(l1+l2+1)}`, so every balanced entry has a finite limit.
    /// Mixing entries vanish, as does TE reflection off a Drude sphere.
    pub fn zero_frequency_block(&self, m: usize) -> Result<RoundTripBlock> {
        let basis = self.basis(m)?;
        let (l0, n) = (basis.l0, basis.n);
        let dim = 2 * n;
        let g = &self.geometry;
        let index = |p: Polarization, l: usize| pol_index(p) * n + l - l0;
        let parity = |l: usize| if l % 2 == 0 { 1.0 } else { -1.0 };
        let ln_c = |mat: &Material, p: Polarization, l: usize| -> f64 {
            let base = -ln_double_factorial(2 * l as i64 + 1) - ln_double_factorial(2 * l as i64 - 1);
            match (p, mat.kind) {
                (Polarization::TM, _) => base + ((l + 1) as f64 / l as f64).ln(),
                (Polarization::TE, MaterialKind::PerfectConductor) => base,
                (Polarization::TE, MaterialKind::Drude) => f64::NEG_INFINITY,
            }
        };
        let mie_sign = |p: Polarization, l: usize| match p {
            Polarization::TM => parity(l),
            Polarization::TE => -parity(l),
        };
        let mut sigma1 = vec![0.0; dim];
        let mut sigma2 = vec![0.0; dim];
        for &p in &POLS {
            for l in l0..=self.l_max {
                sigma1[index(p, l)] = mie_sign(p, l);
                sigma2[index(p, l)] = mie_sign(p, l);
            }
        }
        let mut n12 = DMatrix::<f64>::zeros(dim, dim);
        let mut n21 = DMatrix::<f64>::zeros(dim, dim);
        let (ln_r1, ln_r2, ln_d) = (g.r1.ln(), g.r2.ln(), g.d.ln());
        for la in l0..=self.l_max {
            for lb in l0..=self.l_max {
                let w = basis.pair(la, lb);
                let j = w.lp[0];
                let t0 = w.conserved[0];
                let ln_t = t0.abs().ln() + std::f64::consts::FRAC_PI_2.ln() + ln_double_factorial(2 * j as i64 - 1)
                    - (j + 1) as f64 * ln_d;
                for &p in &POLS {
                    let i = index(p, la);
                    let k = index(p, lb);
                    let fwd = 0.5 * (ln_c(&self.material1, p, la) + ln_c(&self.material2, p, lb))
                        + (la as f64 + 0.5) * ln_r1
                        + (lb as f64 + 0.5) * ln_r2;
                    n12[(i, k)] = t0.signum() * parity(lb) * (ln_t + fwd).exp();
                    let back = 0.5 * (ln_c(&self.material2, p, la) + ln_c(&self.material1, p, lb))
                        + (la as f64 + 0.5) * ln_r2
                        + (lb as f64 + 0.5) * ln_r1;
                    n21[(i, k)] = t0.signum() * parity(lb) * (ln_t + back).exp();
                }
            }
        }
        let block = RoundTripBlock { m, xi: 0.0, l_min: l0, l_max: self.l_max, n12, n21, sigma1, sigma2 };
        block.check_contraction()?;
        Ok(block)
    }
}

/// One block at `xi > 0`, building the translation weights for this `m` only.
pub fn assemble_block(
    geometry: GeometryConfig,
    material1: Material,
    material2: Material,
    m: usize,
    xi: f64,
    l_max: usize,
) -> Result<RoundTripBlock> {
    if l_max < lowest_order(m) {
        return Err(Error::domain(format!("l_max = {l_max} below max(1, m) = {}", lowest_order(m))));
    }
    let asm = RoundTripAssembler::with_m_max(geometry, material1, material2, l_max, m)?;
    asm.block(&asm.frequency(xi)?, m)
}

pub fn zero_frequency_block(
    geometry: GeometryConfig,
    material1: Material,
    material2: Material,
    m: usize,
    l_max: usize,
) -> Result<RoundTripBlock> {
    if l_max < lowest_order(m) {
        return Err(Error::domain(format!("l_max = {l_max} below max(1, m) = {}", lowest_order(m))));
    }
    RoundTripAssembler::with_m_max(geometry, material1, material2, l_max, m)?.zero_frequency_block(m)
}

pub fn channel_traces(block: &RoundTripBlock) -> (ChannelTraces, BTreeMap<(usize, usize), f64>) {
    (block.channel_traces(), block.l_pair_traces())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mie::mie_coefficients;
    use crate::translation::{dipole_products, translation_element, Direction};
    use nalgebra::Complex;

    fn pec() -> Material {
        Material::perfect_conductor()
    }

    fn drude() -> Material {
        Material::drude(2.0 * std::f64::consts::PI * 400.0, 1e-2).unwrap()
    }

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    #[test]
    fn dipole_traces_match_closed_forms() {
        let g = GeometryConfig::symmetric(20.0).unwrap();
        for xi in [0.05, 1.0, 7.0] {
            let mie = mie_coefficients(&pec(), 1, xi * g.r1, xi).unwrap();
            let (a, b) = (mie.a_value(), mie.b_value());
            let p = dipole_products(xi * g.d);
            let t0 = assemble_block(g, pec(), pec(), 0, xi, 1).unwrap().channel_traces();
            assert!(rel(t0.tm, a * a * p.conserved_m0) < 1e-12);
            assert!(rel(t0.te, b * b * p.conserved_m0) < 1e-12);
            assert_eq!(t0.mixing(), 0.0);
            let t1 = assemble_block(g, pec(), pec(), 1, xi, 1).unwrap().channel_traces();
            assert!(rel(t1.tm, a * a * p.conserved_m1) < 1e-12);
            assert!(rel(t1.te, b * b * p.conserved_m1) < 1e-12);
            assert!(rel(t1.mixing(), 2.0 * a * b * p.mixing_m1) < 1e-12);
            assert!(t1.mixing() >= 0.0);
        }
    }

    #[test]
    fn zero_frequency_dipole_sums() {
        let g = GeometryConfig::symmetric(20.0).unwrap();
        let scale = (g.r1 / g.d).powi(6);
        let total = |mat: Material| {
            let b0 = zero_frequency_block(g, mat, mat, 0, 1).unwrap().channel_traces();
            let b1 = zero_frequency_block(g, mat, mat, 1, 1).unwrap().channel_traces();
            (b0.total() + 2.0 * b1.total(), b0, b1)
        };
        let (p, p0, p1) = total(pec());
        assert!(rel(p, 7.5 * scale) < 1e-13);
        assert!(rel(p0.tm + 2.0 * p1.tm, 6.0 * scale) < 1e-13);
        assert!(rel(p0.te / p0.tm, 0.25) < 1e-13);
        assert!(rel(p1.te / p1.tm, 0.25) < 1e-13);
        let (d, d0, _) = total(drude());
        assert!(rel(d, 6.0 * scale) < 1e-13);
        assert_eq!(d0.te, 0.0);
        assert!(rel(d / p, 0.8) < 1e-13);
    }

    fn assert_blocks_close(a: &RoundTripBlock, b: &RoundTripBlock, tol: f64) {
        for (x, y) in [(&a.n12, &b.n12), (&a.n21, &b.n21)] {
            let scale = y.amax();
            for (u, v) in x.iter().zip(y.iter()) {
                if v.abs() > 1e-8 * scale {
                    assert!(rel(*u, *v) < tol, "{u} vs {v}");
                } else {
                    assert!((u - v).abs() < tol * scale);
                }
            }
        }
        assert_eq!(a.sigma1, b.sigma1);
    }

    #[test]
    fn small_frequency_converges_to_zero_frequency_block() {
        let g = GeometryConfig::new(0.2, 0.15, 1.0).unwrap();
        let asm = RoundTripAssembler::new(g, pec(), pec(), 6).unwrap();
        let freq = asm.frequency(1e-6).unwrap();
        for m in 0..=6 {
            assert_blocks_close(&asm.block(&freq, m).unwrap(), &asm.zero_frequency_block(m).unwrap(), 1e-6);
        }
        let asm = RoundTripAssembler::new(g, drude(), drude(), 4).unwrap();
        let freq = asm.frequency(1e-7).unwrap();
        for m in 0..=4 {
            let a = asm.block(&freq, m).unwrap();
            let z = asm.zero_frequency_block(m).unwrap();
            let n = a.dim() / 2;
            let tm = |b: &RoundTripBlock| b.n12.view((n, n), (n, n)).into_owned();
            let scale = tm(&z).amax();
            assert!((tm(&a) - tm(&z)).amax() < 1e-6 * scale);
        }
        let te = asm.block(&asm.frequency(1e-12).unwrap(), 1).unwrap();
        let n = te.dim() / 2;
        assert!(te.n12.view((0, 0), (n, n)).amax() < 1e-4 * te.n12.amax());
    }

    type CMat = DMatrix<Complex<f64>>;

    fn complex_reference(g: GeometryConfig, m1: Material, m2: Material, m: usize, xi: f64, l_max: usize) -> CMat {
        let l0 = m.max(1);
        let n = l_max + 1 - l0;
        let dim = 2 * n;
        let t1 = mie_table(&m1, l_max, xi, g.r1).unwrap();
        let t2 = mie_table(&m2, l_max, xi, g.r2).unwrap();
        let pols = [Polarization::TE, Polarization::TM];
        let idx = |p: usize, l: usize| p * n + l - l0;
        let mut r1 = CMat::zeros(dim, dim);
        let mut r2 = CMat::zeros(dim, dim);
        let mut t12 = CMat::zeros(dim, dim);
        let mut t21 = CMat::zeros(dim, dim);
        for (pa, &pol_a) in pols.iter().enumerate() {
            for la in l0..=l_max {
                let pick = |p: &crate::mie::MiePair| if pa == 0 { p.b_value() } else { p.a_value() };
                r1[(idx(pa, la), idx(pa, la))] = Complex::new(pick(&t1[la - 1]), 0.0);
                r2[(idx(pa, la), idx(pa, la))] = Complex::new(pick(&t2[la - 1]), 0.0);
                for (pb, &pol_b) in pols.iter().enumerate() {
                    for lb in l0..=l_max {
                        let e = |dir| {
                            let (re, im) = translation_element(la, lb, m as i64, pol_b, pol_a, xi * g.d, dir)
                                .unwrap()
                                .complex_value();
                            Complex::new(re, im)
                        };
                        t12[(idx(pa, la), idx(pb, lb))] = e(Direction::Forward);
                        t21[(idx(pa, la), idx(pb, lb))] = e(Direction::Backward);
                    }
                }
            }
        }
        r1 * t12 * r2 * t21
    }

    #[test]
    fn real_assembly_matches_complex_reference() {
        let g = GeometryConfig::new(0.3, 0.2, 1.0).unwrap();
        for (m1, m2) in [(pec(), pec()), (drude(), pec()), (drude(), drude())] {
            for m in [0usize, 1, 2] {
                for xi in [0.4, 1.3, 6.0] {
                    let c = complex_reference(g, m1, m2, m, xi, 5);
                    let block = assemble_block(g, m1, m2, m, xi, 5).unwrap();
                    let real = block.matrix();
                    let tr = c.trace();
                    assert!(tr.im.abs() < 1e-14 * tr.re.abs());
                    assert!(rel(block.trace(), tr.re) < 1e-12);
                    let tr2 = (&c * &c).trace();
                    assert!(tr2.im.abs() < 1e-14 * tr2.re.abs());
                    assert!(rel((&real * &real).trace(), tr2.re) < 1e-11);
                    let det = (CMat::identity(c.nrows(), c.nrows()) - &c).determinant();
                    assert!(det.im.abs() < 1e-14 * det.re.abs());
                    assert!(rel(block.ln_det_one_minus().unwrap().exp(), det.re) < 1e-13);
                }
            }
        }
    }

    #[test]
    fn identical_spheres_have_equal_mixing_channels() {
        let g = GeometryConfig::symmetric(4.0).unwrap();
        for xi in [0.1, 2.0] {
            let t = assemble_block(g, drude(), drude(), 2, xi, 6).unwrap().channel_traces();
            assert!(rel(t.mix_tm_te, t.mix_te_tm) < 1e-12);
        }
        let g = GeometryConfig::new(0.3, 0.1, 1.0).unwrap();
        let t = assemble_block(g, pec(), pec(), 1, 2.0, 4).unwrap().channel_traces();
        assert!(rel(t.mix_tm_te, t.mix_te_tm) > 1e-3);
    }

    #[test]
    fn channel_partitions_sum_to_trace() {
        let g = GeometryConfig::new(0.3, 0.25, 1.0).unwrap();
        let b = assemble_block(g, drude(), pec(), 1, 0.8, 8).unwrap();
        let (ch, pairs) = channel_traces(&b);
        let tr = b.matrix().trace();
        assert!(rel(ch.total(), tr) < 1e-13);
        assert!(rel(pairs.values().sum::<f64>(), tr) < 1e-13);
        assert_eq!(pairs.len(), 64);
    }

    #[test]
    fn multipole_truncation_converges_at_large_distance() {
        let g = GeometryConfig::symmetric(20.0).unwrap();
        for xi in [0.2, 1.0, 5.0] {
            let total = |l_max| {
                (0..=6).map(|m| if m == 0 { 1.0 } else { 2.0 } * assemble_block(g, pec(), pec(), m, xi, l_max).unwrap().trace()).sum::<f64>()
            };
            let (a, b) = (total(6), total(12));
            assert!(rel(a, b) < 1e-10, "xi={xi} {a} {b}");
        }
    }

    #[test]
    fn norm_below_one_at_moderate_distance() {
        let g = GeometryConfig::symmetric(10.0).unwrap();
        let asm = RoundTripAssembler::new(g, pec(), pec(), 30).unwrap();
        for xi in [1e-4, 0.3, 3.0, 60.0] {
            let f = asm.frequency(xi).unwrap();
            for m in [0, 1, 5, 30] {
                let b = asm.block(&f, m).unwrap();
                let mat = b.matrix();
                let inf = mat.row_iter().map(|r| r.iter().map(|v| v.abs()).sum::<f64>()).fold(0.0, f64::max);
                assert!(inf < 1.0 && mat.iter().all(|v| v.is_finite()));
            }
        }
        assert!(asm.zero_frequency_block(0).unwrap().norm_bound() < 1.0);
    }

    #[test]
    fn large_orders_stay_finite_near_contact() {
        let g = GeometryConfig::symmetric(2.1).unwrap();
        let asm = RoundTripAssembler::new(g, pec(), pec(), 40).unwrap();
        for xi in [1e-3, 1.0, 30.0] {
            let f = asm.frequency(xi).unwrap();
            let b = asm.block(&f, 0).unwrap();
            assert!(b.ln_det_one_minus().unwrap().is_finite());
        }
    }

    #[test]
    fn invalid_geometry_and_orders() {
        assert!(GeometryConfig::new(0.6, 0.5, 1.0).is_err());
        assert!(GeometryConfig::new(-0.1, 0.5, 1.0).is_err());
        let g = GeometryConfig::symmetric(5.0).unwrap();
        assert!(assemble_block(g, pec(), pec(), 3, 1.0, 2).is_err());
        assert!(assemble_block(g, pec(), pec(), 0, 0.0, 2).is_err());
    }

    #[test]
    fn ln_det_matches_trace_series_for_small_operator() {
        let g = GeometryConfig::symmetric(8.0).unwrap();
        let b = assemble_block(g, pec(), pec(), 1, 0.5, 5).unwrap();
        let m = b.matrix();
        let mut pow = m.clone();
        let mut series = 0.0;
        for k in 1..30 {
            series -= pow.trace() / k as f64;
            pow = &pow * &m;
        }
        assert!(rel(b.ln_det_one_minus().unwrap(), series) < 1e-12, "{} {series}", b.ln_det_one_minus().unwrap());
    }
}
