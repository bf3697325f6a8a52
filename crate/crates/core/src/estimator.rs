//! Monte Carlo estimation of the spectral form factor and its moments.
//!
//! Only `t >= 1` is ever stored; dropping `t = 0` is what removes the
//! disconnected `N^{2Lm}` contribution from the moments.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::ensemble::TraceSequence;
use crate::error::{Result, SffError};
use crate::exact::ExactSum;

/// Running sums of `|tr U^t|^{2m}` and their squares over realizations.
#[derive(Clone, Debug, PartialEq)]
pub struct MomentAccumulator {
    tmax: usize,
    orders: Vec<u32>,
    sums: Vec<ExactSum>,
    sums_sq: Vec<ExactSum>,
    n: u64,
}

impl MomentAccumulator {
    /// `orders` are the moment orders `m >= 1`; duplicates are dropped.
    pub fn new(tmax: usize, orders: &[u32]) -> Result<Self> {
        if tmax == 0 {
            return Err(SffError::Shape("tmax must be >= 1".into()));
        }
        let orders = normalize_orders(orders)?;
        let len = tmax * orders.len();
        Ok(Self {
            tmax,
            orders,
            sums: vec![ExactSum::new(); len],
            sums_sq: vec![ExactSum::new(); len],
            n: 0,
        })
    }

    pub fn tmax(&self) -> usize {
        self.tmax
    }

    pub fn orders(&self) -> &[u32] {
        &self.orders
    }

    pub fn n_realizations(&self) -> u64 {
        self.n
    }

    /// Adds one realization.
    pub fn accumulate(&mut self, traces: &TraceSequence) -> Result<()> {
        self.accumulate_smoothed(traces, &Smoothing::NONE)
    }

    /// Adds one realization after smoothing each `|tr U^t|^{2m}` series in
    /// `t`. Averaging commutes with smoothing, so the mean equals the
    /// smoothed mean while the standard error is that of the smoothed
    /// estimator itself.
    pub fn accumulate_smoothed(&mut self, traces: &TraceSequence, smoothing: &Smoothing) -> Result<()> {
        if traces.tmax() < self.tmax {
            return Err(SffError::Shape(format!(
                "trace sequence has tmax {} but the accumulator needs {}",
                traces.tmax(),
                self.tmax
            )));
        }
        smoothing.validate(self.tmax)?;
        let abs2: Vec<f64> = traces.values()[..self.tmax].iter().map(|z| z.norm_sqr()).collect();
        for (oi, &m) in self.orders.iter().enumerate() {
            let raw: Vec<f64> = abs2.iter().map(|x| x.powi(m as i32)).collect();
            let series = smoothing.apply(&raw);
            let base = oi * self.tmax;
            for (k, x) in series.into_iter().enumerate() {
                self.sums[base + k].add(x);
                self.sums_sq[base + k].add(x * x);
            }
        }
        self.n += 1;
        Ok(())
    }

    /// Adds the realizations held by `other`. Exact, hence associative and
    /// commutative.
    pub fn merge(&mut self, other: &MomentAccumulator) -> Result<()> {
        if self.tmax != other.tmax || self.orders != other.orders {
            return Err(SffError::Shape(format!(
                "cannot merge accumulators with (tmax, orders) = ({}, {:?}) and ({}, {:?})",
                self.tmax, self.orders, other.tmax, other.orders
            )));
        }
        for (a, b) in self.sums.iter_mut().zip(&other.sums) {
            a.merge(b);
        }
        for (a, b) in self.sums_sq.iter_mut().zip(&other.sums_sq) {
            a.merge(b);
        }
        self.n += other.n;
        Ok(())
    }

    /// Sum over realizations of `|tr U^t|^{2m}` (after any smoothing).
    pub fn sum(&self, t: usize, m: u32) -> Option<f64> {
        self.index(t, m).map(|i| self.sums[i].value())
    }

    fn index(&self, t: usize, m: u32) -> Option<usize> {
        let oi = self.orders.iter().position(|&o| o == m)?;
        (t >= 1 && t <= self.tmax).then(|| oi * self.tmax + t - 1)
    }

    /// Mean and standard error of the mean for every `(t, m)`.
    pub fn finalize(&self) -> Result<SffCurve> {
        if self.n < 2 {
            return Err(SffError::TooFewRealizations(self.n));
        }
        let n = self.n as f64;
        let (mean, stderr) = self
            .sums
            .iter()
            .zip(&self.sums_sq)
            .map(|(s, s2)| {
                let s = s.value();
                let mean = s / n;
                let var = ((s2.value() - s * mean) / (n - 1.0)).max(0.0);
                (mean, (var / n).sqrt())
            })
            .unzip();
        Ok(SffCurve {
            tmax: self.tmax,
            orders: self.orders.clone(),
            mean,
            stderr,
            n_realizations: self.n,
        })
    }
}

fn normalize_orders(orders: &[u32]) -> Result<Vec<u32>> {
    if orders.is_empty() {
        return Err(SffError::Config("at least one moment order is required".into()));
    }
    if orders.contains(&0) {
        return Err(SffError::Config("moment orders must be >= 1".into()));
    }
    let mut o = orders.to_vec();
    o.sort_unstable();
    o.dedup();
    Ok(o)
}

/// Averaged moments `K_m(t)` with standard errors, `t = 1..=tmax`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SffCurve {
    pub tmax: usize,
    pub orders: Vec<u32>,
    /// Row-major over `(order, t)`.
    pub mean: Vec<f64>,
    pub stderr: Vec<f64>,
    pub n_realizations: u64,
}

impl SffCurve {
    fn offset(&self, m: u32) -> usize {
        let oi = self
            .orders
            .iter()
            .position(|&o| o == m)
            .unwrap_or_else(|| panic!("order {m} not in curve"));
        oi * self.tmax
    }

    pub fn mean(&self, t: usize, m: u32) -> f64 {
        assert!(t >= 1 && t <= self.tmax);
        self.mean[self.offset(m) + t - 1]
    }

    pub fn stderr(&self, t: usize, m: u32) -> f64 {
        assert!(t >= 1 && t <= self.tmax);
        self.stderr[self.offset(m) + t - 1]
    }

    /// `K_m(t)` for `t = 1..=tmax`.
    pub fn means(&self, m: u32) -> &[f64] {
        let o = self.offset(m);
        &self.mean[o..o + self.tmax]
    }

    pub fn stderrs(&self, m: u32) -> &[f64] {
        let o = self.offset(m);
        &self.stderr[o..o + self.tmax]
    }
}

/// Moments in Heisenberg units: `tau = t / N^L`,
/// `kappa_m = (K_m / m!)^{1/m} / N^L`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RescaledCurve {
    pub dim: usize,
    pub tau: Vec<f64>,
    pub orders: Vec<u32>,
    pub kappa: Vec<f64>,
    pub kappa_stderr: Vec<f64>,
    pub n_realizations: u64,
}

impl RescaledCurve {
    fn offset(&self, m: u32) -> usize {
        let oi = self
            .orders
            .iter()
            .position(|&o| o == m)
            .unwrap_or_else(|| panic!("order {m} not in curve"));
        oi * self.tau.len()
    }

    pub fn kappa(&self, m: u32) -> &[f64] {
        let o = self.offset(m);
        &self.kappa[o..o + self.tau.len()]
    }

    pub fn kappa_stderr(&self, m: u32) -> &[f64] {
        let o = self.offset(m);
        &self.kappa_stderr[o..o + self.tau.len()]
    }
}

pub fn factorial(m: u32) -> f64 {
    (1..=m).map(f64::from).product()
}

/// `(K / m!)^{1/m} / dim`.
pub fn kappa_from_moment(k: f64, m: u32, dim: usize) -> f64 {
    (k / factorial(m)).powf(1.0 / m as f64) / dim as f64
}

/// Rescales to Heisenberg units; standard errors by the delta method,
/// `se_kappa = se_K / (m! m N^L (K/m!)^{(m-1)/m})`.
pub fn rescale(curve: &SffCurve, n: usize, l: u32) -> RescaledCurve {
    let dim = n.pow(l);
    let d = dim as f64;
    let tau = (1..=curve.tmax).map(|t| t as f64 / d).collect();
    let mut kappa = Vec::with_capacity(curve.mean.len());
    let mut kappa_stderr = Vec::with_capacity(curve.mean.len());
    for &m in &curve.orders {
        let fact = factorial(m);
        let mf = m as f64;
        for (&k, &se) in curve.means(m).iter().zip(curve.stderrs(m)) {
            kappa.push(kappa_from_moment(k, m, dim));
            let slope = fact * mf * d * (k / fact).powf((mf - 1.0) / mf);
            kappa_stderr.push(if m == 1 { se / d } else { se / slope });
        }
    }
    RescaledCurve {
        dim,
        tau,
        orders: curve.orders.clone(),
        kappa,
        kappa_stderr,
        n_realizations: curve.n_realizations,
    }
}

/// Centered moving average in `t`. Windows are truncated at the ends of the
/// time range.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Smoothing {
    /// Fixed odd window; `Fixed(1)` is the identity.
    Fixed(usize),
    /// Window `2 floor(t/10) + 1` at time `t`, capped at `cap` (odd).
    Adaptive { cap: usize },
}

impl Default for Smoothing {
    fn default() -> Self {
        Smoothing::Adaptive { cap: 101 }
    }
}

impl Smoothing {
    pub const NONE: Smoothing = Smoothing::Fixed(1);

    pub fn is_identity(&self) -> bool {
        matches!(self, Smoothing::Fixed(1) | Smoothing::Adaptive { cap: 1 })
    }

    pub fn validate(&self, tmax: usize) -> Result<()> {
        match *self {
            Smoothing::Fixed(w) => {
                if w == 0 || w % 2 == 0 {
                    return Err(SffError::Config(format!(
                        "smoothing window must be a positive odd integer, got {w}"
                    )));
                }
                if w > tmax {
                    return Err(SffError::Config(format!(
                        "smoothing window {w} exceeds tmax {tmax}"
                    )));
                }
            }
            Smoothing::Adaptive { cap } => {
                if cap == 0 || cap % 2 == 0 {
                    return Err(SffError::Config(format!(
                        "adaptive smoothing cap must be a positive odd integer, got {cap}"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Nominal window at time `t >= 1`.
    pub fn window_at(&self, t: usize) -> usize {
        match *self {
            Smoothing::Fixed(w) => w,
            Smoothing::Adaptive { cap } => (2 * (t / 10) + 1).min(cap),
        }
    }

    /// Inclusive range of times averaged into time `t`.
    pub fn range(&self, t: usize, tmax: usize) -> (usize, usize) {
        let half = self.window_at(t) / 2;
        (t.saturating_sub(half).max(1), (t + half).min(tmax))
    }

    /// Smooths `series[t - 1]`, `t = 1..=len`.
    pub fn apply(&self, series: &[f64]) -> Vec<f64> {
        if self.is_identity() {
            return series.to_vec();
        }
        let tmax = series.len();
        (1..=tmax)
            .map(|t| {
                let (lo, hi) = self.range(t, tmax);
                series[lo - 1..hi].iter().sum::<f64>() / (hi - lo + 1) as f64
            })
            .collect()
    }
}

impl fmt::Display for Smoothing {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Smoothing::Fixed(w) => write!(f, "{w}"),
            Smoothing::Adaptive { cap } => write!(f, "auto:{cap}"),
        }
    }
}

impl FromStr for Smoothing {
    type Err = SffError;

    /// `<odd integer>`, `auto` (cap 101) or `auto:<odd cap>`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let parse = |v: &str| {
            v.parse::<usize>()
                .map_err(|_| SffError::Config(format!("bad smoothing window {s:?}")))
        };
        let sm = if s == "auto" {
            Smoothing::default()
        } else if let Some(cap) = s.strip_prefix("auto:") {
            Smoothing::Adaptive { cap: parse(cap)? }
        } else {
            Smoothing::Fixed(parse(s)?)
        };
        sm.validate(usize::MAX)?;
        Ok(sm)
    }
}

impl Serialize for Smoothing {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Smoothing {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Smooths the means of `curve`. The reported standard error at each `t` is
/// the window average of the input standard errors, an upper bound on the
/// true one whatever the correlation between times. For the exact standard
/// error use [`MomentAccumulator::accumulate_smoothed`].
pub fn smooth(curve: &SffCurve, smoothing: &Smoothing) -> Result<SffCurve> {
    smoothing.validate(curve.tmax)?;
    let mut out = curve.clone();
    for &m in &curve.orders {
        let o = curve.offset(m);
        let means = smoothing.apply(curve.means(m));
        let ses = smoothing.apply(curve.stderrs(m));
        out.mean[o..o + curve.tmax].copy_from_slice(&means);
        out.stderr[o..o + curve.tmax].copy_from_slice(&ses);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ensemble::{trace_powers, EigenphaseSpectrum};
    use num_complex::Complex64;
    use proptest::prelude::*;

    fn traces(vals: &[f64]) -> TraceSequence {
        TraceSequence::new(vals.iter().map(|&v| Complex64::new(v, 0.0)).collect()).unwrap()
    }

    fn curve_of(means: Vec<f64>) -> SffCurve {
        SffCurve {
            tmax: means.len(),
            orders: vec![1],
            stderr: vec![0.0; means.len()],
            mean: means,
            n_realizations: 2,
        }
    }

    #[test]
    fn identity_spectrum_gives_dim_squared() {
        let spec = EigenphaseSpectrum::from_phases(vec![0.0; 7]);
        let tr = trace_powers(&spec, 10).unwrap();
        let mut acc = MomentAccumulator::new(10, &[1]).unwrap();
        acc.accumulate(&tr).unwrap();
        acc.accumulate(&tr).unwrap();
        let c = acc.finalize().unwrap();
        for t in 1..=10 {
            assert_eq!(c.mean(t, 1), 49.0);
            assert_eq!(c.stderr(t, 1), 0.0);
        }
    }

    #[test]
    fn finalize_needs_two() {
        let mut acc = MomentAccumulator::new(3, &[1, 2]).unwrap();
        assert!(matches!(acc.finalize(), Err(SffError::TooFewRealizations(0))));
        acc.accumulate(&traces(&[1.0, 2.0, 3.0])).unwrap();
        assert!(matches!(acc.finalize(), Err(SffError::TooFewRealizations(1))));
    }

    #[test]
    fn shape_errors() {
        let mut acc = MomentAccumulator::new(5, &[1]).unwrap();
        assert!(matches!(acc.accumulate(&traces(&[1.0, 2.0])), Err(SffError::Shape(_))));
        let other = MomentAccumulator::new(4, &[1]).unwrap();
        assert!(acc.merge(&other).is_err());
        let other = MomentAccumulator::new(5, &[2]).unwrap();
        assert!(acc.merge(&other).is_err());
        assert!(MomentAccumulator::new(0, &[1]).is_err());
        assert!(MomentAccumulator::new(3, &[]).is_err());
        assert!(MomentAccumulator::new(3, &[0]).is_err());
        // longer traces are fine, extra times are ignored
        acc.accumulate(&traces(&[1.0; 9])).unwrap();
    }

    #[test]
    fn stderr_matches_two_pass() {
        let data: Vec<f64> = (0..37).map(|k| ((k * 7919) % 101) as f64 / 13.0).collect();
        let mut acc = MomentAccumulator::new(1, &[1, 2]).unwrap();
        for &x in &data {
            acc.accumulate(&traces(&[x])).unwrap();
        }
        let c = acc.finalize().unwrap();
        for m in [1u32, 2] {
            let ys: Vec<f64> = data.iter().map(|x| x.powi(2 * m as i32)).collect();
            let n = ys.len() as f64;
            let mean = ys.iter().sum::<f64>() / n;
            let var = ys.iter().map(|y| (y - mean).powi(2)).sum::<f64>() / (n - 1.0);
            let se = (var / n).sqrt();
            assert!((c.mean(1, m) - mean).abs() < 1e-12 * mean);
            assert!((c.stderr(1, m) - se).abs() < 1e-9 * se, "m={m}");
        }
    }

    #[test]
    fn rescale_plateaus() {
        // N = 4, L = 2: dim 16
        let c = SffCurve {
            tmax: 2,
            orders: vec![1, 2],
            mean: vec![8.0, 16.0, 2.0 * 256.0, 2.0 * 256.0],
            stderr: vec![1.0, 1.0, 10.0, 10.0],
            n_realizations: 10,
        };
        let r = rescale(&c, 4, 2);
        assert_eq!(r.tau, vec![1.0 / 16.0, 2.0 / 16.0]);
        assert_eq!(r.kappa(1), &[0.5, 1.0]);
        assert_eq!(r.kappa(2), &[1.0, 1.0]);
        assert_eq!(r.kappa_stderr(1), &[1.0 / 16.0, 1.0 / 16.0]);
        // d kappa / dK = 1 / (2 * 2 * 16 * sqrt(256)) at K = 512
        let want = 10.0 / (2.0 * 2.0 * 16.0 * 16.0);
        assert!((r.kappa_stderr(2)[0] - want).abs() < 1e-15);
    }

    #[test]
    fn smoothing_examples() {
        let c = curve_of(vec![1.0, 2.0, 3.0, 4.0]);
        let s = smooth(&c, &Smoothing::Fixed(3)).unwrap();
        assert_eq!(s.means(1), &[1.5, 2.0, 3.0, 3.5]);
        assert_eq!(smooth(&c, &Smoothing::Fixed(1)).unwrap(), c);
        let flat = curve_of(vec![2.5; 30]);
        assert_eq!(smooth(&flat, &Smoothing::Fixed(7)).unwrap().means(1), flat.means(1));
        assert_eq!(smooth(&flat, &Smoothing::default()).unwrap().means(1), flat.means(1));
        assert!(smooth(&c, &Smoothing::Fixed(2)).is_err());
        assert!(smooth(&c, &Smoothing::Fixed(5)).is_err());
    }

    #[test]
    fn adaptive_window_schedule() {
        let s = Smoothing::default();
        assert_eq!(s.window_at(1), 1);
        assert_eq!(s.window_at(9), 1);
        assert_eq!(s.window_at(10), 3);
        assert_eq!(s.window_at(55), 11);
        assert_eq!(s.window_at(499), 99);
        assert_eq!(s.window_at(5000), 101);
        assert_eq!(s.range(20, 100), (18, 22));
        assert_eq!(s.range(500, 520), (450, 520));
    }

    #[test]
    fn smoothing_parse() {
        assert_eq!("auto".parse::<Smoothing>().unwrap(), Smoothing::Adaptive { cap: 101 });
        assert_eq!("auto:51".parse::<Smoothing>().unwrap(), Smoothing::Adaptive { cap: 51 });
        assert_eq!("7".parse::<Smoothing>().unwrap(), Smoothing::Fixed(7));
        assert!("4".parse::<Smoothing>().is_err());
        assert!("auto:10".parse::<Smoothing>().is_err());
        assert!("wide".parse::<Smoothing>().is_err());
    }

    #[test]
    fn smoothed_accumulation_matches_smoothed_mean() {
        let sm = Smoothing::Fixed(5);
        let mut raw = MomentAccumulator::new(12, &[1, 3]).unwrap();
        let mut pre = MomentAccumulator::new(12, &[1, 3]).unwrap();
        for r in 0..6 {
            let v: Vec<f64> = (0..12).map(|t| ((r * 13 + t * 5) % 7) as f64).collect();
            raw.accumulate(&traces(&v)).unwrap();
            pre.accumulate_smoothed(&traces(&v), &sm).unwrap();
        }
        let a = smooth(&raw.finalize().unwrap(), &sm).unwrap();
        let b = pre.finalize().unwrap();
        for m in [1, 3] {
            for t in 1..=12 {
                assert!((a.mean(t, m) - b.mean(t, m)).abs() <= 1e-12 * a.mean(t, m).max(1.0));
                // window-averaged stderr bounds the exact one
                assert!(b.stderr(t, m) <= a.stderr(t, m) * (1.0 + 1e-12) + 1e-12);
            }
        }
    }

    proptest! {
        #[test]
        fn merge_equals_sequential(
            data in prop::collection::vec(prop::collection::vec(0.0f64..50.0, 6), 2..20),
            split in 0usize..20,
        ) {
            let split = split.min(data.len());
            let mut seq = MomentAccumulator::new(6, &[1, 2, 3]).unwrap();
            for row in &data {
                seq.accumulate(&traces(row)).unwrap();
            }
            let mut a = MomentAccumulator::new(6, &[1, 2, 3]).unwrap();
            let mut b = MomentAccumulator::new(6, &[1, 2, 3]).unwrap();
            for row in &data[..split] {
                a.accumulate(&traces(row)).unwrap();
            }
            for row in data[split..].iter().rev() {
                b.accumulate(&traces(row)).unwrap();
            }
            let mut ab = a.clone();
            ab.merge(&b).unwrap();
            let mut ba = b.clone();
            ba.merge(&a).unwrap();
            prop_assert_eq!(&ab, &seq);
            prop_assert_eq!(&ba, &seq);
            let (c1, c2) = (ab.finalize().unwrap(), seq.finalize().unwrap());
            prop_assert!(c1.mean.iter().zip(&c2.mean).all(|(x, y)| x.to_bits() == y.to_bits()));
            prop_assert!(c1.stderr.iter().zip(&c2.stderr).all(|(x, y)| x.to_bits() == y.to_bits()));
            prop_assert!(c1.mean.iter().all(|&x| x >= 0.0));
        }

        #[test]
        fn smoothing_is_a_local_average(
            series in prop::collection::vec(-10.0f64..10.0, 1..120),
            half in 0usize..8,
            cap in 0usize..12,
        ) {
            for sm in [Smoothing::Fixed(2 * half + 1), Smoothing::Adaptive { cap: 2 * cap + 1 }] {
                let out = sm.apply(&series);
                prop_assert_eq!(out.len(), series.len());
                for (i, &y) in out.iter().enumerate() {
                    let (lo, hi) = sm.range(i + 1, series.len());
                    let w = &series[lo - 1..hi];
                    let min = w.iter().cloned().fold(f64::INFINITY, f64::min);
                    let max = w.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                    prop_assert!(y >= min - 1e-12 && y <= max + 1e-12);
                }
            }
            let c = vec![3.25; series.len()];
            prop_assert!(Smoothing::Fixed(2 * half + 1).apply(&c).iter().all(|&y| (y - 3.25).abs() < 1e-12));
        }
    }
}
