//! Evaluation of one grand-canonical state point.
//!
//! Everything is computed under an exponential tilt `e^{βαN}`, with `α`
//! chosen so that the independent-mode measure at `α` carries the same mean
//! particle number as the global factor `G(N)e^{-βαN}` prefers. Then the
//! per-mode weights, the product polynomial and the global factor all peak
//! near the same `N`, and scaled arithmetic loses nothing where it matters.
//!
//! Modes close to or below `α` ("low" modes) are multiplied out exactly in
//! coefficient space. Well-gapped modes ("high" modes) are handled through
//! their log-series (see `logseries`), which costs one FFT regardless of how
//! many there are. Moments of low modes use leave-one-out products built from
//! cached shell powers; moments of high modes use shifted correlations of the
//! full product with the global factor.

use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use super::closed::FreeClosedForm;
use super::logseries::{log_series, spectrum};
use super::scaled::{convolve, shell_power, tail_start, RestrictedPartition};
use super::{
    Couplings, EngineChoice, EnsembleMoments, ModeLevel, ModelParams, MomentRequest, Occupation, TruncationOptions,
};
use crate::error::{Error, Result};

const MAX_SERIES_ORDER: usize = 20_000;
const ALIAS_TOL: f64 = 1e-20;
const TILT_ITERATIONS: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EngineKind {
    ClosedForm,
    Direct,
    Hybrid,
}

/// A fully evaluated state point; moments are computed on request.
pub struct Ensemble {
    beta: f64,
    volume: f64,
    levels: Vec<ModeLevel>,
    inner: Inner,
}

impl std::fmt::Debug for Ensemble {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Ensemble")
            .field("engine", &self.engine())
            .field("levels", &self.levels.len())
            .field("log_z", &self.log_z())
            .field("n_max", &self.n_max())
            .finish()
    }
}

enum Inner {
    Closed(FreeClosedForm),
    Transfer(Box<Transfer>),
}

impl Ensemble {
    pub fn build(levels: &[ModeLevel], params: &ModelParams, volume: f64, options: &TruncationOptions) -> Result<Self> {
        params.validate()?;
        Self::build_with_couplings(levels, params.beta, params.mu, params.couplings(), volume, options)
    }

    pub fn build_with_couplings(
        levels: &[ModeLevel],
        beta: f64,
        mu: f64,
        couplings: Couplings,
        volume: f64,
        options: &TruncationOptions,
    ) -> Result<Self> {
        if !(volume > 0.0 && volume.is_finite()) {
            return Err(Error::Domain(format!("volume must be positive, got {volume}")));
        }
        if !(beta > 0.0 && beta.is_finite() && mu.is_finite()) {
            return Err(Error::Domain(format!("need beta > 0 and finite mu, got {beta}, {mu}")));
        }
        if !(couplings.mode >= 0.0 && couplings.total >= 0.0) {
            return Err(Error::Domain("couplings must be nonnegative".into()));
        }
        if levels.is_empty() || levels.iter().any(|l| l.degeneracy == 0 || !(l.energy >= 0.0)) {
            return Err(Error::InvalidRequest("levels need degeneracy >= 1 and energy >= 0".into()));
        }
        let free_like = couplings.mode == 0.0 && couplings.total == 0.0;
        let uncapped = levels.iter().all(|l| l.cap.is_none());
        let inner = if free_like && uncapped && options.engine == EngineChoice::Auto {
            Inner::Closed(FreeClosedForm::new(levels, beta, mu)?)
        } else {
            if free_like && levels.iter().any(|l| l.cap.is_none() && beta * (l.energy - mu) <= 0.0) {
                return Err(Error::Domain(format!("free gas needs mu below every uncapped mode energy (mu = {mu})")));
            }
            Inner::Transfer(Box::new(Transfer::build(levels, beta, mu, couplings, volume, options)?))
        };
        Ok(Self { beta, volume, levels: levels.to_vec(), inner })
    }

    pub fn levels(&self) -> &[ModeLevel] {
        &self.levels
    }

    pub fn volume(&self) -> f64 {
        self.volume
    }

    pub fn engine(&self) -> EngineKind {
        match &self.inner {
            Inner::Closed(_) => EngineKind::ClosedForm,
            Inner::Transfer(t) if t.high.is_empty() => EngineKind::Direct,
            Inner::Transfer(_) => EngineKind::Hybrid,
        }
    }

    pub fn log_z(&self) -> f64 {
        match &self.inner {
            Inner::Closed(c) => c.log_z,
            Inner::Transfer(t) => t.log_z,
        }
    }

    /// `(βV)⁻¹ ln Z`.
    pub fn pressure(&self) -> f64 {
        self.log_z() / (self.beta * self.volume)
    }

    pub fn mean_n(&self) -> f64 {
        match &self.inner {
            Inner::Closed(c) => c.mean_n,
            Inner::Transfer(t) => t.number_moment(1),
        }
    }

    pub fn second_moment_n(&self) -> f64 {
        match &self.inner {
            Inner::Closed(c) => c.var_n + c.mean_n * c.mean_n,
            Inner::Transfer(t) => t.number_moment(2),
        }
    }

    pub fn var_n(&self) -> f64 {
        match &self.inner {
            Inner::Closed(c) => c.var_n,
            Inner::Transfer(t) => {
                // Centered sum avoids cancellation in ⟨N²⟩ - ⟨N⟩².
                let mean = t.number_moment(1);
                t.z.iter().enumerate().map(|(n, z)| z * (n as f64 - mean).powi(2)).sum::<f64>() / t.z_total
            }
        }
    }

    pub fn tail_mass(&self) -> f64 {
        match &self.inner {
            Inner::Closed(_) => 0.0,
            Inner::Transfer(t) => t.tail_mass,
        }
    }

    pub fn n_max(&self) -> usize {
        match &self.inner {
            Inner::Closed(_) => usize::MAX,
            Inner::Transfer(t) => t.n_max,
        }
    }

    /// True when every mode carries an explicit cap and the sum over `N` is
    /// complete, so nothing was truncated.
    pub fn exact(&self) -> bool {
        match &self.inner {
            Inner::Closed(_) => true,
            Inner::Transfer(t) => t.exact,
        }
    }

    /// Largest per-mode occupation cap in use.
    pub fn max_cap(&self) -> usize {
        match &self.inner {
            Inner::Closed(_) => usize::MAX,
            Inner::Transfer(t) => t.caps.iter().copied().max().unwrap_or(0),
        }
    }

    /// The tilt `α` (the free-gas chemical potential for the closed form).
    pub fn tilt(&self) -> Option<f64> {
        match &self.inner {
            Inner::Closed(_) => None,
            Inner::Transfer(t) => Some(t.alpha),
        }
    }

    fn check_level(&self, level: usize) -> Result<()> {
        if level >= self.levels.len() {
            return Err(Error::InvalidRequest(format!("level {level} does not exist (have {})", self.levels.len())));
        }
        Ok(())
    }

    /// `⟨N_k⟩` and `⟨N_k²⟩` for one mode of the level.
    pub fn occupation(&self, level: usize) -> Result<Occupation> {
        self.check_level(level)?;
        match &self.inner {
            Inner::Closed(c) => Ok(c.occupation(level)),
            Inner::Transfer(t) => t.occupation(level),
        }
    }

    pub fn occupations(&self) -> Result<Vec<Occupation>> {
        (0..self.levels.len()).map(|l| self.occupation(l)).collect()
    }

    /// `⟨N_j N_k⟩` for two different modes, one from level `j` and one from
    /// level `k` (which may coincide when the level holds several modes).
    pub fn pair(&self, j: usize, k: usize) -> Result<f64> {
        self.check_level(j)?;
        self.check_level(k)?;
        if j == k && self.levels[j].degeneracy < 2 {
            return Err(Error::InvalidRequest(format!(
                "level {j} holds a single mode; use the occupation second moment instead"
            )));
        }
        match &self.inner {
            Inner::Closed(c) => Ok(c.pair(j, k)),
            Inner::Transfer(t) => t.pair(j, k),
        }
    }

    /// `⟨N N_j⟩` for one mode of level `j`.
    pub fn with_total(&self, j: usize) -> Result<f64> {
        self.check_level(j)?;
        match &self.inner {
            Inner::Closed(c) => Ok(c.with_total(j)),
            Inner::Transfer(t) => t.with_total(j),
        }
    }

    pub fn moments(&self, request: &MomentRequest) -> Result<EnsembleMoments> {
        let occupations = self.occupations()?;
        let pairs = request.pairs.iter().map(|&(j, k)| Ok(((j, k), self.pair(j, k)?))).collect::<Result<Vec<_>>>()?;
        let with_total =
            request.with_total.iter().map(|&j| Ok((j, self.with_total(j)?))).collect::<Result<Vec<_>>>()?;
        Ok(EnsembleMoments {
            log_z: self.log_z(),
            pressure: self.pressure(),
            mean_n: self.mean_n(),
            var_n: self.var_n(),
            occupations,
            pairs,
            with_total,
            tail_mass: self.tail_mass(),
            n_max: self.n_max(),
            engine: self.engine(),
        })
    }
}

/// Untilted `ln a(n)`.
fn log_weight(energy: f64, lm: f64, beta: f64, volume: f64, n: usize) -> f64 {
    let nf = n as f64;
    -beta * (energy * nf + lm * nf * nf / (2.0 * volume))
}

/// Mean and variance of one mode under the tilted single-mode measure;
/// infinite when the weights do not decay.
fn mode_stats(level: &ModeLevel, lm: f64, beta: f64, volume: f64, alpha: f64) -> (f64, f64) {
    let gap = beta * (level.energy - alpha);
    if level.cap.is_none() && lm == 0.0 {
        if gap <= 0.0 {
            return (f64::INFINITY, f64::INFINITY);
        }
        let n = 1.0 / gap.exp_m1();
        return (n, n * (n + 1.0));
    }
    let peak = if lm > 0.0 { ((alpha - level.energy) * volume / lm - 0.5).max(0.0) } else { 0.0 };
    let tilted = |n: usize| log_weight(level.energy, lm, beta, volume, n) + beta * alpha * n as f64;
    let reference = tilted(peak.round() as usize).max(tilted(0));
    let (mut s0, mut s1, mut s2) = (0.0, 0.0, 0.0);
    let mut n = 0usize;
    loop {
        if let Some(cap) = level.cap {
            if n > cap {
                break;
            }
        }
        let w = (tilted(n) - reference).exp();
        let nf = n as f64;
        s0 += w;
        s1 += nf * w;
        s2 += nf * nf * w;
        if nf > peak && w < 1e-25 * s0 {
            break;
        }
        n += 1;
    }
    let mean = s1 / s0;
    (mean, (s2 / s0 - mean * mean).max(0.0))
}

/// Solves `α + 2λ_c N(α)/V = μ` for the independent-mode particle number.
fn solve_tilt(levels: &[ModeLevel], beta: f64, mu: f64, c: Couplings, volume: f64) -> Result<f64> {
    if c.total == 0.0 {
        return Ok(mu);
    }
    let number = |alpha: f64| -> f64 {
        levels.iter().map(|l| l.degeneracy as f64 * mode_stats(l, c.mode, beta, volume, alpha).0).sum()
    };
    let f = |alpha: f64| alpha + 2.0 * c.total * number(alpha) / volume - mu;
    let hi = mu;
    let mut width = 1.0 + mu.abs();
    let mut lo = mu - width;
    let mut grow = 0;
    while f(lo) >= 0.0 {
        width *= 2.0;
        lo = mu - width;
        grow += 1;
        if grow > 200 {
            return Err(Error::Bracket("could not bracket the ensemble tilt".into()));
        }
    }
    let mut hi = hi;
    for _ in 0..TILT_ITERATIONS {
        let mid = 0.5 * (lo + hi);
        if f(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-10 * (1.0 + mid.abs()) {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

struct LowMode {
    degeneracy: u64,
    single: RestrictedPartition,
    minus_one: RestrictedPartition,
    full: RestrictedPartition,
}

struct HighMode {
    kappa: Vec<f64>,
}

#[derive(Clone, Copy)]
enum Slot {
    Low(usize),
    High(usize),
}

struct Transfer {
    alpha: f64,
    n_max: usize,
    caps: Vec<usize>,
    slots: Vec<Slot>,
    low: Vec<LowMode>,
    high: Vec<HighMode>,
    product: RestrictedPartition,
    /// High-mode coefficients normalised to unit total mass.
    h: Vec<f64>,
    /// Global factor `G(N) e^{-βαN}`, normalised to a unit maximum.
    g: Vec<f64>,
    /// Low ⊗ high product coefficients (mantissas of `product` times `h`).
    c: Vec<f64>,
    z: Vec<f64>,
    z_total: f64,
    log_z: f64,
    tail_mass: f64,
    exact: bool,
    others: OnceLock<Vec<RestrictedPartition>>,
    env: OnceLock<[Vec<f64>; 2]>,
    shifted: OnceLock<[Vec<f64>; 2]>,
    /// Per low level: the first-moment leave-one-out polynomial and its
    /// shifted correlation with the high modes.
    first: Vec<OnceLock<RestrictedPartition>>,
    first_shifted: Vec<OnceLock<Vec<f64>>>,
}

impl Transfer {
    fn build(
        levels: &[ModeLevel],
        beta: f64,
        mu: f64,
        couplings: Couplings,
        volume: f64,
        options: &TruncationOptions,
    ) -> Result<Self> {
        let alpha = solve_tilt(levels, beta, mu, couplings, volume)?;
        let exact_total: Option<usize> =
            levels.iter().map(|l| l.cap.map(|c| c.saturating_mul(l.degeneracy as usize))).sum();
        if let Some(total) = exact_total {
            if total <= options.max_particles {
                return Self::build_at(levels, beta, mu, couplings, volume, options, alpha, total, true);
            }
        }
        let (mut mean, mut var) = (0.0, 0.0);
        for l in levels {
            let (m, v) = mode_stats(l, couplings.mode, beta, volume, alpha);
            mean += l.degeneracy as f64 * m;
            var += l.degeneracy as f64 * v;
        }
        if !(mean.is_finite() && var.is_finite()) {
            return Err(Error::Truncation("independent-mode estimate of N diverges".into()));
        }
        let mut sigma = var.sqrt();
        if couplings.total > 0.0 {
            sigma = sigma.min((volume / (2.0 * beta * couplings.total)).sqrt());
        }
        let mut n_max = ((mean + 12.0 * sigma + 30.0) / 0.9).ceil() as usize;
        loop {
            if n_max > options.max_particles {
                return Err(Error::Resource(format!(
                    "N_max would exceed the cap of {} particles",
                    options.max_particles
                )));
            }
            let t = Self::build_at(levels, beta, mu, couplings, volume, options, alpha, n_max, false)?;
            if t.tail_mass < options.tol {
                return Ok(t);
            }
            log::debug!("tail mass {:e} at N_max = {n_max}; doubling", t.tail_mass);
            n_max *= 2;
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn build_at(
        levels: &[ModeLevel],
        beta: f64,
        mu: f64,
        couplings: Couplings,
        volume: f64,
        options: &TruncationOptions,
        alpha: f64,
        n_max: usize,
        exact: bool,
    ) -> Result<Self> {
        let tilt = beta * alpha;
        let lm = couplings.mode;
        let cut = (options.weight_floor * 1e-2).ln();
        let mut caps = Vec::with_capacity(levels.len());
        let mut slots = Vec::with_capacity(levels.len());
        let mut low = Vec::new();
        let mut high = Vec::new();
        let mut combined = vec![0.0];
        let mut rate = f64::INFINITY;
        for level in levels {
            // Untilted log weights up to an adequate cap.
            let mut logw = Vec::new();
            let mut best = f64::NEG_INFINITY;
            let limit = level.cap.unwrap_or(n_max).min(n_max);
            for n in 0..=limit {
                let w = log_weight(level.energy, lm, beta, volume, n);
                let t = w + tilt * n as f64;
                logw.push(w);
                best = best.max(t);
                let falling = beta * (level.energy - alpha) + beta * lm * (2 * n + 1) as f64 / (2.0 * volume) > 0.0;
                if level.cap.is_none() && falling && t - best < cut {
                    break;
                }
            }
            let cap = logw.len() - 1;
            caps.push(cap);
            let gap = beta * (level.energy - alpha);
            let is_high = options.engine != EngineChoice::Direct
                && level.cap.is_none()
                && gap >= options.split_gap
                && cap < n_max;
            if is_high {
                let b: Vec<f64> = logw.iter().enumerate().map(|(n, w)| (w + tilt * n as f64).exp()).collect();
                let kappa = log_series(&b, MAX_SERIES_ORDER)?;
                if kappa.len() > combined.len() {
                    combined.resize(kappa.len(), 0.0);
                }
                let g = level.degeneracy as f64;
                for (c, k) in combined.iter_mut().zip(&kappa) {
                    *c += g * k;
                }
                rate = rate.min(gap);
                slots.push(Slot::High(high.len()));
                high.push(HighMode { kappa });
            } else {
                let single = RestrictedPartition::from_log_weights(&logw, tilt, n_max)?;
                let minus_one = shell_power(&single, level.degeneracy - 1, n_max)?;
                let full = convolve(&minus_one, &single, n_max)?;
                slots.push(Slot::Low(low.len()));
                low.push(LowMode { degeneracy: level.degeneracy, single, minus_one, full });
            }
        }
        let low_count = low.len();
        let mut product = RestrictedPartition::identity(tilt);
        for m in &low {
            product = convolve(&product, &m.full, n_max)?;
        }
        let spec = spectrum(&combined, n_max, rate, ALIAS_TOL)?;
        log::trace!("transform length {} with alias bound {:e}", spec.fft_len, spec.alias_bound);
        let h = spec.coeffs;
        let c = truncated_product(product.mantissas(), &h, n_max);
        let log_g: Vec<f64> = (0..=n_max)
            .map(|n| {
                let nf = n as f64;
                -beta * couplings.total * nf * nf / volume + beta * (mu - alpha) * nf
            })
            .collect();
        let g_peak = log_g.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let g: Vec<f64> = log_g.iter().map(|v| (v - g_peak).exp()).collect();
        let z: Vec<f64> = c.iter().zip(&g).map(|(a, b)| a * b).collect();
        let z_total: f64 = z.iter().sum();
        if !(z_total > 0.0 && z_total.is_finite()) {
            return Err(Error::Scale(format!("grand sum lost its scale (total {z_total})")));
        }
        let mass: f64 = c.iter().sum();
        let conditioning = mass / z_total;
        if conditioning > 1e8 {
            log::warn!("poorly conditioned grand sum (ratio {conditioning:e}); tilt may be off");
        }
        // For exact (all-capped) systems this measures how hard the caps bite
        // rather than a truncation error.
        let tail_mass = z[tail_start(n_max).min(z.len())..].iter().sum::<f64>() / z_total;
        let log_z = product.log_scale() + spec.log_mass + g_peak + z_total.ln();
        Ok(Self {
            alpha,
            n_max,
            caps,
            slots,
            low,
            high,
            product,
            h,
            g,
            c,
            z,
            z_total,
            log_z,
            tail_mass,
            exact,
            others: OnceLock::new(),
            env: OnceLock::new(),
            shifted: OnceLock::new(),
            first: (0..low_count).map(|_| OnceLock::new()).collect(),
            first_shifted: (0..low_count).map(|_| OnceLock::new()).collect(),
        })
    }

    fn number_moment(&self, p: i32) -> f64 {
        self.z.iter().enumerate().map(|(n, z)| z * (n as f64).powi(p)).sum::<f64>() / self.z_total
    }

    /// Product of every low level's full power except one, per low level.
    fn others(&self) -> &[RestrictedPartition] {
        self.others.get_or_init(|| {
            let q = self.low.len();
            let tilt = self.product.tilt();
            let unit = RestrictedPartition::identity(tilt);
            let mut prefix = vec![unit.clone()];
            for m in &self.low {
                let next = convolve(prefix.last().unwrap(), &m.full, self.n_max).expect("prefix product");
                prefix.push(next);
            }
            let mut suffix = vec![unit; q + 1];
            for i in (0..q).rev() {
                suffix[i] = convolve(&suffix[i + 1], &self.low[i].full, self.n_max).expect("suffix product");
            }
            (0..q).map(|i| convolve(&prefix[i], &suffix[i + 1], self.n_max).expect("leave-one-out product")).collect()
        })
    }

    /// `E_w(K) = Σ_M h(M) w(K+M) g(K+M)` for `w(N) = 1` and `w(N) = N`.
    fn env(&self) -> &[Vec<f64>; 2] {
        self.env.get_or_init(|| {
            let n = self.n_max + 1;
            let mut plain = vec![0.0; n];
            let mut weighted = vec![0.0; n];
            for k in 0..n {
                let (mut a, mut b) = (0.0, 0.0);
                for (m, &hm) in self.h[..n - k].iter().enumerate() {
                    let gn = self.g[k + m] * hm;
                    a += gn;
                    b += gn * (k + m) as f64;
                }
                plain[k] = a;
                weighted[k] = b;
            }
            [plain, weighted]
        })
    }

    fn max_series(&self) -> usize {
        self.high.iter().map(|m| m.kappa.len()).max().unwrap_or(1)
    }

    /// `W_w(n) = Σ_N w(N) g(N) c(N-n)` for `w = 1` and `w = N`.
    fn shifted(&self) -> &[Vec<f64>; 2] {
        self.shifted.get_or_init(|| {
            let upto = (2 * self.max_series()).min(self.n_max + 1);
            let mut plain = vec![0.0; upto];
            let mut weighted = vec![0.0; upto];
            for s in 0..upto {
                let (a, b) = shifted_sum(&self.c, &self.g, s);
                plain[s] = a;
                weighted[s] = b;
            }
            [plain, weighted]
        })
    }

    /// Leave-one-out polynomial of a low mode with its weight multiplied by `n^p`.
    fn low_modified(&self, low: usize, p: i32) -> Result<RestrictedPartition> {
        let m = &self.low[low];
        let base = convolve(&self.others()[low], &m.minus_one, self.n_max)?;
        convolve(&base, &moment_weights(&m.single, p)?, self.n_max)
    }

    fn first_moment(&self, low: usize) -> Result<&RestrictedPartition> {
        if let Some(p) = self.first[low].get() {
            return Ok(p);
        }
        let poly = self.low_modified(low, 1)?;
        Ok(self.first[low].get_or_init(|| poly))
    }

    /// `W_j(n) = Σ_N g(N) c_j(N-n)` where `c_j` is the first-moment polynomial
    /// of low level `j` times the high-mode coefficients.
    fn first_shifted(&self, low: usize) -> Result<&[f64]> {
        if let Some(w) = self.first_shifted[low].get() {
            return Ok(w);
        }
        let poly = self.first_moment(low)?;
        let cj = truncated_product(poly.mantissas(), &self.h, self.n_max);
        let upto = self.max_series().min(self.n_max + 1);
        let w: Vec<f64> = (0..upto).map(|n| shifted_sum(&cj, &self.g, n).0).collect();
        Ok(self.first_shifted[low].get_or_init(|| w))
    }

    fn scale_from(&self, poly: &RestrictedPartition) -> f64 {
        (poly.log_scale() - self.product.log_scale()).exp()
    }

    fn low_expectation(&self, poly: &RestrictedPartition, weighted: bool) -> f64 {
        let env = &self.env()[weighted as usize];
        let s: f64 = poly.mantissas().iter().zip(env).map(|(a, b)| a * b).sum();
        s * self.scale_from(poly) / self.z_total
    }

    fn occupation(&self, level: usize) -> Result<Occupation> {
        match self.slots[level] {
            Slot::Low(i) => {
                if self.low[i].single.n_max() == 0 {
                    return Ok(Occupation { mean: 0.0, second: 0.0 });
                }
                let first = self.first_moment(i)?.clone();
                let second = self.low_modified(i, 2)?;
                Ok(Occupation {
                    mean: self.low_expectation(&first, false),
                    second: self.low_expectation(&second, false),
                })
            }
            Slot::High(i) => {
                let w = &self.shifted()[0];
                let kappa = &self.high[i].kappa;
                let at = |n: usize| w.get(n).copied().unwrap_or(0.0);
                let mut mean = 0.0;
                let mut second = 0.0;
                for (n, &k) in kappa.iter().enumerate().skip(1) {
                    let nf = n as f64;
                    mean += nf * k * at(n);
                    second += nf * nf * k * at(n);
                }
                second += double_sum(kappa, kappa, w);
                Ok(Occupation { mean: mean / self.z_total, second: second / self.z_total })
            }
        }
    }

    fn pair(&self, j: usize, k: usize) -> Result<f64> {
        match (self.slots[j], self.slots[k]) {
            (Slot::High(a), Slot::High(b)) => {
                let w = &self.shifted()[0];
                Ok(double_sum(&self.high[a].kappa, &self.high[b].kappa, w) / self.z_total)
            }
            (Slot::Low(a), Slot::Low(b)) => {
                let poly = if a == b {
                    let m = &self.low[a];
                    let g = m.degeneracy;
                    let rest = shell_power(&m.single, g - 2, self.n_max)?;
                    let weighted = moment_weights(&m.single, 1)?;
                    let base = convolve(&self.others()[a], &rest, self.n_max)?;
                    convolve(&convolve(&base, &weighted, self.n_max)?, &weighted, self.n_max)?
                } else {
                    let mut poly = RestrictedPartition::identity(self.product.tilt());
                    for (i, m) in self.low.iter().enumerate() {
                        let factor = if i == a || i == b {
                            convolve(&m.minus_one, &moment_weights(&m.single, 1)?, self.n_max)?
                        } else {
                            m.full.clone()
                        };
                        poly = convolve(&poly, &factor, self.n_max)?;
                    }
                    poly
                };
                Ok(self.low_expectation(&poly, false))
            }
            (Slot::Low(a), Slot::High(b)) | (Slot::High(b), Slot::Low(a)) => {
                let w = self.first_shifted(a)?;
                let total: f64 =
                    self.high[b].kappa.iter().zip(w).enumerate().skip(1).map(|(n, (kv, wv))| n as f64 * kv * wv).sum();
                Ok(total * self.scale_from(self.first_moment(a)?) / self.z_total)
            }
        }
    }

    fn with_total(&self, j: usize) -> Result<f64> {
        match self.slots[j] {
            Slot::Low(a) => {
                let poly = self.first_moment(a)?;
                Ok(self.low_expectation(poly, true))
            }
            Slot::High(b) => {
                let w = &self.shifted()[1];
                let total: f64 = self.high[b]
                    .kappa
                    .iter()
                    .enumerate()
                    .skip(1)
                    .map(|(n, &k)| n as f64 * k * w.get(n).copied().unwrap_or(0.0))
                    .sum();
                Ok(total / self.z_total)
            }
        }
    }
}

/// `single` with coefficient `n` multiplied by `n^p`.
fn moment_weights(single: &RestrictedPartition, p: i32) -> Result<RestrictedPartition> {
    let coeffs: Vec<f64> = single.mantissas().iter().enumerate().map(|(n, c)| c * (n as f64).powi(p)).collect();
    RestrictedPartition::from_coefficients(coeffs, single.log_scale(), single.tilt())
}

/// `Σ_{n,n'≥1} n κ_n n' λ_{n'} W(n+n')`.
fn double_sum(a: &[f64], b: &[f64], w: &[f64]) -> f64 {
    let mut total = 0.0;
    for (n, &ka) in a.iter().enumerate().skip(1) {
        if n >= w.len() {
            break;
        }
        let mut inner = 0.0;
        for (m, &kb) in b.iter().enumerate().skip(1) {
            let idx = n + m;
            if idx >= w.len() {
                break;
            }
            inner += m as f64 * kb * w[idx];
        }
        total += n as f64 * ka * inner;
    }
    total
}

/// `(Σ_N g(N) c(N-s), Σ_N N g(N) c(N-s))`.
fn shifted_sum(c: &[f64], g: &[f64], s: usize) -> (f64, f64) {
    let (mut a, mut b) = (0.0, 0.0);
    for (i, &cv) in c.iter().enumerate() {
        let n = i + s;
        if n >= g.len() {
            break;
        }
        let v = cv * g[n];
        a += v;
        b += v * n as f64;
    }
    (a, b)
}

/// Coefficients `0..=n_max` of the product of two coefficient vectors.
fn truncated_product(a: &[f64], b: &[f64], n_max: usize) -> Vec<f64> {
    let mut out = vec![0.0; n_max + 1];
    for (i, &x) in a.iter().enumerate().take(n_max + 1) {
        if x == 0.0 {
            continue;
        }
        let span = (n_max + 1 - i).min(b.len());
        for (o, &y) in out[i..i + span].iter_mut().zip(&b[..span]) {
            *o += x * y;
        }
    }
    out
}
