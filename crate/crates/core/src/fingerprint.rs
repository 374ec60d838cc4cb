//! Fingerprint post-processing and decisions: RX-response cancellation,
//! Fisher LDA, normalized feature distances, minimum-distance
//! classification, threshold identification and ROC/EER.
//!
//! Ties are always broken toward the lowest index (device order in the
//! database, or the smaller threshold on a ROC sweep).

use crate::error::{invalid, Error, Result};
use crate::receiver::{psd_fingerprint, rx_capture, FingerprintVector, Normalization, ReceiverProfile};
use crate::signal::ComplexSignal;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use nalgebra::{DMatrix, DVector, SymmetricEigen};

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(deny_unknown_fields))]
pub struct CaptureMeta {
    pub distance_m: f64,
    pub channel: String,
    pub sample_rate_hz: f64,
    pub n_fft: usize,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(deny_unknown_fields))]
pub struct FingerprintRecord {
    pub device_id: String,
    pub vector: FingerprintVector,
    pub meta: CaptureMeta,
}

/// Per-bin power ratio between the nonlinear and the linear receiver for a
/// known reference signal. Dividing a captured PSD by it undoes the RX
/// front end in the linear-dominant regime.
#[derive(Debug, Clone, PartialEq)]
pub struct RxResponse {
    pub ratio: Vec<f64>,
}

impl RxResponse {
    pub fn identity(n: usize) -> Self {
        Self { ratio: vec![1.0; n] }
    }

    /// Pushes `reference` (TX output envelope) through `rx` and through the
    /// same receiver with the nonlinearity replaced by its linear term.
    pub fn calibrate(
        reference: &ComplexSignal,
        rx: &ReceiverProfile,
        capture_len: usize,
        n_fft: usize,
    ) -> Result<Self> {
        if rx.pa_rx.is_linear() {
            return Ok(Self::identity(n_fft));
        }
        let nonlinear = rx_capture(reference, rx).map_err(|e| match e {
            Error::Divergence { ratio } => Error::SingularResponse {
                detail: format!("higher-order RX output is {ratio:.3}x the linear term"),
            },
            other => other,
        })?;
        let mut linear_rx = rx.clone();
        linear_rx.pa_rx = crate::rfchain::PaPowerSeries::new(vec![rx.pa_rx.coefficients()[0]])?;
        let linear = rx_capture(reference, &linear_rx)?;
        let take = |c: &crate::receiver::Capture| -> Result<FingerprintVector> {
            let s = c.signal.samples();
            if s.len() < capture_len {
                return Err(invalid("capture length", format!("{capture_len} > {}", s.len())));
            }
            psd_fingerprint(&s[..capture_len], c.signal.sample_rate(), n_fft)
        };
        let a = take(&nonlinear)?;
        let b = take(&linear)?;
        let ratio: Vec<f64> = a.psd.iter().zip(&b.psd).map(|(x, y)| x / y).collect();
        if ratio.iter().any(|r| !r.is_finite() || *r <= 0.0) {
            return Err(Error::SingularResponse {
                detail: "RX response has zero or non-finite bins".to_string(),
            });
        }
        Ok(Self { ratio })
    }
}

pub fn cancel_rx(vector: &FingerprintVector, response: &RxResponse) -> Result<FingerprintVector> {
    if response.ratio.len() != vector.len() {
        return Err(Error::DimensionMismatch {
            expected: vector.len(),
            found: response.ratio.len(),
        });
    }
    let psd = vector.psd.iter().zip(&response.ratio).map(|(v, r)| v / r).collect();
    let mut out = vector.clone();
    out.psd = psd;
    Ok(out)
}

/// Scales to unit total power (PSD integrated over the band).
pub fn normalize_power(s: &FingerprintVector) -> Result<FingerprintVector> {
    let p = s.total_power();
    if !(p > 0.0) || !p.is_finite() {
        return Err(Error::ZeroVector);
    }
    let mut out = s.clone();
    for v in &mut out.psd {
        *v /= p;
    }
    out.normalization = Normalization::UnitPower;
    Ok(out)
}

/// Trained Fisher projection, columns ordered by discriminability.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(deny_unknown_fields))]
pub struct LdaProjection {
    /// `kappa` columns of length `dimension`.
    pub columns: Vec<Vec<f64>>,
    pub eigenvalues: Vec<f64>,
    pub shrinkage: f64,
    /// Set when the requested shrinkage was zero but the within-class
    /// scatter was singular, so a minimal amount was applied.
    pub forced_regularization: bool,
}

impl LdaProjection {
    pub fn kappa(&self) -> usize {
        self.columns.len()
    }

    pub fn dimension(&self) -> usize {
        self.columns.first().map_or(0, |c| c.len())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Projection {
    Identity,
    Lda(LdaProjection),
}

impl Projection {
    pub fn project(&self, x: &[f64]) -> Result<Vec<f64>> {
        match self {
            Projection::Identity => Ok(x.to_vec()),
            Projection::Lda(l) => {
                if l.dimension() != x.len() {
                    return Err(Error::DimensionMismatch {
                        expected: l.dimension(),
                        found: x.len(),
                    });
                }
                Ok(l.columns
                    .iter()
                    .map(|c| c.iter().zip(x).map(|(a, b)| a * b).sum())
                    .collect())
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(deny_unknown_fields))]
pub struct LdaOptions {
    pub kappa: usize,
    /// Weight `ρ` in `(1−ρ) S_w + ρ diag(S_w)`.
    pub shrinkage: f64,
}

impl Default for LdaOptions {
    fn default() -> Self {
        Self {
            kappa: 5,
            shrinkage: 0.1,
        }
    }
}

/// Fisher LDA on labelled rows. Returns at most `min(kappa, classes − 1)`
/// directions, each scaled to unit within-class variance.
///
/// With `n < d` samples the regularized within-class scatter is inverted
/// through the Woodbury identity, so the cost is `O(d n²)`.
pub fn train_lda(samples: &[&[f64]], labels: &[usize], options: &LdaOptions) -> Result<LdaProjection> {
    if samples.is_empty() || samples.len() != labels.len() {
        return Err(Error::InsufficientTraining {
            detail: format!("{} samples for {} labels", samples.len(), labels.len()),
        });
    }
    if !(0.0..=1.0).contains(&options.shrinkage) {
        return Err(invalid("shrinkage", format!("{} not in [0, 1]", options.shrinkage)));
    }
    if options.kappa == 0 {
        return Err(invalid("LDA dimension", "kappa must be at least 1"));
    }
    let d = samples[0].len();
    if let Some(bad) = samples.iter().find(|s| s.len() != d) {
        return Err(Error::DimensionMismatch {
            expected: d,
            found: bad.len(),
        });
    }
    let classes = labels.iter().max().map_or(0, |m| m + 1);
    let mut counts = vec![0usize; classes];
    for &l in labels {
        counts[l] += 1;
    }
    let present = counts.iter().filter(|&&c| c > 0).count();
    if present < 2 {
        return Err(Error::InsufficientTraining {
            detail: "need at least two classes".to_string(),
        });
    }
    let kappa = options.kappa.min(present - 1);
    if let Some((c, n)) = counts.iter().enumerate().find(|(_, &n)| n > 0 && n < kappa + 1) {
        return Err(Error::InsufficientTraining {
            detail: format!("class {c} has {n} records, need {}", kappa + 1),
        });
    }
    let n = samples.len();

    let mut means = vec![DVector::<f64>::zeros(d); classes];
    let mut grand = DVector::<f64>::zeros(d);
    for (s, &l) in samples.iter().zip(labels) {
        let v = DVector::from_column_slice(s);
        means[l] += &v;
        grand += v;
    }
    grand /= n as f64;
    for (m, &c) in means.iter_mut().zip(&counts) {
        if c > 0 {
            *m /= c as f64;
        }
    }
    // centred rows, scaled so that S_w = U Uᵀ
    let dof = (n - present).max(1) as f64;
    let mut u = DMatrix::<f64>::zeros(d, n);
    for (j, (s, &l)) in samples.iter().zip(labels).enumerate() {
        for i in 0..d {
            u[(i, j)] = (s[i] - means[l][i]) / libm::sqrt(dof);
        }
    }
    let mut diag: Vec<f64> = (0..d).map(|i| u.row(i).norm_squared()).collect();
    let max_diag = diag.iter().cloned().fold(0.0, f64::max);
    let floor = if max_diag > 0.0 { 1e-12 * max_diag } else { 1.0 };
    for v in &mut diag {
        *v = v.max(floor);
    }

    let mut rho = options.shrinkage;
    let mut forced = false;
    if rho == 0.0 && n - present < d {
        rho = 1e-6;
        forced = true;
    }
    let mut mb = DMatrix::<f64>::zeros(d, present);
    let mut col = 0;
    for (m, &c) in means.iter().zip(&counts) {
        if c == 0 {
            continue;
        }
        let diff = (m - &grand) * libm::sqrt(c as f64);
        mb.set_column(col, &diff);
        col += 1;
    }

    // Sw_reg⁻¹ M with Sw_reg = D + V Vᵀ, D = ρ diag, V = sqrt(1−ρ) U
    let sw_inv_m = if rho > 0.0 && n < d {
        let dinv: Vec<f64> = diag.iter().map(|v| 1.0 / (rho * v)).collect();
        let v = &u * libm::sqrt(1.0 - rho);
        let mut dinv_v = v.clone();
        let mut dinv_m = mb.clone();
        for i in 0..d {
            for j in 0..n {
                dinv_v[(i, j)] *= dinv[i];
            }
            for j in 0..present {
                dinv_m[(i, j)] *= dinv[i];
            }
        }
        let k = DMatrix::<f64>::identity(n, n) + v.transpose() * &dinv_v;
        let chol = k.cholesky().ok_or(Error::InsufficientTraining {
            detail: "Woodbury core is not positive definite".to_string(),
        })?;
        let inner = chol.solve(&(v.transpose() * &dinv_m));
        &dinv_m - &dinv_v * inner
    } else {
        let mut sw = &u * u.transpose() * (1.0 - rho);
        for i in 0..d {
            sw[(i, i)] += rho * diag[i];
        }
        let chol = sw.cholesky().ok_or(Error::InsufficientTraining {
            detail: "within-class scatter is singular; use a positive shrinkage".to_string(),
        })?;
        chol.solve(&mb)
    };
    let g = mb.transpose() * &sw_inv_m;
    let g = (&g + g.transpose()) * 0.5;
    let eig = SymmetricEigen::new(g);
    let mut order: Vec<usize> = (0..present).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]).then(a.cmp(&b)));
    let top = eig.eigenvalues[order[0]].max(0.0);
    let mut columns = Vec::new();
    let mut eigenvalues = Vec::new();
    for &j in order.iter().take(kappa) {
        let lam = eig.eigenvalues[j];
        if !(lam > 1e-12 * top) {
            break;
        }
        let w = &sw_inv_m * eig.eigenvectors.column(j);
        let mut w: Vec<f64> = w.iter().map(|v| v / libm::sqrt(lam)).collect();
        // sign: largest-magnitude entry positive, lowest index on ties
        let mut best = 0;
        for (i, v) in w.iter().enumerate() {
            if v.abs() > w[best].abs() {
                best = i;
            }
        }
        if w[best] < 0.0 {
            for v in &mut w {
                *v = -*v;
            }
        }
        columns.push(w);
        eigenvalues.push(lam);
    }
    if columns.is_empty() {
        return Err(Error::InsufficientTraining {
            detail: "class means coincide".to_string(),
        });
    }
    Ok(LdaProjection {
        columns,
        eigenvalues,
        shrinkage: rho,
        forced_regularization: forced,
    })
}

/// Which standard deviation normalizes a distance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum SpreadMode {
    /// Spread of the device's projected references around their mean,
    /// averaged over components. Needs at least two references.
    #[default]
    AcrossReferences,
    /// Spread of the components of a single projected reference.
    WithinVector,
}

fn population_std(x: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    libm::sqrt(x.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n)
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    libm::sqrt(a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum())
}

/// `‖Wᵀ(S − S_R)‖ / σ(Wᵀ S_R)` with the within-vector spread.
pub fn feature_distance(s: &FingerprintVector, reference: &FingerprintVector, w: &Projection) -> Result<f64> {
    if s.len() != reference.len() {
        return Err(Error::DimensionMismatch {
            expected: reference.len(),
            found: s.len(),
        });
    }
    let ps = w.project(&s.psd)?;
    let pr = w.project(&reference.psd)?;
    let sigma = population_std(&pr);
    if !(sigma > 0.0) {
        return Err(Error::DegenerateReference {
            device: "reference".to_string(),
        });
    }
    Ok(dist(&ps, &pr) / sigma)
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(deny_unknown_fields))]
pub struct DeviceEntry {
    pub id: String,
    pub references: Vec<FingerprintRecord>,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(deny_unknown_fields))]
pub struct FingerprintDatabase {
    pub devices: Vec<DeviceEntry>,
    pub lda_options: LdaOptions,
    pub spread: SpreadMode,
    #[cfg_attr(feature = "serde", serde(default))]
    pub lda: Option<LdaProjection>,
    #[cfg_attr(feature = "serde", serde(default))]
    pub threshold: Option<f64>,
}

impl FingerprintDatabase {
    /// Groups records by device in first-seen order.
    pub fn from_records(records: Vec<FingerprintRecord>, lda_options: LdaOptions, spread: SpreadMode) -> Self {
        let mut devices: Vec<DeviceEntry> = Vec::new();
        for r in records {
            match devices.iter_mut().find(|d| d.id == r.device_id) {
                Some(d) => d.references.push(r),
                None => devices.push(DeviceEntry {
                    id: r.device_id.clone(),
                    references: vec![r],
                }),
            }
        }
        Self {
            devices,
            lda_options,
            spread,
            lda: None,
            threshold: None,
        }
    }

    pub fn dimension(&self) -> Option<usize> {
        self.devices
            .first()
            .and_then(|d| d.references.first())
            .map(|r| r.vector.len())
    }

    pub fn train(&mut self) -> Result<()> {
        let mut rows: Vec<&[f64]> = Vec::new();
        let mut labels = Vec::new();
        for (i, d) in self.devices.iter().enumerate() {
            for r in &d.references {
                rows.push(&r.vector.psd);
                labels.push(i);
            }
        }
        if rows.is_empty() {
            return Err(Error::EmptyDatabase);
        }
        self.lda = Some(train_lda(&rows, &labels, &self.lda_options)?);
        Ok(())
    }

    pub fn projection(&self) -> Result<Projection> {
        self.lda.clone().map(Projection::Lda).ok_or(Error::NotTrained)
    }

    pub fn scorer(&self, projection: Projection) -> Result<Scorer> {
        Scorer::new(self, projection)
    }
}

/// References projected once so that many samples can be scored cheaply.
#[derive(Debug, Clone)]
pub struct Scorer {
    projection: Projection,
    spread: SpreadMode,
    /// Per device: projected references and their spreads.
    classes: Vec<(Vec<Vec<f64>>, Vec<f64>)>,
    dimension: usize,
}

impl Scorer {
    pub fn new(db: &FingerprintDatabase, projection: Projection) -> Result<Self> {
        if db.devices.is_empty() {
            return Err(Error::EmptyDatabase);
        }
        let dimension = db.dimension().ok_or(Error::EmptyDatabase)?;
        let mut classes = Vec::with_capacity(db.devices.len());
        for d in &db.devices {
            if d.references.is_empty() {
                return Err(Error::EmptyDatabase);
            }
            let projected: Vec<Vec<f64>> = d
                .references
                .iter()
                .map(|r| projection.project(&r.vector.psd))
                .collect::<Result<_>>()?;
            let sigmas = match db.spread {
                SpreadMode::WithinVector => projected.iter().map(|p| population_std(p)).collect(),
                SpreadMode::AcrossReferences => {
                    let m = projected.len();
                    if m < 2 {
                        return Err(Error::DegenerateReference { device: d.id.clone() });
                    }
                    let k = projected[0].len();
                    let mut mean = vec![0.0; k];
                    for p in &projected {
                        for (a, b) in mean.iter_mut().zip(p) {
                            *a += b / m as f64;
                        }
                    }
                    let var = projected
                        .iter()
                        .map(|p| p.iter().zip(&mean).map(|(a, b)| (a - b) * (a - b)).sum::<f64>())
                        .sum::<f64>()
                        / ((m - 1) * k) as f64;
                    vec![libm::sqrt(var); m]
                }
            };
            if sigmas.iter().any(|s| !(*s > 0.0)) {
                return Err(Error::DegenerateReference { device: d.id.clone() });
            }
            classes.push((projected, sigmas));
        }
        Ok(Self {
            projection,
            spread: db.spread,
            classes,
            dimension,
        })
    }

    pub fn spread(&self) -> SpreadMode {
        self.spread
    }

    /// Mean normalized distance from `s` to each device's references.
    pub fn class_distances(&self, s: &FingerprintVector) -> Result<Vec<f64>> {
        if s.len() != self.dimension {
            return Err(Error::DimensionMismatch {
                expected: self.dimension,
                found: s.len(),
            });
        }
        let p = self.projection.project(&s.psd)?;
        Ok(self
            .classes
            .iter()
            .map(|(refs, sig)| {
                refs.iter().zip(sig).map(|(r, s)| dist(&p, r) / s).sum::<f64>() / refs.len() as f64
            })
            .collect())
    }

    /// Distances excluding reference `skip` of device `device`; used for
    /// leave-one-out genuine scores.
    pub fn class_distance_excluding(&self, s: &FingerprintVector, device: usize, skip: usize) -> Result<f64> {
        let p = self.projection.project(&s.psd)?;
        let (refs, sig) = &self.classes[device];
        let mut acc = 0.0;
        let mut n = 0;
        for (i, (r, sg)) in refs.iter().zip(sig).enumerate() {
            if i != skip {
                acc += dist(&p, r) / sg;
                n += 1;
            }
        }
        if n == 0 {
            return Err(Error::DegenerateReference {
                device: format!("#{device}"),
            });
        }
        Ok(acc / n as f64)
    }

    pub fn classify(&self, s: &FingerprintVector) -> Result<Classification> {
        let distances = self.class_distances(s)?;
        Ok(Classification {
            device: argmin(&distances),
            distances,
        })
    }

    pub fn identify(&self, s: &FingerprintVector, lambda: f64) -> Result<Identification> {
        let distances = self.class_distances(s)?;
        let nearest = argmin(&distances);
        let min_distance = distances[nearest];
        Ok(Identification {
            genuine: !(min_distance > lambda),
            min_distance,
            nearest,
        })
    }
}

/// Lowest index wins ties.
pub fn argmin(x: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in x.iter().enumerate() {
        if *v < x[best] {
            best = i;
        }
    }
    best
}

#[derive(Debug, Clone, PartialEq)]
pub struct Classification {
    pub device: usize,
    pub distances: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Identification {
    pub genuine: bool,
    pub min_distance: f64,
    pub nearest: usize,
}

/// Minimum mean distance over the trained projection.
pub fn classify(s: &FingerprintVector, db: &FingerprintDatabase) -> Result<Classification> {
    db.scorer(db.projection()?)?.classify(s)
}

/// Threshold test on identity-projected distances: imposter iff the
/// smallest class distance exceeds `lambda`.
pub fn identify(s: &FingerprintVector, db: &FingerprintDatabase, lambda: f64) -> Result<Identification> {
    if !(lambda >= 0.0) {
        return Err(invalid("threshold", format!("{lambda}")));
    }
    db.scorer(Projection::Identity)?.identify(s, lambda)
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RocPoint {
    pub threshold: f64,
    pub far: f64,
    pub frr: f64,
}

impl RocPoint {
    pub fn gar(&self) -> f64 {
        1.0 - self.frr
    }

    pub fn grr(&self) -> f64 {
        1.0 - self.far
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Roc {
    pub points: Vec<RocPoint>,
    pub eer: f64,
    pub eer_threshold: f64,
}

/// Sweeps `λ` over the pooled scores. Accept iff `score ≤ λ`, so
/// `FAR(λ) = P(imposter ≤ λ)` and `FRR(λ) = P(genuine > λ)`. The EER point
/// minimizes `|FAR − FRR|` (smaller `λ` on ties) and reports their mean.
pub fn roc_eer(genuine: &[f64], imposter: &[f64]) -> Result<Roc> {
    if genuine.is_empty() || imposter.is_empty() {
        return Err(invalid("score lists", "both must be non-empty"));
    }
    if genuine.iter().chain(imposter).any(|v| v.is_nan()) {
        return Err(invalid("scores", "NaN"));
    }
    let mut g = genuine.to_vec();
    let mut im = imposter.to_vec();
    g.sort_by(f64::total_cmp);
    im.sort_by(f64::total_cmp);
    let mut pooled: Vec<f64> = g.iter().chain(&im).cloned().collect();
    pooled.sort_by(f64::total_cmp);
    pooled.dedup();
    let (ng, ni) = (g.len() as f64, im.len() as f64);
    let (mut gi, mut ii) = (0usize, 0usize);
    let mut points = Vec::with_capacity(pooled.len());
    let mut best = 0;
    let mut best_gap = f64::INFINITY;
    for (k, &t) in pooled.iter().enumerate() {
        while gi < g.len() && g[gi] <= t {
            gi += 1;
        }
        while ii < im.len() && im[ii] <= t {
            ii += 1;
        }
        let p = RocPoint {
            threshold: t,
            far: ii as f64 / ni,
            frr: (g.len() - gi) as f64 / ng,
        };
        let gap = (p.far - p.frr).abs();
        if gap < best_gap {
            best_gap = gap;
            best = k;
        }
        points.push(p);
    }
    let e = points[best];
    Ok(Roc {
        eer: 0.5 * (e.far + e.frr),
        eer_threshold: e.threshold,
        points,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum DatabaseMode {
    Fixed,
    Updated,
}

/// Builds a trained database from references. When imposter captures are
/// supplied, `λ` is set at the EER between leave-one-out genuine scores
/// and the imposters' minimum distances (identity projection).
pub fn enroll(
    records: Vec<FingerprintRecord>,
    lda_options: LdaOptions,
    spread: SpreadMode,
    imposters: &[FingerprintVector],
) -> Result<FingerprintDatabase> {
    let mut db = FingerprintDatabase::from_records(records, lda_options, spread);
    db.train()?;
    if !imposters.is_empty() {
        db.threshold = Some(derive_threshold(&db, imposters)?);
    }
    Ok(db)
}

fn derive_threshold(db: &FingerprintDatabase, imposters: &[FingerprintVector]) -> Result<f64> {
    let scorer = db.scorer(Projection::Identity)?;
    let mut genuine = Vec::new();
    for (i, d) in db.devices.iter().enumerate() {
        for (j, r) in d.references.iter().enumerate() {
            genuine.push(scorer.class_distance_excluding(&r.vector, i, j)?);
        }
    }
    let imposter: Vec<f64> = imposters
        .iter()
        .map(|s| scorer.identify(s, 0.0).map(|r| r.min_distance))
        .collect::<Result<_>>()?;
    Ok(roc_eer(&genuine, &imposter)?.eer_threshold)
}

/// Genuine and imposter scores from the references alone: each reference
/// is scored against its own device with itself left out (genuine) and
/// against the nearest other device (imposter), identity projection.
pub fn leave_device_out_scores(db: &FingerprintDatabase) -> Result<(Vec<f64>, Vec<f64>)> {
    if db.devices.len() < 2 {
        return Err(Error::InsufficientTraining {
            detail: "leave-device-out scoring needs two devices".to_string(),
        });
    }
    let scorer = db.scorer(Projection::Identity)?;
    let mut genuine = Vec::new();
    let mut imposter = Vec::new();
    for (i, d) in db.devices.iter().enumerate() {
        for (j, r) in d.references.iter().enumerate() {
            genuine.push(scorer.class_distance_excluding(&r.vector, i, j)?);
            let all = scorer.class_distances(&r.vector)?;
            let nearest_other = all
                .iter()
                .enumerate()
                .filter(|(k, _)| *k != i)
                .map(|(_, v)| *v)
                .fold(f64::INFINITY, f64::min);
            imposter.push(nearest_other);
        }
    }
    Ok((genuine, imposter))
}

/// `λ` at the EER of [`leave_device_out_scores`].
pub fn leave_device_out_threshold(db: &FingerprintDatabase) -> Result<f64> {
    let (g, i) = leave_device_out_scores(db)?;
    Ok(roc_eer(&g, &i)?.eer_threshold)
}

/// Fixed keeps the enrollment database untouched; updated replaces the
/// references with `new_captures`, retrains and re-derives `λ`.
pub fn database_strategy(
    db: &FingerprintDatabase,
    new_captures: Vec<FingerprintRecord>,
    mode: DatabaseMode,
    imposters: &[FingerprintVector],
) -> Result<FingerprintDatabase> {
    match mode {
        DatabaseMode::Fixed => Ok(db.clone()),
        DatabaseMode::Updated => {
            let mut next = enroll(new_captures, db.lda_options, db.spread, imposters)?;
            if next.threshold.is_none() {
                next.threshold = db.threshold;
            }
            Ok(next)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fv(v: Vec<f64>) -> FingerprintVector {
        FingerprintVector::new(v, 1.0, Normalization::None).unwrap()
    }

    #[test]
    fn roc_disjoint_and_ties() {
        let r = roc_eer(&[0.1, 0.2, 0.3], &[0.5, 0.6]).unwrap();
        assert_eq!(r.eer, 0.0);
        assert_eq!(r.eer_threshold, 0.3);
        for p in &r.points {
            assert!((p.gar() + p.frr - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn argmin_prefers_lowest_index() {
        assert_eq!(argmin(&[2.0, 1.0, 1.0]), 1);
    }

    #[test]
    fn normalize_rejects_zero() {
        assert_eq!(normalize_power(&fv(vec![0.0; 4])), Err(Error::ZeroVector));
        let n = normalize_power(&fv(vec![1.0, 3.0])).unwrap();
        assert!((n.total_power() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn lda_needs_two_classes() {
        let a = [1.0, 2.0];
        let rows: Vec<&[f64]> = vec![&a, &a];
        assert!(train_lda(&rows, &[0, 0], &LdaOptions::default()).is_err());
    }
}
