//! Two-phase relaying: uplink transmission and compression at the relay,
//! recovery of the network-coded vector, downlink broadcast and per-user
//! decoding with self-interference cancellation. Also the log-det rate model
//! and the sum-rate slope fit.

use std::collections::BTreeMap;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{apply_plan, plan_extension, sample_channels, ChannelSet, ExtensionPlan, DEFAULT_EXTENSION_CAP};
use crate::config::SystemConfig;
use crate::dof_bounds::corner_point;
use crate::error::{Error, Result, Stage, StageExt};
use crate::gsa::{allocate_streams, assemble_from, GsaScheme, StreamAllocation, Tolerances};
use crate::linalg::{self, CMat, CVec};
use crate::rng::{StreamKind, StreamRng};

/// Recovery error threshold for noiseless runs.
pub const RECOVERY_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum SymbolKind {
    #[default]
    Gaussian,
    Qpsk,
}

/// `entries[o + s]` is stream `s` of pair `pair_index[o + s]`, pairs `i < j`
/// in lexicographic order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkCodedVector {
    #[serde(with = "crate::wire::cvec")]
    pub entries: CVec,
    /// `(i, j, stream)` for each entry.
    pub pair_index: Vec<(usize, usize, usize)>,
}

impl NetworkCodedVector {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Entries for unordered pair `{i, j}`.
    pub fn block(&self, i: usize, j: usize) -> CVec {
        let (a, b) = if i < j { (i, j) } else { (j, i) };
        let vals: Vec<Complex64> = self
            .pair_index
            .iter()
            .zip(self.entries.iter())
            .filter(|((pi, pj, _), _)| (*pi, *pj) == (a, b))
            .map(|(_, v)| *v)
            .collect();
        CVec::from_vec(vals)
    }
}

fn pair_labels(alloc: &StreamAllocation) -> Vec<(usize, usize, usize)> {
    let mut out = Vec::with_capacity(alloc.half());
    for (i, j) in crate::config::pairs(alloc.k) {
        for s in 0..alloc.streams(i, j) {
            out.push((i, j, s));
        }
    }
    out
}

/// Messages for one channel use (or one extended block).
#[derive(Debug, Clone, PartialEq)]
pub struct SymbolFrame {
    /// `s[&(i, j)]`: streams from `i` to `j`.
    pub s: BTreeMap<(usize, usize), CVec>,
    pub s_plus: NetworkCodedVector,
}

impl SymbolFrame {
    pub fn from_symbols(alloc: &StreamAllocation, s: BTreeMap<(usize, usize), CVec>) -> Result<Self> {
        for (&(i, j), d) in alloc.d().iter() {
            let got = s.get(&(i, j)).map(|v| v.len());
            if got != Some(*d) {
                return Err(Error::Dimension(format!(
                    "symbols for ({i},{j}): expected {d}, found {got:?}"
                )));
            }
        }
        if s.len() != alloc.d().len() {
            return Err(Error::Dimension("symbol map has pairs outside the allocation".into()));
        }
        let pair_index = pair_labels(alloc);
        let entries = CVec::from_iterator(
            pair_index.len(),
            pair_index.iter().map(|&(i, j, k)| s[&(i, j)][k] + s[&(j, i)][k]),
        );
        Ok(SymbolFrame {
            s,
            s_plus: NetworkCodedVector { entries, pair_index },
        })
    }

    pub fn random(alloc: &StreamAllocation, seed: u64, kind: SymbolKind) -> Self {
        let mut rng = StreamRng::new(seed, StreamKind::Symbols, 0);
        let mut s = BTreeMap::new();
        for (&(i, j), &d) in alloc.d().iter() {
            let v = CVec::from_iterator(
                d,
                (0..d).map(|_| match kind {
                    SymbolKind::Gaussian => rng.complex_normal(),
                    SymbolKind::Qpsk => rng.qpsk(),
                }),
            );
            s.insert((i, j), v);
        }
        Self::from_symbols(alloc, s).expect("shapes follow the allocation")
    }

    pub fn zeros(alloc: &StreamAllocation) -> Self {
        let s = alloc
            .d()
            .iter()
            .map(|(&pr, &d)| (pr, CVec::zeros(d)))
            .collect();
        Self::from_symbols(alloc, s).expect("shapes follow the allocation")
    }
}

fn check_scheme_channels(scheme: &GsaScheme, ch: &ChannelSet) -> Result<()> {
    if scheme.cfg != ch.cfg {
        return Err(Error::Dimension(format!(
            "scheme is for {:?} but channels are {:?}",
            scheme.cfg, ch.cfg
        )));
    }
    ch.check_shapes()
}

/// `y_r = sum_i H_i sum_j V_ij s_ij + n_r`, `n_r ~ CN(0, noise_var I)` from the
/// relay-noise stream of `noise_seed`.
pub fn mac_phase(
    scheme: &GsaScheme,
    ch: &ChannelSet,
    frame: &SymbolFrame,
    noise_var: f64,
    noise_seed: u64,
) -> Result<CVec> {
    check_scheme_channels(scheme, ch)?;
    if !noise_var.is_finite() || noise_var < 0.0 {
        return Err(Error::InvalidArgument(format!("noise variance {noise_var} is not a finite nonnegative number")));
    }
    let mut y = CVec::zeros(ch.cfg.n);
    for (&(i, j), v) in &scheme.v {
        let s = frame
            .s
            .get(&(i, j))
            .ok_or_else(|| Error::Dimension(format!("frame has no symbols for ({i},{j})")))?;
        if s.len() != v.ncols() {
            return Err(Error::Dimension(format!(
                "({i},{j}): {} symbols for a {}-column precoder",
                s.len(),
                v.ncols()
            )));
        }
        y += &ch.uplink[i] * (v * s);
    }
    if noise_var > 0.0 {
        let n = StreamRng::new(noise_seed, StreamKind::RelayNoise, 0).gaussian_vector(ch.cfg.n);
        y += n * Complex64::from(noise_var.sqrt());
    }
    Ok(y)
}

/// Solve `B s = P y_r`.
pub fn relay_decode(scheme: &GsaScheme, y: &CVec) -> Result<NetworkCodedVector> {
    if y.len() != scheme.cfg.n {
        return Err(Error::Dimension(format!(
            "relay observation has length {}, expected {}",
            y.len(),
            scheme.cfg.n
        )));
    }
    let pair_index = pair_labels(&scheme.alloc);
    if scheme.b.is_empty() {
        return Ok(NetworkCodedVector {
            entries: CVec::zeros(0),
            pair_index,
        });
    }
    let compressed = scheme.p() * y;
    let entries = linalg::solve_vec(&scheme.b, &compressed)
        .ok_or_else(|| Error::Decodability("B is numerically singular".into()))?;
    Ok(NetworkCodedVector { entries, pair_index })
}

/// Downlink precoder from the alignment construction on transposed
/// downlink channels, with per-user zero-forcing receive filters.
#[derive(Debug, Clone, PartialEq)]
pub struct BcPrecoder {
    /// `N x d_total/2`, scaled so that `tr(U U^H) = d_total/2`.
    pub u: CMat,
    /// Scale applied to the unnormalized precoder.
    pub scale: f64,
    /// `w[&(i, j)]`: user `i`'s filter for the block of pair `{i, j}`,
    /// already divided by `scale`.
    pub w: BTreeMap<(usize, usize), CMat>,
    pub report: BcReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BcReport {
    /// Per user: smallest singular value ratio of the desired-stream system.
    pub desired_min_sv_ratio: Vec<f64>,
    /// Per user: largest leakage from undesired network-coded streams.
    pub leakage: Vec<f64>,
    pub dual_alignment_max: f64,
    pub dual_b_cond: f64,
}

pub fn build_broadcast(ch: &ChannelSet, alloc: &StreamAllocation, tol: &Tolerances) -> Result<BcPrecoder> {
    let cfg = ch.cfg;
    let dual: Vec<CMat> = ch.downlink.iter().map(linalg::transpose).collect();
    let dual_scheme = assemble_from(&dual, &cfg, alloc, tol)
        .map_err(|e| Error::BroadcastInfeasible(format!("dual construction failed: {e}")))?;
    let half = alloc.half();
    let raw_u = if half == 0 {
        CMat::zeros(cfg.n, 0)
    } else {
        let ut = linalg::solve(&dual_scheme.b, dual_scheme.p())
            .ok_or_else(|| Error::BroadcastInfeasible("dual B is numerically singular".into()))?;
        linalg::transpose(&ut)
    };
    let energy = raw_u.norm_squared();
    let scale = if half == 0 || energy == 0.0 {
        1.0
    } else {
        (half as f64 / energy).sqrt()
    };
    let u = &raw_u * Complex64::from(scale);
    let w: BTreeMap<(usize, usize), CMat> = dual_scheme
        .v
        .iter()
        .map(|(&pr, v)| (pr, linalg::transpose(v) / Complex64::from(scale)))
        .collect();

    let probe = BcPrecoder {
        u,
        scale,
        w,
        report: BcReport {
            desired_min_sv_ratio: Vec::new(),
            leakage: Vec::new(),
            dual_alignment_max: dual_scheme.metrics.alignment_max,
            dual_b_cond: dual_scheme.metrics.b_cond,
        },
    };
    let report = certify_broadcast(&probe, ch, alloc, tol)?;
    Ok(BcPrecoder { report, ..probe })
}

/// Rank and leakage checks of every user's filtered downlink system.
fn certify_broadcast(bc: &BcPrecoder, ch: &ChannelSet, alloc: &StreamAllocation, tol: &Tolerances) -> Result<BcReport> {
    let k = ch.cfg.k;
    let labels = pair_labels(alloc);
    let mut desired_min_sv_ratio = Vec::with_capacity(k);
    let mut leakage = Vec::with_capacity(k);
    for i in 0..k {
        let filters: Vec<&CMat> = (0..k).filter(|&j| j != i).map(|j| &bc.w[&(i, j)]).collect();
        if alloc.x == 0 {
            desired_min_sv_ratio.push(1.0);
            leakage.push(0.0);
            continue;
        }
        let wi = linalg::vstack(&filters);
        let sys = &wi * &ch.downlink[i] * &bc.u;
        let desired: Vec<usize> = labels
            .iter()
            .enumerate()
            .filter(|(_, &(a, b, _))| a == i || b == i)
            .map(|(c, _)| c)
            .collect();
        let undesired: Vec<usize> = (0..labels.len()).filter(|c| !desired.contains(c)).collect();
        let d_sys = sys.select_columns(desired.iter());
        let ratio = linalg::min_sv_ratio(&d_sys);
        let leak = if undesired.is_empty() {
            0.0
        } else {
            linalg::max_abs(&sys.select_columns(undesired.iter()))
        };
        let d_scale = linalg::spectral_norm(&d_sys).max(f64::MIN_POSITIVE);
        if linalg::rank(&d_sys, tol.null_rel) < d_sys.ncols() || leak > tol.align * d_scale {
            return Err(Error::BroadcastInfeasible(format!(
                "user {i}: desired system min/max singular value {ratio:.3e}, leakage {leak:.3e}"
            )));
        }
        desired_min_sv_ratio.push(ratio);
        leakage.push(leak);
    }
    Ok(BcReport {
        desired_min_sv_ratio,
        leakage,
        dual_alignment_max: bc.report.dual_alignment_max,
        dual_b_cond: bc.report.dual_b_cond,
    })
}

/// `y_i = G_i U s + n_i` for each user.
pub fn bc_phase(
    bc: &BcPrecoder,
    ch: &ChannelSet,
    s_plus: &NetworkCodedVector,
    noise_var: f64,
    noise_seed: u64,
) -> Result<Vec<CVec>> {
    if s_plus.len() != bc.u.ncols() {
        return Err(Error::Dimension(format!(
            "network-coded vector has length {}, precoder expects {}",
            s_plus.len(),
            bc.u.ncols()
        )));
    }
    if !noise_var.is_finite() || noise_var < 0.0 {
        return Err(Error::InvalidArgument(format!("noise variance {noise_var} is not a finite nonnegative number")));
    }
    let xr = &bc.u * &s_plus.entries;
    let mut out = Vec::with_capacity(ch.cfg.k);
    for (i, g) in ch.downlink.iter().enumerate() {
        let mut y = g * &xr;
        if noise_var > 0.0 {
            let n = StreamRng::new(noise_seed, StreamKind::UserNoise, i as u32).gaussian_vector(g.nrows());
            y += n * Complex64::from(noise_var.sqrt());
        }
        out.push(y);
    }
    Ok(out)
}

/// Filter user `i`'s observation and cancel its own messages; returns the
/// estimated `s_ji` for every `j != i`.
pub fn user_decode(
    bc: &BcPrecoder,
    user: usize,
    y: &CVec,
    frame: &SymbolFrame,
) -> Result<BTreeMap<usize, CVec>> {
    let mut out = BTreeMap::new();
    for (&(i, j), w) in &bc.w {
        if i != user {
            continue;
        }
        if w.ncols() != y.len() {
            return Err(Error::Dimension(format!(
                "user {i} filter has {} columns, observation has {}",
                w.ncols(),
                y.len()
            )));
        }
        let combined = w * y;
        out.insert(j, combined - &frame.s[&(i, j)]);
    }
    Ok(out)
}

/// Per-seed prepared link: effective channels, uplink scheme and downlink
/// precoder (the latter may be infeasible without affecting the uplink).
#[derive(Debug)]
pub struct Link {
    pub plan: ExtensionPlan,
    pub channels: ChannelSet,
    pub scheme: GsaScheme,
    pub broadcast: std::result::Result<BcPrecoder, Error>,
    pub seed: u64,
}

pub fn prepare_link(cfg: &SystemConfig, beta: u32, seed: u64) -> Result<Link> {
    cfg.validate().stage(Stage::Plan)?;
    let corner = corner_point(cfg.k, beta).stage(Stage::Plan)?;
    let plan = plan_extension(cfg, &corner, DEFAULT_EXTENSION_CAP).stage(Stage::Plan)?;
    let raw = sample_channels(cfg, seed).stage(Stage::Channel)?;
    let channels = apply_plan(&raw, &plan).stage(Stage::Channel)?;
    let alloc = allocate_streams(&channels.cfg, beta).stage(Stage::Allocate)?;
    let tol = Tolerances::default();
    let scheme = assemble_from(&channels.uplink, &channels.cfg, &alloc, &tol)?;
    let broadcast = build_broadcast(&channels, &alloc, &tol).map_err(|e| e.at(Stage::Broadcast));
    Ok(Link {
        plan,
        channels,
        scheme,
        broadcast,
        seed,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairRate {
    pub i: usize,
    pub j: usize,
    pub mac: f64,
    pub bc_at_i: f64,
    pub bc_at_j: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimResult {
    pub cfg: SystemConfig,
    pub effective: SystemConfig,
    pub t: u64,
    pub beta: u32,
    pub seed: u64,
    pub noise_var: f64,
    pub snr_db: Option<f64>,
    pub relay_recovery_error: f64,
    /// Per-user max error; absent when the downlink precoder is infeasible.
    pub user_recovery_error: Option<Vec<f64>>,
    pub bc_error: Option<String>,
    pub alignment_residual: f64,
    pub b_cond: f64,
    pub rates: Option<Vec<PairRate>>,
    pub sum_rate: Option<f64>,
}

impl SimResult {
    pub fn max_user_error(&self) -> Option<f64> {
        self.user_recovery_error
            .as_ref()
            .map(|v| v.iter().copied().fold(0.0, f64::max))
    }
}

impl Link {
    /// Run one frame through both phases with the given noise variance on
    /// every receiver.
    pub fn run(&self, cfg: &SystemConfig, noise_var: f64, symbols: SymbolKind) -> Result<SimResult> {
        let frame = SymbolFrame::random(&self.scheme.alloc, self.seed, symbols);
        let y = mac_phase(&self.scheme, &self.channels, &frame, noise_var, self.seed).stage(Stage::Mac)?;
        let s_hat = relay_decode(&self.scheme, &y).stage(Stage::RelayDecode)?;
        let relay_recovery_error = linalg::max_abs_vec(&(&s_hat.entries - &frame.s_plus.entries));

        let (user_recovery_error, bc_error) = match &self.broadcast {
            Ok(bc) => {
                let ys = bc_phase(bc, &self.channels, &s_hat, noise_var, self.seed).stage(Stage::Broadcast)?;
                let mut errs = Vec::with_capacity(ys.len());
                for (i, yi) in ys.iter().enumerate() {
                    let est = user_decode(bc, i, yi, &frame).stage(Stage::UserDecode)?;
                    let err = est
                        .iter()
                        .map(|(&j, v)| linalg::max_abs_vec(&(v - &frame.s[&(j, i)])))
                        .fold(0.0, f64::max);
                    errs.push(err);
                }
                (Some(errs), None)
            }
            Err(e) => (None, Some(e.to_string())),
        };
        Ok(SimResult {
            cfg: *cfg,
            effective: self.channels.cfg,
            t: self.plan.ext.t,
            beta: self.scheme.beta(),
            seed: self.seed,
            noise_var,
            snr_db: None,
            relay_recovery_error,
            user_recovery_error,
            bc_error,
            alignment_residual: self.scheme.metrics.alignment_max,
            b_cond: self.scheme.metrics.b_cond,
            rates: None,
            sum_rate: None,
        })
    }

    /// Per-pair log-det rates at transmit power `power` with unit noise.
    /// Each source splits its power evenly over its `(K-1)x` streams, the
    /// relay over the `d_total/2` network-coded streams.
    pub fn pair_rates(&self, power: f64) -> Result<Vec<PairRate>> {
        let bc = self
            .broadcast
            .as_ref()
            .map_err(|e| Error::BroadcastInfeasible(e.to_string()))?;
        let scheme = &self.scheme;
        let alloc = &scheme.alloc;
        let x = alloc.x;
        if x == 0 {
            return Ok(scheme
                .pairs()
                .into_iter()
                .map(|(i, j)| PairRate {
                    i,
                    j,
                    mac: 0.0,
                    bc_at_i: 0.0,
                    bc_at_j: 0.0,
                })
                .collect());
        }
        let rho_src = power / ((alloc.k - 1) * x) as f64;
        let rho_relay = power / alloc.half() as f64;
        let bp = linalg::solve(&scheme.b, scheme.p())
            .ok_or_else(|| Error::Decodability("B is numerically singular".into()))?;
        let mac_cov = &bp * bp.adjoint();
        let mut out = Vec::new();
        for (i, j) in scheme.pairs() {
            let o = scheme.pair_offset(i, j);
            let sigma = mac_cov.view((o, o), (x, x)).into_owned();
            let mac = awgn_logdet_rate(&sigma, rho_src)?;
            let bc_rate = |u: usize, v: usize| -> Result<f64> {
                let w = &bc.w[&(u, v)];
                awgn_logdet_rate(&(w * w.adjoint()), rho_relay)
            };
            out.push(PairRate {
                i,
                j,
                mac,
                bc_at_i: bc_rate(i, j)?,
                bc_at_j: bc_rate(j, i)?,
            });
        }
        Ok(out)
    }

    /// Sum over both directions of every pair of min(uplink, downlink) rate.
    pub fn sum_rate(&self, power: f64) -> Result<f64> {
        Ok(sum_of(&self.pair_rates(power)?))
    }
}

fn sum_of(rates: &[PairRate]) -> f64 {
    rates
        .iter()
        .map(|r| r.mac.min(r.bc_at_j) + r.mac.min(r.bc_at_i))
        .sum()
}

/// `log2 det(I + rho * Sigma^-1)` for Hermitian positive definite `Sigma`.
pub fn awgn_logdet_rate(sigma: &CMat, rho: f64) -> Result<f64> {
    if sigma.is_empty() {
        return Ok(0.0);
    }
    let shifted = sigma + CMat::identity(sigma.nrows(), sigma.ncols()) * Complex64::from(rho);
    Ok(log2_det_hpd(&shifted)? - log2_det_hpd(sigma)?)
}

fn log2_det_hpd(a: &CMat) -> Result<f64> {
    let chol = a
        .clone()
        .cholesky()
        .ok_or_else(|| Error::Decodability("noise covariance is not positive definite".into()))?;
    let l = chol.l_dirty();
    Ok((0..a.nrows()).map(|k| 2.0 * l[(k, k)].re.log2()).sum())
}

/// Compose planning, sampling, synthesis and both phases for one seed.
pub fn end_to_end(cfg: &SystemConfig, beta: u32, seed: u64, noise_var: f64) -> Result<SimResult> {
    prepare_link(cfg, beta, seed)?.run(cfg, noise_var, SymbolKind::Gaussian)
}

/// One CSV row per (seed, SNR) cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellRecord {
    #[serde(rename = "K")]
    pub k: usize,
    #[serde(rename = "M")]
    pub m: usize,
    #[serde(rename = "N")]
    pub n: usize,
    pub beta: u32,
    pub t: u64,
    pub seed: u64,
    pub snr_db: f64,
    pub relay_err: f64,
    pub user_err: f64,
    pub sum_rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlopeEstimate {
    pub slope: f64,
    pub d_total: usize,
    /// `(snr_db, mean sum rate)` for every grid point.
    pub points: Vec<(f64, f64)>,
    /// SNR points the fit used.
    pub fit_snr_db: Vec<f64>,
    pub seeds_used: usize,
    pub failed_seeds: Vec<(u64, String)>,
    pub low_confidence: bool,
}

/// Width of the window at the top of the SNR grid used by the fit.
pub const FIT_WINDOW_DB: f64 = 30.0;

/// Least-squares slope of rate against `log2(SNR)`.
pub fn fit_slope(points: &[(f64, f64)]) -> Result<f64> {
    if points.len() < 2 {
        return Err(Error::DegenerateFit(format!(
            "{} point(s); at least 2 are needed",
            points.len()
        )));
    }
    let xs: Vec<f64> = points.iter().map(|(db, _)| db / 10.0 * 10f64.log2()).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::DegenerateFit("all SNR points coincide".into()));
    }
    let sxy: f64 = xs.iter().zip(points).map(|(x, p)| (x - mx) * (p.1 - my)).sum();
    Ok(sxy / sxx)
}

fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// Per-seed cell records and the slope of the seed-averaged sum rate over
/// the top `FIT_WINDOW_DB` of the grid.
pub fn monte_carlo(
    cfg: &SystemConfig,
    beta: u32,
    seeds: &[u64],
    snr_grid_db: &[f64],
) -> Result<(Vec<CellRecord>, SlopeEstimate)> {
    cfg.validate()?;
    if snr_grid_db.is_empty() || snr_grid_db.iter().any(|s| !s.is_finite()) {
        return Err(Error::InvalidArgument("SNR grid must be nonempty and finite".into()));
    }
    if seeds.is_empty() {
        return Err(Error::InvalidArgument("at least one seed is required".into()));
    }
    let mut grid = snr_grid_db.to_vec();
    grid.sort_by(f64::total_cmp);
    grid.dedup();

    let per_seed: Vec<(u64, Result<Vec<CellRecord>>)> = seeds
        .par_iter()
        .map(|&seed| (seed, seed_cells(cfg, beta, seed, &grid)))
        .collect();

    let mut cells = Vec::new();
    let mut failed = Vec::new();
    let mut d_total = 0;
    for (seed, r) in per_seed {
        match r {
            Ok(rows) => cells.extend(rows),
            Err(e) => failed.push((seed, e.to_string())),
        }
    }
    let used = seeds.len() - failed.len();
    if used == 0 {
        let (_, first) = failed.first().cloned().unwrap_or_default();
        return Err(Error::DegenerateFit(format!("no seed produced rates: {first}")));
    }
    if let Ok(alloc) = prepare_link(cfg, beta, seeds[0]).map(|l| l.scheme.alloc) {
        d_total = alloc.d_total;
    }
    let points: Vec<(f64, f64)> = grid
        .iter()
        .map(|&db| {
            let rates: Vec<f64> = cells.iter().filter(|c| c.snr_db == db).map(|c| c.sum_rate).collect();
            (db, rates.iter().sum::<f64>() / rates.len() as f64)
        })
        .collect();
    let top = grid.last().copied().unwrap_or(0.0);
    let fit: Vec<(f64, f64)> = points
        .iter()
        .copied()
        .filter(|(db, _)| *db >= top - FIT_WINDOW_DB)
        .collect();
    let slope = fit_slope(&fit)?;
    let span = fit.last().map(|p| p.0).unwrap_or(0.0) - fit.first().map(|p| p.0).unwrap_or(0.0);
    let estimate = SlopeEstimate {
        slope,
        d_total,
        fit_snr_db: fit.iter().map(|p| p.0).collect(),
        points,
        seeds_used: used,
        failed_seeds: failed,
        low_confidence: fit.len() < 3 || span < 20.0 || used < 10,
    };
    Ok((cells, estimate))
}

fn seed_cells(cfg: &SystemConfig, beta: u32, seed: u64, grid: &[f64]) -> Result<Vec<CellRecord>> {
    let link = prepare_link(cfg, beta, seed)?;
    grid.iter()
        .map(|&db| {
            let p = db_to_linear(db);
            let sim = link.run(cfg, 1.0 / p, SymbolKind::Gaussian)?;
            Ok(CellRecord {
                k: cfg.k,
                m: cfg.m,
                n: cfg.n,
                beta,
                t: sim.t,
                seed,
                snr_db: db,
                relay_err: sim.relay_recovery_error,
                user_err: sim.max_user_error().unwrap_or(f64::NAN),
                sum_rate: link.sum_rate(p)?,
            })
        })
        .collect()
}

/// Slope of the seed-averaged sum rate, in streams per channel use of the
/// effective system.
pub fn estimate_dof_slope(cfg: &SystemConfig, beta: u32, seeds: &[u64], snr_grid_db: &[f64]) -> Result<SlopeEstimate> {
    monte_carlo(cfg, beta, seeds, snr_grid_db).map(|(_, est)| est)
}

/// Write cell records as CSV with a header row.
pub fn write_cells_csv<W: std::io::Write>(w: W, cells: &[CellRecord]) -> Result<()> {
    let mut wr = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(w);
    for c in cells {
        wr.serialize(c).map_err(|e| Error::Io(std::io::Error::other(e)))?;
    }
    wr.flush()?;
    Ok(())
}
