//! Generalized signal alignment: stream allocation, relay compression matrix,
//! source precoders and the aligned basis, plus an independent checker for
//! the alignment conditions.
//!
//! Row order of `P` follows the lexicographic order of beta-subsets; column
//! order of `B` (and entry order of the network-coded vector) follows the
//! lexicographic order of pairs `i < j`, `x` streams per pair.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::channel::ChannelSet;
use crate::config::{pairs, subsets, SystemConfig};
use crate::dof_bounds::corner_point;
use crate::error::{Error, Result, Stage, StageExt};
use crate::linalg::{self, CMat, RightSpectrum, NULL_REL_TOL};
use crate::rational::{binomial, RationalDof};
use crate::wire::{self, MatrixJson};

/// Numerical thresholds used when assembling and checking a scheme.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    /// Relative singular-value cutoff for null spaces and ranks.
    pub null_rel: f64,
    /// Smallest admissible singular value of a precoder (its columns come
    /// from an orthonormal basis, so this is on a unit scale).
    pub precoder_min_sv: f64,
    /// Max-entry alignment residual.
    pub align: f64,
    /// Largest admissible condition number of `B`.
    pub cond_max: f64,
    /// Relative residual for "this row annihilates [H_i, -H_j]".
    pub row_null: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            null_rel: NULL_REL_TOL,
            precoder_min_sv: 1e-9,
            align: 1e-8,
            cond_max: 1e8,
            row_null: 1e-8,
        }
    }
}

/// Symmetric stream allocation: every ordered pair carries `x` streams.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StreamAllocation {
    pub k: usize,
    pub beta: u32,
    pub x: usize,
    pub d_total: usize,
}

impl StreamAllocation {
    pub fn symmetric(k: usize, beta: u32, x: usize) -> Self {
        StreamAllocation {
            k,
            beta,
            x,
            d_total: k * (k - 1) * x,
        }
    }

    /// Streams from `i` to `j`.
    pub fn streams(&self, i: usize, j: usize) -> usize {
        if i != j && i < self.k && j < self.k {
            self.x
        } else {
            0
        }
    }

    /// Per ordered pair stream counts.
    pub fn d(&self) -> BTreeMap<(usize, usize), usize> {
        let mut out = BTreeMap::new();
        for i in 0..self.k {
            for j in 0..self.k {
                if i != j {
                    out.insert((i, j), self.x);
                }
            }
        }
        out
    }

    /// Rows of `P`, equal to the length of the network-coded vector.
    pub fn half(&self) -> usize {
        self.d_total / 2
    }
}

/// Symmetric allocation at the corner for `beta`: x = 4M / (2 + K(K-1) - beta(beta-1)).
pub fn allocate_streams(cfg: &SystemConfig, beta: u32) -> Result<StreamAllocation> {
    cfg.validate()?;
    let corner = corner_point(cfg.k, beta)?;
    if cfg.ratio() < corner.abscissa {
        let need = (&corner.abscissa * &RationalDof::from(cfg.m)).ceil();
        return Err(Error::Infeasible(format!(
            "N = {} is below the beta={beta} corner at N/M = {}; needs N \u{2265} {need} for M = {}",
            cfg.n, corner.abscissa, cfg.m
        )));
    }
    let t = (cfg.k * (cfg.k - 1)) as i64;
    let b = beta as i64;
    let x = RationalDof::new(4 * cfg.m as i64, 2 + t - b * (b - 1));
    match x.to_u64_exact() {
        Some(x) => Ok(StreamAllocation::symmetric(cfg.k, beta, x as usize)),
        None => Err(Error::NeedsExtension {
            factor: x.denom_u64().unwrap_or(u64::MAX),
            reason: format!("per-pair stream count x = {x} is fractional"),
        }),
    }
}

/// Row budget: `q` rows of `P` per beta-subset, and `p` rows annihilating
/// each pair's channels.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RowCounts {
    pub q: usize,
    /// Same for every pair under the symmetric allocation.
    pub p: usize,
}

impl RowCounts {
    pub fn p_map(&self, k: usize) -> BTreeMap<(usize, usize), usize> {
        pairs(k).into_iter().map(|pr| (pr, self.p)).collect()
    }
}

pub fn required_row_counts(cfg: &SystemConfig, alloc: &StreamAllocation) -> Result<RowCounts> {
    let beta = alloc.beta as u64;
    let k = cfg.k as u64;
    if alloc.k != cfg.k {
        return Err(Error::Dimension(format!(
            "allocation is for K = {} but the configuration has K = {}",
            alloc.k, cfg.k
        )));
    }
    let subsets_total = binomial(k, beta);
    let half = RationalDof::from(alloc.half());
    let q = half / RationalDof::from(subsets_total.clone());
    let Some(q) = q.to_u64_exact() else {
        return Err(Error::NeedsExtension {
            factor: q.denom_u64().unwrap_or(u64::MAX),
            reason: format!(
                "{} rows of P do not split evenly over C({k},{beta}) = {subsets_total} subsets",
                alloc.half()
            ),
        });
    };
    let q = q as usize;
    let share = binomial(k - 2, beta - 2);
    let p = q * usize::try_from(share).map_err(|_| Error::InvalidArgument("K too large".into()))?;
    let room = cfg.n as i64 - (alloc.beta as i64) * cfg.m as i64;
    if q as i64 > room {
        return Err(Error::Infeasible(format!(
            "q \u{2264} N - beta*M violated: q = {q} but N - beta*M = {room}; needs N \u{2265} {}",
            alloc.beta as usize * cfg.m + q
        )));
    }
    let needed = alloc.half() as i64 - 2 * cfg.m as i64 + alloc.x as i64;
    if (p as i64) < needed {
        return Err(Error::Infeasible(format!(
            "p \u{2265} d_total/2 - 2M + d violated: p = {p} but {} - {} + {} = {needed}",
            alloc.half(),
            2 * cfg.m,
            alloc.x
        )));
    }
    Ok(RowCounts { q, p })
}

/// Relay compression matrix with the subset each row was taken from.
#[derive(Debug, Clone, PartialEq)]
pub struct CompressionMatrix {
    pub p: CMat,
    pub row_subsets: Vec<Vec<usize>>,
}

/// Stack `q` left null vectors of every beta-combining channel matrix.
pub fn compression_from(
    uplink: &[CMat],
    cfg: &SystemConfig,
    alloc: &StreamAllocation,
    counts: &RowCounts,
    tol: &Tolerances,
) -> Result<CompressionMatrix> {
    let beta = alloc.beta as usize;
    let mut rows: Vec<CMat> = Vec::new();
    let mut row_subsets = Vec::new();
    if counts.q > 0 {
        for gamma in subsets(cfg.k, beta) {
            let blocks: Vec<&CMat> = gamma.iter().map(|&g| &uplink[g]).collect();
            let stacked = linalg::hstack(&blocks);
            let spec = RightSpectrum::of(&stacked.adjoint());
            let dim = spec.null_dim(tol.null_rel);
            if dim < counts.q {
                return Err(Error::Infeasible(format!(
                    "left null space of subset {gamma:?} has dimension {dim}, needs {}",
                    counts.q
                )));
            }
            rows.push(spec.smallest(counts.q).adjoint());
            row_subsets.extend(std::iter::repeat_n(gamma, counts.q));
        }
    }
    let p = if rows.is_empty() {
        CMat::zeros(0, cfg.n)
    } else {
        linalg::vstack(&rows.iter().collect::<Vec<_>>())
    };
    debug_assert_eq!(p.nrows(), alloc.half());
    if p.nrows() > 0 && linalg::rank(&p, tol.null_rel) < p.nrows() {
        return Err(Error::DegenerateChannel(format!(
            "compression matrix is not full row rank (min/max singular value {:.3e})",
            linalg::min_sv_ratio(&p)
        )));
    }
    Ok(CompressionMatrix { p, row_subsets })
}

pub fn build_compression_matrix(ch: &ChannelSet, alloc: &StreamAllocation) -> Result<CompressionMatrix> {
    let counts = required_row_counts(&ch.cfg, alloc)?;
    compression_from(&ch.uplink, &ch.cfg, alloc, &counts, &Tolerances::default())
}

/// `A_ij = [P H_i, -P H_j]`.
pub fn pair_matrix(p: &CMat, hi: &CMat, hj: &CMat) -> CMat {
    let phi = p * hi;
    let phj = -(p * hj);
    linalg::hstack(&[&phi, &phj])
}

/// Precoders from the null space of each `A_ij`; keys are ordered pairs.
pub fn precoders_from(
    uplink: &[CMat],
    cfg: &SystemConfig,
    p: &CMat,
    alloc: &StreamAllocation,
    tol: &Tolerances,
) -> Result<BTreeMap<(usize, usize), CMat>> {
    let m = cfg.m;
    let mut out = BTreeMap::new();
    for (i, j) in pairs(cfg.k) {
        let a = pair_matrix(p, &uplink[i], &uplink[j]);
        let spec = RightSpectrum::of(&a);
        let dim = spec.null_dim(tol.null_rel);
        let need = alloc.streams(i, j);
        if dim < need {
            return Err(Error::AlignmentInfeasible {
                i,
                j,
                found: dim,
                needed: need,
            });
        }
        let w = spec.smallest(need);
        let vij = w.rows(0, m).into_owned();
        let vji = w.rows(m, m).into_owned();
        for (a, b, v) in [(i, j, &vij), (j, i, &vji)] {
            let min_sv = linalg::singular_values(v).last().copied().unwrap_or(0.0);
            if need > 0 && min_sv <= tol.precoder_min_sv {
                return Err(Error::DegenerateSplit { i: a, j: b, min_sv });
            }
        }
        out.insert((i, j), vij);
        out.insert((j, i), vji);
    }
    Ok(out)
}

pub fn build_precoders(
    ch: &ChannelSet,
    comp: &CompressionMatrix,
    alloc: &StreamAllocation,
) -> Result<BTreeMap<(usize, usize), CMat>> {
    precoders_from(&ch.uplink, &ch.cfg, &comp.p, alloc, &Tolerances::default())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SchemeMetrics {
    /// max over pairs of max-entry |P H_i V_ij - P H_j V_ji|
    pub alignment_max: f64,
    /// same, divided by ||P|| ||H_i|| ||V_ij||
    pub alignment_rel: f64,
    pub b_cond: f64,
}

/// An assembled alignment scheme. Precoder keys are ordered pairs `(i, j)`:
/// `v[&(i, j)]` is the `M x x` precoder source `i` uses for its message to `j`.
#[derive(Debug, Clone, PartialEq)]
pub struct GsaScheme {
    pub cfg: SystemConfig,
    pub alloc: StreamAllocation,
    pub counts: RowCounts,
    pub compression: CompressionMatrix,
    pub v: BTreeMap<(usize, usize), CMat>,
    pub b: CMat,
    pub metrics: SchemeMetrics,
}

impl GsaScheme {
    pub fn beta(&self) -> u32 {
        self.alloc.beta
    }

    pub fn p(&self) -> &CMat {
        &self.compression.p
    }

    /// Unordered pairs in column order of `B`.
    pub fn pairs(&self) -> Vec<(usize, usize)> {
        pairs(self.cfg.k)
    }

    /// Offset of pair `(i, j)`'s block within the network-coded vector.
    pub fn pair_offset(&self, i: usize, j: usize) -> usize {
        let (a, b) = if i < j { (i, j) } else { (j, i) };
        let idx = self
            .pairs()
            .iter()
            .position(|&pr| pr == (a, b))
            .expect("pair in range");
        idx * self.alloc.x
    }
}

/// Compute `B`, check the alignment equation and the invertibility of `B`.
pub fn assemble_from(
    uplink: &[CMat],
    cfg: &SystemConfig,
    alloc: &StreamAllocation,
    tol: &Tolerances,
) -> Result<GsaScheme> {
    if uplink.len() != cfg.k || uplink.iter().any(|h| h.shape() != (cfg.n, cfg.m)) {
        return Err(Error::Dimension("uplink shapes do not match the configuration".into()));
    }
    let counts = required_row_counts(cfg, alloc).stage(Stage::Allocate)?;
    let compression = compression_from(uplink, cfg, alloc, &counts, tol).stage(Stage::Compression)?;
    let p = &compression.p;
    let v = precoders_from(uplink, cfg, p, alloc, tol).stage(Stage::Precoders)?;

    let p_norm = linalg::spectral_norm(p);
    let mut blocks = Vec::new();
    let mut alignment_max = 0.0f64;
    let mut alignment_rel = 0.0f64;
    for (i, j) in pairs(cfg.k) {
        let bij = p * &uplink[i] * &v[&(i, j)];
        let bji = p * &uplink[j] * &v[&(j, i)];
        let res = linalg::max_abs(&(&bij - &bji));
        let scale = p_norm * linalg::spectral_norm(&uplink[i]) * linalg::spectral_norm(&v[&(i, j)]);
        alignment_max = alignment_max.max(res);
        if scale > 0.0 {
            alignment_rel = alignment_rel.max(res / scale);
        }
        blocks.push(bij);
    }
    if alignment_max > tol.align {
        return Err(Error::AlignmentVerification {
            residual: alignment_max,
            tol: tol.align,
        }
        .at(Stage::Assemble));
    }
    let b = if blocks.is_empty() {
        CMat::zeros(0, 0)
    } else {
        linalg::hstack(&blocks.iter().collect::<Vec<_>>())
    };
    let b_cond = if b.is_empty() { 1.0 } else { linalg::cond(&b) };
    if b_cond.is_nan() || b_cond > tol.cond_max {
        return Err(Error::Decodability(format!(
            "B has condition number {b_cond:.3e} > {:.1e}",
            tol.cond_max
        ))
        .at(Stage::Assemble));
    }
    Ok(GsaScheme {
        cfg: *cfg,
        alloc: alloc.clone(),
        counts,
        compression,
        v,
        b,
        metrics: SchemeMetrics {
            alignment_max,
            alignment_rel,
            b_cond,
        },
    })
}

pub fn assemble_scheme(ch: &ChannelSet, alloc: &StreamAllocation) -> Result<GsaScheme> {
    assemble_from(&ch.uplink, &ch.cfg, alloc, &Tolerances::default())
}

/// Allocate streams for `beta` and assemble the scheme on `ch` as-is.
pub fn synthesize(ch: &ChannelSet, beta: u32) -> Result<GsaScheme> {
    let alloc = allocate_streams(&ch.cfg, beta).stage(Stage::Allocate)?;
    assemble_scheme(ch, &alloc)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairCheck {
    pub i: usize,
    pub j: usize,
    /// Rows of P found in the left null space of [H_i, -H_j].
    pub rows_in_left_null: usize,
    /// d_total/2 - 2M + d_ij
    pub rows_required: i64,
    pub condition1: bool,
    /// max-entry |A_ij [V_ij; V_ji]| / (||A_ij|| ||[V_ij; V_ji]||)
    pub residual: f64,
    pub precoders_full_rank: bool,
    pub condition2: bool,
    pub null_dim: usize,
    pub rank_a: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlignmentReport {
    pub pairs: Vec<PairCheck>,
    pub passed: bool,
}

/// Re-check both alignment conditions for every pair directly from the
/// channels and the scheme matrices.
pub fn verify_alignment(scheme: &GsaScheme, ch: &ChannelSet) -> AlignmentReport {
    verify_with(scheme, &ch.uplink, &Tolerances::default())
}

pub fn verify_with(scheme: &GsaScheme, uplink: &[CMat], tol: &Tolerances) -> AlignmentReport {
    let p = scheme.p();
    let m = scheme.cfg.m;
    let half = p.nrows() as i64;
    let mut checks = Vec::new();
    for (i, j) in pairs(scheme.cfg.k) {
        let hij = linalg::hstack(&[&uplink[i], &(-&uplink[j])]);
        let h_norm = linalg::spectral_norm(&hij);
        let rows_in_left_null = (0..p.nrows())
            .filter(|&r| {
                let row = p.row(r).into_owned();
                let rn = row.norm();
                rn > 0.0 && (&row * &hij).norm() <= tol.row_null * rn * h_norm
            })
            .count();
        let d = scheme.alloc.streams(i, j) as i64;
        let rows_required = half - 2 * m as i64 + d;

        let a = pair_matrix(p, &uplink[i], &uplink[j]);
        let (vij, vji) = (&scheme.v[&(i, j)], &scheme.v[&(j, i)]);
        let w = linalg::vstack(&[vij, vji]);
        let scale = linalg::spectral_norm(&a) * linalg::spectral_norm(&w);
        let residual = if scale > 0.0 {
            linalg::max_abs(&(&a * &w)) / scale
        } else {
            0.0
        };
        let full = |v: &CMat| v.ncols() == 0 || linalg::rank(v, tol.null_rel) == v.ncols();
        let precoders_full_rank = full(vij) && full(vji);
        let spec = RightSpectrum::of(&a);
        let null_dim = spec.null_dim(tol.null_rel);
        checks.push(PairCheck {
            i,
            j,
            rows_in_left_null,
            rows_required,
            condition1: rows_in_left_null as i64 >= rows_required,
            residual,
            precoders_full_rank,
            condition2: residual <= tol.align && precoders_full_rank,
            null_dim,
            rank_a: 2 * m - null_dim,
        });
    }
    let passed = checks.iter().all(|c| c.condition1 && c.condition2);
    AlignmentReport {
        pairs: checks,
        passed,
    }
}

#[derive(Serialize, Deserialize)]
struct PrecoderJson {
    from: usize,
    to: usize,
    matrix: MatrixJson,
}

#[derive(Serialize, Deserialize)]
struct SchemeJson {
    cfg: SystemConfig,
    allocation: StreamAllocation,
    counts: RowCounts,
    #[serde(with = "wire::cmat")]
    p: CMat,
    row_subsets: Vec<Vec<usize>>,
    precoders: Vec<PrecoderJson>,
    #[serde(with = "wire::cmat")]
    b: CMat,
    metrics: SchemeMetrics,
}

impl GsaScheme {
    pub fn to_json(&self) -> Result<String> {
        let doc = SchemeJson {
            cfg: self.cfg,
            allocation: self.alloc.clone(),
            counts: self.counts.clone(),
            p: self.compression.p.clone(),
            row_subsets: self.compression.row_subsets.clone(),
            precoders: self
                .v
                .iter()
                .map(|(&(from, to), m)| PrecoderJson {
                    from,
                    to,
                    matrix: MatrixJson::from(m),
                })
                .collect(),
            b: self.b.clone(),
            metrics: self.metrics,
        };
        Ok(serde_json::to_string_pretty(&doc)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let doc: SchemeJson = serde_json::from_str(s)?;
        let mut v = BTreeMap::new();
        for pc in doc.precoders {
            let m = pc.matrix.to_matrix().map_err(Error::Dimension)?;
            v.insert((pc.from, pc.to), m);
        }
        let scheme = GsaScheme {
            cfg: doc.cfg,
            alloc: doc.allocation,
            counts: doc.counts,
            compression: CompressionMatrix {
                p: doc.p,
                row_subsets: doc.row_subsets,
            },
            v,
            b: doc.b,
            metrics: doc.metrics,
        };
        let half = scheme.alloc.half();
        if scheme.compression.p.shape() != (half, scheme.cfg.n)
            || scheme.b.shape() != (half, half)
            || scheme.v.len() != scheme.cfg.k * (scheme.cfg.k - 1)
        {
            return Err(Error::Dimension("scheme JSON has inconsistent shapes".into()));
        }
        Ok(scheme)
    }
}
