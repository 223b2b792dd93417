//! Channel realizations, antenna deactivation and symbol extensions.

use serde::{Deserialize, Serialize};

use crate::config::SystemConfig;
use crate::dof_bounds::CornerPoint;
use crate::error::{Error, Result};
use crate::linalg::{self, CMat};
use crate::rational::{binomial, RationalDof};
use crate::rng::{StreamKind, StreamRng};

/// Uplink H_i (N x M) and downlink G_i (M x N) for every source.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelSet {
    pub cfg: SystemConfig,
    pub seed: u64,
    /// Symbol-extension factor already applied (1 for a raw draw).
    #[serde(default = "one")]
    pub t: usize,
    #[serde(with = "crate::wire::cmat_vec")]
    pub uplink: Vec<CMat>,
    #[serde(with = "crate::wire::cmat_vec")]
    pub downlink: Vec<CMat>,
}

fn one() -> usize {
    1
}

impl ChannelSet {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let ch: ChannelSet = serde_json::from_str(s)?;
        ch.check_shapes()?;
        Ok(ch)
    }

    pub fn check_shapes(&self) -> Result<()> {
        let SystemConfig { k, m, n } = self.cfg;
        if self.uplink.len() != k || self.downlink.len() != k {
            return Err(Error::Dimension(format!(
                "expected {k} uplink and downlink matrices, found {} and {}",
                self.uplink.len(),
                self.downlink.len()
            )));
        }
        for (i, (h, g)) in self.uplink.iter().zip(&self.downlink).enumerate() {
            if h.shape() != (n, m) || g.shape() != (m, n) {
                return Err(Error::Dimension(format!(
                    "source {i}: H is {:?}, G is {:?}, expected ({n}, {m}) and ({m}, {n})",
                    h.shape(),
                    g.shape()
                )));
            }
        }
        Ok(())
    }
}

/// Draw i.i.d. CN(0, 1) uplink and downlink matrices. Each matrix has its own
/// stream keyed by (direction, source index).
pub fn sample_channels(cfg: &SystemConfig, seed: u64) -> Result<ChannelSet> {
    cfg.validate()?;
    let draw = |kind, i: usize, rows, cols| -> Result<CMat> {
        let h = StreamRng::new(seed, kind, i as u32).gaussian_matrix(rows, cols);
        let full = rows.min(cols);
        if linalg::rank(&h, linalg::NULL_REL_TOL) < full {
            return Err(Error::DegenerateChannel(format!(
                "{kind:?} matrix of source {i} is rank deficient (seed {seed})"
            )));
        }
        Ok(h)
    };
    let mut uplink = Vec::with_capacity(cfg.k);
    let mut downlink = Vec::with_capacity(cfg.k);
    for i in 0..cfg.k {
        uplink.push(draw(StreamKind::Uplink, i, cfg.n, cfg.m)?);
        downlink.push(draw(StreamKind::Downlink, i, cfg.m, cfg.n)?);
    }
    Ok(ChannelSet {
        cfg: *cfg,
        seed,
        t: 1,
        uplink,
        downlink,
    })
}

/// Keep the first `m_use` source antennas and the first `n_use` relay
/// antennas.
pub fn deactivate(ch: &ChannelSet, m_use: usize, n_use: usize) -> Result<ChannelSet> {
    let SystemConfig { m, n, .. } = ch.cfg;
    if !(1..=m).contains(&m_use) || !(1..=n).contains(&n_use) {
        return Err(Error::Dimension(format!(
            "cannot keep {m_use} of {m} source and {n_use} of {n} relay antennas"
        )));
    }
    Ok(ChannelSet {
        cfg: SystemConfig {
            m: m_use,
            n: n_use,
            ..ch.cfg
        },
        seed: ch.seed,
        t: ch.t,
        uplink: ch
            .uplink
            .iter()
            .map(|h| h.view((0, 0), (n_use, m_use)).into_owned())
            .collect(),
        downlink: ch
            .downlink
            .iter()
            .map(|g| g.view((0, 0), (m_use, n_use)).into_owned())
            .collect(),
    })
}

/// Lift over `t` channel uses. The channel is quasi-static, so every slot
/// repeats the same realization: X becomes diag(X, ..., X).
pub fn symbol_extend(ch: &ChannelSet, t: usize) -> Result<ChannelSet> {
    if t == 0 {
        return Err(Error::InvalidArgument("extension factor must be >= 1".into()));
    }
    Ok(ChannelSet {
        cfg: SystemConfig {
            m: ch.cfg.m * t,
            n: ch.cfg.n * t,
            ..ch.cfg
        },
        seed: ch.seed,
        t: ch.t * t,
        uplink: ch.uplink.iter().map(|h| linalg::block_diag(h, t)).collect(),
        downlink: ch.downlink.iter().map(|g| linalg::block_diag(g, t)).collect(),
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExtensionSpec {
    pub t: u64,
    pub effective_m: u64,
    pub effective_n: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DeactivationSide {
    None,
    Relay,
    Source,
}

/// How to reach a corner point from a configuration.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExtensionPlan {
    /// Antennas kept per channel use; fractional when an extension is needed.
    pub m_use: RationalDof,
    pub n_use: RationalDof,
    pub side: DeactivationSide,
    pub ext: ExtensionSpec,
}

/// Default cap on the extension factor.
pub const DEFAULT_EXTENSION_CAP: u64 = 1024;

/// Plan the deactivation and symbol extension that place `cfg` exactly on
/// `target`. Above the corner the relay sheds antennas, below it the sources
/// do. `t` is the smallest factor that makes the effective antenna counts
/// integral and, for GSA corners, the per-pair stream count and the per-subset
/// row count integral too.
pub fn plan_extension(cfg: &SystemConfig, target: &CornerPoint, cap: u64) -> Result<ExtensionPlan> {
    cfg.validate()?;
    let ratio = cfg.ratio();
    let alpha = &target.abscissa;
    let (m_use, n_use, side) = if ratio >= *alpha {
        let n_use = alpha * &RationalDof::from(cfg.m);
        let side = if n_use < RationalDof::from(cfg.n) {
            DeactivationSide::Relay
        } else {
            DeactivationSide::None
        };
        (RationalDof::from(cfg.m), n_use, side)
    } else {
        (
            RationalDof::from(cfg.n) / alpha.clone(),
            RationalDof::from(cfg.n),
            DeactivationSide::Source,
        )
    };
    let too_big = || Error::ExtensionCap {
        t: u64::MAX,
        cap,
        ratio: alpha.clone(),
    };
    let base = crate::rational::lcm_u64(
        m_use.denom_u64().ok_or_else(too_big)?,
        n_use.denom_u64().ok_or_else(too_big)?,
    );
    let kk = cfg.k as u64;
    let pair_total = RationalDof::from(kk * (kk - 1));
    let mut t = base;
    loop {
        if t > cap {
            return Err(Error::ExtensionCap {
                t,
                cap,
                ratio: alpha.clone(),
            });
        }
        let tr = RationalDof::from(t);
        let eff_m = &m_use * &tr;
        let ok = if target.beta >= 2 {
            // x = (DoF/M) * M' / (K(K-1)), q = (K(K-1) x / 2) / C(K, beta)
            let x = &target.dof_per_m * &eff_m / pair_total.clone();
            let q = &pair_total * &x
                / (RationalDof::integer(2)
                    * RationalDof::from(binomial(kk, target.beta as u64)));
            x.is_integer() && q.is_integer()
        } else {
            true
        };
        if ok {
            let eff_n = &n_use * &tr;
            return Ok(ExtensionPlan {
                ext: ExtensionSpec {
                    t,
                    effective_m: eff_m.to_u64_exact().ok_or_else(too_big)?,
                    effective_n: eff_n.to_u64_exact().ok_or_else(too_big)?,
                },
                m_use,
                n_use,
                side,
            });
        }
        t += base;
    }
}

/// Random matrix with orthonormal columns, drawn from its own stream.
fn orthonormal_columns(seed: u64, index: u32, rows: usize, cols: usize) -> CMat {
    let g = StreamRng::new(seed, StreamKind::Combiner, index).gaussian_matrix(rows, cols);
    g.qr().q().columns(0, cols).into_owned()
}

/// Realize `plan` on a channel draw.
///
/// Without an extension this is plain prefix deactivation. With `t > 1`
/// the channel is lifted first and the deactivation is carried out in the
/// extended signal space by a fixed orthonormal combiner (relay: an
/// `N' x tN` row-orthonormal `S`, so `H <- S H`, `G <- G S^H`; sources: a
/// `tM x M'` column-orthonormal `T_i`, so `H_i <- H_i T_i`,
/// `G_i <- T_i^H G_i`). Dropping whole rows or columns of a block-diagonal
/// lift instead confines every left null vector to the fully kept slots,
/// which leaves too few independent directions for a full-rank compression
/// matrix.
pub fn apply_plan(ch: &ChannelSet, plan: &ExtensionPlan) -> Result<ChannelSet> {
    let t = plan.ext.t as usize;
    let eff_m = plan.ext.effective_m as usize;
    let eff_n = plan.ext.effective_n as usize;
    if t == 1 {
        return deactivate(ch, eff_m, eff_n);
    }
    let mut out = symbol_extend(ch, t)?;
    let full_m = out.cfg.m;
    let full_n = out.cfg.n;
    if eff_m > full_m || eff_n > full_n || eff_m == 0 || eff_n == 0 {
        return Err(Error::Dimension(format!(
            "plan keeps {eff_m}x{eff_n} of an extended {full_m}x{full_n} system"
        )));
    }
    let k = out.cfg.k;
    if eff_n < full_n {
        let s_adj = orthonormal_columns(ch.seed, k as u32, full_n, eff_n);
        let s = s_adj.adjoint();
        for h in out.uplink.iter_mut() {
            *h = &s * &*h;
        }
        for g in out.downlink.iter_mut() {
            *g = &*g * &s_adj;
        }
    }
    if eff_m < full_m {
        for i in 0..k {
            let tm = orthonormal_columns(ch.seed, i as u32, full_m, eff_m);
            out.uplink[i] = &out.uplink[i] * &tm;
            out.downlink[i] = tm.adjoint() * &out.downlink[i];
        }
    }
    out.cfg.m = eff_m;
    out.cfg.n = eff_n;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dof_bounds::corner_point;

    fn cfg(k: usize, m: usize, n: usize) -> SystemConfig {
        SystemConfig::new(k, m, n).unwrap()
    }

    #[test]
    fn sampling_is_deterministic() {
        let c = cfg(4, 3, 7);
        let a = sample_channels(&c, 11).unwrap();
        let b = sample_channels(&c, 11).unwrap();
        assert_eq!(a, b);
        let other = sample_channels(&c, 12).unwrap();
        assert_ne!(a.uplink[0], other.uplink[0]);
    }

    #[test]
    fn uplink_and_downlink_streams_differ() {
        let ch = sample_channels(&cfg(3, 2, 2), 5).unwrap();
        assert_ne!(ch.uplink[0], ch.downlink[0]);
        assert_ne!(ch.uplink[0], ch.uplink[1]);
    }

    #[test]
    fn mean_power_near_one() {
        let ch = sample_channels(&cfg(4, 3, 7), 1).unwrap();
        let (sum, count) = ch
            .uplink
            .iter()
            .chain(&ch.downlink)
            .flat_map(|m| m.iter())
            .fold((0.0, 0usize), |(s, c), z| (s + z.norm_sqr(), c + 1));
        assert_eq!(count, 4 * (7 * 3 + 3 * 7));
        let mean = sum / count as f64;
        assert!((0.8..=1.2).contains(&mean), "mean power {mean}");
    }

    #[test]
    fn full_rank_draws() {
        let ch = sample_channels(&cfg(3, 2, 4), 7).unwrap();
        for h in ch.uplink.iter().chain(&ch.downlink) {
            assert_eq!(linalg::rank(h, linalg::NULL_REL_TOL), 2);
        }
    }

    #[test]
    fn deactivation_shapes_and_identity() {
        let ch = sample_channels(&cfg(5, 4, 14), 3).unwrap();
        assert_eq!(deactivate(&ch, 4, 14).unwrap(), ch);
        let d = deactivate(&ch, 4, 13).unwrap();
        assert!(d.uplink.iter().all(|h| h.shape() == (13, 4)));
        assert!(d.downlink.iter().all(|g| g.shape() == (4, 13)));
        assert_eq!(d.cfg.n, 13);
        assert!(deactivate(&ch, 0, 3).is_err());
        assert!(deactivate(&ch, 5, 3).is_err());
        assert!(deactivate(&ch, 4, 15).is_err());
    }

    #[test]
    fn deactivation_composes() {
        let ch = sample_channels(&cfg(4, 4, 9), 2).unwrap();
        let twice = deactivate(&deactivate(&ch, 3, 8).unwrap(), 2, 6).unwrap();
        assert_eq!(twice, deactivate(&ch, 2, 6).unwrap());
    }

    #[test]
    fn extension_block_structure() {
        let ch = sample_channels(&cfg(5, 5, 11), 4).unwrap();
        assert_eq!(symbol_extend(&ch, 1).unwrap(), ch);
        let e = symbol_extend(&ch, 2).unwrap();
        assert_eq!(e.cfg, cfg(5, 10, 22));
        assert_eq!(e.t, 2);
        let h = &e.uplink[0];
        assert_eq!(h.shape(), (22, 10));
        assert_eq!(h.view((0, 0), (11, 5)), ch.uplink[0].view((0, 0), (11, 5)));
        assert_eq!(h.view((11, 5), (11, 5)), ch.uplink[0].view((0, 0), (11, 5)));
        assert!(h.view((0, 5), (11, 5)).iter().all(|z| z.norm() == 0.0));
        assert!(symbol_extend(&ch, 0).is_err());
    }

    #[test]
    fn extension_rank_is_additive() {
        let ch = sample_channels(&cfg(3, 2, 5), 9).unwrap();
        for t in 1..=4 {
            let e = symbol_extend(&ch, t).unwrap();
            for h in &e.uplink {
                assert_eq!(linalg::rank(h, linalg::NULL_REL_TOL), 2 * t);
            }
        }
    }

    #[test]
    fn deactivate_and_extend_commute() {
        let ch = sample_channels(&cfg(3, 3, 5), 6).unwrap();
        let (m_use, n_use, t) = (2, 4, 3);
        let a = symbol_extend(&deactivate(&ch, m_use, n_use).unwrap(), t).unwrap();
        let e = symbol_extend(&ch, t).unwrap();
        // Same antennas kept inside every slot of the lifted channel.
        let rows: Vec<usize> = (0..t).flat_map(|b| (0..n_use).map(move |r| b * 5 + r)).collect();
        let cols: Vec<usize> = (0..t).flat_map(|b| (0..m_use).map(move |c| b * 3 + c)).collect();
        for i in 0..3 {
            let h = e.uplink[i].select_rows(&rows).select_columns(&cols);
            assert_eq!(h, a.uplink[i]);
            let g = e.downlink[i].select_rows(&cols).select_columns(&rows);
            assert_eq!(g, a.downlink[i]);
        }
    }

    #[test]
    fn plan_examples() {
        let q2 = corner_point(5, 2).unwrap();
        let p = plan_extension(&cfg(5, 5, 12), &q2, DEFAULT_EXTENSION_CAP).unwrap();
        assert_eq!(p.side, DeactivationSide::Relay);
        assert_eq!((p.ext.t, p.ext.effective_m, p.ext.effective_n), (1, 5, 11));

        let p = plan_extension(&cfg(5, 1, 3), &q2, DEFAULT_EXTENSION_CAP).unwrap();
        assert_eq!(p.n_use, RationalDof::new(11, 5));
        assert_eq!((p.ext.t, p.ext.effective_m, p.ext.effective_n), (5, 5, 11));

        let q2k4 = corner_point(4, 2).unwrap();
        let p = plan_extension(&cfg(4, 3, 7), &q2k4, DEFAULT_EXTENSION_CAP).unwrap();
        assert_eq!(p.side, DeactivationSide::None);
        assert_eq!((p.ext.t, p.ext.effective_m, p.ext.effective_n), (1, 3, 7));

        // Below the corner the sources give up antennas: 6 / (7/3) = 18/7.
        let p = plan_extension(&cfg(4, 3, 6), &q2k4, DEFAULT_EXTENSION_CAP).unwrap();
        assert_eq!(p.side, DeactivationSide::Source);
        assert_eq!(p.m_use, RationalDof::new(18, 7));
        assert_eq!((p.ext.t, p.ext.effective_m, p.ext.effective_n), (7, 18, 42));
    }

    #[test]
    fn plan_respects_cap() {
        let q2 = corner_point(5, 2).unwrap();
        let err = plan_extension(&cfg(5, 1, 3), &q2, 4).unwrap_err();
        assert!(matches!(err, Error::ExtensionCap { .. }));
    }

    #[test]
    fn plan_effective_ratio_hits_corner() {
        for k in 4..=6 {
            for c in crate::dof_bounds::corner_points(k).unwrap() {
                for m in 1..=6 {
                    for n in 1..=(k * 6) {
                        let p = plan_extension(&cfg(k, m, n), &c, 1 << 20).unwrap();
                        let eff = RationalDof::new(p.ext.effective_n as i64, p.ext.effective_m as i64);
                        assert_eq!(eff, c.abscissa);
                        assert!(p.ext.effective_m <= p.ext.t * m as u64);
                        assert!(p.ext.effective_n <= p.ext.t * n as u64);
                    }
                }
            }
        }
    }

    #[test]
    fn applied_plan_shapes() {
        let q2 = corner_point(5, 2).unwrap();
        let c = cfg(5, 1, 3);
        let ch = sample_channels(&c, 4).unwrap();
        let p = plan_extension(&c, &q2, DEFAULT_EXTENSION_CAP).unwrap();
        let e = apply_plan(&ch, &p).unwrap();
        assert_eq!(e.cfg, cfg(5, 5, 11));
        assert_eq!(e.t, 5);
        e.check_shapes().unwrap();
        for h in &e.uplink {
            assert_eq!(linalg::rank(h, linalg::NULL_REL_TOL), 5);
        }
    }

    #[test]
    fn json_fixture_round_trip() {
        let ch = sample_channels(&cfg(3, 2, 3), 21).unwrap();
        let s = ch.to_json().unwrap();
        let v: serde_json::Value = serde_json::from_str(&s).unwrap();
        assert_eq!(v["cfg"]["k"], 3);
        assert_eq!(v["seed"], 21);
        assert_eq!(v["uplink"][0]["rows"], 3);
        assert_eq!(v["uplink"][0]["data"][0][0].as_f64().unwrap(), ch.uplink[0][(0, 0)].re);
        assert_eq!(v["uplink"][0]["data"][1][1].as_f64().unwrap(), ch.uplink[0][(0, 1)].im);
        assert_eq!(ChannelSet::from_json(&s).unwrap(), ch);
    }

    #[test]
    fn json_rejects_bad_shapes() {
        let ch = sample_channels(&cfg(3, 2, 3), 21).unwrap();
        let mut v: serde_json::Value = serde_json::from_str(&ch.to_json().unwrap()).unwrap();
        v["cfg"]["n"] = serde_json::json!(4);
        assert!(ChannelSet::from_json(&v.to_string()).is_err());
    }
}
