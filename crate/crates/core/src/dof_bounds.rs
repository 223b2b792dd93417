//! Exact DoF upper bound and best-known achievable DoF for the K-user MIMO
//! Y channel.
//!
//! Both curves are homogeneous in (M, N), so they are evaluated as functions
//! of the ratio N/M and scaled by M. All arithmetic is exact.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::config::SystemConfig;
use crate::error::{Error, Result};
use crate::rational::{binomial, RationalDof};

/// Which branch of the piecewise upper bound contains N/M.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", content = "beta", rename_all = "kebab-case")]
pub enum RegimeLabel {
    /// DoF limited by 2N.
    RelayLimited2N,
    /// Flat segment ending at N/M = beta.
    PlateauBeta(u32),
    /// Sloped segment starting at N/M = beta.
    SlopeBeta(u32),
    /// Saturated at KM.
    SourceLimitedKM,
}

impl RegimeLabel {
    pub fn beta(&self) -> Option<u32> {
        match self {
            RegimeLabel::PlateauBeta(b) | RegimeLabel::SlopeBeta(b) => Some(*b),
            _ => None,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            RegimeLabel::RelayLimited2N => "relay-limited",
            RegimeLabel::PlateauBeta(_) => "plateau",
            RegimeLabel::SlopeBeta(_) => "slope",
            RegimeLabel::SourceLimitedKM => "source-limited",
        }
    }
}

impl fmt::Display for RegimeLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.beta() {
            Some(b) => write!(f, "{} (beta={})", self.kind(), b),
            None => f.write_str(self.kind()),
        }
    }
}

/// An exactly achievable (N/M, DoF/M) point of the GSA construction.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CornerPoint {
    pub abscissa: RationalDof,
    pub dof_per_m: RationalDof,
    /// 1 for the 2N-limited corner, otherwise the subset size beta.
    pub beta: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GapReport {
    pub upper: RationalDof,
    pub achievable: RationalDof,
    pub tight: bool,
    pub regime: RegimeLabel,
}

fn r(n: i64) -> RationalDof {
    RationalDof::integer(n)
}

fn check_k(k: usize) -> Result<i64> {
    if k < 3 {
        return Err(Error::InvalidConfig(format!(
            "K = {k} but the Y channel needs K >= 3"
        )));
    }
    Ok(k as i64)
}

/// Right end of the 2N-limited branch: (2K^2 - 2K)/(K^2 - K + 2).
pub fn relay_limited_end(k: usize) -> RationalDof {
    let t = (k * (k - 1)) as i64;
    RationalDof::new(2 * t, t + 2)
}

/// Left end of the plateau branch for `beta`.
pub fn plateau_start(k: usize, beta: u32) -> RationalDof {
    let t = (k * (k - 1)) as i64;
    let b = beta as i64;
    RationalDof::new(b * (t + (b - 1) * (b - 2)), t + b * (b - 1))
}

/// Right end of the slope branch for `beta`.
pub fn slope_end(k: usize, beta: u32) -> RationalDof {
    let t = (k * (k - 1)) as i64;
    let b = beta as i64;
    RationalDof::new((b + 1) * (t + b * (b - 1)), t + (b + 1) * b)
}

/// Left end of the KM branch: (K^2 - 3K + 3)/(K - 1).
pub fn saturation_start(k: usize) -> RationalDof {
    let k = k as i64;
    RationalDof::new(k * k - 3 * k + 3, k - 1)
}

/// Evaluate the upper bound's closed form for one regime at ratio `ratio`,
/// normalized by M.
pub fn regime_formula_per_m(k: usize, regime: RegimeLabel, ratio: &RationalDof) -> RationalDof {
    let t = (k * (k - 1)) as i64;
    match regime {
        RegimeLabel::RelayLimited2N => r(2) * ratio,
        RegimeLabel::PlateauBeta(b) => {
            let b = b as i64;
            RationalDof::new(2 * b * t, t + b * (b - 1))
        }
        RegimeLabel::SlopeBeta(b) => {
            let b = b as i64;
            RationalDof::new(2 * t, t + b * (b - 1)) * ratio
        }
        RegimeLabel::SourceLimitedKM => r(k as i64),
    }
}

/// Branch of the upper bound containing `ratio` (left-open, right-closed
/// intervals; an endpoint belongs to the branch it closes).
pub fn regime_of_ratio(k: usize, ratio: &RationalDof) -> Result<RegimeLabel> {
    check_k(k)?;
    if !ratio.is_positive() {
        return Err(Error::InvalidArgument(format!(
            "antenna ratio must be positive, got {ratio}"
        )));
    }
    if *ratio <= relay_limited_end(k) {
        return Ok(RegimeLabel::RelayLimited2N);
    }
    for beta in 2..=(k as u32).saturating_sub(2) {
        if *ratio <= r(beta as i64) {
            return Ok(RegimeLabel::PlateauBeta(beta));
        }
        if *ratio <= slope_end(k, beta) {
            return Ok(RegimeLabel::SlopeBeta(beta));
        }
    }
    Ok(RegimeLabel::SourceLimitedKM)
}

/// Upper bound divided by M, as a function of N/M.
pub fn upper_bound_per_m(k: usize, ratio: &RationalDof) -> Result<RationalDof> {
    let regime = regime_of_ratio(k, ratio)?;
    Ok(regime_formula_per_m(k, regime, ratio))
}

/// Total-DoF upper bound for `cfg`.
pub fn upper_bound(cfg: &SystemConfig) -> Result<RationalDof> {
    cfg.validate()?;
    Ok(upper_bound_per_m(cfg.k, &cfg.ratio())? * RationalDof::from(cfg.m))
}

pub fn regime_of(cfg: &SystemConfig) -> Result<RegimeLabel> {
    cfg.validate()?;
    regime_of_ratio(cfg.k, &cfg.ratio())
}

/// Corner point for subset size `beta` (2 <= beta <= K-2).
pub fn corner_point(k: usize, beta: u32) -> Result<CornerPoint> {
    let kk = check_k(k)?;
    if beta < 2 || beta as usize > k - 2 {
        return Err(Error::InvalidArgument(format!(
            "beta = {beta} outside 2..={} for K = {k}",
            k - 2
        )));
    }
    let t = kk * (kk - 1);
    let b = beta as i64;
    let denom = 2 + t - b * (b - 1);
    let c = RationalDof::from(binomial(k as u64, beta as u64));
    let abscissa = r(b) + r(2 * t) / (r(denom) * c);
    Ok(CornerPoint {
        abscissa,
        dof_per_m: RationalDof::new(4 * t, denom),
        beta,
    })
}

/// Q_1 followed by Q_beta for beta = 2..=K-2.
pub fn corner_points(k: usize) -> Result<Vec<CornerPoint>> {
    let kk = check_k(k)?;
    let t = kk * (kk - 1);
    let mut out = vec![CornerPoint {
        abscissa: RationalDof::new(2 * t, t + 2),
        dof_per_m: RationalDof::new(4 * t, t + 2),
        beta: 1,
    }];
    for beta in 2..=(k as u32 - 2) {
        out.push(corner_point(k, beta)?);
    }
    Ok(out)
}

/// DoF/M that one corner yields at ratio N/M after antenna deactivation:
/// full value at or above the corner, scaled by ratio/abscissa below it.
pub fn corner_contribution(corner: &CornerPoint, ratio: &RationalDof) -> RationalDof {
    if *ratio >= corner.abscissa {
        corner.dof_per_m.clone()
    } else {
        &corner.dof_per_m * ratio / &corner.abscissa
    }
}

/// Achievable DoF/M at ratio N/M: upper envelope of all corner contributions.
/// Also returns the beta of the corner attaining it (lowest beta on ties).
pub fn achievable_per_m(k: usize, ratio: &RationalDof) -> Result<(RationalDof, u32)> {
    if !ratio.is_positive() {
        return Err(Error::InvalidArgument(format!(
            "antenna ratio must be positive, got {ratio}"
        )));
    }
    let mut best: Option<(RationalDof, u32)> = None;
    for c in corner_points(k)? {
        let v = corner_contribution(&c, ratio);
        if best.as_ref().is_none_or(|(b, _)| v > *b) {
            best = Some((v, c.beta));
        }
    }
    Ok(best.expect("corner list is never empty"))
}

pub fn achievable_dof(cfg: &SystemConfig) -> Result<RationalDof> {
    cfg.validate()?;
    Ok(achievable_per_m(cfg.k, &cfg.ratio())?.0 * RationalDof::from(cfg.m))
}

pub fn gap_report(cfg: &SystemConfig) -> Result<GapReport> {
    let upper = upper_bound(cfg)?;
    let achievable = achievable_dof(cfg)?;
    Ok(GapReport {
        tight: upper == achievable,
        regime: regime_of(cfg)?,
        upper,
        achievable,
    })
}

/// Ratios where the upper bound changes branch, ascending.
pub fn upper_breakpoints(k: usize) -> Vec<RationalDof> {
    let mut out = vec![relay_limited_end(k)];
    for beta in 2..=(k as u32).saturating_sub(2) {
        out.push(r(beta as i64));
        out.push(slope_end(k, beta));
    }
    if k == 3 {
        // The relay-limited end already equals the saturation start.
        debug_assert_eq!(out[0], saturation_start(k));
    }
    out
}

/// Ratios where the achievable envelope can bend: every corner abscissa and
/// every point where one corner's plateau meets another's slope. Ascending,
/// deduplicated; not every candidate is a true kink.
pub fn achievable_breakpoint_candidates(k: usize) -> Result<Vec<RationalDof>> {
    let corners = corner_points(k)?;
    let mut out: Vec<RationalDof> = corners.iter().map(|c| c.abscissa.clone()).collect();
    for a in &corners {
        for b in &corners {
            if b.dof_per_m > a.dof_per_m {
                out.push(&a.dof_per_m * &b.abscissa / &b.dof_per_m);
            }
        }
    }
    out.sort();
    out.dedup();
    Ok(out)
}

/// Ratios where the achievable envelope actually changes slope.
pub fn achievable_kinks(k: usize) -> Result<Vec<RationalDof>> {
    let cands = achievable_breakpoint_candidates(k)?;
    // Half the smallest gap keeps each probe inside one linear piece.
    let mut delta = cands[0].clone() / r(2);
    for w in cands.windows(2) {
        let gap = (&w[1] - &w[0]) / r(2);
        if gap < delta {
            delta = gap;
        }
    }
    let mut kinks = Vec::new();
    for c in cands {
        let lo = &c - &delta;
        let hi = &c + &delta;
        let f = |x: &RationalDof| achievable_per_m(k, x).map(|v| v.0);
        let left = (f(&c)? - f(&lo)?) / delta.clone();
        let right = (f(&hi)? - f(&c)?) / delta.clone();
        if left != right {
            kinks.push(c);
        }
    }
    Ok(kinks)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(k: usize, m: usize, n: usize) -> SystemConfig {
        SystemConfig::new(k, m, n).unwrap()
    }

    fn q(n: i64, d: i64) -> RationalDof {
        RationalDof::new(n, d)
    }

    /// Independent oracle: every branch as an explicit (lo, hi] interval with
    /// its formula; exactly one must contain the ratio.
    fn upper_by_interval_scan(k: usize, ratio: &RationalDof) -> (RationalDof, RegimeLabel) {
        let kk = k as i64;
        let t = kk * (kk - 1);
        let mut hits = Vec::new();
        // (0, 2T/(T+2)]
        if ratio > &r(0) && *ratio <= q(2 * t, t + 2) {
            hits.push((r(2) * ratio, RegimeLabel::RelayLimited2N));
        }
        for b in 2..=(kk - 2) {
            let lo = q(b * (t + (b - 1) * (b - 2)), t + b * (b - 1));
            if *ratio > lo && *ratio <= r(b) {
                hits.push((q(2 * b * t, t + b * (b - 1)), RegimeLabel::PlateauBeta(b as u32)));
            }
            let hi = q((b + 1) * (t + b * (b - 1)), t + (b + 1) * b);
            if *ratio > r(b) && *ratio <= hi {
                hits.push((q(2 * t, t + b * (b - 1)) * ratio, RegimeLabel::SlopeBeta(b as u32)));
            }
        }
        if *ratio > q(kk * kk - 3 * kk + 3, kk - 1) {
            hits.push((r(kk), RegimeLabel::SourceLimitedKM));
        }
        assert_eq!(hits.len(), 1, "ratio {ratio} hit {} branches", hits.len());
        hits.pop().unwrap()
    }

    #[test]
    fn upper_bound_examples() {
        assert_eq!(upper_bound(&cfg(3, 2, 2)).unwrap(), r(4));
        assert_eq!(upper_bound(&cfg(5, 4, 4)).unwrap(), r(8));
        assert_eq!(upper_bound(&cfg(5, 10, 21)).unwrap(), q(420, 11));
        assert_eq!(upper_bound(&cfg(5, 4, 100)).unwrap(), r(20));
    }

    #[test]
    fn upper_bound_matches_interval_scan() {
        for k in 3..=9 {
            for m in 1..=12 {
                for n in 1..=60 {
                    let c = cfg(k, m, n);
                    let (per_m, regime) = upper_by_interval_scan(k, &c.ratio());
                    assert_eq!(upper_bound(&c).unwrap(), per_m * RationalDof::from(m));
                    assert_eq!(regime_of(&c).unwrap(), regime, "{c:?}");
                }
            }
        }
    }

    #[test]
    fn regime_examples() {
        assert_eq!(regime_of(&cfg(5, 10, 21)).unwrap(), RegimeLabel::SlopeBeta(2));
        assert_eq!(regime_of(&cfg(5, 1, 1)).unwrap(), RegimeLabel::RelayLimited2N);
        // 13/4 is the closing endpoint of the beta=3 slope branch.
        assert_eq!(regime_of(&cfg(5, 4, 13)).unwrap(), RegimeLabel::SlopeBeta(3));
        assert_eq!(regime_of(&cfg(5, 4, 14)).unwrap(), RegimeLabel::SourceLimitedKM);
        assert_eq!(regime_of(&cfg(5, 1, 2)).unwrap(), RegimeLabel::PlateauBeta(2));
        assert_eq!(regime_of(&cfg(5, 1, 3)).unwrap(), RegimeLabel::PlateauBeta(3));
    }

    #[test]
    fn continuity_at_breakpoints() {
        for k in 3..=12 {
            let ks = k as u32;
            let e0 = relay_limited_end(k);
            let first_right = if k >= 4 {
                RegimeLabel::PlateauBeta(2)
            } else {
                RegimeLabel::SourceLimitedKM
            };
            assert_eq!(
                regime_formula_per_m(k, RegimeLabel::RelayLimited2N, &e0),
                regime_formula_per_m(k, first_right, &e0),
                "K={k} at {e0}"
            );
            for beta in 2..=ks.saturating_sub(2) {
                let at = r(beta as i64);
                assert_eq!(
                    regime_formula_per_m(k, RegimeLabel::PlateauBeta(beta), &at),
                    regime_formula_per_m(k, RegimeLabel::SlopeBeta(beta), &at)
                );
                let end = slope_end(k, beta);
                let next = if beta + 2 < ks {
                    assert_eq!(end, plateau_start(k, beta + 1));
                    RegimeLabel::PlateauBeta(beta + 1)
                } else {
                    assert_eq!(end, saturation_start(k));
                    RegimeLabel::SourceLimitedKM
                };
                assert_eq!(
                    regime_formula_per_m(k, RegimeLabel::SlopeBeta(beta), &end),
                    regime_formula_per_m(k, next, &end)
                );
            }
            if k >= 4 {
                assert_eq!(plateau_start(k, 2), e0);
            }
        }
    }

    #[test]
    fn corner_examples() {
        let c5 = corner_points(5).unwrap();
        assert_eq!(c5[0].abscissa, q(20, 11));
        assert_eq!(c5[0].dof_per_m, q(40, 11));
        assert_eq!((c5[1].abscissa.clone(), c5[1].dof_per_m.clone()), (q(11, 5), r(4)));
        assert_eq!((c5[2].abscissa.clone(), c5[2].dof_per_m.clone()), (q(13, 4), r(5)));
        let c4 = corner_points(4).unwrap();
        assert_eq!(c4.len(), 2);
        assert_eq!((c4[1].abscissa.clone(), c4[1].dof_per_m.clone()), (q(7, 3), r(4)));
        assert_eq!(corner_points(3).unwrap().len(), 1);
        assert!(corner_points(2).is_err());
    }

    #[test]
    fn named_corners_match_closed_forms() {
        for k in 4..=15i64 {
            let cs = corner_points(k as usize).unwrap();
            let q2 = &cs[1];
            assert_eq!(q2.abscissa, r(2) + q(4, k * (k - 1)));
            assert_eq!(q2.dof_per_m, r(4));
            let last = cs.last().unwrap();
            assert_eq!(last.abscissa, q(k * k - 3 * k + 3, k - 1));
            assert_eq!(last.dof_per_m, r(k));
            for c in &cs[1..] {
                let b = c.beta as i64;
                assert!(c.abscissa >= r(b) && c.abscissa <= r(b + 1));
            }
        }
    }

    #[test]
    fn achievable_examples() {
        assert_eq!(achievable_dof(&cfg(5, 10, 21)).unwrap(), q(420, 11));
        assert_eq!(achievable_dof(&cfg(5, 4, 12)).unwrap(), q(240, 13));
        assert_eq!(achievable_dof(&cfg(5, 1, 100)).unwrap(), r(5));
    }

    #[test]
    fn gap_examples() {
        for m in 1..=10 {
            for n in 1..=40 {
                assert!(gap_report(&cfg(4, m, n)).unwrap().tight, "K=4 M={m} N={n}");
            }
        }
        let g = gap_report(&cfg(5, 4, 11)).unwrap();
        assert!(!g.tight);
        assert!(g.achievable < g.upper);
        assert!(gap_report(&cfg(5, 5, 11)).unwrap().tight);
    }

    #[test]
    fn achievable_matches_piecewise_listing_k_gt_4() {
        // Closed forms for the regions where the envelope is listed piecewise.
        for k in 5..=9i64 {
            let t = k * (k - 1);
            for m in 1..=8 {
                for n in 1..=(k as usize * 8 + 8) {
                    let c = cfg(k as usize, m, n);
                    let x = c.ratio();
                    let ach = achievable_dof(&c).unwrap();
                    let (mm, nn) = (RationalDof::from(m), RationalDof::from(n));
                    let expect = if x <= q(2 * t, t + 2) {
                        Some(r(2) * &nn)
                    } else if x <= r(2) {
                        Some(q(4 * t, t + 2) * &mm)
                    } else if x <= r(2) + q(4, t) {
                        Some(q(2 * t, t + 2) * &nn)
                    } else if x > r(k - 2) && x <= q(k * k - 3 * k + 3, k - 1) {
                        Some(q(t, k * k - 3 * k + 3) * &nn)
                    } else if x > q(k * k - 3 * k + 3, k - 1) {
                        Some(r(k) * &mm)
                    } else {
                        None
                    };
                    if let Some(e) = expect {
                        assert_eq!(ach, e, "{c:?}");
                    }
                }
            }
        }
    }

    #[test]
    fn kinks_for_k5() {
        assert_eq!(
            upper_breakpoints(5),
            vec![q(20, 11), r(2), q(33, 13), r(3), q(13, 4)]
        );
        assert_eq!(
            achievable_kinks(5).unwrap(),
            vec![q(20, 11), r(2), q(11, 5), q(13, 5), q(13, 4)]
        );
    }
}
