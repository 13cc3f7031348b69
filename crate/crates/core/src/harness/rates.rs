use std::path::Path;

use crate::error::Result;
use crate::metrics::{rate_dsgd, rate_teleportation, RateEstimate};
use crate::topology::{ring_spectral_gap_closed_form, Family};
use crate::tuning::{candidate_ks, BoundInputs};

/// One evaluated bound. `method` is `dsgd` or `teleport`; for DSGD `k = n`.
#[derive(Debug, Clone, PartialEq)]
pub struct RateRow {
    pub method: &'static str,
    pub family: Family,
    pub n: usize,
    pub k: usize,
    pub gap: f64,
    pub rate: RateEstimate,
}

fn gap(family: Family, k: usize) -> Result<f64> {
    match family {
        Family::Ring => ring_spectral_gap_closed_form(k),
        Family::Complete => Ok(1.0),
        _ => Ok(family.build(k)?.spectral_gap()),
    }
}

/// Bound of DSGD on every family that supports `n`, and of teleportation
/// over ring and exponential graphs with the best power-of-two `k`.
/// `template.n` is replaced by each entry of `ns`.
pub fn rate_table(ns: &[usize], template: &BoundInputs) -> Result<Vec<RateRow>> {
    let mut rows = Vec::new();
    for &n in ns {
        let inputs = BoundInputs { n, ..*template };
        inputs.validate()?;
        for family in Family::ALL {
            if !family.supports(n) {
                continue;
            }
            let p = gap(family, n)?;
            rows.push(RateRow {
                method: "dsgd",
                family,
                n,
                k: n,
                gap: p,
                rate: rate_dsgd(&inputs, p)?,
            });
        }
        for family in [Family::Ring, Family::Exponential] {
            let mut best: Option<RateRow> = None;
            for k in candidate_ks(n)? {
                let p = gap(family, k)?;
                let rate = rate_teleportation(&inputs, k, p)?;
                if best.as_ref().is_none_or(|b| rate.total < b.rate.total) {
                    best = Some(RateRow {
                        method: "teleport",
                        family,
                        n,
                        k,
                        gap: p,
                        rate,
                    });
                }
            }
            rows.extend(best);
        }
    }
    Ok(rows)
}

pub fn write_rates(path: &Path, rows: &[RateRow]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record([
        "method", "topology", "n", "k", "gap", "term1", "term2", "term3", "total",
    ])?;
    for r in rows {
        w.write_record([
            r.method.to_string(),
            r.family.to_string(),
            r.n.to_string(),
            r.k.to_string(),
            r.gap.to_string(),
            r.rate.term1.to_string(),
            r.rate.term2.to_string(),
            r.rate.term3.to_string(),
            r.rate.total.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn teleport_row_no_worse_than_complete_dsgd_noise_term() {
        let template = BoundInputs {
            t: 10_000,
            sigma2: 1.0,
            zeta2: 1.0,
            l: 1.0,
            r0: 1.0,
            n: 0,
        };
        let rows = rate_table(&[16, 64], &template).unwrap();
        for n in [16, 64] {
            let ring = rows
                .iter()
                .find(|r| r.n == n && r.method == "dsgd" && r.family == Family::Ring)
                .unwrap();
            let tele = rows
                .iter()
                .find(|r| r.n == n && r.method == "teleport" && r.family == Family::Ring)
                .unwrap();
            assert!(tele.rate.total <= ring.rate.total);
        }
        assert!(rows.iter().any(|r| r.family == Family::Torus && r.n == 16));
        assert!(!rows.iter().any(|r| r.family == Family::Torus && r.n == 32));
    }
}
