//! GPS nearest-neighbour assignment of dark images to daytime images of the same place.

use std::collections::HashSet;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const EARTH_RADIUS_M: f64 = 6_371_000.0;

/// Default acceptance radius, one sampling interval of the recordings.
pub const DEFAULT_MAX_DIST_M: f64 = 50.0;

/// WGS84 position with a timestamp in seconds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GpsFix {
    pub lat: f64,
    pub lon: f64,
    #[serde(default)]
    pub timestamp: f64,
}

impl GpsFix {
    pub fn new(lat: f64, lon: f64, timestamp: f64) -> Result<Self> {
        let fix = Self { lat, lon, timestamp };
        fix.validate()?;
        Ok(fix)
    }

    pub fn validate(&self) -> Result<()> {
        if !(-90.0..=90.0).contains(&self.lat) || !(-180.0..=180.0).contains(&self.lon) {
            return Err(Error::InvalidParameter(format!(
                "GPS fix out of range: lat={} lon={}",
                self.lat, self.lon
            )));
        }
        if !self.timestamp.is_finite() {
            return Err(Error::InvalidParameter("GPS timestamp is not finite".into()));
        }
        Ok(())
    }
}

/// Great-circle distance in metres.
pub fn haversine(a: &GpsFix, b: &GpsFix) -> f64 {
    let (phi1, phi2) = (a.lat.to_radians(), b.lat.to_radians());
    let dphi = (b.lat - a.lat).to_radians();
    let dlambda = (b.lon - a.lon).to_radians();
    let s = (dphi / 2.0).sin().powi(2) + phi1.cos() * phi2.cos() * (dlambda / 2.0).sin().powi(2);
    2.0 * EARTH_RADIUS_M * s.sqrt().min(1.0).asin()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Correspondence {
    pub query_id: String,
    pub day_id: String,
    pub distance_m: f64,
    pub matched: bool,
}

/// One entry per query, in query order.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct CorrespondenceTable {
    pub entries: Vec<Correspondence>,
}

impl CorrespondenceTable {
    pub fn get(&self, query_id: &str) -> Option<&Correspondence> {
        self.entries.iter().find(|e| e.query_id == query_id)
    }

    pub fn matched(&self) -> impl Iterator<Item = &Correspondence> {
        self.entries.iter().filter(|e| e.matched)
    }

    pub fn unmatched_count(&self) -> usize {
        self.entries.iter().filter(|e| !e.matched).count()
    }

    /// Fraction of queries with a match; 1 for an empty table.
    pub fn coverage(&self) -> f64 {
        if self.entries.is_empty() {
            1.0
        } else {
            1.0 - self.unmatched_count() as f64 / self.entries.len() as f64
        }
    }
}

// Slack on the latitude lower bound so rounding in the distance never prunes a tie.
const PRUNE_SLACK_M: f64 = 1e-6;

/// Matches every query to the nearest reference by great-circle distance.
///
/// Ties go to the earlier timestamp, then to the earlier reference in input order.
/// Queries farther than `max_dist` from every reference are kept but flagged unmatched.
/// The search visits references in latitude order and stops once the meridian distance
/// alone exceeds the best candidate, so the result equals an exhaustive scan.
pub fn match_nearest(
    queries: &[(String, GpsFix)],
    day_refs: &[(String, GpsFix)],
    max_dist: f64,
) -> Result<CorrespondenceTable> {
    if day_refs.is_empty() {
        return Err(Error::EmptyReferences);
    }
    if !(max_dist >= 0.0) {
        return Err(Error::InvalidParameter(format!("max_dist must be >= 0, got {max_dist}")));
    }
    let mut seen = HashSet::new();
    for (id, fix) in queries {
        if !seen.insert(id.as_str()) {
            return Err(Error::InvalidParameter(format!("duplicate query id {id:?}")));
        }
        fix.validate()?;
    }
    for (_, fix) in day_refs {
        fix.validate()?;
    }

    let mut order: Vec<usize> = (0..day_refs.len()).collect();
    order.sort_by(|&a, &b| day_refs[a].1.lat.total_cmp(&day_refs[b].1.lat).then(a.cmp(&b)));
    let lats: Vec<f64> = order.iter().map(|&i| day_refs[i].1.lat).collect();

    let entries = queries
        .par_iter()
        .map(|(qid, q)| {
            let start = lats.partition_point(|&l| l < q.lat);
            let mut best: Option<(f64, usize)> = None;
            let mut consider = |k: usize| -> bool {
                let idx = order[k];
                let bound = EARTH_RADIUS_M * (lats[k] - q.lat).abs().to_radians();
                if let Some((bd, _)) = best {
                    if bound > bd + PRUNE_SLACK_M {
                        return false;
                    }
                }
                let d = haversine(q, &day_refs[idx].1);
                if best.is_none_or(|(bd, bi)| better(d, idx, bd, bi, day_refs)) {
                    best = Some((d, idx));
                }
                true
            };
            let (mut up, mut down) = (start, start);
            let (mut up_open, mut down_open) = (true, true);
            while up_open || down_open {
                if up_open {
                    if up < lats.len() {
                        up_open = consider(up);
                        up += 1;
                    } else {
                        up_open = false;
                    }
                }
                if down_open {
                    if down > 0 {
                        down -= 1;
                        down_open = consider(down);
                    } else {
                        down_open = false;
                    }
                }
            }
            let (d, idx) = best.expect("references are non-empty");
            Correspondence {
                query_id: qid.clone(),
                day_id: day_refs[idx].0.clone(),
                distance_m: d,
                matched: d <= max_dist,
            }
        })
        .collect();
    Ok(CorrespondenceTable { entries })
}

/// Strict preference of candidate `(d, i)` over the incumbent `(bd, bi)`.
fn better(d: f64, i: usize, bd: f64, bi: usize, refs: &[(String, GpsFix)]) -> bool {
    if d != bd {
        return d < bd;
    }
    let (t, bt) = (refs[i].1.timestamp, refs[bi].1.timestamp);
    if t != bt {
        return t < bt;
    }
    i < bi
}

/// Sliding-window median of latitude and longitude; the window shrinks at the ends.
pub fn smooth_fixes(fixes: &[GpsFix], window: usize) -> Vec<GpsFix> {
    if window <= 1 || fixes.len() < 2 {
        return fixes.to_vec();
    }
    let half = window / 2;
    let median = |mut v: Vec<f64>| -> f64 {
        v.sort_by(f64::total_cmp);
        let n = v.len();
        if n % 2 == 1 {
            v[n / 2]
        } else {
            (v[n / 2 - 1] + v[n / 2]) / 2.0
        }
    };
    (0..fixes.len())
        .map(|i| {
            let lo = i.saturating_sub(half);
            let hi = (i + half + 1).min(fixes.len());
            let span = &fixes[lo..hi];
            GpsFix {
                lat: median(span.iter().map(|f| f.lat).collect()),
                lon: median(span.iter().map(|f| f.lon).collect()),
                timestamp: fixes[i].timestamp,
            }
        })
        .collect()
}
