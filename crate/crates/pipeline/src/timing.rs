//! Stage latency accounting: nearest-rank percentiles per stage plus
//! end-to-end per-frame latency and the dropped-frame count.

use serde::Serialize;

#[derive(Debug, Clone, Serialize)]
pub struct StageStats {
    pub name: String,
    pub count: usize,
    pub p50_us: u64,
    pub p95_us: u64,
    pub max_us: u64,
}

#[derive(Debug, Clone, Serialize)]
pub struct TimingReport {
    pub stages: Vec<StageStats>,
    pub end_to_end: StageStats,
    pub dropped: u64,
}

impl TimingReport {
    pub fn render_text(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!(
            "{:<12} {:>8} {:>10} {:>10} {:>10}\n",
            "stage", "count", "p50_us", "p95_us", "max_us"
        ));
        for s in self.stages.iter().chain(std::iter::once(&self.end_to_end)) {
            out.push_str(&format!(
                "{:<12} {:>8} {:>10} {:>10} {:>10}\n",
                s.name, s.count, s.p50_us, s.p95_us, s.max_us
            ));
        }
        out.push_str(&format!("dropped frames: {}\n", self.dropped));
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialization cannot fail")
    }
}

/// Nearest-rank percentile: the q-quantile of the sorted samples.
fn percentile(sorted: &[u64], q: f64) -> u64 {
    if sorted.is_empty() {
        return 0;
    }
    let rank = (q * sorted.len() as f64).ceil() as usize;
    sorted[rank.clamp(1, sorted.len()) - 1]
}

/// Per-stage sample collector.
#[derive(Debug, Default)]
pub struct TimingCollector {
    stages: Vec<(String, Vec<u64>)>,
    end_to_end: Vec<u64>,
}

impl TimingCollector {
    pub fn new(stage_names: &[&str]) -> TimingCollector {
        TimingCollector {
            stages: stage_names.iter().map(|&n| (n.to_string(), Vec::new())).collect(),
            end_to_end: Vec::new(),
        }
    }

    pub fn record(&mut self, stage: usize, micros: u64) {
        self.stages[stage].1.push(micros);
    }

    pub fn record_end_to_end(&mut self, micros: u64) {
        self.end_to_end.push(micros);
    }

    pub fn report(&self, dropped: u64) -> TimingReport {
        let stats = |name: &str, samples: &[u64]| {
            let mut sorted = samples.to_vec();
            sorted.sort_unstable();
            StageStats {
                name: name.to_string(),
                count: sorted.len(),
                p50_us: percentile(&sorted, 0.50),
                p95_us: percentile(&sorted, 0.95),
                max_us: sorted.last().copied().unwrap_or(0),
            }
        };
        TimingReport {
            stages: self.stages.iter().map(|(n, s)| stats(n, s)).collect(),
            end_to_end: stats("end_to_end", &self.end_to_end),
            dropped,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn percentiles_are_ordered() {
        let mut c = TimingCollector::new(&["fuse"]);
        for v in [5, 1, 9, 3, 7, 2, 8, 4, 6, 10] {
            c.record(0, v);
            c.record_end_to_end(v * 2);
        }
        let r = c.report(3);
        let s = &r.stages[0];
        assert_eq!(s.count, 10);
        assert_eq!(s.p50_us, 5);
        assert_eq!(s.p95_us, 10);
        assert_eq!(s.max_us, 10);
        assert!(s.p50_us <= s.p95_us && s.p95_us <= s.max_us);
        assert_eq!(r.dropped, 3);
        assert_eq!(r.end_to_end.max_us, 20);
    }

    #[test]
    fn empty_collector_reports_zeros() {
        let c = TimingCollector::new(&["fuse"]);
        let r = c.report(0);
        assert_eq!(r.stages[0].count, 0);
        assert_eq!(r.stages[0].max_us, 0);
    }
}
