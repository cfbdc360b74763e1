use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{RoadType, Scenario, FRAME_DT};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanStd {
    pub mean: f64,
    pub std: f64,
}

impl MeanStd {
    /// Population statistics.
    pub fn of(values: &[f64]) -> Self {
        let n = values.len().max(1) as f64;
        let mean = values.iter().fold(0.0, |a, v| a + v) / n;
        let var = values.iter().fold(0.0, |a, v| a + (v - mean).powi(2)) / n;
        Self {
            mean,
            std: var.sqrt(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoadTypeRow {
    pub road_type: RoadType,
    pub count: usize,
    pub percentage: f64,
    pub length_s: MeanStd,
    pub cav_count: MeanStd,
    pub vehicles: MeanStd,
    pub traffic_speed_kmh: MeanStd,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetStats {
    pub scenarios: usize,
    pub frames: usize,
    pub rows: Vec<RoadTypeRow>,
    pub cav_count: MeanStd,
    pub vehicles: MeanStd,
    pub traffic_speed_kmh: MeanStd,
    pub length_s: MeanStd,
}

/// Per-road-type summary of a scenario set.
pub fn dataset_stats(scenarios: &[Scenario]) -> Result<DatasetStats> {
    if scenarios.is_empty() {
        return Err(Error::InvalidInput("no scenarios to summarize".into()));
    }
    let mut groups: BTreeMap<RoadType, Vec<&Scenario>> = BTreeMap::new();
    for s in scenarios {
        groups.entry(s.config.road_type).or_default().push(s);
    }
    let col = |set: &[&Scenario], f: &dyn Fn(&Scenario) -> f64| -> MeanStd {
        MeanStd::of(&set.iter().map(|s| f(s)).collect::<Vec<_>>())
    };
    let cavs = |s: &Scenario| s.config.n_cavs as f64;
    let vehicles = |s: &Scenario| s.config.n_vehicles as f64;
    let speed = |s: &Scenario| s.config.traffic_speed_kmh;
    let length = |s: &Scenario| s.config.duration_frames as f64 * FRAME_DT;
    let rows = groups
        .iter()
        .map(|(rt, set)| RoadTypeRow {
            road_type: *rt,
            count: set.len(),
            percentage: 100.0 * set.len() as f64 / scenarios.len() as f64,
            length_s: col(set, &length),
            cav_count: col(set, &cavs),
            vehicles: col(set, &vehicles),
            traffic_speed_kmh: col(set, &speed),
        })
        .collect();
    let all: Vec<&Scenario> = scenarios.iter().collect();
    Ok(DatasetStats {
        scenarios: scenarios.len(),
        frames: scenarios.iter().map(|s| s.frames.len()).sum(),
        rows,
        cav_count: col(&all, &cavs),
        vehicles: col(&all, &vehicles),
        traffic_speed_kmh: col(&all, &speed),
        length_s: col(&all, &length),
    })
}

impl DatasetStats {
    pub fn to_table(&self) -> String {
        let mut out = String::from(
            "road type            pct     length(s)      CAVs          vehicles       speed(km/h)\n",
        );
        let fmt = |m: &MeanStd| format!("{:6.2}/{:<6.2}", m.mean, m.std);
        for r in &self.rows {
            out.push_str(&format!(
                "{:<20} {:6.1}  {}  {}  {}  {}\n",
                r.road_type.name(),
                r.percentage,
                fmt(&r.length_s),
                fmt(&r.cav_count),
                fmt(&r.vehicles),
                fmt(&r.traffic_speed_kmh)
            ));
        }
        out.push_str(&format!(
            "{:<20} {:6.1}  {}  {}  {}  {}\n",
            "overall",
            100.0,
            fmt(&self.length_s),
            fmt(&self.cav_count),
            fmt(&self.vehicles),
            fmt(&self.traffic_speed_kmh)
        ));
        out
    }
}
