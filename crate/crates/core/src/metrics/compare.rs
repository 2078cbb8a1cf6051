use serde::Serialize;

use super::{MetricsError, PathMetrics};

/// Everything measured for one run that enters the comparison tables.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunSummary {
    pub metrics: PathMetrics,
    pub deviation: Option<DeviationStats>,
    pub energy: Option<EnergyStats>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DeviationStats {
    pub max: f64,
    pub min: f64,
    pub mean: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EnergyStats {
    /// J.
    pub total: f64,
    /// J.
    pub servo: f64,
    /// g.
    pub material: f64,
    /// g.
    pub carbon: f64,
    /// m/s^2, combined over axes.
    pub rms_acceleration: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonRow {
    pub table: &'static str,
    pub key: &'static str,
    pub metric: &'static str,
    pub before: f64,
    pub after: f64,
    /// `(after - before) / before * 100`; `None` when undefined.
    pub ratio_percent: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonReport {
    pub rows: Vec<ComparisonRow>,
}

/// Signed percentage change. Equal values give 0 (also when both are 0);
/// any other change from 0 is undefined.
pub fn ratio_percent(before: f64, after: f64) -> Option<f64> {
    if before == after {
        Some(0.0)
    } else if before == 0.0 || !before.is_finite() || !after.is_finite() {
        None
    } else {
        Some((after - before) / before * 100.0)
    }
}

pub fn compare(before: &RunSummary, after: &RunSummary) -> ComparisonReport {
    let mut rows = Vec::new();
    let mut push = |table, key, metric, b: f64, a: f64| {
        rows.push(ComparisonRow { table, key, metric, before: b, after: a, ratio_percent: ratio_percent(b, a) });
    };
    let (b, a) = (&before.metrics, &after.metrics);
    push("table1", "l_total", "Total toolpath length L_total (mm)", b.l_total, a.l_total);
    push("table1", "n_total", "Amount of toolpath points n_total", b.n_total as f64, a.n_total as f64);
    push("table1", "l_infill", "Length of infill toolpath L_infill (mm)", b.l_infill, a.l_infill);
    push("table1", "n_infill", "Amount of infill points n_infill", b.n_infill as f64, a.n_infill as f64);
    push("table1", "n_turning", "Amount of turning points n_turning", b.n_turning as f64, a.n_turning as f64);
    push(
        "table1",
        "mean_chord_error",
        "Mean value of chord error mean(e_c) (mm)",
        b.mean_chord_error,
        a.mean_chord_error,
    );
    if let (Some(b), Some(a)) = (&before.deviation, &after.deviation) {
        push("table2", "max_deviation", "Maximal toolpath deviation (mm)", b.max, a.max);
        push("table2", "min_deviation", "Minimal toolpath deviation (mm)", b.min, a.min);
        push("table2", "mean_deviation", "Mean toolpath deviation (mm)", b.mean, a.mean);
    }
    if let (Some(b), Some(a)) = (&before.energy, &after.energy) {
        push("table2", "total_energy", "Total energy consumption E (J)", b.total, a.total);
        push("table2", "material", "Material consumption m_mater (g)", b.material, a.material);
        push("table2", "carbon_emission", "Carbon emission m_CO2 (g)", b.carbon, a.carbon);
        push("table2", "servo_energy", "Servo energy E_servo (J)", b.servo, a.servo);
        push("table2", "rms_acceleration", "RMS table acceleration (m/s^2)", b.rms_acceleration, a.rms_acceleration);
    }
    ComparisonReport { rows }
}

impl ComparisonReport {
    pub fn row(&self, key: &str) -> Option<&ComparisonRow> {
        self.rows.iter().find(|r| r.key == key)
    }

    pub fn is_zero(&self) -> bool {
        self.rows.iter().all(|r| r.ratio_percent == Some(0.0))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn to_csv(&self) -> Result<String, MetricsError> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["table", "key", "metric", "before", "after", "ratio_percent"])?;
        for r in &self.rows {
            let ratio = r.ratio_percent.map_or_else(|| "undefined".to_string(), |v| format!("{v:.4}"));
            w.write_record([r.table, r.key, r.metric, &r.before.to_string(), &r.after.to_string(), &ratio])?;
        }
        let bytes = w.into_inner().map_err(|e| MetricsError::Csv(e.to_string()))?;
        Ok(String::from_utf8(bytes).expect("csv is utf-8"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn metrics(l: f64) -> PathMetrics {
        PathMetrics {
            l_total: l,
            l_infill: l / 2.0,
            layer_lengths: vec![l],
            n_total: 10,
            n_infill: 5,
            n_turning: 0,
            n_noncollinear: 0,
            layer_mean_angle: vec![None],
            mean_chord_error: 0.1,
            chord_triples: 8,
        }
    }

    #[test]
    fn ratios() {
        assert!((ratio_percent(17256.96, 14741.66).unwrap() + 14.576).abs() < 1e-3);
        assert_eq!(ratio_percent(100.0, 50.0), Some(-50.0));
        assert_eq!(ratio_percent(0.0, 1.0), None);
        assert_eq!(ratio_percent(0.0, 0.0), Some(0.0));
    }

    #[test]
    fn self_comparison_is_zero() {
        let s = RunSummary {
            metrics: metrics(100.0),
            deviation: Some(DeviationStats { max: 1.0, min: 0.0, mean: 0.5 }),
            energy: None,
        };
        let r = compare(&s, &s);
        assert!(r.is_zero());
        assert_eq!(r.rows.len(), 9);
        let csv = r.to_csv().unwrap();
        assert!(csv.starts_with("table,key,metric,before,after,ratio_percent\n"));
    }

    #[test]
    fn undefined_ratio_renders_as_text() {
        let mut b = metrics(100.0);
        b.n_turning = 0;
        let mut a = metrics(100.0);
        a.n_turning = 3;
        let r = compare(
            &RunSummary { metrics: b, deviation: None, energy: None },
            &RunSummary { metrics: a, deviation: None, energy: None },
        );
        assert_eq!(r.row("n_turning").unwrap().ratio_percent, None);
        assert!(r.to_csv().unwrap().contains("undefined"));
    }
}
