//! Report rendering: the test table in text/CSV/JSON and the NNCT with its
//! row- and column-percentage panels.

use serde::Serialize;

use segpoint_core::moments::MomentModel;
use segpoint_core::nnct::Nnct;
use segpoint_core::stat_tests::{TestKind, TestReport};

/// Statistics are displayed rounded to 2 decimals; p-values to 4, with
/// values below 1e-4 shown as `<.0001`. Full precision is kept internally
/// and in JSON output.
pub fn format_p(p: f64) -> String {
    if p < 1e-4 {
        "<.0001".to_string()
    } else {
        format!("{:.4}", p)
    }
}

fn test_label(kind: TestKind, class_names: &[String]) -> String {
    match kind {
        TestKind::Overall => "overall".to_string(),
        TestKind::Base(i) => format!("base {}", class_names[i]),
        TestKind::NnClass(j) => format!("nn {}", class_names[j]),
    }
}

/// Provenance stamp carried by every report.
#[derive(Debug, Clone, Serialize)]
pub struct Provenance {
    pub tool: String,
    pub version: String,
    pub seed: Option<u64>,
    pub spec_hash: String,
}

impl Provenance {
    pub fn new(seed: Option<u64>, spec_hash: String) -> Self {
        Self {
            tool: "segpoint".into(),
            version: env!("CARGO_PKG_VERSION").into(),
            seed,
            spec_hash,
        }
    }

    pub fn header_line(&self) -> String {
        format!(
            "segpoint {} | seed: {} | spec-hash: {}",
            self.version,
            self.seed.map_or("-".into(), |s| s.to_string()),
            self.spec_hash
        )
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ReportRow {
    pub test: String,
    pub statistic: f64,
    pub df: usize,
    pub p_asy: f64,
    pub p_mc: Option<f64>,
    pub p_rand: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct AnalysisReport {
    pub provenance: Provenance,
    pub n: u64,
    pub classes: Vec<String>,
    pub q_shared: u64,
    pub r_reflexive: u64,
    pub rows: Vec<ReportRow>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub notes: Option<Vec<String>>,
}

impl AnalysisReport {
    pub fn build(
        provenance: Provenance,
        class_names: &[String],
        moments: &MomentModel,
        reports: &[TestReport],
        notes: Vec<String>,
    ) -> Self {
        Self {
            provenance,
            n: moments.n() as u64,
            classes: class_names.to_vec(),
            q_shared: moments.q_shared(),
            r_reflexive: moments.r_reflexive(),
            rows: reports
                .iter()
                .map(|r| ReportRow {
                    test: test_label(r.kind, class_names),
                    statistic: r.statistic,
                    df: r.df,
                    p_asy: r.p_asy,
                    p_mc: r.p_mc,
                    p_rand: r.p_rand,
                })
                .collect(),
            notes: if notes.is_empty() { None } else { Some(notes) },
        }
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        out.push_str(&self.provenance.header_line());
        out.push('\n');
        out.push_str(&format!(
            "n = {} | classes: {} | Q = {} | R = {}\n\n",
            self.n,
            self.classes.join(", "),
            self.q_shared,
            self.r_reflexive
        ));
        let label_width = self
            .rows
            .iter()
            .map(|r| r.test.len())
            .max()
            .unwrap_or(8)
            .max(8);
        out.push_str(&format!(
            "{:<label_width$}  {:>10}  {:>3}  {:>8}  {:>8}  {:>8}\n",
            "test", "statistic", "df", "p_asy", "p_mc", "p_rand"
        ));
        for r in &self.rows {
            out.push_str(&format!(
                "{:<label_width$}  {:>10.2}  {:>3}  {:>8}  {:>8}  {:>8}\n",
                r.test,
                r.statistic,
                r.df,
                format_p(r.p_asy),
                r.p_mc.map_or("-".into(), format_p),
                r.p_rand.map_or("-".into(), format_p),
            ));
        }
        if let Some(notes) = &self.notes {
            out.push('\n');
            for n in notes {
                out.push_str(&format!("note: {n}\n"));
            }
        }
        out
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!(
            "# {}\n",
            serde_json::to_string(&self.provenance).unwrap()
        ));
        out.push_str("test,statistic,df,p_asy,p_mc,p_rand\n");
        for r in &self.rows {
            out.push_str(&format!(
                "{},{:.6},{},{:.6},{},{}\n",
                r.test,
                r.statistic,
                r.df,
                r.p_asy,
                r.p_mc.map_or(String::new(), |p| format!("{p:.6}")),
                r.p_rand.map_or(String::new(), |p| format!("{p:.6}")),
            ));
        }
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).unwrap()
    }
}

/// Renders the NNCT plus the row-percentage panel (each cell as a share of
/// its row, with the row total's share of n in the margin) and the
/// column-percentage panel (each cell as a share of its column).
pub fn nnct_panels(nnct: &Nnct, class_names: &[String]) -> String {
    let q = nnct.num_classes();
    let rows = nnct.row_sums();
    let cols = nnct.col_sums();
    let n = nnct.total();
    let width = class_names
        .iter()
        .map(|c| c.len())
        .max()
        .unwrap_or(4)
        .max(5);
    let mut out = String::new();

    let header = |title: &str, out: &mut String| {
        out.push_str(&format!("{title}\n{:<width$}", ""));
        for name in class_names {
            out.push_str(&format!("  {:>width$}", name));
        }
        out.push_str(&format!("  {:>width$}\n", "sum"));
    };

    header("NNCT (rows: base class, columns: NN class)", &mut out);
    for i in 0..q {
        out.push_str(&format!("{:<width$}", class_names[i]));
        for j in 0..q {
            out.push_str(&format!("  {:>width$}", nnct.count(i, j)));
        }
        out.push_str(&format!("  {:>width$}\n", rows[i]));
    }
    out.push_str(&format!("{:<width$}", "sum"));
    for j in 0..q {
        out.push_str(&format!("  {:>width$}", cols[j]));
    }
    out.push_str(&format!("  {:>width$}\n\n", n));

    let pct = |num: u64, den: u64| -> String {
        if den == 0 {
            "-".into()
        } else {
            format!("{:.0}%", 100.0 * num as f64 / den as f64)
        }
    };

    header("Row percentages (share of each base class)", &mut out);
    for i in 0..q {
        out.push_str(&format!("{:<width$}", class_names[i]));
        for j in 0..q {
            out.push_str(&format!("  {:>width$}", pct(nnct.count(i, j), rows[i])));
        }
        out.push_str(&format!("  {:>width$}\n", pct(rows[i], n)));
    }
    out.push('\n');

    header("Column percentages (share of each NN class)", &mut out);
    for i in 0..q {
        out.push_str(&format!("{:<width$}", class_names[i]));
        for j in 0..q {
            out.push_str(&format!("  {:>width$}", pct(nnct.count(i, j), cols[j])));
        }
        out.push('\n');
    }
    out.push_str(&format!("{:<width$}", "sum"));
    for j in 0..q {
        out.push_str(&format!("  {:>width$}", pct(cols[j], n)));
    }
    out.push('\n');
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn p_value_rendering() {
        assert_eq!(format_p(0.32494), "0.3249");
        assert_eq!(format_p(9.9e-5), "<.0001");
        assert_eq!(format_p(1.0), "1.0000");
    }

    #[test]
    fn percentage_rows_sum_to_100() {
        let nnct = Nnct::from_counts(vec![vec![25, 41], vec![39, 113]]).unwrap();
        let names = vec!["case".to_string(), "control".to_string()];
        let text = nnct_panels(&nnct, &names);
        // row percentages: 25/66 = 38%, 41/66 = 62%
        assert!(text.contains("38%"));
        assert!(text.contains("62%"));
    }
}
