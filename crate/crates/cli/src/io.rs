//! File formats: marked-point CSV files and NNCT JSON files.

use std::path::Path;

use serde::{Deserialize, Serialize};

use segpoint_core::{MarkedPointSet, Point2, RectWindow};

use crate::CliError;

/// A parsed point file: the pattern plus the class names in
/// first-appearance order and whether the window was defaulted.
pub struct LoadedPoints {
    pub pattern: MarkedPointSet,
    pub class_names: Vec<String>,
    pub window_defaulted: bool,
}

/// Reads a `x,y,label` CSV into a marked point set. Labels are factorized
/// in first-appearance order; the window comes from the caller or defaults
/// to the bounding box.
pub fn load_points_csv(path: &Path, window: Option<RectWindow>) -> Result<LoadedPoints, CliError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| CliError::input(format!("cannot open {}: {e}", path.display())))?;
    {
        let headers = reader
            .headers()
            .map_err(|e| CliError::input(format!("{}: {e}", path.display())))?;
        let expected = ["x", "y", "label"];
        let ok = headers.len() >= 3
            && headers
                .iter()
                .take(3)
                .zip(expected)
                .all(|(h, e)| h.eq_ignore_ascii_case(e));
        if !ok {
            return Err(CliError::input(format!(
                "{}: expected header `x,y,label`, got `{}`",
                path.display(),
                headers.iter().collect::<Vec<_>>().join(",")
            )));
        }
    }
    let mut points = Vec::new();
    let mut labels = Vec::new();
    let mut class_names: Vec<String> = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| CliError::input(format!("{}: {e}", path.display())))?;
        let line = record
            .position()
            .map(|p| p.line().to_string())
            .unwrap_or_else(|| "?".into());
        if record.len() < 3 {
            return Err(CliError::input(format!(
                "{} line {line}: expected 3 fields, got {}",
                path.display(),
                record.len()
            )));
        }
        let x: f64 = record[0].parse().map_err(|_| {
            CliError::input(format!(
                "{} line {line}: `{}` is not a number",
                path.display(),
                &record[0]
            ))
        })?;
        let y: f64 = record[1].parse().map_err(|_| {
            CliError::input(format!(
                "{} line {line}: `{}` is not a number",
                path.display(),
                &record[1]
            ))
        })?;
        let name = record[2].to_string();
        if name.is_empty() {
            return Err(CliError::input(format!(
                "{} line {line}: empty label",
                path.display()
            )));
        }
        let class = match class_names.iter().position(|c| *c == name) {
            Some(idx) => idx,
            None => {
                class_names.push(name);
                class_names.len() - 1
            }
        };
        points.push(Point2::new(x, y));
        labels.push(class);
        if !points.last().unwrap().is_finite() {
            return Err(CliError::input(format!(
                "{} line {line}: non-finite coordinate",
                path.display()
            )));
        }
    }
    if points.len() < 2 {
        return Err(CliError::input(format!(
            "{}: need at least 2 points, got {}",
            path.display(),
            points.len()
        )));
    }
    let window_defaulted = window.is_none();
    let window = match window {
        Some(w) => w,
        None => RectWindow::bounding_box(&points).map_err(CliError::from_core)?,
    };
    let num_classes = class_names.len().max(2);
    let pattern = MarkedPointSet::with_classes(points, labels, num_classes, window)
        .map_err(CliError::from_core)?;
    while class_names.len() < pattern.num_classes() {
        class_names.push(format!("class{}", class_names.len()));
    }
    Ok(LoadedPoints {
        pattern,
        class_names,
        window_defaulted,
    })
}

/// Writes a marked point set as `x,y,label` CSV; the inverse of
/// [`load_points_csv`].
pub fn save_points_csv(
    path: &Path,
    pattern: &MarkedPointSet,
    class_names: &[String],
) -> Result<(), CliError> {
    let mut out = String::from("x,y,label\n");
    for (p, &l) in pattern.points().iter().zip(pattern.labels()) {
        out.push_str(&format!("{},{},{}\n", p.x, p.y, class_names[l]));
    }
    std::fs::write(path, out)
        .map_err(|e| CliError::input(format!("cannot write {}: {e}", path.display())))
}

/// An NNCT stored as JSON: class names, cell counts, and the NN-structure
/// scalars `Q` and `R` the conditional moments need.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NnctFile {
    pub classes: Vec<String>,
    pub counts: Vec<Vec<u64>>,
    #[serde(rename = "Q")]
    pub q: u64,
    #[serde(rename = "R")]
    pub r: u64,
}

impl NnctFile {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::input(format!("cannot open {}: {e}", path.display())))?;
        let file: NnctFile = serde_json::from_str(&text)
            .map_err(|e| CliError::input(format!("{}: {e}", path.display())))?;
        file.validate()
            .map_err(|msg| CliError::input(format!("{}: {msg}", path.display())))?;
        Ok(file)
    }

    fn validate(&self) -> Result<(), String> {
        let q = self.classes.len();
        if q < 2 {
            return Err(format!("need at least 2 classes, got {q}"));
        }
        if self.counts.len() != q || self.counts.iter().any(|row| row.len() != q) {
            return Err(format!("counts must be a {q}x{q} matrix"));
        }
        Ok(())
    }
}

/// Parses a `xmin,xmax,ymin,ymax` window flag.
pub fn parse_window(text: &str) -> Result<RectWindow, CliError> {
    let parts: Vec<&str> = text.split(',').map(str::trim).collect();
    if parts.len() != 4 {
        return Err(CliError::input(format!(
            "window must be `xmin,xmax,ymin,ymax`, got `{text}`"
        )));
    }
    let mut vals = [0.0f64; 4];
    for (slot, part) in vals.iter_mut().zip(&parts) {
        *slot = part
            .parse()
            .map_err(|_| CliError::input(format!("`{part}` is not a number")))?;
    }
    RectWindow::new(vals[0], vals[1], vals[2], vals[3]).map_err(CliError::from_core)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn points_csv_round_trip_is_identity() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("pts.csv");
        std::fs::write(
            &path,
            "x,y,label\n0.1,0.2,a\n0.9,0.4,b\n0.5,0.5,a\n",
        )
        .unwrap();
        let loaded = load_points_csv(&path, None).unwrap();
        assert_eq!(loaded.pattern.len(), 3);
        assert_eq!(loaded.class_names, vec!["a", "b"]);
        assert_eq!(loaded.pattern.class_sizes(), &[2, 1]);
        assert!(loaded.window_defaulted);

        let copy = dir.path().join("copy.csv");
        save_points_csv(&copy, &loaded.pattern, &loaded.class_names).unwrap();
        let window = *loaded.pattern.window();
        let again = load_points_csv(&copy, Some(window)).unwrap();
        assert_eq!(loaded.pattern.points(), again.pattern.points());
        assert_eq!(loaded.pattern.labels(), again.pattern.labels());
        assert_eq!(loaded.class_names, again.class_names);
    }

    #[test]
    fn malformed_rows_report_line_numbers() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.csv");
        std::fs::write(&path, "x,y,label\n0.1,0.2,a\nnope,0.4,b\n").unwrap();
        let Err(err) = load_points_csv(&path, None) else {
            panic!("expected a parse error")
        };
        let msg = format!("{err:?}");
        assert!(msg.contains("line 3"), "{msg}");

        std::fs::write(&path, "x,y,label\n0.1,0.2,a\n").unwrap();
        assert!(load_points_csv(&path, None).is_err());

        std::fs::write(&path, "a,b\n1,2\n").unwrap();
        assert!(load_points_csv(&path, None).is_err());
    }

    #[test]
    fn nnct_file_parses_and_validates() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.json");
        std::fs::write(
            &path,
            r#"{"classes":["case","control"],"counts":[[25,41],[39,113]],"Q":152,"R":142}"#,
        )
        .unwrap();
        let file = NnctFile::load(&path).unwrap();
        assert_eq!(file.q, 152);
        assert_eq!(file.counts[1][1], 113);

        std::fs::write(
            &path,
            r#"{"classes":["case"],"counts":[[25]],"Q":1,"R":0}"#,
        )
        .unwrap();
        assert!(NnctFile::load(&path).is_err());
    }

    #[test]
    fn window_flag_parsing() {
        let w = parse_window("0, 2, -1, 1").unwrap();
        assert_eq!(w.xmax, 2.0);
        assert!(parse_window("0,2,3").is_err());
        assert!(parse_window("0,2,5,1").is_err());
    }
}
