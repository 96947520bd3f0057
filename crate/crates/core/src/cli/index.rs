use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};

/// Result family a check id belongs to; unknown ids are plumbing.
pub fn result_of(check_id: &str) -> &'static str {
    let table: [(&str, &str); 16] = [
        ("ml_oracle", "Mittag-Leffler evaluation"),
        ("mainardi_moment", "Mainardi density and moments"),
        ("mainardi_laplace", "Mainardi integral representation of E_alpha, E_alpha_alpha"),
        ("decay_heat", "decay of the fractional heat semigroup"),
        ("decay_ml_e_alpha_alpha", "decay of E_alpha_alpha(-t^alpha (-Delta)^(theta/2))"),
        ("decay_ml_e_alpha", "decay of E_alpha(-t^alpha (-Delta)^(theta/2))"),
        ("decay_ml", "decay of the Mittag-Leffler families"),
        ("decay_shifted", "decay of the gamma-shifted family"),
        ("time_integrated", "time-integrated smoothing estimate"),
        ("product_ratio", "product estimate"),
        ("bilinear_constant", "bilinear estimate"),
        ("linear_operator_constant", "linear source estimate"),
        ("picard_contraction", "small-data global well-posedness"),
        ("iterate_bounds", "small-data global well-posedness"),
        ("uniqueness", "uniqueness of mild solutions"),
        ("selfsim", "self-similar solutions"),
    ];
    table.iter().find(|(prefix, _)| check_id.starts_with(prefix)).map(|t| t.1).unwrap_or("plumbing")
}

#[derive(Debug, Clone, PartialEq)]
pub struct IndexRow {
    pub result: String,
    pub check_id: String,
    pub verdict: String,
    pub measured: String,
    pub predicted: String,
    pub file: String,
}

fn read_results(path: &Path, rel: &str) -> Result<Vec<IndexRow>> {
    let mut rdr = csv::Reader::from_path(path).map_err(|e| Error::Io(std::io::Error::other(e)))?;
    let headers = rdr.headers().map_err(|e| Error::Io(std::io::Error::other(e)))?.clone();
    let col = |name: &str| headers.iter().position(|h| h == name);
    let (Some(id), Some(ver), Some(me), Some(pr)) = (col("check_id"), col("verdict"), col("measured"), col("predicted")) else {
        return Ok(vec![]);
    };
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| Error::Io(std::io::Error::other(e)))?;
        let check_id = rec.get(id).unwrap_or("").to_string();
        out.push(IndexRow {
            result: result_of(&check_id).to_string(),
            check_id,
            verdict: rec.get(ver).unwrap_or("").to_string(),
            measured: rec.get(me).unwrap_or("").to_string(),
            predicted: rec.get(pr).unwrap_or("").to_string(),
            file: rel.to_string(),
        });
    }
    Ok(out)
}

/// Collects every `<sub>/results.csv` below `output_dir`, sorted by result and check.
pub fn collect_index(output_dir: &Path) -> Result<Vec<IndexRow>> {
    let mut files: Vec<PathBuf> = match std::fs::read_dir(output_dir) {
        Ok(rd) => rd.filter_map(|e| e.ok()).map(|e| e.path().join("results.csv")).filter(|p| p.is_file()).collect(),
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => vec![],
        Err(e) => return Err(e.into()),
    };
    files.sort();
    let mut rows = Vec::new();
    for f in &files {
        let rel = f.strip_prefix(output_dir).unwrap_or(f).to_string_lossy().replace('\\', "/");
        rows.extend(read_results(f, &rel)?);
    }
    rows.sort_by(|a, b| (a.result == "plumbing", &a.result, &a.file, &a.check_id).cmp(&(b.result == "plumbing", &b.result, &b.file, &b.check_id)));
    Ok(rows)
}

/// Writes `index.md` mapping each result to its checks, files and verdicts.
/// Rerunning over the same directory rewrites the same bytes.
pub fn report_index(output_dir: &Path) -> Result<PathBuf> {
    let rows = collect_index(output_dir)?;
    let mut s = String::from("# Check index\n\n");
    if rows.is_empty() {
        s.push_str("No checks found.\n");
    } else {
        let count = |v: &str| rows.iter().filter(|r| r.verdict == v).count();
        let _ = writeln!(s, "{} checks: {} PASS, {} FAIL, {} INCONCLUSIVE\n", rows.len(), count("PASS"), count("FAIL"), count("INCONCLUSIVE"));
        s.push_str("| result | check | verdict | measured | predicted | file |\n|---|---|---|---|---|---|\n");
        for r in &rows {
            let _ = writeln!(s, "| {} | {} | {} | {} | {} | {} |", r.result, r.check_id, r.verdict, r.measured, r.predicted, r.file);
        }
    }
    std::fs::create_dir_all(output_dir)?;
    let path = output_dir.join("index.md");
    std::fs::write(&path, s)?;
    Ok(path)
}
