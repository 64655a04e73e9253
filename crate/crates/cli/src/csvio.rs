//! CSV input: comma-separated 64-bit floats, rows are observations, with an
//! optional single header row auto-detected by its first non-numeric field.

use heavycov::Samples;

/// Read a CSV file into a sample matrix. Errors name the first bad line
/// (1-based, counting the header).
pub fn read_csv(path: &std::path::Path) -> Result<Samples, String> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| format!("cannot read {}: {e}", path.display()))?;

    let lines: Vec<(usize, &str)> = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty())
        .collect();
    if lines.is_empty() {
        return Err(format!("{}: no data rows", path.display()));
    }

    let fields = |line: &str| -> Vec<String> {
        line.split(',').map(|t| t.trim().to_string()).collect()
    };
    let first = fields(lines[0].1);
    let has_header = first.iter().any(|t| t.parse::<f64>().is_err());
    let d = first.len();
    let data_lines = if has_header { &lines[1..] } else { &lines[..] };
    if data_lines.is_empty() {
        return Err(format!("{}: header only, no data rows", path.display()));
    }

    let mut rows: Vec<Vec<f64>> = Vec::with_capacity(data_lines.len());
    for &(lineno, line) in data_lines {
        let toks = fields(line);
        if toks.len() != d {
            return Err(format!(
                "{}: line {lineno}: expected {d} fields, got {}",
                path.display(),
                toks.len()
            ));
        }
        let mut row = Vec::with_capacity(d);
        for tok in &toks {
            let v: f64 = tok.parse().map_err(|_| {
                format!(
                    "{}: line {lineno}: cannot parse `{tok}` as a number",
                    path.display()
                )
            })?;
            row.push(v);
        }
        rows.push(row);
    }

    Samples::from_rows(&rows).map_err(|e| format!("{}: {e}", path.display()))
}
