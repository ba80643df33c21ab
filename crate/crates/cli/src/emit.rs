use std::fs::File;
use std::io::{self, Write};

use crate::run::{Outcome, Row};
use crate::{Failure, Format, RunConfig};

fn io_err(e: impl std::fmt::Display) -> Failure {
    Failure::Io(e.to_string())
}

fn csv_bytes(rows: &[Row]) -> Result<Vec<u8>, Failure> {
    let mut w = csv::Writer::from_writer(Vec::new());
    if rows.is_empty() {
        w.write_record([
            "group",
            "partition/levi",
            "value",
            "denominator",
            "divides_k",
            "regular_roots",
            "singular_roots",
            "oracle_max_relerr",
        ])
        .map_err(io_err)?;
    }
    for r in rows {
        w.serialize(r).map_err(io_err)?;
    }
    w.into_inner().map_err(io_err)
}

fn text_bytes(out: &Outcome) -> Vec<u8> {
    let mut s = String::new();
    for r in &out.rows {
        s.push_str(&format!("{} {}: {}\n", r.group, r.label, r.value));
        if let Some(k) = r.divides_k {
            s.push_str(&format!("  divides P^{}\n", k));
        }
        if !r.singular_roots.is_empty() {
            s.push_str(&format!("  singular at {}\n", r.singular_roots));
        }
        if !r.regular_roots.is_empty() {
            s.push_str(&format!("  regular at {}\n", r.regular_roots));
        }
        if let Some(e) = r.oracle_max_relerr {
            s.push_str(&format!("  oracle max rel err {:.3e}\n", e));
        }
    }
    if let Some(fs) = out.json.get("failures").and_then(|f| f.as_array()) {
        for f in fs {
            s.push_str(&format!("FAIL {}\n", f.as_str().unwrap_or_default()));
        }
    }
    s.into_bytes()
}

pub fn write(cfg: &RunConfig, out: &Outcome) -> Result<(), Failure> {
    let bytes = match cfg.format {
        Format::Json => {
            let mut b = serde_json::to_vec_pretty(&out.json).map_err(io_err)?;
            b.push(b'\n');
            b
        }
        Format::Csv => csv_bytes(&out.rows)?,
        Format::Text => text_bytes(out),
    };
    match &cfg.output {
        Some(path) => File::create(path)
            .and_then(|mut f| f.write_all(&bytes))
            .map_err(|e| Failure::Io(format!("{}: {}", path.display(), e))),
        None => io::stdout().write_all(&bytes).map_err(io_err),
    }
}
