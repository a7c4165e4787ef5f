use crate::error::{Error, Result};

/// One respiratory cycle as annotated: bounds in seconds and the two flags.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CycleAnnotation {
    pub start_s: f64,
    pub end_s: f64,
    pub crackle: bool,
    pub wheeze: bool,
}

fn parse_flag(field: &str, line: usize, name: &str) -> Result<bool> {
    match field {
        "0" => Ok(false),
        "1" => Ok(true),
        _ => Err(Error::Parse {
            line,
            msg: format!("{name} flag must be 0 or 1, got {field:?}"),
        }),
    }
}

fn parse_time(field: &str, line: usize, name: &str) -> Result<f64> {
    field
        .parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .ok_or_else(|| Error::Parse {
            line,
            msg: format!("{name} is not a number: {field:?}"),
        })
}

/// Parses `start<TAB>end<TAB>crackle<TAB>wheeze` lines; blank lines are skipped.
/// Line numbers in errors are 1-based.
pub fn parse_annotations(text: &str) -> Result<Vec<CycleAnnotation>> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let trimmed = raw.trim();
        if trimmed.is_empty() {
            continue;
        }
        let fields: Vec<&str> = trimmed.split_whitespace().collect();
        if fields.len() != 4 {
            return Err(Error::Parse {
                line,
                msg: format!("expected 4 fields, found {}", fields.len()),
            });
        }
        let start_s = parse_time(fields[0], line, "start")?;
        let end_s = parse_time(fields[1], line, "end")?;
        if start_s < 0.0 || end_s <= start_s {
            return Err(Error::Parse {
                line,
                msg: format!("need 0 <= start < end, got {start_s} and {end_s}"),
            });
        }
        out.push(CycleAnnotation {
            start_s,
            end_s,
            crackle: parse_flag(fields[2], line, "crackle")?,
            wheeze: parse_flag(fields[3], line, "wheeze")?,
        });
    }
    Ok(out)
}

pub fn serialize_annotations(anns: &[CycleAnnotation]) -> String {
    anns.iter()
        .map(|a| {
            format!(
                "{}\t{}\t{}\t{}\n",
                a.start_s, a.end_s, a.crackle as u8, a.wheeze as u8
            )
        })
        .collect()
}
