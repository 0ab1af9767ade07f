//! Parsing of parameter lists given on the command line.
//!
//! A list is either comma separated values (`1,2,5`) or an inclusive range
//! `start:end:step` (`10:200:10`). The two forms can be mixed: `1,5:9:2`.

use anyhow::{bail, ensure, Context, Result};

pub fn parse_reals(list: &str) -> Result<Vec<f64>> {
    let mut out = Vec::new();
    for part in list.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let pieces: Vec<&str> = part.split(':').collect();
        match pieces.as_slice() {
            [single] => out.push(parse_real(single)?),
            [start, end, step] => {
                let (start, end, step) = (parse_real(start)?, parse_real(end)?, parse_real(step)?);
                ensure!(step > 0.0, "range step must be positive in '{part}'");
                ensure!(end >= start, "range end is below its start in '{part}'");
                let count = ((end - start) / step + 1e-9).floor() as usize;
                out.extend((0..=count).map(|i| start + i as f64 * step));
            }
            _ => bail!("cannot parse '{part}': expected a value or start:end:step"),
        }
    }
    ensure!(!out.is_empty(), "empty list '{list}'");
    Ok(out)
}

fn parse_real(s: &str) -> Result<f64> {
    let x: f64 = s.trim().parse().with_context(|| format!("'{s}' is not a number"))?;
    ensure!(x.is_finite(), "'{s}' is not finite");
    Ok(x)
}

pub fn parse_counts(list: &str) -> Result<Vec<u64>> {
    parse_reals(list)?
        .into_iter()
        .map(|x| {
            let r = x.round();
            ensure!(
                (x - r).abs() < 1e-9 && r >= 0.0,
                "'{x}' in '{list}' is not a nonnegative integer"
            );
            Ok(r as u64)
        })
        .collect()
}
