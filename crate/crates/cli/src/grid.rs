//! Parameter grids: a single value, a comma list, or `lo:hi:logN` / `lo:hi:linN`.

use std::str::FromStr;

#[derive(Debug, Clone, PartialEq)]
pub struct Grid(pub Vec<f64>);

fn number(s: &str) -> Result<f64, String> {
    let v: f64 = s
        .trim()
        .parse()
        .map_err(|_| format!("`{s}` is not a number"))?;
    if !v.is_finite() {
        return Err(format!("`{s}` is not finite"));
    }
    Ok(v)
}

impl FromStr for Grid {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let parts: Vec<&str> = s.split(':').collect();
        match parts.as_slice() {
            [one] => one.split(',').map(number).collect::<Result<_, _>>().map(Grid),
            [lo, hi, spec] => {
                let (lo, hi) = (number(lo)?, number(hi)?);
                let (log, count) = if let Some(c) = spec.strip_prefix("log") {
                    (true, c)
                } else if let Some(c) = spec.strip_prefix("lin") {
                    (false, c)
                } else {
                    return Err(format!("grid spacing `{spec}` must be logN or linN"));
                };
                let count: usize = count
                    .parse()
                    .map_err(|_| format!("grid size `{count}` is not a positive integer"))?;
                if count == 0 {
                    return Err("grid size must be at least 1".to_string());
                }
                if log && !(lo > 0.0 && hi > 0.0) {
                    return Err("log grid bounds must be positive".to_string());
                }
                if count == 1 {
                    return Ok(Grid(vec![lo]));
                }
                let step = |i: usize| i as f64 / (count - 1) as f64;
                let values = (0..count)
                    .map(|i| {
                        if i == count - 1 {
                            hi
                        } else if log {
                            10f64.powf(lo.log10() + step(i) * (hi.log10() - lo.log10()))
                        } else {
                            lo + step(i) * (hi - lo)
                        }
                    })
                    .collect();
                Ok(Grid(values))
            }
            _ => Err(format!("cannot parse grid `{s}`")),
        }
    }
}
