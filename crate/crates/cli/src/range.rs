//! `start:stop:count[:log]` grids.

use std::fmt;
use std::str::FromStr;

use serde::Serialize;

/// Points a two-part `start:stop` range expands to.
pub const DEFAULT_COUNT: usize = 11;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Grid {
    pub start: f64,
    pub stop: f64,
    pub count: usize,
    pub log: bool,
}

impl Grid {
    pub fn single(x: f64) -> Self {
        Self {
            start: x,
            stop: x,
            count: 1,
            log: false,
        }
    }

    pub fn points(&self) -> Vec<f64> {
        if self.count == 1 {
            return vec![self.start];
        }
        let last = (self.count - 1) as f64;
        (0..self.count)
            .map(|i| {
                if i + 1 == self.count {
                    return self.stop;
                }
                let t = i as f64 / last;
                tidy(if self.log {
                    let (a, b) = (self.start.log10(), self.stop.log10());
                    10f64.powf(a + (b - a) * t)
                } else {
                    self.start + (self.stop - self.start) * t
                })
            })
            .collect()
    }
}

/// Rounds to 15 significant digits so that `0.7 + 0.3 * 0.1` prints as 0.73.
fn tidy(x: f64) -> f64 {
    format!("{x:.14e}").parse().unwrap_or(x)
}

impl fmt::Display for Grid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.count == 1 {
            return write!(f, "{}", self.start);
        }
        write!(f, "{}:{}:{}", self.start, self.stop, self.count)?;
        if self.log {
            f.write_str(":log")?;
        }
        Ok(())
    }
}

impl FromStr for Grid {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let parts: Vec<&str> = s.split(':').map(str::trim).collect();
        let num = |p: &str| {
            p.parse::<f64>()
                .map_err(|_| format!("{p:?} is not a number in range {s:?}"))
        };
        let grid = match parts.as_slice() {
            [x] => Grid::single(num(x)?),
            [a, b] => Grid {
                start: num(a)?,
                stop: num(b)?,
                count: DEFAULT_COUNT,
                log: false,
            },
            [a, b, c] | [a, b, c, _] => Grid {
                start: num(a)?,
                stop: num(b)?,
                count: c
                    .parse()
                    .map_err(|_| format!("{c:?} is not a point count in range {s:?}"))?,
                log: match parts.get(3) {
                    None => false,
                    Some(&"log") => true,
                    Some(other) => return Err(format!("unknown range flag {other:?}")),
                },
            },
            _ => return Err(format!("expected start:stop:count[:log], got {s:?}")),
        };
        if grid.count == 0 {
            return Err(format!("range {s:?} has no points"));
        }
        if grid.log && (grid.start <= 0.0 || grid.stop <= 0.0) {
            return Err(format!("log range {s:?} needs positive end points"));
        }
        Ok(grid)
    }
}
