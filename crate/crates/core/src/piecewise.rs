//! Half-open parameter intervals and piecewise-constant functions on
//! `[0, 1)`.
//!
//! Text format: the piece count `M` on the first line, then one line per
//! piece `lo,hi,value` in increasing order. Reals use Rust's shortest
//! round-trip decimal form, so parsing a written file reproduces every bit.
//! The JSON form is `{"pieces":[{"lo":..,"hi":..,"value":..},..]}`.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// `[lo, hi)` with `0 <= lo < hi <= 1`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParameterInterval {
    pub lo: f64,
    pub hi: f64,
}

impl ParameterInterval {
    pub const UNIT: ParameterInterval = ParameterInterval { lo: 0.0, hi: 1.0 };

    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&lo) || !(hi > lo && hi <= 1.0) {
            return Err(Error::invalid(format!(
                "[{lo}, {hi}) is not a subinterval of [0, 1]"
            )));
        }
        Ok(ParameterInterval { lo, hi })
    }

    pub fn contains(&self, t: f64) -> bool {
        self.lo <= t && t < self.hi
    }

    pub fn midpoint(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }
}

/// Breakpoints `0 = c_0 < c_1 < ... < c_M = 1` and the value on each
/// `[c_{j-1}, c_j)`. The last piece also covers the parameter `1`.
#[derive(Clone, Debug, PartialEq)]
pub struct PiecewiseConstantLoss {
    breakpoints: Vec<f64>,
    values: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct Piece {
    lo: f64,
    hi: f64,
    value: f64,
}

#[derive(Serialize, Deserialize)]
struct PiecesJson {
    pieces: Vec<Piece>,
}

impl PiecewiseConstantLoss {
    pub fn new(breakpoints: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if values.is_empty() || breakpoints.len() != values.len() + 1 {
            return Err(Error::invalid(format!(
                "{} breakpoints for {} values",
                breakpoints.len(),
                values.len()
            )));
        }
        if breakpoints[0] != 0.0 || *breakpoints.last().unwrap() != 1.0 {
            return Err(Error::invalid("breakpoints must start at 0 and end at 1"));
        }
        if breakpoints
            .windows(2)
            .any(|w| w[0].partial_cmp(&w[1]) != Some(std::cmp::Ordering::Less))
        {
            return Err(Error::invalid("breakpoints must be strictly increasing"));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("non-finite piece value"));
        }
        Ok(PiecewiseConstantLoss {
            breakpoints,
            values,
        })
    }

    pub fn constant(value: f64) -> Self {
        PiecewiseConstantLoss {
            breakpoints: vec![0.0, 1.0],
            values: vec![value],
        }
    }

    /// Builds from consecutive, gap-free pieces.
    pub fn from_pieces(pieces: &[(ParameterInterval, f64)]) -> Result<Self> {
        if pieces.is_empty() {
            return Err(Error::invalid("no pieces"));
        }
        let mut bps = vec![pieces[0].0.lo];
        for w in pieces.windows(2) {
            if w[0].0.hi != w[1].0.lo {
                return Err(Error::invalid("pieces do not tile the interval"));
            }
        }
        bps.extend(pieces.iter().map(|p| p.0.hi));
        PiecewiseConstantLoss::new(bps, pieces.iter().map(|p| p.1).collect())
    }

    pub fn num_pieces(&self) -> usize {
        self.values.len()
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn piece(&self, j: usize) -> (ParameterInterval, f64) {
        (
            ParameterInterval {
                lo: self.breakpoints[j],
                hi: self.breakpoints[j + 1],
            },
            self.values[j],
        )
    }

    pub fn pieces(&self) -> impl Iterator<Item = (ParameterInterval, f64)> + '_ {
        (0..self.num_pieces()).map(|j| self.piece(j))
    }

    /// Index of the piece containing `t`; `t = 1` maps to the last piece.
    pub fn piece_index(&self, t: f64) -> usize {
        let j = self.breakpoints.partition_point(|&c| c <= t);
        j.clamp(1, self.values.len()) - 1
    }

    pub fn eval(&self, t: f64) -> f64 {
        self.values[self.piece_index(t)]
    }

    /// Merges adjacent pieces with equal values.
    pub fn coalesced(&self) -> Self {
        let mut bps = vec![0.0];
        let mut vals: Vec<f64> = Vec::new();
        for (j, &v) in self.values.iter().enumerate() {
            if vals.last() == Some(&v) {
                *bps.last_mut().unwrap() = self.breakpoints[j + 1];
            } else {
                vals.push(v);
                bps.push(self.breakpoints[j + 1]);
            }
        }
        PiecewiseConstantLoss {
            breakpoints: bps,
            values: vals,
        }
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("{}\n", self.num_pieces());
        for (iv, v) in self.pieces() {
            writeln!(out, "{},{},{}", iv.lo, iv.hi, v).unwrap();
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty());
        let (_, first) = lines
            .next()
            .ok_or_else(|| Error::parse(1, "empty curve file"))?;
        let m: usize = first
            .parse()
            .map_err(|_| Error::parse(1, format!("'{first}' is not a piece count")))?;
        let mut pieces = Vec::with_capacity(m);
        for _ in 0..m {
            let (ln, line) = lines
                .next()
                .ok_or_else(|| Error::parse(1, format!("expected {m} pieces")))?;
            let f: Vec<f64> = line
                .split(',')
                .map(|s| {
                    s.trim()
                        .parse::<f64>()
                        .map_err(|_| Error::parse(ln, format!("bad real '{s}'")))
                })
                .collect::<Result<_>>()?;
            if f.len() != 3 {
                return Err(Error::parse(ln, "expected 'lo,hi,value'"));
            }
            pieces.push((ParameterInterval { lo: f[0], hi: f[1] }, f[2]));
        }
        if let Some((ln, _)) = lines.next() {
            return Err(Error::parse(ln, "trailing content"));
        }
        PiecewiseConstantLoss::from_pieces(&pieces).map_err(|e| Error::parse(1, e.to_string()))
    }

    pub fn to_json(&self) -> String {
        let doc = PiecesJson {
            pieces: self
                .pieces()
                .map(|(iv, value)| Piece {
                    lo: iv.lo,
                    hi: iv.hi,
                    value,
                })
                .collect(),
        };
        serde_json::to_string(&doc).expect("serializable")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: PiecesJson =
            serde_json::from_str(text).map_err(|e| Error::parse(e.line(), e.to_string()))?;
        let pieces: Vec<_> = doc
            .pieces
            .into_iter()
            .map(|p| (ParameterInterval { lo: p.lo, hi: p.hi }, p.value))
            .collect();
        PiecewiseConstantLoss::from_pieces(&pieces)
    }
}
