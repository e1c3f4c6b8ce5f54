//! JSON interchange for potential/jet term lists.
//!
//! The format is shared by every command that reads or writes series data:
//!
//! ```json
//! { "n": 2, "max_degree": 8,
//!   "terms": [ { "zi": [2,0], "zbar": [2,0], "re": "1/2", "im": "0/1" } ] }
//! ```
//!
//! Rationals are canonical "numerator/denominator" strings with positive
//! denominator and coprime parts. Terms are emitted in sorted key order so a
//! file is a deterministic function of its contents.

use super::JetError;
use crate::poly::{MultiIndex, Poly};
use crate::scalar::{rat_from_str, rat_to_string, CRat};
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TermRecord {
    pub zi: Vec<u32>,
    pub zbar: Vec<u32>,
    pub re: String,
    pub im: String,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SeriesFile {
    pub n: usize,
    pub max_degree: u32,
    pub terms: Vec<TermRecord>,
}

impl SeriesFile {
    pub fn from_poly(poly: &Poly, max_degree: u32) -> SeriesFile {
        let terms = poly
            .terms
            .iter()
            .map(|((i, j), c)| TermRecord {
                zi: i.0.clone(),
                zbar: j.0.clone(),
                re: rat_to_string(&c.re),
                im: rat_to_string(&c.im),
            })
            .collect();
        SeriesFile {
            n: poly.n,
            max_degree,
            terms,
        }
    }

    pub fn to_poly(&self) -> Result<Poly, JetError> {
        if self.n == 0 {
            return Err(JetError::InvalidDimension(0));
        }
        let mut poly = Poly::zero(self.n);
        for (idx, t) in self.terms.iter().enumerate() {
            if t.zi.len() != self.n || t.zbar.len() != self.n {
                return Err(JetError::FileFormat(format!(
                    "terms[{idx}]: exponent vectors must have length n = {}",
                    self.n
                )));
            }
            let re = rat_from_str(&t.re)
                .map_err(|e| JetError::FileFormat(format!("terms[{idx}].re: {e}")))?;
            let im = rat_from_str(&t.im)
                .map_err(|e| JetError::FileFormat(format!("terms[{idx}].im: {e}")))?;
            poly.add_term(
                MultiIndex(t.zi.clone()),
                MultiIndex(t.zbar.clone()),
                CRat::new(re, im),
            );
        }
        Ok(poly)
    }

    pub fn parse(text: &str) -> Result<SeriesFile, JetError> {
        serde_json::from_str(text).map_err(|e| {
            JetError::FileFormat(format!("line {}, column {}: {e}", e.line(), e.column()))
        })
    }
}
