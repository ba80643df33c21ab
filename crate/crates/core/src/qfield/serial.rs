//! JSON shape of a rational function:
//! `{"num": [[exp, ["p/q", ...]], ...], "den": [...]}` where `exp` is a power
//! of `v` and the string list holds the power-basis coordinates in `zeta`.

use num_rational::BigRational;
use serde::{Deserialize, Serialize};

use super::cyclo::CycRational;
use super::laurent::LaurentPoly;
use super::ratfunc::RatFunc;
use crate::error::{Error, Result};

pub type TermJson = (i64, Vec<String>);

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RatFuncJson {
    pub num: Vec<TermJson>,
    pub den: Vec<TermJson>,
}

fn poly_to_json(p: &LaurentPoly) -> Vec<TermJson> {
    p.terms()
        .map(|(e, c)| (e, c.coords().iter().map(|r| r.to_string()).collect()))
        .collect()
}

fn poly_from_json(terms: &[TermJson]) -> Result<LaurentPoly> {
    let mut out = Vec::with_capacity(terms.len());
    for (e, coords) in terms {
        let coords = coords
            .iter()
            .map(|s| {
                s.parse::<BigRational>()
                    .map_err(|_| Error::Parse(format!("bad rational `{}`", s)))
            })
            .collect::<Result<Vec<_>>>()?;
        out.push((*e, CycRational::from_coords(coords)));
    }
    Ok(LaurentPoly::from_terms(out))
}

impl From<&RatFunc> for RatFuncJson {
    fn from(r: &RatFunc) -> Self {
        RatFuncJson {
            num: poly_to_json(r.numer()),
            den: poly_to_json(r.denom()),
        }
    }
}

impl RatFuncJson {
    pub fn to_ratfunc(&self) -> Result<RatFunc> {
        RatFunc::new(poly_from_json(&self.num)?, poly_from_json(&self.den)?)
    }
}

/// Serializes a `RatFunc` as its rendered string, for reports.
pub fn as_string<S: serde::Serializer>(r: &RatFunc, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&r.to_string())
}

impl Serialize for RatFunc {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        RatFuncJson::from(self).serialize(s)
    }
}

impl<'de> Deserialize<'de> for RatFunc {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let j = RatFuncJson::deserialize(d)?;
        j.to_ratfunc().map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qfield::parse_ratfunc;

    #[test]
    fn json_round_trip() {
        for s in ["1/(1+q)", "(1-q)/(1+q)", "(zeta+v^-3)/(1+2*v)", "0", "(3/7)*q^-2"] {
            let r = parse_ratfunc(s).unwrap();
            let text = serde_json::to_string(&r).unwrap();
            let back: RatFunc = serde_json::from_str(&text).unwrap();
            assert_eq!(back, r, "{}", s);
        }
    }

    #[test]
    fn json_shape() {
        let r = parse_ratfunc("1/(1+q)").unwrap();
        let text = serde_json::to_string(&r).unwrap();
        assert_eq!(text, r#"{"num":[[0,["1"]]],"den":[[0,["1"]],[2,["1"]]]}"#);
    }
}
