use std::fmt;
use std::io::Write;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::systems::Rect;
use crate::tube::Tube;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Lipschitz,
    Socp,
    #[default]
    Both,
}

impl Method {
    pub fn uses_lipschitz(self) -> bool {
        matches!(self, Method::Lipschitz | Method::Both)
    }

    pub fn uses_socp(self) -> bool {
        matches!(self, Method::Socp | Method::Both)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Method::Lipschitz => "lipschitz",
            Method::Socp => "socp",
            Method::Both => "both",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "lipschitz" => Ok(Method::Lipschitz),
            "socp" => Ok(Method::Socp),
            "both" => Ok(Method::Both),
            other => Err(Error::InvalidParameter(format!(
                "unknown certification method `{other}` (expected lipschitz, socp or both)"
            ))),
        }
    }
}

/// JSON has no infinities: `-∞` stage bounds are written as `null` and read
/// back as `-∞`.
mod bounds_as_json {
    use super::*;

    pub fn serialize<S: Serializer>(values: &[f64], s: S) -> std::result::Result<S::Ok, S::Error> {
        let mapped: Vec<Option<f64>> = values.iter().map(|v| v.is_finite().then_some(*v)).collect();
        mapped.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Vec<f64>, D::Error> {
        let raw: Vec<Option<f64>> = Vec::deserialize(d)?;
        Ok(raw.into_iter().map(|v| v.unwrap_or(f64::NEG_INFINITY)).collect())
    }
}

mod value_as_json {
    use super::*;

    pub fn serialize<S: Serializer>(value: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
        value.is_finite().then_some(*value).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<f64, D::Error> {
        Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::NEG_INFINITY))
    }
}

/// Stage bounds and the composed certificate for one method.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodResult {
    #[serde(with = "bounds_as_json")]
    pub reward_bounds: Vec<f64>,
    #[serde(with = "bounds_as_json")]
    pub constraint_bounds: Vec<f64>,
    #[serde(with = "value_as_json")]
    pub certificate: f64,
    pub certified: bool,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub solver_failures: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertReport {
    pub center: Vec<f64>,
    pub eps_x: f64,
    pub horizon: usize,
    pub gamma: f64,
    pub method: Method,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lipschitz: Option<MethodResult>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub socp: Option<MethodResult>,
    pub certified_controls: Vec<Vec<f64>>,
    pub tube: Tube,
    /// Seconds spent certifying; omitted when reports must be reproducible.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wall_time_s: Option<f64>,
}

impl CertReport {
    /// True when any computed certificate is positive.
    pub fn certified(&self) -> bool {
        self.lipschitz.as_ref().is_some_and(|m| m.certified) || self.socp.as_ref().is_some_and(|m| m.certified)
    }

    /// Largest computed certificate.
    pub fn best_certificate(&self) -> f64 {
        [&self.lipschitz, &self.socp]
            .into_iter()
            .flatten()
            .map(|m| m.certificate)
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// One certified ball center. A certificate is `None` when the method was not
/// run or produced no finite bound.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertifiedMember {
    pub center: Vec<f64>,
    pub lipschitz_certificate: Option<f64>,
    pub socp_certificate: Option<f64>,
    pub certified_controls: Vec<Vec<f64>>,
}

impl CertifiedMember {
    pub fn best_certificate(&self) -> f64 {
        [self.lipschitz_certificate, self.socp_certificate]
            .into_iter()
            .flatten()
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Center lattice that covers the certification region.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageLattice {
    pub region: Rect,
    pub points_per_axis: Vec<usize>,
    pub spacing: Vec<f64>,
}

impl CoverageLattice {
    pub fn len(&self) -> usize {
        self.points_per_axis.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Union of certified balls sharing a radius.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertifiedSet {
    pub method: Method,
    pub eps_x: f64,
    pub horizon: usize,
    pub gamma: f64,
    pub lattice: CoverageLattice,
    pub members: Vec<CertifiedMember>,
}

impl CertifiedSet {
    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    /// Whether `x` lies in some certified ball.
    pub fn contains(&self, x: &[f64]) -> bool {
        self.member_for(x).is_some()
    }

    /// First member whose ball contains `x`.
    pub fn member_for(&self, x: &[f64]) -> Option<&CertifiedMember> {
        self.members.iter().find(|m| crate::dist(&m.center, x) <= self.eps_x)
    }

    /// Members certified by a particular method.
    pub fn restricted_to(&self, method: Method) -> CertifiedSet {
        let keep = |m: &CertifiedMember| match method {
            Method::Lipschitz => m.lipschitz_certificate.is_some_and(|v| v > 0.0),
            Method::Socp => m.socp_certificate.is_some_and(|v| v > 0.0),
            Method::Both => m.best_certificate() > 0.0,
        };
        CertifiedSet {
            method,
            members: self.members.iter().filter(|m| keep(m)).cloned().collect(),
            ..self.clone()
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    /// Columns `x0..x{n-1}, lipschitz, socp`; missing certificates are empty.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        let n = self.lattice.region.dim();
        let mut header: Vec<String> = (0..n).map(|i| format!("x{i}")).collect();
        header.push("lipschitz".into());
        header.push("socp".into());
        out.write_record(&header)?;
        let fmt_opt = |v: Option<f64>| v.map(|v| format!("{v:?}")).unwrap_or_default();
        for m in &self.members {
            let mut row: Vec<String> = m.center.iter().map(|v| format!("{v:?}")).collect();
            row.push(fmt_opt(m.lipschitz_certificate));
            row.push(fmt_opt(m.socp_certificate));
            out.write_record(&row)?;
        }
        out.flush()?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn infinite_bounds_round_trip_through_null() {
        let m = MethodResult {
            reward_bounds: vec![1.0, f64::NEG_INFINITY],
            constraint_bounds: vec![0.5, 0.5],
            certificate: f64::NEG_INFINITY,
            certified: false,
            solver_failures: vec![1],
        };
        let s = serde_json::to_string(&m).unwrap();
        assert!(s.contains("null"));
        let back: MethodResult = serde_json::from_str(&s).unwrap();
        assert_eq!(back, m);
    }

    #[test]
    fn method_parses() {
        assert_eq!("socp".parse::<Method>().unwrap(), Method::Socp);
        assert!("cone".parse::<Method>().is_err());
    }
}
