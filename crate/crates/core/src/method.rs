use std::fmt;
use std::str::FromStr;

use crate::error::Error;

/// Prediction methods, named as they appear in configs and output files.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Method {
    /// Bayesian model extrapolated with general machine benchmarks.
    GeneralBench,
    /// Bayesian model extrapolated with application benchmarks.
    AppBench,
    Naive,
    OnlineM,
    OnlineP,
    /// Measured runtimes, used as the scheduling reference.
    Accurate,
}

impl Method {
    pub const ALL: [Method; 6] = [
        Method::GeneralBench,
        Method::AppBench,
        Method::Naive,
        Method::OnlineM,
        Method::OnlineP,
        Method::Accurate,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Method::GeneralBench => "lotaru-g",
            Method::AppBench => "lotaru-a",
            Method::Naive => "naive",
            Method::OnlineM => "online-m",
            Method::OnlineP => "online-p",
            Method::Accurate => "accurate",
        }
    }

    pub fn is_prediction(self) -> bool {
        self != Method::Accurate
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self, Error> {
        Method::ALL
            .into_iter()
            .find(|m| m.as_str() == s.trim())
            .ok_or_else(|| Error::Config(format!("unknown method `{s}`")))
    }
}

/// Parses a comma-separated method list, keeping first-seen order.
pub fn parse_methods(list: &str) -> Result<Vec<Method>, Error> {
    let mut out: Vec<Method> = Vec::new();
    for part in list.split(',').filter(|p| !p.trim().is_empty()) {
        let m: Method = part.parse()?;
        if !out.contains(&m) {
            out.push(m);
        }
    }
    if out.is_empty() {
        return Err(Error::Config("at least one method is required".into()));
    }
    Ok(out)
}
