//! Run configuration: defaults, config file, then flags, in that order.
//!
//! The resolved configuration is hashed (sha256 of its canonical JSON) and
//! the hash is stamped on every emitted table, so any row can be traced
//! back to the exact inputs that produced it. The output sink and format
//! are excluded from the hash: the same computation keeps the same
//! identity whether it lands in a file or on stdout, as csv or json.

use mol_pricer::{OptionSpec, Payoff};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::error::Error;
use std::fmt::Write as _;
use std::path::PathBuf;

use crate::CommonArgs;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum PayoffKind {
    Call,
    Put,
    Powered,
    Cash,
}

impl PayoffKind {
    fn parse(token: &str) -> Result<Self, String> {
        match token {
            "call" => Ok(Self::Call),
            "put" => Ok(Self::Put),
            "powered" => Ok(Self::Powered),
            "cash" => Ok(Self::Cash),
            other => Err(format!(
                "unknown payoff '{other}' (expected call, put, powered, or cash)"
            )),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Csv,
    Json,
}

impl OutputFormat {
    fn parse(token: &str) -> Result<Self, String> {
        match token {
            "csv" => Ok(Self::Csv),
            "json" => Ok(Self::Json),
            other => Err(format!("unknown format '{other}' (expected csv or json)")),
        }
    }
}

/// Exercise schedule as written by the user: either a count of equally
/// spaced dates or an explicit calendar-time list.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ExerciseSpec {
    Count(usize),
    Dates(Vec<f64>),
}

impl ExerciseSpec {
    /// `--exercise-dates 10` (count) or `--exercise-dates 0.25,0.5,0.75,1`.
    fn parse(token: &str) -> Result<Self, String> {
        if !token.contains([',', '.']) {
            let count: usize = token
                .parse()
                .map_err(|_| format!("bad exercise-date count '{token}'"))?;
            return Ok(Self::Count(count));
        }
        let dates = token
            .split(',')
            .map(|t| t.trim().parse::<f64>())
            .collect::<Result<Vec<f64>, _>>()
            .map_err(|_| format!("bad exercise-date list '{token}'"))?;
        Ok(Self::Dates(dates))
    }
}

/// Flat config-file document; every key mirrors the flag of the same name.
/// List-valued keys (`n`, `c`, `tau`) take arrays.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    payoff: Option<String>,
    strike: Option<f64>,
    power: Option<u32>,
    cash_amount: Option<f64>,
    sigma: Option<f64>,
    rate: Option<f64>,
    spot: Option<f64>,
    maturity: Option<f64>,
    exercise_dates: Option<String>,
    n: Option<Vec<usize>>,
    c: Option<Vec<f64>>,
    d: Option<f64>,
    eta_tail: Option<f64>,
    tau: Option<Vec<f64>>,
    format: Option<String>,
    out: Option<PathBuf>,
}

/// Fully resolved run configuration. Serialization order is the canonical
/// order used for hashing.
#[derive(Debug, Clone, Serialize)]
pub struct RunConfig {
    pub payoff: PayoffKind,
    pub strike: f64,
    pub power: u32,
    pub cash_amount: f64,
    pub sigma: f64,
    pub rate: f64,
    pub spot: f64,
    pub maturity: f64,
    pub exercise: ExerciseSpec,
    pub n: Vec<usize>,
    pub c: Vec<f64>,
    pub d: f64,
    pub eta_tail: f64,
    pub tau: Vec<f64>,
    #[serde(skip)]
    pub format: OutputFormat,
    #[serde(skip)]
    pub out: Option<PathBuf>,
}

impl RunConfig {
    /// Defaults, overridden by the config file, overridden by flags.
    pub fn resolve(args: &CommonArgs) -> Result<Self, Box<dyn Error>> {
        let file = match &args.config {
            Some(path) => {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| format!("cannot read config {}: {e}", path.display()))?;
                toml::from_str::<FileConfig>(&text)
                    .map_err(|e| format!("bad config {}: {e}", path.display()))?
            }
            None => FileConfig::default(),
        };

        let payoff_token = args
            .payoff
            .clone()
            .or(file.payoff)
            .unwrap_or_else(|| "call".into());
        let format_token = args
            .format
            .clone()
            .or(file.format)
            .unwrap_or_else(|| "csv".into());
        let maturity = args.maturity.or(file.maturity).unwrap_or(1.0);
        let exercise = match args.exercise_dates.clone().or(file.exercise_dates) {
            Some(token) => ExerciseSpec::parse(&token)?,
            None => ExerciseSpec::Count(1),
        };

        let config = Self {
            payoff: PayoffKind::parse(&payoff_token)?,
            strike: args.strike.or(file.strike).unwrap_or(100.0),
            power: args.power.or(file.power).unwrap_or(2),
            cash_amount: args.cash_amount.or(file.cash_amount).unwrap_or(100.0),
            sigma: args.sigma.or(file.sigma).unwrap_or(0.3),
            rate: args.rate.or(file.rate).unwrap_or(0.03),
            spot: args.spot.or(file.spot).unwrap_or(100.0),
            maturity,
            exercise,
            n: args.n.clone().or(file.n).unwrap_or_else(|| vec![800]),
            c: args.c.clone().or(file.c).unwrap_or_else(|| vec![110.0]),
            d: args.d.or(file.d).unwrap_or(1.2),
            eta_tail: args.eta_tail.or(file.eta_tail).unwrap_or(1.1),
            tau: args
                .tau
                .clone()
                .or(file.tau)
                .unwrap_or_else(|| vec![maturity]),
            format: OutputFormat::parse(&format_token)?,
            out: args.out.clone().or(file.out),
        };
        config.validate()?;
        Ok(config)
    }

    fn validate(&self) -> Result<(), Box<dyn Error>> {
        // construction re-checks the library invariants early so a bad
        // config fails before any grid is built
        self.option_spec()?;
        if self.n.is_empty() || self.c.is_empty() {
            return Err("n and c need at least one value".into());
        }
        for &tau in &self.tau {
            if !(0.0..=self.maturity).contains(&tau) {
                return Err(format!(
                    "report time {tau} outside [0, {}]",
                    self.maturity
                )
                .into());
            }
        }
        Ok(())
    }

    pub fn payoff(&self) -> Payoff {
        match self.payoff {
            PayoffKind::Call => Payoff::Call {
                strike: self.strike,
            },
            PayoffKind::Put => Payoff::Put {
                strike: self.strike,
            },
            PayoffKind::Powered => Payoff::Powered {
                strike: self.strike,
                power: self.power,
            },
            PayoffKind::Cash => Payoff::CashOrNothing {
                strike: self.strike,
                amount: self.cash_amount,
            },
        }
    }

    pub fn option_spec(&self) -> mol_pricer::Result<OptionSpec> {
        match &self.exercise {
            ExerciseSpec::Count(1) => OptionSpec::european(self.payoff(), self.maturity),
            ExerciseSpec::Count(count) => {
                OptionSpec::bermudan(self.payoff(), self.maturity, *count)
            }
            ExerciseSpec::Dates(dates) => {
                OptionSpec::with_dates(self.payoff(), self.maturity, dates.clone())
            }
        }
    }

    pub fn is_bermudan(&self) -> bool {
        match &self.exercise {
            ExerciseSpec::Count(count) => *count > 1,
            ExerciseSpec::Dates(dates) => dates.len() > 1,
        }
    }

    /// sha256 over the canonical JSON of the computational fields.
    pub fn hash(&self) -> String {
        let canonical = serde_json::to_string(self).expect("config is serializable");
        let digest = Sha256::digest(canonical.as_bytes());
        let mut hex = String::with_capacity(64);
        for byte in digest {
            let _ = write!(hex, "{byte:02x}");
        }
        hex
    }
}
