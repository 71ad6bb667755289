//! One-year hourly dataset: normalized PV, building load, grid tariffs and
//! EV arrival probabilities, plus the training/validation day split.

use std::f64::consts::PI;
use std::io::{Read, Write};
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const HOURS_PER_DAY: usize = 24;
pub const DAYS_PER_YEAR: usize = 365;
pub const HOURS_PER_YEAR: usize = HOURS_PER_DAY * DAYS_PER_YEAR;

/// Days in each validation block.
pub const VALIDATION_BLOCK_DAYS: usize = 7;

/// Grid import tariff per hour of day, CHF/kWh, as a signed reward rate.
pub const DEFAULT_IMPORT_PRICE: [f64; 24] = [
    -0.3, -0.3, -0.3, -0.3, -0.3, -0.3, -0.5, -0.5, -0.5, -0.5, -0.3, -0.3, -0.3, -0.3, -0.3,
    -0.3, -0.5, -0.5, -0.5, -0.5, -0.5, -0.5, -0.3, -0.3,
];

/// Grid export compensation per hour of day, CHF/kWh.
pub const DEFAULT_EXPORT_PRICE: [f64; 24] = [0.0; 24];

/// Probability that an EV arrives at each hour of the day.
pub const DEFAULT_EV_ARRIVAL_PROB: [f64; 24] = [
    0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.75, 0.9, 0.9, 0.75, 0.1, 0.1, 0.1, 0.0, 0.0, 0.0, 0.0,
    0.0, 0.0, 0.0, 0.0, 0.0, 0.0,
];

const CSV_HEADER: [&str; 3] = ["hour_of_year", "normalized_pv", "load_kw"];

/// Target mean of the synthetic office load, kW.
pub const SYNTHETIC_MEAN_LOAD_KW: f64 = 2.5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct YearSeries {
    pub normalized_pv: Vec<f64>,
    pub load_kw: Vec<f64>,
    pub import_price: [f64; 24],
    pub export_price: [f64; 24],
    pub ev_arrival_prob: [f64; 24],
}

impl YearSeries {
    /// Builds a series from hourly PV and load vectors with the default tariff tables.
    pub fn new(normalized_pv: Vec<f64>, load_kw: Vec<f64>) -> Result<Self> {
        let series = Self {
            normalized_pv,
            load_kw,
            import_price: DEFAULT_IMPORT_PRICE,
            export_price: DEFAULT_EXPORT_PRICE,
            ev_arrival_prob: DEFAULT_EV_ARRIVAL_PROB,
        };
        series.validate()?;
        Ok(series)
    }

    pub fn validate(&self) -> Result<()> {
        if self.normalized_pv.len() != HOURS_PER_YEAR {
            return Err(Error::RowCount(self.normalized_pv.len()));
        }
        if self.load_kw.len() != HOURS_PER_YEAR {
            return Err(Error::RowCount(self.load_kw.len()));
        }
        for (i, (&pv, &load)) in self.normalized_pv.iter().zip(&self.load_kw).enumerate() {
            check_pv(i + 1, pv)?;
            check_load(i + 1, load)?;
        }
        for (h, &p) in self.ev_arrival_prob.iter().enumerate() {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::OutOfRange {
                    row: h + 1,
                    column: "ev_arrival_prob",
                    value: p,
                    range: "[0, 1]",
                });
            }
        }
        Ok(())
    }

    #[inline]
    fn index(hour: usize, day: usize) -> usize {
        (day * HOURS_PER_DAY + hour) % HOURS_PER_YEAR
    }

    #[inline]
    pub fn pv(&self, hour: usize, day: usize) -> f64 {
        self.normalized_pv[Self::index(hour, day)]
    }

    #[inline]
    pub fn load(&self, hour: usize, day: usize) -> f64 {
        self.load_kw[Self::index(hour, day)]
    }

    #[inline]
    pub fn import_price(&self, hour: usize) -> f64 {
        self.import_price[hour % HOURS_PER_DAY]
    }

    #[inline]
    pub fn export_price(&self, hour: usize) -> f64 {
        self.export_price[hour % HOURS_PER_DAY]
    }

    #[inline]
    pub fn ev_arrival_prob(&self, hour: usize) -> f64 {
        self.ev_arrival_prob[hour % HOURS_PER_DAY]
    }

    pub fn mean_load(&self) -> f64 {
        self.load_kw.iter().sum::<f64>() / self.load_kw.len() as f64
    }

    /// Writes the hourly PV/load columns in the same format `load_year_csv` reads.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(writer);
        wtr.write_record(CSV_HEADER)?;
        for (i, (pv, load)) in self.normalized_pv.iter().zip(&self.load_kw).enumerate() {
            wtr.write_record(&[i.to_string(), pv.to_string(), load.to_string()])?;
        }
        wtr.flush().map_err(|e| Error::io("<csv writer>", e))?;
        Ok(())
    }

    pub fn save_csv(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_csv(std::io::BufWriter::new(file))
    }
}

fn check_pv(row: usize, pv: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&pv) {
        return Err(Error::OutOfRange {
            row,
            column: "normalized_pv",
            value: pv,
            range: "[0, 1]",
        });
    }
    Ok(())
}

fn check_load(row: usize, load: f64) -> Result<()> {
    if !(load >= 0.0 && load.is_finite()) {
        return Err(Error::OutOfRange {
            row,
            column: "load_kw",
            value: load,
            range: "[0, inf)",
        });
    }
    Ok(())
}

fn parse_cell(row: usize, column: &'static str, raw: &str) -> Result<f64> {
    raw.trim().parse::<f64>().map_err(|_| Error::NonNumeric {
        row,
        column,
        value: raw.to_string(),
    })
}

/// Reads an hourly year from CSV text with header `hour_of_year,normalized_pv,load_kw`.
///
/// Row numbers in errors count data rows from 1, excluding the header.
pub fn read_year_csv<R: Read>(reader: R) -> Result<YearSeries> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let header = rdr.headers()?.clone();
    if header.iter().collect::<Vec<_>>() != CSV_HEADER {
        return Err(Error::Header(header.iter().collect::<Vec<_>>().join(",")));
    }

    let mut pv = Vec::with_capacity(HOURS_PER_YEAR);
    let mut load = Vec::with_capacity(HOURS_PER_YEAR);
    for (i, record) in rdr.records().enumerate() {
        let record = record?;
        let row = i + 1;
        if record.len() != 3 {
            return Err(Error::ColumnCount {
                row,
                found: record.len(),
            });
        }
        let hour = parse_cell(row, "hour_of_year", &record[0])?;
        if hour != i as f64 {
            return Err(Error::HourIndex {
                row,
                expected: i,
                found: hour as usize,
            });
        }
        let p = parse_cell(row, "normalized_pv", &record[1])?;
        check_pv(row, p)?;
        let l = parse_cell(row, "load_kw", &record[2])?;
        check_load(row, l)?;
        pv.push(p);
        load.push(l);
    }
    if pv.len() != HOURS_PER_YEAR {
        return Err(Error::RowCount(pv.len()));
    }
    YearSeries::new(pv, load)
}

pub fn load_year_csv(path: &Path) -> Result<YearSeries> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_year_csv(std::io::BufReader::new(file))
}

/// Clear-sky diurnal shape: zero outside 06:00-18:00.
pub fn sun_term(hour: usize) -> f64 {
    (PI * (hour as f64 - 6.0) / 12.0).sin().max(0.0)
}

/// Seasonal irradiance factor peaking at day 172.
pub fn season_term(day: usize) -> f64 {
    0.55 + 0.45 * (2.0 * PI * (day as f64 - 172.0) / 365.0).cos()
}

/// Day 0 is a Monday.
pub fn is_weekday(day: usize) -> bool {
    day % 7 < 5
}

/// Office hours on weekdays, 08:00 to 18:00.
pub fn is_office_hour(hour: usize) -> bool {
    (8..18).contains(&hour)
}

/// Generates a deterministic synthetic year with an office-building load
/// profile and a clear-sky-times-weather PV profile.
pub fn synthesize_year(seed: u64) -> YearSeries {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = Normal::new(0.0, 0.1).expect("valid normal");

    let weather: Vec<f64> = (0..DAYS_PER_YEAR)
        .map(|_| rng.random_range(0.3..=1.0))
        .collect();

    let mut pv = Vec::with_capacity(HOURS_PER_YEAR);
    let mut load = Vec::with_capacity(HOURS_PER_YEAR);
    for day in 0..DAYS_PER_YEAR {
        for hour in 0..HOURS_PER_DAY {
            let p = sun_term(hour) * season_term(day) * weather[day];
            pv.push(p.clamp(0.0, 1.0));
            let base = if is_weekday(day) && is_office_hour(hour) {
                4.0
            } else {
                1.0
            };
            let l: f64 = base * (1.0 + noise.sample(&mut rng));
            load.push(l.max(0.0));
        }
    }

    let mean = load.iter().sum::<f64>() / load.len() as f64;
    let scale = SYNTHETIC_MEAN_LOAD_KW / mean;
    for l in &mut load {
        *l *= scale;
    }
    YearSeries::new(pv, load).expect("synthetic series is valid by construction")
}

/// Partition of the year's days into training and validation sets.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetSplit {
    /// Sorted training days.
    pub training_days: Vec<usize>,
    /// Sorted validation days.
    pub validation_days: Vec<usize>,
    /// First day of each validation week, one per quarter.
    pub validation_starts: [usize; 4],
}

/// Keeps the split stream distinct from the synthesis stream for equal seeds.
const SPLIT_STREAM: u64 = 0x5350_4c49_5400_0000;

/// Inclusive day ranges of the four quarters.
pub const QUARTERS: [(usize, usize); 4] = [(0, 90), (91, 181), (182, 272), (273, 364)];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SplitKind {
    Training,
    Validation,
}

impl DatasetSplit {
    pub fn days(&self, kind: SplitKind) -> &[usize] {
        match kind {
            SplitKind::Training => &self.training_days,
            SplitKind::Validation => &self.validation_days,
        }
    }

    pub fn hours(&self, kind: SplitKind) -> usize {
        self.days(kind).len() * HOURS_PER_DAY
    }
}

/// Picks one 7-day validation block per quarter; the rest is training data.
pub fn make_split(seed: u64) -> DatasetSplit {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ SPLIT_STREAM);
    let mut starts = [0usize; 4];
    for (slot, &(lo, hi)) in starts.iter_mut().zip(QUARTERS.iter()) {
        *slot = rng.random_range(lo..=hi + 1 - VALIDATION_BLOCK_DAYS);
    }
    let mut is_validation = [false; DAYS_PER_YEAR];
    for &s in &starts {
        for flag in &mut is_validation[s..s + VALIDATION_BLOCK_DAYS] {
            *flag = true;
        }
    }
    let (validation_days, training_days): (Vec<usize>, Vec<usize>) =
        (0..DAYS_PER_YEAR).partition(|&d| is_validation[d]);
    DatasetSplit {
        training_days,
        validation_days,
        validation_starts: starts,
    }
}
