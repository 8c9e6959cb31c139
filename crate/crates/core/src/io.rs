//! CSV and JSON readers and writers for every file the pipeline exchanges.
//!
//! Readers take `impl Read` and writers `impl Write`; path handling lives in
//! the caller. Floats are written in shortest round-trip form so that a file
//! read back and written again is byte-identical.

use std::collections::{BTreeMap, HashMap};
use std::fs::File;
use std::io::{BufReader, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::CustomerMetrics;
use crate::mixture::MixtureFit;
use crate::model::{ConsumptionSeries, FailureReason, Group, PriceSignal, SeriesOutcome, TimeGrid};
use crate::population::{CorrectedScores, Histogram, RankTable};
use crate::synth::HouseholdLabel;

/// Opens `path` for reading, mapping a missing file to [`Error::MissingInput`].
pub fn open_input(path: &Path) -> Result<BufReader<File>> {
    match File::open(path) {
        Ok(f) => Ok(BufReader::new(f)),
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => {
            Err(Error::MissingInput(path.display().to_string()))
        }
        Err(e) => Err(Error::Io(format!("{}: {e}", path.display()))),
    }
}

fn reader<R: Read>(r: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(r)
}

fn writer<W: Write>(w: W) -> csv::Writer<W> {
    csv::WriterBuilder::new().from_writer(w)
}

fn expect_header<R: Read>(rdr: &mut csv::Reader<R>, expected: &[&str]) -> Result<()> {
    let got = rdr.headers()?;
    let matches = got.len() >= expected.len() && expected.iter().zip(got.iter()).all(|(a, b)| a == &b);
    if matches {
        Ok(())
    } else {
        Err(Error::Malformed(format!(
            "expected header `{}`, found `{}`",
            expected.join(","),
            got.iter().collect::<Vec<_>>().join(",")
        )))
    }
}

fn parse<T: std::str::FromStr>(field: &str, what: &str, line: u64) -> Result<T> {
    field.parse().map_err(|_| Error::Malformed(format!("line {line}: cannot parse {what} from {field:?}")))
}

fn read_rows<R: Read, T: for<'de> Deserialize<'de>>(r: R, header: &[&str]) -> Result<Vec<T>> {
    let mut rdr = reader(r);
    expect_header(&mut rdr, header)?;
    rdr.deserialize().map(|row| row.map_err(Error::from)).collect()
}

fn write_rows<W: Write, T: Serialize>(
    w: W,
    header: &[&str],
    rows: impl IntoIterator<Item = T>,
) -> Result<()> {
    let mut wtr = csv::WriterBuilder::new().has_headers(false).from_writer(w);
    wtr.write_record(header)?;
    for row in rows {
        wtr.serialize(row)?;
    }
    wtr.flush()?;
    Ok(())
}

/// Reads `slot,price` rows. The number of days is inferred from the
/// highest slot; every slot in between must appear exactly once.
pub fn read_prices<R: Read>(r: R, slots_per_day: usize) -> Result<PriceSignal> {
    let mut rdr = reader(r);
    expect_header(&mut rdr, &["slot", "price"])?;
    let mut prices: BTreeMap<usize, f64> = BTreeMap::new();
    for rec in rdr.records() {
        let rec = rec?;
        let line = rec.position().map_or(0, |p| p.line());
        let slot: usize = parse(rec.get(0).unwrap_or(""), "slot", line)?;
        let price: f64 = parse(rec.get(1).unwrap_or(""), "price", line)?;
        if prices.insert(slot, price).is_some() {
            return Err(Error::Malformed(format!("line {line}: duplicate price for slot {slot}")));
        }
    }
    let total = match prices.last_key_value() {
        Some((&last, _)) => last + 1,
        None => return Err(Error::Malformed("price file has no rows".into())),
    };
    if prices.len() != total {
        let missing = (0..total).find(|s| !prices.contains_key(s)).unwrap_or(0);
        return Err(Error::Malformed(format!("price file has no row for slot {missing}")));
    }
    let grid = TimeGrid::from_total(slots_per_day, total)?;
    PriceSignal::new(grid, prices.into_values().collect())
}

pub fn write_prices<W: Write>(w: W, signal: &PriceSignal) -> Result<()> {
    write_rows(w, &["slot", "price"], signal.prices().iter().enumerate())
}

#[derive(Debug, Serialize, Deserialize)]
struct GroupRow {
    customer_id: String,
    group: Group,
}

/// Reads `customer_id,group` rows in file order.
pub fn read_groups<R: Read>(r: R) -> Result<Vec<(String, Group)>> {
    let rows: Vec<GroupRow> = read_rows(r, &["customer_id", "group"])?;
    Ok(rows.into_iter().map(|g| (g.customer_id, g.group)).collect())
}

pub fn write_groups<W: Write>(w: W, series: &[ConsumptionSeries]) -> Result<()> {
    write_rows(w, &["customer_id", "group"], series.iter().map(|s| (s.customer_id(), s.group())))
}

/// Series assembled from long-format consumption rows, plus customers that
/// could not be assembled and why.
#[derive(Debug, Clone, PartialEq)]
pub struct Ingested {
    /// Sorted by customer id.
    pub series: Vec<ConsumptionSeries>,
    pub failures: Vec<SeriesOutcome>,
}

struct Partial {
    readings: Vec<f64>,
    seen: Vec<bool>,
    out_of_range: bool,
    duplicate: bool,
}

/// Reads `customer_id,slot,kwh` rows and joins them with the group table.
///
/// Problems confined to one customer become failures in the result; a row
/// that cannot be parsed at all is an error for the whole file.
pub fn read_consumption<R: Read>(r: R, grid: &TimeGrid, groups: &[(String, Group)]) -> Result<Ingested> {
    let total = grid.total_slots();
    let mut rdr = reader(r);
    expect_header(&mut rdr, &["customer_id", "slot", "kwh"])?;
    let mut partial: BTreeMap<String, Partial> = BTreeMap::new();
    let mut rec = csv::StringRecord::new();
    while rdr.read_record(&mut rec)? {
        let line = rec.position().map_or(0, |p| p.line());
        let id = rec.get(0).unwrap_or("");
        if id.is_empty() {
            return Err(Error::Malformed(format!("line {line}: empty customer_id")));
        }
        let slot: usize = parse(rec.get(1).unwrap_or(""), "slot", line)?;
        let kwh: f64 = parse(rec.get(2).unwrap_or(""), "kwh", line)?;
        if !partial.contains_key(id) {
            partial.insert(
                id.to_string(),
                Partial {
                    readings: vec![0.0; total],
                    seen: vec![false; total],
                    out_of_range: false,
                    duplicate: false,
                },
            );
        }
        let p = partial.get_mut(id).expect("inserted above");
        if slot >= total {
            p.out_of_range = true;
        } else if p.seen[slot] {
            p.duplicate = true;
        } else {
            p.seen[slot] = true;
            p.readings[slot] = kwh;
        }
    }

    let mut group_of: HashMap<&str, Option<Group>> = HashMap::new();
    for (id, g) in groups {
        group_of
            .entry(id.as_str())
            .and_modify(|existing| {
                if *existing != Some(*g) {
                    *existing = None;
                }
            })
            .or_insert(Some(*g));
    }

    let mut series = Vec::new();
    let mut failures = Vec::new();
    for (id, p) in partial {
        let group = group_of.get(id.as_str()).copied();
        let failure = if p.out_of_range {
            Some(FailureReason::SlotOutOfRange)
        } else if p.duplicate {
            Some(FailureReason::DuplicateReading)
        } else if p.seen.iter().any(|s| !s) {
            Some(FailureReason::MissingReading)
        } else if group == Some(None) {
            Some(FailureReason::DuplicateCustomer)
        } else if group.is_none() {
            Some(FailureReason::MissingGroup)
        } else {
            None
        };
        match (failure, group.flatten()) {
            (None, Some(g)) => series.push(ConsumptionSeries::new(id, g, p.readings)),
            (failure, g) => failures.push(SeriesOutcome { customer_id: id, group: g, failure }),
        }
    }
    // customers with a group but not a single reading
    let mut listed: Vec<&str> = group_of.keys().copied().collect();
    listed.sort_unstable();
    for id in listed {
        let known =
            series.iter().any(|s| s.customer_id() == id) || failures.iter().any(|f| f.customer_id == id);
        if !known {
            failures.push(SeriesOutcome {
                customer_id: id.to_string(),
                group: group_of[id],
                failure: Some(FailureReason::MissingReading),
            });
        }
    }
    Ok(Ingested { series, failures })
}

pub fn write_consumption<W: Write>(w: W, series: &[ConsumptionSeries]) -> Result<()> {
    let mut wtr = writer(w);
    wtr.write_record(["customer_id", "slot", "kwh"])?;
    for s in series {
        for (slot, kwh) in s.readings().iter().enumerate() {
            wtr.write_record([s.customer_id(), &slot.to_string(), &kwh.to_string()])?;
        }
    }
    wtr.flush()?;
    Ok(())
}

#[derive(Debug, Serialize, Deserialize)]
struct MetricsRow {
    customer_id: String,
    group: Group,
    bill: f64,
    #[serde(rename = "mu_B")]
    mu_b: f64,
    #[serde(rename = "sigma_B")]
    sigma_b: f64,
    phi: f64,
    z: f64,
    ties: usize,
    flag: String,
}

const METRICS_HEADER: [&str; 9] =
    ["customer_id", "group", "bill", "mu_B", "sigma_B", "phi", "z", "ties", "flag"];

pub fn write_metrics<W: Write>(w: W, metrics: &[CustomerMetrics]) -> Result<()> {
    let rows = metrics.iter().map(|m| MetricsRow {
        customer_id: m.customer_id.clone(),
        group: m.group,
        bill: m.actual_bill,
        mu_b: m.mean_random_bill,
        sigma_b: m.sd_random_bill,
        phi: m.phi,
        z: m.z,
        ties: m.ties_count,
        flag: m.flag().to_string(),
    });
    write_rows(w, &METRICS_HEADER, rows)
}

/// The sample count is not stored in the file, so `samples_used` reads as 0.
pub fn read_metrics<R: Read>(r: R) -> Result<Vec<CustomerMetrics>> {
    let rows: Vec<MetricsRow> = read_rows(r, &METRICS_HEADER)?;
    rows.into_iter()
        .map(|row| {
            let degenerate = match row.flag.as_str() {
                "ok" => false,
                "degenerate" => true,
                other => return Err(Error::Malformed(format!("unknown flag {other:?}"))),
            };
            Ok(CustomerMetrics {
                customer_id: row.customer_id,
                group: row.group,
                actual_bill: row.bill,
                mean_random_bill: row.mu_b,
                sd_random_bill: row.sigma_b,
                phi: row.phi,
                z: row.z,
                samples_used: 0,
                ties_count: row.ties,
                degenerate,
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankRow {
    pub customer_id: String,
    pub phi: f64,
    pub rank: f64,
}

pub fn write_ranks<W: Write>(w: W, table: &RankTable) -> Result<()> {
    write_rows(
        w,
        &["customer_id", "phi", "rank"],
        table.entries.iter().map(|e| (&e.customer_id, e.phi, e.rank)),
    )
}

pub fn read_ranks<R: Read>(r: R) -> Result<Vec<RankRow>> {
    read_rows(r, &["customer_id", "phi", "rank"])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PsiRow {
    pub customer_id: String,
    pub phi: f64,
    pub psi: f64,
}

pub fn write_psi<W: Write>(w: W, scores: &CorrectedScores) -> Result<()> {
    write_rows(
        w,
        &["customer_id", "phi", "psi"],
        scores.entries.iter().map(|e| (&e.customer_id, e.phi, e.psi)),
    )
}

pub fn read_psi<R: Read>(r: R) -> Result<Vec<PsiRow>> {
    read_rows(r, &["customer_id", "phi", "psi"])
}

/// `pr_responsive` is empty when no mixture was fitted.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassificationRow {
    pub customer_id: String,
    pub psi: f64,
    pub responsive_at_level: bool,
    pub pr_responsive: Option<f64>,
}

const CLASSIFICATION_HEADER: [&str; 4] = ["customer_id", "psi", "responsive_at_level", "pr_responsive"];

pub fn write_classification<W: Write>(w: W, rows: &[ClassificationRow]) -> Result<()> {
    write_rows(w, &CLASSIFICATION_HEADER, rows)
}

pub fn read_classification<R: Read>(r: R) -> Result<Vec<ClassificationRow>> {
    read_rows(r, &CLASSIFICATION_HEADER)
}

pub fn write_histogram<W: Write>(w: W, hist: &Histogram) -> Result<()> {
    let rows = (0..hist.bins()).map(|k| {
        let (lo, hi) = hist.edges(k);
        (lo, hi, hist.counts[k])
    });
    write_rows(w, &["bin_lo", "bin_hi", "count"], rows)
}

pub fn read_histogram<R: Read>(r: R) -> Result<Vec<(f64, f64, usize)>> {
    read_rows(r, &["bin_lo", "bin_hi", "count"])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExcludedRow {
    pub customer_id: String,
    pub reason: String,
}

pub fn write_excluded<W: Write>(w: W, rows: &[ExcludedRow]) -> Result<()> {
    write_rows(w, &["customer_id", "reason"], rows)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelRow {
    pub customer_id: String,
    pub responsive: bool,
    pub response_strength: f64,
}

pub fn write_labels<W: Write>(w: W, labels: &[HouseholdLabel]) -> Result<()> {
    let rows = labels.iter().map(|l| LabelRow {
        customer_id: l.customer_id.clone(),
        responsive: l.responsive,
        response_strength: l.response_strength,
    });
    write_rows(w, &["customer_id", "responsive", "response_strength"], rows)
}

pub fn read_labels<R: Read>(r: R) -> Result<Vec<LabelRow>> {
    read_rows(r, &["customer_id", "responsive", "response_strength"])
}

/// Serialized form of a mixture fit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixtureReport {
    pub lambda: f64,
    pub alpha: f64,
    pub beta: f64,
    pub responsive_fraction: f64,
    pub nll: f64,
    pub bins: usize,
    pub converged: bool,
    pub method: String,
    pub iterations: usize,
}

impl From<&MixtureFit> for MixtureReport {
    fn from(fit: &MixtureFit) -> Self {
        MixtureReport {
            lambda: fit.params.lambda,
            alpha: fit.params.alpha,
            beta: fit.params.beta,
            responsive_fraction: fit.responsive_fraction,
            nll: fit.neg_log_likelihood,
            bins: fit.bin_count,
            converged: fit.converged,
            method: fit.method.to_string(),
            iterations: fit.iterations,
        }
    }
}

pub fn write_mixture_report<W: Write>(mut w: W, report: &MixtureReport) -> Result<()> {
    serde_json::to_writer_pretty(&mut w, report).map_err(|e| Error::Io(e.to_string()))?;
    writeln!(w)?;
    Ok(())
}

pub fn read_mixture_report<R: Read>(r: R) -> Result<MixtureReport> {
    serde_json::from_reader(r).map_err(|e| Error::Malformed(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::validate_dataset;

    fn grid() -> TimeGrid {
        TimeGrid::new(2, 2).unwrap()
    }

    #[test]
    fn prices_round_trip() {
        let signal = PriceSignal::new(grid(), vec![0.1, 0.67, 0.14, 1e-20]).unwrap();
        let mut buf = Vec::new();
        write_prices(&mut buf, &signal).unwrap();
        assert_eq!(String::from_utf8(buf.clone()).unwrap(), "slot,price\n0,0.1\n1,0.67\n2,0.14\n3,1e-20\n");
        assert_eq!(read_prices(buf.as_slice(), 2).unwrap(), signal);
    }

    #[test]
    fn price_file_problems() {
        assert!(read_prices("slot,price\n0,1\n2,1\n".as_bytes(), 1).is_err());
        assert!(read_prices("slot,price\n0,1\n0,2\n".as_bytes(), 1).is_err());
        assert!(read_prices("slot,price\n0,1\n1,2\n2,3\n".as_bytes(), 2).is_err());
        assert!(read_prices("slot,cost\n0,1\n1,2\n".as_bytes(), 1).is_err());
        let s = read_prices("slot,price\n0, 1.5e0\n1,2\n".as_bytes(), 1).unwrap();
        assert_eq!(s.prices(), &[1.5, 2.0]);
    }

    #[test]
    fn ingestion_failures() {
        let groups = vec![
            ("a".to_string(), Group::Treatment),
            ("b".to_string(), Group::Control),
            ("c".to_string(), Group::Control),
            ("d".to_string(), Group::Treatment),
            ("d".to_string(), Group::Control),
            ("f".to_string(), Group::Control),
            ("g".to_string(), Group::Treatment),
        ];
        let csv = "customer_id,slot,kwh\n\
                   a,0,1\na,1,2\na,2,3\na,3,4\n\
                   b,0,1\nb,1,2\nb,2,3\n\
                   c,0,1\nc,0,1\nc,1,1\nc,2,1\nc,3,1\n\
                   d,0,1\nd,1,1\nd,2,1\nd,3,1\n\
                   e,0,1\ne,1,1\ne,2,1\ne,3,1\n\
                   f,0,1\nf,1,1\nf,2,1\nf,9,1\n\
                   g,0,1\ng,1,-1\ng,2,NaN\ng,3,1\n";
        let got = read_consumption(csv.as_bytes(), &grid(), &groups).unwrap();
        let ids: Vec<&str> = got.series.iter().map(|s| s.customer_id()).collect();
        assert_eq!(ids, ["a", "g"]);
        let reasons: Vec<(&str, Option<FailureReason>)> =
            got.failures.iter().map(|f| (f.customer_id.as_str(), f.failure)).collect();
        assert_eq!(
            reasons,
            [
                ("b", Some(FailureReason::MissingReading)),
                ("c", Some(FailureReason::DuplicateReading)),
                ("d", Some(FailureReason::DuplicateCustomer)),
                ("e", Some(FailureReason::MissingGroup)),
                ("f", Some(FailureReason::SlotOutOfRange)),
            ]
        );
        // value-level problems are left to validation
        let signal = PriceSignal::new(grid(), vec![1.0, 2.0, 3.0, 1.0]).unwrap();
        let report = validate_dataset(&got.series, &signal, &grid()).unwrap().merge_failures(got.failures);
        assert_eq!(report.failed, 6);
        assert_eq!(report.treatment, 1);
    }

    #[test]
    fn group_without_readings_is_reported() {
        let groups = vec![("a".to_string(), Group::Treatment), ("z".to_string(), Group::Control)];
        let csv = "customer_id,slot,kwh\na,0,1\na,1,2\na,2,3\na,3,4\n";
        let got = read_consumption(csv.as_bytes(), &grid(), &groups).unwrap();
        assert_eq!(got.failures.len(), 1);
        assert_eq!(got.failures[0].customer_id, "z");
        assert_eq!(got.failures[0].group, Some(Group::Control));
    }

    #[test]
    fn unparseable_row_is_an_error() {
        let csv = "customer_id,slot,kwh\na,zero,1\n";
        let err = read_consumption(csv.as_bytes(), &grid(), &[]).unwrap_err();
        assert_eq!(err.code(), "malformed_input");
    }

    #[test]
    fn consumption_and_groups_round_trip() {
        let series = vec![
            ConsumptionSeries::new("x", Group::Control, vec![0.1, 0.2, 0.30000000000000004, 7.0]),
            ConsumptionSeries::new("y", Group::Treatment, vec![1.0, 0.0, 2.5, 1e-9]),
        ];
        let (mut c, mut g) = (Vec::new(), Vec::new());
        write_consumption(&mut c, &series).unwrap();
        write_groups(&mut g, &series).unwrap();
        assert_eq!(String::from_utf8(g.clone()).unwrap(), "customer_id,group\nx,control\ny,treatment\n");
        let groups = read_groups(g.as_slice()).unwrap();
        let back = read_consumption(c.as_slice(), &grid(), &groups).unwrap();
        assert!(back.failures.is_empty());
        assert_eq!(back.series, series);
    }

    #[test]
    fn metrics_round_trip_is_byte_identical() {
        let m = vec![
            CustomerMetrics {
                customer_id: "T1".into(),
                group: Group::Treatment,
                actual_bill: 4.0,
                mean_random_bill: 6.0,
                sd_random_bill: 2.0,
                phi: 0.75,
                z: 1.0,
                samples_used: 0,
                ties_count: 3,
                degenerate: false,
            },
            CustomerMetrics {
                customer_id: "C1".into(),
                group: Group::Control,
                actual_bill: 0.1 + 0.2,
                mean_random_bill: 0.3,
                sd_random_bill: 0.0,
                phi: 0.5,
                z: f64::NAN,
                samples_used: 0,
                ties_count: 10,
                degenerate: true,
            },
        ];
        let mut a = Vec::new();
        write_metrics(&mut a, &m).unwrap();
        let text = String::from_utf8(a.clone()).unwrap();
        assert!(text.starts_with(
            "customer_id,group,bill,mu_B,sigma_B,phi,z,ties,flag\nT1,treatment,4.0,6.0,2.0,0.75,1.0,3,ok\n"
        ));
        let back = read_metrics(a.as_slice()).unwrap();
        assert_eq!(back[0], m[0]);
        assert!(back[1].z.is_nan() && back[1].degenerate);
        assert_eq!(back[1].actual_bill, 0.1 + 0.2);
        let mut b = Vec::new();
        write_metrics(&mut b, &back).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn histogram_file_has_one_row_per_bin() {
        let h = Histogram::unit(&[0.0, 0.5, 1.0], 50);
        let mut buf = Vec::new();
        write_histogram(&mut buf, &h).unwrap();
        let rows = read_histogram(buf.as_slice()).unwrap();
        assert_eq!(rows.len(), 50);
        assert_eq!(rows[0], (0.0, 0.02, 1));
        assert_eq!(rows[49].2, 1);
        assert_eq!(rows.iter().map(|r| r.2).sum::<usize>(), 3);
    }

    #[test]
    fn classification_optional_column() {
        let rows = vec![
            ClassificationRow {
                customer_id: "a".into(),
                psi: 0.96,
                responsive_at_level: true,
                pr_responsive: Some(0.9),
            },
            ClassificationRow {
                customer_id: "b".into(),
                psi: 0.1,
                responsive_at_level: false,
                pr_responsive: None,
            },
        ];
        let mut buf = Vec::new();
        write_classification(&mut buf, &rows).unwrap();
        assert_eq!(
            String::from_utf8(buf.clone()).unwrap(),
            "customer_id,psi,responsive_at_level,pr_responsive\na,0.96,true,0.9\nb,0.1,false,\n"
        );
        assert_eq!(read_classification(buf.as_slice()).unwrap(), rows);
    }

    #[test]
    fn mixture_report_round_trip() {
        let r = MixtureReport {
            lambda: 0.38,
            alpha: 1.49,
            beta: 0.19,
            responsive_fraction: 0.62,
            nll: 123.5,
            bins: 50,
            converged: true,
            method: "binned-likelihood".into(),
            iterations: 300,
        };
        let mut buf = Vec::new();
        write_mixture_report(&mut buf, &r).unwrap();
        let v: serde_json::Value = serde_json::from_slice(&buf).unwrap();
        for key in ["lambda", "alpha", "beta", "responsive_fraction", "nll", "bins", "converged"] {
            assert!(v.get(key).is_some(), "{key}");
        }
        assert_eq!(read_mixture_report(buf.as_slice()).unwrap(), r);
    }

    #[test]
    fn missing_file_maps_to_missing_input() {
        let err = open_input(Path::new("/definitely/not/here.csv")).unwrap_err();
        assert_eq!(err.code(), "missing_input");
    }
}
