//! Balanced binary-choice panels: validation, CSV ingestion and the
//! informative sub-panel used by both the detector and the estimator.

use std::collections::BTreeMap;
use std::io::Read;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One `(id, t, y, x)` observation before grouping.
#[derive(Debug, Clone, PartialEq)]
pub struct Record {
    pub id: i64,
    pub period: i64,
    pub outcome: u8,
    pub covariates: Vec<f64>,
}

/// The trial data of one individual: a `T x p` covariate block and its
/// binary outcome sequence, ordered by period label.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndividualSlice {
    id: i64,
    periods: Vec<i64>,
    dim: usize,
    /// Row-major, `periods.len() * dim` entries.
    covariates: Vec<f64>,
    outcomes: Vec<u8>,
}

impl IndividualSlice {
    /// Builds a slice with period labels `1..=T`.
    pub fn new(id: i64, covariates: Vec<Vec<f64>>, outcomes: Vec<u8>) -> Result<Self> {
        let periods = (1..=covariates.len() as i64).collect();
        Self::with_periods(id, periods, covariates, outcomes)
    }

    pub fn with_periods(
        id: i64,
        periods: Vec<i64>,
        covariates: Vec<Vec<f64>>,
        outcomes: Vec<u8>,
    ) -> Result<Self> {
        if periods.len() != covariates.len() || periods.len() != outcomes.len() {
            return Err(Error::contract(format!(
                "individual {id}: {} periods, {} covariate rows, {} outcomes",
                periods.len(),
                covariates.len(),
                outcomes.len()
            )));
        }
        if periods.is_empty() {
            return Err(Error::contract(format!("individual {id} has no observations")));
        }
        let dim = covariates[0].len();
        let mut rows: Vec<(i64, Vec<f64>, u8)> = periods
            .into_iter()
            .zip(covariates)
            .zip(outcomes)
            .map(|((t, x), y)| (t, x, y))
            .collect();
        rows.sort_by_key(|r| r.0);
        if rows.windows(2).any(|w| w[0].0 == w[1].0) {
            return Err(Error::Unbalanced(format!(
                "individual {id} has a repeated period label"
            )));
        }
        let mut flat = Vec::with_capacity(rows.len() * dim);
        for (t, x, y) in &rows {
            if x.len() != dim {
                return Err(Error::contract(format!(
                    "individual {id}, period {t}: expected {dim} covariates, got {}",
                    x.len()
                )));
            }
            if x.iter().any(|v| !v.is_finite()) {
                return Err(Error::contract(format!(
                    "individual {id}, period {t}: non-finite covariate"
                )));
            }
            if *y > 1 {
                return Err(Error::contract(format!(
                    "individual {id}, period {t}: outcome {y} not in {{0,1}}"
                )));
            }
            flat.extend_from_slice(x);
        }
        Ok(IndividualSlice {
            id,
            periods: rows.iter().map(|r| r.0).collect(),
            dim,
            covariates: flat,
            outcomes: rows.iter().map(|r| r.2).collect(),
        })
    }

    pub fn id(&self) -> i64 {
        self.id
    }

    pub fn periods(&self) -> &[i64] {
        &self.periods
    }

    pub fn num_periods(&self) -> usize {
        self.outcomes.len()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Covariate row `x_it`.
    pub fn row(&self, t: usize) -> &[f64] {
        &self.covariates[t * self.dim..(t + 1) * self.dim]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.covariates.chunks(self.dim.max(1)).take(self.num_periods())
    }

    pub fn outcomes(&self) -> &[u8] {
        &self.outcomes
    }

    /// `k_i`, the number of periods with outcome 1.
    pub fn choice_total(&self) -> usize {
        self.outcomes.iter().filter(|&&y| y == 1).count()
    }

    pub fn is_informative(&self) -> bool {
        let k = self.choice_total();
        k > 0 && k < self.num_periods()
    }

    /// `Σ_t y_it x_it`.
    pub fn observed_attribute(&self) -> Vec<f64> {
        let mut a = vec![0.0; self.dim];
        for (t, &y) in self.outcomes.iter().enumerate() {
            if y == 1 {
                for (acc, x) in a.iter_mut().zip(self.row(t)) {
                    *acc += x;
                }
            }
        }
        a
    }

    /// Returns a copy with period order permuted; `order[new] = old`.
    pub fn permuted(&self, order: &[usize]) -> Self {
        let rows: Vec<Vec<f64>> = order.iter().map(|&t| self.row(t).to_vec()).collect();
        let y = order.iter().map(|&t| self.outcomes[t]).collect();
        IndividualSlice::new(self.id, rows, y).expect("permutation of a valid slice")
    }

    /// Returns a copy with every covariate row mapped through `f`.
    pub fn map_covariates(&self, mut f: impl FnMut(&[f64]) -> Vec<f64>) -> Self {
        let rows = self.rows().map(&mut f).collect();
        IndividualSlice::with_periods(self.id, self.periods.clone(), rows, self.outcomes.clone())
            .expect("mapped slice keeps shape")
    }
}

/// A validated balanced panel. Immutable once built.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PanelDataset {
    periods: usize,
    dim: usize,
    individuals: Vec<IndividualSlice>,
}

/// Output of [`PanelDataset::informative_subset`].
#[derive(Debug, Clone)]
pub struct InformativeSubset {
    pub data: PanelDataset,
    pub dropped_ids: Vec<i64>,
}

impl InformativeSubset {
    pub fn dropped(&self) -> usize {
        self.dropped_ids.len()
    }
}

impl PanelDataset {
    /// Validates a list of individuals: unique ids, common `T` and `p`.
    /// Individuals are stored sorted by id.
    pub fn from_individuals(mut individuals: Vec<IndividualSlice>) -> Result<Self> {
        if individuals.is_empty() {
            return Err(Error::contract("panel has no individuals"));
        }
        individuals.sort_by_key(|s| s.id);
        if let Some(w) = individuals.windows(2).find(|w| w[0].id == w[1].id) {
            return Err(Error::Unbalanced(format!("individual {} appears twice", w[0].id)));
        }
        let periods = individuals[0].num_periods();
        let dim = individuals[0].dim;
        for s in &individuals {
            if s.num_periods() != periods {
                return Err(Error::Unbalanced(format!(
                    "individual {} has {} periods, expected {periods}",
                    s.id,
                    s.num_periods()
                )));
            }
            if s.dim != dim {
                return Err(Error::contract(format!(
                    "individual {} has {} covariates, expected {dim}",
                    s.id, s.dim
                )));
            }
        }
        Ok(PanelDataset {
            periods,
            dim,
            individuals,
        })
    }

    /// Groups records by id and orders them by period label.
    pub fn from_records(records: impl IntoIterator<Item = Record>) -> Result<Self> {
        let mut groups: BTreeMap<i64, BTreeMap<i64, (u8, Vec<f64>)>> = BTreeMap::new();
        for r in records {
            let periods = groups.entry(r.id).or_default();
            if periods.insert(r.period, (r.outcome, r.covariates)).is_some() {
                return Err(Error::Unbalanced(format!(
                    "duplicate (id, t) = ({}, {})",
                    r.id, r.period
                )));
            }
        }
        let individuals = groups
            .into_iter()
            .map(|(id, rows)| {
                let mut ts = Vec::with_capacity(rows.len());
                let mut xs = Vec::with_capacity(rows.len());
                let mut ys = Vec::with_capacity(rows.len());
                for (t, (y, x)) in rows {
                    ts.push(t);
                    ys.push(y);
                    xs.push(x);
                }
                IndividualSlice::with_periods(id, ts, xs, ys)
            })
            .collect::<Result<Vec<_>>>()?;
        Self::from_individuals(individuals)
    }

    /// Number of individuals `n`.
    pub fn len(&self) -> usize {
        self.individuals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.individuals.is_empty()
    }

    /// Periods per individual `T`.
    pub fn periods(&self) -> usize {
        self.periods
    }

    /// Covariate dimension `p`.
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn individuals(&self) -> &[IndividualSlice] {
        &self.individuals
    }

    pub fn informative_individuals(&self) -> impl Iterator<Item = &IndividualSlice> {
        self.individuals.iter().filter(|s| s.is_informative())
    }

    /// Drops individuals whose outcomes are all zero or all one. Their
    /// alternative set is a singleton and contributes nothing.
    pub fn informative_subset(&self) -> Result<InformativeSubset> {
        let (keep, drop): (Vec<_>, Vec<_>) = self
            .individuals
            .iter()
            .cloned()
            .partition(IndividualSlice::is_informative);
        if keep.is_empty() {
            return Err(Error::NoInformative);
        }
        Ok(InformativeSubset {
            data: PanelDataset {
                periods: self.periods,
                dim: self.dim,
                individuals: keep,
            },
            dropped_ids: drop.iter().map(|s| s.id).collect(),
        })
    }

    pub fn map_individuals(&self, f: impl FnMut(&IndividualSlice) -> IndividualSlice) -> Self {
        let individuals = self.individuals.iter().map(f).collect();
        Self::from_individuals(individuals).expect("mapping keeps the panel balanced")
    }

    /// Every `(i, t)` observation in storage order.
    pub fn observations(&self) -> impl Iterator<Item = (&[f64], u8)> {
        self.individuals
            .iter()
            .flat_map(|s| (0..s.num_periods()).map(move |t| (s.row(t), s.outcomes[t])))
    }

    pub fn to_records(&self) -> Vec<Record> {
        self.individuals
            .iter()
            .flat_map(|s| {
                (0..s.num_periods()).map(move |t| Record {
                    id: s.id,
                    period: s.periods[t],
                    outcome: s.outcomes[t],
                    covariates: s.row(t).to_vec(),
                })
            })
            .collect()
    }

    /// Parses CSV text with header `id,t,y,x1,...,xp`.
    pub fn from_csv_reader<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let headers = rdr.headers()?.clone();
        let dim = check_header(&headers)?;
        let names: Vec<String> = headers.iter().map(str::to_owned).collect();

        let mut records = Vec::new();
        for row in rdr.records() {
            let row = row?;
            let line = row.position().map(|p| p.line() as usize).unwrap_or(0);
            let cell = |c: usize| -> Result<&str> {
                match row.get(c) {
                    Some(v) if !v.is_empty() => Ok(v),
                    _ => Err(Error::Parse {
                        row: line,
                        column: names[c].clone(),
                        message: "missing value".into(),
                    }),
                }
            };
            let parse_int = |c: usize| -> Result<i64> {
                let v = cell(c)?;
                v.parse::<i64>().map_err(|_| Error::Parse {
                    row: line,
                    column: names[c].clone(),
                    message: format!("expected an integer, found {v:?}"),
                })
            };
            let parse_real = |c: usize| -> Result<f64> {
                let v = cell(c)?;
                match v.parse::<f64>() {
                    Ok(x) if x.is_finite() => Ok(x),
                    _ => Err(Error::Parse {
                        row: line,
                        column: names[c].clone(),
                        message: format!("expected a finite number, found {v:?}"),
                    }),
                }
            };
            let id = parse_int(0)?;
            let period = parse_int(1)?;
            let outcome = match parse_real(2)? {
                0.0 => 0,
                1.0 => 1,
                _ => {
                    return Err(Error::InvalidOutcome {
                        row: line,
                        value: cell(2)?.to_owned(),
                    })
                }
            };
            let covariates = (3..3 + dim).map(parse_real).collect::<Result<Vec<_>>>()?;
            records.push(Record {
                id,
                period,
                outcome,
                covariates,
            });
        }
        if records.is_empty() {
            return Err(Error::Unbalanced("no data rows".into()));
        }
        Self::from_records(records)
    }

    pub fn from_csv_str(text: &str) -> Result<Self> {
        Self::from_csv_reader(text.as_bytes())
    }

    /// Writes the panel back out in the input CSV format.
    pub fn to_csv_string(&self) -> String {
        let mut out = String::from("id,t,y");
        for j in 1..=self.dim {
            out.push_str(&format!(",x{j}"));
        }
        out.push('\n');
        for r in self.to_records() {
            out.push_str(&format!("{},{},{}", r.id, r.period, r.outcome));
            for x in &r.covariates {
                out.push_str(&format!(",{x:?}"));
            }
            out.push('\n');
        }
        out
    }
}

/// Reads and validates a panel CSV file.
pub fn load_csv(path: impl AsRef<Path>) -> Result<PanelDataset> {
    let file = std::fs::File::open(path)?;
    PanelDataset::from_csv_reader(std::io::BufReader::new(file))
}

fn check_header(headers: &csv::StringRecord) -> Result<usize> {
    let cols: Vec<&str> = headers.iter().collect();
    if cols.len() < 4 || cols[..3] != ["id", "t", "y"] {
        return Err(Error::Header(format!(
            "expected id,t,y,x1,...,xp; found {}",
            cols.join(",")
        )));
    }
    for (j, name) in cols[3..].iter().enumerate() {
        if *name != format!("x{}", j + 1) {
            return Err(Error::Header(format!(
                "covariate column {} should be named x{}, found {name:?}",
                j + 4,
                j + 1
            )));
        }
    }
    Ok(cols.len() - 3)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::THRESHOLD_CSV;

    #[test]
    fn threshold_shape() {
        let data = PanelDataset::from_csv_str(THRESHOLD_CSV).unwrap();
        assert_eq!((data.len(), data.periods(), data.dim()), (10, 3, 1));
        assert_eq!(data.individuals()[6].row(0), &[0.001]);
        assert_eq!(data.individuals()[9].outcomes(), &[0, 0, 1]);
    }

    #[test]
    fn minimal_panel() {
        let data = PanelDataset::from_csv_str("id,t,y,x1\n1,1,0,0.0\n1,2,1,1.0\n").unwrap();
        assert_eq!((data.len(), data.periods(), data.dim()), (1, 2, 1));
    }

    #[test]
    fn unbalanced_is_rejected() {
        let text = "id,t,y,x1\n1,1,0,0\n1,2,1,1\n1,3,0,2\n3,1,0,0\n3,2,1,1\n";
        let err = PanelDataset::from_csv_str(text).unwrap_err();
        assert!(err.to_string().contains("unbalanced or duplicated panel"), "{err}");
    }

    #[test]
    fn duplicate_pair_is_rejected() {
        let text = "id,t,y,x1\n1,1,0,0\n1,1,1,1\n";
        let err = PanelDataset::from_csv_str(text).unwrap_err();
        assert!(err.to_string().contains("unbalanced or duplicated panel"), "{err}");
    }

    #[test]
    fn outcome_outside_binary() {
        let err = PanelDataset::from_csv_str("id,t,y,x1\n1,1,2,0\n1,2,0,1\n").unwrap_err();
        assert!(matches!(err, Error::InvalidOutcome { row: 2, .. }), "{err}");
        assert!(err.to_string().contains("invalid outcome"));
    }

    #[test]
    fn non_numeric_cell_reports_location() {
        let err = PanelDataset::from_csv_str("id,t,y,x1\n1,1,0,0\n1,2,1,abc\n").unwrap_err();
        match err {
            Error::Parse { row, column, .. } => {
                assert_eq!(row, 3);
                assert_eq!(column, "x1");
            }
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn missing_cell_is_an_error() {
        let err = PanelDataset::from_csv_str("id,t,y,x1\n1,1,0,\n1,2,1,1\n").unwrap_err();
        assert!(matches!(err, Error::Parse { .. }), "{err}");
    }

    #[test]
    fn header_is_checked() {
        assert!(matches!(
            PanelDataset::from_csv_str("id,t,y,z\n1,1,0,0\n"),
            Err(Error::Header(_))
        ));
        assert!(matches!(
            PanelDataset::from_csv_str("id,y,t,x1\n1,1,0,0\n"),
            Err(Error::Header(_))
        ));
    }

    #[test]
    fn periods_need_only_be_distinct() {
        let text = "id,t,y,x1\n1,30,1,3\n1,10,0,1\n1,20,0,2\n";
        let data = PanelDataset::from_csv_str(text).unwrap();
        let s = &data.individuals()[0];
        assert_eq!(s.periods(), &[10, 20, 30]);
        assert_eq!(s.outcomes(), &[0, 0, 1]);
        assert_eq!(s.row(2), &[3.0]);
    }

    #[test]
    fn informative_subset_on_threshold_panel() {
        let data = PanelDataset::from_csv_str(THRESHOLD_CSV).unwrap();
        let sub = data.informative_subset().unwrap();
        assert_eq!(sub.dropped_ids, vec![1, 5, 8]);
        assert_eq!(sub.data.len(), 7);
        let again = sub.data.informative_subset().unwrap();
        assert_eq!(again.data, sub.data);
        assert_eq!(again.dropped(), 0);
    }

    #[test]
    fn alternating_panel_keeps_everyone() {
        let s1 = IndividualSlice::new(1, vec![vec![0.1], vec![0.2]], vec![0, 1]).unwrap();
        let s2 = IndividualSlice::new(2, vec![vec![0.3], vec![0.4]], vec![1, 0]).unwrap();
        let data = PanelDataset::from_individuals(vec![s1, s2]).unwrap();
        let sub = data.informative_subset().unwrap();
        assert_eq!(sub.data, data);
        assert_eq!(sub.dropped(), 0);
    }

    #[test]
    fn all_zero_outcomes_have_nothing_to_estimate() {
        let data = PanelDataset::from_csv_str("id,t,y,x1\n1,1,0,0\n1,2,0,1\n2,1,0,0\n2,2,0,1\n")
            .unwrap();
        assert!(matches!(data.informative_subset(), Err(Error::NoInformative)));
    }

    #[test]
    fn csv_round_trip() {
        let data = PanelDataset::from_csv_str(THRESHOLD_CSV).unwrap();
        let again = PanelDataset::from_csv_str(&data.to_csv_string()).unwrap();
        assert_eq!(data, again);
    }
}
