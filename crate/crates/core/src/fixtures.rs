//! Small datasets with known answers.

use crate::panel::{IndividualSlice, PanelDataset};

/// The ten-individual, three-period artificial panel in which `y = 1`
/// exactly when `x > 0.5`. Shipped as `fixtures/threshold.csv`.
pub const THRESHOLD_CSV: &str = include_str!("../fixtures/threshold.csv");

pub fn threshold_panel() -> PanelDataset {
    PanelDataset::from_csv_str(THRESHOLD_CSV).expect("bundled fixture is valid")
}

fn scalar_panel(rows: &[([f64; 2], [u8; 2])]) -> PanelDataset {
    let individuals = rows
        .iter()
        .enumerate()
        .map(|(i, (x, y))| {
            IndividualSlice::new(i as i64 + 1, x.iter().map(|v| vec![*v]).collect(), y.to_vec())
                .expect("valid fixture")
        })
        .collect();
    PanelDataset::from_individuals(individuals).expect("valid fixture")
}

/// Two individuals whose attribute gaps cancel: `β̂ = 0`.
pub fn symmetric_pair() -> PanelDataset {
    scalar_panel(&[([0.0, 1.0], [0, 1]), ([1.0, 0.0], [0, 1])])
}

/// One individual against two mirrored ones: `β̂ = log(1/2)`.
pub fn closed_form_triple() -> PanelDataset {
    scalar_panel(&[
        ([0.0, 1.0], [0, 1]),
        ([1.0, 0.0], [0, 1]),
        ([1.0, 0.0], [0, 1]),
    ])
}

/// Four pooled rows `(y, x)` = (0,0), (1,1), (1,0), (0,1) with overlap in
/// both classes, so no pooled separator exists.
pub fn xor_rows() -> PanelDataset {
    scalar_panel(&[([0.0, 1.0], [0, 1]), ([0.0, 1.0], [1, 0])])
}
