use serde::{Deserialize, Serialize};

/// Size guards and tolerances shared across modules. Every field has a
/// default and can be overridden from the command line.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Settings {
    /// Relative membership tolerance; the absolute one is `tol·(1 + ‖b‖∞)`.
    pub tol: f64,
    pub max_face_rows: usize,
    pub max_oracle_rows: usize,
    pub max_cone_rows: usize,
    pub max_pieces: usize,
    pub max_rows_per_piece: usize,
    pub max_maxmin_terms: usize,
    pub max_enumeration_rows: usize,
    pub max_composite_pieces: usize,
    pub max_composite_dim: usize,
}

impl Default for Settings {
    fn default() -> Self {
        Self {
            tol: 1e-9,
            max_face_rows: 25,
            max_oracle_rows: 20,
            max_cone_rows: 18,
            max_pieces: 8,
            max_rows_per_piece: 8,
            max_maxmin_terms: 20,
            max_enumeration_rows: 20,
            max_composite_pieces: 4,
            max_composite_dim: 6,
        }
    }
}

impl Settings {
    /// Override every row guard at once.
    pub fn with_max_rows(mut self, rows: usize) -> Self {
        self.max_face_rows = rows;
        self.max_oracle_rows = rows;
        self.max_cone_rows = rows;
        self.max_rows_per_piece = rows;
        self.max_enumeration_rows = rows;
        self
    }

    pub fn with_max_pieces(mut self, pieces: usize) -> Self {
        self.max_pieces = pieces;
        self.max_maxmin_terms = pieces.max(self.max_maxmin_terms);
        self.max_composite_pieces = pieces;
        self
    }
}
