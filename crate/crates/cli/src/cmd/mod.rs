pub mod consistency;
pub mod curriculum;
pub mod evaluate;
pub mod matching;
pub mod refine;
pub mod validate;

/// Input checks failed; details were already printed.
#[derive(Debug)]
pub struct ValidationFailed(pub usize);

impl std::fmt::Display for ValidationFailed {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{} input(s) failed validation", self.0)
    }
}

impl std::error::Error for ValidationFailed {}

/// Percentage with one decimal, or `n/a`.
pub fn percent(v: Option<f64>) -> String {
    v.map_or_else(|| "n/a".to_string(), |v| format!("{v:.1}%"))
}
