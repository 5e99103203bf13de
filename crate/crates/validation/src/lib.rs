//! Small helpers shared by the acceptance checks.

use std::time::Instant;

/// Median of a non-empty sample (upper median for even sizes).
pub fn median(mut v: Vec<f64>) -> f64 {
    assert!(!v.is_empty(), "median of an empty sample");
    v.sort_by(f64::total_cmp);
    v[v.len() / 2]
}

/// Result of one acceptance criterion.
#[derive(Clone, Debug)]
pub struct Outcome {
    pub id: String,
    pub name: &'static str,
    pub pass: bool,
    pub detail: String,
    pub seconds: f64,
}

impl Outcome {
    pub fn line(&self) -> String {
        format!(
            "{} {:>3} {}: {} [{:.1} s]",
            if self.pass { "PASS" } else { "FAIL" },
            self.id,
            self.name,
            self.detail,
            self.seconds
        )
    }
}

/// Runs a check, timing it against an optional budget in seconds. A check
/// returns whether its numerical conditions hold and a description of what
/// was measured; an `Err` counts as a failure.
pub fn run_check(
    id: &str,
    name: &'static str,
    budget: Option<f64>,
    check: impl FnOnce() -> Result<(bool, String), String>,
) -> Outcome {
    let start = Instant::now();
    let result = check();
    let seconds = start.elapsed().as_secs_f64();
    let (mut pass, mut detail) = match result {
        Ok(r) => r,
        Err(e) => (false, format!("error: {e}")),
    };
    if let Some(b) = budget {
        if seconds > b {
            pass = false;
            detail.push_str(&format!("; over the {b:.0} s budget"));
        }
    }
    let out = Outcome { id: id.into(), name, pass, detail, seconds };
    println!("{}", out.line());
    out
}
