use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use serde::Serialize;

use super::Trial;
use crate::hyperspace::ConfigSample;

/// Receives every trial as soon as it finishes.
pub trait TrialSink {
    fn record(&mut self, trial: &Trial) -> io::Result<()>;
}

pub struct NullSink;

impl TrialSink for NullSink {
    fn record(&mut self, _trial: &Trial) -> io::Result<()> {
        Ok(())
    }
}

impl TrialSink for Vec<Trial> {
    fn record(&mut self, trial: &Trial) -> io::Result<()> {
        self.push(trial.clone());
        Ok(())
    }
}

#[derive(Serialize)]
#[serde(untagged)]
enum Objective {
    Finite(f64),
    Text(&'static str),
}

#[derive(Serialize)]
struct LogLine<'a> {
    id: usize,
    config: &'a ConfigSample,
    objective: Objective,
    status: &'static str,
    wall_ms: u64,
}

/// One JSON object, no trailing newline. Non-finite objectives are written
/// as the string "inf".
pub fn trial_log_line(trial: &Trial) -> String {
    let objective = match trial.objective {
        Some(v) if v.is_finite() => Objective::Finite(v),
        _ => Objective::Text("inf"),
    };
    serde_json::to_string(&LogLine {
        id: trial.id,
        config: &trial.config,
        objective,
        status: trial.status.as_str(),
        wall_ms: trial.wall_ms,
    })
    .expect("trial serializes")
}

/// Append-only JSONL log, flushed after every line.
pub struct JsonlSink<W: Write> {
    out: W,
}

impl JsonlSink<BufWriter<File>> {
    pub fn create(path: &Path) -> io::Result<Self> {
        Ok(Self { out: BufWriter::new(File::create(path)?) })
    }
}

impl<W: Write> JsonlSink<W> {
    pub fn new(out: W) -> Self {
        Self { out }
    }

    pub fn into_inner(self) -> W {
        self.out
    }
}

impl<W: Write> TrialSink for JsonlSink<W> {
    fn record(&mut self, trial: &Trial) -> io::Result<()> {
        writeln!(self.out, "{}", trial_log_line(trial))?;
        self.out.flush()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn log_line_shape() {
        let t = Trial::complete(3, ConfigSample::new().with("x", 0.5), 0.25, 7);
        assert_eq!(
            trial_log_line(&t),
            r#"{"id":3,"config":{"x":0.5},"objective":0.25,"status":"complete","wall_ms":7}"#
        );
        let f = Trial::failed(4, ConfigSample::new(), 1);
        assert!(trial_log_line(&f).contains(r#""objective":"inf","status":"failed""#));
    }

    #[test]
    fn jsonl_appends_lines() {
        let mut sink = JsonlSink::new(Vec::new());
        sink.record(&Trial::complete(0, ConfigSample::new(), 1.0, 0)).unwrap();
        sink.record(&Trial::failed(1, ConfigSample::new(), 0)).unwrap();
        let text = String::from_utf8(sink.into_inner()).unwrap();
        assert_eq!(text.lines().count(), 2);
    }
}
