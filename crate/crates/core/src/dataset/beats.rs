use std::fmt::Write as _;
use std::path::Path;

use crate::{Error, Result};

/// Beat annotation, collapsed to four classes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BeatType {
    Normal,
    /// Premature ventricular contraction.
    Pvc,
    /// Premature atrial contraction.
    Pac,
    Other,
}

impl BeatType {
    pub fn code(self) -> char {
        match self {
            BeatType::Normal => 'N',
            BeatType::Pvc => 'V',
            BeatType::Pac => 'A',
            BeatType::Other => 'O',
        }
    }

    /// Maps an annotation code onto the four classes. Accepts the canonical
    /// `N`/`V`/`A`/`O` plus common MIT-BIH style codes, which are collapsed.
    pub fn from_code(code: &str) -> Option<Self> {
        match code {
            "N" | "L" | "R" | "e" | "j" => Some(BeatType::Normal),
            "V" | "E" => Some(BeatType::Pvc),
            "A" | "a" | "J" | "S" => Some(BeatType::Pac),
            "O" | "F" | "f" | "/" | "Q" => Some(BeatType::Other),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Beat {
    /// Milliseconds from record start.
    pub time_ms: f64,
    pub kind: BeatType,
}

impl Beat {
    pub fn new(time_ms: f64, kind: BeatType) -> Self {
        Beat { time_ms, kind }
    }
}

/// Timestamped, annotated heartbeats of one record.
#[derive(Debug, Clone, PartialEq)]
pub struct BeatSeries {
    beats: Vec<Beat>,
    duration_ms: f64,
}

impl BeatSeries {
    /// Validates strictly increasing, non-negative times that all fall within
    /// a positive duration.
    pub fn new(beats: Vec<Beat>, duration_ms: f64) -> Result<Self> {
        if !(duration_ms.is_finite() && duration_ms > 0.0) {
            return Err(Error::format(
                "beat series",
                None,
                format!("duration must be positive, got {duration_ms}"),
            ));
        }
        for (i, b) in beats.iter().enumerate() {
            if !(b.time_ms.is_finite() && b.time_ms >= 0.0) {
                return Err(Error::format(
                    "beat series",
                    None,
                    format!("beat {i}: invalid time {}", b.time_ms),
                ));
            }
            if b.time_ms > duration_ms {
                return Err(Error::format(
                    "beat series",
                    None,
                    format!(
                        "beat {i} at {} ms lies beyond duration {duration_ms} ms",
                        b.time_ms
                    ),
                ));
            }
            if i > 0 && b.time_ms <= beats[i - 1].time_ms {
                return Err(Error::format(
                    "beat series",
                    None,
                    format!(
                        "beat {i} at {} ms does not follow {} ms",
                        b.time_ms,
                        beats[i - 1].time_ms
                    ),
                ));
            }
        }
        Ok(BeatSeries { beats, duration_ms })
    }

    /// Builds a series whose duration is the last beat time.
    pub fn from_beats(beats: Vec<Beat>) -> Result<Self> {
        let duration = beats.last().map_or(0.0, |b| b.time_ms);
        Self::new(beats, duration)
    }

    pub fn beats(&self) -> &[Beat] {
        &self.beats
    }

    pub fn duration_ms(&self) -> f64 {
        self.duration_ms
    }

    pub fn len(&self) -> usize {
        self.beats.len()
    }

    pub fn is_empty(&self) -> bool {
        self.beats.is_empty()
    }

    pub fn parse(text: &str, context: &str) -> Result<Self> {
        let mut duration = None;
        let mut beats: Vec<Beat> = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let lineno = i + 1;
            let line = raw.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(comment) = line.strip_prefix('#') {
                if let Some(v) = comment.trim().strip_prefix("duration_ms=") {
                    let d: u64 = v.trim().parse().map_err(|_| {
                        Error::format(context, Some(lineno), format!("bad duration `{v}`"))
                    })?;
                    duration = Some(d as f64);
                }
                continue;
            }
            let (t, code) = line.split_once(',').ok_or_else(|| {
                Error::format(
                    context,
                    Some(lineno),
                    format!("expected `time_ms,type`, got `{line}`"),
                )
            })?;
            let code = code.trim();
            let t = t.trim();
            let time_ms: f64 = match t.parse() {
                Ok(v) => v,
                // tolerate a `time_ms,type` header row
                Err(_) if beats.is_empty() && t == "time_ms" => continue,
                Err(_) => {
                    return Err(Error::format(
                        context,
                        Some(lineno),
                        format!("bad time `{t}`"),
                    ))
                }
            };
            let kind = BeatType::from_code(code).ok_or_else(|| {
                Error::format(context, Some(lineno), format!("unknown beat type `{code}`"))
            })?;
            if let Some(prev) = beats.last() {
                if time_ms <= prev.time_ms {
                    return Err(Error::format(
                        context,
                        Some(lineno),
                        format!("non-monotonic time {time_ms} after {}", prev.time_ms),
                    ));
                }
            }
            beats.push(Beat { time_ms, kind });
        }
        let duration = duration.unwrap_or_else(|| beats.last().map_or(0.0, |b| b.time_ms));
        Self::new(beats, duration).map_err(|e| match e {
            Error::Format { message, .. } => Error::format(context, None, message),
            other => other,
        })
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        if self.duration_ms.fract() == 0.0 {
            let _ = writeln!(out, "# duration_ms={}", self.duration_ms as u64);
        }
        for b in &self.beats {
            let _ = writeln!(out, "{},{}", b.time_ms, b.kind.code());
        }
        out
    }
}

/// Reads a beat-CSV file: optional `# duration_ms=<int>` header, then
/// `time_ms,type` rows.
pub fn load_beat_series(path: &Path) -> Result<BeatSeries> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    BeatSeries::parse(&text, &path.display().to_string())
}

pub fn write_beat_series(path: &Path, series: &BeatSeries) -> Result<()> {
    std::fs::write(path, series.to_text()).map_err(|e| Error::io(path, e))
}
