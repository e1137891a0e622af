use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use crate::config::KeyValues;
use crate::{Error, Result};

const TABLE1_MAP: &str = include_str!("../../data/table1_hubs.map");

/// Arrhythmogenic factor a feature describes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Hub {
    /// Myocardial substrate (QRS, ST and T-wave morphology).
    Substrate,
    /// Autonomic nervous system (HRV and turbulence).
    Ans,
    /// Trigger elements (ectopic beats and patterns).
    Triggers,
}

impl Hub {
    /// Declaration order; ad hoc networks concatenate hub blocks in this order.
    pub const ALL: [Hub; 3] = [Hub::Substrate, Hub::Ans, Hub::Triggers];

    pub fn index(self) -> usize {
        match self {
            Hub::Substrate => 0,
            Hub::Ans => 1,
            Hub::Triggers => 2,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Hub::Substrate => "SUBSTRATE",
            Hub::Ans => "ANS",
            Hub::Triggers => "TRIGGERS",
        }
    }
}

impl fmt::Display for Hub {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Hub {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "SUBSTRATE" => Ok(Hub::Substrate),
            "ANS" => Ok(Hub::Ans),
            "TRIGGERS" => Ok(Hub::Triggers),
            other => Err(Error::format("", None, format!("unknown hub `{other}`"))),
        }
    }
}

/// Feature name to hub assignment, read from `feature_name = HUB` lines.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct HubMap {
    entries: BTreeMap<String, Hub>,
}

impl HubMap {
    pub fn new() -> Self {
        Self::default()
    }

    /// The shipped grouping of the eighteen retained Holter features.
    pub fn table1() -> Self {
        Self::parse(TABLE1_MAP, "table1_hubs.map").expect("bundled hub map is well formed")
    }

    pub fn parse(text: &str, context: &str) -> Result<Self> {
        let kv = KeyValues::parse(text, context)?;
        let mut entries = BTreeMap::new();
        for (name, hub) in kv.iter() {
            let hub = hub.parse::<Hub>().map_err(|_| {
                Error::format(
                    context,
                    None,
                    format!("feature `{name}`: unknown hub `{hub}`"),
                )
            })?;
            entries.insert(name.to_string(), hub);
        }
        Ok(HubMap { entries })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, &path.display().to_string())
    }

    pub fn insert(&mut self, feature: impl Into<String>, hub: Hub) {
        self.entries.insert(feature.into(), hub);
    }

    pub fn get(&self, feature: &str) -> Option<Hub> {
        self.entries.get(feature).copied()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, Hub)> {
        self.entries.iter().map(|(k, v)| (k.as_str(), *v))
    }

    /// Renders the map in its file format, grouped by hub.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for hub in Hub::ALL {
            for (name, h) in self.iter() {
                if h == hub {
                    out.push_str(&format!("{name} = {hub}\n"));
                }
            }
        }
        out
    }
}

impl FromIterator<(String, Hub)> for HubMap {
    fn from_iter<I: IntoIterator<Item = (String, Hub)>>(iter: I) -> Self {
        HubMap {
            entries: iter.into_iter().collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table1_has_7_6_5() {
        let map = HubMap::table1();
        assert_eq!(map.len(), 18);
        let count = |h| map.iter().filter(|(_, x)| *x == h).count();
        assert_eq!(count(Hub::Substrate), 7);
        assert_eq!(count(Hub::Ans), 6);
        assert_eq!(count(Hub::Triggers), 5);
    }

    #[test]
    fn text_round_trip() {
        let map = HubMap::table1();
        assert_eq!(HubMap::parse(&map.to_text(), "t").unwrap(), map);
    }

    #[test]
    fn unknown_hub_rejected() {
        assert!(HubMap::parse("foo = HEART\n", "t").is_err());
    }
}
