use serde::Serialize;

use super::ast::ContinuousQuery;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum EngineKind {
    TimeDriven,
    DataDriven,
}

impl std::str::FromStr for EngineKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "time-driven" => Ok(EngineKind::TimeDriven),
            "data-driven" => Ok(EngineKind::DataDriven),
            other => Err(format!("unknown engine {other:?} (expected time-driven or data-driven)")),
        }
    }
}

impl std::fmt::Display for EngineKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            EngineKind::TimeDriven => "time-driven",
            EngineKind::DataDriven => "data-driven",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Support {
    Supported,
    Rejected,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Feature {
    TimestampFunction,
    Aggregation,
    Union,
    StaticJoin,
}

/// Which gated query features an engine accepts for a given query. Features
/// the query does not use are reported as supported.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub struct CapabilityReport {
    pub timestamp_function: Support,
    pub aggregation: Support,
    pub union: Support,
    pub static_join: Support,
}

impl CapabilityReport {
    pub fn all_supported(&self) -> bool {
        self.rejected().is_empty()
    }

    pub fn rejected(&self) -> Vec<Feature> {
        [
            (Feature::TimestampFunction, self.timestamp_function),
            (Feature::Aggregation, self.aggregation),
            (Feature::Union, self.union),
            (Feature::StaticJoin, self.static_join),
        ]
        .into_iter()
        .filter(|(_, s)| *s == Support::Rejected)
        .map(|(f, _)| f)
        .collect()
    }
}

pub fn capability_check(q: &ContinuousQuery, engine: EngineKind) -> CapabilityReport {
    let gate = |used: bool, supported: bool| {
        if used && !supported {
            Support::Rejected
        } else {
            Support::Supported
        }
    };
    let data_driven = engine == EngineKind::DataDriven;
    CapabilityReport {
        timestamp_function: gate(q.temporal_filter.is_some(), !data_driven),
        aggregation: gate(q.has_aggregates(), true),
        union: gate(q.union_branches.is_some(), true),
        static_join: gate(q.all_patterns().any(|p| p.is_static()), true),
    }
}
