use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use super::{CoreState, CostModel};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SectionRow {
    pub label: String,
    pub cycles: u64,
    pub percent: f64,
}

/// Cycle breakdown document, serialized as `cycles.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CycleReport {
    pub total_cycles: u64,
    pub sections: Vec<SectionRow>,
    pub staged_bytes_in: u64,
    pub staged_bytes_out: u64,
    pub config: CostModel,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub run_config: Option<String>,
}

impl CycleReport {
    /// Builds a report from per-section subtotals. Sections with zero cycles
    /// are dropped.
    pub fn from_sections(
        sections: &IndexMap<String, u64>,
        staged_bytes_in: u64,
        staged_bytes_out: u64,
        config: CostModel,
    ) -> CycleReport {
        let total: u64 = sections.values().sum();
        let rows = sections
            .iter()
            .filter(|(_, &c)| c > 0)
            .map(|(label, &cycles)| SectionRow {
                label: label.clone(),
                cycles,
                percent: if total == 0 {
                    0.0
                } else {
                    cycles as f64 * 100.0 / total as f64
                },
            })
            .collect();
        CycleReport {
            total_cycles: total,
            sections: rows,
            staged_bytes_in,
            staged_bytes_out,
            config,
            run_config: None,
        }
    }

    pub fn from_state(core: &CoreState) -> CycleReport {
        CycleReport::from_sections(
            core.section_cycles(),
            core.staged_bytes_in(),
            core.staged_bytes_out(),
            core.cost_model(),
        )
    }

    /// Report of everything `core` did since `before` was captured.
    pub fn since(before: &Snapshot, core: &CoreState) -> CycleReport {
        let mut delta = IndexMap::new();
        for (label, &now) in core.section_cycles() {
            let then = before.sections.get(label).copied().unwrap_or(0);
            delta.insert(label.clone(), now - then);
        }
        CycleReport::from_sections(
            &delta,
            core.staged_bytes_in() - before.staged_in,
            core.staged_bytes_out() - before.staged_out,
            core.cost_model(),
        )
    }

    pub fn section(&self, label: &str) -> Option<&SectionRow> {
        self.sections.iter().find(|r| r.label == label)
    }

    /// Adds `other` into `self`, section by section, keeping first-seen order.
    pub fn accumulate(&mut self, other: &CycleReport) {
        let mut cycles: IndexMap<String, u64> =
            self.sections.iter().map(|r| (r.label.clone(), r.cycles)).collect();
        for r in &other.sections {
            *cycles.entry(r.label.clone()).or_insert(0) += r.cycles;
        }
        let merged = CycleReport::from_sections(
            &cycles,
            self.staged_bytes_in + other.staged_bytes_in,
            self.staged_bytes_out + other.staged_bytes_out,
            self.config,
        );
        self.total_cycles = merged.total_cycles;
        self.sections = merged.sections;
        self.staged_bytes_in = merged.staged_bytes_in;
        self.staged_bytes_out = merged.staged_bytes_out;
    }

    pub fn empty(config: CostModel) -> CycleReport {
        CycleReport::from_sections(&IndexMap::new(), 0, 0, config)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report is always serializable")
    }
}

/// Counter values captured before a run, for [`CycleReport::since`].
#[derive(Debug, Clone)]
pub struct Snapshot {
    sections: IndexMap<String, u64>,
    staged_in: u64,
    staged_out: u64,
}

impl CoreState {
    pub fn snapshot(&self) -> Snapshot {
        Snapshot {
            sections: self.section_cycles().clone(),
            staged_in: self.staged_bytes_in(),
            staged_out: self.staged_bytes_out(),
        }
    }
}
