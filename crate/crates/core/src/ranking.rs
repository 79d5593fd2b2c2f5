//! Ranked query results.

use alloc::string::String;
use alloc::vec::Vec;

/// Cost of one model against the query target.
#[derive(Debug, Clone, PartialEq)]
pub struct MatchResult {
    pub model_id: String,
    pub total_cost: f64,
    pub shift_applied: f64,
    /// The model matched best in mirrored orientation.
    pub mirrored: bool,
}

/// Results sorted by ascending cost, ties broken by model id.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RankedList {
    entries: Vec<MatchResult>,
}

impl RankedList {
    pub fn new(mut entries: Vec<MatchResult>) -> Self {
        entries.sort_by(|a, b| {
            a.total_cost
                .total_cmp(&b.total_cost)
                .then_with(|| a.model_id.cmp(&b.model_id))
        });
        Self { entries }
    }

    pub fn entries(&self) -> &[MatchResult] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// 1-based rank of a model.
    pub fn rank_of(&self, model_id: &str) -> Option<usize> {
        self.entries
            .iter()
            .position(|e| e.model_id == model_id)
            .map(|i| i + 1)
    }

    pub fn top(&self, k: usize) -> &[MatchResult] {
        &self.entries[..k.min(self.entries.len())]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::string::ToString;
    use alloc::vec;

    fn r(id: &str, cost: f64) -> MatchResult {
        MatchResult {
            model_id: id.to_string(),
            total_cost: cost,
            shift_applied: 0.0,
            mirrored: false,
        }
    }

    #[test]
    fn sorted_by_cost_then_id() {
        let list = RankedList::new(vec![r("b", 1.0), r("c", 0.5), r("a", 1.0)]);
        let ids: Vec<&str> = list.entries().iter().map(|e| e.model_id.as_str()).collect();
        assert_eq!(ids, ["c", "a", "b"]);
        assert_eq!(list.rank_of("a"), Some(2));
        assert_eq!(list.rank_of("zz"), None);
        assert_eq!(list.top(10).len(), 3);
        assert_eq!(list.top(1)[0].model_id, "c");
    }
}
