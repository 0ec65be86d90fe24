use serde::Serialize;

use crate::trace::{InclusionTree, Level, UnitId};

/// A treemap tile: leaf weight is the worker's vertex count, inner weights
/// sum their children.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct WeightNode {
    pub unit: UnitId,
    pub label: String,
    pub level: Level,
    pub weight: u64,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub children: Vec<WeightNode>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TreemapWeights {
    pub total: u64,
    pub racks: Vec<WeightNode>,
}

pub fn treemap_weights(tree: &InclusionTree) -> TreemapWeights {
    let node = |unit: UnitId, children: Vec<WeightNode>, weight: Option<u64>| WeightNode {
        label: unit.label().to_string(),
        level: unit.level(),
        weight: weight.unwrap_or_else(|| children.iter().map(|c| c.weight).sum()),
        unit,
        children,
    };
    let racks: Vec<WeightNode> = tree
        .racks()
        .iter()
        .map(|r| {
            let hosts = r
                .hosts
                .iter()
                .map(|h| {
                    let workers = h
                        .workers
                        .iter()
                        .map(|w| node(UnitId::worker(&r.label, &h.label, &w.label), Vec::new(), Some(w.vertices)))
                        .collect();
                    node(UnitId::host(&r.label, &h.label), workers, None)
                })
                .collect();
            node(UnitId::rack(&r.label), hosts, None)
        })
        .collect();
    TreemapWeights { total: racks.iter().map(|r| r.weight).sum(), racks }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trace::TopologyRecord;

    #[test]
    fn inner_weights_sum_children() {
        let tree = InclusionTree::from_records(vec![
            TopologyRecord::new("r0", "h0", "w0", 30),
            TopologyRecord::new("r0", "h0", "w1", 70),
            TopologyRecord::new("r0", "h1", "w2", 100),
        ])
        .unwrap();
        let t = treemap_weights(&tree);
        assert_eq!(t.total, 200);
        let hosts = &t.racks[0].children;
        assert_eq!(hosts[0].weight, 100);
        assert_eq!(hosts[1].weight, 100);
        assert_eq!(hosts[0].children[1].weight, 70);
        assert_eq!(hosts[0].children[1].unit.to_string(), "r0/h0/w1");
    }
}
