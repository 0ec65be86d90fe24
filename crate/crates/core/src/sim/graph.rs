use std::collections::HashSet;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum GraphError {
    #[error("graph has no vertices")]
    Empty,
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("duplicate edge {0} -> {1}")]
    DuplicateEdge(usize, usize),
    #[error("edge {0} -> {1} references a vertex outside 0..{2}")]
    OutOfRange(usize, usize, usize),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge {
    pub target: usize,
    pub weight: f64,
}

/// A directed input graph over dense vertex ids `0..n`.
#[derive(Debug, Clone, PartialEq)]
pub struct InputGraph {
    name: String,
    out: Vec<Vec<Edge>>,
}

impl InputGraph {
    /// Builds a graph from weighted edges. Missing weights default to 1.
    pub fn from_edges(
        vertex_count: usize,
        edges: impl IntoIterator<Item = (usize, usize, Option<f64>)>,
    ) -> Result<Self, GraphError> {
        if vertex_count == 0 {
            return Err(GraphError::Empty);
        }
        let mut out = vec![Vec::new(); vertex_count];
        let mut seen = HashSet::new();
        for (u, v, w) in edges {
            if u >= vertex_count || v >= vertex_count {
                return Err(GraphError::OutOfRange(u, v, vertex_count));
            }
            if !seen.insert((u, v)) {
                return Err(GraphError::DuplicateEdge(u, v));
            }
            out[u].push(Edge { target: v, weight: w.unwrap_or(1.0) });
        }
        for list in &mut out {
            list.sort_by_key(|e| e.target);
        }
        Ok(InputGraph { name: String::new(), out })
    }

    /// Parses an edge list with one `u v [w]` per line. Blank lines and
    /// lines starting with `#` are skipped; `n` is the largest id plus one.
    pub fn parse_edge_list(text: &str) -> Result<Self, GraphError> {
        let mut edges = Vec::new();
        let mut max_id = None;
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let raw = raw.trim();
            if raw.is_empty() || raw.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = raw.split_whitespace().collect();
            let err = |message: String| GraphError::Parse { line, message };
            if fields.len() < 2 || fields.len() > 3 {
                return Err(err(format!("expected `u v [w]`, got `{raw}`")));
            }
            let u: usize = fields[0].parse().map_err(|e| err(format!("bad source: {e}")))?;
            let v: usize = fields[1].parse().map_err(|e| err(format!("bad target: {e}")))?;
            let w = match fields.get(2) {
                Some(f) => {
                    let w: f64 = f.parse().map_err(|e| err(format!("bad weight: {e}")))?;
                    if !w.is_finite() || w < 0.0 {
                        return Err(err(format!("weight must be finite and non-negative, got {w}")));
                    }
                    Some(w)
                }
                None => None,
            };
            max_id = Some(max_id.unwrap_or(0).max(u).max(v));
            edges.push((u, v, w));
        }
        let n = max_id.map_or(0, |m| m + 1);
        Self::from_edges(n, edges)
    }

    /// Directed path `0 → 1 → … → n-1`.
    pub fn path(n: usize) -> Result<Self, GraphError> {
        Self::from_edges(n, (1..n).map(|v| (v - 1, v, None)))
    }

    /// Directed cycle `0 → 1 → … → n-1 → 0`.
    pub fn cycle(n: usize) -> Result<Self, GraphError> {
        Self::from_edges(n, (0..n).map(|v| (v, (v + 1) % n, None)))
    }

    /// `width × height` grid with edges in both directions between
    /// horizontally and vertically adjacent cells. Vertex `(x, y)` is `y * width + x`.
    pub fn grid(width: usize, height: usize) -> Result<Self, GraphError> {
        let mut edges = Vec::new();
        for y in 0..height {
            for x in 0..width {
                let v = y * width + x;
                if x + 1 < width {
                    edges.push((v, v + 1, None));
                    edges.push((v + 1, v, None));
                }
                if y + 1 < height {
                    edges.push((v, v + width, None));
                    edges.push((v + width, v, None));
                }
            }
        }
        Self::from_edges(width * height, edges)
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn vertex_count(&self) -> usize {
        self.out.len()
    }

    pub fn edge_count(&self) -> usize {
        self.out.iter().map(Vec::len).sum()
    }

    pub fn out_edges(&self, v: usize) -> &[Edge] {
        &self.out[v]
    }

    pub fn out_degree(&self, v: usize) -> usize {
        self.out[v].len()
    }

    pub fn edges(&self) -> impl Iterator<Item = (usize, Edge)> + '_ {
        self.out.iter().enumerate().flat_map(|(u, list)| list.iter().map(move |e| (u, *e)))
    }

    /// Neighbors ignoring direction, sorted and deduplicated.
    pub fn undirected_neighbors(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.vertex_count()];
        for (u, e) in self.edges() {
            if u != e.target {
                adj[u].push(e.target);
                adj[e.target].push(u);
            }
        }
        for list in &mut adj {
            list.sort_unstable();
            list.dedup();
        }
        adj
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_edge_list() {
        let g = InputGraph::parse_edge_list("# comment\n0 1\n1 2 2.5\n\n2 0\n").unwrap();
        assert_eq!(g.vertex_count(), 3);
        assert_eq!(g.edge_count(), 3);
        assert_eq!(g.out_edges(1), &[Edge { target: 2, weight: 2.5 }]);
    }

    #[test]
    fn rejects_bad_edge_lists() {
        assert_eq!(InputGraph::parse_edge_list(""), Err(GraphError::Empty));
        assert!(matches!(InputGraph::parse_edge_list("0 1\n0 x"), Err(GraphError::Parse { line: 2, .. })));
        assert!(matches!(InputGraph::parse_edge_list("0 1 -1"), Err(GraphError::Parse { line: 1, .. })));
        assert_eq!(InputGraph::parse_edge_list("0 1\n0 1"), Err(GraphError::DuplicateEdge(0, 1)));
    }

    #[test]
    fn grid_shape() {
        let g = InputGraph::grid(3, 2).unwrap();
        assert_eq!(g.vertex_count(), 6);
        // 2 rows × 2 horizontal + 3 vertical, both directions.
        assert_eq!(g.edge_count(), 2 * (2 * 2 + 3));
        assert_eq!(g.undirected_neighbors()[4], vec![1, 3, 5]);
    }
}
