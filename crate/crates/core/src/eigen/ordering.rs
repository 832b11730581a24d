//! Fill-reducing ordering by level-structure nested dissection.
//!
//! Each connected piece is split by the middle level of a breadth-first
//! level structure rooted at a pseudo-peripheral vertex; the two halves are
//! ordered recursively and the separator is numbered last. On the planar
//! grids produced by the mesher this gives the usual `O(n log n)` fill.

use std::collections::VecDeque;

const LEAF_SIZE: usize = 48;

/// Undirected adjacency in compressed form (no self loops).
#[derive(Debug, Clone)]
pub struct Graph {
    ptr: Vec<usize>,
    adj: Vec<usize>,
}

impl Graph {
    pub fn from_edges(n: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Self {
        let mut deg = vec![0usize; n];
        let edges: Vec<(usize, usize)> = edges.into_iter().filter(|(a, b)| a != b).collect();
        for &(a, b) in &edges {
            deg[a] += 1;
            deg[b] += 1;
        }
        let mut ptr = vec![0usize; n + 1];
        for i in 0..n {
            ptr[i + 1] = ptr[i] + deg[i];
        }
        let mut fill = ptr.clone();
        let mut adj = vec![0usize; ptr[n]];
        for &(a, b) in &edges {
            adj[fill[a]] = b;
            fill[a] += 1;
            adj[fill[b]] = a;
            fill[b] += 1;
        }
        Self { ptr, adj }
    }

    pub fn len(&self) -> usize {
        self.ptr.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn neighbors(&self, v: usize) -> &[usize] {
        &self.adj[self.ptr[v]..self.ptr[v + 1]]
    }
}

struct Dissector<'g> {
    graph: &'g Graph,
    // stamp[v] == current set id marks membership of the set being processed
    stamp: Vec<usize>,
    next_stamp: usize,
    visited: Vec<usize>,
    visit_gen: usize,
    order: Vec<usize>,
}

impl<'g> Dissector<'g> {
    fn new_stamp(&mut self, nodes: &[usize]) -> usize {
        self.next_stamp += 1;
        let s = self.next_stamp;
        for &v in nodes {
            self.stamp[v] = s;
        }
        s
    }

    /// Breadth-first levels of the component of `root` inside set `s`.
    fn levels(&mut self, root: usize, s: usize) -> Vec<Vec<usize>> {
        self.visit_gen += 1;
        let gen = self.visit_gen;
        let mut out: Vec<Vec<usize>> = vec![vec![root]];
        self.visited[root] = gen;
        loop {
            let mut next = Vec::new();
            for &v in out.last().unwrap() {
                for &w in self.graph.neighbors(v) {
                    if self.stamp[w] == s && self.visited[w] != gen {
                        self.visited[w] = gen;
                        next.push(w);
                    }
                }
            }
            if next.is_empty() {
                break;
            }
            out.push(next);
        }
        out
    }

    fn degree_in(&self, v: usize, s: usize) -> usize {
        self.graph.neighbors(v).iter().filter(|&&w| self.stamp[w] == s).count()
    }

    fn dissect(&mut self, nodes: Vec<usize>) {
        if nodes.len() <= LEAF_SIZE {
            self.order.extend(nodes);
            return;
        }
        let s = self.new_stamp(&nodes);
        let mut lv = self.levels(nodes[0], s);
        let reached: usize = lv.iter().map(Vec::len).sum();
        if reached < nodes.len() {
            // split into connected components and handle each separately
            let mut comps = Vec::new();
            let mut seen = std::collections::HashSet::new();
            for &v in &nodes {
                if seen.contains(&v) {
                    continue;
                }
                let comp: Vec<usize> = self.levels(v, s).into_iter().flatten().collect();
                seen.extend(comp.iter().copied());
                comps.push(comp);
            }
            for c in comps {
                self.dissect(c);
            }
            return;
        }
        // pseudo-peripheral root: restart from a minimum-degree vertex of the last level
        for _ in 0..6 {
            let last = lv.last().unwrap();
            let cand = *last.iter().min_by_key(|&&v| (self.degree_in(v, s), v)).unwrap();
            let trial = self.levels(cand, s);
            if trial.len() > lv.len() {
                lv = trial;
            } else {
                break;
            }
        }
        if lv.len() < 3 {
            self.order.extend(nodes);
            return;
        }
        let total = nodes.len();
        let mut before = 0usize;
        let mut best: Option<(usize, usize)> = None;
        let mut fallback = lv.len() / 2;
        let mut fallback_set = false;
        for (i, l) in lv.iter().enumerate() {
            if i > 0 && i + 1 < lv.len() {
                let frac = before as f64 / total as f64;
                if (0.35..=0.65).contains(&frac) && best.is_none_or(|(_, size)| l.len() < size) {
                    best = Some((i, l.len()));
                }
                if !fallback_set && 2 * before >= total {
                    fallback = i;
                    fallback_set = true;
                }
            }
            before += l.len();
        }
        let mid = best.map_or(fallback, |(i, _)| i);
        let first: Vec<usize> = lv[..mid].iter().flatten().copied().collect();
        let second: Vec<usize> = lv[mid + 1..].iter().flatten().copied().collect();
        let sep = lv[mid].clone();
        self.dissect(first);
        self.dissect(second);
        self.order.extend(sep);
    }
}

/// Returns `perm` with `perm[new] = old`.
pub fn nested_dissection(graph: &Graph) -> Vec<usize> {
    let n = graph.len();
    let mut d = Dissector {
        graph,
        stamp: vec![0; n],
        next_stamp: 0,
        visited: vec![0; n],
        visit_gen: 0,
        order: Vec::with_capacity(n),
    };
    d.dissect((0..n).collect());
    debug_assert_eq!(d.order.len(), n);
    d.order
}

/// Reverse Cuthill–McKee; kept for comparison in benches and tests.
pub fn reverse_cuthill_mckee(graph: &Graph) -> Vec<usize> {
    let n = graph.len();
    let mut visited = vec![false; n];
    let mut order = Vec::with_capacity(n);
    let deg = |v: usize| graph.neighbors(v).len();
    let mut starts: Vec<usize> = (0..n).collect();
    starts.sort_by_key(|&v| (deg(v), v));
    for &s in &starts {
        if visited[s] {
            continue;
        }
        visited[s] = true;
        let mut queue = VecDeque::from([s]);
        while let Some(v) = queue.pop_front() {
            order.push(v);
            let mut nb: Vec<usize> = graph.neighbors(v).iter().copied().filter(|&w| !visited[w]).collect();
            nb.sort_by_key(|&w| (deg(w), w));
            for w in nb {
                visited[w] = true;
                queue.push_back(w);
            }
        }
    }
    order.reverse();
    order
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(nx: usize, ny: usize) -> Graph {
        let id = |i: usize, j: usize| j * nx + i;
        let mut e = Vec::new();
        for j in 0..ny {
            for i in 0..nx {
                if i + 1 < nx {
                    e.push((id(i, j), id(i + 1, j)));
                }
                if j + 1 < ny {
                    e.push((id(i, j), id(i, j + 1)));
                }
            }
        }
        Graph::from_edges(nx * ny, e)
    }

    fn is_permutation(p: &[usize]) -> bool {
        let mut seen = vec![false; p.len()];
        p.iter().all(|&v| v < p.len() && !std::mem::replace(&mut seen[v], true))
    }

    #[test]
    fn orderings_are_permutations() {
        let g = grid(37, 23);
        assert!(is_permutation(&nested_dissection(&g)));
        assert!(is_permutation(&reverse_cuthill_mckee(&g)));
    }

    #[test]
    fn disconnected_graph_is_fully_ordered() {
        let mut e = Vec::new();
        for k in 0..200 {
            if k % 50 != 49 {
                e.push((k, k + 1));
            }
        }
        let g = Graph::from_edges(201, e);
        assert!(is_permutation(&nested_dissection(&g)));
    }
}
