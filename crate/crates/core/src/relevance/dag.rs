use std::collections::{BTreeSet, HashMap, VecDeque};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Directed acyclic graph over named nodes.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Dag {
    names: Vec<String>,
    index: HashMap<String, usize>,
    parents: Vec<Vec<usize>>,
    children: Vec<Vec<usize>>,
}

/// Undirected graph over named nodes; `adjacency[i]` holds neighbour indices.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct UndirectedGraph {
    pub names: Vec<String>,
    pub adjacency: Vec<BTreeSet<usize>>,
}

impl UndirectedGraph {
    pub fn has_edge(&self, a: &str, b: &str) -> bool {
        let find = |n: &str| self.names.iter().position(|x| x == n);
        match (find(a), find(b)) {
            (Some(i), Some(j)) => self.adjacency[i].contains(&j),
            _ => false,
        }
    }

    pub fn edge_count(&self) -> usize {
        self.adjacency.iter().map(BTreeSet::len).sum::<usize>() / 2
    }

    /// Whether `a` and `b` are joined by a path avoiding `removed`.
    fn connected_avoiding(&self, a: usize, b: usize, removed: &BTreeSet<usize>) -> bool {
        let mut seen = vec![false; self.names.len()];
        let mut queue = VecDeque::from([a]);
        seen[a] = true;
        while let Some(v) = queue.pop_front() {
            if v == b {
                return true;
            }
            for &w in &self.adjacency[v] {
                if !seen[w] && !removed.contains(&w) {
                    seen[w] = true;
                    queue.push_back(w);
                }
            }
        }
        false
    }
}

/// Direction of travel of the ball: `Up` when it arrived from a child,
/// `Down` when it arrived from a parent.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
enum Dir {
    Up,
    Down,
}

/// Where trails from a source node stopped.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Blockage {
    /// Conditioned nodes that cut a chain or fork.
    pub conditioned: Vec<String>,
    /// Unconditioned colliders with no conditioned descendant.
    pub colliders: Vec<String>,
    /// Nodes reachable along active trails.
    pub reachable: Vec<String>,
}

impl Dag {
    pub fn new<S: AsRef<str>>(nodes: &[S], edges: &[(S, S)]) -> Result<Self> {
        let names: Vec<String> = nodes.iter().map(|s| s.as_ref().to_string()).collect();
        let mut index = HashMap::new();
        for (i, n) in names.iter().enumerate() {
            if n.is_empty() {
                return Err(Error::data("empty node name"));
            }
            if index.insert(n.clone(), i).is_some() {
                return Err(Error::data(format!("duplicate node '{n}'")));
            }
        }
        let mut parents = vec![Vec::new(); names.len()];
        let mut children = vec![Vec::new(); names.len()];
        for (from, to) in edges {
            let lookup =
                |n: &str| index.get(n).copied().ok_or_else(|| Error::data(format!("edge uses unknown node '{n}'")));
            let (f, t) = (lookup(from.as_ref())?, lookup(to.as_ref())?);
            if f == t {
                return Err(Error::data(format!("self-loop on '{}'", names[f])));
            }
            if !children[f].contains(&t) {
                children[f].push(t);
                parents[t].push(f);
            }
        }
        for list in parents.iter_mut().chain(children.iter_mut()) {
            list.sort_by(|&a, &b| names[a].cmp(&names[b]));
        }
        let dag = Self { names, index, parents, children };
        if dag.topological_order().is_none() {
            return Err(Error::data("graph contains a directed cycle"));
        }
        Ok(dag)
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn contains(&self, name: &str) -> bool {
        self.index.contains_key(name)
    }

    pub fn node(&self, name: &str) -> Result<usize> {
        self.index.get(name).copied().ok_or_else(|| Error::InvalidQuery(format!("unknown node '{name}'")))
    }

    pub fn parents_of(&self, name: &str) -> Result<Vec<&str>> {
        Ok(self.parents[self.node(name)?].iter().map(|&p| self.names[p].as_str()).collect())
    }

    pub fn children_of(&self, name: &str) -> Result<Vec<&str>> {
        Ok(self.children[self.node(name)?].iter().map(|&c| self.names[c].as_str()).collect())
    }

    pub fn edges(&self) -> Vec<(String, String)> {
        let mut out = Vec::new();
        for (f, kids) in self.children.iter().enumerate() {
            for &t in kids {
                out.push((self.names[f].clone(), self.names[t].clone()));
            }
        }
        out.sort();
        out
    }

    fn topological_order(&self) -> Option<Vec<usize>> {
        let mut indeg: Vec<usize> = self.parents.iter().map(Vec::len).collect();
        let mut ready: VecDeque<usize> = (0..self.len()).filter(|&i| indeg[i] == 0).collect();
        let mut order = Vec::with_capacity(self.len());
        while let Some(v) = ready.pop_front() {
            order.push(v);
            for &c in &self.children[v] {
                indeg[c] -= 1;
                if indeg[c] == 0 {
                    ready.push_back(c);
                }
            }
        }
        (order.len() == self.len()).then_some(order)
    }

    fn ancestors_of(&self, set: &BTreeSet<usize>) -> Vec<bool> {
        let mut mark = vec![false; self.len()];
        let mut stack: Vec<usize> = set.iter().copied().collect();
        while let Some(v) = stack.pop() {
            if !mark[v] {
                mark[v] = true;
                stack.extend(&self.parents[v]);
            }
        }
        mark
    }

    fn query_sets(&self, a: &str, b: &str, conditioning: &[&str]) -> Result<(usize, usize, BTreeSet<usize>)> {
        let (ia, ib) = (self.node(a)?, self.node(b)?);
        let z = conditioning.iter().map(|n| self.node(n)).collect::<Result<BTreeSet<_>>>()?;
        if z.contains(&ia) || z.contains(&ib) {
            return Err(Error::InvalidQuery("query nodes must not be in the conditioning set".into()));
        }
        Ok((ia, ib, z))
    }

    /// Successor states of the ball at `(v, d)`, in name order.
    fn moves(&self, v: usize, d: Dir, z: &BTreeSet<usize>, anc: &[bool]) -> Vec<(usize, Dir)> {
        let observed = z.contains(&v);
        let mut out = Vec::new();
        match d {
            Dir::Up if !observed => {
                out.extend(self.parents[v].iter().map(|&p| (p, Dir::Up)));
                out.extend(self.children[v].iter().map(|&c| (c, Dir::Down)));
            }
            Dir::Up => {}
            Dir::Down => {
                if !observed {
                    out.extend(self.children[v].iter().map(|&c| (c, Dir::Down)));
                }
                if anc[v] {
                    out.extend(self.parents[v].iter().map(|&p| (p, Dir::Up)));
                }
            }
        }
        out.sort_by(|x, y| self.names[x.0].cmp(&self.names[y.0]));
        out
    }

    fn bayes_ball(&self, source: usize, z: &BTreeSet<usize>) -> (Vec<bool>, Blockage) {
        let anc = self.ancestors_of(z);
        let mut visited = std::collections::HashSet::new();
        let mut reach = vec![false; self.len()];
        let mut conditioned = BTreeSet::new();
        let mut colliders = BTreeSet::new();
        let mut queue = VecDeque::from([(source, Dir::Up)]);
        while let Some((v, d)) = queue.pop_front() {
            if !visited.insert((v, d)) {
                continue;
            }
            if !z.contains(&v) {
                reach[v] = true;
            } else if v != source {
                conditioned.insert(v);
            }
            if d == Dir::Down && !z.contains(&v) && !anc[v] && self.parents[v].len() > 1 {
                colliders.insert(v);
            }
            queue.extend(self.moves(v, d, z, &anc));
        }
        let names = |s: BTreeSet<usize>| {
            let mut v: Vec<String> = s.into_iter().map(|i| self.names[i].clone()).collect();
            v.sort();
            v
        };
        let reachable = names((0..self.len()).filter(|&i| reach[i] && i != source).collect());
        (reach, Blockage { conditioned: names(conditioned), colliders: names(colliders), reachable })
    }

    /// d-separation of `a` and `b` given `conditioning` by Bayes-ball reachability.
    pub fn d_separated(&self, a: &str, b: &str, conditioning: &[&str]) -> Result<bool> {
        let (ia, ib, z) = self.query_sets(a, b, conditioning)?;
        Ok(ia != ib && !self.bayes_ball(ia, &z).0[ib])
    }

    /// Same question answered by separation in the moral graph of the
    /// ancestral subgraph of `{a, b} ∪ conditioning`.
    pub fn d_separated_moral(&self, a: &str, b: &str, conditioning: &[&str]) -> Result<bool> {
        let (ia, ib, z) = self.query_sets(a, b, conditioning)?;
        if ia == ib {
            return Ok(false);
        }
        let mut seed = z.clone();
        seed.insert(ia);
        seed.insert(ib);
        let keep = self.ancestors_of(&seed);
        let moral = self.moralize_subset(&keep);
        Ok(!moral.connected_avoiding(ia, ib, &z))
    }

    /// Trails from `source` blocked by `conditioning`, summarised.
    pub fn blockage(&self, source: &str, conditioning: &[&str]) -> Result<Blockage> {
        let s = self.node(source)?;
        let z = conditioning.iter().map(|n| self.node(n)).collect::<Result<BTreeSet<_>>>()?;
        Ok(self.bayes_ball(s, &z).1)
    }

    /// Shortest active trail from `a` to `b` given `conditioning`, as
    /// `(node, arrow-into-next)` steps; ties broken by node name order.
    pub fn active_trail(&self, a: &str, b: &str, conditioning: &[&str]) -> Result<Option<Trail>> {
        let (ia, ib, z) = self.query_sets(a, b, conditioning)?;
        let anc = self.ancestors_of(&z);
        let mut prev: HashMap<(usize, Dir), (usize, Dir)> = HashMap::new();
        let start = (ia, Dir::Up);
        let mut queue = VecDeque::from([start]);
        let mut seen = std::collections::HashSet::from([start]);
        while let Some(state) = queue.pop_front() {
            if state.0 == ib {
                let mut states = vec![state];
                let mut cur = state;
                while let Some(&p) = prev.get(&cur) {
                    states.push(p);
                    cur = p;
                }
                states.reverse();
                let nodes = states.iter().map(|s| self.names[s.0].clone()).collect();
                // Moving Up into a node means we traversed a child -> parent edge.
                let forward = states.iter().skip(1).map(|s| s.1 == Dir::Down).collect();
                return Ok(Some(Trail { nodes, forward }));
            }
            for next in self.moves(state.0, state.1, &z, &anc) {
                if seen.insert(next) {
                    prev.insert(next, state);
                    queue.push_back(next);
                }
            }
        }
        Ok(None)
    }

    /// Moral graph: parents of each node married, directions dropped.
    pub fn moralize(&self) -> UndirectedGraph {
        self.moralize_subset(&vec![true; self.len()])
    }

    fn moralize_subset(&self, keep: &[bool]) -> UndirectedGraph {
        let mut adjacency = vec![BTreeSet::new(); self.len()];
        for v in (0..self.len()).filter(|&v| keep[v]) {
            let ps: Vec<usize> = self.parents[v].iter().copied().filter(|&p| keep[p]).collect();
            for &p in &ps {
                adjacency[v].insert(p);
                adjacency[p].insert(v);
            }
            for (i, &p) in ps.iter().enumerate() {
                for &q in &ps[i + 1..] {
                    adjacency[p].insert(q);
                    adjacency[q].insert(p);
                }
            }
        }
        UndirectedGraph { names: self.names.clone(), adjacency }
    }
}

/// Node sequence of a trail; `forward[i]` is true when the edge between
/// `nodes[i]` and `nodes[i + 1]` points towards `nodes[i + 1]`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Trail {
    pub nodes: Vec<String>,
    pub forward: Vec<bool>,
}

impl std::fmt::Display for Trail {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.nodes[0])?;
        for (n, &fwd) in self.nodes.iter().skip(1).zip(&self.forward) {
            write!(f, " {} {n}", if fwd { "->" } else { "<-" })?;
        }
        Ok(())
    }
}
