//! Cluster graphs as algebraic terms with ordered begin/end interfaces.
//!
//! A [`GraphTerm`] is an expression tree over horizontal/vertical chains with
//! concatenation and direct sum. Flat vertex/edge data is derived on demand by
//! [`GraphTerm::flatten`]: the left operand keeps its indices, the right operand
//! is re-indexed after it, and merged interface vertices take the left index.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt::Write as _;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::{Error, Result};

/// Homodyne basis of a measured vertex.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Basis {
    /// Rotated p-quadrature measurement on a state-carrying vertex.
    P,
    /// Rotated q-quadrature measurement on an entangling ancilla.
    Q,
}

/// Node of the expression tree.
#[derive(Debug)]
pub enum Structure {
    /// Path of `l` vertices, begin = first, end = last.
    ChainH(usize),
    /// Path of `l` vertices, begin = end = (first, last).
    ChainV(usize),
    Concat(GraphTerm, GraphTerm),
    Sum(GraphTerm, GraphTerm),
    /// Graph without compositional structure (e.g. a reduced lattice).
    Flat(FlatGraph),
}

/// Cluster graph term. Cheap to clone; subterms are shared.
#[derive(Clone, Debug)]
pub struct GraphTerm {
    node: Arc<Structure>,
    vertices: usize,
    begin: usize,
    end: usize,
}

/// Flat graph with stable integer vertex ids `0..vertices`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FlatGraph {
    pub vertices: usize,
    /// Sorted undirected edges with `a < b`.
    pub edges: Vec<(usize, usize)>,
    pub begin: Vec<usize>,
    pub end: Vec<usize>,
}

impl GraphTerm {
    fn new(node: Structure, vertices: usize, begin: usize, end: usize) -> Self {
        GraphTerm {
            node: Arc::new(node),
            vertices,
            begin,
            end,
        }
    }

    pub fn structure(&self) -> &Structure {
        &self.node
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices
    }

    pub fn begin_len(&self) -> usize {
        self.begin
    }

    pub fn end_len(&self) -> usize {
        self.end
    }

    /// Number of measured vertices, `|V| - |end|`.
    pub fn measured_count(&self) -> usize {
        self.vertices - self.end
    }

    /// Basis tags of the measured vertices in canonical measurement order
    /// (depth-first, left to right).
    pub fn measurement_bases(&self) -> Vec<Basis> {
        let mut out = Vec::with_capacity(self.measured_count());
        self.push_bases(&mut out);
        out
    }

    fn push_bases(&self, out: &mut Vec<Basis>) {
        match self.structure() {
            Structure::ChainH(l) => out.extend(std::iter::repeat_n(Basis::P, l - 1)),
            Structure::ChainV(l) => out.extend(std::iter::repeat_n(Basis::Q, l - 2)),
            Structure::Concat(a, b) | Structure::Sum(a, b) => {
                a.push_bases(out);
                b.push_bases(out);
            }
            Structure::Flat(g) => out.extend(std::iter::repeat_n(Basis::P, g.vertices - g.end.len())),
        }
    }

    /// Wraps a flat graph as an opaque term.
    pub fn from_flat(g: FlatGraph) -> Self {
        let (n, b, e) = (g.vertices, g.begin.len(), g.end.len());
        GraphTerm::new(Structure::Flat(g), n, b, e)
    }

    /// Vertex and edge lists with the labelling described in the module docs.
    pub fn flatten(&self) -> FlatGraph {
        match self.structure() {
            Structure::ChainH(l) => FlatGraph {
                vertices: *l,
                edges: (0..l - 1).map(|i| (i, i + 1)).collect(),
                begin: vec![0],
                end: vec![l - 1],
            },
            Structure::ChainV(l) => FlatGraph {
                vertices: *l,
                edges: (0..l - 1).map(|i| (i, i + 1)).collect(),
                begin: vec![0, l - 1],
                end: vec![0, l - 1],
            },
            Structure::Flat(g) => g.clone(),
            Structure::Sum(a, b) => {
                let fa = a.flatten();
                let fb = b.flatten();
                let off = fa.vertices;
                let mut edges = fa.edges;
                edges.extend(fb.edges.iter().map(|&(x, y)| (x + off, y + off)));
                let mut begin = fa.begin;
                begin.extend(fb.begin.iter().map(|v| v + off));
                let mut end = fa.end;
                end.extend(fb.end.iter().map(|v| v + off));
                FlatGraph {
                    vertices: fa.vertices + fb.vertices,
                    edges,
                    begin,
                    end,
                }
                .normalized()
            }
            Structure::Concat(a, b) => {
                let fa = a.flatten();
                let fb = b.flatten();
                let mut map = vec![usize::MAX; fb.vertices];
                for (i, &v) in fb.begin.iter().enumerate() {
                    map[v] = fa.end[i];
                }
                let mut next = fa.vertices;
                for slot in map.iter_mut() {
                    if *slot == usize::MAX {
                        *slot = next;
                        next += 1;
                    }
                }
                let mut edges = fa.edges;
                edges.extend(fb.edges.iter().map(|&(x, y)| (map[x], map[y])));
                FlatGraph {
                    vertices: next,
                    edges,
                    begin: fa.begin,
                    end: fb.end.iter().map(|&v| map[v]).collect(),
                }
                .normalized()
            }
        }
    }

    /// Checks `|begin| = |end|` and that every end vertex reaches a begin vertex.
    pub fn validate(&self) -> Result<()> {
        if self.begin != self.end {
            return Err(Error::InterfaceMismatch {
                left: self.begin,
                right: self.end,
            });
        }
        let g = self.flatten();
        let adj = g.adjacency();
        let mut seen = vec![false; g.vertices];
        let mut queue: VecDeque<usize> = g.begin.iter().copied().collect();
        for &b in &g.begin {
            seen[b] = true;
        }
        while let Some(v) = queue.pop_front() {
            for &w in &adj[v] {
                if !seen[w] {
                    seen[w] = true;
                    queue.push_back(w);
                }
            }
        }
        match g.end.iter().find(|&&e| !seen[e]) {
            Some(&e) => Err(Error::DisconnectedEnd(e)),
            None => Ok(()),
        }
    }

    /// JSON export `{vertices, edges, begin, end}`.
    pub fn to_json(&self) -> Value {
        self.flatten().to_json()
    }

    /// DOT export; begin vertices are boxes, end vertices double circles.
    pub fn to_dot(&self) -> String {
        self.flatten().to_dot()
    }
}

/// Horizontal chain of `l >= 2` vertices.
pub fn chain_h(l: usize) -> Result<GraphTerm> {
    if l < 2 {
        return Err(Error::TooSmall {
            what: "chain length",
            value: l,
            min: 2,
        });
    }
    Ok(GraphTerm::new(Structure::ChainH(l), l, 1, 1))
}

/// Vertical chain of `l >= 2` vertices; both endpoints form the interface.
pub fn chain_v(l: usize) -> Result<GraphTerm> {
    if l < 2 {
        return Err(Error::TooSmall {
            what: "chain length",
            value: l,
            min: 2,
        });
    }
    Ok(GraphTerm::new(Structure::ChainV(l), l, 2, 2))
}

/// Concatenation `a ∘ b`: the i-th end vertex of `a` is identified with the
/// i-th begin vertex of `b`.
pub fn concat(a: &GraphTerm, b: &GraphTerm) -> Result<GraphTerm> {
    if a.end != b.begin {
        return Err(Error::InterfaceMismatch {
            left: a.end,
            right: b.begin,
        });
    }
    Ok(GraphTerm::new(
        Structure::Concat(a.clone(), b.clone()),
        a.vertices + b.vertices - a.end,
        a.begin,
        b.end,
    ))
}

/// Direct sum `a ⊕ b`.
pub fn sum(a: &GraphTerm, b: &GraphTerm) -> GraphTerm {
    GraphTerm::new(
        Structure::Sum(a.clone(), b.clone()),
        a.vertices + b.vertices,
        a.begin + b.begin,
        a.end + b.end,
    )
}

/// Left fold of [`concat`].
pub fn concat_all(terms: &[GraphTerm]) -> Result<GraphTerm> {
    let (first, rest) = terms.split_first().ok_or(Error::TooSmall {
        what: "number of terms",
        value: 0,
        min: 1,
    })?;
    rest.iter().try_fold(first.clone(), |acc, t| concat(&acc, t))
}

/// Left fold of [`sum`].
pub fn sum_all(terms: &[GraphTerm]) -> Result<GraphTerm> {
    let (first, rest) = terms.split_first().ok_or(Error::TooSmall {
        what: "number of terms",
        value: 0,
        min: 1,
    })?;
    Ok(rest.iter().fold(first.clone(), |acc, t| sum(&acc, t)))
}

/// `(H5 ⊕ H5) ∘ V3`: 11 vertices, 9 measured.
pub fn bracket() -> GraphTerm {
    let h5 = chain_h(5).expect("valid length");
    let v3 = chain_v(3).expect("valid length");
    concat(&sum(&h5, &h5), &v3).expect("interfaces match")
}

/// Brick graph `G_T`: three brackets in series, 29 vertices, 27 measured.
pub fn brick() -> GraphTerm {
    let b = bracket();
    concat_all(&[b.clone(), b.clone(), b]).expect("interfaces match")
}

/// Unit-depth layer `G_D^(M) = (G_T^{⊕M/2}) ∘ (H13 ⊕ G_T^{⊕(M/2-1)} ⊕ H13)`.
pub fn unit_layer(modes: usize) -> Result<GraphTerm> {
    if modes < 2 {
        return Err(Error::TooSmall {
            what: "mode count",
            value: modes,
            min: 2,
        });
    }
    if modes % 2 == 1 {
        return Err(Error::OddModeCount(modes));
    }
    let t = brick();
    let h13 = chain_h(13)?;
    let first = sum_all(&vec![t.clone(); modes / 2])?;
    let mut second = vec![h13.clone()];
    second.extend(std::iter::repeat_n(t, modes / 2 - 1));
    second.push(h13);
    concat(&first, &sum_all(&second)?)
}

/// Brickwork graph `G_D^(M,k)` with its universality flag.
#[derive(Clone, Debug)]
pub struct Brickwork {
    pub term: GraphTerm,
    pub modes: usize,
    pub depth: usize,
    /// `k >= M/2 + 1`.
    pub universal: bool,
}

/// `k` concatenated unit-depth layers on `M` modes.
pub fn brickwork_graph(modes: usize, depth: usize) -> Result<Brickwork> {
    if depth == 0 {
        return Err(Error::TooSmall {
            what: "depth",
            value: 0,
            min: 1,
        });
    }
    let layer = unit_layer(modes)?;
    let term = concat_all(&vec![layer; depth])?;
    Ok(Brickwork {
        term,
        modes,
        depth,
        universal: depth >= modes / 2 + 1,
    })
}

/// Closed-form vertex count of `G_D^(M,k)`.
pub fn brickwork_vertex_count(modes: usize, depth: usize) -> usize {
    depth * (28 * modes - 3) - (depth - 1) * modes
}

impl FlatGraph {
    fn normalized(mut self) -> Self {
        for e in self.edges.iter_mut() {
            if e.0 > e.1 {
                *e = (e.1, e.0);
            }
        }
        self.edges.sort_unstable();
        self.edges.dedup();
        self
    }

    pub fn adjacency(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.vertices];
        for &(a, b) in &self.edges {
            adj[a].push(b);
            adj[b].push(a);
        }
        adj
    }

    pub fn degree(&self, v: usize) -> usize {
        self.edges.iter().filter(|&&(a, b)| a == v || b == v).count()
    }

    pub fn to_json(&self) -> Value {
        json!({
            "vertices": (0..self.vertices).collect::<Vec<_>>(),
            "edges": self.edges.iter().map(|&(a, b)| vec![a, b]).collect::<Vec<_>>(),
            "begin": self.begin,
            "end": self.end,
        })
    }

    pub fn to_dot(&self) -> String {
        let mut s = String::from("graph cluster {\n");
        for v in 0..self.vertices {
            let shape = if self.begin.contains(&v) {
                "box"
            } else if self.end.contains(&v) {
                "doublecircle"
            } else {
                "circle"
            };
            let _ = writeln!(s, "  {v} [shape={shape}];");
        }
        for &(a, b) in &self.edges {
            let _ = writeln!(s, "  {a} -- {b};");
        }
        s.push_str("}\n");
        s
    }

    /// Removes the listed vertices and their incident edges, relabelling the
    /// survivors in increasing id order.
    pub fn delete_vertices(&self, vs: &[usize]) -> Result<FlatGraph> {
        let mut alive = vec![true; self.vertices];
        for &v in vs {
            if v >= self.vertices {
                return Err(Error::InvalidVertex(v));
            }
            alive[v] = false;
        }
        Ok(self.compact(&alive, self.edges.clone()))
    }

    /// Wire shortening: removes degree-2 vertices one at a time, joining the two
    /// neighbours of each.
    pub fn shorten_wires(&self, vs: &[usize]) -> Result<FlatGraph> {
        let mut adj: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); self.vertices];
        for &(a, b) in &self.edges {
            adj[a].insert(b);
            adj[b].insert(a);
        }
        let mut alive = vec![true; self.vertices];
        for &v in vs {
            if v >= self.vertices || !alive[v] {
                return Err(Error::InvalidVertex(v));
            }
            if adj[v].len() != 2 {
                return Err(Error::ShorteningDegree {
                    vertex: v,
                    degree: adj[v].len(),
                });
            }
            let nb: Vec<usize> = adj[v].iter().copied().collect();
            let (x, y) = (nb[0], nb[1]);
            adj[x].remove(&v);
            adj[y].remove(&v);
            adj[x].insert(y);
            adj[y].insert(x);
            adj[v].clear();
            alive[v] = false;
        }
        let edges = adj
            .iter()
            .enumerate()
            .flat_map(|(a, nb)| nb.iter().filter(move |&&b| a < b).map(move |&b| (a, b)))
            .collect();
        Ok(self.compact(&alive, edges))
    }

    fn compact(&self, alive: &[bool], edges: Vec<(usize, usize)>) -> FlatGraph {
        let mut map = vec![usize::MAX; self.vertices];
        let mut next = 0;
        for v in 0..self.vertices {
            if alive[v] {
                map[v] = next;
                next += 1;
            }
        }
        let keep = |list: &[usize]| -> Vec<usize> {
            list.iter().filter(|&&v| alive[v]).map(|&v| map[v]).collect()
        };
        FlatGraph {
            vertices: next,
            edges: edges
                .into_iter()
                .filter(|&(a, b)| alive[a] && alive[b])
                .map(|(a, b)| (map[a], map[b]))
                .collect(),
            begin: keep(&self.begin),
            end: keep(&self.end),
        }
        .normalized()
    }
}

/// Maximum vertex count accepted by [`is_isomorphic`].
pub const ISOMORPHISM_LIMIT: usize = 200;

/// Joint colour refinement; returns per-vertex colours for both graphs.
fn refine_colours(a: &FlatGraph, b: &FlatGraph) -> (Vec<usize>, Vec<usize>) {
    let adj_a = a.adjacency();
    let adj_b = b.adjacency();
    let mut ca: Vec<usize> = adj_a.iter().map(Vec::len).collect();
    let mut cb: Vec<usize> = adj_b.iter().map(Vec::len).collect();
    let mut classes = 0;
    loop {
        let sig = |c: &[usize], adj: &[Vec<usize>], v: usize| {
            let mut nb: Vec<usize> = adj[v].iter().map(|&w| c[w]).collect();
            nb.sort_unstable();
            (c[v], nb)
        };
        let sa: Vec<_> = (0..a.vertices).map(|v| sig(&ca, &adj_a, v)).collect();
        let sb: Vec<_> = (0..b.vertices).map(|v| sig(&cb, &adj_b, v)).collect();
        let mut ids = BTreeMap::new();
        for s in sa.iter().chain(sb.iter()) {
            let n = ids.len();
            ids.entry(s.clone()).or_insert(n);
        }
        ca = sa.iter().map(|s| ids[s]).collect();
        cb = sb.iter().map(|s| ids[s]).collect();
        if ids.len() == classes {
            break;
        }
        classes = ids.len();
    }
    (ca, cb)
}

/// Plain graph isomorphism (interfaces ignored) for graphs up to
/// [`ISOMORPHISM_LIMIT`] vertices: colour-refinement invariants, then VF2
/// matching constrained to equal colours.
pub fn is_isomorphic(a: &FlatGraph, b: &FlatGraph) -> Result<bool> {
    for g in [a, b] {
        if g.vertices > ISOMORPHISM_LIMIT {
            return Err(Error::TooLarge {
                what: "graph for isomorphism check",
                value: g.vertices,
                max: ISOMORPHISM_LIMIT,
            });
        }
    }
    if a.vertices != b.vertices || a.edges.len() != b.edges.len() {
        return Ok(false);
    }
    let (ca, cb) = refine_colours(a, b);
    let mut ha = ca.clone();
    let mut hb = cb.clone();
    ha.sort_unstable();
    hb.sort_unstable();
    if ha != hb {
        return Ok(false);
    }
    let build = |g: &FlatGraph, c: &[usize]| {
        let mut pg = petgraph::graph::UnGraph::<usize, ()>::new_undirected();
        let nodes: Vec<_> = (0..g.vertices).map(|v| pg.add_node(c[v])).collect();
        for &(x, y) in &g.edges {
            pg.add_edge(nodes[x], nodes[y], ());
        }
        pg
    };
    let ga = build(a, &ca);
    let gb = build(b, &cb);
    Ok(petgraph::algo::is_isomorphic_matching(
        &ga,
        &gb,
        |x, y| x == y,
        |_, _| true,
    ))
}

/// Underlying lattice of a [`LatticePlan`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum LatticeKind {
    /// Square grid.
    Grid,
    /// Honeycomb in brick-wall form: the vertical edge between rows `y` and
    /// `y + 1` at column `x` exists iff `x + y` is even.
    Hexagonal,
}

/// Lattice reduction recipe. Vertex `(x, y)` has id `y * width + x`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LatticePlan {
    pub kind: LatticeKind,
    pub width: usize,
    pub height: usize,
    /// Vertices removed by q-basis measurement.
    pub deletions: Vec<usize>,
    /// Degree-2 vertices removed by p-basis measurement, applied in order after deletions.
    pub shortenings: Vec<usize>,
}

/// The unreduced lattice.
pub fn lattice(kind: LatticeKind, width: usize, height: usize) -> FlatGraph {
    let id = |x: usize, y: usize| y * width + x;
    let mut edges = Vec::new();
    for y in 0..height {
        for x in 0..width {
            if x + 1 < width {
                edges.push((id(x, y), id(x + 1, y)));
            }
            let vertical = match kind {
                LatticeKind::Grid => true,
                LatticeKind::Hexagonal => (x + y) % 2 == 0,
            };
            if y + 1 < height && vertical {
                edges.push((id(x, y), id(x, y + 1)));
            }
        }
    }
    FlatGraph {
        vertices: width * height,
        edges,
        begin: Vec::new(),
        end: Vec::new(),
    }
    .normalized()
}

/// Applies deletions, then wire shortenings, to the lattice of `plan`.
pub fn reduce_lattice(plan: &LatticePlan) -> Result<GraphTerm> {
    let base = lattice(plan.kind, plan.width, plan.height);
    let n = base.vertices;
    for &v in plan.deletions.iter().chain(plan.shortenings.iter()) {
        if v >= n {
            return Err(Error::InvalidVertex(v));
        }
    }
    // Shortening ids refer to the original lattice; translate after deletion.
    let deleted: BTreeSet<usize> = plan.deletions.iter().copied().collect();
    let mut map = vec![usize::MAX; n];
    let mut next = 0;
    for (v, slot) in map.iter_mut().enumerate() {
        if !deleted.contains(&v) {
            *slot = next;
            next += 1;
        }
    }
    let after = base.delete_vertices(&plan.deletions)?;
    let short: Vec<usize> = plan
        .shortenings
        .iter()
        .map(|&v| {
            if map[v] == usize::MAX {
                Err(Error::InvalidVertex(v))
            } else {
                Ok(map[v])
            }
        })
        .collect::<Result<_>>()?;
    Ok(GraphTerm::from_flat(after.shorten_wires(&short)?))
}

/// Rail position (column along each rail) of every inter-rail connector of
/// `G_D^(M,k)`: `(upper rail, position)`.
fn brickwork_connectors(modes: usize, depth: usize) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    for layer in 0..depth {
        let base = 24 * layer;
        for pair in (0..modes).step_by(2) {
            for s in [4, 8, 12] {
                out.push((pair, base + s));
            }
        }
        for pair in (1..modes.saturating_sub(1)).step_by(2) {
            for s in [16, 20, 24] {
                out.push((pair, base + s));
            }
        }
    }
    out
}

/// Reduction plan whose result is isomorphic to `brickwork_graph(M, k)`.
///
/// Rails sit on even rows. On the grid, connectors are the odd-row vertices at
/// the connector columns; every other odd-row vertex is deleted. On the
/// brick-wall honeycomb each rail position occupies four columns, connectors
/// take a two-vertex detour through the odd row (one vertex is then shortened),
/// and rail vertices between positions are shortened.
pub fn brickwork_lattice_plan(kind: LatticeKind, modes: usize, depth: usize) -> Result<LatticePlan> {
    brickwork_graph(modes, depth)?;
    let len = 24 * depth + 1;
    let height = 2 * modes - 1;
    let connectors = brickwork_connectors(modes, depth);
    match kind {
        LatticeKind::Grid => {
            let width = len;
            let keep: BTreeSet<usize> = connectors
                .iter()
                .map(|&(rail, pos)| (2 * rail + 1) * width + pos)
                .collect();
            let deletions = (0..height)
                .filter(|y| y % 2 == 1)
                .flat_map(|y| (0..width).map(move |x| y * width + x))
                .filter(|v| !keep.contains(v))
                .collect();
            Ok(LatticePlan {
                kind,
                width,
                height,
                deletions,
                shortenings: Vec::new(),
            })
        }
        LatticeKind::Hexagonal => {
            let width = 4 * (len - 1) + 2;
            let id = |x: usize, y: usize| y * width + x;
            // Physical column of each rail position: shifted by one where the
            // rail is the lower end of a connector.
            let mut col = vec![vec![0usize; len]; modes];
            for (rail, c) in col.iter_mut().enumerate() {
                for (pos, x) in c.iter_mut().enumerate() {
                    *x = 4 * pos;
                    if rail > 0 && connectors.contains(&(rail - 1, pos)) {
                        *x += 1;
                    }
                }
            }
            let mut keep_odd = BTreeSet::new();
            let mut shortenings = Vec::new();
            for &(rail, pos) in &connectors {
                let y = 2 * rail + 1;
                keep_odd.insert(id(4 * pos, y));
                keep_odd.insert(id(4 * pos + 1, y));
                shortenings.push(id(4 * pos + 1, y));
            }
            let mut deletions: Vec<usize> = (0..height)
                .filter(|y| y % 2 == 1)
                .flat_map(|y| (0..width).map(move |x| y * width + x))
                .filter(|v| !keep_odd.contains(v))
                .collect();
            for (rail, c) in col.iter().enumerate() {
                let y = 2 * rail;
                let used: BTreeSet<usize> = c.iter().copied().collect();
                let (lo, hi) = (c[0], c[len - 1]);
                for x in 0..width {
                    if x < lo || x > hi {
                        deletions.push(id(x, y));
                    } else if !used.contains(&x) {
                        shortenings.push(id(x, y));
                    }
                }
            }
            deletions.sort_unstable();
            Ok(LatticePlan {
                kind,
                width,
                height,
                deletions,
                shortenings,
            })
        }
    }
}
