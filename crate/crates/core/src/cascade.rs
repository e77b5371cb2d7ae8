//! Entity cascades: connected reply subtrees in which every post cites the
//! same entity, their canonical shapes, and shape frequency tables.
//!
//! Derivation is strict: posts citing the entity but connected only
//! through a non-citing post belong to different cascades. Since reply
//! graphs are forests, every cascade is a rooted tree, so shapes are
//! compared by canonical tree encoding (identical keys exactly when the
//! rooted trees are isomorphic ignoring labels).

use std::collections::{BTreeMap, HashMap, HashSet};
use std::io::Write;

use rayon::prelude::*;
use thiserror::Error;

use crate::corpus::{CorpusStore, PostIdx};
use crate::mentions::MentionIndex;

/// An entity-citing reply subtree with at least two posts.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Cascade {
    pub entity: String,
    pub root: PostIdx,
    /// Ordered by `(created_at, post_id)`.
    pub nodes: Vec<PostIdx>,
    /// `child -> parent` reply edges within the cascade.
    pub edges: Vec<(PostIdx, PostIdx)>,
}

/// Canonical form of a cascade's rooted tree.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CanonicalShape {
    /// Nested-parentheses encoding; equal keys iff isomorphic rooted trees.
    pub key: String,
    pub nodes: usize,
    /// Edges on the longest root-to-leaf path.
    pub depth: usize,
    pub max_branching: usize,
}

#[derive(Debug, Error)]
pub enum CascadeError {
    #[error("cascade is not a rooted tree: {0}")]
    NotATree(String),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
}

/// All strict cascades of an entity: maximal connected components of the
/// reply graph induced on the entity's citing posts, per thread, with
/// singletons dropped. Unknown entities yield no cascades.
pub fn derive_cascades(entity: &str, store: &CorpusStore, mentions: &MentionIndex) -> Vec<Cascade> {
    let citing: HashSet<PostIdx> = mentions.posts_of(entity).iter().map(|m| m.post).collect();
    if citing.len() < 2 {
        return Vec::new();
    }

    // Union by the reply edge when both endpoints cite.
    let members: Vec<PostIdx> = {
        let mut v: Vec<PostIdx> = citing.iter().copied().collect();
        v.sort_unstable();
        v
    };
    let slot: HashMap<PostIdx, usize> = members.iter().enumerate().map(|(i, &p)| (p, i)).collect();
    let mut parent_slot: Vec<usize> = (0..members.len()).collect();
    fn find(parent: &mut Vec<usize>, mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    let mut tree_parent: Vec<Option<PostIdx>> = vec![None; members.len()];
    for (i, &p) in members.iter().enumerate() {
        if let Some(pp) = store.parent_of(p) {
            if let Some(&ps) = slot.get(&pp) {
                tree_parent[i] = Some(pp);
                let (a, b) = (find(&mut parent_slot, i), find(&mut parent_slot, ps));
                if a != b {
                    parent_slot[a] = b;
                }
            }
        }
    }

    let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for i in 0..members.len() {
        let r = find(&mut parent_slot, i);
        groups.entry(r).or_default().push(i);
    }

    let mut cascades = Vec::new();
    for (_, group) in groups {
        if group.len() < 2 {
            continue;
        }
        let mut nodes: Vec<PostIdx> = group.iter().map(|&i| members[i]).collect();
        nodes.sort_by(|a, b| {
            let (pa, pb) = (store.post(*a), store.post(*b));
            pa.time_key().cmp(&pb.time_key())
        });
        let mut edges: Vec<(PostIdx, PostIdx)> = group
            .iter()
            .filter_map(|&i| tree_parent[i].map(|p| (members[i], p)))
            .collect();
        edges.sort_unstable();
        let root = group
            .iter()
            .find(|&&i| tree_parent[i].is_none())
            .map(|&i| members[i])
            .expect("acyclic reply component has a root");
        cascades.push(Cascade { entity: entity.to_owned(), root, nodes, edges });
    }
    cascades.sort_by(|a, b| {
        let (pa, pb) = (store.post(a.root), store.post(b.root));
        pa.time_key().cmp(&pb.time_key())
    });
    cascades
}

/// Canonical rooted-tree encoding: every node becomes `(` + its children's
/// sorted encodings + `)`. Computed bottom-up, so arbitrarily deep chains
/// are fine.
pub fn canonical_shape(cascade: &Cascade) -> Result<CanonicalShape, CascadeError> {
    let n = cascade.nodes.len();
    let index: HashMap<PostIdx, usize> =
        cascade.nodes.iter().enumerate().map(|(i, &p)| (p, i)).collect();
    if index.len() != n {
        return Err(CascadeError::NotATree("duplicate nodes".into()));
    }
    let Some(&root) = index.get(&cascade.root) else {
        return Err(CascadeError::NotATree("root not among nodes".into()));
    };

    let mut children: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut has_parent = vec![false; n];
    for &(child, parent) in &cascade.edges {
        let (Some(&c), Some(&p)) = (index.get(&child), index.get(&parent)) else {
            return Err(CascadeError::NotATree("edge endpoint not among nodes".into()));
        };
        if has_parent[c] {
            return Err(CascadeError::NotATree("node with two parents".into()));
        }
        has_parent[c] = true;
        children[p].push(c);
    }
    if has_parent[root] {
        return Err(CascadeError::NotATree("root has a parent".into()));
    }
    if cascade.edges.len() != n - 1 {
        return Err(CascadeError::NotATree(format!(
            "{} edges for {} nodes",
            cascade.edges.len(),
            n
        )));
    }

    // Breadth-first layering from the root; a full traversal also proves
    // connectedness and acyclicity given the edge count.
    let mut depth_of = vec![usize::MAX; n];
    let mut order = vec![root];
    depth_of[root] = 0;
    let mut head = 0;
    while head < order.len() {
        let u = order[head];
        head += 1;
        for &c in &children[u] {
            if depth_of[c] != usize::MAX {
                return Err(CascadeError::NotATree("cycle detected".into()));
            }
            depth_of[c] = depth_of[u] + 1;
            order.push(c);
        }
    }
    if order.len() != n {
        return Err(CascadeError::NotATree("disconnected nodes".into()));
    }

    // Encode bottom-up in reverse breadth-first order.
    let mut code: Vec<String> = vec![String::new(); n];
    for &u in order.iter().rev() {
        let mut parts: Vec<&str> = children[u].iter().map(|&c| code[c].as_str()).collect();
        parts.sort_unstable();
        let mut s = String::with_capacity(2 + parts.iter().map(|p| p.len()).sum::<usize>());
        s.push('(');
        for p in parts {
            s.push_str(p);
        }
        s.push(')');
        code[u] = s;
    }

    let depth = depth_of.iter().max().copied().unwrap_or(0);
    let max_branching = children.iter().map(Vec::len).max().unwrap_or(0);
    Ok(CanonicalShape { key: code[root].clone(), nodes: n, depth, max_branching })
}

/// One ranked row of the shape frequency table.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ShapeRow {
    pub rank: usize,
    pub key: String,
    pub count: u64,
    pub nodes: usize,
    pub depth: usize,
    pub max_branching: usize,
}

/// Shape frequencies over a set of entities, ranked by count descending
/// (ties by key).
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ShapeTable {
    pub rows: Vec<ShapeRow>,
    pub total_cascades: u64,
}

/// Derive cascades for every entity (in parallel) and fold their canonical
/// shapes into a ranked frequency table.
pub fn shape_distribution<'a, I>(
    entities: I,
    store: &CorpusStore,
    mentions: &MentionIndex,
) -> Result<ShapeTable, CascadeError>
where
    I: IntoIterator<Item = &'a str>,
{
    let entities: Vec<&str> = entities.into_iter().collect();
    let per_entity: Vec<Vec<CanonicalShape>> = entities
        .par_iter()
        .map(|e| {
            derive_cascades(e, store, mentions)
                .iter()
                .map(canonical_shape)
                .collect::<Result<Vec<_>, _>>()
        })
        .collect::<Result<Vec<_>, _>>()?;

    let mut counts: BTreeMap<String, (u64, CanonicalShape)> = BTreeMap::new();
    let mut total = 0u64;
    for shapes in per_entity {
        for shape in shapes {
            total += 1;
            counts
                .entry(shape.key.clone())
                .and_modify(|(c, _)| *c += 1)
                .or_insert((1, shape));
        }
    }
    let mut rows: Vec<(u64, CanonicalShape)> = counts.into_values().collect();
    rows.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.key.cmp(&b.1.key)));
    let rows = rows
        .into_iter()
        .enumerate()
        .map(|(i, (count, s))| ShapeRow {
            rank: i + 1,
            key: s.key,
            count,
            nodes: s.nodes,
            depth: s.depth,
            max_branching: s.max_branching,
        })
        .collect();
    Ok(ShapeTable { rows, total_cascades: total })
}

impl ShapeTable {
    /// `shape_key,count,rank,nodes,depth,max_branching` rows.
    pub fn write_csv(&self, w: &mut dyn Write) -> Result<(), CascadeError> {
        writeln!(w, "shape_key,count,rank,nodes,depth,max_branching")?;
        for r in &self.rows {
            writeln!(w, "{},{},{},{},{},{}", r.key, r.count, r.rank, r.nodes, r.depth, r.max_branching)?;
        }
        Ok(())
    }

    /// Indented-tree rendering of the top `k` shapes, for figures.
    pub fn write_top_shapes(&self, k: usize, w: &mut dyn Write) -> Result<(), CascadeError> {
        for r in self.rows.iter().take(k) {
            writeln!(w, "rank {} count {} nodes {} depth {}", r.rank, r.count, r.nodes, r.depth)?;
            for (depth, _) in parse_shape_key(&r.key) {
                writeln!(w, "{}*", "  ".repeat(depth))?;
            }
            writeln!(w)?;
        }
        Ok(())
    }
}

/// Walk a canonical key, yielding `(depth, child_count)` per node in
/// preorder.
fn parse_shape_key(key: &str) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    let mut depth = 0usize;
    let mut stack: Vec<usize> = Vec::new();
    for c in key.chars() {
        match c {
            '(' => {
                if let Some(top) = stack.last_mut() {
                    *top += 1;
                }
                out.push((depth, 0));
                stack.push(out.len() - 1);
                depth += 1;
            }
            ')' => {
                depth -= 1;
                stack.pop();
            }
            _ => {}
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::ingest;
    use crate::mentions::{MentionIndex, MentionRecord};
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn rec(id: &str, parent: Option<&str>, at: i64) -> String {
        let parent = parent.map(|p| format!("\"{p}\"")).unwrap_or("null".into());
        format!(
            r#"{{"id":"{id}","parent_id":{parent},"link_id":"T","author":"u{id}","subreddit":"s","created_utc":{at},"body":"x"}}"#
        )
    }

    fn world(posts: &[(&str, Option<&str>)], citing: &[&str]) -> (crate::corpus::CorpusStore, MentionIndex) {
        let lines: Vec<String> = posts
            .iter()
            .enumerate()
            .map(|(i, (id, parent))| rec(id, *parent, i as i64))
            .collect();
        let (store, _) = ingest(lines.iter().map(|s| s.as_str()), None);
        let records: Vec<MentionRecord> = citing
            .iter()
            .map(|id| {
                let post = store.post(store.post_idx(id).unwrap());
                MentionRecord {
                    entity: "e".into(),
                    post_id: id.to_string(),
                    author: post.author.clone(),
                    created_at: post.created_at,
                    surface: "e".into(),
                }
            })
            .collect();
        let (index, _) = MentionIndex::from_records(&store, records).unwrap();
        (store, index)
    }

    #[test]
    fn two_node_chain_is_one_cascade() {
        let (store, idx) = world(&[("a", None), ("b", Some("a"))], &["a", "b"]);
        let cascades = derive_cascades("e", &store, &idx);
        assert_eq!(cascades.len(), 1);
        assert_eq!(cascades[0].nodes.len(), 2);
        let shape = canonical_shape(&cascades[0]).unwrap();
        assert_eq!(shape.key, "(())");
        assert_eq!(shape.depth, 1);
        assert_eq!(shape.max_branching, 1);
    }

    #[test]
    fn gap_in_the_chain_breaks_strict_cascades() {
        // p1 <- p2 <- p3 where only p1 and p3 cite.
        let (store, idx) = world(&[("p1", None), ("p2", Some("p1")), ("p3", Some("p2"))], &["p1", "p3"]);
        assert!(derive_cascades("e", &store, &idx).is_empty());
        assert!(derive_cascades("unknown", &store, &idx).is_empty());
    }

    #[test]
    fn sibling_order_does_not_change_the_key() {
        let (store, idx) =
            world(&[("r", None), ("a", Some("r")), ("b", Some("r")), ("c", Some("b"))], &["r", "a", "b", "c"]);
        let cascades = derive_cascades("e", &store, &idx);
        assert_eq!(cascades.len(), 1);
        let shape = canonical_shape(&cascades[0]).unwrap();
        // Mirror: same structure with sibling roles swapped.
        let (store2, idx2) =
            world(&[("r", None), ("b", Some("r")), ("a", Some("r")), ("c", Some("a"))], &["r", "a", "b", "c"]);
        let shape2 = canonical_shape(&derive_cascades("e", &store2, &idx2)[0]).unwrap();
        assert_eq!(shape.key, shape2.key);
        assert_eq!(shape.max_branching, 2);
        assert_eq!(shape.depth, 2);
    }

    #[test]
    fn non_tree_input_is_an_error() {
        let (store, idx) = world(&[("a", None), ("b", Some("a"))], &["a", "b"]);
        let mut c = derive_cascades("e", &store, &idx).remove(0);
        c.edges.clear();
        assert!(matches!(canonical_shape(&c), Err(CascadeError::NotATree(_))));
    }

    /// Brute-force oracle: connected components of the citing-post graph by
    /// breadth-first search over undirected reply adjacency.
    fn oracle_components(
        store: &crate::corpus::CorpusStore,
        citing: &HashSet<PostIdx>,
    ) -> Vec<Vec<PostIdx>> {
        let mut adj: HashMap<PostIdx, Vec<PostIdx>> = HashMap::new();
        for &p in citing {
            if let Some(parent) = store.parent_of(p) {
                if citing.contains(&parent) {
                    adj.entry(p).or_default().push(parent);
                    adj.entry(parent).or_default().push(p);
                }
            }
        }
        let mut seen: HashSet<PostIdx> = HashSet::new();
        let mut components = Vec::new();
        let mut nodes: Vec<PostIdx> = citing.iter().copied().collect();
        nodes.sort_unstable();
        for start in nodes {
            if seen.contains(&start) {
                continue;
            }
            let mut queue = vec![start];
            let mut comp = Vec::new();
            seen.insert(start);
            while let Some(u) = queue.pop() {
                comp.push(u);
                for &v in adj.get(&u).into_iter().flatten() {
                    if seen.insert(v) {
                        queue.push(v);
                    }
                }
            }
            if comp.len() >= 2 {
                comp.sort_unstable();
                components.push(comp);
            }
        }
        components.sort();
        components
    }

    #[test]
    fn random_threads_match_component_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..200 {
            let n = rng.gen_range(2..=20);
            let mut posts: Vec<(String, Option<String>)> = vec![("p0".into(), None)];
            for i in 1..n {
                posts.push((format!("p{i}"), Some(format!("p{}", rng.gen_range(0..i)))));
            }
            let citing: Vec<String> = (0..n)
                .filter(|_| rng.gen_bool(0.5))
                .map(|i| format!("p{i}"))
                .collect();
            let post_refs: Vec<(&str, Option<&str>)> =
                posts.iter().map(|(id, p)| (id.as_str(), p.as_deref())).collect();
            let citing_refs: Vec<&str> = citing.iter().map(String::as_str).collect();
            let (store, idx) = world(&post_refs, &citing_refs);

            let citing_set: HashSet<PostIdx> =
                citing.iter().filter_map(|id| store.post_idx(id)).collect();
            let expected = oracle_components(&store, &citing_set);
            let mut got: Vec<Vec<PostIdx>> = derive_cascades("e", &store, &idx)
                .into_iter()
                .map(|c| {
                    let mut v = c.nodes;
                    v.sort_unstable();
                    v
                })
                .collect();
            got.sort();
            assert_eq!(got, expected);
        }
    }

    /// Permutation-based isomorphism oracle for small rooted trees given as
    /// parent arrays (`parent[0]` is the root marker).
    fn oracle_iso(a: &[usize], b: &[usize]) -> bool {
        if a.len() != b.len() {
            return false;
        }
        let children = |p: &[usize]| -> Vec<Vec<usize>> {
            let mut ch = vec![Vec::new(); p.len()];
            for i in 1..p.len() {
                ch[p[i]].push(i);
            }
            ch
        };
        let ca = children(a);
        let cb = children(b);
        fn matches(x: usize, y: usize, ca: &[Vec<usize>], cb: &[Vec<usize>]) -> bool {
            if ca[x].len() != cb[y].len() {
                return false;
            }
            let k = ca[x].len();
            let mut used = vec![false; k];
            fn assign(
                i: usize,
                x: usize,
                y: usize,
                used: &mut Vec<bool>,
                ca: &[Vec<usize>],
                cb: &[Vec<usize>],
            ) -> bool {
                if i == ca[x].len() {
                    return true;
                }
                for j in 0..cb[y].len() {
                    if !used[j] && matches(ca[x][i], cb[y][j], ca, cb) {
                        used[j] = true;
                        if assign(i + 1, x, y, used, ca, cb) {
                            return true;
                        }
                        used[j] = false;
                    }
                }
                false
            }
            assign(0, x, y, &mut used, ca, cb)
        }
        matches(0, 0, &ca, &cb)
    }

    fn cascade_from_parents(parents: &[usize]) -> Cascade {
        let nodes: Vec<PostIdx> = (0..parents.len() as PostIdx).collect();
        let edges: Vec<(PostIdx, PostIdx)> =
            (1..parents.len()).map(|i| (i as PostIdx, parents[i] as PostIdx)).collect();
        Cascade { entity: "e".into(), root: 0, nodes, edges }
    }

    #[test]
    fn canonical_key_equality_matches_permutation_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let mut agreements = 0;
        for _ in 0..150 {
            let n = rng.gen_range(2..=8);
            let a: Vec<usize> = std::iter::once(0)
                .chain((1..n).map(|i| rng.gen_range(0..i)))
                .collect();
            let m = rng.gen_range(2..=8);
            let b: Vec<usize> = std::iter::once(0)
                .chain((1..m).map(|i| rng.gen_range(0..i)))
                .collect();
            let ka = canonical_shape(&cascade_from_parents(&a)).unwrap().key;
            let kb = canonical_shape(&cascade_from_parents(&b)).unwrap().key;
            assert_eq!(ka == kb, oracle_iso(&a, &b), "a={a:?} b={b:?}");
            if ka == kb {
                agreements += 1;
            }
        }
        assert!(agreements > 0, "no isomorphic pairs sampled");
    }

    #[test]
    fn relabeling_nodes_preserves_the_key() {
        let c1 = cascade_from_parents(&[0, 0, 0, 1]);
        let mut c2 = c1.clone();
        // Shift all post ids.
        c2.root += 100;
        c2.nodes = c2.nodes.iter().map(|&n| n + 100).collect();
        c2.edges = c2.edges.iter().map(|&(a, b)| (a + 100, b + 100)).collect();
        assert_eq!(canonical_shape(&c1).unwrap().key, canonical_shape(&c2).unwrap().key);
    }

    #[test]
    fn distribution_counts_and_ranks() {
        // 3 identical two-node cascades in separate threads + 1 star cascade.
        let posts: Vec<(String, Option<String>)> = vec![
            ("a1".into(), None),
            ("a2".into(), Some("a1".into())),
            ("b1".into(), None),
            ("b2".into(), Some("b1".into())),
            ("c1".into(), None),
            ("c2".into(), Some("c1".into())),
            ("d1".into(), None),
            ("d2".into(), Some("d1".into())),
            ("d3".into(), Some("d1".into())),
        ];
        let post_refs: Vec<(&str, Option<&str>)> =
            posts.iter().map(|(id, p)| (id.as_str(), p.as_deref())).collect();
        let all: Vec<&str> = posts.iter().map(|(id, _)| id.as_str()).collect();
        let (store, idx) = world(&post_refs, &all);

        let table = shape_distribution(["e"], &store, &idx).unwrap();
        assert_eq!(table.total_cascades, 4);
        assert_eq!(table.rows.len(), 2);
        assert_eq!(table.rows[0].rank, 1);
        assert_eq!(table.rows[0].count, 3);
        assert_eq!(table.rows[0].key, "(())");
        assert_eq!(table.rows[1].count, 1);
        assert_eq!(table.rows[1].key, "(()())");
        let sum: u64 = table.rows.iter().map(|r| r.count).sum();
        assert_eq!(sum, table.total_cascades);

        let mut csv = Vec::new();
        table.write_csv(&mut csv).unwrap();
        let text = String::from_utf8(csv).unwrap();
        assert!(text.starts_with("shape_key,count,rank,nodes,depth,max_branching\n"));
        assert!(text.contains("(()),3,1,2,1,1"));
    }
}
