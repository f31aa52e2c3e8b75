//! MovieLens-100K ingestion: a movie co-rating graph with genre labels.
//!
//! Two movies are linked whenever some user rated them consecutively
//! (ratings sorted per user by timestamp); every such consecutive pair
//! increments the undirected edge weight by one. Each movie is labeled
//! with the globally most frequent genre among the genres it carries.
//! Movies that end up with no edges are dropped and node ids compacted.

use std::collections::HashMap;
use std::path::Path;

use crate::error::{Error, Result};
use crate::graph::WeightedGraph;
use crate::labels::LabelSet;

/// Number of binary genre flags at the end of each `u.item` record; flag 0
/// is the "unknown" genre.
pub const GENRE_FLAGS: usize = 19;

/// Build statistics, recorded into run manifests.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BuildReport {
    /// Movies listed in `u.item`.
    pub movies_listed: usize,
    /// Movies kept (at least one co-rating edge).
    pub nodes: usize,
    pub edges: usize,
    pub classes: usize,
    pub ratings: usize,
    pub users: usize,
}

fn parse_err(path: &Path, line: usize, msg: impl Into<String>) -> Error {
    Error::Parse {
        path: path.display().to_string(),
        line,
        msg: msg.into(),
    }
}

fn read_file(path: &Path) -> Result<String> {
    // The raw catalog ships as ISO-8859-1 (accented titles); every field
    // this builder parses is ASCII, so lossy decoding is safe.
    let bytes = std::fs::read(path).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })?;
    Ok(String::from_utf8_lossy(&bytes).into_owned())
}

struct Rating {
    user: u32,
    item: u32,
    timestamp: i64,
}

fn parse_ratings(path: &Path) -> Result<Vec<Rating>> {
    let text = read_file(path)?;
    let mut out = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let lineno = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 4 {
            return Err(parse_err(
                path,
                lineno,
                format!("expected 4 tab-separated fields, got {}", fields.len()),
            ));
        }
        let user = fields[0]
            .parse()
            .map_err(|_| parse_err(path, lineno, format!("bad user id '{}'", fields[0])))?;
        let item = fields[1]
            .parse()
            .map_err(|_| parse_err(path, lineno, format!("bad item id '{}'", fields[1])))?;
        let timestamp = fields[3]
            .parse()
            .map_err(|_| parse_err(path, lineno, format!("bad timestamp '{}'", fields[3])))?;
        // Field 2 is the rating value; the graph uses co-rating order only.
        out.push(Rating {
            user,
            item,
            timestamp,
        });
    }
    if out.is_empty() {
        return Err(parse_err(path, 0, "no ratings found"));
    }
    Ok(out)
}

/// Genre flag vector per movie id.
fn parse_items(path: &Path) -> Result<HashMap<u32, [bool; GENRE_FLAGS]>> {
    let text = read_file(path)?;
    let mut out = HashMap::new();
    for (idx, line) in text.lines().enumerate() {
        let lineno = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('|').collect();
        if fields.len() < GENRE_FLAGS + 1 {
            return Err(parse_err(
                path,
                lineno,
                format!(
                    "expected at least {} pipe-separated fields, got {}",
                    GENRE_FLAGS + 1,
                    fields.len()
                ),
            ));
        }
        let id: u32 = fields[0]
            .parse()
            .map_err(|_| parse_err(path, lineno, format!("bad movie id '{}'", fields[0])))?;
        // Titles may in principle contain '|'; the flags are the last 19 fields.
        let mut flags = [false; GENRE_FLAGS];
        for (k, raw) in fields[fields.len() - GENRE_FLAGS..].iter().enumerate() {
            flags[k] = match raw.trim() {
                "0" => false,
                "1" => true,
                other => return Err(parse_err(path, lineno, format!("bad genre flag '{other}'"))),
            };
        }
        if out.insert(id, flags).is_some() {
            return Err(parse_err(path, lineno, format!("duplicate movie id {id}")));
        }
    }
    if out.is_empty() {
        return Err(parse_err(path, 0, "no movies found"));
    }
    Ok(out)
}

/// Label each movie with the genre it carries that is most frequent across
/// the whole catalog; frequency ties break toward the lower genre index and
/// flagless movies fall back to the "unknown" genre (index 0).
fn genre_labels(items: &HashMap<u32, [bool; GENRE_FLAGS]>) -> HashMap<u32, usize> {
    let mut freq = [0usize; GENRE_FLAGS];
    for flags in items.values() {
        for (g, &set) in flags.iter().enumerate() {
            if set {
                freq[g] += 1;
            }
        }
    }
    items
        .iter()
        .map(|(&id, flags)| {
            let label = (0..GENRE_FLAGS)
                .filter(|&g| flags[g])
                .max_by(|&a, &b| freq[a].cmp(&freq[b]).then(b.cmp(&a)))
                .unwrap_or(0);
            (id, label)
        })
        .collect()
}

/// Build the co-rating graph and genre labels from `u.data` / `u.item`.
pub fn build_ml100k_graph(
    ratings_path: &Path,
    items_path: &Path,
) -> Result<(WeightedGraph, LabelSet, BuildReport)> {
    let ratings = parse_ratings(ratings_path)?;
    let items = parse_items(items_path)?;
    let labels_by_movie = genre_labels(&items);

    // Group ratings per user preserving file order, then sort by
    // (timestamp, item) so timestamp collisions stay deterministic.
    let mut per_user: HashMap<u32, Vec<(i64, u32)>> = HashMap::new();
    for r in &ratings {
        per_user
            .entry(r.user)
            .or_default()
            .push((r.timestamp, r.item));
    }
    let mut weights: HashMap<(u32, u32), f64> = HashMap::new();
    for seq in per_user.values_mut() {
        seq.sort();
        for pair in seq.windows(2) {
            let (a, b) = (pair[0].1, pair[1].1);
            if a == b {
                continue;
            }
            let key = if a < b { (a, b) } else { (b, a) };
            *weights.entry(key).or_insert(0.0) += 1.0;
        }
    }

    // Keep only movies that carry at least one edge; compact ids in
    // ascending movie-id order.
    let mut kept: Vec<u32> = weights
        .keys()
        .flat_map(|&(a, b)| [a, b])
        .collect::<std::collections::BTreeSet<u32>>()
        .into_iter()
        .collect();
    kept.sort_unstable();
    let index: HashMap<u32, usize> = kept.iter().enumerate().map(|(i, &m)| (m, i)).collect();

    for &movie in &kept {
        if !items.contains_key(&movie) {
            return Err(Error::InvalidLabels(format!(
                "movie {movie} appears in ratings but not in the item catalog"
            )));
        }
    }

    let edges: Vec<(usize, usize, f64)> = weights
        .iter()
        .map(|(&(a, b), &w)| (index[&a], index[&b], w))
        .collect();
    let graph = WeightedGraph::from_edges(kept.len(), edges)?;

    // Compact the surviving genre ids to a dense class range, ordered by
    // genre index.
    let raw_labels: Vec<usize> = kept.iter().map(|m| labels_by_movie[m]).collect();
    let mut distinct: Vec<usize> = raw_labels.clone();
    distinct.sort_unstable();
    distinct.dedup();
    let remap: HashMap<usize, usize> = distinct.iter().enumerate().map(|(i, &g)| (g, i)).collect();
    let labels = LabelSet::new(
        raw_labels.iter().map(|g| remap[g]).collect(),
        distinct.len(),
    )?;

    let report = BuildReport {
        movies_listed: items.len(),
        nodes: graph.n(),
        edges: graph.edge_count(),
        classes: labels.class_count(),
        ratings: ratings.len(),
        users: per_user.len(),
    };
    Ok((graph, labels, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::fmt::Write as _;
    use tempfile::tempdir;

    fn write_items(path: &Path, rows: &[(u32, &[usize])]) {
        let mut text = String::new();
        for &(id, genres) in rows {
            let mut flags = [0u8; GENRE_FLAGS];
            for &g in genres {
                flags[g] = 1;
            }
            write!(text, "{id}|Title {id}|01-Jan-1995||http://x").unwrap();
            for f in flags {
                write!(text, "|{f}").unwrap();
            }
            text.push('\n');
        }
        std::fs::write(path, text).unwrap();
    }

    fn write_ratings(path: &Path, rows: &[(u32, u32, i64)]) {
        let mut text = String::new();
        for &(user, item, ts) in rows {
            writeln!(text, "{user}\t{item}\t4\t{ts}").unwrap();
        }
        std::fs::write(path, text).unwrap();
    }

    #[test]
    fn consecutive_ratings_increment_edges() {
        let dir = tempdir().unwrap();
        let (udata, uitem) = (dir.path().join("u.data"), dir.path().join("u.item"));
        // User 1 rates A,B,C in time order; user 2 rates B,C again.
        write_ratings(
            &udata,
            &[(1, 10, 1), (1, 20, 2), (1, 30, 3), (2, 20, 5), (2, 30, 6)],
        );
        write_items(&uitem, &[(10, &[1]), (20, &[1]), (30, &[2])]);
        let (g, _, report) = build_ml100k_graph(&udata, &uitem).unwrap();
        assert_eq!(report.nodes, 3);
        assert_eq!(g.weight(0, 1), Some(1.0)); // A-B once
        assert_eq!(g.weight(1, 2), Some(2.0)); // B-C twice
        assert_eq!(g.weight(0, 2), None);
    }

    #[test]
    fn single_rating_user_contributes_nothing() {
        let dir = tempdir().unwrap();
        let (udata, uitem) = (dir.path().join("u.data"), dir.path().join("u.item"));
        write_ratings(&udata, &[(1, 10, 1), (2, 20, 1), (2, 30, 2)]);
        write_items(&uitem, &[(10, &[1]), (20, &[1]), (30, &[1])]);
        let (g, _, report) = build_ml100k_graph(&udata, &uitem).unwrap();
        // Movie 10 has no co-rating partner and is dropped.
        assert_eq!(report.nodes, 2);
        assert_eq!(g.edge_count(), 1);
    }

    #[test]
    fn label_is_globally_most_frequent_carried_genre() {
        let dir = tempdir().unwrap();
        let (udata, uitem) = (dir.path().join("u.data"), dir.path().join("u.item"));
        write_ratings(&udata, &[(1, 10, 1), (1, 20, 2), (1, 30, 3)]);
        // Genre 2 appears on three movies, genre 1 on one: movie 10 carries
        // both and takes genre 2.
        write_items(&uitem, &[(10, &[1, 2]), (20, &[2]), (30, &[2])]);
        let (_, labels, _) = build_ml100k_graph(&udata, &uitem).unwrap();
        assert_eq!(labels.class_count(), 1);
        assert_eq!(labels.label(0), 0); // compacted id of genre 2
    }

    #[test]
    fn frequency_ties_break_to_lower_genre_index() {
        let dir = tempdir().unwrap();
        let (udata, uitem) = (dir.path().join("u.data"), dir.path().join("u.item"));
        write_ratings(&udata, &[(1, 10, 1), (1, 20, 2)]);
        // Genres 3 and 5 both appear exactly twice overall.
        write_items(&uitem, &[(10, &[3, 5]), (20, &[3, 5])]);
        let (_, labels, _) = build_ml100k_graph(&udata, &uitem).unwrap();
        for i in 0..2 {
            assert_eq!(labels.label(i), 0); // genre 3 wins the tie
        }
        assert_eq!(labels.class_count(), 1);
    }

    #[test]
    fn flagless_movie_falls_back_to_unknown_genre() {
        let dir = tempdir().unwrap();
        let (udata, uitem) = (dir.path().join("u.data"), dir.path().join("u.item"));
        write_ratings(&udata, &[(1, 10, 1), (1, 20, 2)]);
        write_items(&uitem, &[(10, &[]), (20, &[4])]);
        let (_, labels, _) = build_ml100k_graph(&udata, &uitem).unwrap();
        // Two classes survive: unknown (genre 0) and genre 4.
        assert_eq!(labels.class_count(), 2);
        assert_eq!(labels.label(0), 0);
        assert_eq!(labels.label(1), 1);
    }

    #[test]
    fn timestamp_collisions_still_count_after_stable_sort() {
        let dir = tempdir().unwrap();
        let (udata, uitem) = (dir.path().join("u.data"), dir.path().join("u.item"));
        write_ratings(&udata, &[(1, 30, 7), (1, 10, 7), (1, 20, 7)]);
        write_items(&uitem, &[(10, &[1]), (20, &[1]), (30, &[1])]);
        let (g, _, _) = build_ml100k_graph(&udata, &uitem).unwrap();
        // Sorted by (timestamp, item): 10, 20, 30.
        assert_eq!(g.weight(0, 1), Some(1.0));
        assert_eq!(g.weight(1, 2), Some(1.0));
        assert_eq!(g.edge_count(), 2);
    }

    #[test]
    fn malformed_line_reports_its_number() {
        let dir = tempdir().unwrap();
        let (udata, uitem) = (dir.path().join("u.data"), dir.path().join("u.item"));
        std::fs::write(&udata, "1\t10\t4\t100\n1\t20\t4\n").unwrap();
        write_items(&uitem, &[(10, &[1])]);
        match build_ml100k_graph(&udata, &uitem).unwrap_err() {
            Error::Parse { line, .. } => assert_eq!(line, 2),
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn latin1_catalog_titles_are_tolerated() {
        // The real catalog is ISO-8859-1; titles may carry non-UTF-8
        // bytes. Only ASCII fields matter to the builder.
        let dir = tempdir().unwrap();
        let (udata, uitem) = (dir.path().join("u.data"), dir.path().join("u.item"));
        write_ratings(&udata, &[(1, 1, 100), (1, 2, 200)]);
        let mut item_bytes = Vec::new();
        item_bytes.extend_from_slice(b"1|Cit\xe9 des Films|01-Jan-1995||http://x|1");
        item_bytes.extend_from_slice(&b"|0".repeat(18));
        item_bytes.push(b'\n');
        item_bytes.extend_from_slice(b"2|Plain|01-Jan-1995||http://x|0|1");
        item_bytes.extend_from_slice(&b"|0".repeat(17));
        item_bytes.push(b'\n');
        std::fs::write(&uitem, item_bytes).unwrap();
        let (g, labels, _) = build_ml100k_graph(&udata, &uitem).unwrap();
        assert_eq!(g.edge_count(), 1);
        assert_eq!(labels.class_count(), 2);
    }

    #[test]
    fn deterministic_rebuild() {
        let dir = tempdir().unwrap();
        let (udata, uitem) = (dir.path().join("u.data"), dir.path().join("u.item"));
        write_ratings(
            &udata,
            &[(1, 10, 3), (1, 20, 1), (1, 30, 2), (2, 10, 9), (2, 30, 8)],
        );
        write_items(&uitem, &[(10, &[0]), (20, &[2]), (30, &[2, 4])]);
        let (g1, l1, r1) = build_ml100k_graph(&udata, &uitem).unwrap();
        let (g2, l2, r2) = build_ml100k_graph(&udata, &uitem).unwrap();
        assert_eq!(g1, g2);
        assert_eq!(l1, l2);
        assert_eq!(r1, r2);
    }
}
