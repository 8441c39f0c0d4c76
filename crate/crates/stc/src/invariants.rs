//! Pipeline invariants, checked independently of the code that produces the
//! data. Tests and fuzz targets share these so a regression in either stage
//! fails with the same message everywhere.
//!
//! * [`check_leaves`]: every leaf re-measures to its recorded token count,
//!   fits the budget unless flagged oversized, and each row's pieces
//!   reconstruct its original cells byte for byte (losslessness).
//! * [`check_chunks`]: chunks partition the leaves of each sheet in order
//!   with no overlap and no gaps, respect the budget, and carry honest
//!   metadata (row spans, fragment annotations, oversized flags).
//! * [`check_document`]: run the whole pipeline on a document and apply both.

use crate::chunker::{greedy_merge, split_leaves, Budget, Chunk, GroupLeaves, LeafKind, LeafUnit};
use crate::ingest::TabularDocument;
use crate::row_tree::{
    build_row_tree, render_fragment_marker, render_pair_line, RowNode, RowTree,
};
use crate::tokens::TokenCount;

/// Check leaf-level invariants of `groups` against the tree they came from.
pub fn check_leaves(
    tree: &RowTree,
    groups: &[GroupLeaves],
    budget: Budget,
    counter: &dyn TokenCount,
) -> Result<(), String> {
    if tree.groups.len() != groups.len() {
        return Err(format!(
            "sheet count mismatch: tree has {}, leaves have {}",
            tree.groups.len(),
            groups.len()
        ));
    }
    for (tree_group, leaf_group) in tree.groups.iter().zip(groups) {
        if tree_group.sheet_name != leaf_group.sheet_name {
            return Err(format!(
                "sheet name mismatch: `{}` vs `{}`",
                tree_group.sheet_name, leaf_group.sheet_name
            ));
        }
        let leaves = &leaf_group.leaves;
        for leaf in leaves {
            let measured = counter.count(&leaf.text);
            if leaf.token_count != measured {
                return Err(format!(
                    "leaf token_count {} != measured {} (sheet `{}` row {})",
                    leaf.token_count, measured, leaf_group.sheet_name, leaf.row_index
                ));
            }
            if !leaf.oversized && leaf.token_count > budget.get() {
                return Err(format!(
                    "leaf over budget without oversized flag: {} > {} (sheet `{}` row {})",
                    leaf.token_count,
                    budget.get(),
                    leaf_group.sheet_name,
                    leaf.row_index
                ));
            }
        }
        let mut li = 0;
        for row in &tree_group.rows {
            let start = li;
            while li < leaves.len() && leaves[li].row_index == row.row_index {
                li += 1;
            }
            let run = &leaves[start..li];
            check_row_leaves(row, run, &leaf_group.sheet_name)?;
        }
        if li != leaves.len() {
            return Err(format!(
                "sheet `{}` has {} leaves not accounted for by its rows",
                leaf_group.sheet_name,
                leaves.len() - li
            ));
        }
    }
    Ok(())
}

/// One row's leaves: kinds are coherent, text is the exact rendering of the
/// pieces, and the pieces concatenate back to the row's original pairs.
fn check_row_leaves(row: &RowNode, run: &[LeafUnit], sheet: &str) -> Result<(), String> {
    let ctx = || format!("sheet `{sheet}` row {}", row.row_index);
    if run.is_empty() {
        return Err(format!("{}: no leaves produced", ctx()));
    }
    if run.len() == 1 && run[0].kind == LeafKind::WholeRow {
        if run[0].text != row.rendered {
            return Err(format!("{}: whole-row leaf text differs from rendering", ctx()));
        }
    } else {
        for (i, leaf) in run.iter().enumerate() {
            let expected = LeafKind::Fragment {
                index: i + 1,
                total: run.len(),
            };
            if leaf.kind != expected {
                return Err(format!(
                    "{}: leaf {} has kind {:?}, expected {:?}",
                    ctx(),
                    i,
                    leaf.kind,
                    expected
                ));
            }
            let marker =
                render_fragment_marker(&row.sheet_name, row.row_index, i + 1, run.len());
            let mut expected_text = marker;
            for piece in &leaf.pieces {
                expected_text.push('\n');
                let line = if piece.continuation {
                    render_pair_line(&format!("{} (cont.)", piece.key), &piece.value)
                } else {
                    render_pair_line(&piece.key, &piece.value)
                };
                expected_text.push_str(&line);
            }
            if leaf.text != expected_text {
                return Err(format!("{}: fragment {} text differs from its pieces", ctx(), i + 1));
            }
        }
    }

    // Losslessness: merging continuation pieces restores the original pairs.
    let mut rebuilt: Vec<(String, String)> = Vec::new();
    for leaf in run {
        for piece in &leaf.pieces {
            if piece.continuation {
                match rebuilt.last_mut() {
                    Some((key, value)) if *key == piece.key => value.push_str(&piece.value),
                    Some((key, _)) => {
                        return Err(format!(
                            "{}: continuation of `{}` follows `{}`",
                            ctx(),
                            piece.key,
                            key
                        ))
                    }
                    None => {
                        return Err(format!("{}: leading continuation piece", ctx()));
                    }
                }
            } else {
                rebuilt.push((piece.key.clone(), piece.value.clone()));
            }
        }
    }
    if rebuilt.len() != row.pairs.len() {
        return Err(format!(
            "{}: rebuilt {} pairs, row has {}",
            ctx(),
            rebuilt.len(),
            row.pairs.len()
        ));
    }
    for (got, want) in rebuilt.iter().zip(&row.pairs) {
        if got.0 != want.key || got.1 != want.value {
            return Err(format!(
                "{}: pair `{}` does not reconstruct its cell",
                ctx(),
                want.key
            ));
        }
    }
    Ok(())
}

/// Check chunk-level invariants of `chunks` against the leaves they merged.
pub fn check_chunks(
    groups: &[GroupLeaves],
    chunks: &[Chunk],
    budget: Budget,
    counter: &dyn TokenCount,
) -> Result<(), String> {
    for (i, chunk) in chunks.iter().enumerate() {
        if chunk.chunk_index != i {
            return Err(format!("chunk {} records index {}", i, chunk.chunk_index));
        }
        let measured = counter.count(&chunk.text);
        if chunk.token_count != measured {
            return Err(format!(
                "chunk {} token_count {} != measured {}",
                i, chunk.token_count, measured
            ));
        }
        if !chunk.oversized && chunk.token_count > budget.get() {
            return Err(format!(
                "chunk {} over budget without oversized flag: {} > {}",
                i,
                chunk.token_count,
                budget.get()
            ));
        }
    }

    let mut ci = 0;
    for group in groups {
        let leaves = &group.leaves;
        let mut li = 0;
        while li < leaves.len() {
            let Some(chunk) = chunks.get(ci) else {
                return Err(format!(
                    "sheet `{}` leaves exhausted the chunk list",
                    group.sheet_name
                ));
            };
            if chunk.sheet_name.as_deref() != Some(group.sheet_name.as_str()) {
                return Err(format!(
                    "chunk {} names sheet {:?}, expected `{}`",
                    ci, chunk.sheet_name, group.sheet_name
                ));
            }
            // Reconstruct the chunk from the next leaves; the join must land
            // exactly on the chunk text (no overlap, no gaps, no rewording).
            let first_leaf = li;
            let mut text = leaves[li].text.clone();
            li += 1;
            while text.len() < chunk.text.len() && li < leaves.len() {
                text.push_str("\n\n");
                text.push_str(&leaves[li].text);
                li += 1;
            }
            if text != chunk.text {
                return Err(format!(
                    "chunk {} text is not the join of leaves starting at row {} of sheet `{}`",
                    ci, leaves[first_leaf].row_index, group.sheet_name
                ));
            }
            let run = &leaves[first_leaf..li];
            if chunk.row_first != Some(run[0].row_index)
                || chunk.row_last != Some(run[run.len() - 1].row_index)
            {
                return Err(format!(
                    "chunk {} row span {:?}..{:?} does not match its leaves",
                    ci, chunk.row_first, chunk.row_last
                ));
            }
            let lone_oversized = run.len() == 1 && run[0].oversized;
            if chunk.oversized != lone_oversized {
                return Err(format!("chunk {} oversized flag is {}", ci, chunk.oversized));
            }
            if run.len() > 1 && run.iter().any(|l| l.oversized) {
                return Err(format!("chunk {} merged an oversized leaf", ci));
            }
            let expected_fragment = expected_annotation(run);
            if chunk.fragment != expected_fragment {
                return Err(format!(
                    "chunk {} fragment annotation {:?}, expected {:?}",
                    ci, chunk.fragment, expected_fragment
                ));
            }
            ci += 1;
        }
    }
    if ci != chunks.len() {
        return Err(format!("{} chunks beyond the final sheet", chunks.len() - ci));
    }
    Ok(())
}

/// Independent restatement of the fragment annotation rule. `None` without
/// fragments; `k/N` or `k-m/N` for fragments of a single row; `mixed` as soon
/// as a whole row or a second row is involved.
fn expected_annotation(run: &[LeafUnit]) -> Option<String> {
    let fragments: Vec<(usize, usize, usize)> = run
        .iter()
        .filter_map(|l| match l.kind {
            LeafKind::Fragment { index, total } => Some((l.row_index, index, total)),
            LeafKind::WholeRow => None,
        })
        .collect();
    let (first_row, first, total) = *fragments.first()?;
    if fragments.len() < run.len() || fragments.iter().any(|&(r, _, _)| r != first_row) {
        return Some("mixed".to_string());
    }
    let last = fragments.last().unwrap().1;
    if first == last {
        Some(format!("{first}/{total}"))
    } else {
        Some(format!("{first}-{last}/{total}"))
    }
}

/// Run the full pipeline on `doc` and apply both checkers.
pub fn check_document(
    doc: &TabularDocument,
    budget: Budget,
    counter: &dyn TokenCount,
) -> Result<(), String> {
    let tree = build_row_tree(doc, counter);
    let groups = split_leaves(&tree, budget, counter);
    check_leaves(&tree, &groups, budget, counter)?;
    let chunks = greedy_merge(&groups, &doc.source_id, budget, counter);
    check_chunks(&groups, &chunks, budget, counter)
}
