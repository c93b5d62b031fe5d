//! Text rendering pinned against a checked-in transcript. Set
//! `UPDATE_GOLDEN=1` to rewrite the expected file after an intended change.

use std::path::Path;

use causaleval::report::{render_json, render_text, Report};

fn golden_dir() -> &'static Path {
    Path::new(concat!(env!("CARGO_MANIFEST_DIR"), "/tests/golden"))
}

fn fixture() -> Report {
    Report::from_json(&std::fs::read(golden_dir().join("report.json")).unwrap()).unwrap()
}

#[test]
fn text_rendering_matches_golden_file() {
    let text = render_text(&fixture());
    let path = golden_dir().join("report.txt");
    if std::env::var_os("UPDATE_GOLDEN").is_some() {
        std::fs::write(&path, &text).unwrap();
    }
    let expected = std::fs::read_to_string(&path).unwrap();
    assert_eq!(text, expected);
}

#[test]
fn json_rendering_round_trips_through_the_fixture() {
    let report = fixture();
    let bytes = render_json(&report);
    let again = Report::from_json(&bytes).unwrap();
    assert_eq!(render_json(&again), bytes);
    assert_eq!(render_text(&again), render_text(&report));
}

#[test]
fn table_columns_are_aligned() {
    let text = render_text(&fixture());
    let block: Vec<&str> = text
        .lines()
        .skip_while(|l| !l.starts_with("term "))
        .take_while(|l| !l.trim().is_empty() && !l.starts_with("  "))
        .filter(|l| !l.starts_with('-'))
        .collect();
    assert!(block.len() > 2);
    // every row ends its numeric columns at the same offsets as the header
    let header = block[0];
    let ends: Vec<usize> = header.match_indices(|c: char| !c.is_whitespace())
        .filter(|(i, _)| header[i + 1..].starts_with(' ') || i + 1 == header.len())
        .map(|(i, _)| i)
        .skip(1)
        .collect();
    for row in &block[1..] {
        for &e in &ends {
            let c = row.as_bytes()[e];
            assert!(c.is_ascii_digit(), "misaligned at {e}: {row:?}");
        }
    }
}
