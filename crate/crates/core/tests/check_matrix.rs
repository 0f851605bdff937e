//! The check matrix document must cover every registered check and every
//! statement the library is meant to verify.

use mshit_core::verify::registry;

const MATRIX: &str = include_str!("../../../docs/check_matrix.md");

const STATEMENTS: &[&str] = &[
    "generator moment conditions",
    "distribution identity",
    "boundary probability zero",
    "complete dependence example",
    "hitting positivity characterization, null direction",
    "hitting positivity characterization, positive direction",
    "complete dependence corollary",
    "piecewise generator example",
    "survivor lower bound",
    "hitting function bound",
    "hitting function integral",
    "down-up-down lemma",
    "sup equals max identity",
    "two-hit sufficient condition",
    "five-way equivalence",
    "nonlinear generator example",
    "two-branch closing example, hitting curve",
    "two-branch closing example, two-hit",
    "two-branch closing example, no three hits",
    "out of scope: the existence of a generator",
    "out of scope: the norming sequences",
    "out of scope: the proof of the functional Takahashi statement",
    "out of scope: level functions with infinitely many discontinuities",
];

#[test]
fn every_check_id_is_in_the_matrix() {
    for check in registry() {
        let cell = format!("`{}`", check.id);
        assert!(
            MATRIX.contains(&cell),
            "{} missing from the matrix",
            check.id
        );
    }
}

#[test]
fn every_statement_is_in_the_matrix() {
    for s in STATEMENTS {
        assert!(
            MATRIX.contains(s),
            "statement '{s}' missing from the matrix"
        );
    }
}

#[test]
fn matrix_names_no_unknown_check() {
    let known: Vec<_> = registry().iter().map(|c| c.id).collect();
    for row in MATRIX
        .lines()
        .filter(|l| l.starts_with("| ") && !l.starts_with("| Statement"))
    {
        let row = row.replace("\\|", "");
        let Some(ids) = row.split('|').nth(2) else {
            continue;
        };
        for id in ids
            .split(',')
            .map(|s| s.trim().trim_matches('`'))
            .filter(|s| !s.is_empty())
        {
            assert!(known.contains(&id), "matrix names unknown check {id}");
        }
    }
}
