use std::path::Path;

use discerr::formats::{parse_json, to_json, ProblemFileV1, SolutionFileV1};
use discerr::tables::{parse_levels, parse_pairs};
use proptest::prelude::*;

const VALID: &str = include_str!("data/analytic_n1.json");

fn problem(text: &str) -> Result<ProblemFileV1, String> {
    parse_json::<ProblemFileV1>(Path::new("p.json"), text).map_err(|e| e.to_string())
}

#[test]
fn valid_file_parses_and_validates() {
    let p = problem(VALID).unwrap();
    let inst = p.to_instance().unwrap();
    assert_eq!((inst.n(), inst.p()), (1, 2));
    assert_eq!(ProblemFileV1::from_instance(&inst), p);
}

#[test]
fn semantic_errors_name_the_field() {
    let cases = [
        (VALID.replace("\"format_version\": 1", "\"format_version\": 2"), "format_version"),
        (VALID.replace("\"k\": [1]", "\"k\": [0]"), "k[0]"),
        (VALID.replace("[[0, 1]]", "[[1, 0]]"), "edges[0]"),
        (VALID.replace("\"gamma\": [[1.0, 0.0], [0.0, 1.0]]", "\"gamma\": [[1.0, 0.0], [0.0, -1.0]]"), "gamma"),
        (VALID.replace("\"gamma\": [[1.0, 0.0], [0.0, 1.0]]", "\"gamma\": [[1.0, 0.0]]"), "gamma"),
        (VALID.replace("[[[1.0, 0.0], [0.0, 1.0]]]", "[[[1.0, 0.0], [0.0, -1.0]]]"), "S[0]"),
        (VALID.replace("[[[1.0, 0.0], [0.0, 1.0]]]", "[[[1.0, 0.0], [0.0]]]"), "S[0][1]"),
        (VALID.replace("\"n\": 1", "\"n\": 2"), "k"),
    ];
    for (text, name) in cases {
        let err = problem(&text).unwrap().to_instance().unwrap_err().to_string();
        assert!(err.contains(&format!("field `{name}`")), "{name}: {err}");
    }
}

#[test]
fn unknown_fields_are_rejected_with_a_path() {
    let text = VALID.replace("\"p\": 2", "\"p\": 2, \"q\": 3");
    let err = problem(&text).unwrap_err();
    assert!(err.contains("unknown field `q`"), "{err}");
}

#[test]
fn solution_round_trips_exactly() {
    let awkward = [0.1 + 0.2, 1.0 / 3.0, 5e-324, 1.7976931348623157e308, -2.2250738585072014e-308];
    let sol = SolutionFileV1 {
        format_version: 1,
        q: vec![vec![awkward[..2].to_vec(), awkward[..2].to_vec()]],
        sigma: vec![vec![awkward[2..4].to_vec(), awkward[3..].to_vec()]],
        dual: vec![],
        dual_objective: awkward[1],
        primal_objective: awkward[0],
        duality_gap: awkward[4],
        sweeps: 7,
        converged: false,
        max_order_violation: -0.0,
    };
    let back: SolutionFileV1 = parse_json(Path::new("s.json"), &to_json(&sol)).unwrap();
    assert_eq!(back, sol);
}

#[test]
fn pair_and_level_lists() {
    assert_eq!(parse_pairs("1,2; 3,1").unwrap().len(), 2);
    for bad in ["", ";", "1", "1,1", "0,2", "1,2,3", "a,b"] {
        assert!(parse_pairs(bad).is_err(), "{bad:?}");
    }
    assert_eq!(parse_levels("0.68, 0.95").unwrap(), vec![0.68, 0.95]);
    for bad in ["", "0", "1", "1.5", "nan", "x"] {
        assert!(parse_levels(bad).is_err(), "{bad:?}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn truncated_or_mutated_input_never_panics(cut in 0usize..VALID.len(), pos in 0usize..VALID.len(), byte in any::<u8>()) {
        let truncated = &VALID[..cut];
        if let Ok(p) = problem(truncated) {
            let _ = p.to_instance();
        }
        let mut bytes = VALID.as_bytes().to_vec();
        bytes[pos] = byte;
        if let Ok(text) = String::from_utf8(bytes) {
            if let Ok(p) = problem(&text) {
                let _ = p.to_instance();
            }
        }
    }

    #[test]
    fn arbitrary_numbers_never_panic(
        p in 0usize..4,
        n in 0usize..4,
        edges in proptest::collection::vec((0usize..6, 0usize..6), 0..6),
        k in proptest::collection::vec(0u32..4, 0..5),
        vals in proptest::collection::vec(-2.0f64..2.0, 0..40),
    ) {
        let mat = |off: usize| -> Vec<Vec<f64>> {
            (0..p).map(|r| (0..p).map(|c| vals.get(off + r * p + c).copied().unwrap_or(1.0)).collect()).collect()
        };
        let file = ProblemFileV1 {
            format_version: 1,
            p,
            n,
            edges: edges.iter().map(|&(a, b)| [a, b]).collect(),
            k: k.clone(),
            gamma: mat(0),
            s: (0..n).map(|i| mat(p * p * (i + 1))).collect(),
        };
        let _ = file.to_instance();
    }
}
