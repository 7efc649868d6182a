//! Synthetic fixture corpora used by the bench harness and the tests.
//!
//! Every file is generated from a fixed seed, so the checked-in copies under
//! `fixtures/` can be regenerated byte for byte with
//! `cargo run -p nlpkit-cli --example gen_fixtures`.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Environment variable that overrides the fixture directory.
pub const FIXTURE_ENV: &str = "NLPKIT_FIXTURES";

pub const SEG_TRAIN: &str = "seg_train.seg";
pub const SEG_TEST: &str = "seg_test.seg";
pub const POS_TRAIN: &str = "pos_train.tag";
pub const POS_TEST: &str = "pos_test.tag";
pub const NER_TRAIN: &str = "ner_train.bio";
pub const NER_TEST: &str = "ner_test.bio";
pub const DOCS_TRAIN: &str = "docs_train.tsv";
pub const DOCS_TEST: &str = "docs_test.tsv";
pub const MT_CAND: &str = "mt_cand.txt";
pub const MT_REF: &str = "mt_ref.txt";

/// Resolution order: explicit path, then [`FIXTURE_ENV`], then the
/// directory shipped with this crate.
pub fn fixture_dir(explicit: Option<&Path>) -> PathBuf {
    if let Some(p) = explicit {
        return p.to_owned();
    }
    match std::env::var_os(FIXTURE_ENV) {
        Some(p) if !p.is_empty() => PathBuf::from(p),
        _ => default_fixture_dir(),
    }
}

pub fn default_fixture_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures")
}

/// All fixture files as (file name, contents).
pub fn generate() -> Vec<(&'static str, String)> {
    vec![
        (SEG_TRAIN, segmented(50, 11)),
        (SEG_TEST, segmented(20, 12)),
        (POS_TRAIN, pos(60, 21)),
        (POS_TEST, pos(20, 22)),
        (NER_TRAIN, ner(200, 31)),
        (NER_TEST, ner(50, 32)),
        (DOCS_TRAIN, docs(20, 41, "tr")),
        (DOCS_TEST, docs(10, 42, "te")),
        (MT_REF, mt(30, 51).0),
        (MT_CAND, mt(30, 51).1),
    ]
}

pub fn write_all(dir: &Path) -> std::io::Result<()> {
    std::fs::create_dir_all(dir)?;
    for (name, body) in generate() {
        crate::atomic_write(&dir.join(name), body.as_bytes())?;
    }
    Ok(())
}

fn pool(base: u32, n: u32) -> Vec<char> {
    (base..base + n)
        .map(|c| char::from_u32(c).expect("CJK code point"))
        .collect()
}

/// Sentences of CJK words. Each character is drawn from a pool reserved for
/// one word position (begin, middle, end or single), so its position tag is
/// fully determined by the character.
fn segmented(n: usize, seed: u64) -> String {
    let begin = pool(0x4E00, 12);
    let middle = pool(0x4E80, 6);
    let end = pool(0x4F00, 12);
    let single = pool(0x5000, 10);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = String::new();
    for _ in 0..n {
        let words: Vec<String> = (0..rng.gen_range(3..=7))
            .map(|_| {
                let pick = |p: &[char], r: &mut ChaCha8Rng| *p.choose(r).expect("non-empty pool");
                match rng.gen_range(0..3) {
                    0 => pick(&single, &mut rng).to_string(),
                    1 => [pick(&begin, &mut rng), pick(&end, &mut rng)].iter().collect(),
                    _ => [pick(&begin, &mut rng), pick(&middle, &mut rng), pick(&end, &mut rng)]
                        .iter()
                        .collect(),
                }
            })
            .collect();
        out.push_str(&words.join(" "));
        out.push('\n');
    }
    out
}

const DET: &[&str] = &["the", "a", "this", "every"];
const ADJ: &[&str] = &["old", "quiet", "red", "small", "busy", "bright"];
const NOUN: &[&str] = &["dog", "teacher", "river", "market", "letter", "garden", "walk", "train"];
const VERB: &[&str] = &["sees", "likes", "finds", "crosses", "opens", "walk"];
const ADP: &[&str] = &["near", "under", "behind", "with"];

fn pos(n: usize, seed: u64) -> String {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = String::new();
    for _ in 0..n {
        let mut rows: Vec<(&str, &str)> = Vec::new();
        let phrase = |rng: &mut ChaCha8Rng, rows: &mut Vec<(&str, &str)>| {
            rows.push((DET.choose(rng).expect("pool"), "DET"));
            if rng.gen_bool(0.5) {
                rows.push((ADJ.choose(rng).expect("pool"), "ADJ"));
            }
            rows.push((NOUN.choose(rng).expect("pool"), "NOUN"));
        };
        phrase(&mut rng, &mut rows);
        rows.push((VERB.choose(&mut rng).expect("pool"), "VERB"));
        phrase(&mut rng, &mut rows);
        if rng.gen_bool(0.4) {
            rows.push((ADP.choose(&mut rng).expect("pool"), "ADP"));
            phrase(&mut rng, &mut rows);
        }
        for (w, t) in rows {
            let _ = writeln!(out, "{w}\t{t}");
        }
        out.push('\n');
    }
    out
}

const PER_MARKERS: &[&str] = &["mr", "ms", "dr"];
const FIRST: &[&str] = &["anna", "boris", "chen", "dora", "emil", "fatima"];
const LAST: &[&str] = &[
    "smith",
    "okafor",
    "lindqvist",
    "tanaka",
    "moreau",
    "kowalski",
    "haddad",
    "silva",
    "novak",
    "ibarra",
];
const LOC_MARKERS: &[&str] = &["in", "from"];
const CITY: &[&str] = &["paris", "lagos", "osaka", "lima", "oslo", "cairo", "quito", "hanoi"];
const CITY_TAIL: &[&str] = &["city", "port"];
const ORG_MARKERS: &[&str] = &["at", "for"];
const ORG: &[&str] = &["acme", "globex", "initech", "umbrella", "vandelay", "hooli"];
const ORG_TAIL: &[&str] = &["corp", "labs"];
const FILLER: &[&str] = &[
    "yesterday",
    "the",
    "report",
    "said",
    "met",
    "visited",
    "works",
    "today",
    "a",
    "meeting",
    "was",
    "held",
    "news",
    "later",
    "announced",
    "plans",
    "we",
    "heard",
    "that",
];

fn ner(n: usize, seed: u64) -> String {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = String::new();
    for _ in 0..n {
        let mut rows: Vec<(String, String)> = Vec::new();
        let filler = |rng: &mut ChaCha8Rng, rows: &mut Vec<(String, String)>, k: usize| {
            for _ in 0..k {
                rows.push((FILLER.choose(rng).expect("pool").to_string(), "O".into()));
            }
        };
        let entities = rng.gen_range(1..=2);
        for _ in 0..entities {
            let k = rng.gen_range(0..=3);
            filler(&mut rng, &mut rows, k);
            let pick = |p: &[&str], rng: &mut ChaCha8Rng| p.choose(rng).expect("pool").to_string();
            let (marker, ty, head, tail) = match rng.gen_range(0..3) {
                0 => {
                    let first = rng.gen_bool(0.4).then(|| pick(FIRST, &mut rng));
                    let last = pick(LAST, &mut rng);
                    let (head, tail) = match first {
                        Some(f) => (f, Some(last)),
                        None => (last, None),
                    };
                    (pick(PER_MARKERS, &mut rng), "PER", head, tail)
                }
                1 => {
                    let head = pick(CITY, &mut rng);
                    let tail = rng.gen_bool(0.3).then(|| pick(CITY_TAIL, &mut rng));
                    (pick(LOC_MARKERS, &mut rng), "LOC", head, tail)
                }
                _ => {
                    let head = pick(ORG, &mut rng);
                    let tail = rng.gen_bool(0.5).then(|| pick(ORG_TAIL, &mut rng));
                    (pick(ORG_MARKERS, &mut rng), "ORG", head, tail)
                }
            };
            rows.push((marker, "O".into()));
            rows.push((head, format!("B-{ty}")));
            if let Some(t) = tail {
                rows.push((t, format!("I-{ty}")));
            }
        }
        let k = rng.gen_range(0..=2);
        filler(&mut rng, &mut rows, k);
        for (w, t) in rows {
            let _ = writeln!(out, "{w}\t{t}");
        }
        out.push('\n');
    }
    out
}

const TOPICS: &[(&str, &[&str])] = &[
    (
        "finance",
        &[
            "bank", "shares", "market", "interest", "rates", "investor", "bond", "profit", "loan", "stock", "fund",
            "tax",
        ],
    ),
    (
        "science",
        &[
            "atom",
            "cell",
            "energy",
            "theory",
            "laboratory",
            "experiment",
            "molecule",
            "physics",
            "gene",
            "data",
            "orbit",
            "enzyme",
        ],
    ),
    (
        "sport",
        &[
            "goal", "match", "striker", "league", "referee", "season", "coach", "team", "score", "stadium", "tennis",
            "cup",
        ],
    ),
    (
        "travel",
        &[
            "flight", "hotel", "beach", "passport", "museum", "island", "luggage", "tour", "train", "ticket", "guide",
            "resort",
        ],
    ),
];
const COMMON: &[&str] = &[
    "the", "a", "new", "this", "week", "report", "people", "said", "more", "about", "after",
];

fn docs(per_topic: usize, seed: u64, prefix: &str) -> String {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = String::new();
    let mut id = 0;
    for _ in 0..per_topic {
        for (label, words) in TOPICS {
            id += 1;
            let len = rng.gen_range(8..=15);
            let tokens: Vec<&str> = (0..len)
                .map(|_| {
                    let p = if rng.gen_bool(0.6) { *words } else { COMMON };
                    *p.choose(&mut rng).expect("pool")
                })
                .collect();
            let _ = writeln!(out, "{prefix}{id:04}\t{label}\t{}", tokens.join(" "));
        }
    }
    out
}

const MT_WORDS: &[&str] = &[
    "the", "cat", "sat", "on", "mat", "a", "dog", "ran", "in", "park", "children", "play", "near", "river", "old",
    "man", "reads", "book", "every", "morning",
];

/// Reference lines and candidate lines derived from them by small edits.
fn mt(n: usize, seed: u64) -> (String, String) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut refs, mut cands) = (String::new(), String::new());
    for _ in 0..n {
        let len = rng.gen_range(6..=12);
        let reference: Vec<&str> = (0..len).map(|_| *MT_WORDS.choose(&mut rng).expect("pool")).collect();
        let mut cand = reference.clone();
        for _ in 0..rng.gen_range(0..=2) {
            let i = rng.gen_range(0..cand.len());
            match rng.gen_range(0..3) {
                0 if cand.len() > 2 => {
                    cand.remove(i);
                }
                1 => cand[i] = MT_WORDS.choose(&mut rng).expect("pool"),
                _ => {
                    let j = rng.gen_range(0..cand.len());
                    cand.swap(i, j);
                }
            }
        }
        refs.push_str(&reference.join(" "));
        refs.push('\n');
        cands.push_str(&cand.join(" "));
        cands.push('\n');
    }
    (refs, cands)
}

#[cfg(test)]
mod tests {
    use super::*;
    use nlpkit::corpus::{encode_bmes, parse_labeled, parse_segmented, parse_tagged, TagScheme};
    use std::collections::HashMap;

    #[test]
    fn generation_is_deterministic() {
        assert_eq!(generate(), generate());
    }

    #[test]
    fn fixtures_parse() {
        let files: HashMap<_, _> = generate().into_iter().collect();
        assert_eq!(parse_segmented(&files[SEG_TRAIN]).unwrap().len(), 50);
        assert_eq!(parse_tagged(&files[NER_TRAIN], None).unwrap().len(), 200);
        let ner = parse_tagged(&files[NER_TRAIN], None).unwrap();
        let scheme = TagScheme::bio_from_corpus(&ner);
        assert_eq!(scheme.entity_types(), ["LOC", "ORG", "PER"]);
        assert_eq!(parse_tagged(&files[POS_TRAIN], None).unwrap().len(), 60);
        assert_eq!(parse_labeled(&files[DOCS_TRAIN], false).unwrap().len(), 80);
        assert_eq!(files[MT_REF].lines().count(), files[MT_CAND].lines().count());
    }

    #[test]
    fn segmentation_characters_have_one_position() {
        let files: HashMap<_, _> = generate().into_iter().collect();
        let mut seen: HashMap<String, String> = HashMap::new();
        for s in parse_segmented(&files[SEG_TRAIN]).unwrap() {
            let t = encode_bmes(&s).unwrap();
            for (u, l) in t.units.iter().zip(&t.labels) {
                assert_eq!(seen.entry(u.clone()).or_insert_with(|| l.clone()), l);
            }
        }
    }

    #[test]
    fn checked_in_files_match_generator() {
        let dir = default_fixture_dir();
        for (name, text) in generate() {
            let on_disk = std::fs::read_to_string(dir.join(name)).unwrap();
            assert!(
                on_disk == text,
                "{name} is stale; run `cargo run -p nlpkit-cli --example gen_fixtures`"
            );
        }
    }

    #[test]
    fn env_override_and_explicit_path() {
        let p = Path::new("/tmp/somewhere");
        assert_eq!(fixture_dir(Some(p)), p);
    }
}
