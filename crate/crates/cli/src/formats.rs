//! JSON wire formats for instances and solutions.
//!
//! Instance:
//!
//! ```json
//! {
//!   "name": "gen_00000000000000ff",
//!   "starts": [[0,0],[1,0]],
//!   "targets": [[4,2],[5,0]],
//!   "obstacles": [[2,1]],
//!   "meta": {"map": [20,20], "n_clusters": 0, "n_clustered_robots": 0}
//! }
//! ```
//!
//! `meta` is optional and only written by the generator. Solution:
//!
//! ```json
//! {"instance": "gen_00000000000000ff", "steps": [{"0": "E", "1": "E"}, {}]}
//! ```
//!
//! Each step maps a robot index (canonical decimal string) to one of `N`,
//! `S`, `E`, `W`; robots not listed wait. In strict mode unknown keys are
//! errors, in lenient mode they are reported as warnings.

use std::collections::BTreeMap;
use std::fmt::{self, Write as _};
use std::path::Path;

use gridmotion::generate::Provenance;
use gridmotion::{Direction, Instance, Pixel, Rect, Schedule, Step};
use serde::de::{MapAccess, Visitor};
use serde::{Deserialize, Deserializer};
use serde_json::Value;
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ParseMode {
    Strict,
    #[default]
    Lenient,
}

#[derive(Debug, Error)]
pub enum FormatError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("unknown key `{0}`")]
    UnknownKey(String),
    #[error("invalid instance: {0}")]
    Instance(#[from] gridmotion::ModelError),
    #[error("step {step}: {message}")]
    Step { step: usize, message: String },
    #[error("invalid meta block: {0}")]
    Meta(String),
}

/// A parsed value plus warnings collected in lenient mode.
#[derive(Debug, Clone, PartialEq)]
pub struct Parsed<T> {
    pub value: T,
    pub warnings: Vec<String>,
}

#[derive(Debug, Deserialize)]
struct RawInstance {
    name: String,
    starts: Vec<[i32; 2]>,
    targets: Vec<[i32; 2]>,
    obstacles: Vec<[i32; 2]>,
    #[serde(default)]
    meta: Option<RawMeta>,
    #[serde(flatten)]
    extra: BTreeMap<String, Value>,
}

#[derive(Debug, Deserialize)]
struct RawMeta {
    map: [u32; 2],
    n_clusters: u32,
    n_clustered_robots: u32,
    #[serde(flatten)]
    extra: BTreeMap<String, Value>,
}

#[derive(Debug, Deserialize)]
struct RawSolution {
    instance: String,
    steps: Vec<SparseStep>,
    #[serde(flatten)]
    extra: BTreeMap<String, Value>,
}

/// Step entries in document order; duplicates are kept so they can be
/// rejected later.
#[derive(Debug)]
struct SparseStep(Vec<(String, String)>);

impl<'de> Deserialize<'de> for SparseStep {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        struct V;
        impl<'de> Visitor<'de> for V {
            type Value = SparseStep;
            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("an object mapping robot indices to directions")
            }
            fn visit_map<A: MapAccess<'de>>(self, mut map: A) -> Result<SparseStep, A::Error> {
                let mut out = Vec::new();
                while let Some((k, v)) = map.next_entry::<String, String>()? {
                    out.push((k, v));
                }
                Ok(SparseStep(out))
            }
        }
        d.deserialize_map(V)
    }
}

fn check_extra(extra: &BTreeMap<String, Value>, prefix: &str, mode: ParseMode, warnings: &mut Vec<String>) -> Result<(), FormatError> {
    for key in extra.keys() {
        let key = format!("{prefix}{key}");
        match mode {
            ParseMode::Strict => return Err(FormatError::UnknownKey(key)),
            ParseMode::Lenient => {
                log::warn!("ignoring unknown key `{key}`");
                warnings.push(format!("ignored unknown key `{key}`"));
            }
        }
    }
    Ok(())
}

fn pixels(v: &[[i32; 2]]) -> Vec<Pixel> {
    v.iter().map(|&[x, y]| Pixel::new(x, y)).collect()
}

/// Instance plus the generator's bookkeeping when the file carries it.
#[derive(Debug, Clone, PartialEq)]
pub struct InstanceFile {
    pub instance: Instance,
    pub provenance: Option<Provenance>,
}

pub fn parse_instance(text: &str, mode: ParseMode) -> Result<Parsed<InstanceFile>, FormatError> {
    let raw: RawInstance = serde_json::from_str(text)?;
    let mut warnings = Vec::new();
    check_extra(&raw.extra, "", mode, &mut warnings)?;
    let provenance = match raw.meta {
        None => None,
        Some(m) => {
            check_extra(&m.extra, "meta.", mode, &mut warnings)?;
            if m.map[0] == 0 || m.map[1] == 0 {
                return Err(FormatError::Meta("map dimensions must be positive".into()));
            }
            Some(Provenance {
                map: Rect::with_size(m.map[0], m.map[1]),
                n_clusters: m.n_clusters,
                n_clustered_robots: m.n_clustered_robots,
                cluster_retries: 0,
                reseeds: 0,
            })
        }
    };
    let instance = Instance::new(raw.name, pixels(&raw.starts), pixels(&raw.targets), pixels(&raw.obstacles))?;
    if let Some(p) = &provenance {
        if p.n_clustered_robots as usize > instance.robot_count() {
            return Err(FormatError::Meta("more clustered robots than robots".into()));
        }
    }
    Ok(Parsed {
        value: InstanceFile { instance, provenance },
        warnings,
    })
}

/// Robot index keys must be canonical: no sign, no leading zeros.
fn robot_index(key: &str) -> Option<usize> {
    let canonical = key == "0" || (!key.is_empty() && !key.starts_with('0') && key.bytes().all(|b| b.is_ascii_digit()));
    canonical.then(|| key.parse().ok()).flatten()
}

/// Parses a solution for an instance with `robots` robots.
pub fn parse_solution(text: &str, robots: usize, mode: ParseMode) -> Result<Parsed<Schedule>, FormatError> {
    let raw: RawSolution = serde_json::from_str(text)?;
    let mut warnings = Vec::new();
    check_extra(&raw.extra, "", mode, &mut warnings)?;
    let mut steps = Vec::with_capacity(raw.steps.len());
    for (k, sparse) in raw.steps.into_iter().enumerate() {
        let bad = |message: String| FormatError::Step { step: k, message };
        let mut moves = vec![Direction::Wait; robots];
        let mut seen = vec![false; robots];
        for (key, letter) in sparse.0 {
            let r = robot_index(&key).ok_or_else(|| bad(format!("bad robot index `{key}`")))?;
            if r >= robots {
                return Err(bad(format!("robot {r} does not exist ({robots} robots)")));
            }
            if std::mem::replace(&mut seen[r], true) {
                return Err(bad(format!("robot {r} listed twice")));
            }
            let mut chars = letter.chars();
            let d = match (chars.next(), chars.next()) {
                (Some(c), None) => Direction::from_letter(c).filter(|d| !d.is_wait()),
                _ => None,
            }
            .ok_or_else(|| bad(format!("bad direction `{letter}`")))?;
            moves[r] = d;
        }
        steps.push(Step::new(moves));
    }
    Ok(Parsed {
        value: Schedule::new(raw.instance, steps),
        warnings,
    })
}

fn json_string(s: &str) -> String {
    serde_json::to_string(s).expect("strings serialize")
}

fn pixel_list(ps: impl IntoIterator<Item = Pixel>) -> String {
    let items: Vec<String> = ps.into_iter().map(|p| format!("[{},{}]", p.x, p.y)).collect();
    format!("[{}]", items.join(","))
}

pub fn emit_instance(instance: &Instance, provenance: Option<&Provenance>) -> String {
    let mut out = String::from("{\n");
    let _ = writeln!(out, "  \"name\": {},", json_string(instance.name()));
    let _ = writeln!(out, "  \"starts\": {},", pixel_list(instance.starts().iter().copied()));
    let _ = writeln!(out, "  \"targets\": {},", pixel_list(instance.targets().iter().copied()));
    let _ = write!(out, "  \"obstacles\": {}", pixel_list(instance.obstacles().iter().copied()));
    if let Some(p) = provenance {
        let _ = write!(
            out,
            ",\n  \"meta\": {{\"map\": [{},{}], \"n_clusters\": {}, \"n_clustered_robots\": {}}}",
            p.map.width(),
            p.map.height(),
            p.n_clusters,
            p.n_clustered_robots
        );
    }
    out.push_str("\n}\n");
    out
}

pub fn emit_solution(schedule: &Schedule) -> String {
    let mut out = String::from("{\n");
    let _ = writeln!(out, "  \"instance\": {},", json_string(&schedule.instance_name));
    out.push_str("  \"steps\": [");
    for (k, step) in schedule.steps.iter().enumerate() {
        out.push_str(if k == 0 { "\n    {" } else { ",\n    {" });
        let entries: Vec<String> = step
            .moves
            .iter()
            .enumerate()
            .filter(|(_, d)| !d.is_wait())
            .map(|(r, d)| format!("\"{r}\": \"{}\"", d.letter()))
            .collect();
        out.push_str(&entries.join(", "));
        out.push('}');
    }
    if !schedule.steps.is_empty() {
        out.push_str("\n  ");
    }
    out.push_str("]\n}\n");
    out
}

pub fn read_text(path: &Path) -> Result<String, FormatError> {
    std::fs::read_to_string(path).map_err(|source| FormatError::Io {
        path: path.display().to_string(),
        source,
    })
}

pub fn read_instance(path: &Path, mode: ParseMode) -> Result<Parsed<InstanceFile>, FormatError> {
    parse_instance(&read_text(path)?, mode)
}

pub fn read_solution(path: &Path, robots: usize, mode: ParseMode) -> Result<Parsed<Schedule>, FormatError> {
    parse_solution(&read_text(path)?, robots, mode)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const PAIR: &str = r#"{"name": "pair", "starts": [[0,0],[1,0]], "targets": [[4,2],[5,0]], "obstacles": [[2,1]]}"#;

    #[test]
    fn instance_round_trip() {
        let parsed = parse_instance(PAIR, ParseMode::Strict).unwrap().value;
        assert_eq!(parsed.instance.robot_count(), 2);
        assert!(parsed.provenance.is_none());
        let again = parse_instance(&emit_instance(&parsed.instance, None), ParseMode::Strict).unwrap().value;
        assert_eq!(again, parsed);
    }

    #[test]
    fn meta_round_trip() {
        let inst = parse_instance(PAIR, ParseMode::Strict).unwrap().value.instance;
        let prov = Provenance {
            map: Rect::with_size(6, 3),
            n_clusters: 1,
            n_clustered_robots: 2,
            cluster_retries: 0,
            reseeds: 0,
        };
        let text = emit_instance(&inst, Some(&prov));
        assert_eq!(parse_instance(&text, ParseMode::Strict).unwrap().value.provenance, Some(prov));
    }

    #[test]
    fn solution_round_trip_and_waits() {
        let text = r#"{"instance": "pair", "steps": [{"1": "E", "0": "E"}, {}, {"0": "N"}]}"#;
        let s = parse_solution(text, 2, ParseMode::Strict).unwrap().value;
        assert_eq!(s.steps.len(), 3);
        assert_eq!(s.steps[1].moves, vec![Direction::Wait; 2]);
        assert_eq!(s.steps[2].moves, vec![Direction::North, Direction::Wait]);
        let again = parse_solution(&emit_solution(&s), 2, ParseMode::Strict).unwrap().value;
        assert_eq!(again, s);
        assert_eq!(emit_solution(&Schedule::empty("x")), "{\n  \"instance\": \"x\",\n  \"steps\": []\n}\n");
    }

    #[test]
    fn unknown_keys_depend_on_mode() {
        let text = r#"{"name": "a", "starts": [[0,0]], "targets": [[1,0]], "obstacles": [], "colour": 3}"#;
        assert!(matches!(parse_instance(text, ParseMode::Strict), Err(FormatError::UnknownKey(k)) if k == "colour"));
        let lenient = parse_instance(text, ParseMode::Lenient).unwrap();
        assert_eq!(lenient.warnings.len(), 1);
    }

    #[test]
    fn solution_errors() {
        for (text, robots) in [
            (r#"{"instance": "a", "steps": [{"2": "E"}]}"#, 2),
            (r#"{"instance": "a", "steps": [{"01": "E"}]}"#, 2),
            (r#"{"instance": "a", "steps": [{"-1": "E"}]}"#, 2),
            (r#"{"instance": "a", "steps": [{"0": "X"}]}"#, 2),
            (r#"{"instance": "a", "steps": [{"0": "EE"}]}"#, 2),
            (r#"{"instance": "a", "steps": [{"0": "E", "0": "N"}]}"#, 2),
            (r#"{"instance": "a", "steps": [{"0": 1}]}"#, 2),
            (r#"{"instance": "a"}"#, 2),
            (r#"{"instance": "a", "steps": {}}"#, 2),
        ] {
            assert!(parse_solution(text, robots, ParseMode::Lenient).is_err(), "{text}");
        }
    }

    fn arb_instance() -> impl Strategy<Value = Instance> {
        (1usize..6, prop::collection::btree_set((-5i32..5, -5i32..5), 12..30)).prop_map(|(n, cells)| {
            let cells: Vec<Pixel> = cells.into_iter().map(|(x, y)| Pixel::new(x, y)).collect();
            let starts = cells[..n].to_vec();
            let targets = cells[n..2 * n].to_vec();
            let obstacles = cells[2 * n..].iter().copied().take(5);
            Instance::new("p \"quoted\"", starts, targets, obstacles).unwrap()
        })
    }

    proptest! {
        #[test]
        fn instance_emit_parse_is_identity(inst in arb_instance()) {
            let text = emit_instance(&inst, None);
            prop_assert_eq!(parse_instance(&text, ParseMode::Strict).unwrap().value.instance, inst);
        }

        #[test]
        fn solution_emit_parse_is_identity(
            n in 1usize..5,
            raw in prop::collection::vec(prop::collection::vec(0usize..5, 5), 0..8),
        ) {
            let steps = raw
                .into_iter()
                .map(|codes| Step::new(codes[..n].iter().map(|&c| Direction::ALL[c]).collect()))
                .collect();
            let s = Schedule::new("s", steps);
            let text = emit_solution(&s);
            prop_assert_eq!(parse_solution(&text, n, ParseMode::Strict).unwrap().value, s);
        }
    }
}
