//! On-disk instance bundles: a graph file plus a `key=value` sidecar.
//!
//! ```text
//! k=2
//! influencers=0,2
//! sender_groups=1,1,2,2
//! receiver_groups=1,1,1,2,2,0
//! kind=noiseless
//! seed=7
//! ```
//!
//! Group labels are 1-based; `0` marks a `G_0` receiver. Every other key is a
//! generator parameter and is carried through untouched.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use super::PlantedInstance;
use crate::error::{Error, Result};
use crate::graph::BipartiteGraph;

pub const GRAPH_FILE: &str = "graph.txt";
pub const META_FILE: &str = "meta.txt";

const RESERVED: [&str; 4] = ["k", "influencers", "sender_groups", "receiver_groups"];

fn list<T: ToString>(xs: impl Iterator<Item = T>) -> String {
    xs.map(|x| x.to_string()).collect::<Vec<_>>().join(",")
}

pub fn metadata_text(inst: &PlantedInstance) -> String {
    let mut out = String::new();
    writeln!(out, "k={}", inst.k).unwrap();
    writeln!(out, "influencers={}", list(inst.influencers.iter())).unwrap();
    writeln!(out, "sender_groups={}", list(inst.sender_group.iter().map(|l| l + 1))).unwrap();
    writeln!(
        out,
        "receiver_groups={}",
        list(inst.receiver_group.iter().map(|l| l.map_or(0, |l| l + 1)))
    )
    .unwrap();
    for (key, value) in &inst.params {
        writeln!(out, "{key}={value}").unwrap();
    }
    out
}

pub fn write_bundle(dir: &Path, inst: &PlantedInstance) -> Result<()> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join(GRAPH_FILE), inst.graph.to_text())?;
    fs::write(dir.join(META_FILE), metadata_text(inst))?;
    Ok(())
}

fn parse_list(line: usize, value: &str) -> Result<Vec<usize>> {
    if value.is_empty() {
        return Ok(Vec::new());
    }
    value
        .split(',')
        .map(|v| {
            v.trim().parse::<usize>().map_err(|_| Error::Parse {
                line,
                msg: format!("`{v}` is not a non-negative integer"),
            })
        })
        .collect()
}

pub fn parse_metadata(graph: BipartiteGraph, text: &str) -> Result<PlantedInstance> {
    let mut k = None;
    let mut influencers = None;
    let mut sender_labels = None;
    let mut receiver_labels = None;
    let mut params = BTreeMap::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let raw = raw.trim();
        if raw.is_empty() || raw.starts_with('#') {
            continue;
        }
        let (key, value) = raw.split_once('=').ok_or_else(|| Error::Parse {
            line,
            msg: format!("expected key=value, found `{raw}`"),
        })?;
        let (key, value) = (key.trim(), value.trim());
        match key {
            "k" => {
                k = Some(value.parse::<usize>().map_err(|_| Error::Parse {
                    line,
                    msg: format!("bad k `{value}`"),
                })?)
            }
            "influencers" => influencers = Some(parse_list(line, value)?),
            "sender_groups" => sender_labels = Some(parse_list(line, value)?),
            "receiver_groups" => receiver_labels = Some(parse_list(line, value)?),
            _ => {
                params.insert(key.to_string(), value.to_string());
            }
        }
    }
    let missing = |what: &str| Error::Parse { line: 0, msg: format!("metadata is missing `{what}`") };
    let k = k.ok_or_else(|| missing(RESERVED[0]))?;
    let influencers = influencers.ok_or_else(|| missing(RESERVED[1]))?;
    let sender_labels = sender_labels.ok_or_else(|| missing(RESERVED[2]))?;
    let receiver_labels = receiver_labels.ok_or_else(|| missing(RESERVED[3]))?;
    if sender_labels.contains(&0) {
        return Err(Error::InvalidArgument("sender group labels start at 1".into()));
    }
    let inst = PlantedInstance {
        graph,
        k,
        sender_group: sender_labels.into_iter().map(|l| l - 1).collect(),
        receiver_group: receiver_labels.into_iter().map(|l| l.checked_sub(1)).collect(),
        influencers,
        params,
    };
    inst.validate()?;
    Ok(inst)
}

pub fn read_bundle(dir: &Path) -> Result<PlantedInstance> {
    let graph = BipartiteGraph::from_text(&fs::read_to_string(dir.join(GRAPH_FILE))?)?;
    parse_metadata(graph, &fs::read_to_string(dir.join(META_FILE))?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators::{gen_deterministic_noisy, NoisySpec};

    #[test]
    fn bundle_round_trip() {
        let inst = gen_deterministic_noisy(&NoisySpec {
            n: vec![5, 6],
            r: vec![1, 2],
            g0_size: 3,
            theta: vec![0.6, 0.5],
            beta: vec![0.4, 0.4],
            z_cap: 1,
            seed: 2,
        })
        .unwrap();
        let dir = std::env::temp_dir().join(format!("infmax-bundle-{}", std::process::id()));
        write_bundle(&dir, &inst).unwrap();
        let back = read_bundle(&dir).unwrap();
        std::fs::remove_dir_all(&dir).ok();
        assert_eq!(back, inst);
    }

    #[test]
    fn metadata_errors() {
        let g = BipartiteGraph::new(2, 1, [(0, 0)]).unwrap();
        assert!(parse_metadata(g.clone(), "k=1\ninfluencers=0\n").is_err());
        assert!(parse_metadata(g.clone(), "k=1\ninfluencers=0\nsender_groups=1,1\nreceiver_groups=x\n").is_err());
        let ok = parse_metadata(g, "k=1\ninfluencers=0\nsender_groups=1,1\nreceiver_groups=1\nseed=3\n").unwrap();
        assert_eq!(ok.param("seed"), Some("3"));
    }
}
