//! JSON-lines event-stream files.
//!
//! Line 1 holds the start graph, every further line one event:
//!
//! ```text
//! {"type":"start","d":1,"nodes":[{"id":"a","attr":[1.0]}],"edges":[]}
//! {"type":"event","t":0.5,"item":"node","key":"b","kind":"add","attr":[2.0]}
//! {"type":"event","t":1.5,"item":"edge","key":["a","b"],"kind":"add","attr":[1.0]}
//! ```
//!
//! Floats are written in shortest round-trip form and parsed exactly.

use std::fs;
use std::io::{BufRead, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cdg::{
    ApplyError, Attr, Cdg, CdgError, EdgeKey, Event, EventKind, Item, NodeId, StartGraph, Timestamp,
};

#[derive(Debug, Error)]
pub enum FormatError {
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("line {line}: {source}")]
    Json {
        line: usize,
        #[source]
        source: serde_json::Error,
    },
    #[error("line {line}: {message}")]
    Malformed { line: usize, message: String },
    #[error("empty event stream: missing start line")]
    MissingStart,
    #[error(transparent)]
    Cdg(#[from] CdgError),
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
enum Line {
    Start(StartLine),
    Event(EventLine),
}

#[derive(Serialize, Deserialize)]
struct StartLine {
    d: usize,
    nodes: Vec<NodeEntry>,
    edges: Vec<EdgeEntry>,
}

#[derive(Serialize, Deserialize)]
struct NodeEntry {
    id: String,
    attr: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct EdgeEntry {
    u: String,
    v: String,
    attr: Vec<f64>,
}

#[derive(Serialize, Deserialize, PartialEq, Eq, Clone, Copy)]
#[serde(rename_all = "lowercase")]
enum ItemTag {
    Node,
    Edge,
}

#[derive(Serialize, Deserialize, PartialEq, Eq, Clone, Copy)]
#[serde(rename_all = "lowercase")]
enum KindTag {
    Add,
    Delete,
    Attr,
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum Key {
    Node(String),
    Edge([String; 2]),
}

#[derive(Serialize, Deserialize)]
struct EventLine {
    t: f64,
    item: ItemTag,
    key: Key,
    kind: KindTag,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    attr: Option<Vec<f64>>,
}

fn malformed(line: usize, message: impl Into<String>) -> FormatError {
    FormatError::Malformed {
        line,
        message: message.into(),
    }
}

fn apply_err(line: usize, e: ApplyError) -> FormatError {
    malformed(line, e.to_string())
}

fn parse_line(line_no: usize, text: &str) -> Result<Line, FormatError> {
    serde_json::from_str(text).map_err(|source| FormatError::Json {
        line: line_no,
        source,
    })
}

fn event_from_line(line_no: usize, ev: EventLine) -> Result<Event, FormatError> {
    let time = Timestamp::new(ev.t)?;
    let item = match (ev.item, ev.key) {
        (ItemTag::Node, Key::Node(id)) => Item::Node(NodeId::new(id)),
        (ItemTag::Edge, Key::Edge([u, v])) => {
            Item::Edge(EdgeKey::new(NodeId::new(u), NodeId::new(v))?)
        }
        (ItemTag::Node, Key::Edge(_)) => {
            return Err(malformed(line_no, "node event with pair key"))
        }
        (ItemTag::Edge, Key::Node(_)) => {
            return Err(malformed(line_no, "edge event with single key"))
        }
    };
    let kind = match (ev.kind, ev.attr) {
        (KindTag::Add, Some(a)) => EventKind::Add(Attr::new(a)?),
        (KindTag::Attr, Some(a)) => EventKind::AttrChange(Attr::new(a)?),
        (KindTag::Delete, None) => EventKind::Delete,
        (KindTag::Delete, Some(_)) => {
            return Err(malformed(line_no, "delete events carry no attribute"))
        }
        (_, None) => return Err(malformed(line_no, "missing attribute")),
    };
    Ok(Event::new(time, item, kind))
}

/// Reads a CDG from a JSON-lines stream. Blank lines are ignored.
pub fn read_cdg<R: BufRead>(reader: R) -> Result<Cdg, FormatError> {
    let mut start: Option<(usize, StartGraph)> = None;
    let mut events = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line_no = i + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        match (parse_line(line_no, &line)?, start.is_some()) {
            (Line::Start(s), false) => {
                let mut g = StartGraph::new();
                for n in s.nodes {
                    g.add_node(NodeId::new(n.id), Attr::new(n.attr)?)
                        .map_err(|e| apply_err(line_no, e))?;
                }
                for e in s.edges {
                    let key = EdgeKey::new(NodeId::new(e.u), NodeId::new(e.v))?;
                    g.add_edge(key, Attr::new(e.attr)?)
                        .map_err(|e| apply_err(line_no, e))?;
                }
                start = Some((s.d, g));
            }
            (Line::Start(_), true) => return Err(malformed(line_no, "duplicate start line")),
            (Line::Event(_), false) => return Err(malformed(line_no, "event before start line")),
            (Line::Event(ev), true) => events.push(event_from_line(line_no, ev)?),
        }
    }
    let (dim, start) = start.ok_or(FormatError::MissingStart)?;
    Ok(Cdg::new(dim, start, events)?)
}

pub fn parse_cdg(text: &str) -> Result<Cdg, FormatError> {
    read_cdg(text.as_bytes())
}

pub fn load_cdg(path: impl AsRef<Path>) -> Result<Cdg, FormatError> {
    let file = fs::File::open(path)?;
    read_cdg(std::io::BufReader::new(file))
}

fn event_line(e: &Event) -> EventLine {
    let (item, key) = match &e.item {
        Item::Node(v) => (ItemTag::Node, Key::Node(v.as_str().to_owned())),
        Item::Edge(k) => {
            let (u, v) = k.endpoints();
            (
                ItemTag::Edge,
                Key::Edge([u.as_str().to_owned(), v.as_str().to_owned()]),
            )
        }
    };
    let (kind, attr) = match &e.kind {
        EventKind::Add(a) => (KindTag::Add, Some(a.as_slice().to_vec())),
        EventKind::Delete => (KindTag::Delete, None),
        EventKind::AttrChange(a) => (KindTag::Attr, Some(a.as_slice().to_vec())),
    };
    EventLine {
        t: e.time.value(),
        item,
        key,
        kind,
        attr,
    }
}

pub fn write_cdg<W: Write>(cdg: &Cdg, mut out: W) -> Result<(), FormatError> {
    let start = StartLine {
        d: cdg.dim(),
        nodes: cdg
            .start()
            .nodes()
            .iter()
            .map(|(id, a)| NodeEntry {
                id: id.as_str().to_owned(),
                attr: a.as_slice().to_vec(),
            })
            .collect(),
        edges: cdg
            .start()
            .edges()
            .iter()
            .map(|(k, a)| {
                let (u, v) = k.endpoints();
                EdgeEntry {
                    u: u.as_str().to_owned(),
                    v: v.as_str().to_owned(),
                    attr: a.as_slice().to_vec(),
                }
            })
            .collect(),
    };
    serde_json::to_writer(&mut out, &Line::Start(start)).map_err(std::io::Error::from)?;
    out.write_all(b"\n")?;
    for e in cdg.events() {
        serde_json::to_writer(&mut out, &Line::Event(event_line(e)))
            .map_err(std::io::Error::from)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

pub fn to_jsonl(cdg: &Cdg) -> String {
    let mut buf = Vec::new();
    write_cdg(cdg, &mut buf).expect("writing to memory cannot fail");
    String::from_utf8(buf).expect("serde_json emits UTF-8")
}

pub fn save_cdg(cdg: &Cdg, path: impl AsRef<Path>) -> Result<(), FormatError> {
    let file = fs::File::create(path)?;
    let mut w = std::io::BufWriter::new(file);
    write_cdg(cdg, &mut w)?;
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = r#"{"type":"start","d":1,"nodes":[{"id":"a","attr":[1.0]},{"id":"b","attr":[0.1]}],"edges":[{"u":"b","v":"a","attr":[2.0]}]}
{"type":"event","t":0.5,"item":"node","key":"c","kind":"add","attr":[3.0]}
{"type":"event","t":1.25,"item":"edge","key":["c","a"],"kind":"add","attr":[1.0]}
{"type":"event","t":2.0,"item":"node","key":"b","kind":"delete"}
{"type":"event","t":3.0,"item":"edge","key":["a","c"],"kind":"attr","attr":[5.0]}
"#;

    #[test]
    fn parses_sample() {
        let g = parse_cdg(SAMPLE).unwrap();
        assert_eq!(g.dim(), 1);
        assert_eq!(g.timestamp_count(), 5);
        assert_eq!(g.universe().len(), 3);
        let last = g.replay_index(4).unwrap();
        assert_eq!(last.node_count(), 2);
        assert_eq!(last.edges().len(), 1);
    }

    #[test]
    fn writes_exact_field_names() {
        let g = parse_cdg(SAMPLE).unwrap();
        let text = to_jsonl(&g);
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(
            lines[0],
            r#"{"type":"start","d":1,"nodes":[{"id":"a","attr":[1.0]},{"id":"b","attr":[0.1]}],"edges":[{"u":"a","v":"b","attr":[2.0]}]}"#
        );
        assert_eq!(
            lines[3],
            r#"{"type":"event","t":2.0,"item":"node","key":"b","kind":"delete"}"#
        );
        assert_eq!(
            lines[4],
            r#"{"type":"event","t":3.0,"item":"edge","key":["a","c"],"kind":"attr","attr":[5.0]}"#
        );
        assert_eq!(parse_cdg(&text).unwrap(), g);
    }

    #[test]
    fn rejects_malformed_streams() {
        assert!(matches!(parse_cdg(""), Err(FormatError::MissingStart)));
        let ev_first =
            r#"{"type":"event","t":0.5,"item":"node","key":"c","kind":"add","attr":[3.0]}"#;
        assert!(matches!(
            parse_cdg(ev_first),
            Err(FormatError::Malformed { line: 1, .. })
        ));
        let del_attr = "{\"type\":\"start\",\"d\":1,\"nodes\":[],\"edges\":[]}\n{\"type\":\"event\",\"t\":1.0,\"item\":\"node\",\"key\":\"c\",\"kind\":\"delete\",\"attr\":[1.0]}";
        assert!(matches!(
            parse_cdg(del_attr),
            Err(FormatError::Malformed { line: 2, .. })
        ));
        let invalid = "{\"type\":\"start\",\"d\":1,\"nodes\":[],\"edges\":[]}\n{\"type\":\"event\",\"t\":1.0,\"item\":\"node\",\"key\":\"c\",\"kind\":\"delete\"}";
        assert!(matches!(
            parse_cdg(invalid),
            Err(FormatError::Cdg(CdgError::Invalid(_)))
        ));
    }

    #[test]
    fn awkward_floats_round_trip() {
        let text = "{\"type\":\"start\",\"d\":2,\"nodes\":[{\"id\":\"a\",\"attr\":[0.30000000000000004,-1e-300]}],\"edges\":[]}\n{\"type\":\"event\",\"t\":0.1234567890123456,\"item\":\"node\",\"key\":\"a\",\"kind\":\"attr\",\"attr\":[2.2250738585072014e-308,1.7976931348623157e308]}\n";
        let g = parse_cdg(text).unwrap();
        let back = parse_cdg(&to_jsonl(&g)).unwrap();
        assert_eq!(g, back);
        assert_eq!(
            back.events()[0].time.value().to_bits(),
            0.1234567890123456f64.to_bits()
        );
    }
}
