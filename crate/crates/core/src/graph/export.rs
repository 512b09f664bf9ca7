//! GraphML, GEXF and CSV writers and readers.
//!
//! Weights are written with 17 significant digits (`{:.16e}`), which
//! reproduces every `f64` exactly when read back.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use quick_xml::escape::escape;
use quick_xml::events::{BytesStart, Event};
use quick_xml::Reader;

use super::SimilarityGraph;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExportFormat {
    GraphMl,
    Gexf,
    /// `source,target,weight` edges plus a `<stem>.nodes.csv` node table
    /// when written to a file.
    EdgeCsv,
}

impl ExportFormat {
    pub fn extension(self) -> &'static str {
        match self {
            ExportFormat::GraphMl => "graphml",
            ExportFormat::Gexf => "gexf",
            ExportFormat::EdgeCsv => "csv",
        }
    }

    pub fn content_type(self) -> &'static str {
        match self {
            ExportFormat::GraphMl | ExportFormat::Gexf => "application/xml",
            ExportFormat::EdgeCsv => "text/csv",
        }
    }
}

impl FromStr for ExportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "graphml" => Ok(ExportFormat::GraphMl),
            "gexf" => Ok(ExportFormat::Gexf),
            "csv" | "edge-csv" => Ok(ExportFormat::EdgeCsv),
            other => Err(Error::UnknownFormat(other.to_string())),
        }
    }
}

fn num(x: f64) -> String {
    format!("{x:.16e}")
}

fn write_graphml(g: &SimilarityGraph) -> String {
    let mut out = String::new();
    out.push_str("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
    out.push_str(
        "<graphml xmlns=\"http://graphml.graphdrawing.org/xmlns\" \
         xmlns:xsi=\"http://www.w3.org/2001/XMLSchema-instance\" \
         xsi:schemaLocation=\"http://graphml.graphdrawing.org/xmlns \
         http://graphml.graphdrawing.org/xmlns/1.0/graphml.xsd\">\n",
    );
    out.push_str("  <key id=\"d0\" for=\"node\" attr.name=\"sku\" attr.type=\"string\"/>\n");
    out.push_str("  <key id=\"d1\" for=\"node\" attr.name=\"group\" attr.type=\"string\"/>\n");
    out.push_str(
        "  <key id=\"d2\" for=\"node\" attr.name=\"weighted_degree\" attr.type=\"double\"/>\n",
    );
    out.push_str("  <key id=\"d3\" for=\"edge\" attr.name=\"weight\" attr.type=\"double\"/>\n");
    out.push_str("  <graph id=\"G\" edgedefault=\"undirected\">\n");
    for n in g.node_records() {
        let id = escape(n.id.as_str());
        let _ = writeln!(
            out,
            "    <node id=\"{id}\"><data key=\"d0\">{id}</data><data key=\"d1\">{}</data><data key=\"d2\">{}</data></node>",
            escape(n.group.as_str()),
            num(n.weighted_degree)
        );
    }
    for (i, (a, b, w)) in g.edges().enumerate() {
        let _ = writeln!(
            out,
            "    <edge id=\"e{i}\" source=\"{}\" target=\"{}\"><data key=\"d3\">{}</data></edge>",
            escape(a),
            escape(b),
            num(w)
        );
    }
    out.push_str("  </graph>\n</graphml>\n");
    out
}

fn write_gexf(g: &SimilarityGraph) -> String {
    let mut out = String::new();
    out.push_str("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
    out.push_str(
        "<gexf xmlns=\"http://gexf.net/1.3\" \
         xmlns:xsi=\"http://www.w3.org/2001/XMLSchema-instance\" \
         xsi:schemaLocation=\"http://gexf.net/1.3 http://gexf.net/1.3/gexf.xsd\" version=\"1.3\">\n",
    );
    out.push_str("  <graph mode=\"static\" defaultedgetype=\"undirected\">\n");
    out.push_str("    <attributes class=\"node\">\n");
    out.push_str("      <attribute id=\"0\" title=\"sku\" type=\"string\"/>\n");
    out.push_str("      <attribute id=\"1\" title=\"group\" type=\"string\"/>\n");
    out.push_str("      <attribute id=\"2\" title=\"weighted_degree\" type=\"double\"/>\n");
    out.push_str("    </attributes>\n");
    out.push_str("    <nodes>\n");
    for n in g.node_records() {
        let id = escape(n.id.as_str());
        let _ = writeln!(
            out,
            "      <node id=\"{id}\" label=\"{id}\"><attvalues><attvalue for=\"0\" value=\"{id}\"/>\
             <attvalue for=\"1\" value=\"{}\"/><attvalue for=\"2\" value=\"{}\"/></attvalues></node>",
            escape(n.group.as_str()),
            num(n.weighted_degree)
        );
    }
    out.push_str("    </nodes>\n    <edges>\n");
    for (i, (a, b, w)) in g.edges().enumerate() {
        let _ = writeln!(
            out,
            "      <edge id=\"{i}\" source=\"{}\" target=\"{}\" weight=\"{}\"/>",
            escape(a),
            escape(b),
            num(w)
        );
    }
    out.push_str("    </edges>\n  </graph>\n</gexf>\n");
    out
}

fn write_edge_csv(g: &SimilarityGraph) -> Result<String> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    let csv_err = |e: csv::Error| Error::Malformed {
        format: "csv",
        message: e.to_string(),
    };
    w.write_record(["source", "target", "weight"])
        .map_err(csv_err)?;
    for (a, b, weight) in g.edges() {
        w.write_record([a, b, num(weight).as_str()])
            .map_err(csv_err)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Malformed {
        format: "csv",
        message: e.to_string(),
    })?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

fn write_node_csv(g: &SimilarityGraph) -> Result<String> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    let csv_err = |e: csv::Error| Error::Malformed {
        format: "csv",
        message: e.to_string(),
    };
    w.write_record(["id", "group", "weighted_degree"])
        .map_err(csv_err)?;
    for n in g.node_records() {
        w.write_record([
            n.id.as_str(),
            n.group.as_str(),
            num(n.weighted_degree).as_str(),
        ])
        .map_err(csv_err)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Malformed {
        format: "csv",
        message: e.to_string(),
    })?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

/// Serializes a graph. For CSV only the edge table is returned.
pub fn export_string(g: &SimilarityGraph, format: ExportFormat) -> Result<String> {
    match format {
        ExportFormat::GraphMl => Ok(write_graphml(g)),
        ExportFormat::Gexf => Ok(write_gexf(g)),
        ExportFormat::EdgeCsv => write_edge_csv(g),
    }
}

fn node_table_path(path: &Path) -> PathBuf {
    let stem = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "graph".into());
    path.with_file_name(format!("{stem}.nodes.csv"))
}

/// Writes the graph to `path`. CSV exports also write the node table
/// next to it as `<stem>.nodes.csv`.
pub fn export_graph(g: &SimilarityGraph, format: ExportFormat, path: &Path) -> Result<()> {
    let text = export_string(g, format)?;
    std::fs::write(path, text).map_err(|e| Error::io(path, e))?;
    if format == ExportFormat::EdgeCsv {
        let nodes_path = node_table_path(path);
        std::fs::write(&nodes_path, write_node_csv(g)?).map_err(|e| Error::io(&nodes_path, e))?;
    }
    Ok(())
}

fn malformed(format: &'static str, message: impl Into<String>) -> Error {
    Error::Malformed {
        format,
        message: message.into(),
    }
}

fn attr(e: &BytesStart, name: &str, format: &'static str) -> Result<Option<String>> {
    for a in e.attributes() {
        let a = a.map_err(|err| malformed(format, err.to_string()))?;
        if a.key.as_ref() == name.as_bytes() {
            let v = a
                .unescape_value()
                .map_err(|err| malformed(format, err.to_string()))?;
            return Ok(Some(v.into_owned()));
        }
    }
    Ok(None)
}

fn required(e: &BytesStart, name: &str, format: &'static str) -> Result<String> {
    attr(e, name, format)?.ok_or_else(|| {
        malformed(
            format,
            format!(
                "<{}> is missing attribute {name}",
                String::from_utf8_lossy(e.name().as_ref())
            ),
        )
    })
}

fn parse_weight(text: &str, format: &'static str) -> Result<f64> {
    text.trim()
        .parse()
        .map_err(|_| malformed(format, format!("bad number {text:?}")))
}

type Parts = (Vec<(String, String)>, Vec<(String, String, f64)>);

fn read_graphml(text: &str) -> Result<Parts> {
    const F: &str = "graphml";
    let mut reader = Reader::from_str(text);
    let mut keys: HashMap<String, String> = HashMap::new();
    let mut nodes = Vec::new();
    let mut edges = Vec::new();
    let mut node: Option<(String, String)> = None;
    let mut edge: Option<(String, String, Option<f64>)> = None;
    let mut data_key: Option<String> = None;
    let mut saw_root = false;
    loop {
        let event = reader
            .read_event()
            .map_err(|e| malformed(F, e.to_string()))?;
        match event {
            Event::Start(ref e) | Event::Empty(ref e) => {
                let self_closing = matches!(event, Event::Empty(_));
                match e.name().as_ref() {
                    b"graphml" => saw_root = true,
                    b"key" => {
                        keys.insert(required(e, "id", F)?, required(e, "attr.name", F)?);
                    }
                    b"node" => {
                        node = Some((required(e, "id", F)?, String::new()));
                        if self_closing {
                            nodes.push(node.take().expect("node set"));
                        }
                    }
                    b"edge" => {
                        edge = Some((required(e, "source", F)?, required(e, "target", F)?, None));
                        if self_closing {
                            return Err(malformed(F, "edge without weight"));
                        }
                    }
                    b"data" => data_key = Some(required(e, "key", F)?),
                    _ => {}
                }
            }
            Event::Text(t) => {
                if let Some(key) = &data_key {
                    let value = t.unescape().map_err(|e| malformed(F, e.to_string()))?;
                    match keys.get(key).map(String::as_str) {
                        Some("group") => {
                            if let Some(n) = node.as_mut() {
                                n.1 = value.into_owned();
                            }
                        }
                        Some("weight") => {
                            if let Some(ed) = edge.as_mut() {
                                ed.2 = Some(parse_weight(&value, F)?);
                            }
                        }
                        _ => {}
                    }
                }
            }
            Event::End(e) => match e.name().as_ref() {
                b"data" => data_key = None,
                b"node" => nodes.push(node.take().ok_or_else(|| malformed(F, "stray </node>"))?),
                b"edge" => {
                    let (a, b, w) = edge.take().ok_or_else(|| malformed(F, "stray </edge>"))?;
                    let w = w.ok_or_else(|| malformed(F, format!("edge {a}-{b} has no weight")))?;
                    edges.push((a, b, w));
                }
                _ => {}
            },
            Event::Eof => break,
            _ => {}
        }
    }
    if !saw_root {
        return Err(malformed(F, "missing <graphml> root"));
    }
    Ok((nodes, edges))
}

fn read_gexf(text: &str) -> Result<Parts> {
    const F: &str = "gexf";
    let mut reader = Reader::from_str(text);
    let mut attr_titles: HashMap<String, String> = HashMap::new();
    let mut nodes = Vec::new();
    let mut edges = Vec::new();
    let mut node: Option<(String, String)> = None;
    let mut saw_root = false;
    loop {
        let event = reader
            .read_event()
            .map_err(|e| malformed(F, e.to_string()))?;
        match event {
            Event::Start(ref e) | Event::Empty(ref e) => {
                let self_closing = matches!(event, Event::Empty(_));
                match e.name().as_ref() {
                    b"gexf" => saw_root = true,
                    b"attribute" => {
                        attr_titles.insert(required(e, "id", F)?, required(e, "title", F)?);
                    }
                    b"node" => {
                        node = Some((required(e, "id", F)?, String::new()));
                        if self_closing {
                            nodes.push(node.take().expect("node set"));
                        }
                    }
                    b"attvalue" => {
                        let key = required(e, "for", F)?;
                        if attr_titles.get(&key).map(String::as_str) == Some("group") {
                            if let Some(n) = node.as_mut() {
                                n.1 = required(e, "value", F)?;
                            }
                        }
                    }
                    b"edge" => {
                        let a = required(e, "source", F)?;
                        let b = required(e, "target", F)?;
                        let w = match attr(e, "weight", F)? {
                            Some(w) => parse_weight(&w, F)?,
                            None => {
                                return Err(malformed(F, format!("edge {a}-{b} has no weight")))
                            }
                        };
                        edges.push((a, b, w));
                    }
                    _ => {}
                }
            }
            Event::End(e) => {
                if e.name().as_ref() == b"node" {
                    nodes.push(node.take().ok_or_else(|| malformed(F, "stray </node>"))?);
                }
            }
            Event::Eof => break,
            _ => {}
        }
    }
    if !saw_root {
        return Err(malformed(F, "missing <gexf> root"));
    }
    Ok((nodes, edges))
}

fn read_edge_csv(edges_text: &str, nodes_text: Option<&str>) -> Result<Parts> {
    const F: &str = "csv";
    let csv_err = |e: csv::Error| malformed(F, e.to_string());
    let mut edges = Vec::new();
    let mut r = csv::Reader::from_reader(edges_text.as_bytes());
    let header = r.headers().map_err(csv_err)?.clone();
    if header.iter().collect::<Vec<_>>() != ["source", "target", "weight"] {
        return Err(malformed(F, "expected header source,target,weight"));
    }
    for rec in r.records() {
        let rec = rec.map_err(csv_err)?;
        edges.push((
            rec[0].to_string(),
            rec[1].to_string(),
            parse_weight(&rec[2], F)?,
        ));
    }
    let nodes = match nodes_text {
        Some(text) => {
            let mut r = csv::Reader::from_reader(text.as_bytes());
            let mut nodes = Vec::new();
            for rec in r.records() {
                let rec = rec.map_err(csv_err)?;
                if rec.len() < 2 {
                    return Err(malformed(F, "node row needs id and group"));
                }
                nodes.push((rec[0].to_string(), rec[1].to_string()));
            }
            nodes
        }
        None => {
            // no node table: endpoints become nodes with an empty group
            let mut ids: Vec<String> = edges
                .iter()
                .flat_map(|(a, b, _)| [a.clone(), b.clone()])
                .collect();
            ids.sort();
            ids.dedup();
            ids.into_iter().map(|id| (id, String::new())).collect()
        }
    };
    Ok((nodes, edges))
}

/// Parses exported text back into a graph. `nodes_csv` is the optional
/// node table for CSV.
pub fn read_graph(
    text: &str,
    format: ExportFormat,
    nodes_csv: Option<&str>,
) -> Result<SimilarityGraph> {
    let (nodes, edges) = match format {
        ExportFormat::GraphMl => read_graphml(text)?,
        ExportFormat::Gexf => read_gexf(text)?,
        ExportFormat::EdgeCsv => read_edge_csv(text, nodes_csv)?,
    };
    SimilarityGraph::from_parts(nodes, edges)
}

/// Reads a file written by [`export_graph`].
pub fn read_graph_file(path: &Path, format: ExportFormat) -> Result<SimilarityGraph> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let nodes = if format == ExportFormat::EdgeCsv {
        let p = node_table_path(path);
        if p.exists() {
            Some(std::fs::read_to_string(&p).map_err(|e| Error::io(&p, e))?)
        } else {
            None
        }
    } else {
        None
    };
    read_graph(&text, format, nodes.as_deref())
}
