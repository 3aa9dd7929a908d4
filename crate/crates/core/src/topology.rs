//! GraphML ingestion (Topology Zoo conventions), the policy encoding of a
//! topology, destination-based shortest-path switch policies, and benchmark
//! endpoint selection.
//!
//! Nodes are switches unless a `host` data key marks them as hosts. Each
//! undirected edge becomes two directed links sharing an interface port at
//! either end; a directed edge is one link with its own two ports. Ports
//! are taken from `srcport`/`dstport` edge data when present, otherwise
//! assigned deterministically: host attachments first in sorted host order,
//! then directed switch pairs in sorted order, numbering from 1.

use std::collections::{BTreeMap, BTreeSet};

use quick_xml::events::Event;
use quick_xml::Reader;

use crate::error::{Error, Result};
use crate::parser::SafetyProblem;
use crate::terms::{DomainMap, FieldId, Policy, Predicate, Value};

/// A node identifier, shared with the `sw`/`dst` value space.
pub type NodeId = Value;

/// A host attached to a switch through the switch-side port.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HostLink {
    pub host: NodeId,
    pub switch: NodeId,
    pub port: u32,
}

/// One directed forwarding link.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Link {
    pub src: NodeId,
    pub dst: NodeId,
    /// Egress port on `src`.
    pub src_port: u32,
    /// Ingress port on `dst`.
    pub dst_port: u32,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct TopologyGraph {
    pub switches: BTreeSet<NodeId>,
    pub hosts: Vec<HostLink>,
    pub links: Vec<Link>,
}

impl TopologyGraph {
    /// Forwarding links: directed internal links plus host-facing ports.
    /// This is the default unfolding bound for the encoded topology.
    pub fn forwarding_link_count(&self) -> u32 {
        (self.links.len() + self.hosts.len()) as u32
    }

    /// Egress port of `node` toward `neighbor`, if directly linked.
    pub fn port_of(&self, node: NodeId, neighbor: NodeId) -> Option<u32> {
        self.links
            .iter()
            .find(|l| l.src == node && l.dst == neighbor)
            .map(|l| l.src_port)
    }

    /// Every port number in use, sorted.
    pub fn ports(&self) -> Vec<u32> {
        let mut ports: BTreeSet<u32> = BTreeSet::new();
        for link in &self.links {
            ports.insert(link.src_port);
            ports.insert(link.dst_port);
        }
        for host in &self.hosts {
            ports.insert(host.port);
        }
        ports.into_iter().collect()
    }

    /// Directed BFS distances from every switch to `target`.
    fn distances_to(&self, target: NodeId) -> BTreeMap<NodeId, u32> {
        let mut incoming: BTreeMap<NodeId, Vec<NodeId>> = BTreeMap::new();
        for link in &self.links {
            incoming.entry(link.dst).or_default().push(link.src);
        }
        let mut dist = BTreeMap::from([(target, 0u32)]);
        let mut frontier = vec![target];
        while let Some(node) = frontier.pop() {
            let d = dist[&node];
            for src in incoming.get(&node).cloned().unwrap_or_default() {
                dist.entry(src).or_insert_with(|| {
                    frontier.push(src);
                    d + 1
                });
            }
        }
        dist
    }
}

fn sanitize(id: &str) -> Value {
    let cleaned: String = id
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '_' { c } else { '_' })
        .collect();
    Value::new(if cleaned.is_empty() { "_" } else { &cleaned })
}

#[derive(Default)]
struct RawEdge {
    source: String,
    target: String,
    directed: bool,
    srcport: Option<u32>,
    dstport: Option<u32>,
}

/// Parses GraphML into a [`TopologyGraph`]. Disconnected graphs are fine
/// (reachability may legitimately fail); malformed XML is not.
pub fn load_graphml(text: &str) -> Result<TopologyGraph> {
    let mut reader = Reader::from_str(text);
    reader.config_mut().trim_text(true);

    let bad = |msg: String| Error::GraphParse(msg);

    // key id -> attr.name, for the attributes this loader understands.
    let mut key_names: BTreeMap<String, String> = BTreeMap::new();
    let mut nodes: Vec<(String, bool)> = Vec::new();
    let mut edges: Vec<RawEdge> = Vec::new();
    let mut edgedefault_directed = false;

    enum Ctx {
        None,
        Node { idx: usize },
        Edge { idx: usize },
    }
    let mut ctx = Ctx::None;
    let mut data_key: Option<String> = None;
    let mut data_text = String::new();

    let attr_map = |e: &quick_xml::events::BytesStart| -> Result<BTreeMap<String, String>> {
        let mut map = BTreeMap::new();
        for attr in e.attributes() {
            let attr = attr.map_err(|e| Error::GraphParse(e.to_string()))?;
            let key = String::from_utf8_lossy(attr.key.as_ref()).into_owned();
            let value = attr
                .unescape_value()
                .map_err(|e| Error::GraphParse(e.to_string()))?
                .into_owned();
            map.insert(key, value);
        }
        Ok(map)
    };

    loop {
        let event = reader.read_event().map_err(|e| Error::GraphParse(e.to_string()))?;
        match &event {
            Event::Start(e) | Event::Empty(e) => {
                let name = e.local_name();
                let attrs = attr_map(e)?;
                match name.as_ref() {
                    b"key" => {
                        if let (Some(id), Some(attr_name)) =
                            (attrs.get("id"), attrs.get("attr.name"))
                        {
                            key_names.insert(id.clone(), attr_name.clone());
                        }
                    }
                    b"graph" => {
                        edgedefault_directed =
                            attrs.get("edgedefault").map(String::as_str) == Some("directed");
                    }
                    b"node" => {
                        let id = attrs
                            .get("id")
                            .ok_or_else(|| bad("node without id".into()))?
                            .clone();
                        if nodes.iter().any(|(n, _)| *n == id) {
                            return Err(bad(format!("duplicate node id `{id}`")));
                        }
                        nodes.push((id, false));
                        if matches!(event, Event::Start(_)) {
                            ctx = Ctx::Node { idx: nodes.len() - 1 };
                        }
                    }
                    b"edge" => {
                        let source = attrs
                            .get("source")
                            .ok_or_else(|| bad("edge without source".into()))?
                            .clone();
                        let target = attrs
                            .get("target")
                            .ok_or_else(|| bad("edge without target".into()))?
                            .clone();
                        let directed = match attrs.get("directed").map(String::as_str) {
                            Some("true") => true,
                            Some("false") => false,
                            _ => edgedefault_directed,
                        };
                        edges.push(RawEdge { source, target, directed, ..RawEdge::default() });
                        if matches!(event, Event::Start(_)) {
                            ctx = Ctx::Edge { idx: edges.len() - 1 };
                        }
                    }
                    b"data" => {
                        if matches!(event, Event::Start(_)) {
                            data_key = attrs.get("key").cloned();
                            data_text.clear();
                        }
                    }
                    _ => {}
                }
            }
            Event::Text(t) => {
                if data_key.is_some() {
                    data_text
                        .push_str(&t.unescape().map_err(|e| Error::GraphParse(e.to_string()))?);
                }
            }
            Event::End(e) => match e.local_name().as_ref() {
                b"data" => {
                    if let Some(key) = data_key.take() {
                        let attr_name = key_names.get(&key).cloned().unwrap_or(key);
                        let text = data_text.trim();
                        match (&ctx, attr_name.as_str()) {
                            (Ctx::Node { idx }, "host") => {
                                nodes[*idx].1 = matches!(text, "true" | "1" | "yes");
                            }
                            (Ctx::Edge { idx }, "srcport") => {
                                edges[*idx].srcport = Some(parse_port(text)?);
                            }
                            (Ctx::Edge { idx }, "dstport") => {
                                edges[*idx].dstport = Some(parse_port(text)?);
                            }
                            _ => {}
                        }
                    }
                }
                b"node" | b"edge" => ctx = Ctx::None,
                _ => {}
            },
            Event::Eof => break,
            _ => {}
        }
    }

    build_graph(nodes, edges)
}

fn parse_port(text: &str) -> Result<u32> {
    text.parse()
        .map_err(|_| Error::GraphParse(format!("port `{text}` is not a natural number")))
}

fn build_graph(nodes: Vec<(String, bool)>, edges: Vec<RawEdge>) -> Result<TopologyGraph> {
    let mut host_ids: BTreeSet<Value> = BTreeSet::new();
    let mut switches: BTreeSet<Value> = BTreeSet::new();
    for (id, is_host) in &nodes {
        let id = sanitize(id);
        if *is_host {
            host_ids.insert(id);
        } else {
            switches.insert(id);
        }
    }

    struct HostEdge {
        host: Value,
        switch: Value,
        port: Option<u32>,
    }
    struct SwitchEdge {
        src: Value,
        dst: Value,
        directed: bool,
        srcport: Option<u32>,
        dstport: Option<u32>,
    }

    let mut host_edges: Vec<HostEdge> = Vec::new();
    let mut switch_edges: Vec<SwitchEdge> = Vec::new();
    let mut any_explicit = false;

    for edge in &edges {
        let src = sanitize(&edge.source);
        let dst = sanitize(&edge.target);
        let known = |v: &Value| switches.contains(v) || host_ids.contains(v);
        if !known(&src) || !known(&dst) {
            return Err(Error::GraphParse(format!(
                "edge {} -- {} references an undeclared node",
                edge.source, edge.target
            )));
        }
        if src == dst {
            continue; // self-loops carry no forwarding behaviour
        }
        any_explicit |= edge.srcport.is_some() || edge.dstport.is_some();
        match (host_ids.contains(&src), host_ids.contains(&dst)) {
            (true, true) => {
                return Err(Error::GraphParse(format!(
                    "edge {src} -- {dst} connects two hosts"
                )));
            }
            (true, false) => {
                host_edges.push(HostEdge { host: src, switch: dst, port: edge.dstport });
            }
            (false, true) => {
                host_edges.push(HostEdge { host: dst, switch: src, port: edge.srcport });
            }
            (false, false) => switch_edges.push(SwitchEdge {
                src,
                dst,
                directed: edge.directed,
                srcport: edge.srcport,
                dstport: edge.dstport,
            }),
        }
    }

    let mut graph = TopologyGraph { switches, ..TopologyGraph::default() };

    if any_explicit {
        // Explicit mode: every edge must pin its ports.
        for he in &host_edges {
            let port = he.port.ok_or_else(|| {
                Error::GraphParse(format!(
                    "host edge {} -- {} lacks a switch-side port",
                    he.host, he.switch
                ))
            })?;
            graph.hosts.push(HostLink { host: he.host, switch: he.switch, port });
        }
        for se in &switch_edges {
            let (sp, dp) = match (se.srcport, se.dstport) {
                (Some(sp), Some(dp)) => (sp, dp),
                _ => {
                    return Err(Error::GraphParse(format!(
                        "edge {} -- {} lacks srcport/dstport",
                        se.src, se.dst
                    )));
                }
            };
            graph.links.push(Link { src: se.src, dst: se.dst, src_port: sp, dst_port: dp });
            if !se.directed {
                graph.links.push(Link { src: se.dst, dst: se.src, src_port: dp, dst_port: sp });
            }
        }
    } else {
        let mut next_port = 1u32;
        host_edges.sort_by_key(|he| (he.host, he.switch));
        for he in host_edges {
            graph.hosts.push(HostLink { host: he.host, switch: he.switch, port: next_port });
            next_port += 1;
        }
        // Undirected edges become interface ports shared by both directions;
        // duplicate parallel edges collapse.
        let mut pairs: BTreeSet<(Value, Value)> = BTreeSet::new();
        let mut directed_edges: BTreeSet<(Value, Value)> = BTreeSet::new();
        for se in switch_edges {
            if se.directed {
                directed_edges.insert((se.src, se.dst));
            } else {
                pairs.insert((se.src.min(se.dst), se.src.max(se.dst)));
            }
        }
        let mut port_at: BTreeMap<(Value, Value), u32> = BTreeMap::new();
        let mut directed_pairs: Vec<(Value, Value)> = pairs
            .iter()
            .flat_map(|(u, v)| [(*u, *v), (*v, *u)])
            .collect();
        directed_pairs.sort();
        for pair in directed_pairs {
            port_at.insert(pair, next_port);
            next_port += 1;
        }
        for (u, v) in pairs {
            graph.links.push(Link {
                src: u,
                dst: v,
                src_port: port_at[&(u, v)],
                dst_port: port_at[&(v, u)],
            });
            graph.links.push(Link {
                src: v,
                dst: u,
                src_port: port_at[&(v, u)],
                dst_port: port_at[&(u, v)],
            });
        }
        for (src, dst) in directed_edges {
            graph.links.push(Link { src, dst, src_port: next_port, dst_port: next_port + 1 });
            next_port += 2;
        }
    }

    graph.links.sort_by_key(|l| (l.src, l.dst, l.src_port));
    graph.hosts.sort_by_key(|h| (h.host, h.switch, h.port));

    // Ports must be unique per node.
    let mut used: BTreeSet<(Value, u32)> = BTreeSet::new();
    let mut claim = |node: Value, port: u32| -> Result<()> {
        if used.insert((node, port)) {
            Ok(())
        } else {
            Err(Error::GraphParse(format!("port {port} reused on node {node}")))
        }
    };
    let links = graph.links.clone();
    for link in &links {
        claim(link.src, link.src_port)?;
        claim(link.dst, link.dst_port)?;
    }
    let hosts = graph.hosts.clone();
    for host in &hosts {
        claim(host.switch, host.port)?;
    }

    Ok(graph)
}

/// Which guards the topology encoding uses.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TopologyEncoding {
    /// `pt=a . pt<-b` per link plus `pt=k` perimeter filters; valid when
    /// ports are globally unique (small example networks).
    PortOnly,
    /// `sw=A . pt=a . sw<-B . pt<-b` per link plus `sw=A . pt=k` perimeter
    /// filters.
    SwitchPort,
}

/// The NetKAT encoding of a topology: one summand per directed link plus a
/// perimeter filter per host-facing port. The empty graph encodes to `0`.
pub fn encode_topology(graph: &TopologyGraph, mode: TopologyEncoding) -> Policy {
    let pt = FieldId::new("pt");
    let sw = FieldId::new("sw");
    let mut summands = Vec::new();
    for link in &graph.links {
        let hop = Policy::seq(
            Policy::test(pt, Value::from(link.src_port)),
            Policy::modify(pt, Value::from(link.dst_port)),
        );
        summands.push(match mode {
            TopologyEncoding::PortOnly => hop,
            TopologyEncoding::SwitchPort => Policy::seq_all([
                Policy::test(sw, link.src),
                Policy::test(pt, Value::from(link.src_port)),
                Policy::modify(sw, link.dst),
                Policy::modify(pt, Value::from(link.dst_port)),
            ]),
        });
    }
    for host in &graph.hosts {
        let filter = Policy::test(pt, Value::from(host.port));
        summands.push(match mode {
            TopologyEncoding::PortOnly => filter,
            TopologyEncoding::SwitchPort => {
                Policy::seq(Policy::test(sw, host.switch), filter)
            }
        });
    }
    Policy::union(summands)
}

/// Destination-based shortest-path forwarding: for every ordered switch
/// pair `(S, D)` with a route, one summand `sw=S . dst=D . pt<-p` where `p`
/// leads to the BFS next hop toward `D` (ties broken by smallest neighbor).
pub fn gen_shortest_path_policy(graph: &TopologyGraph) -> Policy {
    let sw = FieldId::new("sw");
    let dst = FieldId::new("dst");
    let pt = FieldId::new("pt");
    let mut summands = Vec::new();
    for target in &graph.switches {
        let dist = graph.distances_to(*target);
        for source in &graph.switches {
            if source == target {
                continue;
            }
            let Some(d) = dist.get(source) else { continue };
            let next_hop = graph
                .links
                .iter()
                .filter(|l| l.src == *source)
                .filter(|l| dist.get(&l.dst) == Some(&(d - 1)))
                .map(|l| (l.dst, l.src_port))
                .min();
            if let Some((_, port)) = next_hop {
                summands.push(Policy::seq_all([
                    Policy::test(sw, *source),
                    Policy::test(dst, *target),
                    Policy::modify(pt, Value::from(port)),
                ]));
            }
        }
    }
    Policy::union(summands)
}

/// Endpoints of a diameter path: the pair of switches at maximal BFS
/// distance, within the largest connected component; ties resolved to the
/// lexicographically smallest `(src, dst)`.
pub fn longest_path_endpoints(graph: &TopologyGraph) -> Result<(NodeId, NodeId)> {
    if graph.switches.is_empty() {
        return Err(Error::EmptyGraph);
    }
    let component = largest_component(graph);
    let mut best: Option<(u32, (NodeId, NodeId))> = None;
    for target in &component {
        let dist = graph.distances_to(*target);
        for source in &component {
            let Some(d) = dist.get(source) else { continue };
            let candidate = (*d, (*source, *target));
            best = Some(match best {
                None => candidate,
                Some(current) => {
                    // Longest distance wins; ties take the smaller pair.
                    if candidate.0 > current.0
                        || (candidate.0 == current.0 && candidate.1 < current.1)
                    {
                        candidate
                    } else {
                        current
                    }
                }
            });
        }
    }
    Ok(best.expect("component is non-empty").1)
}

fn largest_component(graph: &TopologyGraph) -> BTreeSet<NodeId> {
    let mut adjacency: BTreeMap<NodeId, BTreeSet<NodeId>> = BTreeMap::new();
    for link in &graph.links {
        adjacency.entry(link.src).or_default().insert(link.dst);
        adjacency.entry(link.dst).or_default().insert(link.src);
    }
    let mut seen: BTreeSet<NodeId> = BTreeSet::new();
    let mut best: BTreeSet<NodeId> = BTreeSet::new();
    for start in &graph.switches {
        if !seen.insert(*start) {
            continue;
        }
        let mut component = BTreeSet::from([*start]);
        let mut frontier = vec![*start];
        while let Some(node) = frontier.pop() {
            for next in adjacency.get(&node).cloned().unwrap_or_default() {
                if component.insert(next) {
                    seen.insert(next);
                    frontier.push(next);
                }
            }
        }
        // Larger component wins; ties keep the earlier (smaller start).
        if component.len() > best.len() {
            best = component;
        }
    }
    best
}

/// Builds a runnable safety problem asking whether `src` can reach `dst`
/// under the generated shortest-path policy.
pub fn problem_from_graph(
    graph: &TopologyGraph,
    src: NodeId,
    dst: NodeId,
) -> Result<SafetyProblem> {
    for endpoint in [src, dst] {
        if !graph.switches.contains(&endpoint) {
            return Err(Error::GraphParse(format!("`{endpoint}` is not a switch in the graph")));
        }
    }
    let sw = FieldId::new("sw");
    let mut domains = DomainMap::new();
    domains.declare(sw, graph.switches.iter().copied());
    domains.declare(FieldId::new("dst"), graph.switches.iter().copied());
    let ports = graph.ports();
    if !ports.is_empty() {
        domains.declare(FieldId::new("pt"), ports.into_iter().map(Value::from));
    }
    Ok(SafetyProblem {
        ingress: Predicate::test(sw, src),
        egress: Predicate::test(sw, dst),
        switch_policy: gen_shortest_path_policy(graph),
        topology: encode_topology(graph, TopologyEncoding::SwitchPort),
        domains: domains.clone(),
        unfold_n: Some(graph.forwarding_link_count()),
    })
}

/// Renders a problem file (the parser's text format) for the graph, so
/// `encode` output pipes straight into `explain`.
pub fn render_problem_file(graph: &TopologyGraph, src: NodeId, dst: NodeId) -> Result<String> {
    let problem = problem_from_graph(graph, src, dst)?;
    let mut out = String::new();
    out.push_str("domains:\n");
    for field in problem.domains.fields() {
        let values: Vec<String> = problem
            .domains
            .values(field)?
            .iter()
            .map(|v| v.text().to_owned())
            .collect();
        out.push_str(&format!("  {field}: {}\n", values.join(", ")));
    }
    out.push_str(&format!("\npolicy: {}\n", problem.switch_policy));
    out.push_str(&format!("topology: {}\n", problem.topology));
    out.push_str(&format!("ingress: {}\n", Policy::Filter(problem.ingress.clone())));
    out.push_str(&format!("egress: {}\n", Policy::Filter(problem.egress.clone())));
    out.push_str(&format!("unfold: {}\n", problem.unfold_n.expect("bound set by construction")));
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parser::parse_policy;
    use crate::terms::structural_eq;
    use crate::unfold::default_unfold_bound;

    fn v(s: &str) -> Value {
        Value::new(s)
    }

    const TWO_NODE: &str = r#"<?xml version="1.0" encoding="utf-8"?>
<graphml><graph edgedefault="undirected">
  <node id="a"/><node id="b"/>
  <edge source="a" target="b"/>
</graph></graphml>"#;

    #[test]
    fn loads_two_node_graph() {
        let g = load_graphml(TWO_NODE).unwrap();
        assert_eq!(g.switches.len(), 2);
        assert_eq!(g.links.len(), 2);
        assert_eq!(g.ports(), vec![1, 2]);
        assert_eq!(g.port_of(v("a"), v("b")), Some(1));
        assert_eq!(g.port_of(v("b"), v("a")), Some(2));
    }

    #[test]
    fn malformed_xml_is_an_error() {
        assert!(matches!(load_graphml("<graphml><graph>"), Err(Error::GraphParse(_))));
        assert!(matches!(
            load_graphml("<graphml><graph><edge source=\"x\" target=\"y\"/></graph></graphml>"),
            Err(Error::GraphParse(_))
        ));
    }

    /// The two-switch, four-host example network; automatic port assignment
    /// reproduces the drawn numbering 1..6.
    const SIMPLE_NET: &str = r#"<?xml version="1.0" encoding="utf-8"?>
<graphml>
  <key id="d0" for="node" attr.name="host" attr.type="boolean"/>
  <graph edgedefault="undirected">
    <node id="A"/>
    <node id="B"/>
    <node id="H1"><data key="d0">true</data></node>
    <node id="H2"><data key="d0">true</data></node>
    <node id="H3"><data key="d0">true</data></node>
    <node id="H4"><data key="d0">true</data></node>
    <edge source="H1" target="A"/>
    <edge source="H3" target="A"/>
    <edge source="A" target="B"/>
    <edge source="B" target="H2"/>
    <edge source="B" target="H4"/>
  </graph>
</graphml>"#;

    #[test]
    fn simple_network_ports_match_the_drawing() {
        let g = load_graphml(SIMPLE_NET).unwrap();
        assert_eq!(g.switches.len(), 2);
        let host_ports: Vec<(Value, u32)> = g.hosts.iter().map(|h| (h.host, h.port)).collect();
        assert_eq!(
            host_ports,
            vec![(v("H1"), 1), (v("H2"), 2), (v("H3"), 3), (v("H4"), 4)]
        );
        assert_eq!(g.port_of(v("A"), v("B")), Some(5));
        assert_eq!(g.port_of(v("B"), v("A")), Some(6));
    }

    #[test]
    fn simple_network_encodes_to_the_port_topology() {
        let g = load_graphml(SIMPLE_NET).unwrap();
        let got = encode_topology(&g, TopologyEncoding::PortOnly);
        let mut d = DomainMap::new();
        d.declare(FieldId::new("pt"), (1..=6).map(Value::from));
        let want = parse_policy(
            "pt = 5 . pt <- 6 + pt = 6 . pt <- 5 + pt = 1 + pt = 2 + pt = 3 + pt = 4",
            &d,
        )
        .unwrap();
        assert!(structural_eq(&got, &want));
        assert_eq!(default_unfold_bound(&got).unwrap(), 6);
        assert_eq!(g.forwarding_link_count(), 6);
    }

    /// The firewall example: two directed switch links with pinned ports.
    const FIREWALL_NET: &str = r#"<?xml version="1.0" encoding="utf-8"?>
<graphml>
  <key id="d0" for="node" attr.name="host" attr.type="boolean"/>
  <key id="d1" for="edge" attr.name="srcport" attr.type="int"/>
  <key id="d2" for="edge" attr.name="dstport" attr.type="int"/>
  <graph edgedefault="directed">
    <node id="A"/>
    <node id="B"/>
    <node id="H1"><data key="d0">true</data></node>
    <node id="H2"><data key="d0">true</data></node>
    <edge source="H1" target="A"><data key="d2">1</data></edge>
    <edge source="A" target="H2"><data key="d1">3</data></edge>
    <edge source="A" target="B"><data key="d1">2</data><data key="d2">4</data></edge>
    <edge source="B" target="A"><data key="d1">5</data><data key="d2">6</data></edge>
  </graph>
</graphml>"#;

    #[test]
    fn firewall_topology_matches_the_switch_encoding() {
        let g = load_graphml(FIREWALL_NET).unwrap();
        let got = encode_topology(&g, TopologyEncoding::SwitchPort);
        let mut d = DomainMap::new();
        d.declare(FieldId::new("sw"), [v("A"), v("B")]);
        d.declare(FieldId::new("pt"), (1..=6).map(Value::from));
        let want = parse_policy(
            "sw = A . (pt = 2 . sw <- B . pt <- 4 + pt = 1 + pt = 3) \
             + sw = B . pt = 5 . sw <- A . pt <- 6",
            &d,
        )
        .unwrap();
        // Same union-free summands, factored differently.
        assert_eq!(
            crate::rewrite::to_union_free_sum(&got),
            crate::rewrite::to_union_free_sum(&want)
        );
        assert_eq!(g.forwarding_link_count(), 4);
    }

    fn path_graph(ids: &[&str]) -> TopologyGraph {
        let edges: String = ids
            .windows(2)
            .map(|w| format!("<edge source=\"{}\" target=\"{}\"/>", w[0], w[1]))
            .collect();
        let nodes: String = ids.iter().map(|id| format!("<node id=\"{id}\"/>")).collect();
        load_graphml(&format!(
            "<graphml><graph edgedefault=\"undirected\">{nodes}{edges}</graph></graphml>"
        ))
        .unwrap()
    }

    #[test]
    fn shortest_path_policy_on_a_path_graph() {
        let g = path_graph(&["A", "B", "C"]);
        let policy = gen_shortest_path_policy(&g);
        let expected = Policy::seq_all([
            Policy::test(FieldId::new("sw"), v("A")),
            Policy::test(FieldId::new("dst"), v("C")),
            Policy::modify(FieldId::new("pt"), Value::from(g.port_of(v("A"), v("B")).unwrap())),
        ]);
        match &policy {
            Policy::Union(ops) => assert!(ops.contains(&expected)),
            other => panic!("expected a union, got {other}"),
        }
    }

    #[test]
    fn shortest_path_policy_on_a_triangle() {
        let g = path_graph(&["A", "B", "C"]);
        // Close the triangle.
        let g = {
            let mut closed = g;
            let next = closed.ports().into_iter().max().unwrap_or(0) + 1;
            closed.links.push(Link { src: v("A"), dst: v("C"), src_port: next, dst_port: next + 1 });
            closed.links.push(Link { src: v("C"), dst: v("A"), src_port: next + 1, dst_port: next });
            closed
        };
        let policy = gen_shortest_path_policy(&g);
        match &policy {
            Policy::Union(ops) => assert_eq!(ops.len(), 6),
            other => panic!("expected 6 summands, got {other}"),
        }
    }

    #[test]
    fn four_cycle_tie_breaks_to_smaller_neighbor() {
        let g = load_graphml(
            r#"<graphml><graph edgedefault="undirected">
            <node id="A"/><node id="B"/><node id="C"/><node id="D"/>
            <edge source="A" target="B"/><edge source="B" target="C"/>
            <edge source="C" target="D"/><edge source="D" target="A"/>
            </graph></graphml>"#,
        )
        .unwrap();
        // A -> C has two shortest routes (via B or D); B wins.
        let policy = gen_shortest_path_policy(&g);
        let via_b = Policy::seq_all([
            Policy::test(FieldId::new("sw"), v("A")),
            Policy::test(FieldId::new("dst"), v("C")),
            Policy::modify(FieldId::new("pt"), Value::from(g.port_of(v("A"), v("B")).unwrap())),
        ]);
        match &policy {
            Policy::Union(ops) => assert!(ops.contains(&via_b)),
            other => panic!("expected a union, got {other}"),
        }
    }

    #[test]
    fn longest_path_endpoint_examples() {
        let g = path_graph(&["A", "B", "C", "D"]);
        assert_eq!(longest_path_endpoints(&g).unwrap(), (v("A"), v("D")));

        let triangle = load_graphml(
            r#"<graphml><graph edgedefault="undirected">
            <node id="A"/><node id="B"/><node id="C"/>
            <edge source="A" target="B"/><edge source="B" target="C"/>
            <edge source="A" target="C"/>
            </graph></graphml>"#,
        )
        .unwrap();
        assert_eq!(longest_path_endpoints(&triangle).unwrap(), (v("A"), v("B")));

        let star = load_graphml(
            r#"<graphml><graph edgedefault="undirected">
            <node id="C0"/><node id="L1"/><node id="L2"/><node id="L3"/>
            <edge source="C0" target="L1"/><edge source="C0" target="L2"/>
            <edge source="C0" target="L3"/>
            </graph></graphml>"#,
        )
        .unwrap();
        assert_eq!(longest_path_endpoints(&star).unwrap(), (v("L1"), v("L2")));

        assert!(matches!(
            longest_path_endpoints(&TopologyGraph::default()),
            Err(Error::EmptyGraph)
        ));
    }

    #[test]
    fn rendered_problem_round_trips() {
        let g = path_graph(&["A", "B", "C"]);
        let text = render_problem_file(&g, v("A"), v("C")).unwrap();
        let problem = crate::parser::parse_problem(&text).unwrap();
        assert_eq!(problem.unfold_n, Some(4));
        assert!(structural_eq(
            &problem.topology,
            &encode_topology(&g, TopologyEncoding::SwitchPort)
        ));
    }

    #[test]
    fn empty_graph_encodes_to_zero() {
        let g = TopologyGraph::default();
        assert_eq!(encode_topology(&g, TopologyEncoding::PortOnly), Policy::zero());
    }
}
