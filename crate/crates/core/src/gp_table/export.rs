use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::{EdgeKind, GpTable, TableError, TableNode};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TableFormat {
    Grid,
    Svg,
    Json,
}

impl std::str::FromStr for TableFormat {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "grid" => Ok(TableFormat::Grid),
            "svg" => Ok(TableFormat::Svg),
            "json" => Ok(TableFormat::Json),
            other => Err(format!("unknown table format '{other}' (grid, svg, json)")),
        }
    }
}

#[derive(Serialize, Deserialize)]
struct TableDoc {
    num_placement_classes: usize,
    num_grasp_classes: usize,
    nodes: Vec<TableNode>,
    edges: Vec<EdgeDoc>,
}

#[derive(Serialize, Deserialize, PartialEq)]
struct EdgeDoc {
    a: TableNode,
    b: TableNode,
    kind: EdgeKind,
}

fn axis_range(max: usize, has_zero: bool) -> Vec<usize> {
    (if has_zero { 0 } else { 1 }..=max).collect()
}

fn grid(table: &GpTable) -> String {
    let cols = axis_range(table.num_placement_classes(), table.nodes().iter().any(|n| n.p == 0));
    let rows = axis_range(table.num_grasp_classes(), table.nodes().iter().any(|n| n.g == 0));
    let mut s = String::new();
    let _ = writeln!(s, "rows: grasp class, columns: placement class, {} nodes", table.len());
    let _ = write!(s, "{:>4} |", "g\\p");
    for p in &cols {
        let _ = write!(s, "{p:>3}");
    }
    s.push('\n');
    let _ = writeln!(s, "{}", "-".repeat(6 + 3 * cols.len()));
    for g in rows.iter().rev() {
        let _ = write!(s, "{g:>4} |");
        for p in &cols {
            let mark = if table.contains(&TableNode::new(*p, *g)) {
                "o"
            } else {
                "."
            };
            let _ = write!(s, "{mark:>3}");
        }
        s.push('\n');
    }
    s
}

fn svg(table: &GpTable) -> String {
    const CELL: usize = 24;
    const MARGIN: usize = 40;
    let cols = axis_range(table.num_placement_classes(), table.nodes().iter().any(|n| n.p == 0));
    let rows = axis_range(table.num_grasp_classes(), table.nodes().iter().any(|n| n.g == 0));
    let w = 2 * MARGIN + CELL * cols.len();
    let h = 2 * MARGIN + CELL * rows.len();
    let cx = |p: usize| MARGIN + CELL / 2 + CELL * cols.iter().position(|c| *c == p).unwrap_or(0);
    let cy = |g: usize| MARGIN + CELL / 2 + CELL * (rows.len() - 1 - rows.iter().position(|r| *r == g).unwrap_or(0));
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}" font-family="sans-serif" font-size="10">"#
    );
    let _ = writeln!(s, r#"<rect width="{w}" height="{h}" fill="white"/>"#);
    for (a, b, kind) in table.edges() {
        let color = match kind {
            EdgeKind::Transit => "#4a7fb5",
            EdgeKind::Transfer => "#c2573a",
        };
        let _ = writeln!(
            s,
            r#"<line x1="{}" y1="{}" x2="{}" y2="{}" stroke="{color}" stroke-width="1.5"/>"#,
            cx(a.p),
            cy(a.g),
            cx(b.p),
            cy(b.g)
        );
    }
    for n in table.nodes() {
        let _ = writeln!(s, r#"<circle cx="{}" cy="{}" r="5" fill="black"/>"#, cx(n.p), cy(n.g));
    }
    for p in &cols {
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" text-anchor="middle">{p}</text>"#,
            cx(*p),
            h - MARGIN / 2
        );
    }
    for g in &rows {
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" text-anchor="end">{g}</text>"#,
            MARGIN / 2,
            cy(*g) + 4
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" text-anchor="middle">placement class</text>"#,
        w / 2,
        h - 4
    );
    let _ = writeln!(
        s,
        r#"<text x="10" y="{}" text-anchor="middle" transform="rotate(-90 10 {})">grasp class</text>"#,
        h / 2,
        h / 2
    );
    s.push_str("</svg>\n");
    s
}

pub fn export_table(table: &GpTable, format: TableFormat) -> String {
    match format {
        TableFormat::Grid => grid(table),
        TableFormat::Svg => svg(table),
        TableFormat::Json => {
            let doc = TableDoc {
                num_placement_classes: table.num_placement_classes(),
                num_grasp_classes: table.num_grasp_classes(),
                nodes: table.nodes().iter().copied().collect(),
                edges: table
                    .edges()
                    .into_iter()
                    .map(|(a, b, kind)| EdgeDoc { a, b, kind })
                    .collect(),
            };
            serde_json::to_string_pretty(&doc).expect("table serializes") + "\n"
        }
    }
}

/// Reads a json table document. The stored edges must agree with the
/// row/column rule.
pub fn import_table(json: &str) -> Result<GpTable, TableError> {
    let doc: TableDoc = serde_json::from_str(json).map_err(|e| TableError::Malformed(e.to_string()))?;
    let table = GpTable::new(
        doc.nodes.iter().copied(),
        doc.num_placement_classes,
        doc.num_grasp_classes,
    );
    if table.len() != doc.nodes.len() {
        return Err(TableError::Malformed("duplicate or (0,0) nodes".into()));
    }
    let derived: Vec<EdgeDoc> = table
        .edges()
        .into_iter()
        .map(|(a, b, kind)| EdgeDoc { a, b, kind })
        .collect();
    if derived != doc.edges {
        return Err(TableError::Malformed("edges disagree with the row/column rule".into()));
    }
    Ok(table)
}
