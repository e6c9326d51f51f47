use std::fmt::Write;

use kprobe_core::SpaceTimeDiagram;

/// Pixels per cell.
pub const CELL_PX: usize = 4;

/// Black-on-white rendering, one square per live cell, time running down.
pub fn render(diagram: &SpaceTimeDiagram) -> String {
    let w = diagram.width() * CELL_PX;
    let h = diagram.rows().len() * CELL_PX;
    let mut out = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" viewBox=\"0 0 {w} {h}\" shape-rendering=\"crispEdges\">\n\
         <rect width=\"{w}\" height=\"{h}\" fill=\"#fff\"/>\n"
    );
    for (t, row) in diagram.rows().iter().enumerate() {
        for (x, &on) in row.cells().iter().enumerate() {
            if on {
                let _ = writeln!(
                    out,
                    "<rect x=\"{}\" y=\"{}\" width=\"{CELL_PX}\" height=\"{CELL_PX}\" fill=\"#000\"/>",
                    x * CELL_PX,
                    t * CELL_PX
                );
            }
        }
    }
    out.push_str("</svg>\n");
    out
}
