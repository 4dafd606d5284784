//! SVG rendering of a house map with a replayed trajectory: object
//! footprints colored by class, the agent's path in blue, the optimal path
//! in green, start/stop markers, and the success ring around goal objects.

use std::fmt::Write as _;

use crate::env::house::{House, ObjectClass, CELL};

const SCALE: f64 = 96.0; // pixels per meter
const MARGIN: f64 = 10.0;
const AGENT_COLOR: &str = "#1f6feb";
const ORACLE_COLOR: &str = "#2da44e";

pub fn class_color(class: ObjectClass) -> &'static str {
    match class {
        ObjectClass::Chair => "#d35400",
        ObjectClass::Cushion => "#8e44ad",
        ObjectClass::Table => "#b8860b",
        ObjectClass::Cabinet => "#5d6d7e",
        ObjectClass::Sink => "#16a085",
    }
}

pub struct RenderInput<'a> {
    pub house: &'a House,
    pub goal: ObjectClass,
    /// Radius of the dashed success ring drawn around goal objects, meters.
    pub success_distance: f64,
    /// Agent poses in order, start included; empty paths draw nothing.
    pub agent_path: &'a [(f64, f64)],
    pub oracle_path: &'a [(f64, f64)],
    pub caption: &'a str,
}

struct Canvas {
    svg: String,
    height_m: f64,
}

impl Canvas {
    fn x(&self, wx: f64) -> f64 {
        MARGIN + wx * SCALE
    }

    // world y grows north, svg y grows down
    fn y(&self, wy: f64) -> f64 {
        MARGIN + (self.height_m - wy) * SCALE
    }

    fn rect(&mut self, wx: f64, wy: f64, w_m: f64, h_m: f64, style: &str) {
        let x = self.x(wx);
        let y = self.y(wy + h_m);
        let _ = writeln!(
            self.svg,
            "<rect x=\"{x:.2}\" y=\"{y:.2}\" width=\"{:.2}\" height=\"{:.2}\" {style}/>",
            w_m * SCALE,
            h_m * SCALE
        );
    }

    fn polyline(&mut self, points: &[(f64, f64)], style: &str) {
        if points.len() < 2 {
            return;
        }
        let mut attr = String::new();
        for &(wx, wy) in points {
            let _ = write!(attr, "{:.2},{:.2} ", self.x(wx), self.y(wy));
        }
        let _ = writeln!(self.svg, "<polyline points=\"{}\" fill=\"none\" {style}/>", attr.trim_end());
    }

    fn circle(&mut self, wx: f64, wy: f64, r_px: f64, style: &str) {
        let _ = writeln!(
            self.svg,
            "<circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"{r_px:.2}\" {style}/>",
            self.x(wx),
            self.y(wy)
        );
    }

    fn line(&mut self, a: (f64, f64), b: (f64, f64), style: &str) {
        let _ = writeln!(
            self.svg,
            "<line x1=\"{:.2}\" y1=\"{:.2}\" x2=\"{:.2}\" y2=\"{:.2}\" {style}/>",
            self.x(a.0),
            self.y(a.1),
            self.x(b.0),
            self.y(b.1)
        );
    }
}

/// Pure function of its input: identical inputs give byte-identical SVG.
pub fn render_svg(input: &RenderInput) -> String {
    let house = input.house;
    let width_m = house.width() as f64 * CELL;
    let height_m = house.height() as f64 * CELL;
    let canvas_w = width_m * SCALE + 2.0 * MARGIN;
    let canvas_h = height_m * SCALE + 2.0 * MARGIN + if input.caption.is_empty() { 0.0 } else { 18.0 };

    let mut c = Canvas { svg: String::new(), height_m };
    let _ = writeln!(
        c.svg,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{canvas_w:.0}\" height=\"{canvas_h:.0}\" viewBox=\"0 0 {canvas_w:.0} {canvas_h:.0}\">"
    );
    let _ = writeln!(c.svg, "<rect width=\"100%\" height=\"100%\" fill=\"#ffffff\"/>");

    // floor, then walls on top
    c.rect(0.0, 0.0, width_m, height_m, "fill=\"#f6f3ec\"");
    for iy in 0..house.height() {
        for ix in 0..house.width() {
            if house.is_blocked(ix as i64, iy as i64) {
                c.rect(ix as f64 * CELL, iy as f64 * CELL, CELL, CELL, "fill=\"#3d3d3d\"");
            }
        }
    }
    for door in house.doors() {
        let [ix, iy] = door.cell;
        c.rect(ix as f64 * CELL, iy as f64 * CELL, CELL, CELL, "fill=\"#e4cf9a\"");
    }

    // success ring first so object fills sit on top of it
    let ring = input.success_distance;
    for obj in house.objects_of(input.goal) {
        for &[ix, iy] in &obj.footprint {
            let style = format!(
                "fill=\"none\" stroke=\"{}\" stroke-width=\"1.5\" stroke-dasharray=\"4 3\" rx=\"{:.2}\"",
                class_color(input.goal),
                ring * SCALE
            );
            c.rect(ix as f64 * CELL - ring, iy as f64 * CELL - ring, CELL + 2.0 * ring, CELL + 2.0 * ring, &style);
        }
    }
    for obj in house.objects() {
        let style = format!("fill=\"{}\" fill-opacity=\"0.9\"", class_color(obj.class));
        for &[ix, iy] in &obj.footprint {
            c.rect(ix as f64 * CELL, iy as f64 * CELL, CELL, CELL, &style);
        }
    }

    c.polyline(
        input.oracle_path,
        &format!("stroke=\"{ORACLE_COLOR}\" stroke-width=\"2.5\" stroke-opacity=\"0.9\""),
    );
    c.polyline(input.agent_path, &format!("stroke=\"{AGENT_COLOR}\" stroke-width=\"2\""));

    if let Some(&(sx, sy)) = input.agent_path.first() {
        c.circle(sx, sy, 4.5, &format!("fill=\"{AGENT_COLOR}\""));
    }
    if input.agent_path.len() > 1 {
        let &(ex, ey) = input.agent_path.last().expect("nonempty");
        let d = 0.05;
        let style = format!("stroke=\"{AGENT_COLOR}\" stroke-width=\"2.5\"");
        c.line((ex - d, ey - d), (ex + d, ey + d), &style);
        c.line((ex - d, ey + d), (ex + d, ey - d), &style);
    }

    if !input.caption.is_empty() {
        let _ = writeln!(
            c.svg,
            "<text x=\"{MARGIN}\" y=\"{:.2}\" font-family=\"monospace\" font-size=\"12\">{}</text>",
            height_m * SCALE + 2.0 * MARGIN + 12.0,
            escape_text(input.caption)
        );
    }

    c.svg.push_str("</svg>\n");
    c.svg
}

fn escape_text(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::house::{generate_house, HouseParams};

    fn house() -> House {
        generate_house(7, &HouseParams::default()).unwrap()
    }

    fn input<'a>(h: &'a House, agent: &'a [(f64, f64)], oracle: &'a [(f64, f64)]) -> RenderInput<'a> {
        RenderInput {
            house: h,
            goal: ObjectClass::Sink,
            success_distance: 0.1,
            agent_path: agent,
            oracle_path: oracle,
            caption: "ep <1> & done",
        }
    }

    #[test]
    fn svg_contains_the_expected_layers() {
        let h = house();
        let agent = [(0.5, 0.5), (0.75, 0.5), (0.75, 0.75)];
        let oracle = [(0.5, 0.5), (0.75, 0.75)];
        let svg = render_svg(&input(&h, &agent, &oracle));
        assert!(svg.starts_with("<svg"));
        assert!(svg.trim_end().ends_with("</svg>"));
        assert!(svg.contains(AGENT_COLOR), "agent path drawn in blue");
        assert!(svg.contains(ORACLE_COLOR), "oracle path drawn in green");
        assert!(svg.contains("stroke-dasharray"), "success ring present");
        assert!(svg.contains("ep &lt;1&gt; &amp; done"), "caption escaped");
        for class in ObjectClass::ALL {
            if h.objects_of(class).next().is_some() {
                assert!(svg.contains(class_color(class)), "{} footprint colored", class.name());
            }
        }
    }

    #[test]
    fn rendering_is_deterministic() {
        let h = house();
        let agent = [(0.5, 0.5), (0.75, 0.5)];
        let a = render_svg(&input(&h, &agent, &[]));
        let b = render_svg(&input(&h, &agent, &[]));
        assert_eq!(a, b);
    }

    #[test]
    fn zero_step_path_renders_start_marker_only() {
        let h = house();
        let agent = [(0.5, 0.5)];
        let svg = render_svg(&input(&h, &agent, &[]));
        assert!(svg.contains("<circle"), "start marker present");
        assert!(!svg.contains("<line"), "no stop marker for a 0-step path");
        assert!(!svg.contains("<polyline"), "no path polyline for a single pose");
    }
}
