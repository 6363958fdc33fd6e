//! Top-down SVG and ASCII drawings of an arrangement. Display only.

use std::fmt::Write as _;

use crate::error::Result;
use crate::scene::{Arrangement, SceneDescription};

const SVG_WIDTH: f64 = 800.0;
const MARGIN: f64 = 20.0;

struct Frame {
    x0: f64,
    y0: f64,
    w: f64,
    h: f64,
}

fn frame(scene: &SceneDescription) -> Frame {
    let (mut x0, mut y0) = (f64::INFINITY, f64::INFINITY);
    let (mut x1, mut y1) = (f64::NEG_INFINITY, f64::NEG_INFINITY);
    for r in scene.receptacles() {
        let s = &r.surface;
        x0 = x0.min(s.x);
        y0 = y0.min(s.y);
        x1 = x1.max(s.x + s.w);
        y1 = y1.max(s.y + s.d);
    }
    Frame {
        x0,
        y0,
        w: x1 - x0,
        h: y1 - y0,
    }
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

/// Receptacles as grey rectangles, objects as labelled boxes. The y axis
/// points down the page.
pub fn svg(scene: &SceneDescription, x: &Arrangement) -> Result<String> {
    scene.check_scene_ref(&x.scene_ref)?;
    let f = frame(scene);
    let scale = (SVG_WIDTH - 2.0 * MARGIN) / f.w;
    let height = f.h * scale + 2.0 * MARGIN;
    let px = |v: f64| MARGIN + (v - f.x0) * scale;
    let py = |v: f64| MARGIN + (v - f.y0) * scale;

    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{SVG_WIDTH:.0}" height="{height:.0}" viewBox="0 0 {SVG_WIDTH:.0} {height:.0}" font-family="sans-serif">"#
    );
    for r in scene.receptacles() {
        let s = &r.surface;
        let _ = writeln!(
            out,
            r##"  <rect x="{:.1}" y="{:.1}" width="{:.1}" height="{:.1}" fill="#eeeeee" stroke="#555555" fill-opacity="0.6"/>"##,
            px(s.x),
            py(s.y),
            s.w * scale,
            s.d * scale
        );
        let _ = writeln!(
            out,
            r##"  <text x="{:.1}" y="{:.1}" font-size="11" fill="#333333">{} (z={:.2})</text>"##,
            px(s.x) + 3.0,
            py(s.y) + 12.0,
            escape(&r.name),
            s.z
        );
    }
    for p in &x.placements {
        let o = scene.object(&p.object_id)?;
        let (w, d) = (o.footprint.width, o.footprint.depth);
        let _ = writeln!(
            out,
            r##"  <rect x="{:.1}" y="{:.1}" width="{:.1}" height="{:.1}" fill="#7fb3d5" stroke="#1f4e79"/>"##,
            px(p.position[0] - w / 2.0),
            py(p.position[1] - d / 2.0),
            w * scale,
            d * scale
        );
        let _ = writeln!(
            out,
            r##"  <text x="{:.1}" y="{:.1}" font-size="10" text-anchor="middle" fill="#000000">{}</text>"##,
            px(p.position[0]),
            py(p.position[1]) + 3.0,
            escape(&o.name)
        );
    }
    out.push_str("</svg>\n");
    Ok(out)
}

/// Character-grid plan view with a legend mapping letters to objects.
pub fn ascii(scene: &SceneDescription, x: &Arrangement, columns: usize) -> Result<String> {
    scene.check_scene_ref(&x.scene_ref)?;
    let cols = columns.max(16);
    let f = frame(scene);
    // Terminal cells are about twice as tall as wide.
    let rows = ((f.h / f.w) * cols as f64 / 2.0).ceil().max(4.0) as usize;
    let cx = |v: f64| (((v - f.x0) / f.w) * (cols - 1) as f64).round() as usize;
    let cy = |v: f64| (((v - f.y0) / f.h) * (rows - 1) as f64).round() as usize;
    let mut grid = vec![vec![' '; cols]; rows];

    for r in scene.receptacles() {
        let s = &r.surface;
        let (c0, c1) = (cx(s.x), cx(s.x + s.w));
        let (r0, r1) = (cy(s.y), cy(s.y + s.d));
        for row in [r0, r1] {
            for (c, cell) in grid[row].iter_mut().enumerate().take(c1 + 1).skip(c0) {
                *cell = if c == c0 || c == c1 { '+' } else { '-' };
            }
        }
        for row in grid.iter_mut().take(r1).skip(r0 + 1) {
            row[c0] = '|';
            row[c1] = '|';
        }
    }
    let mut legend = String::new();
    for (k, p) in x.placements.iter().enumerate() {
        let mark = mark(k);
        grid[cy(p.position[1])][cx(p.position[0])] = mark;
        let name = &scene.object(&p.object_id)?.name;
        let receptacle = &scene.receptacle(&p.receptacle_id)?.name;
        let _ = writeln!(legend, "  {mark}  {name} -> {receptacle}");
    }
    let mut out = String::new();
    for row in grid {
        out.push_str(row.iter().collect::<String>().trim_end());
        out.push('\n');
    }
    out.push_str(&legend);
    Ok(out)
}

fn mark(k: usize) -> char {
    const MARKS: &[u8] = b"ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789";
    MARKS[k % MARKS.len()] as char
}
