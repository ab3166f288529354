//! Static SVG rendering of a schedule as a strip of frames.
//!
//! Robots are filled green squares, targets red outlines, obstacles dark
//! squares. Robots involved in an illegal step get an orange cross on the
//! frame whose time range contains that step; robots that end away from
//! their targets get one on the last frame.

use std::fmt::Write as _;

use gridmotion::validate::{check_step, StepVerdict};
use gridmotion::{Configuration, Instance, Pixel, Rect, Schedule};

const CELL: i32 = 16;
const GAP: i32 = 24;
const LABEL: i32 = 18;
const MAX_COLUMNS: usize = 4;

#[derive(Debug, thiserror::Error)]
pub enum RenderError {
    #[error("frame interval must be positive")]
    FrameEvery,
    #[error(transparent)]
    Model(#[from] gridmotion::ModelError),
}

/// Positions at every time step, replayed without enforcing the rules.
fn replay(instance: &Instance, schedule: &Schedule) -> Result<Vec<Configuration>, RenderError> {
    let mut configs = vec![instance.start_configuration()];
    for step in &schedule.steps {
        let next = gridmotion::apply_step(configs.last().unwrap(), step)?;
        configs.push(next);
    }
    Ok(configs)
}

/// Renders frames at times `0, every, 2·every, …` and always the final time.
pub fn render_svg(instance: &Instance, schedule: &Schedule, every: usize) -> Result<String, RenderError> {
    if every == 0 {
        return Err(RenderError::FrameEvery);
    }
    let configs = replay(instance, schedule)?;
    let end = configs.len() - 1;
    let mut times: Vec<usize> = (0..=end).step_by(every).collect();
    if *times.last().unwrap() != end {
        times.push(end);
    }

    // Robots flagged per step, keyed by the time the step starts. Once a
    // collision has put two robots on one pixel the rules no longer apply.
    let mut flagged: Vec<(usize, Vec<usize>)> = Vec::new();
    for (t, step) in schedule.steps.iter().enumerate() {
        match check_step(instance, &configs[t], step) {
            Ok(StepVerdict::Legal) => {}
            Ok(StepVerdict::Violation { robots, .. }) => flagged.push((t, robots)),
            Err(_) => break,
        }
    }
    let stranded: Vec<usize> = (0..instance.robot_count())
        .filter(|&r| configs[end].positions[r] != instance.targets()[r])
        .collect();

    let bounds = Rect::enclosing(
        configs
            .iter()
            .flat_map(|c| c.positions.iter().copied())
            .chain(instance.targets().iter().copied()),
    )
    .unwrap_or(Rect::new(0, 0, 0, 0))
    .inflate(1);
    let fw = bounds.width() as i32 * CELL;
    let fh = bounds.height() as i32 * CELL;
    let columns = times.len().min(MAX_COLUMNS);
    let rows = times.len().div_ceil(MAX_COLUMNS);
    let width = columns as i32 * (fw + GAP) + GAP;
    let height = rows as i32 * (fh + GAP + LABEL) + GAP;

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}">"#
    );
    let _ = writeln!(svg, r##"<rect width="{width}" height="{height}" fill="#ffffff"/>"##);
    let _ = writeln!(svg, "<title>{}</title>", escape(instance.name()));

    for (f, &t) in times.iter().enumerate() {
        let ox = GAP + (f % MAX_COLUMNS) as i32 * (fw + GAP);
        let oy = GAP + (f / MAX_COLUMNS) as i32 * (fh + GAP + LABEL);
        // Pixel (x, y) with y pointing up.
        let cell = |p: Pixel| (ox + (p.x - bounds.min_x) * CELL, oy + LABEL + (bounds.max_y - p.y) * CELL);
        let _ = writeln!(svg, r#"<g id="frame-{t}">"#);
        let _ = writeln!(svg, r#"<text x="{ox}" y="{}" font-family="monospace" font-size="12">t = {t}</text>"#, oy + 12);
        let _ = writeln!(
            svg,
            r##"<rect x="{ox}" y="{}" width="{fw}" height="{fh}" fill="#f4f4f4" stroke="#bbbbbb"/>"##,
            oy + LABEL
        );
        for &p in instance.obstacles().iter().filter(|p| bounds.contains(**p)) {
            let (x, y) = cell(p);
            let _ = writeln!(svg, r##"<rect x="{x}" y="{y}" width="{CELL}" height="{CELL}" fill="#333333"/>"##);
        }
        for &p in &configs[t].positions {
            let (x, y) = cell(p);
            let _ = writeln!(
                svg,
                r##"<rect x="{}" y="{}" width="{}" height="{}" fill="#2ca02c"/>"##,
                x + 1,
                y + 1,
                CELL - 2,
                CELL - 2
            );
        }
        for &p in instance.targets() {
            let (x, y) = cell(p);
            let _ = writeln!(
                svg,
                r##"<rect x="{}" y="{}" width="{}" height="{}" fill="none" stroke="#d62728" stroke-width="2"/>"##,
                x + 2,
                y + 2,
                CELL - 4,
                CELL - 4
            );
        }
        let next = times.get(f + 1).copied().unwrap_or(usize::MAX);
        let mut marks: Vec<usize> = flagged
            .iter()
            .filter(|(k, _)| *k >= t && *k < next)
            .flat_map(|(_, r)| r.iter().copied())
            .collect();
        if t == end {
            marks.extend(&stranded);
        }
        marks.sort_unstable();
        marks.dedup();
        for r in marks {
            let (x, y) = cell(configs[t].positions[r]);
            let _ = writeln!(
                svg,
                r##"<path d="M{} {}L{} {}M{} {}L{} {}" stroke="#ff7f0e" stroke-width="2"/>"##,
                x + 2,
                y + 2,
                x + CELL - 2,
                y + CELL - 2,
                x + CELL - 2,
                y + 2,
                x + 2,
                y + CELL - 2
            );
        }
        svg.push_str("</g>\n");
    }
    svg.push_str("</svg>\n");
    Ok(svg)
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
