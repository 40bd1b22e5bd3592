//! Gantt charts of schedules as aligned text or SVG.
//!
//! Both renderers draw the same [`GanttLayout`]: machines as rows, each
//! batch as a family setup segment followed by its operations, and job
//! completion marks on the time axis. Labels use one-based ids.

use std::fmt::Write as _;

use crate::instance::{Instance, Time};
use crate::schedule::{check_feasibility, evaluate, Schedule, Violation};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SegmentKind {
    Setup { family: usize },
    Op { op: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Segment {
    pub batch: usize,
    pub kind: SegmentKind,
    pub start: Time,
    pub end: Time,
}

impl Segment {
    pub fn label(&self) -> String {
        match self.kind {
            SegmentKind::Setup { family } => format!("f{}", family + 1),
            SegmentKind::Op { op } => format!("{}", op + 1),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GanttLayout {
    /// Segments per machine in time order.
    pub rows: Vec<Vec<Segment>>,
    /// `(job, completion)` for every job, by job index.
    pub job_marks: Vec<(usize, Time)>,
    pub horizon: Time,
    pub twct: i64,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("cannot draw an infeasible schedule: {}", list(.0))]
pub struct Infeasible(pub Vec<Violation>);

fn list(v: &[Violation]) -> String {
    v.iter().map(ToString::to_string).collect::<Vec<_>>().join("; ")
}

/// Lays out a feasible schedule.
pub fn layout(inst: &Instance, sched: &Schedule) -> Result<GanttLayout, Infeasible> {
    let violations = check_feasibility(inst, sched);
    if !violations.is_empty() {
        return Err(Infeasible(violations));
    }
    let ev = evaluate(inst, sched).expect("feasible schedules evaluate");
    let rows = sched
        .machines
        .iter()
        .enumerate()
        .map(|(k, batches)| {
            let mut segs = Vec::new();
            for (b, batch) in batches.iter().enumerate() {
                let start = ev.batch_start[k][b];
                let mut t = start + inst.families()[batch.family].setup;
                segs.push(Segment { batch: b, kind: SegmentKind::Setup { family: batch.family }, start, end: t });
                for &i in &batch.ops {
                    let end = t + inst.op(i).processing;
                    segs.push(Segment { batch: b, kind: SegmentKind::Op { op: i }, start: t, end });
                    t = end;
                }
            }
            segs
        })
        .collect();
    Ok(GanttLayout {
        rows,
        job_marks: ev.job_completion.iter().copied().enumerate().collect(),
        horizon: ev.cmax,
        twct: ev.twct,
    })
}

impl GanttLayout {
    /// `(f1: 14), (f2: 6), ...` for one machine.
    pub fn batch_summary(&self, machine: usize) -> String {
        let mut parts: Vec<String> = Vec::new();
        for seg in &self.rows[machine] {
            match seg.kind {
                SegmentKind::Setup { family } => parts.push(format!("(f{}: ", family + 1)),
                SegmentKind::Op { op } => {
                    let last = parts.last_mut().expect("setup comes first");
                    if !last.ends_with(": ") {
                        last.push_str(", ");
                    }
                    write!(last, "{}", op + 1).unwrap();
                }
            }
        }
        parts.iter().map(|p| format!("{p})")).collect::<Vec<_>>().join(", ")
    }

    /// Aligned text: one bar per machine, then every segment with its
    /// start and end, then the job completion times.
    pub fn to_text(&self) -> String {
        const WIDTH: i64 = 72;
        let scale = |t: Time| if self.horizon == 0 { 0 } else { (t * WIDTH + self.horizon / 2) / self.horizon };
        let mut out = String::new();
        writeln!(out, "horizon {}  twct {}", self.horizon, self.twct).unwrap();
        for (k, row) in self.rows.iter().enumerate() {
            let mut bar = vec![b' '; WIDTH as usize];
            for seg in row {
                let (a, b) = (scale(seg.start) as usize, (scale(seg.end) as usize).max(scale(seg.start) as usize + 1));
                let fill = match seg.kind {
                    SegmentKind::Setup { .. } => b'=',
                    SegmentKind::Op { .. } => b'#',
                };
                for c in bar.iter_mut().take(b.min(WIDTH as usize)).skip(a) {
                    *c = fill;
                }
                if let Some(c) = bar.get_mut(a) {
                    *c = b'|';
                }
            }
            writeln!(out, "M{:<3}{}", k + 1, String::from_utf8(bar).expect("ascii")).unwrap();
        }
        writeln!(out).unwrap();
        for (k, row) in self.rows.iter().enumerate() {
            writeln!(out, "machine {}: {}", k + 1, self.batch_summary(k)).unwrap();
            for seg in row {
                let kind = match seg.kind {
                    SegmentKind::Setup { .. } => "setup",
                    SegmentKind::Op { .. } => "op",
                };
                writeln!(out, "  {:<6}{:>5}{:>7}{:>7}", kind, seg.label(), seg.start, seg.end).unwrap();
            }
        }
        writeln!(out).unwrap();
        for &(j, c) in &self.job_marks {
            writeln!(out, "C{} = {}", j + 1, c).unwrap();
        }
        out
    }

    /// A standalone SVG 1.1 document. Every segment rectangle carries its
    /// exact start and end as `data-start` / `data-end`.
    pub fn to_svg(&self) -> String {
        const LEFT: f64 = 60.0;
        const TOP: f64 = 20.0;
        const ROW: f64 = 36.0;
        const BAR: f64 = 26.0;
        const PLOT: f64 = 900.0;
        let unit = if self.horizon > 0 { PLOT / self.horizon as f64 } else { 1.0 };
        let x = |t: Time| LEFT + t as f64 * unit;
        let axis_y = TOP + ROW * self.rows.len() as f64 + 8.0;
        let height = axis_y + 20.0 + 14.0 * self.job_marks.len().min(1) as f64 + 24.0;
        let width = LEFT + PLOT + 40.0;
        const COLORS: [&str; 6] = ["#8dd3c7", "#fdb462", "#bebada", "#fb8072", "#80b1d3", "#b3de69"];

        let mut s = String::new();
        writeln!(s, r#"<?xml version="1.0" encoding="UTF-8"?>"#).unwrap();
        writeln!(
            s,
            r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{width:.0}" height="{height:.0}" viewBox="0 0 {width:.0} {height:.0}" font-family="sans-serif" font-size="11">"#
        )
        .unwrap();
        writeln!(s, r#"<title>Schedule, TWCT {}</title>"#, self.twct).unwrap();
        for (k, row) in self.rows.iter().enumerate() {
            let y = TOP + ROW * k as f64;
            writeln!(s, r#"<text x="{:.1}" y="{:.1}" text-anchor="end">M{}</text>"#, LEFT - 8.0, y + BAR / 2.0 + 4.0, k + 1)
                .unwrap();
            for seg in row {
                let (fill, class) = match seg.kind {
                    SegmentKind::Setup { .. } => ("#555555", "setup"),
                    SegmentKind::Op { op } => (COLORS[op % COLORS.len()], "op"),
                };
                writeln!(
                    s,
                    r##"<rect class="{class}" data-machine="{}" data-label="{}" data-start="{}" data-end="{}" x="{:.2}" y="{:.1}" width="{:.2}" height="{BAR}" fill="{fill}" stroke="#222222" stroke-width="0.5"/>"##,
                    k + 1,
                    seg.label(),
                    seg.start,
                    seg.end,
                    x(seg.start),
                    y,
                    x(seg.end) - x(seg.start),
                )
                .unwrap();
                let color = if class == "setup" { "#ffffff" } else { "#000000" };
                writeln!(
                    s,
                    r#"<text x="{:.2}" y="{:.1}" text-anchor="middle" fill="{color}">{}</text>"#,
                    (x(seg.start) + x(seg.end)) / 2.0,
                    y + BAR / 2.0 + 4.0,
                    seg.label()
                )
                .unwrap();
            }
        }
        writeln!(s, r##"<line x1="{LEFT}" y1="{axis_y:.1}" x2="{:.1}" y2="{axis_y:.1}" stroke="#000000"/>"##, x(self.horizon))
            .unwrap();
        for t in [0, self.horizon] {
            writeln!(s, r#"<text x="{:.2}" y="{:.1}" text-anchor="middle">{t}</text>"#, x(t), axis_y + 14.0).unwrap();
        }
        for &(j, c) in &self.job_marks {
            writeln!(
                s,
                r##"<g class="completion" data-job="{}" data-time="{c}"><line x1="{:.2}" y1="{TOP}" x2="{:.2}" y2="{axis_y:.1}" stroke="#cc0000" stroke-dasharray="3,3"/><text x="{:.2}" y="{:.1}" text-anchor="middle" fill="#cc0000">C{}</text></g>"##,
                j + 1,
                x(c),
                x(c),
                x(c),
                axis_y + 28.0,
                j + 1
            )
            .unwrap();
        }
        s.push_str("</svg>\n");
        s
    }
}
