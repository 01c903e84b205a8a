use std::fmt::Write as _;
use std::io::{self, Write};

use crate::rollout::Trajectory;

/// One JSON object per line.
pub fn write_jsonl<W: Write>(mut out: W, trajectories: &[Trajectory]) -> io::Result<()> {
    for t in trajectories {
        serde_json::to_writer(&mut out, t)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

pub fn read_jsonl(text: &str) -> serde_json::Result<Vec<Trajectory>> {
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(serde_json::from_str)
        .collect()
}

/// Plotting table: `k, x0.., u0.., v0.., p0.., branch`, one row per time
/// step. The final row (k = K) leaves the action and branch cells empty.
pub fn trajectory_csv(t: &Trajectory) -> String {
    let n = t.states.first().map_or(0, Vec::len);
    let m1 = t.u_actions.first().map_or(0, Vec::len);
    let m2 = t.v_actions.first().map_or(0, Vec::len);
    let ni = t.beliefs.first().map_or(0, Vec::len);
    let mut header = vec!["k".to_string()];
    header.extend((0..n).map(|j| format!("x{j}")));
    header.extend((0..m1).map(|j| format!("u{j}")));
    header.extend((0..m2).map(|j| format!("v{j}")));
    header.extend((0..ni).map(|j| format!("p{j}")));
    header.push("branch".into());
    let mut s = header.join(",");
    s.push('\n');
    for (k, x) in t.states.iter().enumerate() {
        let mut cells = vec![k.to_string()];
        cells.extend(x.iter().map(|v| v.to_string()));
        let blank = |len: usize| std::iter::repeat_n(String::new(), len);
        match t.u_actions.get(k) {
            Some(u) => cells.extend(u.iter().map(|v| v.to_string())),
            None => cells.extend(blank(m1)),
        }
        match t.v_actions.get(k) {
            Some(v) => cells.extend(v.iter().map(|v| v.to_string())),
            None => cells.extend(blank(m2)),
        }
        match t.beliefs.get(k) {
            Some(p) => cells.extend(p.iter().map(|v| v.to_string())),
            None => cells.extend(blank(ni)),
        }
        cells.push(
            t.branch_choices
                .get(k)
                .map_or(String::new(), |a| a.to_string()),
        );
        let _ = writeln!(s, "{}", cells.join(","));
    }
    s
}
